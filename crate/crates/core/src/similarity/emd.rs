//! Exact Earth Mover's Distance via the transportation simplex with a
//! Vogel-approximation initial basis and a reduced-cost optimality
//! certificate.

use serde::{Deserialize, Serialize};

use super::{compensated_sum, Signature};
use crate::error::{Error, Result};

/// Reduced costs below this enter the basis; well under the 1e-9
/// certificate tolerance.
const PIVOT_EPS: f64 = 1e-11;
/// Pivots moving less flow than this count as degenerate.
const DEGENERATE_EPS: f64 = 1e-15;

/// An optimal transportation plan together with its dual certificate.
///
/// Feasibility: row sums of `flows` match the source weights and column sums
/// match the sink weights. Optimality: `cost[i][j] - row_duals[i] -
/// col_duals[j] >= 0` for every cell (up to tolerance).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowSolution {
    pub flows: Vec<Vec<f64>>,
    pub total_cost: f64,
    pub row_duals: Vec<f64>,
    pub col_duals: Vec<f64>,
}

impl FlowSolution {
    pub fn row_marginals(&self) -> Vec<f64> {
        self.flows.iter().map(|row| compensated_sum(row)).collect()
    }

    pub fn col_marginals(&self) -> Vec<f64> {
        let n = self.flows[0].len();
        (0..n)
            .map(|j| {
                let col: Vec<f64> = self.flows.iter().map(|row| row[j]).collect();
                compensated_sum(&col)
            })
            .collect()
    }

    pub fn total_flow(&self) -> f64 {
        compensated_sum(&self.row_marginals())
    }

    /// Verifies feasibility, complementary slackness, and the reduced-cost
    /// optimality certificate against a cost matrix and marginals.
    pub fn certify(
        &self,
        costs: &[Vec<f64>],
        supplies: &[f64],
        demands: &[f64],
        tolerance: f64,
    ) -> Result<()> {
        let m = self.flows.len();
        let n = self.flows[0].len();
        for (i, row) in self.flows.iter().enumerate() {
            for (j, &f) in row.iter().enumerate() {
                if f < -tolerance {
                    return Err(Error::invalid(format!("negative flow at ({i}, {j}): {f}")));
                }
            }
        }
        for (i, (got, want)) in self.row_marginals().iter().zip(supplies).enumerate() {
            if (got - want).abs() > tolerance {
                return Err(Error::invalid(format!(
                    "row {i} marginal {got} does not match supply {want}"
                )));
            }
        }
        for (j, (got, want)) in self.col_marginals().iter().zip(demands).enumerate() {
            if (got - want).abs() > tolerance {
                return Err(Error::invalid(format!(
                    "column {j} marginal {got} does not match demand {want}"
                )));
            }
        }
        for (i, cost_row) in costs.iter().enumerate().take(m) {
            for (j, &cost) in cost_row.iter().enumerate().take(n) {
                let reduced = cost - self.row_duals[i] - self.col_duals[j];
                if reduced < -tolerance {
                    return Err(Error::invalid(format!(
                        "reduced cost {reduced} at ({i}, {j}) violates optimality"
                    )));
                }
                if self.flows[i][j] > tolerance && reduced.abs() > tolerance {
                    return Err(Error::invalid(format!(
                        "complementary slackness violated at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Pairwise Euclidean ground distances between two signatures' points.
pub fn ground_distances(p: &Signature, q: &Signature) -> Result<Vec<Vec<f64>>> {
    if p.dimension() != q.dimension() {
        return Err(Error::invalid(format!(
            "signature dimensions differ: {} vs {}",
            p.dimension(),
            q.dimension()
        )));
    }
    Ok(p.points()
        .iter()
        .map(|a| {
            q.points()
                .iter()
                .map(|b| {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| (x - y) * (x - y))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect()
        })
        .collect())
}

/// Earth Mover's Distance between two signatures under Euclidean ground
/// distance: the optimal transportation cost divided by the total flow.
pub fn emd(p: &Signature, q: &Signature) -> Result<(f64, FlowSolution)> {
    let costs = ground_distances(p, q)?;
    let solution = solve_transportation(p.weights(), q.weights(), &costs)?;
    let distance = solution.total_cost / solution.total_flow();
    Ok((distance, solution))
}

/// Transportation simplex over dense supplies/demands/costs.
pub(crate) fn solve_transportation(
    supplies: &[f64],
    demands: &[f64],
    costs: &[Vec<f64>],
) -> Result<FlowSolution> {
    let m = supplies.len();
    let n = demands.len();
    let mut state = SimplexState::initialize(supplies, demands, costs);

    let max_pivots = 200 * (m + n) + 1000;
    let bland_trigger = 10 * (m + n);
    let mut consecutive_degenerate = 0usize;

    for _pivot in 0..max_pivots {
        let (row_duals, col_duals) = state.compute_duals(costs);
        let entering = if consecutive_degenerate > bland_trigger {
            state.entering_bland(costs, &row_duals, &col_duals)
        } else {
            state.entering_dantzig(costs, &row_duals, &col_duals)
        };
        let Some((er, ec)) = entering else {
            let total_cost = state.objective(costs);
            return Ok(FlowSolution {
                flows: state.flows_matrix(),
                total_cost,
                row_duals,
                col_duals,
            });
        };

        let moved = state.pivot(er, ec);
        if moved <= DEGENERATE_EPS {
            consecutive_degenerate += 1;
        } else {
            consecutive_degenerate = 0;
        }
    }

    Err(Error::SolverStalled {
        iterations: max_pivots,
    })
}

struct SimplexState {
    m: usize,
    n: usize,
    /// Flow per cell, row-major; meaningful only for basic cells.
    flow: Vec<f64>,
    in_basis: Vec<bool>,
}

impl SimplexState {
    fn cell(&self, r: usize, c: usize) -> usize {
        r * self.n + c
    }

    /// Vogel-approximation start: repeatedly allocate the cheapest cell of
    /// the line with the largest regret, then complete the basis to a
    /// spanning tree with zero-flow cells.
    fn initialize(supplies: &[f64], demands: &[f64], costs: &[Vec<f64>]) -> Self {
        let m = supplies.len();
        let n = demands.len();
        let mut state = SimplexState {
            m,
            n,
            flow: vec![0.0; m * n],
            in_basis: vec![false; m * n],
        };

        let mut supply_left = supplies.to_vec();
        let mut demand_left = demands.to_vec();
        let mut row_alive = vec![true; m];
        let mut col_alive = vec![true; n];
        let mut rows_left = m;
        let mut cols_left = n;

        while rows_left > 0 && cols_left > 0 {
            let (r, c) = vogel_pick(costs, &row_alive, &col_alive);
            let delta = supply_left[r].min(demand_left[c]);
            let idx = state.cell(r, c);
            state.flow[idx] += delta;
            state.in_basis[idx] = true;
            supply_left[r] -= delta;
            demand_left[c] -= delta;
            if supply_left[r] == 0.0 && rows_left > 1 {
                row_alive[r] = false;
                rows_left -= 1;
            } else if demand_left[c] == 0.0 && cols_left > 1 {
                col_alive[c] = false;
                cols_left -= 1;
            } else if supply_left[r] == 0.0 && demand_left[c] == 0.0 {
                // final cell
                row_alive[r] = false;
                col_alive[c] = false;
                rows_left -= 1;
                cols_left -= 1;
            } else if supply_left[r] == 0.0 || demand_left[c] == 0.0 {
                // float residue on the very last line; drain it here
                if supply_left[r] == 0.0 {
                    row_alive[r] = false;
                    rows_left -= 1;
                } else {
                    col_alive[c] = false;
                    cols_left -= 1;
                }
            }
        }

        state.complete_spanning_tree();
        state
    }

    /// Adds zero-flow basic cells until the basis connects all m + n nodes.
    fn complete_spanning_tree(&mut self) {
        let (m, n) = (self.m, self.n);
        let mut dsu = DisjointSets::new(m + n);
        let mut basic = 0usize;
        for r in 0..m {
            for c in 0..n {
                if self.in_basis[self.cell(r, c)] {
                    dsu.union(r, m + c);
                    basic += 1;
                }
            }
        }
        if basic >= m + n - 1 {
            return;
        }
        'outer: for r in 0..m {
            for c in 0..n {
                let idx = self.cell(r, c);
                if !self.in_basis[idx] && dsu.union(r, m + c) {
                    self.in_basis[idx] = true;
                    basic += 1;
                    if basic == m + n - 1 {
                        break 'outer;
                    }
                }
            }
        }
    }

    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let (m, n) = (self.m, self.n);
        let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); m + n];
        for r in 0..m {
            for c in 0..n {
                let idx = self.cell(r, c);
                if self.in_basis[idx] {
                    adj[r].push((m + c, idx));
                    adj[m + c].push((r, idx));
                }
            }
        }
        adj
    }

    /// Solves `u_r + v_c = cost[r][c]` over the basis tree, rooted at row 0.
    fn compute_duals(&self, costs: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
        let (m, n) = (self.m, self.n);
        let adj = self.adjacency();
        let mut potential = vec![f64::NAN; m + n];
        potential[0] = 0.0;
        let mut queue = std::collections::VecDeque::from([0usize]);
        while let Some(node) = queue.pop_front() {
            for &(next, idx) in &adj[node] {
                if potential[next].is_nan() {
                    let (r, c) = (idx / n, idx % n);
                    potential[next] = costs[r][c] - potential[node];
                    queue.push_back(next);
                }
            }
        }
        let row_duals = potential[..m].to_vec();
        let col_duals = potential[m..].to_vec();
        (row_duals, col_duals)
    }

    fn entering_dantzig(
        &self,
        costs: &[Vec<f64>],
        row_duals: &[f64],
        col_duals: &[f64],
    ) -> Option<(usize, usize)> {
        let mut best: Option<((usize, usize), f64)> = None;
        for r in 0..self.m {
            for c in 0..self.n {
                if self.in_basis[self.cell(r, c)] {
                    continue;
                }
                let reduced = costs[r][c] - row_duals[r] - col_duals[c];
                if reduced < -PIVOT_EPS && best.is_none_or(|(_, b)| reduced < b) {
                    best = Some(((r, c), reduced));
                }
            }
        }
        best.map(|(cell, _)| cell)
    }

    fn entering_bland(
        &self,
        costs: &[Vec<f64>],
        row_duals: &[f64],
        col_duals: &[f64],
    ) -> Option<(usize, usize)> {
        for r in 0..self.m {
            for c in 0..self.n {
                if self.in_basis[self.cell(r, c)] {
                    continue;
                }
                if costs[r][c] - row_duals[r] - col_duals[c] < -PIVOT_EPS {
                    return Some((r, c));
                }
            }
        }
        None
    }

    /// Brings `(er, ec)` into the basis, shifting flow around the unique
    /// tree cycle; returns the amount of flow moved.
    fn pivot(&mut self, er: usize, ec: usize) -> f64 {
        let (m, n) = (self.m, self.n);
        let adj = self.adjacency();

        // path from row node `er` to column node `m + ec` through the tree
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; m + n];
        let mut visited = vec![false; m + n];
        visited[er] = true;
        let mut queue = std::collections::VecDeque::from([er]);
        while let Some(node) = queue.pop_front() {
            if node == m + ec {
                break;
            }
            for &(next, idx) in &adj[node] {
                if !visited[next] {
                    visited[next] = true;
                    parent[next] = Some((node, idx));
                    queue.push_back(next);
                }
            }
        }

        let mut path = Vec::new();
        let mut node = m + ec;
        while node != er {
            let (prev, idx) = parent[node].expect("basis tree is connected");
            path.push(idx);
            node = prev;
        }
        path.reverse(); // now ordered from the entering cell's row outward

        // signs alternate around the cycle; path[0] shares the entering row
        let minus: Vec<usize> = path.iter().copied().step_by(2).collect();
        let plus: Vec<usize> = path.iter().copied().skip(1).step_by(2).collect();

        let (leaving, theta) = minus
            .iter()
            .map(|&idx| (idx, self.flow[idx]))
            .min_by(|(ia, fa), (ib, fb)| fa.total_cmp(fb).then_with(|| ia.cmp(ib)))
            .expect("cycle has at least one donor cell");

        let entering_idx = self.cell(er, ec);
        self.flow[entering_idx] = theta;
        self.in_basis[entering_idx] = true;
        for &idx in &plus {
            self.flow[idx] += theta;
        }
        for &idx in &minus {
            self.flow[idx] = (self.flow[idx] - theta).max(0.0);
        }
        self.flow[leaving] = 0.0;
        self.in_basis[leaving] = false;
        theta
    }

    fn objective(&self, costs: &[Vec<f64>]) -> f64 {
        let terms: Vec<f64> = (0..self.m)
            .flat_map(|r| {
                (0..self.n).filter_map(move |c| {
                    let f = self.flow[r * self.n + c];
                    (f > 0.0).then(|| f * costs[r][c])
                })
            })
            .collect();
        compensated_sum(&terms)
    }

    fn flows_matrix(&self) -> Vec<Vec<f64>> {
        (0..self.m)
            .map(|r| self.flow[r * self.n..(r + 1) * self.n].to_vec())
            .collect()
    }
}

/// Largest-regret line selection for the Vogel start. Lines with a single
/// live cell are forced and picked first.
fn vogel_pick(costs: &[Vec<f64>], row_alive: &[bool], col_alive: &[bool]) -> (usize, usize) {
    let m = row_alive.len();
    let n = col_alive.len();

    let mut best: Option<(f64, usize)> = None; // (penalty, line id); rows 0..m, cols m..m+n
    for (r, alive) in row_alive.iter().enumerate() {
        if !alive {
            continue;
        }
        let penalty = line_penalty((0..n).filter(|&c| col_alive[c]).map(|c| costs[r][c]));
        if best.is_none_or(|(p, _)| penalty > p) {
            best = Some((penalty, r));
        }
    }
    for (c, alive) in col_alive.iter().enumerate() {
        if !alive {
            continue;
        }
        let penalty = line_penalty((0..m).filter(|&r| row_alive[r]).map(|r| costs[r][c]));
        if best.is_none_or(|(p, _)| penalty > p) {
            best = Some((penalty, m + c));
        }
    }

    let (_, line) = best.expect("at least one live line");
    if line < m {
        let r = line;
        let c = (0..n)
            .filter(|&c| col_alive[c])
            .min_by(|&a, &b| costs[r][a].total_cmp(&costs[r][b]).then(a.cmp(&b)))
            .expect("live column");
        (r, c)
    } else {
        let c = line - m;
        let r = (0..m)
            .filter(|&r| row_alive[r])
            .min_by(|&a, &b| costs[a][c].total_cmp(&costs[b][c]).then(a.cmp(&b)))
            .expect("live row");
        (r, c)
    }
}

/// Regret of a line: gap between its two cheapest cells; forced lines
/// (single cell) rank above everything.
fn line_penalty(costs: impl Iterator<Item = f64>) -> f64 {
    let mut min1 = f64::INFINITY;
    let mut min2 = f64::INFINITY;
    let mut count = 0usize;
    for c in costs {
        count += 1;
        if c < min1 {
            min2 = min1;
            min1 = c;
        } else if c < min2 {
            min2 = c;
        }
    }
    match count {
        0 => f64::NEG_INFINITY,
        1 => f64::INFINITY,
        _ => min2 - min1,
    }
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(size: usize) -> Self {
        Self {
            parent: (0..size).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        if self.parent[x] != x {
            let root = self.find(self.parent[x]);
            self.parent[x] = root;
        }
        self.parent[x]
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}
