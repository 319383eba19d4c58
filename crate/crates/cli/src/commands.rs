//! One function per subcommand. Each returns `Ok(clean)` where `clean` is
//! false when row-level input errors were reported.

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::Context as _;

use archive_lens_core::analytics::{split_dataset, PhotoRecord, SplitFractions};
use archive_lens_core::export;
use archive_lens_core::framing::framing_distribution;
use archive_lens_core::fusion::{fuse_images, Detection};
use archive_lens_core::ingest::{
    parse_detections, parse_features, parse_labels, parse_manifest, RowError,
};
use archive_lens_core::preprocess::{hist_equalize, ColorImage};
use archive_lens_core::similarity::{photographer_distance_matrix, tsne_embed, EmbeddingConfig};
use archive_lens_core::{analytics, par};

use crate::config::{parse_strategy, FileConfig};
use crate::{
    EmdArgs, Failure, FramingArgs, FuseArgs, PreprocessArgs, SplitArgs, StatsArgs, TsneArgs,
    WeightsArgs,
};

pub struct Context {
    pub config: FileConfig,
    pub strict: bool,
}

type CmdResult = Result<bool, Failure>;

impl Context {
    /// Prints a row-level report; in strict mode any report aborts the run.
    fn report(&self, source: &Path, errors: &[RowError], clean: &mut bool) -> Result<(), Failure> {
        for e in errors {
            eprintln!("{}: {e}", source.display());
        }
        if !errors.is_empty() {
            *clean = false;
            if self.strict {
                return Err(Failure::Input(anyhow::anyhow!(
                    "{}: aborting on row-level errors (--strict)",
                    source.display()
                )));
            }
        }
        Ok(())
    }
}

fn input_err<T>(r: anyhow::Result<T>) -> Result<T, Failure> {
    r.map_err(Failure::Input)
}

fn write_output(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes)
        .with_context(|| format!("writing {}", path.display()))
        .map_err(Failure::Internal)
}

pub fn fuse(ctx: &Context, args: &FuseArgs) -> CmdResult {
    let mut clean = true;
    let strategy = args
        .strategy
        .as_deref()
        .map(parse_strategy)
        .transpose()
        .map_err(Failure::Input)?;
    let config = ctx
        .config
        .fusion_config(args.theta, strategy)
        .map_err(Failure::Input)?;

    let (manifest, errors) = parse_manifest(&args.manifest)?;
    ctx.report(&args.manifest, &errors, &mut clean)?;

    let mut per_photo: BTreeMap<String, Vec<Detection>> = BTreeMap::new();
    for path in &args.detections {
        let (grouped, errors) = parse_detections(path, &manifest)?;
        ctx.report(path, &errors, &mut clean)?;
        for (photo_id, detections) in grouped {
            per_photo.entry(photo_id).or_default().extend(detections);
        }
    }

    let mut entries: Vec<_> = manifest.entries().to_vec();
    entries.sort_by(|a, b| a.photo_id.cmp(&b.photo_id));
    let batches: Vec<Vec<Detection>> = entries
        .iter()
        .map(|e| per_photo.remove(&e.photo_id).unwrap_or_default())
        .collect();
    let fused = fuse_images(&batches, &config)?;

    let paired: Vec<_> = entries.iter().zip(fused).collect();
    let archive = export::fused_archive(&paired);
    write_output(&args.out, export::fused_json(&archive)?.as_bytes())?;
    Ok(clean)
}

fn load_fused(path: &Path) -> Result<Vec<PhotoRecord>, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Input)?;
    Ok(export::read_fused_json(&text)?)
}

pub fn framing(ctx: &Context, args: &FramingArgs) -> CmdResult {
    let photos = load_fused(&args.fused)?;
    let config = ctx.config.framing_config(args.closeup, args.overall);
    let breakdowns = framing_distribution(&photos, &config)?;
    write_output(&args.out, export::framing_csv(&breakdowns).as_bytes())?;
    Ok(true)
}

pub fn stats(_ctx: &Context, args: &StatsArgs) -> CmdResult {
    let photos = load_fused(&args.fused)?;
    let class_order: Vec<String> = args
        .classes
        .split(',')
        .map(|c| c.trim().to_string())
        .filter(|c| !c.is_empty())
        .collect();
    let class_set = class_order.iter().cloned().collect();
    let stats = analytics::content_stats(&photos, &class_set)?;
    write_output(&args.out, export::stats_csv(&stats, &class_order).as_bytes())?;
    Ok(true)
}

pub fn split(ctx: &Context, args: &SplitArgs) -> CmdResult {
    let mut clean = true;
    let (manifest, errors) = parse_manifest(&args.manifest)?;
    ctx.report(&args.manifest, &errors, &mut clean)?;

    let parts: Vec<f64> = input_err(
        args.fractions
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<Vec<f64>, _>>()
            .context("parsing --fractions"),
    )?;
    if parts.len() != 3 {
        return Err(Failure::Input(anyhow::anyhow!(
            "--fractions needs exactly three comma-separated values"
        )));
    }
    let fractions = SplitFractions {
        train: parts[0],
        validation: parts[1],
        test: parts[2],
    };

    let photos: Vec<PhotoRecord> = manifest
        .entries()
        .iter()
        .map(|e| PhotoRecord {
            photo_id: e.photo_id.clone(),
            photographer_id: e.photographer_id.clone(),
            capture_date: e.capture_date,
            image_width: e.image_width,
            image_height: e.image_height,
            fused_detections: Vec::new(),
        })
        .collect();
    let assignment = split_dataset(&photos, fractions, args.seed)?;
    write_output(&args.out, export::split_csv(&assignment).as_bytes())?;
    Ok(clean)
}

pub fn weights(ctx: &Context, args: &WeightsArgs) -> CmdResult {
    let mut clean = true;
    let (counts, errors) = parse_labels(&args.labels)?;
    ctx.report(&args.labels, &errors, &mut clean)?;
    let weights = analytics::class_weights(&counts)?;
    write_output(&args.out, export::weights_csv(&weights).as_bytes())?;
    Ok(clean)
}

pub fn emd(ctx: &Context, args: &EmdArgs) -> CmdResult {
    let mut clean = true;
    let (features, errors) = parse_features(&args.features)?;
    ctx.report(&args.features, &errors, &mut clean)?;
    let matrix = photographer_distance_matrix(&features, args.cap, args.seed)?;
    write_output(&args.out, export::distance_matrix_csv(&matrix).as_bytes())?;
    Ok(clean)
}

pub fn tsne(ctx: &Context, args: &TsneArgs) -> CmdResult {
    let mut clean = true;
    let (features, errors) = parse_features(&args.features)?;
    ctx.report(&args.features, &errors, &mut clean)?;
    let config = EmbeddingConfig {
        perplexity: args.perplexity,
        iterations: args.iterations,
        learning_rate: args.learning_rate,
        early_exaggeration: args.exaggeration,
        seed: args.seed,
        ..EmbeddingConfig::default()
    };
    let embedding = tsne_embed(&features, &config)?;
    write_output(
        &args.out,
        export::embedding_csv(&features, &embedding).as_bytes(),
    )?;
    Ok(clean)
}

pub fn preprocess(ctx: &Context, args: &PreprocessArgs) -> CmdResult {
    let mut clean = true;
    let (manifest, errors) = parse_manifest(&args.manifest)?;
    ctx.report(&args.manifest, &errors, &mut clean)?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(Failure::Internal)?;
    let base = args.manifest.parent().unwrap_or(Path::new("."));

    // image paths resolve relative to the manifest's directory
    let jobs: Vec<std::path::PathBuf> = manifest
        .entries()
        .iter()
        .filter_map(|e| e.image_path.as_ref().map(|p| base.join(p)))
        .collect();
    let missing = manifest.len() - jobs.len();
    if missing > 0 {
        eprintln!("{missing} manifest rows have no image path; skipped");
        clean = false;
        if ctx.strict {
            return Err(Failure::Input(anyhow::anyhow!(
                "aborting on rows without image paths (--strict)"
            )));
        }
    }

    let results = par::map_items(&jobs, |path| -> Result<(), String> {
        let loaded = image::open(path)
            .map_err(|e| format!("{}: {e}", path.display()))?
            .to_rgb8();
        let pixels: Vec<[u8; 3]> = loaded.pixels().map(|p| p.0).collect();
        let color = ColorImage::new(loaded.width(), loaded.height(), pixels)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        let equalized = hist_equalize(&color).map_err(|e| format!("{}: {e}", path.display()))?;

        let mut out = image::RgbImage::new(equalized.width(), equalized.height());
        for (dst, src) in out.pixels_mut().zip(equalized.pixels()) {
            dst.0 = *src;
        }
        let file_name = path
            .file_name()
            .ok_or_else(|| format!("{}: no file name", path.display()))?;
        let out_path = args.out_dir.join(file_name);
        out.save(&out_path)
            .map_err(|e| format!("{}: {e}", out_path.display()))?;
        Ok(())
    });

    for result in results {
        if let Err(message) = result {
            eprintln!("{message}");
            clean = false;
            if ctx.strict {
                return Err(Failure::Input(anyhow::anyhow!(
                    "aborting on image errors (--strict)"
                )));
            }
        }
    }
    Ok(clean)
}
