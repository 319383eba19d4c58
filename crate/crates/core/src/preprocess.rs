//! Image preprocessing: histogram equalization of the value channel in HSV
//! space, leaving hue and saturation untouched.

use crate::error::{Error, Result};

/// 8-bit RGB image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

impl ColorImage {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::invalid(format!(
                "pixel buffer holds {} pixels, expected {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }
}

/// 8-bit single-channel image, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayscaleImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayscaleImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::invalid(format!(
                "pixel buffer holds {} pixels, expected {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn to_color(&self) -> ColorImage {
        ColorImage {
            width: self.width,
            height: self.height,
            pixels: self.pixels.iter().map(|&v| [v, v, v]).collect(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }
}

/// (hue in degrees, saturation in [0,1]); value is the max channel and is
/// kept as the raw u8.
fn hue_saturation(r: u8, g: u8, b: u8) -> (f64, f64) {
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = f64::from(max) - f64::from(min);
    if max == 0 || delta == 0.0 {
        return (0.0, 0.0);
    }
    let (rf, gf, bf) = (f64::from(r), f64::from(g), f64::from(b));
    let maxf = f64::from(max);
    let hue = if max == r {
        60.0 * (((gf - bf) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((bf - rf) / delta + 2.0)
    } else {
        60.0 * ((rf - gf) / delta + 4.0)
    };
    (hue, delta / maxf)
}

fn hsv_to_rgb(hue: f64, saturation: f64, value: u8) -> [u8; 3] {
    let v = f64::from(value);
    let c = v * saturation;
    let sector = (hue / 60.0).rem_euclid(6.0);
    let x = c * (1.0 - (sector % 2.0 - 1.0).abs());
    let (r1, g1, b1) = match sector as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = v - c;
    [
        (r1 + m).round().clamp(0.0, 255.0) as u8,
        (g1 + m).round().clamp(0.0, 255.0) as u8,
        (b1 + m).round().clamp(0.0, 255.0) as u8,
    ]
}

/// Equalizes the value channel by the CDF remapping
/// `v' = round(255 * (cdf(v) - cdf_min) / (N - cdf_min))`
/// where `cdf_min` is the CDF at the lowest occupied level. Hue and
/// saturation are untouched. A constant-value image maps to 0 (both the
/// numerator and denominator of the remapping vanish).
pub fn hist_equalize(image: &ColorImage) -> Result<ColorImage> {
    if image.pixels.is_empty() {
        return Err(Error::invalid("cannot equalize an image with zero pixels"));
    }

    let mut histogram = [0u64; 256];
    for px in &image.pixels {
        let v = px[0].max(px[1]).max(px[2]);
        histogram[v as usize] += 1;
    }
    let mut cdf = [0u64; 256];
    let mut running = 0u64;
    for (level, count) in histogram.iter().enumerate() {
        running += count;
        cdf[level] = running;
    }
    let cdf_min = histogram
        .iter()
        .position(|&count| count > 0)
        .map(|level| cdf[level])
        .expect("non-empty image has an occupied level");
    let n = image.pixels.len() as u64;
    let denom = n - cdf_min;

    let mut lut = [0u8; 256];
    for level in 0..256 {
        lut[level] = if denom == 0 {
            0
        } else {
            let numer = cdf[level].saturating_sub(cdf_min) as f64;
            (255.0 * numer / denom as f64).round().clamp(0.0, 255.0) as u8
        };
    }

    let pixels = image
        .pixels
        .iter()
        .map(|&[r, g, b]| {
            let v = r.max(g).max(b);
            let (hue, saturation) = hue_saturation(r, g, b);
            hsv_to_rgb(hue, saturation, lut[v as usize])
        })
        .collect();

    Ok(ColorImage {
        width: image.width,
        height: image.height,
        pixels,
    })
}
