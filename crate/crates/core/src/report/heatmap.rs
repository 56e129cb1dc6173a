//! 16-bit PGM heatmaps of counting and density fields.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ScenarioConfig;
use crate::carleson::coverage_ratio;
use crate::counting::{counting_sample, multiplicity};
use crate::error::{Error, Result};

pub const MAX_RESOLUTION: usize = 2048;
/// Pixel value for points outside the disk and for failed evaluations.
pub const SENTINEL: u16 = u16::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeatmapField {
    NPhi,
    Tau,
    Coverage,
    GcIndicator,
}

impl HeatmapField {
    pub fn name(self) -> &'static str {
        match self {
            HeatmapField::NPhi => "n_phi",
            HeatmapField::Tau => "tau",
            HeatmapField::Coverage => "coverage",
            HeatmapField::GcIndicator => "gc_indicator",
        }
    }

    /// Stored pixel value is `round(value * scale)`.
    pub fn scale(self) -> f64 {
        match self {
            HeatmapField::NPhi | HeatmapField::GcIndicator => 1.0,
            HeatmapField::Tau => 1000.0,
            HeatmapField::Coverage => 10000.0,
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::NPhi, Self::Tau, Self::Coverage, Self::GcIndicator]
            .into_iter()
            .find(|f| f.name() == s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatmapSummary {
    pub field: HeatmapField,
    pub resolution: usize,
    pub image: PathBuf,
    pub sidecar: PathBuf,
    /// Extremes of the decoded field over valid pixels.
    pub min: f64,
    pub max: f64,
    pub failures: usize,
    pub outside: usize,
}

/// Pixel centre of `(row, col)` in `[-1, 1]^2`, row 0 at the top.
pub fn pixel_point(row: usize, col: usize, resolution: usize) -> Complex64 {
    let h = 2.0 / resolution as f64;
    Complex64::new(-1.0 + h * (col as f64 + 0.5), 1.0 - h * (row as f64 + 0.5))
}

enum Pixel {
    Value(f64),
    Failed,
    Outside,
}

fn eval_pixel(field: HeatmapField, p: Complex64, config: &ScenarioConfig, phi: &crate::SymbolMap) -> Pixel {
    if p.norm() >= 1.0 {
        return Pixel::Outside;
    }
    let q = &config.query;
    let v = match field {
        HeatmapField::NPhi => multiplicity(phi, p, q.eps).map(|n| n as f64),
        HeatmapField::Tau => counting_sample(phi, p, q.eps).and_then(|s| s.tau.ok_or(Error::domain("tau undefined at 0"))),
        HeatmapField::GcIndicator => counting_sample(phi, p, q.eps)
            .and_then(|s| s.tau.ok_or(Error::domain("tau undefined at 0")))
            .map(|t| (t > q.level) as u8 as f64),
        HeatmapField::Coverage => coverage_ratio(phi, p, q.bergman_radius, q).map(|r| r.value),
    };
    match v {
        Ok(v) if v.is_finite() => Pixel::Value(v),
        _ => Pixel::Failed,
    }
}

/// Samples `field` at pixel centres of a square image over the disk and writes
/// `<name>_<field>.pgm` plus a `.txt` sidecar into `out_dir`. Coverage is
/// evaluated with the pixel as disk centre, the other fields with the pixel as
/// target point.
pub fn emit_heatmap(
    field: HeatmapField,
    resolution: usize,
    config: &ScenarioConfig,
    out_dir: &Path,
) -> Result<HeatmapSummary> {
    if !(2..=MAX_RESOLUTION).contains(&resolution) {
        return Err(Error::validation("resolution", format!("must lie in [2, {MAX_RESOLUTION}]")));
    }
    config.validate()?;
    let phi = config.symbol_map()?;
    let pixels: Vec<Pixel> = (0..resolution * resolution)
        .into_par_iter()
        .map(|i| eval_pixel(field, pixel_point(i / resolution, i % resolution, resolution), config, &phi))
        .collect();

    let scale = field.scale();
    let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut failures, mut outside) = (0, 0);
    let mut data = Vec::with_capacity(2 * pixels.len());
    for p in &pixels {
        let v = match *p {
            Pixel::Value(v) => {
                min = min.min(v);
                max = max.max(v);
                (v * scale).round().clamp(0.0, (SENTINEL - 1) as f64) as u16
            }
            Pixel::Failed => {
                failures += 1;
                SENTINEL
            }
            Pixel::Outside => {
                outside += 1;
                SENTINEL
            }
        };
        data.extend_from_slice(&v.to_be_bytes());
    }
    if min > max {
        min = f64::NAN;
        max = f64::NAN;
    }

    std::fs::create_dir_all(out_dir)?;
    let stem = format!("{}_{}", config.name, field.name());
    let image = out_dir.join(format!("{stem}.pgm"));
    let mut file = std::io::BufWriter::new(std::fs::File::create(&image)?);
    write!(file, "P5\n{resolution} {resolution}\n{}\n", SENTINEL)?;
    file.write_all(&data)?;
    file.flush()?;

    let sidecar = out_dir.join(format!("{stem}.txt"));
    let mut meta = String::new();
    let _ = writeln!(meta, "field = {}", field.name());
    let _ = writeln!(meta, "symbol = {}", phi.label());
    let _ = writeln!(meta, "resolution = {resolution}");
    let _ = writeln!(meta, "extent = [-1, 1] x [-1, 1], row 0 at imaginary part 1");
    let _ = writeln!(meta, "encoding = round(value * {scale}), clamped to [0, {}]", SENTINEL - 1);
    let _ = writeln!(meta, "sentinel = {SENTINEL}");
    let _ = writeln!(meta, "min = {min}");
    let _ = writeln!(meta, "max = {max}");
    let _ = writeln!(meta, "failures = {failures}");
    let _ = writeln!(meta, "outside = {outside}");
    let breaks: Vec<String> = (0..=4)
        .map(|i| format!("{}", min + (max - min) * i as f64 / 4.0))
        .collect();
    let _ = writeln!(meta, "breakpoints = [{}]", breaks.join(", "));
    std::fs::write(&sidecar, meta)?;

    Ok(HeatmapSummary {
        field,
        resolution,
        image,
        sidecar,
        min,
        max,
        failures,
        outside,
    })
}
