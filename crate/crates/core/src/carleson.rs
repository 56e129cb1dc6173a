//! Closed-range criteria: coverage and reverse Carleson densities over Bergman
//! disks and Carleson boxes, the `G_c` box density, boundary accumulation and
//! the classifier that combines them.
//!
//! All densities are seeded Monte Carlo estimates. Each disk or box draws from
//! its own ChaCha stream keyed by the master seed and the disk centre, so
//! results do not depend on evaluation order.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{count_within, counting_sample, MAX_EPS, MIN_EPS};
use crate::dirichlet::{boundedness_and_tails, BoundednessEstimate, FamilyConfig, TargetGridSpec, TestFamily};
use crate::error::{Error, Result};
use crate::geometry::{bergman_disk, CarlesonBox, DiskPoint};
use crate::numerics::mix_seed;
use crate::symbols::SymbolMap;

/// Sampling plan shared by every density estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DensityQuery {
    /// Bergman radius `r` of the disks `D(z, r)`.
    pub bergman_radius: f64,
    /// Exponent in `n_phi^alpha`.
    pub alpha: f64,
    /// Level `c` of `G_c = {tau_phi > c}`.
    pub level: f64,
    /// Moduli of the centre rings; `0` contributes the single point `z = 0`.
    pub rings: Vec<f64>,
    /// Equally spaced angles per ring, starting at angle 0.
    pub angles: usize,
    pub seed: u64,
    pub samples_per_disk: usize,
    /// Preimage search radius is `1 - eps`.
    pub eps: f64,
}

impl Default for DensityQuery {
    fn default() -> Self {
        DensityQuery {
            bergman_radius: 1.0,
            alpha: 1.0,
            level: 0.5,
            rings: vec![0.0, 0.5, 0.9, 0.99, 0.999],
            angles: 64,
            seed: 42,
            samples_per_disk: 1000,
            eps: 1e-6,
        }
    }
}

impl DensityQuery {
    pub fn validate(&self) -> Result<()> {
        if !(self.bergman_radius > 0.0 && self.bergman_radius.is_finite()) {
            return Err(Error::validation("query.bergman_radius", "must be positive"));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::validation("query.alpha", format!("must lie in (0,1], got {}", self.alpha)));
        }
        if !(self.level > 0.0 && self.level.is_finite()) {
            return Err(Error::validation("query.level", "must be positive"));
        }
        if self.rings.is_empty() {
            return Err(Error::validation("query.rings", "must not be empty"));
        }
        if self.rings.iter().any(|&r| !(0.0..1.0 - 1e-12).contains(&r)) {
            return Err(Error::validation("query.rings", "moduli must lie in [0, 1)"));
        }
        if self.rings.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::validation("query.rings", "must be strictly increasing"));
        }
        if self.angles == 0 {
            return Err(Error::validation("query.angles", "must be positive"));
        }
        if self.samples_per_disk < 1000 {
            return Err(Error::validation(
                "query.samples_per_disk",
                format!("must be at least 1000, got {}", self.samples_per_disk),
            ));
        }
        if !(MIN_EPS..=MAX_EPS).contains(&self.eps) {
            return Err(Error::validation(
                "query.eps",
                format!("must lie in [{MIN_EPS:e}, {MAX_EPS:e}]"),
            ));
        }
        Ok(())
    }

    /// Grid points as `(ring index, z)`.
    pub fn grid(&self) -> Vec<(usize, Complex64)> {
        let mut pts = Vec::new();
        for (i, &r) in self.rings.iter().enumerate() {
            if r == 0.0 {
                pts.push((i, Complex64::new(0.0, 0.0)));
                continue;
            }
            for j in 0..self.angles {
                pts.push((i, Complex64::from_polar(r, 2.0 * PI * j as f64 / self.angles as f64)));
            }
        }
        pts
    }

    fn truncation(&self) -> f64 {
        1.0 - self.eps
    }
}

fn stream(seed: u64, z: Complex64, tag: u64) -> ChaCha8Rng {
    let salt = z.re.to_bits() ^ z.im.to_bits().rotate_left(32) ^ tag.wrapping_mul(0xD6E8_FEB8_6659_FD93);
    ChaCha8Rng::seed_from_u64(mix_seed(seed, salt))
}

/// A Monte Carlo ratio with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub value: f64,
    pub standard_error: f64,
    pub samples: usize,
    pub failures: usize,
}

impl RatioEstimate {
    fn from_values(values: &[f64], failures: usize) -> Self {
        let n = values.len().max(1) as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        RatioEstimate {
            value: mean,
            standard_error: (var / n).sqrt(),
            samples: values.len(),
            failures,
        }
    }
}

/// Preimage counts at uniform samples of a region; `None` marks a failed sample.
struct Counts(Vec<Option<usize>>);

impl Counts {
    fn failures(&self) -> usize {
        self.0.iter().filter(|c| c.is_none()).count()
    }

    fn check(self, what: &str) -> Result<Counts> {
        let fails = self.failures();
        if fails * 100 > self.0.len() {
            return Err(Error::domain(format!(
                "{what}: {fails} of {} samples failed",
                self.0.len()
            )));
        }
        Ok(self)
    }

    fn estimate(&self, f: impl Fn(usize) -> f64) -> RatioEstimate {
        let vals: Vec<f64> = self.0.iter().flatten().map(|&n| f(n)).collect();
        RatioEstimate::from_values(&vals, self.failures())
    }

    fn coverage(&self) -> RatioEstimate {
        self.estimate(|n| (n >= 1) as u8 as f64)
    }

    fn power(&self, alpha: f64) -> RatioEstimate {
        self.estimate(|n| (n as f64).powf(alpha))
    }

    fn max(&self) -> usize {
        self.0.iter().flatten().copied().max().unwrap_or(0)
    }
}

fn disk_counts(phi: &SymbolMap, z: Complex64, r: f64, q: &DensityQuery) -> Result<Counts> {
    let d = bergman_disk(z, r)?;
    let c = d.euclidean_center_c();
    let rho = d.euclidean_radius;
    let mut rng = stream(q.seed, z, 0);
    let counts = (0..q.samples_per_disk)
        .map(|_| {
            let w = c + Complex64::from_polar(rho * rng.random::<f64>().sqrt(), 2.0 * PI * rng.random::<f64>());
            count_within(phi, w, q.truncation()).ok()
        })
        .collect();
    Counts(counts).check("disk sampling")
}

/// Uniform samples of `D ∩ S(zeta, r)` by rejection from the bounding square.
fn box_samples(b: &CarlesonBox, n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let zeta = b.anchor_c();
    let r = b.radius.min(2.0);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let w = zeta + Complex64::new(r * (2.0 * rng.random::<f64>() - 1.0), r * (2.0 * rng.random::<f64>() - 1.0));
        if w.norm() < 1.0 - 1e-12 && (w - zeta).norm() < b.radius {
            out.push(w);
        }
    }
    out
}

fn box_counts(phi: &SymbolMap, b: &CarlesonBox, q: &DensityQuery) -> Result<Counts> {
    let mut rng = stream(q.seed, b.anchor_c() * b.radius, 1);
    let counts = box_samples(b, q.samples_per_disk, &mut rng)
        .into_iter()
        .map(|w| count_within(phi, w, q.truncation()).ok())
        .collect();
    Counts(counts).check("box sampling")
}

/// `A(phi(D) ∩ D(z, r)) / A(D(z, r))`.
pub fn coverage_ratio(phi: &SymbolMap, z: Complex64, r: f64, q: &DensityQuery) -> Result<RatioEstimate> {
    Ok(disk_counts(phi, z, r, q)?.coverage())
}

/// `(1 / A(D(z, r))) ∫_{D(z, r)} n_phi^alpha dA`.
pub fn reverse_carleson_ratio(
    phi: &SymbolMap,
    z: Complex64,
    r: f64,
    alpha: f64,
    q: &DensityQuery,
) -> Result<RatioEstimate> {
    check_alpha(alpha)?;
    Ok(disk_counts(phi, z, r, q)?.power(alpha))
}

/// Box analogue of [`reverse_carleson_ratio`] over `D ∩ S(zeta, r)`.
pub fn box_reverse_carleson_ratio(phi: &SymbolMap, b: &CarlesonBox, alpha: f64, q: &DensityQuery) -> Result<RatioEstimate> {
    check_alpha(alpha)?;
    Ok(box_counts(phi, b, q)?.power(alpha))
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::validation("alpha", format!("must lie in (0,1], got {alpha}")));
    }
    Ok(())
}

/// Which density [`delta_infimum`] minimizes.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DensityMode {
    Coverage,
    Power { alpha: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RingMinimum {
    pub radius: f64,
    pub min_ratio: f64,
    pub argmin: DiskPoint,
    pub standard_error: f64,
}

/// Infimum of a density over the grid, with per-ring minima.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaEstimate {
    pub mode: DensityMode,
    pub delta: f64,
    pub argmin_z: DiskPoint,
    pub per_ring: Vec<RingMinimum>,
    /// Standard error at the minimizing disk.
    pub standard_error: f64,
    pub failures: usize,
}

impl DeltaEstimate {
    fn from_points(mode: DensityMode, rings: &[f64], points: &[(usize, Complex64, RatioEstimate)]) -> Self {
        let mut per_ring: Vec<RingMinimum> = rings
            .iter()
            .map(|&radius| RingMinimum {
                radius,
                min_ratio: f64::INFINITY,
                argmin: DiskPoint::ORIGIN,
                standard_error: 0.0,
            })
            .collect();
        for &(i, z, est) in points {
            if est.value < per_ring[i].min_ratio {
                per_ring[i] = RingMinimum {
                    radius: rings[i],
                    min_ratio: est.value,
                    argmin: z.into(),
                    standard_error: est.standard_error,
                };
            }
        }
        let best = per_ring
            .iter()
            .fold(None::<&RingMinimum>, |acc, r| match acc {
                Some(a) if a.min_ratio <= r.min_ratio => Some(a),
                _ => Some(r),
            })
            .copied()
            .expect("at least one ring");
        DeltaEstimate {
            mode,
            delta: best.min_ratio,
            argmin_z: best.argmin,
            per_ring,
            standard_error: best.standard_error,
            failures: points.iter().map(|p| p.2.failures).sum(),
        }
    }

    /// True when the minima of the last two rings are both below `delta_min`.
    pub fn decays_below(&self, delta_min: f64) -> bool {
        let n = self.per_ring.len();
        n >= 2 && self.per_ring[n - 2..].iter().all(|r| r.min_ratio < delta_min)
    }
}

/// Coverage and power-mode infima from one set of samples per disk.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaSweep {
    pub coverage: DeltaEstimate,
    pub power: Vec<DeltaEstimate>,
    /// Largest count seen at any sample.
    pub max_count: usize,
    /// Histogram of sampled counts.
    pub histogram: BTreeMap<usize, usize>,
}

/// Evaluates the grid once and derives the coverage infimum and one power-mode
/// infimum per entry of `alphas`.
pub fn delta_sweep(phi: &SymbolMap, q: &DensityQuery, alphas: &[f64]) -> Result<DeltaSweep> {
    q.validate()?;
    for &a in alphas {
        check_alpha(a)?;
    }
    let grid = q.grid();
    let counts: Vec<Result<Counts>> = grid
        .par_iter()
        .map(|&(_, z)| disk_counts(phi, z, q.bergman_radius, q))
        .collect();
    let counts: Vec<Counts> = counts.into_iter().collect::<Result<_>>()?;
    let collect = |f: &dyn Fn(&Counts) -> RatioEstimate| -> Vec<(usize, Complex64, RatioEstimate)> {
        grid.iter().zip(&counts).map(|(&(i, z), c)| (i, z, f(c))).collect()
    };
    let coverage = DeltaEstimate::from_points(DensityMode::Coverage, &q.rings, &collect(&|c| c.coverage()));
    let power = alphas
        .iter()
        .map(|&alpha| {
            DeltaEstimate::from_points(DensityMode::Power { alpha }, &q.rings, &collect(&|c| c.power(alpha)))
        })
        .collect();
    let mut histogram = BTreeMap::new();
    for c in &counts {
        for n in c.0.iter().flatten() {
            *histogram.entry(*n).or_insert(0) += 1;
        }
    }
    Ok(DeltaSweep {
        coverage,
        power,
        max_count: counts.iter().map(Counts::max).max().unwrap_or(0),
        histogram,
    })
}

/// Infimum of one density mode over the grid of `q` at Bergman radius `r`.
pub fn delta_infimum(phi: &SymbolMap, r: f64, mode: DensityMode, q: &DensityQuery) -> Result<DeltaEstimate> {
    let q = DensityQuery {
        bergman_radius: r,
        ..q.clone()
    };
    let alphas: Vec<f64> = match mode {
        DensityMode::Coverage => vec![],
        DensityMode::Power { alpha } => vec![alpha],
    };
    let sweep = delta_sweep(phi, &q, &alphas)?;
    Ok(match mode {
        DensityMode::Coverage => sweep.coverage,
        DensityMode::Power { .. } => sweep.power.into_iter().next().expect("one alpha"),
    })
}

/// Boxes `S(zeta_j, r)` for `angles` equally spaced anchors and each radius.
pub fn boundary_boxes(angles: usize, radii: &[f64]) -> Vec<CarlesonBox> {
    radii
        .iter()
        .flat_map(|&r| {
            (0..angles).map(move |j| {
                CarlesonBox::at_angle(2.0 * PI * j as f64 / angles as f64, r).expect("valid box")
            })
        })
        .collect()
}

/// Default radii for the boundary accumulation boxes.
pub const BOUNDARY_BOX_RADII: [f64; 3] = [0.2, 0.1, 0.05];

/// Minimum of the box density over a family of boxes.
pub fn box_delta(phi: &SymbolMap, boxes: &[CarlesonBox], alpha: f64, q: &DensityQuery) -> Result<(f64, CarlesonBox)> {
    let ests: Vec<Result<RatioEstimate>> = boxes
        .par_iter()
        .map(|b| box_reverse_carleson_ratio(phi, b, alpha, q))
        .collect();
    let mut best = (f64::INFINITY, boxes[0]);
    for (b, e) in boxes.iter().zip(ests) {
        let v = e?.value;
        if v < best.0 {
            best = (v, *b);
        }
    }
    Ok(best)
}

/// `A(G_c ∩ S(zeta, r)) / A(D ∩ S(zeta, r))` with `G_c = {tau_phi > c}`.
/// Samples with `|w| < 1e-6` are discarded.
pub fn gc_density(phi: &SymbolMap, c: f64, b: &CarlesonBox, q: &DensityQuery) -> Result<RatioEstimate> {
    let mut rng = stream(q.seed, b.anchor_c() * b.radius, 2);
    let mut vals = Vec::with_capacity(q.samples_per_disk);
    let mut failures = 0;
    while vals.len() + failures < q.samples_per_disk {
        let w = box_samples(b, 1, &mut rng)[0];
        if w.norm() < 1e-6 {
            continue;
        }
        match counting_sample(phi, w, q.eps) {
            Ok(s) => vals.push(s.tau.is_some_and(|t| t > c) as u8 as f64),
            Err(_) => failures += 1,
        }
    }
    if failures * 100 > q.samples_per_disk {
        return Err(Error::domain(format!("G_c sampling: {failures} samples failed")));
    }
    Ok(RatioEstimate::from_values(&vals, failures))
}

/// Outcome of the boundary accumulation check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCheck {
    pub pass: bool,
    /// First box with no sampled image point.
    pub witness: Option<CarlesonBox>,
    pub boxes: usize,
    pub samples_per_box: usize,
}

/// Passes iff every box contains at least one sampled point of `phi(D)`.
pub fn boundary_accumulation_check(phi: &SymbolMap, boxes: &[CarlesonBox], q: &DensityQuery) -> Result<BoundaryCheck> {
    let per_box = q.samples_per_disk.max(4096);
    let hits: Vec<Result<bool>> = boxes
        .par_iter()
        .map(|b| {
            let mut rng = stream(q.seed, b.anchor_c() * b.radius, 3);
            for w in box_samples(b, per_box, &mut rng) {
                if count_within(phi, w, q.truncation())? >= 1 {
                    return Ok(true);
                }
            }
            Ok(false)
        })
        .collect();
    let mut witness = None;
    for (b, h) in boxes.iter().zip(hits) {
        if !h? && witness.is_none() {
            witness = Some(*b);
        }
    }
    Ok(BoundaryCheck {
        pass: witness.is_none(),
        witness,
        boxes: boxes.len(),
        samples_per_box: per_box,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictLabel {
    ClosedRangeEvidence,
    NotClosedEvidence,
    UnboundedOperatorEvidence,
    Inconclusive,
}

impl VerdictLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            VerdictLabel::ClosedRangeEvidence => "closed_range_evidence",
            VerdictLabel::NotClosedEvidence => "not_closed_evidence",
            VerdictLabel::UnboundedOperatorEvidence => "unbounded_operator_evidence",
            VerdictLabel::Inconclusive => "inconclusive",
        }
    }
}

/// Decision thresholds used by [`classify`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// A density infimum at or above this counts as bounded away from zero.
    pub delta0: f64,
    /// Decay is confirmed when the last two ring minima fall below this.
    pub delta_min: f64,
    /// Tail index `k_0`.
    pub k0: usize,
    pub tail: f64,
    /// Largest sampled count treated as bounded multiplicity.
    pub n_bound: usize,
    /// Coarse truncation of the boundedness estimate (the fine one is a tenth).
    pub boundedness_eps: f64,
    /// Anchors per radius for boundary boxes.
    pub box_angles: usize,
    /// Anchors for the `G_c` density.
    pub gc_angles: usize,
    pub gc_radius: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            delta0: 0.05,
            delta_min: 1e-3,
            k0: 8,
            tail: 1e-6,
            n_bound: 8,
            boundedness_eps: 1e-2,
            box_angles: 32,
            gc_angles: 8,
            gc_radius: 0.2,
        }
    }
}

/// Estimator settings that are not part of [`DensityQuery`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierSettings {
    pub thresholds: Thresholds,
    pub family: FamilyConfig,
    pub grid: TargetGridSpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionRecord {
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
    /// Monte Carlo standard error; `None` for exact or deterministic values.
    pub standard_error: Option<f64>,
}

/// Everything the decision procedure looks at; `None` marks a failed estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evidence {
    pub boundedness: Option<BoundednessEstimate>,
    /// `(k, family tail)` at the fine boundedness truncation.
    pub tails: Option<Vec<(usize, f64)>>,
    pub boundary: Option<BoundaryCheck>,
    pub sweep: Option<DeltaSweep>,
    /// Minimum `G_c` density over the anchors.
    pub gc: Option<RatioEstimate>,
    pub errors: Vec<String>,
}

impl Evidence {
    pub fn tail_at(&self, k: usize) -> Option<f64> {
        self.tails.as_ref()?.iter().find(|t| t.0 == k).map(|t| t.1)
    }

    /// Power-mode infimum for the query exponent.
    pub fn power_delta(&self) -> Option<&DeltaEstimate> {
        self.sweep.as_ref()?.power.first()
    }
}

/// Tail indices always reported alongside the boundedness estimate.
pub const TAIL_KS: [usize; 6] = [1, 2, 4, 8, 16, 32];

/// Runs every estimator the classifier needs, recording failures instead of
/// propagating them. `alphas` are extra exponents for the power-mode sweep;
/// the query exponent always comes first.
pub fn gather_evidence(phi: &SymbolMap, q: &DensityQuery, settings: &ClassifierSettings, alphas: &[f64]) -> Evidence {
    let t = &settings.thresholds;
    let mut errors = Vec::new();
    let mut note = |what: &str, e: Error| errors.push(format!("{what}: {e}"));

    let mut ks: Vec<usize> = TAIL_KS.to_vec();
    if !ks.contains(&t.k0) {
        ks.push(t.k0);
        ks.sort_unstable();
    }
    let (boundedness, tails) = match TestFamily::new(&settings.family)
        .and_then(|fam| boundedness_and_tails(phi, &fam, t.boundedness_eps, settings.grid, &ks))
    {
        Ok((b, tl)) => (Some(b), Some(ks.iter().copied().zip(tl).collect())),
        Err(e) => {
            note("boundedness", e);
            (None, None)
        }
    };

    let boxes = boundary_boxes(t.box_angles, &BOUNDARY_BOX_RADII);
    let boundary = boundary_accumulation_check(phi, &boxes, q)
        .map_err(|e| note("boundary boxes", e))
        .ok();

    let mut all_alphas = vec![q.alpha];
    all_alphas.extend(alphas.iter().copied().filter(|a| *a != q.alpha));
    let sweep = delta_sweep(phi, q, &all_alphas).map_err(|e| note("density sweep", e)).ok();

    let gc_boxes = boundary_boxes(t.gc_angles, &[t.gc_radius]);
    let gc = gc_boxes
        .iter()
        .map(|b| gc_density(phi, q.level, b, q))
        .collect::<Result<Vec<_>>>()
        .map(|v| {
            v.into_iter()
                .fold(None::<RatioEstimate>, |acc, e| match acc {
                    Some(a) if a.value <= e.value => Some(a),
                    _ => Some(e),
                })
                .expect("at least one anchor")
        })
        .map_err(|e| note("G_c density", e))
        .ok();

    Evidence {
        boundedness,
        tails,
        boundary,
        sweep,
        gc,
        errors,
    }
}

/// The classifier's output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: VerdictLabel,
    /// Which branch of the decision procedure fired.
    pub decided_by: String,
    pub criteria: BTreeMap<String, CriterionRecord>,
    pub thresholds: Thresholds,
    pub notes: Vec<String>,
    /// Number of estimators that failed.
    pub errors: usize,
}

/// Applies the decision procedure to gathered evidence:
/// divergent boundedness estimate, then an empty boundary box, then small
/// tail with coverage bounded below, then bounded multiplicity with decaying
/// coverage; otherwise inconclusive.
pub fn decide(ev: &Evidence, t: &Thresholds) -> Verdict {
    let mut criteria = BTreeMap::new();
    let mut notes = ev.errors.clone();
    let mut put = |key: &str, value: f64, threshold: f64, pass: bool, standard_error: Option<f64>| {
        criteria.insert(
            key.to_string(),
            CriterionRecord {
                value,
                threshold,
                pass,
                standard_error,
            },
        );
    };

    let coverage = ev.sweep.as_ref().map(|s| &s.coverage);
    if let Some(c) = coverage {
        put("main_thm_b", c.delta, t.delta0, c.delta >= t.delta0, Some(c.standard_error));
    }
    if let Some(p) = ev.power_delta() {
        put("main_thm_c", p.delta, t.delta0, p.delta >= t.delta0, Some(p.standard_error));
    }
    if let Some(b) = &ev.boundary {
        put("prop21_boxes", b.pass as u8 as f64, 1.0, b.pass, None);
    }
    let max_n = ev.sweep.as_ref().map(|s| s.max_count);
    if let Some(n) = max_n {
        put("cor26_bounded_n", n as f64, t.n_bound as f64, n <= t.n_bound, None);
    }
    let tail = ev.tail_at(t.k0);
    if let Some(v) = tail {
        put("tail_hypothesis", v, t.tail, v <= t.tail, None);
    }
    if let Some(g) = &ev.gc {
        put("thmZ_gc", g.value, t.delta0, g.value > t.delta0, Some(g.standard_error));
    }
    if let Some(b) = &ev.boundedness {
        notes.push(format!(
            "boundedness ({}): {:.6e} at eps {:e}, {:.6e} at eps {:e}, growth {:.3}",
            b.label, b.coarse, b.coarse_eps, b.fine, b.fine_eps, b.growth
        ));
    }

    let (label, decided_by) = if ev.boundedness.as_ref().is_some_and(|b| b.divergence_suspected) {
        (VerdictLabel::UnboundedOperatorEvidence, "boundedness_divergence")
    } else if ev.boundary.as_ref().is_some_and(|b| !b.pass) {
        (VerdictLabel::NotClosedEvidence, "prop21_boxes")
    } else if tail.is_some_and(|v| v <= t.tail) && coverage.is_some_and(|c| c.delta >= t.delta0) {
        (VerdictLabel::ClosedRangeEvidence, "main_thm_b")
    } else if max_n.is_some_and(|n| n <= t.n_bound) && coverage.is_some_and(|c| c.decays_below(t.delta_min)) {
        (VerdictLabel::NotClosedEvidence, "cor26_bounded_n")
    } else {
        (VerdictLabel::Inconclusive, "none")
    };
    if let (Some(c), Some(p)) = (coverage, ev.power_delta()) {
        if (c.delta >= t.delta0) != (p.delta >= t.delta0) {
            notes.push("coverage and power-mode infima disagree".into());
        }
    }
    Verdict {
        label,
        decided_by: decided_by.into(),
        criteria,
        thresholds: t.clone(),
        notes,
        errors: ev.errors.len(),
    }
}

/// Gathers evidence and decides. Never fails: estimator errors are recorded
/// in the notes and can only push the label towards inconclusive.
pub fn classify(phi: &SymbolMap, q: &DensityQuery, settings: &ClassifierSettings) -> Verdict {
    decide(&gather_evidence(phi, q, settings, &[]), &settings.thresholds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::disk_area;
    use crate::symbols::{build_symbol, SymbolSpec};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sym(spec: SymbolSpec) -> SymbolMap {
        build_symbol(&spec).unwrap()
    }

    fn quick() -> DensityQuery {
        DensityQuery {
            angles: 16,
            ..DensityQuery::default()
        }
    }

    #[test]
    fn coverage_examples() {
        let q = DensityQuery::default();
        let id = SymbolMap::identity();
        for z in [c(0.0, 0.0), c(0.5, 0.3), c(0.0, -0.99)] {
            assert_eq!(coverage_ratio(&id, z, 1.0, &q).unwrap().value, 1.0);
        }
        let half = sym(SymbolSpec::Scaled { c: 0.5 });
        let est = coverage_ratio(&half, c(0.0, 0.0), 1.0, &q).unwrap();
        let s = 1f64.tanh();
        let exact = 0.25 / (s * s);
        assert!((est.value - exact).abs() < 3.0 * est.standard_error, "{est:?} vs {exact}");
        let cres = sym(SymbolSpec::crescent_default());
        assert!(coverage_ratio(&cres, c(0.999, 0.0), 1.0, &q).unwrap().value < 0.05);
    }

    #[test]
    fn coverage_matches_region_area_oracle() {
        // Independent oracle: fine polar grid over the Euclidean disk with exact region membership.
        let cres = sym(SymbolSpec::crescent_default());
        let map = cres.as_crescent().unwrap();
        let q = DensityQuery {
            samples_per_disk: 4000,
            ..DensityQuery::default()
        };
        for z in [c(0.9, 0.0), c(0.5, 0.5)] {
            let d = bergman_disk(z, 1.0).unwrap();
            let (m, n) = (400, 400);
            let mut inside = 0.0;
            let mut total = 0.0;
            for i in 0..m {
                let rr = (i as f64 + 0.5) / m as f64;
                for j in 0..n {
                    let w = d.euclidean_center_c()
                        + Complex64::from_polar(d.euclidean_radius * rr, 2.0 * PI * (j as f64 + 0.5) / n as f64);
                    total += rr;
                    if map.region.contains(w) {
                        inside += rr;
                    }
                }
            }
            let oracle = inside / total;
            let est = coverage_ratio(&cres, z, 1.0, &q).unwrap();
            assert!((est.value - oracle).abs() < 4.0 * est.standard_error.max(1e-3), "{z}: {est:?} vs {oracle}");
        }
        let _ = disk_area;
    }

    #[test]
    fn reverse_carleson_examples() {
        let q = DensityQuery::default();
        let id = SymbolMap::identity();
        assert_eq!(reverse_carleson_ratio(&id, c(0.3, 0.0), 1.0, 1.0, &q).unwrap().value, 1.0);
        let p2 = sym(SymbolSpec::Power { n: 2 });
        let v = reverse_carleson_ratio(&p2, c(0.0, 0.0), 1.0, 1.0, &q).unwrap();
        assert!((v.value - 2.0).abs() < 1e-12);
        let v = reverse_carleson_ratio(&p2, c(0.0, 0.0), 1.0, 0.5, &q).unwrap();
        assert!((v.value - 2f64.sqrt()).abs() < 1e-12);
        assert!(reverse_carleson_ratio(&p2, c(0.0, 0.0), 1.0, 1.5, &q).is_err());
    }

    #[test]
    fn dominance_holds_pointwise() {
        let q = DensityQuery::default();
        let phi = sym(SymbolSpec::blaschke(&[c(0.5, 0.0), c(-0.3, 0.0)]));
        for z in [c(0.0, 0.0), c(0.9, 0.0), c(-0.5, 0.6)] {
            let cov = coverage_ratio(&phi, z, 1.0, &q).unwrap();
            let half = reverse_carleson_ratio(&phi, z, 1.0, 0.5, &q).unwrap();
            let one = reverse_carleson_ratio(&phi, z, 1.0, 1.0, &q).unwrap();
            let tol = 2.0 * (cov.standard_error + one.standard_error);
            assert!(one.value + tol >= half.value && half.value + tol >= cov.value);
        }
    }

    #[test]
    fn delta_examples() {
        let q = quick();
        let id = SymbolMap::identity();
        assert_eq!(delta_infimum(&id, 1.0, DensityMode::Coverage, &q).unwrap().delta, 1.0);

        let half = sym(SymbolSpec::Scaled { c: 0.5 });
        let d = delta_infimum(&half, 1.0, DensityMode::Coverage, &q).unwrap();
        let minima: Vec<f64> = d.per_ring.iter().map(|r| r.min_ratio).collect();
        assert!(minima[1..4].windows(2).all(|p| p[1] < p[0]), "{minima:?}");
        assert!(d.per_ring[3].min_ratio < 1e-3);

        let cres = sym(SymbolSpec::crescent_default());
        let d = delta_infimum(&cres, 1.0, DensityMode::Coverage, &q).unwrap();
        assert!(d.delta < 1e-3);
        assert!(d.decays_below(1e-3));
        let ring_9 = &d.per_ring[2];
        assert!((ring_9.argmin.to_complex() - c(0.9, 0.0)).norm() < 1e-12, "{ring_9:?}");
    }

    #[test]
    fn sweep_is_deterministic() {
        let q = quick();
        let phi = sym(SymbolSpec::crescent_default());
        let a = delta_sweep(&phi, &q, &[0.25, 1.0]).unwrap();
        let b = delta_sweep(&phi, &q, &[0.25, 1.0]).unwrap();
        assert_eq!(a, b);
        let other = DensityQuery { seed: 43, ..q };
        let cov = |s: &DeltaSweep| s.coverage.per_ring[2].min_ratio;
        assert_ne!(cov(&a), cov(&delta_sweep(&phi, &other, &[]).unwrap()));
    }

    #[test]
    fn gc_examples() {
        let q = DensityQuery::default();
        let id = SymbolMap::identity();
        let b = CarlesonBox::at_angle(0.7, 0.3).unwrap();
        assert_eq!(gc_density(&id, 0.5, &b, &q).unwrap().value, 1.0);
        assert_eq!(gc_density(&id, 2.0, &b, &q).unwrap().value, 0.0);
        let half = sym(SymbolSpec::Scaled { c: 0.5 });
        let b = CarlesonBox::at_angle(0.0, 0.25).unwrap();
        assert_eq!(gc_density(&half, 0.5, &b, &q).unwrap().value, 0.0);
    }

    #[test]
    fn boundary_examples() {
        let q = DensityQuery::default();
        let boxes = boundary_boxes(16, &BOUNDARY_BOX_RADII);
        assert!(boundary_accumulation_check(&SymbolMap::identity(), &boxes, &q).unwrap().pass);
        let half = sym(SymbolSpec::Scaled { c: 0.5 });
        let res = boundary_accumulation_check(&half, &boxes, &q).unwrap();
        assert!(!res.pass);
        assert_eq!(res.witness.unwrap().radius, 0.2);
        let cres = sym(SymbolSpec::crescent_default());
        assert!(boundary_accumulation_check(&cres, &boxes, &q).unwrap().pass);
    }

    #[test]
    fn box_and_disk_criteria_agree() {
        let q = quick();
        let boxes = boundary_boxes(16, &[0.2, 0.1, 0.05, 0.02]);
        for (spec, closed) in [
            (SymbolSpec::Identity, true),
            (SymbolSpec::Power { n: 2 }, true),
            (SymbolSpec::Scaled { c: 0.5 }, false),
            (SymbolSpec::crescent_default(), false),
        ] {
            let phi = sym(spec);
            let disk = delta_infimum(&phi, 1.0, DensityMode::Power { alpha: 1.0 }, &q).unwrap().delta;
            let (boxd, _) = box_delta(&phi, &boxes, 1.0, &q).unwrap();
            assert_eq!(disk >= 0.05, closed, "{}", phi.label());
            assert_eq!(boxd >= 0.05, closed, "{}: box {boxd}", phi.label());
        }
    }

    #[test]
    fn classifier_labels() {
        let q = quick();
        let settings = ClassifierSettings::default();
        for (spec, label) in [
            (SymbolSpec::Identity, VerdictLabel::ClosedRangeEvidence),
            (SymbolSpec::Power { n: 2 }, VerdictLabel::ClosedRangeEvidence),
            (SymbolSpec::Scaled { c: 0.5 }, VerdictLabel::NotClosedEvidence),
            (SymbolSpec::crescent_default(), VerdictLabel::NotClosedEvidence),
        ] {
            let phi = sym(spec);
            let v = classify(&phi, &q, &settings);
            assert_eq!(v.label, label, "{}: {v:#?}", phi.label());
            assert_eq!(v.errors, 0);
            assert_eq!(v.criteria.len(), 6);
        }
    }

    #[test]
    fn decide_prefers_divergence() {
        let t = Thresholds::default();
        let mut ev = Evidence {
            boundedness: None,
            tails: Some(vec![(8, 0.0)]),
            boundary: Some(BoundaryCheck {
                pass: false,
                witness: None,
                boxes: 1,
                samples_per_box: 4096,
            }),
            sweep: None,
            gc: None,
            errors: vec![],
        };
        assert_eq!(decide(&ev, &t).label, VerdictLabel::NotClosedEvidence);
        ev.boundary = None;
        assert_eq!(decide(&ev, &t).label, VerdictLabel::Inconclusive);
    }

    #[test]
    fn query_validation() {
        let bad = DensityQuery {
            samples_per_disk: 10,
            ..DensityQuery::default()
        };
        assert!(bad.validate().is_err());
        let bad = DensityQuery {
            rings: vec![0.5, 0.2],
            ..DensityQuery::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(DensityQuery::default().grid().len(), 1 + 4 * 64);
    }
}
