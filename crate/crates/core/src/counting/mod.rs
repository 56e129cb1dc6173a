//! Preimage sets and the counting functions `n_phi`, `N_phi` and `tau_phi`.
//!
//! Preimages are searched in the closed disk `|z| <= 1 - eps`. Each symbol
//! kind with an explicit inverse is solved directly; chains fall back to a
//! winding-count quadtree.

mod contour;
mod roots;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{require_interior, DiskPoint};
use crate::symbols::{SymbolKind, SymbolMap, ATOMIC_CUTOFF};

pub use contour::{preimages_by_subdivision, winding_count, MAX_DEPTH, MAX_NUDGES, NEAR_ZERO};
pub use roots::aberth_roots;

/// Default truncation `eps` for a single counting sample.
pub const DEFAULT_EPS: f64 = 1e-3;
/// Smallest accepted truncation.
pub const MIN_EPS: f64 = 1e-6;
/// Largest accepted truncation.
pub const MAX_EPS: f64 = 1e-1;

/// Roots closer than this are merged into one multiple root.
const CLUSTER_TOL: f64 = 1e-5;

/// A solution of `phi(z) = w` with its multiplicity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preimage {
    pub point: DiskPoint,
    pub multiplicity: usize,
}

impl Preimage {
    pub fn new(z: Complex64, multiplicity: usize) -> Self {
        Preimage {
            point: z.into(),
            multiplicity,
        }
    }

    pub fn z(&self) -> Complex64 {
        self.point.to_complex()
    }
}

/// Preimage data and counting functions at one target point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountingSample {
    pub target: DiskPoint,
    pub preimages: Vec<Preimage>,
    /// Preimages counted with multiplicity.
    pub n: usize,
    /// Number of distinct preimages.
    pub distinct: usize,
    /// `sum m_j log(1/|z_j|)`; infinite when `w = phi(0)`.
    pub nevanlinna: f64,
    /// `N_phi(w) / log(1/|w|)`; `None` at `w = 0`.
    pub tau: Option<f64>,
    /// Search radius `1 - eps`.
    pub truncation: f64,
    /// Upper bound on the part of `N_phi(w)` carried by preimages beyond the
    /// search radius; `None` when no bound is available.
    pub truncation_error: Option<f64>,
}

fn check_eps(eps: f64) -> Result<f64> {
    if !(MIN_EPS..=MAX_EPS).contains(&eps) {
        return Err(Error::validation(
            "eps",
            format!("must lie in [{MIN_EPS:e}, {MAX_EPS:e}], got {eps}"),
        ));
    }
    Ok(1.0 - eps)
}

fn sort_points(pre: &mut [Preimage]) {
    pre.sort_by(|a, b| a.point.re.total_cmp(&b.point.re).then(a.point.im.total_cmp(&b.point.im)));
}

/// All solutions of `phi(z) = w` with `|z| <= 1 - eps`, sorted by point.
pub fn preimages(phi: &SymbolMap, w: Complex64, eps: f64) -> Result<Vec<Preimage>> {
    require_interior(w, "w")?;
    let radius = check_eps(eps)?;
    let mut found = solve(phi, w, radius)?;
    sort_points(&mut found);
    Ok(found)
}

fn within(z: Complex64, radius: f64) -> bool {
    z.norm() <= radius
}

fn solve(phi: &SymbolMap, w: Complex64, radius: f64) -> Result<Vec<Preimage>> {
    let single = |z: Complex64| {
        if within(z, radius) {
            vec![Preimage::new(z, 1)]
        } else {
            Vec::new()
        }
    };
    Ok(match phi.kind() {
        SymbolKind::Identity => single(w),
        SymbolKind::Scaled(c) => single(w / *c),
        SymbolKind::Mobius { a, rotation } => {
            let u = w / *rotation;
            single((*a - u) / (Complex64::new(1.0, 0.0) - a.conj() * u))
        }
        SymbolKind::Power(n) => power_roots(w, *n, radius),
        SymbolKind::Blaschke { zeros, rotation } => blaschke_roots(phi, zeros, *rotation, w, radius),
        SymbolKind::Crescent(map) => {
            if map.region.contains(w) && map.preimage_defect(w) >= 1.0 - radius * radius {
                vec![Preimage::new(map.inverse_unchecked(w), 1)]
            } else {
                Vec::new()
            }
        }
        SymbolKind::AtomicSingular => atomic_roots(w, radius).collect(),
        SymbolKind::Chain(_) => preimages_by_subdivision(phi, w, radius)?,
    })
}

fn power_roots(w: Complex64, n: u32, radius: f64) -> Vec<Preimage> {
    if w.norm() == 0.0 {
        return vec![Preimage::new(Complex64::new(0.0, 0.0), n as usize)];
    }
    let r = w.norm().powf(1.0 / n as f64);
    if r > radius {
        return Vec::new();
    }
    let t = w.arg();
    (0..n)
        .map(|k| Preimage::new(Complex64::from_polar(r, (t + 2.0 * PI * k as f64) / n as f64), 1))
        .collect()
}

/// Roots of `rot prod (z - a) - w prod (1 - conj(a) z)`, polished against
/// `phi` itself and grouped into multiple roots.
fn blaschke_roots(
    phi: &SymbolMap,
    zeros: &[Complex64],
    rotation: Complex64,
    w: Complex64,
    radius: f64,
) -> Vec<Preimage> {
    let one = Complex64::new(1.0, 0.0);
    let num: Vec<_> = zeros.iter().map(|&a| (-a, one)).collect();
    let den: Vec<_> = zeros.iter().map(|&a| (one, -a.conj())).collect();
    let p = roots::poly_from_linear_factors(&num);
    let q = roots::poly_from_linear_factors(&den);
    let coeffs: Vec<Complex64> = p.iter().zip(&q).map(|(&pc, &qc)| rotation * pc - w * qc).collect();
    let raw: Vec<Complex64> = aberth_roots(&coeffs)
        .into_iter()
        .map(|z| {
            if z.norm() < 1.0 - 1e-12 {
                contour::newton_polish(phi, w, z, 1).0
            } else {
                z
            }
        })
        .collect();
    cluster(phi, w, raw)
        .into_iter()
        .filter(|p| within(p.z(), radius))
        .collect()
}

fn cluster(phi: &SymbolMap, w: Complex64, mut raw: Vec<Complex64>) -> Vec<Preimage> {
    let mut out = Vec::new();
    while let Some(z) = raw.pop() {
        let (close, far): (Vec<_>, Vec<_>) = raw.iter().partition(|&&y| (y - z).norm() < CLUSTER_TOL);
        raw = far;
        let size = close.len() + 1;
        let center = (close.iter().sum::<Complex64>() + z) / size as f64;
        let mult = if size > 1 && center.norm() < 1.0 - 1e-6 {
            contour::local_multiplicity(phi, w, center, CLUSTER_TOL * 10.0).unwrap_or(size)
        } else {
            size
        };
        out.push(Preimage::new(center, mult.max(1)));
    }
    out
}

/// Preimages of `exp((z + 1)/(z - 1))`: with `L = ln|w| + i (arg w + 2 pi k)`,
/// `z_k = (L + 1)/(L - 1)` and `1 - |z_k|^2 = -4a / ((a - 1)^2 + b^2)`.
fn atomic_roots(w: Complex64, radius: f64) -> impl Iterator<Item = Preimage> {
    atomic_branches(w, radius).map(move |b| {
        let l = Complex64::new(w.norm().ln(), b);
        Preimage::new((l + 1.0) / (l - 1.0), 1)
    })
}

/// The imaginary parts `b = arg w + 2 pi k` of branches whose preimage lies
/// in `|z| <= radius` and respects the evaluation cutoff.
fn atomic_branches(w: Complex64, radius: f64) -> impl Iterator<Item = f64> {
    let (kmin, kmax, t) = atomic_branch_range(w, radius).unwrap_or((1, 0, 0.0));
    (kmin..=kmax).map(move |k| t + 2.0 * PI * k as f64)
}

fn atomic_branch_range(w: Complex64, radius: f64) -> Option<(i64, i64, f64)> {
    if w.norm() == 0.0 {
        return None;
    }
    let a = w.norm().ln();
    let t = w.arg();
    let defect = 1.0 - radius * radius;
    // (a-1)^2 + b^2 <= -4a/defect; |1 - z| = 2/|L - 1| >= cutoff.
    let bound = (-4.0 * a / defect).min((2.0 / ATOMIC_CUTOFF).powi(2)) - (a - 1.0).powi(2);
    if bound < 0.0 {
        return None;
    }
    let bmax = bound.sqrt();
    let kmin = ((-bmax - t) / (2.0 * PI)).ceil() as i64;
    let kmax = ((bmax - t) / (2.0 * PI)).floor() as i64;
    (kmin <= kmax).then_some((kmin, kmax, t))
}

/// Radial intervals `[r0, r1]` on the ray `arg w = theta` whose union, counted
/// with overlap, is `n_phi` for preimages in `|z| <= radius`. Available only
/// for symbols with explicit branch geometry.
pub(crate) fn ray_intervals(phi: &SymbolMap, theta: f64, radius: f64) -> Option<Vec<(f64, f64)>> {
    if !matches!(phi.kind(), SymbolKind::AtomicSingular) {
        return None;
    }
    let t = Complex64::from_polar(1.0, theta).arg();
    let defect = 1.0 - radius * radius;
    // (a-1)^2 + b^2 <= -4a/defect  <=>  a^2 + B a + C <= 0, B = 4/defect - 2, C = 1 + b^2.
    let half_b = 2.0 / defect - 1.0;
    let bmax = (half_b * half_b - 1.0).max(0.0).sqrt();
    let kmin = ((-bmax - t) / (2.0 * PI)).ceil() as i64;
    let kmax = ((bmax - t) / (2.0 * PI)).floor() as i64;
    let mut out = Vec::new();
    for k in kmin..=kmax {
        let b = t + 2.0 * PI * k as f64;
        let c = 1.0 + b * b;
        let disc = half_b * half_b - c;
        if disc < 0.0 {
            continue;
        }
        let a_lo = -half_b - disc.sqrt();
        let a_hi = c / a_lo;
        let r1 = a_hi.exp();
        if r1 < 1e-12 {
            continue;
        }
        out.push((a_lo.exp(), r1));
    }
    Some(out)
}

/// Bound on `sum log(1/|z_k|)` over atomic branches beyond `|b| > bmax`.
fn atomic_tail(w: Complex64, radius: f64) -> f64 {
    let a = w.norm().ln();
    let defect = 1.0 - radius * radius;
    let bmax = (-4.0 * a / defect - (a - 1.0).powi(2)).max(0.0).sqrt().max(PI);
    // log(1/|z|) <= d / (2 (1 - d)) with d <= defect; sum_{b > B} 1/b^2 <= 1/B^2 + 1/(2 pi B).
    let per = -4.0 * a / (2.0 * (1.0 - defect));
    2.0 * per * (1.0 / (bmax * bmax) + 1.0 / (2.0 * PI * bmax))
}

/// Counting functions at `w` with search radius `1 - eps`.
pub fn counting_sample(phi: &SymbolMap, w: Complex64, eps: f64) -> Result<CountingSample> {
    let pre = preimages(phi, w, eps)?;
    let radius = 1.0 - eps;
    let n: usize = pre.iter().map(|p| p.multiplicity).sum();
    let nevanlinna = pre
        .iter()
        .map(|p| p.multiplicity as f64 * -p.z().norm().ln())
        .sum::<f64>()
        .max(0.0);
    let tau = (w.norm() > 0.0).then(|| nevanlinna / -w.norm().ln());
    let truncation_error = match phi.kind() {
        SymbolKind::AtomicSingular => Some(if w.norm() == 0.0 { 0.0 } else { atomic_tail(w, radius) }),
        _ => phi
            .valence_bound()
            .map(|v| v.saturating_sub(n) as f64 * -radius.ln()),
    };
    Ok(CountingSample {
        target: w.into(),
        distinct: pre.len(),
        preimages: pre,
        n,
        nevanlinna,
        tau,
        truncation: radius,
        truncation_error,
    })
}

/// `n_phi(w)` with multiplicity. The lune symbol uses exact region membership;
/// the atomic symbol counts branches without constructing preimages.
pub fn multiplicity(phi: &SymbolMap, w: Complex64, eps: f64) -> Result<usize> {
    require_interior(w, "w")?;
    let radius = check_eps(eps)?;
    count_within(phi, w, radius)
}

/// Unvalidated form of [`multiplicity`] for an arbitrary search radius.
pub(crate) fn count_within(phi: &SymbolMap, w: Complex64, radius: f64) -> Result<usize> {
    match phi.kind() {
        SymbolKind::Crescent(map) => Ok(map.region.contains(w) as usize),
        SymbolKind::AtomicSingular => Ok(atomic_branch_range(w, radius)
            .map_or(0, |(lo, hi, _)| (hi - lo + 1) as usize)),
        _ => Ok(solve(phi, w, radius)?.iter().map(|p| p.multiplicity).sum()),
    }
}

/// Whether `w` has a preimage; exact region membership for the lune symbol.
pub fn in_image(phi: &SymbolMap, w: Complex64, eps: f64) -> Result<bool> {
    multiplicity(phi, w, eps).map(|n| n >= 1)
}
