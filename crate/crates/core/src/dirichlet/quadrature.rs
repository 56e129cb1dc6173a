//! Tensor quadrature on the disk and the jump-resolving grid for `n_phi`-weighted integrals.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counting::{count_within, ray_intervals};
use crate::error::{Error, Result};
use crate::numerics::CompensatedSum;
use crate::symbols::SymbolMap;

pub const DEFAULT_RADIAL_ORDER: usize = 160;
pub const DEFAULT_ANGULAR_ORDER: usize = 512;
pub const DEFAULT_TRUNCATION: f64 = 1.0 - 1e-6;

const CHUNK: usize = 4096;

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, t);
            dp = d;
            let dt = p / d;
            t -= dt;
            if dt.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, t);
        dp = if d != 0.0 { d } else { dp };
        let wi = 2.0 / ((1.0 - t * t) * dp * dp);
        x[i] = -t;
        x[n - 1 - i] = t;
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, t: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, t);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Sum of `f` over `items` in fixed chunks, each compensated, merged in order.
pub(crate) fn par_sum<T: Sync>(items: &[T], f: impl Fn(&T) -> f64 + Sync) -> f64 {
    items
        .par_chunks(CHUNK)
        .map(|chunk| chunk.iter().map(&f).collect::<CompensatedSum>())
        .collect::<Vec<_>>()
        .into_iter()
        .fold(CompensatedSum::new(), CompensatedSum::merge)
        .value()
}

/// Gauss-Legendre in radius on `[0, truncation]` times the trapezoid rule in angle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiskQuadrature {
    pub radial_order: usize,
    pub angular_order: usize,
    pub radial_truncation: f64,
    nodes: Vec<(Complex64, f64)>,
}

impl DiskQuadrature {
    pub fn nodes(&self) -> &[(Complex64, f64)] {
        &self.nodes
    }

    pub fn integrate(&self, f: impl Fn(Complex64) -> f64 + Sync) -> f64 {
        par_sum(&self.nodes, |&(z, w)| w * f(z))
    }

    /// Like [`integrate`](Self::integrate) for integrands that may fail.
    pub fn try_integrate(&self, f: impl Fn(Complex64) -> Result<f64> + Sync) -> Result<f64> {
        let parts: Vec<Result<CompensatedSum>> = self
            .nodes
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut s = CompensatedSum::new();
                for &(z, w) in chunk {
                    s.add(w * f(z)?);
                }
                Ok(s)
            })
            .collect();
        let mut total = CompensatedSum::new();
        for p in parts {
            total = total.merge(p?);
        }
        Ok(total.value())
    }
}

pub fn build_quadrature(radial_order: usize, angular_order: usize, radial_truncation: f64) -> Result<DiskQuadrature> {
    if radial_order < 4 {
        return Err(Error::validation("radial_order", format!("must be at least 4, got {radial_order}")));
    }
    if angular_order < 4 {
        return Err(Error::validation("angular_order", format!("must be at least 4, got {angular_order}")));
    }
    if !(radial_truncation > 0.9 && radial_truncation < 1.0) {
        return Err(Error::validation(
            "radial_truncation",
            format!("must lie in (0.9, 1), got {radial_truncation}"),
        ));
    }
    let (x, w) = gauss_legendre(radial_order);
    let dt = 2.0 * PI / angular_order as f64;
    let mut nodes = Vec::with_capacity(radial_order * angular_order);
    for (xi, wi) in x.iter().zip(&w) {
        let r = 0.5 * radial_truncation * (xi + 1.0);
        let weight = wi * 0.5 * radial_truncation * r * dt;
        for j in 0..angular_order {
            nodes.push((Complex64::from_polar(r, j as f64 * dt), weight));
        }
    }
    Ok(DiskQuadrature {
        radial_order,
        angular_order,
        radial_truncation,
        nodes,
    })
}

impl Default for DiskQuadrature {
    fn default() -> Self {
        build_quadrature(DEFAULT_RADIAL_ORDER, DEFAULT_ANGULAR_ORDER, DEFAULT_TRUNCATION).expect("defaults are valid")
    }
}

/// Resolution of the target-side grid used for `n_phi`-weighted integrals.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetGridSpec {
    /// Rays in angle.
    pub angular: usize,
    /// Uniform radial panels on `[0, 0.9]`.
    pub panels: usize,
    /// Gauss-Legendre order on each piece where `n_phi` is constant.
    pub order: usize,
}

impl Default for TargetGridSpec {
    fn default() -> Self {
        TargetGridSpec {
            angular: 256,
            panels: 32,
            order: 10,
        }
    }
}

/// Outermost radius of the target grid.
const GRID_EDGE: f64 = 1.0 - 1e-11;
/// Jumps located by bisection per panel before falling back to node-wise counts.
const MAX_JUMPS: usize = 16;
/// Gauss order on pieces shorter than a sixteenth of a uniform panel.
const SHORT_ORDER: usize = 4;

/// Quadrature for `∫ g(w) n_phi(w) dA(w)`: polar rays whose radial panels are
/// split wherever `n_phi` changes, so each Gauss piece sees a constant count.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetGrid {
    /// Search radius used for counting.
    pub truncation: f64,
    pub spec: TargetGridSpec,
    /// `(w, area weight, n_phi(w))`; nodes with `n_phi = 0` are omitted.
    nodes: Vec<(Complex64, f64, usize)>,
}

impl TargetGrid {
    pub fn nodes(&self) -> &[(Complex64, f64, usize)] {
        &self.nodes
    }

    /// `∫ g n_phi dA`.
    pub fn integrate(&self, g: impl Fn(Complex64) -> f64 + Sync) -> f64 {
        par_sum(&self.nodes, |&(w, a, n)| a * n as f64 * g(w))
    }

    /// `∫_{n_phi > k} g n_phi dA`.
    pub fn integrate_above(&self, k: usize, g: impl Fn(Complex64) -> f64 + Sync) -> f64 {
        par_sum(&self.nodes, |&(w, a, n)| if n > k { a * n as f64 * g(w) } else { 0.0 })
    }

    /// `∫ g n_phi^alpha dA`.
    pub fn integrate_power(&self, alpha: f64, g: impl Fn(Complex64) -> f64 + Sync) -> f64 {
        par_sum(&self.nodes, |&(w, a, n)| a * (n as f64).powf(alpha) * g(w))
    }

    /// `∫_{n_phi = j} g dA` for every count `j` present on the grid.
    pub fn moments(&self, g: impl Fn(Complex64) -> f64 + Sync) -> BTreeMap<usize, f64> {
        let parts: Vec<BTreeMap<usize, CompensatedSum>> = self
            .nodes
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut m: BTreeMap<usize, CompensatedSum> = BTreeMap::new();
                for &(w, a, n) in chunk {
                    m.entry(n).or_default().add(a * g(w));
                }
                m
            })
            .collect();
        let mut total: BTreeMap<usize, CompensatedSum> = BTreeMap::new();
        for part in parts {
            for (n, s) in part {
                let e = total.entry(n).or_default();
                *e = e.merge(s);
            }
        }
        total.into_iter().map(|(n, s)| (n, s.value())).collect()
    }

    pub fn max_count(&self) -> usize {
        self.nodes.iter().map(|n| n.2).max().unwrap_or(0)
    }
}

fn breakpoints(panels: usize) -> Vec<f64> {
    let mut b: Vec<f64> = (0..panels).map(|j| 0.9 * j as f64 / panels as f64).collect();
    let mut gap: f64 = 0.1;
    while gap > 1.0 - GRID_EDGE {
        b.push(1.0 - gap);
        gap *= 10f64.powf(-0.5);
    }
    b.push(GRID_EDGE);
    b
}

/// Builds the target grid for `phi` with preimages counted in `|z| <= truncation`.
pub fn target_grid(phi: &SymbolMap, truncation: f64, spec: TargetGridSpec) -> Result<TargetGrid> {
    if spec.angular < 4 || spec.panels < 1 || spec.order < 2 {
        return Err(Error::validation("target_grid", "angular >= 4, panels >= 1, order >= 2 required"));
    }
    let bps = breakpoints(spec.panels);
    let (x, w) = gauss_legendre(spec.order);
    let (xs, ws) = gauss_legendre(SHORT_ORDER.min(spec.order));
    let short = 0.9 / spec.panels as f64 / 16.0;
    let dt = 2.0 * PI / spec.angular as f64;
    let rays: Vec<Result<Vec<(Complex64, f64, usize)>>> = (0..spec.angular)
        .into_par_iter()
        .map(|j| {
            let dir = Complex64::from_polar(1.0, j as f64 * dt);
            let count = |r: f64| count_within(phi, dir * r, truncation);
            let mut out = Vec::new();
            let mut emit = |r0: f64, r1: f64, n: usize| {
                if n == 0 || r1 <= r0 {
                    return;
                }
                let h = 0.5 * (r1 - r0);
                let (x, w) = if r1 - r0 < short { (&xs, &ws) } else { (&x, &w) };
                for (xi, wi) in x.iter().zip(w) {
                    let r = r0 + h * (xi + 1.0);
                    out.push((dir * r, wi * h * r * dt, n));
                }
            };
            if let Some(ints) = ray_intervals(phi, j as f64 * dt, truncation) {
                let mut cuts: Vec<f64> = bps.clone();
                cuts.extend(ints.iter().flat_map(|&(a, b)| [a, b]).filter(|&r| r > 0.0 && r < GRID_EDGE));
                cuts.sort_by(f64::total_cmp);
                cuts.dedup();
                for pair in cuts.windows(2) {
                    let mid = 0.5 * (pair[0] + pair[1]);
                    let n = ints.iter().filter(|&&(a, b)| a <= mid && mid <= b).count();
                    emit(pair[0], pair[1], n);
                }
                return Ok(out);
            }
            let mut left = count(bps[0])?;
            for pair in bps.windows(2) {
                let (a, b) = (pair[0], pair[1]);
                let nb = count(b)?;
                ray_panel(a, b, left, nb, &count, &mut emit)?;
                left = nb;
            }
            Ok(out)
        })
        .collect();
    let mut nodes = Vec::new();
    for r in rays {
        nodes.extend(r?);
    }
    Ok(TargetGrid {
        truncation,
        spec,
        nodes,
    })
}

fn ray_panel(
    a: f64,
    b: f64,
    na: usize,
    nb: usize,
    count: &impl Fn(f64) -> Result<usize>,
    emit: &mut impl FnMut(f64, f64, usize),
) -> Result<()> {
    let (mut start, mut n_start) = (a, na);
    for _ in 0..MAX_JUMPS {
        if n_start == nb {
            emit(start, b, n_start);
            return Ok(());
        }
        // Bisect for the first change of the count after `start`.
        let (mut lo, mut hi) = (start, b);
        let mut n_hi = nb;
        while hi - lo > 1e-13 * hi {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let nm = count(mid)?;
            if nm == n_start {
                lo = mid;
            } else {
                hi = mid;
                n_hi = nm;
            }
        }
        emit(start, lo, n_start);
        start = hi;
        n_start = n_hi;
    }
    // Too many jumps: count at every node of a refined split.
    let pieces = 64;
    let step = (b - start) / pieces as f64;
    for p in 0..pieces {
        let r0 = start + p as f64 * step;
        let r1 = r0 + step;
        let n = count(0.5 * (r0 + r1))?;
        emit(r0, r1, n);
    }
    Ok(())
}
