//! Composition-operator functionals: norms, change of variables, peak ratios,
//! boundedness and tail estimates.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::family::{Probe, TestFamily};
use super::quadrature::{target_grid, DiskQuadrature, TargetGrid, TargetGridSpec};
use super::{dirichlet_norm, DirichletFunction};
use crate::error::{Error, Result};
use crate::symbols::SymbolMap;

/// Label attached to every supremum that is estimated over a finite family.
pub const FAMILY_LABEL: &str = "family lower estimate";

/// `||C_phi f|| = sqrt(|f(phi(0))|^2 + ∫ |f'(phi)|^2 |phi'|^2 dA)` by quadrature.
pub fn composition_norm(phi: &SymbolMap, f: &impl Probe, q: &DiskQuadrature) -> Result<f64> {
    let at0 = f.value(phi.eval(Complex64::new(0.0, 0.0))?);
    let integral = pullback_energy(phi, f, q)?;
    Ok((at0.norm_sqr() + integral).sqrt())
}

fn pullback_energy(phi: &SymbolMap, f: &(impl Probe + ?Sized), q: &DiskQuadrature) -> Result<f64> {
    q.try_integrate(|z| {
        let (v, d) = phi.eval_with_derivative(z)?;
        Ok((f.derivative(v) * d).norm_sqr())
    })
}

/// Both sides of `∫_D |(f∘phi)'|^2 dA = ∫ |f'|^2 n_phi dA`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChangeOfVariables {
    /// Source-side integral over `|z| < truncation`.
    pub lhs: f64,
    /// Target-side integral with preimages counted in `|z| <= truncation`.
    pub rhs: f64,
    /// `|lhs - rhs| / max(|lhs|, |rhs|)`.
    pub residual: f64,
}

/// Compares the source-side quadrature with an independent target-side grid.
pub fn change_of_variables_residual(
    phi: &SymbolMap,
    f: &impl Probe,
    q: &DiskQuadrature,
    grid: TargetGridSpec,
) -> Result<ChangeOfVariables> {
    let lhs = pullback_energy(phi, f, q)?;
    let g = target_grid(phi, q.radial_truncation, grid)?;
    let rhs = g.integrate(|w| f.derivative(w).norm_sqr());
    let scale = lhs.abs().max(rhs.abs());
    let residual = if scale == 0.0 { 0.0 } else { (lhs - rhs).abs() / scale };
    Ok(ChangeOfVariables { lhs, rhs, residual })
}

/// `f_k(z) = ((1 + conj(zeta) z) / 2)^k` expanded into coefficients.
pub fn peak_function(zeta: Complex64, k: usize) -> Result<DirichletFunction> {
    if (zeta.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::validation("zeta", format!("{zeta} is not on the unit circle")));
    }
    if k < 1 {
        return Err(Error::validation("k", "must be at least 1"));
    }
    let zc = zeta.conj();
    // C(k, n) / 2^k built multiplicatively from 2^{-k}.
    let mut binom = 0.5f64.powi(k as i32);
    let mut coeffs = Vec::with_capacity(k + 1);
    let mut zpow = Complex64::new(1.0, 0.0);
    for n in 0..=k {
        coeffs.push(zpow * binom);
        binom *= (k - n) as f64 / (n + 1) as f64;
        zpow *= zc;
    }
    DirichletFunction::new(coeffs, format!("peak(k={k}, zeta={}{:+}i)", zeta.re, zeta.im))
}

/// One entry of a peak-function ratio table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeakRatio {
    pub k: usize,
    /// `||C_phi f_k||^2 / ||f_k||^2`.
    pub ratio: f64,
    /// `ratio^{1/k}`.
    pub root: f64,
}

/// Peak ratios `r_k` for increasing `ks`, with the composition energy taken on
/// the target side: `|f_k(phi(0))|^2 + ∫ |f_k'|^2 n_phi dA`.
pub fn peak_ratio_sequence(phi: &SymbolMap, zeta: Complex64, ks: &[usize], grid: &TargetGrid) -> Result<Vec<PeakRatio>> {
    if ks.windows(2).any(|p| p[1] <= p[0]) {
        return Err(Error::validation("ks", "must be strictly increasing"));
    }
    let w0 = phi.eval(Complex64::new(0.0, 0.0))?;
    let zc = zeta.conj();
    ks.iter()
        .map(|&k| {
            let f = peak_function(zeta, k)?;
            let base = |w: Complex64| (Complex64::new(1.0, 0.0) + zc * w) * 0.5;
            let at0 = base(w0).powu(k as u32).norm_sqr();
            let energy = grid.integrate(|w| (base(w).powu(k as u32 - 1) * (0.5 * k as f64)).norm_sqr());
            let ratio = (at0 + energy) / dirichlet_norm(&f).powi(2);
            Ok(PeakRatio {
                k,
                ratio,
                root: ratio.powf(1.0 / k as f64),
            })
        })
        .collect()
}

/// `∫_{n_phi = j} |f'|^2 dA` per count `j`, for every family member.
fn family_moments(grid: &TargetGrid, family: &TestFamily) -> Vec<BTreeMap<usize, f64>> {
    family
        .members
        .iter()
        .map(|m| grid.moments(|w| m.derivative(w).norm_sqr()))
        .collect()
}

fn require_normalized(family: &TestFamily) -> Result<()> {
    if !family.normalized {
        return Err(Error::validation("family", "must be normalized"));
    }
    Ok(())
}

/// Family estimate of the Carleson bound at two truncations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundednessEstimate {
    pub coarse_eps: f64,
    pub fine_eps: f64,
    /// `max_f ∫ |f'|^2 n_phi dA` with preimages in `|z| <= 1 - coarse_eps`.
    pub coarse: f64,
    /// Same with `1 - fine_eps`; this is the reported estimate.
    pub fine: f64,
    pub growth: f64,
    /// Set when `growth >= 2`.
    pub divergence_suspected: bool,
    pub argmax: String,
    pub label: String,
}

/// Boundedness estimate at truncation `eps` and `eps / 10`.
pub fn boundedness_estimate(
    phi: &SymbolMap,
    family: &TestFamily,
    eps: f64,
    grid: TargetGridSpec,
) -> Result<BoundednessEstimate> {
    Ok(boundedness_and_tails(phi, family, eps, grid, &[])?.0)
}

/// [`boundedness_estimate`] together with [`tail_functionals`] at the fine truncation.
pub fn boundedness_and_tails(
    phi: &SymbolMap,
    family: &TestFamily,
    eps: f64,
    grid: TargetGridSpec,
    ks: &[usize],
) -> Result<(BoundednessEstimate, Vec<f64>)> {
    require_normalized(family)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::validation("eps", format!("must lie in (0,1), got {eps}")));
    }
    if ks.contains(&0) {
        return Err(Error::validation("k", "must be at least 1"));
    }
    type Pass = (f64, usize, Vec<BTreeMap<usize, f64>>);
    let best = |e: f64| -> Result<Pass> {
        let g = target_grid(phi, 1.0 - e, grid)?;
        let moments = family_moments(&g, family);
        let totals: Vec<f64> = moments
            .iter()
            .map(|m| m.iter().map(|(&n, &v)| n as f64 * v).sum())
            .collect();
        let (v, i) = argmax(&totals);
        Ok((v, i, moments))
    };
    let (coarse, _, _) = best(eps)?;
    let fine_eps = eps / 10.0;
    let (fine, idx, moments) = best(fine_eps)?;
    let growth = if coarse > 0.0 {
        fine / coarse
    } else if fine > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    let estimate = BoundednessEstimate {
        coarse_eps: eps,
        fine_eps,
        coarse,
        fine,
        growth,
        divergence_suspected: growth >= 2.0,
        argmax: family.members.get(idx).map(|m| m.label()).unwrap_or_default(),
        label: FAMILY_LABEL.into(),
    };
    Ok((estimate, tails_from_moments(&moments, ks)))
}

fn tails_from_moments(moments: &[BTreeMap<usize, f64>], ks: &[usize]) -> Vec<f64> {
    ks.iter()
        .map(|&k| {
            let per: Vec<f64> = moments
                .iter()
                .map(|m| m.range(k + 1..).map(|(&n, &v)| n as f64 * v).sum())
                .collect();
            argmax(&per).0
        })
        .collect()
}

fn argmax(values: &[f64]) -> (f64, usize) {
    values
        .iter()
        .enumerate()
        .fold((0.0, 0), |(best, bi), (i, &v)| if v > best { (v, i) } else { (best, bi) })
}

/// `max_f ∫_{n_phi > k} |f'|^2 n_phi dA` over the family.
pub fn tail_functional(k: usize, family: &TestFamily, grid: &TargetGrid) -> Result<f64> {
    Ok(tail_functionals(&[k], family, grid)?[0])
}

/// [`tail_functional`] for several `k` from one pass over the family.
pub fn tail_functionals(ks: &[usize], family: &TestFamily, grid: &TargetGrid) -> Result<Vec<f64>> {
    require_normalized(family)?;
    if ks.contains(&0) {
        return Err(Error::validation("k", "must be at least 1"));
    }
    Ok(tails_from_moments(&family_moments(grid, family), ks))
}
