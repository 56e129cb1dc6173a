//! Finite families of unit-norm probes standing in for the unit sphere.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{dirichlet_norm, peak_function, DirichletFunction, KernelKind, KernelSpec};
use crate::error::{Error, Result};

/// Anything that can be evaluated with its derivative and has a Dirichlet norm.
pub trait Probe: Sync {
    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64);
    fn norm(&self) -> f64;
    fn label(&self) -> String;

    fn value(&self, z: Complex64) -> Complex64 {
        self.eval_with_derivative(z).0
    }

    fn derivative(&self, z: Complex64) -> Complex64 {
        self.eval_with_derivative(z).1
    }
}

impl Probe for DirichletFunction {
    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        DirichletFunction::eval_with_derivative(self, z)
    }

    fn norm(&self) -> f64 {
        dirichlet_norm(self)
    }

    fn label(&self) -> String {
        self.label.clone()
    }
}

impl Probe for KernelSpec {
    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        KernelSpec::eval_with_derivative(self, z)
    }

    fn norm(&self) -> f64 {
        self.dirichlet_norm()
    }

    fn label(&self) -> String {
        let a = self.anchor;
        match self.kind {
            KernelKind::DirichletKernel => format!("K({}{:+}i)", a.re, a.im),
            KernelKind::NormalizedBergman => format!("k({}{:+}i)", a.re, a.im),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FamilyMember {
    Polynomial { f: DirichletFunction, scale: f64 },
    Kernel { k: KernelSpec, scale: f64 },
}

impl Probe for FamilyMember {
    fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let ((v, d), s) = match self {
            FamilyMember::Polynomial { f, scale } => (f.eval_with_derivative(z), *scale),
            FamilyMember::Kernel { k, scale } => (k.eval_with_derivative(z), *scale),
        };
        (v * s, d * s)
    }

    fn norm(&self) -> f64 {
        match self {
            FamilyMember::Polynomial { f, scale } => dirichlet_norm(f) * scale,
            FamilyMember::Kernel { k, scale } => k.dirichlet_norm() * scale,
        }
    }

    fn label(&self) -> String {
        match self {
            FamilyMember::Polynomial { f, .. } => f.label.clone(),
            FamilyMember::Kernel { k, .. } => Probe::label(k),
        }
    }
}

/// Which probes a [`TestFamily`] contains.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FamilyConfig {
    /// Basis elements `e_1 ..= e_monomials`.
    pub monomials: usize,
    pub random_polynomials: usize,
    pub random_degree: usize,
    pub seed: u64,
    /// Peak functions at `peak_angles` equally spaced boundary points.
    pub peak_angles: usize,
    pub peak_powers: Vec<usize>,
    /// Bergman-kernel probes at `|z| = 1 - 2^{-j}`, `j = 1 ..= kernel_levels`.
    pub kernel_levels: usize,
    pub kernel_angles: usize,
    pub normalize: bool,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        FamilyConfig {
            monomials: 40,
            random_polynomials: 100,
            random_degree: 12,
            seed: 7,
            peak_angles: 4,
            peak_powers: vec![1, 4, 16, 64],
            kernel_levels: 4,
            kernel_angles: 8,
            normalize: true,
        }
    }
}

/// A finite probe family; when normalized every member has unit Dirichlet norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestFamily {
    pub members: Vec<FamilyMember>,
    pub normalized: bool,
}

/// Polynomial of the given degree with independent uniform coefficients in the
/// unit square, normalized to Dirichlet norm one.
pub fn random_polynomial(rng: &mut ChaCha8Rng, degree: usize) -> DirichletFunction {
    loop {
        let coeffs: Vec<Complex64> = (0..=degree)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let f = DirichletFunction::new(coeffs, format!("random(deg {degree})")).expect("finite coefficients");
        if let Ok(g) = f.normalized() {
            return g;
        }
    }
}

impl TestFamily {
    pub fn new(config: &FamilyConfig) -> Result<Self> {
        let mut polys = Vec::new();
        for n in 1..=config.monomials {
            polys.push(DirichletFunction::basis(n));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for i in 0..config.random_polynomials {
            let mut f = random_polynomial(&mut rng, config.random_degree);
            f.label = format!("random[{i}]");
            polys.push(f);
        }
        for j in 0..config.peak_angles {
            let zeta = Complex64::from_polar(1.0, 2.0 * PI * j as f64 / config.peak_angles as f64);
            for &k in &config.peak_powers {
                polys.push(peak_function(zeta, k)?);
            }
        }
        let mut members: Vec<FamilyMember> = polys
            .into_iter()
            .map(|f| FamilyMember::Polynomial { f, scale: 1.0 })
            .collect();
        for level in 1..=config.kernel_levels {
            let r = 1.0 - 0.5f64.powi(level as i32);
            for j in 0..config.kernel_angles {
                let z = Complex64::from_polar(r, 2.0 * PI * j as f64 / config.kernel_angles.max(1) as f64);
                members.push(FamilyMember::Kernel {
                    k: KernelSpec::new(z, KernelKind::NormalizedBergman)?,
                    scale: 1.0,
                });
            }
        }
        if members.is_empty() {
            return Err(Error::validation("family", "selection produced no members"));
        }
        let mut fam = TestFamily {
            members,
            normalized: false,
        };
        if config.normalize {
            fam.normalize();
        }
        Ok(fam)
    }

    /// Rescales every member to unit norm.
    pub fn normalize(&mut self) {
        for m in &mut self.members {
            let n = m.norm();
            match m {
                FamilyMember::Polynomial { scale, .. } | FamilyMember::Kernel { scale, .. } => *scale /= n,
            }
        }
        self.normalized = true;
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

impl Default for TestFamily {
    fn default() -> Self {
        TestFamily::new(&FamilyConfig::default()).expect("default family is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_family_is_unit_norm() {
        let fam = TestFamily::default();
        assert_eq!(fam.len(), 40 + 100 + 16 + 32);
        for m in &fam.members {
            assert!((m.norm() - 1.0).abs() < 1e-8, "{}", m.label());
        }
    }

    #[test]
    fn family_is_reproducible() {
        assert_eq!(TestFamily::default(), TestFamily::default());
    }

    #[test]
    fn bergman_probe_scaling() {
        // ∫ |k_z|^2 dA = pi for every z: the probes carry unit Bergman mass.
        let q = super::super::build_quadrature(200, 4096, 1.0 - 1e-12).unwrap();
        let mut ratios = Vec::new();
        for r in [0.0, 0.5, 0.9, 0.99] {
            let k = KernelSpec::new(Complex64::new(r, 0.0), KernelKind::NormalizedBergman).unwrap();
            let mass = q.integrate(|w| k.eval_with_derivative(w).0.norm_sqr());
            ratios.push(mass / PI);
        }
        for r in &ratios {
            assert!((0.99..=1.01).contains(r), "{ratios:?}");
        }
    }
}
