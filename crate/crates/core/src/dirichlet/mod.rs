//! Dirichlet space: norms, inner products, reproducing kernels, test families
//! and the composition-operator functionals built on them.
//!
//! The Dirichlet norm is `||f||^2 = |f(0)|^2 + ∫_D |f'|^2 dA`, which for
//! `f = sum a_n z^n` equals `|a_0|^2 + pi sum n |a_n|^2`.

mod family;
mod operators;
mod quadrature;

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::DiskPoint;

pub use family::{random_polynomial, FamilyConfig, FamilyMember, Probe, TestFamily};
pub use operators::{
    boundedness_and_tails, boundedness_estimate, change_of_variables_residual, composition_norm, peak_function, peak_ratio_sequence,
    tail_functional, tail_functionals, BoundednessEstimate, ChangeOfVariables, PeakRatio, FAMILY_LABEL,
};
pub use quadrature::{
    build_quadrature, gauss_legendre, target_grid, DiskQuadrature, TargetGrid, TargetGridSpec, DEFAULT_ANGULAR_ORDER,
    DEFAULT_RADIAL_ORDER, DEFAULT_TRUNCATION,
};

/// Largest admissible polynomial degree.
pub const N_MAX: usize = 1024;

/// A polynomial in the Dirichlet space, stored by its power-series coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirichletFunction {
    pub coefficients: Vec<Complex64>,
    pub label: String,
}

impl DirichletFunction {
    pub fn new(coefficients: Vec<Complex64>, label: impl Into<String>) -> Result<Self> {
        if coefficients.is_empty() {
            return Err(Error::validation("coefficients", "must not be empty"));
        }
        if coefficients.len() > N_MAX + 1 {
            return Err(Error::validation(
                "coefficients",
                format!("degree {} exceeds {N_MAX}", coefficients.len() - 1),
            ));
        }
        if coefficients.iter().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(Error::validation("coefficients", "must be finite"));
        }
        Ok(DirichletFunction {
            coefficients,
            label: label.into(),
        })
    }

    /// `z^n`.
    pub fn monomial(n: usize) -> Self {
        let mut c = vec![Complex64::new(0.0, 0.0); n + 1];
        c[n] = Complex64::new(1.0, 0.0);
        DirichletFunction::new(c, format!("z^{n}")).expect("monomial degree in range")
    }

    /// Orthonormal basis element `e_0 = 1`, `e_n = z^n / sqrt(pi n)`.
    pub fn basis(n: usize) -> Self {
        let mut f = DirichletFunction::monomial(n);
        if n > 0 {
            f.coefficients[n] /= (PI * n as f64).sqrt();
        }
        f.label = format!("e_{n}");
        f
    }

    pub fn degree(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        self.coefficients
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self, z: Complex64) -> Complex64 {
        self.eval_with_derivative(z).1
    }

    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let mut p = Complex64::new(0.0, 0.0);
        let mut dp = Complex64::new(0.0, 0.0);
        for &c in self.coefficients.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
        }
        (p, dp)
    }

    pub fn scaled(&self, s: Complex64) -> Self {
        DirichletFunction {
            coefficients: self.coefficients.iter().map(|&c| c * s).collect(),
            label: self.label.clone(),
        }
    }

    /// `f / ||f||`; errors for the zero function.
    pub fn normalized(&self) -> Result<Self> {
        let n = dirichlet_norm(self);
        if n == 0.0 {
            return Err(Error::domain("cannot normalize the zero function"));
        }
        Ok(self.scaled(Complex64::new(1.0 / n, 0.0)))
    }
}

/// Dirichlet norm from the coefficients.
pub fn dirichlet_norm(f: &DirichletFunction) -> f64 {
    inner_product(f, f).re.max(0.0).sqrt()
}

/// Dirichlet norm by quadrature of `|f(0)|^2 + ∫ |f'|^2 dA`.
pub fn dirichlet_norm_quadrature(f: &DirichletFunction, q: &DiskQuadrature) -> f64 {
    let integral = q.integrate(|z| f.derivative(z).norm_sqr());
    (f.coefficients[0].norm_sqr() + integral).sqrt()
}

/// `<f, g> = a_0 conj(b_0) + pi sum n a_n conj(b_n)`.
pub fn inner_product(f: &DirichletFunction, g: &DirichletFunction) -> Complex64 {
    let head = f.coefficients[0] * g.coefficients[0].conj();
    let tail: Complex64 = f
        .coefficients
        .iter()
        .zip(&g.coefficients)
        .enumerate()
        .skip(1)
        .map(|(n, (&a, &b))| a * b.conj() * n as f64)
        .sum();
    head + tail * PI
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// `K_w(z) = 1 + (1/pi) log(1 / (1 - z conj(w)))`.
    DirichletKernel,
    /// `k_w(z) = (1 - |w|^2) / (1 - conj(w) z)^2`.
    NormalizedBergman,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub anchor: DiskPoint,
    pub kind: KernelKind,
}

/// Largest anchor modulus for which the kernel series is trusted.
pub const KERNEL_SERIES_RADIUS: f64 = 0.95;
const KERNEL_TAIL: f64 = 1e-12;

impl KernelSpec {
    pub fn new(anchor: Complex64, kind: KernelKind) -> Result<Self> {
        crate::geometry::require_interior(anchor, "anchor")?;
        Ok(KernelSpec {
            anchor: anchor.into(),
            kind,
        })
    }

    pub fn eval_with_derivative(&self, z: Complex64) -> (Complex64, Complex64) {
        let w = self.anchor.to_complex();
        let one = Complex64::new(1.0, 0.0);
        let d = one - z * w.conj();
        match self.kind {
            KernelKind::DirichletKernel => (one - d.ln() / PI, w.conj() / (d * PI)),
            KernelKind::NormalizedBergman => {
                let c = 1.0 - w.norm_sqr();
                (c / (d * d), 2.0 * c * w.conj() / (d * d * d))
            }
        }
    }

    /// Dirichlet norm in closed form.
    pub fn dirichlet_norm(&self) -> f64 {
        let x = self.anchor.to_complex().norm_sqr();
        match self.kind {
            // ||K_w||^2 = K_w(w).
            KernelKind::DirichletKernel => (1.0 - (1.0 - x).ln() / PI).sqrt(),
            // (1-x)^2 [1 + pi sum n (n+1)^2 x^n] with sum n (n+1)^2 x^n = x (4 + 2x) / (1-x)^4.
            KernelKind::NormalizedBergman => {
                ((1.0 - x).powi(2) + PI * x * (4.0 + 2.0 * x) / (1.0 - x).powi(2)).sqrt()
            }
        }
    }

    /// Number of series terms whose omitted tail is below `1e-12`.
    pub fn series_terms(&self) -> usize {
        let x = self.anchor.modulus();
        let mut n = 1usize;
        while n < 100_000 {
            let tail = match self.kind {
                KernelKind::DirichletKernel => x.powi(n as i32 + 1) / (PI * (n + 1) as f64 * (1.0 - x)),
                KernelKind::NormalizedBergman => (n + 2) as f64 * x.powi(n as i32 + 1) / (1.0 - x).powi(2),
            };
            if tail < KERNEL_TAIL {
                break;
            }
            n += 1;
        }
        n
    }

    /// Truncated power series of the kernel in `z`.
    pub fn series(&self, terms: usize) -> DirichletFunction {
        let wc = self.anchor.to_complex().conj();
        let c = 1.0 - wc.norm_sqr();
        let coeffs = (0..=terms)
            .map(|n| match self.kind {
                KernelKind::DirichletKernel if n == 0 => Complex64::new(1.0, 0.0),
                KernelKind::DirichletKernel => wc.powu(n as u32) / (PI * n as f64),
                KernelKind::NormalizedBergman => wc.powu(n as u32) * (c * (n + 1) as f64),
            })
            .collect();
        DirichletFunction {
            coefficients: coeffs,
            label: format!("kernel series ({terms} terms)"),
        }
    }
}

/// Outcome of a reproducing-property check.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCheck {
    /// `|<f, K_w> - f(w)|`.
    pub residual: f64,
    pub series_terms: usize,
    /// Set when `|w|` exceeds [`KERNEL_SERIES_RADIUS`].
    pub series_warning: bool,
}

/// Pairs `f` with the kernel series at `w` and compares with `f(w)`.
pub fn kernel_reproduce_check(f: &DirichletFunction, w: Complex64) -> Result<KernelCheck> {
    let k = KernelSpec::new(w, KernelKind::DirichletKernel)?;
    let terms = k.series_terms().max(f.degree());
    let pairing = inner_product(f, &k.series(terms));
    Ok(KernelCheck {
        residual: (pairing - f.eval(w)).norm(),
        series_terms: terms,
        series_warning: w.norm() > KERNEL_SERIES_RADIUS,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norm_examples() {
        let k = DirichletFunction::new(vec![c(0.3, -0.4)], "c").unwrap();
        assert!((dirichlet_norm(&k) - 0.5).abs() < 1e-15);
        assert!((dirichlet_norm(&DirichletFunction::monomial(1)) - PI.sqrt()).abs() < 1e-15);
        for n in 0..=40 {
            assert!((dirichlet_norm(&DirichletFunction::basis(n)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn inner_product_examples() {
        for m in 0..8 {
            for n in 0..8 {
                let ip = inner_product(&DirichletFunction::basis(m), &DirichletFunction::basis(n));
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((ip - c(expect, 0.0)).norm() < 1e-14);
            }
        }
        let z = DirichletFunction::monomial(1);
        let one = DirichletFunction::monomial(0);
        assert_eq!(inner_product(&z, &one), c(0.0, 0.0));
        let z2 = DirichletFunction::monomial(2);
        assert!((inner_product(&z2, &z2) - c(2.0 * PI, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn inner_product_is_sesquilinear() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = random_polynomial(&mut rng, 6);
        let g = random_polynomial(&mut rng, 9);
        let h = random_polynomial(&mut rng, 4);
        let (a, b) = (c(0.3, -1.2), c(-0.7, 0.4));
        let combo = DirichletFunction::new(
            (0..=9)
                .map(|n| {
                    let fc = f.coefficients.get(n).copied().unwrap_or_default();
                    let hc = h.coefficients.get(n).copied().unwrap_or_default();
                    a * fc + b * hc
                })
                .collect(),
            "combo",
        )
        .unwrap();
        let lhs = inner_product(&combo, &g);
        let rhs = a * inner_product(&f, &g) + b * inner_product(&h, &g);
        assert!((lhs - rhs).norm() < 1e-12);
        assert!((inner_product(&g, &f) - inner_product(&f, &g).conj()).norm() < 1e-14);
    }

    #[test]
    fn quadrature_norm_agrees_with_coefficients() {
        let q = build_quadrature(160, 512, 1.0 - 1e-12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for deg in [1, 5, 20, 40] {
            let f = random_polynomial(&mut rng, deg);
            let exact = dirichlet_norm(&f);
            let quad = dirichlet_norm_quadrature(&f, &q);
            assert!((quad / exact - 1.0).abs() < 1e-8, "deg {deg}: {quad} vs {exact}");
        }
    }

    #[test]
    fn parseval_on_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let cs: Vec<Complex64> = (0..=20).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
            let mut coeffs = vec![c(0.0, 0.0); 21];
            for (n, &cn) in cs.iter().enumerate() {
                let e = DirichletFunction::basis(n);
                coeffs[n] += cn * e.coefficients[n];
            }
            let f = DirichletFunction::new(coeffs, "sum").unwrap();
            let parseval: f64 = cs.iter().map(|x| x.norm_sqr()).sum();
            assert!((dirichlet_norm(&f).powi(2) / parseval - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn reproducing_kernel_examples() {
        let one = DirichletFunction::monomial(0);
        assert!(kernel_reproduce_check(&one, c(0.6, 0.2)).unwrap().residual < 1e-15);
        let z5 = DirichletFunction::monomial(5);
        assert!(kernel_reproduce_check(&z5, c(0.5, 0.0)).unwrap().residual <= 1e-10);
        let e3 = DirichletFunction::basis(3);
        assert!(kernel_reproduce_check(&e3, c(0.3, 0.2)).unwrap().residual <= 1e-9);
        assert!(kernel_reproduce_check(&e3, c(0.97, 0.0)).unwrap().series_warning);
    }

    #[test]
    fn kernel_series_matches_closed_form() {
        for kind in [KernelKind::DirichletKernel, KernelKind::NormalizedBergman] {
            let k = KernelSpec::new(c(0.6, -0.7), kind).unwrap();
            let s = k.series(k.series_terms());
            for z in [c(0.0, 0.0), c(0.5, 0.5), c(-0.9, 0.1)] {
                let (v, d) = k.eval_with_derivative(z);
                let (sv, sd) = s.eval_with_derivative(z);
                assert!((v - sv).norm() < 1e-10, "{kind:?} value at {z}");
                assert!((d - sd).norm() < 1e-8, "{kind:?} derivative at {z}");
            }
            let norm = dirichlet_norm(&s);
            assert!((norm / k.dirichlet_norm() - 1.0).abs() < 1e-10, "{kind:?}");
        }
    }

    #[test]
    fn derivative_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f = random_polynomial(&mut rng, 12);
        for _ in 0..20 {
            let z = c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5);
            let h = 1e-6;
            let fd = (f.eval(z + h) - f.eval(z - h)) / (2.0 * h);
            assert!((fd - f.derivative(z)).norm() < 1e-6 * f.derivative(z).norm().max(1.0));
        }
    }

    #[test]
    fn rejects_oversized_degree() {
        assert!(DirichletFunction::new(vec![c(1.0, 0.0); N_MAX + 2], "big").is_err());
        assert!(DirichletFunction::new(vec![], "empty").is_err());
    }
}
