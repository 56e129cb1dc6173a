//! Analytic self-maps of the unit disk.
//!
//! A [`SymbolSpec`] is the serializable descriptor; [`build_symbol`] validates it
//! into an immutable [`SymbolMap`] that evaluates `phi` and `phi'` together.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{require_interior, DiskPoint};

const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Number of boundary samples used by [`verify_self_map`].
pub const SELF_MAP_SAMPLES: usize = 4096;
/// Radius of the sampling circle used by [`verify_self_map`].
pub const SELF_MAP_RADIUS: f64 = 1.0 - 1e-6;
/// Closest approach to `z = 1` allowed when evaluating the atomic singular function.
pub const ATOMIC_CUTOFF: f64 = 1e-9;

/// Serializable description of a symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SymbolSpec {
    Identity,
    /// `e^{i phase} (a - z) / (1 - conj(a) z)`.
    Mobius { a: DiskPoint, phase: f64 },
    /// `z^n`.
    Power { n: u32 },
    /// `e^{i phase} prod (z - a_k) / (1 - conj(a_k) z)`.
    Blaschke { zeros: Vec<DiskPoint>, phase: f64 },
    /// Riemann map onto the unit disk minus a closed disk tangent at `tangent_point`.
    Crescent {
        tangent_point: DiskPoint,
        inner_radius: f64,
    },
    /// `c z`.
    Scaled { c: f64 },
    /// `exp((z + 1) / (z - 1))`.
    AtomicSingular,
    /// Composition applied left to right: `[phi, psi]` is `psi ∘ phi`.
    Chain { links: Vec<SymbolSpec> },
}

impl SymbolSpec {
    pub fn crescent_default() -> Self {
        SymbolSpec::Crescent {
            tangent_point: DiskPoint::new(1.0, 0.0),
            inner_radius: 0.25,
        }
    }

    pub fn blaschke(zeros: &[Complex64]) -> Self {
        SymbolSpec::Blaschke {
            zeros: zeros.iter().map(|&z| z.into()).collect(),
            phase: 0.0,
        }
    }
}

/// The lune `Omega = D \ closed(D_zeta)` where `D_zeta` is internally tangent at `zeta`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrescentRegion {
    pub tangent_point: DiskPoint,
    pub inner_center: DiskPoint,
    pub inner_radius: f64,
}

impl CrescentRegion {
    pub fn new(tangent_point: Complex64, inner_radius: f64) -> Result<Self> {
        if (tangent_point.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::validation(
                "tangent_point",
                format!("{tangent_point} is not on the unit circle"),
            ));
        }
        if !(inner_radius > 0.0 && inner_radius <= 0.5) {
            return Err(Error::validation(
                "inner_radius",
                format!("must lie in (0, 1/2], got {inner_radius}"),
            ));
        }
        let zeta = tangent_point / tangent_point.norm();
        Ok(CrescentRegion {
            tangent_point: zeta.into(),
            inner_center: (zeta * (1.0 - inner_radius)).into(),
            inner_radius,
        })
    }

    pub fn zeta(&self) -> Complex64 {
        self.tangent_point.to_complex()
    }

    /// Exact membership `|w| < 1` and `|w - c| > rho0`.
    pub fn contains(&self, w: Complex64) -> bool {
        w.norm() < 1.0 && (w - self.inner_center.to_complex()).norm() > self.inner_radius
    }

    /// Euclidean distance from `w` to the boundary of the lune (for `w` inside).
    pub fn boundary_distance(&self, w: Complex64) -> f64 {
        let outer = 1.0 - w.norm();
        let inner = (w - self.inner_center.to_complex()).norm() - self.inner_radius;
        outer.min(inner)
    }

    /// Width of the vertical strip `1/2 < Re v < 1/(2 rho0)` that
    /// `v = 1 / (1 - conj(zeta) u)` maps the lune onto.
    fn strip_width(&self) -> f64 {
        0.5 / self.inner_radius - 0.5
    }
}

/// Conformal map `D -> Omega` and its inverse, built as
/// Cayley (disk to upper half-plane), logarithm (to a horizontal strip),
/// an affine map onto the vertical strip, and `u = zeta (1 - 1/v)`.
///
/// Normalization: `phi(0)` is the point on the diameter through `zeta` whose
/// image is the centre line of the strip, i.e. `zeta (1 - 3 rho0) / (1 + rho0)`,
/// and `phi` maps the real diameter into that diameter.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrescentMap {
    pub region: CrescentRegion,
    width: f64,
}

impl CrescentMap {
    pub fn new(region: CrescentRegion) -> Self {
        CrescentMap {
            width: region.strip_width(),
            region,
        }
    }

    pub fn eval(&self, z: Complex64) -> (Complex64, Complex64) {
        let zeta = self.region.zeta();
        let one_minus_z = ONE - z;
        let h = I * (ONE + z) / one_minus_z;
        let s = h.ln();
        let scale = Complex64::new(0.0, -self.width / PI);
        let v = 0.5 + scale * s;
        let u = zeta * (ONE - ONE / v);
        let du = zeta * (2.0 * self.width / PI) / (v * v * h * one_minus_z * one_minus_z);
        (u, du)
    }

    /// Preimage of `w`, if `w` lies in the lune.
    pub fn inverse(&self, w: Complex64) -> Option<Complex64> {
        if !self.region.contains(w) {
            return None;
        }
        Some(self.inverse_unchecked(w))
    }

    pub(crate) fn inverse_unchecked(&self, w: Complex64) -> Complex64 {
        let zeta = self.region.zeta();
        let v = ONE / (ONE - zeta.conj() * w);
        let s = I * (v - 0.5) * (PI / self.width);
        let h = s.exp();
        (h - I) / (h + I)
    }

    /// `1 - |z|^2` for the preimage of `w`, computed without cancellation.
    pub(crate) fn preimage_defect(&self, w: Complex64) -> f64 {
        let zeta = self.region.zeta();
        let v = ONE / (ONE - zeta.conj() * w);
        let s = I * (v - 0.5) * (PI / self.width);
        // h = e^s; 1 - |z|^2 = 4 Im h / |h + i|^2, with Im h = e^{Re s} sin(Im s).
        let mag = s.re.exp();
        let im_h = mag * s.im.sin();
        let h = Complex64::from_polar(mag, s.im);
        4.0 * im_h / (h + I).norm_sqr()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SymbolKind {
    Identity,
    Mobius { a: Complex64, rotation: Complex64 },
    Power(u32),
    Blaschke { zeros: Vec<Complex64>, rotation: Complex64 },
    Crescent(CrescentMap),
    Scaled(f64),
    AtomicSingular,
    Chain(Vec<SymbolMap>),
}

/// A validated analytic self-map of the disk.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolMap {
    kind: SymbolKind,
    label: String,
}

impl SymbolMap {
    pub fn kind(&self) -> &SymbolKind {
        &self.kind
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn identity() -> Self {
        build_symbol(&SymbolSpec::Identity).expect("identity is valid")
    }

    /// Evaluates `(phi(z), phi'(z))` for `|z| < 1 - 1e-12`.
    pub fn eval_with_derivative(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        require_interior(z, "z")?;
        self.eval_inner(z)
    }

    pub fn eval(&self, z: Complex64) -> Result<Complex64> {
        self.eval_with_derivative(z).map(|(v, _)| v)
    }

    pub(crate) fn eval_inner(&self, z: Complex64) -> Result<(Complex64, Complex64)> {
        Ok(match &self.kind {
            SymbolKind::Identity => (z, ONE),
            SymbolKind::Mobius { a, rotation } => {
                let den = ONE - a.conj() * z;
                let v = *rotation * (*a - z) / den;
                let d = -*rotation * (1.0 - a.norm_sqr()) / (den * den);
                (v, d)
            }
            SymbolKind::Power(n) => {
                let n = *n as i32;
                let zn1 = z.powi(n - 1);
                (zn1 * z, zn1 * n as f64)
            }
            SymbolKind::Blaschke { zeros, rotation } => {
                let mut v = *rotation;
                let mut d = Complex64::new(0.0, 0.0);
                for a in zeros {
                    let den = ONE - a.conj() * z;
                    let f = (z - a) / den;
                    let df = (1.0 - a.norm_sqr()) / (den * den);
                    d = d * f + v * df;
                    v *= f;
                }
                (v, d)
            }
            SymbolKind::Crescent(map) => map.eval(z),
            SymbolKind::Scaled(c) => (z * *c, Complex64::new(*c, 0.0)),
            SymbolKind::AtomicSingular => {
                let zm1 = z - ONE;
                if zm1.norm() < ATOMIC_CUTOFF {
                    return Err(Error::Overflow(z));
                }
                let v = ((z + ONE) / zm1).exp();
                (v, v * (-2.0) / (zm1 * zm1))
            }
            SymbolKind::Chain(links) => {
                let mut v = z;
                let mut d = ONE;
                for (i, link) in links.iter().enumerate() {
                    if i > 0 {
                        require_interior(v, "intermediate chain value")?;
                    }
                    let (nv, nd) = link.eval_inner(v)?;
                    d *= nd;
                    v = nv;
                }
                (v, d)
            }
        })
    }

    /// Upper bound on the number of preimages of any point, when finite.
    pub fn valence_bound(&self) -> Option<usize> {
        match &self.kind {
            SymbolKind::Identity
            | SymbolKind::Mobius { .. }
            | SymbolKind::Crescent(_)
            | SymbolKind::Scaled(_) => Some(1),
            SymbolKind::Power(n) => Some(*n as usize),
            SymbolKind::Blaschke { zeros, .. } => Some(zeros.len().max(1)),
            SymbolKind::AtomicSingular => None,
            SymbolKind::Chain(links) => links
                .iter()
                .map(|l| l.valence_bound())
                .try_fold(1usize, |acc, b| b.map(|b| acc * b)),
        }
    }

    pub fn as_crescent(&self) -> Option<&CrescentMap> {
        match &self.kind {
            SymbolKind::Crescent(m) => Some(m),
            _ => None,
        }
    }
}

fn validate_interior(field: &str, p: DiskPoint) -> Result<Complex64> {
    let z = p.to_complex();
    if !(z.re.is_finite() && z.im.is_finite()) || z.norm() >= 1.0 - 1e-12 {
        return Err(Error::validation(field, format!("{z} must lie strictly inside the unit disk")));
    }
    Ok(z)
}

fn validate_phase(field: &str, phase: f64) -> Result<Complex64> {
    if !phase.is_finite() {
        return Err(Error::validation(field, "must be finite"));
    }
    Ok(Complex64::from_polar(1.0, phase))
}

fn label_of(spec: &SymbolSpec) -> String {
    match spec {
        SymbolSpec::Identity => "identity".into(),
        SymbolSpec::Mobius { a, phase } => format!("mobius(a={}{:+}i, phase={phase})", a.re, a.im),
        SymbolSpec::Power { n } => format!("power({n})"),
        SymbolSpec::Blaschke { zeros, .. } => {
            let zs: Vec<String> = zeros.iter().map(|z| format!("{}{:+}i", z.re, z.im)).collect();
            format!("blaschke({})", zs.join(", "))
        }
        SymbolSpec::Crescent {
            tangent_point,
            inner_radius,
        } => format!(
            "crescent(zeta={}{:+}i, rho0={inner_radius})",
            tangent_point.re, tangent_point.im
        ),
        SymbolSpec::Scaled { c } => format!("scaled({c})"),
        SymbolSpec::AtomicSingular => "atomic_singular".into(),
        SymbolSpec::Chain { links } => {
            let ls: Vec<String> = links.iter().map(label_of).collect();
            format!("chain[{}]", ls.join(" -> "))
        }
    }
}

fn build_unchecked(spec: &SymbolSpec, path: &str) -> Result<SymbolMap> {
    let field = |f: &str| {
        if path.is_empty() {
            f.to_string()
        } else {
            format!("{path}.{f}")
        }
    };
    let kind = match spec {
        SymbolSpec::Identity => SymbolKind::Identity,
        SymbolSpec::Mobius { a, phase } => SymbolKind::Mobius {
            a: validate_interior(&field("a"), *a)?,
            rotation: validate_phase(&field("phase"), *phase)?,
        },
        SymbolSpec::Power { n } => {
            if *n < 1 {
                return Err(Error::validation(field("n"), "must be at least 1"));
            }
            SymbolKind::Power(*n)
        }
        SymbolSpec::Blaschke { zeros, phase } => {
            if zeros.is_empty() {
                return Err(Error::validation(field("zeros"), "need at least one zero"));
            }
            let zs = zeros
                .iter()
                .enumerate()
                .map(|(i, z)| validate_interior(&field(&format!("zeros[{i}]")), *z))
                .collect::<Result<Vec<_>>>()?;
            SymbolKind::Blaschke {
                zeros: zs,
                rotation: validate_phase(&field("phase"), *phase)?,
            }
        }
        SymbolSpec::Crescent {
            tangent_point,
            inner_radius,
        } => {
            let region = CrescentRegion::new(tangent_point.to_complex(), *inner_radius).map_err(|e| match e {
                Error::Validation { field: f, reason } => Error::Validation {
                    field: field(&f),
                    reason,
                },
                other => other,
            })?;
            SymbolKind::Crescent(CrescentMap::new(region))
        }
        SymbolSpec::Scaled { c } => {
            if !(*c > 0.0 && *c < 1.0) {
                return Err(Error::validation(field("c"), format!("must lie in (0,1), got {c}")));
            }
            SymbolKind::Scaled(*c)
        }
        SymbolSpec::AtomicSingular => SymbolKind::AtomicSingular,
        SymbolSpec::Chain { links } => {
            if links.is_empty() {
                return Err(Error::validation(field("links"), "chain needs at least one link"));
            }
            let maps = links
                .iter()
                .enumerate()
                .map(|(i, l)| build_unchecked(l, &field(&format!("links[{i}]"))))
                .collect::<Result<Vec<_>>>()?;
            SymbolKind::Chain(maps)
        }
    };
    Ok(SymbolMap {
        kind,
        label: label_of(spec),
    })
}

/// Validates a descriptor and checks the self-map property on a boundary sample.
pub fn build_symbol(spec: &SymbolSpec) -> Result<SymbolMap> {
    let map = build_unchecked(spec, "")?;
    let margin = verify_self_map(&map);
    if margin < -1e-9 {
        return Err(Error::validation(
            "symbol",
            format!("{} escapes the unit disk (self-map margin {margin:.3e})", map.label),
        ));
    }
    Ok(map)
}

/// `1 - max |phi|` over [`SELF_MAP_SAMPLES`] points of the circle of radius
/// [`SELF_MAP_RADIUS`]. Evaluation failures count as an escape.
pub fn verify_self_map(phi: &SymbolMap) -> f64 {
    let mut sup: f64 = 0.0;
    for j in 0..SELF_MAP_SAMPLES {
        let theta = 2.0 * PI * j as f64 / SELF_MAP_SAMPLES as f64;
        let z = Complex64::from_polar(SELF_MAP_RADIUS, theta);
        match phi.eval_inner(z) {
            Ok((v, _)) if v.re.is_finite() && v.im.is_finite() => sup = sup.max(v.norm()),
            _ => return f64::NEG_INFINITY,
        }
    }
    1.0 - sup
}

/// Builds the lune symbol for a validated region.
pub fn crescent_map(region: CrescentRegion) -> SymbolMap {
    let spec = SymbolSpec::Crescent {
        tangent_point: region.tangent_point,
        inner_radius: region.inner_radius,
    };
    SymbolMap {
        kind: SymbolKind::Crescent(CrescentMap::new(region)),
        label: label_of(&spec),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn sym(spec: SymbolSpec) -> SymbolMap {
        build_symbol(&spec).unwrap()
    }

    fn corpus() -> Vec<SymbolMap> {
        vec![
            SymbolMap::identity(),
            sym(SymbolSpec::Mobius { a: DiskPoint::new(0.3, -0.4), phase: 0.7 }),
            sym(SymbolSpec::Power { n: 3 }),
            sym(SymbolSpec::blaschke(&[c(0.5, 0.0), c(-0.3, 0.0), c(0.1, 0.6)])),
            sym(SymbolSpec::crescent_default()),
            sym(SymbolSpec::Scaled { c: 0.5 }),
            sym(SymbolSpec::AtomicSingular),
            sym(SymbolSpec::Chain {
                links: vec![SymbolSpec::Power { n: 2 }, SymbolSpec::Mobius { a: DiskPoint::new(0.2, 0.1), phase: 0.0 }],
            }),
        ]
    }

    #[test]
    fn basic_evaluations() {
        let (v, d) = SymbolMap::identity().eval_with_derivative(c(0.0, 0.7)).unwrap();
        assert_eq!((v, d), (c(0.0, 0.7), ONE));
        let v = sym(SymbolSpec::Power { n: 2 }).eval(c(0.3, 0.4)).unwrap();
        assert!((v - c(-0.07, 0.24)).norm() < 1e-15);
        let v = sym(SymbolSpec::Scaled { c: 0.5 }).eval(c(0.8, 0.0)).unwrap();
        assert!((v - c(0.4, 0.0)).norm() < 1e-15);
        let (v, d) = sym(SymbolSpec::Mobius { a: DiskPoint::new(0.5, 0.0), phase: 0.0 })
            .eval_with_derivative(c(0.5, 0.0))
            .unwrap();
        assert!(v.norm() < 1e-15);
        assert!((d - c(-4.0 / 3.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn atomic_singular_at_origin() {
        let (v, d) = sym(SymbolSpec::AtomicSingular).eval_with_derivative(c(0.0, 0.0)).unwrap();
        let e1 = (-1.0f64).exp();
        assert!((v - c(e1, 0.0)).norm() < 1e-15);
        // d/dz exp((z+1)/(z-1)) = exp(...) * (-2)/(z-1)^2, which is -2/e at 0.
        assert!((d - c(-2.0 * e1, 0.0)).norm() < 1e-15);
        assert!((d.norm() - 2.0 * e1).abs() < 1e-15);
    }

    #[test]
    fn atomic_singular_overflow_guard() {
        let phi = sym(SymbolSpec::AtomicSingular);
        assert!(matches!(phi.eval_inner(c(1.0 - 1e-10, 0.0)), Err(Error::Overflow(_))));
        assert!(phi.eval_inner(c(1.0 - 1e-8, 0.0)).is_ok());
    }

    #[test]
    fn validation_errors_name_fields() {
        let e = build_symbol(&SymbolSpec::Scaled { c: 1.5 }).unwrap_err();
        assert!(e.to_string().contains("`c`"), "{e}");
        let e = build_symbol(&SymbolSpec::Blaschke {
            zeros: vec![DiskPoint::new(0.2, 0.0), DiskPoint::new(1.0, 0.0)],
            phase: 0.0,
        })
        .unwrap_err();
        assert!(e.to_string().contains("zeros[1]"), "{e}");
        let e = build_symbol(&SymbolSpec::Crescent { tangent_point: DiskPoint::new(1.0, 0.0), inner_radius: 0.6 })
            .unwrap_err();
        assert!(e.to_string().contains("inner_radius"), "{e}");
        let e = build_symbol(&SymbolSpec::Chain {
            links: vec![SymbolSpec::Identity, SymbolSpec::Power { n: 0 }],
        })
        .unwrap_err();
        assert!(e.to_string().contains("links[1].n"), "{e}");
    }

    #[test]
    fn self_map_margins() {
        let m = verify_self_map(&SymbolMap::identity());
        assert!((m - 1e-6).abs() < 1e-12);
        let m = verify_self_map(&sym(SymbolSpec::Scaled { c: 0.5 }));
        assert!((m - 0.5).abs() < 1e-6);
        let m = verify_self_map(&sym(SymbolSpec::blaschke(&[c(0.5, 0.0), c(-0.3, 0.0)])));
        assert!(m > 0.0 && m < 1e-5, "{m}");
        for phi in corpus() {
            assert!(verify_self_map(&phi) > -1e-9, "{}", phi.label());
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for phi in corpus() {
            for _ in 0..100 {
                let z = Complex64::from_polar(0.9 * rng.random::<f64>().sqrt(), rng.random::<f64>() * 2.0 * PI);
                let h = 1e-6;
                let (_, d) = phi.eval_with_derivative(z).unwrap();
                let fp = phi.eval(z + h).unwrap();
                let fm = phi.eval(z - h).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                let scale = d.norm().max(1e-3);
                assert!((fd - d).norm() / scale < 1e-6, "{} at {z}: {d} vs {fd}", phi.label());
            }
        }
    }

    #[test]
    fn chain_rule() {
        let inner = sym(SymbolSpec::blaschke(&[c(0.4, 0.2), c(-0.1, -0.5)]));
        let outer = sym(SymbolSpec::Mobius { a: DiskPoint::new(-0.3, 0.3), phase: 1.1 });
        let chain = sym(SymbolSpec::Chain {
            links: vec![
                SymbolSpec::blaschke(&[c(0.4, 0.2), c(-0.1, -0.5)]),
                SymbolSpec::Mobius { a: DiskPoint::new(-0.3, 0.3), phase: 1.1 },
            ],
        });
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..100 {
            let z = Complex64::from_polar(0.95 * rng.random::<f64>(), rng.random::<f64>() * 2.0 * PI);
            let (w, dw) = inner.eval_with_derivative(z).unwrap();
            let (_, dv) = outer.eval_with_derivative(w).unwrap();
            let (_, dc) = chain.eval_with_derivative(z).unwrap();
            assert!((dc - dv * dw).norm() <= 1e-8 * dc.norm().max(1e-12));
        }
    }

    #[test]
    fn crescent_region_invariants() {
        let region = CrescentRegion::new(c(0.0, 1.0), 0.3).unwrap();
        let ic = region.inner_center.to_complex();
        assert!((ic.norm() + region.inner_radius - 1.0).abs() < 1e-15);
        assert!((ic - c(0.0, 0.7)).norm() < 1e-15);
        assert!(CrescentRegion::new(c(1.0, 0.0), 0.0).is_err());
        assert!(CrescentRegion::new(c(0.9, 0.0), 0.25).is_err());
    }

    #[test]
    fn crescent_normalization_and_membership() {
        let phi = sym(SymbolSpec::crescent_default());
        let map = *phi.as_crescent().unwrap();
        let v0 = phi.eval(c(0.0, 0.0)).unwrap();
        assert!((v0 - c(0.2, 0.0)).norm() < 1e-14, "{v0}");
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..2000 {
            let z = Complex64::from_polar(rng.random::<f64>().sqrt() * (1.0 - 1e-9), rng.random::<f64>() * 2.0 * PI);
            let w = phi.eval(z).unwrap();
            assert!(w.norm() < 1.0);
            assert!((w - c(0.75, 0.0)).norm() > 0.25 - 1e-12);
            assert!(map.region.contains(w) || map.region.boundary_distance(w) < 1e-12);
        }
    }

    #[test]
    fn crescent_inverse_round_trip() {
        let phi = sym(SymbolSpec::Crescent { tangent_point: DiskPoint::on_circle(2.0), inner_radius: 0.4 });
        let map = *phi.as_crescent().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let z = Complex64::from_polar(0.99 * rng.random::<f64>().sqrt(), rng.random::<f64>() * 2.0 * PI);
            let w = phi.eval(z).unwrap();
            let back = map.inverse(w).expect("image lies in the lune");
            assert!((back - z).norm() < 1e-8, "{z} -> {w} -> {back}");
            let defect = map.preimage_defect(w);
            assert!((defect - (1.0 - z.norm_sqr())).abs() < 1e-9);
        }
    }

    #[test]
    fn crescent_boundary_reaches_both_circles() {
        let phi = sym(SymbolSpec::crescent_default());
        let map = phi.as_crescent().unwrap();
        let mut near_outer = false;
        let mut near_inner = false;
        for j in 0..SELF_MAP_SAMPLES {
            let z = Complex64::from_polar(SELF_MAP_RADIUS, 2.0 * PI * j as f64 / SELF_MAP_SAMPLES as f64);
            let w = phi.eval(z).unwrap();
            near_outer |= 1.0 - w.norm() < 1e-4;
            near_inner |= (w - map.region.inner_center.to_complex()).norm() - 0.25 < 1e-4;
        }
        assert!(near_outer && near_inner);
    }

    #[test]
    fn valence_bounds() {
        assert_eq!(sym(SymbolSpec::Power { n: 4 }).valence_bound(), Some(4));
        assert_eq!(sym(SymbolSpec::AtomicSingular).valence_bound(), None);
        let chain = sym(SymbolSpec::Chain {
            links: vec![SymbolSpec::Power { n: 2 }, SymbolSpec::blaschke(&[c(0.1, 0.0), c(0.2, 0.0), c(0.0, 0.3)])],
        });
        assert_eq!(chain.valence_bound(), Some(6));
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let spec = SymbolSpec::Chain {
            links: vec![SymbolSpec::crescent_default(), SymbolSpec::Power { n: 2 }],
        };
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct Wrap {
            symbol: SymbolSpec,
        }
        let text = toml::to_string(&Wrap { symbol: spec.clone() }).unwrap();
        let back: Wrap = toml::from_str(&text).unwrap();
        assert_eq!(back.symbol, spec);
        let bad = "[symbol]\nkind = \"scaled\"\nc = 0.5\nextra = 1\n";
        assert!(toml::from_str::<Wrap>(bad).is_err());
    }
}
