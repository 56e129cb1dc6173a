//! Hyperbolic geometry of the unit disk.
//!
//! Points are `Complex64`; [`DiskPoint`] is the serializable `{re, im}` form
//! used in configs and reports. Interior-only operations reject points within
//! `NumericsConfig::boundary_guard` of the unit circle.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::NumericsConfig;

/// A point of the closed unit disk in `{re, im}` form.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskPoint {
    pub re: f64,
    pub im: f64,
}

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        DiskPoint { re, im }
    }

    /// The boundary point `e^{i theta}`.
    pub fn on_circle(theta: f64) -> Self {
        Complex64::from_polar(1.0, theta).into()
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }

    pub fn modulus(self) -> f64 {
        self.re.hypot(self.im)
    }
}

impl From<Complex64> for DiskPoint {
    fn from(z: Complex64) -> Self {
        DiskPoint { re: z.re, im: z.im }
    }
}

impl From<DiskPoint> for Complex64 {
    fn from(p: DiskPoint) -> Self {
        p.to_complex()
    }
}

/// Lebesgue area of a planar region.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct AreaValue(pub f64);

impl AreaValue {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub(crate) fn require_interior(z: Complex64, what: &str) -> Result<()> {
    let guard = NumericsConfig::default().boundary_guard;
    if !(z.re.is_finite() && z.im.is_finite()) || z.norm() >= 1.0 - guard {
        return Err(Error::domain(format!(
            "{what} = {z} is not an interior point of the unit disk"
        )));
    }
    Ok(())
}

/// `rho(z, w) = |(z - w) / (1 - conj(z) w)|`.
pub fn pseudo_hyperbolic_distance(z: Complex64, w: Complex64) -> Result<f64> {
    require_interior(z, "z")?;
    require_interior(w, "w")?;
    Ok(pseudo_hyperbolic_unchecked(z, w))
}

#[inline]
pub(crate) fn pseudo_hyperbolic_unchecked(z: Complex64, w: Complex64) -> f64 {
    if z == w {
        return 0.0;
    }
    (z - w).norm() / (Complex64::new(1.0, 0.0) - z.conj() * w).norm()
}

/// Bergman metric `beta = artanh(rho)`.
pub fn bergman_distance(z: Complex64, w: Complex64) -> Result<f64> {
    let rho = pseudo_hyperbolic_distance(z, w)?;
    Ok(0.5 * ((1.0 + rho) / (1.0 - rho)).ln())
}

/// `eta = (e^{2r} - 1) / (e^{2r} + 1) = tanh r`.
pub fn eta_from_radius(r: f64) -> Result<f64> {
    if r.is_nan() || r <= 0.0 || !r.is_finite() {
        return Err(Error::domain(format!("Bergman radius must be positive, got {r}")));
    }
    Ok(r.tanh())
}

pub fn radius_from_eta(eta: f64) -> Result<f64> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::domain(format!("pseudo-hyperbolic radius must lie in (0,1), got {eta}")));
    }
    Ok(eta.atanh())
}

/// The Bergman disk `D(z, r) = D_eta(z)` together with its Euclidean realization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BergmanDisk {
    pub center: DiskPoint,
    pub bergman_radius: f64,
    pub pseudo_radius: f64,
    pub euclidean_center: DiskPoint,
    pub euclidean_radius: f64,
}

/// Builds `D(z, r)`; the Euclidean center is `(1-s^2) z / (1-s^2|z|^2)` and the
/// radius `(1-|z|^2) s / (1-s^2|z|^2)` with `s = tanh r`.
pub fn bergman_disk(z: Complex64, r: f64) -> Result<BergmanDisk> {
    require_interior(z, "center")?;
    let s = eta_from_radius(r)?;
    let s2 = s * s;
    let z2 = z.norm_sqr();
    let denom = 1.0 - s2 * z2;
    let ec = z * ((1.0 - s2) / denom);
    let er = (1.0 - z2) * s / denom;
    Ok(BergmanDisk {
        center: z.into(),
        bergman_radius: r,
        pseudo_radius: s,
        euclidean_center: ec.into(),
        euclidean_radius: er,
    })
}

impl BergmanDisk {
    pub fn center_c(&self) -> Complex64 {
        self.center.to_complex()
    }

    pub fn euclidean_center_c(&self) -> Complex64 {
        self.euclidean_center.to_complex()
    }

    /// Membership through the Euclidean realization.
    pub fn contains(&self, w: Complex64) -> bool {
        (w - self.euclidean_center_c()).norm() < self.euclidean_radius
    }

    /// Membership through `rho(z, w) < eta`.
    pub fn contains_pseudo_hyperbolic(&self, w: Complex64) -> bool {
        w.norm() < 1.0 && pseudo_hyperbolic_unchecked(self.center_c(), w) < self.pseudo_radius
    }
}

pub fn disk_area(d: &BergmanDisk) -> AreaValue {
    AreaValue(PI * d.euclidean_radius * d.euclidean_radius)
}

/// Carleson box `S(zeta, r) = {z in D : |z - zeta| < r}` anchored on the circle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarlesonBox {
    pub anchor: DiskPoint,
    pub radius: f64,
}

impl CarlesonBox {
    pub fn new(anchor: Complex64, radius: f64) -> Result<Self> {
        if (anchor.norm() - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("box anchor {anchor} is not on the unit circle")));
        }
        if radius.is_nan() || radius <= 0.0 || !radius.is_finite() {
            return Err(Error::domain(format!("box radius must be positive, got {radius}")));
        }
        Ok(CarlesonBox {
            anchor: anchor.into(),
            radius,
        })
    }

    pub fn at_angle(theta: f64, radius: f64) -> Result<Self> {
        Self::new(Complex64::from_polar(1.0, theta), radius)
    }

    pub fn anchor_c(&self) -> Complex64 {
        self.anchor.to_complex()
    }

    pub fn contains(&self, w: Complex64) -> bool {
        w.norm() < 1.0 && (w - self.anchor_c()).norm() < self.radius
    }
}

/// Default number of quadrature columns for [`carleson_box_area`].
pub const BOX_AREA_RESOLUTION: usize = 2048;

/// Area of `D ∩ S(zeta, r)` with the default resolution.
pub fn carleson_box_area(b: &CarlesonBox) -> AreaValue {
    carleson_box_area_with(b, BOX_AREA_RESOLUTION)
}

/// Area of `D ∩ S(zeta, r)` by column quadrature of the indicator.
///
/// The region is rotated so `zeta = 1`; each column `x` contributes the exact
/// chord length `2 min(sqrt(1-x^2), sqrt(r^2-(1-x)^2))`. The `x`-range is split at
/// the circle intersection and each piece is integrated by the midpoint rule
/// after a cosine change of variables that removes the square-root endpoints.
pub fn carleson_box_area_with(b: &CarlesonBox, resolution: usize) -> AreaValue {
    let r = b.radius;
    if r >= 2.0 {
        return AreaValue(PI);
    }
    let chord = |x: f64| -> f64 {
        let disk = (1.0 - x * x).max(0.0).sqrt();
        let d = 1.0 - x;
        let boxy = (r * r - d * d).max(0.0).sqrt();
        2.0 * disk.min(boxy)
    };
    let lo = (1.0 - r).max(-1.0);
    let kink = 1.0 - 0.5 * r * r;
    let n = resolution.max(8) / 2;
    let mut total = 0.0;
    for (a, b) in [(lo, kink), (kink, 1.0)] {
        if b <= a {
            continue;
        }
        let h = 1.0 / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) * h;
            let x = a + (b - a) * 0.5 * (1.0 - (PI * t).cos());
            let dx = (b - a) * 0.5 * PI * (PI * t).sin();
            s += chord(x) * dx;
        }
        total += s * h;
    }
    AreaValue(total)
}

/// Disk automorphism `psi_a(u) = (a - u) / (1 - conj(a) u)`.
pub fn mobius_involution(a: Complex64, u: Complex64) -> Complex64 {
    (a - u) / (Complex64::new(1.0, 0.0) - a.conj() * u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_interior(rng: &mut ChaCha8Rng, max: f64) -> Complex64 {
        let r = max * rng.random::<f64>().sqrt();
        Complex64::from_polar(r, rng.random::<f64>() * 2.0 * PI)
    }

    #[test]
    fn pseudo_hyperbolic_examples() {
        assert!((pseudo_hyperbolic_distance(c(0.0, 0.0), c(0.5, 0.0)).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(pseudo_hyperbolic_distance(c(0.5, 0.0), c(0.5, 0.0)).unwrap(), 0.0);
        assert!((pseudo_hyperbolic_distance(c(0.5, 0.0), c(-0.5, 0.0)).unwrap() - 0.8).abs() < 1e-15);
    }

    #[test]
    fn boundary_points_rejected() {
        assert!(pseudo_hyperbolic_distance(c(1.0, 0.0), c(0.0, 0.0)).is_err());
        assert!(pseudo_hyperbolic_distance(c(0.0, 0.0), c(0.0, 1.0 - 1e-13)).is_err());
        assert!(bergman_disk(c(0.0, -1.0), 1.0).is_err());
        assert!(bergman_disk(c(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn bergman_distance_examples() {
        assert_eq!(bergman_distance(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), 0.0);
        let d = bergman_distance(c(0.0, 0.0), c(1f64.tanh(), 0.0)).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
        let a = bergman_distance(c(0.3, 0.0), c(0.0, -0.2)).unwrap();
        let b = bergman_distance(c(0.0, -0.2), c(0.3, 0.0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn eta_round_trip() {
        assert!((eta_from_radius(1.0).unwrap() - 0.761_594_155_955_764_9).abs() < 1e-15);
        assert!(eta_from_radius(1e-12).unwrap() < 1e-11);
        assert!((radius_from_eta(eta_from_radius(0.37).unwrap()).unwrap() - 0.37).abs() < 1e-12);
        let e = eta_from_radius(0.8).unwrap();
        let closed = ((1.6f64).exp() - 1.0) / ((1.6f64).exp() + 1.0);
        assert!((e - closed).abs() < 1e-12);
        assert!(eta_from_radius(-1.0).is_err());
    }

    #[test]
    fn bergman_disk_examples() {
        let d0 = bergman_disk(c(0.0, 0.0), 0.7).unwrap();
        assert_eq!(d0.euclidean_center, DiskPoint::ORIGIN);
        assert!((d0.euclidean_radius - 0.7f64.tanh()).abs() < 1e-15);

        let d = bergman_disk(c(0.5, 0.0), 1.0).unwrap();
        assert!((d.euclidean_center.re - 0.245_601).abs() < 1e-6, "{:?}", d);
        assert!((d.euclidean_radius - 0.668_070).abs() < 1e-6);

        let ec = d.euclidean_center_c();
        let inside = ec + d.euclidean_radius - 1e-6;
        let outside = ec + d.euclidean_radius + 1e-6;
        assert!(d.contains(inside) && d.contains_pseudo_hyperbolic(inside));
        assert!(!d.contains(outside) && !d.contains_pseudo_hyperbolic(outside));
    }

    #[test]
    fn area_examples() {
        let a = disk_area(&bergman_disk(c(0.0, 0.0), 1.0).unwrap()).value();
        assert!((a - 1.822_204_347).abs() < 1e-8, "{a}");
        assert!(disk_area(&bergman_disk(c(0.0, 0.0), 1e-9).unwrap()).value() < 1e-17);
    }

    /// A(D(z,1)) / (1-|z|^2)^2 = pi s^2 / (1 - s^2 |z|^2)^2 runs from pi s^2 ~ 1.822
    /// at the origin to pi s^2 / (1-s^2)^2 ~ 10.33 at the boundary.
    #[test]
    fn area_comparable_to_boundary_distance() {
        for &m in &[0.0, 0.5, 0.9, 0.99, 0.999] {
            let d = bergman_disk(c(m, 0.0), 1.0).unwrap();
            let ratio = disk_area(&d).value() / (1.0 - m * m).powi(2);
            assert!((1.8..=10.6).contains(&ratio), "|z|={m} ratio={ratio}");
        }
    }

    fn lens_area(r: f64) -> f64 {
        // Unit circle and circle of radius r centred at distance 1.
        r * r * (r / 2.0).acos() + (1.0 - r * r / 2.0).acos() - 0.5 * (r * r * (4.0 - r * r)).sqrt()
    }

    #[test]
    fn box_area_matches_lens_formula() {
        for &r in &[1e-3, 5e-3, 1e-2, 0.1, 0.5, 1.0, 1.5, 1.99] {
            let b = CarlesonBox::at_angle(0.3, r).unwrap();
            let q = carleson_box_area(&b).value();
            let exact = lens_area(r);
            assert!(((q - exact) / exact).abs() < 1e-4, "r={r} q={q} exact={exact}");
        }
        assert_eq!(carleson_box_area(&CarlesonBox::at_angle(0.0, 2.0).unwrap()).value(), PI);
    }

    #[test]
    fn small_box_area_scales_like_r_squared() {
        let a1 = carleson_box_area(&CarlesonBox::at_angle(0.0, 1e-2).unwrap()).value() / 1e-4;
        let a2 = carleson_box_area(&CarlesonBox::at_angle(0.0, 5e-3).unwrap()).value() / 25e-6;
        assert!(((a1 - a2) / a2).abs() < 0.05);
        assert!((a2 - PI / 2.0).abs() < 0.05);
    }

    #[test]
    fn box_area_agrees_with_monte_carlo() {
        let b = CarlesonBox::at_angle(0.0, 1.0).unwrap();
        let q = carleson_box_area(&b).value();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 200_000;
        let mut hits = 0usize;
        for _ in 0..n {
            let w = c(rng.random_range(0.0..2.0), rng.random_range(-1.0..1.0));
            if b.contains(w) {
                hits += 1;
            }
        }
        let p = hits as f64 / n as f64;
        let est = 4.0 * p;
        let se = 4.0 * (p * (1.0 - p) / n as f64).sqrt();
        assert!((est - q).abs() < 3.0 * se, "mc={est} quad={q} se={se}");
    }

    #[test]
    fn mobius_invariance_and_triangle_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let a = random_interior(&mut rng, 0.95);
            let z = random_interior(&mut rng, 0.95);
            let w = random_interior(&mut rng, 0.95);
            let u = random_interior(&mut rng, 0.95);
            let before = pseudo_hyperbolic_distance(z, w).unwrap();
            let after =
                pseudo_hyperbolic_distance(mobius_involution(a, z), mobius_involution(a, w)).unwrap();
            assert!((before - after).abs() < 1e-10);
            assert_eq!(before, pseudo_hyperbolic_distance(w, z).unwrap());
            let p = pseudo_hyperbolic_distance(z, u).unwrap();
            let q = pseudo_hyperbolic_distance(u, w).unwrap();
            assert!(before <= (p + q) / (1.0 + p * q) + 1e-10);
        }
    }

    #[test]
    fn euclidean_realization_matches_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let z = random_interior(&mut rng, 0.99);
            let r = rng.random_range(0.05..3.0);
            let d = bergman_disk(z, r).unwrap();
            for _ in 0..2000 {
                let w = random_interior(&mut rng, 1.0 - 1e-9);
                let rho = pseudo_hyperbolic_unchecked(z, w);
                if (rho - d.pseudo_radius).abs() < 1e-9 {
                    continue;
                }
                assert_eq!(d.contains(w), rho < d.pseudo_radius, "z={z} r={r} w={w}");
            }
        }
    }
}
