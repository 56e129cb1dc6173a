//! Module invariant checks runnable from the command line.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::carleson::{delta_infimum, delta_sweep, DensityMode, DensityQuery};
use crate::counting::multiplicity;
use crate::dirichlet::{
    change_of_variables_residual, dirichlet_norm, kernel_reproduce_check, random_polynomial, DirichletFunction,
    DiskQuadrature, TargetGridSpec,
};
use crate::error::{Error, Result};
use crate::geometry::{bergman_disk, carleson_box_area, pseudo_hyperbolic_distance, CarlesonBox};
use crate::symbols::{build_symbol, SymbolMap, SymbolSpec};

pub const VERIFY_TAGS: [&str; 5] = ["geometry", "dirichlet", "changevar", "counting", "carleson"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub tag: String,
    pub name: String,
    /// Measured quantity compared against `tolerance`.
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub tags: Vec<String>,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
    pub pass: bool,
}

struct Recorder<'a> {
    tag: &'a str,
    out: &'a mut Vec<CheckResult>,
}

impl Recorder<'_> {
    /// Passes when `value <= tolerance`.
    fn at_most(&mut self, name: &str, value: f64, tolerance: f64) {
        self.out.push(CheckResult {
            tag: self.tag.into(),
            name: name.into(),
            value,
            tolerance,
            pass: value <= tolerance,
        });
    }
}

fn random_interior(rng: &mut ChaCha8Rng, rmax: f64) -> Complex64 {
    Complex64::from_polar(rmax * rng.random::<f64>().sqrt(), 2.0 * PI * rng.random::<f64>())
}

/// Area of the lens `{|w| < 1} ∩ {|w - 1| < r}` from circle-intersection geometry.
fn lens_area(r: f64) -> f64 {
    if r >= 2.0 {
        return PI;
    }
    let a1 = r * r * ((r * r) / (2.0 * r)).acos();
    let a2 = ((2.0 - r * r) / 2.0).acos();
    let tri = 0.5 * (r * r * (4.0 - r * r)).sqrt();
    a1 + a2 - tri
}

fn geometry(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let mut disagreements = 0usize;
    for _ in 0..100 {
        let z = random_interior(rng, 0.99);
        let r = 0.05 + 2.95 * rng.random::<f64>();
        let d = bergman_disk(z, r)?;
        for _ in 0..1000 {
            let w = random_interior(rng, 1.0 - 1e-9);
            let rho = pseudo_hyperbolic_distance(z, w)?;
            if (rho - d.pseudo_radius).abs() > 1e-9 && d.contains(w) != (rho < d.pseudo_radius) {
                disagreements += 1;
            }
        }
    }
    rec.at_most("bergman_disk_membership", disagreements as f64, 0.0);

    let mut worst = 0.0f64;
    for r in [0.01, 0.1, 0.5, 1.0, 1.5, 1.99] {
        let b = CarlesonBox::at_angle(rng.random::<f64>() * 2.0 * PI, r)?;
        worst = worst.max((carleson_box_area(&b).value() - lens_area(r)).abs() / lens_area(r));
    }
    rec.at_most("carleson_box_area", worst, 1e-6);

    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (z, w, a) = (random_interior(rng, 0.99), random_interior(rng, 0.99), random_interior(rng, 0.9));
        let m = |u: Complex64| (a - u) / (Complex64::new(1.0, 0.0) - a.conj() * u);
        let d0 = pseudo_hyperbolic_distance(z, w)?;
        worst = worst.max((d0 - pseudo_hyperbolic_distance(w, z)?).abs());
        worst = worst.max((d0 - pseudo_hyperbolic_distance(m(z), m(w))?).abs());
    }
    rec.at_most("pseudo_hyperbolic_invariance", worst, 1e-9);
    Ok(())
}

fn dirichlet(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let worst = (1..=40)
        .map(|n| (dirichlet_norm(&DirichletFunction::basis(n)) - 1.0).abs())
        .fold(0.0, f64::max);
    rec.at_most("basis_norms", worst, 1e-10);

    let mut worst = 0.0f64;
    for _ in 0..50 {
        let f = random_polynomial(rng, 12);
        let w = random_interior(rng, 0.9);
        worst = worst.max(kernel_reproduce_check(&f, w)?.residual);
    }
    rec.at_most("kernel_reproduction", worst, 1e-8);
    Ok(())
}

fn corpus() -> Result<Vec<SymbolMap>> {
    let c = Complex64::new;
    [
        SymbolSpec::Identity,
        SymbolSpec::Power { n: 2 },
        SymbolSpec::blaschke(&[c(0.5, 0.0), c(-0.3, 0.0)]),
        SymbolSpec::Scaled { c: 0.5 },
    ]
    .iter()
    .map(build_symbol)
    .collect()
}

fn changevar(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let q = DiskQuadrature::default();
    let mut probes = vec![
        DirichletFunction::monomial(1),
        DirichletFunction::monomial(2),
        DirichletFunction::basis(3),
    ];
    probes.push(random_polynomial(rng, 8));
    for phi in corpus()? {
        let worst = probes
            .iter()
            .map(|f| change_of_variables_residual(&phi, f, &q, TargetGridSpec::default()).map(|c| c.residual))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        rec.at_most(&format!("residual[{}]", phi.label()), worst, 1e-4);
    }
    Ok(())
}

fn counting(rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let c = Complex64::new;
    let cases = [
        (SymbolSpec::Power { n: 2 }, 2usize),
        (SymbolSpec::blaschke(&[c(0.5, 0.0), c(-0.3, 0.2), c(0.1, -0.6)]), 3),
        (SymbolSpec::Identity, 1),
    ];
    for (spec, degree) in cases {
        let phi = build_symbol(&spec)?;
        let mut wrong = 0usize;
        for _ in 0..200 {
            if multiplicity(&phi, random_interior(rng, 0.5), 1e-3)? != degree {
                wrong += 1;
            }
        }
        rec.at_most(&format!("valence[{}]", phi.label()), wrong as f64, 0.0);
    }
    let cres = build_symbol(&SymbolSpec::crescent_default())?;
    let mut over = 0usize;
    for _ in 0..500 {
        if multiplicity(&cres, random_interior(rng, 0.999), 1e-6)? > 1 {
            over += 1;
        }
    }
    rec.at_most("crescent_univalent", over as f64, 0.0);
    Ok(())
}

fn carleson(rec: &mut Recorder, seed: u64) -> Result<()> {
    let q = DensityQuery {
        angles: 16,
        seed,
        ..DensityQuery::default()
    };
    let id = SymbolMap::identity();
    let d = delta_infimum(&id, 1.0, DensityMode::Coverage, &q)?;
    rec.at_most("identity_coverage_defect", 1.0 - d.delta, 0.0);

    let scaled = build_symbol(&SymbolSpec::Scaled { c: 0.5 })?;
    let d = delta_infimum(&scaled, 1.0, DensityMode::Coverage, &q)?;
    rec.at_most("scaled_coverage_outer_ring", d.per_ring.last().map_or(1.0, |r| r.min_ratio), 1e-3);

    let cres = build_symbol(&SymbolSpec::crescent_default())?;
    let a = delta_sweep(&cres, &q, &[0.5, 1.0])?;
    let b = delta_sweep(&cres, &q, &[0.5, 1.0])?;
    rec.at_most("seeded_determinism", (a != b) as u8 as f64, 0.0);
    Ok(())
}

/// Runs the checks for the selected tags (`"all"` selects every tag).
pub fn verify_suite(selection: &[String], seed: u64) -> Result<SuiteSummary> {
    let mut tags: Vec<&str> = Vec::new();
    for s in selection {
        if s == "all" {
            tags.extend(VERIFY_TAGS);
        } else if let Some(t) = VERIFY_TAGS.iter().find(|t| **t == s.as_str()) {
            tags.push(t);
        } else {
            return Err(Error::Config {
                path: "tags".into(),
                reason: format!("unknown tag `{s}`, expected one of {VERIFY_TAGS:?} or `all`"),
            });
        }
    }
    tags.sort_by_key(|t| VERIFY_TAGS.iter().position(|v| v == t));
    tags.dedup();

    let mut checks = Vec::new();
    for (i, &tag) in tags.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(crate::numerics::mix_seed(seed, i as u64));
        let mut rec = Recorder { tag, out: &mut checks };
        match tag {
            "geometry" => geometry(&mut rec, &mut rng)?,
            "dirichlet" => dirichlet(&mut rec, &mut rng)?,
            "changevar" => changevar(&mut rec, &mut rng)?,
            "counting" => counting(&mut rec, &mut rng)?,
            "carleson" => carleson(&mut rec, seed)?,
            _ => unreachable!("tags are validated above"),
        }
    }
    Ok(SuiteSummary {
        tags: tags.iter().map(|t| t.to_string()).collect(),
        seed,
        pass: checks.iter().all(|c| c.pass),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lens_area_limits() {
        assert!((lens_area(2.0) - PI).abs() < 1e-15);
        // Small boxes are nearly half-disks of radius r.
        let r: f64 = 1e-3;
        assert!((lens_area(r) / (0.5 * PI * r * r) - 1.0).abs() < 1e-3);
        // r = sqrt(2): the box circle passes through +-i.
        let s = 2f64.sqrt();
        assert!((lens_area(s) - (PI / 2.0 + s * s * PI / 4.0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn geometry_and_dirichlet_tags_pass() {
        let s = verify_suite(&["geometry".into(), "dirichlet".into(), "counting".into()], 42).unwrap();
        assert!(s.pass, "{s:#?}");
        assert_eq!(s.tags, ["geometry", "dirichlet", "counting"]);
    }

    #[test]
    fn unknown_tag_is_rejected() {
        assert!(verify_suite(&["nope".into()], 1).is_err());
    }
}
