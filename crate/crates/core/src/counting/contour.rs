//! Argument-principle winding numbers and quadtree preimage search.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::Preimage;
use crate::error::{Error, Result};
use crate::symbols::SymbolMap;

/// A contour sample closer than this (relative to `max(1, |phi'|)`) to a
/// solution of `phi(z) = w` makes the winding count unreliable.
pub const NEAR_ZERO: f64 = 1e-8;
/// Maximum number of radius nudges before giving up on a contour.
pub const MAX_NUDGES: usize = 8;
/// Depth limit of the preimage quadtree.
pub const MAX_DEPTH: usize = 40;

const MAX_SPLIT_DEPTH: usize = 60;

#[derive(Debug)]
pub(crate) enum WindingError {
    NearZero,
    Eval(Error),
}

impl From<Error> for WindingError {
    fn from(e: Error) -> Self {
        WindingError::Eval(e)
    }
}

#[derive(Clone, Copy, Debug)]
enum Edge {
    Segment { a: Complex64, b: Complex64 },
    Arc { r: f64, t0: f64, t1: f64 },
}

impl Edge {
    fn point(&self, t: f64) -> Complex64 {
        match *self {
            Edge::Segment { a, b } => a + (b - a) * t,
            Edge::Arc { r, t0, t1 } => Complex64::from_polar(r, t0 + (t1 - t0) * t),
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Edge::Segment { a, b } => (b - a).norm(),
            Edge::Arc { r, t0, t1 } => r * (t1 - t0).abs(),
        }
    }
}

struct Target<'a> {
    phi: &'a SymbolMap,
    w: Complex64,
}

impl Target<'_> {
    fn eval(&self, z: Complex64) -> std::result::Result<(Complex64, Complex64), WindingError> {
        let (v, d) = self.phi.eval_inner(z)?;
        let g = v - self.w;
        if g.norm() < NEAR_ZERO * d.norm().max(1.0) {
            return Err(WindingError::NearZero);
        }
        Ok((g, d))
    }

    /// Total change of `arg(phi - w)` along the edge, by adaptive refinement
    /// until each piece provably cannot wind around zero.
    fn edge_argument(&self, edge: &Edge) -> std::result::Result<f64, WindingError> {
        let pieces = 16usize;
        let len = edge.length();
        let mut total = 0.0;
        let mut prev_t = 0.0;
        let mut prev = self.eval(edge.point(0.0))?;
        for k in 1..=pieces {
            let t = k as f64 / pieces as f64;
            let cur = self.eval(edge.point(t))?;
            total += self.piece(edge, len, prev_t, t, prev.0, cur.0, 0)?;
            prev_t = t;
            prev = cur;
        }
        Ok(total)
    }

    #[allow(clippy::too_many_arguments)]
    fn piece(
        &self,
        edge: &Edge,
        len: f64,
        ta: f64,
        tb: f64,
        ga: Complex64,
        gb: Complex64,
        depth: usize,
    ) -> std::result::Result<f64, WindingError> {
        let tm = 0.5 * (ta + tb);
        let (gm, dm) = self.eval(edge.point(tm))?;
        let span = len * (tb - ta);
        let floor = ga.norm().min(gb.norm()).min(gm.norm());
        let d1 = (gm / ga).arg();
        let d2 = (gb / gm).arg();
        if dm.norm() * span < 0.5 * floor && d1.abs() < 0.75 && d2.abs() < 0.75 {
            return Ok(d1 + d2);
        }
        if depth >= MAX_SPLIT_DEPTH {
            return Err(WindingError::NearZero);
        }
        Ok(self.piece(edge, len, ta, tm, ga, gm, depth + 1)? + self.piece(edge, len, tm, tb, gm, gb, depth + 1)?)
    }

    fn winding(&self, edges: &[Edge]) -> std::result::Result<i64, WindingError> {
        let mut total = 0.0;
        for e in edges {
            total += self.edge_argument(e)?;
        }
        Ok((total / (2.0 * PI)).round() as i64)
    }
}

fn circle_edges(radius: f64) -> [Edge; 4] {
    let arc = |k: usize| Edge::Arc {
        r: radius,
        t0: k as f64 * FRAC_PI_2,
        t1: (k + 1) as f64 * FRAC_PI_2,
    };
    [arc(0), arc(1), arc(2), arc(3)]
}

fn circle_around(center: Complex64, radius: f64) -> Vec<Edge> {
    // Polygonal approximation is fine here: 64 chords of a tiny circle.
    let n = 64;
    (0..n)
        .map(|k| {
            let a = center + Complex64::from_polar(radius, 2.0 * PI * k as f64 / n as f64);
            let b = center + Complex64::from_polar(radius, 2.0 * PI * (k + 1) as f64 / n as f64);
            Edge::Segment { a, b }
        })
        .collect()
}

/// Number of solutions of `phi(z) = w` (with multiplicity) inside `|z| < circle_radius`.
///
/// If the contour passes within [`NEAR_ZERO`] of a solution, the radius is
/// nudged inward, at most [`MAX_NUDGES`] times.
pub fn winding_count(phi: &SymbolMap, w: Complex64, circle_radius: f64) -> Result<usize> {
    crate::geometry::require_interior(w, "w")?;
    if !(circle_radius > 0.0 && circle_radius < 1.0 - 1e-12) {
        return Err(Error::domain(format!("circle radius must lie in (0,1), got {circle_radius}")));
    }
    let target = Target { phi, w };
    for attempt in 0..=MAX_NUDGES {
        let r = if attempt == 0 {
            circle_radius
        } else {
            circle_radius * (1.0 - 1e-7 * 4f64.powi(attempt as i32 - 1))
        };
        match target.winding(&circle_edges(r)) {
            Ok(n) => return Ok(n.max(0) as usize),
            Err(WindingError::NearZero) => continue,
            Err(WindingError::Eval(e)) => return Err(e),
        }
    }
    Err(Error::ContourThroughZero {
        target: w,
        attempts: MAX_NUDGES,
    })
}

/// Multiplicity of a root at `center` from the winding number on a small circle.
pub(crate) fn local_multiplicity(phi: &SymbolMap, w: Complex64, center: Complex64, radius: f64) -> Option<usize> {
    let target = Target { phi, w };
    let mut r = radius;
    for _ in 0..4 {
        if let Ok(n) = target.winding(&circle_around(center, r)) {
            return Some(n.max(0) as usize);
        }
        r *= 0.37;
    }
    None
}

/// Damped Newton iteration on `phi(z) - w` (at most 50 steps, step halved on
/// residual increase); `multiplicity` scales the step for clustered roots.
pub(crate) fn newton_polish(phi: &SymbolMap, w: Complex64, z0: Complex64, multiplicity: usize) -> (Complex64, f64) {
    let residual = |z: Complex64| phi.eval_inner(z).map(|(v, d)| (v - w, d));
    let mut z = z0;
    let Ok((mut g, mut d)) = residual(z) else {
        return (z, f64::INFINITY);
    };
    for _ in 0..50 {
        if g.norm() <= 1e-12 || d.norm() == 0.0 {
            break;
        }
        let step = g / d * multiplicity as f64;
        let mut lambda = 1.0;
        let mut improved = false;
        for _ in 0..12 {
            let trial = z - step * lambda;
            if trial.norm() < 1.0 - 1e-12 {
                if let Ok((tg, td)) = residual(trial) {
                    if tg.norm() < g.norm() {
                        z = trial;
                        g = tg;
                        d = td;
                        improved = true;
                        break;
                    }
                }
            }
            lambda *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (z, g.norm())
}

/// Polar cell: either the full disk `|z| < r1` or the annular sector
/// `r0 < |z| < r1, t0 < arg z < t1`.
#[derive(Clone, Copy, Debug)]
struct Cell {
    full: bool,
    r0: f64,
    r1: f64,
    t0: f64,
    t1: f64,
    depth: usize,
}

impl Cell {
    fn disk(r: f64, depth: usize) -> Cell {
        Cell { full: true, r0: 0.0, r1: r, t0: 0.0, t1: 2.0 * PI, depth }
    }

    fn edges(&self) -> Vec<Edge> {
        if self.full {
            return circle_edges(self.r1).to_vec();
        }
        vec![
            Edge::Segment {
                a: Complex64::from_polar(self.r0, self.t0),
                b: Complex64::from_polar(self.r1, self.t0),
            },
            Edge::Arc { r: self.r1, t0: self.t0, t1: self.t1 },
            Edge::Segment {
                a: Complex64::from_polar(self.r1, self.t1),
                b: Complex64::from_polar(self.r0, self.t1),
            },
            Edge::Arc { r: self.r0, t0: self.t1, t1: self.t0 },
        ]
    }

    fn diameter(&self) -> f64 {
        if self.full {
            2.0 * self.r1
        } else {
            (self.r1 - self.r0).max(self.r1 * (self.t1 - self.t0))
        }
    }

    fn center(&self) -> Complex64 {
        if self.full {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::from_polar(0.5 * (self.r0 + self.r1), 0.5 * (self.t0 + self.t1))
        }
    }

    fn contains(&self, z: Complex64, slack: f64) -> bool {
        let r = z.norm();
        if self.full {
            return r <= self.r1 + slack;
        }
        let mut t = z.arg();
        while t < self.t0 - PI {
            t += 2.0 * PI;
        }
        while t > self.t1 + PI {
            t -= 2.0 * PI;
        }
        let tslack = slack / r.max(1e-300);
        r >= self.r0 - slack && r <= self.r1 + slack && t >= self.t0 - tslack && t <= self.t1 + tslack
    }

    fn split(&self, fr: f64, ft: f64) -> Vec<Cell> {
        let d = self.depth + 1;
        if self.full {
            let rm = self.r1 * fr * 0.5;
            let offset = ft;
            let mut kids = vec![Cell::disk(rm, d)];
            kids.extend((0..4).map(|k| Cell {
                full: false,
                r0: rm,
                r1: self.r1,
                t0: offset + k as f64 * FRAC_PI_2,
                t1: offset + (k + 1) as f64 * FRAC_PI_2,
                depth: d,
            }));
            return kids;
        }
        let rm = self.r0 + (self.r1 - self.r0) * fr;
        let tm = self.t0 + (self.t1 - self.t0) * ft;
        vec![
            Cell { full: false, r0: self.r0, r1: rm, t0: self.t0, t1: tm, depth: d },
            Cell { full: false, r0: rm, r1: self.r1, t0: self.t0, t1: tm, depth: d },
            Cell { full: false, r0: self.r0, r1: rm, t0: tm, t1: self.t1, depth: d },
            Cell { full: false, r0: rm, r1: self.r1, t0: tm, t1: self.t1, depth: d },
        ]
    }

    fn non_convergence(&self) -> Error {
        Error::NonConvergence {
            depth: self.depth,
            r0: self.r0,
            r1: self.r1,
            t0: self.t0,
            t1: self.t1,
        }
    }
}

const SPLIT_FRACTIONS: [f64; 6] = [0.5, 0.5731, 0.4313, 0.6177, 0.3871, 0.5419];

/// Preimages of `w` in `|z| <= radius` by a winding-count quadtree on polar
/// cells; isolated roots are polished by Newton.
pub fn preimages_by_subdivision(phi: &SymbolMap, w: Complex64, radius: f64) -> Result<Vec<Preimage>> {
    let target = Target { phi, w };
    let mut root_cell = None;
    for attempt in 0..=MAX_NUDGES {
        let r = if attempt == 0 {
            radius
        } else {
            radius * (1.0 - 1e-7 * 4f64.powi(attempt as i32 - 1))
        };
        match target.winding(&circle_edges(r)) {
            Ok(n) => {
                root_cell = Some((Cell::disk(r, 0), n));
                break;
            }
            Err(WindingError::NearZero) => continue,
            Err(WindingError::Eval(e)) => return Err(e),
        }
    }
    let Some(first) = root_cell else {
        return Err(Error::ContourThroughZero { target: w, attempts: MAX_NUDGES });
    };

    let mut stack: Vec<(Cell, i64)> = vec![first];
    let mut found = Vec::new();
    while let Some((cell, count)) = stack.pop() {
        if count <= 0 {
            continue;
        }
        if cell.depth > MAX_DEPTH {
            return Err(cell.non_convergence());
        }
        let diam = cell.diameter();
        if count == 1 && diam < 0.05 {
            let (z, res) = newton_polish(phi, w, cell.center(), 1);
            if res <= 1e-10 && cell.contains(z, 1e-9) {
                found.push(Preimage::new(z, 1));
                continue;
            }
        }
        if count > 1 && diam < 1e-7 {
            let (z, _) = newton_polish(phi, w, cell.center(), count as usize);
            found.push(Preimage::new(z, count as usize));
            continue;
        }
        let mut children = None;
        for (i, &fr) in SPLIT_FRACTIONS.iter().enumerate() {
            let ft = if cell.full { 0.2 + 0.37 * i as f64 } else { 1.0 - fr };
            let kids = cell.split(fr, ft);
            let mut kid_counts = Vec::with_capacity(kids.len());
            let mut ok = true;
            for k in &kids {
                match target.winding(&k.edges()) {
                    Ok(n) => kid_counts.push(n),
                    Err(WindingError::NearZero) => {
                        ok = false;
                        break;
                    }
                    Err(WindingError::Eval(e)) => return Err(e),
                }
            }
            if ok && kid_counts.iter().sum::<i64>() == count {
                children = Some((kids, kid_counts));
                break;
            }
        }
        let Some((kids, kid_counts)) = children else {
            // Every split touches the cluster: accept it as one multiple root.
            let (z, res) = newton_polish(phi, w, cell.center(), count as usize);
            if res <= NEAR_ZERO && cell.contains(z, diam) {
                found.push(Preimage::new(z, count as usize));
                continue;
            }
            return Err(cell.non_convergence());
        };
        stack.extend(kids.into_iter().zip(kid_counts).filter(|(_, n)| *n > 0));
    }
    Ok(found)
}
