//! The biconvex form `[C, D] = ∫ C dQ^D`.
//!
//! Every copula built from the builtins, grids, mixtures and group transforms
//! has a finite measure decomposition: a convex combination of checkerboard
//! copulas (uniform on cells) and singular copulas whose mass is spread
//! uniformly along line segments (`M`, `W`, `E` and their images). The form is
//! bilinear, so `[C, D]` reduces to pairings of one component of `C` with one
//! component of `D`, each evaluated exactly:
//!
//! * grid against grid: on the common refinement of both cell partitions `C` is
//!   bilinear and `Q^D` is uniform on each refined cell, so the cell integral is
//!   the cell mass times `C` at the cell center;
//! * anything against a segment measure: along a segment `C` is piecewise
//!   polynomial of degree at most two between the points where the segment
//!   crosses a kink line of `C`, so two-point Gauss–Legendre per piece is exact;
//! * a segment component of `C` against a grid `D`: by symmetry of the form in
//!   two dimensions, `[C_i, D] = [D, C_i]`, which is the previous case.

use std::sync::Arc;

use rayon::prelude::*;

use crate::copula::{discretize, Copula, GridCopula};
use crate::error::{Error, Result};
use crate::group::GroupElement;

pub const DISCRETIZED_TOL: f64 = 1e-8;
pub const DISCRETIZED_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Both arguments are checkerboards; center rule on the common refinement.
    ExactGrid,
    /// At least one singular component; exact piecewise integration along segments.
    ExactPiecewise,
    /// Both arguments discretized with resolution doubling.
    Discretized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiconvexResult {
    pub value: f64,
    pub method: Method,
    /// Size of the refined cell partition for grid pairs, the final
    /// resolution for the discretized method, and 0 otherwise.
    pub resolution_used: usize,
    pub est_error: f64,
}

/// A line `a1 u1 + a2 u2 = c` across which a copula's formula changes.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Kink {
    a1: f64,
    a2: f64,
    c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Segment {
    pub mass: f64,
    pub from: (f64, f64),
    pub to: (f64, f64),
}

impl Segment {
    const fn new(mass: f64, from: (f64, f64), to: (f64, f64)) -> Self {
        Self { mass, from, to }
    }

    fn transformed(self, g: GroupElement) -> Self {
        Self {
            mass: self.mass,
            from: g.map_point(self.from.0, self.from.1),
            to: g.map_point(self.to.0, self.to.1),
        }
    }

    fn at(&self, t: f64) -> (f64, f64) {
        (
            self.from.0 + t * (self.to.0 - self.from.0),
            self.from.1 + t * (self.to.1 - self.from.1),
        )
    }
}

const M_SEGMENTS: [Segment; 1] = [Segment::new(1.0, (0.0, 0.0), (1.0, 1.0))];
const W_SEGMENTS: [Segment; 1] = [Segment::new(1.0, (0.0, 1.0), (1.0, 0.0))];
const E_SEGMENTS: [Segment; 4] = [
    Segment::new(0.25, (0.0, 0.5), (0.5, 0.0)),
    Segment::new(0.25, (0.5, 0.0), (1.0, 0.5)),
    Segment::new(0.25, (1.0, 0.5), (0.5, 1.0)),
    Segment::new(0.25, (0.5, 1.0), (0.0, 0.5)),
];

/// One copula in a measure decomposition.
#[derive(Debug, Clone)]
pub(crate) enum Component {
    Grid(Arc<GridCopula>),
    Segments(Vec<Segment>),
}

impl Component {
    fn transformed(&self, g: GroupElement) -> Self {
        match self {
            Component::Grid(grid) => Component::Grid(Arc::new(grid.transformed(g))),
            Component::Segments(segs) => Component::Segments(segs.iter().map(|s| s.transformed(g)).collect()),
        }
    }
}

/// Writes `C` as `Σ w_i C_i` with each `C_i` a grid or a segment-supported copula.
pub(crate) fn decompose(c: &Copula) -> Vec<(f64, Component)> {
    match c {
        Copula::M => vec![(1.0, Component::Segments(M_SEGMENTS.to_vec()))],
        Copula::W => vec![(1.0, Component::Segments(W_SEGMENTS.to_vec()))],
        Copula::E => vec![(1.0, Component::Segments(E_SEGMENTS.to_vec()))],
        Copula::Pi => vec![(1.0, Component::Grid(Arc::new(Copula::Pi.as_grid().unwrap())))],
        Copula::Grid(g) => vec![(1.0, Component::Grid(g.clone()))],
        Copula::Mixture(parts) => parts
            .iter()
            .flat_map(|(w, inner)| decompose(inner).into_iter().map(move |(v, comp)| (w * v, comp)))
            .collect(),
        Copula::Transformed(g, inner) => decompose(inner)
            .into_iter()
            .map(|(w, comp)| (w, comp.transformed(*g)))
            .collect(),
    }
}

fn kinks(c: &Copula, out: &mut Vec<Kink>) {
    match c {
        Copula::Pi => {}
        Copula::M => out.push(Kink { a1: 1.0, a2: -1.0, c: 0.0 }),
        Copula::W => out.push(Kink { a1: 1.0, a2: 1.0, c: 1.0 }),
        Copula::E => out.extend([
            Kink { a1: 1.0, a2: -1.0, c: 0.5 },
            Kink { a1: 1.0, a2: -1.0, c: -0.5 },
            Kink { a1: 1.0, a2: 1.0, c: 0.5 },
            Kink { a1: 1.0, a2: 1.0, c: 1.5 },
        ]),
        Copula::Grid(g) => grid_kinks(g, out),
        Copula::Mixture(parts) => parts.iter().for_each(|(_, inner)| kinks(inner, out)),
        Copula::Transformed(g, inner) => {
            let mut local = Vec::new();
            kinks(inner, &mut local);
            out.extend(local.into_iter().map(|k| pull_back(*g, k)));
        }
    }
}

fn grid_kinks(g: &GridCopula, out: &mut Vec<Kink>) {
    let m = g.resolution();
    for i in 1..m {
        let c = i as f64 / m as f64;
        out.push(Kink { a1: 1.0, a2: 0.0, c });
        out.push(Kink { a1: 0.0, a2: 1.0, c });
    }
}

/// Expresses a kink of the inner copula in the outer coordinates of `γ(C)`.
/// `γ(C)` evaluates `C` at `(a', b')` where `(a, b)` is `u` after the optional
/// swap and each of `a', b'` is `a, b` or its reflection.
fn pull_back(g: GroupElement, k: Kink) -> Kink {
    let (mut ca, mut cb, mut c) = (k.a1, k.a2, k.c);
    if g.flip1 {
        c -= ca;
        ca = -ca;
    }
    if g.flip2 {
        c -= cb;
        cb = -cb;
    }
    if g.swap {
        Kink { a1: cb, a2: ca, c }
    } else {
        Kink { a1: ca, a2: cb, c }
    }
}

const GAUSS_NODE: f64 = 0.211_324_865_405_187_13; // (1 - 1/sqrt(3)) / 2

/// `∫_0^1 C(s(t)) dt` for a segment `s`, exact when `C` is piecewise polynomial
/// of degree ≤ 3 along `s` with pieces delimited by `kinks`.
fn integrate_along(c: &Copula, kinks: &[Kink], seg: &Segment) -> f64 {
    let d1 = seg.to.0 - seg.from.0;
    let d2 = seg.to.1 - seg.from.1;
    let mut cuts = vec![0.0, 1.0];
    for k in kinks {
        let slope = k.a1 * d1 + k.a2 * d2;
        if slope.abs() < 1e-15 {
            continue;
        }
        let t = (k.c - k.a1 * seg.from.0 - k.a2 * seg.from.1) / slope;
        if t > 0.0 && t < 1.0 {
            cuts.push(t);
        }
    }
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    let pieces: Vec<f64> = cuts
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let h = hi - lo;
            let eval = |t: f64| {
                let (x, y) = seg.at(t);
                c.eval_unchecked(x.clamp(0.0, 1.0), y.clamp(0.0, 1.0))
            };
            0.5 * h * (eval(lo + GAUSS_NODE * h) + eval(hi - GAUSS_NODE * h))
        })
        .collect();
    pairwise_sum(&pieces)
}

fn against_segments(c: &Copula, segs: &[Segment]) -> f64 {
    let mut ks = Vec::new();
    kinks(c, &mut ks);
    let parts: Vec<f64> = segs.iter().map(|s| s.mass * integrate_along(c, &ks, s)).collect();
    pairwise_sum(&parts)
}

fn breakpoints(m1: usize, m2: usize) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=m1)
        .map(|i| i as f64 / m1 as f64)
        .chain((0..=m2).map(|j| j as f64 / m2 as f64))
        .collect();
    pts.sort_by(|a, b| a.total_cmp(b));
    pts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
    pts
}

/// `∫ C dQ^D` for two grids: center rule on the union of both partitions.
fn grid_pair(c: &GridCopula, d: &GridCopula) -> (f64, usize) {
    let md = d.resolution();
    let xs = breakpoints(c.resolution(), md);
    let density = (md * md) as f64;
    let locate = |u: f64| ((u * md as f64).floor() as usize).min(md - 1);
    let rows: Vec<f64> = xs
        .par_windows(2)
        .map(|wx| {
            let (x0, x1) = (wx[0], wx[1]);
            let xc = 0.5 * (x0 + x1);
            let i = locate(xc);
            let terms: Vec<f64> = xs
                .windows(2)
                .filter_map(|wy| {
                    let yc = 0.5 * (wy[0] + wy[1]);
                    let cell = d.cell(i, locate(yc));
                    (cell != 0.0).then(|| cell * density * (x1 - x0) * (wy[1] - wy[0]) * c.eval(xc, yc))
                })
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    let cells = xs.len() - 1;
    (pairwise_sum(&rows), cells * cells)
}

/// Exact `[C, D]` for all copulas expressible in this crate.
pub fn biconvex_form(c: &Copula, d: &Copula) -> Result<BiconvexResult> {
    let c_parts = decompose(c);
    let d_parts = decompose(d);
    let all_grid = |parts: &[(f64, Component)]| parts.iter().all(|(_, p)| matches!(p, Component::Grid(_)));
    let method = if all_grid(&c_parts) && all_grid(&d_parts) {
        Method::ExactGrid
    } else {
        Method::ExactPiecewise
    };
    let mut resolution_used = 0;
    let mut terms = Vec::new();
    for (wd, dp) in &d_parts {
        match dp {
            Component::Segments(segs) => terms.push(wd * against_segments(c, segs)),
            Component::Grid(dg) => {
                for (wc, cp) in &c_parts {
                    let v = match cp {
                        Component::Grid(cg) => {
                            let (v, cells) = grid_pair(cg, dg);
                            resolution_used = resolution_used.max(cells);
                            v
                        }
                        Component::Segments(segs) => against_segments(&Copula::Grid(dg.clone()), segs),
                    };
                    terms.push(wd * wc * v);
                }
            }
        }
    }
    let value = pairwise_sum(&terms);
    Ok(BiconvexResult {
        value,
        method,
        resolution_used: if method == Method::ExactGrid { resolution_used } else { 0 },
        est_error: 0.0,
    })
}

/// `[C, D]` by discretizing both arguments at resolution `m`, doubling `m`
/// until successive values differ by less than `tol` or `m` exceeds `cap`.
/// Reaching the cap is an error carrying the last value.
pub fn biconvex_discretized(c: &Copula, d: &Copula, m: usize, tol: f64, cap: usize) -> Result<BiconvexResult> {
    if m == 0 {
        return Err(Error::ZeroResolution);
    }
    let at = |m: usize| -> Result<f64> {
        let cg = discretize(c, m)?;
        let dg = discretize(d, m)?;
        Ok(grid_pair(&cg, &dg).0)
    };
    let mut m = m;
    let mut prev = at(m)?;
    let mut difference = f64::NAN;
    loop {
        let next_m = m * 2;
        if next_m > cap {
            return Err(Error::NonConvergence { value: prev, resolution: m, difference });
        }
        let next = at(next_m)?;
        difference = (next - prev).abs();
        m = next_m;
        prev = next;
        if difference < tol {
            return Ok(BiconvexResult {
                value: next,
                method: Method::Discretized,
                resolution_used: m,
                est_error: difference,
            });
        }
    }
}

/// Order-independent, deterministic summation.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        xs.iter().sum()
    } else {
        let (a, b) = xs.split_at(xs.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}
