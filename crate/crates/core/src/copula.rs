//! Evaluable bivariate copulas.
//!
//! A [`Copula`] is either one of the analytic builtins (`M`, `W`, `Π` and the
//! shuffle-band copula `E`), a checkerboard [`GridCopula`], a convex mixture,
//! or the image of another copula under a [`GroupElement`]. Values are cheap to
//! clone; composite variants share their members behind `Arc`.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::group::GroupElement;

/// Slack allowed on cell masses, marginal sums and mixture weights.
pub const MASS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub enum Copula {
    /// Upper Fréchet–Hoeffding bound, `min(u1, u2)`.
    M,
    /// Lower Fréchet–Hoeffding bound, `max(u1 + u2 - 1, 0)`.
    W,
    /// Independence, `u1 * u2`.
    Pi,
    /// Gamma-invariant copula whose mass sits on the diamond through the edge
    /// midpoints of the unit square; it charges no mass to `(1/4, 3/4]^2`.
    E,
    Grid(Arc<GridCopula>),
    Mixture(Arc<[(f64, Copula)]>),
    Transformed(GroupElement, Arc<Copula>),
}

impl Copula {
    pub fn grid(m: usize, mass: Vec<f64>) -> Result<Self> {
        Ok(Copula::Grid(Arc::new(GridCopula::new(m, mass)?)))
    }

    pub(crate) fn grid_unchecked(m: usize, mass: Vec<f64>) -> Self {
        Copula::Grid(Arc::new(GridCopula::from_parts(m, mass)))
    }

    pub fn mixture(parts: Vec<(f64, Copula)>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidMixture("no components".into()));
        }
        let mut total = 0.0;
        for (w, _) in &parts {
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::InvalidMixture(format!("weight {w} is negative or not finite")));
            }
            total += w;
        }
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidMixture(format!("weights sum to {total}, not 1")));
        }
        Ok(Copula::Mixture(parts.into()))
    }

    /// `(M + W) / 2`, the generator of Gini's gamma.
    pub fn gini() -> Self {
        Copula::mixture(vec![(0.5, Copula::M), (0.5, Copula::W)]).unwrap()
    }

    /// `(1 - q) Π + q (M + W) / 2`.
    pub fn interpolated(q: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidInterpolation(q));
        }
        Copula::mixture(vec![(1.0 - q, Copula::Pi), (q, Copula::gini())])
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Copula::M => "M",
            Copula::W => "W",
            Copula::Pi => "Pi",
            Copula::E => "E",
            Copula::Grid(_) => "grid",
            Copula::Mixture(_) => "mixture",
            Copula::Transformed(..) => "transformed",
        }
    }

    /// `γ(C)`. Grids are permuted directly and nested transforms are collapsed.
    pub fn transformed(&self, g: GroupElement) -> Copula {
        if g == GroupElement::IDENTITY {
            return self.clone();
        }
        match self {
            Copula::Grid(grid) => Copula::Grid(Arc::new(grid.transformed(g))),
            Copula::Transformed(h, inner) => inner.transformed(g.compose(*h)),
            _ => Copula::Transformed(g, Arc::new(self.clone())),
        }
    }

    pub fn eval(&self, u1: f64, u2: f64) -> Result<f64> {
        check_unit("u1", u1)?;
        check_unit("u2", u2)?;
        Ok(self.eval_unchecked(u1, u2))
    }

    pub fn eval_unchecked(&self, u1: f64, u2: f64) -> f64 {
        match self {
            Copula::M => u1.min(u2),
            Copula::W => (u1 + u2 - 1.0).max(0.0),
            Copula::Pi => u1 * u2,
            Copula::E => {
                if (u1 - u2).abs() > 0.5 {
                    u1.min(u2)
                } else if (u1 + u2 - 1.0).abs() > 0.5 {
                    (u1 + u2 - 1.0).max(0.0)
                } else {
                    (u1 + u2) / 2.0 - 0.25
                }
            }
            Copula::Grid(g) => g.eval(u1, u2),
            Copula::Mixture(parts) => parts.iter().map(|(w, c)| w * c.eval_unchecked(u1, u2)).sum(),
            Copula::Transformed(g, inner) => g.eval_with(u1, u2, |a, b| inner.eval_unchecked(a, b)),
        }
    }

    /// Evaluation in exact rational arithmetic. Floating-point grid masses and
    /// mixture weights are read as the dyadic rationals they represent;
    /// mixture weights are renormalized so they sum to exactly one.
    pub fn eval_exact(&self, u1: &BigRational, u2: &BigRational) -> BigRational {
        match self {
            Copula::M => u1.min(u2).clone(),
            Copula::W => {
                let s = u1 + u2 - BigRational::one();
                if s.is_positive() {
                    s
                } else {
                    BigRational::zero()
                }
            }
            Copula::Pi => u1 * u2,
            Copula::E => {
                let half = BigRational::new(1.into(), 2.into());
                let one = BigRational::one();
                if (u1 - u2).abs() > half {
                    u1.min(u2).clone()
                } else if (u1 + u2 - &one).abs() > half {
                    let s = u1 + u2 - one;
                    if s.is_positive() {
                        s
                    } else {
                        BigRational::zero()
                    }
                } else {
                    (u1 + u2) / BigRational::from_integer(2.into()) - BigRational::new(1.into(), 4.into())
                }
            }
            Copula::Grid(g) => g.eval_exact(u1, u2),
            Copula::Mixture(parts) => {
                let weights: Vec<BigRational> = parts.iter().map(|(w, _)| exact_f64(*w)).collect();
                let total: BigRational = weights.iter().sum();
                let acc: BigRational = weights
                    .iter()
                    .zip(parts.iter())
                    .map(|(w, (_, c))| w * c.eval_exact(u1, u2))
                    .sum();
                acc / total
            }
            Copula::Transformed(g, inner) => {
                let one = BigRational::one();
                let (a, b) = if g.swap { (u2, u1) } else { (u1, u2) };
                match (g.flip1, g.flip2) {
                    (false, false) => inner.eval_exact(a, b),
                    (true, false) => b - inner.eval_exact(&(&one - a), b),
                    (false, true) => a - inner.eval_exact(a, &(&one - b)),
                    (true, true) => a + b - &one + inner.eval_exact(&(&one - a), &(&one - b)),
                }
            }
        }
    }

    /// The checkerboard representation, when this copula is one exactly.
    /// `Π` is the resolution-one grid.
    pub fn as_grid(&self) -> Option<GridCopula> {
        match self {
            Copula::Pi => Some(GridCopula::from_parts(1, vec![1.0])),
            Copula::Grid(g) => Some((**g).clone()),
            Copula::Transformed(g, inner) => inner.as_grid().map(|grid| grid.transformed(*g)),
            Copula::Mixture(parts) => {
                let grids: Vec<(f64, GridCopula)> = parts
                    .iter()
                    .map(|(w, c)| c.as_grid().map(|g| (*w, g)))
                    .collect::<Option<_>>()?;
                let m = grids.iter().fold(1usize, |acc, (_, g)| lcm(acc, g.resolution()));
                if m > MAX_MIXTURE_REFINEMENT {
                    return None;
                }
                let mut mass = vec![0.0; m * m];
                for (w, g) in &grids {
                    for (acc, v) in mass.iter_mut().zip(g.refine(m).mass()) {
                        *acc += w * v;
                    }
                }
                Some(GridCopula::from_parts(m, mass))
            }
            Copula::M | Copula::W | Copula::E => None,
        }
    }
}

const MAX_MIXTURE_REFINEMENT: usize = 4096;

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub(crate) fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

fn check_unit(name: &'static str, value: f64) -> Result<()> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(Error::Domain { name, value })
    }
}

/// The exact rational value of a finite float.
pub(crate) fn exact_f64(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite float")
}

/// Q^C of the half-open rectangle `(a1, b1] x (a2, b2]` by inclusion–exclusion.
pub fn rect_mass(c: &Copula, a1: f64, b1: f64, a2: f64, b2: f64) -> Result<f64> {
    for (name, v) in [("a1", a1), ("b1", b1), ("a2", a2), ("b2", b2)] {
        check_unit(name, v)?;
    }
    if a1 > b1 || a2 > b2 {
        return Err(Error::UnorderedBounds { a1, b1, a2, b2 });
    }
    let mass = c.eval_unchecked(b1, b2) - c.eval_unchecked(a1, b2) - c.eval_unchecked(b1, a2)
        + c.eval_unchecked(a1, a2);
    clamp_mass(mass, a1, b1, a2, b2)
}

fn clamp_mass(mass: f64, a1: f64, b1: f64, a2: f64, b2: f64) -> Result<f64> {
    if mass < -MASS_TOL {
        Err(Error::NegativeMass { a1, b1, a2, b2, mass })
    } else {
        Ok(mass.max(0.0))
    }
}

/// Checkerboard approximation: cell `(i, j)` receives the mass of
/// `(i/m, (i+1)/m] x (j/m, (j+1)/m]`. Grids whose resolution divides `m` are
/// refined without loss.
pub fn discretize(c: &Copula, m: usize) -> Result<GridCopula> {
    if m == 0 {
        return Err(Error::ZeroResolution);
    }
    if let Some(grid) = c.as_grid() {
        if m.is_multiple_of(grid.resolution()) {
            return Ok(grid.refine(m));
        }
    }
    let step = 1.0 / m as f64;
    let corner = |k: usize| if k == m { 1.0 } else { k as f64 * step };
    let mut cdf = vec![0.0; (m + 1) * (m + 1)];
    for i in 0..=m {
        for j in 0..=m {
            cdf[i * (m + 1) + j] = c.eval_unchecked(corner(i), corner(j));
        }
    }
    let mut mass = Vec::with_capacity(m * m);
    for i in 0..m {
        for j in 0..m {
            let at = |a: usize, b: usize| cdf[a * (m + 1) + b];
            let v = at(i + 1, j + 1) - at(i, j + 1) - at(i + 1, j) + at(i, j);
            mass.push(clamp_mass(v, corner(i), corner(i + 1), corner(j), corner(j + 1))?);
        }
    }
    GridCopula::new(m, mass)
}

/// Checkerboard copula: uniform density on each of `m x m` cells. `mass` is
/// row-major with the row index running along the first coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct GridCopula {
    m: usize,
    mass: Vec<f64>,
    /// `(m+1) x (m+1)` cumulative sums; entry `(i, j)` is `C(i/m, j/m)`.
    cdf: Vec<f64>,
}

impl GridCopula {
    pub fn new(m: usize, mass: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::ZeroResolution);
        }
        if mass.len() != m * m {
            return Err(Error::InvalidGrid(format!("expected {} cell masses, got {}", m * m, mass.len())));
        }
        if let Some((idx, v)) = mass.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidGrid(format!("cell {idx} has invalid mass {v}")));
        }
        let target = 1.0 / m as f64;
        for i in 0..m {
            let row: f64 = mass[i * m..(i + 1) * m].iter().sum();
            if (row - target).abs() > MASS_TOL {
                return Err(Error::InvalidGrid(format!("row {i} sums to {row}, expected {target}")));
            }
            let col: f64 = (0..m).map(|r| mass[r * m + i]).sum();
            if (col - target).abs() > MASS_TOL {
                return Err(Error::InvalidGrid(format!("column {i} sums to {col}, expected {target}")));
            }
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidGrid(format!("total mass {total}")));
        }
        Ok(Self::from_parts(m, mass))
    }

    pub(crate) fn from_parts(m: usize, mass: Vec<f64>) -> Self {
        let w = m + 1;
        let mut cdf = vec![0.0; w * w];
        for i in 0..m {
            let mut row = 0.0;
            for j in 0..m {
                row += mass[i * m + j];
                cdf[(i + 1) * w + j + 1] = cdf[i * w + j + 1] + row;
            }
        }
        Self { m, mass, cdf }
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn cell(&self, i: usize, j: usize) -> f64 {
        self.mass[i * self.m + j]
    }

    /// `C(i/m, j/m)`.
    pub fn corner(&self, i: usize, j: usize) -> f64 {
        self.cdf[i * (self.m + 1) + j]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.mass.chunks(self.m)
    }

    fn locate(&self, u: f64) -> (usize, f64) {
        let x = u * self.m as f64;
        let nearest = x.round();
        if (x - nearest).abs() <= 4.0 * f64::EPSILON * self.m as f64 {
            let k = nearest as usize;
            return if k >= self.m { (self.m - 1, 1.0) } else { (k, 0.0) };
        }
        let i = (x.floor() as usize).min(self.m - 1);
        (i, x - i as f64)
    }

    pub fn eval(&self, u1: f64, u2: f64) -> f64 {
        let (i, fx) = self.locate(u1);
        let (j, fy) = self.locate(u2);
        let c00 = self.corner(i, j);
        let c10 = self.corner(i + 1, j);
        let c01 = self.corner(i, j + 1);
        let c11 = self.corner(i + 1, j + 1);
        c00 * (1.0 - fx) * (1.0 - fy) + c10 * fx * (1.0 - fy) + c01 * (1.0 - fx) * fy + c11 * fx * fy
    }

    pub fn eval_exact(&self, u1: &BigRational, u2: &BigRational) -> BigRational {
        let m = BigRational::from_integer(BigInt::from(self.m));
        let split = |u: &BigRational| {
            let x = u * &m;
            let mut i = x.floor().to_integer().to_usize().unwrap_or(0);
            if i >= self.m {
                i = self.m - 1;
            }
            let frac = x - BigRational::from_integer(BigInt::from(i));
            (i, frac)
        };
        let (i, fx) = split(u1);
        let (j, fy) = split(u2);
        let one = BigRational::one();
        let c = |a, b| exact_f64(self.corner(a, b));
        c(i, j) * (&one - &fx) * (&one - &fy)
            + c(i + 1, j) * &fx * (&one - &fy)
            + c(i, j + 1) * (&one - &fx) * &fy
            + c(i + 1, j + 1) * fx * fy
    }

    pub fn transformed(&self, g: GroupElement) -> GridCopula {
        GridCopula::from_parts(self.m, g.permute_mass(self.m, &self.mass))
    }

    /// Splits every cell evenly into `(m / resolution)^2` subcells.
    pub fn refine(&self, m: usize) -> GridCopula {
        assert!(m.is_multiple_of(self.m), "refinement {m} is not a multiple of {}", self.m);
        let k = m / self.m;
        if k == 1 {
            return self.clone();
        }
        let share = 1.0 / (k * k) as f64;
        let mut mass = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                mass[i * m + j] = self.cell(i / k, j / k) * share;
            }
        }
        GridCopula::from_parts(m, mass)
    }

    pub fn into_copula(self) -> Copula {
        Copula::Grid(Arc::new(self))
    }
}

/// Axis-aligned rectangle `[x_lo, x_hi] x [y_lo, y_hi]` carrying a density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x_lo: f64,
    pub x_hi: f64,
    pub y_lo: f64,
    pub y_hi: f64,
}

impl Rect {
    pub fn square(half_width: f64) -> Self {
        Self { x_lo: -half_width, x_hi: half_width, y_lo: -half_width, y_hi: half_width }
    }
}

pub const NORMALIZATION_TOL: f64 = 1e-12;
pub const MAX_NORMALIZATION_SWEEPS: usize = 500;

/// Checkerboard copula of the distribution with density `f` on `rect`.
///
/// `f` is integrated by the tensor midpoint rule on an `inner x inner` mesh.
/// The density is treated as constant on each mesh cell, so each cell's mass is
/// spread uniformly over the rank-space rectangle spanned by the marginal
/// distribution functions at the cell's edges. Marginals are then balanced by
/// iterative proportional fitting.
pub fn copula_from_density<F>(f: F, rect: Rect, m: usize, inner: usize) -> Result<GridCopula>
where
    F: Fn(f64, f64) -> f64,
{
    if m == 0 || inner == 0 {
        return Err(Error::ZeroResolution);
    }
    if !(rect.x_lo < rect.x_hi && rect.y_lo < rect.y_hi) {
        return Err(Error::InvalidDensity("empty integration rectangle".into()));
    }
    let hx = (rect.x_hi - rect.x_lo) / inner as f64;
    let hy = (rect.y_hi - rect.y_lo) / inner as f64;
    let mut weights = vec![0.0; inner * inner];
    for a in 0..inner {
        let x = rect.x_lo + (a as f64 + 0.5) * hx;
        for b in 0..inner {
            let y = rect.y_lo + (b as f64 + 0.5) * hy;
            let v = f(x, y);
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidDensity(format!("f({x}, {y}) = {v}")));
            }
            weights[a * inner + b] = v;
        }
    }
    let total: f64 = weights.iter().sum();
    if total.is_nan() || total <= 0.0 || !total.is_finite() {
        return Err(Error::InvalidDensity(format!("total mass {total}")));
    }
    for w in &mut weights {
        *w /= total;
    }

    let row_sums: Vec<f64> = weights.chunks(inner).map(|r| r.iter().sum()).collect();
    let col_sums: Vec<f64> = (0..inner).map(|b| (0..inner).map(|a| weights[a * inner + b]).sum()).collect();
    let shares1 = bin_shares(&row_sums, m);
    let shares2 = bin_shares(&col_sums, m);

    let mut mass = vec![0.0; m * m];
    for a in 0..inner {
        for b in 0..inner {
            let w = weights[a * inner + b];
            if w == 0.0 {
                continue;
            }
            for &(i, si) in &shares1[a] {
                for &(j, sj) in &shares2[b] {
                    mass[i * m + j] += w * si * sj;
                }
            }
        }
    }
    balance_marginals(m, &mut mass)?;
    GridCopula::new(m, mass)
}

/// For each mesh slice, the bins of `[0, 1]` (resolution `m`) its marginal
/// probability interval overlaps and the fraction falling in each.
fn bin_shares(marginal: &[f64], m: usize) -> Vec<Vec<(usize, f64)>> {
    let mut out = Vec::with_capacity(marginal.len());
    let mut lo = 0.0;
    for (idx, &p) in marginal.iter().enumerate() {
        let hi = if idx + 1 == marginal.len() { 1.0 } else { (lo + p).min(1.0) };
        let mut shares = Vec::new();
        if hi > lo {
            let first = ((lo * m as f64).floor() as usize).min(m - 1);
            let last = ((hi * m as f64).ceil() as usize).clamp(first + 1, m);
            for i in first..last {
                let b_lo = i as f64 / m as f64;
                let b_hi = (i + 1) as f64 / m as f64;
                let overlap = hi.min(b_hi) - lo.max(b_lo);
                if overlap > 0.0 {
                    shares.push((i, overlap / (hi - lo)));
                }
            }
        }
        out.push(shares);
        lo = hi;
    }
    out
}

fn balance_marginals(m: usize, mass: &mut [f64]) -> Result<()> {
    let target = 1.0 / m as f64;
    let deviation = |mass: &[f64]| {
        let mut worst: f64 = 0.0;
        for i in 0..m {
            let row: f64 = mass[i * m..(i + 1) * m].iter().sum();
            let col: f64 = (0..m).map(|r| mass[r * m + i]).sum();
            worst = worst.max((row - target).abs()).max((col - target).abs());
        }
        worst
    };
    for _ in 0..MAX_NORMALIZATION_SWEEPS {
        if deviation(mass) <= NORMALIZATION_TOL {
            return Ok(());
        }
        for i in 0..m {
            let row: f64 = mass[i * m..(i + 1) * m].iter().sum();
            if row > 0.0 {
                mass[i * m..(i + 1) * m].iter_mut().for_each(|v| *v *= target / row);
            }
        }
        for j in 0..m {
            let col: f64 = (0..m).map(|r| mass[r * m + j]).sum();
            if col > 0.0 {
                for r in 0..m {
                    mass[r * m + j] *= target / col;
                }
            }
        }
    }
    let deviation = deviation(mass);
    if deviation <= NORMALIZATION_TOL {
        Ok(())
    } else {
        Err(Error::NormalizationFailed { sweeps: MAX_NORMALIZATION_SWEEPS, deviation })
    }
}
