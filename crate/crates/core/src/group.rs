//! The eight-element symmetry group of the unit square acting on bivariate
//! copulas, its named subgroups, invariance testing and symmetrization.
//!
//! An element is encoded as `(swap, flip1, flip2)` and acts on a random pair
//! `(U1, U2)` by first replacing `U_i` with `1 - U_i` where `flip_i` is set and
//! then exchanging the coordinates where `swap` is set. The image of a copula
//! `C` under an element is the copula of the transformed pair.

use std::fmt;
use std::str::FromStr;

use crate::copula::Copula;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    pub swap: bool,
    pub flip1: bool,
    pub flip2: bool,
}

impl GroupElement {
    pub const IDENTITY: Self = Self::new(false, false, false);
    pub const PI: Self = Self::new(true, false, false);
    pub const NU1: Self = Self::new(false, true, false);
    pub const NU2: Self = Self::new(false, false, true);
    pub const TAU: Self = Self::new(false, true, true);
    pub const PI_NU1: Self = Self::new(true, true, false);
    pub const PI_NU2: Self = Self::new(true, false, true);
    pub const PI_TAU: Self = Self::new(true, true, true);

    pub const ALL: [Self; 8] = [
        Self::IDENTITY,
        Self::PI,
        Self::NU1,
        Self::NU2,
        Self::TAU,
        Self::PI_NU1,
        Self::PI_NU2,
        Self::PI_TAU,
    ];

    pub const fn new(swap: bool, flip1: bool, flip2: bool) -> Self {
        Self { swap, flip1, flip2 }
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(self, other: Self) -> Self {
        // Moving self's flips past other's swap exchanges which coordinate they hit.
        let (f1, f2) = if other.swap {
            (self.flip2, self.flip1)
        } else {
            (self.flip1, self.flip2)
        };
        Self {
            swap: self.swap ^ other.swap,
            flip1: other.flip1 ^ f1,
            flip2: other.flip2 ^ f2,
        }
    }

    pub fn inverse(self) -> Self {
        GroupElement::ALL
            .into_iter()
            .find(|h| self.compose(*h) == Self::IDENTITY)
            .expect("every element has an inverse")
    }

    /// Image of a point under the action on random pairs.
    pub fn map_point(self, u1: f64, u2: f64) -> (f64, f64) {
        let a = if self.flip1 { 1.0 - u1 } else { u1 };
        let b = if self.flip2 { 1.0 - u2 } else { u2 };
        if self.swap {
            (b, a)
        } else {
            (a, b)
        }
    }

    /// Evaluates `γ(C)` at `(u1, u2)` given an evaluator for `C`.
    pub(crate) fn eval_with<F: Fn(f64, f64) -> f64>(self, u1: f64, u2: f64, inner: F) -> f64 {
        let (a, b) = if self.swap { (u2, u1) } else { (u1, u2) };
        match (self.flip1, self.flip2) {
            (false, false) => inner(a, b),
            (true, false) => b - inner(1.0 - a, b),
            (false, true) => a - inner(a, 1.0 - b),
            (true, true) => a + b - 1.0 + inner(1.0 - a, 1.0 - b),
        }
    }

    pub fn name(self) -> &'static str {
        match (self.swap, self.flip1, self.flip2) {
            (false, false, false) => "id",
            (true, false, false) => "pi",
            (false, true, false) => "nu1",
            (false, false, true) => "nu2",
            (false, true, true) => "tau",
            (true, true, false) => "pi.nu1",
            (true, false, true) => "pi.nu2",
            (true, true, true) => "pi.tau",
        }
    }

    /// Transforms a row-major `m x m` cell-mass matrix (row index = first coordinate).
    pub(crate) fn permute_mass(self, m: usize, mass: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let a = if self.flip1 { m - 1 - i } else { i };
                let b = if self.flip2 { m - 1 - j } else { j };
                let (r, c) = if self.swap { (b, a) } else { (a, b) };
                out[r * m + c] = mass[i * m + j];
            }
        }
        out
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GroupElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GroupElement::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::UnknownElement(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Subgroup {
    Gamma,
    GammaPi,
    GammaNu,
    GammaTau,
    GammaPiTau,
}

impl Subgroup {
    pub const ALL: [Subgroup; 5] = [
        Subgroup::Gamma,
        Subgroup::GammaPi,
        Subgroup::GammaNu,
        Subgroup::GammaTau,
        Subgroup::GammaPiTau,
    ];

    pub fn elements(self) -> &'static [GroupElement] {
        use GroupElement as G;
        match self {
            Subgroup::Gamma => &G::ALL,
            Subgroup::GammaPi => &[G::IDENTITY, G::PI],
            Subgroup::GammaNu => &[G::IDENTITY, G::NU1, G::NU2, G::TAU],
            Subgroup::GammaTau => &[G::IDENTITY, G::TAU],
            Subgroup::GammaPiTau => &[G::IDENTITY, G::PI, G::TAU, G::PI_TAU],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Subgroup::Gamma => "Gamma",
            Subgroup::GammaPi => "GammaPi",
            Subgroup::GammaNu => "GammaNu",
            Subgroup::GammaTau => "GammaTau",
            Subgroup::GammaPiTau => "GammaPiTau",
        }
    }
}

impl fmt::Display for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Subgroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Subgroup::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownSubgroup(s.to_string()))
    }
}

pub const DEFAULT_LATTICE: usize = 101;
pub const DEFAULT_INVARIANCE_TOL: f64 = 1e-10;

/// Outcome of an invariance check: the largest deviation `|γ(C)(u) - C(u)|`
/// and where it occurred. For grid copulas the deviation is the largest
/// difference between cell masses and the witness point is the cell's lower corner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvarianceReport {
    pub invariant: bool,
    pub max_deviation: f64,
    pub witness: GroupElement,
    pub point: (f64, f64),
    pub exact_grid: bool,
}

pub fn apply_transform(g: GroupElement, c: &Copula) -> Copula {
    c.transformed(g)
}

pub fn invariance_report(c: &Copula, s: Subgroup, lattice: usize, tol: f64) -> InvarianceReport {
    let mut worst = InvarianceReport {
        invariant: true,
        max_deviation: 0.0,
        witness: GroupElement::IDENTITY,
        point: (0.0, 0.0),
        exact_grid: false,
    };
    if let Some(grid) = c.as_grid() {
        worst.exact_grid = true;
        let m = grid.resolution();
        for &g in s.elements() {
            let moved = g.permute_mass(m, grid.mass());
            for (idx, (a, b)) in moved.iter().zip(grid.mass()).enumerate() {
                let dev = (a - b).abs();
                if dev > worst.max_deviation {
                    worst.max_deviation = dev;
                    worst.witness = g;
                    worst.point = ((idx / m) as f64 / m as f64, (idx % m) as f64 / m as f64);
                }
            }
        }
    } else {
        let steps = lattice.max(2) - 1;
        for &g in s.elements() {
            if g == GroupElement::IDENTITY {
                continue;
            }
            let moved = c.transformed(g);
            for i in 0..=steps {
                let u1 = i as f64 / steps as f64;
                for j in 0..=steps {
                    let u2 = j as f64 / steps as f64;
                    let dev = (moved.eval_unchecked(u1, u2) - c.eval_unchecked(u1, u2)).abs();
                    if dev > worst.max_deviation {
                        worst.max_deviation = dev;
                        worst.witness = g;
                        worst.point = (u1, u2);
                    }
                }
            }
        }
    }
    worst.invariant = worst.max_deviation <= tol;
    worst
}

pub fn is_invariant(c: &Copula, s: Subgroup, lattice: usize, tol: f64) -> bool {
    invariance_report(c, s, lattice, tol).invariant
}

/// The mean `(1/|S|) Σ_{γ∈S} γ(C)`. Grid inputs stay grids.
pub fn symmetrize(c: &Copula, s: Subgroup) -> Copula {
    let elements = s.elements();
    let w = 1.0 / elements.len() as f64;
    if let Some(grid) = c.as_grid() {
        let m = grid.resolution();
        let mut acc = vec![0.0; m * m];
        for &g in elements {
            for (a, v) in acc.iter_mut().zip(g.permute_mass(m, grid.mass())) {
                *a += w * v;
            }
        }
        return Copula::grid_unchecked(m, acc);
    }
    let parts = elements.iter().map(|&g| (w, c.transformed(g))).collect();
    Copula::mixture(parts).expect("equal weights over a subgroup form a valid mixture")
}
