use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::element::MultiIndex;
use crate::error::{Error, Result};

/// A field with pointwise partial derivatives in physical coordinates.
pub trait SmoothField: Sync {
    fn dim(&self) -> usize;

    /// `∂^α u(x)`; every implementation supports total order ≤ 3.
    fn derivative(&self, x: &[f64; 3], alpha: MultiIndex) -> f64;

    fn value(&self, x: &[f64; 3]) -> f64 {
        self.derivative(x, [0, 0, 0])
    }
}

/// One-dimensional factor `g` of a separable solution `u = Π_a g(x_a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Profile {
    /// `sin²(πt)`
    SinSquared,
    /// `t²(1-t)²`
    Quartic,
}

impl Profile {
    /// `g^{(k)}(t)` for `k ≤ 4`.
    fn derivative(self, t: f64, k: u8) -> f64 {
        match self {
            Profile::SinSquared => {
                let (s, c) = (2.0 * PI * t).sin_cos();
                match k {
                    0 => {
                        let v = (PI * t).sin();
                        v * v
                    }
                    1 => PI * s,
                    2 => 2.0 * PI * PI * c,
                    3 => -4.0 * PI.powi(3) * s,
                    4 => -8.0 * PI.powi(4) * c,
                    _ => unreachable!("order {k}"),
                }
            }
            Profile::Quartic => match k {
                0 => {
                    let v = t * (1.0 - t);
                    v * v
                }
                1 => 2.0 * t - 6.0 * t * t + 4.0 * t * t * t,
                2 => 2.0 - 12.0 * t + 12.0 * t * t,
                3 => -12.0 + 24.0 * t,
                4 => 24.0,
                _ => unreachable!("order {k}"),
            },
        }
    }
}

/// The four clamped test solutions.
///
/// * `u1 = sin²(πx) sin²(πy)`
/// * `u2 = x²(1-x)² y²(1-y)²`
/// * `u3 = sin²(πx) sin²(πy) sin²(πz)`
/// * `u4 = x²(1-x)² y²(1-y)² z²(1-z)²`
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ManufacturedSolution {
    U1,
    U2,
    U3,
    U4,
}

impl ManufacturedSolution {
    pub const ALL: [ManufacturedSolution; 4] = [Self::U1, Self::U2, Self::U3, Self::U4];

    pub fn name(self) -> &'static str {
        match self {
            Self::U1 => "u1",
            Self::U2 => "u2",
            Self::U3 => "u3",
            Self::U4 => "u4",
        }
    }

    fn profile(self) -> Profile {
        match self {
            Self::U1 | Self::U3 => Profile::SinSquared,
            Self::U2 | Self::U4 => Profile::Quartic,
        }
    }

    fn partial(self, x: &[f64; 3], alpha: [u8; 3]) -> f64 {
        let g = self.profile();
        (0..self.dim_of())
            .map(|a| g.derivative(x[a], alpha[a]))
            .product()
    }

    fn dim_of(self) -> usize {
        match self {
            Self::U1 | Self::U2 => 2,
            Self::U3 | Self::U4 => 3,
        }
    }

    /// Right-hand side `f = Δ²u`.
    pub fn rhs(&self, x: &[f64; 3]) -> f64 {
        let d = self.dim_of();
        let mut f = 0.0;
        for a in 0..d {
            let mut alpha = [0u8; 3];
            alpha[a] = 4;
            f += self.partial(x, alpha);
            for b in a + 1..d {
                let mut alpha = [0u8; 3];
                alpha[a] = 2;
                alpha[b] = 2;
                f += 2.0 * self.partial(x, alpha);
            }
        }
        f
    }
}

impl SmoothField for ManufacturedSolution {
    fn dim(&self) -> usize {
        self.dim_of()
    }

    fn derivative(&self, x: &[f64; 3], alpha: MultiIndex) -> f64 {
        debug_assert!(alpha.iter().all(|&a| a <= 4));
        self.partial(x, alpha)
    }
}

impl FromStr for ManufacturedSolution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "u1" => Ok(Self::U1),
            "u2" => Ok(Self::U2),
            "u3" => Ok(Self::U3),
            "u4" => Ok(Self::U4),
            _ => Err(Error::UnknownSolution(s.to_string())),
        }
    }
}

impl fmt::Display for ManufacturedSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A polynomial `Σ c_e x^e` in physical coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalPoly {
    dim: usize,
    terms: Vec<(MultiIndex, f64)>,
}

impl GlobalPoly {
    pub fn new(dim: usize, terms: Vec<(MultiIndex, f64)>) -> Self {
        Self { dim, terms }
    }

    pub fn terms(&self) -> &[(MultiIndex, f64)] {
        &self.terms
    }
}

impl SmoothField for GlobalPoly {
    fn dim(&self) -> usize {
        self.dim
    }

    fn derivative(&self, x: &[f64; 3], alpha: MultiIndex) -> f64 {
        let mut acc = 0.0;
        'terms: for (e, c) in &self.terms {
            let mut v = *c;
            for a in 0..3 {
                let (ea, aa) = (e[a] as i32, alpha[a] as i32);
                if aa > ea {
                    continue 'terms;
                }
                for i in 0..aa {
                    v *= (ea - i) as f64;
                }
                v *= x[a].powi(ea - aa);
            }
            acc += v;
        }
        acc
    }
}
