use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Penalty applied to residual norms in the alignment and regularization terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Kernel {
    /// `1 - exp(-x^2 / (2 nu^2))`.
    #[default]
    Welsch,
    /// Plain `x^2`, for ablation. Ignores the kernel width.
    L2,
}

/// Welsch's function `1 - exp(-x^2 / (2 nu^2))`.
pub fn welsch(x: f64, nu: f64) -> Result<f64> {
    if !(nu > 0.0) {
        return Err(Error::InvalidParameter(format!("kernel width must be positive, got {nu}")));
    }
    Ok(welsch_unchecked(x, nu))
}

#[inline]
pub(crate) fn welsch_unchecked(x: f64, nu: f64) -> f64 {
    -(-x * x / (2.0 * nu * nu)).exp_m1()
}

impl Kernel {
    #[inline]
    pub fn value(self, x: f64, nu: f64) -> f64 {
        match self {
            Kernel::Welsch => welsch_unchecked(x, nu),
            Kernel::L2 => x * x,
        }
    }

    /// Coefficient `w` of the quadratic upper bound `psi(y) + w (x^2 - y^2)`
    /// touching the kernel at `y`.
    #[inline]
    pub fn surrogate_weight(self, y: f64, nu: f64) -> f64 {
        match self {
            Kernel::Welsch => {
                let s = 2.0 * nu * nu;
                (-y * y / s).exp() / s
            }
            Kernel::L2 => 1.0,
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "welsch" => Ok(Kernel::Welsch),
            "l2" => Ok(Kernel::L2),
            other => Err(Error::InvalidParameter(format!("unknown kernel '{other}'"))),
        }
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kernel::Welsch => "welsch",
            Kernel::L2 => "l2",
        })
    }
}
