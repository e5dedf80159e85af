//! Extended real numbers.
//!
//! Several path functionals and stationary moments are legitimately
//! infinite (the observed information explodes on hitting a reflecting
//! endpoint, `E[(1-X)/X]` diverges when the mutation rate is at most one).
//! These are carried as explicit variants instead of IEEE infinities so
//! that downstream case analysis has to match on them.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ExtReal {
    Finite(f64),
    PosInf,
    NegInf,
    /// Indeterminate forms such as `log(0/0)`.
    Undefined,
}

impl ExtReal {
    pub const ZERO: ExtReal = ExtReal::Finite(0.0);

    /// Maps IEEE infinities and NaN onto the dedicated variants.
    pub fn from_f64(x: f64) -> Self {
        if x.is_nan() {
            ExtReal::Undefined
        } else if x == f64::INFINITY {
            ExtReal::PosInf
        } else if x == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else {
            ExtReal::Finite(x)
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(x) => Some(x),
            _ => None,
        }
    }

    /// Lossy conversion for printing and plotting.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::Finite(x) => x,
            ExtReal::PosInf => f64::INFINITY,
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Undefined => f64::NAN,
        }
    }
}

impl From<f64> for ExtReal {
    fn from(x: f64) -> Self {
        ExtReal::from_f64(x)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::Finite(x) => write!(f, "{x:.16e}"),
            ExtReal::PosInf => f.write_str("inf"),
            ExtReal::NegInf => f.write_str("-inf"),
            ExtReal::Undefined => f.write_str("nan"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ieee_specials_map_to_variants() {
        assert_eq!(ExtReal::from_f64(f64::INFINITY), ExtReal::PosInf);
        assert_eq!(ExtReal::from_f64(f64::NEG_INFINITY), ExtReal::NegInf);
        assert_eq!(ExtReal::from_f64(f64::NAN), ExtReal::Undefined);
        assert_eq!(ExtReal::from_f64(2.5).finite(), Some(2.5));
        assert!(ExtReal::PosInf.to_f64().is_infinite());
    }
}
