//! The distance-warping function h applied inside the metric GloVe loss.

use crate::error::{Error, Result};

/// h applied to distances in the loss residual: either h(x) = x² or
/// h(x) = cosh^k(x). Strictly increasing on [0, ∞), with h(0) = 0 for the
/// square and h(0) = 1 for cosh powers (the constant is absorbed by the
/// learned biases).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HFunction {
    Square,
    CoshPow(u32),
}

impl HFunction {
    pub fn apply(&self, d: f64) -> f64 {
        match self {
            HFunction::Square => d * d,
            HFunction::CoshPow(k) => d.cosh().powi(*k as i32),
        }
    }

    pub fn derivative(&self, d: f64) -> f64 {
        match self {
            HFunction::Square => 2.0 * d,
            HFunction::CoshPow(k) => {
                *k as f64 * d.cosh().powi(*k as i32 - 1) * d.sinh()
            }
        }
    }

    /// h′(d)/d with its finite d → 0 limit (2 for the square, k for
    /// cosh^k); the loss gradient needs this ratio, never h′ alone.
    pub fn derivative_over_dist(&self, d: f64) -> f64 {
        if d < 1e-12 {
            match self {
                HFunction::Square => 2.0,
                HFunction::CoshPow(k) => *k as f64,
            }
        } else {
            self.derivative(d) / d
        }
    }

    pub fn value_at_zero(&self) -> f64 {
        match self {
            HFunction::Square => 0.0,
            HFunction::CoshPow(_) => 1.0,
        }
    }

    /// Smallest value h can take, i.e. the lower edge of the domain of h⁻¹.
    pub fn range_min(&self) -> f64 {
        self.value_at_zero()
    }

    /// h⁻¹; the argument is clamped up to [`HFunction::range_min`].
    pub fn inverse(&self, t: f64) -> f64 {
        match self {
            HFunction::Square => t.max(0.0).sqrt(),
            HFunction::CoshPow(k) => {
                let base = t.max(1.0).powf(1.0 / *k as f64);
                if base <= 1.0 {
                    0.0
                } else {
                    base.acosh()
                }
            }
        }
    }

    /// Canonical name used in CLI flags and text-model headers: "square",
    /// "cosh", "cosh2", "cosh4", ...
    pub fn name(&self) -> String {
        match self {
            HFunction::Square => "square".into(),
            HFunction::CoshPow(1) => "cosh".into(),
            HFunction::CoshPow(k) => format!("cosh{k}"),
        }
    }

    /// Parses "square", "cosh", "coshK", or "cosh^K".
    pub fn parse(s: &str) -> Result<HFunction> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("square") {
            return Ok(HFunction::Square);
        }
        if let Some(rest) = s
            .strip_prefix("cosh")
            .or_else(|| s.strip_prefix("COSH"))
        {
            let rest = rest.strip_prefix('^').unwrap_or(rest);
            if rest.is_empty() {
                return Ok(HFunction::CoshPow(1));
            }
            if let Ok(k) = rest.parse::<u32>() {
                if k >= 1 {
                    return Ok(HFunction::CoshPow(k));
                }
            }
        }
        Err(Error::InvalidInput(format!(
            "unknown h function {s:?}; expected square, cosh, or cosh<K>"
        )))
    }

    /// (kind, exponent) codes for binary model headers.
    pub fn codes(&self) -> (u32, u32) {
        match self {
            HFunction::Square => (0, 0),
            HFunction::CoshPow(k) => (1, *k),
        }
    }

    pub fn from_codes(kind: u32, exponent: u32) -> Result<HFunction> {
        match kind {
            0 => Ok(HFunction::Square),
            1 if exponent >= 1 => Ok(HFunction::CoshPow(exponent)),
            _ => Err(Error::InvalidInput(format!(
                "unknown h codes ({kind}, {exponent})"
            ))),
        }
    }
}
