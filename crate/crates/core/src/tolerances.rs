//! Numerical thresholds shared by the geometry, flow and check code.
//!
//! Every threshold can be overridden from a JSON file (see [`Tolerances::from_json`]);
//! fields that are missing keep their default.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative threshold on `|f(n+1)^2 - f(n)^2|` (scaled by `max f^2`) below which the
/// difference-quotient curvatures are replaced by the shape-operator route.
pub const DEGENERATE_BAND_REL: f64 = 1e-9;

/// Relative sine threshold for edge parallelism in the mixed area.
pub const PARALLEL_REL: f64 = 1e-9;

/// Allowed deviation of a normal seed from unit length.
pub const SEED_UNIT: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub degenerate_band: f64,
    pub parallel: f64,
    /// Unit-normal defect `|a^2 + b^2 - 1|`.
    pub unit_normal: f64,
    /// Circularity residual relative to the face diameter.
    pub circularity: f64,
    /// Closed-form vs shape-operator curvature, relative.
    pub curvature_consistency: f64,
    /// Steiner residual relative to `A(x)`.
    pub steiner: f64,
    /// Polygon mixed areas vs determinant forms, relative.
    pub mixed_area_identity: f64,
    /// Per-face geometry at an arbitrary rotation index vs closed forms.
    pub rotational: f64,
    /// Pinned-constraint residual after projection.
    pub constraint: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            degenerate_band: DEGENERATE_BAND_REL,
            parallel: PARALLEL_REL,
            unit_normal: 1e-12,
            circularity: 1e-10,
            curvature_consistency: 1e-9,
            steiner: 1e-10,
            mixed_area_identity: 1e-10,
            rotational: 1e-10,
            constraint: 1e-12,
        }
    }
}

#[derive(Deserialize)]
struct TolerancesFile {
    version: u32,
    #[serde(default)]
    tolerances: Tolerances,
}

impl Tolerances {
    /// Parses `{"version": 1, "tolerances": {...}}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: TolerancesFile = serde_json::from_str(text)?;
        if file.version != 1 {
            return Err(Error::Config(format!(
                "unsupported tolerance file version {}",
                file.version
            )));
        }
        file.tolerances.validate()?;
        Ok(file.tolerances)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            ("degenerate_band", self.degenerate_band),
            ("parallel", self.parallel),
            ("unit_normal", self.unit_normal),
            ("circularity", self.circularity),
            ("curvature_consistency", self.curvature_consistency),
            ("steiner", self.steiner),
            ("mixed_area_identity", self.mixed_area_identity),
            ("rotational", self.rotational),
            ("constraint", self.constraint),
        ];
        for (name, value) in all {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!("tolerance {name} must be positive, got {value}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_override_keeps_defaults() {
        let tol = Tolerances::from_json(r#"{"version": 1, "tolerances": {"steiner": 1e-8}}"#).unwrap();
        assert_eq!(tol.steiner, 1e-8);
        assert_eq!(tol.parallel, PARALLEL_REL);
    }

    #[test]
    fn rejects_bad_version_and_nonpositive() {
        assert!(Tolerances::from_json(r#"{"version": 2}"#).is_err());
        assert!(Tolerances::from_json(r#"{"version": 1, "tolerances": {"steiner": 0.0}}"#).is_err());
        assert!(Tolerances::from_json(r#"{"version": 1, "tolerances": {"bogus": 1.0}}"#).is_err());
    }
}
