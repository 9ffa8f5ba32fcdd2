use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Constant-curvature model geometry used for every triangle of a surface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    Euclidean,
    Hyperbolic,
    Spherical,
}

impl Geometry {
    pub const ALL: [Geometry; 3] = [Geometry::Euclidean, Geometry::Hyperbolic, Geometry::Spherical];

    /// Supremum of admissible edge lengths (`π` on the unit sphere).
    pub fn length_bound(self) -> f64 {
        match self {
            Geometry::Spherical => PI,
            _ => f64::INFINITY,
        }
    }

    /// Whether `l` lies in the open length interval `J` of this geometry.
    pub fn admits_length(self, l: f64) -> bool {
        l.is_finite() && l > 0.0 && l < self.length_bound()
    }

    /// The substitution `l`, `sinh l` or `sin l` appearing in the angle
    /// derivative formulas.
    pub fn m(self, l: f64) -> f64 {
        match self {
            Geometry::Euclidean => l,
            Geometry::Hyperbolic => l.sinh(),
            Geometry::Spherical => l.sin(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Geometry::Euclidean => "euclidean",
            Geometry::Hyperbolic => "hyperbolic",
            Geometry::Spherical => "spherical",
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Geometry {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "e" | "euclidean" => Ok(Geometry::Euclidean),
            "h" | "hyperbolic" => Ok(Geometry::Hyperbolic),
            "s" | "spherical" => Ok(Geometry::Spherical),
            other => Err(format!("unknown geometry '{other}'")),
        }
    }
}
