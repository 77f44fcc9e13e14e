//! Points, integer charges, and validated charge configurations.
//!
//! A `ChargeConfig` is the singularity data consumed by the transport,
//! duality, and branched modules: positions `a_1..a_N` in `R^m` with
//! integer degrees `d_1..d_N` summing to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hard cap on the ambient dimension; keeps lattice sums in the branched
/// module tractable.
pub const MAX_DIMENSION: usize = 8;

/// A point in `R^m`, `1 <= m <= 8`, all coordinates finite.
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    coords: Vec<f64>,
}

impl Point {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.len() > MAX_DIMENSION {
            return Err(Error::InvalidPoint(format!(
                "dimension {} outside 1..={}",
                coords.len(),
                MAX_DIMENSION
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidPoint(format!("non-finite coordinate {bad}")));
        }
        Ok(Point { coords })
    }

    /// Convenience constructor for the planar case.
    pub fn xy(x: f64, y: f64) -> Self {
        Point::new(vec![x, y]).expect("finite planar point")
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn distance(&self, other: &Point) -> Result<f64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(dist(self, other))
    }
}

/// Euclidean distance between two points of equal dimension.
pub fn euclidean_distance(p: &Point, q: &Point) -> Result<f64> {
    p.distance(q)
}

/// Distance for points already known to share a dimension.
pub(crate) fn dist(p: &Point, q: &Point) -> f64 {
    debug_assert_eq!(p.dim(), q.dim());
    p.coords
        .iter()
        .zip(&q.coords)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// A topological singularity: a position and a nonzero integer degree.
#[derive(Clone, Debug, PartialEq)]
pub struct Charge {
    pub position: Point,
    pub degree: i32,
}

/// Raw on-disk form of a charge, prior to validation.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawCharge {
    pub pos: Vec<f64>,
    pub deg: i32,
}

/// A validated set of charges: uniform dimension, pairwise distinct
/// positions, nonzero degrees, and zero total degree.
#[derive(Clone, Debug, PartialEq)]
pub struct ChargeConfig {
    charges: Vec<Charge>,
    dimension: usize,
}

impl ChargeConfig {
    /// An empty configuration in `R^m`. Transport over it is trivially zero.
    pub fn empty(dimension: usize) -> Result<Self> {
        if dimension == 0 || dimension > MAX_DIMENSION {
            return Err(Error::InvalidPoint(format!(
                "dimension {dimension} outside 1..={MAX_DIMENSION}"
            )));
        }
        Ok(ChargeConfig {
            charges: Vec::new(),
            dimension,
        })
    }

    pub fn charges(&self) -> &[Charge] {
        &self.charges
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.charges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.charges.is_empty()
    }

    /// Sum of `|d_i|` over all charges; the number of unit terminals after
    /// splitting.
    pub fn total_unit_charge(&self) -> u64 {
        self.charges
            .iter()
            .map(|c| c.degree.unsigned_abs() as u64)
            .sum()
    }

    pub fn to_raw(&self) -> Vec<RawCharge> {
        self.charges
            .iter()
            .map(|c| RawCharge {
                pos: c.position.coords().to_vec(),
                deg: c.degree,
            })
            .collect()
    }

    /// Serializes to the JSON interchange form: an array of `{"pos": [...], "deg": k}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_raw()).expect("raw charges serialize")
    }

    /// Parses and validates the JSON interchange form.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: Vec<RawCharge> =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        validate_config(&raw)
    }
}

/// Validates raw charges into a `ChargeConfig`.
///
/// Rejects zero degrees (removable singularities), duplicated positions
/// (exact coordinate equality; fuzzy merging is the caller's business), and
/// a nonvanishing total degree.
pub fn validate_config(raw: &[RawCharge]) -> Result<ChargeConfig> {
    if raw.is_empty() {
        return ChargeConfig::empty(2);
    }
    let dimension = raw[0].pos.len();
    let mut charges = Vec::with_capacity(raw.len());
    for (index, rc) in raw.iter().enumerate() {
        if rc.deg == 0 {
            return Err(Error::RemovableCharge { index });
        }
        if rc.pos.len() != dimension {
            return Err(Error::DimensionMismatch {
                expected: dimension,
                got: rc.pos.len(),
            });
        }
        charges.push(Charge {
            position: Point::new(rc.pos.clone())?,
            degree: rc.deg,
        });
    }
    // Exact-equality duplicate scan via a lexicographic sort; coordinates
    // are validated finite above, so total order is fine.
    let mut order: Vec<usize> = (0..charges.len()).collect();
    order.sort_by(|&a, &b| {
        charges[a]
            .position
            .coords()
            .partial_cmp(charges[b].position.coords())
            .expect("finite coordinates are totally ordered")
    });
    for w in order.windows(2) {
        if charges[w[0]].position.coords() == charges[w[1]].position.coords() {
            return Err(Error::DuplicatePosition {
                first: w[0].min(w[1]),
                second: w[0].max(w[1]),
            });
        }
    }
    let total: i64 = charges.iter().map(|c| c.degree as i64).sum();
    if total != 0 {
        return Err(Error::TopologicalImbalance { total });
    }
    Ok(ChargeConfig { charges, dimension })
}

/// Builds a config from `(position, degree)` pairs; same checks as
/// [`validate_config`].
pub fn config_from_parts(parts: &[(Vec<f64>, i32)]) -> Result<ChargeConfig> {
    let raw: Vec<RawCharge> = parts
        .iter()
        .map(|(pos, deg)| RawCharge {
            pos: pos.clone(),
            deg: *deg,
        })
        .collect();
    validate_config(&raw)
}
