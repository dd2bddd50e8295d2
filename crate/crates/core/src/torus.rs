//! One-dimensional torus content space `[-L, L)`.
//!
//! Points are stored as their canonical representative in `[-L, L)`. All
//! reductions use explicit branch conditionals so that `-L` and `L - ulp`
//! stay distinct.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used for divisibility and interval-boundary tests.
pub const GEOMETRY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("half length must be positive and finite, got {0}")]
    InvalidHalfLength(f64),
    #[error("interval half length {half} outside [0, {limit}]")]
    InvalidInterval { half: f64, limit: f64 },
    #[error("L / L_C = {ratio} is not an integer")]
    NonDivisible { ratio: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    pub half_length: f64,
}

impl SpaceConfig {
    pub fn new(half_length: f64) -> Result<Self, TorusError> {
        if !(half_length.is_finite() && half_length > 0.0) {
            return Err(TorusError::InvalidHalfLength(half_length));
        }
        Ok(Self { half_length })
    }

    /// Circumference `2L`.
    #[inline]
    pub fn period(&self) -> f64 {
        2.0 * self.half_length
    }

    /// Reduces an arbitrary real to `[-L, L)`.
    #[inline]
    pub fn canonical(&self, x: f64) -> f64 {
        let l = self.half_length;
        let p = self.period();
        let mut r = if x >= l {
            x - p
        } else if x < -l {
            x + p
        } else {
            return x;
        };
        if !(-l..l).contains(&r) {
            // more than one period away
            r = (x + l).rem_euclid(p) - l;
        }
        if r >= l {
            // rounding pushed -L - tiny onto +L
            -l
        } else {
            r
        }
    }

    pub fn point(&self, x: f64) -> ContentPoint {
        ContentPoint(self.canonical(x))
    }
}

/// A content type on the torus, always canonical for the space it was built in.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContentPoint(f64);

impl ContentPoint {
    #[inline]
    pub fn coord(self) -> f64 {
        self.0
    }
}

/// Torus distance `min(|a-b|, 2L - |a-b|)`.
#[inline]
pub fn distance(a: ContentPoint, b: ContentPoint, cfg: &SpaceConfig) -> f64 {
    raw_distance(a.0, b.0, cfg)
}

/// Torus distance on raw canonical coordinates.
#[inline]
pub fn raw_distance(a: f64, b: f64, cfg: &SpaceConfig) -> f64 {
    let d = (a - b).abs();
    let alt = cfg.period() - d;
    if alt < d {
        alt
    } else {
        d
    }
}

/// Torus addition `a + t` reduced to `[-L, L)`.
#[inline]
pub fn torus_add(a: ContentPoint, t: f64, cfg: &SpaceConfig) -> ContentPoint {
    // reduce the shift first so that whole turns are exact no-ops
    cfg.point(a.0 + cfg.canonical(t))
}

/// Signed displacement from `from` to `to`, in `[-L, L)`.
#[inline]
pub fn signed_offset(from: ContentPoint, to: ContentPoint, cfg: &SpaceConfig) -> f64 {
    cfg.canonical(to.0 - from.0)
}

/// Half-open arc `[mid - half, mid + half)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusInterval {
    pub midpoint: ContentPoint,
    pub half_length: f64,
}

impl TorusInterval {
    pub fn new(midpoint: ContentPoint, half_length: f64, cfg: &SpaceConfig) -> Result<Self, TorusError> {
        if !(half_length >= 0.0 && half_length <= cfg.half_length) {
            return Err(TorusError::InvalidInterval {
                half: half_length,
                limit: cfg.half_length,
            });
        }
        Ok(Self {
            midpoint,
            half_length,
        })
    }

    /// Left (closed) endpoint.
    pub fn start(&self, cfg: &SpaceConfig) -> ContentPoint {
        torus_add(self.midpoint, -self.half_length, cfg)
    }

    /// Right (open) endpoint.
    pub fn end(&self, cfg: &SpaceConfig) -> ContentPoint {
        torus_add(self.midpoint, self.half_length, cfg)
    }

    /// `|I_C| = 2 L_C`.
    pub fn length(&self) -> f64 {
        2.0 * self.half_length
    }

    /// Offset of `p` from the left endpoint, measured in `[0, 2L)`.
    ///
    /// Points within [`GEOMETRY_TOL`] below the start are folded onto it.
    pub fn offset_from_start(&self, p: ContentPoint, cfg: &SpaceConfig) -> f64 {
        let mut o = p.0 - self.start(cfg).0;
        if o < 0.0 {
            o += cfg.period();
        }
        if o > cfg.period() - GEOMETRY_TOL || o < 0.0 {
            o = 0.0;
        }
        o
    }

    pub fn contains(&self, p: ContentPoint, cfg: &SpaceConfig) -> bool {
        self.offset_from_start(p, cfg) < self.length() - GEOMETRY_TOL
    }
}

/// Tiles the space with `L / L_C` disjoint arcs, the first starting at `anchor`.
///
/// The returned intervals are ordered by midpoint coordinate.
pub fn partition(
    cfg: &SpaceConfig,
    cell_half_length: f64,
    anchor: ContentPoint,
) -> Result<Vec<TorusInterval>, TorusError> {
    if !(cell_half_length > 0.0 && cell_half_length <= cfg.half_length) {
        return Err(TorusError::InvalidInterval {
            half: cell_half_length,
            limit: cfg.half_length,
        });
    }
    let ratio = cfg.half_length / cell_half_length;
    let count = ratio.round();
    if (ratio - count).abs() > GEOMETRY_TOL * ratio.max(1.0) || count < 1.0 {
        return Err(TorusError::NonDivisible { ratio });
    }
    let mut cells: Vec<TorusInterval> = (0..count as usize)
        .map(|k| TorusInterval {
            midpoint: torus_add(anchor, (2 * k + 1) as f64 * cell_half_length, cfg),
            half_length: cell_half_length,
        })
        .collect();
    cells.sort_by(|a, b| a.midpoint.coord().total_cmp(&b.midpoint.coord()));
    Ok(cells)
}
