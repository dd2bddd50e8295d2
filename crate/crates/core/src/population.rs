//! Uniform agent grids and their restriction to arcs.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::torus::{distance, torus_add, ContentPoint, SpaceConfig, TorusInterval, GEOMETRY_TOL};

/// Tolerance for spacing and endpoint checks on restricted sets.
const SPACING_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Consumer,
    Producer,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Consumer => "consumer",
            Role::Producer => "producer",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PopulationError {
    #[error("invalid {role} count {count}")]
    InvalidCount { role: &'static str, count: usize },
    #[error("interval holds {found} grid points, need at least 2")]
    TooSparse { found: usize },
    #[error("spacing violation: {0}")]
    SpacingViolation(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentGrid {
    pub role: Role,
    pub count: usize,
    pub spacing: f64,
    pub anchor: ContentPoint,
    pub points: Vec<ContentPoint>,
}

impl AgentGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

pub fn build_grid(
    role: Role,
    count: usize,
    anchor: ContentPoint,
    cfg: &SpaceConfig,
) -> Result<AgentGrid, PopulationError> {
    let min = match role {
        Role::Consumer => 2,
        Role::Producer => 1,
    };
    if count < min {
        return Err(PopulationError::InvalidCount {
            role: role.as_str(),
            count,
        });
    }
    let spacing = cfg.period() / count as f64;
    let points = (0..count)
        .map(|k| torus_add(anchor, k as f64 * spacing, cfg))
        .collect();
    Ok(AgentGrid {
        role,
        count,
        spacing,
        anchor,
        points,
    })
}

/// Grid points that fall in one interval, ordered from the interval start.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteIntervalSet {
    pub interval: TorusInterval,
    /// Grid indices of the members.
    pub indices: Vec<usize>,
    pub members: Vec<ContentPoint>,
    pub spacing: f64,
    /// `mid(C_δ)`, halfway along the arc from first to last member.
    pub midpoint: ContentPoint,
    /// `L(C_δ)`.
    pub half_length: f64,
}

impl DiscreteIntervalSet {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

pub fn restrict(
    grid: &AgentGrid,
    iv: &TorusInterval,
    cfg: &SpaceConfig,
) -> Result<DiscreteIntervalSet, PopulationError> {
    let mut hits: Vec<(f64, usize)> = grid
        .points
        .iter()
        .enumerate()
        .filter(|(_, p)| iv.contains(**p, cfg))
        .map(|(i, p)| (iv.offset_from_start(*p, cfg), i))
        .collect();
    if hits.len() < 2 {
        return Err(PopulationError::TooSparse { found: hits.len() });
    }
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));

    let delta = grid.spacing;
    for w in hits.windows(2) {
        if ((w[1].0 - w[0].0) - delta).abs() > SPACING_TOL {
            return Err(PopulationError::SpacingViolation(format!(
                "consecutive members {} and {} are {} apart, expected {}",
                w[0].1,
                w[1].1,
                w[1].0 - w[0].0,
                delta
            )));
        }
    }
    let first = hits[0].0;
    let last = hits[hits.len() - 1].0;
    if first > delta + SPACING_TOL {
        return Err(PopulationError::SpacingViolation(format!(
            "first member {first} from the interval start exceeds spacing {delta}"
        )));
    }
    if iv.length() - last > delta + SPACING_TOL {
        return Err(PopulationError::SpacingViolation(format!(
            "last member {} from the interval end exceeds spacing {delta}",
            iv.length() - last
        )));
    }

    let members: Vec<ContentPoint> = hits.iter().map(|&(_, i)| grid.points[i]).collect();
    let half_length = 0.5 * (last - first);
    if half_length > iv.half_length + GEOMETRY_TOL || (iv.half_length - half_length) > delta + SPACING_TOL {
        return Err(PopulationError::SpacingViolation(format!(
            "discrete half length {half_length} incompatible with {}",
            iv.half_length
        )));
    }
    Ok(DiscreteIntervalSet {
        interval: *iv,
        indices: hits.iter().map(|&(_, i)| i).collect(),
        midpoint: torus_add(members[0], half_length, cfg),
        members,
        spacing: delta,
        half_length,
    })
}

/// `‖mid(C_δ) − mid(I_C)‖`.
pub fn midpoint_deviation(ds: &DiscreteIntervalSet, cfg: &SpaceConfig) -> f64 {
    distance(ds.midpoint, ds.interval.midpoint, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::partition;
    use proptest::prelude::*;

    fn unit() -> SpaceConfig {
        SpaceConfig::new(1.0).unwrap()
    }

    #[test]
    fn grid_examples() {
        let c = unit();
        let g = build_grid(Role::Consumer, 4, c.point(-1.0), &c).unwrap();
        let xs: Vec<f64> = g.points.iter().map(|p| p.coord()).collect();
        assert_eq!(xs, vec![-1.0, -0.5, 0.0, 0.5]);
        assert_eq!(g.spacing, 0.5);

        let g = build_grid(Role::Consumer, 2, c.point(0.0), &c).unwrap();
        let xs: Vec<f64> = g.points.iter().map(|p| p.coord()).collect();
        assert_eq!(xs, vec![0.0, -1.0]);
        assert_eq!(g.spacing, 1.0);

        assert!(matches!(
            build_grid(Role::Consumer, 1, c.point(0.0), &c),
            Err(PopulationError::InvalidCount { .. })
        ));
        assert_eq!(build_grid(Role::Producer, 1, c.point(0.0), &c).unwrap().len(), 1);
    }

    #[test]
    fn restrict_symmetric_example() {
        let c = unit();
        let g = build_grid(Role::Consumer, 20, c.point(-1.0), &c).unwrap();
        let iv = TorusInterval::new(c.point(0.0), 0.25, &c).unwrap();
        let ds = restrict(&g, &iv, &c).unwrap();
        let xs: Vec<f64> = ds.members.iter().map(|p| p.coord()).collect();
        let expect = [-0.2, -0.1, 0.0, 0.1, 0.2];
        assert_eq!(xs.len(), 5);
        for (x, e) in xs.iter().zip(expect) {
            assert!((x - e).abs() < 1e-12);
        }
        assert!(ds.midpoint.coord().abs() < 1e-12);
        assert!((ds.half_length - 0.2).abs() < 1e-12);
        assert!(midpoint_deviation(&ds, &c) < 1e-12);
    }

    #[test]
    fn restrict_wrapping_matches_integer_enumeration() {
        // interval [0.8, 1.1) in tenths: grid index k sits at k - 10 tenths
        let c = unit();
        let g = build_grid(Role::Consumer, 20, c.point(-1.0), &c).unwrap();
        let iv = TorusInterval::new(c.point(0.95), 0.15, &c).unwrap();
        let ds = restrict(&g, &iv, &c).unwrap();
        let expected: Vec<usize> = [8i64, 9, 10]
            .iter()
            .map(|t| (t + 10).rem_euclid(20) as usize)
            .collect();
        assert_eq!(ds.indices, expected);
        assert!((ds.members[2].coord() + 1.0).abs() < 1e-12);
        assert!((ds.midpoint.coord() - 0.9).abs() < 1e-12);
        assert!((ds.half_length - 0.1).abs() < 1e-12);
    }

    #[test]
    fn restrict_too_sparse() {
        let c = unit();
        let g = build_grid(Role::Consumer, 4, c.point(-1.0), &c).unwrap();
        let iv = TorusInterval::new(c.point(0.25), 0.1, &c).unwrap();
        assert!(matches!(restrict(&g, &iv, &c), Err(PopulationError::TooSparse { .. })));
    }

    #[test]
    fn offset_interval_deviation_within_spacing() {
        let c = unit();
        let g = build_grid(Role::Consumer, 20, c.point(-1.0), &c).unwrap();
        let iv = TorusInterval::new(c.point(0.03), 0.25, &c).unwrap();
        let ds = restrict(&g, &iv, &c).unwrap();
        // members -0.2..0.2, so the discrete midpoint is 0 and the deviation 0.03
        assert!((midpoint_deviation(&ds, &c) - 0.03).abs() < 1e-12);
        assert!(midpoint_deviation(&ds, &c) <= g.spacing);
    }

    #[test]
    fn grid_gaps_are_uniform() {
        let c = SpaceConfig::new(1.7).unwrap();
        let g = build_grid(Role::Producer, 37, c.point(0.31), &c).unwrap();
        for k in 0..g.len() {
            let next = g.points[(k + 1) % g.len()];
            let step = torus_add(g.points[k], g.spacing, &c);
            assert!(distance(next, step, &c) < 1e-12);
        }
        assert!((g.spacing * g.count as f64 - c.period()).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn midpoint_identity_random(anchor in -1.0f64..1.0, mid in -1.0f64..1.0, k in 8usize..400, half in 0.05f64..0.9) {
            let c = unit();
            let g = build_grid(Role::Consumer, k, c.point(anchor), &c).unwrap();
            prop_assume!(half >= g.spacing);
            let iv = TorusInterval::new(c.point(mid), half, &c).unwrap();
            let ds = restrict(&g, &iv, &c).unwrap();
            prop_assert!(midpoint_deviation(&ds, &c) <= g.spacing + 1e-12);
            prop_assert!(ds.half_length <= half + 1e-12);
            prop_assert!(half - ds.half_length <= g.spacing + 1e-9);
        }

        #[test]
        fn partition_restrictions_cover_grid(anchor in -1.0f64..1.0, grid_anchor in -1.0f64..1.0, k in 40usize..300) {
            let c = unit();
            let g = build_grid(Role::Consumer, k, c.point(grid_anchor), &c).unwrap();
            let cells = partition(&c, 0.2, c.point(anchor)).unwrap();
            let mut seen = vec![0usize; g.len()];
            for iv in &cells {
                let ds = restrict(&g, iv, &c).unwrap();
                for &i in &ds.indices {
                    seen[i] += 1;
                }
            }
            prop_assert!(seen.iter().all(|&n| n == 1));
        }
    }
}
