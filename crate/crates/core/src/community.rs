//! Communities, rate allocations and community structures.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::best_response::solve_xstar;
use crate::demand::DemandProfile;
use crate::kernels::KernelPair;
use crate::population::{build_grid, restrict, AgentGrid, DiscreteIntervalSet, PopulationError, Role};
use crate::torus::{partition, ContentPoint, SpaceConfig, TorusError, TorusInterval};

const BUDGET_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CommunityError {
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Population(#[from] PopulationError),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("malformed structure document: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Economy {
    pub e_p: f64,
    pub e_q: f64,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Community {
    pub id: usize,
    pub interval: TorusInterval,
    pub consumers: DiscreteIntervalSet,
    pub producers: DiscreteIntervalSet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub community: usize,
    pub rate: f64,
}

/// One Dirac atom `mass · δ(x − location)` of a production profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupplyAtom {
    pub location: ContentPoint,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Production {
    pub community: usize,
    pub atoms: Vec<SupplyAtom>,
}

impl Production {
    pub fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass).sum()
    }
}

/// `α_δC(y)` rows, one per consumer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConsumptionAllocation {
    pub rows: Vec<Vec<Rate>>,
}

/// `β_δC(·|y)` rows, one per producer.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ProductionAllocation {
    pub rows: Vec<Vec<Production>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CommunityStructure {
    pub space: SpaceConfig,
    pub kernels: KernelPair,
    pub economy: Economy,
    pub consumer_grid: AgentGrid,
    pub producer_grid: AgentGrid,
    pub cell_half_length: f64,
    pub cell_anchor: ContentPoint,
    pub communities: Vec<Community>,
    pub consumption: ConsumptionAllocation,
    pub production: ProductionAllocation,
}

impl CommunityStructure {
    /// Index of the community whose consumer set contains consumer `y`.
    pub fn consumer_home(&self, y: usize) -> Option<usize> {
        self.communities
            .iter()
            .find(|c| c.consumers.indices.contains(&y))
            .map(|c| c.id)
    }

    pub fn producer_home(&self, y: usize) -> Option<usize> {
        self.communities
            .iter()
            .find(|c| c.producers.indices.contains(&y))
            .map(|c| c.id)
    }

    /// Home community of every agent of one role; `usize::MAX` marks uncovered agents.
    pub fn homes(&self, role: Role) -> Vec<usize> {
        let n = match role {
            Role::Consumer => self.consumer_grid.len(),
            Role::Producer => self.producer_grid.len(),
        };
        let mut out = vec![usize::MAX; n];
        for c in &self.communities {
            let set = match role {
                Role::Consumer => &c.consumers,
                Role::Producer => &c.producers,
            };
            for &i in &set.indices {
                if out[i] == usize::MAX {
                    out[i] = c.id;
                }
            }
        }
        out
    }
}

/// Builds the canonical structure of the class `𝒮_δ(L_C)`.
///
/// Every consumer spends `E_p` on its cell and every producer puts a single
/// atom of mass `E_q` at its best response against its cell's demand.
pub fn build_canonical(
    space: SpaceConfig,
    kernels: KernelPair,
    economy: Economy,
    consumer_grid: AgentGrid,
    producer_grid: AgentGrid,
    cell_half_length: f64,
    cell_anchor: ContentPoint,
) -> Result<CommunityStructure, CommunityError> {
    let b = kernels.interest.concavity_bound();
    let limit = b.min(space.half_length);
    if !(2.0 * cell_half_length < limit) {
        return Err(CommunityError::PreconditionViolated(format!(
            "2L_C = {} must be below min(b, L) = {limit}",
            2.0 * cell_half_length
        )));
    }
    for (role, g) in [("consumer", &consumer_grid), ("producer", &producer_grid)] {
        if !(g.spacing < cell_half_length) {
            return Err(CommunityError::PreconditionViolated(format!(
                "{role} spacing {} must be below L_C = {cell_half_length}",
                g.spacing
            )));
        }
    }
    let cells = partition(&space, cell_half_length, cell_anchor)?;
    let communities = cells
        .iter()
        .enumerate()
        .map(|(id, iv)| {
            Ok(Community {
                id,
                interval: *iv,
                consumers: restrict(&consumer_grid, iv, &space)?,
                producers: restrict(&producer_grid, iv, &space)?,
            })
        })
        .collect::<Result<Vec<_>, PopulationError>>()?;

    let mut consumption = ConsumptionAllocation {
        rows: vec![Vec::new(); consumer_grid.len()],
    };
    let mut production = ProductionAllocation {
        rows: vec![Vec::new(); producer_grid.len()],
    };
    for c in &communities {
        for &i in &c.consumers.indices {
            consumption.rows[i].push(Rate {
                community: c.id,
                rate: economy.e_p,
            });
        }
        let members: Vec<(ContentPoint, f64)> = c.consumers.members.iter().map(|&p| (p, economy.e_p)).collect();
        let demand = DemandProfile::new(
            c.id,
            &members,
            c.interval.midpoint,
            consumer_grid.spacing,
            kernels.interest,
            space,
        );
        for (&i, &y) in c.producers.indices.iter().zip(&c.producers.members) {
            let r = solve_xstar(y, &demand, &kernels.ability).map_err(|e| CommunityError::PreconditionViolated(e.to_string()))?;
            production.rows[i].push(Production {
                community: c.id,
                atoms: vec![SupplyAtom {
                    location: r.x_star,
                    mass: economy.e_q,
                }],
            });
        }
    }

    Ok(CommunityStructure {
        space,
        kernels,
        economy,
        consumer_grid,
        producer_grid,
        cell_half_length,
        cell_anchor,
        communities,
        consumption,
        production,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    Coverage,
    Budget,
    Positivity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    pub role: Role,
    pub agent: usize,
    pub community: Option<usize>,
    pub detail: String,
}

/// Lists every covering, budget and positivity violation; empty when the structure is feasible.
pub fn validate_structure(s: &CommunityStructure) -> Vec<Violation> {
    let mut out = Vec::new();
    for role in [Role::Consumer, Role::Producer] {
        for (agent, home) in s.homes(role).into_iter().enumerate() {
            if home == usize::MAX {
                out.push(Violation {
                    kind: ViolationKind::Coverage,
                    role,
                    agent,
                    community: None,
                    detail: "agent belongs to no community".into(),
                });
            }
        }
    }
    for (agent, row) in s.consumption.rows.iter().enumerate() {
        let total: f64 = row.iter().map(|r| r.rate).sum();
        if total > s.economy.e_p + BUDGET_TOL || row.iter().any(|r| r.rate < 0.0) {
            out.push(Violation {
                kind: ViolationKind::Budget,
                role: Role::Consumer,
                agent,
                community: None,
                detail: format!("consumption total {total} against budget {}", s.economy.e_p),
            });
        }
    }
    for (agent, row) in s.production.rows.iter().enumerate() {
        let total: f64 = row.iter().map(Production::mass).sum();
        if total > s.economy.e_q + BUDGET_TOL || row.iter().flat_map(|p| &p.atoms).any(|a| a.mass < 0.0) {
            out.push(Violation {
                kind: ViolationKind::Budget,
                role: Role::Producer,
                agent,
                community: None,
                detail: format!("production total {total} against budget {}", s.economy.e_q),
            });
        }
    }
    for c in &s.communities {
        for &y in &c.consumers.indices {
            let rate: f64 = s.consumption.rows[y]
                .iter()
                .filter(|r| r.community == c.id)
                .map(|r| r.rate)
                .sum();
            if !(rate > 0.0) {
                out.push(Violation {
                    kind: ViolationKind::Positivity,
                    role: Role::Consumer,
                    agent: y,
                    community: Some(c.id),
                    detail: format!("member consumption rate {rate}"),
                });
            }
        }
        for &y in &c.producers.indices {
            let mass: f64 = s.production.rows[y]
                .iter()
                .filter(|p| p.community == c.id)
                .map(Production::mass)
                .sum();
            if !(mass > 0.0) {
                out.push(Violation {
                    kind: ViolationKind::Positivity,
                    role: Role::Producer,
                    agent: y,
                    community: Some(c.id),
                    detail: format!("member production mass {mass}"),
                });
            }
        }
    }
    out
}

/// Serialised grid parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDocument {
    pub count: usize,
    pub anchor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CommunityDocument {
    pub id: usize,
    pub midpoint: f64,
    pub half_length: f64,
    pub consumers: Vec<usize>,
    pub producers: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureDocument {
    pub schema: String,
    pub space: SpaceConfig,
    pub kernels: KernelPair,
    pub economy: Economy,
    pub consumer_grid: GridDocument,
    pub producer_grid: GridDocument,
    pub cell_half_length: f64,
    pub cell_anchor: f64,
    pub communities: Vec<CommunityDocument>,
    pub consumption: Vec<Vec<Rate>>,
    pub production: Vec<Vec<Production>>,
}

pub const STRUCTURE_SCHEMA: &str = "infocomm.structure.v1";

impl CommunityStructure {
    pub fn to_document(&self) -> StructureDocument {
        StructureDocument {
            schema: STRUCTURE_SCHEMA.into(),
            space: self.space,
            kernels: self.kernels,
            economy: self.economy,
            consumer_grid: GridDocument {
                count: self.consumer_grid.count,
                anchor: self.consumer_grid.anchor.coord(),
            },
            producer_grid: GridDocument {
                count: self.producer_grid.count,
                anchor: self.producer_grid.anchor.coord(),
            },
            cell_half_length: self.cell_half_length,
            cell_anchor: self.cell_anchor.coord(),
            communities: self
                .communities
                .iter()
                .map(|c| CommunityDocument {
                    id: c.id,
                    midpoint: c.interval.midpoint.coord(),
                    half_length: c.interval.half_length,
                    consumers: c.consumers.indices.clone(),
                    producers: c.producers.indices.clone(),
                })
                .collect(),
            consumption: self.consumption.rows.clone(),
            production: self.production.rows.clone(),
        }
    }

    /// Rebuilds a structure, re-deriving grids and member sets and checking them
    /// against the stored ids.
    pub fn from_document(doc: StructureDocument) -> Result<Self, CommunityError> {
        let schema = |m: String| CommunityError::Schema(m);
        if doc.schema != STRUCTURE_SCHEMA {
            return Err(schema(format!("unknown schema {:?}", doc.schema)));
        }
        let space = SpaceConfig::new(doc.space.half_length)?;
        let consumer_grid = build_grid(Role::Consumer, doc.consumer_grid.count, space.point(doc.consumer_grid.anchor), &space)?;
        let producer_grid = build_grid(Role::Producer, doc.producer_grid.count, space.point(doc.producer_grid.anchor), &space)?;
        if doc.consumption.len() != consumer_grid.len() || doc.production.len() != producer_grid.len() {
            return Err(schema("allocation rows do not match grid sizes".into()));
        }
        let mut communities = Vec::with_capacity(doc.communities.len());
        for (k, cd) in doc.communities.iter().enumerate() {
            if cd.id != k {
                return Err(schema(format!("community ids must be 0..n, found {} at {k}", cd.id)));
            }
            let interval = TorusInterval::new(space.point(cd.midpoint), cd.half_length, &space)?;
            let consumers = restrict(&consumer_grid, &interval, &space)?;
            let producers = restrict(&producer_grid, &interval, &space)?;
            if consumers.indices != cd.consumers || producers.indices != cd.producers {
                return Err(schema(format!("member ids of community {k} disagree with the grids")));
            }
            communities.push(Community {
                id: k,
                interval,
                consumers,
                producers,
            });
        }
        let n = communities.len();
        let bad_rate = doc.consumption.iter().flatten().any(|r| r.community >= n || !r.rate.is_finite());
        let bad_atom = doc.production.iter().flatten().any(|p| {
            p.community >= n || p.atoms.iter().any(|a| !a.mass.is_finite() || !a.location.coord().is_finite())
        });
        if bad_rate || bad_atom {
            return Err(schema("allocation refers to unknown community or holds non-finite values".into()));
        }
        let production = doc
            .production
            .into_iter()
            .map(|row| {
                row.into_iter()
                    .map(|p| Production {
                        community: p.community,
                        atoms: p
                            .atoms
                            .into_iter()
                            .map(|a| SupplyAtom {
                                location: space.point(a.location.coord()),
                                mass: a.mass,
                            })
                            .collect(),
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            space,
            kernels: doc.kernels,
            economy: doc.economy,
            consumer_grid,
            producer_grid,
            cell_half_length: doc.cell_half_length,
            cell_anchor: space.point(doc.cell_anchor),
            communities,
            consumption: ConsumptionAllocation { rows: doc.consumption },
            production: ProductionAllocation { rows: production },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{AbilityKernel, InterestKernel};
    use crate::torus::distance;

    pub(crate) fn default_structure(k_d: usize, k_s: usize) -> CommunityStructure {
        let space = SpaceConfig::new(1.0).unwrap();
        let kernels = KernelPair {
            interest: InterestKernel::quadratic(0.3, 0.4, 1.0),
            ability: AbilityKernel::truncated_parabola(0.8, 0.5),
        };
        let economy = Economy {
            e_p: 1.0,
            e_q: 1.0,
            cost: 0.05,
        };
        let gd = build_grid(Role::Consumer, k_d, space.point(-1.0), &space).unwrap();
        let gs = build_grid(Role::Producer, k_s, space.point(-1.0), &space).unwrap();
        build_canonical(space, kernels, economy, gd, gs, 0.2, space.point(-1.0)).unwrap()
    }

    #[test]
    fn default_counts() {
        let s = default_structure(400, 200);
        assert_eq!(s.communities.len(), 5);
        for c in &s.communities {
            assert_eq!(c.consumers.len(), 80);
            assert_eq!(c.producers.len(), 40);
        }
        assert!(validate_structure(&s).is_empty());
        let mass: f64 = s.production.rows.iter().flatten().map(Production::mass).sum();
        let rate: f64 = s.consumption.rows.iter().flatten().map(|r| r.rate).sum();
        assert_eq!(mass, 200.0);
        assert_eq!(rate, 400.0);
    }

    #[test]
    fn single_membership() {
        let s = default_structure(400, 200);
        for role in [Role::Consumer, Role::Producer] {
            let mut count = vec![0; if role == Role::Consumer { 400 } else { 200 }];
            for c in &s.communities {
                let set = if role == Role::Consumer { &c.consumers } else { &c.producers };
                for &i in &set.indices {
                    count[i] += 1;
                }
            }
            assert!(count.iter().all(|&n| n == 1));
        }
    }

    #[test]
    fn edge_atom_moves_inward() {
        let s = default_structure(400, 200);
        let c = &s.communities[0];
        let edge = c.producers.indices[0];
        let y = s.producer_grid.points[edge];
        let x = s.production.rows[edge][0].atoms[0].location;
        assert!(x.coord() > y.coord() && x.coord() < c.interval.midpoint.coord());
    }

    #[test]
    fn midpoint_producer_stays_at_midpoint() {
        // shifting consumers by half a spacing centres their set on mid(I_C)
        let space = SpaceConfig::new(1.0).unwrap();
        let s = default_structure(400, 200);
        let gd = build_grid(Role::Consumer, 400, space.point(-0.9975), &space).unwrap();
        let gs = build_grid(Role::Producer, 200, space.point(-1.0), &space).unwrap();
        let s2 = build_canonical(space, s.kernels, s.economy, gd, gs.clone(), 0.2, space.point(-1.0)).unwrap();
        let c = &s2.communities[0];
        assert!(distance(c.consumers.midpoint, c.interval.midpoint, &space) < 1e-12);
        let k = c.producers.indices[20];
        assert!(distance(gs.points[k], c.interval.midpoint, &space) < 1e-12);
        let xk = s2.production.rows[k][0].atoms[0].location;
        assert!(distance(xk, c.interval.midpoint, &space) < 1e-9);
    }

    #[test]
    fn validation_flags_violations() {
        let mut s = default_structure(400, 200);
        s.consumption.rows[7][0].rate = 0.0;
        let v = validate_structure(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Positivity);

        let mut s = default_structure(400, 200);
        s.production.rows[3][0].atoms[0].mass = 1.1;
        let v = validate_structure(&s);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].kind, ViolationKind::Budget);

        let mut s = default_structure(400, 200);
        s.communities[0].consumers.indices.retain(|&i| i != 5);
        assert!(validate_structure(&s).iter().any(|v| v.kind == ViolationKind::Coverage));
    }

    #[test]
    fn rebuild_is_bit_identical_and_round_trips() {
        let a = default_structure(400, 200);
        let b = default_structure(400, 200);
        assert_eq!(a, b);
        let json = serde_json::to_string(&a.to_document()).unwrap();
        let doc: StructureDocument = serde_json::from_str(&json).unwrap();
        let c = CommunityStructure::from_document(doc).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn preconditions() {
        let space = SpaceConfig::new(1.0).unwrap();
        let s = default_structure(400, 200);
        let gd = build_grid(Role::Consumer, 400, space.point(-1.0), &space).unwrap();
        let gs = build_grid(Role::Producer, 200, space.point(-1.0), &space).unwrap();
        let wide = build_canonical(space, s.kernels, s.economy, gd.clone(), gs.clone(), 0.5, space.point(-1.0));
        assert!(matches!(wide, Err(CommunityError::PreconditionViolated(_))));
        let odd = build_canonical(space, s.kernels, s.economy, gd.clone(), gs.clone(), 0.3, space.point(-1.0));
        assert!(matches!(odd, Err(CommunityError::Torus(TorusError::NonDivisible { .. }))));
        let coarse = build_grid(Role::Producer, 8, space.point(-1.0), &space).unwrap();
        let sparse = build_canonical(space, s.kernels, s.economy, gd, coarse, 0.2, space.point(-1.0));
        assert!(matches!(sparse, Err(CommunityError::PreconditionViolated(_))));
    }
}
