//! Utilities, ε-equilibrium verification and the grid-refinement sweep.

use std::collections::HashMap;
use std::sync::Mutex;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::best_response::{best_consumer_move, best_producer_move, solve_xstar, solve_xstar_continuous, Market, MoveReport};
use crate::community::{build_canonical, CommunityError, CommunityStructure, Economy};
use crate::demand::{riemann_gap, ContentFunction, ContinuousDemand};
use crate::kernels::{validate_assumption1, KernelPair};
use crate::numerics::adaptive_simpson;
use crate::population::{build_grid, Role};
use crate::torus::{distance, torus_add, ContentPoint, SpaceConfig};

/// Absolute tolerance of the continuous consumer integral.
const CONTINUOUS_QUAD_TOL: f64 = 1e-8;
/// Evaluation points for the Riemann comparison.
const RIEMANN_POINTS: usize = 2001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("{role} {agent} is not a member of community {community}")]
    NotMember {
        role: &'static str,
        agent: usize,
        community: usize,
    },
}

/// `U^(d)_δC(y) = α_δC(y) Σ_atoms mass [p(x|y) q(x|z) − c]`.
pub fn consumer_utility(y: usize, community: usize, s: &CommunityStructure, m: &Market) -> Result<f64, EquilibriumError> {
    let member = s
        .communities
        .get(community)
        .is_some_and(|c| c.consumers.indices.contains(&y));
    if !member {
        return Err(EquilibriumError::NotMember {
            role: "consumer",
            agent: y,
            community,
        });
    }
    let rate: f64 = s.consumption.rows[y]
        .iter()
        .filter(|r| r.community == community)
        .map(|r| r.rate)
        .sum();
    Ok(rate * m.consumer_value(community, m.consumer_points[y]))
}

/// `U^(s)_δC(y) = Σ_atoms mass [q(x|y) P_δC(x) − α_δC c]`.
pub fn producer_utility(y: usize, community: usize, s: &CommunityStructure, m: &Market) -> Result<f64, EquilibriumError> {
    let member = s
        .communities
        .get(community)
        .is_some_and(|c| c.producers.indices.contains(&y));
    if !member {
        return Err(EquilibriumError::NotMember {
            role: "producer",
            agent: y,
            community,
        });
    }
    let point = m.producer_points[y];
    Ok(s.production.rows[y]
        .iter()
        .filter(|p| p.community == community)
        .flat_map(|p| &p.atoms)
        .map(|a| a.mass * m.producer_atom_value(community, point, a.location))
        .sum())
}

/// Per-agent utilities in their home community and summed over the structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityReport {
    pub consumer_home: Vec<f64>,
    pub consumer_total: Vec<f64>,
    pub producer_home: Vec<f64>,
    pub producer_total: Vec<f64>,
}

pub fn utility_report(s: &CommunityStructure, m: &Market) -> UtilityReport {
    let homes_d = s.homes(Role::Consumer);
    let homes_s = s.homes(Role::Producer);
    let consumer_home = homes_d
        .par_iter()
        .enumerate()
        .map(|(y, &c)| consumer_utility(y, c, s, m).unwrap_or(f64::NAN))
        .collect();
    let consumer_total = (0..s.consumer_grid.len())
        .into_par_iter()
        .map(|y| {
            s.consumption.rows[y]
                .iter()
                .map(|r| r.rate * m.consumer_value(r.community, m.consumer_points[y]))
                .sum()
        })
        .collect();
    let producer_home = homes_s
        .par_iter()
        .enumerate()
        .map(|(y, &c)| producer_utility(y, c, s, m).unwrap_or(f64::NAN))
        .collect();
    let producer_total = (0..s.producer_grid.len())
        .into_par_iter()
        .map(|y| {
            s.production.rows[y]
                .iter()
                .flat_map(|p| p.atoms.iter().map(move |a| (p.community, a)))
                .map(|(c, a)| a.mass * m.producer_atom_value(c, m.producer_points[y], a.location))
                .sum()
        })
        .collect();
    UtilityReport {
        consumer_home,
        consumer_total,
        producer_home,
        producer_total,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub agent: usize,
    pub role: Role,
    pub home_community: Option<usize>,
    pub u_current: f64,
    pub u_best_deviation: f64,
    pub gap: f64,
    /// Gap times the spacing of the opposite role (`δ_s` for consumers, `δ_d` for producers).
    pub scaled_gap: f64,
    pub best_community: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositivityCheck {
    pub checked: bool,
    pub all_positive: bool,
    pub min_consumer_utility: f64,
    pub min_producer_utility: f64,
    pub notice: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub epsilon_target: f64,
    /// Largest scaled consumer gap.
    pub max_consumer_gap: f64,
    /// Largest scaled producer gap.
    pub max_producer_gap: f64,
    pub max_consumer_gap_raw: f64,
    pub max_producer_gap_raw: f64,
    pub is_epsilon_equilibrium: bool,
    pub positivity: PositivityCheck,
    pub rows: Vec<GapRow>,
}

impl EquilibriumReport {
    /// `max(max_consumer_gap, max_producer_gap)`.
    pub fn max_gap(&self) -> f64 {
        self.max_consumer_gap.max(self.max_producer_gap)
    }

    pub fn max_raw_gap(&self) -> f64 {
        self.max_consumer_gap_raw.max(self.max_producer_gap_raw)
    }
}

fn gap_row(mv: MoveReport, home: usize, scale: f64) -> GapRow {
    GapRow {
        agent: mv.agent,
        role: mv.role,
        home_community: (home != usize::MAX).then_some(home),
        u_current: mv.current,
        u_best_deviation: mv.best,
        gap: mv.gap,
        scaled_gap: scale * mv.gap,
        best_community: mv.option.community,
    }
}

/// Scans the best single-agent deviation of every agent against the frozen structure.
///
/// Gaps are compared with `epsilon` after scaling by the opposite role's
/// spacing, which puts both roles on the scale of the continuous utilities.
pub fn verify_epsilon_equilibrium(s: &CommunityStructure, epsilon: f64) -> EquilibriumReport {
    let m = Market::from_structure(s);
    let homes_d = s.homes(Role::Consumer);
    let homes_s = s.homes(Role::Producer);
    let mut rows: Vec<GapRow> = (0..s.consumer_grid.len())
        .into_par_iter()
        .map(|y| gap_row(best_consumer_move(y, s, &m), homes_d[y], m.producer_spacing))
        .collect();
    rows.par_extend(
        (0..s.producer_grid.len())
            .into_par_iter()
            .map(|y| gap_row(best_producer_move(y, s, &m), homes_s[y], m.consumer_spacing)),
    );
    let fold = |role: Role, scaled: bool| {
        rows.iter()
            .filter(|r| r.role == role)
            .map(|r| if scaled { r.scaled_gap } else { r.gap })
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let max_consumer_gap = fold(Role::Consumer, true);
    let max_producer_gap = fold(Role::Producer, true);

    let margin = s.kernels.interest.value(0.0) * s.kernels.ability.value(0.0) - s.economy.cost;
    let min_of = |role: Role| {
        rows.iter()
            .filter(|r| r.role == role)
            .map(|r| r.u_current)
            .fold(f64::INFINITY, f64::min)
    };
    let (min_c, min_p) = (min_of(Role::Consumer), min_of(Role::Producer));
    let positivity = if margin > 0.0 {
        PositivityCheck {
            checked: true,
            all_positive: min_c > 0.0 && min_p > 0.0,
            min_consumer_utility: min_c,
            min_producer_utility: min_p,
            notice: None,
        }
    } else {
        PositivityCheck {
            checked: false,
            all_positive: false,
            min_consumer_utility: min_c,
            min_producer_utility: min_p,
            notice: Some(format!("f(0)g(0)-c = {margin} <= 0, positivity not asserted")),
        }
    };
    EquilibriumReport {
        epsilon_target: epsilon,
        max_consumer_gap,
        max_producer_gap,
        max_consumer_gap_raw: fold(Role::Consumer, false),
        max_producer_gap_raw: fold(Role::Producer, false),
        is_epsilon_equilibrium: max_consumer_gap.max(max_producer_gap) < epsilon,
        positivity,
        rows,
    }
}

/// Continuous community on `I_C` with best responses `x*(z)` memoised.
pub struct ContinuousCommunity {
    pub demand: ContinuousDemand,
    pub kernels: KernelPair,
    pub economy: Economy,
    cache: Mutex<HashMap<u64, (ContentPoint, f64)>>,
}

impl ContinuousCommunity {
    pub fn new(demand: ContinuousDemand, kernels: KernelPair, economy: Economy) -> Self {
        Self {
            demand,
            kernels,
            economy,
            cache: Mutex::new(HashMap::new()),
        }
    }

    /// `(x*(z), q(x*(z)|z))`.
    pub fn best_response(&self, z: ContentPoint) -> (ContentPoint, f64) {
        let key = z.coord().to_bits();
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return *v;
        }
        let r = solve_xstar_continuous(z, &self.demand, &self.kernels.ability).expect("validated kernels have support");
        let v = (r.x_star, self.kernels.ability.value(r.displacement));
        self.cache.lock().expect("cache lock").insert(key, v);
        v
    }

    /// `F^(d)_C(y) = E_p E_q ∫_{I_C} [p(x*(z)|y) q(x*(z)|z) − c] dz`.
    pub fn consumer_value(&self, y: ContentPoint) -> f64 {
        let cfg = &self.demand.space;
        let start = self.demand.interval.start(cfg);
        let integrand = |u: f64| {
            let z = torus_add(start, u, cfg);
            let (x, q) = self.best_response(z);
            self.kernels.interest(y, x, cfg) * q - self.economy.cost
        };
        let integral = adaptive_simpson(&integrand, 0.0, self.demand.interval.length(), CONTINUOUS_QUAD_TOL);
        self.economy.e_p * self.economy.e_q * integral
    }

    /// `F^(s)_C(y) = E_q [q(x*(y)|y) P_C(x*(y)) − 2 L_C E_p c]`.
    pub fn producer_value(&self, y: ContentPoint) -> f64 {
        let (x, q) = self.best_response(y);
        let alpha = self.demand.interval.length() * self.economy.e_p;
        self.economy.e_q * (q * self.demand.value(x.coord()) - alpha * self.economy.cost)
    }
}

/// Everything needed to rebuild the canonical structure at any refinement level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub space: SpaceConfig,
    pub kernels: KernelPair,
    pub economy: Economy,
    /// Consumer and producer counts of the coarsest level.
    pub k_d: usize,
    pub k_s: usize,
    pub anchor_d: f64,
    pub anchor_s: f64,
    pub cell_half_length: f64,
    pub cell_anchor: f64,
    pub levels: usize,
    pub epsilon: f64,
}

impl SweepSpec {
    /// Builds the canonical structure with both grid counts multiplied by `2^level`.
    pub fn build_level(&self, level: usize) -> Result<CommunityStructure, CommunityError> {
        let sp = &self.space;
        let scale = 1usize << level;
        let gd = build_grid(Role::Consumer, self.k_d * scale, sp.point(self.anchor_d), sp)?;
        let gs = build_grid(Role::Producer, self.k_s * scale, sp.point(self.anchor_s), sp)?;
        build_canonical(*sp, self.kernels, self.economy, gd, gs, self.cell_half_length, sp.point(self.cell_anchor))
    }
}

/// Continuous-limit comparison measured on one structure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStats {
    /// Largest `sup_x |δ_d P_δC − P_C|` over communities.
    pub riemann_gap: f64,
    pub riemann_bound: f64,
    /// `sup_y ‖x*_δ(y) − x*(y)‖` over producers.
    pub xstar_gap: f64,
    /// `sup_y |δ_s U^(d)_δC(y) − F^(d)_C(y)|` over consumers.
    pub consumer_value_gap: f64,
    /// `sup_y |δ_d U^(s)_δC(y) − F^(s)_C(y)|` over producers.
    pub producer_value_gap: f64,
}

pub fn convergence_stats(s: &CommunityStructure, m: &Market) -> ConvergenceStats {
    let cfg = &s.space;
    let bounds = validate_assumption1(&s.kernels.interest, &s.kernels.ability).expect("validated kernels");
    let xs: Vec<f64> = (0..RIEMANN_POINTS)
        .map(|i| cfg.canonical(-cfg.half_length + cfg.period() * i as f64 / (RIEMANN_POINTS - 1) as f64))
        .collect();
    let mut stats = ConvergenceStats {
        riemann_gap: 0.0,
        riemann_bound: 0.0,
        xstar_gap: 0.0,
        consumer_value_gap: 0.0,
        producer_value_gap: 0.0,
    };
    for c in &s.communities {
        let cd = ContinuousDemand {
            interval: c.interval,
            kernel: s.kernels.interest,
            rate: s.economy.e_p,
            space: s.space,
        };
        let view = &m.views[c.id];
        let r = riemann_gap(&view.demand, &cd, &xs, bounds.m_f);
        stats.riemann_gap = stats.riemann_gap.max(r.sup_gap);
        stats.riemann_bound = r.bound;

        let cc = ContinuousCommunity::new(cd, s.kernels, s.economy);
        let producer_gaps: Vec<(f64, f64)> = c
            .producers
            .indices
            .par_iter()
            .map(|&z| {
                let y = s.producer_grid.points[z];
                let discrete = solve_xstar(y, &view.demand, &s.kernels.ability).expect("support");
                let (cont, _) = cc.best_response(y);
                let u = producer_utility(z, c.id, s, m).unwrap_or(f64::NAN);
                (
                    distance(discrete.x_star, cont, cfg),
                    (m.consumer_spacing * u - cc.producer_value(y)).abs(),
                )
            })
            .collect();
        for (dx, du) in producer_gaps {
            stats.xstar_gap = stats.xstar_gap.max(dx);
            stats.producer_value_gap = stats.producer_value_gap.max(du);
        }
        let consumer_gaps: Vec<f64> = c
            .consumers
            .indices
            .par_iter()
            .map(|&y| {
                let u = consumer_utility(y, c.id, s, m).unwrap_or(f64::NAN);
                (m.producer_spacing * u - cc.consumer_value(s.consumer_grid.points[y])).abs()
            })
            .collect();
        for du in consumer_gaps {
            stats.consumer_value_gap = stats.consumer_value_gap.max(du);
        }
    }
    stats
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub level: usize,
    pub k_d: usize,
    pub k_s: usize,
    pub delta_d: f64,
    pub delta_s: f64,
    /// Largest scaled deviation gap, the measured `ε(δ)`.
    pub max_gap: f64,
    pub max_raw_gap: f64,
    pub min_utility: f64,
    #[serde(flatten)]
    pub stats: ConvergenceStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub gap_non_increasing: bool,
    pub riemann_non_increasing: bool,
    pub xstar_non_increasing: bool,
    pub consumer_value_non_increasing: bool,
    pub producer_value_non_increasing: bool,
}

pub fn non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}

/// Rebuilds and verifies the canonical structure at `levels` dyadic refinements.
pub fn delta_sweep(spec: &SweepSpec) -> Result<SweepTable, CommunityError> {
    let mut rows = Vec::with_capacity(spec.levels);
    for level in 0..spec.levels {
        let s = spec.build_level(level)?;
        let m = Market::from_structure(&s);
        let report = verify_epsilon_equilibrium(&s, spec.epsilon);
        rows.push(SweepRow {
            level,
            k_d: s.consumer_grid.count,
            k_s: s.producer_grid.count,
            delta_d: s.consumer_grid.spacing,
            delta_s: s.producer_grid.spacing,
            max_gap: report.max_gap(),
            max_raw_gap: report.max_raw_gap(),
            min_utility: report
                .positivity
                .min_consumer_utility
                .min(report.positivity.min_producer_utility),
            stats: convergence_stats(&s, &m),
        });
    }
    let col = |f: fn(&SweepRow) -> f64| rows.iter().map(f).collect::<Vec<f64>>();
    Ok(SweepTable {
        gap_non_increasing: non_increasing(&col(|r| r.max_gap)),
        riemann_non_increasing: non_increasing(&col(|r| r.stats.riemann_gap)),
        xstar_non_increasing: non_increasing(&col(|r| r.stats.xstar_gap)),
        consumer_value_non_increasing: non_increasing(&col(|r| r.stats.consumer_value_gap)),
        producer_value_non_increasing: non_increasing(&col(|r| r.stats.producer_value_gap)),
        rows,
    })
}
