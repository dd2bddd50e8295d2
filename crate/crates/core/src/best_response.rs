//! Producer best response `x*_δ(y)` and single-agent deviation scans.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::community::{CommunityStructure, SupplyAtom};
use crate::demand::{ContentFunction, ContinuousDemand, DemandProfile};
use crate::kernels::{AbilityKernel, KernelPair};
use crate::numerics::golden_section_max;
use crate::population::Role;
use crate::torus::{distance, raw_distance, torus_add, ContentPoint, SpaceConfig};

const REFINE_TOL: f64 = 1e-10;
const TIE_TOL: f64 = 1e-9;
const FD_STEP: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BestResponseError {
    #[error("ability kernel has empty support")]
    EmptySupport,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxResult {
    pub x_star: ContentPoint,
    /// `q(x*|y) P(x*)`.
    pub value: f64,
    /// `Δ* = d(y, x*)`.
    pub displacement: f64,
    pub unique: bool,
    pub foc_residual: f64,
}

/// Maximises `q(x|y) P(x)` over `supp(q(·|y))`.
///
/// A uniform scan at `step` brackets every sampled local maximum, each of
/// which is refined by golden section. Values within 1e-9 of the best count
/// as ties; the one nearest `y` wins and `unique` is cleared.
pub fn maximize_quality_demand<D: ContentFunction + ?Sized>(
    y: ContentPoint,
    demand: &D,
    g: &AbilityKernel,
    cfg: &SpaceConfig,
    step: f64,
) -> Result<ArgmaxResult, BestResponseError> {
    let w = g.width.min(cfg.half_length);
    if !(w > 0.0) {
        return Err(BestResponseError::EmptySupport);
    }
    let objective = |u: f64| g.value(u.abs()) * demand.value(cfg.canonical(y.coord() + u));
    let mut n = (2.0 * w / step).ceil() as usize;
    n += n % 2;
    let h = 2.0 * w / n as f64;
    let samples: Vec<f64> = (0..=n).map(|i| objective(-w + i as f64 * h)).collect();

    let mut candidates: Vec<(f64, f64)> = Vec::new();
    for i in 1..n {
        let v = samples[i];
        if v > 0.0 && v >= samples[i - 1] && v >= samples[i + 1] {
            let a = -w + (i - 1) as f64 * h;
            let b = -w + (i + 1) as f64 * h;
            let (u, val) = golden_section_max(objective, a, b, REFINE_TOL);
            let (u, val) = if v > val { (-w + i as f64 * h, v) } else { (u, val) };
            if candidates.iter().all(|c| (c.0 - u).abs() > 1e-8) {
                candidates.push((u, val));
            }
        }
    }
    if candidates.is_empty() {
        // positive objective everywhere but monotone on the samples
        let (i, _) = samples
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        candidates.push((-w + i as f64 * h, samples[i]));
    }
    let best = candidates.iter().map(|c| c.1).fold(f64::MIN, f64::max);
    let ties: Vec<(f64, f64)> = candidates
        .into_iter()
        .filter(|c| best - c.1 <= TIE_TOL)
        .collect();
    let (u, value) = ties
        .iter()
        .copied()
        .min_by(|a, b| a.0.abs().total_cmp(&b.0.abs()).then(a.0.total_cmp(&b.0)))
        .expect("at least one candidate");
    let x_star = torus_add(y, u, cfg);

    let x = x_star.coord();
    let dp = (demand.value(cfg.canonical(x + FD_STEP)) - demand.value(cfg.canonical(x - FD_STEP)))
        / (2.0 * FD_STEP);
    let dq = g.d1(u.abs()) * u.signum();
    let foc_residual = (dq * demand.value(x) + g.value(u.abs()) * dp).abs();

    Ok(ArgmaxResult {
        x_star,
        value,
        displacement: distance(y, x_star, cfg),
        unique: ties.len() == 1,
        foc_residual,
    })
}

/// `x*_δ(y) = argmax_x q(x|y) P_δC(x)`, scanning at `min(δ_d, w) / 16`.
pub fn solve_xstar(
    y: ContentPoint,
    p: &DemandProfile,
    g: &AbilityKernel,
) -> Result<ArgmaxResult, BestResponseError> {
    let step = p.spacing.min(g.width) / 16.0;
    maximize_quality_demand(y, p, g, &p.space, step)
}

/// `x*(y) = argmax_x q(x|y) P_C(x)`, scanning at `w / 256`.
pub fn solve_xstar_continuous(
    y: ContentPoint,
    cd: &ContinuousDemand,
    g: &AbilityKernel,
) -> Result<ArgmaxResult, BestResponseError> {
    maximize_quality_demand(y, cd, g, &cd.space, g.width / 256.0)
}

/// Brute-force argmax of `q(x|y) P(x)` on an `n`-point grid over the whole space,
/// followed by a second `n`-point grid spanning two cells around the winner.
pub fn brute_force_argmax<D: ContentFunction + ?Sized>(
    y: ContentPoint,
    demand: &D,
    g: &AbilityKernel,
    cfg: &SpaceConfig,
    n: usize,
) -> (ContentPoint, f64) {
    let l = cfg.half_length;
    let h = 2.0 * l / n as f64;
    let eval = |x: f64| {
        let x = cfg.canonical(x);
        g.value(raw_distance(x, y.coord(), cfg)) * demand.value(x)
    };
    let (mut bx, mut bv) = (f64::NAN, f64::MIN);
    for i in 0..n {
        let x = -l + i as f64 * h;
        let v = eval(x);
        if v > bv {
            bx = x;
            bv = v;
        }
    }
    let lo = bx - h;
    let h2 = 2.0 * h / n as f64;
    for i in 0..=n {
        let x = lo + i as f64 * h2;
        let v = eval(x);
        if v > bv {
            bx = x;
            bv = v;
        }
    }
    (cfg.point(bx), bv)
}

/// Frozen per-community aggregates of a structure.
#[derive(Debug, Clone)]
pub struct CommunityView {
    pub demand: DemandProfile,
    /// `α_δC = Σ_y α_δC(y)`.
    pub alpha_total: f64,
    /// `(producer index, location, mass)` for every installed atom.
    pub atoms: Vec<(usize, SupplyAtom)>,
}

/// Everything a single agent's deviation needs, with all other agents frozen.
#[derive(Debug, Clone)]
pub struct Market {
    pub space: SpaceConfig,
    pub kernels: KernelPair,
    pub e_p: f64,
    pub e_q: f64,
    pub cost: f64,
    pub consumer_spacing: f64,
    pub producer_spacing: f64,
    pub producer_points: Vec<ContentPoint>,
    pub consumer_points: Vec<ContentPoint>,
    pub views: Vec<CommunityView>,
}

impl Market {
    pub fn from_structure(s: &CommunityStructure) -> Self {
        let views = s
            .communities
            .iter()
            .map(|c| {
                let members: Vec<(ContentPoint, f64)> = s
                    .consumption
                    .rows
                    .iter()
                    .enumerate()
                    .filter_map(|(y, row)| {
                        row.iter()
                            .find(|r| r.community == c.id)
                            .map(|r| (s.consumer_grid.points[y], r.rate))
                    })
                    .collect();
                let demand = DemandProfile::new(
                    c.id,
                    &members,
                    c.interval.midpoint,
                    s.consumer_grid.spacing,
                    s.kernels.interest,
                    s.space,
                );
                let atoms = s
                    .production
                    .rows
                    .iter()
                    .enumerate()
                    .flat_map(|(z, row)| {
                        row.iter()
                            .filter(|p| p.community == c.id)
                            .flat_map(move |p| p.atoms.iter().map(move |a| (z, *a)))
                    })
                    .collect();
                CommunityView {
                    alpha_total: demand.total_rate(),
                    demand,
                    atoms,
                }
            })
            .collect();
        Self {
            space: s.space,
            kernels: s.kernels,
            e_p: s.economy.e_p,
            e_q: s.economy.e_q,
            cost: s.economy.cost,
            consumer_spacing: s.consumer_grid.spacing,
            producer_spacing: s.producer_grid.spacing,
            producer_points: s.producer_grid.points.clone(),
            consumer_points: s.consumer_grid.points.clone(),
            views,
        }
    }

    /// `v_d(C, y) = Σ_atoms mass [q(x|z) p(x|y) − c]`.
    pub fn consumer_value(&self, community: usize, y: ContentPoint) -> f64 {
        let cfg = &self.space;
        self.views[community]
            .atoms
            .iter()
            .map(|(z, a)| {
                let q = self.kernels.ability(self.producer_points[*z], a.location, cfg);
                let p = self.kernels.interest(y, a.location, cfg);
                a.mass * (q * p - self.cost)
            })
            .sum()
    }

    /// Per-unit value of producing one atom at `x` for community `C`.
    pub fn producer_atom_value(&self, community: usize, y: ContentPoint, x: ContentPoint) -> f64 {
        let v = &self.views[community];
        self.kernels.ability(y, x, &self.space) * v.demand.value(x.coord()) - v.alpha_total * self.cost
    }

    /// `v_s(C, y) = max_x q(x|y) P_C(x) − α_C c` with its maximiser.
    pub fn producer_value(&self, community: usize, y: ContentPoint) -> (f64, ArgmaxResult) {
        let v = &self.views[community];
        let r = solve_xstar(y, &v.demand, &self.kernels.ability).expect("validated kernels have support");
        (r.value - v.alpha_total * self.cost, r)
    }

    /// Consumer utility under a mixed allocation `[(community, rate)]`.
    pub fn mixed_consumer_utility(&self, y: ContentPoint, alloc: &[(usize, f64)]) -> f64 {
        alloc
            .iter()
            .map(|&(c, rate)| rate * self.consumer_value(c, y))
            .sum()
    }

    /// Producer utility under a mixed allocation of atoms `[(community, atom)]`.
    pub fn mixed_producer_utility(&self, y: ContentPoint, alloc: &[(usize, SupplyAtom)]) -> f64 {
        alloc
            .iter()
            .map(|&(c, a)| a.mass * self.producer_atom_value(c, y, a.location))
            .sum()
    }
}

/// Best single-community deviation for one agent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviationOption {
    /// `None` when allocating nothing is optimal.
    pub community: Option<usize>,
    /// Per-unit value of the chosen community.
    pub unit_value: f64,
    /// Production location, for producers.
    pub location: Option<ContentPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoveReport {
    pub role: Role,
    pub agent: usize,
    pub option: DeviationOption,
    pub current: f64,
    pub best: f64,
    /// `best − current`; positive means a profitable deviation exists.
    pub gap: f64,
}

fn best_option<I: Iterator<Item = (usize, f64, Option<ContentPoint>)>>(values: I) -> DeviationOption {
    let mut out = DeviationOption {
        community: None,
        unit_value: 0.0,
        location: None,
    };
    for (c, v, loc) in values {
        if v > out.unit_value {
            out = DeviationOption {
                community: Some(c),
                unit_value: v,
                location: loc,
            };
        }
    }
    out
}

pub fn best_consumer_move(y: usize, s: &CommunityStructure, m: &Market) -> MoveReport {
    let point = m.consumer_points[y];
    let values: Vec<f64> = (0..m.views.len()).map(|c| m.consumer_value(c, point)).collect();
    let current: f64 = s.consumption.rows[y]
        .iter()
        .map(|r| r.rate * values[r.community])
        .sum();
    let option = best_option(values.iter().enumerate().map(|(c, &v)| (c, v, None)));
    let best = m.e_p * option.unit_value;
    MoveReport {
        role: Role::Consumer,
        agent: y,
        option,
        current,
        best,
        gap: best - current,
    }
}

pub fn best_producer_move(y: usize, s: &CommunityStructure, m: &Market) -> MoveReport {
    let point = m.producer_points[y];
    let current: f64 = s.production.rows[y]
        .iter()
        .flat_map(|p| p.atoms.iter().map(move |a| (p.community, a)))
        .map(|(c, a)| a.mass * m.producer_atom_value(c, point, a.location))
        .sum();
    let option = best_option((0..m.views.len()).map(|c| {
        let (v, r) = m.producer_value(c, point);
        (c, v, Some(r.x_star))
    }));
    let best = m.e_q * option.unit_value;
    MoveReport {
        role: Role::Producer,
        agent: y,
        option,
        current,
        best,
        gap: best - current,
    }
}
