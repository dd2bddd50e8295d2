//! Numerical checks of the structural claims about a canonical structure.
//!
//! Every checker is a pure function of the structure and a [`CheckConfig`],
//! and returns a [`PropertyVerdict`] whose witnesses are the offending
//! agents or sample points. Strict inequalities `a < b` pass when
//! `b - a > -slack`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::best_response::{brute_force_argmax, best_consumer_move, best_producer_move, solve_xstar, ArgmaxResult, Market};
use crate::community::{Community, CommunityStructure, SupplyAtom};
use crate::demand::{riemann_gap, supply_support, ContentFunction, ContinuousDemand, SupplyProfile};
use crate::equilibrium::{consumer_utility, producer_utility};
use crate::kernels::validate_assumption1;
use crate::population::midpoint_deviation;
use crate::torus::{distance, signed_offset, torus_add, ContentPoint, GEOMETRY_TOL};

/// Verdict ids in reporting order.
pub const PROPERTY_IDS: [&str; 20] = [
    "LA1", "LB2", "P2a", "P2b", "P2c", "P2d", "P3", "P4a", "P4b", "P4c", "P4_argmax", "P5", "P5_disjoint", "P6a",
    "P6b", "P7a", "P7b", "LE2", "LL1", "LL2",
];

/// Witnesses kept per verdict.
pub const MAX_WITNESSES: usize = 10;
const RIEMANN_POINTS: usize = 2001;
const SYMMETRY_SAMPLES: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckConfig {
    /// Band margin as a fraction of `L_C`, shared by `Δ_P`, `Δ_x*` and `Δ_U`.
    pub margin: f64,
    pub slack: f64,
    pub concavity_tol: f64,
    pub symmetry_tol: f64,
    pub argmax_tol: f64,
    pub argmax_value_tol: f64,
    pub brute_force_points: usize,
    /// Required ratio of measured Riemann gap to its bound.
    pub riemann_margin: f64,
    pub seed: u64,
    pub mixed_agents: usize,
    pub mixed_trials: usize,
    pub mixed_tol: f64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            margin: 0.05,
            slack: 1e-10,
            concavity_tol: 1e-9,
            symmetry_tol: 1e-9,
            argmax_tol: 1e-6,
            argmax_value_tol: 1e-10,
            brute_force_points: 100_000,
            riemann_margin: 0.25,
            seed: 7,
            mixed_agents: 20,
            mixed_trials: 100,
            mixed_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub community: Option<usize>,
    pub agents: Vec<usize>,
    pub points: Vec<f64>,
    pub values: Vec<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyVerdict {
    pub id: String,
    pub pass: bool,
    /// Absolute band margin used, 0 for unbanded checks.
    pub margin: f64,
    pub tolerance: f64,
    pub n_witnesses: usize,
    pub witnesses: Vec<Witness>,
    /// Headline measurement of the check.
    pub metric: Option<f64>,
    pub note: Option<String>,
}

struct Verdict {
    margin: f64,
    tolerance: f64,
    witnesses: Vec<Witness>,
    metric: Option<f64>,
    note: Option<String>,
}

impl Verdict {
    fn new(tolerance: f64) -> Self {
        Self {
            margin: 0.0,
            tolerance,
            witnesses: Vec::new(),
            metric: None,
            note: None,
        }
    }

    fn banded(mut self, margin: f64) -> Self {
        self.margin = margin;
        self
    }

    fn finish(self, id: &str) -> PropertyVerdict {
        let n = self.witnesses.len();
        let mut witnesses = self.witnesses;
        witnesses.truncate(MAX_WITNESSES);
        PropertyVerdict {
            id: id.to_string(),
            pass: n == 0,
            margin: self.margin,
            tolerance: self.tolerance,
            n_witnesses: n,
            witnesses,
            metric: self.metric,
            note: self.note,
        }
    }
}

fn witness(community: usize, agents: Vec<usize>, points: Vec<f64>, values: Vec<f64>, detail: &str) -> Witness {
    Witness {
        community: Some(community),
        agents,
        points,
        values,
        detail: detail.to_string(),
    }
}

/// Member of a banded sequence: agent index, offset from `mid(I_C)`, measured value.
#[derive(Debug, Clone, Copy)]
struct Sample {
    agent: usize,
    offset: f64,
    value: f64,
}

/// Witnesses for consecutive pairs that fail `value[i+1] > value[i]`
/// (or `<` when `increasing` is false).
fn monotone_witnesses(community: usize, seq: &[Sample], increasing: bool, slack: f64, what: &str) -> Vec<Witness> {
    seq.windows(2)
        .filter(|w| {
            let diff = w[1].value - w[0].value;
            let diff = if increasing { diff } else { -diff };
            diff <= -slack
        })
        .map(|w| {
            witness(
                community,
                vec![w[0].agent, w[1].agent],
                vec![w[0].offset, w[1].offset],
                vec![w[0].value, w[1].value],
                &format!("{what} not strictly {}", if increasing { "increasing" } else { "decreasing" }),
            )
        })
        .collect()
}

fn in_band(offset: f64, lo: f64, hi: f64) -> bool {
    offset >= lo - GEOMETRY_TOL && offset <= hi + GEOMETRY_TOL
}

/// Best response of one member producer, in offsets from `mid(I_C)`.
#[derive(Debug, Clone, Copy)]
struct MemberResponse {
    agent: usize,
    offset: f64,
    x_offset: f64,
    result: ArgmaxResult,
}

struct Context<'a> {
    s: &'a CommunityStructure,
    m: Market,
    cfg: CheckConfig,
    delta: f64,
    responses: Vec<Vec<MemberResponse>>,
}

impl<'a> Context<'a> {
    fn new(s: &'a CommunityStructure, cfg: CheckConfig) -> Self {
        let m = Market::from_structure(s);
        let sp = &s.space;
        let responses = s
            .communities
            .iter()
            .map(|c| {
                let demand = &m.views[c.id].demand;
                c.producers
                    .indices
                    .par_iter()
                    .map(|&z| {
                        let y = s.producer_grid.points[z];
                        let result = solve_xstar(y, demand, &s.kernels.ability).expect("validated kernels have support");
                        let offset = signed_offset(c.interval.midpoint, y, sp);
                        MemberResponse {
                            agent: z,
                            offset,
                            x_offset: offset + signed_offset(y, result.x_star, sp),
                            result,
                        }
                    })
                    .collect()
            })
            .collect();
        Self {
            s,
            delta: cfg.margin * s.cell_half_length,
            m,
            cfg,
            responses,
        }
    }

    fn lc(&self) -> f64 {
        self.s.cell_half_length
    }

    fn demand_at(&self, c: &Community, offset: f64) -> f64 {
        let x = torus_add(c.interval.midpoint, offset, &self.s.space);
        self.m.views[c.id].demand.value(x.coord())
    }

    fn left_band(&self, c: usize) -> impl Iterator<Item = &MemberResponse> {
        let (lc, d) = (self.lc(), self.delta);
        self.responses[c].iter().filter(move |r| in_band(r.offset, -lc, -d))
    }

    fn right_band(&self, c: usize) -> impl Iterator<Item = &MemberResponse> {
        let (lc, d) = (self.lc(), self.delta);
        self.responses[c].iter().filter(move |r| in_band(r.offset, d, lc))
    }
}

fn check_la1(ctx: &Context) -> Verdict {
    let s = ctx.s;
    let mut v = Verdict::new(GEOMETRY_TOL);
    let mut worst: f64 = 0.0;
    for c in &s.communities {
        for set in [&c.consumers, &c.producers] {
            let dev = midpoint_deviation(set, &s.space);
            worst = worst.max(dev / set.spacing);
            let half_gap = s.cell_half_length - set.half_length;
            if dev > set.spacing + GEOMETRY_TOL || half_gap < -GEOMETRY_TOL || half_gap > set.spacing + GEOMETRY_TOL {
                v.witnesses.push(witness(
                    c.id,
                    set.indices.clone(),
                    vec![set.midpoint.coord(), c.interval.midpoint.coord()],
                    vec![dev, set.half_length, set.spacing],
                    "discrete midpoint or half length outside one spacing",
                ));
            }
        }
    }
    v.metric = Some(worst);
    v.note = Some("metric is the largest midpoint deviation in units of the grid spacing".into());
    v
}

fn check_lb2(ctx: &Context) -> Verdict {
    let s = ctx.s;
    let sp = &s.space;
    let mut v = Verdict::new(ctx.cfg.riemann_margin);
    let m_f = validate_assumption1(&s.kernels.interest, &s.kernels.ability)
        .expect("validated kernels")
        .m_f;
    let xs: Vec<f64> = (0..RIEMANN_POINTS)
        .map(|i| sp.canonical(-sp.half_length + sp.period() * i as f64 / (RIEMANN_POINTS - 1) as f64))
        .collect();
    let mut worst: f64 = 0.0;
    for c in &s.communities {
        let cd = ContinuousDemand {
            interval: c.interval,
            kernel: s.kernels.interest,
            rate: s.economy.e_p,
            space: *sp,
        };
        let r = riemann_gap(&ctx.m.views[c.id].demand, &cd, &xs, m_f);
        worst = worst.max(r.sup_gap / r.bound);
        if r.sup_gap > r.bound {
            v.witnesses.push(witness(c.id, vec![], vec![r.argsup], vec![r.sup_gap, r.bound], "Riemann bound violated"));
        } else if r.sup_gap >= ctx.cfg.riemann_margin * r.bound {
            v.witnesses.push(witness(
                c.id,
                vec![],
                vec![r.argsup],
                vec![r.sup_gap, r.bound],
                "Riemann gap above the margin fraction of its bound",
            ));
        }
    }
    v.metric = Some(worst);
    v.note = Some("metric is the largest ratio of measured gap to bound".into());
    v
}

fn check_p2a(ctx: &Context) -> Verdict {
    let s = ctx.s;
    let mut v = Verdict::new(ctx.cfg.argmax_tol);
    let mut worst: f64 = 0.0;
    for c in &s.communities {
        let demand = &ctx.m.views[c.id].demand;
        let found: Vec<(Option<Witness>, f64)> = ctx.responses[c.id]
            .par_iter()
            .map(|r| {
                let y = s.producer_grid.points[r.agent];
                let (bx, bv) = brute_force_argmax(y, demand, &s.kernels.ability, &s.space, ctx.cfg.brute_force_points);
                let dx = distance(bx, r.result.x_star, &s.space);
                let dv = (bv - r.result.value).abs();
                let bad = !r.result.unique || dx > ctx.cfg.argmax_tol || dv > ctx.cfg.argmax_value_tol;
                let w = bad.then(|| {
                    witness(
                        c.id,
                        vec![r.agent],
                        vec![r.result.x_star.coord(), bx.coord()],
                        vec![r.result.value, bv],
                        if r.result.unique {
                            "solver disagrees with brute force"
                        } else {
                            "tied maximisers"
                        },
                    )
                });
                (w, dx)
            })
            .collect();
        for (w, dx) in found {
            worst = worst.max(dx);
            v.witnesses.extend(w);
        }
    }
    v.metric = Some(worst);
    v.note = Some(format!(
        "metric is the largest distance to a {}-point brute-force argmax",
        ctx.cfg.brute_force_points
    ));
    v
}

fn check_p2_side(ctx: &Context, left: bool) -> Verdict {
    let slack = ctx.cfg.slack;
    let w = ctx.s.kernels.ability.width;
    let mut v = Verdict::new(slack).banded(ctx.delta);
    for c in &ctx.s.communities {
        let band: Vec<&MemberResponse> = if left {
            ctx.left_band(c.id).collect()
        } else {
            ctx.right_band(c.id).collect()
        };
        for r in band {
            // x* strictly between y and mid, inside supp q(·|y)
            let (lo, hi) = if left { (r.offset, 0.0) } else { (0.0, r.offset) };
            let ok = r.x_offset - lo > -slack && hi - r.x_offset > -slack && w - r.result.displacement > -slack;
            if !ok {
                v.witnesses.push(witness(
                    c.id,
                    vec![r.agent],
                    vec![r.offset, r.x_offset],
                    vec![r.result.displacement],
                    "best response not strictly between agent and midpoint",
                ));
            }
        }
    }
    v
}

/// Finite-difference bound standing in for differentiability.
fn slope_witnesses(ctx: &Context, c: usize, seq: &[Sample]) -> Vec<Witness> {
    let bound = 10.0 * ctx.lc() / ctx.s.producer_grid.spacing;
    seq.windows(2)
        .filter(|w| ((w[1].value - w[0].value) / (w[1].offset - w[0].offset)).abs() >= bound)
        .map(|w| {
            witness(
                c,
                vec![w[0].agent, w[1].agent],
                vec![w[0].offset, w[1].offset],
                vec![w[0].value, w[1].value],
                "difference quotient exceeds 10 L_C / delta_s",
            )
        })
        .collect()
}

fn check_p2d(ctx: &Context) -> Verdict {
    let mut v = Verdict::new(ctx.cfg.slack).banded(ctx.delta);
    for c in &ctx.s.communities {
        let to_sample = |r: &MemberResponse| Sample {
            agent: r.agent,
            offset: r.offset,
            value: r.x_offset,
        };
        let left: Vec<Sample> = ctx.left_band(c.id).map(to_sample).collect();
        let right: Vec<Sample> = ctx.right_band(c.id).map(to_sample).collect();
        let union: Vec<Sample> = left.iter().chain(&right).copied().collect();
        v.witnesses.extend(monotone_witnesses(c.id, &union, true, ctx.cfg.slack, "x*"));
        v.witnesses.extend(slope_witnesses(ctx, c.id, &left));
        v.witnesses.extend(slope_witnesses(ctx, c.id, &right));
    }
    v.note = Some("differentiability checked as a bounded difference quotient".into());
    v
}

fn check_p3(ctx: &Context) -> Verdict {
    let mut v = Verdict::new(ctx.cfg.slack).banded(ctx.delta);
    for c in &ctx.s.communities {
        let to_sample = |r: &MemberResponse| Sample {
            agent: r.agent,
            offset: r.offset,
            value: r.result.displacement,
        };
        let left: Vec<Sample> = ctx.left_band(c.id).map(to_sample).collect();
        let right: Vec<Sample> = ctx.right_band(c.id).map(to_sample).collect();
        v.witnesses.extend(monotone_witnesses(c.id, &left, false, ctx.cfg.slack, "displacement"));
        v.witnesses.extend(monotone_witnesses(c.id, &right, true, ctx.cfg.slack, "displacement"));
        v.witnesses.extend(slope_witnesses(ctx, c.id, &left));
        v.witnesses.extend(slope_witnesses(ctx, c.id, &right));
    }
    v.note = Some("differentiability checked as a bounded difference quotient".into());
    v
}

fn check_p4a(ctx: &Context) -> Verdict {
    let s = ctx.s;
    let l = s.space.half_length;
    let mut v = Verdict::new(ctx.cfg.symmetry_tol);
    let mut worst: f64 = 0.0;
    for c in &s.communities {
        let demand = &ctx.m.views[c.id].demand;
        let centre = c.consumers.midpoint;
        for i in 1..=SYMMETRY_SAMPLES {
            let t = l * i as f64 / SYMMETRY_SAMPLES as f64;
            let a = demand.value(torus_add(centre, t, &s.space).coord());
            let b = demand.value(torus_add(centre, -t, &s.space).coord());
            worst = worst.max((a - b).abs());
            if (a - b).abs() >= ctx.cfg.symmetry_tol {
                v.witnesses.push(witness(c.id, vec![], vec![centre.coord(), t], vec![a, b], "demand not symmetric"));
            }
        }
    }
    v.metric = Some(worst);
    v.note = Some("symmetry about the midpoint of the discrete consumer set".into());
    v
}

/// Offsets from `lo` to `hi` at `step`, `hi` included when `closed`.
fn offsets(lo: f64, hi: f64, step: f64, closed: bool) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).filter(|&t| t < hi).collect();
    if closed {
        out.push(hi);
    }
    out
}

fn check_p4b(ctx: &Context) -> Verdict {
    let s = ctx.s;
    let step = s.consumer_grid.spacing / 4.0;
    let (lc, d) = (ctx.lc(), ctx.delta);
    let mut v = Verdict::new(ctx.cfg.slack).banded(d);
    for c in &s.communities {
        let sample = |ts: Vec<f64>| -> Vec<Sample> {
            ts.into_iter()
                .map(|t| Sample {
                    agent: usize::MAX,
                    offset: t,
                    value: ctx.demand_at(c, t),
                })
                .collect()
        };
        let left = sample(offsets(-lc, -d, step, true));
        let right = sample(offsets(d, lc, step, false));
        v.witnesses.extend(monotone_witnesses(c.id, &left, true, ctx.cfg.slack, "demand"));
        v.witnesses.extend(monotone_witnesses(c.id, &right, false, ctx.cfg.slack, "demand"));
    }
    for w in &mut v.witnesses {
        w.agents.clear();
    }
    v
}

fn check_p4c(ctx: &Context) -> Verdict {
    let s = ctx.s;
    let h = s.consumer_grid.spacing / 4.0;
    let lc = ctx.lc();
    let mut v = Verdict::new(ctx.cfg.concavity_tol);
    let mut worst = f64::NEG_INFINITY;
    for c in &s.communities {
        for t in offsets(-lc + h, lc - h, h, true) {
            let d2 = ctx.demand_at(c, t - h) - 2.0 * ctx.demand_at(c, t) + ctx.demand_at(c, t + h);
            worst = worst.max(d2);
            if d2 >= -ctx.cfg.concavity_tol {
                v.witnesses.push(witness(c.id, vec![], vec![t, h], vec![d2], "second difference not negative"));
            }
        }
    }
    v.metric = Some(worst);
    v.note = Some("metric is the largest second difference".into());
    v
}

fn check_p4_argmax(ctx: &Context) -> Verdict {
    let s = ctx.s;
    let sp = &s.space;
    let mut v = Verdict::new(ctx.cfg.slack).banded(ctx.delta);
    let n = ctx.cfg.brute_force_points;
    let mut worst: f64 = 0.0;
    for c in &s.communities {
        let demand = &ctx.m.views[c.id].demand;
        let (mut bx, mut bv) = (f64::NAN, f64::NEG_INFINITY);
        for i in 0..n {
            let x = -sp.half_length + sp.period() * i as f64 / n as f64;
            let val = demand.value(x);
            if val > bv {
                (bx, bv) = (x, val);
            }
        }
        let off = signed_offset(c.interval.midpoint, sp.point(bx), sp);
        worst = worst.max(off.abs());
        if off.abs() - ctx.delta > ctx.cfg.slack {
            v.witnesses.push(witness(c.id, vec![], vec![bx, off], vec![bv], "demand peak outside the margin band"));
        }
    }
    v.metric = Some(worst);
    v.note = Some("metric is the largest distance of the demand peak from the interval midpoint".into());
    v
}

fn supply_profiles(ctx: &Context) -> Vec<SupplyProfile> {
    let s = ctx.s;
    ctx.m
        .views
        .iter()
        .enumerate()
        .map(|(c, view)| {
            let raw: Vec<(usize, ContentPoint, ContentPoint, f64)> = view
                .atoms
                .iter()
                .map(|(z, a)| (*z, s.producer_grid.points[*z], a.location, a.mass))
                .collect();
            SupplyProfile::new(c, &raw, &s.kernels.ability, &s.space)
        })
        .collect()
}

fn check_p5(ctx: &Context) -> Verdict {
    let s = ctx.s;
    let mut v = Verdict::new(ctx.cfg.slack);
    let mut worst: f64 = 0.0;
    for (c, sp) in s.communities.iter().zip(supply_profiles(ctx)) {
        let r = supply_support(&sp, &c.interval, &s.space);
        worst = worst.max(r.half_width / c.interval.half_length);
        if c.interval.half_length - r.half_width <= -ctx.cfg.slack || r.half_width >= c.interval.half_length {
            v.witnesses.push(witness(
                c.id,
                vec![],
                vec![c.interval.midpoint.coord()],
                vec![r.half_width, c.interval.half_length],
                "supply support reaches the interval boundary",
            ));
        }
    }
    v.metric = Some(worst);
    v.note = Some("metric is the largest ratio L*/L_C".into());
    v
}

fn check_p5_disjoint(ctx: &Context) -> Verdict {
    let s = ctx.s;
    let mut v = Verdict::new(0.0);
    let profiles = supply_profiles(ctx);
    let mut min_dist = f64::INFINITY;
    for (i, a) in profiles.iter().enumerate() {
        for b in &profiles[i + 1..] {
            for x in a.atoms.iter().filter(|x| x.mass > 0.0) {
                for y in b.atoms.iter().filter(|y| y.mass > 0.0) {
                    let d = distance(x.location, y.location, &s.space);
                    min_dist = min_dist.min(d);
                    if d <= 0.0 {
                        v.witnesses.push(Witness {
                            community: Some(a.community),
                            agents: vec![x.producer, y.producer],
                            points: vec![x.location.coord(), y.location.coord()],
                            values: vec![b.community as f64],
                            detail: "atoms of distinct communities coincide".into(),
                        });
                    }
                }
            }
        }
    }
    v.metric = Some(min_dist);
    v.note = Some("metric is the smallest distance between atoms of distinct communities".into());
    v
}

fn utility_bands(ctx: &Context, consumers: bool, left: bool) -> Verdict {
    let s = ctx.s;
    let (lc, d) = (ctx.lc(), ctx.delta);
    let mut v = Verdict::new(ctx.cfg.slack).banded(d);
    for c in &s.communities {
        let set = if consumers { &c.consumers } else { &c.producers };
        let seq: Vec<Sample> = set
            .indices
            .iter()
            .zip(&set.members)
            .map(|(&y, &p)| (y, signed_offset(c.interval.midpoint, p, &s.space)))
            .filter(|&(_, o)| if left { in_band(o, -lc, -d) } else { in_band(o, d, lc) })
            .map(|(y, o)| Sample {
                agent: y,
                offset: o,
                value: if consumers {
                    consumer_utility(y, c.id, s, &ctx.m)
                } else {
                    producer_utility(y, c.id, s, &ctx.m)
                }
                .expect("member of its own community"),
            })
            .collect();
        let what = if consumers { "consumption utility" } else { "production utility" };
        v.witnesses.extend(monotone_witnesses(c.id, &seq, left, ctx.cfg.slack, what));
    }
    v
}

fn check_le2(ctx: &Context) -> Verdict {
    let s = ctx.s;
    let sp = &s.space;
    let lc = ctx.lc();
    let mut v = Verdict::new(ctx.cfg.slack);
    for c in &s.communities {
        let demand = &ctx.m.views[c.id].demand;
        let g = &s.kernels.ability;
        let unwrapped = |offset: f64| {
            let y = torus_add(c.interval.midpoint, offset, sp);
            let r = solve_xstar(y, demand, g).expect("validated kernels have support");
            offset + signed_offset(y, r.x_star, sp)
        };
        let left_ref = unwrapped(-lc);
        let right_ref = unwrapped(lc);
        let found: Vec<Witness> = s
            .producer_grid
            .points
            .par_iter()
            .enumerate()
            .filter_map(|(z, &y)| {
                let o = signed_offset(c.interval.midpoint, y, sp);
                if o < -lc - GEOMETRY_TOL {
                    let x = unwrapped(o);
                    (x - left_ref > ctx.cfg.slack).then(|| {
                        witness(c.id, vec![z], vec![o, x], vec![left_ref], "outside producer lands right of x*(mid - L_C)")
                    })
                } else if o > lc + GEOMETRY_TOL {
                    let x = unwrapped(o);
                    (right_ref - x > ctx.cfg.slack).then(|| {
                        witness(c.id, vec![z], vec![o, x], vec![right_ref], "outside producer lands left of x*(mid + L_C)")
                    })
                } else {
                    None
                }
            })
            .collect();
        v.witnesses.extend(found);
    }
    v.note = Some("positions compared as offsets from the interval midpoint along the shorter arc from each agent".into());
    v
}

/// Random agent indices, drawn without replacement.
fn pick_agents(rng: &mut ChaCha8Rng, count: usize, n: usize) -> Vec<usize> {
    rand::seq::index::sample(rng, count, n.min(count)).into_vec()
}

/// Random split of `total` into `k` non-negative parts.
fn random_split(rng: &mut ChaCha8Rng, k: usize, total: f64) -> Vec<f64> {
    let w: Vec<f64> = (0..k).map(|_| rng.gen::<f64>()).collect();
    let sum: f64 = w.iter().sum::<f64>().max(f64::MIN_POSITIVE);
    w.into_iter().map(|x| total * x / sum).collect()
}

fn check_ll1(ctx: &Context) -> Verdict {
    let s = ctx.s;
    let m = &ctx.m;
    let mut v = Verdict::new(ctx.cfg.mixed_tol);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed);
    let k = m.views.len();
    let mut worst = f64::NEG_INFINITY;
    for y in pick_agents(&mut rng, s.consumer_grid.len(), ctx.cfg.mixed_agents) {
        let corner = best_consumer_move(y, s, m).best;
        let point = m.consumer_points[y];
        for _ in 0..ctx.cfg.mixed_trials {
            let budget = m.e_p * rng.gen::<f64>();
            let alloc: Vec<(usize, f64)> = random_split(&mut rng, k, budget).into_iter().enumerate().collect();
            let u = m.mixed_consumer_utility(point, &alloc);
            worst = worst.max(u - corner);
            if u - corner > ctx.cfg.mixed_tol {
                v.witnesses.push(Witness {
                    community: None,
                    agents: vec![y],
                    points: alloc.iter().map(|a| a.1).collect(),
                    values: vec![u, corner],
                    detail: "mixed consumption beats the single-community allocation".into(),
                });
            }
        }
    }
    v.metric = Some(worst);
    v.note = Some("metric is the largest excess of a mixed allocation over the corner".into());
    v
}

fn check_ll2(ctx: &Context) -> Verdict {
    let s = ctx.s;
    let m = &ctx.m;
    let sp = &s.space;
    let mut v = Verdict::new(ctx.cfg.mixed_tol);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed.wrapping_add(1));
    let k = m.views.len();
    let w = s.kernels.ability.width;
    let mut worst = f64::NEG_INFINITY;
    for y in pick_agents(&mut rng, s.producer_grid.len(), ctx.cfg.mixed_agents) {
        let corner = best_producer_move(y, s, m).best;
        let point = m.producer_points[y];
        for _ in 0..ctx.cfg.mixed_trials {
            let atoms = rng.gen_range(1..=4);
            let budget = m.e_q * rng.gen::<f64>();
            let alloc: Vec<(usize, SupplyAtom)> = random_split(&mut rng, atoms, budget)
                .into_iter()
                .map(|mass| {
                    let c = rng.gen_range(0..k);
                    let location = if rng.gen_bool(0.5) {
                        torus_add(point, rng.gen_range(-w..w), sp)
                    } else {
                        sp.point(rng.gen_range(-sp.half_length..sp.half_length))
                    };
                    (c, SupplyAtom { location, mass })
                })
                .collect();
            let u = m.mixed_producer_utility(point, &alloc);
            worst = worst.max(u - corner);
            if u - corner > ctx.cfg.mixed_tol {
                v.witnesses.push(Witness {
                    community: None,
                    agents: vec![y],
                    points: alloc.iter().map(|a| a.1.location.coord()).collect(),
                    values: vec![u, corner],
                    detail: "mixed production beats the single-atom allocation".into(),
                });
            }
        }
    }
    v.metric = Some(worst);
    v.note = Some("metric is the largest excess of a mixed allocation over the corner".into());
    v
}

fn run_check(id: &str, ctx: &Context) -> Verdict {
    match id {
        "LA1" => check_la1(ctx),
        "LB2" => check_lb2(ctx),
        "P2a" => check_p2a(ctx),
        "P2b" => check_p2_side(ctx, true),
        "P2c" => check_p2_side(ctx, false),
        "P2d" => check_p2d(ctx),
        "P3" => check_p3(ctx),
        "P4a" => check_p4a(ctx),
        "P4b" => check_p4b(ctx),
        "P4c" => check_p4c(ctx),
        "P4_argmax" => check_p4_argmax(ctx),
        "P5" => check_p5(ctx),
        "P5_disjoint" => check_p5_disjoint(ctx),
        "P6a" => utility_bands(ctx, true, true),
        "P6b" => utility_bands(ctx, true, false),
        "P7a" => utility_bands(ctx, false, true),
        "P7b" => utility_bands(ctx, false, false),
        "LE2" => check_le2(ctx),
        "LL1" => check_ll1(ctx),
        "LL2" => check_ll2(ctx),
        other => unreachable!("unknown property {other}"),
    }
}

/// Runs one named check.
pub fn check_property(id: &str, s: &CommunityStructure, cfg: &CheckConfig) -> Option<PropertyVerdict> {
    PROPERTY_IDS.contains(&id).then(|| {
        let ctx = Context::new(s, *cfg);
        run_check(id, &ctx).finish(id)
    })
}

/// Runs every check concurrently and returns the verdicts in [`PROPERTY_IDS`] order.
pub fn check_all(s: &CommunityStructure, cfg: &CheckConfig) -> Vec<PropertyVerdict> {
    let ctx = Context::new(s, *cfg);
    PROPERTY_IDS
        .par_iter()
        .map(|id| run_check(id, &ctx).finish(id))
        .collect()
}
