//! Community demand `P_δC`, its continuous counterpart `P_C`, and atomic supply.

use serde::{Deserialize, Serialize};

use crate::kernels::{AbilityKernel, InterestKernel};
use crate::torus::{distance, raw_distance, signed_offset, ContentPoint, SpaceConfig, TorusInterval};

/// A real-valued function on the content space.
pub trait ContentFunction: Sync {
    /// Value at a canonical coordinate.
    fn value(&self, x: f64) -> f64;
}

/// `P_δC(x) = Σ α(y) f(d(x, y))` for a weighted set of consumers.
///
/// Members are stored as offsets from a reference point and summed through
/// prefix moments, so one evaluation costs a few binary searches.
#[derive(Debug, Clone)]
pub struct DemandProfile {
    pub community: usize,
    pub kernel: InterestKernel,
    pub space: SpaceConfig,
    pub reference: ContentPoint,
    /// Consumer spacing `δ_d` of the underlying grid.
    pub spacing: f64,
    offsets: Vec<f64>,
    weights: Vec<f64>,
    m0: Vec<f64>,
    m1: Vec<f64>,
    m2: Vec<f64>,
}

impl DemandProfile {
    pub fn new(
        community: usize,
        members: &[(ContentPoint, f64)],
        reference: ContentPoint,
        spacing: f64,
        kernel: InterestKernel,
        space: SpaceConfig,
    ) -> Self {
        let mut pts: Vec<(f64, f64)> = members
            .iter()
            .filter(|(_, w)| *w != 0.0)
            .map(|&(p, w)| (signed_offset(reference, p, &space), w))
            .collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let n = pts.len();
        let (mut m0, mut m1, mut m2) = (vec![0.0; n + 1], vec![0.0; n + 1], vec![0.0; n + 1]);
        for (i, &(r, w)) in pts.iter().enumerate() {
            m0[i + 1] = m0[i] + w;
            m1[i + 1] = m1[i] + w * r;
            m2[i + 1] = m2[i] + w * r * r;
        }
        Self {
            community,
            kernel,
            space,
            reference,
            spacing,
            offsets: pts.iter().map(|p| p.0).collect(),
            weights: pts.iter().map(|p| p.1).collect(),
            m0,
            m1,
            m2,
        }
    }

    /// Total consumption mass `α_δC`.
    pub fn total_rate(&self) -> f64 {
        self.m0[self.m0.len() - 1]
    }

    pub fn member_count(&self) -> usize {
        self.offsets.len()
    }

    /// Σ w (1 − a1 σ s − a2 s²) over `[i, j)` where `s = r + u` has sign `σ`.
    #[inline]
    fn block(&self, i: usize, j: usize, u: f64, sign: f64) -> f64 {
        if i >= j {
            return 0.0;
        }
        let s0 = self.m0[j] - self.m0[i];
        let s1 = self.m1[j] - self.m1[i] + u * s0;
        let s2 = self.m2[j] - self.m2[i] + 2.0 * u * (self.m1[j] - self.m1[i]) + u * u * s0;
        s0 - self.kernel.a1 * sign * s1 - self.kernel.a2 * s2
    }

    #[inline]
    fn lower_bound(&self, t: f64) -> usize {
        self.offsets.partition_point(|&r| r < t)
    }

    /// Exact finite sum by direct iteration, used as an oracle.
    pub fn direct_value(&self, x: f64) -> f64 {
        let xr = self.space.canonical(x - self.reference.coord());
        self.offsets
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| w * self.kernel.value(raw_distance(r, xr, &self.space)))
            .sum()
    }
}

impl ContentFunction for DemandProfile {
    fn value(&self, x: f64) -> f64 {
        let l = self.space.half_length;
        let xr = self.space.canonical(x - self.reference.coord());
        let n = self.offsets.len();
        // members with r - xr outside [-L, L) wrap by ∓2L
        let (lo, hi, u_lo, u_hi) = if xr >= 0.0 {
            (self.lower_bound(xr - l), n, 2.0 * l - xr, 0.0)
        } else {
            (0, self.lower_bound(xr + l), 0.0, -2.0 * l - xr)
        };
        let pivot = self.lower_bound(xr).clamp(lo, hi);
        let mut total = self.block(lo, pivot, -xr, -1.0) + self.block(pivot, hi, -xr, 1.0);
        if xr >= 0.0 {
            total += self.block(0, lo, u_lo, 1.0);
        } else {
            total += self.block(hi, n, u_hi, -1.0);
        }
        total
    }
}

/// `P_C(x) = E_p ∫_{I_C} f(d(x, y)) dy` in closed form.
#[derive(Debug, Clone, Copy)]
pub struct ContinuousDemand {
    pub interval: TorusInterval,
    pub kernel: InterestKernel,
    pub rate: f64,
    pub space: SpaceConfig,
}

impl ContinuousDemand {
    /// `∫_0^s f(|t|) dt` for `s ∈ [-L, L]`.
    #[inline]
    fn signed_primitive(&self, s: f64) -> f64 {
        if s >= 0.0 {
            self.kernel.antiderivative(s)
        } else {
            -self.kernel.antiderivative(-s)
        }
    }
}

impl ContentFunction for ContinuousDemand {
    fn value(&self, x: f64) -> f64 {
        let l = self.space.half_length;
        let s0 = self.space.canonical(self.interval.start(&self.space).coord() - x);
        let s1 = s0 + self.interval.length();
        let integral = if s1 <= l {
            self.signed_primitive(s1) - self.signed_primitive(s0)
        } else {
            self.signed_primitive(l) - self.signed_primitive(s0) + self.signed_primitive(s1 - 2.0 * l)
                - self.signed_primitive(-l)
        };
        self.rate * integral
    }
}

/// Result of comparing `δ_d P_δC` against `P_C` on a set of points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiemannGap {
    pub sup_gap: f64,
    pub argsup: f64,
    pub bound: f64,
}

/// `sup |δ_d P_δC(x) − P_C(x)|` over `xs` and the bound `2 E_p (M_f L_C + 1) δ_d`.
pub fn riemann_gap(d: &DemandProfile, cd: &ContinuousDemand, xs: &[f64], m_f: f64) -> RiemannGap {
    let delta = d.spacing;
    let mut sup_gap = 0.0;
    let mut argsup = f64::NAN;
    for &x in xs {
        let g = (delta * d.value(x) - cd.value(x)).abs();
        if g > sup_gap || argsup.is_nan() {
            sup_gap = g;
            argsup = x;
        }
    }
    RiemannGap {
        sup_gap,
        argsup,
        bound: 2.0 * cd.rate * (m_f * cd.interval.half_length + 1.0) * delta,
    }
}

/// One supply atom weighted by the producer's ability at its location.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveAtom {
    pub producer: usize,
    pub location: ContentPoint,
    pub mass: f64,
    /// `q(location | producer)`.
    pub quality: f64,
}

/// `Q*_δC` as a list of weighted atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct SupplyProfile {
    pub community: usize,
    pub atoms: Vec<EffectiveAtom>,
}

impl SupplyProfile {
    pub fn new(
        community: usize,
        raw: &[(usize, ContentPoint, ContentPoint, f64)],
        g: &AbilityKernel,
        cfg: &SpaceConfig,
    ) -> Self {
        let atoms = raw
            .iter()
            .map(|&(producer, centre, location, mass)| EffectiveAtom {
                producer,
                location,
                mass,
                quality: g.value(distance(centre, location, cfg)),
            })
            .collect();
        Self { community, atoms }
    }

    /// `Σ mass · q(location | producer)`.
    pub fn effective_mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.mass * a.quality).sum()
    }

    /// Atom locations with coincident ones (within 1e-9) merged, sorted.
    pub fn merged_locations(&self) -> Vec<(f64, f64)> {
        let mut locs: Vec<(f64, f64)> = self
            .atoms
            .iter()
            .filter(|a| a.mass > 0.0)
            .map(|a| (a.location.coord(), a.mass * a.quality))
            .collect();
        locs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(locs.len());
        for (x, m) in locs {
            match out.last_mut() {
                Some(last) if (x - last.0).abs() <= 1e-9 => last.1 += m,
                _ => out.push((x, m)),
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportReport {
    /// `L*_δC`.
    pub half_width: f64,
    pub contained: bool,
}

/// Smallest arc about `mid(I_C)` holding every atom with positive mass.
pub fn supply_support(sp: &SupplyProfile, interval: &TorusInterval, cfg: &SpaceConfig) -> SupportReport {
    let half_width = sp
        .atoms
        .iter()
        .filter(|a| a.mass > 0.0)
        .map(|a| distance(a.location, interval.midpoint, cfg))
        .fold(0.0, f64::max);
    SupportReport {
        half_width,
        contained: half_width < interval.half_length,
    }
}

/// Row of a dense demand dump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DemandSample {
    pub x: f64,
    pub p_delta: f64,
    pub p_cont: f64,
    pub gap: f64,
}

/// Samples `P_δC`, `P_C` and `|δ_d P_δC − P_C|` on `n` evenly spaced points of the space.
pub fn sample_profiles(d: &DemandProfile, cd: &ContinuousDemand, n: usize) -> Vec<DemandSample> {
    let l = d.space.half_length;
    (0..n)
        .map(|i| {
            let x = -l + 2.0 * l * i as f64 / n as f64;
            let p_delta = d.value(x);
            let p_cont = cd.value(x);
            DemandSample {
                x,
                p_delta,
                p_cont,
                gap: (d.spacing * p_delta - p_cont).abs(),
            }
        })
        .collect()
}
