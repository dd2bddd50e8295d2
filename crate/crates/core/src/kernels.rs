//! Interest kernel `f` and ability kernel `g`.
//!
//! `p(x|y) = f(d(x, y))` is the probability that a consumer centred at `y`
//! finds content of type `x` interesting; `q(x|y) = g(d(x, y))` is the
//! probability that a producer centred at `y` makes relevant type-`x` content.
//!
//! The default families are
//!
//! * `f(t) = 1 - a1 t - a2 t^2` on `[0, L]` (concave everywhere, so `b = L`);
//! * `g(t) = g0 (1 - (t / w)^2)` on `[0, w]`, zero beyond.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::torus::{raw_distance, ContentPoint, SpaceConfig};

/// Points per unit-length interval used by the dense-grid assumption checks.
const VALIDATION_POINTS: usize = 4001;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("kernel assumption violated: {0}")]
    AssumptionViolated(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterestKernel {
    pub a1: f64,
    pub a2: f64,
    /// Domain bound `L`.
    pub domain: f64,
}

impl InterestKernel {
    pub fn quadratic(a1: f64, a2: f64, domain: f64) -> Self {
        Self { a1, a2, domain }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        1.0 - t * (self.a1 + self.a2 * t)
    }

    #[inline]
    pub fn d1(&self, t: f64) -> f64 {
        -self.a1 - 2.0 * self.a2 * t
    }

    #[inline]
    pub fn d2(&self, _t: f64) -> f64 {
        -2.0 * self.a2
    }

    #[inline]
    pub fn d3(&self, _t: f64) -> f64 {
        0.0
    }

    /// `∫_0^t f(s) ds`.
    #[inline]
    pub fn antiderivative(&self, t: f64) -> f64 {
        t * (1.0 - t * (0.5 * self.a1 + self.a2 * t / 3.0))
    }

    /// Local concavity constant `b`.
    pub fn concavity_bound(&self) -> f64 {
        self.domain
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbilityKernel {
    pub g0: f64,
    /// Support half-width `w`.
    pub width: f64,
}

impl AbilityKernel {
    pub fn truncated_parabola(g0: f64, width: f64) -> Self {
        Self { g0, width }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        if t >= self.width {
            return 0.0;
        }
        let r = t / self.width;
        self.g0 * (1.0 - r * r)
    }

    /// Derivative; one-sided (from the left) at `t = w`.
    #[inline]
    pub fn d1(&self, t: f64) -> f64 {
        if t > self.width {
            return 0.0;
        }
        -2.0 * self.g0 * t / (self.width * self.width)
    }

    #[inline]
    pub fn d2(&self, t: f64) -> f64 {
        if t > self.width {
            return 0.0;
        }
        -2.0 * self.g0 / (self.width * self.width)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelPair {
    pub interest: InterestKernel,
    pub ability: AbilityKernel,
}

impl KernelPair {
    /// `p(x|y)`.
    #[inline]
    pub fn interest(&self, y: ContentPoint, x: ContentPoint, cfg: &SpaceConfig) -> f64 {
        interest(y, x, &self.interest, cfg)
    }

    /// `q(x|y)`.
    #[inline]
    pub fn ability(&self, y: ContentPoint, x: ContentPoint, cfg: &SpaceConfig) -> f64 {
        ability(y, x, &self.ability, cfg)
    }
}

/// Analytic derivative bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelBounds {
    /// `sup |f'|` on `[0, L]`.
    pub m_f: f64,
    /// `sup |f''|`.
    pub m_2: f64,
    /// `sup |f'''|`.
    pub m_3: f64,
    /// `sup |g'|` on `supp(g)`.
    pub m_g: f64,
}

/// `p(x|y) = f(d(x, y))`.
#[inline]
pub fn interest(y: ContentPoint, x: ContentPoint, f: &InterestKernel, cfg: &SpaceConfig) -> f64 {
    f.value(raw_distance(x.coord(), y.coord(), cfg))
}

/// `q(x|y) = g(d(x, y))`.
#[inline]
pub fn ability(y: ContentPoint, x: ContentPoint, g: &AbilityKernel, cfg: &SpaceConfig) -> f64 {
    g.value(raw_distance(x.coord(), y.coord(), cfg))
}

/// Checks every clause of the kernel assumptions and returns derivative bounds.
///
/// Analytic clauses are checked first, then the shape clauses on a dense grid
/// over `[0, L]`.
pub fn validate_assumption1(
    f: &InterestKernel,
    g: &AbilityKernel,
) -> Result<KernelBounds, KernelError> {
    use KernelError::AssumptionViolated as V;
    let l = f.domain;
    let finite = [f.a1, f.a2, f.domain, g.g0, g.width]
        .iter()
        .all(|v| v.is_finite());
    if !finite || l <= 0.0 {
        return Err(V("finite parameters with L>0"));
    }
    if !(f.d1(0.0) < 0.0) {
        return Err(V("f'(0)<0"));
    }
    if !(f.a2 > 0.0) {
        return Err(V("f''<0 on [0,b]"));
    }
    if f.value(l) < 0.0 {
        return Err(V("f maps [0,L] into [0,1]"));
    }
    if !(g.g0 > 0.0) {
        return Err(V("g(0)>0"));
    }
    if g.g0 > 1.0 {
        return Err(V("g maps [0,L] into [0,1]"));
    }
    if !(g.width > 0.0 && g.width <= l) {
        return Err(V("supp(g) within [0,L]"));
    }
    if g.d1(0.0) != 0.0 {
        return Err(V("g'(0)=0"));
    }

    let n = VALIDATION_POINTS;
    let ts: Vec<f64> = (0..n).map(|i| l * i as f64 / (n - 1) as f64).collect();
    for w in ts.windows(2) {
        if !(f.value(w[1]) < f.value(w[0])) {
            return Err(V("f strictly decreasing"));
        }
        if g.value(w[1]) > g.value(w[0]) {
            return Err(V("g non-increasing"));
        }
    }
    let b = f.concavity_bound();
    for w in ts.windows(3) {
        if w[2] <= b && !(f.value(w[0]) - 2.0 * f.value(w[1]) + f.value(w[2]) < 0.0) {
            return Err(V("f''<0 on [0,b]"));
        }
        if w[2] <= g.width
            && !(g.value(w[0]) - 2.0 * g.value(w[1]) + g.value(w[2]) < 0.0)
        {
            return Err(V("g strictly concave on supp(g)"));
        }
    }
    for &t in &ts {
        let (fv, gv) = (f.value(t), g.value(t));
        if !(0.0..=1.0).contains(&fv) {
            return Err(V("f maps [0,L] into [0,1]"));
        }
        if !(0.0..=1.0).contains(&gv) {
            return Err(V("g maps [0,L] into [0,1]"));
        }
    }

    Ok(KernelBounds {
        m_f: f.a1 + 2.0 * f.a2 * l,
        m_2: 2.0 * f.a2,
        m_3: 0.0,
        m_g: 2.0 * g.g0 / g.width,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn defaults() -> (SpaceConfig, InterestKernel, AbilityKernel) {
        (
            SpaceConfig::new(1.0).unwrap(),
            InterestKernel::quadratic(0.3, 0.4, 1.0),
            AbilityKernel::truncated_parabola(0.8, 0.5),
        )
    }

    #[test]
    fn interest_examples() {
        let (c, f, _) = defaults();
        let y = c.point(0.25);
        assert_eq!(interest(y, y, &f, &c), 1.0);
        assert!((interest(c.point(0.0), c.point(0.5), &f, &c) - 0.75).abs() < 1e-12);
        assert!((interest(c.point(0.9), c.point(-0.9), &f, &c) - 0.924).abs() < 1e-12);
    }

    #[test]
    fn ability_examples() {
        let (c, _, g) = defaults();
        let y = c.point(-0.3);
        assert_eq!(ability(y, y, &g, &c), 0.8);
        assert!((ability(c.point(0.0), c.point(0.25), &g, &c) - 0.6).abs() < 1e-12);
        assert_eq!(ability(c.point(0.0), c.point(0.7), &g, &c), 0.0);
    }

    #[test]
    fn validation_examples() {
        let (_, f, g) = defaults();
        let b = validate_assumption1(&f, &g).unwrap();
        assert!((b.m_f - 1.1).abs() < 1e-12);
        assert!((b.m_2 - 0.8).abs() < 1e-12);
        assert!((b.m_g - 3.2).abs() < 1e-12);
        assert_eq!(b.m_3, 0.0);

        let bad_f = InterestKernel::quadratic(0.0, 0.4, 1.0);
        assert_eq!(
            validate_assumption1(&bad_f, &g),
            Err(KernelError::AssumptionViolated("f'(0)<0"))
        );
        let bad_g = AbilityKernel::truncated_parabola(0.0, 0.5);
        assert_eq!(
            validate_assumption1(&f, &bad_g),
            Err(KernelError::AssumptionViolated("g(0)>0"))
        );
        let negative_range = InterestKernel::quadratic(0.8, 0.4, 1.0);
        assert!(validate_assumption1(&negative_range, &g).is_err());
        let wide = AbilityKernel::truncated_parabola(0.8, 1.5);
        assert!(validate_assumption1(&f, &wide).is_err());
    }

    #[test]
    fn derivatives_match_central_differences() {
        let (_, f, g) = defaults();
        let h = 1e-4;
        for i in 1..1000 {
            let t = i as f64 * 1e-3;
            let fd1 = (f.value(t + h) - f.value(t - h)) / (2.0 * h);
            let fd2 = (f.value(t + h) - 2.0 * f.value(t) + f.value(t - h)) / (h * h);
            assert!((fd1 - f.d1(t)).abs() < 1e-6, "f' at {t}");
            assert!((fd2 - f.d2(t)).abs() < 1e-6, "f'' at {t}");
            if (t - g.width).abs() > 2.0 * h {
                let gd1 = (g.value(t + h) - g.value(t - h)) / (2.0 * h);
                assert!((gd1 - g.d1(t)).abs() < 1e-6, "g' at {t}");
            }
        }
    }

    #[test]
    fn bounds_dominate_grid_derivatives() {
        let (_, f, g) = defaults();
        let b = validate_assumption1(&f, &g).unwrap();
        for i in 0..=1000 {
            let t = i as f64 * 1e-3;
            assert!(f.d1(t).abs() <= b.m_f + 1e-12);
            assert!(f.d2(t).abs() <= b.m_2 + 1e-12);
            if t <= g.width {
                assert!(g.d1(t).abs() <= b.m_g + 1e-12);
            }
        }
    }

    #[test]
    fn kernels_symmetric_and_bounded() {
        let (c, f, g) = defaults();
        for i in 0..200 {
            for j in 0..200 {
                let a = c.point(-1.0 + i as f64 * 0.01);
                let b = c.point(-1.0 + j as f64 * 0.01);
                assert_eq!(interest(a, b, &f, &c), interest(b, a, &f, &c));
                assert_eq!(ability(a, b, &g, &c), ability(b, a, &g, &c));
                let (p, q) = (interest(a, b, &f, &c), ability(a, b, &g, &c));
                assert!((0.0..=1.0).contains(&p) && (0.0..=1.0).contains(&q));
            }
        }
    }

    #[test]
    fn antiderivative_matches_midpoint_rule() {
        let (_, f, _) = defaults();
        let n = 100_000;
        let t = 0.73;
        let h = t / n as f64;
        let s: f64 = (0..n).map(|i| f.value((i as f64 + 0.5) * h)).sum::<f64>() * h;
        assert!((s - f.antiderivative(t)).abs() < 1e-10);
    }
}
