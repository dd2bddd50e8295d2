//! Scalar optimisation and quadrature helpers.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `h` on `[a, b]`.
///
/// Returns `(argmax, value)` once the bracket is narrower than `tol`.
pub fn golden_section_max<F: Fn(f64) -> f64>(h: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let (a0, b0) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut hc = h(c);
    let mut hd = h(d);
    while (b - a).abs() > tol {
        if hc >= hd {
            b = d;
            d = c;
            hd = hc;
            c = b - INV_PHI * (b - a);
            hc = h(c);
        } else {
            a = c;
            c = d;
            hc = hd;
            d = a + INV_PHI * (b - a);
            hd = h(d);
        }
    }
    // the bracket endpoints can beat the interior probes when the maximum sits on a kink
    let mut best = if hc >= hd { (c, hc) } else { (d, hd) };
    for x in [a, b, 0.5 * (a + b)] {
        let v = h(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    polish_stationary(&h, best, a0, b0)
}

const POLISH_STEP: f64 = 1e-6;
const POLISH_RADIUS: f64 = 1e-6;

/// Values are flat to roundoff within ~sqrt(eps) of a smooth maximum, so the
/// golden-section estimate is refined by bisecting the sign of a central
/// difference. The refined point is kept only if its value does not drop.
fn polish_stationary<F: Fn(f64) -> f64>(h: &F, best: (f64, f64), a: f64, b: f64) -> (f64, f64) {
    let slope = |x: f64| h(x + POLISH_STEP) - h(x - POLISH_STEP);
    let mut lo = (best.0 - POLISH_RADIUS).max(a);
    let mut hi = (best.0 + POLISH_RADIUS).min(b);
    if !(slope(lo) > 0.0 && slope(hi) < 0.0) {
        return best;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    let v = h(x);
    if v >= best.1 - 1e-13 * best.1.abs().max(1.0) {
        (x, v.max(best.1))
    } else {
        best
    }
}

/// Adaptive Simpson quadrature of `h` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(h: &F, a: f64, b: f64, tol: f64) -> f64 {
    const MAX_DEPTH: u32 = 48;
    let fa = h(a);
    let fb = h(b);
    let m = 0.5 * (a + b);
    let fm = h(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(h, a, b, fa, fm, fb, whole, tol, MAX_DEPTH)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    h: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = h(lm);
    let frm = h(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(h, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(h, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
