//! Adaptive Simpson quadrature.

/// Panels the interval is split into before adaptation starts, so that
/// oscillatory integrands cannot fake convergence on the first estimate.
const INITIAL_PANELS: usize = 16;
const MAX_DEPTH: u32 = 40;

/// `∫_a^b f(x) dx` to absolute tolerance `tol`.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let h = (b - a) / INITIAL_PANELS as f64;
    let panel_tol = tol / INITIAL_PANELS as f64;
    (0..INITIAL_PANELS)
        .map(|k| {
            let lo = a + h * k as f64;
            let hi = if k + 1 == INITIAL_PANELS { b } else { lo + h };
            let (flo, fhi) = (f(lo), f(hi));
            let mid = 0.5 * (lo + hi);
            let fmid = f(mid);
            let whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
            refine(&f, lo, hi, flo, fmid, fhi, whole, panel_tol, MAX_DEPTH)
        })
        .sum()
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> f64,
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
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
