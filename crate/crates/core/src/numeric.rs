//! Scalar numerics shared by the solvers: adaptive Simpson quadrature,
//! bracketed bisection and golden-section search.

use crate::error::{Error, Result};

/// Absolute tolerance for [`integrate`].
pub const QUAD_TOL: f64 = 1e-12;
/// Maximum recursion depth for [`integrate`].
pub const QUAD_MAX_DEPTH: u32 = 40;
/// Argument tolerance for bisection.
pub const ROOT_XTOL: f64 = 1e-12;

const QUAD_MIN_DEPTH: u32 = 3;

struct QuadState {
    residual: f64,
    exhausted: bool,
}

/// Integrates `f` over `[a, b]` with adaptive Simpson at the default tolerance.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> Result<f64> {
    integrate_with(f, a, b, QUAD_TOL, QUAD_MAX_DEPTH)
}

/// Adaptive Simpson with an absolute tolerance and a depth limit.
///
/// When some subinterval reaches `max_depth` its local error estimate is
/// accumulated; the call fails only if that accumulated residual exceeds `tol`.
pub fn integrate_with<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if b < a {
        return integrate_with(f, b, a, tol, max_depth).map(|v| -v);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut state = QuadState {
        residual: 0.0,
        exhausted: false,
    };
    let value = simpson_step(
        &f, a, fa, m, fm, b, fb, whole, tol, max_depth, 0, &mut state,
    );
    if !value.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite integrand on [{a}, {b}]"
        )));
    }
    if state.exhausted && state.residual > tol {
        return Err(Error::Quadrature {
            a,
            b,
            residual: state.residual,
        });
    }
    Ok(value)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    fa: f64,
    m: f64,
    fm: f64,
    b: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth_left: u32,
    depth: u32,
    state: &mut QuadState,
) -> f64 {
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth >= QUAD_MIN_DEPTH && delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    if depth_left == 0 {
        state.exhausted = true;
        state.residual += delta.abs() / 15.0;
        return left + right + delta / 15.0;
    }
    simpson_step(
        f,
        a,
        fa,
        lm,
        flm,
        m,
        fm,
        left,
        0.5 * tol,
        depth_left - 1,
        depth + 1,
        state,
    ) + simpson_step(
        f,
        m,
        fm,
        rm,
        frm,
        b,
        fb,
        right,
        0.5 * tol,
        depth_left - 1,
        depth + 1,
        state,
    )
}

/// Integrates over `[a, b]` splitting at the given interior breakpoints first.
pub fn integrate_piecewise<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, breaks: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    let mut lo = a;
    for &bp in breaks.iter().filter(|&&bp| bp > a && bp < b) {
        total += integrate(&f, lo, bp)?;
        lo = bp;
    }
    total += integrate(&f, lo, b)?;
    Ok(total)
}

/// Bisection for a sign change of `f` on `[lo, hi]`.
///
/// The bracket is verified first; `Error::Infeasible` carries `f(lo)` when both
/// ends have the same strict sign.
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, xtol: f64) -> Result<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if !flo.is_finite() || !fhi.is_finite() {
        return Err(Error::Numeric(format!(
            "non-finite bracket values on [{lo}, {hi}]"
        )));
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Infeasible {
            what: format!("no sign change on [{lo}, {hi}] (f(hi) = {fhi:.3e})"),
            boundary: flo,
        });
    }
    let lo_positive = flo > 0.0;
    for _ in 0..200 {
        if hi - lo <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if (fm > 0.0) == lo_positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Locates the switch point of a predicate that holds on `[lo, p)` and fails on `(p, hi]`.
///
/// The caller is responsible for `pred(lo) == true`; if `pred(hi)` also holds,
/// `hi` is returned.
pub fn bisect_boundary<P: FnMut(f64) -> bool>(
    mut lo: f64,
    mut hi: f64,
    xtol: f64,
    mut pred: P,
) -> f64 {
    if pred(hi) {
        return hi;
    }
    for _ in 0..200 {
        if hi - lo <= xtol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Golden-section search for a maximum of `f` on `[a, b]`.
pub fn golden_section_max<F: FnMut(f64) -> f64>(
    mut f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > tol {
        // ties move toward the left end
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// `n` equally spaced points covering `[a, b]` inclusive.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|k| {
                if k == n - 1 {
                    b
                } else {
                    a + (b - a) * k as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}
