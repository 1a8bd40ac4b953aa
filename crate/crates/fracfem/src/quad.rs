//! Gauss–Kronrod 15(7) panels plus the composite strategies used throughout:
//! adaptive bisection on finite intervals, dyadic refinement toward an
//! algebraic endpoint singularity, and doubling panels for exponentially
//! decaying tails on `[a, inf)`. Kronrod nodes are interior, so integrands
//! may blow up at panel endpoints.

use crate::{Error, Result};

/// Kronrod abscissae (positive half) for the 15-point rule.
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144838258730,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

/// Embedded 7-point Gauss weights (nodes XGK[1], XGK[3], XGK[5], XGK[7]).
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// One Gauss–Kronrod 15(7) panel; returns the Kronrod value and |K15 - G7|.
pub fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kron = WGK[7] * f(c);
    let mut gauss = WG[3] * f(c);
    for i in 0..7 {
        let x = h * XGK[i];
        let fsum = f(c - x) + f(c + x);
        kron += WGK[i] * fsum;
        if i % 2 == 1 {
            gauss += WG[i / 2] * fsum;
        }
    }
    kron *= h;
    gauss *= h;
    (kron, (kron - gauss).abs())
}

fn adapt_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: u32,
    budget: &mut i64,
) -> Result<(f64, f64)> {
    *budget -= 15;
    if *budget < 0 {
        return Err(Error::QuadratureBudget(format!(
            "panel budget exhausted on [{a}, {b}]"
        )));
    }
    let (v, e) = gk15(f, a, b);
    if e <= tol || depth >= 30 {
        return Ok((v, e));
    }
    let c = 0.5 * (a + b);
    let (v1, e1) = adapt_rec(f, a, c, 0.5 * tol, depth + 1, budget)?;
    let (v2, e2) = adapt_rec(f, c, b, 0.5 * tol, depth + 1, budget)?;
    Ok((v1 + v2, e1 + e2))
}

/// Adaptive integration on a finite interval to an absolute tolerance.
pub fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol_abs: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut budget: i64 = 200_000;
    adapt_rec(f, a, b, tol_abs.max(f64::MIN_POSITIVE), 0, &mut budget).map(|(v, _)| v)
}

/// Which end of the interval carries the (integrable) singularity.
#[derive(Clone, Copy, PartialEq)]
pub enum SingularEnd {
    Left,
    Right,
}

/// Integrate over `[a, b]` where the integrand may behave like an integrable
/// power `(x - end)^g`, `g > -1`, at one endpoint. Dyadic panels shrink
/// geometrically toward the singular end; the leftover mass is bounded by a
/// geometric-tail estimate and required to drop below the tolerance.
///
/// When the singular end is 0 itself the descent reaches ~1e-300 and any
/// `g > -1` is fine. At a nonzero endpoint the descent stops at the f64
/// resolution `end * 2^-53`, whose unresolved mass scales like
/// `(2^-53)^{1+g}`; callers with `g < -0.5` there must substitute the
/// singularity away first (the Duhamel quadrature does).
pub fn singular_endpoint<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    end: SingularEnd,
    tol_abs: f64,
) -> Result<f64> {
    if !(b > a) {
        return Ok(0.0);
    }
    let width = b - a;
    let tol = tol_abs.max(1e-300);
    let mut total = 0.0;
    let mut prev_mag = f64::INFINITY;
    let mut lo_frac = 0.5f64;
    // first panel is the non-singular half
    let (p0, p1) = match end {
        SingularEnd::Left => (a + 0.5 * width, b),
        SingularEnd::Right => (a, a + 0.5 * width),
    };
    total += adaptive(f, p0, p1, 0.125 * tol)?;
    for _ in 0..1100 {
        let hi_frac = lo_frac;
        lo_frac *= 0.5;
        let (p0, p1) = match end {
            SingularEnd::Left => (a + lo_frac * width, a + hi_frac * width),
            SingularEnd::Right => (b - hi_frac * width, b - lo_frac * width),
        };
        let c = adaptive(f, p0, p1, 0.125 * tol)?;
        total += c;
        let mag = c.abs();
        if mag > 0.0 && prev_mag.is_finite() && prev_mag > 0.0 {
            let rho = (mag / prev_mag).min(0.97);
            if mag * rho / (1.0 - rho) < 0.25 * tol {
                return Ok(total);
            }
        } else if mag == 0.0 && prev_mag == 0.0 {
            return Ok(total);
        }
        prev_mag = mag;
    }
    Err(Error::QuadratureBudget(
        "endpoint refinement did not converge".into(),
    ))
}

/// Integrate `f` over `[a, inf)` for integrands with an `exp(-r t)` factor
/// (`t > 0`): panels double in width until their contribution is negligible.
pub fn exp_tail<F: Fn(f64) -> f64>(f: &F, a: f64, tol_abs: f64) -> Result<f64> {
    assert!(a > 0.0);
    let tol = tol_abs.max(1e-300);
    let mut total = 0.0;
    let mut lo = a;
    let mut small_streak = 0;
    for _ in 0..90 {
        let hi = 2.0 * lo;
        let c = adaptive(f, lo, hi, 0.125 * tol)?;
        total += c;
        if c.abs() < 0.25 * tol {
            small_streak += 1;
            if small_streak >= 2 {
                return Ok(total);
            }
        } else {
            small_streak = 0;
        }
        lo = hi;
    }
    Err(Error::QuadratureBudget("tail did not decay".into()))
}
