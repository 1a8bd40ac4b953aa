//! Laplace-inversion route for the time-domain kernels
//!
//! Every kernel used by the solvers is of the form
//! `g(t) = t^{b0-1} E_{(b),b0}(c_1 t^{b_1}, ..., c_m t^{b_m})` with `c_i <= 0`,
//! whose Laplace transform is `z^{-b0} / (1 - sum_i c_i z^{-b_i})`. The
//! transform has no zeros off the negative real axis, so the Bromwich path
//! collapses onto the branch cut and `g(t) = int_0^inf exp(-r t) K(r) dr`
//! (plus a residue at the origin exactly when `b0 = 1 + max b_i`, handled by
//! the callers). The kernel `K` is evaluated in a scaled form so that the
//! `r -> 0` and `r -> inf` extremes neither overflow nor lose the leading
//! behavior.

use super::FracOrders;
use crate::quad::{exp_tail, singular_endpoint, SingularEnd};
use crate::{Error, Result};
use std::f64::consts::PI;

/// Branch-cut density of the per-mode source kernel: with
/// `w(z) = z^alpha + sum_i b_i z^{alpha_i} + lambda`,
///
/// ```text
/// K(r) = (1/pi) * B / (A^2 + B^2),
/// A = r^alpha cos(alpha pi) + sum b_i r^{alpha_i} cos(alpha_i pi) + lambda,
/// B = r^alpha sin(alpha pi) + sum b_i r^{alpha_i} sin(alpha_i pi).
/// ```
///
/// Strictly positive for all `r > 0`, which is what makes the kernel
/// completely monotone.
pub fn ebar_kernel(r: f64, lambda: f64, orders: &FracOrders) -> Result<f64> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput(format!("r must be > 0, got {r}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    let a = orders.alpha();
    let mut re = r.powf(a) * (a * PI).cos() + lambda;
    let mut im = r.powf(a) * (a * PI).sin();
    for (&ai, &bi) in orders.lower_orders().iter().zip(orders.weights()) {
        re += bi * r.powf(ai) * (ai * PI).cos();
        im += bi * r.powf(ai) * (ai * PI).sin();
    }
    Ok(im / (re * re + im * im) / PI)
}

/// Laplace-inversion quadrature for the per-mode source kernel:
/// `int_0^inf exp(-r t) K(r) dr = t^{alpha-1} E_{(.),alpha}(-lambda t^alpha, ...)`.
///
/// This is the independent oracle the series route is validated against; it
/// uses only the closed-form density above and generic quadrature.
pub fn ebar_integral(t: f64, lambda: f64, orders: &FracOrders, tol: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidInput(format!("t must be > 0, got {t}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda must be > 0, got {lambda}"
        )));
    }
    let f = |r: f64| (-r * t).exp() * ebar_kernel(r, lambda, orders).unwrap_or(0.0);
    let split = 1.0 / t;
    let near = singular_endpoint(&f, 0.0, split, SingularEnd::Left, 0.5 * tol)?;
    let far = exp_tail(&f, split, 0.5 * tol)?;
    Ok(near + far)
}

/// Scaled branch-cut density for the general transform
/// `z^{-b0} / (1 - sum c_i z^{-b_i})`, evaluated at `z = r e^{i pi}`.
fn hankel_kernel(betas: &[f64], beta0: f64, cs: &[f64], r: f64) -> f64 {
    let ln_r = r.ln();
    // scale by the largest of the |c_i| r^{-b_i} terms and the constant 1
    let mut m_star = 0.0f64;
    for (&b, &c) in betas.iter().zip(cs) {
        if c != 0.0 {
            m_star = m_star.max(c.abs().ln() - b * ln_r);
        }
    }
    let mut p = (-m_star).exp();
    let mut q = 0.0;
    for (&b, &c) in betas.iter().zip(cs) {
        if c != 0.0 {
            let mag = (c.abs().ln() - b * ln_r - m_star).exp();
            p += mag * (PI * b).cos();
            q -= mag * (PI * b).sin();
        }
    }
    let scale = -beta0 * ln_r - m_star;
    if scale > 700.0 {
        return f64::INFINITY;
    }
    scale.exp() * (p * (PI * beta0).sin() + q * (PI * beta0).cos()) / (p * p + q * q) / PI
}

/// Branch-cut part of `g(t) = t^{b0-1} E_{(b),b0}(c_1 t^{b_1}, ...)`:
/// `int_0^inf exp(-r t) K(r) dr`.
///
/// Valid for `0 < b0 <= 1 + max_active(b_i)`; at equality the caller must add
/// the residue `1 / |c_max|` separately.
pub(crate) fn hankel_integral(
    betas: &[f64],
    beta0: f64,
    cs: &[f64],
    t: f64,
    tol: f64,
) -> Result<f64> {
    if betas.len() != cs.len() || betas.is_empty() {
        return Err(Error::InvalidInput("exponent/coefficient mismatch".into()));
    }
    if !(t > 0.0) {
        return Err(Error::InvalidInput("branch-cut route needs t > 0".into()));
    }
    let mut b_max = 0.0f64;
    for (&b, &c) in betas.iter().zip(cs) {
        if c > 0.0 {
            return Err(Error::InvalidInput(
                "branch-cut route needs nonpositive coefficients".into(),
            ));
        }
        if !(b > 0.0 && b < 1.0) {
            return Err(Error::InvalidInput(format!(
                "branch-cut route needs exponents in (0,1), got {b}"
            )));
        }
        if c != 0.0 {
            b_max = b_max.max(b);
        }
    }
    if b_max == 0.0 {
        return Err(Error::InvalidInput("all coefficients vanish".into()));
    }
    if beta0 > 1.0 + b_max + 1e-9 {
        return Err(Error::Unsupported(format!(
            "second subscript {beta0} beyond branch-cut range"
        )));
    }
    let f = |r: f64| (-r * t).exp() * hankel_kernel(betas, beta0, cs, r);
    let split = 1.0 / t;
    let near = singular_endpoint(&f, 0.0, split, SingularEnd::Left, 0.5 * tol)?;
    let far = exp_tail(&f, split, 0.5 * tol)?;
    Ok(near + far)
}
