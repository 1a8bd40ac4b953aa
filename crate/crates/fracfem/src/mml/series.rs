//! Layer-by-layer summation of the multinomial Mittag-Leffler series
//!
//! ```text
//! E_{(b_1..b_m),b0}(z_1..z_m)
//!     = sum_k sum_{l_1+..+l_m=k} (k; l_1..l_m) prod z_i^{l_i} / Gamma(b0 + sum b_i l_i)
//! ```
//!
//! Layers share a sign on the negative real axis, so cancellation happens
//! only across layers; terms and the accumulator are kept in double-double
//! precision. Truncation uses a geometric majorant of the layer magnitudes
//! once they decay. When all exponents equal 1 the Gamma denominators reduce
//! to factorials and are carried exactly, which is what makes the exponential
//! special case accurate to full precision.

use super::{MLEvalResult, MLParams};
use crate::dd::Dd;
use crate::{gamma, ln_gamma, Error, Result};

/// Knobs for the series evaluator.
#[derive(Clone, Debug)]
pub struct SeriesOptions {
    /// Maximum total degree before giving up.
    pub max_layers: usize,
    /// Abort when `ln |term|` exceeds this cap: beyond it the final
    /// cancellation cannot be resolved even in double-double precision.
    pub magnitude_cap_ln: f64,
    /// Overall term budget guarding the multi-index enumeration.
    pub max_terms: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            max_layers: 600,
            magnitude_cap_ln: 64.0,
            max_terms: 4_000_000,
        }
    }
}

/// Multinomial coefficient `k! / (l_1! ... l_m!)` in log space.
pub fn multinomial_coeff(k: u32, ls: &[u32]) -> Result<f64> {
    let sum: u32 = ls.iter().sum();
    if sum != k {
        return Err(Error::InvalidInput(format!(
            "multi-index sums to {sum}, expected {k}"
        )));
    }
    let ln = ln_gamma(k as f64 + 1.0)
        - ls.iter()
            .map(|&l| ln_gamma(l as f64 + 1.0))
            .sum::<f64>();
    Ok(ln.exp())
}

/// Quick scan deciding whether the series has any chance at the requested
/// precision: estimates the peak layer magnitude in log space.
pub(crate) fn series_feasible(betas: &[f64], beta0: f64, zs: &[f64]) -> bool {
    let z_sum: f64 = zs.iter().map(|z| z.abs()).sum();
    if z_sum == 0.0 {
        return true;
    }
    let beta_min = betas
        .iter()
        .zip(zs)
        .filter(|(_, z)| **z != 0.0)
        .map(|(b, _)| *b)
        .fold(f64::INFINITY, f64::min);
    let ln_z = z_sum.ln();
    let mut k = 1.0f64;
    while k <= 700.0 {
        let ln_layer = k * ln_z - ln_gamma(beta0 + beta_min * k);
        if ln_layer > 62.0 {
            return false;
        }
        k *= 1.6;
    }
    true
}

/// Evaluate the multinomial Mittag-Leffler series with default options.
pub fn mml_eval(params: &MLParams, zs: &[f64], tol: f64) -> Result<MLEvalResult> {
    mml_eval_with(params, zs, tol, &SeriesOptions::default())
}

/// Evaluate the multinomial Mittag-Leffler series.
///
/// Fails with [`Error::SeriesFailed`] when the tail estimate cannot reach
/// `tol` within the layer budget or when intermediate terms grow past what
/// compensated accumulation can cancel. Callers then switch to the
/// Laplace-inversion route.
pub fn mml_eval_with(
    params: &MLParams,
    zs: &[f64],
    tol: f64,
    opts: &SeriesOptions,
) -> Result<MLEvalResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    series_eval(&params.betas, params.beta0, zs, tol, opts)
}

/// Internal entry point that also admits `beta0` outside (0,2); the extended
/// range appears when the recurrence identity shifts the second subscript.
pub(crate) fn series_eval(
    betas: &[f64],
    beta0: f64,
    zs: &[f64],
    tol: f64,
    opts: &SeriesOptions,
) -> Result<MLEvalResult> {
    let m = betas.len();
    if m == 0 || zs.len() != m {
        return Err(Error::InvalidInput(format!(
            "argument count {} does not match exponent count {}",
            zs.len(),
            m
        )));
    }
    if !(beta0 > 0.0) {
        return Err(Error::InvalidInput("beta0 must be positive".into()));
    }
    if zs.iter().all(|&z| z == 0.0) {
        return Ok(MLEvalResult {
            value: 1.0 / gamma(beta0),
            terms_used: 1,
            tail_bound: 0.0,
        });
    }

    // factorial-exact path: all exponents are exactly 1
    let exact_gammas = betas.iter().all(|&b| b == 1.0);
    let seed_gamma = gamma(beta0);

    let mut fact: Vec<Dd> = vec![Dd::ONE];
    let mut pow: Vec<Vec<Dd>> = zs.iter().map(|_| vec![Dd::ONE]).collect();
    let mut gamma_rec: Vec<Dd> = vec![Dd::from_f64(seed_gamma)];

    let mut sum = Dd::ZERO;
    let mut abs_sum = 0.0f64;
    let mut prev_mag = f64::INFINITY;
    let mut terms_used = 0usize;
    let mut ls = vec![0u32; m];

    for k in 0..=opts.max_layers {
        // extend caches to degree k
        if k > 0 {
            let kf = k as f64;
            fact.push(fact[k - 1].mul_f64(kf));
            for (i, &z) in zs.iter().enumerate() {
                let prev = pow[i][k - 1];
                pow[i].push(prev.mul_f64(z));
            }
            gamma_rec.push(gamma_rec[k - 1].mul_f64(beta0 + kf - 1.0));
        }

        let mut layer = Dd::ZERO;
        let mut layer_mag = 0.0f64;
        let mut failed: Option<Error> = None;
        for_each_composition(k as u32, m, &mut ls, &mut |ls: &[u32]| {
            if failed.is_some() {
                return;
            }
            // log-space magnitude guard
            let mut ln_num = ln_gamma(k as f64 + 1.0);
            let mut x = beta0;
            let mut dead = false;
            for (i, &l) in ls.iter().enumerate() {
                if l > 0 {
                    if zs[i] == 0.0 {
                        dead = true;
                        break;
                    }
                    ln_num += l as f64 * zs[i].abs().ln() - ln_gamma(l as f64 + 1.0);
                }
                x += betas[i] * l as f64;
            }
            if dead {
                return;
            }
            let ln_term = ln_num - ln_gamma(x);
            if ln_term > opts.magnitude_cap_ln {
                failed = Some(Error::SeriesFailed(format!(
                    "term magnitude e^{ln_term:.1} exceeds cancellation headroom"
                )));
                return;
            }
            if ln_term < -745.0 {
                return;
            }
            terms_used += 1;
            let mut term = fact[k];
            for &l in ls.iter() {
                if l > 0 {
                    term = term.div(fact[l as usize]);
                }
            }
            for (i, &l) in ls.iter().enumerate() {
                if l > 0 {
                    term = term.mul(pow[i][l as usize]);
                }
            }
            // reciprocal Gamma: exact factorial recursion when possible
            if exact_gammas {
                term = term.div(gamma_rec[k]);
            } else if x <= 170.0 {
                term = term.mul_f64(1.0 / gamma(x));
            } else {
                term = term.mul_f64((-ln_gamma(x)).exp());
            }
            layer = layer.add(term);
            layer_mag += term.abs();
        });
        if let Some(e) = failed {
            return Err(e);
        }
        if terms_used > opts.max_terms {
            return Err(Error::SeriesFailed("term budget exhausted".into()));
        }

        sum = sum.add(layer);
        abs_sum += layer_mag;

        // rounding floor of the accumulated sum
        let term_eps = if exact_gammas {
            4e-31 * (k as f64 + 3.0)
        } else {
            5e-15
        };
        let seed_eps = if exact_gammas && beta0 != 1.0 {
            3e-16
        } else {
            0.0
        };
        let rounding = abs_sum * term_eps + sum.abs() * seed_eps;
        let scale = sum.abs().max(1.0);

        if k >= 2 {
            if layer_mag == 0.0 && prev_mag == 0.0 {
                return finish(sum, terms_used, rounding, tol, scale);
            }
            if layer_mag > 0.0 && layer_mag < prev_mag {
                let rho = (layer_mag / prev_mag).min(0.97);
                let tail = layer_mag * rho / (1.0 - rho);
                if k >= 3 && rho <= 0.8 && tail + rounding <= tol * scale {
                    return finish(sum, terms_used, tail + rounding, tol, scale);
                }
            }
        }
        prev_mag = layer_mag;
    }
    Err(Error::SeriesFailed(format!(
        "tail did not reach {tol:.1e} within {} layers",
        opts.max_layers
    )))
}

fn finish(sum: Dd, terms_used: usize, bound: f64, tol: f64, scale: f64) -> Result<MLEvalResult> {
    if bound > tol * scale {
        return Err(Error::SeriesFailed(format!(
            "accumulated rounding {bound:.2e} exceeds tolerance"
        )));
    }
    Ok(MLEvalResult {
        value: sum.to_f64(),
        terms_used,
        tail_bound: bound,
    })
}

/// Visit all `l` with `l_1 + ... + l_m = k`.
fn for_each_composition(k: u32, m: usize, buf: &mut [u32], f: &mut impl FnMut(&[u32])) {
    fn rec(pos: usize, rem: u32, buf: &mut [u32], f: &mut impl FnMut(&[u32])) {
        if pos == buf.len() - 1 {
            buf[pos] = rem;
            f(buf);
            return;
        }
        for l in 0..=rem {
            buf[pos] = l;
            rec(pos + 1, rem - l, buf, f);
        }
    }
    debug_assert_eq!(buf.len(), m);
    rec(0, k, buf, f);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(betas: &[f64], beta0: f64) -> MLParams {
        MLParams::new(betas, beta0).unwrap()
    }

    #[test]
    fn multinomial_basics() {
        assert!((multinomial_coeff(0, &[0, 0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((multinomial_coeff(3, &[3]).unwrap() - 1.0).abs() < 1e-12);
        assert!((multinomial_coeff(4, &[2, 2]).unwrap() - 6.0).abs() < 1e-9);
        assert!((multinomial_coeff(10, &[3, 3, 4]).unwrap() - 4200.0).abs() < 1e-6);
        assert!(multinomial_coeff(4, &[1, 2]).is_err());
    }

    #[test]
    fn reduces_to_exponential_at_unit_exponents() {
        let p = params(&[1.0], 1.0);
        let r = mml_eval(&p, &[1.0], 1e-12).unwrap();
        assert!((r.value - std::f64::consts::E).abs() < 1e-12);
        // deep cancellation region
        for &z in &[-20.0, -14.5, -8.0, -3.3, -0.1, 2.0, 5.0] {
            let r = mml_eval(&p, &[z], 1e-12).unwrap();
            assert!(
                (r.value - z.exp()).abs() <= 1e-12 * z.exp().max(1.0),
                "z={z}: got {} want {}",
                r.value,
                z.exp()
            );
            assert!(r.tail_bound <= 1e-12 * r.value.abs().max(1.0));
        }
    }

    #[test]
    fn zero_arguments_hit_the_leading_term() {
        let p = params(&[0.5, 0.3], 0.5);
        let r = mml_eval(&p, &[0.0, 0.0], 1e-12).unwrap();
        // 1/Gamma(1/2), frozen
        assert!((r.value - 0.5641895835477562869480795).abs() < 1e-14);
        assert_eq!(r.terms_used, 1);
    }

    #[test]
    fn two_argument_reference_value() {
        // E_{(0.5,0.3),0.5}(-1,-0.5), frozen 60-digit reference
        let want = 0.1037254052980262638572914;
        let p = params(&[0.5, 0.3], 0.5);
        let r = mml_eval(&p, &[-1.0, -0.5], 1e-10).unwrap();
        assert!((r.value - want).abs() < 1e-10, "got {}", r.value);
    }

    #[test]
    fn mixed_zero_and_negative_arguments() {
        // with z2 = 0 the double series collapses onto the single-parameter one
        let p2 = params(&[0.5, 0.3], 1.0);
        let p1 = params(&[0.5], 1.0);
        let full = mml_eval(&p2, &[-2.0, 0.0], 1e-11).unwrap();
        let single = mml_eval(&p1, &[-2.0], 1e-11).unwrap();
        assert!((full.value - single.value).abs() < 1e-11);
    }

    #[test]
    fn large_argument_fails_over_to_the_integral_route() {
        let p = params(&[0.5], 0.5);
        let err = mml_eval(&p, &[-500.0], 1e-9);
        assert!(matches!(err, Err(Error::SeriesFailed(_))));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let p = params(&[0.5, 0.3], 0.5);
        assert!(mml_eval(&p, &[-1.0], 1e-9).is_err());
    }
}
