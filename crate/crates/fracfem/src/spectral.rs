//! Exact eigen-expansion solutions on the interval and the unit square.
//!
//! These serve as the truth reference the finite element solutions are
//! measured against: homogeneous evolution through the per-mode propagation
//! factors, and source-driven evolution through the per-mode convolution
//! with the relaxation kernel (closed form for piecewise-constant-in-time
//! sources, graded quadrature otherwise).

use crate::data::{SourceSpec, SpaceData, TimeProfile};
use crate::mml::{duhamel_primitive, ebar_value, homog_factor, homog_factor_alt, FracOrders};
use crate::quad::{adaptive, singular_endpoint, SingularEnd};
use crate::{Error, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Supported domains.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// The unit interval (0, 1).
    Interval,
    /// The unit square (0, 1)^2.
    Square,
}

/// Mode index of a Laplacian eigenpair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModeIndex {
    OneD(usize),
    TwoD(usize, usize),
}

/// One Dirichlet-Laplacian eigenpair; eigenfunctions are L2-orthonormal:
/// `sqrt(2) sin(j pi x)` on the interval, `2 sin(j pi x) sin(k pi y)` on the
/// square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralMode {
    pub index: ModeIndex,
    pub lambda: f64,
}

impl SpectralMode {
    pub fn eval(&self, p: &[f64]) -> f64 {
        match self.index {
            ModeIndex::OneD(j) => std::f64::consts::SQRT_2 * (j as f64 * PI * p[0]).sin(),
            ModeIndex::TwoD(j, k) => {
                2.0 * (j as f64 * PI * p[0]).sin() * (k as f64 * PI * p[1]).sin()
            }
        }
    }
}

/// First `count` eigenpairs sorted by eigenvalue, ties broken by index.
pub fn laplace_eigenpairs(domain: Domain, count: usize) -> Vec<SpectralMode> {
    assert!(count >= 1);
    match domain {
        Domain::Interval => (1..=count)
            .map(|j| SpectralMode {
                index: ModeIndex::OneD(j),
                lambda: (j as f64 * PI).powi(2),
            })
            .collect(),
        Domain::Square => {
            // enumerate a box guaranteed to contain the first `count` modes
            let mut side = (2.0 * count as f64).sqrt().ceil() as usize + 2;
            loop {
                let mut modes: Vec<SpectralMode> = (1..=side)
                    .flat_map(|j| {
                        (1..=side).map(move |k| SpectralMode {
                            index: ModeIndex::TwoD(j, k),
                            lambda: ((j * j + k * k) as f64) * PI * PI,
                        })
                    })
                    .collect();
                modes.sort_by(|a, b| {
                    a.lambda
                        .partial_cmp(&b.lambda)
                        .unwrap()
                        .then_with(|| match (a.index, b.index) {
                            (ModeIndex::TwoD(j1, k1), ModeIndex::TwoD(j2, k2)) => {
                                (j1, k1).cmp(&(j2, k2))
                            }
                            _ => std::cmp::Ordering::Equal,
                        })
                });
                modes.truncate(count);
                // any excluded index has lambda >= ((side+1)^2 + 1) pi^2
                let excluded_min = (((side + 1) * (side + 1) + 1) as f64) * PI * PI;
                if modes.last().unwrap().lambda < excluded_min {
                    return modes;
                }
                side += side / 2 + 1;
            }
        }
    }
}

/// Full tensor set `[1, per_axis]^2` on the square, sorted by eigenvalue.
pub fn tensor_modes(per_axis: usize) -> Vec<SpectralMode> {
    let mut modes: Vec<SpectralMode> = (1..=per_axis)
        .flat_map(|j| {
            (1..=per_axis).map(move |k| SpectralMode {
                index: ModeIndex::TwoD(j, k),
                lambda: ((j * j + k * k) as f64) * PI * PI,
            })
        })
        .collect();
    modes.sort_by(|a, b| {
        a.lambda
            .partial_cmp(&b.lambda)
            .unwrap()
            .then_with(|| match (a.index, b.index) {
                (ModeIndex::TwoD(j1, k1), ModeIndex::TwoD(j2, k2)) => (j1, k1).cmp(&(j2, k2)),
                _ => std::cmp::Ordering::Equal,
            })
    });
    modes
}

/// Truncated eigen-expansion of a function (or distribution) on a fixed mode
/// set, ordered by nondecreasing eigenvalue.
#[derive(Clone, Debug)]
pub struct SpectralField {
    pub domain: Domain,
    pub modes: Arc<Vec<SpectralMode>>,
    pub coeffs: Vec<f64>,
}

impl SpectralField {
    pub fn zero(domain: Domain, modes: Arc<Vec<SpectralMode>>) -> Self {
        let coeffs = vec![0.0; modes.len()];
        SpectralField {
            domain,
            modes,
            coeffs,
        }
    }

    /// Pointwise value; use [`FieldEvaluator`] for bulk evaluation.
    pub fn eval(&self, p: &[f64]) -> f64 {
        self.modes
            .iter()
            .zip(&self.coeffs)
            .map(|(m, c)| c * m.eval(p))
            .sum()
    }

    pub fn evaluator(&self) -> FieldEvaluator {
        match self.domain {
            Domain::Interval => {
                let mut jmax = 0;
                for m in self.modes.iter() {
                    if let ModeIndex::OneD(j) = m.index {
                        jmax = jmax.max(j);
                    }
                }
                let mut c = vec![0.0; jmax + 1];
                for (m, &v) in self.modes.iter().zip(&self.coeffs) {
                    if let ModeIndex::OneD(j) = m.index {
                        c[j] += v;
                    }
                }
                FieldEvaluator::OneD { c }
            }
            Domain::Square => {
                let mut jmax = 0;
                let mut kmax = 0;
                for m in self.modes.iter() {
                    if let ModeIndex::TwoD(j, k) = m.index {
                        jmax = jmax.max(j);
                        kmax = kmax.max(k);
                    }
                }
                let mut c = vec![0.0; (jmax + 1) * (kmax + 1)];
                for (m, &v) in self.modes.iter().zip(&self.coeffs) {
                    if let ModeIndex::TwoD(j, k) = m.index {
                        c[j * (kmax + 1) + k] += v;
                    }
                }
                FieldEvaluator::TwoD { jmax, kmax, c }
            }
        }
    }
}

/// Tensor-accelerated pointwise evaluation of a spectral field and its
/// gradient.
pub enum FieldEvaluator {
    OneD { c: Vec<f64> },
    TwoD { jmax: usize, kmax: usize, c: Vec<f64> },
}

impl FieldEvaluator {
    pub fn value(&self, p: &[f64]) -> f64 {
        match self {
            FieldEvaluator::OneD { c } => {
                let mut s = 0.0;
                for (j, cj) in c.iter().enumerate().skip(1) {
                    if *cj != 0.0 {
                        s += cj * (j as f64 * PI * p[0]).sin();
                    }
                }
                std::f64::consts::SQRT_2 * s
            }
            FieldEvaluator::TwoD { jmax, kmax, c } => {
                let (sx, sy) = sin_tables(*jmax, *kmax, p[0], p[1]);
                let mut s = 0.0;
                for j in 1..=*jmax {
                    let row = &c[j * (kmax + 1)..j * (kmax + 1) + kmax + 1];
                    let mut inner = 0.0;
                    for k in 1..=*kmax {
                        inner += row[k] * sy[k];
                    }
                    s += sx[j] * inner;
                }
                2.0 * s
            }
        }
    }

    pub fn gradient(&self, p: &[f64]) -> Vec<f64> {
        match self {
            FieldEvaluator::OneD { c } => {
                let mut s = 0.0;
                for (j, cj) in c.iter().enumerate().skip(1) {
                    if *cj != 0.0 {
                        let jp = j as f64 * PI;
                        s += cj * jp * (jp * p[0]).cos();
                    }
                }
                vec![std::f64::consts::SQRT_2 * s]
            }
            FieldEvaluator::TwoD { jmax, kmax, c } => {
                let x = p[0];
                let y = p[1];
                let mut sx = vec![0.0; jmax + 1];
                let mut cx = vec![0.0; jmax + 1];
                let mut sy = vec![0.0; kmax + 1];
                let mut cy = vec![0.0; kmax + 1];
                for j in 1..=*jmax {
                    let a = j as f64 * PI * x;
                    sx[j] = a.sin();
                    cx[j] = a.cos();
                }
                for k in 1..=*kmax {
                    let a = k as f64 * PI * y;
                    sy[k] = a.sin();
                    cy[k] = a.cos();
                }
                let mut gx = 0.0;
                let mut gy = 0.0;
                for j in 1..=*jmax {
                    let row = &c[j * (kmax + 1)..j * (kmax + 1) + kmax + 1];
                    let mut inner_s = 0.0;
                    let mut inner_c = 0.0;
                    for k in 1..=*kmax {
                        inner_s += row[k] * sy[k];
                        inner_c += row[k] * k as f64 * PI * cy[k];
                    }
                    gx += j as f64 * PI * cx[j] * inner_s;
                    gy += sx[j] * inner_c;
                }
                vec![2.0 * gx, 2.0 * gy]
            }
        }
    }
}

fn sin_tables(jmax: usize, kmax: usize, x: f64, y: f64) -> (Vec<f64>, Vec<f64>) {
    let mut sx = vec![0.0; jmax + 1];
    for j in 1..=jmax {
        sx[j] = (j as f64 * PI * x).sin();
    }
    let mut sy = vec![0.0; kmax + 1];
    for k in 1..=kmax {
        sy[k] = (k as f64 * PI * y).sin();
    }
    (sx, sy)
}

/// Eigen-expansion coefficients of a datum on the given mode set; closed
/// forms for the catalogued data, adaptive quadrature (1e-12) otherwise.
pub fn fourier_coeffs(data: &SpaceData, modes: &Arc<Vec<SpectralMode>>) -> Result<SpectralField> {
    let domain = data.domain();
    let coeffs = modes
        .iter()
        .map(|m| fourier_coeff(data, m))
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralField {
        domain,
        modes: modes.clone(),
        coeffs,
    })
}

fn fourier_coeff(data: &SpaceData, mode: &SpectralMode) -> Result<f64> {
    let sqrt2 = std::f64::consts::SQRT_2;
    match (data, mode.index) {
        (SpaceData::Bubble, ModeIndex::OneD(j)) => {
            let jp = j as f64 * PI;
            Ok(sqrt2 * 2.0 * (1.0 - (jp).cos()) / jp.powi(3))
        }
        (SpaceData::SinTwoPi, ModeIndex::OneD(j)) => {
            Ok(if j == 2 { 0.5f64.sqrt() } else { 0.0 })
        }
        (SpaceData::Indicator1d { a, b }, ModeIndex::OneD(j)) => {
            let jp = j as f64 * PI;
            Ok(sqrt2 * ((jp * a).cos() - (jp * b).cos()) / jp)
        }
        (SpaceData::Dirac1d { x0 }, ModeIndex::OneD(j)) => Ok(sqrt2 * (j as f64 * PI * x0).sin()),
        (SpaceData::Constant1d(c), ModeIndex::OneD(j)) => {
            let jp = j as f64 * PI;
            Ok(c * sqrt2 * (1.0 - jp.cos()) / jp)
        }
        (SpaceData::CustomSmooth1d { f, .. }, ModeIndex::OneD(j)) => {
            let jp = j as f64 * PI;
            adaptive(&|x: f64| f(x) * sqrt2 * (jp * x).sin(), 0.0, 1.0, 1e-12)
        }
        (SpaceData::Indicator2d { x0, x1, y0, y1 }, ModeIndex::TwoD(j, k)) => {
            let jp = j as f64 * PI;
            let kp = k as f64 * PI;
            Ok(2.0 * ((jp * x0).cos() - (jp * x1).cos()) / jp
                * ((kp * y0).cos() - (kp * y1).cos())
                / kp)
        }
        (SpaceData::BoxBoundaryMeasure { lo, hi }, ModeIndex::TwoD(j, k)) => {
            // four segments of the box boundary; sine factors at the fixed
            // coordinate, antiderivative along the moving one
            let jp = j as f64 * PI;
            let kp = k as f64 * PI;
            let ix = ((jp * lo).cos() - (jp * hi).cos()) / jp;
            let iy = ((kp * lo).cos() - (kp * hi).cos()) / kp;
            Ok(2.0 * (((kp * lo).sin() + (kp * hi).sin()) * ix
                + ((jp * lo).sin() + (jp * hi).sin()) * iy))
        }
        _ => Err(Error::Unsupported(format!(
            "no eigen-coefficient rule for {data:?} on {:?}",
            mode.index
        ))),
    }
}

/// Fractional-order Sobolev norm of a truncated expansion:
/// `(sum lambda_j^s c_j^2)^{1/2}`.
pub fn hs_norm(field: &SpectralField, s: f64) -> f64 {
    field
        .modes
        .iter()
        .zip(&field.coeffs)
        .map(|(m, c)| m.lambda.powf(s) * c * c)
        .sum::<f64>()
        .sqrt()
}

/// Norm plus the fraction contributed by the upper half of the mode set;
/// a tail fraction that does not shrink under refinement signals data
/// outside the space.
pub fn hs_norm_with_tail(field: &SpectralField, s: f64) -> (f64, f64) {
    let total: f64 = field
        .modes
        .iter()
        .zip(&field.coeffs)
        .map(|(m, c)| m.lambda.powf(s) * c * c)
        .sum();
    let half = field.modes.len() / 2;
    let upper: f64 = field
        .modes
        .iter()
        .zip(&field.coeffs)
        .skip(half)
        .map(|(m, c)| m.lambda.powf(s) * c * c)
        .sum();
    (total.sqrt(), if total > 0.0 { upper / total } else { 0.0 })
}

/// Homogeneous evolution: multiply each coefficient by the per-mode
/// propagation factor. Identity at `t = 0`.
pub fn evolve_homogeneous(
    field: &SpectralField,
    orders: &FracOrders,
    t: f64,
    tol: f64,
) -> Result<SpectralField> {
    if t == 0.0 {
        return Ok(field.clone());
    }
    #[cfg(debug_assertions)]
    {
        // both algebraic forms of the factor must agree (subscript
        // recurrence); spot-check a few modes per call
        for m in field.modes.iter().take(3) {
            let a = homog_factor(orders, m.lambda, t, 1e-10)?;
            let b = homog_factor_alt(orders, m.lambda, t, 1e-10)?;
            debug_assert!(
                (a - b).abs() < 1e-8,
                "factor forms disagree at lambda={}: {a} vs {b}",
                m.lambda
            );
        }
    }
    let coeffs = field
        .modes
        .par_iter()
        .zip(field.coeffs.par_iter())
        .map(|(m, c)| {
            if *c == 0.0 {
                Ok(0.0)
            } else {
                Ok(c * homog_factor(orders, m.lambda, t, tol)?)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SpectralField {
        domain: field.domain,
        modes: field.modes.clone(),
        coeffs,
    })
}

/// Per-mode convolution of a separable source with the relaxation kernel.
/// Piecewise-constant time profiles integrate in closed form through the
/// kernel primitive; general profiles use quadrature graded toward `s = t`
/// by the substitution `u = (t - s)^alpha`.
pub fn evolve_inhomogeneous(
    source: &SourceSpec,
    orders: &FracOrders,
    modes: &Arc<Vec<SpectralMode>>,
    t: f64,
    tol: f64,
) -> Result<SpectralField> {
    if source.terms.is_empty() || t == 0.0 {
        let domain = source
            .terms
            .first()
            .map(|term| term.space.domain())
            .unwrap_or(Domain::Interval);
        return Ok(SpectralField::zero(domain, modes.clone()));
    }
    let mut total: Option<SpectralField> = None;
    for term in &source.terms {
        let space = fourier_coeffs(&term.space, modes)?;
        let pieces = term.time.pieces_until(t);
        let coeffs = space
            .modes
            .par_iter()
            .zip(space.coeffs.par_iter())
            .map(|(m, c)| {
                if *c == 0.0 {
                    return Ok(0.0);
                }
                let conv = match &pieces {
                    Some(pieces) => {
                        let mut acc = 0.0;
                        for &(a, b, value) in pieces {
                            if value == 0.0 {
                                continue;
                            }
                            let hi = duhamel_primitive(orders, m.lambda, t - a, tol)?;
                            let lo = duhamel_primitive(orders, m.lambda, t - b.min(t), tol)?;
                            acc += value * (hi - lo);
                        }
                        acc
                    }
                    None => graded_convolution(&term.time, orders, m.lambda, t, tol)?,
                };
                Ok(c * conv)
            })
            .collect::<Result<Vec<_>>>()?;
        total = Some(match total {
            None => SpectralField {
                domain: space.domain,
                modes: modes.clone(),
                coeffs,
            },
            Some(mut acc) => {
                for (a, b) in acc.coeffs.iter_mut().zip(&coeffs) {
                    *a += b;
                }
                acc
            }
        });
    }
    Ok(total.unwrap())
}

/// `int_0^t T(s) ebar(t - s) ds` through the substitution `u = (t-s)^alpha`,
/// which absorbs the kernel's endpoint singularity into a bounded integrand.
fn graded_convolution(
    profile: &TimeProfile,
    orders: &FracOrders,
    lambda: f64,
    t: f64,
    tol: f64,
) -> Result<f64> {
    let alpha = orders.alpha();
    let u_max = t.powf(alpha);
    let f = |u: f64| -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        let x = u.powf(1.0 / alpha); // t - s
        let s = (t - x).clamp(0.0, t);
        let kernel = ebar_value(orders, lambda, x, 0.1 * tol).unwrap_or(f64::NAN);
        profile.eval(s) * kernel * x.powf(1.0 - alpha) / alpha
    };
    // the integrand is bounded but not smooth at either end; refine both
    let mid = 0.5 * u_max;
    let left = singular_endpoint(&f, 0.0, mid, SingularEnd::Left, 0.5 * tol)?;
    let right = singular_endpoint(&f, mid, u_max, SingularEnd::Right, 0.5 * tol)?;
    let v = left + right;
    if !v.is_finite() {
        return Err(Error::QuadratureBudget(
            "kernel evaluation failed inside convolution".into(),
        ));
    }
    Ok(v)
}
