//! Catalog of initial-data / forcing cases driven by the harness and CLI.

use crate::mml::FracOrders;
use crate::spectral::Domain;
use crate::{gamma, Error, Result};
use std::fmt;
use std::sync::Arc;

/// Spatial part of initial data or a source term.
#[derive(Clone)]
pub enum SpaceData {
    /// `x (1 - x)` on the interval.
    Bubble,
    /// `sin(2 pi x)` on the interval.
    SinTwoPi,
    /// Indicator of `(a, b]` on the interval.
    Indicator1d { a: f64, b: f64 },
    /// Point mass at `x0`.
    Dirac1d { x0: f64 },
    /// Indicator of `(x0, x1) x (y0, y1)` on the square.
    Indicator2d { x0: f64, x1: f64, y0: f64, y1: f64 },
    /// Line measure on the boundary of `[lo, hi]^2`.
    BoxBoundaryMeasure { lo: f64, hi: f64 },
    /// Constant on the interval.
    Constant1d(f64),
    /// Smooth user function on the interval, with derivative.
    CustomSmooth1d {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        df: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for SpaceData {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceData::Bubble => write!(f, "Bubble"),
            SpaceData::SinTwoPi => write!(f, "SinTwoPi"),
            SpaceData::Indicator1d { a, b } => write!(f, "Indicator1d({a},{b}]"),
            SpaceData::Dirac1d { x0 } => write!(f, "Dirac1d({x0})"),
            SpaceData::Indicator2d { x0, x1, y0, y1 } => {
                write!(f, "Indicator2d(({x0},{x1})x({y0},{y1}))")
            }
            SpaceData::BoxBoundaryMeasure { lo, hi } => write!(f, "BoxBoundary([{lo},{hi}]^2)"),
            SpaceData::Constant1d(c) => write!(f, "Constant1d({c})"),
            SpaceData::CustomSmooth1d { .. } => write!(f, "CustomSmooth1d"),
        }
    }
}

impl SpaceData {
    /// Distributional data admits only the duality pairing, not an L2 one.
    pub fn is_distributional(&self) -> bool {
        matches!(
            self,
            SpaceData::Dirac1d { .. } | SpaceData::BoxBoundaryMeasure { .. }
        )
    }

    pub fn domain(&self) -> Domain {
        match self {
            SpaceData::Indicator2d { .. } | SpaceData::BoxBoundaryMeasure { .. } => Domain::Square,
            _ => Domain::Interval,
        }
    }

    /// Pointwise evaluation for function-type data on the interval.
    pub fn eval1d(&self, x: f64) -> Result<f64> {
        Ok(match self {
            SpaceData::Bubble => x * (1.0 - x),
            SpaceData::SinTwoPi => (2.0 * std::f64::consts::PI * x).sin(),
            SpaceData::Indicator1d { a, b } => {
                if x > *a && x <= *b {
                    1.0
                } else {
                    0.0
                }
            }
            SpaceData::Constant1d(c) => *c,
            SpaceData::CustomSmooth1d { f, .. } => f(x),
            _ => {
                return Err(Error::Unsupported(format!(
                    "{self:?} has no pointwise values"
                )))
            }
        })
    }
}

/// Time dependence of a source term. Step profiles carry explicit boundary
/// inclusivity so loads sampled exactly at a switch time take the intended
/// value; comparisons snap within 1e-10.
#[derive(Clone)]
pub enum TimeProfile {
    Constant(f64),
    Step { pieces: Vec<StepPiece> },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPiece {
    pub start: f64,
    pub start_inclusive: bool,
    pub value: f64,
}

impl fmt::Debug for TimeProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TimeProfile::Constant(c) => write!(f, "Constant({c})"),
            TimeProfile::Step { pieces } => write!(f, "Step({pieces:?})"),
            TimeProfile::Custom(_) => write!(f, "Custom"),
        }
    }
}

const SWITCH_EPS: f64 = 1e-10;

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Constant(c) => *c,
            TimeProfile::Step { pieces } => {
                let mut current = 0.0;
                for p in pieces {
                    let active = if p.start_inclusive {
                        t >= p.start - SWITCH_EPS
                    } else {
                        t > p.start + SWITCH_EPS
                    };
                    if active {
                        current = p.value;
                    }
                }
                current
            }
            TimeProfile::Custom(f) => f(t),
        }
    }

    /// Constant pieces `(a, b, value)` covering `[0, t_end]`, when the
    /// profile is piecewise constant.
    pub fn pieces_until(&self, t_end: f64) -> Option<Vec<(f64, f64, f64)>> {
        match self {
            TimeProfile::Constant(c) => Some(vec![(0.0, t_end, *c)]),
            TimeProfile::Step { pieces } => {
                let mut out = Vec::new();
                for (i, p) in pieces.iter().enumerate() {
                    let a = p.start.max(0.0);
                    let b = pieces.get(i + 1).map_or(t_end, |n| n.start).min(t_end);
                    if b > a {
                        out.push((a, b, p.value));
                    }
                }
                Some(out)
            }
            TimeProfile::Custom(_) => None,
        }
    }
}

/// One separable source contribution `T(t) g(x)`.
#[derive(Clone, Debug)]
pub struct SourceTerm {
    pub space: SpaceData,
    pub time: TimeProfile,
}

/// A source as a sum of separable terms.
#[derive(Clone, Debug, Default)]
pub struct SourceSpec {
    pub terms: Vec<SourceTerm>,
}

/// Reference strategy for measuring errors.
#[derive(Clone)]
pub enum ReferenceKind {
    /// Eigen-expansion solution of the continuous problem.
    Spectral,
    /// Closed-form exact solution `u(x, t)` on the interval.
    Manufactured(Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ReferenceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReferenceKind::Spectral => write!(f, "Spectral"),
            ReferenceKind::Manufactured(_) => write!(f, "Manufactured"),
        }
    }
}

/// A named problem instance: initial datum and/or source with its declared
/// regularity index and the reference used to measure errors against.
#[derive(Clone, Debug)]
pub struct DataCase {
    pub name: String,
    pub domain: Domain,
    pub initial: Option<SpaceData>,
    pub source: Option<SourceSpec>,
    /// Regularity index `q` of the data; drives the projection choice for
    /// the discrete initial value and the theoretical rates.
    pub regularity_q: f64,
    pub reference: ReferenceKind,
    /// L2 norm of the initial datum used to normalize reported errors
    /// (1 for distributional or source-driven cases).
    pub normalization: f64,
}

impl DataCase {
    /// Theoretical spatial rate in L2: `min(q, 0) + 2`.
    pub fn theory_rate_l2(&self) -> f64 {
        self.regularity_q.min(0.0) + 2.0
    }

    /// Theoretical spatial rate in the energy norm: one less than L2.
    pub fn theory_rate_h1(&self) -> f64 {
        self.theory_rate_l2() - 1.0
    }

    /// Initial-error growth exponent toward `t = 0`:
    /// `-alpha (1 - max(q/2, 0))`.
    pub fn blowup_exponent(&self, alpha: f64) -> f64 {
        -alpha * (1.0 - (self.regularity_q / 2.0).max(0.0))
    }
}

fn one_then_two_after(t_switch: f64) -> TimeProfile {
    TimeProfile::Step {
        pieces: vec![
            StepPiece {
                start: 0.0,
                start_inclusive: true,
                value: 1.0,
            },
            StepPiece {
                start: t_switch,
                start_inclusive: true,
                value: 2.0,
            },
        ],
    }
}

fn pulse(on: f64, off: f64) -> TimeProfile {
    TimeProfile::Step {
        pieces: vec![
            StepPiece {
                start: 0.0,
                start_inclusive: true,
                value: 1.0,
            },
            StepPiece {
                start: on,
                start_inclusive: true,
                value: 2.0,
            },
            StepPiece {
                start: off,
                start_inclusive: false,
                value: 1.0,
            },
        ],
    }
}

/// The manufactured smooth-solution case: `u = (1 + t^2) x (1 - x)` with the
/// matching source for the given operator.
pub fn smooth_manufactured(orders: &FracOrders) -> DataCase {
    let mut coeffs: Vec<(f64, f64)> = vec![(orders.alpha(), 1.0)];
    coeffs.extend(
        orders
            .lower_orders()
            .iter()
            .zip(orders.weights())
            .map(|(&a, &b)| (a, b)),
    );
    // P(d/dt)(1 + t^2) = sum_i b_i 2 t^{2-a_i} / Gamma(3-a_i)
    let time_poly = move |t: f64| -> f64 {
        coeffs
            .iter()
            .map(|&(a, b)| 2.0 * b * t.powf(2.0 - a) / gamma(3.0 - a))
            .sum()
    };
    let source = SourceSpec {
        terms: vec![
            SourceTerm {
                space: SpaceData::Bubble,
                time: TimeProfile::Custom(Arc::new(time_poly)),
            },
            SourceTerm {
                space: SpaceData::Constant1d(2.0),
                time: TimeProfile::Custom(Arc::new(|t: f64| 1.0 + t * t)),
            },
        ],
    };
    DataCase {
        name: "smooth".into(),
        domain: Domain::Interval,
        initial: Some(SpaceData::Bubble),
        source: Some(source),
        regularity_q: 2.0,
        reference: ReferenceKind::Manufactured(Arc::new(|x: f64, t: f64| {
            (1.0 + t * t) * x * (1.0 - x)
        })),
        // || x(1-x) ||_{L2} = 1/sqrt(30)
        normalization: 1.0 / 30.0f64.sqrt(),
    }
}

/// Catalogued cases by name. The manufactured case depends on the operator.
pub fn case_by_name(name: &str, orders: &FracOrders) -> Result<DataCase> {
    let spectral_case = |name: &str,
                         domain: Domain,
                         initial: Option<SpaceData>,
                         source: Option<SourceSpec>,
                         q: f64,
                         normalization: f64| DataCase {
        name: name.into(),
        domain,
        initial,
        source,
        regularity_q: q,
        reference: ReferenceKind::Spectral,
        normalization,
    };
    let half = 0.5f64.sqrt();
    Ok(match name {
        "smooth" => smooth_manufactured(orders),
        "2a" => spectral_case(
            "2a",
            Domain::Interval,
            Some(SpaceData::SinTwoPi),
            None,
            2.0,
            half,
        ),
        "2b" => spectral_case(
            "2b",
            Domain::Interval,
            Some(SpaceData::Indicator1d { a: 0.0, b: 0.5 }),
            None,
            0.49,
            half,
        ),
        "2c" => spectral_case(
            "2c",
            Domain::Interval,
            Some(SpaceData::Dirac1d { x0: 0.5 }),
            None,
            -0.51,
            1.0,
        ),
        "3a" => spectral_case(
            "3a",
            Domain::Interval,
            None,
            Some(SourceSpec {
                terms: vec![SourceTerm {
                    space: SpaceData::Indicator1d { a: 0.0, b: 0.5 },
                    time: one_then_two_after(0.5),
                }],
            }),
            0.49,
            1.0,
        ),
        "3b" => spectral_case(
            "3b",
            Domain::Interval,
            None,
            Some(SourceSpec {
                terms: vec![SourceTerm {
                    space: SpaceData::Dirac1d { x0: 0.5 },
                    time: one_then_two_after(0.5),
                }],
            }),
            -0.51,
            1.0,
        ),
        "4a" => spectral_case(
            "4a",
            Domain::Square,
            Some(SpaceData::Indicator2d {
                x0: 0.0,
                x1: 0.5,
                y0: 0.0,
                y1: 1.0,
            }),
            None,
            0.49,
            half,
        ),
        "4b" => spectral_case(
            "4b",
            Domain::Square,
            Some(SpaceData::BoxBoundaryMeasure { lo: 0.25, hi: 0.75 }),
            None,
            -0.51,
            1.0,
        ),
        "4c" => spectral_case(
            "4c",
            Domain::Square,
            None,
            Some(SourceSpec {
                terms: vec![SourceTerm {
                    space: SpaceData::Indicator2d {
                        x0: 0.0,
                        x1: 0.5,
                        y0: 0.0,
                        y1: 1.0,
                    },
                    time: pulse(0.05, 0.1),
                }],
            }),
            0.49,
            1.0,
        ),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown data case '{other}' (known: smooth, 2a, 2b, 2c, 3a, 3b, 4a, 4b, 4c)"
            )))
        }
    })
}

/// All catalogued cases.
pub fn catalog(orders: &FracOrders) -> Vec<DataCase> {
    ["smooth", "2a", "2b", "2c", "3a", "3b", "4a", "4b", "4c"]
        .iter()
        .map(|n| case_by_name(n, orders).expect("catalogued"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_is_complete() {
        let orders = FracOrders::two_term(0.5, 0.2, 1.0, 1.0).unwrap();
        let cases = catalog(&orders);
        assert_eq!(cases.len(), 9);
        let names: Vec<_> = cases.iter().map(|c| c.name.clone()).collect();
        assert_eq!(
            names,
            vec!["smooth", "2a", "2b", "2c", "3a", "3b", "4a", "4b", "4c"]
        );
        assert!(case_by_name("nope", &orders).is_err());
    }

    #[test]
    fn switch_profile_takes_the_closed_interval_value_at_boundaries() {
        let p = pulse(0.05, 0.1);
        assert_eq!(p.eval(0.0), 1.0);
        assert_eq!(p.eval(0.049), 1.0);
        assert_eq!(p.eval(0.05), 2.0);
        assert_eq!(p.eval(0.1 - 1e-15), 2.0);
        assert_eq!(p.eval(0.1), 2.0);
        assert_eq!(p.eval(0.1 + 1e-15), 2.0); // snapped: still the switch time
        assert_eq!(p.eval(0.11), 1.0);

        let s = one_then_two_after(0.5);
        assert_eq!(s.eval(0.499), 1.0);
        assert_eq!(s.eval(0.5), 2.0);
        assert_eq!(s.eval(1.0), 2.0);
    }

    #[test]
    fn piecewise_decomposition_covers_the_window() {
        let p = pulse(0.05, 0.1);
        let pieces = p.pieces_until(1.0).unwrap();
        assert_eq!(pieces.len(), 3);
        assert_eq!(pieces[0], (0.0, 0.05, 1.0));
        assert_eq!(pieces[1], (0.05, 0.1, 2.0));
        assert_eq!(pieces[2], (0.1, 1.0, 1.0));
        // truncation inside a piece
        let pieces = p.pieces_until(0.07).unwrap();
        assert_eq!(pieces.last().unwrap(), &(0.05, 0.07, 2.0));
    }

    #[test]
    fn manufactured_source_matches_the_operator_identity() {
        // at x fixed, f(x,t) = P(d/dt)(1+t^2) x(1-x) + 2 (1+t^2)
        let orders = FracOrders::two_term(0.5, 0.2, 1.0, 1.0).unwrap();
        let case = smooth_manufactured(&orders);
        let src = case.source.as_ref().unwrap();
        let x = 0.3;
        let t = 0.8;
        let got: f64 = src
            .terms
            .iter()
            .map(|term| term.time.eval(t) * term.space.eval1d(x).unwrap())
            .sum();
        let poly = 2.0 * t.powf(1.5) / gamma(2.5) + 2.0 * t.powf(1.8) / gamma(2.8);
        let want = poly * x * (1.0 - x) + 2.0 * (1.0 + t * t);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn theory_rates_follow_the_regularity_index() {
        let orders = FracOrders::two_term(0.5, 0.2, 1.0, 1.0).unwrap();
        let c2b = case_by_name("2b", &orders).unwrap();
        assert!((c2b.theory_rate_l2() - 2.0).abs() < 1e-12);
        let c2c = case_by_name("2c", &orders).unwrap();
        assert!((c2c.theory_rate_l2() - 1.49).abs() < 1e-12);
        assert!((c2c.theory_rate_h1() - 0.49).abs() < 1e-12);
        // indicator initial data grows like t^{-3 alpha/4} toward zero
        assert!((c2b.blowup_exponent(0.5) + 0.37750).abs() < 1e-2);
    }
}
