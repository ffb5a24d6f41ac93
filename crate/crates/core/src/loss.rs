//! Per-observation losses with first and second derivatives.
//!
//! A loss is a function rho(y, a) of the response y and the linear predictor
//! a, convex in a. Squared error serves the linear model and the logistic
//! deviance serves binary regression; both expose exact first and second
//! derivatives for the coordinate-descent and debiasing stages.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Squared,
    Logistic,
}

/// Loss value together with its first and second derivative in `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossTriple {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Numerically stable sigmoid.
#[inline]
pub(crate) fn sigmoid(a: f64) -> f64 {
    if a >= 0.0 {
        1.0 / (1.0 + (-a).exp())
    } else {
        let e = a.exp();
        e / (1.0 + e)
    }
}

/// Evaluates the loss and its derivatives at `(y, a)`.
///
/// Squared: rho = (y - a)^2 / 2, so d1 = a - y and d2 = 1.
/// Logistic with y in {0, 1}: rho = log(1 + e^a) - y*a, d1 = sigmoid(a) - y,
/// d2 = sigmoid(a) * (1 - sigmoid(a)). The log term is computed as
/// a + log(1 + e^-a) for a > 0 to avoid overflow.
pub fn evaluate_loss(kind: LossKind, y: f64, a: f64) -> Result<LossTriple> {
    match kind {
        LossKind::Squared => {
            let r = a - y;
            Ok(LossTriple {
                value: 0.5 * r * r,
                d1: r,
                d2: 1.0,
            })
        }
        LossKind::Logistic => {
            if y != 0.0 && y != 1.0 {
                return Err(Error::invalid(format!(
                    "logistic loss requires responses in {{0, 1}}, got {y}"
                )));
            }
            let log1pe = if a > 0.0 {
                a + (-a).exp().ln_1p()
            } else {
                a.exp().ln_1p()
            };
            // Forming the smaller exponential first keeps s*(1-s) accurate
            // in both tails.
            let e = (-a.abs()).exp();
            let d2 = e / ((1.0 + e) * (1.0 + e));
            Ok(LossTriple {
                value: log1pe - y * a,
                d1: sigmoid(a) - y,
                d2,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(kind: LossKind, y: f64, a: f64) -> LossTriple {
        evaluate_loss(kind, y, a).unwrap()
    }

    #[test]
    fn squared_examples() {
        let t = eval(LossKind::Squared, 3.0, 3.0);
        assert_eq!((t.value, t.d1, t.d2), (0.0, 0.0, 1.0));
        let t = eval(LossKind::Squared, 0.0, 2.0);
        assert_eq!((t.value, t.d1, t.d2), (2.0, 2.0, 1.0));
    }

    #[test]
    fn squared_is_symmetric_in_residual() {
        for (y, a) in [(1.5, -0.3), (2.0, 7.0), (-4.0, -4.0)] {
            let ya = eval(LossKind::Squared, y, a).value;
            let ay = eval(LossKind::Squared, a, y).value;
            assert_eq!(ya, ay);
        }
    }

    #[test]
    fn logistic_at_zero() {
        let t = eval(LossKind::Logistic, 0.0, 0.0);
        assert!((t.value - (2.0f64).ln()).abs() < 1e-15);
        assert!((t.d1 - 0.5).abs() < 1e-15);
        assert!((t.d2 - 0.25).abs() < 1e-15);
    }

    #[test]
    fn logistic_rejects_bad_response() {
        assert!(evaluate_loss(LossKind::Logistic, 0.5, 0.0).is_err());
        assert!(evaluate_loss(LossKind::Logistic, -1.0, 0.0).is_err());
    }

    #[test]
    fn logistic_stable_for_large_predictor() {
        for a in [40.0, 400.0, -40.0, -400.0] {
            for y in [0.0, 1.0] {
                let t = eval(LossKind::Logistic, y, a);
                assert!(t.value.is_finite(), "value at a={a}");
                assert!(t.d1.is_finite());
                assert!(t.d2 >= 0.0 && t.d2 <= 0.25);
            }
        }
        // log(1 + e^a) - a -> 0 for large a
        let t = eval(LossKind::Logistic, 1.0, 40.0);
        assert!(t.value.abs() < 1e-15);
    }

    #[test]
    fn second_derivative_nonnegative_everywhere() {
        for kind in [LossKind::Squared, LossKind::Logistic] {
            let y_grid: &[f64] = if kind == LossKind::Squared {
                &[-3.0, 0.0, 2.5]
            } else {
                &[0.0, 1.0]
            };
            for &y in y_grid {
                let mut a = -10.0;
                while a <= 10.0 {
                    let t = eval(kind, y, a);
                    assert!(t.d2 >= 0.0);
                    if kind == LossKind::Logistic {
                        assert!(t.d2 > 0.0 && t.d2 <= 0.25);
                    }
                    a += 0.25;
                }
            }
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for kind in [LossKind::Squared, LossKind::Logistic] {
            let y_grid: &[f64] = if kind == LossKind::Squared {
                &[-1.0, 0.0, 3.0]
            } else {
                &[0.0, 1.0]
            };
            for &y in y_grid {
                let mut a = -10.0;
                while a <= 10.0 {
                    let up = eval(kind, y, a + h);
                    let down = eval(kind, y, a - h);
                    let mid = eval(kind, y, a);
                    let fd1 = (up.value - down.value) / (2.0 * h);
                    let fd2 = (up.d1 - down.d1) / (2.0 * h);
                    assert!(
                        (fd1 - mid.d1).abs() < 1e-6,
                        "d1 mismatch at ({y}, {a}): {} vs {fd1}",
                        mid.d1
                    );
                    assert!(
                        (fd2 - mid.d2).abs() < 1e-6,
                        "d2 mismatch at ({y}, {a}): {} vs {fd2}",
                        mid.d2
                    );
                    a += 0.5;
                }
            }
        }
    }
}
