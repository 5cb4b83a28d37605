//! Forward-mode differentiation with dual numbers.

use super::ast::{Expr, Func, Var};
use super::ExprError;

/// Distance to an `abs`/`min`/`max` switching point treated as on the kink.
pub const KINK_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual {
    pub v: f64,
    pub d: f64,
}

impl Dual {
    fn new(v: f64, d: f64) -> Self {
        Dual { v, d }
    }
}

fn kink(e: &Expr) -> ExprError {
    ExprError::NonSmoothPoint(e.to_string())
}

/// Value and directional derivative of `e` along the tangent `(dx, dy)`.
pub fn eval_dual(
    e: &Expr,
    x: &[f64],
    y: &[f64],
    dx: &[f64],
    dy: &[f64],
) -> Result<Dual, ExprError> {
    let ev = |a: &Expr| eval_dual(a, x, y, dx, dy);
    let out = match e {
        Expr::Const(c) => Dual::new(*c, 0.0),
        Expr::Var(Var::X(i)) => Dual::new(
            *x.get(*i).ok_or(ExprError::UnboundVariable(Var::X(*i)))?,
            dx.get(*i).copied().unwrap_or(0.0),
        ),
        Expr::Var(Var::Y(i)) => Dual::new(
            *y.get(*i).ok_or(ExprError::UnboundVariable(Var::Y(*i)))?,
            dy.get(*i).copied().unwrap_or(0.0),
        ),
        Expr::Neg(a) => {
            let a = ev(a)?;
            Dual::new(-a.v, -a.d)
        }
        Expr::Add(a, b) => {
            let (a, b) = (ev(a)?, ev(b)?);
            Dual::new(a.v + b.v, a.d + b.d)
        }
        Expr::Sub(a, b) => {
            let (a, b) = (ev(a)?, ev(b)?);
            Dual::new(a.v - b.v, a.d - b.d)
        }
        Expr::Mul(a, b) => {
            let (a, b) = (ev(a)?, ev(b)?);
            Dual::new(a.v * b.v, a.d * b.v + a.v * b.d)
        }
        Expr::Div(a, b) => {
            let (a, b) = (ev(a)?, ev(b)?);
            if b.v == 0.0 {
                return Err(ExprError::EvalDomain("division by zero".into()));
            }
            Dual::new(a.v / b.v, (a.d * b.v - a.v * b.d) / (b.v * b.v))
        }
        Expr::Pow(a, k) => {
            let a = ev(a)?;
            if *k == 0 {
                Dual::new(1.0, 0.0)
            } else {
                if a.v == 0.0 && *k < 0 {
                    return Err(ExprError::EvalDomain("negative power of zero".into()));
                }
                Dual::new(a.v.powi(*k), *k as f64 * a.v.powi(k - 1) * a.d)
            }
        }
        Expr::Func(f, inner) => {
            let a = ev(inner)?;
            match f {
                Func::Exp => {
                    let v = a.v.exp();
                    Dual::new(v, v * a.d)
                }
                Func::Log => {
                    if a.v <= 0.0 {
                        return Err(ExprError::EvalDomain(format!("log of {}", a.v)));
                    }
                    Dual::new(a.v.ln(), a.d / a.v)
                }
                Func::Sin => Dual::new(a.v.sin(), a.v.cos() * a.d),
                Func::Cos => Dual::new(a.v.cos(), -a.v.sin() * a.d),
                Func::Abs => {
                    if a.v.abs() <= KINK_TOL {
                        // one-sided slopes are +d and -d
                        if a.d != 0.0 {
                            return Err(kink(e));
                        }
                        Dual::new(a.v.abs(), 0.0)
                    } else {
                        Dual::new(a.v.abs(), a.v.signum() * a.d)
                    }
                }
                Func::Sqrt => {
                    if a.v < 0.0 {
                        return Err(ExprError::EvalDomain(format!("sqrt of {}", a.v)));
                    }
                    if a.v == 0.0 {
                        if a.d != 0.0 {
                            return Err(kink(e));
                        }
                        Dual::new(0.0, 0.0)
                    } else {
                        let s = a.v.sqrt();
                        Dual::new(s, a.d / (2.0 * s))
                    }
                }
            }
        }
        Expr::Min(a, b) | Expr::Max(a, b) => {
            let (a, b) = (ev(a)?, ev(b)?);
            let is_min = matches!(e, Expr::Min(..));
            if (a.v - b.v).abs() <= KINK_TOL {
                if a.d != b.d {
                    return Err(kink(e));
                }
                Dual::new(if is_min { a.v.min(b.v) } else { a.v.max(b.v) }, a.d)
            } else if (a.v < b.v) == is_min {
                a
            } else {
                b
            }
        }
    };
    if out.v.is_finite() && out.d.is_finite() {
        Ok(out)
    } else {
        Err(ExprError::EvalDomain(format!("non-finite value in {e}")))
    }
}

/// Partial derivatives of `e` with respect to each variable in `wrt`.
pub fn grad(e: &Expr, x: &[f64], y: &[f64], wrt: &[Var]) -> Result<Vec<f64>, ExprError> {
    wrt.iter()
        .map(|v| {
            let mut dx = vec![0.0; x.len()];
            let mut dy = vec![0.0; y.len()];
            match v {
                Var::X(i) => dx[*i] = 1.0,
                Var::Y(i) => dy[*i] = 1.0,
            }
            eval_dual(e, x, y, &dx, &dy).map(|d| d.d)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse_expr;

    #[test]
    fn bilinear_partial() {
        let e = parse_expr("x1*y1").unwrap();
        let g = grad(&e, &[0.0], &[-1.0], &[Var::X(0)]).unwrap();
        assert_eq!(g, vec![-1.0]);
    }

    #[test]
    fn cube_at_zero() {
        let e = parse_expr("y1^3").unwrap();
        assert_eq!(grad(&e, &[], &[0.0], &[Var::Y(0)]).unwrap(), vec![0.0]);
    }

    #[test]
    fn abs_kink() {
        let e = parse_expr("abs(y1)").unwrap();
        assert!(matches!(
            grad(&e, &[], &[0.0], &[Var::Y(0)]),
            Err(ExprError::NonSmoothPoint(_))
        ));
        assert_eq!(grad(&e, &[], &[-2.0], &[Var::Y(0)]).unwrap(), vec![-1.0]);
    }

    #[test]
    fn max_with_matching_branches_is_smooth() {
        let e = parse_expr("max(y1, y1)").unwrap();
        assert_eq!(grad(&e, &[], &[0.0], &[Var::Y(0)]).unwrap(), vec![1.0]);
    }
}
