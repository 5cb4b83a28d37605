use std::fmt;

use super::ExprError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    /// Parameter coordinate (zero-based), printed `x1`, `x2`, …
    X(usize),
    /// Decision coordinate (zero-based), printed `y1`, `y2`, …
    Y(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::Y(i) => write!(f, "y{}", i + 1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Abs,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Func(Func, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(v: Var) -> Self {
        Expr::Var(v)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(_) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Var(_) => Vec::new(),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Func(_, a) => vec![a],
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Min(a, b)
            | Expr::Max(a, b) => vec![a, b],
        }
    }

    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        if let Expr::Var(v) = self {
            out.push(*v);
        }
        for c in self.children() {
            c.collect_vars(out);
        }
    }

    /// Contains `abs`, `min` or `max`.
    pub fn has_kinks(&self) -> bool {
        matches!(
            self,
            Expr::Min(..) | Expr::Max(..) | Expr::Func(Func::Abs, _)
        ) || self.children().iter().any(|c| c.has_kinks())
    }

    /// Copy with every variable renamed by `f`.
    pub fn map_vars(&self, f: &impl Fn(Var) -> Var) -> Expr {
        let b = |e: &Expr| Box::new(e.map_vars(f));
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Var(v) => Expr::Var(f(*v)),
            Expr::Neg(a) => Expr::Neg(b(a)),
            Expr::Add(l, r) => Expr::Add(b(l), b(r)),
            Expr::Sub(l, r) => Expr::Sub(b(l), b(r)),
            Expr::Mul(l, r) => Expr::Mul(b(l), b(r)),
            Expr::Div(l, r) => Expr::Div(b(l), b(r)),
            Expr::Pow(a, k) => Expr::Pow(b(a), *k),
            Expr::Func(g, a) => Expr::Func(*g, b(a)),
            Expr::Min(l, r) => Expr::Min(b(l), b(r)),
            Expr::Max(l, r) => Expr::Max(b(l), b(r)),
        }
    }

    pub fn mentions_x(&self) -> bool {
        self.variables().iter().any(|v| matches!(v, Var::X(_)))
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64, ExprError> {
        let v = match self {
            Expr::Const(c) => *c,
            Expr::Var(Var::X(i)) => *x.get(*i).ok_or(ExprError::UnboundVariable(Var::X(*i)))?,
            Expr::Var(Var::Y(i)) => *y.get(*i).ok_or(ExprError::UnboundVariable(Var::Y(*i)))?,
            Expr::Neg(a) => -a.eval(x, y)?,
            Expr::Add(a, b) => a.eval(x, y)? + b.eval(x, y)?,
            Expr::Sub(a, b) => a.eval(x, y)? - b.eval(x, y)?,
            Expr::Mul(a, b) => a.eval(x, y)? * b.eval(x, y)?,
            Expr::Div(a, b) => {
                let (p, q) = (a.eval(x, y)?, b.eval(x, y)?);
                if q == 0.0 {
                    return Err(ExprError::EvalDomain("division by zero".into()));
                }
                p / q
            }
            Expr::Pow(a, k) => {
                let b = a.eval(x, y)?;
                if b == 0.0 && *k < 0 {
                    return Err(ExprError::EvalDomain("negative power of zero".into()));
                }
                b.powi(*k)
            }
            Expr::Func(f, a) => {
                let t = a.eval(x, y)?;
                match f {
                    Func::Exp => t.exp(),
                    Func::Log => {
                        if t <= 0.0 {
                            return Err(ExprError::EvalDomain(format!("log of {t}")));
                        }
                        t.ln()
                    }
                    Func::Sin => t.sin(),
                    Func::Cos => t.cos(),
                    Func::Abs => t.abs(),
                    Func::Sqrt => {
                        if t < 0.0 {
                            return Err(ExprError::EvalDomain(format!("sqrt of {t}")));
                        }
                        t.sqrt()
                    }
                }
            }
            Expr::Min(a, b) => a.eval(x, y)?.min(b.eval(x, y)?),
            Expr::Max(a, b) => a.eval(x, y)?.max(b.eval(x, y)?),
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::EvalDomain(format!("non-finite value in {self}")))
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let wrap = |f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool| {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        };
        let p = self.precedence();
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, a.precedence() < 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let op = match self {
                    Expr::Add(..) => "+",
                    Expr::Sub(..) => "-",
                    Expr::Mul(..) => "*",
                    _ => "/",
                };
                wrap(f, a, a.precedence() < p)?;
                write!(f, " {op} ")?;
                wrap(f, b, b.precedence() <= p)
            }
            Expr::Pow(a, k) => {
                wrap(f, a, a.precedence() < 5)?;
                write!(f, "^{k}")
            }
            Expr::Func(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
        }
    }
}
