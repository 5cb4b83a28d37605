use std::fmt;

use serde::Serialize;

use super::ast::{Expr, Var};
use super::dual::grad;
use super::parser::parse_expr_at;
use super::ExprError;
use crate::geometry::{gamma_dim, gamma_polyhedron, GammaFactor, Polyhedron, Row};

/// `min_y f(x, y)` subject to `P(x, y) ∈ Γ` and `y` in a search box.
#[derive(Clone, Debug, PartialEq)]
pub struct ParametricProblem {
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub objective: Expr,
    pub constraints: Vec<Expr>,
    pub gamma: Vec<GammaFactor>,
    pub y_box: Vec<(f64, f64)>,
    gamma_set: Polyhedron,
}

/// Smoothness flags: `true` when the expression has no `abs`/`min`/`max`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Smoothness {
    pub objective: bool,
    pub constraints: Vec<bool>,
}

/// Jacobian blocks of the constraint map, row-major with one row per constraint.
#[derive(Clone, Debug, PartialEq)]
pub struct Jacobian {
    pub dx: Vec<Vec<f64>>,
    pub dy: Vec<Vec<f64>>,
}

impl ParametricProblem {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        m: usize,
        objective: Expr,
        constraints: Vec<Expr>,
        gamma: Vec<GammaFactor>,
        y_box: Vec<(f64, f64)>,
    ) -> Result<Self, ExprError> {
        let p = gamma_dim(&gamma);
        if p != constraints.len() {
            return Err(ExprError::Arity(format!(
                "constraint set has dimension {p} but {} constraint rows were given",
                constraints.len()
            )));
        }
        if y_box.len() != m {
            return Err(ExprError::Arity(format!(
                "expected {m} box lines, got {}",
                y_box.len()
            )));
        }
        if let Some((i, _)) = y_box.iter().enumerate().find(|(_, (lo, hi))| {
            lo.partial_cmp(hi) != Some(std::cmp::Ordering::Less)
                || !lo.is_finite()
                || !hi.is_finite()
        }) {
            return Err(ExprError::Arity(format!(
                "box for y{} has no volume",
                i + 1
            )));
        }
        for e in std::iter::once(&objective).chain(&constraints) {
            for v in e.variables() {
                let ok = match v {
                    Var::X(i) => i < n,
                    Var::Y(i) => i < m,
                };
                if !ok {
                    return Err(ExprError::UnknownVariable(v));
                }
            }
        }
        let gamma_set = gamma_polyhedron(&gamma);
        Ok(ParametricProblem {
            name: name.into(),
            n,
            m,
            objective,
            constraints,
            gamma,
            y_box,
            gamma_set,
        })
    }

    pub fn p(&self) -> usize {
        self.constraints.len()
    }

    pub fn gamma_set(&self) -> &Polyhedron {
        &self.gamma_set
    }

    pub fn smoothness(&self) -> Smoothness {
        Smoothness {
            objective: !self.objective.has_kinks(),
            constraints: self.constraints.iter().map(|c| !c.has_kinks()).collect(),
        }
    }

    pub fn is_smooth(&self) -> bool {
        !self.objective.has_kinks() && self.constraints.iter().all(|c| !c.has_kinks())
    }

    pub fn constraints_mention_x(&self) -> bool {
        self.constraints.iter().any(Expr::mentions_x)
    }

    pub fn objective_value(&self, x: &[f64], y: &[f64]) -> Result<f64, ExprError> {
        self.objective.eval(x, y)
    }

    pub fn constraint_values(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.constraints.iter().map(|c| c.eval(x, y)).collect()
    }

    /// Largest violation of `P(x, y) ∈ Γ` (zero when feasible); `+∞` on evaluation errors.
    pub fn violation(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.constraint_values(x, y) {
            Ok(v) => self.gamma_set.violation(&v),
            Err(_) => f64::INFINITY,
        }
    }

    pub fn is_feasible(&self, x: &[f64], y: &[f64], tol: f64) -> bool {
        match self.constraint_values(x, y) {
            Ok(v) => self.gamma_set.violation(&v) <= tol * (1.0 + crate::linalg::norm(&v)),
            Err(_) => false,
        }
    }

    pub fn x_vars(&self) -> Vec<Var> {
        (0..self.n).map(Var::X).collect()
    }

    pub fn y_vars(&self) -> Vec<Var> {
        (0..self.m).map(Var::Y).collect()
    }

    /// `(∇_x f, ∇_y f)` at `(x, y)`.
    pub fn objective_gradient(
        &self,
        x: &[f64],
        y: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>), ExprError> {
        Ok((
            grad(&self.objective, x, y, &self.x_vars())?,
            grad(&self.objective, x, y, &self.y_vars())?,
        ))
    }

    pub fn jacobian(&self, x: &[f64], y: &[f64]) -> Result<Jacobian, ExprError> {
        let (xv, yv) = (self.x_vars(), self.y_vars());
        let mut dx = Vec::with_capacity(self.p());
        let mut dy = Vec::with_capacity(self.p());
        for c in &self.constraints {
            dx.push(grad(c, x, y, &xv)?);
            dy.push(grad(c, x, y, &yv)?);
        }
        Ok(Jacobian { dx, dy })
    }

    pub fn box_lo(&self) -> Vec<f64> {
        self.y_box.iter().map(|b| b.0).collect()
    }

    pub fn box_hi(&self) -> Vec<f64> {
        self.y_box.iter().map(|b| b.1).collect()
    }
}

fn fmt_row(r: &Row, eq: bool) -> String {
    let mut parts: Vec<String> = r.normal.iter().map(|v| v.to_string()).collect();
    parts.push(r.offset.to_string());
    format!("{}[{}]", if eq { "=" } else { "" }, parts.join(", "))
}

fn fmt_poly(p: &Polyhedron) -> String {
    let rows: Vec<String> = p
        .ineqs
        .iter()
        .map(|r| fmt_row(r, false))
        .chain(p.eqs.iter().map(|r| fmt_row(r, true)))
        .collect();
    format!("Poly{{{}}}", rows.join("; "))
}

impl fmt::Display for ParametricProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "problem {}", self.name)?;
        writeln!(f, "params n={}", self.n)?;
        writeln!(f, "vars m={}", self.m)?;
        for (i, (lo, hi)) in self.y_box.iter().enumerate() {
            writeln!(f, "box y{} in [{}, {}]", i + 1, lo, hi)?;
        }
        writeln!(f, "min {}", self.objective)?;
        let mut row = 0;
        for g in &self.gamma {
            let kind = match g {
                GammaFactor::NonPositive(_) => "NonPositive".to_string(),
                GammaFactor::Zero(_) => "Zero".to_string(),
                GammaFactor::Poly(p) => fmt_poly(p),
            };
            for _ in 0..g.dim() {
                writeln!(f, "st {} in {}", self.constraints[row], kind)?;
                row += 1;
            }
        }
        Ok(())
    }
}

fn parse_err(line: usize, col: usize, msg: impl Into<String>) -> ExprError {
    ExprError::Parse {
        line,
        col,
        msg: msg.into(),
    }
}

fn parse_number(s: &str, line: usize, col: usize) -> Result<f64, ExprError> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| parse_err(line, col, format!("bad number `{}`", s.trim())))
}

fn parse_bracket(s: &str, line: usize, col: usize) -> Result<Vec<f64>, ExprError> {
    let s = s.trim();
    let inner = s
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .ok_or_else(|| parse_err(line, col, format!("expected `[...]`, got `{s}`")))?;
    inner
        .split(',')
        .map(|t| parse_number(t, line, col))
        .collect()
}

fn parse_poly(spec: &str, line: usize, col: usize) -> Result<Polyhedron, ExprError> {
    let inner = spec
        .strip_prefix("Poly{")
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| parse_err(line, col, "expected `Poly{...}`"))?;
    let mut dim: Option<usize> = None;
    let mut p = Polyhedron::universe(0);
    for item in inner.split(';').map(str::trim).filter(|t| !t.is_empty()) {
        let (eq, body) = match item.strip_prefix('=') {
            Some(rest) => (true, rest),
            None => (false, item),
        };
        let mut v = parse_bracket(body, line, col)?;
        if v.len() < 2 {
            return Err(parse_err(
                line,
                col,
                "a Poly row needs a normal and an offset",
            ));
        }
        let b = v.pop().unwrap();
        match dim {
            None => dim = Some(v.len()),
            Some(d) if d != v.len() => {
                return Err(parse_err(line, col, "Poly rows have different lengths"))
            }
            _ => {}
        }
        if eq {
            p.eqs.push(Row::new(v, b));
        } else {
            p.ineqs.push(Row::new(v, b));
        }
    }
    p.dim = dim.ok_or_else(|| parse_err(line, col, "empty Poly"))?;
    Ok(p)
}

fn parse_assign(s: &str, key: &str, line: usize, col: usize) -> Result<usize, ExprError> {
    s.trim()
        .strip_prefix(key)
        .and_then(|t| t.trim().strip_prefix('='))
        .and_then(|t| t.trim().parse().ok())
        .ok_or_else(|| parse_err(line, col, format!("expected `{key}=<int>`")))
}

/// Parses the problem-file format.
pub fn parse_problem(text: &str) -> Result<ParametricProblem, ExprError> {
    let mut name = None;
    let mut n = None;
    let mut m = None;
    let mut boxes: Vec<(usize, f64, f64)> = Vec::new();
    let mut objective = None;
    let mut rows: Vec<(Expr, String, usize)> = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = li + 1;
        let content = raw.split('#').next().unwrap_or("");
        let trimmed = content.trim_start();
        let indent = content.len() - trimmed.len();
        let trimmed = trimmed.trim_end();
        if trimmed.is_empty() {
            continue;
        }
        let (kw, rest) = trimmed
            .split_once(char::is_whitespace)
            .unwrap_or((trimmed, ""));
        let rest_col = indent + kw.len() + 2 + (rest.len() - rest.trim_start().len());
        let rest = rest.trim();
        match kw {
            "problem" => name = Some(rest.to_string()),
            "params" => n = Some(parse_assign(rest, "n", line, rest_col)?),
            "vars" => m = Some(parse_assign(rest, "m", line, rest_col)?),
            "box" => {
                let (var, range) = rest
                    .split_once(" in ")
                    .ok_or_else(|| parse_err(line, rest_col, "expected `y<i> in [lo, hi]`"))?;
                let idx = match parse_expr_at(var, line, rest_col)? {
                    Expr::Var(Var::Y(i)) => i,
                    _ => return Err(parse_err(line, rest_col, "box must name a y variable")),
                };
                let b = parse_bracket(range, line, rest_col)?;
                if b.len() != 2 {
                    return Err(parse_err(line, rest_col, "box needs `[lo, hi]`"));
                }
                boxes.push((idx, b[0], b[1]));
            }
            "min" => objective = Some(parse_expr_at(rest, line, rest_col)?),
            "st" => {
                let cut = rest
                    .rfind(" in ")
                    .ok_or_else(|| parse_err(line, rest_col, "expected `<expr> in <set>`"))?;
                let e = parse_expr_at(&rest[..cut], line, rest_col)?;
                let set = rest[cut + 4..].trim().to_string();
                rows.push((e, set, line));
            }
            other => {
                return Err(parse_err(
                    line,
                    indent + 1,
                    format!("unknown keyword `{other}`"),
                ))
            }
        }
    }
    let n = n.ok_or_else(|| parse_err(1, 1, "missing `params n=`"))?;
    let m = m.ok_or_else(|| parse_err(1, 1, "missing `vars m=`"))?;
    let objective = objective.ok_or_else(|| parse_err(1, 1, "missing `min`"))?;
    let mut y_box = vec![None; m];
    for (i, lo, hi) in boxes {
        if i >= m {
            return Err(ExprError::UnknownVariable(Var::Y(i)));
        }
        y_box[i] = Some((lo, hi));
    }
    let y_box = y_box
        .into_iter()
        .enumerate()
        .map(|(i, b)| b.ok_or_else(|| ExprError::Arity(format!("missing box for y{}", i + 1))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut gamma: Vec<GammaFactor> = Vec::new();
    let mut constraints = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let (_, set, line) = &rows[i];
        let run = rows[i..].iter().take_while(|r| &r.1 == set).count();
        match set.as_str() {
            "NonPositive" => gamma.push(GammaFactor::NonPositive(run)),
            "Zero" => gamma.push(GammaFactor::Zero(run)),
            s if s.starts_with("Poly") => {
                let poly = parse_poly(s, *line, 1)?;
                let k = poly.dim;
                if run < k {
                    return Err(ExprError::Arity(format!(
                        "line {line}: Poly factor of dimension {k} needs {k} consecutive rows, found {run}"
                    )));
                }
                // a run may hold several copies of the same factor
                let copies = run / k;
                let used = copies * k;
                for _ in 0..copies {
                    gamma.push(GammaFactor::Poly(poly.clone()));
                }
                for r in &rows[i..i + used] {
                    constraints.push(r.0.clone());
                }
                i += used;
                if run % k != 0 {
                    return Err(ExprError::Arity(format!(
                        "line {line}: Poly factor of dimension {k} does not divide a run of {run} rows"
                    )));
                }
                continue;
            }
            other => {
                return Err(parse_err(*line, 1, format!("unknown set `{other}`")));
            }
        }
        for r in &rows[i..i + run] {
            constraints.push(r.0.clone());
        }
        i += run;
    }
    ParametricProblem::new(
        name.unwrap_or_else(|| "unnamed".into()),
        n,
        m,
        objective,
        constraints,
        gamma,
        y_box,
    )
}
