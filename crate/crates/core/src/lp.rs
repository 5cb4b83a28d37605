//! Dense two-phase simplex for the small linear programs that arise in
//! polyhedral containment, redundancy and emptiness tests.
//!
//! All variables are free. Bland's rule is used throughout, so the method
//! terminates on degenerate problems; sizes here are at most a few hundred
//! rows, which keeps the dense tableau cheap.

const PIVOT_EPS: f64 = 1e-10;
const FEAS_EPS: f64 = 1e-9;
const MAX_ITERS: usize = 50_000;

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

/// `maximize <objective, x>` subject to `a x <= b` and `e x = f`, with `x` free.
#[derive(Clone, Debug, Default)]
pub struct LinearProgram {
    pub nvars: usize,
    pub objective: Vec<f64>,
    pub le: Vec<(Vec<f64>, f64)>,
    pub eq: Vec<(Vec<f64>, f64)>,
}

impl LinearProgram {
    pub fn new(nvars: usize) -> Self {
        LinearProgram {
            nvars,
            objective: vec![0.0; nvars],
            le: Vec::new(),
            eq: Vec::new(),
        }
    }

    pub fn maximize(mut self, c: &[f64]) -> Self {
        self.objective = c.to_vec();
        self
    }

    pub fn le(mut self, a: Vec<f64>, b: f64) -> Self {
        self.le.push((a, b));
        self
    }

    pub fn eq(mut self, a: Vec<f64>, b: f64) -> Self {
        self.eq.push((a, b));
        self
    }

    /// Adds `lo <= x_j <= hi` for every variable.
    pub fn boxed(mut self, lo: f64, hi: f64) -> Self {
        for j in 0..self.nvars {
            let mut a = vec![0.0; self.nvars];
            a[j] = 1.0;
            self.le.push((a.clone(), hi));
            a[j] = -1.0;
            self.le.push((a, -lo));
        }
        self
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    ncols: usize,
    n_struct: usize,
    first_art: usize,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.nvars;
        let n_struct = 2 * n;
        let mut specs: Vec<(Vec<f64>, f64, i8)> = Vec::new();
        for (a, b) in &lp.le {
            let s = row_scale(a, *b);
            specs.push((a.iter().map(|v| v / s).collect(), b / s, 1));
        }
        for (a, b) in &lp.eq {
            let s = row_scale(a, *b);
            specs.push((a.iter().map(|v| v / s).collect(), b / s, 0));
        }
        let n_slack = specs.iter().filter(|s| s.2 == 1).count();
        let n_art = specs.iter().filter(|s| s.2 == 0 || s.1 < 0.0).count();
        let first_slack = n_struct;
        let first_art = first_slack + n_slack;
        let ncols = first_art + n_art;
        let mut rows = Vec::with_capacity(specs.len());
        let mut basis = Vec::with_capacity(specs.len());
        let (mut slack_i, mut art_i) = (0, 0);
        for (a, b, kind) in specs {
            let mut row = vec![0.0; ncols + 1];
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            for j in 0..n {
                row[2 * j] = sign * a[j];
                row[2 * j + 1] = -sign * a[j];
            }
            row[ncols] = sign * b;
            if kind == 1 {
                row[first_slack + slack_i] = sign;
                if sign > 0.0 {
                    basis.push(first_slack + slack_i);
                } else {
                    row[first_art + art_i] = 1.0;
                    basis.push(first_art + art_i);
                    art_i += 1;
                }
                slack_i += 1;
            } else {
                row[first_art + art_i] = 1.0;
                basis.push(first_art + art_i);
                art_i += 1;
            }
            rows.push(row);
        }
        Tableau {
            rows,
            basis,
            ncols,
            n_struct,
            first_art,
        }
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [f64]) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let prow = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i != r {
                let f = row[c];
                if f != 0.0 {
                    for (v, pv) in row.iter_mut().zip(&prow) {
                        *v -= f * pv;
                    }
                    row[c] = 0.0;
                }
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (v, pv) in obj.iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for `maximize cost . x`; entering columns have negative entries.
    fn objective_row(&self, cost: &[f64]) -> Vec<f64> {
        let mut obj: Vec<f64> = (0..=self.ncols)
            .map(|j| if j < self.ncols { -cost[j] } else { 0.0 })
            .collect();
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            let cb = cost[b];
            if cb != 0.0 {
                for (o, v) in obj.iter_mut().zip(row) {
                    *o += cb * v;
                }
            }
        }
        obj
    }

    /// Runs simplex iterations; `allowed` bounds the entering column index.
    fn iterate(&mut self, obj: &mut [f64], allowed: usize) -> bool {
        for _ in 0..MAX_ITERS {
            let entering = (0..allowed).find(|&j| obj[j] < -PIVOT_EPS);
            let Some(c) = entering else {
                return true;
            };
            let mut leave: Option<(usize, f64)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c] > PIVOT_EPS {
                    let ratio = row[self.ncols] / row[c];
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - 1e-12
                                || (ratio <= lr + 1e-12 && self.basis[i] < self.basis[li])
                            {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return false,
                Some((r, _)) => self.pivot(r, c, obj),
            }
        }
        // Bland's rule cannot cycle; reaching here means severe ill-conditioning.
        true
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        if self.first_art < self.ncols {
            let mut cost = vec![0.0; self.ncols];
            for c in cost.iter_mut().skip(self.first_art) {
                *c = -1.0;
            }
            let mut obj = self.objective_row(&cost);
            self.iterate(&mut obj, self.ncols);
            let infeas: f64 = self
                .rows
                .iter()
                .zip(&self.basis)
                .filter(|(_, &b)| b >= self.first_art)
                .map(|(r, _)| r[self.ncols])
                .sum();
            if infeas > FEAS_EPS {
                return LpOutcome::Infeasible;
            }
            // Drive remaining (zero-level) artificials out of the basis.
            let mut i = 0;
            while i < self.rows.len() {
                if self.basis[i] >= self.first_art {
                    let col = (0..self.first_art).find(|&j| self.rows[i][j].abs() > 1e-8);
                    match col {
                        Some(c) => {
                            let mut dummy = vec![0.0; self.ncols + 1];
                            self.pivot(i, c, &mut dummy);
                            i += 1;
                        }
                        None => {
                            self.rows.remove(i);
                            self.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }
        let mut cost = vec![0.0; self.ncols];
        for j in 0..lp.nvars {
            cost[2 * j] = lp.objective[j];
            cost[2 * j + 1] = -lp.objective[j];
        }
        let mut obj = self.objective_row(&cost);
        if !self.iterate(&mut obj, self.first_art) {
            return LpOutcome::Unbounded;
        }
        let mut z = vec![0.0; self.n_struct];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.n_struct {
                z[b] = row[self.ncols];
            }
        }
        let x: Vec<f64> = (0..lp.nvars).map(|j| z[2 * j] - z[2 * j + 1]).collect();
        let value = crate::linalg::dot(&lp.objective, &x);
        LpOutcome::Optimal { x, value }
    }
}

fn row_scale(a: &[f64], b: f64) -> f64 {
    let m = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m > 0.0 {
        m
    } else if b.abs() > 0.0 {
        b.abs()
    } else {
        1.0
    }
}
