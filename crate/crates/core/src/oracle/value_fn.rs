use std::collections::HashMap;
use std::sync::Mutex;

use crate::expr::ParametricProblem;
use crate::solver::{solve_value, SolverConfig, SolverError, MAX_DECISION_DIM};

/// Extended-real function of the parameter; `+∞` off the domain.
pub trait ValueFunction: Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> f64;
}

/// `V(x)` computed by the inner solver, memoized per point.
pub struct ProblemValue<'a> {
    prob: &'a ParametricProblem,
    cfg: SolverConfig,
    cache: Mutex<HashMap<Vec<u64>, f64>>,
}

impl<'a> ProblemValue<'a> {
    pub fn new(prob: &'a ParametricProblem, cfg: SolverConfig) -> Result<Self, SolverError> {
        if prob.m > MAX_DECISION_DIM {
            return Err(SolverError::TooManyVariables(prob.m));
        }
        Ok(ProblemValue {
            prob,
            cfg,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn problem(&self) -> &ParametricProblem {
        self.prob
    }
}

impl ValueFunction for ProblemValue<'_> {
    fn dim(&self) -> usize {
        self.prob.n
    }

    fn value(&self, x: &[f64]) -> f64 {
        let key: Vec<u64> = x.iter().map(|v| v.to_bits()).collect();
        if let Some(v) = self.cache.lock().expect("cache lock").get(&key) {
            return *v;
        }
        let v = solve_value(self.prob, x, &self.cfg).map_or(f64::INFINITY, |r| r.value);
        self.cache.lock().expect("cache lock").insert(key, v);
        v
    }
}

/// Closed-form value function, for testing the oracle without the solver.
pub struct AnalyticValue<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64 + Sync> AnalyticValue<F> {
    pub fn new(dim: usize, f: F) -> Self {
        AnalyticValue { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64 + Sync> ValueFunction for AnalyticValue<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}
