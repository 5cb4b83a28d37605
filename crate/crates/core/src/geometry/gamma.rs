use serde::{Deserialize, Serialize};

use super::polyhedron::Polyhedron;

/// One factor of the constraint set `Γ = Γ_1 × … × Γ_r`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GammaFactor {
    NonPositive(usize),
    Zero(usize),
    Poly(Polyhedron),
}

impl GammaFactor {
    pub fn dim(&self) -> usize {
        match self {
            GammaFactor::NonPositive(k) | GammaFactor::Zero(k) => *k,
            GammaFactor::Poly(p) => p.dim,
        }
    }

    pub fn to_polyhedron(&self) -> Polyhedron {
        match self {
            GammaFactor::NonPositive(k) => Polyhedron::nonpositive(*k),
            GammaFactor::Zero(k) => Polyhedron::origin(*k),
            GammaFactor::Poly(p) => p.clone(),
        }
    }
}

pub fn gamma_dim(factors: &[GammaFactor]) -> usize {
    factors.iter().map(GammaFactor::dim).sum()
}

/// The product set as a single polyhedron.
pub fn gamma_polyhedron(factors: &[GammaFactor]) -> Polyhedron {
    factors.iter().fold(Polyhedron::universe(0), |acc, f| {
        acc.product(&f.to_polyhedron())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_matches_orthant_times_origin() {
        let g = gamma_polyhedron(&[GammaFactor::NonPositive(2), GammaFactor::Zero(1)]);
        assert_eq!(g.dim, 3);
        assert!(g.contains_point(&[-1.0, 0.0, 0.0]));
        assert!(!g.contains_point(&[-1.0, 0.0, 0.1]));
        assert!(!g.contains_point(&[0.5, 0.0, 0.0]));
        assert_eq!(
            gamma_dim(&[GammaFactor::NonPositive(2), GammaFactor::Zero(1)]),
            3
        );
    }
}
