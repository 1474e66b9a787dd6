//! Distances between measurement distributions and state fidelities.

use std::collections::BTreeMap;

use serde::{Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::qsim::Statevector;

/// Probability mass function over basis-state indices.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Distribution(pub BTreeMap<usize, f64>);

impl Distribution {
    pub fn from_state(state: &Statevector) -> Self {
        Self(state.probabilities())
    }

    pub fn total(&self) -> f64 {
        self.0.values().sum()
    }

    pub fn get(&self, x: usize) -> f64 {
        self.0.get(&x).copied().unwrap_or(0.0)
    }

    fn validate(&self) -> Result<()> {
        if self.0.values().any(|&p| !(p >= 0.0 && p.is_finite())) {
            return invalid("distribution has a negative or non-finite entry");
        }
        if (self.total() - 1.0).abs() > 1e-9 {
            return invalid(format!("distribution sums to {}", self.total()));
        }
        Ok(())
    }
}

/// Empirical distribution from shot counts.
pub fn distribution_from_counts(counts: &BTreeMap<usize, u64>, shots: u64) -> Result<Distribution> {
    let sum: u64 = counts.values().sum();
    if shots == 0 || sum != shots {
        return Err(Error::Validation(format!("counts sum to {sum}, expected {shots} shots")));
    }
    Ok(Distribution(counts.iter().map(|(&x, &c)| (x, c as f64 / shots as f64)).collect()))
}

/// −ln BC, or `Infinite` when the supports are disjoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Distance {
    Finite(f64),
    Infinite,
}

impl Distance {
    pub fn value(self) -> f64 {
        match self {
            Distance::Finite(d) => d,
            Distance::Infinite => f64::INFINITY,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }
}

impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Distance::Finite(d) => s.serialize_f64(*d),
            Distance::Infinite => s.serialize_str("inf"),
        }
    }
}

/// BC(p, q) = Σ_x √(p(x) q(x)).
pub fn bhattacharyya_coefficient(p: &Distribution, q: &Distribution) -> Result<f64> {
    p.validate()?;
    q.validate()?;
    Ok(p.0.iter().map(|(x, &px)| (px * q.get(*x)).sqrt()).sum::<f64>().min(1.0))
}

pub fn bhattacharyya_distance(p: &Distribution, q: &Distribution) -> Result<Distance> {
    let bc = bhattacharyya_coefficient(p, q)?;
    Ok(if bc <= 0.0 { Distance::Infinite } else { Distance::Finite(-bc.ln()) })
}

/// |⟨a|b⟩|².
pub fn fidelity(a: &Statevector, b: &Statevector) -> Result<f64> {
    Ok(a.inner_product(b)?.norm_sqr())
}
