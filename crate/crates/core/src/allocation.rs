//! Resource allocations over interference patterns.
//!
//! An allocation assigns each pattern a spectrum fraction `pi[i]` and each
//! (test point, station, pattern) triple a share `alpha[(k, b, i)]` of that
//! fraction. Shares are stored sparsely; optimal vertex solutions have at
//! most a handful of nonzero entries regardless of problem size.

use crate::error::{Error, Result};
use crate::rates::RateTensor;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Allocation {
    /// Spectrum fraction per pattern; sums to one.
    pub pi: Vec<f64>,
    /// Nonzero shares keyed by (k, b, i).
    pub alpha: BTreeMap<(usize, usize, usize), f64>,
}

/// Serialized form with string keys ("k,b,i") so it survives JSON.
#[derive(Serialize, Deserialize)]
struct AllocationRepr {
    pi: Vec<f64>,
    alpha: BTreeMap<String, f64>,
}

impl Serialize for Allocation {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = AllocationRepr {
            pi: self.pi.clone(),
            alpha: self
                .alpha
                .iter()
                .map(|(&(k, b, i), &v)| (format!("{k},{b},{i}"), v))
                .collect(),
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Allocation {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = AllocationRepr::deserialize(d)?;
        let mut alpha = BTreeMap::new();
        for (key, v) in repr.alpha {
            let parts: Vec<&str> = key.split(',').collect();
            if parts.len() != 3 {
                return Err(serde::de::Error::custom(format!("bad share key {key:?}")));
            }
            let idx: Vec<usize> = parts
                .iter()
                .map(|p| p.parse().map_err(|_| serde::de::Error::custom(format!("bad share key {key:?}"))))
                .collect::<std::result::Result<_, _>>()?;
            alpha.insert((idx[0], idx[1], idx[2]), v);
        }
        Ok(Allocation { pi: repr.pi, alpha })
    }
}

impl Allocation {
    pub fn zero(i_count: usize) -> Allocation {
        Allocation { pi: vec![0.0; i_count], alpha: BTreeMap::new() }
    }

    pub fn i_count(&self) -> usize {
        self.pi.len()
    }

    pub fn share(&self, k: usize, b: usize, i: usize) -> f64 {
        self.alpha.get(&(k, b, i)).copied().unwrap_or(0.0)
    }

    pub fn set_share(&mut self, k: usize, b: usize, i: usize, v: f64) {
        if v != 0.0 {
            self.alpha.insert((k, b, i), v);
        } else {
            self.alpha.remove(&(k, b, i));
        }
    }

    /// Long-run load of station b: total share summed over points and patterns.
    pub fn load(&self, b: usize) -> f64 {
        self.alpha.iter().filter(|(&(_, bb, _), _)| bb == b).map(|(_, v)| v).sum()
    }

    pub fn loads(&self, b_count: usize) -> Vec<f64> {
        let mut rho = vec![0.0; b_count];
        for (&(_, b, _), &v) in &self.alpha {
            rho[b] += v;
        }
        rho
    }

    /// Throughput delivered to each test point under the given rates.
    pub fn achieved_rates(&self, rates: &RateTensor) -> Vec<f64> {
        let mut out = vec![0.0; rates.k_count()];
        for (&(k, b, i), &v) in &self.alpha {
            out[k] += v * rates.rate(k, b, i);
        }
        out
    }

    /// Weighted load cost: sum_b w_b * rho_b.
    pub fn cost(&self, weights: &[f64]) -> f64 {
        self.alpha.iter().map(|(&(_, b, _), &v)| weights[b] * v).sum()
    }

    /// Number of patterns carrying spectrum above the threshold.
    pub fn active_pattern_count(&self, threshold: f64) -> usize {
        self.pi.iter().filter(|&&p| p > threshold).count()
    }

    /// In-place convex combination: self = (1 - t) * self + t * other.
    pub fn blend(&mut self, other: &Allocation, t: f64) {
        for (p, q) in self.pi.iter_mut().zip(&other.pi) {
            *p = (1.0 - t) * *p + t * q;
        }
        for v in self.alpha.values_mut() {
            *v *= 1.0 - t;
        }
        for (&key, &v) in &other.alpha {
            *self.alpha.entry(key).or_insert(0.0) += t * v;
        }
        self.alpha.retain(|_, v| *v != 0.0);
    }

    /// Verifies membership in the feasible set: nonnegativity, fractions
    /// summing to one, and per-(station, pattern) shares within the fraction.
    pub fn check_feasible(&self, b_count: usize, tol: f64) -> Result<()> {
        if let Some(p) = self.pi.iter().find(|p| !p.is_finite() || **p < -tol) {
            return Err(Error::invariant("pi", format!("fraction {p} out of range")));
        }
        let total: f64 = self.pi.iter().sum();
        if (total - 1.0).abs() > tol {
            return Err(Error::invariant("pi", format!("fractions sum to {total}")));
        }
        let mut used: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for (&(k, b, i), &v) in &self.alpha {
            if !v.is_finite() || v < -tol {
                return Err(Error::invariant("alpha", format!("share ({k},{b},{i}) = {v}")));
            }
            if b >= b_count || i >= self.pi.len() {
                return Err(Error::invariant("alpha", format!("share ({k},{b},{i}) out of bounds")));
            }
            *used.entry((b, i)).or_insert(0.0) += v;
        }
        for (&(b, i), &u) in &used {
            if u > self.pi[i] + tol {
                return Err(Error::invariant(
                    "alpha",
                    format!("station {b} uses {u} of pattern {i} but fraction is {}", self.pi[i]),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Allocation {
        let mut a = Allocation::zero(3);
        a.pi = vec![0.5, 0.3, 0.2];
        a.set_share(0, 0, 0, 0.4);
        a.set_share(1, 1, 1, 0.3);
        a.set_share(0, 1, 2, 0.1);
        a
    }

    #[test]
    fn loads_and_cost() {
        let a = sample();
        assert_eq!(a.loads(2), vec![0.4, 0.4]);
        assert!((a.cost(&[1.0, 2.0]) - 1.2).abs() < 1e-15);
        assert!((a.load(1) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn achieved_rates_sum_links() {
        let rates = RateTensor::from_raw(
            2,
            2,
            3,
            vec![
                // k = 0: b0 over i, then b1 over i
                10.0, 0.0, 5.0, 0.0, 8.0, 3.0,
                // k = 1
                6.0, 0.0, 2.0, 0.0, 12.0, 7.0,
            ],
        )
        .unwrap();
        let a = sample();
        let got = a.achieved_rates(&rates);
        assert!((got[0] - (0.4 * 10.0 + 0.1 * 3.0)).abs() < 1e-12);
        assert!((got[1] - 0.3 * 12.0).abs() < 1e-12);
    }

    #[test]
    fn feasibility_checks() {
        let a = sample();
        a.check_feasible(2, 1e-9).unwrap();

        let mut over = a.clone();
        over.set_share(1, 0, 0, 0.2); // station 0 now uses 0.6 > pi[0] = 0.5
        assert!(over.check_feasible(2, 1e-9).is_err());

        let mut bad_sum = a.clone();
        bad_sum.pi[0] = 0.6;
        assert!(bad_sum.check_feasible(2, 1e-9).is_err());

        let mut neg = a;
        neg.set_share(0, 0, 1, -0.01);
        assert!(neg.check_feasible(2, 1e-9).is_err());
    }

    #[test]
    fn blend_is_convex_combination() {
        let a = sample();
        let mut b = Allocation::zero(3);
        b.pi = vec![0.0, 0.0, 1.0];
        b.set_share(0, 0, 2, 0.9);
        b.set_share(0, 0, 0, 0.0);

        let mut mix = a.clone();
        mix.blend(&b, 0.25);
        assert!((mix.pi[0] - 0.375).abs() < 1e-15);
        assert!((mix.pi[2] - 0.4).abs() < 1e-15);
        assert!((mix.share(0, 0, 0) - 0.3).abs() < 1e-15);
        assert!((mix.share(0, 0, 2) - 0.225).abs() < 1e-15);
        mix.check_feasible(2, 1e-9).unwrap();
    }

    #[test]
    fn json_roundtrip() {
        let a = sample();
        let text = serde_json::to_string(&a).unwrap();
        let back: Allocation = serde_json::from_str(&text).unwrap();
        assert_eq!(a, back);
        assert!(text.contains("\"0,0,0\""));
    }

    #[test]
    fn active_pattern_count_thresholds() {
        let a = sample();
        assert_eq!(a.active_pattern_count(1e-6), 3);
        assert_eq!(a.active_pattern_count(0.25), 2);
    }
}
