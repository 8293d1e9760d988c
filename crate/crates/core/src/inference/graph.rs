//! Boolean factor graphs with unary and implication factors, and a Gibbs sampler.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Soft implication `antecedent ⇒ consequent`: adds `weight` to the energy of every
/// assignment that satisfies it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub antecedent: usize,
    pub consequent: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FactorGraph {
    /// Energy contributed by each variable when true: the sum of its unary factor weights.
    pub unary: Vec<f64>,
    pub couplings: Vec<Coupling>,
}

impl FactorGraph {
    pub fn new(unary: Vec<f64>) -> Self {
        FactorGraph { unary, couplings: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.unary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.unary.is_empty()
    }

    pub fn add_variable(&mut self, unary: f64) -> usize {
        self.unary.push(unary);
        self.unary.len() - 1
    }

    pub fn imply(&mut self, antecedent: usize, consequent: usize, weight: f64) {
        self.couplings.push(Coupling { antecedent, consequent, weight });
    }

    pub fn energy(&self, assignment: &[bool]) -> f64 {
        let unary: f64 = self.unary.iter().zip(assignment).filter(|(_, &a)| a).map(|(w, _)| w).sum();
        let coupled: f64 = self
            .couplings
            .iter()
            .filter(|c| !assignment[c.antecedent] || assignment[c.consequent])
            .map(|c| c.weight)
            .sum();
        unary + coupled
    }

    fn check(&self) -> Result<()> {
        if let Some((i, w)) = self.unary.iter().enumerate().find(|(_, w)| !w.is_finite()) {
            return Err(Error::NonFiniteWeight { feature: format!("variable {i}"), weight: *w });
        }
        if let Some(c) = self.couplings.iter().find(|c| !c.weight.is_finite()) {
            return Err(Error::NonFiniteWeight {
                feature: format!("coupling {}=>{}", c.antecedent, c.consequent),
                weight: c.weight,
            });
        }
        for c in &self.couplings {
            if c.antecedent >= self.len() || c.consequent >= self.len() {
                return Err(Error::Config(format!(
                    "coupling {}=>{} refers to a missing variable",
                    c.antecedent, c.consequent
                )));
            }
        }
        Ok(())
    }

    /// Exact marginals by enumerating all assignments. Exponential; for small graphs only.
    pub fn exact_marginals(&self) -> Vec<f64> {
        let n = self.len();
        assert!(n <= 24, "exact enumeration over {n} variables");
        let mut z = 0.0;
        let mut mass = vec![0.0; n];
        let mut assignment = vec![false; n];
        let max_energy = (0u64..1 << n)
            .map(|bits| {
                fill(&mut assignment, bits);
                self.energy(&assignment)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        for bits in 0u64..1 << n {
            fill(&mut assignment, bits);
            let p = (self.energy(&assignment) - max_energy).exp();
            z += p;
            for (m, &a) in mass.iter_mut().zip(&assignment) {
                if a {
                    *m += p;
                }
            }
        }
        mass.into_iter().map(|m| m / z).collect()
    }
}

fn fill(assignment: &mut [bool], bits: u64) {
    for (i, a) in assignment.iter_mut().enumerate() {
        *a = bits >> i & 1 == 1;
    }
}

/// Systematic-scan Gibbs sampling. Runs `n_samples` sweeps, discards the first `burn_in`
/// and returns per-variable fractions of the remaining sweeps in which it was true.
pub fn gibbs_marginals(graph: &FactorGraph, n_samples: usize, burn_in: usize, seed: u64) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    gibbs_with_rng(graph, n_samples, burn_in, &mut rng)
}

pub(crate) fn gibbs_with_rng(graph: &FactorGraph, n_samples: usize, burn_in: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    if n_samples <= burn_in {
        return Err(Error::SamplerParams { n_samples, burn_in });
    }
    graph.check()?;
    let n = graph.len();
    // Per variable: couplings where it is antecedent / consequent.
    let mut as_antecedent: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    let mut as_consequent: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for c in &graph.couplings {
        as_antecedent[c.antecedent].push((c.consequent, c.weight));
        as_consequent[c.consequent].push((c.antecedent, c.weight));
    }
    let mut state: Vec<bool> = (0..n).map(|_| rng.gen::<bool>()).collect();
    let mut counts = vec![0u64; n];
    for sweep in 0..n_samples {
        for i in 0..n {
            // Energy difference between variable i true and false, all else fixed.
            let mut delta = graph.unary[i];
            for &(c, w) in &as_antecedent[i] {
                if c != i && !state[c] {
                    delta -= w;
                }
            }
            for &(a, w) in &as_consequent[i] {
                if a != i && state[a] {
                    delta += w;
                }
            }
            let p = super::sigmoid(delta);
            state[i] = rng.gen::<f64>() < p;
        }
        if sweep >= burn_in {
            for (c, &s) in counts.iter_mut().zip(&state) {
                *c += u64::from(s);
            }
        }
    }
    let kept = (n_samples - burn_in) as f64;
    Ok(counts.into_iter().map(|c| c as f64 / kept).collect())
}
