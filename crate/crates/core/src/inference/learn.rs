//! L2-regularized logistic regression trained by stochastic gradient descent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sigmoid;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnParams {
    pub l2: f64,
    pub epochs: usize,
    pub lr: f64,
    pub seed: u64,
}

impl Default for LearnParams {
    fn default() -> Self {
        LearnParams {
            l2: 1e-4,
            epochs: 50,
            lr: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub features: Vec<u32>,
    pub label: bool,
}

fn score(w: &[f64], features: &[u32]) -> f64 {
    features.iter().map(|&f| w.get(f as usize).copied().unwrap_or(0.0)).sum()
}

/// Numerically stable `-log σ(s)` for a positive example, `-log(1-σ(s))` otherwise.
fn nll(s: f64, label: bool) -> f64 {
    let z = if label { -s } else { s };
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean negative log-likelihood plus `l2/2 * ||w||²`.
pub fn objective(w: &[f64], examples: &[Example], l2: f64) -> f64 {
    let n = examples.len().max(1) as f64;
    let data: f64 = examples.iter().map(|e| nll(score(w, &e.features), e.label)).sum::<f64>() / n;
    data + 0.5 * l2 * w.iter().map(|x| x * x).sum::<f64>()
}

/// Analytic gradient of [`objective`].
pub fn gradient(w: &[f64], examples: &[Example], l2: f64) -> Vec<f64> {
    let n = examples.len().max(1) as f64;
    let mut g: Vec<f64> = w.iter().map(|x| l2 * x).collect();
    for e in examples {
        let r = (sigmoid(score(w, &e.features)) - f64::from(u8::from(e.label))) / n;
        for &f in &e.features {
            g[f as usize] += r;
        }
    }
    g
}

/// SGD over `examples` with step `lr / sqrt(epoch)` and a seeded shuffle per epoch.
/// The L2 shrinkage is applied to every weight at every step through a shared scale
/// factor, so each step costs only the example's feature count.
pub fn train_logistic(examples: &[Example], dim: usize, params: &LearnParams) -> Vec<f64> {
    let mut v = vec![0.0f64; dim];
    let mut scale = 1.0f64;
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for epoch in 1..=params.epochs {
        order.shuffle(&mut rng);
        let lr = params.lr / (epoch as f64).sqrt();
        for &i in &order {
            let e = &examples[i];
            let s = scale * score(&v, &e.features);
            let r = sigmoid(s) - f64::from(u8::from(e.label));
            scale *= 1.0 - lr * params.l2;
            for &f in &e.features {
                v[f as usize] -= lr * r / scale;
            }
            if scale < 1e-6 {
                v.iter_mut().for_each(|x| *x *= scale);
                scale = 1.0;
            }
        }
    }
    v.iter_mut().for_each(|x| *x *= scale);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn separable_data_is_learned() {
        // Feature 0 marks positives, feature 1 negatives; features 2..6 are noise.
        let examples: Vec<Example> = (0..200)
            .map(|i| {
                let label = i % 2 == 0;
                let mut f = vec![if label { 0 } else { 1 }, 2 + (i % 5) as u32];
                f.sort();
                Example { features: f, label }
            })
            .collect();
        let w = train_logistic(&examples, 7, &LearnParams::default());
        let correct = examples
            .iter()
            .filter(|e| (sigmoid(score(&w, &e.features)) >= 0.5) == e.label)
            .count();
        assert!(correct as f64 / examples.len() as f64 >= 0.99);
    }

    #[test]
    fn zero_features_keep_zero_weights() {
        let examples = vec![
            Example { features: vec![], label: true },
            Example { features: vec![], label: false },
        ];
        let w = train_logistic(&examples, 3, &LearnParams::default());
        assert!(w.iter().all(|&x| x == 0.0));
        assert_eq!(sigmoid(score(&w, &[])), 0.5);
    }

    #[test]
    fn single_positive_grows_monotonically() {
        let examples = vec![Example { features: vec![0], label: true }];
        let mut last = 0.0;
        for epochs in 1..20 {
            let params = LearnParams { l2: 0.0, epochs, ..LearnParams::default() };
            let w = train_logistic(&examples, 1, &params)[0];
            assert!(w > last);
            last = w;
        }
    }

    #[test]
    fn training_is_seed_deterministic() {
        let examples: Vec<Example> = (0..30)
            .map(|i| Example { features: vec![(i % 4) as u32], label: i % 3 == 0 })
            .collect();
        let p = LearnParams { seed: 5, ..LearnParams::default() };
        assert_eq!(train_logistic(&examples, 4, &p), train_logistic(&examples, 4, &p));
    }

    #[test]
    fn sgd_approaches_the_regularized_optimum() {
        let examples: Vec<Example> = (0..40)
            .map(|i| Example { features: vec![(i % 3) as u32, 3], label: i % 5 < 2 + (i % 3) })
            .collect();
        let params = LearnParams { l2: 0.05, epochs: 400, ..LearnParams::default() };
        let w = train_logistic(&examples, 4, &params);
        let g = gradient(&w, &examples, params.l2);
        assert!(g.iter().all(|x| x.abs() < 1e-2), "{g:?}");
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(
            raw in proptest::collection::vec((proptest::collection::btree_set(0u32..5, 0..4), any::<bool>()), 1..12),
            w in proptest::collection::vec(-2.0f64..2.0, 5),
            l2 in 0.0f64..0.5,
        ) {
            let examples: Vec<Example> = raw.into_iter().map(|(f, label)| Example { features: f.into_iter().collect(), label }).collect();
            let g = gradient(&w, &examples, l2);
            let h = 1e-5;
            for i in 0..w.len() {
                let mut up = w.clone();
                let mut down = w.clone();
                up[i] += h;
                down[i] -= h;
                let fd = (objective(&up, &examples, l2) - objective(&down, &examples, l2)) / (2.0 * h);
                prop_assert!((fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1e-3), "{} vs {}", fd, g[i]);
            }
        }
    }
}
