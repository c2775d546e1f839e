use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::abstraction::{BimodalAbstraction, BimodalBuilder};
use crate::Color;

/// Shape of randomly generated abstractions.
#[derive(Clone, Debug, PartialEq)]
pub struct RandomParams {
    pub max_states: usize,
    pub max_actions: usize,
    pub max_color: Color,
    /// Probability that a pair is enabled.
    pub enabled: f64,
    /// Probability of each extra normal edge (one is always present).
    pub normal_density: f64,
    /// Probability of each disturbance edge to a state outside the normal set.
    pub dist_density: f64,
}

impl Default for RandomParams {
    fn default() -> Self {
        Self {
            max_states: 10,
            max_actions: 3,
            max_color: 3,
            enabled: 0.95,
            normal_density: 0.0,
            dist_density: 0.25,
        }
    }
}

/// A random abstraction with independently drawn edges, reproducible from
/// `seed`.
pub fn random_bimodal(seed: u64, params: &RandomParams) -> BimodalAbstraction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.gen_range(1..=params.max_states);
    let a = rng.gen_range(1..=params.max_actions);
    let colors: Vec<Color> = (0..n).map(|_| rng.gen_range(0..=params.max_color)).collect();
    let mut b = BimodalBuilder::new(n, a).colors(&colors);
    for q in 0..n {
        for u in 0..a {
            if !rng.gen_bool(params.enabled) {
                continue;
            }
            let mut nor = vec![rng.gen_range(0..n)];
            for t in 0..n {
                if rng.gen_bool(params.normal_density) {
                    nor.push(t);
                }
            }
            let dist: Vec<usize> = (0..n)
                .filter(|t| !nor.contains(t))
                .filter(|_| rng.gen_bool(params.dist_density))
                .collect();
            b = b.normal(q, u, &nor).dist(q, u, &dist);
        }
    }
    b.build().expect("generated abstraction is well formed")
}
