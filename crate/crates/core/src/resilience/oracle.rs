use super::value::{ResilienceMap, ResilienceValue};
use crate::abstraction::BimodalAbstraction;
use crate::games::{solve_parity, Arena};
use crate::{Error, Result};

/// Largest abstraction the brute-force oracle accepts.
pub const ORACLE_STATE_LIMIT: usize = 64;

/// Resilience by exhaustive game solving on budgeted products.
///
/// Node `(q, b)` of the product means "at `q`, the environment may still
/// spike `b` times"; disturbance successors are only available while
/// `b > 0` and consume one unit. A state has value `Fin(b)` for the
/// smallest budget `b ≤ k_max` the controller loses with. States that win
/// every budget up to `k_max` are `ω + 1` if they win the game with
/// unlimited spikes and `ω` otherwise. `k_max ≥ |Q|` suffices for exact
/// values.
pub fn brute_force_resilience(gamma: &BimodalAbstraction, k_max: usize) -> Result<ResilienceMap> {
    let n = gamma.num_states();
    if n > ORACLE_STATE_LIMIT {
        return Err(Error::OracleTooLarge {
            states: n,
            limit: ORACLE_STATE_LIMIT,
        });
    }
    let layers = k_max + 1;
    let mut colors = Vec::with_capacity(n * layers);
    let mut moves = Vec::with_capacity(n * layers);
    for b in 0..layers {
        for q in 0..n {
            colors.push(gamma.color(q));
            let row: Vec<_> = gamma
                .enabled(q)
                .map(|u| {
                    let mut s: Vec<usize> = gamma.nor(q, u).iter().map(|&t| b * n + t).collect();
                    if b > 0 {
                        s.extend(gamma.dist(q, u).iter().map(|&t| (b - 1) * n + t));
                    }
                    (u, s)
                })
                .collect();
            moves.push(row);
        }
    }
    let product = solve_parity(&Arena::from_moves(colors, moves));
    let unbounded = solve_parity(&Arena::union(gamma));
    let values = (0..n)
        .map(|q| match (0..layers).find(|&b| !product.winning[b * n + q]) {
            Some(b) => ResilienceValue::Fin(b as u32),
            None if unbounded.winning[q] => ResilienceValue::OmegaPlusOne,
            None => ResilienceValue::Omega,
        })
        .collect();
    Ok(ResilienceMap::new(values))
}
