use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abstraction::BimodalAbstraction;
use crate::games::{solve_parity, solve_parity_and_safety, Arena, WinningResult};
use crate::{ActionId, Error, Result, StateId};

/// Which version of the ranking iteration to run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Ranks actions as well as states, so that a state's rank is the best
    /// over its actions of the worst spike outcome. Agrees with the
    /// brute-force oracle.
    #[default]
    Reference,
    /// The state-level formulation applied verbatim: spike propagation over
    /// states, pruning of rank-touching actions, and ranks recomputed from
    /// scratch in every risk update.
    PaperLiteral,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Reference => "reference",
            Mode::PaperLiteral => "paper-literal",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "reference" => Ok(Mode::Reference),
            "paper-literal" => Ok(Mode::PaperLiteral),
            _ => Err(Error::InvalidArgument(format!(
                "unknown mode {s:?} (expected reference or paper-literal)"
            ))),
        }
    }
}

/// A partial map from states to provisional finite resilience values,
/// together with ranks of `(state, action)` pairs.
///
/// An action rank `k` says that taking the action can be punished with `k`
/// spikes. Only the reference mode fills action ranks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Ranking {
    num_actions: usize,
    state: Vec<Option<u32>>,
    action: Vec<Option<u32>>,
}

impl Ranking {
    pub fn empty(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_actions,
            state: vec![None; num_states],
            action: vec![None; num_states * num_actions],
        }
    }

    /// A ranking with the given state ranks and no action ranks.
    pub fn from_states(num_states: usize, num_actions: usize, ranks: &[(StateId, u32)]) -> Self {
        let mut r = Self::empty(num_states, num_actions);
        for &(q, k) in ranks {
            r.state[q] = Some(k);
        }
        r
    }

    pub fn num_states(&self) -> usize {
        self.state.len()
    }

    pub fn get(&self, q: StateId) -> Option<u32> {
        self.state[q]
    }

    pub fn contains(&self, q: StateId) -> bool {
        self.state[q].is_some()
    }

    pub fn action_rank(&self, q: StateId, u: ActionId) -> Option<u32> {
        self.action[q * self.num_actions + u]
    }

    pub fn states(&self) -> &[Option<u32>] {
        &self.state
    }

    /// `dom(r)` in increasing state order.
    pub fn domain(&self) -> Vec<StateId> {
        (0..self.state.len()).filter(|&q| self.state[q].is_some()).collect()
    }

    /// `im(r)` over states.
    pub fn image(&self) -> BTreeSet<u32> {
        self.state.iter().flatten().copied().collect()
    }

    fn levels(&self) -> BTreeSet<u32> {
        self.state.iter().chain(&self.action).flatten().copied().collect()
    }

    fn max_rank(&self) -> u32 {
        self.levels().last().copied().unwrap_or(0)
    }

    fn lower_state(&mut self, q: StateId, k: u32) {
        self.state[q] = Some(self.state[q].map_or(k, |r| r.min(k)));
    }

    fn lower_action(&mut self, q: StateId, u: ActionId, k: u32) {
        let p = q * self.num_actions + u;
        self.action[p] = Some(self.action[p].map_or(k, |r| r.min(k)));
    }
}

fn min_opt(a: Option<u32>, b: Option<u32>) -> Option<u32> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) => x,
        (None, y) => y,
    }
}

/// Rank 0 on the spike-free losing region. In reference mode every action
/// with a normal successor in that region is ranked 0 as well.
pub fn initial_ranking(gamma: &BimodalAbstraction, mode: Mode) -> Ranking {
    let lost = solve_parity(&Arena::spike_free(gamma)).losing();
    let mut r = Ranking::empty(gamma.num_states(), gamma.num_actions());
    for q in 0..gamma.num_states() {
        if lost[q] {
            r.state[q] = Some(0);
        }
        if mode == Mode::Reference {
            for u in gamma.enabled(q) {
                if gamma.nor(q, u).iter().any(|&t| lost[t]) {
                    r.lower_action(q, u, 0);
                }
            }
        }
    }
    r
}

/// Propagates ranks backwards along disturbance edges.
///
/// Reference mode: an action is ranked one above its best-ranked disturbance
/// successor, and a state whose actions are all ranked takes the largest of
/// those ranks. Paper-literal mode: the state-level rule over the set of
/// ranked disturbance successors of actions that avoid ranked states.
pub fn disturbance_update(r: &Ranking, gamma: &BimodalAbstraction, mode: Mode) -> Ranking {
    let mut out = r.clone();
    for q in 0..gamma.num_states() {
        match mode {
            Mode::Reference => {
                let mut worst = Some(0);
                let mut any = false;
                for u in gamma.enabled(q) {
                    any = true;
                    let via_spike = gamma
                        .dist(q, u)
                        .iter()
                        .filter_map(|&t| r.state[t])
                        .min()
                        .map(|k| k + 1);
                    let rho = min_opt(r.action_rank(q, u), via_spike);
                    if let Some(k) = via_spike {
                        out.lower_action(q, u, k);
                    }
                    worst = match (worst, rho) {
                        (Some(w), Some(k)) => Some(w.max(k)),
                        _ => None,
                    };
                }
                if let (true, Some(k)) = (any, worst) {
                    out.lower_state(q, k);
                }
            }
            Mode::PaperLiteral => {
                let candidates: Vec<ActionId> = gamma
                    .enabled(q)
                    .filter(|&u| gamma.nor(q, u).iter().all(|&t| r.state[t].is_none()))
                    .collect();
                let all_hit = candidates
                    .iter()
                    .all(|&u| gamma.dist(q, u).iter().any(|&t| r.state[t].is_some()));
                if candidates.is_empty() || !all_hit {
                    continue;
                }
                let best = candidates
                    .iter()
                    .flat_map(|&u| gamma.dist(q, u).iter())
                    .filter_map(|&t| r.state[t])
                    .min();
                if let Some(k) = best {
                    out.lower_state(q, k + 1);
                }
            }
        }
    }
    out
}

/// Paper-literal mode removes every pair whose normal or disturbance
/// successors meet `dom(r)`. The reference mode leaves the abstraction
/// untouched; action ranks carry that information instead.
pub fn strategy_pruning(r: &Ranking, gamma: &BimodalAbstraction, mode: Mode) -> BimodalAbstraction {
    if mode == Mode::Reference {
        return gamma.clone();
    }
    let touches = |s: &[StateId]| s.iter().any(|&t| r.state[t].is_some());
    let pruned: Vec<bool> = (0..gamma.num_states() * gamma.num_actions())
        .map(|p| {
            let (q, u) = (p / gamma.num_actions(), p % gamma.num_actions());
            touches(gamma.nor(q, u)) || touches(gamma.dist(q, u))
        })
        .collect();
    let keep = |q: StateId, u: ActionId, s: &[StateId]| {
        if pruned[q * gamma.num_actions() + u] {
            Vec::new()
        } else {
            s.to_vec()
        }
    };
    let mut out = gamma.clone();
    out.delta_nor = gamma.delta_nor.map_rows(keep);
    out.delta_dist = gamma.delta_dist.map_rows(keep);
    out
}

/// Per-level winning controllers recorded by the risk update.
pub type LevelControllers = BTreeMap<u32, Vec<Option<ActionId>>>;

/// For every level `k`, the states that cannot win the spike-free parity
/// game while avoiding states (and, in reference mode, actions) ranked at
/// most `k` get rank `k`.
pub fn risk_update(r: &Ranking, gamma: &BimodalAbstraction, mode: Mode) -> (Ranking, LevelControllers) {
    let levels: Vec<u32> = match mode {
        Mode::Reference => r.levels().into_iter().collect(),
        Mode::PaperLiteral => r.image().into_iter().collect(),
    };
    let base = Arena::spike_free(gamma);
    let solved: Vec<(u32, WinningResult)> = levels
        .par_iter()
        .map(|&k| {
            let arena = match mode {
                Mode::Reference => base.restrict(|q, u, _| r.action_rank(q, u).is_none_or(|p| p > k)),
                Mode::PaperLiteral => base.clone(),
            };
            let avoid: Vec<bool> = r.state.iter().map(|s| s.is_some_and(|p| p <= k)).collect();
            (k, solve_parity_and_safety(&arena, &avoid))
        })
        .collect();

    let mut out = match mode {
        Mode::Reference => r.clone(),
        Mode::PaperLiteral => Ranking::empty(r.num_states(), r.num_actions),
    };
    // `solved` is in increasing level order, so the first hit is the minimum.
    for (k, res) in &solved {
        for q in 0..gamma.num_states() {
            if res.winning[q] {
                continue;
            }
            out.lower_state(q, *k);
        }
        if mode == Mode::Reference {
            for q in 0..gamma.num_states() {
                for u in gamma.enabled(q) {
                    if gamma.nor(q, u).iter().any(|&t| !res.winning[t]) {
                        out.lower_action(q, u, *k);
                    }
                }
            }
        }
    }
    let controllers = solved.into_iter().map(|(k, res)| (k, res.controller)).collect();
    (out, controllers)
}

/// Fixed point of the ranking iteration.
#[derive(Clone, Debug)]
pub struct FiniteResilience {
    pub ranking: Ranking,
    /// Winning controllers of the last risk update, one per level.
    pub levels: LevelControllers,
    pub iterations: usize,
}

/// Iterates disturbance update, pruning and risk update until the ranking
/// stops changing.
pub fn finite_resilience(gamma: &BimodalAbstraction, mode: Mode) -> Result<FiniteResilience> {
    let pairs = gamma.num_states() * gamma.num_actions();
    let mut r = initial_ranking(gamma, mode);
    let mut current = gamma.clone();
    let mut iterations = 0usize;
    loop {
        iterations += 1;
        let r_dist = disturbance_update(&r, &current, mode);
        let next = strategy_pruning(&r, &current, mode);
        let (r_next, levels) = risk_update(&r_dist, &next, mode);
        log::debug!(
            "iteration {iterations}: {} ranked states, levels {:?}",
            r_next.domain().len(),
            r_next.image()
        );
        if r_next == r {
            return Ok(FiniteResilience {
                ranking: r_next,
                levels,
                iterations,
            });
        }
        let bound = (gamma.num_states() + pairs) * (r_next.max_rank() as usize + 2) + 2;
        if iterations > bound {
            return Err(Error::NonTermination(iterations));
        }
        r = r_next;
        current = next;
    }
}
