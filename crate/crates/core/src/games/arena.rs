use super::graph::{ParityGame, Player};
use crate::abstraction::BimodalAbstraction;
use crate::{ActionId, Color, StateId};

/// A controller-versus-nondeterminism game: in state `q` the controller picks
/// one of the moves of `q`, then the environment picks any successor of that
/// move. States without moves are lost by the controller.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Arena {
    colors: Vec<Color>,
    move_off: Vec<usize>,
    move_action: Vec<ActionId>,
    succ_off: Vec<usize>,
    succ: Vec<StateId>,
}

/// Winning region of the controller and a memoryless controller on it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WinningResult {
    pub winning: Vec<bool>,
    pub controller: Vec<Option<ActionId>>,
}

impl WinningResult {
    pub fn is_winning(&self, q: StateId) -> bool {
        self.winning[q]
    }

    pub fn losing(&self) -> Vec<bool> {
        self.winning.iter().map(|w| !w).collect()
    }

    pub fn winning_count(&self) -> usize {
        self.winning.iter().filter(|&&w| w).count()
    }
}

impl Arena {
    /// `moves[q]` lists `(action, successors)`; moves with no successors are
    /// dropped.
    pub fn from_moves(colors: Vec<Color>, moves: Vec<Vec<(ActionId, Vec<StateId>)>>) -> Self {
        assert_eq!(colors.len(), moves.len());
        let n = colors.len();
        let mut move_off = vec![0];
        let mut move_action = Vec::new();
        let mut succ_off = vec![0];
        let mut succ = Vec::new();
        for row in moves {
            for (u, mut s) in row {
                if s.is_empty() {
                    continue;
                }
                s.sort_unstable();
                s.dedup();
                assert!(s.iter().all(|&t| t < n), "successor out of range");
                move_action.push(u);
                succ.extend(s);
                succ_off.push(succ.len());
            }
            move_off.push(move_action.len());
        }
        Self {
            colors,
            move_off,
            move_action,
            succ_off,
            succ,
        }
    }

    /// The game over normal transitions only.
    pub fn spike_free(gamma: &BimodalAbstraction) -> Self {
        Self::from_abstraction(gamma, false)
    }

    /// The game over normal and disturbance transitions together.
    pub fn union(gamma: &BimodalAbstraction) -> Self {
        Self::from_abstraction(gamma, true)
    }

    fn from_abstraction(gamma: &BimodalAbstraction, with_dist: bool) -> Self {
        let moves = (0..gamma.num_states())
            .map(|q| {
                gamma
                    .enabled(q)
                    .map(|u| {
                        let mut s = gamma.nor(q, u).to_vec();
                        if with_dist {
                            s.extend_from_slice(gamma.dist(q, u));
                        }
                        (u, s)
                    })
                    .collect()
            })
            .collect();
        Self::from_moves(gamma.colors().to_vec(), moves)
    }

    pub fn num_states(&self) -> usize {
        self.colors.len()
    }

    pub fn num_moves(&self) -> usize {
        self.move_action.len()
    }

    pub fn color(&self, q: StateId) -> Color {
        self.colors[q]
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    /// Moves of `q` as `(action, successors)`, in increasing action order
    /// when built from an abstraction.
    pub fn moves(&self, q: StateId) -> impl Iterator<Item = (ActionId, &[StateId])> + '_ {
        (self.move_off[q]..self.move_off[q + 1]).map(move |m| (self.move_action[m], self.move_succ(m)))
    }

    pub fn successors(&self, q: StateId, u: ActionId) -> Option<&[StateId]> {
        self.moves(q).find(|(a, _)| *a == u).map(|(_, s)| s)
    }

    fn move_succ(&self, m: usize) -> &[StateId] {
        &self.succ[self.succ_off[m]..self.succ_off[m + 1]]
    }

    /// Keeps the moves for which `keep(q, u, successors)` holds.
    pub fn restrict<F>(&self, mut keep: F) -> Self
    where
        F: FnMut(StateId, ActionId, &[StateId]) -> bool,
    {
        let moves = (0..self.num_states())
            .map(|q| {
                self.moves(q)
                    .filter(|(u, s)| keep(q, *u, s))
                    .map(|(u, s)| (u, s.to_vec()))
                    .collect()
            })
            .collect();
        Self::from_moves(self.colors.clone(), moves)
    }

    /// State nodes `0..n` belong to the controller; node `n + m` is move `m`
    /// and belongs to the environment. Both carry the color of their state.
    pub fn to_parity_game(&self) -> ParityGame {
        let n = self.num_states();
        let mut owner = vec![Player::Even; n];
        let mut priority = self.colors.clone();
        let mut edges: Vec<Vec<usize>> = (0..n)
            .map(|q| (self.move_off[q]..self.move_off[q + 1]).map(|m| n + m).collect())
            .collect();
        for q in 0..n {
            for m in self.move_off[q]..self.move_off[q + 1] {
                owner.push(Player::Odd);
                priority.push(self.colors[q]);
                edges.push(self.move_succ(m).to_vec());
            }
        }
        ParityGame::new(owner, priority, edges)
    }

    fn node_to_action(&self, node: Option<usize>) -> Option<ActionId> {
        node.map(|v| self.move_action[v - self.num_states()])
    }

    /// Lowest-index action of `q` whose successors all satisfy `good`.
    fn first_move_into(&self, q: StateId, good: &[bool]) -> Option<ActionId> {
        self.moves(q).find(|(_, s)| s.iter().all(|&t| good[t])).map(|(u, _)| u)
    }
}

/// Parity winning region; the controller picks the solver's move.
pub fn solve_parity(arena: &Arena) -> WinningResult {
    let game = arena.to_parity_game();
    let sol = game.solve();
    let n = arena.num_states();
    let winning: Vec<bool> = (0..n).map(|q| sol.winner[q] == Player::Even).collect();
    let controller = (0..n)
        .map(|q| {
            if winning[q] {
                arena.node_to_action(sol.strategy[q])
            } else {
                None
            }
        })
        .collect();
    WinningResult { winning, controller }
}

/// States from which the controller can avoid `unsafe_states` forever. The
/// controller takes the lowest-index action keeping every successor winning.
pub fn solve_safety(arena: &Arena, unsafe_states: &[bool]) -> WinningResult {
    let n = arena.num_states();
    assert_eq!(unsafe_states.len(), n);
    let game = arena.to_parity_game();
    let all = vec![true; game.len()];
    let mut target = vec![false; game.len()];
    for q in 0..n {
        target[q] = unsafe_states[q] || arena.moves(q).next().is_none();
    }
    let mut scratch = vec![None; game.len()];
    let lost = game.attractor(&all, &target, Player::Odd, &mut scratch);
    let winning: Vec<bool> = (0..n).map(|q| !lost[q]).collect();
    let controller = (0..n)
        .map(|q| {
            if winning[q] {
                arena.first_move_into(q, &winning)
            } else {
                None
            }
        })
        .collect();
    WinningResult { winning, controller }
}

/// Parity while avoiding `unsafe_states`: the safety game is solved first
/// and the parity game is then played on its winning region.
pub fn solve_parity_and_safety(arena: &Arena, unsafe_states: &[bool]) -> WinningResult {
    let region = solve_safety(arena, unsafe_states).winning;
    let inner = arena.restrict(|q, _, s| region[q] && s.iter().all(|&t| region[t]));
    solve_parity(&inner)
}
