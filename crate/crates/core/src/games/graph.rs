//! Explicit two-player parity games and Zielonka's recursive algorithm.

use std::collections::VecDeque;

use crate::Color;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Player {
    /// The controller: wins when the maximal color seen infinitely often is even.
    Even,
    Odd,
}

impl Player {
    pub fn opponent(self) -> Self {
        match self {
            Player::Even => Player::Odd,
            Player::Odd => Player::Even,
        }
    }

    /// The player who likes color `c`.
    pub fn of_color(c: Color) -> Self {
        if c.is_multiple_of(2) {
            Player::Even
        } else {
            Player::Odd
        }
    }

    fn index(self) -> usize {
        match self {
            Player::Even => 0,
            Player::Odd => 1,
        }
    }
}

/// A parity game on an explicit graph. A player stuck in a node without
/// successors loses.
#[derive(Clone, Debug)]
pub struct ParityGame {
    owner: Vec<Player>,
    priority: Vec<Color>,
    succ_off: Vec<usize>,
    succ: Vec<usize>,
    pred_off: Vec<usize>,
    pred: Vec<usize>,
}

/// Winners and positional strategies of a solved game.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParitySolution {
    pub winner: Vec<Player>,
    /// For each node won by its owner: the successor to move to.
    pub strategy: Vec<Option<usize>>,
}

impl ParityGame {
    /// `edges[v]` lists the successors of node `v` (duplicates are removed).
    pub fn new(owner: Vec<Player>, priority: Vec<Color>, edges: Vec<Vec<usize>>) -> Self {
        let n = owner.len();
        assert_eq!(priority.len(), n);
        assert_eq!(edges.len(), n);
        let mut succ_off = Vec::with_capacity(n + 1);
        let mut succ = Vec::new();
        let mut indeg = vec![0usize; n];
        succ_off.push(0);
        for mut row in edges {
            row.sort_unstable();
            row.dedup();
            for &w in &row {
                assert!(w < n, "edge target {w} out of range");
                indeg[w] += 1;
            }
            succ.extend(row);
            succ_off.push(succ.len());
        }
        let mut pred_off = Vec::with_capacity(n + 1);
        pred_off.push(0);
        for d in &indeg {
            pred_off.push(pred_off.last().unwrap() + d);
        }
        let mut fill = pred_off[..n].to_vec();
        let mut pred = vec![0; succ.len()];
        for v in 0..n {
            for &w in &succ[succ_off[v]..succ_off[v + 1]] {
                pred[fill[w]] = v;
                fill[w] += 1;
            }
        }
        Self {
            owner,
            priority,
            succ_off,
            succ,
            pred_off,
            pred,
        }
    }

    pub fn len(&self) -> usize {
        self.owner.len()
    }

    pub fn is_empty(&self) -> bool {
        self.owner.is_empty()
    }

    pub fn owner(&self, v: usize) -> Player {
        self.owner[v]
    }

    pub fn priority(&self, v: usize) -> Color {
        self.priority[v]
    }

    pub fn succ(&self, v: usize) -> &[usize] {
        &self.succ[self.succ_off[v]..self.succ_off[v + 1]]
    }

    fn pred(&self, v: usize) -> &[usize] {
        &self.pred[self.pred_off[v]..self.pred_off[v + 1]]
    }

    /// Nodes of `sub` from which `player` can force a visit to `target`
    /// while staying in `sub`. Writes attractor moves into `strategy`.
    pub(crate) fn attractor(
        &self,
        sub: &[bool],
        target: &[bool],
        player: Player,
        strategy: &mut [Option<usize>],
    ) -> Vec<bool> {
        let n = self.len();
        let mut attr = vec![false; n];
        let mut remaining = vec![usize::MAX; n];
        let mut queue = VecDeque::new();
        for v in 0..n {
            if sub[v] && target[v] {
                attr[v] = true;
                queue.push_back(v);
            }
        }
        while let Some(w) = queue.pop_front() {
            for &v in self.pred(w) {
                if !sub[v] || attr[v] {
                    continue;
                }
                if self.owner[v] == player {
                    strategy[v] = self.succ(v).iter().copied().find(|&s| sub[s] && attr[s]);
                    attr[v] = true;
                    queue.push_back(v);
                } else {
                    if remaining[v] == usize::MAX {
                        remaining[v] = self.succ(v).iter().filter(|&&s| sub[s]).count();
                    }
                    remaining[v] -= 1;
                    if remaining[v] == 0 {
                        attr[v] = true;
                        queue.push_back(v);
                    }
                }
            }
        }
        attr
    }

    pub fn solve(&self) -> ParitySolution {
        let n = self.len();
        let mut strategy = vec![None; n];
        let all = vec![true; n];

        // Remove dead ends first: a stuck player loses.
        let dead_even: Vec<bool> = (0..n)
            .map(|v| self.owner[v] == Player::Even && self.succ(v).is_empty())
            .collect();
        let lost_even = self.attractor(&all, &dead_even, Player::Odd, &mut strategy);
        let rest: Vec<bool> = lost_even.iter().map(|&b| !b).collect();
        let dead_odd: Vec<bool> = (0..n)
            .map(|v| rest[v] && self.owner[v] == Player::Odd && self.succ(v).is_empty())
            .collect();
        let lost_odd = self.attractor(&rest, &dead_odd, Player::Even, &mut strategy);
        let core: Vec<bool> = (0..n).map(|v| rest[v] && !lost_odd[v]).collect();

        let [win_even, _] = self.zielonka(core, &mut strategy);
        let winner: Vec<Player> = (0..n)
            .map(|v| {
                if lost_odd[v] || win_even[v] {
                    Player::Even
                } else {
                    Player::Odd
                }
            })
            .collect();
        for v in 0..n {
            if winner[v] != self.owner[v] {
                strategy[v] = None;
            }
        }
        ParitySolution { winner, strategy }
    }

    /// Zielonka's algorithm on the dead-end free subgame `sub`; returns the
    /// winning regions of Even and Odd.
    fn zielonka(&self, sub: Vec<bool>, strategy: &mut [Option<usize>]) -> [Vec<bool>; 2] {
        let n = self.len();
        let Some(d) = (0..n).filter(|&v| sub[v]).map(|v| self.priority[v]).max() else {
            return [vec![false; n], vec![false; n]];
        };
        let p = Player::of_color(d);
        let opp = p.opponent();
        let mut lost = vec![false; n];
        loop {
            let game: Vec<bool> = (0..n).map(|v| sub[v] && !lost[v]).collect();
            if !game.iter().any(|&b| b) {
                break;
            }
            let top: Vec<bool> = (0..n).map(|v| game[v] && self.priority[v] == d).collect();
            for v in 0..n {
                if top[v] && self.owner[v] == p {
                    strategy[v] = self.succ(v).iter().copied().find(|&s| game[s]);
                }
            }
            let attr = self.attractor(&game, &top, p, strategy);
            let lower: Vec<bool> = (0..n).map(|v| game[v] && !attr[v]).collect();
            let sub_win = self.zielonka(lower, strategy);
            let opp_win = &sub_win[opp.index()];
            if !opp_win.iter().any(|&b| b) {
                break;
            }
            let grow = self.attractor(&game, opp_win, opp, strategy);
            for v in 0..n {
                lost[v] |= grow[v];
            }
        }
        let mut out = [vec![false; n], vec![false; n]];
        for v in 0..n {
            if sub[v] {
                if lost[v] {
                    out[opp.index()][v] = true;
                } else {
                    out[p.index()][v] = true;
                }
            }
        }
        out
    }
}
