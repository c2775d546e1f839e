use serde::{Deserialize, Serialize};

use crate::{ActionId, StateId};

/// Set-valued transition map `(q, u) -> sorted successor set`, stored as a
/// compressed row per `(q, u)` pair (pair index `q * num_actions + u`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransitionMap {
    num_states: usize,
    num_actions: usize,
    offsets: Vec<usize>,
    targets: Vec<StateId>,
}

impl TransitionMap {
    pub fn empty(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            offsets: vec![0; num_states * num_actions + 1],
            targets: Vec::new(),
        }
    }

    /// Builds from one successor list per pair in pair-index order. Lists are
    /// sorted and deduplicated.
    pub fn from_rows<I, R>(num_states: usize, num_actions: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = StateId>,
    {
        let mut offsets = Vec::with_capacity(num_states * num_actions + 1);
        offsets.push(0);
        let mut targets = Vec::new();
        let mut row_buf = Vec::new();
        for row in rows {
            row_buf.clear();
            row_buf.extend(row);
            row_buf.sort_unstable();
            row_buf.dedup();
            debug_assert!(row_buf.iter().all(|&s| s < num_states));
            targets.extend_from_slice(&row_buf);
            offsets.push(targets.len());
        }
        assert_eq!(
            offsets.len(),
            num_states * num_actions + 1,
            "one row per (state, action) pair"
        );
        Self {
            num_states,
            num_actions,
            offsets,
            targets,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    #[inline]
    pub fn get(&self, q: StateId, u: ActionId) -> &[StateId] {
        let p = q * self.num_actions + u;
        &self.targets[self.offsets[p]..self.offsets[p + 1]]
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    /// Rebuilds the map with `f` deciding each row.
    pub fn map_rows<F>(&self, mut f: F) -> Self
    where
        F: FnMut(StateId, ActionId, &[StateId]) -> Vec<StateId>,
    {
        let rows = (0..self.num_states)
            .flat_map(|q| (0..self.num_actions).map(move |u| (q, u)))
            .map(|(q, u)| f(q, u, self.get(q, u)))
            .collect::<Vec<_>>();
        Self::from_rows(self.num_states, self.num_actions, rows)
    }

    pub(crate) fn is_well_formed(&self) -> bool {
        self.offsets.len() == self.num_states * self.num_actions + 1
            && self.offsets.first() == Some(&0)
            && self.offsets.last() == Some(&self.targets.len())
            && self.offsets.windows(2).all(|w| w[0] <= w[1])
            && self.targets.iter().all(|&s| s < self.num_states)
            && self
                .offsets
                .windows(2)
                .all(|w| self.targets[w[0]..w[1]].windows(2).all(|p| p[0] < p[1]))
    }
}

/// Sorted set difference `a \ b`.
pub(crate) fn sorted_difference(a: &[StateId], b: &[StateId]) -> Vec<StateId> {
    let mut out = Vec::with_capacity(a.len());
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j >= b.len() || b[j] != x {
            out.push(x);
        }
    }
    out
}
