use super::{GridParams, TransitionMap};
use crate::{ActionId, Color, Error, Result, StateId};

/// Finite abstraction with normal transitions and disturbance-only
/// transitions.
///
/// Action `u` is enabled in `q` iff its normal successor set is non-empty.
/// The two successor sets of a pair are disjoint.
#[derive(Clone, Debug, PartialEq)]
pub struct BimodalAbstraction {
    pub(crate) delta_nor: TransitionMap,
    pub(crate) delta_dist: TransitionMap,
    pub(crate) colors: Vec<Color>,
    pub(crate) obstacle: Vec<bool>,
    pub(crate) out_of_domain: Option<StateId>,
    pub(crate) grid: Option<GridParams>,
}

impl BimodalAbstraction {
    /// Assembles an abstraction and checks its structural invariants.
    pub fn new(
        delta_nor: TransitionMap,
        delta_dist: TransitionMap,
        colors: Vec<Color>,
        obstacle: Vec<bool>,
        out_of_domain: Option<StateId>,
        grid: Option<GridParams>,
    ) -> Result<Self> {
        let n = delta_nor.num_states();
        let a = delta_nor.num_actions();
        let bad = |msg: String| Err(Error::Format(msg));
        if delta_dist.num_states() != n || delta_dist.num_actions() != a {
            return bad("transition maps disagree on shape".into());
        }
        if colors.len() != n || obstacle.len() != n {
            return bad("color and obstacle arrays must cover every state".into());
        }
        if !delta_nor.is_well_formed() || !delta_dist.is_well_formed() {
            return bad("malformed transition map".into());
        }
        if let Some(ood) = out_of_domain {
            if ood >= n {
                return bad(format!("out-of-domain state {ood} out of range"));
            }
        }
        for q in 0..n {
            for u in 0..a {
                let nor = delta_nor.get(q, u);
                let dist = delta_dist.get(q, u);
                if nor.is_empty() && !dist.is_empty() {
                    return bad(format!("({q}, {u}) has disturbance successors but no normal ones"));
                }
                if dist.iter().any(|s| nor.binary_search(s).is_ok()) {
                    return bad(format!("({q}, {u}): normal and disturbance successors overlap"));
                }
            }
        }
        Ok(Self {
            delta_nor,
            delta_dist,
            colors,
            obstacle,
            out_of_domain,
            grid,
        })
    }

    pub fn num_states(&self) -> usize {
        self.delta_nor.num_states()
    }

    pub fn num_actions(&self) -> usize {
        self.delta_nor.num_actions()
    }

    #[inline]
    pub fn nor(&self, q: StateId, u: ActionId) -> &[StateId] {
        self.delta_nor.get(q, u)
    }

    #[inline]
    pub fn dist(&self, q: StateId, u: ActionId) -> &[StateId] {
        self.delta_dist.get(q, u)
    }

    #[inline]
    pub fn is_enabled(&self, q: StateId, u: ActionId) -> bool {
        !self.nor(q, u).is_empty()
    }

    /// `A(q)`: actions with a non-empty normal successor set.
    pub fn enabled(&self, q: StateId) -> impl Iterator<Item = ActionId> + '_ {
        (0..self.num_actions()).filter(move |&u| self.is_enabled(q, u))
    }

    pub fn delta_nor(&self) -> &TransitionMap {
        &self.delta_nor
    }

    pub fn delta_dist(&self) -> &TransitionMap {
        &self.delta_dist
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn color(&self, q: StateId) -> Color {
        self.colors[q]
    }

    pub fn max_color(&self) -> Color {
        self.colors.iter().copied().max().unwrap_or(0)
    }

    pub fn obstacle(&self) -> &[bool] {
        &self.obstacle
    }

    pub fn out_of_domain(&self) -> Option<StateId> {
        self.out_of_domain
    }

    pub fn grid(&self) -> Option<&GridParams> {
        self.grid.as_ref()
    }

    pub fn normal_edge_count(&self) -> usize {
        self.delta_nor.edge_count()
    }

    pub fn dist_edge_count(&self) -> usize {
        self.delta_dist.edge_count()
    }

    /// Same abstraction without any disturbance edges.
    pub fn without_disturbances(&self) -> Self {
        let mut out = self.clone();
        out.delta_dist = TransitionMap::empty(self.num_states(), self.num_actions());
        out
    }

    /// Same abstraction with the disturbance map rewritten by `f`.
    pub fn with_dist_rows<F>(&self, f: F) -> Self
    where
        F: FnMut(StateId, ActionId, &[StateId]) -> Vec<StateId>,
    {
        let mut out = self.clone();
        out.delta_dist = self.delta_dist.map_rows(f);
        out
    }

    pub(crate) fn check_state(&self, q: StateId) -> Result<()> {
        if q < self.num_states() {
            Ok(())
        } else {
            Err(Error::UnknownState {
                state: q,
                num_states: self.num_states(),
            })
        }
    }
}

/// Incremental construction of small abstractions by hand.
///
/// ```
/// use rescot_core::abstraction::BimodalBuilder;
/// let g = BimodalBuilder::new(2, 1)
///     .colors(&[2, 1])
///     .normal(0, 0, &[0])
///     .normal(1, 0, &[0])
///     .dist(0, 0, &[1])
///     .build()
///     .unwrap();
/// assert_eq!(g.dist(0, 0), &[1]);
/// ```
#[derive(Clone, Debug)]
pub struct BimodalBuilder {
    num_states: usize,
    num_actions: usize,
    nor: Vec<Vec<StateId>>,
    dist: Vec<Vec<StateId>>,
    colors: Vec<Color>,
    obstacle: Vec<bool>,
    out_of_domain: Option<StateId>,
}

impl BimodalBuilder {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            num_states,
            num_actions,
            nor: vec![Vec::new(); num_states * num_actions],
            dist: vec![Vec::new(); num_states * num_actions],
            colors: vec![0; num_states],
            obstacle: vec![false; num_states],
            out_of_domain: None,
        }
    }

    pub fn colors(mut self, colors: &[Color]) -> Self {
        self.colors = colors.to_vec();
        self
    }

    pub fn normal(mut self, q: StateId, u: ActionId, succ: &[StateId]) -> Self {
        self.nor[q * self.num_actions + u].extend_from_slice(succ);
        self
    }

    pub fn dist(mut self, q: StateId, u: ActionId, succ: &[StateId]) -> Self {
        self.dist[q * self.num_actions + u].extend_from_slice(succ);
        self
    }

    pub fn obstacle(mut self, q: StateId) -> Self {
        self.obstacle[q] = true;
        self
    }

    pub fn out_of_domain(mut self, q: StateId) -> Self {
        self.out_of_domain = Some(q);
        self
    }

    pub fn build(self) -> Result<BimodalAbstraction> {
        BimodalAbstraction::new(
            TransitionMap::from_rows(self.num_states, self.num_actions, self.nor),
            TransitionMap::from_rows(self.num_states, self.num_actions, self.dist),
            self.colors,
            self.obstacle,
            self.out_of_domain,
            None,
        )
    }
}
