use std::collections::HashMap;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::abstraction::BimodalAbstraction;
use crate::resilience::{ResilienceValue, ResilientController};
use crate::{Result, StateId};

/// Node of the closed-loop product: abstract state, active sub-controller
/// and spikes used so far.
type Node = (StateId, usize, u32);

/// Checks that `rc`, started at `q0`, wins every play with fewer than `k`
/// spikes.
///
/// The closed loop is unfolded into a finite graph whose nodes remember the
/// active sub-controller and the spikes used. The controller passes when no
/// reachable node lacks an action and no reachable cycle has an odd
/// maximal color. `Omega` admits any finite number of spikes: nodes drop the
/// counter and only cycles of normal edges count, since such a play ends on
/// normal edges. `OmegaPlusOne` allows spikes without limit.
pub fn verify_k_resilient(
    gamma: &BimodalAbstraction,
    rc: &ResilientController,
    q0: StateId,
    k: ResilienceValue,
) -> Result<bool> {
    gamma.check_state(q0)?;
    // Fewer than `cap` spikes may occur; `None` means no limit.
    let cap: Option<u32> = match k {
        ResilienceValue::Fin(0) => return Ok(true),
        ResilienceValue::Fin(k) => Some(k),
        ResilienceValue::Omega | ResilienceValue::OmegaPlusOne => None,
    };
    let spike_cycles = k == ResilienceValue::OmegaPlusOne;
    let Some(c0) = rc.select(q0) else {
        return Ok(false);
    };

    let mut graph: DiGraph<StateId, bool> = DiGraph::new();
    let mut index: HashMap<Node, NodeIndex> = HashMap::new();
    let mut stack = vec![(q0, c0, 0u32)];
    index.insert(stack[0], graph.add_node(q0));
    while let Some(node @ (q, c, s)) = stack.pop() {
        let from = index[&node];
        let Some(u) = rc.action(c, q) else {
            return Ok(false);
        };
        if !gamma.is_enabled(q, u) {
            return Ok(false);
        }
        let mut next: Vec<(Node, bool)> = gamma.nor(q, u).iter().map(|&t| ((t, c, s), false)).collect();
        let may_spike = cap.is_none_or(|cap| s + 1 < cap);
        if may_spike {
            for &t in gamma.dist(q, u) {
                let Some(c2) = rc.select(t) else {
                    return Ok(false);
                };
                next.push(((t, c2, if cap.is_some() { s + 1 } else { 0 }), true));
            }
        }
        for (m, spike) in next {
            let to = *index.entry(m).or_insert_with(|| {
                stack.push(m);
                graph.add_node(m.0)
            });
            graph.add_edge(from, to, spike);
        }
    }

    let colors: Vec<u32> = graph.node_weights().map(|&q| gamma.color(q)).collect();
    let mut odd: Vec<u32> = colors.iter().copied().filter(|c| c % 2 == 1).collect();
    odd.sort_unstable();
    odd.dedup();
    for c in odd {
        let sub = graph.filter_map(
            |i, &q| (colors[i.index()] <= c).then_some((q, colors[i.index()])),
            |_, &spike| (spike_cycles || !spike).then_some(()),
        );
        for scc in tarjan_scc(&sub) {
            let cyclic = scc.len() > 1 || sub.contains_edge(scc[0], scc[0]);
            if cyclic && scc.iter().any(|&v| sub[v].1 == c) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
