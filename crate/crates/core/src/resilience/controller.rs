use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::ranking::{finite_resilience, FiniteResilience, Mode};
use super::value::{ResilienceMap, ResilienceValue};
use crate::abstraction::BimodalAbstraction;
use crate::games::{solve_parity, solve_parity_and_safety, Arena};
use crate::{ActionId, Error, Result, StateId};

pub const CONTROLLER_FORMAT: &str = "rescot-controller";
pub const CONTROLLER_VERSION: u32 = 1;
/// Tag of the switching rule: keep the active sub-controller along normal
/// transitions, re-select from the current state after every spike.
pub const SWITCHING_RULE: &str = "reselect-on-spike/1";

/// Where a sub-controller comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "level", rename_all = "kebab-case")]
pub enum SubControllerKind {
    /// Wins while avoiding every state and action ranked at most `level`.
    Level(u32),
    /// Wins while avoiding every ranked state and action.
    Omega,
    /// Wins the game in which the environment may always spike.
    OmegaPlusOne,
    /// Plain spike-free parity controller.
    SpikeFree,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubController {
    pub kind: SubControllerKind,
    pub actions: Vec<Option<ActionId>>,
}

/// A family of memoryless controllers with a selector that picks which one
/// is in force; the choice is renewed after every spike.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResilientController {
    pub format: String,
    pub version: u32,
    pub switching_rule: String,
    pub mode: Mode,
    pub num_states: usize,
    pub num_actions: usize,
    pub sub_controllers: Vec<SubController>,
    pub selector: Vec<Option<usize>>,
}

impl ResilientController {
    pub fn select(&self, q: StateId) -> Option<usize> {
        self.selector.get(q).copied().flatten()
    }

    pub fn action(&self, sub: usize, q: StateId) -> Option<ActionId> {
        self.sub_controllers.get(sub)?.actions.get(q).copied().flatten()
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let c: Self = serde_json::from_reader(r)?;
        if c.format != CONTROLLER_FORMAT || c.version != CONTROLLER_VERSION {
            return Err(Error::Format(format!(
                "expected {CONTROLLER_FORMAT} version {CONTROLLER_VERSION}, found {} version {}",
                c.format, c.version
            )));
        }
        if c.switching_rule != SWITCHING_RULE {
            return Err(Error::Format(format!("unknown switching rule {:?}", c.switching_rule)));
        }
        if c.selector.len() != c.num_states
            || c.selector.iter().flatten().any(|&i| i >= c.sub_controllers.len())
            || c.sub_controllers.iter().any(|s| {
                s.actions.len() != c.num_states || s.actions.iter().flatten().any(|&u| u >= c.num_actions)
            })
        {
            return Err(Error::Format("controller shape does not match its header".into()));
        }
        Ok(c)
    }
}

/// Resilience values of all states together with the stitched controller.
#[derive(Clone, Debug)]
pub struct Classification {
    pub map: ResilienceMap,
    pub controller: ResilientController,
    pub finite: FiniteResilience,
}

/// Finite values from the ranking fixed point, `ω + 1` on the winning
/// region of the game in which the environment may always spike, `ω` on the
/// rest.
pub fn classify(gamma: &BimodalAbstraction, mode: Mode) -> Result<Classification> {
    let n = gamma.num_states();
    let finite = finite_resilience(gamma, mode)?;
    let union = solve_parity(&Arena::union(gamma));
    let mut values = Vec::with_capacity(n);
    for q in 0..n {
        let v = match (finite.ranking.get(q), union.winning[q]) {
            (Some(_), true) if mode == Mode::Reference => {
                return Err(Error::Inconsistent(format!(
                    "state {q} is finitely ranked but wins under unbounded spikes"
                )))
            }
            (Some(k), _) => ResilienceValue::Fin(k),
            (None, true) => ResilienceValue::OmegaPlusOne,
            (None, false) => ResilienceValue::Omega,
        };
        values.push(v);
    }
    let map = ResilienceMap::new(values);
    let controller = match mode {
        Mode::Reference => stitch(gamma, &map, &finite, union.controller)?,
        Mode::PaperLiteral => spike_free_controller(gamma, &map),
    };
    Ok(Classification {
        map,
        controller,
        finite,
    })
}

fn header(gamma: &BimodalAbstraction, mode: Mode, subs: Vec<SubController>, selector: Vec<Option<usize>>) -> ResilientController {
    ResilientController {
        format: CONTROLLER_FORMAT.into(),
        version: CONTROLLER_VERSION,
        switching_rule: SWITCHING_RULE.into(),
        mode,
        num_states: gamma.num_states(),
        num_actions: gamma.num_actions(),
        sub_controllers: subs,
        selector,
    }
}

fn stitch(
    gamma: &BimodalAbstraction,
    map: &ResilienceMap,
    finite: &FiniteResilience,
    union_controller: Vec<Option<ActionId>>,
) -> Result<ResilientController> {
    let r = &finite.ranking;
    let mut subs = Vec::new();
    let mut level_index = std::collections::BTreeMap::new();
    for k in r.image() {
        if k == 0 {
            continue;
        }
        let actions = finite.levels.get(&(k - 1)).ok_or_else(|| {
            Error::Inconsistent(format!("rank {k} present but level {} was never solved", k - 1))
        })?;
        level_index.insert(k, subs.len());
        subs.push(SubController {
            kind: SubControllerKind::Level(k - 1),
            actions: actions.clone(),
        });
    }

    let needs_omega = map.values().contains(&ResilienceValue::Omega);
    let omega_index = if needs_omega {
        let arena = Arena::spike_free(gamma).restrict(|q, u, _| r.action_rank(q, u).is_none());
        let avoid: Vec<bool> = r.states().iter().map(Option::is_some).collect();
        subs.push(SubController {
            kind: SubControllerKind::Omega,
            actions: solve_parity_and_safety(&arena, &avoid).controller,
        });
        Some(subs.len() - 1)
    } else {
        None
    };
    let needs_top = map.values().contains(&ResilienceValue::OmegaPlusOne);
    let top_index = if needs_top {
        subs.push(SubController {
            kind: SubControllerKind::OmegaPlusOne,
            actions: union_controller,
        });
        Some(subs.len() - 1)
    } else {
        None
    };

    let selector: Vec<Option<usize>> = map
        .values()
        .iter()
        .map(|v| match v {
            ResilienceValue::Fin(0) => None,
            ResilienceValue::Fin(k) => level_index.get(k).copied(),
            ResilienceValue::Omega => omega_index,
            ResilienceValue::OmegaPlusOne => top_index,
        })
        .collect();
    for (q, s) in selector.iter().enumerate() {
        if map.get(q) != ResilienceValue::Fin(0) && s.and_then(|i| subs[i].actions[q]).is_none() {
            return Err(Error::Inconsistent(format!(
                "no sub-controller action for state {q} of resilience {}",
                map.get(q)
            )));
        }
    }
    Ok(header(gamma, Mode::Reference, subs, selector))
}

fn spike_free_controller(gamma: &BimodalAbstraction, map: &ResilienceMap) -> ResilientController {
    let actions = solve_parity(&Arena::spike_free(gamma)).controller;
    let selector = (0..gamma.num_states())
        .map(|q| (map.get(q) != ResilienceValue::Fin(0) && actions[q].is_some()).then_some(0))
        .collect();
    let subs = vec![SubController {
        kind: SubControllerKind::SpikeFree,
        actions,
    }];
    header(gamma, Mode::PaperLiteral, subs, selector)
}
