use std::sync::Arc;

use crate::abstraction::{BimodalAbstraction, Quantizer};
use crate::resilience::ResilientController;
use crate::{ActionId, Error, Result, StateId};

/// Continuous-state feedback law obtained from an abstract resilient
/// controller through the grid quantizer.
///
/// The law carries switching state, so each simulation needs its own clone.
#[derive(Clone, Debug)]
pub struct RefinedController {
    quantizer: Arc<Quantizer>,
    gamma: Arc<BimodalAbstraction>,
    controller: Arc<ResilientController>,
    active: Option<usize>,
    last: Option<(StateId, ActionId)>,
}

/// One control decision.
#[derive(Clone, Debug, PartialEq)]
pub struct Decision {
    pub cell: StateId,
    pub action: ActionId,
    pub input: Vec<f64>,
    pub sub_controller: usize,
    /// The observed cell was not a normal successor of the previous decision.
    pub spike_detected: bool,
}

impl RefinedController {
    pub fn new(
        quantizer: Arc<Quantizer>,
        gamma: Arc<BimodalAbstraction>,
        controller: Arc<ResilientController>,
    ) -> Result<Self> {
        if quantizer.num_states() != gamma.num_states() || controller.num_states != gamma.num_states() {
            return Err(Error::Format(format!(
                "state counts differ: grid {}, abstraction {}, controller {}",
                quantizer.num_states(),
                gamma.num_states(),
                controller.num_states
            )));
        }
        if quantizer.grid().input_values.len() != gamma.num_actions() {
            return Err(Error::Format("grid inputs and abstraction actions differ".into()));
        }
        Ok(Self {
            quantizer,
            gamma,
            controller,
            active: None,
            last: None,
        })
    }

    pub fn quantizer(&self) -> &Quantizer {
        &self.quantizer
    }

    pub fn abstraction(&self) -> &BimodalAbstraction {
        &self.gamma
    }

    /// Forgets the switching state.
    pub fn reset(&mut self) {
        self.active = None;
        self.last = None;
    }

    /// Whether `x` lies in a cell the controller can act from.
    pub fn in_domain(&self, x: &[f64]) -> bool {
        let q = self.quantizer.quantize(x);
        self.controller
            .select(q)
            .and_then(|c| self.controller.action(c, q))
            .is_some()
    }

    /// The action for `x`, switching sub-controller first if the cell of `x`
    /// reveals a spike since the previous decision.
    pub fn decide(&mut self, x: &[f64]) -> Result<Decision> {
        let q = self.quantizer.quantize(x);
        if q == self.quantizer.out_of_domain() {
            return Err(Error::OutOfControllerDomain {
                x: x.to_vec(),
                reason: "outside the state grid",
            });
        }
        let spike = self
            .last
            .is_some_and(|(p, u)| self.gamma.nor(p, u).binary_search(&q).is_err());
        if spike || self.active.is_none() {
            self.active = self.controller.select(q);
        }
        let mut pick = self.active.and_then(|c| self.controller.action(c, q).map(|u| (c, u)));
        if pick.is_none() {
            self.active = self.controller.select(q);
            pick = self.active.and_then(|c| self.controller.action(c, q).map(|u| (c, u)));
        }
        let Some((c, u)) = pick else {
            return Err(Error::OutOfControllerDomain {
                x: x.to_vec(),
                reason: "cell has resilience 0",
            });
        };
        self.last = Some((q, u));
        Ok(Decision {
            cell: q,
            action: u,
            input: self.quantizer.grid().input_values[u].clone(),
            sub_controller: c,
            spike_detected: spike,
        })
    }
}
