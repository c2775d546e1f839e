//! Versioned JSON dump of a bimodal abstraction.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{BimodalAbstraction, GridParams, TransitionMap};
use crate::{Color, Error, Result, StateId};

pub const ABSTRACTION_FORMAT: &str = "rescot-abstraction";
pub const ABSTRACTION_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct AbstractionFile {
    format: String,
    version: u32,
    num_states: usize,
    num_actions: usize,
    out_of_domain: Option<StateId>,
    grid: Option<GridParams>,
    colors: Vec<Color>,
    obstacles: Vec<StateId>,
    delta_nor: TransitionMap,
    delta_dist: TransitionMap,
}

impl BimodalAbstraction {
    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        let file = AbstractionFile {
            format: ABSTRACTION_FORMAT.into(),
            version: ABSTRACTION_VERSION,
            num_states: self.num_states(),
            num_actions: self.num_actions(),
            out_of_domain: self.out_of_domain,
            grid: self.grid.clone(),
            colors: self.colors.clone(),
            obstacles: (0..self.num_states()).filter(|&q| self.obstacle[q]).collect(),
            delta_nor: self.delta_nor.clone(),
            delta_dist: self.delta_dist.clone(),
        };
        serde_json::to_writer(&mut w, &file)?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let file: AbstractionFile = serde_json::from_reader(r)?;
        if file.format != ABSTRACTION_FORMAT {
            return Err(Error::Format(format!("expected format {ABSTRACTION_FORMAT:?}, found {:?}", file.format)));
        }
        if file.version != ABSTRACTION_VERSION {
            return Err(Error::Format(format!(
                "unsupported abstraction version {} (expected {ABSTRACTION_VERSION})",
                file.version
            )));
        }
        if file.delta_nor.num_states() != file.num_states || file.delta_nor.num_actions() != file.num_actions {
            return Err(Error::Format("header does not match transition maps".into()));
        }
        let mut obstacle = vec![false; file.num_states];
        for q in file.obstacles {
            *obstacle
                .get_mut(q)
                .ok_or_else(|| Error::Format(format!("obstacle state {q} out of range")))? = true;
        }
        BimodalAbstraction::new(
            file.delta_nor,
            file.delta_dist,
            file.colors,
            obstacle,
            file.out_of_domain,
            file.grid,
        )
    }
}
