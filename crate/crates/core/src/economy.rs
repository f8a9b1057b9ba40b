//! An exchange economy: a good space shared by a list of agents, each with a
//! valuation and an endowment of goods. Money endowments never affect
//! quasilinear demand, so they are not stored here; the file loader flags
//! them instead of silently dropping them.

use crate::num::IntVector;
use crate::valuation::{GoodSpace, Valuation};

#[derive(Clone, Debug)]
pub struct Agent {
    pub id: String,
    pub valuation: Valuation,
    pub endowment: IntVector,
}

#[derive(Clone, Debug)]
pub struct Economy {
    pub space: GoodSpace,
    pub agents: Vec<Agent>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EconomyError {
    #[error("an economy needs at least one agent")]
    NoAgents,
    #[error("agent {id:?} uses a different good space")]
    SpaceMismatch { id: String },
    #[error("agent {id:?} has an infeasible endowment {endowment}")]
    InfeasibleEndowment { id: String, endowment: String },
    #[error("duplicate agent id {id:?}")]
    DuplicateId { id: String },
}

impl Economy {
    pub fn new(space: GoodSpace, agents: Vec<Agent>) -> Result<Self, EconomyError> {
        if agents.is_empty() {
            return Err(EconomyError::NoAgents);
        }
        let mut ids = std::collections::BTreeSet::new();
        for a in &agents {
            if a.valuation.space() != &space {
                return Err(EconomyError::SpaceMismatch { id: a.id.clone() });
            }
            if a.valuation.eval(&a.endowment).is_err() {
                return Err(EconomyError::InfeasibleEndowment {
                    id: a.id.clone(),
                    endowment: a.endowment.to_string(),
                });
            }
            if !ids.insert(a.id.clone()) {
                return Err(EconomyError::DuplicateId { id: a.id.clone() });
            }
        }
        Ok(Economy { space, agents })
    }

    pub fn total_supply(&self) -> IntVector {
        let mut total = IntVector::zeros(self.space.len());
        for a in &self.agents {
            total = total.add(&a.endowment);
        }
        total
    }

    pub fn valuations(&self) -> Vec<Valuation> {
        self.agents.iter().map(|a| a.valuation.clone()).collect()
    }

    /// Same agents with different endowments; endowment feasibility is
    /// re-validated.
    pub fn with_endowments(&self, endowments: &[IntVector]) -> Result<Economy, EconomyError> {
        assert_eq!(endowments.len(), self.agents.len());
        let agents = self
            .agents
            .iter()
            .zip(endowments)
            .map(|(a, w)| Agent {
                id: a.id.clone(),
                valuation: a.valuation.clone(),
                endowment: w.clone(),
            })
            .collect();
        Economy::new(self.space.clone(), agents)
    }
}
