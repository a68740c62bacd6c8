use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use tokio::sync::{Mutex, RwLock};

use crate::agent::{Agent, AgentKind};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegistryError {
    #[error("Agent {0} already registered")]
    Duplicate(String),
    #[error("Agent {0} not found")]
    NotFound(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub agent_id: String,
    pub capabilities: Vec<String>,
    pub kind: AgentKind,
}

/// A registered agent plus the lock that serializes its message handling.
pub struct Slot {
    pub agent: Arc<dyn Agent>,
    pub inbox: Mutex<()>,
}

#[derive(Default)]
pub struct Registry {
    agents: RwLock<HashMap<String, Arc<Slot>>>,
}

impl Registry {
    pub fn new() -> Self {
        Self::default()
    }

    pub async fn register(&self, agent: Arc<dyn Agent>) -> Result<AgentRecord, RegistryError> {
        let mut agents = self.agents.write().await;
        let id = agent.id().to_string();
        if agents.contains_key(&id) {
            return Err(RegistryError::Duplicate(id));
        }
        let record = record_of(agent.as_ref());
        agents.insert(id, Arc::new(Slot { agent, inbox: Mutex::new(()) }));
        Ok(record)
    }

    pub async fn get(&self, id: &str) -> Result<Arc<Slot>, RegistryError> {
        self.agents.read().await.get(id).cloned().ok_or_else(|| RegistryError::NotFound(id.to_string()))
    }

    pub async fn record(&self, id: &str) -> Result<AgentRecord, RegistryError> {
        Ok(record_of(self.get(id).await?.agent.as_ref()))
    }

    pub async fn records(&self) -> Vec<AgentRecord> {
        let mut all: Vec<AgentRecord> = self.agents.read().await.values().map(|s| record_of(s.agent.as_ref())).collect();
        all.sort_by(|a, b| a.agent_id.cmp(&b.agent_id));
        all
    }

    pub async fn len(&self) -> usize {
        self.agents.read().await.len()
    }

    pub async fn is_empty(&self) -> bool {
        self.len().await == 0
    }
}

fn record_of(agent: &dyn Agent) -> AgentRecord {
    AgentRecord { agent_id: agent.id().to_string(), capabilities: agent.capabilities().to_vec(), kind: agent.kind() }
}
