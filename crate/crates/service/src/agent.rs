use std::sync::Arc;

use maci_core::planner::{plan, PlanningProblem};
use maci_core::scenario::{check_schedule, metrics, Scenario, Schedule};
use maci_core::tsp::{format_tour, solve, Algorithm, DistanceMatrix};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::message::{Message, MessageType};

pub const UNSUPPORTED: &str = "Unsupported message type";

pub trait TextGenerator: Send + Sync {
    fn generate(&self, prompt: &str) -> String;
}

/// Stand-in for a language model; always answers the same.
#[derive(Debug, Clone, Copy, Default)]
pub struct MockGenerator;

impl TextGenerator for MockGenerator {
    fn generate(&self, _prompt: &str) -> String {
        "mock response".to_string()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    #[default]
    Hello,
    Bridge,
}

pub trait Agent: Send + Sync {
    fn id(&self) -> &str;
    fn capabilities(&self) -> &[String];
    fn kind(&self) -> AgentKind;
    fn process(&self, message: &Message) -> Message;

    fn hello(&self) -> Message {
        Message::new(
            self.id(),
            "*",
            MessageType::Hello,
            format!("Agent {} ready with capabilities: {:?}", self.id(), self.capabilities()),
        )
    }
}

fn greet(agent: &dyn Agent, message: &Message) -> Message {
    message.reply(
        agent.id(),
        MessageType::Response,
        format!("Hello {}, I am {}", message.source_id, agent.id()),
    )
}

pub struct HelloAgent {
    id: String,
    capabilities: Vec<String>,
    generator: Arc<dyn TextGenerator>,
}

impl HelloAgent {
    pub fn new(id: &str, capabilities: Vec<String>, generator: Arc<dyn TextGenerator>) -> Self {
        HelloAgent { id: id.to_string(), capabilities, generator }
    }

    pub fn generator(&self) -> &dyn TextGenerator {
        self.generator.as_ref()
    }
}

impl Agent for HelloAgent {
    fn id(&self) -> &str {
        &self.id
    }

    fn capabilities(&self) -> &[String] {
        &self.capabilities
    }

    fn kind(&self) -> AgentKind {
        AgentKind::Hello
    }

    fn process(&self, message: &Message) -> Message {
        match message.message_type {
            MessageType::Hello => greet(self, message),
            _ => message.reply(&self.id, MessageType::Error, UNSUPPORTED),
        }
    }
}

/// Answers hello like any agent and runs engine operations for task
/// messages whose content is `{"op": "plan" | "check" | "tsp" | "generate", ...}`.
pub struct BridgeAgent {
    id: String,
    capabilities: Vec<String>,
    generator: Arc<dyn TextGenerator>,
}

impl BridgeAgent {
    pub fn new(id: &str, capabilities: Vec<String>, generator: Arc<dyn TextGenerator>) -> Self {
        BridgeAgent { id: id.to_string(), capabilities, generator }
    }

    fn run(&self, task: &Value) -> Result<Value, String> {
        let op = task.get("op").and_then(Value::as_str).ok_or("task content needs an `op` field")?;
        match op {
            "plan" => {
                let scenario = scenario_arg(task)?;
                let out = plan(&PlanningProblem::from_scenario(&scenario)).map_err(|e| e.to_string())?;
                Ok(json!({
                    "assignment": out.assignment(),
                    "feasible": out.report.is_feasible(),
                    "hard_violations": out.report.hard_count(),
                    "metrics": out.metrics,
                    "schedule": out.schedule,
                }))
            }
            "check" => {
                let scenario = scenario_arg(task)?;
                let csv = task.get("schedule").and_then(Value::as_str).ok_or("check needs a `schedule` CSV string")?;
                let schedule = Schedule::from_csv(csv, Some(&scenario)).map_err(|e| e.to_string())?;
                let report = check_schedule(&scenario, &schedule).map_err(|e| e.to_string())?;
                let m = metrics(&scenario, &schedule).map_err(|e| e.to_string())?;
                Ok(json!({
                    "feasible": report.is_feasible(),
                    "hard_violations": report.hard_count(),
                    "soft_violations": report.soft_count(),
                    "violations": report.violations,
                    "metrics": m,
                }))
            }
            "tsp" => {
                let rows: Vec<Vec<u64>> = serde_json::from_value(task.get("matrix").cloned().unwrap_or(Value::Null))
                    .map_err(|e| format!("bad `matrix`: {e}"))?;
                let matrix = DistanceMatrix::from_rows(rows).map_err(|e| e.to_string())?;
                let algo: Algorithm = task
                    .get("algo")
                    .and_then(Value::as_str)
                    .unwrap_or("hk")
                    .parse()
                    .map_err(|e: maci_core::tsp::TspError| e.to_string())?;
                let seed = task.get("seed").and_then(Value::as_u64).unwrap_or(0);
                let solution = solve(&matrix, algo, 0, seed).map_err(|e| e.to_string())?;
                Ok(json!({
                    "length": solution.length,
                    "tour": format_tour(&solution.tour),
                    "evaluations": solution.evaluations,
                }))
            }
            "generate" => {
                let prompt = task.get("prompt").and_then(Value::as_str).unwrap_or_default();
                Ok(json!({ "text": self.generator.generate(prompt) }))
            }
            other => Err(format!("unknown op `{other}`")),
        }
    }
}

fn scenario_arg(task: &Value) -> Result<Scenario, String> {
    match task.get("scenario") {
        None => Scenario::load("builtin:augmented").map_err(|e| e.to_string()),
        Some(Value::String(name)) => {
            let source = if name.starts_with("builtin:") { name.clone() } else { format!("builtin:{name}") };
            Scenario::load(&source).map_err(|e| e.to_string())
        }
        Some(obj) => Scenario::from_json(&obj.to_string()).map_err(|e| e.to_string()),
    }
}

impl Agent for BridgeAgent {
    fn id(&self) -> &str {
        &self.id
    }

    fn capabilities(&self) -> &[String] {
        &self.capabilities
    }

    fn kind(&self) -> AgentKind {
        AgentKind::Bridge
    }

    fn process(&self, message: &Message) -> Message {
        match message.message_type {
            MessageType::Hello => greet(self, message),
            MessageType::Task => match self.run(&message.content) {
                Ok(result) => message.reply(&self.id, MessageType::Response, result),
                Err(e) => message.reply(&self.id, MessageType::Error, e),
            },
            _ => message.reply(&self.id, MessageType::Error, UNSUPPORTED),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mock() -> Arc<dyn TextGenerator> {
        Arc::new(MockGenerator)
    }

    #[test]
    fn hello_agent_greets_and_rejects_tasks() {
        let agent = HelloAgent::new("agent1", vec!["hello".into()], mock());
        let reply = agent.process(&Message::new("test", "agent1", MessageType::Hello, "Hello!"));
        assert_eq!(reply.message_type, MessageType::Response);
        assert_eq!(reply.content, "Hello test, I am agent1");
        assert_eq!((reply.source_id.as_str(), reply.target_id.as_str()), ("agent1", "test"));
        let reply = agent.process(&Message::new("test", "agent1", MessageType::Task, "do it"));
        assert_eq!(reply.message_type, MessageType::Error);
        assert_eq!(reply.content, UNSUPPORTED);
        assert!(agent.hello().content.as_str().unwrap().contains("agent1"));
    }

    #[test]
    fn mock_generator_is_fixed() {
        assert_eq!(MockGenerator.generate("anything"), "mock response");
    }

    #[test]
    fn bridge_runs_engine_operations() {
        let bridge = BridgeAgent::new("engine", vec![], mock());
        let task = |content: Value| bridge.process(&Message::new("test", "engine", MessageType::Task, content));

        let reply = task(json!({"op": "tsp", "matrix": [[0, 1, 2], [1, 0, 3], [2, 3, 0]], "algo": "brute"}));
        assert_eq!(reply.message_type, MessageType::Response);
        assert_eq!(reply.content["length"], 6);

        let reply = task(json!({"op": "plan", "scenario": "baseline"}));
        assert_eq!(reply.content["feasible"], true, "{}", reply.content);

        let reply = task(json!({"op": "generate", "prompt": "hi"}));
        assert_eq!(reply.content["text"], "mock response");

        let reply = task(json!({"op": "fly"}));
        assert_eq!(reply.message_type, MessageType::Error);
        let reply = task(json!({"op": "tsp", "matrix": "nope"}));
        assert_eq!(reply.message_type, MessageType::Error);
    }
}
