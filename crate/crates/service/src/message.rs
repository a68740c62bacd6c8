use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MessageType {
    Hello,
    Task,
    Response,
    Error,
}

fn default_priority() -> i64 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    pub source_id: String,
    pub target_id: String,
    pub message_type: MessageType,
    /// Text for hello traffic, a JSON object for bridge tasks.
    pub content: Value,
    #[serde(default = "default_priority")]
    pub priority: i64,
}

impl Message {
    pub fn new(source: &str, target: &str, message_type: MessageType, content: impl Into<Value>) -> Self {
        Message {
            source_id: source.to_string(),
            target_id: target.to_string(),
            message_type,
            content: content.into(),
            priority: 1,
        }
    }

    pub fn reply(&self, from: &str, message_type: MessageType, content: impl Into<Value>) -> Self {
        Message::new(from, &self.source_id, message_type, content)
    }
}

/// Dispatch order: higher priority first, arrival order within a level.
pub fn route_priority(mut queue: Vec<Message>) -> Vec<Message> {
    queue.sort_by_key(|m| std::cmp::Reverse(m.priority));
    queue
}
