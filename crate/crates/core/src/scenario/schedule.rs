use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Scenario, ScenarioError};
use crate::clock::{parse_clock, Clock, Minute};

/// Task catalog. Codes are the strings used in CSV and JSON schedules.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Task {
    /// Flight touches down (marker).
    Land,
    /// Actor shows up at a location by their own means (marker).
    Arrive(String),
    Luggage,
    RentCar,
    /// Turkey goes in the oven; the entry spans the oven time.
    Turkey,
    SideDishes,
    /// First assignee drives, the rest ride along.
    Drive { from: String, to: String },
    Wait,
    /// Any other chore done at home.
    HomeTask,
    Dinner,
}

impl Task {
    /// Markers do not occupy the assignee.
    pub fn is_marker(&self) -> bool {
        matches!(self, Task::Land | Task::Arrive(_) | Task::Dinner)
    }

    /// Whether the entry keeps its assignees busy for its whole span.
    pub fn occupies(&self) -> bool {
        !self.is_marker() && *self != Task::Turkey
    }

    /// Where the assignees must be when the entry starts, if fixed.
    pub fn location<'a>(&'a self, scenario: &'a Scenario) -> Option<&'a str> {
        match self {
            Task::Land | Task::Luggage | Task::RentCar => Some(&scenario.airport),
            Task::Arrive(at) => Some(at),
            Task::Turkey | Task::SideDishes | Task::HomeTask | Task::Dinner => Some(&scenario.home),
            Task::Drive { from, .. } => Some(from),
            Task::Wait => None,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Task::Land => f.write_str("land"),
            Task::Arrive(at) => write!(f, "arrive:{at}"),
            Task::Luggage => f.write_str("luggage"),
            Task::RentCar => f.write_str("rent_car"),
            Task::Turkey => f.write_str("turkey"),
            Task::SideDishes => f.write_str("side_dishes"),
            Task::Drive { from, to } => write!(f, "drive:{from}:{to}"),
            Task::Wait => f.write_str("wait"),
            Task::HomeTask => f.write_str("home_task"),
            Task::Dinner => f.write_str("dinner"),
        }
    }
}

impl FromStr for Task {
    type Err = ScenarioError;

    fn from_str(code: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = code.trim().split(':').collect();
        Ok(match parts.as_slice() {
            ["land"] => Task::Land,
            ["arrive", at] if !at.is_empty() => Task::Arrive(at.to_string()),
            ["luggage"] => Task::Luggage,
            ["rent_car"] => Task::RentCar,
            ["turkey"] => Task::Turkey,
            ["side_dishes"] => Task::SideDishes,
            ["drive", from, to] if !from.is_empty() && !to.is_empty() => {
                Task::Drive { from: from.to_string(), to: to.to_string() }
            }
            ["wait"] => Task::Wait,
            ["home_task"] => Task::HomeTask,
            ["dinner"] => Task::Dinner,
            _ => return Err(ScenarioError::UnknownTask(code.to_string())),
        })
    }
}

impl Serialize for Task {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Task {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let code = String::deserialize(deserializer)?;
        code.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Entry {
    pub start: Minute,
    pub end: Minute,
    pub task: Task,
    pub assignees: Vec<String>,
}

impl Entry {
    pub fn new(start: Minute, end: Minute, task: Task, assignees: &[&str]) -> Self {
        Entry { start, end, task, assignees: assignees.iter().map(|s| s.to_string()).collect() }
    }

    /// Sort key: by start, markers and oven starts before other work at the
    /// same minute, then by end.
    pub(crate) fn order_key(&self) -> (Minute, u8, Minute, String) {
        let rank = if self.task.occupies() { 1 } else { 0 };
        (self.start, rank, self.end, self.task.to_string())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Schedule {
    pub entries: Vec<Entry>,
}

#[derive(Debug, serde::Deserialize)]
struct CsvRow {
    start: String,
    end: String,
    task: String,
    #[serde(default)]
    assignees: String,
}

impl Schedule {
    pub fn new(mut entries: Vec<Entry>) -> Self {
        entries.sort_by_key(Entry::order_key);
        Schedule { entries }
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// First entry with the given task.
    pub fn find(&self, task: &Task) -> Option<&Entry> {
        self.entries.iter().find(|e| &e.task == task)
    }

    /// Parses `start,end,task,assignees` rows. Times are `HH:MM` or minutes;
    /// assignees are `;`-separated and `all` expands to every scenario actor
    /// when a scenario is given. Lines starting with `#` are comments.
    pub fn from_csv(text: &str, scenario: Option<&Scenario>) -> Result<Self, ScenarioError> {
        let mut reader = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut entries = Vec::new();
        for row in reader.deserialize::<CsvRow>() {
            let row = row.map_err(|e| ScenarioError::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let clock = |text: &str| {
                parse_clock(text).ok_or_else(|| ScenarioError::InvalidEntry(format!("bad time `{text}`")))
            };
            let task: Task = row.task.parse()?;
            let mut assignees: Vec<String> =
                row.assignees.split(';').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
            if assignees == ["all"] {
                if let Some(s) = scenario {
                    assignees = s.actors.iter().map(|a| a.id.clone()).collect();
                }
            }
            entries.push(Entry { start: clock(&row.start)?, end: clock(&row.end)?, task, assignees });
        }
        Ok(Schedule { entries })
    }

    pub fn load_csv(path: &Path, scenario: Option<&Scenario>) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv(&text, scenario)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("start,end,task,assignees\n");
        for e in &self.entries {
            out.push_str(&format!("{},{},{},{}\n", Clock(e.start), Clock(e.end), e.task, e.assignees.join(";")));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        serde_json::from_str(text).map_err(|e| ScenarioError::Parse { line: e.line(), message: e.to_string() })
    }

    /// Loads CSV or JSON depending on the file extension.
    pub fn load(path: &Path, scenario: Option<&Scenario>) -> Result<Self, ScenarioError> {
        if path.extension().is_some_and(|ext| ext == "json") {
            let text =
                std::fs::read_to_string(path).map_err(|e| ScenarioError::Io(format!("{}: {e}", path.display())))?;
            Self::from_json(&text)
        } else {
            Self::load_csv(path, scenario)
        }
    }
}
