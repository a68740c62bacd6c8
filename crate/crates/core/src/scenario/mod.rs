//! Household scheduling scenarios: facts, schedules, the R1-R12 rule checker,
//! a greedy dispatcher and schedule metrics.

mod check;
mod greedy;
mod metrics;
mod schedule;

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::clock::{hm, Minute};

pub use check::{check_schedule, Violation, ViolationReport};
pub use greedy::{greedy_schedule, RoleMapping, ScheduleFailure, ROLE_AIRPORT_DRIVER, ROLE_COOK, ROLE_LOCAL_DRIVER, ROLE_SUPERVISOR};
pub use metrics::{ipc_score, metrics, ScheduleMetrics};
pub use schedule::{Entry, Schedule, Task};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unknown task code `{0}`")]
    UnknownTask(String),
    #[error("unknown actor `{0}`")]
    UnknownActor(String),
    #[error("unknown location `{0}`")]
    UnknownLocation(String),
    #[error("invalid entry: {0}")]
    InvalidEntry(String),
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("io error: {0}")]
    Io(String),
}

/// An actor driving in from elsewhere who can be redirected if the plan is
/// made before they set off.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnRoute {
    pub from: String,
    pub depart: Minute,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Actor {
    pub id: String,
    #[serde(default)]
    pub name: String,
    pub can_drive: bool,
    #[serde(default)]
    pub can_cook: bool,
    /// Must rent a car (after landing) before driving.
    #[serde(default)]
    pub rents_car: bool,
    /// Where the actor is first available. Ignored for actors with a flight.
    #[serde(default)]
    pub start_location: String,
    #[serde(default)]
    pub available_from: Minute,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub en_route: Option<EnRoute>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TravelLeg {
    pub from: String,
    pub to: String,
    pub minutes: Minute,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flight {
    pub actor: String,
    pub lands_at: Minute,
}

/// Someone waiting at a fixed place to be driven home.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pickup {
    pub passenger: String,
    pub location: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preference {
    /// `passenger` would rather be driven by `driver`.
    PreferredDriver { passenger: String, driver: String, priority: u8 },
    /// `a` and `b` would rather not cook at the same time.
    SeparateCooking { a: String, b: String, priority: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub actors: Vec<Actor>,
    pub locations: Vec<String>,
    #[serde(default = "default_home")]
    pub home: String,
    #[serde(default = "default_airport")]
    pub airport: String,
    pub travel: Vec<TravelLeg>,
    #[serde(default)]
    pub flights: Vec<Flight>,
    /// Oven time for the turkey; `None` when there is no turkey to cook.
    #[serde(default)]
    pub turkey_minutes: Option<Minute>,
    #[serde(default)]
    pub sides_minutes: Option<Minute>,
    #[serde(default)]
    pub pickups: Vec<Pickup>,
    pub deadline: Minute,
    /// Earliest minute any action may be scheduled (plan or detection time).
    pub start: Minute,
    #[serde(default)]
    pub luggage_minutes: Minute,
    #[serde(default)]
    pub rental_minutes: Minute,
    #[serde(default)]
    pub augmented: bool,
    #[serde(default)]
    pub preferences: Vec<Preference>,
}

fn default_home() -> String {
    "home".into()
}

fn default_airport() -> String {
    "airport".into()
}

impl Scenario {
    pub fn actor(&self, id: &str) -> Option<&Actor> {
        self.actors.iter().find(|a| a.id == id)
    }

    pub fn flight(&self, actor: &str) -> Option<&Flight> {
        self.flights.iter().find(|f| f.actor == actor)
    }

    /// Travel time between two locations (symmetric), zero for the same place.
    pub fn travel(&self, from: &str, to: &str) -> Option<Minute> {
        if from == to {
            return Some(0);
        }
        self.travel
            .iter()
            .find(|l| (l.from == from && l.to == to) || (l.from == to && l.to == from))
            .map(|l| l.minutes)
    }

    /// Where and from when an actor is present without any scheduled travel.
    pub fn presence(&self, actor: &Actor) -> (String, Minute) {
        match self.flight(&actor.id) {
            Some(f) => (self.airport.clone(), f.lands_at),
            None => (actor.start_location.clone(), actor.available_from),
        }
    }

    /// Minute from which a flier may leave the airport with their bags.
    pub fn ready_after_landing(&self, actor: &str) -> Option<Minute> {
        self.flight(actor).map(|f| f.lands_at + self.luggage_minutes)
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let locations: BTreeSet<&str> = self.locations.iter().map(String::as_str).collect();
        let known = |loc: &str| {
            if locations.contains(loc) {
                Ok(())
            } else {
                Err(ScenarioError::UnknownLocation(loc.to_string()))
            }
        };
        if self.actors.is_empty() {
            return Ok(());
        }
        known(&self.home)?;
        let mut ids = BTreeSet::new();
        for actor in &self.actors {
            if !ids.insert(actor.id.as_str()) {
                return Err(ScenarioError::Invalid(format!("duplicate actor `{}`", actor.id)));
            }
            if self.flight(&actor.id).is_none() {
                known(&actor.start_location)?;
            }
            if let Some(route) = &actor.en_route {
                known(&route.from)?;
            }
        }
        for leg in &self.travel {
            known(&leg.from)?;
            known(&leg.to)?;
            if leg.minutes < 0 {
                return Err(ScenarioError::Invalid(format!("negative travel time {}-{}", leg.from, leg.to)));
            }
        }
        for f in &self.flights {
            if self.actor(&f.actor).is_none() {
                return Err(ScenarioError::UnknownActor(f.actor.clone()));
            }
            known(&self.airport)?;
        }
        for p in &self.pickups {
            if self.actor(&p.passenger).is_none() {
                return Err(ScenarioError::UnknownActor(p.passenger.clone()));
            }
            known(&p.location)?;
        }
        if self.deadline < self.start {
            return Err(ScenarioError::Invalid("deadline precedes start".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let scenario: Scenario = serde_json::from_str(text)
            .map_err(|e| ScenarioError::Parse { line: e.line(), message: e.to_string() })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Loads a scenario file, or a built-in when `source` is `builtin:<name>`
    /// (see [`builtin_by_name`]).
    pub fn load(source: &str) -> Result<Self, ScenarioError> {
        if let Some(name) = source.strip_prefix("builtin:") {
            return builtin_by_name(name).ok_or_else(|| ScenarioError::Invalid(format!("unknown builtin `{name}`")));
        }
        let text = std::fs::read_to_string(Path::new(source)).map_err(|e| ScenarioError::Io(format!("{source}: {e}")))?;
        Self::from_json(&text)
    }

    /// Replaces a landing time.
    pub fn delay_flight(&mut self, actor: &str, lands_at: Minute) -> Result<(), ScenarioError> {
        let flight = self
            .flights
            .iter_mut()
            .find(|f| f.actor == actor)
            .ok_or_else(|| ScenarioError::UnknownActor(actor.to_string()))?;
        flight.lands_at = lands_at;
        Ok(())
    }

    /// A scenario with no actors, locations or tasks.
    pub fn empty() -> Self {
        Scenario {
            name: "empty".into(),
            actors: Vec::new(),
            locations: Vec::new(),
            home: default_home(),
            airport: default_airport(),
            travel: Vec::new(),
            flights: Vec::new(),
            turkey_minutes: None,
            sides_minutes: None,
            pickups: Vec::new(),
            deadline: hm(18, 0),
            start: hm(10, 0),
            luggage_minutes: 0,
            rental_minutes: 0,
            augmented: false,
            preferences: Vec::new(),
        }
    }
}

/// The Thanksgiving reunion.
///
/// Sarah hosts at home with dinner at 18:00. James lands at 13:00 and must
/// rent a car; Emily lands at 14:30 and cannot drive; Michael drives in from
/// New York and is home at 15:00; Grandma waits at her house. With
/// `augmented`, luggage and rental take 30 minutes each and the household
/// preferences apply. With `delayed`, James lands at 16:00 and the delay is
/// known at 10:00.
pub fn builtin_thanksgiving(augmented: bool, delayed: bool) -> Scenario {
    let person = |id: &str, name: &str, can_drive: bool, can_cook: bool, at: &str, from: Minute| Actor {
        id: id.into(),
        name: name.into(),
        can_drive,
        can_cook,
        rents_car: false,
        start_location: at.into(),
        available_from: from,
        en_route: None,
    };
    let leg = |from: &str, to: &str, minutes: Minute| TravelLeg { from: from.into(), to: to.into(), minutes };

    let mut james = person("james", "James", true, false, "airport", 0);
    james.rents_car = true;
    let mut michael = person("michael", "Michael", true, false, "home", hm(15, 0));
    michael.en_route = Some(EnRoute { from: "ny".into(), depart: hm(10, 0) });

    let mut name = String::from("thanksgiving");
    if augmented {
        name.push_str("-augmented");
    }
    if delayed {
        name.push_str("-delayed");
    }
    Scenario {
        name,
        actors: vec![
            person("sarah", "Sarah", true, true, "home", 0),
            james,
            person("emily", "Emily", false, false, "airport", 0),
            michael,
            person("grandma", "Grandma", false, true, "grandma", 0),
        ],
        locations: ["home", "airport", "grandma", "ny"].map(String::from).to_vec(),
        home: default_home(),
        airport: default_airport(),
        travel: vec![
            leg("home", "airport", 60),
            leg("airport", "grandma", 60),
            leg("home", "grandma", 30),
            leg("ny", "home", 300),
            leg("ny", "airport", 300),
            leg("ny", "grandma", 300),
        ],
        flights: vec![
            Flight { actor: "james".into(), lands_at: if delayed { hm(16, 0) } else { hm(13, 0) } },
            Flight { actor: "emily".into(), lands_at: hm(14, 30) },
        ],
        turkey_minutes: Some(240),
        sides_minutes: Some(120),
        pickups: vec![Pickup { passenger: "grandma".into(), location: "grandma".into() }],
        deadline: hm(18, 0),
        start: hm(10, 0),
        luggage_minutes: if augmented { 30 } else { 0 },
        rental_minutes: if augmented { 30 } else { 0 },
        augmented,
        preferences: if augmented {
            vec![
                Preference::PreferredDriver { passenger: "grandma".into(), driver: "michael".into(), priority: 2 },
                Preference::SeparateCooking { a: "sarah".into(), b: "grandma".into(), priority: 1 },
            ]
        } else {
            Vec::new()
        },
    }
}

/// `baseline`, `augmented`, `delayed` and `delayed-augmented`.
pub fn builtin_by_name(name: &str) -> Option<Scenario> {
    match name {
        "baseline" => Some(builtin_thanksgiving(false, false)),
        "augmented" => Some(builtin_thanksgiving(true, false)),
        "delayed" => Some(builtin_thanksgiving(false, true)),
        "delayed-augmented" => Some(builtin_thanksgiving(true, true)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_facts() {
        let s = builtin_thanksgiving(false, false);
        s.validate().unwrap();
        assert_eq!(s.flight("james").unwrap().lands_at, hm(13, 0));
        assert_eq!(s.flight("emily").unwrap().lands_at, hm(14, 30));
        assert_eq!(s.presence(s.actor("michael").unwrap()), ("home".to_string(), hm(15, 0)));
        assert_eq!(s.travel("airport", "home"), Some(60));
        assert_eq!(s.travel("grandma", "home"), Some(30));
        assert_eq!(s.deadline, hm(18, 0));
        let d = builtin_thanksgiving(true, true);
        assert_eq!(d.flight("james").unwrap().lands_at, hm(16, 0));
        assert_eq!(d.start, hm(10, 0));
        assert_eq!(d.ready_after_landing("emily"), Some(hm(15, 0)));
    }

    #[test]
    fn json_round_trip() {
        let s = builtin_thanksgiving(true, false);
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
    }

    #[test]
    fn malformed_json_reports_a_line() {
        let err = Scenario::from_json("{\n  \"name\": \"x\",\n  \"actors\": [,]\n}").unwrap_err();
        assert!(matches!(err, ScenarioError::Parse { line: 3, .. }), "{err:?}");
    }

    #[test]
    fn unknown_builtin_is_an_error() {
        assert!(Scenario::load("builtin:nope").is_err());
        assert!(Scenario::load("builtin:augmented").is_ok());
    }
}
