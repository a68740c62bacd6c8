// Greedy dispatcher.
//
// Work is placed in priority order: oven supervision and cooking windows
// first (cooking is timed to finish at the deadline), then airport pickups in
// order of readiness, then local pickups, then everyone else's own way home.
// Each trip leaves as late as possible while still arriving when the
// passenger is ready, and is pushed past any window in which its driver must
// stay home. The result is run through the rule checker before it is
// returned, so a returned schedule never breaks a hard rule.

use std::collections::BTreeMap;

use thiserror::Error;

use super::check::check_schedule;
use super::{EnRoute, Entry, Scenario, ScenarioError, Schedule, Task, ViolationReport};
use crate::clock::{Clock, Minute};
use crate::runtime::{generate_solution, Candidate};

pub const ROLE_COOK: &str = "cook";
pub const ROLE_AIRPORT_DRIVER: &str = "driver1";
pub const ROLE_LOCAL_DRIVER: &str = "driver2";
pub const ROLE_SUPERVISOR: &str = "supervisor";

/// Role id to actor id.
pub type RoleMapping = BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScheduleFailure {
    #[error("role `{0}` is not assigned")]
    MissingRole(String),
    #[error("{person} cannot act as {role}: {reason}")]
    Unqualified { role: String, person: String, reason: String },
    #[error("no feasible slot: {0}")]
    NoSlot(String),
    #[error("schedule breaks hard rules:\n{}", .0.render())]
    Violations(ViolationReport),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

#[derive(Debug, Clone)]
struct ActorState {
    location: String,
    free_at: Minute,
    /// Set while an en-route actor has not yet been given a route.
    pending: Option<EnRoute>,
    /// Closed windows `[from, to]` during which the actor must be home.
    stay_home: Vec<(Minute, Minute)>,
    home_since: Option<Minute>,
}

#[derive(Debug, Clone, Copy)]
struct Trip {
    depart: Minute,
    arrive: Minute,
    pickup: Minute,
    back: Minute,
}

struct Dispatcher<'a> {
    scenario: &'a Scenario,
    states: BTreeMap<String, ActorState>,
    entries: Vec<Entry>,
}

impl<'a> Dispatcher<'a> {
    fn new(scenario: &'a Scenario) -> Self {
        let mut states = BTreeMap::new();
        let mut entries = Vec::new();
        for actor in &scenario.actors {
            let (mut location, mut free_at) = scenario.presence(actor);
            if let Some(flight) = scenario.flight(&actor.id) {
                entries.push(Entry::new(flight.lands_at, flight.lands_at, Task::Land, &[&actor.id]));
                let bags = flight.lands_at + scenario.luggage_minutes;
                if scenario.luggage_minutes > 0 {
                    entries.push(Entry::new(flight.lands_at, bags, Task::Luggage, &[&actor.id]));
                }
                free_at = bags;
                if actor.rents_car {
                    free_at = bags + scenario.rental_minutes;
                    entries.push(Entry::new(bags, free_at, Task::RentCar, &[&actor.id]));
                }
                location = scenario.airport.clone();
            }
            let home_since = (location == scenario.home).then_some(free_at);
            states.insert(
                actor.id.clone(),
                ActorState {
                    location,
                    free_at: free_at.max(scenario.start),
                    pending: actor.en_route.clone().filter(|r| r.depart >= scenario.start),
                    stay_home: Vec::new(),
                    home_since,
                },
            );
        }
        Dispatcher { scenario, states, entries }
    }

    fn state(&self, id: &str) -> &ActorState {
        &self.states[id]
    }

    /// Earliest trip from `from` (free at `free_at`) that collects someone at
    /// `pickup` once they are ready and brings them home without breaking the
    /// driver's stay-home windows.
    fn plan_trip(&self, driver: &str, from: &str, free_at: Minute, pickup: &str, ready: Minute) -> Option<Trip> {
        let s = self.scenario;
        let outbound = s.travel(from, pickup)?;
        let inbound = s.travel(pickup, &s.home)?;
        let windows = &self.state(driver).stay_home;
        let mut earliest = free_at.max(s.start);
        loop {
            let depart = if from == pickup { earliest } else { earliest.max(ready - outbound) };
            let arrive = depart + outbound;
            let pickup_at = arrive.max(ready);
            let back = pickup_at + inbound;
            if back > s.deadline {
                return None;
            }
            let away_from = if from == s.home { depart } else { Minute::MIN };
            let clash = windows.iter().find(|&&(a, b)| {
                if a == b {
                    away_from < a && a < back
                } else {
                    away_from < b && a < back
                }
            });
            match clash {
                None => return Some(Trip { depart, arrive, pickup: pickup_at, back }),
                Some(_) if from != s.home => return None,
                Some(&(_, b)) => earliest = b,
            }
        }
    }

    fn fetch(&mut self, driver: &str, passenger: &str, pickup: &str, ready: Minute) -> Result<(), ScheduleFailure> {
        let s = self.scenario;
        let state = self.state(driver).clone();
        let mut options: Vec<Candidate<(Option<EnRoute>, Trip, String), (Minute, Minute)>> = Vec::new();
        let mut consider = |dispatcher: &Self, route: Option<EnRoute>, from: String, free_at: Minute| {
            if let Some(trip) = dispatcher.plan_trip(driver, &from, free_at, pickup, ready) {
                let travelled = (trip.arrive - trip.depart) + (trip.back - trip.pickup);
                let cost = (trip.back, travelled);
                options.push(Candidate { plan: (route, trip, from), cost, feasible: true });
            }
        };
        consider(self, None, state.location.clone(), state.free_at);
        if let Some(route) = &state.pending {
            consider(self, Some(route.clone()), route.from.clone(), route.depart.max(s.start));
        }
        let chosen = generate_solution(options).map_err(|_| {
            ScheduleFailure::NoSlot(format!("{driver} cannot collect {passenger} from {pickup} after {}", Clock(ready)))
        })?;
        let (route, trip, from) = chosen.plan;
        if route.is_none() && state.pending.is_some() {
            self.announce_arrival(driver);
        }
        if from != pickup {
            let task = Task::Drive { from: from.clone(), to: pickup.to_string() };
            self.entries.push(Entry::new(trip.depart, trip.arrive, task, &[driver]));
        }
        if trip.pickup > trip.arrive {
            self.entries.push(Entry::new(trip.arrive, trip.pickup, Task::Wait, &[driver]));
        }
        let home_leg = Task::Drive { from: pickup.to_string(), to: s.home.clone() };
        self.entries.push(Entry::new(trip.pickup, trip.back, home_leg, &[driver, passenger]));
        for who in [driver, passenger] {
            let st = self.states.get_mut(who).expect("known actor");
            st.location = s.home.clone();
            st.free_at = trip.back;
            st.home_since = Some(trip.back);
            st.pending = None;
        }
        Ok(())
    }

    /// Commits an en-route actor to their default arrival.
    fn announce_arrival(&mut self, id: &str) {
        let st = self.states.get_mut(id).expect("known actor");
        if st.pending.take().is_some() {
            let arrive = Task::Arrive(st.location.clone());
            let at = st.free_at;
            self.entries.push(Entry::new(at, at, arrive, &[id]));
        }
    }

    fn go_home(&mut self, id: &str) -> Result<(), ScheduleFailure> {
        let s = self.scenario;
        self.announce_arrival(id);
        let st = self.state(id).clone();
        if st.location == s.home {
            return Ok(());
        }
        let actor = s.actor(id).expect("known actor");
        if !actor.can_drive {
            return Err(ScheduleFailure::NoSlot(format!("{id} has no way home from {}", st.location)));
        }
        let leg = s
            .travel(&st.location, &s.home)
            .ok_or_else(|| ScheduleFailure::NoSlot(format!("no route from {} home", st.location)))?;
        let back = st.free_at + leg;
        if back > s.deadline {
            return Err(ScheduleFailure::NoSlot(format!("{id} cannot be home by {}", Clock(s.deadline))));
        }
        let task = Task::Drive { from: st.location.clone(), to: s.home.clone() };
        self.entries.push(Entry::new(st.free_at, back, task, &[id]));
        let st = self.states.get_mut(id).expect("known actor");
        st.location = s.home.clone();
        st.free_at = back;
        st.home_since = Some(back);
        Ok(())
    }
}

fn role<'m>(mapping: &'m RoleMapping, scenario: &Scenario, id: &str) -> Result<&'m str, ScheduleFailure> {
    let person = mapping.get(id).ok_or_else(|| ScheduleFailure::MissingRole(id.to_string()))?;
    if scenario.actor(person).is_none() {
        return Err(ScenarioError::UnknownActor(person.clone()).into());
    }
    Ok(person)
}

/// Builds a schedule for the given role-to-person mapping.
pub fn greedy_schedule(scenario: &Scenario, mapping: &RoleMapping) -> Result<Schedule, ScheduleFailure> {
    scenario.validate()?;
    if scenario.actors.is_empty() {
        return Ok(Schedule::default());
    }
    let s = scenario;
    let mut d = Dispatcher::new(s);
    let home = s.home.clone();

    if let Some(turkey) = s.turkey_minutes {
        let cook = role(mapping, s, ROLE_COOK)?;
        let supervisor = role(mapping, s, ROLE_SUPERVISOR)?;
        if !s.actor(cook).is_some_and(|a| a.can_cook) {
            return Err(ScheduleFailure::Unqualified { role: ROLE_COOK.into(), person: cook.into(), reason: "does not cook".into() });
        }
        let oven_in = s.deadline - turkey;
        if oven_in < s.start {
            return Err(ScheduleFailure::NoSlot(format!("turkey would have to go in at {}", Clock(oven_in))));
        }
        d.entries.push(Entry::new(oven_in, s.deadline, Task::Turkey, &[cook]));
        d.states.get_mut(cook).expect("known").stay_home.push((oven_in, oven_in));
        d.states.get_mut(supervisor).expect("known").stay_home.push((oven_in, s.deadline));
    }
    if let Some(sides) = s.sides_minutes {
        let cook = role(mapping, s, ROLE_COOK)?;
        if !s.actor(cook).is_some_and(|a| a.can_cook) {
            return Err(ScheduleFailure::Unqualified { role: ROLE_COOK.into(), person: cook.into(), reason: "does not cook".into() });
        }
        let from = s.deadline - sides;
        if from < s.start {
            return Err(ScheduleFailure::NoSlot(format!("side dishes would have to start at {}", Clock(from))));
        }
        d.entries.push(Entry::new(from, s.deadline, Task::SideDishes, &[cook]));
        d.states.get_mut(cook).expect("known").stay_home.push((from, s.deadline));
    }

    let mut jobs: Vec<(Minute, &str, String, String)> = Vec::new();
    let mut airport: Vec<_> = s
        .flights
        .iter()
        .filter(|f| s.actor(&f.actor).is_some_and(|a| !a.can_drive))
        .map(|f| (f.lands_at + s.luggage_minutes, f.actor.clone()))
        .collect();
    airport.sort();
    for (ready, passenger) in airport {
        jobs.push((ready, ROLE_AIRPORT_DRIVER, passenger, s.airport.clone()));
    }
    for p in &s.pickups {
        let waiting = s.actor(&p.passenger).map_or(s.start, |a| a.available_from).max(s.start);
        jobs.push((waiting, ROLE_LOCAL_DRIVER, p.passenger.clone(), p.location.clone()));
    }
    for (ready, role_id, passenger, place) in jobs {
        let driver = role(mapping, s, role_id)?.to_string();
        let actor = s.actor(&driver).expect("checked");
        if !actor.can_drive {
            return Err(ScheduleFailure::Unqualified { role: role_id.into(), person: driver, reason: "does not drive".into() });
        }
        d.fetch(&driver, &passenger, &place, ready)?;
    }

    let ids: Vec<String> = s.actors.iter().map(|a| a.id.clone()).collect();
    for id in &ids {
        d.go_home(id)?;
    }
    for id in &ids {
        let st = d.state(id);
        if let Some(first) = st.stay_home.iter().map(|w| w.0).min() {
            if st.home_since.is_none_or(|t| t > first) {
                return Err(ScheduleFailure::NoSlot(format!("{id} is not home by {}", Clock(first))));
            }
        }
    }
    let everyone: Vec<&str> = ids.iter().map(String::as_str).collect();
    d.entries.push(Entry::new(s.deadline, s.deadline, Task::Dinner, &everyone));
    debug_assert!(d.states.values().all(|st| st.location == home));

    let schedule = Schedule::new(d.entries);
    let report = check_schedule(s, &schedule)?;
    if report.is_feasible() {
        Ok(schedule)
    } else {
        Err(ScheduleFailure::Violations(report))
    }
}
