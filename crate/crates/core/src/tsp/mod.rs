//! Travelling-salesman solvers over integer distance matrices.
//!
//! Exact solvers: [`brute_force`] (n <= 11) and [`held_karp`] (n <= 20).
//! Heuristics: [`nearest_neighbor`], [`aco`], [`genetic`] and [`annealing`].
//! Every stochastic solver takes an explicit seed and is reproducible.

mod aco;
mod exact;
mod ga;
mod sa;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use aco::{aco, AcoParams, AcoRun};
pub use exact::{brute_force, held_karp, BruteForceResult, BRUTE_FORCE_LIMIT, HELD_KARP_LIMIT};
pub use ga::{genetic, repair, GaParams};
pub use sa::{annealing, SaParams};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TspError {
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("matrix parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid tour: {0}")]
    InvalidTour(String),
    #[error("{algorithm} supports at most {limit} cities, got {n}")]
    TooLarge { algorithm: &'static str, n: usize, limit: usize },
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

/// Square matrix of non-negative travel costs with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    n: usize,
    cells: Vec<u64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self, TspError> {
        let n = rows.len();
        if n < 2 {
            return Err(TspError::InvalidMatrix(format!("need at least 2 cities, got {n}")));
        }
        let mut cells = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(TspError::InvalidMatrix(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            if row[i] != 0 {
                return Err(TspError::InvalidMatrix(format!("diagonal entry {i} is {}", row[i])));
            }
            cells.extend(row);
        }
        Ok(DistanceMatrix { n, cells })
    }

    /// Parses the text format: first line `n`, then `n` whitespace-separated rows.
    pub fn parse(text: &str) -> Result<Self, TspError> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (first_no, first) = lines.next().ok_or(TspError::Parse { line: 1, message: "empty input".into() })?;
        let n: usize = first
            .trim()
            .parse()
            .map_err(|_| TspError::Parse { line: first_no + 1, message: format!("expected city count, got `{}`", first.trim()) })?;
        let mut rows = Vec::with_capacity(n);
        for (no, line) in lines {
            let row = line
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<u64>().map_err(|_| TspError::Parse {
                        line: no + 1,
                        message: format!("`{tok}` is not a non-negative integer"),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            if row.len() != n {
                return Err(TspError::Parse { line: no + 1, message: format!("expected {n} entries, got {}", row.len()) });
            }
            rows.push(row);
        }
        if rows.len() != n {
            return Err(TspError::Parse { line: text.lines().count(), message: format!("expected {n} rows, got {}", rows.len()) });
        }
        Self::from_rows(rows)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn get(&self, from: usize, to: usize) -> u64 {
        self.cells[from * self.n + to]
    }

    pub fn max_entry(&self) -> u64 {
        self.cells.iter().copied().max().unwrap_or(0)
    }

    /// Mean of the off-diagonal entries.
    pub fn mean_edge(&self) -> f64 {
        let total: u64 = self.cells.iter().sum();
        total as f64 / (self.n * (self.n - 1)) as f64
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Length of the closed walk visiting `order` in sequence and returning to
    /// its first element. No validity checks.
    pub fn cycle_length(&self, order: &[usize]) -> u64 {
        match order.len() {
            0 | 1 => 0,
            k => (0..k).map(|i| self.get(order[i], order[(i + 1) % k])).sum(),
        }
    }

    pub fn rows(&self) -> Vec<Vec<u64>> {
        self.cells.chunks(self.n).map(<[u64]>::to_vec).collect()
    }
}

/// Checks that `order` starts at `depot` and visits every city exactly once.
pub fn validate_tour(order: &[usize], n: usize, depot: usize) -> Result<(), TspError> {
    if order.len() != n {
        return Err(TspError::InvalidTour(format!("expected {n} cities, got {}", order.len())));
    }
    if order.first() != Some(&depot) {
        return Err(TspError::InvalidTour(format!("tour must start at depot {depot}")));
    }
    let mut seen = vec![false; n];
    for &c in order {
        if c >= n || std::mem::replace(&mut seen[c], true) {
            return Err(TspError::InvalidTour(format!("city {c} is out of range or repeated")));
        }
    }
    Ok(())
}

/// Length of a valid tour.
pub fn evaluate(order: &[usize], matrix: &DistanceMatrix, depot: usize) -> Result<u64, TspError> {
    validate_tour(order, matrix.len(), depot)?;
    Ok(matrix.cycle_length(order))
}

/// Negative length for a valid tour, negative infinity otherwise.
pub fn validation_value(order: &[usize], matrix: &DistanceMatrix, depot: usize) -> f64 {
    evaluate(order, matrix, depot).map_or(f64::NEG_INFINITY, |len| -(len as f64))
}

/// Default penalty weight: `n` times the largest entry, which exceeds the
/// length of every valid tour.
pub fn default_penalty(matrix: &DistanceMatrix) -> u64 {
    matrix.len() as u64 * matrix.max_entry().max(1)
}

/// Walk length plus `penalty` per missing or repeated city. Out-of-range
/// entries count as repeats and contribute no distance.
pub fn penalized_fitness(candidate: &[usize], matrix: &DistanceMatrix, penalty: u64) -> u64 {
    let n = matrix.len();
    let mut counts = vec![0usize; n];
    let mut repeated = 0u64;
    let in_range: Vec<usize> = candidate
        .iter()
        .copied()
        .filter(|&c| {
            if c < n {
                counts[c] += 1;
                true
            } else {
                repeated += 1;
                false
            }
        })
        .collect();
    let missing = counts.iter().filter(|&&k| k == 0).count() as u64;
    repeated += counts.iter().map(|&k| k.saturating_sub(1) as u64).sum::<u64>();
    matrix.cycle_length(&in_range) + penalty * (missing + repeated)
}

/// Outcome of a solver run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Solution {
    pub tour: Vec<usize>,
    pub length: u64,
    /// Number of complete candidate tours whose length was computed.
    pub evaluations: u64,
    /// Best length after each iteration or generation (heuristics only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<u64>,
}

/// Greedy tour: always move to the nearest unvisited city, lowest index on ties.
pub fn nearest_neighbor(matrix: &DistanceMatrix, depot: usize) -> Solution {
    let n = matrix.len();
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    let mut current = depot;
    visited[depot] = true;
    tour.push(depot);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&c| !visited[c])
            .min_by_key(|&c| (matrix.get(current, c), c))
            .expect("unvisited city remains");
        visited[next] = true;
        tour.push(next);
        current = next;
    }
    let length = matrix.cycle_length(&tour);
    Solution { tour, length, evaluations: 1, history: Vec::new() }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Brute,
    HeldKarp,
    NearestNeighbor,
    Aco,
    Ga,
    Sa,
}

impl FromStr for Algorithm {
    type Err = TspError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "brute" => Algorithm::Brute,
            "hk" | "held_karp" => Algorithm::HeldKarp,
            "nn" => Algorithm::NearestNeighbor,
            "aco" => Algorithm::Aco,
            "ga" => Algorithm::Ga,
            "sa" => Algorithm::Sa,
            other => return Err(TspError::InvalidParams(format!("unknown algorithm `{other}`"))),
        })
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algorithm::Brute => "brute",
            Algorithm::HeldKarp => "hk",
            Algorithm::NearestNeighbor => "nn",
            Algorithm::Aco => "aco",
            Algorithm::Ga => "ga",
            Algorithm::Sa => "sa",
        })
    }
}

/// Solver choice by problem size: exhaustive up to 8 cities, dynamic
/// programming up to 15, ant colony beyond.
pub fn select_algorithm(n: usize) -> Algorithm {
    match n {
        0..=8 => Algorithm::Brute,
        9..=15 => Algorithm::HeldKarp,
        _ => Algorithm::Aco,
    }
}

/// Runs one solver with its default parameters and the given seed.
pub fn solve(matrix: &DistanceMatrix, algorithm: Algorithm, depot: usize, seed: u64) -> Result<Solution, TspError> {
    if depot >= matrix.len() {
        return Err(TspError::InvalidParams(format!("depot {depot} is out of range")));
    }
    match algorithm {
        Algorithm::Brute => brute_force(matrix, depot).map(|r| r.best),
        Algorithm::HeldKarp => held_karp(matrix, depot),
        Algorithm::NearestNeighbor => Ok(nearest_neighbor(matrix, depot)),
        Algorithm::Aco => aco(matrix, depot, &AcoParams::large(seed)).map(|r| r.solution),
        Algorithm::Ga => genetic(matrix, depot, &GaParams::seeded(seed)),
        Algorithm::Sa => annealing(matrix, depot, &SaParams::seeded(seed)),
    }
}

/// Letter names (`A`, `B`, ...) for small instances, indices otherwise.
pub fn format_tour(tour: &[usize]) -> String {
    let name = |c: usize| {
        if tour.len() <= 26 {
            char::from(b'A' + c as u8).to_string()
        } else {
            c.to_string()
        }
    };
    let mut parts: Vec<String> = tour.iter().map(|&c| name(c)).collect();
    if let Some(&first) = tour.first() {
        parts.push(name(first));
    }
    parts.join("-")
}
