// Genetic algorithm: tournament selection, edge recombination crossover,
// random 2-opt mutation and single-elite survival.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DistanceMatrix, Solution, TspError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaParams {
    /// Must be even.
    pub population: usize,
    pub generations: usize,
    pub tournament: usize,
    pub mutation_rate: f64,
    pub seed: u64,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams { population: 100, generations: 200, tournament: 3, mutation_rate: 0.2, seed: 0 }
    }
}

impl GaParams {
    pub fn seeded(seed: u64) -> Self {
        GaParams { seed, ..Self::default() }
    }
}

/// Drops repeated and out-of-range cities, appends missing ones in index
/// order, then rotates the depot to the front.
pub fn repair(candidate: &[usize], n: usize, depot: usize) -> Vec<usize> {
    let mut seen = vec![false; n];
    let mut out: Vec<usize> = candidate
        .iter()
        .copied()
        .filter(|&c| c < n && !std::mem::replace(&mut seen[c], true))
        .collect();
    out.extend((0..n).filter(|&c| !seen[c]));
    let at = out.iter().position(|&c| c == depot).expect("depot present after repair");
    out.rotate_left(at);
    out
}

pub fn genetic(matrix: &DistanceMatrix, depot: usize, params: &GaParams) -> Result<Solution, TspError> {
    if params.population < 2 || !params.population.is_multiple_of(2) {
        return Err(TspError::InvalidParams("population must be even and at least 2".into()));
    }
    if params.tournament == 0 || !(0.0..=1.0).contains(&params.mutation_rate) {
        return Err(TspError::InvalidParams("tournament must be positive, mutation rate in [0, 1]".into()));
    }
    let n = matrix.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let rest: Vec<usize> = (0..n).filter(|&c| c != depot).collect();

    let mut population: Vec<(u64, Vec<usize>)> = (0..params.population)
        .map(|_| {
            let mut order = rest.clone();
            order.shuffle(&mut rng);
            order.insert(0, depot);
            (matrix.cycle_length(&order), order)
        })
        .collect();
    let mut evaluations = population.len() as u64;
    let mut history = Vec::with_capacity(params.generations);

    for _ in 0..params.generations {
        let elite = population.iter().min_by_key(|(len, _)| *len).expect("non-empty").clone();
        let mut next = Vec::with_capacity(params.population);
        next.push(elite);
        while next.len() < params.population {
            let a = tournament(&population, params.tournament, &mut rng);
            let b = tournament(&population, params.tournament, &mut rng);
            let mut child = repair(&edge_recombination(a, b, depot, &mut rng), n, depot);
            if n >= 3 && rng.gen::<f64>() < params.mutation_rate {
                let i = rng.gen_range(1..n - 1);
                let j = rng.gen_range(i + 1..n);
                child[i..=j].reverse();
            }
            next.push((matrix.cycle_length(&child), child));
            evaluations += 1;
        }
        population = next;
        history.push(population.iter().map(|(len, _)| *len).min().expect("non-empty"));
    }

    let (length, tour) = population.into_iter().min_by_key(|(len, _)| *len).expect("non-empty");
    Ok(Solution { tour, length, evaluations, history })
}

fn tournament<'a>(population: &'a [(u64, Vec<usize>)], size: usize, rng: &mut ChaCha8Rng) -> &'a [usize] {
    (0..size)
        .map(|_| &population[rng.gen_range(0..population.len())])
        .min_by_key(|(len, _)| *len)
        .map(|(_, tour)| tour.as_slice())
        .expect("tournament size is positive")
}

/// Edge recombination: prefer neighbours (in either parent) that have the
/// fewest remaining neighbours themselves; ties go to the lower index.
fn edge_recombination(a: &[usize], b: &[usize], depot: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = a.len();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::with_capacity(4); n];
    for parent in [a, b] {
        for k in 0..n {
            let city = parent[k];
            for neighbour in [parent[(k + 1) % n], parent[(k + n - 1) % n]] {
                if neighbour != city && !adjacency[city].contains(&neighbour) {
                    adjacency[city].push(neighbour);
                }
            }
        }
    }
    let mut visited = vec![false; n];
    let mut child = Vec::with_capacity(n);
    let mut current = depot;
    loop {
        visited[current] = true;
        child.push(current);
        if child.len() == n {
            break;
        }
        for list in adjacency.iter_mut() {
            list.retain(|&c| c != current);
        }
        current = match adjacency[current].iter().copied().min_by_key(|&c| (adjacency[c].len(), c)) {
            Some(next) => next,
            None => {
                let open: Vec<usize> = (0..n).filter(|&c| !visited[c]).collect();
                open[rng.gen_range(0..open.len())]
            }
        };
    }
    child
}
