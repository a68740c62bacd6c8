// Ant colony optimisation.
//
// Each iteration every ant builds a tour from the depot, choosing the next
// city with probability proportional to tau^alpha * eta^beta where eta = 1/d.
// Pheromone then evaporates by (1 - rho) and every ant deposits q / L_k on the
// edges it used. Ants draw from their own ChaCha stream keyed by
// (iteration, ant), so construction can run in parallel without changing the
// result for a given seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DistanceMatrix, Solution, TspError};

/// Visibility used for zero-length off-diagonal edges.
const ETA_CAP: f64 = 1.0e6;
/// Pheromone never drops below this, keeping every edge selectable.
const TAU_FLOOR: f64 = 1.0e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AcoParams {
    pub ants: usize,
    pub iterations: usize,
    /// Evaporation rate in (0, 1].
    pub rho: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Deposit numerator.
    pub q: f64,
    pub tau0: f64,
    /// Stop after this many consecutive iterations without improvement.
    pub stagnation_k: Option<usize>,
    pub seed: u64,
}

impl Default for AcoParams {
    fn default() -> Self {
        AcoParams {
            ants: 100,
            iterations: 50,
            rho: 0.1,
            alpha: 1.0,
            beta: 2.0,
            q: 10.0,
            tau0: 0.1,
            stagnation_k: Some(5),
            seed: 0,
        }
    }
}

impl AcoParams {
    /// 50 ants, 20 iterations.
    pub fn small(seed: u64) -> Self {
        AcoParams { ants: 50, iterations: 20, seed, ..Self::default() }
    }

    /// 100 ants, 50 iterations.
    pub fn large(seed: u64) -> Self {
        AcoParams { seed, ..Self::default() }
    }

    fn validate(&self) -> Result<(), TspError> {
        let bad = |msg: &str| Err(TspError::InvalidParams(msg.to_string()));
        if self.ants == 0 || self.iterations == 0 {
            return bad("ants and iterations must be positive");
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return bad("rho must lie in (0, 1]");
        }
        if !(self.tau0 > 0.0 && self.q > 0.0 && self.alpha >= 0.0 && self.beta >= 0.0) {
            return bad("tau0 and q must be positive, alpha and beta non-negative");
        }
        if self.stagnation_k == Some(0) {
            return bad("stagnation_k must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AcoRun {
    pub solution: Solution,
    pub iterations_run: usize,
    /// Smallest pheromone value left on any off-diagonal edge.
    pub min_pheromone: f64,
}

pub fn aco(matrix: &DistanceMatrix, depot: usize, params: &AcoParams) -> Result<AcoRun, TspError> {
    params.validate()?;
    let n = matrix.len();
    let symmetric = matrix.is_symmetric();
    let mut tau = vec![params.tau0; n * n];
    let weight: Vec<f64> = (0..n * n)
        .map(|idx| {
            let (i, j) = (idx / n, idx % n);
            if i == j {
                return 0.0;
            }
            let d = matrix.get(i, j);
            let eta = if d == 0 { ETA_CAP } else { 1.0 / d as f64 };
            eta.powf(params.beta)
        })
        .collect();

    let mut best: Option<(u64, Vec<usize>)> = None;
    let mut history = Vec::with_capacity(params.iterations);
    let mut stale = 0usize;
    let mut evaluations = 0u64;
    let mut iterations_run = 0usize;

    for iteration in 0..params.iterations {
        iterations_run += 1;
        let attraction: Vec<f64> = tau.iter().zip(&weight).map(|(t, w)| t.powf(params.alpha) * w).collect();
        let tours: Vec<(u64, Vec<usize>)> = (0..params.ants)
            .into_par_iter()
            .map(|ant| {
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
                rng.set_stream(((iteration as u64) << 32) | ant as u64);
                let tour = construct(n, depot, &attraction, &mut rng);
                (matrix.cycle_length(&tour), tour)
            })
            .collect();
        evaluations += tours.len() as u64;

        for t in tau.iter_mut() {
            *t *= 1.0 - params.rho;
        }
        for (len, tour) in &tours {
            let deposit = params.q / (*len).max(1) as f64;
            for k in 0..n {
                let (a, b) = (tour[k], tour[(k + 1) % n]);
                tau[a * n + b] += deposit;
                if symmetric {
                    tau[b * n + a] += deposit;
                }
            }
        }
        for t in tau.iter_mut() {
            *t = t.max(TAU_FLOOR);
        }

        let round_best = tours.iter().min_by_key(|(len, _)| *len).expect("at least one ant");
        let improved = best.as_ref().is_none_or(|(len, _)| round_best.0 < *len);
        if improved {
            best = Some(round_best.clone());
            stale = 0;
        } else {
            stale += 1;
        }
        history.push(best.as_ref().map(|(len, _)| *len).expect("best set"));
        if params.stagnation_k.is_some_and(|k| stale >= k) {
            break;
        }
    }

    let (length, tour) = best.expect("ran at least one iteration");
    let min_pheromone = (0..n * n).filter(|idx| idx / n != idx % n).map(|idx| tau[idx]).fold(f64::INFINITY, f64::min);
    Ok(AcoRun { solution: Solution { tour, length, evaluations, history }, iterations_run, min_pheromone })
}

fn construct(n: usize, depot: usize, attraction: &[f64], rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut visited = vec![false; n];
    let mut tour = Vec::with_capacity(n);
    visited[depot] = true;
    tour.push(depot);
    let mut current = depot;
    for _ in 1..n {
        let row = &attraction[current * n..(current + 1) * n];
        let total: f64 = (0..n).filter(|&c| !visited[c]).map(|c| row[c]).sum();
        let next = if total > 0.0 && total.is_finite() {
            let mut pick = rng.gen::<f64>() * total;
            let mut chosen = None;
            for c in (0..n).filter(|&c| !visited[c]) {
                chosen = Some(c);
                pick -= row[c];
                if pick <= 0.0 {
                    break;
                }
            }
            chosen.expect("unvisited city remains")
        } else {
            let open: Vec<usize> = (0..n).filter(|&c| !visited[c]).collect();
            open[rng.gen_range(0..open.len())]
        };
        visited[next] = true;
        tour.push(next);
        current = next;
    }
    tour
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::five;
    use super::*;

    #[test]
    fn small_preset_finds_the_five_city_optimum() {
        let run = aco(&five(), 0, &AcoParams::small(7)).unwrap();
        assert_eq!(run.solution.length, 24);
        assert!(run.min_pheromone > 0.0);
        assert!(run.solution.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn same_seed_same_run() {
        let a = aco(&five(), 0, &AcoParams::small(3)).unwrap();
        let b = aco(&five(), 0, &AcoParams::small(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn stagnation_stops_early() {
        let params = AcoParams { iterations: 1000, stagnation_k: Some(3), ..AcoParams::small(1) };
        let run = aco(&five(), 0, &params).unwrap();
        assert!(run.iterations_run < 1000);
    }

    #[test]
    fn full_evaporation_keeps_pheromone_positive() {
        let params = AcoParams { rho: 1.0, ..AcoParams::small(2) };
        assert!(aco(&five(), 0, &params).unwrap().min_pheromone > 0.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(aco(&five(), 0, &AcoParams { rho: 0.0, ..AcoParams::small(0) }).is_err());
        assert!(aco(&five(), 0, &AcoParams { ants: 0, ..AcoParams::small(0) }).is_err());
    }

    #[test]
    fn zero_distance_edges_are_handled() {
        let m = DistanceMatrix::from_rows(vec![vec![0, 0, 5], vec![0, 0, 1], vec![5, 1, 0]]).unwrap();
        let run = aco(&m, 0, &AcoParams::small(4)).unwrap();
        assert_eq!(run.solution.length, 6);
    }
}
