// Simulated annealing with subtour-reversal moves and geometric cooling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{DistanceMatrix, Solution, TspError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaParams {
    /// Starting temperature; defaults to ten times the mean edge weight.
    pub t0: Option<f64>,
    pub cooling: f64,
    pub t_min: f64,
    pub seed: u64,
}

impl Default for SaParams {
    fn default() -> Self {
        SaParams { t0: None, cooling: 0.95, t_min: 0.1, seed: 0 }
    }
}

impl SaParams {
    pub fn seeded(seed: u64) -> Self {
        SaParams { seed, ..Self::default() }
    }
}

pub fn annealing(matrix: &DistanceMatrix, depot: usize, params: &SaParams) -> Result<Solution, TspError> {
    let n = matrix.len();
    let t0 = params.t0.unwrap_or_else(|| 10.0 * matrix.mean_edge());
    if !(params.cooling > 0.0 && params.cooling < 1.0) || params.t_min <= 0.0 || t0.is_nan() || t0 <= 0.0 {
        return Err(TspError::InvalidParams("cooling must lie in (0, 1); t_min and t0 must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut current: Vec<usize> = (0..n).filter(|&c| c != depot).collect();
    current.shuffle(&mut rng);
    current.insert(0, depot);
    let mut current_len = matrix.cycle_length(&current);
    let mut best = (current_len, current.clone());
    let mut evaluations = 1u64;
    let mut history = Vec::new();

    let mut temperature = t0;
    while temperature >= params.t_min {
        if n >= 3 {
            let i = rng.gen_range(1..n - 1);
            let j = rng.gen_range(i + 1..n);
            current[i..=j].reverse();
            let candidate_len = matrix.cycle_length(&current);
            evaluations += 1;
            let delta = candidate_len as f64 - current_len as f64;
            if delta <= 0.0 || rng.gen::<f64>() < (-delta / temperature).exp() {
                current_len = candidate_len;
                if current_len < best.0 {
                    best = (current_len, current.clone());
                }
            } else {
                current[i..=j].reverse();
            }
        }
        history.push(best.0);
        temperature *= params.cooling;
    }
    Ok(Solution { tour: best.1, length: best.0, evaluations, history })
}

#[cfg(test)]
mod tests {
    use super::super::fixtures::five;
    use super::*;

    #[test]
    fn five_city_optimum_on_most_seeds() {
        let hits = (0..50).filter(|&seed| annealing(&five(), 0, &SaParams::seeded(seed)).unwrap().length == 24).count();
        assert!(hits >= 45, "{hits}/50");
    }

    #[test]
    fn default_temperature_schedule_length() {
        // t0 = 10 * 5.6 = 56; steps until 56 * 0.95^k < 0.1
        let s = annealing(&five(), 0, &SaParams::seeded(0)).unwrap();
        let expected_steps = (0..).take_while(|&k| 56.0 * 0.95f64.powi(k) >= 0.1).count() as u64;
        assert_eq!(s.evaluations, expected_steps + 1);
    }

    #[test]
    fn rejects_cooling_outside_unit_interval() {
        assert!(annealing(&five(), 0, &SaParams { cooling: 1.0, ..SaParams::default() }).is_err());
    }
}
