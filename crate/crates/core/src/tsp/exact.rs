use super::{DistanceMatrix, Solution, TspError};

pub const BRUTE_FORCE_LIMIT: usize = 11;
pub const HELD_KARP_LIMIT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BruteForceResult {
    pub best: Solution,
    /// Every directed tour achieving the optimum, in lexicographic order.
    pub optimal_tours: Vec<Vec<usize>>,
}

/// Enumerates all `(n-1)!` tours that start at `depot`.
pub fn brute_force(matrix: &DistanceMatrix, depot: usize) -> Result<BruteForceResult, TspError> {
    let n = matrix.len();
    if n > BRUTE_FORCE_LIMIT {
        return Err(TspError::TooLarge { algorithm: "brute force", n, limit: BRUTE_FORCE_LIMIT });
    }
    let mut rest: Vec<usize> = (0..n).filter(|&c| c != depot).collect();
    let mut best_len = u64::MAX;
    let mut optimal: Vec<Vec<usize>> = Vec::new();
    let mut evaluations = 0u64;
    let mut tour = vec![depot; n];
    loop {
        tour[1..].copy_from_slice(&rest);
        let len = matrix.cycle_length(&tour);
        evaluations += 1;
        if len < best_len {
            best_len = len;
            optimal.clear();
        }
        if len == best_len {
            optimal.push(tour.clone());
        }
        if !next_permutation(&mut rest) {
            break;
        }
    }
    Ok(BruteForceResult {
        best: Solution { tour: optimal[0].clone(), length: best_len, evaluations, history: Vec::new() },
        optimal_tours: optimal,
    })
}

/// Advances `items` to the next lexicographic permutation; false when done.
fn next_permutation(items: &mut [usize]) -> bool {
    let Some(pivot) = items.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let successor = items.iter().rposition(|&x| x > items[pivot]).expect("successor exists");
    items.swap(pivot, successor);
    items[pivot + 1..].reverse();
    true
}

/// Bitmask dynamic programme over subsets of non-depot cities.
pub fn held_karp(matrix: &DistanceMatrix, depot: usize) -> Result<Solution, TspError> {
    let n = matrix.len();
    if n > HELD_KARP_LIMIT {
        return Err(TspError::TooLarge { algorithm: "Held-Karp", n, limit: HELD_KARP_LIMIT });
    }
    // cities[k] is the k-th non-depot city; masks index into this list.
    let cities: Vec<usize> = (0..n).filter(|&c| c != depot).collect();
    let m = cities.len();
    let full = 1usize << m;
    let mut cost = vec![u64::MAX; full * m];
    let mut parent = vec![u8::MAX; full * m];
    for k in 0..m {
        cost[(1 << k) * m + k] = matrix.get(depot, cities[k]);
    }
    for mask in 1..full {
        for last in 0..m {
            let here = cost[mask * m + last];
            if mask & (1 << last) == 0 || here == u64::MAX {
                continue;
            }
            for next in 0..m {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let slot = (mask | (1 << next)) * m + next;
                let candidate = here + matrix.get(cities[last], cities[next]);
                if candidate < cost[slot] {
                    cost[slot] = candidate;
                    parent[slot] = last as u8;
                }
            }
        }
    }
    let all = full - 1;
    let (mut last, length) = (0..m)
        .map(|k| (k, cost[all * m + k] + matrix.get(cities[k], depot)))
        .min_by_key(|&(k, len)| (len, k))
        .expect("at least one non-depot city");
    let mut order = Vec::with_capacity(n);
    let mut mask = all;
    loop {
        order.push(cities[last]);
        let prev = parent[mask * m + last];
        mask &= !(1 << last);
        if prev == u8::MAX {
            break;
        }
        last = prev as usize;
    }
    order.push(depot);
    order.reverse();
    Ok(Solution { tour: order, length, evaluations: (full * m) as u64, history: Vec::new() })
}
