//! Independent brute-force references for the selector and the rate solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hyperlapse::planner::solve_speedups;
use hyperlapse::selector::shortest_path;

/// Every source-to-sink path with steps of at most `tau`, in lexicographic
/// order.
pub fn all_paths(len: usize, tau: usize) -> Vec<Vec<usize>> {
    fn walk(node: usize, sink: usize, tau: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if node == sink {
            out.push(path.clone());
            return;
        }
        for next in node + 1..=(node + tau).min(sink) {
            path.push(next);
            walk(next, sink, tau, path, out);
            path.pop();
        }
    }
    let mut out = Vec::new();
    walk(0, len - 1, tau, &mut vec![0], &mut out);
    out
}

pub struct PathCase {
    pub len: usize,
    pub tau: usize,
    pub rate: u32,
    pub costs: Vec<Vec<f64>>,
}

pub fn random_path_case(rng: &mut ChaCha8Rng) -> PathCase {
    let len = rng.random_range(1..=12);
    let tau = rng.random_range(1..=4);
    let rate = rng.random_range(1..=5);
    // small integers keep every path sum exact, so ties are real ties
    let costs = (0..len).map(|_| (0..len).map(|_| rng.random_range(0..6) as f64).collect()).collect();
    PathCase { len, tau, rate, costs }
}

pub fn path_cost(case: &PathCase, path: &[usize]) -> f64 {
    path.windows(2)
        .map(|w| (w[1] - w[0]).div_ceil(case.rate as usize) as f64 * case.costs[w[0]][w[1]])
        .sum()
}

/// Runs `cases` random segments; returns the first mismatch.
pub fn check_shortest_paths(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..cases {
        let case = random_path_case(&mut rng);
        let (path, cost) = shortest_path(case.len, case.tau, case.rate, |i, j| case.costs[i][j]);
        // enumeration is in lexicographic order, so the first minimum wins
        let mut best: Option<(f64, Vec<usize>)> = None;
        for p in all_paths(case.len, case.tau) {
            let c = path_cost(&case, &p);
            if best.as_ref().is_none_or(|(b, _)| c < *b) {
                best = Some((c, p));
            }
        }
        let (best_cost, best_path) = best.unwrap();
        if cost != best_cost || path != best_path {
            return Err(format!(
                "case {n} (len {}, tau {}, rate {}): solver {path:?} cost {cost}, oracle {best_path:?} cost {best_cost}",
                case.len, case.tau, case.rate
            ));
        }
    }
    Ok(())
}

/// Plain floating-point scan of the rate grid with the documented tie rule.
pub fn grid_scan(ls: usize, lns: usize, s: u32, l1: f64, l2: f64, s_max: u32) -> (u32, u32) {
    let total = (ls + lns) as f64;
    let mut cands = Vec::new();
    let low = if ls == 0 { s } else { 1 };
    for ss in low..=s {
        for sns in s..=s_max {
            let mismatch = (total / s as f64 - ls as f64 / ss as f64 - lns as f64 / sns as f64).abs();
            let value = mismatch + l1 * (sns as f64 - ss as f64).abs() + l2 * ss as f64;
            cands.push((value, ss, sns));
        }
    }
    let min = cands.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * min.abs().max(1.0);
    // smaller S_s first, then S_ns closest to S
    cands
        .iter()
        .filter(|c| c.0 <= min + tol)
        .min_by_key(|c| (c.1, c.2 - s))
        .map(|c| (c.1, c.2))
        .unwrap()
}

/// Random solver instances; every fourth one has zero weights and lengths
/// built to admit several exact solutions, to exercise the tie-breaks.
pub fn check_rate_solver(cases: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for n in 0..cases {
        let s = rng.random_range(1..=20u32);
        let s_max = rng.random_range(s..=s.max(60));
        let (ls, lns, l1, l2) = if n % 4 == 0 {
            let unit = rng.random_range(1..=10) * 60;
            (rng.random_range(0..=5) * unit, rng.random_range(1..=5) * unit, 0.0, 0.0)
        } else {
            let ls = rng.random_range(0..3000);
            let lns = rng.random_range(if ls == 0 { 1 } else { 0 }..3000);
            (ls, lns, rng.random_range(0.0..0.5), rng.random_range(0.0..0.5))
        };
        let sol = solve_speedups(ls, lns, s, l1, l2, s_max).map_err(|e| format!("case {n}: {e}"))?;
        let oracle = grid_scan(ls, lns, s, l1, l2, s_max);
        if (sol.relevant_rate, sol.nonrelevant_rate) != oracle {
            return Err(format!(
                "case {n} (L_s {ls}, L_ns {lns}, S {s}, l1 {l1}, l2 {l2}, max {s_max}): solver ({}, {}), oracle {oracle:?}",
                sol.relevant_rate, sol.nonrelevant_rate
            ));
        }
    }
    Ok(())
}
