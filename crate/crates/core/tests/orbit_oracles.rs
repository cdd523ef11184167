use std::collections::HashMap;

use ergodisc_core::orbit::floyd_orbit_address;
use ergodisc_core::{
    analyze_full_grid, builtin, global_measure, pushforward, Budget, DiscreteMeasure, DiscretizedMap, GridSpec,
    SuccessorTable,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_table(cells: u64, seed: u64) -> SuccessorTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let next = (0..cells).map(|_| rng.random_range(0..cells)).collect();
    SuccessorTable::from_vec(GridSpec::new(1, cells).unwrap(), next).unwrap()
}

/// Remembers the step at which every point was first seen.
fn memory_detector(next: &[u64], start: u64) -> (u64, Vec<u64>) {
    let mut seen = HashMap::new();
    let mut path = Vec::new();
    let mut x = start;
    while !seen.contains_key(&x) {
        seen.insert(x, path.len());
        path.push(x);
        x = next[x as usize];
    }
    let tail = seen[&x];
    (tail as u64, path[tail..].to_vec())
}

#[test]
fn floyd_matches_memory_detector() {
    let budget = Budget::default();
    for seed in 0..30 {
        let cells = [10, 1000, 100_000][seed as usize % 3];
        let table = random_table(cells, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        for _ in 0..10 {
            let start = rng.random_range(0..cells);
            let got = floyd_orbit_address(&table, start, &budget).unwrap();
            let (tail, cycle) = memory_detector(table.as_slice(), start);
            assert_eq!(got.tail_length(), tail);
            assert_eq!(got.cycle(), &cycle[..], "seed {seed} start {start}");
        }
    }
}

#[test]
fn analysis_agrees_with_per_point_orbits() {
    let budget = Budget::default();
    for seed in 0..10 {
        let table = random_table(500, seed);
        let a = analyze_full_grid(&table, &budget).unwrap();
        let mut basin = vec![0u64; a.cycles().len()];
        for x in 0..500 {
            let (_, cycle) = memory_detector(table.as_slice(), x);
            let min = *cycle.iter().min().unwrap();
            let id = a.cycles().iter().position(|c| c[0] == min).expect("cycle listed");
            assert_eq!(a.cycles()[id].len(), cycle.len());
            basin[id] += 1;
        }
        assert_eq!(basin, a.basin_sizes());
        assert_eq!(a.basin_sizes().iter().sum::<u64>(), 500);
    }
}

/// `(1/M) Σ_{m<M} (f^m)_* Leb` by explicit iteration on dense vectors.
fn cesaro(next: &[u64], steps: u64) -> Vec<f64> {
    let n = next.len();
    let mut cur = vec![1.0 / n as f64; n];
    let mut acc = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    for _ in 0..steps {
        for (a, c) in acc.iter_mut().zip(&cur) {
            *a += c;
        }
        tmp.iter_mut().for_each(|v| *v = 0.0);
        for (i, &s) in next.iter().enumerate() {
            tmp[s as usize] += cur[i];
        }
        std::mem::swap(&mut cur, &mut tmp);
    }
    acc.iter().map(|a| a / steps as f64).collect()
}

fn l1_to_dense(mu: &DiscreteMeasure, dense: &[f64]) -> f64 {
    let mut d: Vec<f64> = dense.to_vec();
    for &(a, w) in mu.atoms() {
        d[a as usize] -= w;
    }
    d.iter().map(|v| v.abs()).sum()
}

/// For a point with tail `t` on a cycle of length `c`, the Cesàro average of
/// its Dirac orbit is within `2(t + c)/M` in L1 of the uniform measure on
/// the cycle; averaging over the grid bounds the whole difference.
fn cesaro_bound(next: &[u64], steps: u64) -> f64 {
    let n = next.len() as u64;
    (0..n)
        .map(|x| {
            let (t, cycle) = memory_detector(next, x);
            2.0 * (t + cycle.len() as u64) as f64 / steps as f64
        })
        .sum::<f64>()
        / n as f64
}

#[test]
fn global_measure_is_the_cesaro_limit() {
    let budget = Budget::default();
    for seed in 0..5 {
        let table = random_table(2000, 50 + seed);
        let mu = global_measure(&analyze_full_grid(&table, &budget).unwrap()).unwrap();
        let m = 4 * 2000;
        let err = l1_to_dense(&mu, &cesaro(table.as_slice(), m));
        assert!(err <= cesaro_bound(table.as_slice(), m) + 1e-12, "seed {seed}: {err}");
        // Doubling M must shrink the error roughly by half.
        let err2 = l1_to_dense(&mu, &cesaro(table.as_slice(), 2 * m));
        assert!(err2 < 0.75 * err + 1e-12, "{err} {err2}");
    }
}

#[test]
fn permutation_tables_agree_exactly_with_cesaro() {
    // Without transients the uniform measure is already invariant.
    let budget = Budget::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut next: Vec<u64> = (0..1000).collect();
    for i in (1..next.len()).rev() {
        next.swap(i, rng.random_range(0..=i));
    }
    let table = SuccessorTable::from_vec(GridSpec::new(1, 1000).unwrap(), next).unwrap();
    let mu = global_measure(&analyze_full_grid(&table, &budget).unwrap()).unwrap();
    assert!(l1_to_dense(&mu, &cesaro(table.as_slice(), 4000)) < 1e-12);
}

#[test]
fn global_measure_is_invariant() {
    let budget = Budget::default();
    for seed in 0..5 {
        let table = random_table(3000, 80 + seed);
        let mu = global_measure(&analyze_full_grid(&table, &budget).unwrap()).unwrap();
        let pushed = pushforward(&mu, &table).unwrap();
        assert!(mu.l1_distance(&pushed).unwrap() < 1e-15);
    }
    let map = DiscretizedMap::new(builtin("g1").unwrap(), GridSpec::new(2, 64).unwrap()).unwrap();
    let table = map.materialize(&budget).unwrap();
    let mu = global_measure(&analyze_full_grid(&table, &budget).unwrap()).unwrap();
    assert!(mu.l1_distance(&pushforward(&mu, &map).unwrap()).unwrap() < 1e-15);
}

#[test]
fn anosov_grids_are_permutations() {
    let budget = Budget::default();
    for n in [5, 64, 101] {
        let map = DiscretizedMap::new(builtin("anosov").unwrap(), GridSpec::new(2, n).unwrap()).unwrap();
        let table = map.materialize(&budget).unwrap();
        assert!(table.is_permutation());
        let a = analyze_full_grid(&table, &budget).unwrap();
        assert_eq!(a.recurrence_degree().to_f64(), 1.0);
        for (c, &b) in a.cycles().iter().zip(a.basin_sizes()) {
            assert_eq!(c.len() as u64, b);
        }
    }
}
