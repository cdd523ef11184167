use ergodisc_core::linear::DEFAULT_MAX_POINTS;
use ergodisc_core::measure::histogram_distance;
use ergodisc_core::DyadicHistogram;
use ergodisc_core::torus::{ShearTerm, Stage, TrigShearSpec};
use ergodisc_core::{
    builtin, dyadic_distance, floyd_orbit, grid_project, orbit_measure, project_scalar, pushforward, rate_brute_force,
    to_histogram, Budget, DiscreteMeasure, DiscretizedMap, GridIndex, GridSpec, Matrix, MatrixSequence,
    SuccessorTable, TorusMapExpr, TorusPoint,
};
use proptest::prelude::*;

fn measure_strategy() -> impl Strategy<Value = DiscreteMeasure> {
    (1u64..40).prop_flat_map(|n| {
        let cells = n * n;
        prop::collection::vec((0..cells, 1u32..1000), 1..30).prop_map(move |atoms| {
            let total: f64 = atoms.iter().map(|&(_, w)| w as f64).sum();
            let grid = GridSpec::new(2, n).unwrap();
            DiscreteMeasure::from_atoms(grid, atoms.into_iter().map(|(a, w)| (a, w as f64 / total))).unwrap()
        })
    })
}

/// Largest gap between a cube's mass and the sum of its `2^n` children,
/// cube indices row-major with the first axis most significant.
fn refinement_error(h: &DyadicHistogram) -> f64 {
    let n = h.dim();
    let mut worst = 0.0f64;
    for k in 0..h.max_level() {
        let (parent, child) = (h.level(k), h.level(k + 1));
        let mut sums = vec![0.0; parent.len()];
        for (c, &m) in child.iter().enumerate() {
            let p = (0..n).fold(0usize, |acc, d| {
                let comp = (c >> ((n - 1 - d) as u32 * (k + 1))) & ((1 << (k + 1)) - 1);
                (acc << k) | (comp >> 1)
            });
            sums[p] += m;
        }
        for (a, b) in parent.iter().zip(&sums) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

fn torus_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(1.0);
    d.min(1.0 - d)
}

proptest! {
    #[test]
    fn distance_is_a_metric(mu in measure_strategy(), nu in measure_strategy(), rho in measure_strategy()) {
        let d = |a: &DiscreteMeasure, b: &DiscreteMeasure| dyadic_distance(a, b, 7).unwrap();
        prop_assert!(d(&mu, &mu).abs() < 1e-12);
        prop_assert!((d(&mu, &nu) - d(&nu, &mu)).abs() < 1e-12);
        prop_assert!(d(&mu, &rho) <= d(&mu, &nu) + d(&nu, &rho) + 1e-12);
        let v = d(&mu, &nu);
        prop_assert!((0.0..=2.0 + 1e-12).contains(&v));
    }

    #[test]
    fn histogram_levels_refine(mu in measure_strategy(), k in 0u32..8) {
        let h = to_histogram(&mu, k).unwrap();
        for level in h.levels() {
            prop_assert!((level.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        prop_assert!(refinement_error(&h) < 1e-12);
        prop_assert_eq!(histogram_distance(&h, &h).unwrap(), 0.0);
    }

    #[test]
    fn pushforward_preserves_mass(mu in measure_strategy(), seed in any::<u64>()) {
        let grid = *mu.grid();
        let cells = grid.cells();
        let next = (0..cells).map(|i| (i.wrapping_mul(seed | 1).wrapping_add(seed >> 7)) % cells).collect();
        let table = SuccessorTable::from_vec(grid, next).unwrap();
        let pushed = pushforward(&mu, &table).unwrap();
        prop_assert!((pushed.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn shear_inverse_round_trip(
        terms in prop::collection::vec((-0.05f64..0.05, 1u32..50, any::<bool>()), 1..5),
        x in 0.0f64..1.0,
        y in 0.0f64..1.0,
    ) {
        let terms = terms.into_iter().map(|(a, f, c)| if c { ShearTerm::cos(a, f) } else { ShearTerm::sin(a, f) }).collect();
        let s = TrigShearSpec::new(1, 0, terms).unwrap();
        let map = TorusMapExpr::new(2, vec![Stage::Shear(s.clone()), Stage::Shear(s.inverse())]).unwrap();
        let p = map.eval(&TorusPoint::new(vec![x, y]).unwrap()).unwrap();
        prop_assert!(torus_gap(p.coords()[0], x) < 1e-12);
        prop_assert!(torus_gap(p.coords()[1], y) < 1e-12);
    }

    #[test]
    fn f_maps_move_points_little(x in 0.0f64..1.0, y in 0.0f64..1.0) {
        for name in ["f1", "g1"] {
            let p = builtin(name).unwrap().eval(&TorusPoint::new(vec![x, y]).unwrap()).unwrap();
            prop_assert!(torus_gap(p.coords()[0], x) < 0.02);
            prop_assert!(torus_gap(p.coords()[1], y) < 0.02);
        }
    }

    #[test]
    fn project_embed_is_identity(n in 1u64..5000, a in any::<u64>(), b in any::<u64>()) {
        let grid = GridSpec::new(2, n).unwrap();
        let idx = GridIndex(vec![a % n, b % n]);
        prop_assert_eq!(grid_project(&grid, &grid.embed(&idx).unwrap()).unwrap(), idx);
    }

    #[test]
    fn rounding_is_within_half(x in -1e9f64..1e9) {
        let r = project_scalar(x).unwrap() as f64;
        prop_assert!((x - r).abs() <= 0.5);
    }

    #[test]
    fn orbit_measures_are_invariant(n in 2u64..300, a in any::<u64>(), b in any::<u64>()) {
        let map = DiscretizedMap::new(builtin("f2").unwrap(), GridSpec::new(2, n).unwrap()).unwrap();
        let orbit = floyd_orbit(&map, &GridIndex(vec![a % n, b % n]), &Budget::default()).unwrap();
        let mu = orbit_measure(&orbit).unwrap();
        prop_assert!(mu.l1_distance(&pushforward(&mu, &map).unwrap()).unwrap() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn unimodular_integer_sequences_have_rate_one(
        shears in prop::collection::vec(prop::collection::vec((-3i32..=3, any::<bool>()), 1..4), 1..4),
    ) {
        let matrices = shears
            .into_iter()
            .map(|factors| {
                let mut m = Matrix::identity(2);
                for (s, lower) in factors {
                    let e = if lower {
                        Matrix::from_rows(&[vec![1.0, 0.0], vec![s as f64, 1.0]])
                    } else {
                        Matrix::from_rows(&[vec![1.0, s as f64], vec![0.0, 1.0]])
                    };
                    m = m.mul(&e.unwrap());
                }
                m
            })
            .collect();
        let seq = MatrixSequence::new(matrices, None).unwrap();
        let est = rate_brute_force(&seq, 20, DEFAULT_MAX_POINTS).unwrap();
        prop_assert_eq!(est.value, 1.0);
    }
}
