mod common;

use common::{bound, chain_pop};
use lpp_core::moment::{relax, symbolic_text, RelaxOptions, Sparsity};
use lpp_core::planning::PlanningPop;
use lpp_core::poly::{Polynomial, Registry};
use nalgebra::SymmetricEigen;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn univariate(objective: impl Fn(&Polynomial) -> Polynomial, g: impl Fn(&Polynomial) -> Polynomial) -> PlanningPop {
    let mut registry = Registry::new();
    let x = registry.add_block("x", 1).unwrap();
    let v = Polynomial::var(x[0]);
    PlanningPop {
        registry,
        objective: objective(&v),
        inequalities: vec![g(&v)],
        cliques: vec![vec![x[0]]],
        ..Default::default()
    }
}

fn min_eig(m: &nalgebra::DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.min()
}

#[test]
fn square_on_half_line_order_one() {
    let pop = univariate(|x| x * x, |x| x.clone());
    let rho = bound(&pop, 1, Sparsity::Dense);
    assert!(rho.abs() < 1e-7, "rho {rho}");
}

#[test]
fn quartic_matches_grid_minimum() {
    let c = |a: f64| move |x: &Polynomial| x - &Polynomial::constant(a);
    let f = |x: &Polynomial| &(&c(1.0)(x) * &c(2.0)(x)) * &(&c(3.0)(x) * &c(4.0)(x));
    let pop = univariate(f, |x| x * &(&Polynomial::constant(5.0) - x));
    let grid = (0..=50_000)
        .map(|i| {
            let t = i as f64 * 1e-4;
            (t - 1.0) * (t - 2.0) * (t - 3.0) * (t - 4.0)
        })
        .fold(f64::INFINITY, f64::min);
    let rho = bound(&pop, 2, Sparsity::Dense);
    assert!((rho - grid).abs() < 1e-4, "rho {rho} grid {grid}");
}

#[test]
fn order_two_moment_matrix_layout() {
    let mut registry = Registry::new();
    let x = registry.add_block("x", 2).unwrap();
    let (a, b) = (Polynomial::var(x[0]), Polynomial::var(x[1]));
    let pop = PlanningPop {
        registry,
        objective: &(&a * &b) + &(&a * &a),
        inequalities: vec![&Polynomial::constant(1.0) - &(&a * &a)],
        cliques: vec![x.clone()],
        ..Default::default()
    };
    let opts = RelaxOptions { order: 2, sparsity: Sparsity::Dense, ..Default::default() };
    let sdp = relax(&pop, &opts).unwrap().sdp;
    let expected = [
        "y_{0,0} & y_{1,0} & y_{0,1} & y_{2,0} & y_{1,1} & y_{0,2}",
        "y_{1,0} & y_{2,0} & y_{1,1} & y_{3,0} & y_{2,1} & y_{1,2}",
        "y_{0,1} & y_{1,1} & y_{0,2} & y_{2,1} & y_{1,2} & y_{0,3}",
        "y_{2,0} & y_{3,0} & y_{2,1} & y_{4,0} & y_{3,1} & y_{2,2}",
        "y_{1,1} & y_{2,1} & y_{1,2} & y_{3,1} & y_{2,2} & y_{1,3}",
        "y_{0,2} & y_{1,2} & y_{0,3} & y_{2,2} & y_{1,3} & y_{0,4}",
    ];
    let b = sdp.moment_block(0).unwrap();
    let text = symbolic_text(&sdp, b);
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows, expected);
}

#[test]
fn sparse_equals_dense_on_chains() {
    for seed in 0..4 {
        let pop = chain_pop(seed, 5);
        let d = bound(&pop, 2, Sparsity::Dense);
        let s = bound(&pop, 2, Sparsity::Correlative);
        assert!((s - d).abs() <= 1e-6 * (1.0 + d.abs()), "seed {seed}: cs {s} dense {d}");
    }
}

#[test]
fn bounds_are_monotone_and_below_feasible_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 10..14 {
        let pop = chain_pop(seed, 4);
        let r1 = bound(&pop, 1, Sparsity::Correlative);
        let r2 = bound(&pop, 2, Sparsity::Correlative);
        assert!(r1 <= r2 + 1e-7, "seed {seed}: {r1} > {r2}");
        for _ in 0..200 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..=1.0)).collect();
            let f = pop.objective.eval(&x);
            assert!(r2 <= f + 1e-7, "seed {seed}: bound {r2} above f(x) {f}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Moments of a point of the box satisfy every block exactly and reproduce the objective.
    #[test]
    fn dirac_lift_is_feasible(seed in 0u64..1000, x in prop::collection::vec(-1.0f64..=1.0, 4)) {
        let pop = chain_pop(seed, 4);
        let opts = RelaxOptions { order: 2, ..Default::default() };
        let r = relax(&pop, &opts).unwrap();
        let sdp = &r.sdp;
        let y: Vec<f64> = sdp.index.moments().iter().map(|m| m.eval(&x)).collect();
        let f = pop.objective.eval(&x);
        prop_assert!((sdp.objective_value(&y) - f).abs() <= 1e-12 * (1.0 + f.abs()));
        for row in &sdp.equalities {
            let lhs: f64 = row.terms.iter().map(|&(p, c)| c * y[p]).sum();
            prop_assert!((lhs - row.rhs).abs() <= 1e-12);
        }
        for b in &sdp.blocks {
            prop_assert!(min_eig(&b.evaluate(&y)) >= -1e-12);
        }
    }

    /// Mixtures of point masses in the box give PSD moment and localizing matrices.
    #[test]
    fn mixtures_are_psd(seed in 0u64..1000, atoms in 1usize..6) {
        let pop = chain_pop(seed, 3);
        let opts = RelaxOptions { order: 2, sparsity: Sparsity::Dense, ..Default::default() };
        let sdp = relax(&pop, &opts).unwrap().sdp;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut y = vec![0.0; sdp.index.len()];
        let weights: Vec<f64> = (0..atoms).map(|_| rng.random_range(0.1..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for w in weights {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..=1.0)).collect();
            for (yi, m) in y.iter_mut().zip(sdp.index.moments()) {
                *yi += w / total * m.eval(&x);
            }
        }
        for b in &sdp.blocks {
            prop_assert!(min_eig(&b.evaluate(&y)) >= -1e-10);
        }
    }
}
