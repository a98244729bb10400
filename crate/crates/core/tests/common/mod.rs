#![allow(dead_code)]

use lpp_core::moment::{RelaxOptions, Sparsity};
use lpp_core::pipeline::{solve_pop, PipelineOptions};
use lpp_core::planning::{IkSpec, JointSpec, PlanningPop, Pose, Terminal};
use nalgebra::Matrix3;
use lpp_core::poly::{Polynomial, Registry};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Box-constrained nonconvex quadratic over a chain `x0 - x1 - ... - x{n-1}`, cliques of
/// consecutive pairs.
pub fn chain_pop(seed: u64, n: usize) -> PlanningPop {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut registry = Registry::new();
    let x = registry.add_block("x", n).unwrap();
    let v = |i: usize| Polynomial::var(x[i]);
    let mut objective = Polynomial::zero();
    for i in 0..n {
        objective += &(&v(i) * &v(i)).scale(rng.random_range(-1.0..1.0));
        objective += &v(i).scale(rng.random_range(-1.0..1.0));
        if i + 1 < n {
            objective += &(&v(i) * &v(i + 1)).scale(rng.random_range(-1.0..1.0));
        }
    }
    let inequalities = (0..n)
        .map(|i| &Polynomial::constant(1.0) - &(&v(i) * &v(i)))
        .collect();
    let cliques = (0..n - 1).map(|i| vec![x[i], x[i + 1]]).collect();
    PlanningPop {
        registry,
        objective,
        inequalities,
        cliques,
        ..Default::default()
    }
}

pub fn bound(pop: &PlanningPop, order: u32, sparsity: Sparsity) -> f64 {
    let opts = PipelineOptions {
        relax: RelaxOptions {
            order,
            sparsity,
            ..Default::default()
        },
        ..Default::default()
    };
    let out = solve_pop(pop, &opts).expect("pipeline runs");
    out.certificate.rho_sdp.expect("relaxation solved")
}

/// Planar arm with links along the local x axis, base at the origin and a hard terminal pose.
pub fn planar_arm(offsets: &[f64], target: Pose) -> IkSpec {
    IkSpec {
        joints: offsets
            .iter()
            .map(|&l| JointSpec {
                reorientation: Matrix3::identity(),
                offset: [l, 0.0, 0.0],
                limits: None,
                reference: 0.0,
            })
            .collect(),
        target,
        base: Pose::identity(),
        terminal: Terminal::Hard,
    }
}

/// Closed-form inverse kinematics of a two-link planar arm with a prescribed end orientation.
/// Only the second link length matters: the elbow sits at `p - l2 (cos φ, sin φ)`.
pub fn planar_two_link_ik(l2: f64, px: f64, py: f64, phi: f64) -> [f64; 2] {
    let t1 = (py - l2 * phi.sin()).atan2(px - l2 * phi.cos());
    let t2 = phi - t1;
    let wrap = |a: f64| (a + std::f64::consts::PI).rem_euclid(2.0 * std::f64::consts::PI) - std::f64::consts::PI;
    [wrap(t1), wrap(t2)]
}

pub fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * std::f64::consts::PI);
    d.min(2.0 * std::f64::consts::PI - d)
}
