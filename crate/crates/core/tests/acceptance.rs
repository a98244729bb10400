//! Acceptance suite. Every criterion runs at its pinned tolerance and prints one line:
//! `PASS|FAIL <n> <name> (<seconds>s): <detail>`. The process exits nonzero if any fails.
//!
//! `cargo test -p lpp-core --test acceptance -- 4 6` runs a subset.
//! `UPDATE_GOLDEN=1` rewrites the golden SDPA files instead of comparing against them.

mod common;

use std::f64::consts::PI;
use std::path::PathBuf;
use std::time::Instant;

use common::{angle_diff, bound, chain_pop, planar_arm, planar_two_link_ik};
use lpp_core::certify::{refine_local, Feasibility, RefineOptions};
use lpp_core::lie::{lgvi_rollout, so3, ControlInput, LgviOptions};
use lpp_core::moment::{relax, symbolic_text, to_conic, RelaxOptions, Sparsity};
use lpp_core::pipeline::{solve_pop, PipelineOptions};
use lpp_core::planning::spec::SimSpec;
use lpp_core::planning::{
    build_drone_pop, build_ik_pop, BodySpec, DroneSpec, DroneVars, IkSpec, IkVars, JointSpec, Obstacle, PlanningPop,
    Pose, Terminal,
};
use lpp_core::sdp::{sdpa, BlockKind, BlockSpec, ConicSdp, SparseSym};
use lpp_core::sim::simulate;
use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn within(limit_s: f64, t0: Instant, v: Verdict) -> Verdict {
    let t = t0.elapsed().as_secs_f64();
    match v {
        Ok(d) if t < limit_s => Ok(d),
        Ok(d) => Err(format!("{d}; runtime {t:.1}s exceeds {limit_s}s")),
        e => e,
    }
}

fn cs(order: u32) -> PipelineOptions {
    PipelineOptions {
        relax: RelaxOptions {
            order,
            sparsity: Sparsity::Correlative,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn energy() -> Verdict {
    let t0 = Instant::now();
    let spec = SimSpec {
        body: BodySpec {
            mass: 0.5,
            inertia: [0.3, 0.2, 0.3],
            gravity: [0.0; 3],
        },
        h: 0.01,
        steps: 5000,
        omega: [0.4, 1.0, 0.3],
        velocity: [0.0; 3],
        rotation: Matrix3::identity(),
        position: [0.0; 3],
    };
    let s = simulate(&spec).map_err(|e| e.to_string())?.summary;
    let v = check(
        s.lgvi_drift <= 1e-6 && s.euler_drift >= 1e-2,
        format!("lgvi drift {:.3e} (<= 1e-6), euler drift {:.3e} (>= 1e-2)", s.lgvi_drift, s.euler_drift),
    );
    within(5.0, t0, v)
}

/// Spatial chain: each joint is reoriented about x and z before its z rotation.
fn spatial_chain(rng: &mut ChaCha8Rng, n: usize) -> IkSpec {
    let joints = (0..n)
        .map(|_| JointSpec {
            reorientation: so3::rot_z(rng.random_range(-1.0..1.0)) * so3::rot_x(rng.random_range(-1.0..1.0)),
            offset: [rng.random_range(0.2..0.6), 0.0, rng.random_range(-0.1..0.1)],
            limits: Some([-2.5, 2.5]),
            reference: 0.0,
        })
        .collect();
    let mut spec = IkSpec {
        joints,
        target: Pose::identity(),
        base: Pose::identity(),
        terminal: Terminal::Hard,
    };
    let angles: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    spec.target = spec.forward_kinematics(&angles).pop().unwrap();
    spec
}

fn quadratic() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0;
    let mut count = 0;
    let mut scan = |pop: &PlanningPop| {
        for p in pop.polynomials() {
            worst = worst.max(p.degree());
            count += 1;
        }
    };
    for n in 1..=10 {
        scan(&build_ik_pop(&spatial_chain(&mut rng, n)).map_err(|e| e.to_string())?);
        let mut soft = spatial_chain(&mut rng, n);
        soft.terminal = Terminal::Soft { weight: 10.0 };
        scan(&build_ik_pop(&soft).map_err(|e| e.to_string())?);
        let mut d = DroneSpec::landing(n, 0.25, 0.3);
        d.obstacles = vec![Obstacle::Cylinder {
            center: [0.0, 0.5],
            radius: 0.5,
        }];
        d.fz_bounds = [Some(0.0), Some(20.0)];
        d.ball_radius = Some(10.0);
        scan(&build_drone_pop(&d).map_err(|e| e.to_string())?);
    }
    let v = check(worst <= 2, format!("{count} polynomials, max degree {worst}"));
    within(1.0, t0, v)
}

fn layout() -> Verdict {
    let t0 = Instant::now();
    let mut registry = lpp_core::Registry::new();
    let x = registry.add_block("x", 2).unwrap();
    let (a, b) = (lpp_core::Polynomial::var(x[0]), lpp_core::Polynomial::var(x[1]));
    let pop = PlanningPop {
        registry,
        objective: &(&a * &b) + &(&a * &a),
        inequalities: vec![&lpp_core::Polynomial::constant(1.0) - &(&a * &a)],
        cliques: vec![x.clone()],
        ..Default::default()
    };
    let opts = RelaxOptions {
        order: 2,
        sparsity: Sparsity::Dense,
        ..Default::default()
    };
    let sdp = relax(&pop, &opts).map_err(|e| e.to_string())?.sdp;
    let got = symbolic_text(&sdp, sdp.moment_block(0).ok_or("no moment block")?);
    let want = "\
y_{0,0} & y_{1,0} & y_{0,1} & y_{2,0} & y_{1,1} & y_{0,2}
y_{1,0} & y_{2,0} & y_{1,1} & y_{3,0} & y_{2,1} & y_{1,2}
y_{0,1} & y_{1,1} & y_{0,2} & y_{2,1} & y_{1,2} & y_{0,3}
y_{2,0} & y_{3,0} & y_{2,1} & y_{4,0} & y_{3,1} & y_{2,2}
y_{1,1} & y_{2,1} & y_{1,2} & y_{3,1} & y_{2,2} & y_{1,3}
y_{0,2} & y_{1,2} & y_{0,3} & y_{2,2} & y_{1,3} & y_{0,4}";
    let v = check(got.trim_end() == want, format!("6x6 pattern {}", if got.trim_end() == want { "matches" } else { "differs" }));
    within(1.0, t0, v)
}

fn rotation_angle_deg(a: &Matrix3<f64>, b: &Matrix3<f64>) -> f64 {
    let c = (((a.transpose() * b).trace() - 1.0) / 2.0).clamp(-1.0, 1.0);
    c.acos().to_degrees()
}

fn ik_recovery() -> Verdict {
    let t0 = Instant::now();
    let (l1, l2) = (0.5, 0.35);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut max_delta, mut max_angle, mut max_pos, mut max_rot) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for i in 0..20 {
        let angles = [rng.random_range(-PI..PI), rng.random_range(-PI..PI)];
        let probe = planar_arm(&[l1, l2], Pose::identity());
        let target = probe.forward_kinematics(&angles).pop().unwrap();
        let spec = planar_arm(&[l1, l2], target.clone());
        let pop = build_ik_pop(&spec).map_err(|e| e.to_string())?;
        let out = solve_pop(&pop, &cs(2)).map_err(|e| e.to_string())?;
        let delta = out.certificate.delta.ok_or(format!("target {i}: no rank ratio"))?;
        max_delta = max_delta.max(delta);
        let x = out.point.ok_or(format!("target {i}: no point extracted (delta {delta:e})"))?;
        let vars = IkVars::from_pop(&pop).unwrap();
        let got = vars.angles(&x);
        let phi = target.rotation[(1, 0)].atan2(target.rotation[(0, 0)]);
        let want = planar_two_link_ik(l2, target.position.x, target.position.y, phi);
        for k in 0..2 {
            max_angle = max_angle.max(angle_diff(got[k], want[k]));
        }
        let truth = spec.forward_kinematics(&want);
        for (j, t) in truth.iter().enumerate() {
            let p = vars.pose(j, &x);
            max_pos = max_pos.max((p.position - t.position).norm());
            max_rot = max_rot.max(rotation_angle_deg(&p.rotation, &t.rotation));
        }
    }
    let v = check(
        max_delta <= 1e-3 && max_angle <= 1e-4 && max_pos <= 1e-4 && max_rot <= 1e-3,
        format!(
            "20 targets: max delta {max_delta:.2e}, angle error {max_angle:.2e} rad, \
             position error {max_pos:.2e} m, rotation error {max_rot:.2e} deg"
        ),
    );
    within(300.0, t0, v)
}

fn infeasibility() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let offsets = [0.5, 0.35];
    let reach = planar_arm(&offsets, Pose::identity()).reach();
    let mut wrong = Vec::new();
    for i in 0..10 {
        let r = rng.random_range(1.05 * reach..2.0 * reach);
        let a = rng.random_range(-PI..PI);
        let target = Pose::new(
            so3::rot_z(rng.random_range(-PI..PI)),
            Vector3::new(r * a.cos(), r * a.sin(), 0.0),
        );
        let pop = build_ik_pop(&planar_arm(&offsets, target)).map_err(|e| e.to_string())?;
        let out = solve_pop(&pop, &cs(2)).map_err(|e| e.to_string())?;
        if out.certificate.feasibility != Feasibility::Infeasible {
            wrong.push(format!("target {i} ({:?})", out.certificate.feasibility));
        }
    }
    let v = check(
        wrong.is_empty(),
        if wrong.is_empty() {
            "10/10 targets beyond reach classified infeasible".into()
        } else {
            format!("misclassified: {}", wrong.join(", "))
        },
    );
    within(120.0, t0, v)
}

/// Hovering in place at the initial state: a feasible point of the landing problem.
fn hover_point(spec: &DroneSpec, pop: &PlanningPop) -> Result<Vec<f64>, String> {
    let body = spec.validate().map_err(|e| e.to_string())?;
    let u = ControlInput {
        tau: Vector3::zeros(),
        fz: body.mass * body.gravity.norm(),
    };
    let opts = LgviOptions {
        gravity_rotation: spec.gravity_rotation,
        ..Default::default()
    };
    let traj = lgvi_rollout(&spec.initial_state(), &vec![u.clone(); spec.horizon], &body, spec.h, &opts)
        .map_err(|e| e.to_string())?;
    let vars = DroneVars::from_pop(pop).ok_or("not a drone problem")?;
    Ok(vars.assignment(&traj, &vec![u; spec.horizon], pop.registry.len()))
}

fn drone3() -> DroneSpec {
    DroneSpec::landing(3, 0.25, 0.0)
}

fn sparse_dense() -> Verdict {
    let t0 = Instant::now();
    let mut worst = 0.0f64;
    let mut rows = Vec::new();
    for seed in 0..10 {
        let pop = chain_pop(100 + seed, 3 + (seed as usize % 6));
        let d = bound(&pop, 2, Sparsity::Dense);
        let s = bound(&pop, 2, Sparsity::Correlative);
        worst = worst.max((s - d).abs() / (1.0 + d.abs()));
    }
    rows.push(format!("10 chains at order 2: max scaled gap {worst:.2e}"));
    let pop = build_drone_pop(&drone3()).map_err(|e| e.to_string())?;
    let drone = match (
        solve_pop(&pop, &PipelineOptions { relax: RelaxOptions { order: 2, sparsity: Sparsity::Dense, ..Default::default() }, ..Default::default() }),
        solve_pop(&pop, &cs(2)),
    ) {
        (Ok(d), Ok(s)) => {
            let (d, s) = (d.certificate.rho_sdp.unwrap_or(f64::NAN), s.certificate.rho_sdp.unwrap_or(f64::NAN));
            Some((s - d).abs() / (1.0 + d.abs()))
        }
        (d, s) => {
            let err = d.err().or(s.err()).unwrap();
            rows.push(format!("3-step drone at order 2: {err}"));
            None
        }
    };
    let first = |sp: Sparsity| {
        solve_pop(&pop, &PipelineOptions { relax: RelaxOptions { order: 1, sparsity: sp, ..Default::default() }, ..Default::default() })
            .map_err(|e| e.to_string())
            .map(|o| o.certificate.rho_sdp.unwrap_or(f64::NAN))
    };
    let (d1, s1) = (first(Sparsity::Dense)?, first(Sparsity::Correlative)?);
    let gap1 = (s1 - d1).abs() / (1.0 + d1.abs());
    rows.push(format!("3-step drone at order 1: dense {d1:.8}, sparse {s1:.8}, scaled gap {gap1:.2e}"));
    if let Some(g) = drone {
        rows.push(format!("3-step drone at order 2: scaled gap {g:.2e}"));
    }
    // Order 2 on the drone is reported when it fits; order 1 is the comparison that always runs.
    let ok = worst <= 1e-6 && gap1 <= 1e-6 && drone.is_none_or(|g| g <= 1e-6);
    within(600.0, t0, check(ok, rows.join("; ")))
}

fn monotone() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst_order, mut worst_feas) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for seed in 0..10 {
        let n = 3 + (seed as usize % 6);
        let pop = chain_pop(100 + seed, n);
        let r1 = bound(&pop, 1, Sparsity::Correlative);
        let r2 = bound(&pop, 2, Sparsity::Correlative);
        worst_order = worst_order.max(r1 - r2);
        let mut best = f64::INFINITY;
        for _ in 0..50 {
            let x0: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            best = best.min(pop.objective.eval(&x0));
            let r = refine_local(&pop, &x0, &RefineOptions::default());
            let (eq, ineq) = pop.violation(&r.x);
            if eq.max(ineq) == 0.0 {
                best = best.min(pop.objective.eval(&r.x));
            }
        }
        worst_feas = worst_feas.max(r2 - best);
    }
    let mut rows = vec![format!(
        "10 chains: max rho1 - rho2 {worst_order:.2e}, max rho2 - feasible objective {worst_feas:.2e}"
    )];
    let spec = drone3();
    let pop = build_drone_pop(&spec).map_err(|e| e.to_string())?;
    let x = hover_point(&spec, &pop)?;
    let (eq, ineq) = pop.violation(&x);
    let f = pop.objective.eval(&x);
    let r1 = solve_pop(&pop, &cs(1)).map_err(|e| e.to_string())?.certificate.rho_sdp.unwrap_or(f64::NAN);
    let drone2 = solve_pop(&pop, &cs(2));
    let mut drone_ok = r1 <= f + 1e-7 && eq.max(ineq) <= 1e-9;
    match &drone2 {
        Ok(o) => {
            let r2 = o.certificate.rho_sdp.unwrap_or(f64::NAN);
            drone_ok &= r1 <= r2 + 1e-7 && r2 <= f + 1e-7;
            rows.push(format!("3-step drone: rho1 {r1:.6}, rho2 {r2:.6}, hover objective {f:.6}"));
        }
        Err(e) => {
            drone_ok = false;
            rows.push(format!("3-step drone: rho1 {r1:.6} <= hover objective {f:.6}; order 2: {e}"));
        }
    }
    let ok = worst_order <= 1e-7 && worst_feas <= 1e-7 && drone_ok;
    within(600.0, t0, check(ok, rows.join("; ")))
}

fn drone_landing() -> Verdict {
    let t0 = Instant::now();
    let spec = DroneSpec::landing(5, 0.25, 0.0);
    let pop = build_drone_pop(&spec).map_err(|e| e.to_string())?;
    let opts = PipelineOptions {
        refine: Some(RefineOptions::default()),
        ..cs(2)
    };
    let out = solve_pop(&pop, &opts).map_err(|e| e.to_string())?;
    let x = out.point.ok_or("no trajectory returned")?;
    let (eq, ineq) = pop.violation(&x);
    let eps = out.certificate.epsilon.map(|e| e.value()).unwrap_or(f64::INFINITY);
    let v = check(
        eq <= 1e-6 && ineq <= 1e-6 && eps <= 1e-2,
        format!("dynamics residual {eq:.2e}, inequality violation {ineq:.2e}, epsilon {eps:.2e}"),
    );
    within(600.0, t0, v)
}

/// Planar chain with random link lengths and joint offsets, target from random angles.
fn scaling_chain(rng: &mut ChaCha8Rng, n: usize) -> IkSpec {
    let joints = (0..n)
        .map(|_| JointSpec {
            reorientation: so3::rot_z(rng.random_range(-1.0..1.0)),
            offset: [rng.random_range(0.5..1.5), 0.0, 0.0],
            limits: None,
            reference: 0.0,
        })
        .collect();
    let mut spec = IkSpec {
        joints,
        target: Pose::identity(),
        base: Pose::identity(),
        terminal: Terminal::Hard,
    };
    let angles: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    spec.target = spec.forward_kinematics(&angles).pop().unwrap();
    spec
}

fn slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x / n, b + y / n));
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn scaling() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut pts = Vec::new();
    let mut times = Vec::new();
    for n in 3..=10 {
        let pop = build_ik_pop(&scaling_chain(&mut rng, n)).map_err(|e| e.to_string())?;
        let t = Instant::now();
        solve_pop(&pop, &cs(2)).map_err(|e| format!("dof {n}: {e}"))?;
        let s = t.elapsed().as_secs_f64();
        pts.push(((n as f64).ln(), s.ln()));
        times.push(format!("{n}:{s:.2}s"));
    }
    let k = slope(&pts);
    let v = check((0.7..=1.3).contains(&k), format!("log-log slope {k:.2} over dof 3-10 [{}]", times.join(" ")));
    within(1800.0, t0, v)
}

fn random_sdp(rng: &mut ChaCha8Rng) -> ConicSdp {
    let blocks: Vec<BlockSpec> = (0..rng.random_range(1..4))
        .map(|_| BlockSpec {
            size: rng.random_range(1..6),
            kind: if rng.random_bool(0.3) { BlockKind::Diag } else { BlockKind::Psd },
        })
        .collect();
    let entries = |rng: &mut ChaCha8Rng, b: &BlockSpec| {
        let mut t = Vec::new();
        for i in 0..b.size {
            for j in i..b.size {
                if (b.kind == BlockKind::Psd || i == j) && rng.random_bool(0.5) {
                    // Values that need all 17 significant digits.
                    t.push((i, j, rng.random_range(-1e3..1e3) / 3.0));
                }
            }
        }
        SparseSym::from_triplets(t)
    };
    let mut p = ConicSdp::new(blocks.clone());
    for (k, b) in blocks.iter().enumerate() {
        p.c[k] = entries(rng, b);
    }
    for _ in 0..rng.random_range(1..8) {
        let parts = blocks.iter().enumerate().map(|(k, b)| (k, entries(rng, b))).collect();
        let bi = rng.random_range(-1.0..1.0) * 10f64.powi(rng.random_range(-8..8));
        p.add_constraint(parts, bi);
    }
    p
}

fn golden_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

fn golden(name: &str, text: &str) -> Result<bool, String> {
    let path = golden_dir().join(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(golden_dir()).map_err(|e| e.to_string())?;
        std::fs::write(&path, text).map_err(|e| e.to_string())?;
    }
    let want = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(want == text)
}

fn sdpa_roundtrip() -> Verdict {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut bad = 0;
    for _ in 0..20 {
        let p = random_sdp(&mut rng);
        let text = sdpa::to_sdpa(&p);
        match sdpa::from_sdpa(&text) {
            Ok(q) if q == p && sdpa::to_sdpa(&q) == text => {}
            _ => bad += 1,
        }
    }
    let small = sdpa::to_sdpa(&random_sdp(&mut ChaCha8Rng::seed_from_u64(0)));
    let target = Pose::new(so3::rot_z(0.9), Vector3::new(0.6780939858961751, 0.4688735895239444, 0.0));
    let pop = build_ik_pop(&planar_arm(&[0.5, 0.35], target)).map_err(|e| e.to_string())?;
    let rel = relax(&pop, &RelaxOptions::default()).map_err(|e| e.to_string())?;
    let ik = sdpa::to_sdpa(&to_conic(&rel.sdp).map_err(|e| e.to_string())?.conic);
    let g1 = golden("random_small.dat-s", &small)?;
    let g2 = golden("ik_planar2.dat-s", &ik)?;
    let v = check(
        bad == 0 && g1 && g2,
        format!(
            "{}/20 random SDPs round-trip exactly; golden files {}",
            20 - bad,
            if g1 && g2 { "byte-identical" } else { "differ" }
        ),
    );
    within(60.0, t0, v)
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "energy conservation", energy),
        (2, "quadratic exactness", quadratic),
        (3, "moment matrix layout", layout),
        (4, "ik optimality recovery", ik_recovery),
        (5, "infeasibility certification", infeasibility),
        (6, "sparse equals dense", sparse_dense),
        (7, "hierarchy monotonicity", monotone),
        (8, "drone landing", drone_landing),
        (9, "linear scaling", scaling),
        (10, "sdpa round trip", sdpa_roundtrip),
    ];
    let only: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (n, name, f) in criteria {
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t0 = Instant::now();
        let res = f();
        let t = t0.elapsed().as_secs_f64();
        match res {
            Ok(d) => println!("PASS {n} {name} ({t:.1}s): {d}"),
            Err(d) => {
                println!("FAIL {n} {name} ({t:.1}s): {d}");
                failed.push(n);
            }
        }
    }
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
