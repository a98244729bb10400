//! Homogeneous self-dual primal-dual interior-point method with Nesterov-Todd scaling and a
//! Mehrotra predictor-corrector.
//!
//! The embedding keeps `(X, y, S, τ, κ)` with residuals
//! `r_p = bτ − A(X)`, `r_d = Cτ − Aᵀy − S`, `r_g = κ − bᵀy + ⟨C, X⟩`.
//! When `τ → 0` the iterates approach a Farkas certificate instead of an optimum.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::chol::Envelope;
use super::problem::{BlockKind, BlockMat, ConicSdp, SparseSym};
use super::SdpError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub feas_tol: f64,
    pub gap_tol: f64,
    pub infeas_tol: f64,
    pub max_iter: usize,
    /// Consecutive iterations with a step below `stall_step` before reporting slow progress.
    pub stall_iters: usize,
    pub stall_step: f64,
    pub step_factor: f64,
    /// A run that ends without converging is reported near-optimal when its best iterate
    /// meets every tolerance within this factor.
    pub near_factor: f64,
    /// Upper bound on stored Schur complement entries.
    pub max_schur_entries: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            gap_tol: 1e-8,
            infeas_tol: 1e-8,
            max_iter: 100,
            stall_iters: 5,
            stall_step: 1e-4,
            step_factor: 0.98,
            near_factor: 10.0,
            max_schur_entries: 150_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Stopped early; the returned iterate meets the tolerances within `near_factor`.
    NearOptimal,
    /// Ray `y` with `bᵀy = 1` and `Σ y_i A_i ⪯ 0`.
    PrimalInfeasible { y: DVector<f64> },
    /// Ray `X ⪰ 0` with `A(X) = 0` and `⟨C, X⟩ = −1`.
    DualInfeasible { x: Vec<BlockMat> },
    SlowProgress,
    IterationLimit,
}

impl SolveStatus {
    pub fn name(&self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::NearOptimal => "near_optimal",
            SolveStatus::PrimalInfeasible { .. } => "primal_infeasible",
            SolveStatus::DualInfeasible { .. } => "dual_infeasible",
            SolveStatus::SlowProgress => "slow_progress",
            SolveStatus::IterationLimit => "iteration_limit",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterLog {
    pub iter: usize,
    pub mu: f64,
    pub pres: f64,
    pub dres: f64,
    pub gap: f64,
    pub step: f64,
    pub pobj: f64,
    pub dobj: f64,
}

impl IterLog {
    pub const HEADER: &'static str = "iter, mu, pres, dres, gap, step";

    pub fn line(&self) -> String {
        format!(
            "{}, {:.6e}, {:.6e}, {:.6e}, {:.6e}, {:.6e}",
            self.iter, self.mu, self.pres, self.dres, self.gap, self.step
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdpSolution {
    pub x: Vec<BlockMat>,
    pub y: DVector<f64>,
    pub s: Vec<BlockMat>,
    pub primal_obj: f64,
    pub dual_obj: f64,
    pub iterations: usize,
    pub log: Vec<IterLog>,
}

/// Interaction groups: constraints sharing a PSD block or a diagonal entry.
struct Structure {
    /// For each PSD block: constraints touching it with their block matrix, ascending.
    psd: Vec<(usize, Vec<(usize, usize)>)>,
    /// For each diagonal block and entry: `(constraint, coefficient)` pairs, ascending.
    diag: Vec<(usize, Vec<Vec<(usize, f64)>>)>,
    first: Vec<usize>,
}

impl Structure {
    fn new(sdp: &ConicSdp) -> Self {
        let m = sdp.num_constraints();
        let mut psd: Vec<(usize, Vec<(usize, usize)>)> = Vec::new();
        let mut diag: Vec<(usize, Vec<Vec<(usize, f64)>>)> = Vec::new();
        let mut psd_pos = vec![usize::MAX; sdp.blocks.len()];
        let mut diag_pos = vec![usize::MAX; sdp.blocks.len()];
        for (k, b) in sdp.blocks.iter().enumerate() {
            match b.kind {
                BlockKind::Psd => {
                    psd_pos[k] = psd.len();
                    psd.push((k, Vec::new()));
                }
                BlockKind::Diag => {
                    diag_pos[k] = diag.len();
                    diag.push((k, vec![Vec::new(); b.size]));
                }
            }
        }
        for (i, c) in sdp.constraints.iter().enumerate() {
            for (pi, (k, a)) in c.parts.iter().enumerate() {
                match sdp.blocks[*k].kind {
                    BlockKind::Psd => psd[psd_pos[*k]].1.push((i, pi)),
                    BlockKind::Diag => {
                        for &(p, _, v) in a.entries() {
                            diag[diag_pos[*k]].1[p as usize].push((i, v));
                        }
                    }
                }
            }
        }
        let mut first: Vec<usize> = (0..m).collect();
        let mut lower = |group: &mut dyn Iterator<Item = usize>| {
            let g: Vec<usize> = group.collect();
            if let Some(&lo) = g.iter().min() {
                for i in g {
                    first[i] = first[i].min(lo);
                }
            }
        };
        for (_, list) in &psd {
            lower(&mut list.iter().map(|t| t.0));
        }
        for (_, entries) in &diag {
            for list in entries {
                lower(&mut list.iter().map(|t| t.0));
            }
        }
        Self { psd, diag, first }
    }
}

enum Scaling {
    Psd {
        r: DMatrix<f64>,
        rinv: DMatrix<f64>,
        lam: DVector<f64>,
        w: DMatrix<f64>,
    },
    Diag {
        w: DVector<f64>,
        lam: DVector<f64>,
    },
}

impl Scaling {
    fn new(x: &BlockMat, s: &BlockMat) -> Option<Scaling> {
        match (x, s) {
            (BlockMat::Dense(x), BlockMat::Dense(s)) => {
                let lx = x.clone().cholesky()?.l();
                let ls = s.clone().cholesky()?.l();
                let svd = (ls.transpose() * &lx).svd(true, true);
                let u = svd.u?;
                let vt = svd.v_t?;
                let lam = svd.singular_values;
                if lam.iter().any(|&l| !(l > 0.0)) {
                    return None;
                }
                let isq = lam.map(|l| 1.0 / l.sqrt());
                let r = &lx * vt.transpose() * DMatrix::from_diagonal(&isq);
                let rinv = DMatrix::from_diagonal(&isq) * u.transpose() * ls.transpose();
                let w = &r * r.transpose();
                Some(Scaling::Psd { r, rinv, lam, w })
            }
            (BlockMat::Diag(x), BlockMat::Diag(s)) => {
                if x.iter().chain(s.iter()).any(|&v| !(v > 0.0)) {
                    return None;
                }
                Some(Scaling::Diag {
                    w: x.zip_map(s, |a, b| (a / b).sqrt()),
                    lam: x.zip_map(s, |a, b| (a * b).sqrt()),
                })
            }
            _ => None,
        }
    }

    fn lam(&self) -> &DVector<f64> {
        match self {
            Scaling::Psd { lam, .. } | Scaling::Diag { lam, .. } => lam,
        }
    }

    /// `W M W`.
    fn sandwich(&self, m: &BlockMat) -> BlockMat {
        match (self, m) {
            (Scaling::Psd { w, .. }, BlockMat::Dense(m)) => BlockMat::Dense(w * m * w),
            (Scaling::Diag { w, .. }, BlockMat::Diag(m)) => {
                BlockMat::Diag(m.component_mul(w).component_mul(w))
            }
            _ => unreachable!(),
        }
    }

    /// Scaled primal direction `R⁻¹ ΔX R⁻ᵀ`.
    fn scale_x(&self, dx: &BlockMat) -> BlockMat {
        match (self, dx) {
            (Scaling::Psd { rinv, .. }, BlockMat::Dense(d)) => {
                BlockMat::Dense(rinv * d * rinv.transpose())
            }
            (Scaling::Diag { w, .. }, BlockMat::Diag(d)) => BlockMat::Diag(d.component_div(w)),
            _ => unreachable!(),
        }
    }

    /// Scaled dual direction `Rᵀ ΔS R`.
    fn scale_s(&self, ds: &BlockMat) -> BlockMat {
        match (self, ds) {
            (Scaling::Psd { r, .. }, BlockMat::Dense(d)) => BlockMat::Dense(r.transpose() * d * r),
            (Scaling::Diag { w, .. }, BlockMat::Diag(d)) => BlockMat::Diag(d.component_mul(w)),
            _ => unreachable!(),
        }
    }

    /// `R Z Rᵀ`.
    fn unscale(&self, z: &BlockMat) -> BlockMat {
        match (self, z) {
            (Scaling::Psd { r, .. }, BlockMat::Dense(z)) => BlockMat::Dense(r * z * r.transpose()),
            (Scaling::Diag { w, .. }, BlockMat::Diag(z)) => BlockMat::Diag(z.component_mul(w)),
            _ => unreachable!(),
        }
    }

    /// Solves `Λ∘Z = T` for the Jordan product `Λ∘Z = (ΛZ + ZΛ)/2`.
    fn jordan_solve(&self, t: &BlockMat) -> BlockMat {
        let lam = self.lam();
        match t {
            BlockMat::Dense(t) => BlockMat::Dense(DMatrix::from_fn(t.nrows(), t.ncols(), |i, j| {
                2.0 * t[(i, j)] / (lam[i] + lam[j])
            })),
            BlockMat::Diag(t) => BlockMat::Diag(t.component_div(lam)),
        }
    }

    /// Largest `α` with `Λ + α·d ⪰ 0` (infinite when `d ⪰ 0`).
    fn max_step(&self, d: &BlockMat) -> f64 {
        let lam = self.lam();
        let lo = match d {
            BlockMat::Dense(d) => {
                let isq = lam.map(|l| 1.0 / l.sqrt());
                let m = DMatrix::from_fn(d.nrows(), d.ncols(), |i, j| d[(i, j)] * isq[i] * isq[j]);
                let m = (&m + m.transpose()) * 0.5;
                m.symmetric_eigenvalues().min()
            }
            BlockMat::Diag(d) => d.component_div(lam).min(),
        };
        if lo < 0.0 {
            -1.0 / lo
        } else {
            f64::INFINITY
        }
    }
}

fn jordan(a: &BlockMat, b: &BlockMat) -> BlockMat {
    match (a, b) {
        (BlockMat::Dense(a), BlockMat::Dense(b)) => {
            let p = a * b;
            BlockMat::Dense((&p + p.transpose()) * 0.5)
        }
        (BlockMat::Diag(a), BlockMat::Diag(b)) => BlockMat::Diag(a.component_mul(b)),
        _ => unreachable!(),
    }
}

fn blocks_inner(a: &[BlockMat], b: &[BlockMat]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.inner(y)).sum()
}

fn blocks_norm(a: &[BlockMat]) -> f64 {
    a.iter().map(BlockMat::norm_sq).sum::<f64>().sqrt()
}

fn lam_mat(lam: &DVector<f64>, kind_dense: bool) -> BlockMat {
    if kind_dense {
        BlockMat::Dense(DMatrix::from_diagonal(lam))
    } else {
        BlockMat::Diag(lam.clone())
    }
}

struct Direction {
    dx: Vec<BlockMat>,
    dy: DVector<f64>,
    ds: Vec<BlockMat>,
    dtau: f64,
    dkappa: f64,
}

#[derive(Clone)]
struct Iterate {
    x: Vec<BlockMat>,
    y: DVector<f64>,
    s: Vec<BlockMat>,
    tau: f64,
    kappa: f64,
}

/// Per-iteration data shared by the predictor and corrector solves.
struct Newton<'a> {
    sdp: &'a ConicSdp,
    scal: Vec<Scaling>,
    schur: &'a Envelope,
    cblocks: &'a [BlockMat],
    v: DVector<f64>,
    a: DVector<f64>,
    /// `κ/τ + bᵀG⁻¹b + (⟨C, WCW⟩ − aᵀG⁻¹a)`; both bracketed terms are nonnegative and are
    /// formed separately to avoid cancellation near the optimum.
    den: f64,
    r_p: DVector<f64>,
    r_d: Vec<BlockMat>,
    r_g: f64,
}

impl Direction {
    fn is_finite(&self) -> bool {
        let blocks = |v: &[BlockMat]| v.iter().all(BlockMat::is_finite);
        blocks(&self.dx)
            && blocks(&self.ds)
            && self.dy.iter().all(|v| v.is_finite())
            && self.dtau.is_finite()
            && self.dkappa.is_finite()
    }
}

impl Newton<'_> {
    fn solve(&self, it: &Iterate, t: &[BlockMat], r_tk: f64, eta: f64) -> Direction {
        let sdp = self.sdp;
        let rx: Vec<BlockMat> = self
            .scal
            .iter()
            .zip(t)
            .map(|(sc, t)| sc.unscale(&sc.jordan_solve(t)))
            .collect();
        // R_X − η W r_d W
        let mut q = rx.clone();
        for ((qk, sc), rd) in q.iter_mut().zip(&self.scal).zip(&self.r_d) {
            qk.axpy(-eta, &sc.sandwich(rd));
        }
        let rhs = &self.r_p * eta - sdp.apply(&q);
        let u = schur_solve(sdp, &self.scal, self.schur, &rhs);
        let b = DVector::from_column_slice(&sdp.b);
        let num = eta * self.r_g + r_tk / it.tau - b.dot(&u) + blocks_inner(self.cblocks, &q) + self.a.dot(&u);
        let dtau = num / self.den;
        let dy = &u + &self.v * dtau;
        let aty = sdp.apply_adjoint(&dy);
        let mut ds = self.r_d.clone();
        for ((d, a), c) in ds.iter_mut().zip(&aty).zip(self.cblocks) {
            d.scale_mut(eta);
            d.axpy(-1.0, a);
            d.axpy(dtau, c);
        }
        let mut dx = rx;
        for ((d, sc), s) in dx.iter_mut().zip(&self.scal).zip(&ds) {
            d.axpy(-1.0, &sc.sandwich(s));
        }
        let dkappa = (r_tk - it.kappa * dtau) / it.tau;
        Direction {
            dx,
            dy,
            ds,
            dtau,
            dkappa,
        }
    }

    fn max_step(&self, it: &Iterate, d: &Direction) -> f64 {
        let mut a = f64::INFINITY;
        for ((sc, dx), ds) in self.scal.iter().zip(&d.dx).zip(&d.ds) {
            a = a.min(sc.max_step(&sc.scale_x(dx)));
            a = a.min(sc.max_step(&sc.scale_s(ds)));
        }
        if d.dtau < 0.0 {
            a = a.min(-it.tau / d.dtau);
        }
        if d.dkappa < 0.0 {
            a = a.min(-it.kappa / d.dkappa);
        }
        a
    }
}

fn assemble_schur(
    sdp: &ConicSdp,
    st: &Structure,
    scal: &[Scaling],
    schur: &mut Envelope,
) {
    schur.clear();
    for (k, list) in &st.psd {
        let Scaling::Psd { w, .. } = &scal[*k] else { unreachable!() };
        let n = w.nrows();
        let mats: Vec<&SparseSym> = list
            .iter()
            .map(|&(i, pi)| &sdp.constraints[i].parts[pi].1)
            .collect();
        for (jj, &(j, _)) in list.iter().enumerate() {
            let aj = mats[jj];
            let rows = aj.support();
            let mut pos = vec![usize::MAX; n];
            for (t, &r) in rows.iter().enumerate() {
                pos[r] = t;
            }
            // (A_j W)ᵀ restricted to the nonzero rows of A_j; W is symmetric
            let mut pt = DMatrix::<f64>::zeros(n, rows.len());
            for &(a, b, v) in aj.entries() {
                let (a, b) = (a as usize, b as usize);
                pt.column_mut(pos[a]).axpy(v, &w.column(b), 1.0);
                if a != b {
                    pt.column_mut(pos[b]).axpy(v, &w.column(a), 1.0);
                }
            }
            let wc = w.select_columns(&rows);
            let g = wc * pt.transpose();
            for (ii, &(i, _)) in list.iter().enumerate().skip(jj) {
                let val = mats[ii].dot_dense(&g);
                schur.add(i, j, val);
            }
        }
    }
    for (k, entries) in &st.diag {
        let Scaling::Diag { w, .. } = &scal[*k] else { unreachable!() };
        for (p, list) in entries.iter().enumerate() {
            let w2 = w[p] * w[p];
            for (jj, &(j, aj)) in list.iter().enumerate() {
                for &(i, ai) in &list[jj..] {
                    schur.add(i, j, ai * aj * w2);
                }
            }
        }
    }
}

impl SparseSym {
    fn dot_dense(&self, g: &DMatrix<f64>) -> f64 {
        self.entries()
            .iter()
            .map(|&(i, j, v)| {
                let (i, j) = (i as usize, j as usize);
                if i == j {
                    v * g[(i, i)]
                } else {
                    v * (g[(i, j)] + g[(j, i)])
                }
            })
            .sum()
    }
}

const REFINE_STEPS: usize = 2;

/// Solves `G u = rhs` with the factored Schur complement, refining against the operator
/// `u ↦ A(W Aᵀ(u) W)` rather than the assembled matrix, whose entries lose accuracy as the
/// scaling becomes ill-conditioned. Refinement stops once the residual stops decreasing.
fn schur_solve(sdp: &ConicSdp, scal: &[Scaling], schur: &Envelope, rhs: &DVector<f64>) -> DVector<f64> {
    let apply_g = |u: &DVector<f64>| {
        let aty = sdp.apply_adjoint(u);
        let w: Vec<BlockMat> = scal.iter().zip(&aty).map(|(sc, m)| sc.sandwich(m)).collect();
        sdp.apply(&w)
    };
    let mut u = DVector::from_vec(schur.solve(rhs.as_slice()));
    let mut r = rhs - apply_g(&u);
    let mut rn = r.norm();
    for _ in 0..REFINE_STEPS {
        let trial = &u + DVector::from_vec(schur.solve(r.as_slice()));
        let tr = rhs - apply_g(&trial);
        let tn = tr.norm();
        if !(tn < rn) {
            break;
        }
        u = trial;
        r = tr;
        rn = tn;
    }
    u
}

/// Solves the SDP pair. The returned solution holds the last iterate normalized by `τ`
/// (or the raw iterate when a certificate is returned).
pub fn solve(sdp: &ConicSdp, opts: &SolverOptions) -> Result<(SdpSolution, SolveStatus), SdpError> {
    sdp.validate()?;
    let m = sdp.num_constraints();
    let st = Structure::new(sdp);
    let mut schur = Envelope::new(st.first.clone(), opts.max_schur_entries)?;
    let cblocks = sdp.objective_blocks();
    let b = DVector::from_column_slice(&sdp.b);
    let nu = sdp.cone_dim() as f64 + 1.0;
    let bnorm = b.norm();
    let cnorm = blocks_norm(&cblocks);
    let dense: Vec<bool> = sdp.blocks.iter().map(|b| b.kind == BlockKind::Psd).collect();

    let mut it = Iterate {
        x: sdp.blocks.iter().map(BlockMat::identity).collect(),
        y: DVector::zeros(m),
        s: sdp.blocks.iter().map(BlockMat::identity).collect(),
        tau: 1.0,
        kappa: 1.0,
    };
    let mut log = Vec::new();
    let mut stalled = 0;
    let mut last_step = 0.0;
    let mut status = SolveStatus::IterationLimit;
    // best iterate by its worst tolerance ratio, returned when the run ends without converging
    let mut best: Option<(f64, Iterate)> = None;

    for iter in 0..=opts.max_iter {
        let ax = sdp.apply(&it.x);
        let aty = sdp.apply_adjoint(&it.y);
        let r_p = &b * it.tau - &ax;
        let mut r_d = cblocks.clone();
        for ((r, a), s) in r_d.iter_mut().zip(&aty).zip(&it.s) {
            r.scale_mut(it.tau);
            r.axpy(-1.0, a);
            r.axpy(-1.0, s);
        }
        let cx = blocks_inner(&cblocks, &it.x);
        let by = b.dot(&it.y);
        let r_g = it.kappa - by + cx;
        let xs = blocks_inner(&it.x, &it.s);
        let mu = (xs + it.tau * it.kappa) / nu;
        let pobj = cx / it.tau;
        let dobj = by / it.tau;
        let pres = r_p.norm() / it.tau / (1.0 + bnorm);
        let dres = blocks_norm(&r_d) / it.tau / (1.0 + cnorm);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        log.push(IterLog {
            iter,
            mu,
            pres,
            dres,
            gap,
            step: last_step,
            pobj,
            dobj,
        });
        if !(mu.is_finite() && pres.is_finite() && dres.is_finite()) {
            status = SolveStatus::SlowProgress;
            break;
        }
        if pres <= opts.feas_tol && dres <= opts.feas_tol && gap <= opts.gap_tol {
            status = SolveStatus::Optimal;
            break;
        }
        let score = (pres / opts.feas_tol).max(dres / opts.feas_tol).max(gap / opts.gap_tol);
        if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, it.clone()));
        }
        if by > 0.0 {
            let mut res = aty.clone();
            for (r, s) in res.iter_mut().zip(&it.s) {
                r.axpy(1.0, s);
            }
            if blocks_norm(&res) <= opts.infeas_tol * by {
                status = SolveStatus::PrimalInfeasible { y: &it.y / by };
                break;
            }
        }
        if cx < 0.0 && ax.norm() <= opts.infeas_tol * (-cx) {
            let mut x = it.x.clone();
            x.iter_mut().for_each(|xk| xk.scale_mut(-1.0 / cx));
            status = SolveStatus::DualInfeasible { x };
            break;
        }
        if iter == opts.max_iter {
            break;
        }

        let scal: Option<Vec<Scaling>> = it
            .x
            .iter()
            .zip(&it.s)
            .map(|(x, s)| Scaling::new(x, s))
            .collect();
        let Some(scal) = scal else {
            status = SolveStatus::SlowProgress;
            break;
        };
        assemble_schur(sdp, &st, &scal, &mut schur);
        let wcw: Vec<BlockMat> = scal.iter().zip(&cblocks).map(|(sc, c)| sc.sandwich(c)).collect();
        let a = sdp.apply(&wcw);
        let c_wcw = blocks_inner(&cblocks, &wcw);
        schur.factor();
        let va = schur_solve(sdp, &scal, &schur, &a);
        let vb = schur_solve(sdp, &scal, &schur, &b);
        let den = it.kappa / it.tau + b.dot(&vb).max(0.0) + (c_wcw - a.dot(&va)).max(0.0);
        let v = va + vb;
        let newton = Newton {
            sdp,
            scal,
            schur: &schur,
            cblocks: &cblocks,
            v,
            a,
            den,
            r_p,
            r_d,
            r_g,
        };

        // predictor
        let t_aff: Vec<BlockMat> = newton
            .scal
            .iter()
            .zip(&dense)
            .map(|(sc, &d)| {
                let l2 = sc.lam().map(|l| -l * l);
                lam_mat(&l2, d)
            })
            .collect();
        let aff = newton.solve(&it, &t_aff, -it.tau * it.kappa, 1.0);
        let alpha_aff = newton.max_step(&it, &aff).min(1.0);
        let sigma = (1.0 - alpha_aff).powi(3).clamp(0.0, 1.0);

        // corrector
        let t_cor: Vec<BlockMat> = newton
            .scal
            .iter()
            .zip(&dense)
            .zip(aff.dx.iter().zip(&aff.ds))
            .map(|((sc, &d), (dx, ds))| {
                let l2 = sc.lam().map(|l| sigma * mu - l * l);
                let mut t = lam_mat(&l2, d);
                let cross = jordan(&sc.scale_x(dx), &sc.scale_s(ds));
                t.axpy(-1.0, &cross);
                t
            })
            .collect();
        let r_tk = sigma * mu - it.tau * it.kappa - aff.dtau * aff.dkappa;
        let dir = newton.solve(&it, &t_cor, r_tk, 1.0 - sigma);
        let alpha = (opts.step_factor * newton.max_step(&it, &dir)).min(1.0);
        if !(alpha.is_finite() && dir.is_finite()) {
            // numerical breakdown; the current iterate is the last finite one
            status = SolveStatus::SlowProgress;
            break;
        }
        last_step = alpha;

        for (x, d) in it.x.iter_mut().zip(&dir.dx) {
            x.axpy(alpha, d);
        }
        for (s, d) in it.s.iter_mut().zip(&dir.ds) {
            s.axpy(alpha, d);
        }
        it.y += &dir.dy * alpha;
        it.tau += alpha * dir.dtau;
        it.kappa += alpha * dir.dkappa;
        // symmetrize against round-off
        for blk in it.x.iter_mut().chain(it.s.iter_mut()) {
            if let BlockMat::Dense(mm) = blk {
                let t = mm.transpose();
                *mm += t;
                *mm *= 0.5;
            }
        }

        if alpha < opts.stall_step {
            stalled += 1;
            if stalled >= opts.stall_iters {
                status = SolveStatus::SlowProgress;
                log.push(IterLog {
                    iter: iter + 1,
                    mu,
                    pres,
                    dres,
                    gap,
                    step: alpha,
                    pobj,
                    dobj,
                });
                break;
            }
        } else {
            stalled = 0;
        }
    }

    if matches!(status, SolveStatus::SlowProgress | SolveStatus::IterationLimit) {
        if let Some((score, b)) = best {
            it = b;
            if score <= opts.near_factor {
                status = SolveStatus::NearOptimal;
            }
        }
    }
    let certificate = matches!(
        status,
        SolveStatus::PrimalInfeasible { .. } | SolveStatus::DualInfeasible { .. }
    );
    let scale = if certificate { 1.0 } else { 1.0 / it.tau };
    let mut x = it.x;
    let mut s = it.s;
    x.iter_mut().chain(s.iter_mut()).for_each(|blk| blk.scale_mut(scale));
    let y = it.y * scale;
    let sol = SdpSolution {
        primal_obj: sdp.primal_objective(&x),
        dual_obj: b.dot(&y),
        x,
        y,
        s,
        iterations: log.len().saturating_sub(1),
        log,
    };
    Ok((sol, status))
}
