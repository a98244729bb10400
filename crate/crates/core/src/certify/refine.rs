//! Augmented Lagrangian (Powell–Hestenes–Rockafellar) refinement with a damped Newton inner
//! solver.

use std::collections::{BTreeSet, HashMap};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::planning::PlanningPop;
use crate::poly::{Polynomial, VarId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineOptions {
    /// Required equality residual and inequality violation.
    pub feas_tol: f64,
    /// Required stationarity, relative to `1 + ‖∇f‖∞`.
    pub opt_tol: f64,
    pub max_outer: usize,
    pub max_inner: usize,
    pub rho0: f64,
    pub rho_max: f64,
}

impl Default for RefineOptions {
    fn default() -> Self {
        Self {
            feas_tol: 1e-8,
            opt_tol: 1e-7,
            max_outer: 60,
            max_inner: 200,
            rho0: 10.0,
            rho_max: 1e10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refined {
    /// Dense point over the registry of the refined problem.
    pub x: Vec<f64>,
    pub rho_ref: f64,
    pub converged: bool,
    pub eq_residual: f64,
    pub ineq_violation: f64,
    /// Augmented Lagrangian at the start and end of each outer iteration, with the
    /// multipliers and penalty of that iteration.
    pub merit: Vec<(f64, f64)>,
    /// Norm of the first accepted step (0 when the start point is already stationary).
    pub first_step: f64,
}

struct Compiled {
    vars: Vec<VarId>,
    value: Polynomial,
    grad: Vec<(usize, Polynomial)>,
    hess: Vec<(usize, usize, Polynomial)>,
}

impl Compiled {
    fn new(p: &Polynomial, local: &HashMap<VarId, usize>) -> Self {
        let vars: Vec<VarId> = p.support_vars().into_iter().collect();
        let mut grad = Vec::new();
        let mut hess = Vec::new();
        for (a, &va) in vars.iter().enumerate() {
            let da = p.partial(va);
            for &vb in &vars[a..] {
                let dab = da.partial(vb);
                if !dab.is_zero() {
                    hess.push((local[&va], local[&vb], dab));
                }
            }
            grad.push((local[&va], da));
        }
        Self {
            vars,
            value: p.clone(),
            grad,
            hess,
        }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.value.eval(x)
    }

    fn add_grad(&self, x: &[f64], w: f64, g: &mut DVector<f64>) {
        for (i, d) in &self.grad {
            g[*i] += w * d.eval(x);
        }
    }

    fn grad_dense(&self, x: &[f64], n: usize) -> DVector<f64> {
        let mut g = DVector::zeros(n);
        self.add_grad(x, 1.0, &mut g);
        g
    }

    fn add_hess(&self, x: &[f64], w: f64, h: &mut DMatrix<f64>) {
        for (i, j, d) in &self.hess {
            let v = w * d.eval(x);
            h[(*i, *j)] += v;
            if i != j {
                h[(*j, *i)] += v;
            }
        }
    }
}

struct Problem {
    /// Optimized variables, ascending.
    vars: Vec<VarId>,
    f: Compiled,
    h: Vec<Compiled>,
    g: Vec<Compiled>,
}

struct State {
    lambda: DVector<f64>,
    mu: DVector<f64>,
    rho: f64,
}

impl Problem {
    fn n(&self) -> usize {
        self.vars.len()
    }

    fn lagrangian(&self, x: &[f64], st: &State) -> f64 {
        let mut l = self.f.eval(x);
        for (i, h) in self.h.iter().enumerate() {
            let v = h.eval(x);
            l += st.lambda[i] * v + 0.5 * st.rho * v * v;
        }
        for (j, g) in self.g.iter().enumerate() {
            let p = (st.mu[j] - st.rho * g.eval(x)).max(0.0);
            l += (p * p - st.mu[j] * st.mu[j]) / (2.0 * st.rho);
        }
        l
    }

    fn derivatives(&self, x: &[f64], st: &State) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.n();
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        self.f.add_grad(x, 1.0, &mut grad);
        self.f.add_hess(x, 1.0, &mut hess);
        for (i, h) in self.h.iter().enumerate() {
            let v = h.eval(x);
            let w = st.lambda[i] + st.rho * v;
            let gh = h.grad_dense(x, n);
            grad.axpy(w, &gh, 1.0);
            h.add_hess(x, w, &mut hess);
            hess.ger(st.rho, &gh, &gh, 1.0);
        }
        for (j, g) in self.g.iter().enumerate() {
            let p = st.mu[j] - st.rho * g.eval(x);
            if p > 0.0 {
                let gg = g.grad_dense(x, n);
                grad.axpy(-p, &gg, 1.0);
                g.add_hess(x, -p, &mut hess);
                hess.ger(st.rho, &gg, &gg, 1.0);
            }
        }
        (grad, hess)
    }

    fn violation(&self, x: &[f64]) -> (f64, f64) {
        let eq = self.h.iter().map(|h| h.eval(x).abs()).fold(0.0, f64::max);
        let ineq = self.g.iter().map(|g| (-g.eval(x)).max(0.0)).fold(0.0, f64::max);
        (eq, ineq)
    }

    /// Gradient of the plain Lagrangian `f + λᵀh − μᵀg`.
    fn stationarity(&self, x: &[f64], lambda: &DVector<f64>, mu: &DVector<f64>) -> f64 {
        let n = self.n();
        let mut g = self.f.grad_dense(x, n);
        for (i, h) in self.h.iter().enumerate() {
            h.add_grad(x, lambda[i], &mut g);
        }
        for (j, c) in self.g.iter().enumerate() {
            c.add_grad(x, -mu[j], &mut g);
        }
        g.amax()
    }

    /// Least-squares multipliers for the equalities and nearly active inequalities.
    fn initial_multipliers(&self, x: &[f64]) -> (DVector<f64>, DVector<f64>) {
        let n = self.n();
        let active: Vec<usize> = (0..self.g.len()).filter(|&j| self.g[j].eval(x) <= 1e-6).collect();
        let m = self.h.len() + active.len();
        let mut lambda = DVector::zeros(self.h.len());
        let mut mu = DVector::zeros(self.g.len());
        if m == 0 || n == 0 {
            return (lambda, mu);
        }
        let mut jt = DMatrix::zeros(n, m);
        for (i, h) in self.h.iter().enumerate() {
            jt.set_column(i, &h.grad_dense(x, n));
        }
        for (k, &j) in active.iter().enumerate() {
            jt.set_column(self.h.len() + k, &(-self.g[j].grad_dense(x, n)));
        }
        let rhs = -self.f.grad_dense(x, n);
        let svd = jt.svd(true, true);
        let Ok(sol) = svd.solve(&rhs, 1e-10 * svd.singular_values.max().max(1.0)) else {
            return (lambda, mu);
        };
        for i in 0..self.h.len() {
            lambda[i] = sol[i];
        }
        for (k, &j) in active.iter().enumerate() {
            mu[j] = sol[self.h.len() + k].max(0.0);
        }
        (lambda, mu)
    }
}

fn write_back(vars: &[VarId], xl: &DVector<f64>, x: &mut [f64]) {
    for (v, val) in vars.iter().zip(xl.iter()) {
        x[v.index()] = *val;
    }
}

/// Damped Newton on the augmented Lagrangian. Returns the norm of the first accepted step.
fn minimize(p: &Problem, x: &mut Vec<f64>, st: &State, tol: f64, max_inner: usize) -> f64 {
    let n = p.n();
    let mut xl = DVector::from_iterator(n, p.vars.iter().map(|v| x[v.index()]));
    let mut first = 0.0;
    let mut nu = 0.0;
    for _ in 0..max_inner {
        let (grad, hess) = p.derivatives(x, st);
        if grad.amax() <= tol {
            break;
        }
        let l0 = p.lagrangian(x, st);
        let scale = hess.amax().max(1.0);
        let mut accepted = false;
        for _ in 0..20 {
            let mut hm = hess.clone();
            for i in 0..n {
                hm[(i, i)] += nu;
            }
            let Some(chol) = hm.cholesky() else {
                nu = (nu * 10.0).max(1e-10 * scale);
                continue;
            };
            let d = chol.solve(&(-&grad));
            let slope = grad.dot(&d);
            let mut t = 1.0;
            let mut trial = x.clone();
            while t > 1e-12 {
                write_back(&p.vars, &(&xl + &d * t), &mut trial);
                if p.lagrangian(&trial, st) <= l0 + 1e-4 * t * slope {
                    break;
                }
                t *= 0.5;
            }
            if t > 1e-12 {
                xl += &d * t;
                *x = trial;
                if first == 0.0 {
                    first = (&d * t).norm();
                }
                nu /= 4.0;
                if nu < 1e-14 * scale {
                    nu = 0.0;
                }
                accepted = true;
                break;
            }
            nu = (nu * 10.0).max(1e-8 * scale);
        }
        if !accepted {
            break;
        }
    }
    first
}

/// Refines `x0` (dense over the registry) toward a KKT point of `pop`.
pub fn refine_local(pop: &PlanningPop, x0: &[f64], opts: &RefineOptions) -> Refined {
    let mut used: BTreeSet<VarId> = BTreeSet::new();
    for q in pop.polynomials() {
        used.extend(q.support_vars());
    }
    let vars: Vec<VarId> = used.into_iter().collect();
    let local: HashMap<VarId, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let p = Problem {
        f: Compiled::new(&pop.objective, &local),
        h: pop.equalities.iter().map(|h| Compiled::new(h, &local)).collect(),
        g: pop.inequalities.iter().map(|g| Compiled::new(g, &local)).collect(),
        vars,
    };
    debug_assert!(p.h.iter().chain(&p.g).all(|c| c.vars.iter().all(|v| local.contains_key(v))));

    let mut x = x0.to_vec();
    let (lambda, mu) = p.initial_multipliers(&x);
    let mut st = State {
        lambda,
        mu,
        rho: opts.rho0,
    };
    let fscale = 1.0 + p.f.grad_dense(&x, p.n()).amax();
    let mut merit = Vec::new();
    let mut first_step = None;
    let mut converged = false;
    let mut prev_viol = f64::INFINITY;
    let mut inner_tol: f64 = 1e-3;
    for _ in 0..opts.max_outer {
        let start = p.lagrangian(&x, &st);
        let step = minimize(&p, &mut x, &st, inner_tol.max(1e-11), opts.max_inner);
        first_step.get_or_insert(step);
        merit.push((start, p.lagrangian(&x, &st)));

        let (eq, ineq) = p.violation(&x);
        let comp = p
            .g
            .iter()
            .enumerate()
            .map(|(j, g)| g.eval(&x).min(st.mu[j] / st.rho).abs())
            .fold(0.0, f64::max);
        for (i, h) in p.h.iter().enumerate() {
            st.lambda[i] += st.rho * h.eval(&x);
        }
        for (j, g) in p.g.iter().enumerate() {
            st.mu[j] = (st.mu[j] - st.rho * g.eval(&x)).max(0.0);
        }
        let viol = eq.max(comp);
        let stat = p.stationarity(&x, &st.lambda, &st.mu);
        if eq <= opts.feas_tol && ineq <= opts.feas_tol && stat <= opts.opt_tol * fscale {
            converged = true;
            break;
        }
        if viol > 0.25 * prev_viol {
            st.rho = (st.rho * 10.0).min(opts.rho_max);
        }
        prev_viol = viol;
        inner_tol = (inner_tol * 0.1).min(0.1 * viol.max(1e-12));
    }
    let (eq, ineq) = p.violation(&x);
    Refined {
        rho_ref: pop.objective.eval(&x),
        x,
        converged,
        eq_residual: eq,
        ineq_violation: ineq,
        merit,
        first_step: first_step.unwrap_or(0.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Registry;

    // min x + y s.t. x^2 + y^2 = 1, optimum at -(1,1)/√2
    fn circle() -> PlanningPop {
        let mut registry = Registry::new();
        let v = registry.add_block("x", 2).unwrap();
        let (x, y) = (Polynomial::var(v[0]), Polynomial::var(v[1]));
        PlanningPop {
            registry,
            objective: &x + &y,
            equalities: vec![&(&(&x * &x) + &(&y * &y)) - &Polynomial::constant(1.0)],
            cliques: vec![v],
            ..Default::default()
        }
    }

    #[test]
    fn converges_on_circle() {
        let r = refine_local(&circle(), &[-0.5, -0.9], &RefineOptions::default());
        assert!(r.converged);
        let s = -std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.x[0] - s).abs() < 1e-7 && (r.x[1] - s).abs() < 1e-7, "{:?}", r.x);
        assert!(r.eq_residual <= 1e-8);
        for (a, b) in &r.merit {
            assert!(b <= a);
        }
    }

    #[test]
    fn optimum_is_stationary() {
        let s = -std::f64::consts::FRAC_1_SQRT_2;
        let r = refine_local(&circle(), &[s, s], &RefineOptions::default());
        assert!(r.converged);
        assert!(r.first_step < 1e-10);
    }

    #[test]
    fn active_inequality() {
        // min (x-2)^2 s.t. 1 - x >= 0
        let mut registry = Registry::new();
        let v = registry.add("x").unwrap();
        let x = Polynomial::var(v);
        let d = &x - &Polynomial::constant(2.0);
        let pop = PlanningPop {
            registry,
            objective: &d * &d,
            inequalities: vec![&Polynomial::constant(1.0) - &x],
            cliques: vec![vec![v]],
            ..Default::default()
        };
        let r = refine_local(&pop, &[0.0], &RefineOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 1.0).abs() < 1e-8);
        assert!(r.ineq_violation <= 1e-8);
    }
}
