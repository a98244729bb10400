use std::collections::BTreeSet;

use nalgebra::{Matrix3, Vector3};

use super::{BodyInertia, GravityRotation, LieError};
use crate::poly::{Polynomial, VarId};

/// 3×3 matrix of polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMat3(pub [[Polynomial; 3]; 3]);

/// 3-vector of polynomials.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyVec3(pub [Polynomial; 3]);

impl PolyMat3 {
    /// Matrix whose entry `(i, j)` is the variable `vars[3j + i]` (column-major).
    pub fn from_vars(vars: &[VarId; 9]) -> Self {
        PolyMat3(std::array::from_fn(|i| {
            std::array::from_fn(|j| Polynomial::var(vars[3 * j + i]))
        }))
    }

    pub fn constant(m: &Matrix3<f64>) -> Self {
        PolyMat3(std::array::from_fn(|i| {
            std::array::from_fn(|j| Polynomial::constant(m[(i, j)]))
        }))
    }

    pub fn transpose(&self) -> Self {
        PolyMat3(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.0[j][i].clone())
        }))
    }

    pub fn mul(&self, o: &PolyMat3) -> Self {
        PolyMat3(std::array::from_fn(|i| {
            std::array::from_fn(|j| {
                let mut acc = Polynomial::zero();
                for k in 0..3 {
                    acc += &(&self.0[i][k] * &o.0[k][j]);
                }
                acc
            })
        }))
    }

    pub fn mul_vec(&self, v: &PolyVec3) -> PolyVec3 {
        PolyVec3(std::array::from_fn(|i| {
            let mut acc = Polynomial::zero();
            for k in 0..3 {
                acc += &(&self.0[i][k] * &v.0[k]);
            }
            acc
        }))
    }

    pub fn sub(&self, o: &PolyMat3) -> Self {
        PolyMat3(std::array::from_fn(|i| {
            std::array::from_fn(|j| &self.0[i][j] - &o.0[i][j])
        }))
    }

    pub fn add(&self, o: &PolyMat3) -> Self {
        PolyMat3(std::array::from_fn(|i| {
            std::array::from_fn(|j| &self.0[i][j] + &o.0[i][j])
        }))
    }

    pub fn scale(&self, c: f64) -> Self {
        PolyMat3(std::array::from_fn(|i| {
            std::array::from_fn(|j| self.0[i][j].scale(c))
        }))
    }

    /// Skew part read as a vector: `(S21 − S12, S02 − S20, S10 − S01)/2`.
    pub fn vee(&self) -> PolyVec3 {
        let s = &self.0;
        PolyVec3([
            (&s[2][1] - &s[1][2]).scale(0.5),
            (&s[0][2] - &s[2][0]).scale(0.5),
            (&s[1][0] - &s[0][1]).scale(0.5),
        ])
    }

    pub fn hat(v: &PolyVec3) -> Self {
        let [a, b, c] = &v.0;
        let z = Polynomial::zero;
        PolyMat3([
            [z(), -c, b.clone()],
            [c.clone(), z(), -a],
            [-b, a.clone(), z()],
        ])
    }

    pub fn entries(&self) -> impl Iterator<Item = &Polynomial> {
        self.0.iter().flat_map(|r| r.iter())
    }

    pub fn into_entries(self) -> impl Iterator<Item = Polynomial> {
        self.0.into_iter().flat_map(|r| r.into_iter())
    }
}

impl PolyVec3 {
    pub fn from_vars(vars: &[VarId; 3]) -> Self {
        PolyVec3(std::array::from_fn(|i| Polynomial::var(vars[i])))
    }

    pub fn constant(v: &Vector3<f64>) -> Self {
        PolyVec3(std::array::from_fn(|i| Polynomial::constant(v[i])))
    }

    pub fn add(&self, o: &PolyVec3) -> Self {
        PolyVec3(std::array::from_fn(|i| &self.0[i] + &o.0[i]))
    }

    pub fn sub(&self, o: &PolyVec3) -> Self {
        PolyVec3(std::array::from_fn(|i| &self.0[i] - &o.0[i]))
    }

    pub fn scale(&self, c: f64) -> Self {
        PolyVec3(std::array::from_fn(|i| self.0[i].scale(c)))
    }

    pub fn dot(&self, o: &PolyVec3) -> Polynomial {
        let mut acc = Polynomial::zero();
        for i in 0..3 {
            acc += &(&self.0[i] * &o.0[i]);
        }
        acc
    }

    pub fn cross(&self, o: &PolyVec3) -> Self {
        let (a, b) = (&self.0, &o.0);
        PolyVec3([
            &(&a[1] * &b[2]) - &(&a[2] * &b[1]),
            &(&a[2] * &b[0]) - &(&a[0] * &b[2]),
            &(&a[0] * &b[1]) - &(&a[1] * &b[0]),
        ])
    }
}

/// The 15 quadratic equalities characterizing `SO(3)` for a column-major 3×3 block:
/// unit norms, pairwise orthogonality, and the right-handed cross products
/// `r1×r2 = r3`, `r2×r3 = r1`, `r3×r1 = r2`.
pub fn so3_polynomials(vars: &[VarId; 9]) -> Result<Vec<Polynomial>, LieError> {
    if vars.iter().collect::<BTreeSet<_>>().len() != 9 {
        return Err(LieError::DuplicateVariables);
    }
    let col = |j: usize| PolyVec3::from_vars(&[vars[3 * j], vars[3 * j + 1], vars[3 * j + 2]]);
    let r = [col(0), col(1), col(2)];
    let one = Polynomial::constant(1.0);
    let mut out = Vec::with_capacity(15);
    for c in &r {
        out.push(&c.dot(c) - &one);
    }
    out.push(r[0].dot(&r[1]));
    out.push(r[0].dot(&r[2]));
    out.push(r[1].dot(&r[2]));
    for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
        out.extend(r[a].cross(&r[b]).sub(&r[c]).0);
    }
    Ok(out)
}

/// Variable blocks of one discrete state `(R, p, F, v)`; rotations are column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct StepVars {
    pub r: [VarId; 9],
    pub p: [VarId; 3],
    pub f: [VarId; 9],
    pub v: [VarId; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct InputVars {
    pub tau: [VarId; 3],
    pub fz: VarId,
}

/// Quadratic residuals of one forced LGVI step from `prev` to `next` driven by `input`:
/// rotational equation (3, skew components), velocity update (3, multiplied by the mass),
/// `R_{k+1} = R_k F_k` (9, column-major) and `p_{k+1} = p_k + h R_k v_k` (3).
pub fn dynamics_polynomials(
    prev: &StepVars,
    next: &StepVars,
    input: &InputVars,
    body: &BodyInertia,
    h: f64,
    gravity: GravityRotation,
) -> Vec<Polynomial> {
    let rk = PolyMat3::from_vars(&prev.r);
    let fk = PolyMat3::from_vars(&prev.f);
    let pk = PolyVec3::from_vars(&prev.p);
    let vk = PolyVec3::from_vars(&prev.v);
    let rn = PolyMat3::from_vars(&next.r);
    let fnx = PolyMat3::from_vars(&next.f);
    let pn = PolyVec3::from_vars(&next.p);
    let vn = PolyVec3::from_vars(&next.v);
    let tau = PolyVec3::from_vars(&input.tau);
    let ins = PolyMat3::constant(&body.inertia_ns);

    let lhs = ins.mul(&fnx.transpose()).sub(&fnx.mul(&ins));
    let rhs = fk
        .transpose()
        .mul(&ins)
        .sub(&ins.mul(&fk))
        .add(&PolyMat3::hat(&tau).scale(h * h));
    let mut out: Vec<Polynomial> = lhs.sub(&rhs).vee().0.into();

    let m = body.mass;
    let g = PolyVec3::constant(&body.gravity);
    let g_body = match gravity {
        GravityRotation::Transpose => rn.transpose().mul_vec(&g),
        GravityRotation::AsPrinted => rn.mul_vec(&g),
    };
    let thrust = PolyVec3([
        Polynomial::zero(),
        Polynomial::zero(),
        Polynomial::var(input.fz),
    ]);
    let vel = vn
        .scale(m)
        .sub(&fk.transpose().mul_vec(&vk).scale(m))
        .sub(&thrust.add(&g_body.scale(m)).scale(h));
    out.extend(vel.0);

    let rot = rn.sub(&rk.mul(&fk)).transpose();
    out.extend(rot.into_entries());

    let pos = pn.sub(&pk).sub(&rk.mul_vec(&vk).scale(h));
    out.extend(pos.0);
    out
}
