use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use super::geometry::{rotation_rows, Pose};
use super::{PlanningError, PlanningPop};
use crate::lie::so3;
use crate::lie::{so3_polynomials, PolyMat3, PolyVec3};
use crate::poly::{Polynomial, Registry, VarId};

/// One revolute joint rotating about its local z axis.
///
/// Joint `j` maps the previous frame to the next as `X_j = X_{j-1} A_j T`, with
/// `A_j = [R_z(θ_j), R_z(θ_j) offset; 0, 1]` and `T = [reorientation, 0; 0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JointSpec {
    #[serde(default = "identity", with = "rotation_rows")]
    pub reorientation: Matrix3<f64>,
    pub offset: [f64; 3],
    /// Joint angle range `[min, max]` in radians.
    #[serde(default)]
    pub limits: Option<[f64; 2]>,
    /// Reference angle of the cost `(c - cos θ_r)^2 + (s - sin θ_r)^2`.
    #[serde(default)]
    pub reference: f64,
}

fn identity() -> Matrix3<f64> {
    Matrix3::identity()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Terminal {
    #[default]
    Hard,
    Soft {
        weight: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IkSpec {
    pub joints: Vec<JointSpec>,
    pub target: Pose,
    #[serde(default)]
    pub base: Pose,
    #[serde(default)]
    pub terminal: Terminal,
}

/// Coefficients `(c̄, s̄, c_lim)` of the joint-limit inequality `c·c̄ + s·s̄ >= c_lim`, from
/// `cos(θ − mid) >= cos(half width)`. Returns `None` when the range spans a full turn.
pub fn joint_limit_coefficients(min: f64, max: f64) -> Option<(f64, f64, f64)> {
    if max - min >= 2.0 * PI {
        return None;
    }
    let mid = 0.5 * (max + min);
    let half = 0.5 * (max - min);
    Some((mid.cos(), mid.sin(), half.cos()))
}

impl JointSpec {
    pub fn transform(&self, theta: f64) -> Pose {
        let rz = so3::rot_z(theta);
        Pose::new(rz * self.reorientation, rz * Vector3::from(self.offset))
    }
}

impl IkSpec {
    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    /// Sum of link offset lengths: no pose farther than this from the base is reachable.
    pub fn reach(&self) -> f64 {
        self.joints
            .iter()
            .map(|j| Vector3::from(j.offset).norm())
            .sum()
    }

    pub fn validate(&self) -> Result<(), PlanningError> {
        if self.joints.is_empty() {
            return Err(PlanningError::InvalidSpec("at least one joint is required".into()));
        }
        so3::check_rotation(&self.target.rotation).map_err(|_| PlanningError::TargetNotSe3)?;
        if !self.target.position.iter().all(|x| x.is_finite()) {
            return Err(PlanningError::TargetNotSe3);
        }
        so3::check_rotation(&self.base.rotation)
            .map_err(|e| PlanningError::InvalidSpec(format!("base pose: {e}")))?;
        for (k, j) in self.joints.iter().enumerate() {
            so3::check_rotation(&j.reorientation)
                .map_err(|e| PlanningError::InvalidSpec(format!("joint {}: {e}", k + 1)))?;
            if let Some([lo, hi]) = j.limits {
                if !(lo < hi) {
                    return Err(PlanningError::InvalidSpec(format!(
                        "joint {}: limits must satisfy min < max",
                        k + 1
                    )));
                }
            }
        }
        if let Terminal::Soft { weight } = self.terminal {
            if !(weight > 0.0) {
                return Err(PlanningError::InvalidSpec("soft terminal weight must be positive".into()));
            }
        }
        Ok(())
    }

    /// Joint frames `X_0, ..., X_N` for the given joint angles.
    pub fn forward_kinematics(&self, angles: &[f64]) -> Vec<Pose> {
        let mut poses = vec![self.base.clone()];
        for (j, &t) in self.joints.iter().zip(angles) {
            let next = poses.last().unwrap().compose(&j.transform(t));
            poses.push(next);
        }
        poses
    }
}

/// Variable handles of an IK problem.
#[derive(Clone, Debug, PartialEq)]
pub struct IkVars {
    pub c: Vec<VarId>,
    pub s: Vec<VarId>,
    /// `poses[j]` holds 9 rotation entries (column-major) then 3 position entries of `X_j`.
    pub poses: Vec<[VarId; 12]>,
}

impl IkVars {
    pub fn from_pop(pop: &PlanningPop) -> Option<IkVars> {
        let n = (0..).take_while(|j| pop.layout.contains_key(&format!("X{j}"))).count();
        if n == 0 {
            return None;
        }
        let mut v = IkVars {
            c: vec![],
            s: vec![],
            poses: vec![],
        };
        for j in 0..n {
            v.poses.push(pop.layout[&format!("X{j}")].clone().try_into().ok()?);
            if j > 0 {
                v.c.push(pop.layout.get(&format!("c{j}"))?[0]);
                v.s.push(pop.layout.get(&format!("s{j}"))?[0]);
            }
        }
        Some(v)
    }

    /// Joint angles `atan2(s, c)` read from a dense point.
    pub fn angles(&self, x: &[f64]) -> Vec<f64> {
        self.c
            .iter()
            .zip(&self.s)
            .map(|(c, s)| x[s.index()].atan2(x[c.index()]))
            .collect()
    }

    pub fn pose(&self, j: usize, x: &[f64]) -> Pose {
        let vals: Vec<f64> = self.poses[j].iter().map(|v| x[v.index()]).collect();
        Pose::from_slice(&vals)
    }

    /// Dense point of a joint-angle assignment via forward kinematics.
    pub fn assignment(&self, spec: &IkSpec, angles: &[f64], nvars: usize) -> Vec<f64> {
        let mut x = vec![0.0; nvars];
        for (k, &t) in angles.iter().enumerate() {
            x[self.c[k].index()] = t.cos();
            x[self.s[k].index()] = t.sin();
        }
        for (j, pose) in spec.forward_kinematics(angles).iter().enumerate() {
            for (v, val) in self.poses[j].iter().zip(pose.to_array()) {
                x[v.index()] = val;
            }
        }
        x
    }
}

fn pose_block(ids: &[VarId; 12]) -> (PolyMat3, PolyVec3) {
    let r: [VarId; 9] = ids[..9].try_into().unwrap();
    let p: [VarId; 3] = ids[9..].try_into().unwrap();
    (PolyMat3::from_vars(&r), PolyVec3::from_vars(&p))
}

/// Builds the quadratic IK problem: chain equalities, SO(3) constraints on every free pose,
/// unit-circle constraints on each `(c_j, s_j)`, joint limits, and the terminal pose.
pub fn build_ik_pop(spec: &IkSpec) -> Result<PlanningPop, PlanningError> {
    spec.validate()?;
    let n = spec.dof();
    let mut registry = Registry::new();
    let mut layout = BTreeMap::new();
    let mut poses: Vec<[VarId; 12]> = Vec::with_capacity(n + 1);
    let mut c = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let block = |reg: &mut Registry, j: usize| -> [VarId; 12] {
        let mut ids = reg.add_block(&format!("R{j}"), 9).unwrap();
        ids.extend(reg.add_block(&format!("p{j}"), 3).unwrap());
        ids.try_into().unwrap()
    };
    poses.push(block(&mut registry, 0));
    layout.insert("X0".to_string(), poses[0].to_vec());
    for j in 1..=n {
        c.push(registry.add(format!("c{j}")).unwrap());
        s.push(registry.add(format!("s{j}")).unwrap());
        poses.push(block(&mut registry, j));
        layout.insert(format!("c{j}"), vec![c[j - 1]]);
        layout.insert(format!("s{j}"), vec![s[j - 1]]);
        layout.insert(format!("X{j}"), poses[j].to_vec());
    }

    let fixed: BTreeMap<VarId, f64> = poses[0]
        .iter()
        .copied()
        .zip(spec.base.to_array())
        .collect();
    let subst: std::collections::HashMap<VarId, Polynomial> = fixed
        .iter()
        .map(|(&v, &x)| (v, Polynomial::constant(x)))
        .collect();

    let mut equalities = Vec::new();
    let mut inequalities = Vec::new();
    let mut objective = Polynomial::zero();
    let one = Polynomial::constant(1.0);
    for j in 1..=n {
        let joint = &spec.joints[j - 1];
        let (cj, sj) = (Polynomial::var(c[j - 1]), Polynomial::var(s[j - 1]));
        let z = Polynomial::zero;
        let rz = PolyMat3([
            [cj.clone(), -&sj, z()],
            [sj.clone(), cj.clone(), z()],
            [z(), z(), one.clone()],
        ]);
        let (r_prev, p_prev) = pose_block(&poses[j - 1]);
        let (r_next, p_next) = pose_block(&poses[j]);
        let r_rz = r_prev.mul(&rz);
        let rot = r_next.sub(&r_rz.mul(&PolyMat3::constant(&joint.reorientation)));
        let pos = p_next
            .sub(&p_prev)
            .sub(&r_rz.mul_vec(&PolyVec3::constant(&Vector3::from(joint.offset))));
        equalities.extend(rot.transpose().into_entries());
        equalities.extend(pos.0);
        let r_ids: [VarId; 9] = poses[j][..9].try_into().unwrap();
        equalities.extend(so3_polynomials(&r_ids).expect("distinct ids"));
        equalities.push(&(&(&cj * &cj) + &(&sj * &sj)) - &one);
        if let Some([lo, hi]) = joint.limits {
            if let Some((cb, sb, lim)) = joint_limit_coefficients(lo, hi) {
                inequalities.push(Polynomial::affine(&[(c[j - 1], cb), (s[j - 1], sb)], -lim));
            }
        }
        let dc = &cj - &Polynomial::constant(joint.reference.cos());
        let ds = &sj - &Polynomial::constant(joint.reference.sin());
        objective += &(&(&dc * &dc) + &(&ds * &ds));
    }

    let target = spec.target.to_array();
    match spec.terminal {
        Terminal::Hard => {
            for (v, t) in poses[n].iter().zip(target) {
                equalities.push(Polynomial::affine(&[(*v, 1.0)], -t));
            }
        }
        Terminal::Soft { weight } => {
            for (v, t) in poses[n].iter().zip(target) {
                let d = Polynomial::affine(&[(*v, 1.0)], -t);
                objective += &(&d * &d).scale(weight);
            }
        }
    }

    let equalities: Vec<Polynomial> = equalities
        .into_iter()
        .map(|p| p.substitute(&subst))
        .filter(|p| !p.is_zero())
        .collect();
    let inequalities = inequalities.into_iter().map(|p| p.substitute(&subst)).collect();

    let cliques = (1..=n)
        .map(|j| {
            let mut cl: Vec<VarId> = vec![c[j - 1], s[j - 1]];
            cl.extend(poses[j - 1].iter().chain(poses[j].iter()));
            cl.retain(|v| !fixed.contains_key(v));
            cl.sort_unstable();
            cl
        })
        .collect();

    Ok(PlanningPop {
        registry,
        objective,
        equalities,
        inequalities,
        cliques,
        layout,
        fixed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::planning::clique_partition;

    fn planar(offsets: &[f64], target: Pose) -> IkSpec {
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

    #[test]
    fn variable_count_six_dof() {
        let spec = planar(&[0.3; 6], Pose::identity());
        let pop = build_ik_pop(&spec).unwrap();
        assert_eq!(pop.registry.len(), 96);
        assert_eq!(pop.fixed.len(), 12);
        assert_eq!(pop.cliques.len(), 6);
        assert!(pop.max_degree() <= 2);
        clique_partition(&pop).unwrap();
    }

    #[test]
    fn joint_limit_expansion() {
        let (cb, sb, lim) = joint_limit_coefficients(-PI / 2.0, PI / 2.0).unwrap();
        assert_eq!((cb, sb), (1.0, 0.0));
        assert!(lim.abs() < 1e-16);
        let (cb, sb, lim) = joint_limit_coefficients(-PI / 4.0, PI / 4.0).unwrap();
        assert_eq!((cb, sb), (1.0, 0.0));
        assert!((lim - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(joint_limit_coefficients(-PI, PI).is_none());
    }

    #[test]
    fn forward_kinematics_satisfies_chain() {
        let target = Pose::new(so3::rot_z(0.7), Vector3::new(0.2, 0.5, 0.0));
        let spec = planar(&[0.4, 0.3], target);
        let pop = build_ik_pop(&spec).unwrap();
        let vars = IkVars::from_pop(&pop).unwrap();
        let x = vars.assignment(&spec, &[0.3, -1.1], pop.registry.len());
        let nterm = 12;
        let chain = &pop.equalities[..pop.equalities.len() - nterm];
        assert!(chain.iter().all(|p| p.eval(&x).abs() <= 1e-12));
    }

    #[test]
    fn rejects_non_rigid_target() {
        let mut t = Pose::identity();
        t.rotation[(0, 0)] = 2.0;
        assert_eq!(build_ik_pop(&planar(&[1.0], t)), Err(PlanningError::TargetNotSe3));
    }
}
