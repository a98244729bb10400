//! Problem generators shared by the benchmarks.

use lpp_core::lie::so3;
use lpp_core::planning::{IkSpec, JointSpec, Pose, Terminal};

/// Planar chain of `n` unit-ish links whose target is reached at angles `0.3, -0.2, 0.3, ...`.
pub fn planar_chain(n: usize) -> IkSpec {
    let joints = (0..n)
        .map(|k| JointSpec {
            reorientation: so3::rot_z(0.1 * k as f64),
            offset: [0.6 + 0.1 * (k % 3) as f64, 0.0, 0.0],
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
    let angles: Vec<f64> = (0..n).map(|k| if k % 2 == 0 { 0.3 } else { -0.2 }).collect();
    spec.target = spec.forward_kinematics(&angles).pop().expect("base frame");
    spec
}
