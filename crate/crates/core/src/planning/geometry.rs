use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::lie::so3;

/// Rigid transform `X = [R p; 0 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub position: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            position: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, position: Vector3<f64>) -> Self {
        Self { rotation, position }
    }

    pub fn compose(&self, o: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * o.rotation,
            position: self.position + self.rotation * o.position,
        }
    }

    /// Rotation (column-major) followed by position.
    pub fn to_array(&self) -> [f64; 12] {
        let mut out = [0.0; 12];
        for j in 0..3 {
            for i in 0..3 {
                out[3 * j + i] = self.rotation[(i, j)];
            }
            out[9 + j] = self.position[j];
        }
        out
    }

    pub fn from_slice(x: &[f64]) -> Pose {
        Pose {
            rotation: Matrix3::from_column_slice(&x[..9]),
            position: Vector3::new(x[9], x[10], x[11]),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    #[serde(default = "identity_rows", with = "rotation_rows")]
    rotation: Matrix3<f64>,
    #[serde(default)]
    position: [f64; 3],
}

fn identity_rows() -> Matrix3<f64> {
    Matrix3::identity()
}

impl Serialize for Pose {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        PoseRepr {
            rotation: self.rotation,
            position: self.position.into(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let r = PoseRepr::deserialize(d)?;
        Ok(Pose {
            rotation: r.rotation,
            position: r.position.into(),
        })
    }
}

/// Serde adapter for rotations. Written as row-major nested arrays; read from nested arrays,
/// `{"axis_angle": [x, y, z]}` (radians) or `{"rz": angle}` / `{"ry": angle}` / `{"rx": angle}`.
pub mod rotation_rows {
    use super::*;

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum RotInput {
        Rows([[f64; 3]; 3]),
        AxisAngle { axis_angle: [f64; 3] },
        Rx { rx: f64 },
        Ry { ry: f64 },
        Rz { rz: f64 },
    }

    pub fn serialize<S: Serializer>(m: &Matrix3<f64>, s: S) -> Result<S::Ok, S::Error> {
        let rows: [[f64; 3]; 3] = std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)]));
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix3<f64>, D::Error> {
        Ok(match RotInput::deserialize(d)? {
            RotInput::Rows(r) => Matrix3::from_fn(|i, j| r[i][j]),
            RotInput::AxisAngle { axis_angle } => so3::exp(&Vector3::from(axis_angle)),
            RotInput::Rx { rx } => so3::rot_x(rx),
            RotInput::Ry { ry } => so3::rot_y(ry),
            RotInput::Rz { rz } => so3::rot_z(rz),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pose_json_forms() {
        let p: Pose = serde_json::from_str(r#"{"rotation":{"rz":1.5707963267948966},"position":[1,2,3]}"#).unwrap();
        assert!((p.rotation * Vector3::x() - Vector3::y()).norm() < 1e-15);
        let s = serde_json::to_string(&p).unwrap();
        let q: Pose = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        let id: Pose = serde_json::from_str("{}").unwrap();
        assert_eq!(id, Pose::identity());
    }
}
