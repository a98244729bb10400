use nalgebra::{Matrix3, Vector3};

use super::LieError;

pub const ROTATION_TOL: f64 = 1e-9;

pub fn hat(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Inverse of [`hat`]; rejects matrices whose symmetric part exceeds 1e-9.
pub fn vee(s: &Matrix3<f64>) -> Result<Vector3<f64>, LieError> {
    let asym = (s + s.transpose()).abs().max();
    if asym > 1e-9 {
        return Err(LieError::NotSkew(asym));
    }
    Ok(vee_unchecked(s))
}

/// Reads the skew part of `s` without validating it.
pub fn vee_unchecked(s: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(s[(2, 1)] - s[(1, 2)], s[(0, 2)] - s[(2, 0)], s[(1, 0)] - s[(0, 1)]) * 0.5
}

/// Rodrigues formula for `exp(hat(a))`.
pub fn exp(a: &Vector3<f64>) -> Matrix3<f64> {
    let th2 = a.norm_squared();
    let k = hat(a);
    let (s, c) = if th2 < 1e-12 {
        (1.0 - th2 / 6.0, 0.5 - th2 / 24.0)
    } else {
        let th = th2.sqrt();
        (th.sin() / th, (1.0 - th.cos()) / th2)
    };
    Matrix3::identity() + k * s + k * k * c
}

pub fn rot_x(t: f64) -> Matrix3<f64> {
    exp(&Vector3::new(t, 0.0, 0.0))
}

pub fn rot_y(t: f64) -> Matrix3<f64> {
    exp(&Vector3::new(0.0, t, 0.0))
}

pub fn rot_z(t: f64) -> Matrix3<f64> {
    exp(&Vector3::new(0.0, 0.0, t))
}

/// `‖RᵀR − I‖∞` and the determinant check used to validate rotation matrices.
pub fn orthogonality_error(r: &Matrix3<f64>) -> f64 {
    (r.transpose() * r - Matrix3::identity()).abs().max()
}

pub fn check_rotation(r: &Matrix3<f64>) -> Result<(), LieError> {
    let err = orthogonality_error(r);
    if !(err <= ROTATION_TOL) || r.determinant() <= 0.0 {
        return Err(LieError::NotRotation(err));
    }
    Ok(())
}
