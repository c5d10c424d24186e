//! Constant-velocity Kalman filter on box measurements `(cx, cy, w/h, h)`.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};

use crate::error::{Error, Result};
use crate::geometry::BoundingBox;

pub type Vector8 = SVector<f64, 8>;
pub type Matrix8 = SMatrix<f64, 8, 8>;
pub type Vector4 = SVector<f64, 4>;
pub type Matrix4 = SMatrix<f64, 4, 4>;
type Matrix4x8 = SMatrix<f64, 4, 8>;

/// Position noise per unit of box height.
pub const STD_WEIGHT_POSITION: f64 = 1.0 / 20.0;
/// Velocity noise per unit of box height.
pub const STD_WEIGHT_VELOCITY: f64 = 1.0 / 160.0;

#[derive(Debug, Clone, PartialEq)]
pub struct KalmanState {
    pub mean: Vector8,
    pub covariance: Matrix8,
}

pub fn measurement(b: &BoundingBox) -> Vector4 {
    Vector4::new(b.cx as f64, b.cy as f64, b.w as f64 / b.h as f64, b.h as f64)
}

fn motion_matrix() -> Matrix8 {
    let mut f = Matrix8::identity();
    for i in 0..4 {
        f[(i, i + 4)] = 1.0;
    }
    f
}

fn observation_matrix() -> Matrix4x8 {
    Matrix4x8::identity()
}

fn diag4(v: [f64; 4]) -> Matrix4 {
    Matrix4::from_diagonal(&Vector4::from(v.map(|s| s * s)))
}

impl KalmanState {
    /// Track start: zero velocity, uncertainty scaled by the box height.
    pub fn initiate(b: &BoundingBox) -> Self {
        let z = measurement(b);
        let mut mean = Vector8::zeros();
        mean.fixed_rows_mut::<4>(0).copy_from(&z);
        let h = z[3];
        let (p, v) = (STD_WEIGHT_POSITION, STD_WEIGHT_VELOCITY);
        let std = [2.0 * p * h, 2.0 * p * h, 1e-2, 2.0 * p * h, 10.0 * v * h, 10.0 * v * h, 1e-5, 10.0 * v * h];
        KalmanState {
            mean,
            covariance: Matrix8::from_diagonal(&Vector8::from(std.map(|s| s * s))),
        }
    }

    pub fn check(&self) -> Result<()> {
        let c = &self.covariance;
        if !c.iter().all(|v| v.is_finite()) || !self.mean.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("non-finite Kalman state".into()));
        }
        if (0..8).any(|i| c[(i, i)] <= 0.0) || c.cholesky().is_none() {
            return Err(Error::Numerical("covariance is not positive definite".into()));
        }
        Ok(())
    }

    fn process_noise(&self) -> Matrix8 {
        let h = self.mean[3];
        let (p, v) = (STD_WEIGHT_POSITION * h, STD_WEIGHT_VELOCITY * h);
        let std = [p, p, 1e-2, p, v, v, 1e-5, v];
        Matrix8::from_diagonal(&Vector8::from(std.map(|s| s * s)))
    }

    /// Predicted measurement mean and covariance.
    pub fn project(&self) -> (Vector4, Matrix4) {
        let h = self.mean[3];
        let p = STD_WEIGHT_POSITION * h;
        let r = diag4([p, p, 1e-1, p]);
        let hm = observation_matrix();
        let s = hm * self.covariance * hm.transpose() + r;
        (hm * self.mean, symmetrize4(s))
    }
}

fn symmetrize8(m: Matrix8) -> Matrix8 {
    (m + m.transpose()) * 0.5
}

fn symmetrize4(m: Matrix4) -> Matrix4 {
    (m + m.transpose()) * 0.5
}

pub fn kalman_predict(s: &KalmanState) -> Result<KalmanState> {
    s.check()?;
    let f = motion_matrix();
    Ok(KalmanState {
        mean: f * s.mean,
        covariance: symmetrize8(f * s.covariance * f.transpose() + s.process_noise()),
    })
}

pub fn kalman_update(s: &KalmanState, b: &BoundingBox) -> Result<KalmanState> {
    s.check()?;
    let (z_pred, sc) = s.project();
    let chol = sc
        .cholesky()
        .ok_or_else(|| Error::Numerical("innovation covariance is not positive definite".into()))?;
    let hm = observation_matrix();
    // K = P H^T S^-1, solved as S K^T = H P
    let pht = s.covariance * hm.transpose();
    let gain = chol.solve(&pht.transpose()).transpose();
    let innovation = measurement(b) - z_pred;
    let mean = s.mean + gain * innovation;
    let covariance = symmetrize8(s.covariance - gain * sc * gain.transpose());
    Ok(KalmanState { mean, covariance })
}

/// Squared Mahalanobis distance of `b` under the predicted measurement.
pub fn gating_distance(s: &KalmanState, b: &BoundingBox) -> Result<f64> {
    let (z, sc) = s.project();
    let d = measurement(b) - z;
    squared_mahalanobis(
        &DVector::from_column_slice(d.as_slice()),
        &DMatrix::from_column_slice(4, 4, sc.as_slice()),
    )
}

/// `d^T S^-1 d` via a Cholesky solve.
pub fn squared_mahalanobis(d: &DVector<f64>, s: &DMatrix<f64>) -> Result<f64> {
    if s.nrows() != d.len() || s.ncols() != d.len() {
        return Err(Error::Dimension(format!(
            "{}-vector against {}x{} covariance",
            d.len(),
            s.nrows(),
            s.ncols()
        )));
    }
    let chol = s
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Numerical("singular innovation covariance".into()))?;
    let y = chol.l().solve_lower_triangular(d).ok_or_else(|| Error::Numerical("singular factor".into()))?;
    Ok(y.norm_squared())
}
