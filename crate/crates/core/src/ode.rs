//! Fixed-step RK4 and an implicit trapezoidal integrator with step control
//! for stiff real systems.

use nalgebra::{DMatrix, DVector};
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

pub fn rk4_step<T, F>(f: &F, t: f64, y: &DVector<T>, h: f64) -> DVector<T>
where
    T: nalgebra::ComplexField<RealField = f64> + Copy,
    F: Fn(f64, &DVector<T>) -> DVector<T>,
{
    let hh = T::from_real(h);
    let half = T::from_real(0.5 * h);
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(y + &k1 * half));
    let k3 = f(t + 0.5 * h, &(y + &k2 * half));
    let k4 = f(t + h, &(y + &k3 * hh));
    let sixth = T::from_real(h / 6.0);
    let two = T::from_real(2.0);
    y + (k1 + k2 * two + k3 * two + k4) * sixth
}

/// Integrates from t0 to t1 in `steps` equal RK4 steps.
pub fn rk4<T, F>(f: F, y0: DVector<T>, t0: f64, t1: f64, steps: usize) -> DVector<T>
where
    T: nalgebra::ComplexField<RealField = f64> + Copy,
    F: Fn(f64, &DVector<T>) -> DVector<T>,
{
    let h = (t1 - t0) / steps as f64;
    let mut y = y0;
    for k in 0..steps {
        y = rk4_step(&f, t0 + k as f64 * h, &y, h);
    }
    y
}

fn jacobian_fd<F: Fn(f64, &DVector<f64>) -> DVector<f64>>(f: &F, t: f64, y: &DVector<f64>) -> DMatrix<f64> {
    let n = y.len();
    let f0 = f(t, y);
    let mut j = DMatrix::zeros(n, n);
    for c in 0..n {
        let h = 1e-7 * y[c].abs().max(1.0);
        let mut yp = y.clone();
        yp[c] += h;
        let col = (f(t, &yp) - &f0) / h;
        j.set_column(c, &col);
    }
    j
}

/// One implicit trapezoidal step solved by Newton iteration.
pub fn trapezoid_step<F>(f: &F, t: f64, y: &DVector<f64>, h: f64) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let n = y.len();
    let f0 = f(t, y);
    let mut z = y + &f0 * h; // explicit Euler predictor
    let jac = jacobian_fd(f, t + h, &z);
    let lhs = DMatrix::identity(n, n) - jac * (0.5 * h);
    let lu = lhs.lu();
    for _ in 0..50 {
        let g = &z - y - (&f0 + f(t + h, &z)) * (0.5 * h);
        let dz = lu.solve(&g).ok_or_else(|| Error::numerical("singular Newton matrix in trapezoidal step"))?;
        z -= &dz;
        if dz.norm() <= 1e-13 * (1.0 + z.norm()) {
            return Ok(z);
        }
    }
    Err(Error::convergence("Newton iteration in trapezoidal step did not converge"))
}

/// Trapezoidal integration with step-doubling error control (local
/// tolerance `tol` on the max-norm). Returns the state at t1.
pub fn trapezoid_adaptive<F>(f: F, y0: DVector<f64>, t0: f64, t1: f64, h0: f64, tol: f64) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    let mut t = t0;
    let mut y = y0;
    let mut h = h0.min(t1 - t0);
    let mut guard = 0usize;
    while t < t1 {
        guard += 1;
        if guard > 10_000_000 {
            return Err(Error::convergence("trapezoidal integrator exceeded its step budget"));
        }
        h = h.min(t1 - t);
        let full = trapezoid_step(&f, t, &y, h)?;
        let half = trapezoid_step(&f, t, &y, 0.5 * h)?;
        let two_half = trapezoid_step(&f, t + 0.5 * h, &half, 0.5 * h)?;
        let err = (&full - &two_half).amax() / 3.0;
        if err <= tol || h < 1e-14 * (1.0 + t.abs()) {
            t += h;
            // Richardson extrapolation of the two second-order estimates.
            y = &two_half + (&two_half - &full) / 3.0;
            let grow = if err > 0.0 { (tol / err).powf(1.0 / 3.0).min(4.0) } else { 4.0 };
            h *= 0.9 * grow;
        } else {
            h *= (0.9 * (tol / err).powf(1.0 / 3.0)).max(0.1);
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    #[test]
    fn rk4_exponential_decay() {
        let y = rk4(|_, y: &DVector<f64>| -y, DVector::from_element(1, 1.0), 0.0, 2.0, 200);
        assert!((y[0] - (-2.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn rk4_complex_phase() {
        let i = C64::new(0.0, 1.0);
        let y = rk4(move |_, y: &DVector<C64>| y * (-i), DVector::from_element(1, C64::new(1.0, 0.0)), 0.0, 3.0, 300);
        assert!((y[0] - C64::new(3.0f64.cos(), -3.0f64.sin())).norm() < 1e-9);
    }

    #[test]
    fn trapezoid_handles_stiff_decay() {
        // y' = −1000(y − cos t) − sin t has the slow solution y = cos t.
        let f = |t: f64, y: &DVector<f64>| DVector::from_element(1, -1000.0 * (y[0] - t.cos()) - t.sin());
        let y = trapezoid_adaptive(f, DVector::from_element(1, 1.0), 0.0, 1.0, 0.1, 1e-9).unwrap();
        assert!((y[0] - 1f64.cos()).abs() < 1e-6);
    }
}
