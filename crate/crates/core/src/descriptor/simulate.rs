use super::DescriptorRealization;
use crate::error::{Error, Result};
use crate::scalar::{cabs, lit, Real};
use nalgebra::DVector;

/// Finite poles closer than this to the origin make a step response
/// unsettled on any practical horizon, and are rejected.
pub const ORIGIN_POLE_RADIUS: f64 = 1e-3;

/// Sampled output `y(t)` of a unit step response.
#[derive(Clone, Debug, PartialEq)]
pub struct StepResponse<T: Real> {
    pub t: Vec<T>,
    pub y: Vec<T>,
}

/// Unit-step response from rest using the trapezoidal rule
/// `(E - h/2 A) x+ = (E + h/2 A) x + h B`.
pub fn simulate_step<T: Real>(rlz: &DescriptorRealization<T>, t_end: T, dt: T) -> Result<StepResponse<T>> {
    if !(dt > T::zero()) || !(t_end >= T::zero()) || !dt.is_finite() || !t_end.is_finite() {
        return Err(Error::Argument(format!("invalid step size {dt} or horizon {t_end}")));
    }
    let steps = (t_end / dt).round().to_f64() as usize;
    let n = rlz.order();
    if n > 0 && !rlz.has_invertible_e(lit(1e-12)) {
        return Err(Error::SingularE("reduce the descriptor index before simulating".into()));
    }
    if let Some(p) = rlz.poles()?.finite.into_iter().find(|p| cabs(*p) < lit(ORIGIN_POLE_RADIUS)) {
        return Err(Error::PoleNearOrigin { re: p.re.to_f64(), im: p.im.to_f64() });
    }
    let half = dt / lit(2.0);
    let lhs = (rlz.e() - rlz.a() * half).lu();
    let rhs = rlz.e() + rlz.a() * half;
    let drive = rlz.b() * dt;
    let mut x = DVector::zeros(n);
    let mut t = Vec::with_capacity(steps + 1);
    let mut y = Vec::with_capacity(steps + 1);
    for k in 0..=steps {
        t.push(dt * lit(k as f64));
        y.push((rlz.c() * &x)[(0, 0)] + rlz.d());
        if k < steps && n > 0 {
            x = lhs
                .solve(&(&rhs * &x + &drive))
                .ok_or_else(|| Error::Argument("step size hits an eigenvalue of the pencil".into()))?;
        }
    }
    Ok(StepResponse { t, y })
}
