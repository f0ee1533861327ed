//! Closed-form frequency response of the boundary-controlled transport
//! equation driven through a second-order actuator.
//!
//! The transfer from the boundary input to the output at abscissa `x` is
//!
//! ```text
//! H(x, s) = sqrt(pi) / sqrt(s) * exp(-x^2 s) * w0^2 / (s^2 + m w0 s + w0^2)
//! ```
//!
//! with the principal branch of `sqrt(s)`. `H` is singular at `s = 0` and
//! vanishes at infinity in the right half-plane.

use crate::descriptor::TransferMap;
use crate::error::{Error, Result};
use crate::scalar::{cabs, cexp, csqrt, jw, lit, Real};
use num_complex::Complex;

/// Measurement abscissa: element 33 (one-based) of the 50-point grid on [0, 3].
pub const DEFAULT_MEASUREMENT_POINT: f64 = 96.0 / 49.0;

/// Physical parameters of the driving example.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PlantParameters<T: Real> {
    /// Space-domain length `L`.
    pub length: T,
    /// Actuator natural frequency `w0` in rad/s.
    pub omega0: T,
    /// Actuator damping coefficient `m`.
    pub damping: T,
    /// Number of points of the uniform spatial grid.
    pub n_x: usize,
    /// Measurement abscissa `x_m`.
    pub x_m: T,
}

impl<T: Real> Default for PlantParameters<T> {
    fn default() -> Self {
        Self {
            length: lit(3.0),
            omega0: lit(3.0),
            damping: lit(0.5),
            n_x: 50,
            x_m: lit(DEFAULT_MEASUREMENT_POINT),
        }
    }
}

impl<T: Real> PlantParameters<T> {
    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        if !(self.length > zero) {
            return Err(Error::Argument("length must be positive".into()));
        }
        if !(self.omega0 > zero) {
            return Err(Error::Argument("omega0 must be positive".into()));
        }
        if !(self.damping > zero) {
            return Err(Error::Argument("damping must be positive".into()));
        }
        if self.n_x < 2 {
            return Err(Error::Argument("n_x must be at least 2".into()));
        }
        if self.x_m < zero || self.x_m > self.length {
            return Err(Error::Argument(format!("x_m = {} outside [0, L]", self.x_m)));
        }
        Ok(())
    }

    /// Uniform spatial grid `linspace(0, L, n_x)`.
    pub fn spatial_grid(&self) -> Vec<T> {
        let step = self.length / lit::<T>((self.n_x - 1) as f64);
        (0..self.n_x).map(|k| lit::<T>(k as f64) * step).collect()
    }

    /// The irrational transfer at the measurement point as a [`TransferMap`].
    pub fn measured_transfer(&self) -> TransferMap<T> {
        self.transfer_at(self.x_m)
    }

    pub fn transfer_at(&self, x: T) -> TransferMap<T> {
        let p = *self;
        TransferMap::new(format!("H(x={x}, s)"), move |s| eval_plant(&p, x, s))
    }
}

/// Actuator response `w0^2 / (s^2 + m w0 s + w0^2)`.
pub fn eval_actuator<T: Real>(p: &PlantParameters<T>, s: Complex<T>) -> Result<Complex<T>> {
    let w2 = p.omega0 * p.omega0;
    let den = s * s + s * (p.damping * p.omega0) + Complex::new(w2, T::zero());
    let scale = w2.max(cabs(s * s));
    if cabs(den) <= T::default_epsilon() * lit::<T>(16.0) * scale {
        return Err(Error::pole_hit(s));
    }
    Ok(Complex::new(w2, T::zero()) / den)
}

/// Irrational plant response at abscissa `x`.
pub fn eval_plant<T: Real>(p: &PlantParameters<T>, x: T, s: Complex<T>) -> Result<Complex<T>> {
    if s.re == T::zero() && s.im == T::zero() {
        return Err(Error::Singularity("the plant has an infinite response at s = 0".into()));
    }
    if x < T::zero() || x > p.length {
        return Err(Error::Argument(format!("x = {x} outside [0, {}]", p.length)));
    }
    let act = eval_actuator(p, s)?;
    let root_pi = Complex::new(T::pi().sqrt(), T::zero());
    let transport = cexp(s * (-(x * x)));
    Ok(root_pi / csqrt(s) * transport * act)
}

/// `n` logarithmically spaced angular frequencies in `[w_min, w_max]`.
pub fn log_grid<T: Real>(n: usize, w_min: T, w_max: T) -> Result<Vec<T>> {
    if n < 2 {
        return Err(Error::Argument(format!("grid needs at least 2 points, got {n}")));
    }
    if !(w_min > T::zero()) || !(w_max > w_min) || !w_max.is_finite() {
        return Err(Error::Argument(format!(
            "grid bounds must satisfy 0 < w_min < w_max, got [{w_min}, {w_max}]"
        )));
    }
    let lo = w_min.log10();
    let hi = w_max.log10();
    let step = (hi - lo) / lit::<T>((n - 1) as f64);
    let ten = lit::<T>(10.0);
    let mut grid: Vec<T> = (0..n).map(|k| ten.powf(lo + step * lit::<T>(k as f64))).collect();
    grid[0] = w_min;
    grid[n - 1] = w_max;
    Ok(grid)
}

/// Imaginary-axis sample points `i w_k` on a logarithmic grid.
pub fn sample_grid<T: Real>(n: usize, w_min: T, w_max: T) -> Result<Vec<Complex<T>>> {
    Ok(log_grid(n, w_min, w_max)?.into_iter().map(jw).collect())
}

/// Bounds of the identification grid: `2 pi 10^-2` to `2 pi` rad/s.
pub fn default_band<T: Real>() -> (T, T) {
    let two_pi = T::two_pi();
    (two_pi * lit(1e-2), two_pi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn defaults() -> PlantParameters<f64> {
        PlantParameters::default()
    }

    #[test]
    fn actuator_unit_dc_gain() {
        let h = eval_actuator(&defaults(), Complex::new(0.0, 0.0)).unwrap();
        assert_eq!(h, Complex::new(1.0, 0.0));
        for (w0, m) in [(0.3, 0.1), (7.0, 2.5), (1e3, 1e-3)] {
            let p = PlantParameters { omega0: w0, damping: m, ..defaults() };
            let h = eval_actuator(&p, Complex::new(0.0, 0.0)).unwrap();
            assert_relative_eq!(h.re, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn actuator_at_natural_frequency() {
        let h = eval_actuator(&defaults(), Complex::new(0.0, 3.0)).unwrap();
        assert_relative_eq!(h.re, 0.0, epsilon = 1e-14);
        assert_relative_eq!(h.im, -2.0, epsilon = 1e-14);
    }

    #[test]
    fn actuator_at_one_hertz() {
        // w0^2 / (w0^2 - w^2 + i m w0 w) with w = 2 pi, evaluated by hand
        let w = 2.0 * std::f64::consts::PI;
        let den_re = 9.0 - w * w;
        let den_im = 1.5 * w;
        let mag2 = den_re * den_re + den_im * den_im;
        let expected = Complex::new(9.0 * den_re / mag2, -9.0 * den_im / mag2);
        let h = eval_actuator(&defaults(), Complex::new(0.0, w)).unwrap();
        assert_relative_eq!(h.re, expected.re, max_relative = 1e-14);
        assert_relative_eq!(h.im, expected.im, max_relative = 1e-14);
    }

    #[test]
    fn actuator_pole_is_reported() {
        // roots of s^2 + 1.5 s + 9
        let s = Complex::new(-0.75, (9.0f64 - 0.5625).sqrt());
        assert!(matches!(eval_actuator(&defaults(), s), Err(Error::PoleHit { .. })));
    }

    #[test]
    fn plant_against_hand_formula() {
        // |H| = sqrt(pi / w) |act| and arg H = -pi/4 - x^2 w + arg act
        let p = defaults();
        let w = 2.0 * std::f64::consts::PI * 0.1;
        let act = eval_actuator(&p, Complex::new(0.0, w)).unwrap();
        let mag = (std::f64::consts::PI / w).sqrt() * act.norm();
        let phase = -std::f64::consts::FRAC_PI_4 - p.x_m * p.x_m * w + act.arg();
        let h = eval_plant(&p, p.x_m, Complex::new(0.0, w)).unwrap();
        assert_relative_eq!(h.re, mag * phase.cos(), max_relative = 1e-13);
        assert_relative_eq!(h.im, mag * phase.sin(), max_relative = 1e-13);
    }

    #[test]
    fn plant_limits() {
        let p = defaults();
        assert!(matches!(
            eval_plant(&p, p.x_m, Complex::new(0.0, 0.0)),
            Err(Error::Singularity(_))
        ));
        let small = eval_plant(&p, p.x_m, Complex::new(1e-10, 0.0)).unwrap().norm();
        let smaller = eval_plant(&p, p.x_m, Complex::new(1e-14, 0.0)).unwrap().norm();
        assert!(small > 1e4 && smaller > 100.0 * small);
        let far = eval_plant(&p, p.x_m, Complex::new(0.0, 1e4)).unwrap().norm();
        assert!(far < 1e-8);
        let right = eval_plant(&p, p.x_m, Complex::new(5.0, 0.0)).unwrap().norm();
        let further = eval_plant(&p, p.x_m, Complex::new(10.0, 0.0)).unwrap().norm();
        assert!(further < right * 1e-6);
    }

    #[test]
    fn plant_rejects_abscissa_outside_domain() {
        let p = defaults();
        assert!(eval_plant(&p, 3.5, Complex::new(0.0, 1.0)).is_err());
        assert!(eval_plant(&p, -0.1, Complex::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn measurement_point_is_grid_element() {
        let p = defaults();
        let grid = p.spatial_grid();
        assert_eq!(grid.len(), 50);
        assert_relative_eq!(grid[(50 * 2) / 3 - 1], p.x_m, epsilon = 1e-15);
        assert_relative_eq!(p.x_m, 1.9592, epsilon = 5e-5);
    }

    #[test]
    fn grid_endpoints_and_decades() {
        let g = sample_grid(2, 0.5, 7.0).unwrap();
        assert_eq!(g, vec![Complex::new(0.0, 0.5), Complex::new(0.0, 7.0)]);
        let g = log_grid(3, 1.0, 100.0).unwrap();
        assert_relative_eq!(g[0], 1.0);
        assert_relative_eq!(g[1], 10.0, max_relative = 1e-15);
        assert_relative_eq!(g[2], 100.0);
        let (lo, hi) = default_band::<f64>();
        let g = log_grid(200, lo, hi).unwrap();
        assert_eq!(g.len(), 200);
        assert_eq!(g[0], 2.0 * std::f64::consts::PI * 1e-2);
        assert_eq!(g[199], 2.0 * std::f64::consts::PI);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_rejects_bad_bounds() {
        assert!(log_grid(1, 1.0, 2.0).is_err());
        assert!(log_grid(5, 0.0, 2.0).is_err());
        assert!(log_grid(5, -1.0, 2.0).is_err());
        assert!(log_grid(5, 3.0, 2.0).is_err());
    }

    #[test]
    fn single_precision_evaluation() {
        let p = PlantParameters::<f32>::default();
        let h32 = eval_plant(&p, p.x_m, Complex::new(0.0, 0.5f32)).unwrap();
        let h64 = eval_plant(&defaults(), defaults().x_m, Complex::new(0.0, 0.5)).unwrap();
        assert_relative_eq!(h32.re as f64, h64.re, max_relative = 1e-5);
        assert_relative_eq!(h32.im as f64, h64.im, max_relative = 1e-5);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn conjugate_symmetry(re in -5.0f64..5.0, im in 1e-3f64..50.0) {
                let p = PlantParameters::default();
                let s = Complex::new(re, im);
                let a = eval_plant(&p, p.x_m, s.conj()).unwrap();
                let b = eval_plant(&p, p.x_m, s).unwrap().conj();
                prop_assert!((a - b).norm() <= 1e-12 * b.norm().max(1e-300));
            }

            #[test]
            fn grid_is_strictly_increasing(n in 2usize..400, lo in 1e-4f64..1.0, span in 1.01f64..1e4) {
                let g = log_grid(n, lo, lo * span).unwrap();
                prop_assert_eq!(g.len(), n);
                prop_assert!(g.windows(2).all(|w| w[1] > w[0]));
            }
        }
    }
}
