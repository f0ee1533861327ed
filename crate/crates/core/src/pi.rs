//! Structured PI synthesis against a weighted mixed-sensitivity objective.
//!
//! The performance channel from reference to `(We S, Wu K S)` is evaluated
//! pointwise on a frequency grid; its worst-case Euclidean norm is minimized
//! over `(kp, ki)` by multi-start Nelder-Mead.

use crate::descriptor::{DescriptorRealization, TransferMap};
use crate::error::{Error, Result};
use crate::scalar::{cabs, jw, lit, Real};
use nalgebra::{Complex, DMatrix, DVector, RowDVector};
use rayon::prelude::*;
use serde::Serialize;

/// `K(s) = kp + ki/s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PIController<T: Real> {
    pub kp: T,
    pub ki: T,
}

impl<T: Real> PIController<T> {
    pub fn new(kp: T, ki: T) -> Self {
        Self { kp, ki }
    }

    pub fn eval(&self, s: Complex<T>) -> Complex<T> {
        Complex::new(self.kp, T::zero()) + Complex::new(self.ki, T::zero()) / s
    }

    pub fn realization(&self) -> DescriptorRealization<T> {
        DescriptorRealization::pi(self.kp, self.ki)
    }

    pub fn transfer(&self) -> TransferMap<T> {
        TransferMap::pi(self.kp, self.ki)
    }
}

/// Error and control-effort weights.
#[derive(Clone, Debug)]
pub struct WeightingFilters<T: Real> {
    pub we: TransferMap<T>,
    pub wu: TransferMap<T>,
}

impl<T: Real> Default for WeightingFilters<T> {
    /// `We = 10 (s + 1)/s`, `Wu = (s + 10)/(s + 1000)`.
    fn default() -> Self {
        let ten = lit::<T>(10.0);
        let we = TransferMap::from_realization("10(s+1)/s", DescriptorRealization::pi(ten, ten));
        let wu = DescriptorRealization::from_state_space(
            DMatrix::from_element(1, 1, lit(-1000.0)),
            DVector::from_element(1, T::one()),
            RowDVector::from_element(1, lit(-990.0)),
            T::one(),
        )
        .expect("scalar realization");
        Self { we, wu: TransferMap::from_realization("(s+10)/(s+1000)", wu) }
    }
}

impl<T: Real> WeightingFilters<T> {
    /// Both weights identically one.
    pub fn unit() -> Self {
        Self { we: TransferMap::constant(T::one()), wu: TransferMap::constant(T::one()) }
    }
}

/// Worst-case weighted closed-loop gain on a grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Performance<T: Real> {
    pub gamma: T,
    /// Grid frequency of the maximum.
    pub omega: T,
}

/// Plant and weights sampled once on the grid.
struct Objective<T: Real> {
    s: Vec<Complex<T>>,
    h: Vec<Complex<T>>,
    we: Vec<Complex<T>>,
    wu: Vec<Complex<T>>,
}

impl<T: Real> Objective<T> {
    fn new(plant: &TransferMap<T>, w: &WeightingFilters<T>, grid: &[T]) -> Result<Self> {
        if grid.is_empty() {
            return Err(Error::Argument("empty frequency grid".into()));
        }
        if let Some(&w0) = grid.iter().find(|&&w| !(w > T::zero()) || !w.is_finite()) {
            return Err(Error::Argument(format!("grid frequencies must be positive and finite, got {w0}")));
        }
        Ok(Self {
            s: grid.iter().map(|&w| jw(w)).collect(),
            h: plant.response(grid)?,
            we: w.we.response(grid)?,
            wu: w.wu.response(grid)?,
        })
    }

    fn eval(&self, k: &PIController<T>) -> Result<Performance<T>> {
        let mut best = Performance { gamma: T::zero(), omega: T::zero() };
        for i in 0..self.s.len() {
            let kv = k.eval(self.s[i]);
            let l = self.h[i] * kv;
            let den = l + T::one();
            if cabs(den) <= T::default_epsilon() * cabs(l).max(T::one()) {
                return Err(Error::LoopSingularity { re: T::zero().to_f64(), im: self.s[i].im.to_f64() });
            }
            let sens = Complex::new(T::one(), T::zero()) / den;
            let z1 = cabs(self.we[i] * sens);
            let z2 = cabs(self.wu[i] * kv * sens);
            let g = z1.hypot(z2);
            if !(g <= best.gamma) {
                best = Performance { gamma: g, omega: self.s[i].im };
            }
        }
        Ok(best)
    }
}

/// `max_w || (We S, Wu K S)(i w) ||_2` with `S = 1/(1 + H K)`.
pub fn eval_weighted_performance<T: Real>(
    plant: &TransferMap<T>,
    k: &PIController<T>,
    w: &WeightingFilters<T>,
    grid: &[T],
) -> Result<Performance<T>> {
    Objective::new(plant, w, grid)?.eval(k)
}

/// Closed-loop poles of a rational plant under PI feedback.
pub fn closed_loop_poles<T: Real>(plant: &DescriptorRealization<T>, k: &PIController<T>) -> Result<Vec<Complex<T>>> {
    Ok(plant.series(&k.realization()).feedback()?.poles()?.finite)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PiOptions<T: Real> {
    /// Box for both gains.
    pub bounds: (T, T),
    /// Log-spaced starts along `kp` and `ki`.
    pub starts: (usize, usize),
    pub max_iter: usize,
    /// Simplex size tolerance in decades.
    pub xtol: T,
    /// Relative spread tolerance on the objective.
    pub ftol: T,
    /// Treat closed-loop instability of a rational plant as infeasible.
    pub require_stability: bool,
}

impl<T: Real> Default for PiOptions<T> {
    fn default() -> Self {
        Self {
            bounds: (lit(1e-3), lit(10.0)),
            starts: (5, 4),
            max_iter: 500,
            xtol: lit(1e-9),
            ftol: lit(1e-12),
            require_stability: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PiDesign<T: Real> {
    pub controller: PIController<T>,
    pub performance: Performance<T>,
    /// Objective at the user start point (infinite if infeasible).
    pub start_gamma: T,
    /// Finite closed-loop poles when the plant is rational.
    pub closed_loop_poles: Option<Vec<Complex<T>>>,
    /// A-posteriori stability, `None` for irrational plants.
    pub stable: Option<bool>,
}

/// Multi-start Nelder-Mead over `(log10 kp, log10 ki)` within the box.
///
/// The user start is evaluated as a candidate in its own right, so the
/// returned objective never exceeds its value.
pub fn optimize_pi<T: Real>(
    plant: &TransferMap<T>,
    w: &WeightingFilters<T>,
    grid: &[T],
    start: PIController<T>,
    opts: &PiOptions<T>,
) -> Result<PiDesign<T>> {
    let obj = Objective::new(plant, w, grid)?;
    let rational = plant.realization();
    let cost = |k: &PIController<T>| -> T {
        if opts.require_stability {
            if let Some(p) = rational {
                match closed_loop_poles(p, k) {
                    Ok(poles) if poles.iter().all(|z| z.re < T::zero()) => {}
                    _ => return T::max_value().unwrap(),
                }
            }
        }
        obj.eval(k).map(|p| p.gamma).unwrap_or_else(|_| T::max_value().unwrap())
    };
    let (lo, hi) = (opts.bounds.0.log10(), opts.bounds.1.log10());
    let to_k = |x: [T; 2]| PIController::new(lit::<T>(10.0).powf(x[0]), lit::<T>(10.0).powf(x[1]));
    let clamp = |x: [T; 2]| [x[0].max(lo).min(hi), x[1].max(lo).min(hi)];
    let f = |x: [T; 2]| cost(&to_k(clamp(x)));

    let axis = |n: usize| -> Vec<T> {
        if n <= 1 {
            vec![(lo + hi) / lit(2.0)]
        } else {
            (0..n).map(|i| lo + (hi - lo) * lit::<T>(i as f64 / (n - 1) as f64)).collect()
        }
    };
    let mut seeds: Vec<[T; 2]> = Vec::new();
    for &a in &axis(opts.starts.0) {
        for &b in &axis(opts.starts.1) {
            seeds.push([a, b]);
        }
    }
    let start_ok = start.kp > T::zero() && start.ki > T::zero();
    if start_ok {
        seeds.push(clamp([start.kp.log10(), start.ki.log10()]));
    }
    let start_gamma = cost(&start);
    let infeasible = T::max_value().unwrap();

    let results: Vec<([T; 2], T)> =
        seeds.par_iter().map(|&x0| nelder_mead(&f, x0, lit(0.25), opts.max_iter, opts.xtol, opts.ftol)).collect();
    let mut best: Option<(PIController<T>, T)> = None;
    if start_gamma < infeasible {
        best = Some((start, start_gamma));
    }
    for (x, fx) in results {
        if fx < infeasible && best.as_ref().map_or(true, |b| fx < b.1) {
            best = Some((to_k(clamp(x)), fx));
        }
    }
    let (controller, _) = best.ok_or_else(|| Error::Infeasible("every start gives an unstable or singular loop".into()))?;
    let performance = obj.eval(&controller)?;
    let (closed_loop_poles, stable) = match rational {
        Some(p) => {
            let poles = closed_loop_poles(p, &controller)?;
            let st = poles.iter().all(|z| z.re < T::zero());
            (Some(poles), Some(st))
        }
        None => (None, None),
    };
    Ok(PiDesign { controller, performance, start_gamma, closed_loop_poles, stable })
}

/// Plain Nelder-Mead on `R^2` with standard coefficients.
fn nelder_mead<T: Real, F: Fn([T; 2]) -> T>(f: &F, x0: [T; 2], step: T, max_iter: usize, xtol: T, ftol: T) -> ([T; 2], T) {
    let half = lit::<T>(0.5);
    let two = lit::<T>(2.0);
    let mut simplex = [x0, [x0[0] + step, x0[1]], [x0[0], x0[1] + step]];
    let mut fv = [f(simplex[0]), f(simplex[1]), f(simplex[2])];
    let lerp = |a: [T; 2], b: [T; 2], t: T| [a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t];
    for _ in 0..max_iter {
        let mut idx = [0usize, 1, 2];
        idx.sort_by(|&i, &j| fv[i].partial_cmp(&fv[j]).unwrap_or(std::cmp::Ordering::Equal));
        simplex = [simplex[idx[0]], simplex[idx[1]], simplex[idx[2]]];
        fv = [fv[idx[0]], fv[idx[1]], fv[idx[2]]];
        let size = (1..3)
            .map(|i| (simplex[i][0] - simplex[0][0]).abs().max((simplex[i][1] - simplex[0][1]).abs()))
            .fold(T::zero(), |a, b| a.max(b));
        let spread = (fv[2] - fv[0]).abs();
        if size <= xtol && spread <= ftol * (fv[0].abs() + T::tiny()) {
            break;
        }
        let centroid = lerp(simplex[0], simplex[1], half);
        let reflect = lerp(centroid, simplex[2], -T::one());
        let fr = f(reflect);
        if fr < fv[0] {
            let expand = lerp(centroid, simplex[2], -two);
            let fe = f(expand);
            if fe < fr {
                simplex[2] = expand;
                fv[2] = fe;
            } else {
                simplex[2] = reflect;
                fv[2] = fr;
            }
        } else if fr < fv[1] {
            simplex[2] = reflect;
            fv[2] = fr;
        } else {
            let (target, ft) = if fr < fv[2] { (reflect, fr) } else { (simplex[2], fv[2]) };
            let contract = lerp(centroid, target, half);
            let fc = f(contract);
            if fc < ft {
                simplex[2] = contract;
                fv[2] = fc;
            } else {
                for i in 1..3 {
                    simplex[i] = lerp(simplex[0], simplex[i], half);
                    fv[i] = f(simplex[i]);
                }
            }
        }
    }
    let best = (0..3).min_by(|&i, &j| fv[i].partial_cmp(&fv[j]).unwrap_or(std::cmp::Ordering::Equal)).unwrap();
    (simplex[best], fv[best])
}

/// Sensitivity `S` and complementary sensitivity `1 - S` on a grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SensitivityPoint<T: Real> {
    pub omega: T,
    pub s: Complex<T>,
    pub t: Complex<T>,
}

pub fn sensitivity_sweep<T: Real>(
    plant: &TransferMap<T>,
    k: &PIController<T>,
    grid: &[T],
) -> Result<Vec<SensitivityPoint<T>>> {
    let h = plant.response(grid)?;
    grid.iter()
        .zip(h)
        .map(|(&w, hv)| {
            let l = hv * k.eval(jw(w));
            let den = l + T::one();
            if cabs(den) <= T::default_epsilon() * cabs(l).max(T::one()) {
                return Err(Error::LoopSingularity { re: 0.0, im: w.to_f64() });
            }
            let s = Complex::new(T::one(), T::zero()) / den;
            Ok(SensitivityPoint { omega: w, s, t: Complex::new(T::one(), T::zero()) - s })
        })
        .collect()
}
