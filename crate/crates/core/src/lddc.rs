//! Data-driven controller design: the ideal controller that would produce a
//! reference closed loop, its Loewner reduction, and a small-gain test on the
//! reduction error.

use crate::data::FrequencyDataset;
use crate::descriptor::{DescriptorRealization, TransferMap, DEFLATION_TOL};
use crate::error::{Error, Result};
use crate::loewner::{build_pencil, LoewnerPencil};
use crate::scalar::{cabs, jw, lit, Real};
use nalgebra::{Complex, DMatrix, DVector, RowDVector};
use rayon::prelude::*;
use serde::Serialize;

/// Frequency (rad/s) at which a constraint at infinity is probed.
pub const INFINITY_PROBE: f64 = 1e6;

/// Absolute tolerance for interpolation constraints on `M`.
pub const CONSTRAINT_TOL: f64 = 1e-6;

/// Where an interpolation constraint on the reference model applies.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConstraintPoint<T: Real> {
    Finite(Complex<T>),
    Infinity,
}

impl<T: Real> ConstraintPoint<T> {
    fn probe(&self) -> Complex<T> {
        match *self {
            ConstraintPoint::Finite(z) => z,
            ConstraintPoint::Infinity => jw(lit(INFINITY_PROBE)),
        }
    }
}

impl<T: Real> std::fmt::Display for ConstraintPoint<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConstraintPoint::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            ConstraintPoint::Infinity => write!(f, "inf"),
        }
    }
}

/// Reference closed loop `M(s)` with the points where it must vanish
/// (`zeros`) or equal one (`ones`).
#[derive(Clone, Debug)]
pub struct ReferenceModelSpec<T: Real> {
    pub transfer: TransferMap<T>,
    pub zeros: Vec<ConstraintPoint<T>>,
    pub ones: Vec<ConstraintPoint<T>>,
}

impl<T: Real> ReferenceModelSpec<T> {
    /// `M` with the constraints of a plant that is infinite at the origin
    /// and strictly proper: `M(inf) = 0`, `M(0) = 1`.
    pub fn new(transfer: TransferMap<T>) -> Self {
        Self {
            transfer,
            zeros: vec![ConstraintPoint::Infinity],
            ones: vec![ConstraintPoint::Finite(Complex::new(T::zero(), T::zero()))],
        }
    }

    /// `1 / (s^2/w0^2 + 2 s/w0 + 1)`.
    pub fn second_order(omega0: T) -> Self {
        let w2 = omega0 * omega0;
        let a = DMatrix::from_row_slice(2, 2, &[T::zero(), T::one(), -w2, -lit::<T>(2.0) * omega0]);
        let b = DVector::from_vec(vec![T::zero(), T::one()]);
        let c = RowDVector::from_vec(vec![w2, T::zero()]);
        let rlz = DescriptorRealization::from_state_space(a, b, c, T::zero()).expect("consistent dimensions");
        Self::new(TransferMap::from_realization(format!("1/(s^2/{w2} + 2s/{omega0} + 1)"), rlz))
    }

    /// Complementary sensitivity `P K / (1 + P K)` of a rational loop.
    pub fn closed_loop(plant: &DescriptorRealization<T>, controller: &DescriptorRealization<T>) -> Result<Self> {
        let cl = plant.series(controller).feedback()?;
        Ok(Self::new(TransferMap::from_realization("PK/(1+PK)", cl)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstraintCheck<T: Real> {
    pub point: ConstraintPoint<T>,
    /// Required value, 0 or 1.
    pub target: T,
    pub value: Complex<T>,
    pub residual: T,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AchievabilityReport<T: Real> {
    pub checks: Vec<ConstraintCheck<T>>,
    pub achievable: bool,
}

/// Evaluates the declared constraints of `M`, infinity probed at
/// [`INFINITY_PROBE`].
pub fn check_achievability<T: Real>(m_ref: &ReferenceModelSpec<T>) -> Result<AchievabilityReport<T>> {
    let tol = lit::<T>(CONSTRAINT_TOL);
    let targets = m_ref.zeros.iter().map(|p| (*p, T::zero())).chain(m_ref.ones.iter().map(|p| (*p, T::one())));
    let mut checks = Vec::new();
    for (point, target) in targets {
        let s = point.probe();
        let value = m_ref.transfer.eval(s).map_err(|e| Error::at_omega(s.im.to_f64(), e))?;
        let residual = cabs(value - Complex::new(target, T::zero()));
        checks.push(ConstraintCheck { point, target, value, residual, pass: residual <= tol });
    }
    let achievable = checks.iter().all(|c| c.pass);
    Ok(AchievabilityReport { checks, achievable })
}

/// `K*(z) = M(z) / (phi(z) (1 - M(z)))` on the plant grid, conjugate-closed.
pub fn ideal_controller_response<T: Real>(
    plant_data: &FrequencyDataset<T>,
    m_ref: &ReferenceModelSpec<T>,
) -> Result<FrequencyDataset<T>> {
    let reps: Vec<_> = plant_data.samples().iter().filter(|s| s.z.im >= T::zero()).copied().collect();
    let samples = reps
        .par_iter()
        .map(|s| {
            let omega = s.z.im.to_f64();
            if cabs(s.phi) == T::zero() {
                return Err(Error::DivisionByZero { omega, what: "plant response is zero".into() });
            }
            let m = m_ref.transfer.eval(s.z).map_err(|e| Error::at_omega(omega, e))?;
            let one_minus = Complex::new(T::one(), T::zero()) - m;
            if cabs(one_minus) <= T::default_epsilon() {
                return Err(Error::DivisionByZero { omega, what: "reference model equals one".into() });
            }
            Ok(crate::data::FrequencySample::new(s.z, m / (s.phi * one_minus)))
        })
        .collect::<Result<Vec<_>>>()?;
    FrequencyDataset::from_samples(samples)?.close_conjugate()
}

/// Small-gain bound `max_i |phi_i (1 - M(z_i))|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmallGain<T: Real> {
    pub gamma: T,
    /// Grid frequency of the maximum.
    pub omega: T,
    /// `gamma = 0`: the test certifies nothing and every verdict stays
    /// inconclusive.
    pub vacuous: bool,
}

impl<T: Real> SmallGain<T> {
    /// Error level below which a reduced controller is certified.
    pub fn threshold(&self) -> T {
        if self.vacuous {
            T::zero()
        } else {
            T::one() / self.gamma
        }
    }
}

fn small_gain_from<T: Real>(values: impl Iterator<Item = (Complex<T>, Complex<T>, Complex<T>)>) -> SmallGain<T> {
    let mut best = SmallGain { gamma: T::zero(), omega: T::zero(), vacuous: true };
    for (z, phi, m) in values {
        let g = cabs(phi * (Complex::new(T::one(), T::zero()) - m));
        if g > best.gamma {
            best.gamma = g;
            best.omega = z.im;
        }
    }
    best.vacuous = best.gamma == T::zero();
    best
}

/// `gamma` with `M` evaluated on the plant grid.
pub fn small_gain_bound<T: Real>(
    plant_data: &FrequencyDataset<T>,
    m_ref: &ReferenceModelSpec<T>,
) -> Result<SmallGain<T>> {
    let m = m_ref.transfer.eval_many(&plant_data.points())?;
    Ok(small_gain_from(plant_data.samples().iter().zip(m).map(|(s, m)| (s.z, s.phi, m))))
}

/// `gamma` from sampled `M`; both datasets must share their points.
pub fn small_gain_bound_data<T: Real>(
    plant_data: &FrequencyDataset<T>,
    m_data: &FrequencyDataset<T>,
) -> Result<SmallGain<T>> {
    let mut values = Vec::with_capacity(plant_data.len());
    for s in plant_data.samples() {
        let m = m_data.lookup(s.z).ok_or(Error::GridMismatch { re: s.z.re.to_f64(), im: s.z.im.to_f64() })?;
        values.push((s.z, s.phi, m));
    }
    if m_data.len() != plant_data.len() {
        let extra = m_data.samples().iter().find(|s| plant_data.lookup(s.z).is_none()).map(|s| s.z);
        if let Some(z) = extra {
            return Err(Error::GridMismatch { re: z.re.to_f64(), im: z.im.to_f64() });
        }
    }
    Ok(small_gain_from(values.into_iter()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SafetyVerdict {
    /// Reduction error below `1/gamma`: internal stability certified.
    Safe,
    /// The sufficient test is silent; never read as unstable.
    Inconclusive,
}

impl std::fmt::Display for SafetyVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SafetyVerdict::Safe => "safe",
            SafetyVerdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug)]
pub struct SweepRow<T: Real> {
    /// Requested McMillan degree.
    pub order: usize,
    /// Dimension of the Loewner projection the row was built from.
    pub projection: usize,
    pub realization: Option<DescriptorRealization<T>>,
    /// `max_i |K_r(z_i) - K*_i|` over the ideal-controller data.
    pub error: Option<T>,
    pub verdict: SafetyVerdict,
    pub failure: Option<String>,
}

#[derive(Clone, Debug)]
pub struct ReductionSweep<T: Real> {
    pub rows: Vec<SweepRow<T>>,
    pub bound: Option<SmallGain<T>>,
}

impl<T: Real> ReductionSweep<T> {
    /// Marks rows whose error is strictly below `1/gamma` as safe.
    pub fn apply_bound(&mut self, bound: SmallGain<T>) {
        let thr = bound.threshold();
        for row in &mut self.rows {
            row.verdict = match row.error {
                Some(e) if !bound.vacuous && e < thr => SafetyVerdict::Safe,
                _ => SafetyVerdict::Inconclusive,
            };
        }
        self.bound = Some(bound);
    }

    pub fn smallest_safe_order(&self) -> Option<usize> {
        self.rows.iter().filter(|r| r.verdict == SafetyVerdict::Safe).map(|r| r.order).min()
    }

    pub fn row(&self, order: usize) -> Option<&SweepRow<T>> {
        self.rows.iter().find(|r| r.order == order)
    }
}

/// Default sweep orders.
pub fn default_orders() -> Vec<usize> {
    (1..=20).collect()
}

fn grid_error<T: Real>(rlz: &DescriptorRealization<T>, data: &FrequencyDataset<T>) -> Result<T> {
    let vals = rlz.eval_many(&data.points())?;
    Ok(vals.iter().zip(data.responses()).map(|(a, b)| cabs(*a - b)).fold(T::zero(), |x, y| x.max(y)))
}

/// Reduced controller of McMillan degree at most `order`.
///
/// Projections of dimension `order` and `order + 1` are deflated of their
/// infinite modes, which turns a near-singular `E` direction into a
/// feed-through. The candidate with the smallest grid error among those of
/// degree at most `order` wins; the raw order-`order` projection is the
/// fallback.
fn reduce_row<T: Real>(pencil: &LoewnerPencil<T>, data: &FrequencyDataset<T>, order: usize) -> SweepRow<T> {
    let mut best: Option<(usize, DescriptorRealization<T>, T)> = None;
    let mut last_err = None;
    for dim in [order, order + 1] {
        if dim == 0 || dim > pencil.size() {
            continue;
        }
        let cand = pencil
            .reduce_to_realization(dim)
            .and_then(|r| r.deflate(lit(DEFLATION_TOL)))
            .and_then(|r| if r.order() <= order { grid_error(&r, data).map(|e| (r, e)) } else { Err(Error::Dimension("degree too high".into())) });
        match cand {
            Ok((r, e)) if best.as_ref().map_or(true, |b| e < b.2) => best = Some((dim, r, e)),
            Ok(_) => {}
            Err(e) => last_err = Some(e),
        }
    }
    if best.is_none() && order >= 1 && order <= pencil.size() {
        match pencil.reduce_to_realization(order).and_then(|r| grid_error(&r, data).map(|e| (r, e))) {
            Ok((r, e)) => best = Some((order, r, e)),
            Err(e) => last_err = Some(e),
        }
    }
    match best {
        Some((projection, r, e)) => SweepRow {
            order,
            projection,
            realization: Some(r),
            error: Some(e),
            verdict: SafetyVerdict::Inconclusive,
            failure: None,
        },
        None => SweepRow {
            order,
            projection: order,
            realization: None,
            error: None,
            verdict: SafetyVerdict::Inconclusive,
            failure: Some(last_err.map(|e| e.to_string()).unwrap_or_else(|| "order out of range".into())),
        },
    }
}

/// Loewner reduction of the ideal controller at each requested order.
pub fn reduce_controller<T: Real>(
    kstar_data: &FrequencyDataset<T>,
    orders: &[usize],
) -> Result<ReductionSweep<T>> {
    let data = kstar_data.close_conjugate()?;
    let max_order = orders.iter().copied().max().unwrap_or(0);
    if data.len() < 2 * max_order {
        return Err(Error::Argument(format!(
            "{} samples cannot support order {max_order}; need at least {}",
            data.len(),
            2 * max_order
        )));
    }
    let pencil = build_pencil(&data.partition_points()?)?;
    // Populate the shared SVD factors before fanning out.
    pencil.rank_at(lit(0.5))?;
    let mut sorted: Vec<usize> = orders.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let rows = sorted.par_iter().map(|&r| reduce_row(&pencil, &data, r)).collect();
    Ok(ReductionSweep { rows, bound: None })
}
