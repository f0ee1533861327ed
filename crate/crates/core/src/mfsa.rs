//! Stability estimation from frequency samples.
//!
//! A transfer function is sampled on the imaginary axis, interpolated by a
//! Loewner model, and split into stable and antistable parts. The size of the
//! antistable part on the axis (the stability tag) decides the verdict.

use crate::data::{densify_log, FrequencyDataset};
use crate::descriptor::{closed_loop_delay, stable_antistable_split, DescriptorRealization, TransferMap};
use crate::error::{Error, Result};
use crate::loewner::{build_pencil, LoewnerPencil};
use crate::scalar::{cabs, cexp, jw, lit, Real};
use nalgebra::Complex;
use rayon::prelude::*;
use serde::Serialize;

/// Threshold below which a tag counts as stable.
pub const DEFAULT_EPSILON: f64 = 1e-10;

/// Rank threshold used for the interpolant. Looser than the identification
/// default: near machine precision the trailing singular directions add
/// spurious antistable poles far outside the sampled band.
pub const DEFAULT_SVD_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
    /// A pole sits in the imaginary-axis guard band, or the row failed.
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Stable => "stable",
            Verdict::Unstable => "unstable",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MfsaOptions<T: Real> {
    pub svd_tol: T,
    /// The tag is measured on the sample grid densified by this factor.
    pub densify: usize,
    /// Orders below the detected rank that compete on held-out accuracy.
    /// Zero keeps the detected rank.
    pub validation_window: usize,
}

impl<T: Real> Default for MfsaOptions<T> {
    fn default() -> Self {
        Self { svd_tol: lit(DEFAULT_SVD_TOL), densify: 5, validation_window: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityReport<T: Real> {
    /// Grid L-infinity norm of the antistable part; NaN when inconclusive.
    pub stab_tag: T,
    pub epsilon: T,
    pub verdict: Verdict,
    /// Order of the Loewner interpolant.
    pub order: usize,
    /// Rank detected at the SVD threshold.
    pub detected_rank: usize,
    /// Frequency of the largest antistable contribution.
    pub omega: Option<T>,
    #[serde(skip)]
    pub antistable_poles: Vec<Complex<T>>,
    pub diagnostic: Option<String>,
}

/// Stability tag with default options.
pub fn stability_tag<T: Real>(h: &TransferMap<T>, grid: &[T], epsilon: T) -> Result<StabilityReport<T>> {
    stability_tag_with(h, grid, epsilon, &MfsaOptions::default())
}

fn check_grid<T: Real>(grid: &[T]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::Argument("stability grid needs at least two frequencies".into()));
    }
    if grid.iter().any(|&w| !(w > T::zero()) || !w.is_finite()) {
        return Err(Error::Argument("stability grid frequencies must be positive and finite".into()));
    }
    Ok(())
}

/// Samples `h`, interpolates near the detected rank (see
/// [`MfsaOptions::validation_window`]), splits off the antistable part and
/// measures it on the densified grid.
///
/// An odd number of frequencies is trimmed by its last point so that the
/// conjugate pairs split evenly.
pub fn stability_tag_with<T: Real>(
    h: &TransferMap<T>,
    grid: &[T],
    epsilon: T,
    opts: &MfsaOptions<T>,
) -> Result<StabilityReport<T>> {
    check_grid(grid)?;
    if !(epsilon > T::zero()) {
        return Err(Error::Argument(format!("epsilon must be positive, got {epsilon}")));
    }
    let grid = if grid.len() % 2 == 1 { &grid[..grid.len() - 1] } else { grid };
    let data = FrequencyDataset::from_transfer(h, grid)?;
    let stable = |order, detected_rank| StabilityReport {
        stab_tag: T::zero(),
        epsilon,
        verdict: Verdict::Stable,
        order,
        detected_rank,
        omega: None,
        antistable_poles: vec![],
        diagnostic: None,
    };
    if data.responses().iter().all(|v| cabs(*v) == T::zero()) {
        return Ok(stable(0, 0));
    }
    let pencil = build_pencil(&data.close_conjugate()?.partition_points()?)?;
    let detected_rank = pencil.rank_at(opts.svd_tol)?;
    let (order, rlz) = select_order(&pencil, h, grid, detected_rank, opts.validation_window)?;
    let split = match stable_antistable_split(&rlz) {
        Ok(s) => s,
        Err(e @ Error::BoundaryPole { .. }) => {
            return Ok(StabilityReport {
                stab_tag: T::nan(),
                epsilon,
                verdict: Verdict::Inconclusive,
                order,
                detected_rank,
                omega: None,
                antistable_poles: vec![],
                diagnostic: Some(e.to_string()),
            })
        }
        Err(e) => return Err(e),
    };
    if split.antistable.order() == 0 {
        return Ok(stable(order, detected_rank));
    }
    let dense = densify_log(grid, opts.densify.max(1));
    let values = split.antistable.eval_many(&dense.iter().map(|&w| jw(w)).collect::<Vec<_>>())?;
    let (mut tag, mut omega) = (T::zero(), dense[0]);
    for (&w, v) in dense.iter().zip(values) {
        if cabs(v) > tag {
            tag = cabs(v);
            omega = w;
        }
    }
    Ok(StabilityReport {
        stab_tag: tag,
        epsilon,
        verdict: if tag < epsilon { Verdict::Stable } else { Verdict::Unstable },
        order,
        detected_rank,
        omega: Some(omega),
        antistable_poles: split.antistable.poles()?.finite,
        diagnostic: None,
    })
}

/// Picks, among `rank - window ..= rank`, the interpolant with the smallest
/// error at the geometric midpoints of the grid, sampled afresh from `h`.
///
/// Near the truncation threshold the trailing singular directions carry
/// approximation error rather than dynamics; the extra modes they add land
/// at arbitrary places, including the right half-plane just outside the
/// band. Such modes degrade the fit between the samples, which is what the
/// held-out error detects. Ties favour the higher order.
fn select_order<T: Real>(
    pencil: &LoewnerPencil<T>,
    h: &TransferMap<T>,
    grid: &[T],
    rank: usize,
    window: usize,
) -> Result<(usize, DescriptorRealization<T>)> {
    let lowest = rank.saturating_sub(window).max(1);
    if window == 0 || lowest >= rank {
        return Ok((rank, pencil.reduce_to_realization(rank)?));
    }
    let mids: Vec<T> = grid.windows(2).map(|w| (w[0] * w[1]).sqrt()).collect();
    let truth = h.response(&mids)?;
    let points: Vec<Complex<T>> = mids.iter().map(|&w| jw(w)).collect();
    let mut best: Option<(usize, DescriptorRealization<T>, T)> = None;
    for r in (lowest..=rank).rev() {
        let Ok(rlz) = pencil.reduce_to_realization(r) else { continue };
        let Ok(vals) = rlz.eval_many(&points) else { continue };
        let err = vals.iter().zip(&truth).map(|(a, b)| cabs(*a - *b)).fold(T::zero(), |x, y| x.max(y));
        if best.as_ref().map_or(true, |b| err < b.2) {
            best = Some((r, rlz, err));
        }
    }
    match best {
        Some((r, rlz, _)) => Ok((r, rlz)),
        None => Ok((rank, pencil.reduce_to_realization(rank)?)),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DelayRow<T: Real> {
    pub tau: T,
    pub stab_tag: T,
    pub verdict: Verdict,
    pub order: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DelaySweepResult<T: Real> {
    pub rows: Vec<DelayRow<T>>,
    /// First delay of the sweep with an unstable verdict.
    pub first_unstable: Option<T>,
    /// Bisection estimate between the last stable and first unstable delay.
    pub refined: Option<T>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions<T: Real> {
    pub mfsa: MfsaOptions<T>,
    /// Grid densification for delayed loops.
    pub delay_densify: usize,
    /// Bisection steps after the sweep; zero disables refinement.
    pub refine_steps: usize,
}

impl<T: Real> Default for SweepOptions<T> {
    fn default() -> Self {
        Self { mfsa: MfsaOptions::default(), delay_densify: 4, refine_steps: 0 }
    }
}

/// `n` equally spaced delays from `a` to `b` inclusive.
pub fn linspace<T: Real>(a: T, b: T, n: usize) -> Vec<T> {
    match n {
        0 => vec![],
        1 => vec![a],
        _ => (0..n).map(|i| a + (b - a) * lit::<T>(i as f64) / lit::<T>((n - 1) as f64)).collect(),
    }
}

fn delay_row<T: Real>(
    plant: &TransferMap<T>,
    k: &TransferMap<T>,
    tau: T,
    grid: &[T],
    epsilon: T,
    opts: &SweepOptions<T>,
) -> DelayRow<T> {
    let dense;
    let g = if tau > T::zero() && opts.delay_densify > 1 {
        dense = densify_log(grid, opts.delay_densify);
        &dense[..]
    } else {
        grid
    };
    let report = closed_loop_delay(plant, k, tau).and_then(|cl| stability_tag_with(&cl, g, epsilon, &opts.mfsa));
    match report {
        Ok(r) => DelayRow { tau, stab_tag: r.stab_tag, verdict: r.verdict, order: r.order, error: r.diagnostic },
        Err(e) => DelayRow { tau, stab_tag: T::nan(), verdict: Verdict::Inconclusive, order: 0, error: Some(e.to_string()) },
    }
}

/// Runs the stability tag on `plant k / (1 + plant k exp(-tau s))` for
/// every delay.
pub fn delay_margin_sweep<T: Real>(
    plant: &TransferMap<T>,
    k: &TransferMap<T>,
    taus: &[T],
    grid: &[T],
    epsilon: T,
    opts: &SweepOptions<T>,
) -> Result<DelaySweepResult<T>> {
    check_grid(grid)?;
    if !(epsilon > T::zero()) {
        return Err(Error::Argument(format!("epsilon must be positive, got {epsilon}")));
    }
    if taus.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Argument("delays must be strictly ascending".into()));
    }
    let rows: Vec<DelayRow<T>> = taus.par_iter().map(|&tau| delay_row(plant, k, tau, grid, epsilon, opts)).collect();
    let first = rows.iter().position(|r| r.verdict == Verdict::Unstable);
    let first_unstable = first.map(|i| rows[i].tau);
    let mut refined = None;
    if let (Some(i), true) = (first, opts.refine_steps > 0) {
        if i > 0 && rows[i - 1].verdict == Verdict::Stable {
            let (mut lo, mut hi) = (rows[i - 1].tau, rows[i].tau);
            for _ in 0..opts.refine_steps {
                let mid = (lo + hi) / lit(2.0);
                match delay_row(plant, k, mid, grid, epsilon, opts).verdict {
                    Verdict::Stable => lo = mid,
                    Verdict::Unstable => hi = mid,
                    Verdict::Inconclusive => break,
                }
            }
            refined = Some(hi);
        }
    }
    Ok(DelaySweepResult { rows, first_unstable, refined })
}

/// Loop values `plant(i w) k(i w) exp(-i w tau)` for plotting.
pub fn nyquist_curve<T: Real>(plant: &TransferMap<T>, k: &TransferMap<T>, tau: T, grid: &[T]) -> Result<Vec<Complex<T>>> {
    if grid.is_empty() {
        return Err(Error::Argument("empty frequency grid".into()));
    }
    let l = plant.series(k).delay(tau);
    l.response(grid)
}

/// Number of closed-loop poles minus open-loop poles inside the right
/// half-plane annulus `w_min < |s| < w_max`, from the winding of
/// `1 + L(s) exp(-tau s)` along its boundary.
///
/// The contour runs up the imaginary axis, around the large arc through the
/// right half-plane, and around the origin on a small right-hand arc, so
/// open-loop poles at the origin are excluded.
pub fn nyquist_unstable_count<T: Real>(
    plant: &TransferMap<T>,
    k: &TransferMap<T>,
    tau: T,
    w_min: T,
    w_max: T,
) -> Result<i64> {
    if !(w_min > T::zero() && w_max > w_min) {
        return Err(Error::Argument("need 0 < w_min < w_max".into()));
    }
    let l = plant.series(k);
    let f = |s: Complex<T>| -> Result<Complex<T>> { Ok(l.eval(s)? * cexp(-s * tau) + T::one()) };
    let pi = T::pi();
    let half_pi = pi / lit(2.0);
    let ratio = w_max / w_min;
    let polar = |r: T, th: T| Complex::new(r * th.cos(), r * th.sin());
    let pieces: [Box<dyn Fn(T) -> Complex<T> + Sync + '_>; 4] = [
        Box::new(|t: T| jw(w_min * ratio.powf(t))),
        Box::new(|t: T| polar(w_max, half_pi - pi * t)),
        Box::new(|t: T| jw(-w_max * ratio.powf(-t))),
        Box::new(|t: T| polar(w_min, -half_pi + pi * t)),
    ];
    let mut total = T::zero();
    for piece in &pieces {
        total += winding_piece(&f, piece.as_ref(), 512)?;
    }
    let turns = total / (lit::<T>(2.0) * pi);
    Ok(-(turns.round().to_f64() as i64))
}

/// Accumulated argument change of `f` along `path(t)`, `t` in `[0, 1]`,
/// bisecting steps whose phase jump exceeds a quarter turn.
fn winding_piece<T: Real>(
    f: &dyn Fn(Complex<T>) -> Result<Complex<T>>,
    path: &(dyn Fn(T) -> Complex<T> + Sync),
    n: usize,
) -> Result<T> {
    let limit = T::pi() / lit(4.0);
    let arg_step = |a: Complex<T>, b: Complex<T>| nalgebra::ComplexField::argument(b / a);
    let mut total = T::zero();
    let mut t0 = T::zero();
    let mut v0 = f(path(t0))?;
    let step = T::one() / lit(n as f64);
    for i in 1..=n {
        let t1 = lit::<T>(i as f64) * step;
        let mut stack = vec![(t1, f(path(t1))?, 0usize)];
        while let Some(&(t, v, depth)) = stack.last() {
            let d = arg_step(v0, v);
            if d.abs() > limit && depth < 40 {
                let tm = (t0 + t) / lit(2.0);
                stack.push((tm, f(path(tm))?, depth + 1));
            } else {
                total += d;
                t0 = t;
                v0 = v;
                stack.pop();
            }
        }
    }
    Ok(total)
}
