use super::DescriptorRealization;
use crate::error::{Error, Result};
use crate::scalar::{cabs, cexp, jw, Real};
use nalgebra::Complex;
use rayon::prelude::*;
use std::fmt;
use std::sync::Arc;

type Evaluator<T> = dyn Fn(Complex<T>) -> Result<Complex<T>> + Send + Sync;

/// Complex-frequency evaluator `s -> h(s)` with an optional rational
/// realization.
///
/// Compositions keep the realization when every operand has one and the
/// operation preserves rationality.
#[derive(Clone)]
pub struct TransferMap<T: Real> {
    f: Arc<Evaluator<T>>,
    label: String,
    realization: Option<Arc<DescriptorRealization<T>>>,
}

impl<T: Real> fmt::Debug for TransferMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TransferMap")
            .field("label", &self.label)
            .field("order", &self.realization.as_ref().map(|r| r.order()))
            .finish()
    }
}

/// `|1 + l|` at or below this multiple of `eps * max(1, |l|)` is a loop singularity.
fn loop_denominator<T: Real>(s: Complex<T>, l: Complex<T>) -> Result<Complex<T>> {
    let den = l + T::one();
    if cabs(den) <= T::default_epsilon() * cabs(l).max(T::one()) {
        return Err(Error::LoopSingularity { re: s.re.to_f64(), im: s.im.to_f64() });
    }
    Ok(den)
}

impl<T: Real> TransferMap<T> {
    pub fn new<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(Complex<T>) -> Result<Complex<T>> + Send + Sync + 'static,
    {
        Self { f: Arc::new(f), label: label.into(), realization: None }
    }

    pub fn from_realization(label: impl Into<String>, rlz: DescriptorRealization<T>) -> Self {
        let rlz = Arc::new(rlz);
        let r = rlz.clone();
        Self { f: Arc::new(move |s| r.eval(s)), label: label.into(), realization: Some(rlz) }
    }

    pub fn constant(c: T) -> Self {
        Self::from_realization(format!("{c}"), DescriptorRealization::gain(c))
    }

    pub fn zero() -> Self {
        Self::constant(T::zero())
    }

    /// `kp + ki/s`.
    pub fn pi(kp: T, ki: T) -> Self {
        Self::from_realization(format!("{kp} + {ki}/s"), DescriptorRealization::pi(kp, ki))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn realization(&self) -> Option<&DescriptorRealization<T>> {
        self.realization.as_deref()
    }

    pub fn eval(&self, s: Complex<T>) -> Result<Complex<T>> {
        (self.f)(s)
    }

    /// Evaluates at `i omega`.
    pub fn eval_jw(&self, omega: T) -> Result<Complex<T>> {
        self.eval(jw(omega))
    }

    /// Frequency response on a grid of angular frequencies. Errors carry the
    /// offending frequency.
    pub fn response(&self, omegas: &[T]) -> Result<Vec<Complex<T>>> {
        omegas
            .par_iter()
            .map(|&w| self.eval_jw(w).map_err(|e| Error::at_omega(w.to_f64(), e)))
            .collect()
    }

    /// Evaluates at arbitrary points, in parallel.
    pub fn eval_many(&self, points: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        points.par_iter().map(|&s| self.eval(s)).collect()
    }

    /// Product `self * other`.
    pub fn series(&self, other: &Self) -> Self {
        let (f, g) = (self.f.clone(), other.f.clone());
        let label = format!("({})*({})", self.label, other.label);
        match (&self.realization, &other.realization) {
            (Some(a), Some(b)) => Self::from_realization(label, a.series(b)),
            _ => Self::new(label, move |s| Ok(f(s)? * g(s)?)),
        }
    }

    /// `self + other`.
    pub fn sum(&self, other: &Self) -> Self {
        let (f, g) = (self.f.clone(), other.f.clone());
        let label = format!("({})+({})", self.label, other.label);
        match (&self.realization, &other.realization) {
            (Some(a), Some(b)) => Self::from_realization(label, a.add(b)),
            _ => Self::new(label, move |s| Ok(f(s)? + g(s)?)),
        }
    }

    /// Unity negative feedback `self / (1 + self)`.
    pub fn feedback(&self) -> Self {
        let f = self.f.clone();
        let label = format!("fb({})", self.label);
        if let Some(Ok(r)) = self.realization.as_ref().map(|r| r.feedback()) {
            return Self::from_realization(label, r);
        }
        Self::new(label, move |s| {
            let l = f(s)?;
            Ok(l / loop_denominator(s, l)?)
        })
    }

    /// Multiplies by `exp(-tau s)`. Irrational unless `tau == 0`.
    pub fn delay(&self, tau: T) -> Self {
        if tau == T::zero() {
            return self.clone();
        }
        let f = self.f.clone();
        Self::new(format!("({})*exp(-{tau}s)", self.label), move |s| Ok(f(s)? * cexp(-s * tau)))
    }

    /// `1 / self`; evaluating at a zero of `self` is a pole hit.
    pub fn inverse(&self) -> Self {
        let f = self.f.clone();
        Self::new(format!("1/({})", self.label), move |s| {
            let v = f(s)?;
            if cabs(v) == T::zero() {
                return Err(Error::pole_hit(s));
            }
            Ok(Complex::new(T::one(), T::zero()) / v)
        })
    }

    /// `alpha * self + beta`.
    pub fn affine(&self, alpha: T, beta: T) -> Self {
        let label = format!("{alpha}*({})+{beta}", self.label);
        if let Some(r) = &self.realization {
            return Self::from_realization(label, r.affine(alpha, beta));
        }
        let f = self.f.clone();
        Self::new(label, move |s| Ok(f(s)? * alpha + beta))
    }
}

pub(super) fn closed_loop_delay_map<T: Real>(h: &TransferMap<T>, k: &TransferMap<T>, tau: T) -> TransferMap<T> {
    let l = h.series(k);
    if tau == T::zero() {
        return l.feedback().with_label(format!("cl({}, {})", h.label, k.label));
    }
    let f = l.f.clone();
    TransferMap::new(format!("cl({}, {}, tau={tau})", h.label, k.label), move |s| {
        let lv = f(s)?;
        let ld = lv * cexp(-s * tau);
        Ok(lv / loop_denominator(s, ld)?)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn first_order() -> TransferMap<f64> {
        TransferMap::new("1/(s+1)", |s: Complex<f64>| Ok(Complex::new(1.0, 0.0) / (s + 1.0)))
    }

    #[test]
    fn compositions_match_pointwise() {
        let h = first_order();
        let k = TransferMap::pi(2.0, 0.5);
        let s = Complex::new(0.1, 0.9);
        let (hv, kv) = (h.eval(s).unwrap(), k.eval(s).unwrap());
        assert!((h.series(&k).eval(s).unwrap() - hv * kv).norm() < 1e-15);
        assert!((h.sum(&k).eval(s).unwrap() - (hv + kv)).norm() < 1e-15);
        assert!((h.inverse().eval(s).unwrap() - 1.0 / hv).norm() < 1e-14);
        assert!((h.affine(2.0, -1.0).eval(s).unwrap() - (2.0 * hv - 1.0)).norm() < 1e-15);
        let d = h.delay(0.7).eval(s).unwrap();
        assert!((d - hv * (-s * 0.7).exp()).norm() < 1e-15);
        assert!(h.series(&k).realization().is_none());
        assert!(k.series(&k).realization().is_some());
    }

    #[test]
    fn closed_loop_special_cases() {
        let s = Complex::new(0.0, 2.0);
        let zero = closed_loop_delay_map(&first_order(), &TransferMap::zero(), 1.3);
        assert_eq!(zero.eval(s).unwrap(), Complex::new(0.0, 0.0));
        let one = closed_loop_delay_map(&TransferMap::constant(1.0), &TransferMap::constant(1.0), 0.0);
        assert_eq!(one.eval(s).unwrap(), Complex::new(0.5, 0.0));
        let neg = closed_loop_delay_map(&TransferMap::new("-1", |_| Ok(Complex::new(-1.0, 0.0))), &TransferMap::constant(1.0), 0.0);
        assert!(matches!(neg.eval(s), Err(Error::LoopSingularity { .. })));
    }

    #[test]
    fn response_reports_frequency() {
        let h = TransferMap::new("bad", |s: Complex<f64>| if s.im > 1.0 { Err(Error::pole_hit(s)) } else { Ok(s) });
        match h.response(&[0.5, 2.0]) {
            Err(Error::Evaluation { omega, .. }) => assert_eq!(omega, 2.0),
            other => panic!("{other:?}"),
        }
    }
}
