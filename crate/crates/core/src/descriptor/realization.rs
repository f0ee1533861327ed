use crate::error::{Error, Result};
use crate::scalar::{cabs, lit, Real};
use nalgebra::{Complex, DMatrix, DVector, RowDVector};
use rayon::prelude::*;

/// Relative threshold on the singular values of `E` below which a direction
/// is treated as an infinite mode by [`DescriptorRealization::deflate`].
pub const DEFLATION_TOL: f64 = 1e-10;

/// Real SISO descriptor realization `(E, A, B, C, D)`.
#[derive(Clone, Debug, PartialEq)]
pub struct DescriptorRealization<T: Real> {
    e: DMatrix<T>,
    a: DMatrix<T>,
    b: DVector<T>,
    c: RowDVector<T>,
    d: T,
}

/// Generalized eigenvalues of `(A, E)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleSet<T: Real> {
    /// Finite eigenvalues sorted by real then imaginary part.
    pub finite: Vec<Complex<T>>,
    /// Number of eigenvalues at infinity (singular directions of `E`).
    pub infinite: usize,
}

impl<T: Real> PoleSet<T> {
    pub fn max_real_part(&self) -> Option<T> {
        self.finite.iter().map(|p| p.re).reduce(|a, b| a.max(b))
    }

    pub fn is_stable(&self) -> bool {
        self.finite.iter().all(|p| p.re < T::zero())
    }
}

impl<T: Real> DescriptorRealization<T> {
    /// Validates dimensions and finiteness. Regularity is checked separately
    /// by [`check_regular`](Self::check_regular).
    pub fn new(e: DMatrix<T>, a: DMatrix<T>, b: DVector<T>, c: RowDVector<T>, d: T) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || e.shape() != (n, n) || b.len() != n || c.len() != n {
            return Err(Error::Dimension(format!(
                "E {:?}, A {:?}, B {}x1, C 1x{}",
                e.shape(),
                a.shape(),
                b.len(),
                c.len()
            )));
        }
        let finite = e.iter().chain(a.iter()).chain(b.iter()).chain(c.iter()).all(|x| x.is_finite());
        if !finite || !d.is_finite() {
            return Err(Error::Argument("realization has non-finite entries".into()));
        }
        Ok(Self { e, a, b, c, d })
    }

    /// Standard state space with `E = I`.
    pub fn from_state_space(a: DMatrix<T>, b: DVector<T>, c: RowDVector<T>, d: T) -> Result<Self> {
        let n = a.nrows();
        Self::new(DMatrix::identity(n, n), a, b, c, d)
    }

    /// Order-zero realization of a static gain.
    pub fn gain(d: T) -> Self {
        Self { e: DMatrix::zeros(0, 0), a: DMatrix::zeros(0, 0), b: DVector::zeros(0), c: RowDVector::zeros(0), d }
    }

    /// `kp + ki/s`, one integrator state.
    pub fn pi(kp: T, ki: T) -> Self {
        Self {
            e: DMatrix::identity(1, 1),
            a: DMatrix::zeros(1, 1),
            b: DVector::from_element(1, T::one()),
            c: RowDVector::from_element(1, ki),
            d: kp,
        }
    }

    pub fn order(&self) -> usize {
        self.a.nrows()
    }

    pub fn e(&self) -> &DMatrix<T> {
        &self.e
    }

    pub fn a(&self) -> &DMatrix<T> {
        &self.a
    }

    pub fn b(&self) -> &DVector<T> {
        &self.b
    }

    pub fn c(&self) -> &RowDVector<T> {
        &self.c
    }

    pub fn d(&self) -> T {
        self.d
    }

    /// `C (sE - A)^{-1} B + D` through an LU solve.
    pub fn eval(&self, s: Complex<T>) -> Result<Complex<T>> {
        if self.order() == 0 {
            return Ok(Complex::new(self.d, T::zero()));
        }
        let n = self.order();
        let m = DMatrix::from_fn(n, n, |i, j| s * self.e[(i, j)] - self.a[(i, j)]);
        let rhs = self.b.map(|x| Complex::new(x, T::zero()));
        let x = m.lu().solve(&rhs).ok_or_else(|| Error::pole_hit(s))?;
        let mut y = Complex::new(self.d, T::zero());
        for k in 0..n {
            y += x[k] * self.c[k];
        }
        if !(y.re.is_finite() && y.im.is_finite()) {
            return Err(Error::pole_hit(s));
        }
        Ok(y)
    }

    /// Evaluates at every point, in parallel for large batches.
    pub fn eval_many(&self, points: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        if points.len() < 64 {
            points.iter().map(|&s| self.eval(s)).collect()
        } else {
            points.par_iter().map(|&s| self.eval(s)).collect()
        }
    }

    fn shift_scale(&self) -> T {
        let ne = self.e.norm();
        let na = self.a.norm();
        if ne > T::zero() && na > T::zero() {
            na / ne
        } else {
            T::one()
        }
    }

    /// Fails with a singular-pencil error when `det(sE - A)` vanishes
    /// numerically at three fixed probe points.
    pub fn check_regular(&self) -> Result<()> {
        let n = self.order();
        if n == 0 {
            return Ok(());
        }
        let scale = self.shift_scale();
        let probes = [
            Complex::new(lit::<T>(0.3137), lit::<T>(0.9213)),
            Complex::new(lit::<T>(-1.1071), lit::<T>(0.4142)),
            Complex::new(lit::<T>(0.7071), lit::<T>(-1.3181)),
        ];
        let tol = T::default_epsilon() * lit::<T>(10.0 * n as f64);
        for p in probes {
            let s = p * scale;
            let m = DMatrix::from_fn(n, n, |i, j| s * self.e[(i, j)] - self.a[(i, j)]);
            let sv = m.singular_values();
            let max = sv.max();
            if max > T::zero() && sv.min() > tol * max {
                return Ok(());
            }
        }
        Err(Error::SingularPencil("det(sE - A) vanishes at all probe points".into()))
    }

    /// Finite generalized eigenvalues via shift-and-invert of the pencil.
    ///
    /// With a real shift `sigma`, the eigenvalues `nu` of
    /// `(sigma E - A)^{-1} E` map to poles `sigma - 1/nu`; `nu = 0` are the
    /// infinite eigenvalues.
    pub fn poles(&self) -> Result<PoleSet<T>> {
        let n = self.order();
        if n == 0 {
            return Ok(PoleSet { finite: vec![], infinite: 0 });
        }
        let scale = self.shift_scale();
        let mut best: Option<(T, T, DMatrix<T>)> = None;
        for f in [0.5772, -0.8132, 1.4142, -2.2361, 0.3183, 3.1416] {
            let sigma = scale * lit::<T>(f);
            let m = &self.e * sigma - &self.a;
            if let Some(inv) = m.clone().try_inverse() {
                let cond = m.norm() * inv.norm();
                if cond.is_finite() && best.as_ref().map_or(true, |b| cond < b.0) {
                    best = Some((cond, sigma, inv));
                }
            }
        }
        let (_, sigma, inv) = best.ok_or_else(|| Error::SingularPencil("no regular shift found".into()))?;
        let nmat = inv * &self.e;
        let schur = nalgebra::linalg::Schur::try_new(nmat.clone(), T::default_epsilon(), 1000 * n.max(10))
            .ok_or_else(|| Error::EigenFailure("Schur iteration did not converge".into()))?;
        let nus = schur.complex_eigenvalues();
        let floor = T::default_epsilon().sqrt() * nmat.norm();
        let mut finite = Vec::with_capacity(n);
        let mut infinite = 0;
        for nu in nus.iter() {
            if cabs(*nu) <= floor {
                infinite += 1;
            } else {
                finite.push(Complex::new(sigma, T::zero()) - Complex::new(T::one(), T::zero()) / *nu);
            }
        }
        finite.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        Ok(PoleSet { finite, infinite })
    }

    /// Removes index-one infinite modes, returning an equivalent system with
    /// `E = I` and the algebraic part folded into `D`.
    ///
    /// Directions with singular value of `E` at most `tol * sigma_max(E)`
    /// are eliminated through a Schur complement on `A`.
    pub fn deflate(&self, tol: T) -> Result<Self> {
        let n = self.order();
        if n == 0 {
            return Ok(self.clone());
        }
        let svd = self.e.clone().svd(true, true);
        let u = svd.u.as_ref().unwrap();
        let vt = svd.v_t.as_ref().unwrap();
        let sv = &svd.singular_values;
        // nalgebra does not guarantee sorted output
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&i, &j| sv[j].partial_cmp(&sv[i]).unwrap());
        let smax = sv[idx[0]];
        let k = idx.iter().take_while(|&&i| sv[i] > tol * smax && sv[i] > T::zero()).count();
        let u = DMatrix::from_fn(n, n, |r, c| u[(r, idx[c])]);
        let v = DMatrix::from_fn(n, n, |r, c| vt[(idx[c], r)]);
        let at = u.transpose() * &self.a * &v;
        let bt = u.transpose() * &self.b;
        let ct = &self.c * &v;
        let sinv = DVector::from_fn(k, |i, _| T::one() / sv[idx[i]]);
        if k == n {
            let a = DMatrix::from_fn(n, n, |i, j| at[(i, j)] * sinv[i]);
            let b = DVector::from_fn(n, |i, _| bt[i] * sinv[i]);
            return Self::from_state_space(a, b, ct, self.d);
        }
        let a11 = at.view((0, 0), (k, k)).into_owned();
        let a12 = at.view((0, k), (k, n - k)).into_owned();
        let a21 = at.view((k, 0), (n - k, k)).into_owned();
        let a22 = at.view((k, k), (n - k, n - k)).into_owned();
        let b1 = bt.rows(0, k).into_owned();
        let b2 = bt.rows(k, n - k).into_owned();
        let c1 = ct.columns(0, k).into_owned();
        let c2 = ct.columns(k, n - k).into_owned();
        let s22 = a22.singular_values();
        if s22.min() <= T::default_epsilon() * lit::<T>(100.0) * self.a.norm().max(T::tiny()) {
            return Err(Error::HigherIndex);
        }
        let lu = a22.lu();
        let x_a = lu.solve(&a21).ok_or(Error::HigherIndex)?;
        let x_b = lu.solve(&b2).ok_or(Error::HigherIndex)?;
        let a = a11 - &a12 * &x_a;
        let b = b1 - &a12 * &x_b;
        let c = c1 - &c2 * &x_a;
        let d = self.d - (&c2 * &x_b)[(0, 0)];
        let a = DMatrix::from_fn(k, k, |i, j| a[(i, j)] * sinv[i]);
        let b = DVector::from_fn(k, |i, _| b[i] * sinv[i]);
        Self::from_state_space(a, b, c, d)
    }

    /// Whether `E` has no singular direction at tolerance `tol`.
    pub fn has_invertible_e(&self, tol: T) -> bool {
        if self.order() == 0 {
            return true;
        }
        let sv = self.e.singular_values();
        sv.max() > T::zero() && sv.min() > tol * sv.max()
    }

    /// Cascade `other * self` (self's output drives other's input).
    pub fn series(&self, other: &Self) -> Self {
        let (n1, n2) = (self.order(), other.order());
        let n = n1 + n2;
        let mut e = DMatrix::zeros(n, n);
        let mut a = DMatrix::zeros(n, n);
        e.view_mut((0, 0), (n1, n1)).copy_from(&self.e);
        e.view_mut((n1, n1), (n2, n2)).copy_from(&other.e);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&other.a);
        a.view_mut((n1, 0), (n2, n1)).copy_from(&(&other.b * &self.c));
        let mut b = DVector::zeros(n);
        b.rows_mut(0, n1).copy_from(&self.b);
        b.rows_mut(n1, n2).copy_from(&(&other.b * self.d));
        let mut c = RowDVector::zeros(n);
        c.columns_mut(0, n1).copy_from(&(&self.c * other.d));
        c.columns_mut(n1, n2).copy_from(&other.c);
        Self { e, a, b, c, d: other.d * self.d }
    }

    /// Parallel connection `self + other`.
    pub fn add(&self, other: &Self) -> Self {
        let (n1, n2) = (self.order(), other.order());
        let n = n1 + n2;
        let mut e = DMatrix::zeros(n, n);
        let mut a = DMatrix::zeros(n, n);
        e.view_mut((0, 0), (n1, n1)).copy_from(&self.e);
        e.view_mut((n1, n1), (n2, n2)).copy_from(&other.e);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a);
        a.view_mut((n1, n1), (n2, n2)).copy_from(&other.a);
        let mut b = DVector::zeros(n);
        b.rows_mut(0, n1).copy_from(&self.b);
        b.rows_mut(n1, n2).copy_from(&other.b);
        let mut c = RowDVector::zeros(n);
        c.columns_mut(0, n1).copy_from(&self.c);
        c.columns_mut(n1, n2).copy_from(&other.c);
        Self { e, a, b, c, d: self.d + other.d }
    }

    /// Unity negative feedback around `self`: `G / (1 + G)`.
    pub fn feedback(&self) -> Result<Self> {
        let den = T::one() + self.d;
        if den.abs() <= T::default_epsilon() * (T::one() + self.d.abs()) {
            return Err(Error::LoopSingularity { re: f64::INFINITY, im: 0.0 });
        }
        let a = &self.a - &self.b * &self.c / den;
        let b = &self.b / den;
        let c = &self.c / den;
        Ok(Self { e: self.e.clone(), a, b, c, d: self.d / den })
    }

    /// `alpha * G + beta`.
    pub fn affine(&self, alpha: T, beta: T) -> Self {
        Self { c: &self.c * alpha, d: self.d * alpha + beta, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn first_order() -> DescriptorRealization<f64> {
        DescriptorRealization::new(
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, -1.0),
            DVector::from_element(1, 1.0),
            RowDVector::from_element(1, 1.0),
            0.0,
        )
        .unwrap()
    }

    /// Companion realization of `num(s) / den(s)`, `den` monic, coefficients
    /// in ascending powers.
    pub(crate) fn companion(num: &[f64], den: &[f64]) -> DescriptorRealization<f64> {
        let n = den.len() - 1;
        let a = DMatrix::from_fn(n, n, |i, j| if i + 1 == j { 1.0 } else if i == n - 1 { -den[j] } else { 0.0 });
        let mut b = DVector::zeros(n);
        b[n - 1] = 1.0;
        let c = RowDVector::from_fn(n, |_, j| num.get(j).copied().unwrap_or(0.0));
        DescriptorRealization::from_state_space(a, b, c, 0.0).unwrap()
    }

    #[test]
    fn eval_first_order() {
        let r = first_order();
        assert_eq!(r.eval(Complex::new(0.0, 0.0)).unwrap(), Complex::new(1.0, 0.0));
        let v = r.eval(Complex::new(0.0, 1.0)).unwrap();
        assert_relative_eq!(v.re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(v.im, -0.5, epsilon = 1e-15);
        assert!(matches!(r.eval(Complex::new(-1.0, 0.0)), Err(Error::PoleHit { .. })));
    }

    #[test]
    fn poles_of_simple_systems() {
        let p = first_order().poles().unwrap();
        assert_eq!(p.infinite, 0);
        assert_relative_eq!(p.finite[0].re, -1.0, epsilon = 1e-12);
        // 1/((s+1)(s-2)) = 1/(s^2 - s - 2)
        let p = companion(&[1.0], &[-2.0, -1.0, 1.0]).poles().unwrap();
        assert_eq!(p.finite.len(), 2);
        assert_relative_eq!(p.finite[0].re, -1.0, epsilon = 1e-12);
        assert_relative_eq!(p.finite[1].re, 2.0, epsilon = 1e-12);
        assert!(!p.is_stable());
    }

    #[test]
    fn poles_with_infinite_modes() {
        let e = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let a = DMatrix::from_row_slice(3, 3, &[-3.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let r = DescriptorRealization::new(
            e,
            a,
            DVector::from_element(3, 1.0),
            RowDVector::from_element(3, 1.0),
            0.0,
        )
        .unwrap();
        let p = r.poles().unwrap();
        assert_eq!(p.infinite, 2);
        assert_eq!(p.finite.len(), 1);
        assert_relative_eq!(p.finite[0].re, -3.0, epsilon = 1e-10);
    }

    #[test]
    fn deflation_preserves_transfer() {
        let e = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let a = DMatrix::from_row_slice(2, 2, &[-2.0, 1.0, 0.5, -4.0]);
        let r = DescriptorRealization::new(
            e,
            a,
            DVector::from_vec(vec![1.0, 2.0]),
            RowDVector::from_vec(vec![3.0, -1.0]),
            0.25,
        )
        .unwrap();
        let d = r.deflate(1e-10).unwrap();
        assert_eq!(d.order(), 1);
        assert_eq!(d.e()[(0, 0)], 1.0);
        for w in [0.0, 0.3, 2.0, 50.0] {
            let s = Complex::new(0.1, w);
            assert!((d.eval(s).unwrap() - r.eval(s).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn higher_index_is_rejected() {
        let e = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let a = DMatrix::identity(2, 2);
        let r =
            DescriptorRealization::new(e, a, DVector::from_element(2, 1.0), RowDVector::from_element(2, 1.0), 0.0)
                .unwrap();
        assert!(matches!(r.deflate(1e-10), Err(Error::HigherIndex)));
    }

    #[test]
    fn interconnections() {
        let g = first_order();
        let k = DescriptorRealization::pi(2.0, 0.5);
        let s = Complex::new(0.2, 0.7);
        let gs = g.eval(s).unwrap();
        let ks = k.eval(s).unwrap();
        let l = g.series(&k);
        assert!((l.eval(s).unwrap() - gs * ks).norm() < 1e-14);
        let t = l.feedback().unwrap();
        assert!((t.eval(s).unwrap() - gs * ks / (1.0 + gs * ks)).norm() < 1e-14);
        assert!((g.add(&k).eval(s).unwrap() - (gs + ks)).norm() < 1e-14);
        assert!((g.affine(-1.0, 1.0).eval(s).unwrap() - (1.0 - gs)).norm() < 1e-14);
        assert!(DescriptorRealization::gain(-1.0).feedback().is_err());
    }

    #[test]
    fn singular_pencil_detected() {
        let z = DMatrix::zeros(2, 2);
        let r = DescriptorRealization::new(
            z.clone(),
            z,
            DVector::from_element(2, 1.0),
            RowDVector::from_element(2, 1.0),
            0.0,
        )
        .unwrap();
        assert!(matches!(r.check_regular(), Err(Error::SingularPencil(_))));
        assert!(first_order().check_regular().is_ok());
    }

    #[test]
    fn dimension_mismatch() {
        let r = DescriptorRealization::new(
            DMatrix::<f64>::identity(2, 2),
            DMatrix::identity(2, 2),
            DVector::from_element(3, 1.0),
            RowDVector::from_element(2, 1.0),
            0.0,
        );
        assert!(matches!(r, Err(Error::Dimension(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn diagonal_matches_partial_fractions(
                modes in proptest::collection::vec((-5.0f64..-0.1, 0.1f64..5.0, -3.0f64..3.0), 1..8),
                w in 0.01f64..100.0,
            ) {
                let n = modes.len();
                let a = DMatrix::from_fn(n, n, |i, j| if i == j { modes[i].0 } else { 0.0 });
                let b = DVector::from_fn(n, |i, _| modes[i].1);
                let c = RowDVector::from_fn(n, |_, j| modes[j].2);
                let r = DescriptorRealization::from_state_space(a, b, c, 0.0).unwrap();
                let s = Complex::new(0.0, w);
                let oracle: Complex<f64> = modes.iter().map(|&(p, b, c)| Complex::new(b * c, 0.0) / (s - p)).sum();
                let got = r.eval(s).unwrap();
                prop_assert!((got - oracle).norm() <= 1e-10 * oracle.norm().max(1e-12));
            }
        }
    }
}
