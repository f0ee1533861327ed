use super::realization::DEFLATION_TOL;
use super::schur::ComplexSchur;
use super::DescriptorRealization;
use crate::error::{Error, Result};
use crate::scalar::{lit, Real};
use nalgebra::{Complex, DMatrix, DVector, RowDVector};

/// Poles with `|Re| <` this value are too close to the imaginary axis to be
/// classified.
pub const AXIS_GUARD: f64 = 1e-8;

/// Additive decomposition `G = G_stable + G_antistable`.
#[derive(Clone, Debug)]
pub struct StableSplit<T: Real> {
    /// Modes with `Re < 0` plus the whole feed-through.
    pub stable: DescriptorRealization<T>,
    /// Modes with `Re >= 0`, strictly proper.
    pub antistable: DescriptorRealization<T>,
}

/// Spectral projection onto the stable and antistable invariant subspaces.
///
/// Infinite modes are deflated first, then the complex Schur form of the
/// state matrix is reordered twice to extract a real basis of each invariant
/// subspace. The block-diagonalized system yields the two parts.
pub fn stable_antistable_split<T: Real>(rlz: &DescriptorRealization<T>) -> Result<StableSplit<T>> {
    let sys = rlz.deflate(lit(DEFLATION_TOL))?;
    let n = sys.order();
    let empty = |d: T| DescriptorRealization::gain(d);
    if n == 0 {
        return Ok(StableSplit { stable: sys, antistable: empty(T::zero()) });
    }
    let ac = sys.a().map(|x| Complex::new(x, T::zero()));
    let schur = ComplexSchur::new(ac)?;
    let guard = lit::<T>(AXIS_GUARD);
    if let Some(p) = schur.eigenvalues().into_iter().find(|p| p.re.abs() < guard) {
        return Err(Error::BoundaryPole { re: p.re.to_f64(), im: p.im.to_f64() });
    }
    let is_stable = |p: Complex<T>| p.re < T::zero();
    let ns = schur.eigenvalues().into_iter().filter(|&p| is_stable(p)).count();
    if ns == n {
        return Ok(StableSplit { stable: sys, antistable: empty(T::zero()) });
    }
    if ns == 0 {
        let anti = DescriptorRealization::from_state_space(sys.a().clone(), sys.b().clone(), sys.c().clone(), T::zero())?;
        return Ok(StableSplit { stable: empty(sys.d()), antistable: anti });
    }
    let mut s1 = ComplexSchur { q: schur.q.clone(), t: schur.t.clone() };
    s1.reorder(is_stable);
    let mut s2 = schur;
    s2.reorder(|p| !is_stable(p));
    let vs = real_basis(&s1.q.columns(0, ns).into_owned());
    let va = real_basis(&s2.q.columns(0, n - ns).into_owned());
    let mut t = DMatrix::zeros(n, n);
    t.columns_mut(0, ns).copy_from(&vs);
    t.columns_mut(ns, n - ns).copy_from(&va);
    let lu = t.clone().lu();
    let at = lu
        .solve(&(sys.a() * &t))
        .ok_or_else(|| Error::EigenFailure("stable and antistable subspaces are not complementary".into()))?;
    let bt = lu.solve(sys.b()).ok_or_else(|| Error::EigenFailure("singular modal basis".into()))?;
    let ct = sys.c() * &t;
    let part = |off: usize, len: usize, d: T| {
        DescriptorRealization::from_state_space(
            at.view((off, off), (len, len)).into_owned(),
            DVector::from(bt.rows(off, len).into_owned()),
            RowDVector::from(ct.columns(off, len).into_owned()),
            d,
        )
    };
    Ok(StableSplit { stable: part(0, ns, sys.d())?, antistable: part(ns, n - ns, T::zero())? })
}

/// Orthonormal real basis of the span of a conjugate-closed complex basis.
fn real_basis<T: Real>(q: &DMatrix<Complex<T>>) -> DMatrix<T> {
    let (n, k) = q.shape();
    let mut m = DMatrix::zeros(n, 2 * k);
    for j in 0..k {
        for i in 0..n {
            m[(i, j)] = q[(i, j)].re;
            m[(i, k + j)] = q[(i, j)].im;
        }
    }
    let svd = m.svd(true, false);
    let u = svd.u.unwrap();
    let sv = svd.singular_values;
    let mut idx: Vec<usize> = (0..sv.len()).collect();
    idx.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap());
    DMatrix::from_fn(n, k, |i, j| u[(i, idx[j])])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(poles: &[f64], res: &[f64], d: f64) -> DescriptorRealization<f64> {
        let n = poles.len();
        DescriptorRealization::from_state_space(
            DMatrix::from_fn(n, n, |i, j| if i == j { poles[i] } else { 0.0 }),
            DVector::from_element(n, 1.0),
            RowDVector::from_fn(n, |_, j| res[j]),
            d,
        )
        .unwrap()
    }

    #[test]
    fn stable_system_has_empty_antistable_part() {
        let s = stable_antistable_split(&diag(&[-1.0], &[1.0], 0.0)).unwrap();
        assert_eq!(s.antistable.order(), 0);
        assert_eq!(s.antistable.d(), 0.0);
        assert_eq!(s.stable.order(), 1);
    }

    #[test]
    fn antistable_system_keeps_only_feedthrough_in_stable_part() {
        let s = stable_antistable_split(&diag(&[1.0], &[1.0], 0.5)).unwrap();
        assert_eq!(s.stable.order(), 0);
        assert_eq!(s.stable.d(), 0.5);
        let z = Complex::new(0.0, 0.3);
        let want = Complex::new(1.0, 0.0) / (z - 1.0);
        assert!((s.antistable.eval(z).unwrap() - want).norm() < 1e-14);
    }

    #[test]
    fn mixed_system_recovers_summands() {
        // 1/(s+1) + 1/(s-2), mixed with a random similarity.
        let base = diag(&[-1.0, 2.0], &[1.0, 1.0], 0.0);
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 0.7, -0.4, 1.3]);
        let ti = t.clone().try_inverse().unwrap();
        let sys = DescriptorRealization::from_state_space(&ti * base.a() * &t, &ti * base.b(), base.c() * &t, 0.0)
            .unwrap();
        let s = stable_antistable_split(&sys).unwrap();
        for k in 0..50 {
            let z = Complex::new(0.0, 0.01 * 1.2f64.powi(k));
            let st = Complex::new(1.0, 0.0) / (z + 1.0);
            let an = Complex::new(1.0, 0.0) / (z - 2.0);
            assert!((s.stable.eval(z).unwrap() - st).norm() <= 1e-8 * st.norm());
            assert!((s.antistable.eval(z).unwrap() - an).norm() <= 1e-8 * an.norm());
        }
    }

    #[test]
    fn boundary_pole_is_rejected() {
        assert!(matches!(
            stable_antistable_split(&diag(&[-1.0, 1e-10], &[1.0, 1.0], 0.0)),
            Err(Error::BoundaryPole { .. })
        ));
    }
}
