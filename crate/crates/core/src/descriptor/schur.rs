//! Complex Schur form with eigenvalue reordering by adjacent Givens swaps.

use crate::error::{Error, Result};
use crate::scalar::{cabs, Real};
use nalgebra::{Complex, DMatrix};

/// `A = Q T Q^H` with `T` upper triangular.
pub(crate) struct ComplexSchur<T: Real> {
    pub q: DMatrix<Complex<T>>,
    pub t: DMatrix<Complex<T>>,
}

impl<T: Real> ComplexSchur<T> {
    pub fn new(a: DMatrix<Complex<T>>) -> Result<Self> {
        let n = a.nrows();
        let schur = nalgebra::linalg::Schur::try_new(a, T::default_epsilon(), 1000 * n.max(10))
            .ok_or_else(|| Error::EigenFailure("complex Schur iteration did not converge".into()))?;
        let (q, mut t) = schur.unpack();
        for j in 0..n {
            for i in j + 1..n {
                t[(i, j)] = Complex::new(T::zero(), T::zero());
            }
        }
        Ok(Self { q, t })
    }

    pub fn eigenvalues(&self) -> Vec<Complex<T>> {
        (0..self.t.nrows()).map(|i| self.t[(i, i)]).collect()
    }

    /// Moves every eigenvalue with `select(lambda)` to the leading block,
    /// keeping relative order. Returns the size of that block.
    pub fn reorder(&mut self, select: impl Fn(Complex<T>) -> bool) -> usize {
        let n = self.t.nrows();
        let mut next = 0;
        for i in 0..n {
            if select(self.t[(i, i)]) {
                for k in (next..i).rev() {
                    self.swap(k);
                }
                next += 1;
            }
        }
        next
    }

    /// Exchanges diagonal entries `k` and `k + 1`.
    fn swap(&mut self, k: usize) {
        let n = self.t.nrows();
        let t11 = self.t[(k, k)];
        let t22 = self.t[(k + 1, k + 1)];
        let (cs, sn) = rotation(self.t[(k, k + 1)], t22 - t11);
        for j in k + 2..n {
            let (x, y) = (self.t[(k, j)], self.t[(k + 1, j)]);
            self.t[(k, j)] = x * cs + sn * y;
            self.t[(k + 1, j)] = y * cs - sn.conj() * x;
        }
        let snc = sn.conj();
        for i in 0..k {
            let (x, y) = (self.t[(i, k)], self.t[(i, k + 1)]);
            self.t[(i, k)] = x * cs + snc * y;
            self.t[(i, k + 1)] = y * cs - sn * x;
        }
        self.t[(k, k)] = t22;
        self.t[(k + 1, k + 1)] = t11;
        for i in 0..n {
            let (x, y) = (self.q[(i, k)], self.q[(i, k + 1)]);
            self.q[(i, k)] = x * cs + snc * y;
            self.q[(i, k + 1)] = y * cs - sn * x;
        }
    }
}

/// Plane rotation `[cs sn; -conj(sn) cs]` annihilating `g` against `f`.
fn rotation<T: Real>(f: Complex<T>, g: Complex<T>) -> (T, Complex<T>) {
    let zero = Complex::new(T::zero(), T::zero());
    if g == zero {
        return (T::one(), zero);
    }
    if f == zero {
        return (T::zero(), g.conj() / cabs(g));
    }
    let (f1, g1) = (cabs(f), cabs(g));
    let d = f1.hypot(g1);
    (f1 / d, (f / f1) * g.conj() / d)
}
