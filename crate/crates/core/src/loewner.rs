//! Loewner and shifted Loewner matrices, rank detection and the projected
//! real descriptor realization.
//!
//! With left data `(mu_i, v_i)` and right data `(lambda_j, w_j)`:
//!
//! ```text
//! L_ij  = (v_i - w_j) / (mu_i - lambda_j)
//! Ls_ij = (mu_i v_i - lambda_j w_j) / (mu_i - lambda_j)
//! ```
//!
//! and `(E, A, B, C) = (-L, -Ls, v, w)` interpolates the data. Projecting on
//! the dominant singular subspaces of `[L Ls]` and `[L; Ls]` gives a model of
//! the detected order.

use crate::data::{FrequencyDataset, PointPartition};
use crate::descriptor::DescriptorRealization;
use crate::error::{Error, Result};
use crate::scalar::{cabs, lit, Real};
use nalgebra::{Complex, DMatrix, DVector, RowDVector};
use rayon::prelude::*;
use std::sync::OnceLock;

/// Default relative threshold on the singular values of `[L Ls]`.
pub const DEFAULT_SVD_TOL: f64 = 1e-10;

/// Imaginary residue allowed after the conjugate-pair transform, relative to
/// the largest entry.
const REALNESS_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Block {
    Single(usize),
    Pair(usize),
}

/// Conjugate structure of a point list: pairs `(z, conj z)` stored adjacently
/// and real singletons. `None` if the list is not organized that way.
fn blocks<T: Real>(points: &[Complex<T>]) -> Option<Vec<Block>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < points.len() {
        let z = points[i];
        if z.im == T::zero() {
            out.push(Block::Single(i));
            i += 1;
        } else if i + 1 < points.len() && points[i + 1] == z.conj() {
            out.push(Block::Pair(i));
            i += 2;
        } else {
            return None;
        }
    }
    Some(out)
}

/// Applies `J^H` on the left, `J = [[1, i], [1, -i]] / sqrt 2` per pair.
fn realify_rows<T: Real>(m: &mut DMatrix<Complex<T>>, blocks: &[Block]) {
    let h = T::one() / lit::<T>(2.0).sqrt();
    let i_unit = Complex::new(T::zero(), T::one());
    for b in blocks {
        if let Block::Pair(i) = *b {
            for j in 0..m.ncols() {
                let (x, y) = (m[(i, j)], m[(i + 1, j)]);
                m[(i, j)] = (x + y) * h;
                m[(i + 1, j)] = i_unit * (y - x) * h;
            }
        }
    }
}

/// Applies `J` on the right.
fn realify_cols<T: Real>(m: &mut DMatrix<Complex<T>>, blocks: &[Block]) {
    let h = T::one() / lit::<T>(2.0).sqrt();
    let i_unit = Complex::new(T::zero(), T::one());
    for b in blocks {
        if let Block::Pair(j) = *b {
            for i in 0..m.nrows() {
                let (x, y) = (m[(i, j)], m[(i, j + 1)]);
                m[(i, j)] = (x + y) * h;
                m[(i, j + 1)] = i_unit * (x - y) * h;
            }
        }
    }
}

fn real_part<T: Real>(m: &DMatrix<Complex<T>>, scale: T) -> Result<DMatrix<T>> {
    let worst = m.iter().map(|z| z.im.abs()).fold(T::zero(), |a, b| a.max(b));
    if worst > lit::<T>(REALNESS_TOL) * scale.max(T::tiny()) {
        return Err(Error::Argument(format!(
            "conjugate-pair transform left an imaginary residue of {worst}; data is not conjugate symmetric"
        )));
    }
    Ok(m.map(|z| z.re))
}

#[derive(Clone, Debug)]
struct RealPencil<T: Real> {
    lw: DMatrix<T>,
    ls: DMatrix<T>,
    v: DVector<T>,
    w: RowDVector<T>,
}

#[derive(Debug)]
struct Factors<T: Real> {
    row_sv: Vec<T>,
    col_sv: Vec<T>,
    /// Left singular vectors of `[L Ls]`, sorted.
    y: DMatrix<T>,
    /// Right singular vectors of `[L; Ls]`, sorted.
    x: DMatrix<T>,
}

/// Loewner pencil with its real (conjugate-pair transformed) counterpart.
///
/// SVD factors are computed lazily once and shared by rank detection and
/// every projection.
#[derive(Debug)]
pub struct LoewnerPencil<T: Real> {
    lw: DMatrix<Complex<T>>,
    ls: DMatrix<Complex<T>>,
    partition: PointPartition<T>,
    real: Option<RealPencil<T>>,
    factors: OnceLock<Factors<T>>,
}

/// Singular-value diagnostics of a pencil at a relative threshold.
#[derive(Clone, Debug)]
pub struct RankReport<T: Real> {
    pub tol: T,
    /// Singular values of `[L Ls]`, descending.
    pub row_singular_values: Vec<T>,
    /// Singular values of `[L; Ls]`, descending.
    pub col_singular_values: Vec<T>,
    /// Singular values of `L` alone.
    pub loewner_singular_values: Vec<T>,
    /// Singular values of `z L - Ls` at selected data points.
    pub probes: Vec<(Complex<T>, Vec<T>)>,
    pub row_rank: usize,
    pub col_rank: usize,
    pub loewner_rank: usize,
    pub probe_ranks: Vec<usize>,
    /// `max(row_rank, col_rank)`.
    pub rank: usize,
    /// Whether all pencil-family counts agree.
    pub consistent: bool,
}

fn count_above<T: Real>(sv: &[T], tol: T, reference: T) -> usize {
    sv.iter().filter(|&&s| s > tol * reference).count()
}

fn sorted_desc<T: Real>(sv: &DVector<T>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..sv.len()).collect();
    idx.sort_by(|&a, &b| sv[b].partial_cmp(&sv[a]).unwrap());
    idx
}

fn singular_values_desc<T: Real>(m: DMatrix<Complex<T>>) -> Vec<T> {
    let sv = m.singular_values();
    sorted_desc(&sv).into_iter().map(|i| sv[i]).collect()
}

/// Builds the Loewner and shifted Loewner matrices of a partition.
pub fn build_pencil<T: Real>(p: &PointPartition<T>) -> Result<LoewnerPencil<T>> {
    if p.mu.len() != p.lambda.len() || p.v.len() != p.mu.len() || p.w.len() != p.lambda.len() {
        return Err(Error::UnbalancedPartition { left: p.mu.len(), right: p.lambda.len() });
    }
    if p.mu.is_empty() {
        return Err(Error::Argument("empty partition".into()));
    }
    let m = p.mu.len();
    for (i, &mu) in p.mu.iter().enumerate() {
        if let Some(j) = p.lambda.iter().position(|&l| l == mu) {
            return Err(Error::CoincidentPoints { row: i, col: j });
        }
    }
    let rows: Vec<(Vec<Complex<T>>, Vec<Complex<T>>)> = (0..m)
        .into_par_iter()
        .map(|i| {
            let (mu, v) = (p.mu[i], p.v[i]);
            let mut lw = Vec::with_capacity(m);
            let mut ls = Vec::with_capacity(m);
            for j in 0..m {
                let (la, w) = (p.lambda[j], p.w[j]);
                let den = mu - la;
                lw.push((v - w) / den);
                ls.push((mu * v - la * w) / den);
            }
            (lw, ls)
        })
        .collect();
    let lw = DMatrix::from_fn(m, m, |i, j| rows[i].0[j]);
    let ls = DMatrix::from_fn(m, m, |i, j| rows[i].1[j]);
    let real = match (blocks(&p.mu), blocks(&p.lambda)) {
        (Some(bm), Some(bl)) => {
            let scale = lw.iter().chain(ls.iter()).map(|z| cabs(*z)).fold(T::zero(), |a, b| a.max(b));
            let mut lwr = lw.clone();
            let mut lsr = ls.clone();
            realify_rows(&mut lwr, &bm);
            realify_cols(&mut lwr, &bl);
            realify_rows(&mut lsr, &bm);
            realify_cols(&mut lsr, &bl);
            let mut v = DMatrix::from_column_slice(m, 1, &p.v);
            realify_rows(&mut v, &bm);
            let mut w = DMatrix::from_row_slice(1, m, &p.w);
            realify_cols(&mut w, &bl);
            let vs = p.v.iter().chain(p.w.iter()).map(|z| cabs(*z)).fold(T::zero(), |a, b| a.max(b));
            Some(RealPencil {
                lw: real_part(&lwr, scale)?,
                ls: real_part(&lsr, scale)?,
                v: DVector::from_iterator(m, real_part(&v, vs)?.iter().copied()),
                w: RowDVector::from_iterator(m, real_part(&w, vs)?.iter().copied()),
            })
        }
        _ => None,
    };
    Ok(LoewnerPencil { lw, ls, partition: p.clone(), real, factors: OnceLock::new() })
}

impl<T: Real> LoewnerPencil<T> {
    pub fn size(&self) -> usize {
        self.lw.nrows()
    }

    pub fn loewner(&self) -> &DMatrix<Complex<T>> {
        &self.lw
    }

    pub fn shifted_loewner(&self) -> &DMatrix<Complex<T>> {
        &self.ls
    }

    pub fn partition(&self) -> &PointPartition<T> {
        &self.partition
    }

    /// Whether the conjugate-pair transform produced a real pencil.
    pub fn is_real(&self) -> bool {
        self.real.is_some()
    }

    fn real(&self) -> Result<&RealPencil<T>> {
        self.real.as_ref().ok_or_else(|| {
            Error::Argument("partition sides are not stored as adjacent conjugate pairs; no real realization".into())
        })
    }

    fn factors(&self) -> Result<&Factors<T>> {
        let rp = self.real()?;
        Ok(self.factors.get_or_init(|| {
            let m = self.size();
            let mut row = DMatrix::zeros(m, 2 * m);
            row.columns_mut(0, m).copy_from(&rp.lw);
            row.columns_mut(m, m).copy_from(&rp.ls);
            let mut col = DMatrix::zeros(2 * m, m);
            col.rows_mut(0, m).copy_from(&rp.lw);
            col.rows_mut(m, m).copy_from(&rp.ls);
            let (rsvd, csvd) = rayon::join(|| row.svd(true, false), || col.svd(false, true));
            let ridx = sorted_desc(&rsvd.singular_values);
            let cidx = sorted_desc(&csvd.singular_values);
            let u = rsvd.u.unwrap();
            let vt = csvd.v_t.unwrap();
            Factors {
                row_sv: ridx.iter().map(|&i| rsvd.singular_values[i]).collect(),
                col_sv: cidx.iter().map(|&i| csvd.singular_values[i]).collect(),
                y: DMatrix::from_fn(m, m, |r, c| u[(r, ridx[c])]),
                x: DMatrix::from_fn(m, m, |r, c| vt[(cidx[c], r)]),
            }
        }))
    }

    fn row_col_sv(&self) -> Result<(Vec<T>, Vec<T>)> {
        if self.real.is_some() {
            let f = self.factors()?;
            return Ok((f.row_sv.clone(), f.col_sv.clone()));
        }
        let m = self.size();
        let mut row = DMatrix::zeros(m, 2 * m);
        row.columns_mut(0, m).copy_from(&self.lw);
        row.columns_mut(m, m).copy_from(&self.ls);
        let mut col = DMatrix::zeros(2 * m, m);
        col.rows_mut(0, m).copy_from(&self.lw);
        col.rows_mut(m, m).copy_from(&self.ls);
        Ok((singular_values_desc(row), singular_values_desc(col)))
    }

    /// Order at relative threshold `tol`: `max(rank [L Ls], rank [L; Ls])`.
    pub fn rank_at(&self, tol: T) -> Result<usize> {
        let (row, col) = self.row_col_sv()?;
        if row[0] == T::zero() {
            return Err(Error::ZeroMatrix);
        }
        Ok(count_above(&row, tol, row[0]).max(count_above(&col, tol, col[0])))
    }

    /// Full rank diagnostics, including `z L - Ls` at the first and middle
    /// left points.
    pub fn detect_rank(&self, tol: T) -> Result<RankReport<T>> {
        if !(tol > T::zero() && tol < T::one()) {
            return Err(Error::Argument(format!("rank tolerance must lie in (0, 1), got {tol}")));
        }
        let (row, col) = self.row_col_sv()?;
        if row[0] == T::zero() {
            return Err(Error::ZeroMatrix);
        }
        let row_rank = count_above(&row, tol, row[0]);
        let col_rank = count_above(&col, tol, col[0]);
        let lw_sv = singular_values_desc(self.lw.clone());
        // L alone is measured against the pencil scale so that L = 0 counts zero.
        let loewner_rank = count_above(&lw_sv, tol, row[0]);
        let m = self.size();
        let mut picks = vec![0];
        if m > 2 {
            picks.push(m / 2);
        }
        let probes: Vec<(Complex<T>, Vec<T>)> = picks
            .into_iter()
            .map(|i| {
                let z = self.partition.mu[i];
                (z, singular_values_desc(&self.lw * z - &self.ls))
            })
            .collect();
        let probe_ranks: Vec<usize> =
            probes.iter().map(|(_, sv)| if sv[0] == T::zero() { 0 } else { count_above(sv, tol, sv[0]) }).collect();
        let rank = row_rank.max(col_rank);
        let consistent = row_rank == col_rank && probe_ranks.iter().all(|&r| r == rank);
        if !consistent {
            log::warn!(
                "Loewner rank disagreement at tol {tol:e}: [L Ls] {row_rank}, [L; Ls] {col_rank}, probes {probe_ranks:?}; using {rank}"
            );
        }
        if loewner_rank != rank {
            log::warn!("rank of L alone ({loewner_rank}) differs from the pencil rank ({rank}); feed-through not fitted");
        }
        Ok(RankReport {
            tol,
            row_singular_values: row,
            col_singular_values: col,
            loewner_singular_values: lw_sv,
            probes,
            row_rank,
            col_rank,
            loewner_rank,
            probe_ranks,
            rank,
            consistent,
        })
    }

    /// Projects the real pencil onto its `r` dominant singular directions.
    ///
    /// Returns `E = -Y^T L X`, `A = -Y^T Ls X`, `B = Y^T v`, `C = w X`, `D = 0`.
    pub fn reduce_to_realization(&self, r: usize) -> Result<DescriptorRealization<T>> {
        let m = self.size();
        if r == 0 || r > m {
            return Err(Error::Argument(format!("order must lie in 1..={m}, got {r}")));
        }
        let rp = self.real()?;
        let f = self.factors()?;
        let y = f.y.columns(0, r);
        let x = f.x.columns(0, r);
        let yt = y.transpose();
        let e = -(&yt * &rp.lw * x);
        let a = -(&yt * &rp.ls * x);
        let b = &yt * &rp.v;
        let c = &rp.w * x;
        let rlz = DescriptorRealization::new(e, a, b, c, T::zero())?;
        rlz.check_regular()?;
        Ok(rlz)
    }
}

/// Pencil, rank report and realization at the detected order.
#[derive(Debug)]
pub struct LoewnerFit<T: Real> {
    pub pencil: LoewnerPencil<T>,
    pub report: RankReport<T>,
    pub realization: DescriptorRealization<T>,
}

/// Closes, partitions and interpolates a dataset at threshold `tol`.
/// `order` overrides the detected rank.
pub fn fit<T: Real>(data: &FrequencyDataset<T>, tol: T, order: Option<usize>) -> Result<LoewnerFit<T>> {
    let closed = data.close_conjugate()?;
    let pencil = build_pencil(&closed.partition_points()?)?;
    let report = pencil.detect_rank(tol)?;
    let realization = pencil.reduce_to_realization(order.unwrap_or(report.rank))?;
    Ok(LoewnerFit { pencil, report, realization })
}

/// `max_i |H(z_i) - phi_i| / |phi_i|` over a dataset.
pub fn interpolation_residual<T: Real>(rlz: &DescriptorRealization<T>, data: &FrequencyDataset<T>) -> Result<T> {
    let values = rlz.eval_many(&data.points())?;
    Ok(values
        .iter()
        .zip(data.responses())
        .map(|(h, phi)| cabs(*h - phi) / cabs(phi).max(T::tiny()))
        .fold(T::zero(), |a, b| a.max(b)))
}
