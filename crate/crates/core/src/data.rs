//! Frequency-response datasets: CSV/JSON I/O, conjugate closure and the
//! left/right split used to build Loewner pencils.

use crate::descriptor::TransferMap;
use crate::error::{Error, Result};
use crate::scalar::{cabs, is_finite_c, jw, lit, Real};
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

/// Header line of the on-disk CSV format.
pub const CSV_HEADER: &str = "omega_rad_s,re,im";

/// Relative tolerance when checking a stored conjugate response.
pub const CONJUGATE_TOL: f64 = 1e-12;

/// A single `(z, phi)` pair: frequency point and response value.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencySample<T: Real> {
    pub z: Complex<T>,
    pub phi: Complex<T>,
}

impl<T: Real> FrequencySample<T> {
    pub fn new(z: Complex<T>, phi: Complex<T>) -> Self {
        Self { z, phi }
    }

    fn conj(&self) -> Self {
        Self { z: self.z.conj(), phi: self.phi.conj() }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyDataset<T: Real> {
    samples: Vec<FrequencySample<T>>,
    conjugate_closed: bool,
}

impl<T: Real> Default for FrequencyDataset<T> {
    fn default() -> Self {
        Self { samples: Vec::new(), conjugate_closed: false }
    }
}

/// Left (`mu`, responses `v`) and right (`lambda`, responses `w`) point sets.
///
/// Conjugate pairs stay adjacent on each side, first member first.
#[derive(Clone, Debug, PartialEq)]
pub struct PointPartition<T: Real> {
    pub mu: Vec<Complex<T>>,
    pub lambda: Vec<Complex<T>>,
    pub v: Vec<Complex<T>>,
    pub w: Vec<Complex<T>>,
}

impl<T: Real> PointPartition<T> {
    pub fn len(&self) -> usize {
        self.mu.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct SampleRecord {
    omega_rad_s: f64,
    re: f64,
    im: f64,
}

impl<T: Real> FrequencyDataset<T> {
    /// Builds a dataset, rejecting non-finite values and repeated points.
    pub fn from_samples(samples: Vec<FrequencySample<T>>) -> Result<Self> {
        for (k, s) in samples.iter().enumerate() {
            if !is_finite_c(s.z) || !is_finite_c(s.phi) {
                return Err(Error::Argument(format!("sample {k} is not finite")));
            }
        }
        for i in 0..samples.len() {
            for j in 0..i {
                if samples[i].z == samples[j].z {
                    return Err(Error::DuplicateFrequency {
                        re: samples[i].z.re.to_f64(),
                        im: samples[i].z.im.to_f64(),
                    });
                }
            }
        }
        Ok(Self { samples, conjugate_closed: false })
    }

    /// Samples `h` at `i omega` for every angular frequency in `omegas`.
    pub fn from_transfer(h: &TransferMap<T>, omegas: &[T]) -> Result<Self> {
        let samples = omegas
            .iter()
            .map(|&w| {
                h.eval(jw(w))
                    .map(|phi| FrequencySample::new(jw(w), phi))
                    .map_err(|e| Error::at_omega(w.to_f64(), e))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_samples(samples)
    }

    pub fn samples(&self) -> &[FrequencySample<T>] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_conjugate_closed(&self) -> bool {
        self.conjugate_closed
    }

    pub fn points(&self) -> Vec<Complex<T>> {
        self.samples.iter().map(|s| s.z).collect()
    }

    pub fn responses(&self) -> Vec<Complex<T>> {
        self.samples.iter().map(|s| s.phi).collect()
    }

    /// Angular frequencies of the samples lying on the positive imaginary axis.
    pub fn positive_omegas(&self) -> Vec<T> {
        self.samples
            .iter()
            .filter(|s| s.z.re == T::zero() && s.z.im > T::zero())
            .map(|s| s.z.im)
            .collect()
    }

    /// Response stored at exactly `z`, if any.
    pub fn lookup(&self, z: Complex<T>) -> Option<Complex<T>> {
        self.samples.iter().find(|s| s.z == z).map(|s| s.phi)
    }

    /// Applies `f(z, phi)` to every response.
    pub fn map_responses<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(Complex<T>, Complex<T>) -> Result<Complex<T>>,
    {
        let samples = self
            .samples
            .iter()
            .map(|s| f(s.z, s.phi).map(|phi| FrequencySample::new(s.z, phi)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { samples, conjugate_closed: self.conjugate_closed })
    }

    /// Reads the `omega_rad_s,re,im` CSV format.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_csv(file)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?;
        let names: Vec<&str> = header.iter().collect();
        if names != ["omega_rad_s", "re", "im"] {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{CSV_HEADER}`, found `{}`", names.join(",")),
            });
        }
        let mut samples = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| Error::Parse {
                line: e.position().map(|p| p.line() as usize).unwrap_or(0),
                message: e.to_string(),
            })?;
            let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
            if record.len() != 3 {
                return Err(Error::Parse { line, message: format!("expected 3 fields, found {}", record.len()) });
            }
            let mut vals = [0.0f64; 3];
            for (k, field) in record.iter().enumerate() {
                vals[k] = field.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("field {} (`{field}`) is not a number", k + 1),
                })?;
            }
            let z = jw(lit::<T>(vals[0]));
            if let Some(prev) = samples.iter().find(|s: &&FrequencySample<T>| s.z == z) {
                return Err(Error::DuplicateFrequency { re: prev.z.re.to_f64(), im: prev.z.im.to_f64() });
            }
            samples.push(FrequencySample::new(z, Complex::new(lit(vals[1]), lit(vals[2]))));
        }
        Self::from_samples(samples)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut file)?;
        file.flush()?;
        Ok(())
    }

    /// Writes every sample as `omega,re,im` with 17 significant digits.
    ///
    /// Only points on the imaginary axis can be stored.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CSV_HEADER}")?;
        for s in &self.samples {
            if s.z.re != T::zero() {
                return Err(Error::Argument(format!(
                    "point {}{:+}i is off the imaginary axis and cannot be stored",
                    s.z.re, s.z.im
                )));
            }
            writeln!(
                out,
                "{},{},{}",
                crate::io::fmt17(s.z.im.to_f64()),
                crate::io::fmt17(s.phi.re.to_f64()),
                crate::io::fmt17(s.phi.im.to_f64())
            )?;
        }
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let records: Vec<SampleRecord> = serde_json::from_reader(std::fs::File::open(path)?)?;
        let samples = records
            .into_iter()
            .map(|r| FrequencySample::new(jw(lit(r.omega_rad_s)), Complex::new(lit(r.re), lit(r.im))))
            .collect();
        Self::from_samples(samples)
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let records: Vec<SampleRecord> = self
            .samples
            .iter()
            .map(|s| SampleRecord { omega_rad_s: s.z.im.to_f64(), re: s.phi.re.to_f64(), im: s.phi.im.to_f64() })
            .collect();
        serde_json::to_writer_pretty(std::io::BufWriter::new(std::fs::File::create(path)?), &records)?;
        Ok(())
    }

    /// Adds the conjugate sample of every off-real-axis point.
    ///
    /// Output keeps first-occurrence order with each pair adjacent as
    /// `(z, conj z)`. A stored conjugate must match `conj(phi)` to
    /// [`CONJUGATE_TOL`] relative.
    pub fn close_conjugate(&self) -> Result<Self> {
        let n = self.samples.len();
        let mut used = vec![false; n];
        let mut out = Vec::with_capacity(2 * n);
        let tol = lit::<T>(CONJUGATE_TOL);
        for i in 0..n {
            if used[i] {
                continue;
            }
            used[i] = true;
            let s = self.samples[i];
            out.push(s);
            if s.z.im == T::zero() {
                continue;
            }
            let target = s.z.conj();
            match (i + 1..n).find(|&j| !used[j] && self.samples[j].z == target) {
                Some(j) => {
                    let stored = self.samples[j].phi;
                    let expected = s.phi.conj();
                    let scale = cabs(expected).max(cabs(stored)).max(T::tiny());
                    if cabs(stored - expected) > tol * scale {
                        return Err(Error::ConjugateConflict { re: target.re.to_f64(), im: target.im.to_f64() });
                    }
                    used[j] = true;
                    out.push(self.samples[j]);
                }
                None => out.push(s.conj()),
            }
        }
        Ok(Self { samples: out, conjugate_closed: true })
    }

    /// Splits a conjugate-closed dataset into interleaved left/right sets.
    ///
    /// Conjugate pairs (singletons for real points) are dealt alternately:
    /// the first to the left set, the second to the right set, and so on.
    pub fn partition_points(&self) -> Result<PointPartition<T>> {
        if !self.conjugate_closed {
            return Err(Error::NotConjugateClosed);
        }
        let units = self.units();
        if units.len() % 2 != 0 {
            return Err(Error::OddPairCount(units.len()));
        }
        let mut part = PointPartition { mu: vec![], lambda: vec![], v: vec![], w: vec![] };
        for (k, unit) in units.iter().enumerate() {
            let (pts, vals) = if k % 2 == 0 { (&mut part.mu, &mut part.v) } else { (&mut part.lambda, &mut part.w) };
            for s in &self.samples[unit.clone()] {
                pts.push(s.z);
                vals.push(s.phi);
            }
        }
        if part.mu.len() != part.lambda.len() {
            return Err(Error::UnbalancedPartition { left: part.mu.len(), right: part.lambda.len() });
        }
        Ok(part)
    }

    fn units(&self) -> Vec<std::ops::Range<usize>> {
        let mut units = Vec::new();
        let mut i = 0;
        while i < self.samples.len() {
            let z = self.samples[i].z;
            if z.im != T::zero() && i + 1 < self.samples.len() && self.samples[i + 1].z == z.conj() {
                units.push(i..i + 2);
                i += 2;
            } else {
                units.push(i..i + 1);
                i += 1;
            }
        }
        units
    }
}

/// Inserts `factor - 1` log-spaced points between consecutive grid entries.
pub fn densify_log<T: Real>(grid: &[T], factor: usize) -> Vec<T> {
    if grid.len() < 2 || factor <= 1 {
        return grid.to_vec();
    }
    let mut out = Vec::with_capacity((grid.len() - 1) * factor + 1);
    for pair in grid.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if a > T::zero() && b > T::zero() {
            let ratio = (b / a).ln() / lit::<T>(factor as f64);
            out.extend((0..factor).map(|k| a * (ratio * lit::<T>(k as f64)).exp()));
        } else {
            let step = (b - a) / lit::<T>(factor as f64);
            out.extend((0..factor).map(|k| a + step * lit::<T>(k as f64)));
        }
    }
    out.push(grid[grid.len() - 1]);
    out
}
