//! Sample generation: one row of i.i.d. draws per encoder.

use rand::Rng;

use crate::dist::Distribution;
use crate::error::{Error, Result};
use crate::randomness::Stream;

/// An `m x n` array of symbol indices; row `i` holds encoder `i`'s samples.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMatrix {
    rows: Vec<Vec<u32>>,
    k: usize,
}

impl SampleMatrix {
    pub fn new(rows: Vec<Vec<u32>>, k: usize) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        for row in &rows {
            if row.len() != n {
                return Err(Error::InvalidParameter(
                    "sample rows must all have the same length".into(),
                ));
            }
            if let Some(&w) = row.iter().find(|&&w| w as usize >= k) {
                return Err(Error::InvalidParameter(format!(
                    "sample symbol {w} out of range for k = {k}"
                )));
            }
        }
        Ok(Self { rows, k })
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn n(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.rows
    }

    /// Per-symbol counts of row `i`.
    pub fn row_histogram(&self, i: usize) -> Vec<u32> {
        let mut hist = vec![0u32; self.k];
        for &w in &self.rows[i] {
            hist[w as usize] += 1;
        }
        hist
    }

    /// Apply a symbol map to every entry, producing a matrix over a new
    /// alphabet of size `new_k`.
    pub fn map_symbols(&self, new_k: usize, f: impl Fn(u32) -> u32) -> SampleMatrix {
        let rows = self
            .rows
            .iter()
            .map(|row| row.iter().map(|&w| f(w)).collect())
            .collect();
        debug_assert!({
            let mapped: &Vec<Vec<u32>> = &rows;
            mapped
                .iter()
                .all(|r: &Vec<u32>| r.iter().all(|&w| (w as usize) < new_k))
        });
        SampleMatrix { rows, k: new_k }
    }
}

/// Draw an `m x n` matrix of i.i.d. samples from `dist`.
pub fn sample(dist: &Distribution, m: usize, n: usize, stream: &mut Stream) -> SampleMatrix {
    let mut cdf = Vec::with_capacity(dist.k());
    let mut acc = 0.0;
    for &p in dist.probs() {
        acc += p;
        cdf.push(acc);
    }
    // Guard the top of the ladder against rounding below 1.
    if let Some(last) = cdf.last_mut() {
        *last = f64::INFINITY;
    }
    let rows = (0..m)
        .map(|_| {
            (0..n)
                .map(|_| {
                    let u: f64 = stream.random();
                    cdf.partition_point(|&c| c <= u) as u32
                })
                .collect()
        })
        .collect();
    SampleMatrix { rows, k: dist.k() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::randomness::SharedRandomness;

    #[test]
    fn point_mass_yields_constant_matrix() {
        let d = Distribution::point_mass(5, 2).unwrap();
        let mut s = SharedRandomness::new(1).stream("samples");
        let mat = sample(&d, 3, 4, &mut s);
        assert!(mat.rows().iter().all(|r| r.iter().all(|&w| w == 2)));
    }

    #[test]
    fn uniform_frequencies_concentrate() {
        let d = Distribution::uniform(2);
        let mut s = SharedRandomness::new(2).stream("samples");
        let mat = sample(&d, 100, 100, &mut s);
        let zeros: usize = mat
            .rows()
            .iter()
            .flat_map(|r| r.iter())
            .filter(|&&w| w == 0)
            .count();
        let freq = zeros as f64 / 10_000.0;
        assert!((freq - 0.5).abs() < 0.02, "frequency {freq}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let d = Distribution::uniform(7);
        let sr = SharedRandomness::new(9);
        let a = sample(&d, 4, 6, &mut sr.stream("samples"));
        let b = sample(&d, 4, 6, &mut sr.stream("samples"));
        assert_eq!(a, b);
    }

    #[test]
    fn histogram_counts_rows() {
        let mat = SampleMatrix::new(vec![vec![0, 1, 1, 2]], 3).unwrap();
        assert_eq!(mat.row_histogram(0), vec![1, 2, 1]);
    }

    #[test]
    fn map_symbols_projects() {
        let mat = SampleMatrix::new(vec![vec![0, 3, 2]], 4).unwrap();
        let mapped = mat.map_symbols(2, |w| u32::from(w >= 2));
        assert_eq!(mapped.row(0), &[0, 1, 1]);
        assert_eq!(mapped.k(), 2);
    }
}
