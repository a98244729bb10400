//! Envelope (profile) Cholesky factorization for the Schur complement.
//!
//! Row `i` stores columns `first[i]..=i`. Moment relaxations of chain-structured problems give
//! Schur complements whose envelope grows linearly with the chain length.

use super::SdpError;

#[derive(Clone, Debug)]
pub struct Envelope {
    first: Vec<usize>,
    offset: Vec<usize>,
    data: Vec<f64>,
}

/// Pivots at or below `PIVOT_TOL·M_ii` are replaced by this value, which zeroes the
/// corresponding solution component (dependent or empty constraints).
const HUGE_PIVOT: f64 = 1e64;
const PIVOT_TOL: f64 = 1e-14;

impl Envelope {
    pub fn new(first: Vec<usize>, max_entries: usize) -> Result<Self, SdpError> {
        let mut offset = Vec::with_capacity(first.len() + 1);
        let mut total = 0usize;
        for (i, &f) in first.iter().enumerate() {
            assert!(f <= i, "envelope start after diagonal");
            offset.push(total);
            total += i - f + 1;
        }
        offset.push(total);
        if total > max_entries {
            return Err(SdpError::TooLarge(format!(
                "Schur complement envelope needs {total} entries (limit {max_entries})"
            )));
        }
        Ok(Self {
            first,
            offset,
            data: vec![0.0; total],
        })
    }

    pub fn dense(n: usize) -> Self {
        Self::new(vec![0; n], usize::MAX).expect("no limit")
    }

    pub fn dim(&self) -> usize {
        self.first.len()
    }

    pub fn entries(&self) -> usize {
        self.data.len()
    }

    pub fn first(&self, i: usize) -> usize {
        self.first[i]
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Lower-triangle entry `(i, j)`, `first[i] <= j <= i`.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j <= i && j >= self.first[i]);
        self.data[self.offset[i] + j - self.first[i]] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if j < self.first[i] {
            0.0
        } else {
            self.data[self.offset[i] + j - self.first[i]]
        }
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.data[self.offset[i + 1] - 1]
    }

    pub fn add_diag(&mut self, i: usize, v: f64) {
        let p = self.offset[i + 1] - 1;
        self.data[p] += v;
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[self.offset[i]..self.offset[i + 1]]
    }

    /// In-place `M = L Lᵀ`. Returns the number of pivots replaced as dependent.
    pub fn factor(&mut self) -> usize {
        let n = self.dim();
        let mut replaced = 0;
        for i in 0..n {
            let fi = self.first[i];
            let oi = self.offset[i];
            for j in fi..i {
                let fj = self.first[j];
                let k0 = fi.max(fj);
                let oj = self.offset[j];
                let ljj = self.data[self.offset[j + 1] - 1];
                let (head, tail) = self.data.split_at_mut(oi);
                let rj = &head[oj + (k0 - fj)..oj + (j - fj)];
                let ri = &mut tail[..];
                let s: f64 = rj
                    .iter()
                    .zip(&ri[k0 - fi..j - fi])
                    .map(|(a, b)| a * b)
                    .sum();
                ri[j - fi] = (ri[j - fi] - s) / ljj;
            }
            let row = &mut self.data[oi..self.offset[i + 1]];
            let (off, d) = row.split_at_mut(i - fi);
            let orig = d[0];
            let v = orig - off.iter().map(|x| x * x).sum::<f64>();
            if !(v > PIVOT_TOL * orig.abs().max(f64::MIN_POSITIVE)) {
                d[0] = HUGE_PIVOT;
                replaced += 1;
            } else {
                d[0] = v.sqrt();
            }
        }
        replaced
    }

    /// Solves `L Lᵀ x = b` after [`factor`](Self::factor).
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = b.to_vec();
        for i in 0..n {
            let fi = self.first[i];
            let r = self.row(i);
            let s: f64 = r[..i - fi].iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / r[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let r = self.row(i);
            y[i] /= r[i - fi];
            let xi = y[i];
            for (k, l) in (fi..i).zip(&r[..i - fi]) {
                y[k] -= l * xi;
            }
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn matches_dense_solve_on_banded_matrix() {
        let n = 12;
        let first: Vec<usize> = (0..n).map(|i: usize| i.saturating_sub(3)).collect();
        let mut env = Envelope::new(first.clone(), usize::MAX).unwrap();
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in first[i]..=i {
                let v = if i == j { 10.0 + i as f64 } else { 1.0 / (1.0 + (i + j) as f64) };
                env.add(i, j, v);
                dense[(i, j)] = v;
                dense[(j, i)] = v;
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        assert_eq!(env.factor(), 0);
        let x = env.solve(&b);
        let want = dense.cholesky().unwrap().solve(&nalgebra::DVector::from_vec(b));
        for i in 0..n {
            assert!((x[i] - want[i]).abs() < 1e-13);
        }
    }

    #[test]
    fn dependent_row_is_neutralized() {
        let mut env = Envelope::dense(3);
        // rows 0 and 1 identical
        for (i, j, v) in [(0, 0, 1.0), (1, 0, 1.0), (1, 1, 1.0), (2, 2, 2.0)] {
            env.add(i, j, v);
        }
        assert_eq!(env.factor(), 1);
        let x = env.solve(&[1.0, 1.0, 4.0]);
        assert!((x[0] - 1.0).abs() < 1e-12 && x[1].abs() < 1e-40 && (x[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn size_guard() {
        assert!(matches!(Envelope::new(vec![0; 100], 10), Err(SdpError::TooLarge(_))));
    }
}
