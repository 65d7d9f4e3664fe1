//! Uniform collocation grids on the flat torus T^d = [0,1)^d, d in {1,2},
//! together with the FFT plumbing used everywhere else.
//!
//! Frequencies use the standard FFT layout per axis: index i maps to the
//! integer mode k = i for i < N/2 and k = i - N for i >= N/2. The Nyquist
//! row k = -N/2 is never used; every constructor and transform forces those
//! coefficients to zero so that derivative multipliers stay skew-adjoint and
//! real fields stay real.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};

/// Maximum supported dimension.
pub const MAX_DIM: usize = 2;

/// Integer frequency vector; the second entry is 0 when d = 1.
pub type Freq = [i64; MAX_DIM];

/// Point on the torus; the second coordinate is 0 when d = 1.
pub type Point = [f64; MAX_DIM];

/// A uniform N^d collocation grid on [0,1)^d with retained band |k_j| <= N/2 - 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    dim: usize,
    n: usize,
}

impl TorusGrid {
    /// New grid with `n` collocation points per axis (`n` even, `n >= 8`).
    pub fn new(dim: usize, n: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidParameter(format!(
                "grid dimension must be 1 or 2, got {dim}"
            )));
        }
        if n < 8 || n % 2 != 0 {
            return Err(Error::InvalidParameter(format!(
                "points per axis must be even and >= 8, got {n}"
            )));
        }
        Ok(TorusGrid { dim, n })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Collocation points per axis.
    pub fn n_per_axis(&self) -> usize {
        self.n
    }

    /// Retained frequency cutoff K = N/2; modes satisfy |k_j| <= K - 1.
    pub fn cutoff(&self) -> i64 {
        (self.n / 2) as i64
    }

    /// Total number of stored coefficients per component (N^d, Nyquist rows included as zeros).
    pub fn volume(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    /// Number of frequencies in the retained band, (N-1)^d.
    pub fn band_size(&self) -> usize {
        (self.n - 1).pow(self.dim as u32)
    }

    /// Frequency of a flat coefficient index (row-major over axes).
    pub fn freq_of_index(&self, idx: usize) -> Freq {
        let n = self.n;
        let mut k = [0i64; MAX_DIM];
        match self.dim {
            1 => k[0] = Self::axis_freq(idx, n),
            2 => {
                k[0] = Self::axis_freq(idx / n, n);
                k[1] = Self::axis_freq(idx % n, n);
            }
            _ => unreachable!(),
        }
        k
    }

    /// Flat coefficient index of an in-band frequency, or None outside the band.
    pub fn index_of_freq(&self, k: Freq) -> Option<usize> {
        let half = self.cutoff();
        let n = self.n as i64;
        let mut idx = 0usize;
        for j in 0..self.dim {
            if k[j].abs() > half - 1 {
                return None;
            }
            let i = if k[j] >= 0 { k[j] } else { k[j] + n };
            idx = idx * self.n + i as usize;
        }
        Some(idx)
    }

    fn axis_freq(i: usize, n: usize) -> i64 {
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// True when the flat index touches a Nyquist row on any axis.
    pub fn is_nyquist(&self, idx: usize) -> bool {
        let n = self.n;
        match self.dim {
            1 => idx == n / 2,
            2 => idx / n == n / 2 || idx % n == n / 2,
            _ => unreachable!(),
        }
    }

    /// |k|^2 of a flat index.
    pub fn freq_norm_sq(&self, idx: usize) -> f64 {
        let k = self.freq_of_index(idx);
        (k[0] * k[0] + k[1] * k[1]) as f64
    }

    /// Japanese bracket <k> = (1 + |k|^2)^(1/2).
    pub fn bracket(&self, idx: usize) -> f64 {
        (1.0 + self.freq_norm_sq(idx)).sqrt()
    }

    /// Collocation point x_j = j/N of a flat value index (row-major).
    pub fn point_of_index(&self, idx: usize) -> Point {
        let n = self.n;
        let h = 1.0 / n as f64;
        match self.dim {
            1 => [idx as f64 * h, 0.0],
            2 => [(idx / n) as f64 * h, (idx % n) as f64 * h],
            _ => unreachable!(),
        }
    }

    /// All in-band frequencies in flat-index order (Nyquist rows skipped).
    pub fn band_freqs(&self) -> Vec<Freq> {
        (0..self.volume())
            .filter(|&i| !self.is_nyquist(i))
            .map(|i| self.freq_of_index(i))
            .collect()
    }

    /// Forward transform: values at collocation points -> Fourier coefficients
    /// f_hat(k) = (1/N^d) sum_j f(x_j) exp(-2 pi i k.x_j). Nyquist rows are zeroed.
    pub fn forward(&self, values: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(values.len(), self.volume());
        let mut buf = values.to_vec();
        self.fft_nd(&mut buf, false);
        let scale = 1.0 / self.volume() as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
        self.zero_nyquist(&mut buf);
        buf
    }

    /// Inverse transform: coefficients -> values f(x_j) = sum_k f_hat(k) exp(2 pi i k.x_j).
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(coeffs.len(), self.volume());
        let mut buf = coeffs.to_vec();
        self.fft_nd(&mut buf, true);
        buf
    }

    /// Zero all Nyquist-row coefficients in place.
    pub fn zero_nyquist(&self, coeffs: &mut [Complex64]) {
        for idx in 0..self.volume() {
            if self.is_nyquist(idx) {
                coeffs[idx] = Complex64::new(0.0, 0.0);
            }
        }
    }

    fn fft_nd(&self, data: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let mut planner = FftPlanner::<f64>::new();
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        match self.dim {
            1 => fft.process(data),
            2 => {
                // rows (second axis is contiguous)
                for row in data.chunks_exact_mut(n) {
                    fft.process(row);
                }
                // columns
                let mut col = vec![Complex64::new(0.0, 0.0); n];
                for j in 0..n {
                    for i in 0..n {
                        col[i] = data[i * n + j];
                    }
                    fft.process(&mut col);
                    for i in 0..n {
                        data[i * n + j] = col[i];
                    }
                }
            }
            _ => unreachable!(),
        }
    }

    /// Embed coefficients into a finer grid (same frequencies, zero padding).
    pub fn pad_coeffs(&self, coeffs: &[Complex64], fine: &TorusGrid) -> Vec<Complex64> {
        assert_eq!(fine.dim, self.dim);
        assert!(fine.n >= self.n);
        let mut out = vec![Complex64::new(0.0, 0.0); fine.volume()];
        for idx in 0..self.volume() {
            if self.is_nyquist(idx) {
                continue;
            }
            let k = self.freq_of_index(idx);
            if let Some(fidx) = fine.index_of_freq(k) {
                out[fidx] = coeffs[idx];
            }
        }
        out
    }

    /// Restrict coefficients from a finer grid back to this band (truncation).
    pub fn truncate_coeffs(&self, fine: &TorusGrid, coeffs: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(fine.dim, self.dim);
        let mut out = vec![Complex64::new(0.0, 0.0); self.volume()];
        for idx in 0..self.volume() {
            if self.is_nyquist(idx) {
                continue;
            }
            let k = self.freq_of_index(idx);
            if let Some(fidx) = fine.index_of_freq(k) {
                out[idx] = coeffs[fidx];
            }
        }
        out
    }

    /// Wrap a point into [0,1)^d.
    pub fn wrap_point(p: Point) -> Point {
        let mut q = p;
        for x in q.iter_mut() {
            *x -= x.floor();
            if *x >= 1.0 {
                *x = 0.0;
            }
        }
        q
    }

    /// Signed distance on the circle, wrapped into [-1/2, 1/2).
    pub fn wrap_signed(x: f64) -> f64 {
        let mut y = x - x.round();
        if y < -0.5 {
            y += 1.0;
        }
        y
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn freq_layout_round_trips() {
        let g = TorusGrid::new(1, 16).unwrap();
        for idx in 0..16 {
            let k = g.freq_of_index(idx);
            if g.is_nyquist(idx) {
                assert_eq!(k[0], -8);
                assert_eq!(g.index_of_freq(k), None);
            } else {
                assert_eq!(g.index_of_freq(k), Some(idx));
            }
        }
        let g2 = TorusGrid::new(2, 8).unwrap();
        assert_eq!(g2.band_size(), 49);
        assert_eq!(g2.freq_of_index(0), [0, 0]);
        assert_eq!(g2.freq_of_index(8 * 7 + 7), [-1, -1]);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TorusGrid::new(3, 16).is_err());
        assert!(TorusGrid::new(1, 6).is_err());
        assert!(TorusGrid::new(1, 9).is_err());
    }

    #[test]
    fn forward_inverse_round_trip() {
        let g = TorusGrid::new(2, 8).unwrap();
        let vals: Vec<Complex64> = (0..g.volume())
            .map(|i| {
                let p = g.point_of_index(i);
                let v = (2.0 * std::f64::consts::PI * p[0]).sin()
                    + 0.3 * (2.0 * std::f64::consts::PI * (p[0] + 2.0 * p[1])).cos();
                Complex64::new(v, 0.0)
            })
            .collect();
        let coeffs = g.forward(&vals);
        let back = g.inverse(&coeffs);
        for (a, b) in vals.iter().zip(back.iter()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
