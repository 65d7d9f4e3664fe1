//! Real vector-valued functions on the torus stored as truncated Fourier series.
//!
//! A `SpectralField` with c components keeps c * N^d complex coefficients in
//! FFT layout. Two invariants hold at all times: coefficients are conjugate
//! symmetric (the field is real-valued) and Nyquist rows are identically zero.

use num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::grid::{Freq, Point, TorusGrid};

const TAU: f64 = 2.0 * PI;

/// Truncated Fourier series of a real field on T^d with `components` components.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    grid: TorusGrid,
    components: usize,
    /// Component-major: coeffs[c * volume + idx].
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: TorusGrid, components: usize) -> Self {
        SpectralField {
            grid,
            components,
            coeffs: vec![Complex64::new(0.0, 0.0); components * grid.volume()],
        }
    }

    /// Constant field, one value per component.
    pub fn constant(grid: TorusGrid, values: &[f64]) -> Self {
        let mut f = SpectralField::zeros(grid, values.len());
        for (c, &v) in values.iter().enumerate() {
            f.coeffs[c * grid.volume()] = Complex64::new(v, 0.0);
        }
        f
    }

    /// Scalar field amp * cos(2 pi k.x + phase) as a real mode pair.
    pub fn mode(grid: TorusGrid, k: Freq, amp: f64, phase: f64) -> Result<Self> {
        let mut f = SpectralField::zeros(grid, 1);
        let idx = grid
            .index_of_freq(k)
            .ok_or_else(|| Error::InvalidParameter(format!("mode {k:?} outside band")))?;
        let half = 0.5 * amp * Complex64::new(phase.cos(), phase.sin());
        f.coeffs[idx] += half;
        if let Some(m) = grid.index_of_freq([-k[0], -k[1]]) {
            f.coeffs[m] += half.conj();
        }
        Ok(f)
    }

    /// Sample a closure at collocation points and project onto the band.
    pub fn from_values_fn<F>(grid: TorusGrid, components: usize, f: F) -> Self
    where
        F: Fn(Point, usize) -> f64,
    {
        let vol = grid.volume();
        let mut out = SpectralField::zeros(grid, components);
        let mut buf = vec![Complex64::new(0.0, 0.0); vol];
        for c in 0..components {
            for idx in 0..vol {
                buf[idx] = Complex64::new(f(grid.point_of_index(idx), c), 0.0);
            }
            let coeffs = grid.forward(&buf);
            out.coeffs[c * vol..(c + 1) * vol].copy_from_slice(&coeffs);
        }
        out.symmetrize();
        out
    }

    /// Project component-major collocation samples onto the band.
    pub fn from_samples(grid: TorusGrid, components: usize, samples: &[f64]) -> Result<Self> {
        let vol = grid.volume();
        if samples.len() != components * vol {
            return Err(Error::ShapeMismatch(format!(
                "expected {} samples, got {}",
                components * vol,
                samples.len()
            )));
        }
        let mut out = SpectralField::zeros(grid, components);
        let mut buf = vec![Complex64::new(0.0, 0.0); vol];
        for c in 0..components {
            for idx in 0..vol {
                buf[idx] = Complex64::new(samples[c * vol + idx], 0.0);
            }
            let coeffs = grid.forward(&buf);
            out.coeffs[c * vol..(c + 1) * vol].copy_from_slice(&coeffs);
        }
        out.symmetrize();
        Ok(out)
    }

    /// Build from raw coefficients, enforcing both invariants exactly.
    pub fn from_coeffs(grid: TorusGrid, components: usize, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != components * grid.volume() {
            return Err(Error::ShapeMismatch(format!(
                "expected {} coefficients, got {}",
                components * grid.volume(),
                coeffs.len()
            )));
        }
        let mut f = SpectralField {
            grid,
            components,
            coeffs,
        };
        let defect = f.reality_defect();
        let scale = f.max_coeff_norm().max(1.0);
        if defect > 1e-9 * scale {
            return Err(Error::RealityViolation(format!(
                "conjugate-symmetry defect {defect:.3e}"
            )));
        }
        f.symmetrize();
        Ok(f)
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, component: usize, k: Freq) -> Complex64 {
        match self.grid.index_of_freq(k) {
            Some(idx) => self.coeffs[component * self.grid.volume() + idx],
            None => Complex64::new(0.0, 0.0),
        }
    }

    pub fn set_coeff(&mut self, component: usize, k: Freq, value: Complex64) {
        let vol = self.grid.volume();
        if let Some(idx) = self.grid.index_of_freq(k) {
            self.coeffs[component * vol + idx] = value;
            if let Some(m) = self.grid.index_of_freq([-k[0], -k[1]]) {
                if m != idx {
                    self.coeffs[component * vol + m] = value.conj();
                }
            }
        }
    }

    fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Max |c(-k) - conj c(k)| over the band plus max |Nyquist entry|.
    pub fn reality_defect(&self) -> f64 {
        let vol = self.grid.volume();
        let mut worst: f64 = 0.0;
        for c in 0..self.components {
            for idx in 0..vol {
                if self.grid.is_nyquist(idx) {
                    worst = worst.max(self.coeffs[c * vol + idx].norm());
                    continue;
                }
                let k = self.grid.freq_of_index(idx);
                let m = self.grid.index_of_freq([-k[0], -k[1]]).unwrap();
                let d = (self.coeffs[c * vol + m] - self.coeffs[c * vol + idx].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Force conjugate symmetry and zero Nyquist rows exactly.
    pub fn symmetrize(&mut self) {
        let vol = self.grid.volume();
        for c in 0..self.components {
            let base = c * vol;
            for idx in 0..vol {
                if self.grid.is_nyquist(idx) {
                    self.coeffs[base + idx] = Complex64::new(0.0, 0.0);
                    continue;
                }
                let k = self.grid.freq_of_index(idx);
                let m = self.grid.index_of_freq([-k[0], -k[1]]).unwrap();
                if m < idx {
                    continue;
                }
                let avg = 0.5 * (self.coeffs[base + idx] + self.coeffs[base + m].conj());
                self.coeffs[base + idx] = avg;
                self.coeffs[base + m] = avg.conj();
            }
        }
    }

    /// Values at all collocation points, component-major.
    pub fn values(&self) -> Vec<f64> {
        let vol = self.grid.volume();
        let mut out = Vec::with_capacity(self.components * vol);
        for c in 0..self.components {
            let vals = self.grid.inverse(&self.coeffs[c * vol..(c + 1) * vol]);
            out.extend(vals.iter().map(|v| v.re));
        }
        out
    }

    /// Extract one component as a scalar field.
    pub fn component(&self, c: usize) -> SpectralField {
        let vol = self.grid.volume();
        SpectralField {
            grid: self.grid,
            components: 1,
            coeffs: self.coeffs[c * vol..(c + 1) * vol].to_vec(),
        }
    }

    /// Assemble a vector field from scalar components (all on one grid).
    pub fn from_components(parts: &[SpectralField]) -> Result<SpectralField> {
        let grid = parts[0].grid;
        let mut coeffs = Vec::with_capacity(parts.len() * grid.volume());
        for p in parts {
            if p.grid != grid || p.components != 1 {
                return Err(Error::ShapeMismatch(
                    "from_components wants scalar fields on one grid".into(),
                ));
            }
            coeffs.extend_from_slice(&p.coeffs);
        }
        Ok(SpectralField {
            grid,
            components: parts.len(),
            coeffs,
        })
    }

    /// Sobolev H^q norm ( sum_c sum_k <k>^{2q} |f_hat|^2 )^{1/2}.
    pub fn sobolev_norm(&self, q: f64) -> Result<f64> {
        if q < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "Sobolev index must be >= 0, got {q}"
            )));
        }
        let vol = self.grid.volume();
        let mut acc = 0.0;
        for idx in 0..vol {
            let w = (1.0 + self.grid.freq_norm_sq(idx)).powf(q);
            for c in 0..self.components {
                acc += w * self.coeffs[c * vol + idx].norm_sqr();
            }
        }
        Ok(acc.sqrt())
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0).expect("q = 0 is valid")
    }

    /// Max |f| over collocation points (all components).
    pub fn linf_norm(&self) -> f64 {
        self.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Coefficient-wise derivative: multiply by 2 pi i k_j.
    pub fn partial_derivative(&self, axis: usize) -> Result<SpectralField> {
        if axis >= self.grid.dim() {
            return Err(Error::InvalidParameter(format!(
                "axis {axis} out of range for dimension {}",
                self.grid.dim()
            )));
        }
        let vol = self.grid.volume();
        let mut out = self.clone();
        for idx in 0..vol {
            let k = self.grid.freq_of_index(idx);
            let factor = Complex64::new(0.0, TAU * k[axis] as f64);
            for c in 0..self.components {
                out.coeffs[c * vol + idx] *= factor;
            }
        }
        Ok(out)
    }

    /// Exact evaluation of the truncated series at arbitrary points.
    ///
    /// Returns one row per point with `components` entries. Points are wrapped
    /// into [0,1)^d; per-axis phase power tables keep this at O(band) per point.
    pub fn evaluate(&self, points: &[Point]) -> Vec<Vec<f64>> {
        let vol = self.grid.volume();
        let n = self.grid.n_per_axis();
        let half = (n / 2) as i64;
        let d = self.grid.dim();
        let mut out = Vec::with_capacity(points.len());
        // phases[axis][k + half - 1] = exp(2 pi i k x_axis), k in [-(half-1), half-1]
        let span = (2 * half - 1) as usize;
        let mut phases = [vec![Complex64::new(1.0, 0.0); span], Vec::new()];
        if d == 2 {
            phases[1] = vec![Complex64::new(1.0, 0.0); span];
        }
        for &p in points {
            let p = TorusGrid::wrap_point(p);
            for axis in 0..d {
                let step = Complex64::new((TAU * p[axis]).cos(), (TAU * p[axis]).sin());
                let table = &mut phases[axis];
                let zero = (half - 1) as usize;
                table[zero] = Complex64::new(1.0, 0.0);
                for m in 1..half as usize {
                    table[zero + m] = table[zero + m - 1] * step;
                    table[zero - m] = table[zero - m + 1] * step.conj();
                }
            }
            let zero = (half - 1) as i64;
            let mut row = Vec::with_capacity(self.components);
            for c in 0..self.components {
                let mut acc = Complex64::new(0.0, 0.0);
                for idx in 0..vol {
                    if self.grid.is_nyquist(idx) {
                        continue;
                    }
                    let coeff = self.coeffs[c * vol + idx];
                    if coeff.norm_sqr() == 0.0 {
                        continue;
                    }
                    let k = self.grid.freq_of_index(idx);
                    let mut ph = phases[0][(k[0] + zero) as usize];
                    if d == 2 {
                        ph *= phases[1][(k[1] + zero) as usize];
                    }
                    acc += coeff * ph;
                }
                row.push(acc.re);
            }
            out.push(row);
        }
        out
    }

    /// Dealiased pointwise product of two scalar fields (2x zero padding).
    pub fn pointwise_multiply(f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
        if f.grid != g.grid {
            return Err(Error::ShapeMismatch("pointwise product across grids".into()));
        }
        if f.components != 1 || g.components != 1 {
            return Err(Error::ShapeMismatch(
                "pointwise_multiply expects scalar fields".into(),
            ));
        }
        let coarse = f.grid;
        let fine = TorusGrid::new(coarse.dim(), 2 * coarse.n_per_axis())?;
        let fv = fine.inverse(&coarse.pad_coeffs(&f.coeffs, &fine));
        let gv = fine.inverse(&coarse.pad_coeffs(&g.coeffs, &fine));
        let prod: Vec<Complex64> = fv
            .iter()
            .zip(gv.iter())
            .map(|(a, b)| Complex64::new(a.re * b.re, 0.0))
            .collect();
        let fine_coeffs = fine.forward(&prod);
        let mut out = SpectralField {
            grid: coarse,
            components: 1,
            coeffs: coarse.truncate_coeffs(&fine, &fine_coeffs),
        };
        out.symmetrize();
        Ok(out)
    }

    /// Exact band projection of an n-fold product f_1 ... f_n (n >= 1).
    ///
    /// Padded far enough that no aliasing touches the retained band, so the
    /// result is symmetric in the factors and agrees with iterated
    /// `pointwise_multiply` whenever the intermediate products fit the band.
    pub fn product_exact(fields: &[&SpectralField]) -> Result<SpectralField> {
        let grid = fields[0].grid;
        for f in fields {
            if f.grid != grid || f.components != 1 {
                return Err(Error::ShapeMismatch("product_exact wants scalar fields".into()));
            }
        }
        if fields.len() == 1 {
            return Ok(fields[0].clone());
        }
        // degree of the product is n (K - 1); pad so that degree + band < N_fine/2
        let n = fields.len();
        let mut fine_n = (n + 1) * grid.n_per_axis() / 2 + grid.n_per_axis();
        if fine_n % 2 == 1 {
            fine_n += 1;
        }
        let fine = TorusGrid::new(grid.dim(), fine_n.max(2 * grid.n_per_axis()))?;
        let mut prod = vec![1.0f64; fine.volume()];
        for f in fields {
            let vals = fine.inverse(&grid.pad_coeffs(&f.coeffs, &fine));
            for (p, v) in prod.iter_mut().zip(vals.iter()) {
                *p *= v.re;
            }
        }
        let cbuf: Vec<Complex64> = prod.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let fine_coeffs = fine.forward(&cbuf);
        let mut out = SpectralField {
            grid,
            components: 1,
            coeffs: grid.truncate_coeffs(&fine, &fine_coeffs),
        };
        out.symmetrize();
        Ok(out)
    }

    /// Multiply every component of `field` by a scalar field (dealiased).
    pub fn scalar_times(scalar: &SpectralField, field: &SpectralField) -> Result<SpectralField> {
        let parts: Result<Vec<_>> = (0..field.components)
            .map(|c| SpectralField::pointwise_multiply(scalar, &field.component(c)))
            .collect();
        SpectralField::from_components(&parts?)
    }

    /// Convective derivative (nabla_w f)^i = sum_j w^j d_j f^i, dealiased.
    pub fn convective_derivative(w: &SpectralField, f: &SpectralField) -> Result<SpectralField> {
        if w.grid != f.grid {
            return Err(Error::ShapeMismatch("convective derivative across grids".into()));
        }
        if w.components != w.grid.dim() {
            return Err(Error::ShapeMismatch(
                "transport field must have d components".into(),
            ));
        }
        let mut out = SpectralField::zeros(f.grid, f.components);
        for j in 0..w.grid.dim() {
            let wj = w.component(j);
            let dj = f.partial_derivative(j)?;
            out = &out + &SpectralField::scalar_times(&wj, &dj)?;
        }
        Ok(out)
    }

    /// Divergence of a vector field (c = d).
    pub fn divergence(&self) -> Result<SpectralField> {
        if self.components != self.grid.dim() {
            return Err(Error::ShapeMismatch("divergence needs c = d".into()));
        }
        let mut out = SpectralField::zeros(self.grid, 1);
        for j in 0..self.grid.dim() {
            out = &out + &self.component(j).partial_derivative(j)?;
        }
        Ok(out)
    }

    pub fn scale(&self, s: f64) -> SpectralField {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= s;
        }
        out
    }

    /// Collocation quadrature of the pointwise dot product, int f.g dx.
    ///
    /// Exact for band-limited factors: products only alias at |k| >= N which
    /// the band never reaches.
    pub fn integral_dot(f: &SpectralField, g: &SpectralField) -> f64 {
        assert_eq!(f.grid, g.grid);
        assert_eq!(f.components, g.components);
        let vol = f.grid.volume();
        let mut acc = Complex64::new(0.0, 0.0);
        for c in 0..f.components {
            for idx in 0..vol {
                acc += f.coeffs[c * vol + idx] * g.coeffs[c * vol + idx].conj();
            }
        }
        acc.re
    }

    /// Embed into a finer grid (same coefficients, zero padding).
    pub fn embed(&self, fine: TorusGrid) -> Result<SpectralField> {
        if fine.dim() != self.grid.dim() || fine.n_per_axis() < self.grid.n_per_axis() {
            return Err(Error::ShapeMismatch("embed target must refine the grid".into()));
        }
        let vol = self.grid.volume();
        let mut coeffs = Vec::with_capacity(self.components * fine.volume());
        for c in 0..self.components {
            coeffs.extend(self.grid.pad_coeffs(&self.coeffs[c * vol..(c + 1) * vol], &fine));
        }
        SpectralField::from_coeffs(fine, self.components, coeffs)
    }

    /// Mean value per component (the k = 0 coefficients).
    pub fn mean(&self) -> Vec<f64> {
        (0..self.components)
            .map(|c| self.coeffs[c * self.grid.volume()].re)
            .collect()
    }
}

impl std::ops::Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, rhs.grid);
        assert_eq!(self.components, rhs.components);
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a += b;
        }
        out
    }
}

impl std::ops::Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        assert_eq!(self.grid, rhs.grid);
        assert_eq!(self.components, rhs.components);
        let mut out = self.clone();
        for (a, b) in out.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a -= b;
        }
        out
    }
}

impl std::ops::Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scale(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    fn sin_mode(grid: TorusGrid, k: i64) -> SpectralField {
        // amp cos(2 pi k x - pi/2) = sin(2 pi k x)
        SpectralField::mode(grid, [k, 0], 1.0, -PI / 2.0).unwrap()
    }

    #[test]
    fn sobolev_norm_single_mode() {
        let g = grid1(32);
        let f = sin_mode(g, 1);
        assert!((f.sobolev_norm(0.0).unwrap() - 1.0 / 2.0f64.sqrt()).abs() < 1e-14);
        assert!((f.sobolev_norm(1.0).unwrap() - 1.0).abs() < 1e-14);
        let z = SpectralField::zeros(g, 1);
        assert_eq!(z.sobolev_norm(3.7).unwrap(), 0.0);
        assert!(f.sobolev_norm(-1.0).is_err());
    }

    #[test]
    fn norm_monotone_in_q() {
        let g = grid1(32);
        let f = SpectralField::from_values_fn(g, 1, |p, _| {
            (TAU * p[0]).sin() + 0.4 * (3.0 * TAU * p[0]).cos()
        });
        let mut prev = 0.0;
        for q in [0.0, 0.5, 1.0, 2.0, 3.5] {
            let n = f.sobolev_norm(q).unwrap();
            assert!(n >= prev);
            prev = n;
        }
    }

    #[test]
    fn parseval_matches_quadrature() {
        let g = grid1(64);
        let f = SpectralField::from_values_fn(g, 1, |p, _| {
            (TAU * p[0]).sin() - 0.2 * (5.0 * TAU * p[0]).cos() + 0.7
        });
        let l2sq = f.sobolev_norm(0.0).unwrap().powi(2);
        let quad: f64 =
            f.values().iter().map(|v| v * v).sum::<f64>() / g.volume() as f64;
        assert!((l2sq - quad).abs() <= 1e-10 * quad.max(1.0));
    }

    #[test]
    fn derivative_of_sine() {
        let g = grid1(32);
        let f = sin_mode(g, 1);
        let df = f.partial_derivative(0).unwrap();
        let expect = SpectralField::mode(g, [1, 0], TAU, 0.0).unwrap(); // 2 pi cos
        assert!((&df - &expect).l2_norm() < 1e-12);
        let c = SpectralField::constant(g, &[3.0]);
        assert_eq!(c.partial_derivative(0).unwrap().l2_norm(), 0.0);
        assert!(f.partial_derivative(1).is_err());
    }

    #[test]
    fn mixed_partials_commute() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = SpectralField::from_values_fn(g, 1, |p, _| {
            (TAU * p[0]).sin() * (2.0 * TAU * p[1]).cos() + (TAU * (p[0] + p[1])).sin()
        });
        let dxy = f
            .partial_derivative(0)
            .unwrap()
            .partial_derivative(1)
            .unwrap();
        let dyx = f
            .partial_derivative(1)
            .unwrap()
            .partial_derivative(0)
            .unwrap();
        assert!((&dxy - &dyx).l2_norm() < 1e-10);
    }

    #[test]
    fn multiply_identity_and_product_to_sum() {
        let g = grid1(32);
        let one = SpectralField::constant(g, &[1.0]);
        let f = sin_mode(g, 1);
        let p = SpectralField::pointwise_multiply(&one, &f).unwrap();
        assert!((&p - &f).l2_norm() < 1e-14);

        // sin^2(2 pi x) = (1 - cos(4 pi x)) / 2
        let sq = SpectralField::pointwise_multiply(&f, &f).unwrap();
        let expect = &SpectralField::constant(g, &[0.5])
            - &SpectralField::mode(g, [2, 0], 0.5, 0.0).unwrap();
        assert!((&sq - &expect).l2_norm() < 1e-14);
    }

    #[test]
    fn multiply_truncates_instead_of_aliasing() {
        // cos(2 pi x) * cos(2 pi (K-1) x) splits into bands K-2 and K;
        // the K part must be dropped, not folded back.
        let n = 32;
        let g = grid1(n);
        let kmax = (n / 2 - 1) as i64;
        let f = SpectralField::mode(g, [1, 0], 1.0, 0.0).unwrap();
        let h = SpectralField::mode(g, [kmax, 0], 1.0, 0.0).unwrap();
        let p = SpectralField::pointwise_multiply(&f, &h).unwrap();
        // exact convolution: 1/2 cos(2 pi (K-2) x) + 1/2 cos(2 pi K x)
        let expect = SpectralField::mode(g, [kmax - 1, 0], 0.5, 0.0).unwrap();
        assert!((&p - &expect).l2_norm() < 1e-14);
        assert_eq!(p.coeff(0, [kmax + 1, 0]), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn evaluate_reproduces_samples_and_modes() {
        let g = grid1(32);
        let f = SpectralField::from_values_fn(g, 1, |p, _| {
            (TAU * p[0]).sin() + 0.25 * (4.0 * TAU * p[0]).cos()
        });
        let pts: Vec<Point> = (0..g.volume()).map(|i| g.point_of_index(i)).collect();
        let vals = f.evaluate(&pts);
        let direct = f.values();
        for (i, row) in vals.iter().enumerate() {
            assert!((row[0] - direct[i]).abs() < 1e-12);
        }
        let s = sin_mode(g, 1);
        let at_quarter = s.evaluate(&[[0.25, 0.0]]);
        assert!((at_quarter[0][0] - 1.0).abs() < 1e-13);
    }

    #[test]
    fn evaluate_matches_oversampled_fft_oracle() {
        // Oracle: zero-pad to 4N, inverse FFT, read off values at 4N points.
        let g = grid1(32);
        let fine = TorusGrid::new(1, 128).unwrap();
        let f = SpectralField::from_values_fn(g, 1, |p, _| {
            (TAU * p[0]).sin() + 0.3 * (7.0 * TAU * p[0]).cos() - 0.1 * (11.0 * TAU * p[0]).sin()
        });
        let fine_vals = fine.inverse(&g.pad_coeffs(f.coeffs(), &fine));
        // off-grid w.r.t. the N-grid but on the 4N oracle grid
        for i in [1usize, 5, 13, 50, 77, 101, 126] {
            let p = fine.point_of_index(i);
            let v = f.evaluate(&[p])[0][0];
            assert!((v - fine_vals[i].re).abs() <= 1e-10);
        }
    }

    #[test]
    fn integral_dot_is_exact_quadrature() {
        let g = grid1(32);
        let f = sin_mode(g, 1);
        // int 2 sin^2 = 1
        assert!((SpectralField::integral_dot(&f, &f) - 0.5).abs() < 1e-14);
    }

    #[test]
    fn reality_invariant_enforced() {
        let g = grid1(8);
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 8];
        coeffs[1] = Complex64::new(0.0, 1.0); // k=1 without conjugate partner
        assert!(SpectralField::from_coeffs(g, 1, coeffs).is_err());
    }
}
