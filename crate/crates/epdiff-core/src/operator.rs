//! Realized linear operators on the truncated spectral space: Fourier
//! multipliers and dense matrices over the Fourier basis, with Kohn-Nirenberg
//! quantization of symbols, elliptic solves, and commutator algebra.
//!
//! Dense matrices are indexed by slots (component, fft index); Nyquist rows
//! and columns are structurally zero. Every operator maps real fields to real
//! fields: M(-k,-k') = conj M(k,k').

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::{Freq, TorusGrid};
use crate::symbol::{check_reality, SymbolData, SymbolSpec};

/// Soft cap on the dense dimension; keeps accidental huge assemblies out.
pub const DENSE_SLOT_CAP: usize = 8192;

#[derive(Debug, Clone)]
pub enum OperatorRepr {
    /// Diagonal in frequency: one comps x comps matrix per k (row-major),
    /// stored as values[k_idx * comps^2 ..].
    Multiplier(Vec<Complex64>),
    /// Full matrix over slots (component-major by fft index).
    Dense(DMatrix<Complex64>),
}

/// A linear operator on the truncated spectral space.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    grid: TorusGrid,
    comps: usize,
    repr: OperatorRepr,
    order_tag: f64,
}

impl SpectralOperator {
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn comps(&self) -> usize {
        self.comps
    }

    pub fn order_tag(&self) -> f64 {
        self.order_tag
    }

    pub fn with_order_tag(mut self, r: f64) -> Self {
        self.order_tag = r;
        self
    }

    pub fn is_multiplier(&self) -> bool {
        matches!(self.repr, OperatorRepr::Multiplier(_))
    }

    pub fn repr(&self) -> &OperatorRepr {
        &self.repr
    }

    fn slots(&self) -> usize {
        self.comps * self.grid.volume()
    }

    pub fn identity(grid: TorusGrid, comps: usize) -> Self {
        Self::multiplier_from_fn(grid, comps, 0.0, |_| Complex64::new(1.0, 0.0))
    }

    pub fn zero(grid: TorusGrid, comps: usize) -> Self {
        Self::multiplier_from_fn(grid, comps, 0.0, |_| Complex64::new(0.0, 0.0))
    }

    /// Scalar multiplier a(k) * I. The closure must satisfy a(-k) = conj a(k).
    pub fn multiplier_from_fn<F>(grid: TorusGrid, comps: usize, order: f64, f: F) -> Self
    where
        F: Fn(Freq) -> Complex64,
    {
        let vol = grid.volume();
        let mut values = vec![Complex64::new(0.0, 0.0); vol * comps * comps];
        for idx in 0..vol {
            if grid.is_nyquist(idx) {
                continue;
            }
            let v = f(grid.freq_of_index(idx));
            for c in 0..comps {
                values[idx * comps * comps + c * comps + c] = v;
            }
        }
        SpectralOperator {
            grid,
            comps,
            repr: OperatorRepr::Multiplier(values),
            order_tag: order,
        }
    }

    /// The derivative operator D_j (multiplier 2 pi i k_j).
    pub fn derivative(grid: TorusGrid, comps: usize, axis: usize) -> Result<Self> {
        if axis >= grid.dim() {
            return Err(Error::InvalidParameter(format!(
                "axis {axis} out of range for dimension {}",
                grid.dim()
            )));
        }
        Ok(Self::multiplier_from_fn(grid, comps, 1.0, |k| {
            Complex64::new(0.0, 2.0 * std::f64::consts::PI * k[axis] as f64)
        }))
    }

    /// Dense operator from an explicit slot matrix (Nyquist rows/cols are zeroed).
    pub fn from_dense(grid: TorusGrid, comps: usize, order: f64, mut m: DMatrix<Complex64>) -> Result<Self> {
        let slots = comps * grid.volume();
        if m.nrows() != slots || m.ncols() != slots {
            return Err(Error::ShapeMismatch(format!(
                "dense operator must be {slots} x {slots}"
            )));
        }
        for s in 0..slots {
            if grid.is_nyquist(s % grid.volume()) {
                for t in 0..slots {
                    m[(s, t)] = Complex64::new(0.0, 0.0);
                    m[(t, s)] = Complex64::new(0.0, 0.0);
                }
            }
        }
        Ok(SpectralOperator {
            grid,
            comps,
            repr: OperatorRepr::Dense(m),
            order_tag: order,
        })
    }

    /// Kohn-Nirenberg quantization of a symbol on the grid band:
    /// (Au)(x) = sum_k exp(2 pi i k.x) a(x,k) u_hat(k), re-projected to the
    /// band with dealiasing in x (no modular folding of the x spectrum).
    pub fn realize(spec: &SymbolSpec, grid: TorusGrid, comps: usize) -> Result<Self> {
        check_reality(spec, &grid, comps)?;
        match &spec.data {
            SymbolData::Multiplier(def) => {
                let vol = grid.volume();
                let mut values = vec![Complex64::new(0.0, 0.0); vol * comps * comps];
                for idx in 0..vol {
                    if grid.is_nyquist(idx) {
                        continue;
                    }
                    let m = def.matrix_at(grid.freq_of_index(idx), comps);
                    values[idx * comps * comps..(idx + 1) * comps * comps].copy_from_slice(&m);
                }
                Ok(SpectralOperator {
                    grid,
                    comps,
                    repr: OperatorRepr::Multiplier(values),
                    order_tag: spec.order,
                })
            }
            SymbolData::Separable(terms) => {
                let slots = comps * grid.volume();
                if slots > DENSE_SLOT_CAP {
                    return Err(Error::BoundExceeded(format!(
                        "dense realization needs {slots} slots (cap {DENSE_SLOT_CAP})"
                    )));
                }
                let vol = grid.volume();
                let mut m = DMatrix::<Complex64>::zeros(slots, slots);
                // column at input frequency k picks up g_hat(xi - k) a(k)
                for k_idx in 0..vol {
                    if grid.is_nyquist(k_idx) {
                        continue;
                    }
                    let k = grid.freq_of_index(k_idx);
                    for term in terms {
                        let a = term.multiplier.matrix_at(k, comps);
                        let g = &term.x_factor;
                        for (l_idx, g_hat) in g.coeffs().iter().enumerate() {
                            if g_hat.norm_sqr() == 0.0 || g.grid().is_nyquist(l_idx) {
                                continue;
                            }
                            let lam = g.grid().freq_of_index(l_idx);
                            let xi = [k[0] + lam[0], k[1] + lam[1]];
                            let xi_idx = match grid.index_of_freq(xi) {
                                Some(i) => i,
                                None => continue, // truncated: stays outside the band
                            };
                            for ci in 0..comps {
                                for cj in 0..comps {
                                    m[(ci * vol + xi_idx, cj * vol + k_idx)] +=
                                        g_hat * a[ci * comps + cj];
                                }
                            }
                        }
                    }
                }
                Self::from_dense(grid, comps, spec.order, m)
            }
            SymbolData::Gridded(table) => {
                if table.grid != grid {
                    return Err(Error::ShapeMismatch(
                        "gridded symbol lives on a different grid".into(),
                    ));
                }
                let slots = comps * grid.volume();
                if slots > DENSE_SLOT_CAP {
                    return Err(Error::BoundExceeded(format!(
                        "dense realization needs {slots} slots (cap {DENSE_SLOT_CAP})"
                    )));
                }
                let vol = grid.volume();
                let mut m = DMatrix::<Complex64>::zeros(slots, slots);
                let mut buf = vec![Complex64::new(0.0, 0.0); vol];
                for k_idx in 0..vol {
                    if grid.is_nyquist(k_idx) {
                        continue;
                    }
                    let k = grid.freq_of_index(k_idx);
                    for ci in 0..comps {
                        for cj in 0..comps {
                            for x_idx in 0..vol {
                                buf[x_idx] = table.at(x_idx, k_idx)[ci * comps + cj];
                            }
                            let a_hat = grid.forward(&buf);
                            for (l_idx, ah) in a_hat.iter().enumerate() {
                                if ah.norm_sqr() == 0.0 || grid.is_nyquist(l_idx) {
                                    continue;
                                }
                                let lam = grid.freq_of_index(l_idx);
                                let xi = [k[0] + lam[0], k[1] + lam[1]];
                                if let Some(xi_idx) = grid.index_of_freq(xi) {
                                    m[(ci * vol + xi_idx, cj * vol + k_idx)] += ah;
                                }
                            }
                        }
                    }
                }
                Self::from_dense(grid, comps, spec.order, m)
            }
        }
    }

    /// Matrix (or diagonal) action on a field.
    pub fn apply(&self, f: &SpectralField) -> Result<SpectralField> {
        if f.grid() != self.grid || f.components() != self.comps {
            return Err(Error::ShapeMismatch(format!(
                "operator on {} comps / N = {} applied to {} comps / N = {}",
                self.comps,
                self.grid.n_per_axis(),
                f.components(),
                f.grid().n_per_axis()
            )));
        }
        let vol = self.grid.volume();
        let out = match &self.repr {
            OperatorRepr::Multiplier(values) => {
                let mut coeffs = vec![Complex64::new(0.0, 0.0); self.comps * vol];
                for idx in 0..vol {
                    if self.grid.is_nyquist(idx) {
                        continue;
                    }
                    let m = &values[idx * self.comps * self.comps..(idx + 1) * self.comps * self.comps];
                    for ci in 0..self.comps {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for cj in 0..self.comps {
                            acc += m[ci * self.comps + cj] * f.coeffs()[cj * vol + idx];
                        }
                        coeffs[ci * vol + idx] = acc;
                    }
                }
                coeffs
            }
            OperatorRepr::Dense(m) => {
                let x = nalgebra::DVector::from_iterator(
                    self.slots(),
                    f.coeffs().iter().copied(),
                );
                let y = m * x;
                y.iter().copied().collect()
            }
        };
        SpectralField::from_coeffs(self.grid, self.comps, out)
    }

    /// Solve A f = g on the truncated space. Multipliers divide exactly;
    /// dense representations go through an LU factorization of the band
    /// submatrix with one step of iterative refinement.
    pub fn solve(&self, g: &SpectralField) -> Result<SpectralField> {
        if g.grid() != self.grid || g.components() != self.comps {
            return Err(Error::ShapeMismatch("solve shape mismatch".into()));
        }
        let vol = self.grid.volume();
        match &self.repr {
            OperatorRepr::Multiplier(values) => {
                let cc = self.comps * self.comps;
                let mut coeffs = vec![Complex64::new(0.0, 0.0); self.comps * vol];
                for idx in 0..vol {
                    if self.grid.is_nyquist(idx) {
                        continue;
                    }
                    let m = &values[idx * cc..(idx + 1) * cc];
                    let rhs: Vec<Complex64> =
                        (0..self.comps).map(|c| g.coeffs()[c * vol + idx]).collect();
                    let sol = solve_small(m, &rhs, self.comps).ok_or_else(|| {
                        Error::SingularOperator {
                            min_singular: smallest_singular_small(m, self.comps),
                        }
                    })?;
                    for c in 0..self.comps {
                        coeffs[c * vol + idx] = sol[c];
                    }
                }
                SpectralField::from_coeffs(self.grid, self.comps, coeffs)
            }
            OperatorRepr::Dense(m) => {
                let band: Vec<usize> = (0..self.slots())
                    .filter(|s| !self.grid.is_nyquist(s % vol))
                    .collect();
                let nb = band.len();
                let mut mb = DMatrix::<Complex64>::zeros(nb, nb);
                for (i, &si) in band.iter().enumerate() {
                    for (j, &sj) in band.iter().enumerate() {
                        mb[(i, j)] = m[(si, sj)];
                    }
                }
                let rhs = nalgebra::DVector::from_iterator(
                    nb,
                    band.iter().map(|&s| g.coeffs()[s]),
                );
                let lu = mb.clone().lu();
                let mut x = lu.solve(&rhs).ok_or_else(|| Error::SingularOperator {
                    min_singular: smallest_singular(&mb),
                })?;
                // one refinement step takes the residual to the rounding floor
                let resid = &rhs - &mb * &x;
                if let Some(dx) = lu.solve(&resid) {
                    x += dx;
                }
                let rnorm = (&rhs - &mb * &x).norm();
                let gnorm = rhs.norm();
                if gnorm > 0.0 && rnorm / gnorm > 1e-10 {
                    return Err(Error::SolveResidual {
                        residual: rnorm / gnorm,
                        tol: 1e-10,
                    });
                }
                let mut coeffs = vec![Complex64::new(0.0, 0.0); self.slots()];
                for (i, &s) in band.iter().enumerate() {
                    coeffs[s] = x[i];
                }
                SpectralField::from_coeffs(self.grid, self.comps, coeffs)
            }
        }
    }

    /// Operator composition self o other (apply `other` first).
    pub fn compose(&self, other: &SpectralOperator) -> Result<SpectralOperator> {
        self.check_compatible(other)?;
        let order = self.order_tag + other.order_tag;
        let repr = match (&self.repr, &other.repr) {
            (OperatorRepr::Multiplier(a), OperatorRepr::Multiplier(b)) => {
                let cc = self.comps * self.comps;
                let vol = self.grid.volume();
                let mut values = vec![Complex64::new(0.0, 0.0); vol * cc];
                for idx in 0..vol {
                    let ma = &a[idx * cc..(idx + 1) * cc];
                    let mb = &b[idx * cc..(idx + 1) * cc];
                    let out = &mut values[idx * cc..(idx + 1) * cc];
                    for i in 0..self.comps {
                        for j in 0..self.comps {
                            let mut acc = Complex64::new(0.0, 0.0);
                            for l in 0..self.comps {
                                acc += ma[i * self.comps + l] * mb[l * self.comps + j];
                            }
                            out[i * self.comps + j] = acc;
                        }
                    }
                }
                OperatorRepr::Multiplier(values)
            }
            _ => OperatorRepr::Dense(self.dense_matrix() * other.dense_matrix()),
        };
        Ok(SpectralOperator {
            grid: self.grid,
            comps: self.comps,
            repr,
            order_tag: order,
        })
    }

    /// Commutator [self, other] = self o other - other o self,
    /// tagged with order r1 + r2 - 1.
    pub fn commutator(&self, other: &SpectralOperator) -> Result<SpectralOperator> {
        let ab = self.compose(other)?;
        let ba = other.compose(self)?;
        Ok((&ab - &ba).with_order_tag(self.order_tag + other.order_tag - 1.0))
    }

    fn check_compatible(&self, other: &SpectralOperator) -> Result<()> {
        if self.grid != other.grid || self.comps != other.comps {
            return Err(Error::ShapeMismatch(
                "operator algebra needs matching grid and components".into(),
            ));
        }
        Ok(())
    }

    /// Slot matrix of the operator (promotes multipliers).
    pub fn dense_matrix(&self) -> DMatrix<Complex64> {
        let vol = self.grid.volume();
        match &self.repr {
            OperatorRepr::Dense(m) => m.clone(),
            OperatorRepr::Multiplier(values) => {
                let cc = self.comps * self.comps;
                let mut m = DMatrix::<Complex64>::zeros(self.slots(), self.slots());
                for idx in 0..vol {
                    if self.grid.is_nyquist(idx) {
                        continue;
                    }
                    let blk = &values[idx * cc..(idx + 1) * cc];
                    for ci in 0..self.comps {
                        for cj in 0..self.comps {
                            m[(ci * vol + idx, cj * vol + idx)] = blk[ci * self.comps + cj];
                        }
                    }
                }
                m
            }
        }
    }

    /// Force a dense representation (same action).
    pub fn to_dense(&self) -> SpectralOperator {
        SpectralOperator {
            grid: self.grid,
            comps: self.comps,
            repr: OperatorRepr::Dense(self.dense_matrix()),
            order_tag: self.order_tag,
        }
    }

    pub fn scale(&self, s: f64) -> SpectralOperator {
        let mut out = self.clone();
        match &mut out.repr {
            OperatorRepr::Multiplier(v) => {
                for x in v.iter_mut() {
                    *x *= s;
                }
            }
            OperatorRepr::Dense(m) => {
                *m *= Complex64::new(s, 0.0);
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        match &self.repr {
            OperatorRepr::Multiplier(v) => v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt(),
            OperatorRepr::Dense(m) => m.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt(),
        }
    }

    /// Frobenius norm over columns whose input frequency satisfies
    /// |k|_inf <= K - 1 - margin. Identities that hold exactly on untruncated
    /// operators are compared here, away from the band edge where the shared
    /// projection clips them.
    pub fn frobenius_norm_inner(&self, margin: i64) -> f64 {
        let vol = self.grid.volume();
        let kmax = self.grid.cutoff() - 1 - margin;
        let m = self.dense_matrix();
        let mut acc = 0.0;
        for cj in 0..self.comps {
            for k_idx in 0..vol {
                let k = self.grid.freq_of_index(k_idx);
                if self.grid.is_nyquist(k_idx) || k[0].abs() > kmax || k[1].abs() > kmax {
                    continue;
                }
                let col = cj * vol + k_idx;
                for row in 0..self.slots() {
                    acc += m[(row, col)].norm_sqr();
                }
            }
        }
        acc.sqrt()
    }

    /// Max |M(-k,-k') - conj M(k,k')| over the band (0 means real-preserving).
    pub fn reality_defect(&self) -> f64 {
        let vol = self.grid.volume();
        let m = self.dense_matrix();
        let mut worst = 0.0f64;
        for ci in 0..self.comps {
            for cj in 0..self.comps {
                for xi_idx in 0..vol {
                    if self.grid.is_nyquist(xi_idx) {
                        continue;
                    }
                    let xi = self.grid.freq_of_index(xi_idx);
                    let mxi = self.grid.index_of_freq([-xi[0], -xi[1]]).unwrap();
                    for k_idx in 0..vol {
                        if self.grid.is_nyquist(k_idx) {
                            continue;
                        }
                        let k = self.grid.freq_of_index(k_idx);
                        let mk = self.grid.index_of_freq([-k[0], -k[1]]).unwrap();
                        let a = m[(ci * vol + mxi, cj * vol + mk)];
                        let b = m[(ci * vol + xi_idx, cj * vol + k_idx)].conj();
                        worst = worst.max((a - b).norm());
                    }
                }
            }
        }
        worst
    }

    /// Random dense operator with frequency transfer |xi - k|_inf <= bandwidth,
    /// preserving real fields. This is the truncation of a pseudo-differential
    /// operator whose x-dependence is a trig polynomial of that degree; a
    /// fully random matrix is not the truncation of anything and edge
    /// clipping would break the operator-calculus identities on it.
    pub fn random_transfer_banded<R: Rng>(
        grid: TorusGrid,
        comps: usize,
        bandwidth: i64,
        rng: &mut R,
    ) -> SpectralOperator {
        let vol = grid.volume();
        let slots = comps * vol;
        let mut m = DMatrix::<Complex64>::zeros(slots, slots);
        for ci in 0..comps {
            for cj in 0..comps {
                for xi_idx in 0..vol {
                    if grid.is_nyquist(xi_idx) {
                        continue;
                    }
                    let xi = grid.freq_of_index(xi_idx);
                    for k_idx in 0..vol {
                        if grid.is_nyquist(k_idx) {
                            continue;
                        }
                        let k = grid.freq_of_index(k_idx);
                        let t = [xi[0] - k[0], xi[1] - k[1]];
                        if t[0].abs() > bandwidth || t[1].abs() > bandwidth {
                            continue;
                        }
                        m[(ci * vol + xi_idx, cj * vol + k_idx)] = Complex64::new(
                            rng.gen_range(-1.0..1.0),
                            rng.gen_range(-1.0..1.0),
                        );
                    }
                }
            }
        }
        let op = SpectralOperator::from_dense(grid, comps, 0.0, m).expect("shape is right");
        op.reality_symmetrized()
    }

    /// Average with the mirrored conjugate so the operator preserves real fields.
    pub fn reality_symmetrized(&self) -> SpectralOperator {
        let grid = self.grid;
        let comps = self.comps;
        let vol = grid.volume();
        let m = self.dense_matrix();
        let mut sym = m.clone();
        for ci in 0..comps {
            for cj in 0..comps {
                for xi_idx in 0..vol {
                    if grid.is_nyquist(xi_idx) {
                        continue;
                    }
                    let xi = grid.freq_of_index(xi_idx);
                    let mxi = grid.index_of_freq([-xi[0], -xi[1]]).unwrap();
                    for k_idx in 0..vol {
                        if grid.is_nyquist(k_idx) {
                            continue;
                        }
                        let k = grid.freq_of_index(k_idx);
                        let mk = grid.index_of_freq([-k[0], -k[1]]).unwrap();
                        let avg = 0.5
                            * (m[(ci * vol + xi_idx, cj * vol + k_idx)]
                                + m[(ci * vol + mxi, cj * vol + mk)].conj());
                        sym[(ci * vol + xi_idx, cj * vol + k_idx)] = avg;
                        sym[(ci * vol + mxi, cj * vol + mk)] = avg.conj();
                    }
                }
            }
        }
        SpectralOperator::from_dense(grid, comps, self.order_tag, sym).expect("shape is right")
    }

    /// Random dense operator with unrestricted frequency transfer; fine for
    /// pure matrix identities (Leibniz, Jacobi), not for calculus identities
    /// that rely on band locality.
    pub fn random_real_preserving<R: Rng>(grid: TorusGrid, comps: usize, rng: &mut R) -> SpectralOperator {
        Self::random_transfer_banded(grid, comps, grid.cutoff() * 2, rng)
    }
}

impl std::ops::Add for &SpectralOperator {
    type Output = SpectralOperator;
    fn add(self, rhs: &SpectralOperator) -> SpectralOperator {
        self.check_compatible(rhs).expect("operator shapes");
        let order = self.order_tag.max(rhs.order_tag);
        let repr = match (&self.repr, &rhs.repr) {
            (OperatorRepr::Multiplier(a), OperatorRepr::Multiplier(b)) => OperatorRepr::Multiplier(
                a.iter().zip(b.iter()).map(|(x, y)| x + y).collect(),
            ),
            _ => OperatorRepr::Dense(self.dense_matrix() + rhs.dense_matrix()),
        };
        SpectralOperator {
            grid: self.grid,
            comps: self.comps,
            repr,
            order_tag: order,
        }
    }
}

impl std::ops::Sub for &SpectralOperator {
    type Output = SpectralOperator;
    fn sub(self, rhs: &SpectralOperator) -> SpectralOperator {
        self + &rhs.scale(-1.0)
    }
}

/// Relative Frobenius distance between two operators over inner-band columns.
///
/// `margin` is the total frequency shift the compared expressions can apply;
/// on columns at least that far from the band edge no projection clips, so
/// algebraic identities hold to rounding there.
pub fn relative_inner_distance(x: &SpectralOperator, y: &SpectralOperator, margin: i64) -> f64 {
    let diff = (x - y).frobenius_norm_inner(margin);
    let scale = x
        .frobenius_norm_inner(margin)
        .max(y.frobenius_norm_inner(margin));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

/// ad_D^alpha A: iterated commutators with the derivative operators.
pub fn ad_d_alpha(a: &SpectralOperator, alpha: [usize; 2], bound: usize) -> Result<SpectralOperator> {
    let total = alpha[0] + alpha[1];
    if total > bound {
        return Err(Error::BoundExceeded(format!(
            "|alpha| = {total} exceeds the configured bound {bound}"
        )));
    }
    let mut out = a.clone();
    for axis in 0..a.grid().dim() {
        let d = SpectralOperator::derivative(a.grid(), a.comps(), axis)?;
        for _ in 0..alpha[axis] {
            out = d.commutator(&out)?;
        }
    }
    Ok(out)
}

fn solve_small(m: &[Complex64], rhs: &[Complex64], c: usize) -> Option<Vec<Complex64>> {
    match c {
        1 => {
            if m[0].norm() == 0.0 {
                None
            } else {
                Some(vec![rhs[0] / m[0]])
            }
        }
        2 => {
            let det = m[0] * m[3] - m[1] * m[2];
            if det.norm() == 0.0 {
                return None;
            }
            Some(vec![
                (m[3] * rhs[0] - m[1] * rhs[1]) / det,
                (-m[2] * rhs[0] + m[0] * rhs[1]) / det,
            ])
        }
        _ => unreachable!("components capped at 2"),
    }
}

fn smallest_singular_small(m: &[Complex64], c: usize) -> f64 {
    match c {
        1 => m[0].norm(),
        2 => {
            let g00 = m[0].norm_sqr() + m[2].norm_sqr();
            let g11 = m[1].norm_sqr() + m[3].norm_sqr();
            let g01 = (m[0].conj() * m[1] + m[2].conj() * m[3]).norm();
            let tr = g00 + g11;
            let disc = ((g00 - g11) * (g00 - g11) + 4.0 * g01 * g01).sqrt();
            (0.5 * (tr - disc)).max(0.0).sqrt()
        }
        _ => unreachable!(),
    }
}

fn smallest_singular(m: &DMatrix<Complex64>) -> f64 {
    match m.clone().try_svd(false, false, 1e-12, 1000) {
        Some(svd) => svd
            .singular_values
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b)),
        None => 0.0,
    }
}
