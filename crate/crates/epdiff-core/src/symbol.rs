//! Operator symbols a(x,k): pure Fourier multipliers, separable sums
//! g_m(x) a_m(k), and gridded tables, with validation of the structural
//! properties an admissible inertia operator needs (Hermitian, positive,
//! elliptic, symbol-class growth).

use num_complex::Complex64;
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::{Freq, TorusGrid};

/// Closed-form multiplier catalogue plus escape hatches for tests.
#[derive(Clone)]
pub enum MultiplierDef {
    /// <k>^{2s} (the Bessel-potential power; inverse metric weight for H^s).
    BesselPower(f64),
    /// Polynomial in |k|^2: c_0 + c_1 |k|^2 + c_2 |k|^4 + ...
    Poly(Vec<f64>),
    /// Arbitrary scalar multiplier; must satisfy a(-k) = conj a(k).
    Custom(Arc<dyn Fn(Freq) -> Complex64 + Send + Sync>),
    /// Arbitrary matrix multiplier (row-major c x c); same reality condition.
    CustomMatrix {
        comps: usize,
        f: Arc<dyn Fn(Freq) -> Vec<Complex64> + Send + Sync>,
    },
}

impl fmt::Debug for MultiplierDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MultiplierDef::BesselPower(s) => write!(f, "BesselPower({s})"),
            MultiplierDef::Poly(c) => write!(f, "Poly({c:?})"),
            MultiplierDef::Custom(_) => write!(f, "Custom(..)"),
            MultiplierDef::CustomMatrix { comps, .. } => write!(f, "CustomMatrix(c={comps})"),
        }
    }
}

impl MultiplierDef {
    /// Scalar value at a frequency (matrix defs reject this path).
    pub fn scalar_at(&self, k: Freq) -> Complex64 {
        match self {
            MultiplierDef::BesselPower(s) => {
                let ksq = (k[0] * k[0] + k[1] * k[1]) as f64;
                Complex64::new((1.0 + ksq).powf(*s), 0.0)
            }
            MultiplierDef::Poly(coeffs) => {
                let ksq = (k[0] * k[0] + k[1] * k[1]) as f64;
                let mut pow = 1.0;
                let mut acc = 0.0;
                for &c in coeffs {
                    acc += c * pow;
                    pow *= ksq;
                }
                Complex64::new(acc, 0.0)
            }
            MultiplierDef::Custom(f) => f(k),
            MultiplierDef::CustomMatrix { .. } => {
                panic!("matrix multiplier queried as scalar")
            }
        }
    }

    /// Row-major comps x comps matrix value at a frequency.
    pub fn matrix_at(&self, k: Freq, comps: usize) -> Vec<Complex64> {
        match self {
            MultiplierDef::CustomMatrix { comps: c, f } => {
                assert_eq!(*c, comps, "matrix multiplier component mismatch");
                f(k)
            }
            _ => {
                let v = self.scalar_at(k);
                let mut m = vec![Complex64::new(0.0, 0.0); comps * comps];
                for i in 0..comps {
                    m[i * comps + i] = v;
                }
                m
            }
        }
    }

    /// Nominal operator order of the catalogue entries.
    pub fn order(&self) -> Option<f64> {
        match self {
            MultiplierDef::BesselPower(s) => Some(2.0 * s),
            MultiplierDef::Poly(c) => Some(2.0 * (c.len().saturating_sub(1)) as f64),
            _ => None,
        }
    }
}

/// One separable term g(x) * a(k).
#[derive(Debug, Clone)]
pub struct SeparableTerm {
    pub x_factor: SpectralField,
    pub multiplier: MultiplierDef,
}

/// Gridded symbol table a(x_j, k) for every collocation point and band frequency.
#[derive(Debug, Clone)]
pub struct GriddedSymbol {
    pub grid: TorusGrid,
    pub comps: usize,
    /// values[x_idx * volume + k_idx] is a row-major comps x comps matrix.
    pub values: Vec<Vec<Complex64>>,
}

impl GriddedSymbol {
    pub fn at(&self, x_idx: usize, k_idx: usize) -> &[Complex64] {
        &self.values[x_idx * self.grid.volume() + k_idx]
    }
}

#[derive(Debug, Clone)]
pub enum SymbolData {
    Multiplier(MultiplierDef),
    Separable(Vec<SeparableTerm>),
    Gridded(GriddedSymbol),
}

/// Declared structural flags; `validate` measures the actual ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SymbolFlags {
    pub hermitian: bool,
    pub positive: bool,
    pub elliptic: bool,
}

/// Description of an operator symbol with declared order r.
#[derive(Debug, Clone)]
pub struct SymbolSpec {
    pub data: SymbolData,
    pub order: f64,
    pub flags: SymbolFlags,
}

impl SymbolSpec {
    pub fn multiplier(def: MultiplierDef, order: f64) -> Self {
        SymbolSpec {
            data: SymbolData::Multiplier(def),
            order,
            flags: SymbolFlags {
                hermitian: true,
                positive: true,
                elliptic: true,
            },
        }
    }

    /// The standard inertia operator of the H^s metric: a(k) = <k>^{2s}.
    pub fn bessel(s: f64) -> Self {
        SymbolSpec::multiplier(MultiplierDef::BesselPower(s), 2.0 * s)
    }

    pub fn separable(terms: Vec<SeparableTerm>, order: f64) -> Self {
        SymbolSpec {
            data: SymbolData::Separable(terms),
            order,
            flags: SymbolFlags::default(),
        }
    }

    pub fn gridded(table: GriddedSymbol, order: f64) -> Self {
        SymbolSpec {
            data: SymbolData::Gridded(table),
            order,
            flags: SymbolFlags::default(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self.data {
            SymbolData::Multiplier(_) => "multiplier",
            SymbolData::Separable(_) => "separable",
            SymbolData::Gridded(_) => "gridded",
        }
    }

    /// Symbol value a(x_j, k) as a row-major comps x comps matrix.
    ///
    /// Convenience wrapper; hot loops should go through [`SymbolSampler`]
    /// which caches the x-factor values.
    pub fn value_at(&self, grid: &TorusGrid, comps: usize, x_idx: usize, k: Freq) -> Vec<Complex64> {
        SymbolSampler::new(self, *grid, comps).value_at(x_idx, k)
    }

    /// x-Fourier transform a_hat(lambda, k) of the symbol, exact for the
    /// stored x-dependence (trig polynomials). Multipliers live at lambda = 0.
    pub fn x_transform(&self, grid: &TorusGrid, comps: usize, lambda: Freq, k: Freq) -> Vec<Complex64> {
        let zero = vec![Complex64::new(0.0, 0.0); comps * comps];
        match &self.data {
            SymbolData::Multiplier(def) => {
                if lambda == [0, 0] {
                    def.matrix_at(k, comps)
                } else {
                    zero
                }
            }
            SymbolData::Separable(terms) => {
                let mut m = zero;
                for term in terms {
                    let g_hat = term.x_factor.coeff(0, lambda);
                    if g_hat.norm_sqr() == 0.0 {
                        continue;
                    }
                    let a = term.multiplier.matrix_at(k, comps);
                    for (mi, ai) in m.iter_mut().zip(a.iter()) {
                        *mi += g_hat * ai;
                    }
                }
                m
            }
            SymbolData::Gridded(table) => {
                let lam_idx = match table.grid.index_of_freq(lambda) {
                    Some(i) => i,
                    None => return zero,
                };
                let k_idx = match table.grid.index_of_freq(k) {
                    Some(i) => i,
                    None => return zero,
                };
                // forward transform of the x rows, one (k, entry) at a time
                let vol = table.grid.volume();
                let mut m = vec![Complex64::new(0.0, 0.0); comps * comps];
                let mut buf = vec![Complex64::new(0.0, 0.0); vol];
                for e in 0..comps * comps {
                    for x_idx in 0..vol {
                        buf[x_idx] = table.at(x_idx, k_idx)[e];
                    }
                    let coeffs = table.grid.forward(&buf);
                    m[e] = coeffs[lam_idx];
                }
                let _ = grid;
                m
            }
        }
    }

    /// Largest |lambda|_inf carrying x-dependence (0 for multipliers).
    pub fn x_bandwidth(&self, grid: &TorusGrid) -> i64 {
        match &self.data {
            SymbolData::Multiplier(_) => 0,
            SymbolData::Separable(terms) => {
                let mut max_l = 0i64;
                for term in terms {
                    for (idx, c) in term.x_factor.coeffs().iter().enumerate() {
                        if c.norm() > 1e-14 {
                            let l = term.x_factor.grid().freq_of_index(idx);
                            max_l = max_l.max(l[0].abs().max(l[1].abs()));
                        }
                    }
                }
                max_l
            }
            SymbolData::Gridded(_) => grid.cutoff() - 1,
        }
    }
}

/// Point evaluator with the x factors sampled once up front.
pub struct SymbolSampler<'a> {
    spec: &'a SymbolSpec,
    comps: usize,
    /// Collocation values of each separable x factor.
    term_values: Vec<Vec<f64>>,
}

impl<'a> SymbolSampler<'a> {
    pub fn new(spec: &'a SymbolSpec, grid: TorusGrid, comps: usize) -> Self {
        let term_values = match &spec.data {
            SymbolData::Separable(terms) => terms
                .iter()
                .map(|t| {
                    assert_eq!(t.x_factor.grid(), grid, "x factor grid mismatch");
                    t.x_factor.values()
                })
                .collect(),
            _ => Vec::new(),
        };
        SymbolSampler {
            spec,
            comps,
            term_values,
        }
    }

    pub fn value_at(&self, x_idx: usize, k: Freq) -> Vec<Complex64> {
        match &self.spec.data {
            SymbolData::Multiplier(def) => def.matrix_at(k, self.comps),
            SymbolData::Separable(terms) => {
                let mut m = vec![Complex64::new(0.0, 0.0); self.comps * self.comps];
                for (term, vals) in terms.iter().zip(self.term_values.iter()) {
                    let g = vals[x_idx];
                    let a = term.multiplier.matrix_at(k, self.comps);
                    for (mi, ai) in m.iter_mut().zip(a.iter()) {
                        *mi += g * ai;
                    }
                }
                m
            }
            SymbolData::Gridded(table) => {
                let k_idx = table.grid.index_of_freq(k).expect("frequency in band");
                table.at(x_idx, k_idx).to_vec()
            }
        }
    }
}

/// Measured structural properties of a symbol on a grid's band.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub kind: String,
    pub order: f64,
    pub hermitian: bool,
    pub hermitian_defect: f64,
    pub positive: bool,
    pub min_eigenvalue: f64,
    pub elliptic: bool,
    /// C_e = max over stored entries of ||a(x,k)^{-1}|| <k>^r.
    pub ellipticity_constant: f64,
    /// Estimated symbol-class constants: sup |D_k^alpha d_x^beta a| / <k>^{r-|alpha|}
    /// with finite differences in k, |alpha| <= 2, |beta| <= 2.
    pub class_constants: Vec<ClassConstant>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClassConstant {
    pub alpha: [usize; 2],
    pub beta: [usize; 2],
    pub constant: f64,
}

/// Eigenvalues of a 1x1 or Hermitian 2x2 matrix (ascending).
fn hermitian_eigs(m: &[Complex64], comps: usize) -> Vec<f64> {
    match comps {
        1 => vec![m[0].re],
        2 => {
            let a = m[0].re;
            let d = m[3].re;
            let b = m[1];
            let tr = a + d;
            let disc = ((a - d) * (a - d) + 4.0 * b.norm_sqr()).sqrt();
            vec![0.5 * (tr - disc), 0.5 * (tr + disc)]
        }
        _ => unreachable!("components capped at 2"),
    }
}

/// Spectral norm of the inverse, or infinity when singular.
fn inverse_norm(m: &[Complex64], comps: usize) -> f64 {
    match comps {
        1 => {
            let n = m[0].norm();
            if n == 0.0 {
                f64::INFINITY
            } else {
                1.0 / n
            }
        }
        2 => {
            // smallest singular value of a 2x2 via the Gram matrix
            let g00 = m[0].norm_sqr() + m[2].norm_sqr();
            let g11 = m[1].norm_sqr() + m[3].norm_sqr();
            let g01 = (m[0].conj() * m[1] + m[2].conj() * m[3]).norm();
            let tr = g00 + g11;
            let disc = ((g00 - g11) * (g00 - g11) + 4.0 * g01 * g01).sqrt();
            let smin_sq = 0.5 * (tr - disc);
            if smin_sq <= 0.0 {
                f64::INFINITY
            } else {
                1.0 / smin_sq.sqrt()
            }
        }
        _ => unreachable!(),
    }
}

/// Scan all stored entries of a symbol and report its structural constants.
pub fn validate_symbol(spec: &SymbolSpec, r: f64, grid: &TorusGrid, comps: usize) -> ValidationReport {
    let vol = grid.volume();
    let x_count = match &spec.data {
        SymbolData::Multiplier(_) => 1,
        _ => vol,
    };
    let sampler = SymbolSampler::new(spec, *grid, comps);
    let mut herm_defect = 0.0f64;
    let mut min_eig = f64::INFINITY;
    let mut c_e = 0.0f64;
    for x_idx in 0..x_count {
        for k_idx in 0..vol {
            if grid.is_nyquist(k_idx) {
                continue;
            }
            let k = grid.freq_of_index(k_idx);
            let m = sampler.value_at(x_idx, k);
            for i in 0..comps {
                for j in 0..comps {
                    let d = (m[i * comps + j] - m[j * comps + i].conj()).norm();
                    herm_defect = herm_defect.max(d);
                }
            }
            for e in hermitian_eigs(&m, comps) {
                min_eig = min_eig.min(e);
            }
            let w = (1.0 + grid.freq_norm_sq(k_idx)).powf(r / 2.0);
            c_e = c_e.max(inverse_norm(&m, comps) * w);
        }
    }

    // symbol-class constants by forward differences in k and spectral d_x
    let mut class_constants = Vec::new();
    let d = grid.dim();
    let mut alphas: Vec<[usize; 2]> = vec![[0, 0], [1, 0], [2, 0]];
    let mut betas: Vec<[usize; 2]> = vec![[0, 0], [1, 0], [2, 0]];
    if d == 2 {
        alphas.extend_from_slice(&[[0, 1], [0, 2], [1, 1]]);
        betas.extend_from_slice(&[[0, 1], [0, 2], [1, 1]]);
    }
    for &alpha in &alphas {
        for &beta in &betas {
            let c = class_constant(spec, r, grid, comps, alpha, beta);
            class_constants.push(ClassConstant {
                alpha,
                beta,
                constant: c,
            });
        }
    }

    ValidationReport {
        kind: spec.kind_name().to_string(),
        order: spec.order,
        hermitian: herm_defect <= 1e-10,
        hermitian_defect: herm_defect,
        positive: min_eig > 0.0,
        min_eigenvalue: min_eig,
        elliptic: c_e.is_finite(),
        ellipticity_constant: c_e,
        class_constants,
    }
}

fn class_constant(
    spec: &SymbolSpec,
    r: f64,
    grid: &TorusGrid,
    comps: usize,
    alpha: [usize; 2],
    beta: [usize; 2],
) -> f64 {
    // d_x^beta acts on the x factors spectrally; multipliers have none.
    let spec_dx = match &spec.data {
        SymbolData::Multiplier(_) => {
            if beta != [0, 0] {
                return 0.0;
            }
            spec.clone()
        }
        SymbolData::Separable(terms) => {
            let mut new_terms = Vec::with_capacity(terms.len());
            for t in terms {
                let mut g = t.x_factor.clone();
                for axis in 0..grid.dim() {
                    for _ in 0..beta[axis] {
                        g = g.partial_derivative(axis).expect("axis valid");
                    }
                }
                new_terms.push(SeparableTerm {
                    x_factor: g,
                    multiplier: t.multiplier.clone(),
                });
            }
            SymbolSpec::separable(new_terms, spec.order)
        }
        SymbolData::Gridded(table) => {
            if beta != [0, 0] {
                // differentiate each k row spectrally in x
                let vol = table.grid.volume();
                let mut values = table.values.clone();
                for k_idx in 0..vol {
                    for e in 0..comps * comps {
                        let samples: Vec<f64> =
                            (0..vol).map(|x| table.at(x, k_idx)[e].re).collect();
                        let im: Vec<f64> = (0..vol).map(|x| table.at(x, k_idx)[e].im).collect();
                        let mut re_f =
                            SpectralField::from_samples(table.grid, 1, &samples).expect("samples");
                        let mut im_f =
                            SpectralField::from_samples(table.grid, 1, &im).expect("samples");
                        for axis in 0..grid.dim() {
                            for _ in 0..beta[axis] {
                                re_f = re_f.partial_derivative(axis).unwrap();
                                im_f = im_f.partial_derivative(axis).unwrap();
                            }
                        }
                        let rv = re_f.values();
                        let iv = im_f.values();
                        for x in 0..vol {
                            values[x * vol + k_idx][e] = Complex64::new(rv[x], iv[x]);
                        }
                    }
                }
                SymbolSpec::gridded(
                    GriddedSymbol {
                        grid: table.grid,
                        comps,
                        values,
                    },
                    spec.order,
                )
            } else {
                spec.clone()
            }
        }
    };

    let vol = grid.volume();
    let x_count = match &spec_dx.data {
        SymbolData::Multiplier(_) => 1,
        _ => vol,
    };
    let sampler = SymbolSampler::new(&spec_dx, *grid, comps);
    let total_alpha = (alpha[0] + alpha[1]) as f64;
    let mut worst = 0.0f64;
    for x_idx in 0..x_count {
        for k_idx in 0..vol {
            if grid.is_nyquist(k_idx) {
                continue;
            }
            let k = grid.freq_of_index(k_idx);
            // forward differences must stay inside the stored band
            let kmax = grid.cutoff() - 1;
            let reach0 = k[0] + alpha[0] as i64;
            let reach1 = k[1] + alpha[1] as i64;
            if reach0.abs() > kmax || reach1.abs() > kmax {
                continue;
            }
            let diff = k_difference(&sampler, x_idx, k, alpha);
            let mag = diff.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let w = (1.0 + grid.freq_norm_sq(k_idx)).powf((r - total_alpha) / 2.0);
            worst = worst.max(mag / w);
        }
    }
    worst
}

/// Forward difference Delta_k^alpha a(x, k) over the integer lattice.
fn k_difference(sampler: &SymbolSampler, x_idx: usize, k: Freq, alpha: [usize; 2]) -> Vec<Complex64> {
    if alpha == [0, 0] {
        return sampler.value_at(x_idx, k);
    }
    let (axis, mut a) = if alpha[0] > 0 { (0usize, alpha) } else { (1usize, alpha) };
    a[axis] -= 1;
    let mut shifted = k;
    shifted[axis] += 1;
    let hi = k_difference(sampler, x_idx, shifted, a);
    let lo = k_difference(sampler, x_idx, k, a);
    hi.iter().zip(lo.iter()).map(|(h, l)| h - l).collect()
}

/// Check the reality condition a(x,-k) = conj a(x,k) over stored entries.
pub fn reality_defect(spec: &SymbolSpec, grid: &TorusGrid, comps: usize) -> f64 {
    let vol = grid.volume();
    let x_count = match &spec.data {
        SymbolData::Multiplier(_) => 1,
        _ => vol,
    };
    let sampler = SymbolSampler::new(spec, *grid, comps);
    let mut worst = 0.0f64;
    for x_idx in 0..x_count {
        for k_idx in 0..vol {
            if grid.is_nyquist(k_idx) {
                continue;
            }
            let k = grid.freq_of_index(k_idx);
            let a = sampler.value_at(x_idx, k);
            let b = sampler.value_at(x_idx, [-k[0], -k[1]]);
            for (x, y) in a.iter().zip(b.iter()) {
                worst = worst.max((y - x.conj()).norm());
            }
        }
    }
    worst
}

/// Guard for symbol reality before realization.
pub fn check_reality(spec: &SymbolSpec, grid: &TorusGrid, comps: usize) -> Result<()> {
    let defect = reality_defect(spec, grid, comps);
    if defect > 1e-10 {
        return Err(Error::RealityViolation(format!(
            "symbol breaks a(x,-k) = conj a(x,k) by {defect:.3e}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn bessel_power_is_clean() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let spec = SymbolSpec::bessel(1.0);
        let rep = validate_symbol(&spec, 2.0, &grid, 1);
        assert!(rep.hermitian);
        assert!(rep.positive);
        assert!(rep.elliptic);
        assert!((rep.ellipticity_constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sign_changing_symbol_fails_positivity() {
        let grid = TorusGrid::new(1, 32).unwrap();
        let spec = SymbolSpec::multiplier(
            MultiplierDef::Custom(Arc::new(|k| Complex64::new(k[0] as f64, 0.0))),
            1.0,
        );
        let rep = validate_symbol(&spec, 1.0, &grid, 1);
        assert!(!rep.positive);
    }

    #[test]
    fn separable_ellipticity_constant() {
        // a(x,k) = (1 + sin(2 pi x)/2) <k>^2, min of the x factor is 1/2
        let grid = TorusGrid::new(1, 32).unwrap();
        let g = SpectralField::from_values_fn(grid, 1, |p, _| 1.0 + 0.5 * (2.0 * PI * p[0]).sin());
        let spec = SymbolSpec::separable(
            vec![SeparableTerm {
                x_factor: g,
                multiplier: MultiplierDef::BesselPower(1.0),
            }],
            2.0,
        );
        let rep = validate_symbol(&spec, 2.0, &grid, 1);
        assert!(rep.positive);
        assert!((rep.ellipticity_constant - 2.0).abs() < 1e-10);
        assert!(reality_defect(&spec, &grid, 1) < 1e-12);
    }

    #[test]
    fn class_constants_bounded_for_bessel() {
        let grid = TorusGrid::new(1, 64).unwrap();
        let spec = SymbolSpec::bessel(1.0);
        let rep = validate_symbol(&spec, 2.0, &grid, 1);
        for c in &rep.class_constants {
            assert!(c.constant.is_finite());
            // <k>^2 differences grow no faster than the symbol-class bound allows
            assert!(c.constant < 20.0, "C_{:?},{:?} = {}", c.alpha, c.beta, c.constant);
        }
    }
}
