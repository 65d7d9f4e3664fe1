//! Nested-commutator calculus on the truncated spectral space.
//!
//! This module carries the multilinear operators behind the derivatives of
//! conjugation: multiplication operators M_n, nested commutators S_{n,P},
//! the recurrence building A_n = d^n_id (phi -> A_phi), its expansion into
//! canonical Type I / Type II terms, the alternating subset-sum symbol
//! formula for S_{n,P} on single modes, and randomized boundedness probes.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::{Freq, TorusGrid};
use crate::operator::{ad_d_alpha, SpectralOperator};
use crate::sampling::{random_hq_field, tuple_rng};
use crate::symbol::SymbolSpec;

/// Default recursion depth for A_n and the splitting (cost is exponential in n).
pub const DEFAULT_N_BOUND: usize = 3;

/// Dense multiplication operator by the product f_1 ... f_n.
///
/// The product is formed exactly (wide padding) and then projected onto the
/// band, so the operator is symmetric in its factors.
pub fn mult_op(fs: &[SpectralField], comps: usize) -> Result<SpectralOperator> {
    if fs.is_empty() {
        return Err(Error::InvalidParameter("mult_op wants a nonempty list".into()));
    }
    let grid = fs[0].grid();
    for f in fs {
        if f.grid() != grid {
            return Err(Error::ShapeMismatch("mult_op factors on different grids".into()));
        }
    }
    let refs: Vec<&SpectralField> = fs.iter().collect();
    let p = SpectralField::product_exact(&refs)?;
    mult_op_of_field(&p, comps)
}

/// Multiplication operator by an already-projected scalar field.
pub fn mult_op_of_field(p: &SpectralField, comps: usize) -> Result<SpectralOperator> {
    if p.components() != 1 {
        return Err(Error::ShapeMismatch("multiplier field must be scalar".into()));
    }
    let grid = p.grid();
    let vol = grid.volume();
    let slots = comps * vol;
    let mut m = nalgebra::DMatrix::<Complex64>::zeros(slots, slots);
    for k_idx in 0..vol {
        if grid.is_nyquist(k_idx) {
            continue;
        }
        let k = grid.freq_of_index(k_idx);
        for xi_idx in 0..vol {
            if grid.is_nyquist(xi_idx) {
                continue;
            }
            let xi = grid.freq_of_index(xi_idx);
            let diff = [xi[0] - k[0], xi[1] - k[1]];
            let c = p.coeff(0, diff);
            if c.norm_sqr() == 0.0 {
                continue;
            }
            for comp in 0..comps {
                m[(comp * vol + xi_idx, comp * vol + k_idx)] = c;
            }
        }
    }
    SpectralOperator::from_dense(grid, comps, 0.0, m)
}

/// S_{n,P}(f_1,...,f_n) = [f_1,[f_2,...,[f_n,P]...]]; n = 0 returns P.
pub fn nested_commutator(fs: &[SpectralField], p: &SpectralOperator) -> Result<SpectralOperator> {
    let mut acc = p.clone();
    for f in fs.iter().rev() {
        let mf = mult_op(std::slice::from_ref(f), p.comps())?;
        acc = mf.commutator(&acc)?;
    }
    Ok(acc)
}

/// Apply S_{n,P}(f_1,...,f_n) to a field without assembling the operator.
pub fn nested_commutator_apply(
    fs: &[SpectralField],
    p: &SpectralOperator,
    w: &SpectralField,
) -> Result<SpectralField> {
    if fs.is_empty() {
        return p.apply(w);
    }
    let f = &fs[0];
    let rest = &fs[1..];
    let lhs = SpectralField::scalar_times(f, &nested_commutator_apply(rest, p, w)?)?;
    let rhs = nested_commutator_apply(rest, p, &SpectralField::scalar_times(f, w)?)?;
    Ok(&lhs - &rhs)
}

/// The transport operator nabla_u = sum_j M_{u^j} D_j as a dense operator.
pub fn convection_op(u: &SpectralField, comps: usize) -> Result<SpectralOperator> {
    let grid = u.grid();
    if u.components() != grid.dim() {
        return Err(Error::ShapeMismatch("transport field must have d components".into()));
    }
    let mut out = SpectralOperator::zero(grid, comps).to_dense();
    for j in 0..grid.dim() {
        let mj = mult_op(&[u.component(j)], comps)?;
        let dj = SpectralOperator::derivative(grid, comps, j)?;
        out = &out + &mj.compose(&dj)?;
    }
    Ok(out.with_order_tag(1.0))
}

/// Rec^j(P_n)(f_1,...,f_{n+1}) = [f_{n+1} D_j, P_n(f_1,...,f_n)]
///                              - sum_k P_n(f_1,...,f_{n+1} d_j f_k,...,f_n).
pub fn rec_j<F>(pn: F, fs: &[SpectralField], axis: usize) -> Result<SpectralOperator>
where
    F: Fn(&[SpectralField]) -> Result<SpectralOperator>,
{
    if fs.is_empty() {
        return Err(Error::InvalidParameter("rec_j needs at least the new field".into()));
    }
    let n = fs.len() - 1;
    let f_new = &fs[n];
    let base = pn(&fs[..n])?;
    let grid = base.grid();
    if axis >= grid.dim() {
        return Err(Error::InvalidParameter(format!("axis {axis} out of range")));
    }
    let mfd = mult_op(std::slice::from_ref(f_new), base.comps())?
        .compose(&SpectralOperator::derivative(grid, base.comps(), axis)?)?;
    let mut out = mfd.commutator(&base)?;
    for k in 0..n {
        let dfk = fs[k].partial_derivative(axis)?;
        let replaced = SpectralField::pointwise_multiply(f_new, &dfk)?;
        let mut args: Vec<SpectralField> = fs[..n].to_vec();
        args[k] = replaced;
        out = &out - &pn(&args)?;
    }
    Ok(out)
}

/// A_n(u_1,...,u_n): the n-th derivative of phi -> A_phi at the identity,
/// built by the recurrence A_{n+1}(...) = [nabla_{u_{n+1}}, A_n(...)]
///                                        - sum_k A_n(..., nabla_{u_{n+1}} u_k, ...).
pub fn a_n(us: &[SpectralField], a: &SpectralOperator, bound: usize) -> Result<SpectralOperator> {
    if us.len() > bound {
        return Err(Error::BoundExceeded(format!(
            "A_n requested at n = {} with bound {}",
            us.len(),
            bound
        )));
    }
    a_n_unchecked(us, a)
}

fn a_n_unchecked(us: &[SpectralField], a: &SpectralOperator) -> Result<SpectralOperator> {
    if us.is_empty() {
        return Ok(a.clone());
    }
    let (rest, last) = us.split_at(us.len() - 1);
    let u = &last[0];
    if u.grid() != a.grid() {
        return Err(Error::ShapeMismatch("A_n arguments on a different grid".into()));
    }
    let prev = a_n_unchecked(rest, a)?;
    let nab = convection_op(u, a.comps())?;
    let mut out = nab.commutator(&prev)?;
    for k in 0..rest.len() {
        let mut args: Vec<SpectralField> = rest.to_vec();
        args[k] = SpectralField::convective_derivative(u, &rest[k])?;
        out = &out - &a_n_unchecked(&args, a)?;
    }
    Ok(out.with_order_tag(a.order_tag()))
}

/// Reference to a scalar component of one of the vector arguments u_1..u_n.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FieldRef {
    /// 1-based argument index.
    pub arg: usize,
    pub comp: usize,
}

/// Base operator expression of a Type II term, built from A by commutators
/// with derivatives and right composition with derivatives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BaseOp {
    A,
    /// [D_axis, inner]
    AdD(usize, Box<BaseOp>),
    /// inner o D_axis
    ComposeD(Box<BaseOp>, usize),
}

impl BaseOp {
    fn realize(&self, a: &SpectralOperator) -> Result<SpectralOperator> {
        match self {
            BaseOp::A => Ok(a.clone()),
            BaseOp::AdD(axis, inner) => {
                let d = SpectralOperator::derivative(a.grid(), a.comps(), *axis)?;
                d.commutator(&inner.realize(a)?)
            }
            BaseOp::ComposeD(inner, axis) => {
                let d = SpectralOperator::derivative(a.grid(), a.comps(), *axis)?;
                inner.realize(a)?.compose(&d)
            }
        }
    }

    /// Count of nested-commutator layers (order drop bookkeeping).
    pub fn ad_depth(&self) -> usize {
        match self {
            BaseOp::A => 0,
            BaseOp::AdD(_, inner) => 1 + inner.ad_depth(),
            BaseOp::ComposeD(inner, _) => inner.ad_depth(),
        }
    }
}

/// One canonical term of the A_n expansion.
#[derive(Debug, Clone)]
pub enum TermDescriptor {
    /// M_n(f_1,...,f_n) o ad_D^alpha A
    TypeI {
        fields: Vec<FieldRef>,
        alpha: [usize; 2],
        sign: f64,
    },
    /// M_{m1}(outer) o S_{m2,P}(nested) o M_{m3}(d_{p_t} h_t) o D_axis,
    /// with P of order r + m2 - 1.
    TypeII {
        outer: Vec<FieldRef>,
        nested: Vec<FieldRef>,
        derivs: Vec<(FieldRef, usize)>,
        axis: usize,
        base: BaseOp,
        sign: f64,
    },
}

impl TermDescriptor {
    /// Nominal order of the term's pseudo-differential factor, given ord(A) = r.
    pub fn base_order(&self, r: f64) -> f64 {
        match self {
            TermDescriptor::TypeI { .. } => r,
            TermDescriptor::TypeII { nested, .. } => r + nested.len() as f64 - 1.0,
        }
    }

    /// Evaluate the term as a dense operator for concrete arguments.
    pub fn evaluate(&self, us: &[SpectralField], a: &SpectralOperator) -> Result<SpectralOperator> {
        let comps = a.comps();
        let field = |fr: &FieldRef| -> Result<SpectralField> {
            let u = us.get(fr.arg - 1).ok_or_else(|| {
                Error::InvalidParameter(format!("term references argument {}", fr.arg))
            })?;
            Ok(u.component(fr.comp))
        };
        match self {
            TermDescriptor::TypeI { fields, alpha, sign } => {
                let fs: Result<Vec<_>> = fields.iter().map(field).collect();
                let m = mult_op(&fs?, comps)?;
                let base = ad_d_alpha(a, *alpha, alpha[0] + alpha[1])?;
                Ok(m.compose(&base)?.scale(*sign))
            }
            TermDescriptor::TypeII {
                outer,
                nested,
                derivs,
                axis,
                base,
                sign,
            } => {
                let grid = a.grid();
                let mut op = base.realize(a)?;
                let nf: Result<Vec<_>> = nested.iter().map(field).collect();
                op = nested_commutator(&nf?, &op)?;
                if !outer.is_empty() {
                    let of: Result<Vec<_>> = outer.iter().map(field).collect();
                    op = mult_op(&of?, comps)?.compose(&op)?;
                }
                if !derivs.is_empty() {
                    let dfs: Result<Vec<_>> = derivs
                        .iter()
                        .map(|(fr, p)| field(fr)?.partial_derivative(*p))
                        .collect();
                    op = op.compose(&mult_op(&dfs?, comps)?)?;
                }
                let d = SpectralOperator::derivative(grid, comps, *axis)?;
                Ok(op.compose(&d)?.scale(*sign))
            }
        }
    }
}

/// Expand A_n into its canonical Type I / Type II terms by replaying the
/// inductive construction: the base case splits [u^j D_j, A], and each
/// induction step pushes the new field through the product rule for Rec^j.
pub fn split_terms(n: usize, dim: usize) -> Result<Vec<TermDescriptor>> {
    if n == 0 || n > DEFAULT_N_BOUND {
        return Err(Error::BoundExceeded(format!(
            "splitting implemented for 1 <= n <= {DEFAULT_N_BOUND}, got {n}"
        )));
    }
    let mut terms: Vec<TermDescriptor> = Vec::new();
    for j in 0..dim {
        terms.push(TermDescriptor::TypeI {
            fields: vec![FieldRef { arg: 1, comp: j }],
            alpha: unit_alpha(j),
            sign: 1.0,
        });
        terms.push(TermDescriptor::TypeII {
            outer: vec![],
            nested: vec![FieldRef { arg: 1, comp: j }],
            derivs: vec![],
            axis: j,
            base: BaseOp::A,
            sign: 1.0,
        });
    }
    for level in 2..=n {
        let mut next = Vec::new();
        for term in &terms {
            for j in 0..dim {
                let new = FieldRef { arg: level, comp: j };
                expand_term(term, j, new, &mut next);
            }
        }
        terms = next;
    }
    Ok(terms)
}

fn unit_alpha(axis: usize) -> [usize; 2] {
    let mut a = [0usize; 2];
    a[axis] = 1;
    a
}

fn alpha_base(alpha: [usize; 2]) -> BaseOp {
    let mut b = BaseOp::A;
    for axis in (0..2).rev() {
        for _ in 0..alpha[axis] {
            b = BaseOp::AdD(axis, Box::new(b));
        }
    }
    b
}

fn expand_term(term: &TermDescriptor, j: usize, new: FieldRef, out: &mut Vec<TermDescriptor>) {
    match term {
        TermDescriptor::TypeI { fields, alpha, sign } => {
            // Rec^j(M_n o ad^alpha A) = M_{n+1} o ad^{alpha+e_j} A
            //                         + M_n o S_{1, ad^alpha A} o D_j
            let mut a2 = *alpha;
            a2[j] += 1;
            let mut fs = fields.clone();
            fs.push(new);
            out.push(TermDescriptor::TypeI {
                fields: fs,
                alpha: a2,
                sign: *sign,
            });
            out.push(TermDescriptor::TypeII {
                outer: fields.clone(),
                nested: vec![new],
                derivs: vec![],
                axis: j,
                base: alpha_base(*alpha),
                sign: *sign,
            });
        }
        TermDescriptor::TypeII {
            outer,
            nested,
            derivs,
            axis,
            base,
            sign,
        } => {
            // Rec^j(S_{m2,P}) = M_1(f) o S_{m2,[D_j,P]} + S_{m2+1, P D_j}
            //                 + S_{m2,P} o M_1(d_j f)
            let mut o = outer.clone();
            o.push(new);
            out.push(TermDescriptor::TypeII {
                outer: o,
                nested: nested.clone(),
                derivs: derivs.clone(),
                axis: *axis,
                base: BaseOp::AdD(j, Box::new(base.clone())),
                sign: *sign,
            });
            let mut nf = nested.clone();
            nf.push(new);
            out.push(TermDescriptor::TypeII {
                outer: outer.clone(),
                nested: nf,
                derivs: derivs.clone(),
                axis: *axis,
                base: BaseOp::ComposeD(Box::new(base.clone()), j),
                sign: *sign,
            });
            let mut dv = derivs.clone();
            dv.push((new, j));
            out.push(TermDescriptor::TypeII {
                outer: outer.clone(),
                nested: nested.clone(),
                derivs: dv,
                axis: *axis,
                base: base.clone(),
                sign: *sign,
            });
            // Rec^j of the derivative-multiplier factor: each slot trades its
            // axis with the new field and the sign flips.
            for (t, (h, p)) in derivs.iter().enumerate() {
                let mut dv = derivs.clone();
                dv[t] = (*h, j);
                dv.push((new, *p));
                out.push(TermDescriptor::TypeII {
                    outer: outer.clone(),
                    nested: nested.clone(),
                    derivs: dv,
                    axis: *axis,
                    base: base.clone(),
                    sign: -sign,
                });
            }
            // Rec^j(D_i)(f) = -M_1(d_i f) o D_j
            let mut dv = derivs.clone();
            dv.push((new, *axis));
            out.push(TermDescriptor::TypeII {
                outer: outer.clone(),
                nested: nested.clone(),
                derivs: dv,
                axis: j,
                base: base.clone(),
                sign: -sign,
            });
        }
    }
}

/// Evaluate the full splitting and sum it.
pub fn split_sum(
    terms: &[TermDescriptor],
    us: &[SpectralField],
    a: &SpectralOperator,
) -> Result<SpectralOperator> {
    let mut acc = SpectralOperator::zero(a.grid(), a.comps()).to_dense();
    for t in terms {
        acc = &acc + &t.evaluate(us, a)?;
    }
    Ok(acc)
}

/// Alternating subset sum
/// p_hat_n(lambda, xi_0, ..., xi_n) = sum_{J subset {1..n}} (-1)^{|J|} p_hat(lambda, xi_0 + sum_{j in J} xi_j).
pub fn p_hat_n<F>(phat: &F, lambda: Freq, xi0: Freq, xis: &[Freq]) -> Result<Complex64>
where
    F: Fn(Freq, Freq) -> Complex64,
{
    let n = xis.len();
    if n > 4 {
        return Err(Error::BoundExceeded(format!(
            "subset sum implemented for n <= 4, got {n}"
        )));
    }
    let mut acc = Complex64::new(0.0, 0.0);
    for mask in 0u32..(1 << n) {
        let mut xi = xi0;
        for (j, x) in xis.iter().enumerate() {
            if mask & (1 << j) != 0 {
                xi[0] += x[0];
                xi[1] += x[1];
            }
        }
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        acc += sign * phat(lambda, xi);
    }
    Ok(acc)
}

/// Largest |k|_inf carrying a nonzero coefficient of a scalar field.
pub fn trig_degree(f: &SpectralField) -> i64 {
    let grid = f.grid();
    let mut deg = 0i64;
    for c in 0..f.components() {
        for (idx, v) in f.coeffs()[c * grid.volume()..(c + 1) * grid.volume()]
            .iter()
            .enumerate()
        {
            if v.norm() > 1e-13 && !grid.is_nyquist(idx) {
                let k = grid.freq_of_index(idx);
                deg = deg.max(k[0].abs().max(k[1].abs()));
            }
        }
    }
    deg
}

/// Compare S_{n,P} applied to a single-mode w against the coefficients
/// predicted by the subset-sum symbol formula; returns the largest
/// coefficient discrepancy.
///
/// All fields must be finite mode combinations narrow enough that no
/// intermediate frequency leaves the band.
pub fn symbol_formula_check(
    spec: &SymbolSpec,
    grid: TorusGrid,
    fs: &[SpectralField],
    w: &SpectralField,
) -> Result<f64> {
    if fs.len() > 3 {
        return Err(Error::BoundExceeded("formula check implemented for n <= 3".into()));
    }
    let comps = 1usize;
    let p = SpectralOperator::realize(spec, grid, comps)?;
    let actual = nested_commutator_apply(fs, &p, w)?;

    // gather the sparse coefficient support of each factor
    let support = |f: &SpectralField| -> Vec<(Freq, Complex64)> {
        let g = f.grid();
        f.coeffs()
            .iter()
            .enumerate()
            .filter(|(idx, v)| v.norm() > 1e-14 && !g.is_nyquist(*idx))
            .map(|(idx, v)| (g.freq_of_index(idx), *v))
            .collect()
    };
    let f_supports: Vec<Vec<(Freq, Complex64)>> = fs.iter().map(support).collect();
    if f_supports.iter().any(|s| s.is_empty()) {
        // some factor is identically zero, so both sides vanish
        return Ok(actual.l2_norm());
    }
    let w_support = support(w);
    let lmax = spec.x_bandwidth(&grid);
    let phat = |lambda: Freq, k: Freq| spec.x_transform(&grid, comps, lambda, k)[0];

    let mut predicted: std::collections::HashMap<Freq, Complex64> = std::collections::HashMap::new();
    let mut stack: Vec<usize> = vec![0; fs.len()];
    // iterate over every combination of one mode per factor
    let mut done = false;
    while !done {
        let mut xis = Vec::with_capacity(fs.len());
        let mut coeff = Complex64::new(1.0, 0.0);
        for (i, &pick) in stack.iter().enumerate() {
            let (k, c) = f_supports[i][pick];
            xis.push(k);
            coeff *= c;
        }
        for &(xi0, w_c) in &w_support {
            for l0 in -lmax..=lmax {
                let l1_range = if grid.dim() == 2 { -lmax..=lmax } else { 0..=0 };
                for l1 in l1_range {
                    let lambda = [l0, l1];
                    let ph = p_hat_n(&phat, lambda, xi0, &xis)?;
                    if ph.norm_sqr() == 0.0 {
                        continue;
                    }
                    let mut eta = [lambda[0] + xi0[0], lambda[1] + xi0[1]];
                    for x in &xis {
                        eta[0] += x[0];
                        eta[1] += x[1];
                    }
                    if grid.index_of_freq(eta).is_some() {
                        *predicted.entry(eta).or_insert(Complex64::new(0.0, 0.0)) +=
                            coeff * w_c * ph;
                    }
                }
            }
        }
        // advance the odometer
        done = true;
        for i in 0..stack.len() {
            stack[i] += 1;
            if stack[i] < f_supports[i].len() {
                done = false;
                break;
            }
            stack[i] = 0;
        }
    }

    let vol = grid.volume();
    let mut worst = 0.0f64;
    for idx in 0..vol {
        if grid.is_nyquist(idx) {
            continue;
        }
        let k = grid.freq_of_index(idx);
        let pred = predicted.get(&k).copied().unwrap_or(Complex64::new(0.0, 0.0));
        let d = (actual.coeff(0, k) - pred).norm();
        worst = worst.max(d);
    }
    Ok(worst)
}

/// Re-bind a symbol's x factors to a finer grid (exact for band-limited factors).
fn refine_spec(spec: &SymbolSpec, fine: TorusGrid) -> Result<SymbolSpec> {
    use crate::symbol::{SeparableTerm, SymbolData};
    match &spec.data {
        SymbolData::Multiplier(_) => Ok(spec.clone()),
        SymbolData::Separable(terms) => {
            let mut new_terms = Vec::with_capacity(terms.len());
            for t in terms {
                new_terms.push(SeparableTerm {
                    x_factor: t.x_factor.embed(fine)?,
                    multiplier: t.multiplier.clone(),
                });
            }
            let mut out = SymbolSpec::separable(new_terms, spec.order);
            out.flags = spec.flags;
            Ok(out)
        }
        SymbolData::Gridded(_) => Err(Error::InvalidParameter(
            "boundedness probe wants a multiplier or separable symbol".into(),
        )),
    }
}

/// Report of a randomized boundedness probe for S_{n,P}.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub n: usize,
    pub q: f64,
    pub r: f64,
    #[serde(rename = "N")]
    pub grid_n: usize,
    pub dim: usize,
    pub samples: usize,
    pub skips: usize,
    pub max_ratio: f64,
    pub median_ratio: f64,
    pub seed: u64,
}

/// Ratio ||S_{n,P}(f..)w||_{H^{q-r}} / (prod ||f_i||_{H^q} ||w||_{H^{q-1}}),
/// or None when a denominator vanishes.
pub fn commutator_ratio(
    p: &SpectralOperator,
    fs: &[SpectralField],
    w: &SpectralField,
    q: f64,
    r: f64,
) -> Result<Option<f64>> {
    let mut denom = w.sobolev_norm(q - 1.0)?;
    for f in fs {
        denom *= f.sobolev_norm(q)?;
    }
    if denom == 0.0 {
        return Ok(None);
    }
    let num = nested_commutator_apply(fs, p, w)?.sobolev_norm(q - r)?;
    Ok(Some(num / denom))
}

/// Draw `samples` random band-limited tuples with H^q-normalized spectra and
/// measure the commutator ratio. Per-sample seeds make the result independent
/// of scheduling.
///
/// The operator is realized on a doubled internal band and the fields embedded
/// into it, so the composition chain never clips the symbol's frequency
/// transfer at the test band's edge. A sharp band cutoff of an x-dependent
/// symbol is not uniformly in any symbol class, and probing it directly would
/// measure the cutoff instead of the estimate.
pub fn boundedness_probe(
    spec: &SymbolSpec,
    grid: TorusGrid,
    n: usize,
    q: f64,
    r: f64,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let d = grid.dim() as f64;
    if q <= 1.0 + d / 2.0 {
        return Err(Error::InvalidParameter(format!(
            "probe requires q > 1 + d/2, got q = {q}"
        )));
    }
    if r < 1.0 || r > q {
        return Err(Error::InvalidParameter(format!(
            "probe requires 1 <= r <= q, got r = {r}"
        )));
    }
    let fine = TorusGrid::new(grid.dim(), 2 * grid.n_per_axis())?;
    let spec_fine = refine_spec(spec, fine)?;
    let p = SpectralOperator::realize(&spec_fine, fine, 1)?;
    let results: Vec<Option<f64>> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<Option<f64>> {
            let fs: Result<Vec<SpectralField>> = (0..n)
                .map(|j| {
                    let mut rng = tuple_rng(seed, i as u64, j as u64);
                    random_hq_field(grid, 1, q, &mut rng).embed(fine)
                })
                .collect();
            let mut rng = tuple_rng(seed, i as u64, n as u64);
            let w = random_hq_field(grid, p.comps(), q - 1.0, &mut rng).embed(fine)?;
            commutator_ratio(&p, &fs?, &w, q, r)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut ratios: Vec<f64> = results.iter().filter_map(|r| *r).collect();
    let skips = samples - ratios.len();
    ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let max_ratio = ratios.last().copied().unwrap_or(0.0);
    let median_ratio = if ratios.is_empty() {
        0.0
    } else {
        ratios[ratios.len() / 2]
    };
    Ok(ProbeReport {
        n,
        q,
        r,
        grid_n: grid.n_per_axis(),
        dim: grid.dim(),
        samples,
        skips,
        max_ratio,
        median_ratio,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::relative_inner_distance;
    use crate::sampling::random_trig_poly;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    fn bessel_op(g: TorusGrid, s: f64) -> SpectralOperator {
        SpectralOperator::realize(&SymbolSpec::bessel(s), g, 1).unwrap()
    }

    #[test]
    fn mult_op_identity_and_symmetry() {
        let g = grid1(16);
        let one = SpectralField::constant(g, &[1.0]);
        let m = mult_op(&[one], 1).unwrap();
        let id = SpectralOperator::identity(g, 1);
        assert!((&m - &id).frobenius_norm() < 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let f = random_trig_poly(g, 1, 3, &mut rng);
        let h = random_trig_poly(g, 1, 3, &mut rng);
        let fg = mult_op(&[f.clone(), h.clone()], 1).unwrap();
        let gf = mult_op(&[h.clone(), f.clone()], 1).unwrap();
        assert!((&fg - &gf).frobenius_norm() < 1e-12);

        // agrees with the operator of the dealiased product
        let prod = SpectralField::pointwise_multiply(&f, &h).unwrap();
        let m2 = mult_op(&[prod], 1).unwrap();
        assert!((&fg - &m2).frobenius_norm() <= 1e-10 * fg.frobenius_norm().max(1.0));
    }

    #[test]
    fn nested_commutator_base_cases() {
        let g = grid1(32);
        let a = bessel_op(g, 1.0);
        // n = 0 returns P
        let s0 = nested_commutator(&[], &a).unwrap();
        assert!((&s0 - &a).frobenius_norm() < 1e-14);
        // any zero field kills the term
        let z = SpectralField::zeros(g, 1);
        let f = SpectralField::mode(g, [1, 0], 1.0, 0.0).unwrap();
        let s = nested_commutator(&[f, z], &a).unwrap();
        assert!(s.frobenius_norm() == 0.0);
    }

    #[test]
    fn nested_commutator_symmetric_in_fields() {
        let g = grid1(32);
        let a = bessel_op(g, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f1 = random_trig_poly(g, 1, 3, &mut rng);
        let f2 = random_trig_poly(g, 1, 3, &mut rng);
        let s12 = nested_commutator(&[f1.clone(), f2.clone()], &a).unwrap();
        let s21 = nested_commutator(&[f2, f1], &a).unwrap();
        let margin = 6;
        assert!(relative_inner_distance(&s12, &s21, margin) <= 1e-10);
    }

    #[test]
    fn rec_of_multiplication_vanishes() {
        // Rec^j(M_n) = 0 for plain multiplication operators
        let g = grid1(32);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fs: Vec<SpectralField> = (0..3).map(|_| random_trig_poly(g, 1, 2, &mut rng)).collect();
        let out = rec_j(|args| mult_op(args, 1), &fs, 0).unwrap();
        let norm = out.frobenius_norm_inner(3 * 2 + 1);
        assert!(norm <= 1e-10, "norm {norm:.3e}");
    }

    #[test]
    fn rec_of_derivative_operator() {
        // Rec^j(D_i)(f) = -M_{d_i f} o D_j
        let g = grid1(32);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_trig_poly(g, 1, 3, &mut rng);
        let di = SpectralOperator::derivative(g, 1, 0).unwrap();
        let out = rec_j(|_| Ok(di.clone()), std::slice::from_ref(&f), 0).unwrap();
        let expect = mult_op(&[f.partial_derivative(0).unwrap()], 1)
            .unwrap()
            .compose(&SpectralOperator::derivative(g, 1, 0).unwrap())
            .unwrap()
            .scale(-1.0);
        assert!(relative_inner_distance(&out, &expect, 4) <= 1e-12);
    }

    #[test]
    fn rec_of_nested_commutator_matches_lemma() {
        // Rec^j(S_{n,P})(f_1..f_{n+1}) = M_1(f_{n+1}) o S_{n,[D_j,P]}
        //                              + S_{n+1,P D_j} + S_{n,P} o M_1(d_j f_{n+1})
        let g = grid1(32);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let dj = SpectralOperator::derivative(g, 1, 0).unwrap();
        for n in 1..=2usize {
            let p = SpectralOperator::random_transfer_banded(g, 1, 3, &mut rng);
            let fs: Vec<SpectralField> =
                (0..=n).map(|_| random_trig_poly(g, 1, 2, &mut rng)).collect();
            let lhs = rec_j(|args| nested_commutator(args, &p), &fs, 0).unwrap();

            let f_new = &fs[n];
            let t1 = mult_op(std::slice::from_ref(f_new), 1)
                .unwrap()
                .compose(&nested_commutator(&fs[..n], &dj.commutator(&p).unwrap()).unwrap())
                .unwrap();
            let t2 = nested_commutator(&fs, &p.compose(&dj).unwrap()).unwrap();
            let t3 = nested_commutator(&fs[..n], &p)
                .unwrap()
                .compose(&mult_op(&[f_new.partial_derivative(0).unwrap()], 1).unwrap())
                .unwrap();
            let rhs = &(&t1 + &t2) + &t3;
            // margin: field shifts (n+1 factors of degree 2) plus P's bandwidth
            let margin = ((n + 1) * 2 + 3 + 1) as i64;
            let d = relative_inner_distance(&lhs, &rhs, margin);
            assert!(d <= 1e-10, "n = {n}: distance {d:.3e}");
        }
    }

    #[test]
    fn a1_two_constructions_agree() {
        // A_1(u) = sum_j ( M_{u^j} [D_j, A] + [M_{u^j}, A] D_j )
        let g = grid1(32);
        let a = bessel_op(g, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let u = random_trig_poly(g, 1, 3, &mut rng);
        let got = a_n(std::slice::from_ref(&u), &a, 3).unwrap();

        let dj = SpectralOperator::derivative(g, 1, 0).unwrap();
        let mu = mult_op(&[u.component(0)], 1).unwrap();
        let expect = &mu.compose(&dj.commutator(&a).unwrap()).unwrap()
            + &mu.commutator(&a).unwrap().compose(&dj).unwrap();
        assert!(relative_inner_distance(&got, &expect, 4) <= 1e-10);

        // zero argument kills it
        let z = SpectralField::zeros(g, 1);
        assert!(a_n(&[z], &a, 3).unwrap().frobenius_norm() == 0.0);
    }

    #[test]
    fn splitting_matches_recurrence_for_small_n() {
        let g = grid1(32);
        let a = bessel_op(g, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 1..=2usize {
            let us: Vec<SpectralField> =
                (0..n).map(|_| random_trig_poly(g, 1, 2, &mut rng)).collect();
            let rec = a_n(&us, &a, 3).unwrap();
            let terms = split_terms(n, 1).unwrap();
            let sum = split_sum(&terms, &us, &a).unwrap();
            let margin = (2 * n + 1) as i64;
            let d = relative_inner_distance(&rec, &sum, margin);
            assert!(d <= 1e-9, "n = {n}: split vs recurrence {d:.3e}");
        }
    }

    #[test]
    fn splitting_matches_recurrence_n3() {
        let g = grid1(32);
        let a = bessel_op(g, 1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let us: Vec<SpectralField> = (0..3).map(|_| random_trig_poly(g, 1, 1, &mut rng)).collect();
        let rec = a_n(&us, &a, 3).unwrap();
        let terms = split_terms(3, 1).unwrap();
        assert_eq!(terms.len(), 24);
        let sum = split_sum(&terms, &us, &a).unwrap();
        let d = relative_inner_distance(&rec, &sum, 4);
        assert!(d <= 1e-9, "n = 3: split vs recurrence {d:.3e}");
    }

    #[test]
    fn split_base_case_shape() {
        let terms = split_terms(1, 1).unwrap();
        assert_eq!(terms.len(), 2);
        let has_type1 = terms.iter().any(|t| matches!(t,
            TermDescriptor::TypeI { alpha, .. } if *alpha == [1, 0]));
        let has_type2 = terms.iter().any(|t| matches!(t,
            TermDescriptor::TypeII { nested, derivs, .. } if nested.len() == 1 && derivs.is_empty()));
        assert!(has_type1 && has_type2);
    }

    #[test]
    fn p_hat_n_small_cases() {
        let phat = |_l: Freq, k: Freq| Complex64::new((1 + k[0] * k[0]) as f64, 0.0);
        // n = 1: p(xi0) - p(xi0 + xi1)
        let v = p_hat_n(&phat, [0, 0], [2, 0], &[[1, 0]]).unwrap();
        assert!((v.re - (5.0 - 10.0)).abs() < 1e-14);
        // n = 2 inclusion-exclusion
        let v2 = p_hat_n(&phat, [0, 0], [1, 0], &[[1, 0], [2, 0]]).unwrap();
        let expect = 2.0 - 5.0 - 10.0 + 17.0;
        assert!((v2.re - expect).abs() < 1e-14);
        // constant symbol telescopes to zero
        let c = |_l: Freq, _k: Freq| Complex64::new(3.0, 0.0);
        for n in 1..=4usize {
            let xis: Vec<Freq> = (0..n).map(|i| [i as i64 + 1, 0]).collect();
            let v = p_hat_n(&c, [0, 0], [0, 0], &xis).unwrap();
            assert!(v.norm() < 1e-14);
        }
    }

    #[test]
    fn p_hat_recursion_identity() {
        // p_hat_{n+1}(l, xi0, ..., xi_{n+1})
        //   = p_hat_n(l, xi0, ...) - p_hat_n(l, xi0 + xi_{n+1}, xi_1, ...)
        let phat = |l: Freq, k: Freq| {
            Complex64::new(
                (1.0 + (k[0] * k[0]) as f64).powf(0.75),
                0.1 * l[0] as f64 * k[0] as f64,
            )
        };
        let xis = [[1i64, 0], [2, 0], [-1, 0], [3, 0]];
        for n in 0..=3usize {
            let head = &xis[..n];
            let new = xis[n];
            let lhs = p_hat_n(&phat, [1, 0], [2, 0], &xis[..n + 1]).unwrap();
            let a = p_hat_n(&phat, [1, 0], [2, 0], head).unwrap();
            let b = p_hat_n(&phat, [1, 0], [2 + new[0], 0], head).unwrap();
            assert!((lhs - (a - b)).norm() < 1e-12);
        }
    }

    #[test]
    fn symbol_formula_multiplier_and_separable() {
        let g = grid1(32);
        // multiplier: lambda = 0 only
        let spec = SymbolSpec::bessel(1.0);
        let f1 = SpectralField::mode(g, [1, 0], 1.0, 0.3).unwrap();
        let w = SpectralField::mode(g, [2, 0], 0.7, -0.2).unwrap();
        let res = symbol_formula_check(&spec, g, &[f1.clone()], &w).unwrap();
        assert!(res <= 1e-12, "multiplier residual {res:.3e}");

        // separable with a sin x-factor: lambda = +-1
        let xf = SpectralField::mode(g, [1, 0], 1.0, -PI / 2.0).unwrap(); // sin
        let spec2 = SymbolSpec::separable(
            vec![crate::symbol::SeparableTerm {
                x_factor: xf,
                multiplier: crate::symbol::MultiplierDef::BesselPower(1.0),
            }],
            2.0,
        );
        let f2 = SpectralField::mode(g, [2, 0], 0.5, 0.9).unwrap();
        let res2 = symbol_formula_check(&spec2, g, &[f1.clone(), f2], &w).unwrap();
        assert!(res2 <= 1e-10, "separable residual {res2:.3e}");

        // zero field annihilates both sides
        let z = SpectralField::zeros(g, 1);
        let res3 = symbol_formula_check(&spec2, g, &[z], &w).unwrap();
        assert!(res3 <= 1e-14);
    }

    #[test]
    fn probe_identity_gives_zero_ratios() {
        let g = grid1(32);
        // <k>^0 = 1: the identity commutes with multiplication
        let rep = boundedness_probe(&SymbolSpec::bessel(0.0), g, 1, 2.0, 1.0, 20, 42).unwrap();
        assert_eq!(rep.skips, 0);
        assert!(rep.max_ratio <= 1e-12);
    }

    #[test]
    fn probe_zero_fields_skip() {
        let g = grid1(32);
        let a = bessel_op(g, 1.0);
        let z = SpectralField::zeros(g, 1);
        let w = SpectralField::mode(g, [1, 0], 1.0, 0.0).unwrap();
        assert!(commutator_ratio(&a, &[z], &w, 2.0, 1.0).unwrap().is_none());
    }

    #[test]
    fn probe_rejects_bad_parameters() {
        let g = grid1(32);
        let spec = SymbolSpec::bessel(1.0);
        assert!(boundedness_probe(&spec, g, 1, 1.2, 1.0, 4, 1).is_err());
        assert!(boundedness_probe(&spec, g, 1, 2.0, 0.5, 4, 1).is_err());
    }
}
