//! The twisted operator A_phi = R_phi o A o R_{phi^{-1}} and finite-difference
//! verification that phi -> A_phi is differentiable with the expected
//! commutator derivatives at the identity.

use serde::Serialize;

use crate::diffeo::Diffeo;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::operator::SpectralOperator;

/// Inversion tolerance used when caching phi^{-1}.
pub const TWIST_INV_TOL: f64 = 1e-12;

/// Conjugation of a realized operator by composition with a diffeomorphism.
/// The action is a closure over (A, phi, phi^{-1}); a dense assembly is only
/// offered as a small-scale diagnostic.
#[derive(Debug, Clone)]
pub struct TwistedOperator {
    base: SpectralOperator,
    phi: Diffeo,
    phi_inv: Diffeo,
}

impl TwistedOperator {
    pub fn base(&self) -> &SpectralOperator {
        &self.base
    }

    pub fn phi(&self) -> &Diffeo {
        &self.phi
    }

    pub fn phi_inv(&self) -> &Diffeo {
        &self.phi_inv
    }

    /// v -> (A (v o phi^{-1})) o phi ... applied right to left:
    /// compose with phi_inv, apply A, compose with phi.
    pub fn apply(&self, v: &SpectralField) -> Result<SpectralField> {
        let pulled = self.phi_inv.compose_field(v)?;
        let av = self.base.apply(&pulled)?;
        self.phi.compose_field(&av)
    }

    /// Dense assembly for diagnostics; one composition pair per basis column,
    /// so it is gated to N <= 64 in one dimension.
    pub fn assemble_dense(&self) -> Result<SpectralOperator> {
        let grid = self.base.grid();
        if grid.dim() != 1 || grid.n_per_axis() > 64 {
            return Err(Error::BoundExceeded(
                "twisted-operator assembly is a diagnostic for d = 1, N <= 64".into(),
            ));
        }
        let comps = self.base.comps();
        let vol = grid.volume();
        let slots = comps * vol;
        let mut m = nalgebra::DMatrix::<num_complex::Complex64>::zeros(slots, slots);
        // real-pair probing: columns from cos/sin basis responses
        for c in 0..comps {
            for idx in 0..vol {
                if grid.is_nyquist(idx) {
                    continue;
                }
                let k = grid.freq_of_index(idx);
                if k[0] < 0 {
                    continue;
                }
                let cos_f = basis_pair(grid, comps, c, k, false)?;
                let sin_f = basis_pair(grid, comps, c, k, true)?;
                let a_cos = self.apply(&cos_f)?;
                let a_sin = self.apply(&sin_f)?;
                // e_k = cos + i sin, e_{-k} = cos - i sin
                for row in 0..slots {
                    let re = a_cos.coeffs()[row];
                    let im = a_sin.coeffs()[row];
                    let col_p = c * vol + idx;
                    m[(row, col_p)] = re + num_complex::Complex64::new(0.0, 1.0) * im;
                    if k[0] > 0 {
                        let midx = grid.index_of_freq([-k[0], -k[1]]).unwrap();
                        let col_m = c * vol + midx;
                        m[(row, col_m)] = re - num_complex::Complex64::new(0.0, 1.0) * im;
                    }
                }
            }
        }
        SpectralOperator::from_dense(grid, comps, self.base.order_tag(), m)
    }

    /// L2 operator norm of the dense assembly by power iteration on T* T.
    pub fn operator_norm(&self, iterations: usize) -> Result<f64> {
        let dense = self.assemble_dense()?;
        let m = dense.dense_matrix();
        let mh = m.adjoint();
        let g = &mh * &m;
        let n = g.nrows();
        let mut v = nalgebra::DVector::<num_complex::Complex64>::from_element(
            n,
            num_complex::Complex64::new(1.0, 0.0),
        );
        v /= num_complex::Complex64::new(v.norm(), 0.0);
        let mut lambda = 0.0;
        for _ in 0..iterations {
            let w = &g * &v;
            let norm = w.norm();
            if norm == 0.0 {
                return Ok(0.0);
            }
            lambda = norm;
            v = w / num_complex::Complex64::new(norm, 0.0);
        }
        Ok(lambda.sqrt())
    }
}

fn basis_pair(
    grid: crate::grid::TorusGrid,
    comps: usize,
    c: usize,
    k: crate::grid::Freq,
    sine: bool,
) -> Result<SpectralField> {
    let phase = if sine { -std::f64::consts::FRAC_PI_2 } else { 0.0 };
    let scalar = SpectralField::mode(grid, k, 1.0, phase)?;
    let mut parts = vec![SpectralField::zeros(grid, 1); comps];
    parts[c] = scalar;
    SpectralField::from_components(&parts)
}

/// Build A_phi, computing and caching phi^{-1} once.
pub fn twist(a: &SpectralOperator, phi: &Diffeo) -> Result<TwistedOperator> {
    if a.grid() != phi.grid() {
        return Err(Error::ShapeMismatch("twist across grids".into()));
    }
    let phi_inv = phi.invert(TWIST_INV_TOL)?;
    Ok(TwistedOperator {
        base: a.clone(),
        phi: phi.clone(),
        phi_inv,
    })
}

/// Central difference of eps -> A_{id + eps dphi} v at eps = 0.
pub fn gateaux_fd(
    a: &SpectralOperator,
    dphi: &SpectralField,
    v: &SpectralField,
    eps: f64,
) -> Result<SpectralField> {
    let plus = twist(a, &Diffeo::new(dphi.scale(eps))?)?.apply(v)?;
    let minus = twist(a, &Diffeo::new(dphi.scale(-eps))?)?.apply(v)?;
    Ok((&plus - &minus).scale(0.5 / eps))
}

/// First derivative at the identity: [nabla_{dphi}, A] v.
pub fn derivative_formula(
    a: &SpectralOperator,
    dphi: &SpectralField,
    v: &SpectralField,
) -> Result<SpectralField> {
    let av = a.apply(v)?;
    let lhs = SpectralField::convective_derivative(dphi, &av)?;
    let rhs = a.apply(&SpectralField::convective_derivative(dphi, v)?)?;
    Ok(&lhs - &rhs)
}

/// Mixed second central difference of (s,t) -> A_{id + s d1 + t d2} v.
pub fn gateaux_fd2(
    a: &SpectralOperator,
    d1: &SpectralField,
    d2: &SpectralField,
    v: &SpectralField,
    eps: f64,
) -> Result<SpectralField> {
    let disp = |s: f64, t: f64| -> Result<Diffeo> {
        Diffeo::new(&d1.scale(s * eps) + &d2.scale(t * eps))
    };
    let pp = twist(a, &disp(1.0, 1.0)?)?.apply(v)?;
    let pm = twist(a, &disp(1.0, -1.0)?)?.apply(v)?;
    let mp = twist(a, &disp(-1.0, 1.0)?)?.apply(v)?;
    let mm = twist(a, &disp(-1.0, -1.0)?)?.apply(v)?;
    Ok((&(&pp - &pm) - &(&mp - &mm)).scale(0.25 / (eps * eps)))
}

/// Second derivative at the identity via the commutator recurrence:
/// A_2(d1,d2) v = [nabla_{d2},[nabla_{d1},A]] v - [nabla_{nabla_{d2} d1}, A] v.
pub fn second_derivative_formula(
    a: &SpectralOperator,
    d1: &SpectralField,
    d2: &SpectralField,
    v: &SpectralField,
) -> Result<SpectralField> {
    let inner = |w: &SpectralField, x: &SpectralField| -> Result<SpectralField> {
        derivative_formula(a, w, x)
    };
    // [nabla_{d2}, [nabla_{d1}, A]] v
    let t1a = SpectralField::convective_derivative(d2, &inner(d1, v)?)?;
    let t1b = inner(d1, &SpectralField::convective_derivative(d2, v)?)?;
    let t1 = &t1a - &t1b;
    let t2 = inner(&SpectralField::convective_derivative(d2, d1)?, v)?;
    Ok(&t1 - &t2)
}

/// Least-squares slope of log err against log eps.
pub fn fit_loglog_slope(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(eps, err) in pairs {
        let x = eps.ln();
        let y = err.max(1e-300).ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Convergence report for the finite-difference derivative checks.
#[derive(Debug, Clone, Serialize)]
pub struct ConjugationReport {
    pub eps_ladder: Vec<f64>,
    pub first_order_errors: Vec<f64>,
    pub first_order_slope: f64,
    pub second_order_errors: Vec<f64>,
    pub second_order_slope: f64,
}

/// Run the eps ladder for both derivative orders and fit slopes.
pub fn conjugation_convergence(
    a: &SpectralOperator,
    d1: &SpectralField,
    d2: &SpectralField,
    v: &SpectralField,
    ladder: &[f64],
) -> Result<ConjugationReport> {
    let exact1 = derivative_formula(a, d1, v)?;
    let exact2 = second_derivative_formula(a, d1, d2, v)?;
    let mut e1 = Vec::with_capacity(ladder.len());
    let mut e2 = Vec::with_capacity(ladder.len());
    for &eps in ladder {
        e1.push((&gateaux_fd(a, d1, v, eps)? - &exact1).l2_norm());
        e2.push((&gateaux_fd2(a, d1, d2, v, eps)? - &exact2).l2_norm());
    }
    let pairs1: Vec<(f64, f64)> = ladder.iter().copied().zip(e1.iter().copied()).collect();
    let pairs2: Vec<(f64, f64)> = ladder.iter().copied().zip(e2.iter().copied()).collect();
    Ok(ConjugationReport {
        eps_ladder: ladder.to_vec(),
        first_order_errors: e1,
        first_order_slope: fit_loglog_slope(&pairs1),
        second_order_errors: e2,
        second_order_slope: fit_loglog_slope(&pairs2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::commutator::a_n;
    use crate::grid::TorusGrid;
    use crate::symbol::SymbolSpec;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    fn bessel_op(g: TorusGrid, s: f64) -> SpectralOperator {
        SpectralOperator::realize(&SymbolSpec::bessel(s), g, 1).unwrap()
    }

    fn sin_field(g: TorusGrid, k: i64, amp: f64) -> SpectralField {
        SpectralField::mode(g, [k, 0], amp, -PI / 2.0).unwrap()
    }

    #[test]
    fn identity_twist_is_base() {
        let g = grid1(64);
        let a = bessel_op(g, 1.0);
        let t = twist(&a, &Diffeo::identity(g)).unwrap();
        let v = SpectralField::from_values_fn(g, 1, |p, _| {
            (TAU * p[0]).sin() + 0.2 * (3.0 * TAU * p[0]).cos()
        });
        let tv = t.apply(&v).unwrap();
        let av = a.apply(&v).unwrap();
        assert!((&tv - &av).l2_norm() <= 1e-12 * av.l2_norm());
    }

    #[test]
    fn multipliers_commute_with_translations() {
        let g = grid1(64);
        let a = bessel_op(g, 1.0);
        let tr = Diffeo::translation(g, &[0.3]).unwrap();
        let t = twist(&a, &tr).unwrap();
        let v = SpectralField::from_values_fn(g, 1, |p, _| {
            (TAU * p[0]).sin() - 0.4 * (2.0 * TAU * p[0]).sin()
        });
        let tv = t.apply(&v).unwrap();
        let av = a.apply(&v).unwrap();
        assert!((&tv - &av).l2_norm() <= 1e-10);
    }

    #[test]
    fn twist_respects_group_composition() {
        let g = grid1(128);
        let a = bessel_op(g, 1.0);
        let phi = Diffeo::new(sin_field(g, 1, 0.03)).unwrap();
        let psi = Diffeo::new(SpectralField::mode(g, [2, 0], 0.02, 0.4).unwrap()).unwrap();
        let comp = phi.compose(&psi).unwrap();
        let v = sin_field(g, 1, 1.0);
        // R_{phi o psi} = R_psi o R_phi on fields
        let lhs = twist(&a, &comp).unwrap().apply(&v).unwrap();
        let inner = twist(&a, &phi).unwrap().apply(&v).unwrap();
        // A_{phi o psi} v = R_psi ( A_phi (v o psi^{-1} ... )) -- verified via
        // the field-level identity instead: both roads below must agree.
        let psi_inv = psi.invert(1e-12).unwrap();
        let rhs = psi.compose_field(
            &twist(&a, &phi)
                .unwrap()
                .apply(&psi_inv.compose_field(&v).unwrap())
                .unwrap(),
        )
        .unwrap();
        let _ = inner;
        assert!((&lhs - &rhs).l2_norm() <= 1e-6, "gap {}", (&lhs - &rhs).l2_norm());
    }

    #[test]
    fn gateaux_trivial_cases() {
        let g = grid1(64);
        let a = bessel_op(g, 1.0);
        let v = sin_field(g, 1, 1.0);
        let zero = SpectralField::zeros(g, 1);
        let d = gateaux_fd(&a, &zero, &v, 1e-3).unwrap();
        assert!(d.l2_norm() < 1e-12);
        // conjugating the identity operator changes nothing
        let id = SpectralOperator::identity(g, 1);
        let dphi = sin_field(g, 1, 1.0);
        let d2 = gateaux_fd(&id, &dphi, &v, 1e-3).unwrap();
        assert!(d2.l2_norm() < 1e-9, "norm {:.3e}", d2.l2_norm());
    }

    #[test]
    fn derivative_formula_constant_direction_vanishes() {
        let g = grid1(64);
        let a = bessel_op(g, 1.0);
        let v = sin_field(g, 2, 0.7);
        let c = SpectralField::constant(g, &[0.4]);
        let d = derivative_formula(&a, &c, &v).unwrap();
        assert!(d.l2_norm() <= 1e-12);
    }

    #[test]
    fn derivative_formula_matches_a1() {
        let g = grid1(32);
        let a = bessel_op(g, 1.0);
        let u = SpectralField::from_values_fn(g, 1, |p, _| {
            0.3 * (TAU * p[0]).sin() + 0.1 * (2.0 * TAU * p[0]).cos()
        });
        let v = sin_field(g, 1, 1.0);
        let direct = derivative_formula(&a, &u, &v).unwrap();
        let via_an = a_n(std::slice::from_ref(&u), &a, 3).unwrap().apply(&v).unwrap();
        assert!((&direct - &via_an).l2_norm() <= 1e-12);
    }

    #[test]
    fn first_derivative_second_order_convergence() {
        let g = grid1(64);
        let a = bessel_op(g, 1.0);
        let dphi = sin_field(g, 1, 1.0);
        let v = sin_field(g, 1, 1.0);
        let ladder = [1e-2, 5e-3, 2.5e-3];
        let rep = conjugation_convergence(&a, &dphi, &dphi, &v, &ladder).unwrap();
        assert!(
            (rep.first_order_slope - 2.0).abs() <= 0.2,
            "slope {}",
            rep.first_order_slope
        );
        // Richardson extrapolation cancels the eps^2 term
        let exact = derivative_formula(&a, &dphi, &v).unwrap();
        let d1 = gateaux_fd(&a, &dphi, &v, 1e-2).unwrap();
        let d2 = gateaux_fd(&a, &dphi, &v, 5e-3).unwrap();
        let rich = (&d2.scale(4.0) - &d1).scale(1.0 / 3.0);
        let e_rich = (&rich - &exact).l2_norm();
        let e_plain = (&d2 - &exact).l2_norm();
        assert!(e_rich < 0.05 * e_plain, "richardson {e_rich:.3e} plain {e_plain:.3e}");
    }

    #[test]
    fn second_derivative_matches_a2() {
        let g = grid1(64);
        let a = bessel_op(g, 1.0);
        let d1 = sin_field(g, 1, 1.0);
        let d2 = SpectralField::mode(g, [2, 0], 0.8, 0.0).unwrap();
        let v = sin_field(g, 1, 1.0);
        // formula route equals the dense A_2 route
        let f2 = second_derivative_formula(&a, &d1, &d2, &v).unwrap();
        let dense = a_n(&[d1.clone(), d2.clone()], &a, 3)
            .unwrap()
            .apply(&v)
            .unwrap();
        assert!((&f2 - &dense).l2_norm() <= 1e-10);
        // finite differences converge to it at second order
        let rep = conjugation_convergence(&a, &d1, &d2, &v, &[1e-2, 5e-3, 2.5e-3]).unwrap();
        assert!(
            (rep.second_order_slope - 2.0).abs() <= 0.2,
            "slope {}",
            rep.second_order_slope
        );
    }

    #[test]
    fn dense_assembly_matches_action() {
        let g = grid1(32);
        let a = bessel_op(g, 1.0);
        let phi = Diffeo::new(sin_field(g, 1, 0.05)).unwrap();
        let t = twist(&a, &phi).unwrap();
        let dense = t.assemble_dense().unwrap();
        let v = SpectralField::from_values_fn(g, 1, |p, _| {
            (TAU * p[0]).sin() + 0.3 * (4.0 * TAU * p[0]).cos()
        });
        let via_dense = dense.apply(&v).unwrap();
        let via_action = t.apply(&v).unwrap();
        assert!((&via_dense - &via_action).l2_norm() <= 1e-10);
    }

    #[test]
    fn operator_norm_stays_bounded_on_small_ball() {
        let g = grid1(64);
        let a = bessel_op(g, 1.0);
        let id_norm = twist(&a, &Diffeo::identity(g)).unwrap().operator_norm(60).unwrap();
        // ||f||_{H^3} <= 0.1 ball, a few sample directions
        for (k, amp) in [(1i64, 0.03), (2, 0.01), (3, 0.004)] {
            let f = SpectralField::mode(g, [k, 0], amp, 0.35).unwrap();
            assert!(f.sobolev_norm(3.0).unwrap() <= 0.1);
            let t = twist(&a, &Diffeo::new(f).unwrap()).unwrap();
            let norm = t.operator_norm(60).unwrap();
            assert!(
                norm <= 2.0 * id_norm && norm >= 0.5 * id_norm,
                "norm {norm} vs base {id_norm}"
            );
        }
    }
}
