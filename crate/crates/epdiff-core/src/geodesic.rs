//! Euler-Arnold / EPDiff right-hand sides for a pseudo-differential inertia
//! operator on T^d, Eulerian and Lagrangian geodesic integration, metric and
//! energy evaluation, and geodesic shooting toward a target diffeomorphism.

use serde::Serialize;

use crate::conjugation::twist;
use crate::diffeo::Diffeo;
use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::{Point, TorusGrid};
use crate::operator::SpectralOperator;
use crate::symbol::{validate_symbol, SymbolSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Integrator {
    Rk4,
    Midpoint,
}

/// Configuration of one geodesic integration.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub grid: TorusGrid,
    pub inertia: SymbolSpec,
    pub dt: f64,
    pub t_end: f64,
    pub integrator: Integrator,
    /// Record diagnostics every `cadence` steps.
    pub cadence: usize,
    /// Sobolev index for diagnostics; defaults to max(2s, d/2 + 1.1).
    pub q_diag: Option<f64>,
}

impl SolverConfig {
    pub fn new(grid: TorusGrid, inertia: SymbolSpec, dt: f64, t_end: f64) -> Self {
        SolverConfig {
            grid,
            inertia,
            dt,
            t_end,
            integrator: Integrator::Rk4,
            cadence: 10,
            q_diag: None,
        }
    }

    pub fn diagnostics_q(&self) -> f64 {
        self.q_diag
            .unwrap_or_else(|| self.inertia.order.max(self.grid.dim() as f64 / 2.0 + 1.1))
    }

    /// Check ranges and that the inertia symbol is admissible
    /// (Hermitian, positive, elliptic on the stored band).
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) {
            return Err(Error::InvalidParameter("dt must be > 0".into()));
        }
        if !(self.t_end > 0.0) || self.dt > self.t_end {
            return Err(Error::InvalidParameter("need 0 < dt <= t_end".into()));
        }
        if self.cadence == 0 {
            return Err(Error::InvalidParameter("cadence must be >= 1".into()));
        }
        let report = validate_symbol(&self.inertia, self.inertia.order, &self.grid, self.grid.dim());
        if !report.positive || !report.elliptic || !report.hermitian {
            return Err(Error::InvalidParameter(format!(
                "inertia symbol not admissible: hermitian = {}, positive = {} (min eig {:.3e}), elliptic = {}",
                report.hermitian, report.positive, report.min_eigenvalue, report.elliptic
            )));
        }
        Ok(())
    }

    pub fn realize_inertia(&self) -> Result<SpectralOperator> {
        SpectralOperator::realize(&self.inertia, self.grid, self.grid.dim())
    }
}

/// One snapshot along a geodesic, in Eulerian and/or Lagrangian form.
#[derive(Debug, Clone)]
pub struct GeodesicState {
    pub t: f64,
    pub u: Option<SpectralField>,
    pub phi: Option<Diffeo>,
    pub v: Option<SpectralField>,
}

impl GeodesicState {
    /// ||u - v o phi^{-1}||_{L^2} when both representations are present.
    pub fn consistency_gap(&self) -> Result<Option<f64>> {
        match (&self.u, &self.phi, &self.v) {
            (Some(u), Some(phi), Some(v)) => {
                let inv = phi.invert(1e-10)?;
                let u_rec = inv.compose_field(v)?;
                Ok(Some((u - &u_rec).l2_norm()))
            }
            _ => Ok(None),
        }
    }
}

/// Per-record diagnostics along a trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct DiagRecord {
    pub t: f64,
    pub energy: f64,
    pub momentum: Vec<f64>,
    pub hq_norm: f64,
    pub linf_u: f64,
    /// Relative energy change since the previous record.
    pub step_residual: f64,
}

#[derive(Debug, Clone)]
pub struct GeodesicTrajectory {
    pub states: Vec<GeodesicState>,
    pub diagnostics: Vec<DiagRecord>,
}

impl GeodesicTrajectory {
    pub fn final_state(&self) -> &GeodesicState {
        self.states.last().expect("trajectory is never empty")
    }
}

/// m = A u.
pub fn momentum(u: &SpectralField, a: &SpectralOperator) -> Result<SpectralField> {
    a.apply(u)
}

/// (grad u)^T m: component i is sum_j (d_i u^j) m^j, dealiased.
fn transpose_gradient_dot(u: &SpectralField, m: &SpectralField) -> Result<SpectralField> {
    let d = u.grid().dim();
    let mut parts = Vec::with_capacity(d);
    for i in 0..d {
        let mut acc = SpectralField::zeros(u.grid(), 1);
        for j in 0..d {
            let dui = u.component(j).partial_derivative(i)?;
            acc = &acc + &SpectralField::pointwise_multiply(&dui, &m.component(j))?;
        }
        parts.push(acc);
    }
    SpectralField::from_components(&parts)
}

/// The transport + stretching + compression sum nabla_u m + (grad u)^T m + (div u) m.
fn epdiff_nonlinearity(u: &SpectralField, m: &SpectralField) -> Result<SpectralField> {
    let convect = SpectralField::convective_derivative(u, m)?;
    let stretch = transpose_gradient_dot(u, m)?;
    let div_u = u.divergence()?;
    let compress = SpectralField::scalar_times(&div_u, m)?;
    Ok(&(&convect + &stretch) + &compress)
}

/// u_t = -A^{-1} { nabla_u Au + (grad u)^T Au + (div u) Au }.
pub fn euler_arnold_rhs(u: &SpectralField, solver: &InertiaSolver) -> Result<SpectralField> {
    let m = solver.op().apply(u)?;
    let nl = epdiff_nonlinearity(u, &m)?;
    Ok(solver.solve(&nl)?.scale(-1.0))
}

/// Geodesic spray S(u) = A^{-1} { [A, nabla_u] u - (grad u)^T Au - (div u) Au },
/// with [A, nabla_u] u = A(nabla_u u) - nabla_u(Au).
pub fn spray(u: &SpectralField, solver: &InertiaSolver) -> Result<SpectralField> {
    let a = solver.op();
    let m = a.apply(u)?;
    let conv_u = SpectralField::convective_derivative(u, u)?;
    let bracket = &a.apply(&conv_u)? - &SpectralField::convective_derivative(u, &m)?;
    let stretch = transpose_gradient_dot(u, &m)?;
    let div_u = u.divergence()?;
    let compress = SpectralField::scalar_times(&div_u, &m)?;
    solver.solve(&(&(&bracket - &stretch) - &compress))
}

/// Inertia operator with a reusable factorization for dense representations.
pub struct InertiaSolver {
    op: SpectralOperator,
    dense: Option<DenseFactors>,
}

struct DenseFactors {
    band: Vec<usize>,
    lu: nalgebra::LU<num_complex::Complex64, nalgebra::Dyn, nalgebra::Dyn>,
    matrix: nalgebra::DMatrix<num_complex::Complex64>,
}

impl InertiaSolver {
    pub fn new(op: SpectralOperator) -> Result<Self> {
        let dense = if op.is_multiplier() {
            None
        } else {
            let grid = op.grid();
            let vol = grid.volume();
            let slots = op.comps() * vol;
            let band: Vec<usize> = (0..slots).filter(|s| !grid.is_nyquist(s % vol)).collect();
            let m = op.dense_matrix();
            let nb = band.len();
            let mut mb = nalgebra::DMatrix::<num_complex::Complex64>::zeros(nb, nb);
            for (i, &si) in band.iter().enumerate() {
                for (j, &sj) in band.iter().enumerate() {
                    mb[(i, j)] = m[(si, sj)];
                }
            }
            let lu = mb.clone().lu();
            Some(DenseFactors {
                band,
                lu,
                matrix: mb,
            })
        };
        Ok(InertiaSolver { op, dense })
    }

    pub fn op(&self) -> &SpectralOperator {
        &self.op
    }

    pub fn solve(&self, g: &SpectralField) -> Result<SpectralField> {
        match &self.dense {
            None => self.op.solve(g),
            Some(f) => {
                let rhs = nalgebra::DVector::from_iterator(
                    f.band.len(),
                    f.band.iter().map(|&s| g.coeffs()[s]),
                );
                let mut x = f.lu.solve(&rhs).ok_or(Error::SingularOperator {
                    min_singular: 0.0,
                })?;
                let resid = &rhs - &f.matrix * &x;
                if let Some(dx) = f.lu.solve(&resid) {
                    x += dx;
                }
                let mut coeffs =
                    vec![num_complex::Complex64::new(0.0, 0.0); self.op.comps() * self.op.grid().volume()];
                for (i, &s) in f.band.iter().enumerate() {
                    coeffs[s] = x[i];
                }
                SpectralField::from_coeffs(self.op.grid(), self.op.comps(), coeffs)
            }
        }
    }
}

/// Kinetic energy (1/2) G_id(u,u) = (1/2) int (Au . u) dx.
pub fn kinetic_energy(u: &SpectralField, a: &SpectralOperator) -> Result<f64> {
    let m = a.apply(u)?;
    Ok(0.5 * SpectralField::integral_dot(&m, u))
}

#[derive(Debug, Clone, Serialize)]
pub struct EnergyRecord {
    pub t: f64,
    pub energy: f64,
    /// int m dx per component.
    pub momentum: Vec<f64>,
}

/// Energy and momentum-integral series along a trajectory (Eulerian velocity
/// reconstructed from the Lagrangian representation when needed).
pub fn energy_series(traj: &GeodesicTrajectory, a: &SpectralOperator) -> Result<Vec<EnergyRecord>> {
    let mut out = Vec::with_capacity(traj.states.len());
    for st in &traj.states {
        let u = match (&st.u, &st.phi, &st.v) {
            (Some(u), _, _) => u.clone(),
            (None, Some(phi), Some(v)) => phi.invert(1e-10)?.compose_field(v)?,
            _ => {
                return Err(Error::InvalidParameter(
                    "state carries neither representation".into(),
                ))
            }
        };
        let m = a.apply(&u)?;
        out.push(EnergyRecord {
            t: st.t,
            energy: 0.5 * SpectralField::integral_dot(&m, &u),
            momentum: m.mean(),
        });
    }
    Ok(out)
}

fn blow_up_guard(
    t: f64,
    u: &SpectralField,
    q: f64,
    initial_norm: f64,
    dt: f64,
    history: &[(f64, f64)],
) -> Result<f64> {
    let hq = u.sobolev_norm(q)?;
    if initial_norm > 0.0 && hq > 1e6 * initial_norm {
        return Err(Error::BlowUpSuspected {
            time: t,
            reason: format!("H^q norm grew by {:.2e}", hq / initial_norm),
            norm_history: history.to_vec(),
        });
    }
    let h = 1.0 / u.grid().n_per_axis() as f64;
    let linf = u.linf_norm();
    if dt * linf > 0.5 * h {
        return Err(Error::BlowUpSuspected {
            time: t,
            reason: format!(
                "CFL guard: dt * max|u| = {:.3e} exceeds half a grid spacing {:.3e}",
                dt * linf,
                0.5 * h
            ),
            norm_history: history.to_vec(),
        });
    }
    Ok(hq)
}

/// Integrate the Euler-Arnold equation with a fixed-step one-step method.
pub fn integrate_eulerian(u0: &SpectralField, cfg: &SolverConfig) -> Result<GeodesicTrajectory> {
    cfg.validate()?;
    if u0.grid() != cfg.grid || u0.components() != cfg.grid.dim() {
        return Err(Error::ShapeMismatch("initial velocity shape".into()));
    }
    let solver = InertiaSolver::new(cfg.realize_inertia()?)?;
    let q = cfg.diagnostics_q();
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let dt = cfg.t_end / steps as f64;

    let mut u = u0.clone();
    let initial_norm = u.sobolev_norm(q)?;
    let mut history: Vec<(f64, f64)> = vec![(0.0, initial_norm)];
    let mut states = Vec::new();
    let mut diags = Vec::new();
    let e0 = kinetic_energy(&u, solver.op())?;
    let mut prev_energy = e0;
    let record =
        |t: f64, u: &SpectralField, prev_e: f64, states: &mut Vec<GeodesicState>, diags: &mut Vec<DiagRecord>| -> Result<f64> {
            let e = kinetic_energy(u, solver.op())?;
            let m = solver.op().apply(u)?;
            diags.push(DiagRecord {
                t,
                energy: e,
                momentum: m.mean(),
                hq_norm: u.sobolev_norm(q)?,
                linf_u: u.linf_norm(),
                step_residual: if e0.abs() > 0.0 { (e - prev_e).abs() / e0.abs() } else { 0.0 },
            });
            states.push(GeodesicState {
                t,
                u: Some(u.clone()),
                phi: None,
                v: None,
            });
            Ok(e)
        };
    prev_energy = record(0.0, &u, prev_energy, &mut states, &mut diags)?;

    for step in 1..=steps {
        let t = (step - 1) as f64 * dt;
        u = step_field(&u, dt, cfg.integrator, |w| euler_arnold_rhs(w, &solver))?;
        let t_next = step as f64 * dt;
        let hq = blow_up_guard(t_next, &u, q, initial_norm, dt, &history)?;
        history.push((t_next, hq));
        let _ = t;
        if step % cfg.cadence == 0 || step == steps {
            prev_energy = record(t_next, &u, prev_energy, &mut states, &mut diags)?;
        }
    }
    Ok(GeodesicTrajectory {
        states,
        diagnostics: diags,
    })
}

fn step_field<F>(u: &SpectralField, dt: f64, method: Integrator, rhs: F) -> Result<SpectralField>
where
    F: Fn(&SpectralField) -> Result<SpectralField>,
{
    match method {
        Integrator::Rk4 => {
            let k1 = rhs(u)?;
            let k2 = rhs(&(u + &k1.scale(dt / 2.0)))?;
            let k3 = rhs(&(u + &k2.scale(dt / 2.0)))?;
            let k4 = rhs(&(u + &k3.scale(dt)))?;
            let incr = &(&k1 + &k4) + &(&k2 + &k3).scale(2.0);
            Ok(u + &incr.scale(dt / 6.0))
        }
        Integrator::Midpoint => {
            let k1 = rhs(u)?;
            let k2 = rhs(&(u + &k1.scale(dt / 2.0)))?;
            Ok(u + &k2.scale(dt))
        }
    }
}

/// Integrate the Lagrangian system phi_t = v, v_t = (S(v o phi^{-1})) o phi
/// from (id, v0). On the flat torus the material derivative reduces to the
/// componentwise time derivative.
pub fn integrate_lagrangian(v0: &SpectralField, cfg: &SolverConfig) -> Result<GeodesicTrajectory> {
    cfg.validate()?;
    if v0.grid() != cfg.grid || v0.components() != cfg.grid.dim() {
        return Err(Error::ShapeMismatch("initial velocity shape".into()));
    }
    let solver = InertiaSolver::new(cfg.realize_inertia()?)?;
    let q = cfg.diagnostics_q();
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let dt = cfg.t_end / steps as f64;
    let grid = cfg.grid;

    // warm start for the per-stage inversions
    let mut warm: Option<Vec<Point>> = None;
    let rhs = |g: &SpectralField, v: &SpectralField, warm: &mut Option<Vec<Point>>| -> Result<(SpectralField, SpectralField)> {
        let phi = Diffeo::new(g.clone())?;
        let phi_inv = phi.invert_with_guess(1e-12, warm.as_deref())?;
        *warm = Some(phi_inv.warped_points());
        let u = phi_inv.compose_field(v)?;
        let s = spray(&u, &solver)?;
        Ok((v.clone(), phi.compose_field(&s)?))
    };

    let mut g = SpectralField::zeros(grid, grid.dim());
    let mut v = v0.clone();
    let initial_norm = v.sobolev_norm(q)?;
    let mut history = vec![(0.0, initial_norm)];
    let mut states = Vec::new();
    let mut diags = Vec::new();
    let a = solver.op();
    let e0 = kinetic_energy(&v, a)?;
    let mut prev_e = e0;

    let record = |t: f64,
                      g: &SpectralField,
                      v: &SpectralField,
                      prev_e: f64,
                      states: &mut Vec<GeodesicState>,
                      diags: &mut Vec<DiagRecord>|
     -> Result<f64> {
        let phi = Diffeo::new(g.clone())?;
        let u = phi.invert(1e-12)?.compose_field(v)?;
        let e = kinetic_energy(&u, a)?;
        let m = a.apply(&u)?;
        diags.push(DiagRecord {
            t,
            energy: e,
            momentum: m.mean(),
            hq_norm: u.sobolev_norm(q)?,
            linf_u: u.linf_norm(),
            step_residual: if e0.abs() > 0.0 { (e - prev_e).abs() / e0.abs() } else { 0.0 },
        });
        states.push(GeodesicState {
            t,
            u: Some(u),
            phi: Some(phi),
            v: Some(v.clone()),
        });
        Ok(e)
    };
    prev_e = record(0.0, &g, &v, prev_e, &mut states, &mut diags)?;

    for step in 1..=steps {
        let t_next = step as f64 * dt;
        match cfg.integrator {
            Integrator::Rk4 => {
                let (k1g, k1v) = rhs(&g, &v, &mut warm)?;
                let (k2g, k2v) = rhs(&(&g + &k1g.scale(dt / 2.0)), &(&v + &k1v.scale(dt / 2.0)), &mut warm)?;
                let (k3g, k3v) = rhs(&(&g + &k2g.scale(dt / 2.0)), &(&v + &k2v.scale(dt / 2.0)), &mut warm)?;
                let (k4g, k4v) = rhs(&(&g + &k3g.scale(dt)), &(&v + &k3v.scale(dt)), &mut warm)?;
                let ig = &(&k1g + &k4g) + &(&k2g + &k3g).scale(2.0);
                let iv = &(&k1v + &k4v) + &(&k2v + &k3v).scale(2.0);
                g = &g + &ig.scale(dt / 6.0);
                v = &v + &iv.scale(dt / 6.0);
            }
            Integrator::Midpoint => {
                let (k1g, k1v) = rhs(&g, &v, &mut warm)?;
                let (k2g, k2v) = rhs(&(&g + &k1g.scale(dt / 2.0)), &(&v + &k1v.scale(dt / 2.0)), &mut warm)?;
                g = &g + &k2g.scale(dt);
                v = &v + &k2v.scale(dt);
            }
        }
        let hq = v.sobolev_norm(q)?;
        if initial_norm > 0.0 && hq > 1e6 * initial_norm {
            return Err(Error::BlowUpSuspected {
                time: t_next,
                reason: format!("Lagrangian velocity H^q norm grew by {:.2e}", hq / initial_norm),
                norm_history: history,
            });
        }
        history.push((t_next, hq));
        if step % cfg.cadence == 0 || step == steps {
            prev_e = record(t_next, &g, &v, prev_e, &mut states, &mut diags)?;
        }
    }
    Ok(GeodesicTrajectory {
        states,
        diagnostics: diags,
    })
}

/// G_phi(v1, v2) = int (A_phi v1 . v2) J_phi dx by collocation quadrature.
pub fn metric_eval(
    phi: &Diffeo,
    v1: &SpectralField,
    v2: &SpectralField,
    a: &SpectralOperator,
) -> Result<f64> {
    if v1.grid() != phi.grid() || v2.grid() != phi.grid() {
        return Err(Error::ShapeMismatch("metric arguments across grids".into()));
    }
    let twisted = twist(a, phi)?;
    let av1 = twisted.apply(v1)?;
    let grid = phi.grid();
    let vol = grid.volume();
    let av1_vals = av1.values();
    let v2_vals = v2.values();
    let jac = phi.jacobian_values();
    let mut acc = 0.0;
    for idx in 0..vol {
        let mut dot = 0.0;
        for c in 0..v1.components() {
            dot += av1_vals[c * vol + idx] * v2_vals[c * vol + idx];
        }
        acc += dot * jac[idx];
    }
    Ok(acc / vol as f64)
}

/// Result of a shooting run.
#[derive(Debug, Clone)]
pub struct ShootResult {
    pub u0: SpectralField,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct ShootOptions {
    pub max_iter: usize,
    pub step: f64,
    pub tol: f64,
}

impl Default for ShootOptions {
    fn default() -> Self {
        ShootOptions {
            max_iter: 200,
            step: 0.25,
            tol: 1e-8,
        }
    }
}

/// Flow endpoint: integrate u_t = rhs(u), g_t = u o (id + g) jointly and
/// return the displacement at t_end. Avoids per-step inversions; in exact
/// arithmetic the trajectory is the same geodesic as the Lagrangian system.
pub fn flow_endpoint(u0: &SpectralField, cfg: &SolverConfig) -> Result<SpectralField> {
    let solver = InertiaSolver::new(cfg.realize_inertia()?)?;
    let grid = cfg.grid;
    let vol = grid.volume();
    let d = grid.dim();
    let steps = (cfg.t_end / cfg.dt).round() as usize;
    let dt = cfg.t_end / steps as f64;
    let compose_u = |u: &SpectralField, g: &SpectralField| -> Result<SpectralField> {
        let g_vals = g.values();
        let pts: Vec<Point> = (0..vol)
            .map(|idx| {
                let mut p = grid.point_of_index(idx);
                for c in 0..d {
                    p[c] += g_vals[c * vol + idx];
                }
                TorusGrid::wrap_point(p)
            })
            .collect();
        let rows = u.evaluate(&pts);
        let mut samples = vec![0.0; d * vol];
        for (idx, row) in rows.iter().enumerate() {
            for c in 0..d {
                samples[c * vol + idx] = row[c];
            }
        }
        SpectralField::from_samples(grid, d, &samples)
    };
    let mut u = u0.clone();
    let mut g = SpectralField::zeros(grid, d);
    for _ in 0..steps {
        // joint RK4 stage evaluations
        let k1u = euler_arnold_rhs(&u, &solver)?;
        let k1g = compose_u(&u, &g)?;
        let u2 = &u + &k1u.scale(dt / 2.0);
        let g2 = &g + &k1g.scale(dt / 2.0);
        let k2u = euler_arnold_rhs(&u2, &solver)?;
        let k2g = compose_u(&u2, &g2)?;
        let u3 = &u + &k2u.scale(dt / 2.0);
        let g3 = &g + &k2g.scale(dt / 2.0);
        let k3u = euler_arnold_rhs(&u3, &solver)?;
        let k3g = compose_u(&u3, &g3)?;
        let u4 = &u + &k3u.scale(dt);
        let g4 = &g + &k3g.scale(dt);
        let k4u = euler_arnold_rhs(&u4, &solver)?;
        let k4g = compose_u(&u4, &g4)?;
        u = &u + &(&(&k1u + &k4u) + &(&k2u + &k3u).scale(2.0)).scale(dt / 6.0);
        g = &g + &(&(&k1g + &k4g) + &(&k2g + &k3g).scale(2.0)).scale(dt / 6.0);
    }
    Ok(g)
}

/// L2 distance between two displacements with componentwise torus wrapping.
pub fn displacement_distance(g1: &SpectralField, g2: &SpectralField) -> f64 {
    let grid = g1.grid();
    let vol = grid.volume();
    let a = g1.values();
    let b = g2.values();
    let mut acc = 0.0;
    for c in 0..g1.components() {
        for idx in 0..vol {
            let d = TorusGrid::wrap_signed(a[c * vol + idx] - b[c * vol + idx]);
            acc += d * d;
        }
    }
    (acc / vol as f64).sqrt()
}

/// Low-mode parameterization used by the shooting optimizer: mean value plus
/// cos/sin pairs for modes with |k|_inf <= 4, per component.
fn shoot_modes(grid: TorusGrid) -> Vec<crate::grid::Freq> {
    let kmax = 4i64.min(grid.cutoff() - 1);
    let mut modes = Vec::new();
    if grid.dim() == 1 {
        for k in 1..=kmax {
            modes.push([k, 0]);
        }
    } else {
        for k0 in -kmax..=kmax {
            for k1 in -kmax..=kmax {
                if (k0 > 0 || (k0 == 0 && k1 > 0)) && k0.abs().max(k1.abs()) <= kmax {
                    modes.push([k0, k1]);
                }
            }
        }
    }
    modes
}

fn params_to_field(grid: TorusGrid, params: &[f64]) -> SpectralField {
    let d = grid.dim();
    let modes = shoot_modes(grid);
    let per_comp = 1 + 2 * modes.len();
    let mut f = SpectralField::zeros(grid, d);
    for c in 0..d {
        let base = c * per_comp;
        f.set_coeff(c, [0, 0], num_complex::Complex64::new(params[base], 0.0));
        for (mi, &k) in modes.iter().enumerate() {
            let re = params[base + 1 + 2 * mi];
            let im = params[base + 2 + 2 * mi];
            f.set_coeff(c, k, num_complex::Complex64::new(re, im));
        }
    }
    f
}

/// Match a target diffeomorphism by minimizing
/// Phi(u0) = || phi(t_end; u0) - phi_target ||_{L^2}^2 over a coarse spectral
/// parameterization of u0, with finite-difference gradient descent.
pub fn shoot(phi_target: &Diffeo, cfg: &SolverConfig, opt: &ShootOptions) -> Result<ShootResult> {
    cfg.validate()?;
    let grid = cfg.grid;
    if phi_target.grid() != grid {
        return Err(Error::ShapeMismatch("target on a different grid".into()));
    }
    let d = grid.dim();
    let modes = shoot_modes(grid);
    let n_params = d * (1 + 2 * modes.len());
    let target = phi_target.displacement();

    let objective = |params: &[f64]| -> Result<f64> {
        let u0 = params_to_field(grid, params);
        let g = flow_endpoint(&u0, cfg)?;
        let r = displacement_distance(&g, target);
        Ok(r * r)
    };

    let mut params = vec![0.0; n_params];
    let mut value = objective(&params)?;
    let mut best = (params.clone(), value);
    let h = 1e-6;
    let mut step = opt.step;
    let mut iterations = 0;
    let mut converged = value.sqrt() <= opt.tol;

    while !converged && iterations < opt.max_iter {
        iterations += 1;
        let mut grad = vec![0.0; n_params];
        for i in 0..n_params {
            let mut up = params.clone();
            up[i] += h;
            let mut dn = params.clone();
            dn[i] -= h;
            grad[i] = (objective(&up)? - objective(&dn)?) / (2.0 * h);
        }
        let gnorm: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            break;
        }
        // backtracking line search along -grad
        let mut improved = false;
        for _ in 0..30 {
            let trial: Vec<f64> = params
                .iter()
                .zip(grad.iter())
                .map(|(p, g)| p - step * g)
                .collect();
            let tv = objective(&trial)?;
            if tv < value {
                params = trial;
                value = tv;
                step *= 1.5;
                improved = true;
                break;
            }
            step *= 0.5;
            if step < 1e-14 {
                break;
            }
        }
        if value < best.1 {
            best = (params.clone(), value);
        }
        if value.sqrt() <= opt.tol {
            converged = true;
        }
        if !improved {
            break;
        }
    }

    Ok(ShootResult {
        u0: params_to_field(grid, &best.0),
        residual: best.1.sqrt(),
        converged,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    fn sin_u(g: TorusGrid, amp: f64) -> SpectralField {
        SpectralField::mode(g, [1, 0], amp, -PI / 2.0).unwrap()
    }

    fn cfg_s1(g: TorusGrid, dt: f64, t_end: f64) -> SolverConfig {
        SolverConfig::new(g, SymbolSpec::bessel(1.0), dt, t_end)
    }

    #[test]
    fn momentum_basics() {
        let g = grid1(32);
        let a = SpectralOperator::realize(&SymbolSpec::bessel(1.0), g, 1).unwrap();
        let u = sin_u(g, 1.0);
        let m = momentum(&u, &a).unwrap();
        assert!((&m - &u.scale(2.0)).l2_norm() < 1e-13);
        let c = SpectralField::constant(g, &[0.7]);
        assert!((&momentum(&c, &a).unwrap() - &c).l2_norm() < 1e-14);
        let z = SpectralField::zeros(g, 1);
        assert_eq!(momentum(&z, &a).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn rhs_three_mode_oracle() {
        // s = 1, u = sin(2 pi x): m = 2 sin, u m_x + 2 u_x m = 6 pi sin(4 pi x),
        // rhs = -(6 pi / 5) sin(4 pi x) because a(2) = 5
        let g = grid1(64);
        let cfg = cfg_s1(g, 1e-3, 1.0);
        let solver = InertiaSolver::new(cfg.realize_inertia().unwrap()).unwrap();
        let u = sin_u(g, 1.0);
        let rhs = euler_arnold_rhs(&u, &solver).unwrap();
        let expect = SpectralField::mode(g, [2, 0], 6.0 * PI / 5.0, PI / 2.0).unwrap(); // -(6pi/5) sin
        assert!((&rhs - &expect).l2_norm() <= 1e-12, "gap {}", (&rhs - &expect).l2_norm());
    }

    #[test]
    fn rhs_constant_is_steady_and_quadratic_scaling() {
        let g = grid1(32);
        let cfg = cfg_s1(g, 1e-3, 1.0);
        let solver = InertiaSolver::new(cfg.realize_inertia().unwrap()).unwrap();
        let c = SpectralField::constant(g, &[0.4]);
        assert_eq!(euler_arnold_rhs(&c, &solver).unwrap().l2_norm(), 0.0);

        let u = sin_u(g, 0.3);
        let r1 = euler_arnold_rhs(&u, &solver).unwrap();
        let r2 = euler_arnold_rhs(&u.scale(2.0), &solver).unwrap();
        assert!((&r2 - &r1.scale(4.0)).l2_norm() <= 1e-10);
    }

    #[test]
    fn spray_oracle_and_identity() {
        let g = grid1(64);
        let cfg = cfg_s1(g, 1e-3, 1.0);
        let solver = InertiaSolver::new(cfg.realize_inertia().unwrap()).unwrap();
        let u = sin_u(g, 1.0);
        let s = spray(&u, &solver).unwrap();
        let expect = SpectralField::mode(g, [2, 0], PI / 5.0, PI / 2.0).unwrap(); // -(pi/5) sin(4 pi x)
        assert!((&s - &expect).l2_norm() <= 1e-12);

        // S(u) = rhs(u) + nabla_u u
        let rhs = euler_arnold_rhs(&u, &solver).unwrap();
        let conv = SpectralField::convective_derivative(&u, &u).unwrap();
        assert!((&s - &(&rhs + &conv)).l2_norm() <= 1e-10);

        let c = SpectralField::constant(g, &[0.2]);
        assert_eq!(spray(&c, &solver).unwrap().l2_norm(), 0.0);
    }

    #[test]
    fn eulerian_constant_state_is_fixed() {
        let g = grid1(32);
        let mut cfg = cfg_s1(g, 1e-2, 0.5);
        cfg.cadence = 5;
        let c = SpectralField::constant(g, &[0.3]);
        let traj = integrate_eulerian(&c, &cfg).unwrap();
        let final_u = traj.final_state().u.as_ref().unwrap();
        assert!((final_u - &c).l2_norm() <= 1e-12);
        for d in &traj.diagnostics {
            assert!((d.energy - 0.045).abs() < 1e-12);
        }
    }

    #[test]
    fn eulerian_energy_and_momentum_conserved() {
        let g = grid1(64);
        let mut cfg = cfg_s1(g, 1e-3, 0.5);
        cfg.cadence = 50;
        let traj = integrate_eulerian(&sin_u(g, 0.1), &cfg).unwrap();
        let e0 = traj.diagnostics[0].energy;
        assert!((e0 - 0.005).abs() < 1e-12);
        for d in &traj.diagnostics {
            assert!((d.energy - e0).abs() / e0 <= 1e-8, "drift at t = {}", d.t);
            assert!(d.momentum[0].abs() <= 1e-10);
        }
    }

    #[test]
    fn rk4_self_convergence_rate() {
        let g = grid1(32);
        let u0 = sin_u(g, 1.0);
        let terminal = |dt: f64| {
            let cfg = cfg_s1(g, dt, 0.25);
            integrate_eulerian(&u0, &cfg)
                .unwrap()
                .final_state()
                .u
                .clone()
                .unwrap()
        };
        let reference = terminal(0.25 / 512.0);
        let e1 = (&terminal(0.25 / 16.0) - &reference).l2_norm();
        let e2 = (&terminal(0.25 / 32.0) - &reference).l2_norm();
        let rate = (e1 / e2).log2();
        assert!((rate - 4.0).abs() <= 0.3, "observed rate {rate}");
    }

    #[test]
    fn lagrangian_translation_subgroup() {
        let g = grid1(32);
        let mut cfg = cfg_s1(g, 1e-2, 0.5);
        cfg.cadence = 10;
        let c = SpectralField::constant(g, &[0.3]);
        let traj = integrate_lagrangian(&c, &cfg).unwrap();
        let last = traj.final_state();
        let v = last.v.as_ref().unwrap();
        assert!((v - &c).l2_norm() <= 1e-12);
        let disp = last.phi.as_ref().unwrap().displacement();
        let expect = SpectralField::constant(g, &[0.15]);
        assert!((disp - &expect).l2_norm() <= 1e-10);

        // v0 = 0 stays at the identity
        let z = SpectralField::zeros(g, 1);
        let traj0 = integrate_lagrangian(&z, &cfg).unwrap();
        assert!(traj0.final_state().phi.as_ref().unwrap().displacement().l2_norm() <= 1e-14);
    }

    #[test]
    fn eulerian_lagrangian_consistency() {
        let g = grid1(64);
        let mut cfg = cfg_s1(g, 2e-3, 0.5);
        cfg.cadence = 1000;
        let u0 = sin_u(g, 0.1);
        let eul = integrate_eulerian(&u0, &cfg).unwrap();
        let lag = integrate_lagrangian(&u0, &cfg).unwrap();
        let u_e = eul.final_state().u.as_ref().unwrap().clone();
        let last = lag.final_state();
        let u_l = last
            .phi
            .as_ref()
            .unwrap()
            .invert(1e-12)
            .unwrap()
            .compose_field(last.v.as_ref().unwrap())
            .unwrap();
        let gap = (&u_e - &u_l).l2_norm();
        assert!(gap <= 1e-4, "gap {gap:.3e}");
        assert!(last.consistency_gap().unwrap().unwrap() <= 1e-4);
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let g = grid1(32);
        let cfg = cfg_s1(g, 1e-3, 0.4);
        let u0 = sin_u(g, 1.0);
        let fwd = integrate_eulerian(&u0, &cfg).unwrap();
        let u_t = fwd.final_state().u.as_ref().unwrap().clone();
        let back = integrate_eulerian(&u_t.scale(-1.0), &cfg).unwrap();
        let u_back = back.final_state().u.as_ref().unwrap();
        assert!((u_back - &u0.scale(-1.0)).l2_norm() <= 1e-6);
    }

    #[test]
    fn lagrangian_reports_breaking_as_jacobian_failure() {
        // amplitude-1 data under the H^1 metric steepens until particle
        // trajectories collide; the solver must say so, not limp on
        let g = grid1(32);
        let cfg = cfg_s1(g, 2e-3, 0.6);
        let err = integrate_lagrangian(&sin_u(g, 1.0), &cfg).unwrap_err();
        assert!(matches!(err, crate::error::Error::JacobianNotPositive { .. }));
    }

    #[test]
    fn metric_eval_single_mode_and_symmetry() {
        let g = grid1(64);
        let a = SpectralOperator::realize(&SymbolSpec::bessel(1.0), g, 1).unwrap();
        let v = sin_u(g, 1.0);
        let id = Diffeo::identity(g);
        let gv = metric_eval(&id, &v, &v, &a).unwrap();
        assert!((gv - 1.0).abs() <= 1e-12);

        let phi = Diffeo::new(SpectralField::mode(g, [1, 0], 0.04, 0.7).unwrap()).unwrap();
        let v1 = SpectralField::mode(g, [2, 0], 0.8, 0.1).unwrap();
        let v2 = SpectralField::mode(g, [3, 0], 0.5, -0.4).unwrap();
        let g12 = metric_eval(&phi, &v1, &v2, &a).unwrap();
        let g21 = metric_eval(&phi, &v2, &v1, &a).unwrap();
        assert!((g12 - g21).abs() <= 1e-10, "asymmetry {:.3e}", (g12 - g21).abs());
    }

    #[test]
    fn metric_right_invariance() {
        let g = grid1(128);
        let a = SpectralOperator::realize(&SymbolSpec::bessel(1.0), g, 1).unwrap();
        let u = &sin_u(g, 0.9) + &SpectralField::mode(g, [3, 0], 0.2, 0.3).unwrap();
        let f = SpectralField::mode(g, [1, 0], 0.02, 0.5).unwrap();
        assert!(f.sobolev_norm(3.0).unwrap() <= 0.1);
        let psi = Diffeo::new(f).unwrap();
        let u_psi = psi.compose_field(&u).unwrap();
        let lhs = metric_eval(&psi, &u_psi, &u_psi, &a).unwrap();
        let rhs = metric_eval(&Diffeo::identity(g), &u, &u, &a).unwrap();
        let gap = (lhs - rhs).abs() / rhs.abs();
        assert!(gap <= 1e-5, "relative gap {gap:.3e}");
    }

    #[test]
    fn long_run_norm_stays_bounded() {
        // s = 2 proxy for global existence: the H^s norm (the norm of the
        // globally well-posed space, here conserved by the flow) keeps a
        // growth factor < 10 over T = 10. An observation, not a proof.
        let g = grid1(64);
        let mut cfg = SolverConfig::new(g, SymbolSpec::bessel(2.0), 2e-3, 10.0);
        cfg.cadence = 500;
        cfg.q_diag = Some(2.0);
        let traj = integrate_eulerian(&sin_u(g, 1.0), &cfg).unwrap();
        let h0 = traj.diagnostics[0].hq_norm;
        let hmax = traj
            .diagnostics
            .iter()
            .map(|d| d.hq_norm)
            .fold(0.0f64, f64::max);
        assert!(hmax / h0 < 10.0, "growth {:.2}", hmax / h0);
    }

    #[test]
    fn shoot_identity_target() {
        let g = grid1(32);
        let cfg = cfg_s1(g, 0.05, 1.0);
        let res = shoot(&Diffeo::identity(g), &cfg, &ShootOptions::default()).unwrap();
        assert!(res.converged);
        assert!(res.residual <= 1e-8);
        assert!(res.u0.l2_norm() <= 1e-8);
        assert_eq!(res.iterations, 0);
    }

    #[test]
    fn shoot_translation_target() {
        let g = grid1(32);
        let cfg = cfg_s1(g, 0.05, 1.0);
        let target = Diffeo::translation(g, &[0.2]).unwrap();
        let res = shoot(&target, &cfg, &ShootOptions::default()).unwrap();
        let expect = SpectralField::constant(g, &[0.2]);
        let err = (&res.u0 - &expect).l2_norm();
        assert!(err <= 1e-6, "recovered u0 off by {err:.3e}");
    }

    #[test]
    fn invalid_configs_rejected() {
        let g = grid1(32);
        let mut cfg = cfg_s1(g, 1e-2, 1.0);
        cfg.dt = -1.0;
        assert!(cfg.validate().is_err());
        cfg.dt = 2.0;
        assert!(cfg.validate().is_err());
    }
}
