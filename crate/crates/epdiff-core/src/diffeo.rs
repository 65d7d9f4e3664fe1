//! Torus diffeomorphisms phi = id + f with a strictly positive Jacobian,
//! composition with fields, and pointwise inversion.

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::{Point, TorusGrid};

/// phi = id + f, stored through the periodic displacement f (c = d components).
#[derive(Debug, Clone)]
pub struct Diffeo {
    displacement: SpectralField,
}

impl Diffeo {
    /// Wrap a displacement field, checking det(id + df) > 0 at every collocation point.
    pub fn new(displacement: SpectralField) -> Result<Self> {
        if displacement.components() != displacement.grid().dim() {
            return Err(Error::ShapeMismatch(
                "displacement must have d components".into(),
            ));
        }
        let phi = Diffeo { displacement };
        let min = phi.min_jacobian();
        if !(min > 0.0) {
            return Err(Error::JacobianNotPositive { min });
        }
        Ok(phi)
    }

    pub fn identity(grid: TorusGrid) -> Self {
        Diffeo {
            displacement: SpectralField::zeros(grid, grid.dim()),
        }
    }

    /// Translation by a constant vector.
    pub fn translation(grid: TorusGrid, shift: &[f64]) -> Result<Self> {
        Diffeo::new(SpectralField::constant(grid, shift))
    }

    pub fn grid(&self) -> TorusGrid {
        self.displacement.grid()
    }

    pub fn displacement(&self) -> &SpectralField {
        &self.displacement
    }

    pub fn is_identity(&self) -> bool {
        self.displacement.l2_norm() == 0.0
    }

    /// Warped collocation points phi(x_j), in flat value-index order.
    pub fn warped_points(&self) -> Vec<Point> {
        let grid = self.grid();
        let vol = grid.volume();
        let vals = self.displacement.values();
        (0..vol)
            .map(|idx| {
                let mut p = grid.point_of_index(idx);
                for c in 0..grid.dim() {
                    p[c] += vals[c * vol + idx];
                }
                TorusGrid::wrap_point(p)
            })
            .collect()
    }

    /// Exact Jacobian determinant values at collocation points.
    pub fn jacobian_values(&self) -> Vec<f64> {
        let grid = self.grid();
        let d = grid.dim();
        let vol = grid.volume();
        let mut deriv = Vec::with_capacity(d * d);
        for c in 0..d {
            let fc = self.displacement.component(c);
            for j in 0..d {
                deriv.push(fc.partial_derivative(j).expect("axis in range").values());
            }
        }
        (0..vol)
            .map(|idx| match d {
                1 => 1.0 + deriv[0][idx],
                2 => {
                    let a = 1.0 + deriv[0][idx]; // d_0 f_0
                    let b = deriv[1][idx]; // d_1 f_0
                    let c = deriv[2][idx]; // d_0 f_1
                    let e = 1.0 + deriv[3][idx]; // d_1 f_1
                    a * e - b * c
                }
                _ => unreachable!(),
            })
            .collect()
    }

    fn min_jacobian(&self) -> f64 {
        self.jacobian_values()
            .into_iter()
            .fold(f64::INFINITY, f64::min)
    }

    /// det(id + df) as a dealiased scalar field.
    pub fn jacobian_det(&self) -> SpectralField {
        let grid = self.grid();
        let one = SpectralField::constant(grid, &[1.0]);
        match grid.dim() {
            1 => {
                let df = self.displacement.component(0).partial_derivative(0).unwrap();
                &one + &df
            }
            2 => {
                let f0 = self.displacement.component(0);
                let f1 = self.displacement.component(1);
                let a = &one + &f0.partial_derivative(0).unwrap();
                let e = &one + &f1.partial_derivative(1).unwrap();
                let b = f0.partial_derivative(1).unwrap();
                let c = f1.partial_derivative(0).unwrap();
                let ae = SpectralField::pointwise_multiply(&a, &e).unwrap();
                let bc = SpectralField::pointwise_multiply(&b, &c).unwrap();
                &ae - &bc
            }
            _ => unreachable!(),
        }
    }

    /// Band-limited re-projection of v o phi: evaluate v at warped collocation
    /// points, then transform back. Composition does not preserve band limits;
    /// `composition_tail_energy` measures what this projection discards.
    pub fn compose_field(&self, v: &SpectralField) -> Result<SpectralField> {
        if v.grid() != self.grid() {
            return Err(Error::ShapeMismatch("compose across grids".into()));
        }
        let grid = self.grid();
        let vol = grid.volume();
        let pts = self.warped_points();
        let rows = v.evaluate(&pts);
        let mut samples = vec![0.0; v.components() * vol];
        for (idx, row) in rows.iter().enumerate() {
            for c in 0..v.components() {
                samples[c * vol + idx] = row[c];
            }
        }
        SpectralField::from_samples(grid, v.components(), &samples)
    }

    /// Fraction of energy outside the retained band when v o phi is sampled
    /// on a refined (2N) grid. Diagnostic for the projection in `compose_field`.
    pub fn composition_tail_energy(&self, v: &SpectralField) -> Result<f64> {
        let grid = self.grid();
        let fine = TorusGrid::new(grid.dim(), 2 * grid.n_per_axis())?;
        let disp_vals = (0..fine.volume())
            .map(|i| fine.point_of_index(i))
            .collect::<Vec<_>>();
        let disp = self.displacement.evaluate(&disp_vals);
        let pts: Vec<Point> = disp_vals
            .iter()
            .zip(disp.iter())
            .map(|(&x, f)| {
                let mut p = x;
                for c in 0..grid.dim() {
                    p[c] += f[c];
                }
                TorusGrid::wrap_point(p)
            })
            .collect();
        let rows = v.evaluate(&pts);
        let mut inside = 0.0;
        let mut outside = 0.0;
        for c in 0..v.components() {
            let vals: Vec<num_complex::Complex64> = rows
                .iter()
                .map(|r| num_complex::Complex64::new(r[c], 0.0))
                .collect();
            let coeffs = fine.forward(&vals);
            for idx in 0..fine.volume() {
                let k = fine.freq_of_index(idx);
                let e = coeffs[idx].norm_sqr();
                if grid.index_of_freq(k).is_some() {
                    inside += e;
                } else {
                    outside += e;
                }
            }
        }
        Ok(if inside + outside == 0.0 {
            0.0
        } else {
            outside / (inside + outside)
        })
    }

    /// Group composition (self o other)(x) = self(other(x)).
    pub fn compose(&self, other: &Diffeo) -> Result<Diffeo> {
        if self.grid() != other.grid() {
            return Err(Error::ShapeMismatch("diffeo composition across grids".into()));
        }
        let grid = self.grid();
        let vol = grid.volume();
        let pts = other.warped_points();
        let outer = self.displacement.evaluate(&pts);
        let inner_vals = other.displacement.values();
        let d = grid.dim();
        let mut samples = vec![0.0; d * vol];
        for idx in 0..vol {
            for c in 0..d {
                samples[c * vol + idx] = inner_vals[c * vol + idx] + outer[idx][c];
            }
        }
        Diffeo::new(SpectralField::from_samples(grid, d, &samples)?)
    }

    /// Pointwise inverse: returns psi with max_j |phi(psi(x_j)) - x_j| <= tol
    /// (torus distance), via a damped fixed-point start and Newton polish.
    pub fn invert(&self, tol: f64) -> Result<Diffeo> {
        self.invert_with_guess(tol, None)
    }

    /// Same as `invert`, warm-started from previous solution points if given.
    pub fn invert_with_guess(&self, tol: f64, guess: Option<&[Point]>) -> Result<Diffeo> {
        if !(tol > 0.0) {
            return Err(Error::InvalidParameter("inversion tolerance must be > 0".into()));
        }
        let grid = self.grid();
        let d = grid.dim();
        let vol = grid.volume();
        let f = &self.displacement;
        let mut dfs = Vec::with_capacity(d * d);
        for c in 0..d {
            let fc = f.component(c);
            for j in 0..d {
                dfs.push(fc.partial_derivative(j)?);
            }
        }
        const BUDGET: usize = 100;
        let mut worst_res = 0.0f64;
        let mut ys: Vec<Point> = Vec::with_capacity(vol);
        for idx in 0..vol {
            let x = grid.point_of_index(idx);
            let mut y = match guess {
                Some(g) => g[idx],
                None => x,
            };
            let mut res = f64::INFINITY;
            let mut converged = false;
            for it in 0..BUDGET {
                let fv = f.evaluate(&[y]);
                let mut r = [0.0f64; 2];
                let mut rnorm = 0.0f64;
                for c in 0..d {
                    r[c] = TorusGrid::wrap_signed(y[c] + fv[0][c] - x[c]);
                    rnorm = rnorm.max(r[c].abs());
                }
                res = rnorm;
                if rnorm <= tol {
                    converged = true;
                    break;
                }
                if it < 2 {
                    // damped fixed point: y <- y - (phi(y) - x)
                    for c in 0..d {
                        y[c] -= r[c];
                    }
                } else {
                    // Newton: y <- y - (I + df(y))^{-1} r
                    let step = match d {
                        1 => {
                            let j = 1.0 + dfs[0].evaluate(&[y])[0][0];
                            [r[0] / j, 0.0]
                        }
                        2 => {
                            let a = 1.0 + dfs[0].evaluate(&[y])[0][0];
                            let b = dfs[1].evaluate(&[y])[0][0];
                            let c2 = dfs[2].evaluate(&[y])[0][0];
                            let e = 1.0 + dfs[3].evaluate(&[y])[0][0];
                            let det = a * e - b * c2;
                            if det.abs() < 1e-14 {
                                return Err(Error::InversionFailed {
                                    residual: rnorm,
                                    iterations: it,
                                });
                            }
                            [(e * r[0] - b * r[1]) / det, (-c2 * r[0] + a * r[1]) / det]
                        }
                        _ => unreachable!(),
                    };
                    for c in 0..d {
                        y[c] -= step[c];
                    }
                }
                y = TorusGrid::wrap_point(y);
            }
            if !converged {
                return Err(Error::InversionFailed {
                    residual: res,
                    iterations: BUDGET,
                });
            }
            worst_res = worst_res.max(res);
            ys.push(y);
        }
        let _ = worst_res;
        let mut samples = vec![0.0; d * vol];
        for idx in 0..vol {
            let x = grid.point_of_index(idx);
            for c in 0..d {
                samples[c * vol + idx] = TorusGrid::wrap_signed(ys[idx][c] - x[c]);
            }
        }
        Diffeo::new(SpectralField::from_samples(grid, d, &samples)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    fn wave(grid: TorusGrid, amp: f64) -> Diffeo {
        let f = SpectralField::from_values_fn(grid, 1, |p, _| amp * (TAU * p[0]).sin());
        Diffeo::new(f).unwrap()
    }

    #[test]
    fn identity_and_translation_compose_trivially() {
        let g = grid1(64);
        let id = Diffeo::identity(g);
        let v = SpectralField::from_values_fn(g, 1, |p, _| (TAU * p[0]).sin());
        let w = id.compose_field(&v).unwrap();
        assert!((&w - &v).l2_norm() < 1e-12);

        let c = 0.3;
        let tr = Diffeo::translation(g, &[c]).unwrap();
        let shifted = tr.compose_field(&v).unwrap();
        let expect = SpectralField::from_values_fn(g, 1, |p, _| (TAU * (p[0] + c)).sin());
        assert!((&shifted - &expect).l2_norm() < 1e-12);
    }

    #[test]
    fn jacobian_of_wave() {
        let g = grid1(64);
        let phi = wave(g, 0.1);
        let jf = phi.jacobian_det();
        let expect = SpectralField::from_values_fn(g, 1, |p, _| 1.0 + 0.2 * PI * (TAU * p[0]).cos());
        assert!((&jf - &expect).l2_norm() < 1e-12);
        // identity -> constant 1
        let id = Diffeo::identity(g);
        let j1 = id.jacobian_det();
        assert!((&j1 - &SpectralField::constant(g, &[1.0])).l2_norm() < 1e-14);
    }

    #[test]
    fn jacobian_integrates_to_one() {
        let g = TorusGrid::new(2, 16).unwrap();
        let f = SpectralField::from_values_fn(g, 2, |p, c| {
            if c == 0 {
                0.03 * (TAU * p[0]).sin() * (TAU * p[1]).cos()
            } else {
                0.02 * (TAU * (p[0] + p[1])).cos()
            }
        });
        let phi = Diffeo::new(f).unwrap();
        let j = phi.jacobian_det();
        assert!((j.mean()[0] - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn rejects_degenerate_jacobian() {
        let g = grid1(64);
        let f = SpectralField::from_values_fn(g, 1, |p, _| 0.2 * (TAU * p[0]).sin());
        // 1 + 0.4 pi cos > 0 fails (0.4 pi > 1)
        assert!(Diffeo::new(f).is_err());
    }

    #[test]
    fn invert_identity_and_translation() {
        let g = grid1(64);
        let id = Diffeo::identity(g);
        let inv = id.invert(1e-12).unwrap();
        assert!(inv.displacement().l2_norm() < 1e-12);

        let tr = Diffeo::translation(g, &[0.25]).unwrap();
        let inv = tr.invert(1e-12).unwrap();
        let expect = SpectralField::constant(g, &[-0.25]);
        assert!((inv.displacement() - &expect).l2_norm() < 1e-11);
    }

    #[test]
    fn invert_wave_residual() {
        let g = grid1(128);
        let phi = wave(g, 0.1);
        let psi = phi.invert(1e-12).unwrap();
        // residual max |phi(psi(x_j)) - x_j|
        let pts = psi.warped_points();
        let imgs = phi.displacement().evaluate(&pts);
        let mut worst = 0.0f64;
        for (idx, (p, d)) in pts.iter().zip(imgs.iter()).enumerate() {
            let x = g.point_of_index(idx);
            worst = worst.max(TorusGrid::wrap_signed(p[0] + d[0] - x[0]).abs());
        }
        assert!(worst <= 1e-10, "residual {worst:.3e}");
    }

    #[test]
    fn compose_round_trip_through_inverse() {
        let g = grid1(128);
        let phi = wave(g, 0.05);
        let psi = phi.invert(1e-12).unwrap();
        let v = SpectralField::from_values_fn(g, 1, |p, _| {
            (TAU * p[0]).sin() + 0.3 * (2.0 * TAU * p[0]).cos()
        });
        let round = psi.compose_field(&phi.compose_field(&v).unwrap()).unwrap();
        assert!((&round - &v).l2_norm() <= 1e-6);
    }

    #[test]
    fn composition_is_linear_and_translations_are_isometries() {
        let g = grid1(64);
        let phi = wave(g, 0.08);
        let v1 = SpectralField::from_values_fn(g, 1, |p, _| (TAU * p[0]).sin());
        let v2 = SpectralField::from_values_fn(g, 1, |p, _| (3.0 * TAU * p[0]).cos());
        let lhs = phi
            .compose_field(&(&v1.scale(2.0) + &v2.scale(-0.7)))
            .unwrap();
        let rhs = &phi.compose_field(&v1).unwrap().scale(2.0)
            - &phi.compose_field(&v2).unwrap().scale(0.7);
        assert!((&lhs - &rhs).l2_norm() < 1e-11);

        let tr = Diffeo::translation(g, &[0.37]).unwrap();
        let w = tr.compose_field(&v1).unwrap();
        for q in [0.0, 1.0, 2.5] {
            assert!((w.sobolev_norm(q).unwrap() - v1.sobolev_norm(q).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn tail_energy_small_for_smooth_warp() {
        let g = grid1(64);
        let phi = wave(g, 0.02);
        let v = SpectralField::from_values_fn(g, 1, |p, _| (TAU * p[0]).sin());
        let tail = phi.composition_tail_energy(&v).unwrap();
        assert!(tail < 1e-12, "tail {tail:.3e}");
    }
}
