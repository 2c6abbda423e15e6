//! Spectral calculus on a surface of revolution for a single azimuthal mode.

use crate::error::{Error, Result};
use crate::geometry::CurveGrid;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Which boundary component of the domain a surface is.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Surface {
    Outer,
    Inner,
}

impl Surface {
    /// +1 on the outer surface, -1 on the inner one.
    pub fn kappa(self) -> f64 {
        match self {
            Surface::Outer => 1.0,
            Surface::Inner => -1.0,
        }
    }

    /// Side of the domain relative to the stored normal: -1 when the normal
    /// points out of the domain.
    pub fn side(self) -> f64 {
        -self.kappa()
    }
}

/// Per-node (tau, phi) components of a tangential density for mode `ell`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentialField {
    pub ut: Vec<Complex64>,
    pub uphi: Vec<Complex64>,
    pub ell: i32,
}

#[derive(Debug, Clone)]
pub struct SpectralOperators {
    pub n: usize,
    pub ell: i32,
    pub d: DMatrix<f64>,
    pub lap: DMatrix<f64>,
    pub w: DVector<f64>,
    lap0_inv: DMatrix<f64>,
}

/// Fourier differentiation matrix on n equispaced nodes of a period-L curve.
pub fn diff_matrix(n: usize, length: f64) -> DMatrix<f64> {
    let scale = 2.0 * PI / length;
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            0.0
        } else {
            let m = j as f64 - k as f64;
            let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            let x = m * PI / n as f64;
            if n % 2 == 0 {
                0.5 * sign / x.tan() * scale
            } else {
                0.5 * sign / x.sin() * scale
            }
        }
    })
}

/// Fourier second-derivative matrix (keeps the Nyquist mode, unlike D^2).
pub fn second_diff_matrix(n: usize, length: f64) -> DMatrix<f64> {
    let scale = (2.0 * PI / length).powi(2);
    let h = 2.0 * PI / n as f64;
    DMatrix::from_fn(n, n, |j, k| {
        if j == k {
            if n % 2 == 0 {
                (-PI * PI / (3.0 * h * h) - 1.0 / 6.0) * scale
            } else {
                (-PI * PI / (3.0 * h * h) + 1.0 / 12.0) * scale
            }
        } else {
            let m = j as f64 - k as f64;
            let sign = if (j + k) % 2 == 0 { 1.0 } else { -1.0 };
            let sn = (0.5 * m * h).sin();
            if n % 2 == 0 {
                -0.5 * sign / (sn * sn) * scale
            } else {
                -0.5 * sign * (0.5 * m * h).cos() / (sn * sn) * scale
            }
        }
    })
}

fn mul_real(a: &DMatrix<f64>, x: &[Complex64]) -> Vec<Complex64> {
    let n = a.nrows();
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for j in 0..n {
        let mut acc = Complex64::new(0.0, 0.0);
        for k in 0..a.ncols() {
            acc += x[k] * a[(j, k)];
        }
        out[j] = acc;
    }
    out
}

impl SpectralOperators {
    pub fn new(grid: &CurveGrid, ell: i32) -> Result<Self> {
        let n = grid.n;
        let d = diff_matrix(n, grid.length);
        let mut lap = second_diff_matrix(n, grid.length);
        let l2 = (ell as f64).powi(2);
        for j in 0..n {
            let c = grid.dr[j] / grid.r[j];
            for k in 0..n {
                lap[(j, k)] += c * d[(j, k)];
            }
            lap[(j, j)] -= l2 / (grid.r[j] * grid.r[j]);
        }
        let h = grid.h();
        let w = DVector::from_fn(n, |j, _| h * 2.0 * PI * grid.r[j]);
        let mut lap0 = lap.clone();
        if ell == 0 {
            for j in 0..n {
                for k in 0..n {
                    lap0[(j, k)] += w[k];
                }
            }
        }
        let lap0_inv = lap0
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Geometry("surface Laplacian factorization failed".into()))?;
        Ok(Self { n, ell, d, lap, w, lap0_inv })
    }

    pub fn apply_d(&self, x: &[Complex64]) -> Vec<Complex64> {
        mul_real(&self.d, x)
    }

    pub fn apply_lap(&self, x: &[Complex64]) -> Vec<Complex64> {
        mul_real(&self.lap, x)
    }

    /// Solves Lap0 x = f (the rank-one corrected system for mode 0).
    pub fn solve_lap0(&self, f: &[Complex64]) -> Vec<Complex64> {
        mul_real(&self.lap0_inv, f)
    }

    pub fn lap0_inverse(&self) -> &DMatrix<f64> {
        &self.lap0_inv
    }

    /// Surface integral of a nodal function.
    pub fn integrate(&self, f: &[Complex64]) -> Complex64 {
        f.iter().zip(self.w.iter()).map(|(a, b)| a * b).sum()
    }

    /// Real map sigma -> g with u^tau = i lambda g, u^phi = -kappa lambda g.
    pub fn density_map(&self, grid: &CurveGrid, which: Surface) -> DMatrix<f64> {
        let mut g = &self.d * &self.lap0_inv;
        if self.ell != 0 {
            let c = which.kappa() * self.ell as f64;
            for j in 0..self.n {
                for k in 0..self.n {
                    g[(j, k)] += c / grid.r[j] * self.lap0_inv[(j, k)];
                }
            }
        }
        g
    }
}

pub fn build_spectral_ops(grid: &CurveGrid) -> Result<SpectralOperators> {
    SpectralOperators::new(grid, 0)
}

fn inf_norm(f: &[Complex64]) -> f64 {
    f.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

fn project_mean_zero(ops: &SpectralOperators, f: &[Complex64]) -> Result<Vec<Complex64>> {
    if ops.ell != 0 {
        return Ok(f.to_vec());
    }
    let area: f64 = ops.w.sum();
    let mean = ops.integrate(f) / area;
    let scale = inf_norm(f);
    if scale > 0.0 && mean.norm() / scale > 1e-8 {
        return Err(Error::Contract(format!(
            "input is not mean-zero (relative mean {:.3e})",
            mean.norm() / scale
        )));
    }
    Ok(f.iter().map(|v| v - mean).collect())
}

/// Mean-zero solution of Lap rho = f.
pub fn invert_laplace_beltrami(ops: &SpectralOperators, f: &[Complex64]) -> Result<Vec<Complex64>> {
    let f = project_mean_zero(ops, f)?;
    Ok(ops.solve_lap0(&f))
}

pub fn harmonic_field(grid: &CurveGrid, which: Surface) -> TangentialField {
    let i = Complex64::new(0.0, which.kappa());
    TangentialField {
        ut: grid.r.iter().map(|&r| Complex64::new(1.0 / r, 0.0)).collect(),
        uphi: grid.r.iter().map(|&r| i / r).collect(),
        ell: 0,
    }
}

pub fn build_m_density(
    ops: &SpectralOperators,
    grid: &CurveGrid,
    sigma: &[Complex64],
    lambda: f64,
    coeff: Complex64,
    which: Surface,
) -> Result<TangentialField> {
    let beta = invert_laplace_beltrami(ops, sigma)?;
    let mut g = ops.apply_d(&beta);
    let kappa = which.kappa();
    if ops.ell != 0 {
        for j in 0..grid.n {
            g[j] += beta[j] * (kappa * ops.ell as f64 / grid.r[j]);
        }
    }
    let il = Complex64::new(0.0, lambda);
    let mut ut: Vec<Complex64> = g.iter().map(|v| il * v).collect();
    let mut uphi: Vec<Complex64> = g.iter().map(|v| v * (-kappa * lambda)).collect();
    if ops.ell == 0 && coeff != Complex64::new(0.0, 0.0) {
        let h = harmonic_field(grid, which);
        for j in 0..grid.n {
            ut[j] += coeff * h.ut[j];
            uphi[j] += coeff * h.uphi[j];
        }
    }
    Ok(TangentialField { ut, uphi, ell: ops.ell })
}

/// Discrete surface divergence (1/r) D(r u^tau) + (i ell / r) u^phi.
pub fn surface_divergence(ops: &SpectralOperators, grid: &CurveGrid, u: &TangentialField) -> Vec<Complex64> {
    let ru: Vec<Complex64> = u.ut.iter().zip(&grid.r).map(|(a, r)| a * r).collect();
    let d = ops.apply_d(&ru);
    (0..grid.n)
        .map(|j| (d[j] + Complex64::new(0.0, u.ell as f64) * u.uphi[j]) / grid.r[j])
        .collect()
}
