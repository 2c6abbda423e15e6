//! Exact axisymmetric Taylor states built from a Grad-Shafranov flux
//! function in a Bessel/trigonometric basis, shaped to a Miller boundary.

use crate::error::{Error, Result};
use crate::geometry::{FourierCurve, GeneratingCurve, MillerCurve};
use crate::specfun::bessel_jy01;
use nalgebra::{Matrix2, SMatrix, SVector, Vector2};

/// psi and its partial derivatives at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PsiDerivs {
    pub psi: f64,
    pub r: f64,
    pub z: f64,
    pub rr: f64,
    pub zz: f64,
    pub rz: f64,
}

impl PsiDerivs {
    fn axpy(&mut self, c: f64, o: &PsiDerivs) {
        self.psi += c * o.psi;
        self.r += c * o.r;
        self.z += c * o.z;
        self.rr += c * o.rr;
        self.zz += c * o.zz;
        self.rz += c * o.rz;
    }
}

/// Exact state: psi = psi_0 + sum c_i psi_i with shaping parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticState {
    pub c: [f64; 6],
    pub lambda: f64,
    pub eps: f64,
    pub kappa: f64,
    pub delta: f64,
    pub r0: f64,
    /// Max-norm residual of the seven shaping conditions.
    pub residual: f64,
}

/// r x J1(k r) or r x Y1(k r) times cos(c z), with derivatives.
fn bessel_term(first: bool, k: f64, c: f64, r: f64, z: f64) -> Result<PsiDerivs> {
    let b = bessel_jy01(k * r)?;
    let (f0, f1) = if first { (b.j0, b.j1) } else { (b.y0, b.y1) };
    let (sz, cz) = (c * z).sin_cos();
    let p = r * f1;
    let pr = k * r * f0;
    let prr = k * f0 - k * k * r * f1;
    Ok(PsiDerivs { psi: p * cz, r: pr * cz, z: -p * c * sz, rr: prr * cz, zz: -p * c * c * cz, rz: -pr * c * sz })
}

/// The six basis functions psi_0..psi_5.
pub fn basis(lambda: f64, c6: f64, r: f64, z: f64) -> Result<[PsiDerivs; 6]> {
    if !(r > 0.0) {
        return Err(Error::Domain(format!("flux function needs r > 0, got {r}")));
    }
    let mu2 = lambda * lambda - c6 * c6;
    if !(mu2 > 0.0) {
        return Err(Error::Domain(format!("lambda^2 = {} must exceed c6^2 = {}", lambda * lambda, c6 * c6)));
    }
    let mu = mu2.sqrt();
    let rho = r.hypot(z);
    let (s, c) = (lambda * rho).sin_cos();
    let l2 = lambda * lambda;
    let p4 = PsiDerivs {
        psi: c,
        r: -lambda * s * r / rho,
        z: -lambda * s * z / rho,
        rr: -l2 * c * r * r / (rho * rho) - lambda * s * (1.0 / rho - r * r / rho.powi(3)),
        zz: -l2 * c * z * z / (rho * rho) - lambda * s * (1.0 / rho - z * z / rho.powi(3)),
        rz: -l2 * c * r * z / (rho * rho) + lambda * s * r * z / rho.powi(3),
    };
    let (s5, c5) = (lambda * z).sin_cos();
    let p5 = PsiDerivs { psi: c5, r: 0.0, z: -lambda * s5, rr: 0.0, zz: -l2 * c5, rz: 0.0 };
    Ok([
        bessel_term(true, lambda, 0.0, r, z)?,
        bessel_term(false, lambda, 0.0, r, z)?,
        bessel_term(true, mu, c6, r, z)?,
        bessel_term(false, mu, c6, r, z)?,
        p4,
        p5,
    ])
}

impl AnalyticState {
    pub fn alpha(&self) -> f64 {
        self.delta.asin()
    }

    pub fn psi(&self, r: f64, z: f64) -> Result<PsiDerivs> {
        let b = basis(self.lambda, self.c[5], r, z)?;
        let mut out = b[0];
        for i in 0..5 {
            out.axpy(self.c[i], &b[i + 1]);
        }
        Ok(out)
    }

    /// Cylindrical (B_r, B_phi, B_z).
    pub fn field(&self, r: f64, z: f64) -> Result<[f64; 3]> {
        let p = self.psi(r, z)?;
        Ok([-p.z / r, self.lambda * p.psi / r, p.r / r])
    }

    /// Toroidal flux (1/lambda) times the circulation of B along the
    /// sampled closed curve, by the trapezoidal rule in arc length.
    pub fn toroidal_flux(&self, grid: &crate::geometry::CurveGrid) -> Result<f64> {
        let mut acc = 0.0;
        for j in 0..grid.n {
            let b = self.field(grid.r[j], grid.z[j])?;
            acc += b[0] * grid.dr[j] + b[2] * grid.dz[j];
        }
        Ok(acc * grid.h() / self.lambda)
    }

    pub fn miller_curve(&self) -> Result<MillerCurve> {
        MillerCurve::new(self.r0, self.eps, self.kappa, self.delta)
    }

    /// Magnetic axis: the maximum of psi on z = 0 between the equatorial
    /// boundary points.
    pub fn magnetic_axis(&self) -> Result<f64> {
        let (lo, hi) = (self.r0 - self.eps, self.r0 + self.eps);
        let m = 400;
        let mut best = (f64::NEG_INFINITY, lo);
        for k in 1..m {
            let r = lo + (hi - lo) * k as f64 / m as f64;
            let p = self.psi(r, 0.0)?.psi;
            if p > best.0 {
                best = (p, r);
            }
        }
        let mut r = best.1;
        for _ in 0..50 {
            let p = self.psi(r, 0.0)?;
            let step = p.r / p.rr;
            r -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        Ok(r)
    }

    /// Outboard radius on z = 0 where psi = level.
    pub fn equatorial_radius(&self, level: f64) -> Result<f64> {
        let axis = self.magnetic_axis()?;
        self.ray_root(level, (axis, 0.0), (1.0, 0.0), self.eps * 2.0).map(|rho| axis + rho)
    }

    fn ray_root(&self, level: f64, origin: (f64, f64), dir: (f64, f64), reach: f64) -> Result<f64> {
        let f = |rho: f64| -> Result<(f64, f64)> {
            let (r, z) = (origin.0 + rho * dir.0, origin.1 + rho * dir.1);
            if !(r > 0.0) {
                return Err(Error::Topology(format!("level set {level} not closed before reaching the axis")));
            }
            let p = self.psi(r, z)?;
            Ok((p.psi - level, p.r * dir.0 + p.z * dir.1))
        };
        let steps = 400;
        let mut a = 0.0;
        let (fa, _) = f(a)?;
        if fa <= 0.0 {
            return Err(Error::Topology(format!("level {level} is not below the axis value")));
        }
        let mut b = None;
        for k in 1..=steps {
            let x = reach * k as f64 / steps as f64;
            if f(x)?.0 <= 0.0 {
                b = Some(x);
                break;
            }
            a = x;
        }
        let mut b = b.ok_or_else(|| Error::Topology(format!("level set {level} not found along a ray")))?;
        let mut x = 0.5 * (a + b);
        for _ in 0..200 {
            let (fx, dfx) = f(x)?;
            if fx == 0.0 {
                return Ok(x);
            }
            if fx > 0.0 {
                a = x;
            } else {
                b = x;
            }
            let newton = x - fx / dfx;
            let next = if newton >= a && newton <= b { newton } else { 0.5 * (a + b) };
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
                return Ok(next);
            }
            x = next;
        }
        Ok(x)
    }

    /// Closed curve psi = level, sampled on rays from the magnetic axis
    /// through `m` equispaced points of the Miller curve and interpolated
    /// by a trigonometric series.
    pub fn trace_level_set(&self, level: f64, m: usize) -> Result<FourierCurve> {
        let axis = self.magnetic_axis()?;
        let miller = self.miller_curve()?;
        let reach = 4.0 * self.eps * self.kappa.max(1.0);
        let mut pts = Vec::with_capacity(m);
        for j in 0..m {
            let t = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            let p = miller.eval(t);
            let (dr, dz) = (p.r - axis, p.z);
            let len = dr.hypot(dz);
            let dir = (dr / len, dz / len);
            let rho = self.ray_root(level, (axis, 0.0), dir, reach)?;
            let q = (axis + rho * dir.0, rho * dir.1);
            let res = (self.psi(q.0, q.1)?.psi - level).abs();
            if res > 1e-10 {
                return Err(Error::Accuracy { what: format!("level-set point at t = {t}"), achieved: res });
            }
            pts.push(q);
        }
        FourierCurve::from_points(&pts)
    }
}

const HALF_LEVEL: f64 = 0.5;

/// Level of the inner boundary of the shell example.
pub fn shell_inner_level() -> f64 {
    HALF_LEVEL
}

/// Rows of the seven shaping conditions: row k holds (basis coefficient
/// vector of length 6, for psi_0..psi_5).
fn constraint_rows(lambda: f64, c6: f64, eps: f64, kappa: f64, delta: f64, r0: f64) -> Result<[[f64; 6]; 7]> {
    let alpha = delta.asin();
    let n1 = -(1.0 + alpha).powi(2) / (eps * kappa * kappa);
    let n2 = (1.0 - alpha).powi(2) / (eps * kappa * kappa);
    let n3 = kappa / (eps * alpha.cos().powi(2));
    let o = basis(lambda, c6, r0 + eps, 0.0)?;
    let i = basis(lambda, c6, r0 - eps, 0.0)?;
    let t = basis(lambda, c6, r0 - delta * eps, -kappa * eps)?;
    let mut rows = [[0.0; 6]; 7];
    for k in 0..6 {
        rows[0][k] = o[k].psi;
        rows[1][k] = i[k].psi;
        rows[2][k] = t[k].psi;
        rows[3][k] = t[k].r;
        rows[4][k] = o[k].zz + n1 * o[k].r;
        rows[5][k] = i[k].zz + n2 * i[k].r;
        rows[6][k] = t[k].rr + n3 * t[k].z;
    }
    Ok(rows)
}

/// For fixed (lambda, c6): c1..c5 from the first five conditions, and the
/// remaining two residuals.
fn reduced(lambda: f64, c6: f64, eps: f64, kappa: f64, delta: f64, r0: f64) -> Result<([f64; 5], Vector2<f64>, f64)> {
    let rows = constraint_rows(lambda, c6, eps, kappa, delta, r0)?;
    let a = SMatrix::<f64, 5, 5>::from_fn(|i, j| rows[i][j + 1]);
    let b = SVector::<f64, 5>::from_fn(|i, _| -rows[i][0]);
    let c = a.lu().solve(&b).ok_or_else(|| Error::Accuracy { what: "shaping system singular".into(), achieved: f64::NAN })?;
    let eval = |k: usize| rows[k][0] + (0..5).map(|j| rows[k][j + 1] * c[j]).sum::<f64>();
    let full = (0..7).map(|k| eval(k).abs()).fold(0.0, f64::max);
    Ok(([c[0], c[1], c[2], c[3], c[4]], Vector2::new(eval(5), eval(6)), full))
}

/// Solves the seven shaping conditions by Newton iteration on (lambda, c6)
/// with c1..c5 eliminated linearly, starting from `guess = (lambda, c6)`.
pub fn fit_shape_constraints(eps: f64, kappa: f64, delta: f64, r0: f64, guess: (f64, f64)) -> Result<AnalyticState> {
    MillerCurve::new(r0, eps, kappa, delta)?;
    let (mut lam, mut c6) = guess;
    let res = |l: f64, c: f64| reduced(l, c, eps, kappa, delta, r0).map(|v| v.1);
    let mut f = res(lam, c6)?;
    for _ in 0..100 {
        let h = 1e-6;
        let jl = (res(lam + h, c6)? - res(lam - h, c6)?) / (2.0 * h);
        let jc = (res(lam, c6 + h)? - res(lam, c6 - h)?) / (2.0 * h);
        let jac = Matrix2::from_columns(&[jl, jc]);
        let step = jac.lu().solve(&(-f)).ok_or_else(|| Error::Accuracy {
            what: "singular shaping Jacobian".into(),
            achieved: f.amax(),
        })?;
        let mut t = 1.0;
        loop {
            let (nl, nc) = (lam + t * step[0], c6 + t * step[1]);
            match res(nl, nc) {
                Ok(nf) if nf.amax() < f.amax() || t < 1e-3 => {
                    lam = nl;
                    c6 = nc;
                    f = nf;
                    break;
                }
                _ if t < 1e-3 => {
                    return Err(Error::Accuracy { what: "shaping Newton stagnated".into(), achieved: f.amax() });
                }
                _ => t *= 0.5,
            }
        }
        if step.amax() < 1e-14 * lam.abs() {
            break;
        }
    }
    let (c, _, residual) = reduced(lam, c6, eps, kappa, delta, r0)?;
    if residual > 1e-11 {
        return Err(Error::Accuracy { what: "shaping conditions".into(), achieved: residual });
    }
    Ok(AnalyticState { c: [c[0], c[1], c[2], c[3], c[4], c6], lambda: lam, eps, kappa, delta, r0, residual })
}

/// The shaped low-aspect-ratio configuration (eps 0.95, kappa 2, delta 0.3).
pub fn example_state() -> Result<AnalyticState> {
    fit_shape_constraints(0.95, 2.0, 0.3, 1.0, (2.28, 1.27))
}


#[cfg(test)]
mod fd_tests {
    use super::*;

    #[test]
    fn partials_match_differences() {
        let s = example_state().unwrap();
        let h = 1e-5;
        for &(r, z) in &[(1.2, 0.25), (0.4, -1.0), (1.7, 0.3)] {
            let p = s.psi(r, z).unwrap();
            let f = |r: f64, z: f64| s.psi(r, z).unwrap();
            let pr = (f(r + h, z).psi - f(r - h, z).psi) / (2.0 * h);
            let pz = (f(r, z + h).psi - f(r, z - h).psi) / (2.0 * h);
            let prr = (f(r + h, z).r - f(r - h, z).r) / (2.0 * h);
            let pzz = (f(r, z + h).z - f(r, z - h).z) / (2.0 * h);
            let prz = (f(r, z + h).r - f(r, z - h).r) / (2.0 * h);
            for d in [p.r - pr, p.z - pz, p.rr - prr, p.zz - pzz, p.rz - prz] {
                assert!(d.abs() < 1e-8);
            }
        }
    }
}
