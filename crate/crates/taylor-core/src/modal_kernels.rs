//! Azimuthal Fourier modes of the Helmholtz kernel e^{i lambda R}/(4 pi R)
//! between two circles of revolution, with target gradients.

use crate::error::{Error, Result};
use crate::quad;
use crate::specfun::legendre_q_halves_delta;
use num_complex::Complex64;
use std::f64::consts::PI;

pub const KERNEL_TOL: f64 = 1e-12;
const OSCILLATION_CAP: f64 = 200.0;
const FOUR_PI: f64 = 4.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelArgs {
    pub r: f64,
    pub z: f64,
    pub rs: f64,
    pub zs: f64,
    pub lambda: f64,
    pub ell: i32,
}

impl KernelArgs {
    pub fn new(r: f64, z: f64, rs: f64, zs: f64, lambda: f64, ell: i32) -> Self {
        Self { r, z, rs, zs, lambda, ell }
    }

    fn d2(&self) -> f64 {
        (self.r - self.rs).powi(2) + (self.z - self.zs).powi(2)
    }

    /// chi - 1, computed without cancellation.
    pub fn chi_minus_one(&self) -> f64 {
        self.d2() / (2.0 * self.r * self.rs)
    }
}

/// Values of g, g^cos, g^sin and their (d/dr, d/dz) target gradients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModalKernelValue {
    pub g: Complex64,
    pub g_cos: Complex64,
    pub g_sin: Complex64,
    pub dg: [Complex64; 2],
    pub dg_cos: [Complex64; 2],
    pub dg_sin: [Complex64; 2],
}

/// (e^{i lambda R} - 1)/(4 pi R) by its Taylor series; valid for lambda R < 0.1.
pub fn near_diagonal_smooth(lambda: f64, r: f64) -> Complex64 {
    let x = Complex64::new(0.0, lambda * r);
    let mut term = Complex64::new(1.0, 0.0);
    let mut sum = term;
    for k in 1..30 {
        term *= x / (k as f64 + 1.0);
        sum += term;
        if term.norm() < 1e-16 {
            break;
        }
    }
    Complex64::new(0.0, lambda / FOUR_PI) * sum
}

/// F(R) = (e^{i lambda R} - 1)/(4 pi R) and F'(R).
#[inline]
fn smooth_part(lambda: f64, r: f64) -> (Complex64, Complex64) {
    let x = lambda * r;
    let f = if x < 0.1 {
        near_diagonal_smooth(lambda, r)
    } else {
        let s = x.sin();
        let half = (0.5 * x).sin();
        Complex64::new(-2.0 * half * half, s) / (FOUR_PI * r)
    };
    let fp = if x < 0.25 {
        // F'(R) = (i lambda)^2/(4 pi) sum_k k (i lambda R)^{k-1} / (k+1)!
        let ix = Complex64::new(0.0, x);
        let mut pw = Complex64::new(1.0, 0.0);
        let mut fact = 2.0;
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 1..30 {
            let t = pw * (k as f64 / fact);
            sum += t;
            if t.norm() < 1e-17 {
                break;
            }
            pw *= ix;
            fact *= k as f64 + 2.0;
        }
        -lambda * lambda / FOUR_PI * sum
    } else {
        let e = Complex64::new(0.0, x).exp();
        (Complex64::new(0.0, x) * e - (e - 1.0)) / (FOUR_PI * r * r)
    };
    (f, fp)
}

/// Modal kernels g_h for the three harmonics `hs`, each with its target
/// gradient: out[k] = [g, dg/dr, dg/dz].
fn harmonics(a: &KernelArgs, hs: [usize; 3]) -> Result<[[Complex64; 3]; 3]> {
    let delta = a.chi_minus_one();
    if !(delta > 1e-14) {
        return Err(Error::NearDiagonal(delta));
    }
    if !(a.r > 0.0 && a.rs > 0.0) {
        return Err(Error::Domain(format!("kernel radii must be positive (r = {}, r' = {})", a.r, a.rs)));
    }
    let d2 = a.d2();
    let rr = a.r * a.rs;
    let rmax = (d2 + 4.0 * rr).sqrt();
    if a.lambda * rmax > OSCILLATION_CAP {
        return Err(Error::Accuracy {
            what: format!("lambda * R = {} exceeds the oscillation budget", a.lambda * rmax),
            achieved: f64::NAN,
        });
    }
    let dz = a.z - a.zs;
    let lambda = a.lambda;
    let needs_static = hs.iter().any(|&h| h >= 2);
    let dynamic = lambda != 0.0;
    let mut out = [[Complex64::new(0.0, 0.0); 3]; 3];
    if dynamic || needs_static {
        let integrand = |th: f64| {
            let sh = (0.5 * th).sin();
            let r2 = d2 + 4.0 * rr * sh * sh;
            let rad = r2.sqrt();
            let cth = th.cos();
            let drr = (a.r - a.rs * cth) / rad;
            let dzr = dz / rad;
            let (f, fp) = if dynamic {
                smooth_part(lambda, rad)
            } else {
                (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
            };
            let mut v = [Complex64::new(0.0, 0.0); 9];
            for (k, &h) in hs.iter().enumerate() {
                let c = (h as f64 * th).cos();
                let mut val = f * c;
                let mut dv = fp * c;
                if h >= 2 {
                    let w = (c - 1.0) / (FOUR_PI * rad);
                    val += w;
                    dv -= w / rad;
                }
                v[3 * k] = val;
                v[3 * k + 1] = dv * drr;
                v[3 * k + 2] = dv * dzr;
            }
            v
        };
        let v = quad::integrate(integrand, 0.0, PI, KERNEL_TOL * PI)?;
        for k in 0..3 {
            for c in 0..3 {
                out[k][c] = v[3 * k + c] / PI;
            }
        }
    }
    let chi = 1.0 + delta;
    let q = legendre_q_halves_delta(chi, delta);
    let pref = 1.0 / (4.0 * PI * PI * rr.sqrt());
    let dchi_dr = 1.0 / a.rs - chi / a.r;
    let dchi_dz = dz / rr;
    for (k, &h) in hs.iter().enumerate() {
        let (qv, dq) = if h == 1 { (q.qp, q.dqp) } else { (q.qm, q.dqm) };
        out[k][0] += pref * qv;
        out[k][1] += pref * (dq * dchi_dr - qv / (2.0 * a.r));
        out[k][2] += pref * dq * dchi_dz;
    }
    Ok(out)
}

/// All three kernel families with gradients, sharing one quadrature.
pub fn modal_family(a: &KernelArgs) -> Result<ModalKernelValue> {
    let l = a.ell.unsigned_abs() as usize;
    let hs = if l == 0 { [1, 0, 1] } else { [l - 1, l, l + 1] };
    let v = harmonics(a, hs)?;
    let half = Complex64::new(0.5, 0.0);
    let inv2i = Complex64::new(0.0, -0.5);
    let sgn = if a.ell < 0 { -1.0 } else { 1.0 };
    let zero = Complex64::new(0.0, 0.0);
    let (g_sin, dg_sin) = if l == 0 {
        (zero, [zero, zero])
    } else {
        (
            inv2i * (v[0][0] - v[2][0]) * sgn,
            [inv2i * (v[0][1] - v[2][1]) * sgn, inv2i * (v[0][2] - v[2][2]) * sgn],
        )
    };
    Ok(ModalKernelValue {
        g: v[1][0],
        g_cos: half * (v[0][0] + v[2][0]),
        g_sin,
        dg: [v[1][1], v[1][2]],
        dg_cos: [half * (v[0][1] + v[2][1]), half * (v[0][2] + v[2][2])],
        dg_sin,
    })
}

pub fn modal_g(a: &KernelArgs) -> Result<Complex64> {
    Ok(modal_family(a)?.g)
}

pub fn modal_trig(a: &KernelArgs) -> Result<(Complex64, Complex64)> {
    let v = modal_family(a)?;
    Ok((v.g_cos, v.g_sin))
}

/// Gradients (d/dr, d/dz) of g, g^cos, g^sin.
pub fn modal_grad(a: &KernelArgs) -> Result<[[Complex64; 2]; 3]> {
    let v = modal_family(a)?;
    Ok([v.dg, v.dg_cos, v.dg_sin])
}
