#![allow(dead_code)]

use nalgebra::DVector;
use num_complex::Complex64;
use num_complex::Complex64 as C64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use taylor_core::beltrami_solver::{unpack_solution, DebyeSolution, Discretization, Layout};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                let (mut q0, mut q1) = (1.0, t);
                for k in 2..=n {
                    let q2 = ((2 * k - 1) as f64 * t * q1 - (k - 1) as f64 * q0) / k as f64;
                    q0 = q1;
                    q1 = q2;
                }
                let dq = n as f64 * (t * q1 - q0) / (t * t - 1.0);
                x[i] = t;
                w[i] = 2.0 / ((1.0 - t * t) * dq * dq);
                break;
            }
        }
    }
    (x, w)
}

fn gl_panel(f: &dyn Fn(f64) -> Vec<Complex64>, a: f64, b: f64, x: &[f64], w: &[f64], m: usize) -> Vec<Complex64> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut acc = vec![Complex64::new(0.0, 0.0); m];
    for (xi, wi) in x.iter().zip(w) {
        let v = f(c + h * xi);
        for k in 0..m {
            acc[k] += v[k] * (wi * h);
        }
    }
    acc
}

/// Adaptive 20-point Gauss-Legendre with panel halving, absolute tolerance.
pub fn adaptive_gl(f: &dyn Fn(f64) -> Vec<Complex64>, a: f64, b: f64, tol: f64, m: usize) -> Vec<Complex64> {
    let (x, w) = gauss_legendre(20);
    let mut total = vec![Complex64::new(0.0, 0.0); m];
    let mut stack = vec![(a, b, gl_panel(f, a, b, &x, &w, m))];
    while let Some((lo, hi, whole)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let l = gl_panel(f, lo, mid, &x, &w, m);
        let r = gl_panel(f, mid, hi, &x, &w, m);
        let err = (0..m).map(|k| (l[k] + r[k] - whole[k]).norm()).fold(0.0, f64::max);
        if err < tol * (hi - lo) / (b - a) || hi - lo < 1e-12 {
            for k in 0..m {
                total[k] += l[k] + r[k];
            }
        } else {
            stack.push((lo, mid, l));
            stack.push((mid, hi, r));
        }
    }
    total
}

/// Direct azimuthal quadrature of the full kernel: returns
/// [g, g_cos, g_sin, dg/dr, dg/dz, dgcos/dr, dgcos/dz, dgsin/dr, dgsin/dz].
pub fn direct_modal(r: f64, z: f64, rs: f64, zs: f64, lambda: f64, ell: i32) -> Vec<Complex64> {
    let l = ell as f64;
    let f = move |th: f64| {
        let rad = ((r - rs).powi(2) + (z - zs).powi(2) + 2.0 * r * rs * (1.0 - th.cos())).sqrt();
        let e = Complex64::new(0.0, lambda * rad).exp();
        let k = e / (4.0 * PI * rad);
        let kp = e * Complex64::new(-1.0, lambda * rad) / (4.0 * PI * rad * rad);
        let dr = kp * ((r - rs * th.cos()) / rad);
        let dz = kp * ((z - zs) / rad);
        let (c, cc, ss) = ((l * th).cos(), th.cos() * (l * th).cos(), th.sin() * (l * th).sin());
        let mi = Complex64::new(0.0, -1.0);
        vec![k * c, k * cc, mi * k * ss, dr * c, dz * c, dr * cc, dz * cc, mi * dr * ss, mi * dz * ss]
    };
    adaptive_gl(&f, 0.0, PI, 1e-13, 9).into_iter().map(|v| v / PI).collect()
}

/// Random smooth unknown vector: a few low Fourier modes per boundary (with
/// zero surface mean for mode 0) plus harmonic coefficients when the layout
/// carries them.
pub fn random_unknowns(disc: &Discretization, layout: &Layout, rng: &mut ChaCha8Rng) -> DVector<C64> {
    let mut x = DVector::zeros(layout.cols);
    for b in 0..disc.genus() {
        let n = layout.sigma_len[b];
        for k in 1..6 {
            let (a, c) = (
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            );
            for j in 0..n {
                let t = 2.0 * PI * (k * j) as f64 / n as f64;
                x[layout.sigma_offsets[b] + j] += a * t.cos() + c * t.sin();
            }
        }
        if disc.ell == 0 {
            let w = &disc.ops(b).w;
            let o = layout.sigma_offsets[b];
            let mean = (0..n).map(|j| x[o + j] * w[j]).sum::<C64>() / w.sum();
            (0..n).for_each(|j| x[o + j] -= mean);
        }
    }
    if let Some(c) = layout.coeff_offset {
        for b in 0..disc.genus() {
            x[c + b] = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
    }
    x
}

/// Unsolved solution built from random unknowns, for representation checks.
pub fn random_solution(disc: &Discretization, lambda: f64, rng: &mut ChaCha8Rng) -> DebyeSolution {
    let layout = Layout::new(disc, disc.ell == 0);
    let x = random_unknowns(disc, &layout, rng);
    let (sigma, coeffs, densities) = unpack_solution(disc, &layout, &x, lambda);
    DebyeSolution {
        lambda,
        ell: disc.ell,
        boundaries: disc.boundaries(),
        sigma,
        coeffs,
        densities,
        phi_tor: 0.0,
        phi_pol: None,
        condition: f64::NAN,
        residual: f64::NAN,
        flux_achieved: vec![],
        unknowns: x,
    }
}
