//! Complete elliptic integrals, half-integer Legendre functions of the second
//! kind, and Bessel functions of order 0 and 1.

use crate::error::{Error, Result};
use std::f64::consts::{FRAC_2_PI, PI};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EllipticPair {
    pub k: f64,
    pub e: f64,
}

/// K and E at modulus `t`, 0 <= t < 1.
pub fn ellip_ke(t: f64) -> Result<EllipticPair> {
    if !(0.0..1.0).contains(&t) {
        return Err(Error::Domain(format!("elliptic modulus {t} outside [0, 1)")));
    }
    Ok(ellip_ke_comp((1.0 - t) * (1.0 + t)))
}

/// K and E from the complementary parameter m1 = 1 - t^2, which keeps the
/// logarithmic end accurate when m1 is known without cancellation.
pub fn ellip_ke_comp(m1: f64) -> EllipticPair {
    debug_assert!(m1 > 0.0 && m1 <= 1.0);
    let kp = m1.sqrt();
    // first AGM step done by hand: E/K = a1^2 - sum_{n>=2} 2^{n-1} c_n^2
    let mut a = 0.5 * (1.0 + kp);
    let mut b = kp.sqrt();
    let mut sum = a * a;
    let mut pow = 1.0;
    for _ in 0..60 {
        let c = 0.5 * (a - b);
        pow *= 2.0;
        sum -= pow * c * c;
        let an = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = an;
        if c.abs() <= 1e-15 * a {
            break;
        }
    }
    let k = PI / (2.0 * a);
    EllipticPair { k, e: k * sum }
}

/// dK/dt and dE/dt.
pub fn ellip_ke_derivs(t: f64) -> Result<(f64, f64)> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Domain(format!("derivative modulus {t} outside (0, 1)")));
    }
    if t < 1e-4 {
        let t3 = t * t * t;
        return Ok((PI * t / 4.0 + 9.0 * PI * t3 / 32.0, -PI * t / 4.0 - 3.0 * PI * t3 / 32.0));
    }
    let m1 = (1.0 - t) * (1.0 + t);
    let p = ellip_ke_comp(m1);
    Ok(((p.e - m1 * p.k) / (t * m1), (p.e - p.k) / t))
}

/// Q_{-1/2}, Q_{1/2} and their chi-derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LegendreHalves {
    pub qm: f64,
    pub qp: f64,
    pub dqm: f64,
    pub dqp: f64,
}

pub fn legendre_q_halves(chi: f64) -> Result<(f64, f64)> {
    if !(chi > 1.0) {
        return Err(Error::Domain(format!("Legendre argument {chi} must exceed 1")));
    }
    let q = legendre_q_halves_delta(chi, chi - 1.0);
    Ok((q.qm, q.qp))
}

/// Same as [`legendre_q_halves`] with `delta = chi - 1` supplied by the caller
/// (usually computed as a squared distance to avoid cancellation).
pub fn legendre_q_halves_delta(chi: f64, delta: f64) -> LegendreHalves {
    let k2 = 2.0 / (2.0 + delta);
    let m1 = delta / (2.0 + delta);
    let k = k2.sqrt();
    let EllipticPair { k: kk, e: ee } = ellip_ke_comp(m1);
    let k3 = k2 * k;
    LegendreHalves {
        qm: k * kk,
        qp: chi * k * kk - 2.0 * ee / k,
        dqm: -ee / m1 * k3 / 4.0,
        dqp: 0.5 * k * kk - chi * k3 * ee / (4.0 * m1),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bessel01 {
    pub j0: f64,
    pub j1: f64,
    pub y0: f64,
    pub y1: f64,
}

/// J0, J1 (x >= 0).
pub fn bessel_j01(x: f64) -> Result<(f64, f64)> {
    if x < 0.0 {
        let (j0, j1) = bessel_j01(-x)?;
        return Ok((j0, -j1));
    }
    if x == 0.0 {
        return Ok((1.0, 0.0));
    }
    let b = bessel_jy01(x)?;
    Ok((b.j0, b.j1))
}

/// J0, J1, Y0, Y1 for x > 0.
pub fn bessel_jy01(x: f64) -> Result<Bessel01> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Bessel Y needs x > 0, got {x}")));
    }
    Ok(if x <= 2.0 {
        small_series(x)
    } else if x < 20.0 {
        miller_neumann(x)
    } else {
        hankel_asymptotic(x)
    })
}

fn small_series(x: f64) -> Bessel01 {
    let q = -0.25 * x * x;
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    // t_k = q^k / (k!)^2, u_k = q^k / (k! (k+1)!)
    let (mut t, mut u) = (1.0, 1.0);
    let (mut j0, mut j1) = (1.0, 1.0);
    let mut h = 0.0;
    let (mut s0, mut s1) = (0.0, 0.0);
    // s1 accumulates (psi(k+1) + psi(k+2)) u_k without the gamma parts
    s1 += (0.0 + 1.0) * u;
    for k in 1..40 {
        let kf = k as f64;
        t *= q / (kf * kf);
        u *= q / (kf * (kf + 1.0));
        h += 1.0 / kf;
        j0 += t;
        j1 += u;
        s0 += h * t;
        s1 += (2.0 * h + 1.0 / (kf + 1.0)) * u;
        if t.abs() < 1e-18 && u.abs() < 1e-18 {
            break;
        }
    }
    let half = 0.5 * x;
    j1 *= half;
    let y0 = FRAC_2_PI * (lg * j0 - s0);
    // psi(k+1) + psi(k+2) = 2H_k + 1/(k+1) - 2 gamma
    let y1 = FRAC_2_PI * (lg * j1 - 1.0 / x) - (half * s1 - 2.0 * EULER_GAMMA * j1) / PI
        - FRAC_2_PI * EULER_GAMMA * j1;
    Bessel01 { j0, j1, y0, y1 }
}

fn miller_neumann(x: f64) -> Bessel01 {
    let n = 2 * (((1.3 * x) as usize + 40) / 2);
    let mut j = vec![0.0; n + 2];
    j[n] = 1e-30;
    for m in (1..=n).rev() {
        j[m - 1] = (2.0 * m as f64 / x) * j[m] - j[m + 1];
        if j[m - 1].abs() > 1e250 {
            for v in j[m - 1..].iter_mut() {
                *v *= 1e-250;
            }
        }
    }
    let mut norm = j[0];
    for k in (2..=n).step_by(2) {
        norm += 2.0 * j[k];
    }
    for v in j.iter_mut() {
        *v /= norm;
    }
    let lg = (0.5 * x).ln() + EULER_GAMMA;
    let (mut s0, mut s1) = (0.0, 0.0);
    let mut sign = -1.0;
    for k in 1..=n / 2 {
        let kf = k as f64;
        s0 += sign * j[2 * k] / kf;
        s1 += sign * (j[2 * k - 1] - j[2 * k + 1]) / kf;
        sign = -sign;
    }
    Bessel01 {
        j0: j[0],
        j1: j[1],
        y0: FRAC_2_PI * (lg * j[0] - 2.0 * s0),
        y1: FRAC_2_PI * (lg * j[1] - j[0] / x + s1),
    }
}

fn hankel_pq(mu: f64, x: f64) -> (f64, f64) {
    let (mut p, mut q) = (1.0, 0.0);
    let mut t = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..80 {
        let kf = k as f64;
        let odd = 2.0 * kf - 1.0;
        t *= (mu - odd * odd) / (kf * 8.0 * x);
        if t.abs() > last || t.abs() < 1e-18 {
            break;
        }
        last = t.abs();
        match k % 4 {
            1 => q += t,
            2 => p -= t,
            3 => q -= t,
            _ => p += t,
        }
    }
    (p, q)
}

fn hankel_asymptotic(x: f64) -> Bessel01 {
    let amp = (FRAC_2_PI / x).sqrt();
    let (s, c) = x.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let (p0, q0) = hankel_pq(0.0, x);
    let (p1, q1) = hankel_pq(4.0, x);
    let (c0, s0) = ((c + s) * r, (s - c) * r);
    let (c1, s1) = ((s - c) * r, -(s + c) * r);
    Bessel01 {
        j0: amp * (p0 * c0 - q0 * s0),
        y0: amp * (p0 * s0 + q0 * c0),
        j1: amp * (p1 * c1 - q1 * s1),
        y1: amp * (p1 * s1 + q1 * c1),
    }
}

/// Riemann zeta at odd integers >= 3 by direct summation with an
/// Euler-Maclaurin tail; used for the log-moment conditions.
pub fn zeta_odd(s: u32) -> f64 {
    let n = 100usize;
    let sf = s as f64;
    let mut sum = 0.0;
    for k in (1..n).rev() {
        sum += (k as f64).powf(-sf);
    }
    let nf = n as f64;
    // tail from n: N^{1-s}/(s-1) + N^{-s}/2 + s N^{-s-1}/12 - s(s+1)(s+2) N^{-s-3}/720
    sum + nf.powf(1.0 - sf) / (sf - 1.0) + 0.5 * nf.powf(-sf) + sf * nf.powf(-sf - 1.0) / 12.0
        - sf * (sf + 1.0) * (sf + 2.0) * nf.powf(-sf - 3.0) / 720.0
        + sf * (sf + 1.0) * (sf + 2.0) * (sf + 3.0) * (sf + 4.0) * nf.powf(-sf - 5.0) / 30240.0
}
