//! Generating curves in the (r, z) half-plane and their arc-length grids.

use crate::error::{Error, Result};
use rustfft::{num_complex::Complex, FftPlanner};
use std::f64::consts::PI;
use std::fmt::Debug;
use std::sync::{Arc, OnceLock};

/// Position and first two parameter derivatives of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub r: f64,
    pub z: f64,
    pub rt: f64,
    pub zt: f64,
    pub rtt: f64,
    pub ztt: f64,
}

/// Closed curve t in [0, 2 pi) -> (r, z), r > 0, counter-clockwise.
pub trait GeneratingCurve: Debug + Send + Sync {
    fn eval(&self, t: f64) -> CurvePoint;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MillerCurve {
    pub r0: f64,
    pub eps: f64,
    pub kappa: f64,
    pub delta: f64,
    alpha: f64,
}

impl MillerCurve {
    pub fn new(r0: f64, eps: f64, kappa: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && kappa > 0.0) {
            return Err(Error::Geometry(format!("need eps > 0 and kappa > 0 (eps = {eps}, kappa = {kappa})")));
        }
        if delta.abs() >= 1.0 {
            return Err(Error::Geometry(format!("triangularity |delta| = {} must be < 1", delta.abs())));
        }
        if r0 <= eps {
            return Err(Error::Geometry(format!("R0 = {r0} <= eps = {eps}: curve touches the axis")));
        }
        Ok(Self { r0, eps, kappa, delta, alpha: delta.asin() })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

impl GeneratingCurve for MillerCurve {
    fn eval(&self, t: f64) -> CurvePoint {
        let (st, ct) = t.sin_cos();
        let u = t + self.alpha * st;
        let (su, cu) = u.sin_cos();
        let du = 1.0 + self.alpha * ct;
        let ddu = -self.alpha * st;
        let ek = self.eps * self.kappa;
        CurvePoint {
            r: self.r0 + self.eps * cu,
            z: ek * st,
            rt: -self.eps * su * du,
            zt: ek * ct,
            rtt: -self.eps * (cu * du * du + su * ddu),
            ztt: -ek * st,
        }
    }
}

/// Trigonometric interpolant through points taken as equispaced in the
/// curve parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierCurve {
    a_r: Vec<f64>,
    b_r: Vec<f64>,
    a_z: Vec<f64>,
    b_z: Vec<f64>,
}

fn trig_coeffs(v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut buf: Vec<Complex<f64>> = v.iter().map(|&x| Complex::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let kmax = n / 2;
    let mut a = vec![0.0; kmax + 1];
    let mut b = vec![0.0; kmax + 1];
    for k in 0..=kmax {
        let c = buf[k] / n as f64;
        let scale = if k == 0 || (n % 2 == 0 && k == kmax) { 1.0 } else { 2.0 };
        a[k] = scale * c.re;
        b[k] = -scale * c.im;
    }
    if n % 2 == 0 {
        b[kmax] = 0.0;
    }
    (a, b)
}

fn trig_eval(a: &[f64], b: &[f64], t: f64) -> (f64, f64, f64) {
    let (mut f, mut f1, mut f2) = (a[0], 0.0, 0.0);
    for k in 1..a.len() {
        let kf = k as f64;
        let (s, c) = (kf * t).sin_cos();
        f += a[k] * c + b[k] * s;
        f1 += kf * (b[k] * c - a[k] * s);
        f2 -= kf * kf * (a[k] * c + b[k] * s);
    }
    (f, f1, f2)
}

impl FourierCurve {
    /// Builds the interpolant; reverses orientation if the points run
    /// clockwise.
    pub fn from_points(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 8 {
            return Err(Error::Geometry(format!("need at least 8 boundary points, got {}", points.len())));
        }
        if let Some(&(r, z)) = points.iter().find(|p| !(p.0 > 0.0) || !p.1.is_finite()) {
            return Err(Error::Geometry(format!("boundary point ({r}, {z}) not in the half-plane r > 0")));
        }
        let mut pts = points.to_vec();
        if signed_area(&pts) < 0.0 {
            pts.reverse();
        }
        let rs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let zs: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let (a_r, b_r) = trig_coeffs(&rs);
        let (a_z, b_z) = trig_coeffs(&zs);
        Ok(Self { a_r, b_r, a_z, b_z })
    }
}

impl GeneratingCurve for FourierCurve {
    fn eval(&self, t: f64) -> CurvePoint {
        let (r, rt, rtt) = trig_eval(&self.a_r, &self.b_r, t);
        let (z, zt, ztt) = trig_eval(&self.a_z, &self.b_z, t);
        CurvePoint { r, z, rt, zt, rtt, ztt }
    }
}

/// Shoelace area, positive for counter-clockwise polygons.
pub fn signed_area(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            a.0 * b.1 - b.0 * a.1
        })
        .sum::<f64>()
        * 0.5
}

/// s(t) from the Fourier series of the speed |dgamma/dt|.
#[derive(Debug, Clone)]
struct ArcLengthMap {
    a0: f64,
    a: Vec<f64>,
    b: Vec<f64>,
}

impl ArcLengthMap {
    fn new(curve: &dyn GeneratingCurve) -> Result<Self> {
        let mut m = 64usize;
        loop {
            let samples: Vec<f64> = (0..m)
                .map(|j| {
                    let p = curve.eval(2.0 * PI * j as f64 / m as f64);
                    p.rt.hypot(p.zt)
                })
                .collect();
            let (a, b) = trig_coeffs(&samples);
            let a0 = a[0];
            let tail = (m / 4..=m / 2).map(|k| a[k].hypot(b[k])).fold(0.0, f64::max);
            if tail <= 5e-15 * a0 {
                let keep = m / 2;
                return Ok(Self { a0, a: a[..keep].to_vec(), b: b[..keep].to_vec() });
            }
            if m >= 1 << 17 {
                return Err(Error::Geometry(format!(
                    "arc-length series not resolved with {m} samples (tail {tail:.2e})"
                )));
            }
            m *= 2;
        }
    }

    fn length(&self) -> f64 {
        2.0 * PI * self.a0
    }

    fn s(&self, t: f64) -> f64 {
        let (s1, c1) = t.sin_cos();
        let (mut sk, mut ck) = (s1, c1);
        let mut acc = self.a0 * t;
        for k in 1..self.a.len() {
            let kf = k as f64;
            acc += (self.a[k] * sk + self.b[k] * (1.0 - ck)) / kf;
            let sn = sk * c1 + ck * s1;
            ck = ck * c1 - sk * s1;
            sk = sn;
        }
        acc
    }
}

/// Point on the curve with arc-length derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSample {
    pub t: f64,
    pub r: f64,
    pub z: f64,
    pub dr: f64,
    pub dz: f64,
    pub d2r: f64,
    pub d2z: f64,
}

fn arc_sample(curve: &dyn GeneratingCurve, t: f64) -> GridSample {
    let p = curve.eval(t);
    let sp = p.rt.hypot(p.zt);
    let spt = (p.rt * p.rtt + p.zt * p.ztt) / sp;
    let sp2 = sp * sp;
    GridSample {
        t,
        r: p.r,
        z: p.z,
        dr: p.rt / sp,
        dz: p.zt / sp,
        d2r: (p.rtt - p.rt * spt / sp) / sp2,
        d2z: (p.ztt - p.zt * spt / sp) / sp2,
    }
}

/// Local triad: tangent and outward normal in (r, z) components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub tau: (f64, f64),
    pub normal: (f64, f64),
}

/// Nodes equispaced in arc length on a generating curve.
#[derive(Debug, Clone)]
pub struct CurveGrid {
    pub n: usize,
    pub length: f64,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub r: Vec<f64>,
    pub z: Vec<f64>,
    pub dr: Vec<f64>,
    pub dz: Vec<f64>,
    pub d2r: Vec<f64>,
    pub d2z: Vec<f64>,
    curve: Arc<dyn GeneratingCurve>,
    arc: ArcLengthMap,
    hull: OnceLock<Vec<(f64, f64)>>,
}

impl CurveGrid {
    pub fn new(curve: Arc<dyn GeneratingCurve>, n: usize) -> Result<Self> {
        if n < 16 {
            return Err(Error::Config(format!("n = {n} must be >= 16")));
        }
        let arc = ArcLengthMap::new(curve.as_ref())?;
        let length = arc.length();
        let h = length / n as f64;
        let mut grid = Self {
            n,
            length,
            s: Vec::with_capacity(n),
            t: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            z: Vec::with_capacity(n),
            dr: Vec::with_capacity(n),
            dz: Vec::with_capacity(n),
            d2r: Vec::with_capacity(n),
            d2z: Vec::with_capacity(n),
            curve,
            arc,
            hull: OnceLock::new(),
        };
        let mut t = 0.0;
        for j in 0..n {
            let s = j as f64 * h;
            t = grid.invert(s, t)?;
            let g = arc_sample(grid.curve.as_ref(), t);
            if !(g.r > 0.0) {
                return Err(Error::Geometry(format!("curve reaches r = {} <= 0", g.r)));
            }
            grid.s.push(s);
            grid.t.push(t);
            grid.r.push(g.r);
            grid.z.push(g.z);
            grid.dr.push(g.dr);
            grid.dz.push(g.dz);
            grid.d2r.push(g.d2r);
            grid.d2z.push(g.d2z);
            t += 2.0 * PI / n as f64;
        }
        let area = signed_area(&grid.r.iter().copied().zip(grid.z.iter().copied()).collect::<Vec<_>>());
        if area <= 0.0 {
            return Err(Error::Geometry("curve is not counter-clockwise in the (r, z) plane".into()));
        }
        let kmax = grid.max_curvature();
        if (n as f64) < 8.0 * kmax * length {
            log::warn!(
                "n = {n} may under-resolve the curve (max curvature {kmax:.3}, length {length:.3})"
            );
        }
        Ok(grid)
    }

    fn invert(&self, s: f64, guess: f64) -> Result<f64> {
        let mut t = guess;
        for _ in 0..60 {
            let p = self.curve.eval(t);
            let f = self.arc.s(t) - s;
            let dt = f / p.rt.hypot(p.zt);
            t -= dt;
            if dt.abs() < 1e-15 {
                break;
            }
        }
        let res = (self.arc.s(t) - s).abs();
        if res > 1e-13 * self.length.max(1.0) {
            return Err(Error::Geometry(format!("arc-length inversion failed at s = {s} (residual {res:.2e})")));
        }
        Ok(t)
    }

    pub fn curve(&self) -> &Arc<dyn GeneratingCurve> {
        &self.curve
    }

    pub fn h(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Curve data at arbitrary arc length (wrapped into [0, L)).
    pub fn sample_at(&self, s: f64) -> GridSample {
        let s = s.rem_euclid(self.length);
        let idx = ((s / self.h()).floor() as usize).min(self.n - 1);
        let t = self.invert(s, self.t[idx]).unwrap_or(self.t[idx]);
        arc_sample(self.curve.as_ref(), t)
    }

    pub fn frame(&self, j: usize) -> Frame {
        Frame { tau: (self.dr[j], self.dz[j]), normal: (self.dz[j], -self.dr[j]) }
    }

    pub fn curvature(&self, j: usize) -> f64 {
        self.dr[j] * self.d2z[j] - self.dz[j] * self.d2r[j]
    }

    pub fn max_curvature(&self) -> f64 {
        (0..self.n).map(|j| self.curvature(j).abs()).fold(0.0, f64::max)
    }

    /// Dense polyline (k points per node interval) for geometric queries.
    pub fn polyline(&self, k: usize) -> Vec<(f64, f64)> {
        let m = self.n * k;
        let h = self.length / m as f64;
        (0..m)
            .map(|i| {
                let g = self.sample_at(i as f64 * h);
                (g.r, g.z)
            })
            .collect()
    }

    /// Distance from (r, z) to the curve.
    pub fn distance(&self, r: f64, z: f64) -> f64 {
        let (mut best, mut js) = (f64::INFINITY, 0usize);
        for j in 0..self.n {
            let d = (self.r[j] - r).hypot(self.z[j] - z);
            if d < best {
                best = d;
                js = j;
            }
        }
        // minimise |gamma(s) - x|^2 near the closest node
        let mut s = self.s[js];
        for _ in 0..30 {
            let g = self.sample_at(s);
            let (dx, dy) = (g.r - r, g.z - z);
            let f1 = dx * g.dr + dy * g.dz;
            let f2 = 1.0 + dx * g.d2r + dy * g.d2z;
            let step = if f2 > 0.1 { f1 / f2 } else { f1 };
            let step = step.clamp(-self.h(), self.h());
            s -= step;
            if step.abs() < 1e-14 * self.length {
                break;
            }
        }
        let g = self.sample_at(s);
        best.min((g.r - r).hypot(g.z - z))
    }

    /// Crossing-number inside test against the dense polyline.
    pub fn contains(&self, r: f64, z: f64) -> bool {
        point_in_polygon(self.hull.get_or_init(|| self.polyline(8)), r, z)
    }
}

pub fn point_in_polygon(poly: &[(f64, f64)], r: f64, z: f64) -> bool {
    let n = poly.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (ri, zi) = poly[i];
        let (rj, zj) = poly[j];
        if (zi > z) != (zj > z) && r < (rj - ri) * (z - zi) / (zj - zi) + ri {
            inside = !inside;
        }
        j = i;
    }
    inside
}

pub fn discretize_arclength(curve: Arc<dyn GeneratingCurve>, n: usize) -> Result<CurveGrid> {
    CurveGrid::new(curve, n)
}
