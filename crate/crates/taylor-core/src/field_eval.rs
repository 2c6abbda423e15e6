//! Off-surface evaluation of B = i lambda Q - grad v + i curl Q from solved
//! densities, finite-difference verification and flux recomputation.

use crate::beltrami_solver::{assemble_operators, surface_traces, DebyeSolution, Discretization, Layout};
use crate::error::{Error, Result};
use crate::geometry::CurveGrid;
use crate::modal_kernels::{modal_family, KernelArgs};
use crate::par::{map_indexed, Execution};
use nalgebra::DVector;
use num_complex::Complex64;
use rustfft::FftPlanner;
use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

type C64 = Complex64;
const I: C64 = C64::new(0.0, 1.0);

/// One evaluated mode-ell field value; the full field is B e^{i ell phi}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub r: f64,
    pub phi: f64,
    pub z: f64,
    pub b: [C64; 3],
    pub ell: i32,
}

/// Band-limited resampling of nodal values onto k times as many nodes.
pub fn upsample(v: &[C64], k: usize) -> Vec<C64> {
    let n = v.len();
    if k == 1 {
        return v.to_vec();
    }
    let m = n * k;
    let mut planner = FftPlanner::new();
    let mut buf = v.to_vec();
    planner.plan_fft_forward(n).process(&mut buf);
    let mut out = vec![C64::new(0.0, 0.0); m];
    let half = n / 2;
    for j in 0..n {
        let c = buf[j] / n as f64;
        if n % 2 == 0 && j == half {
            out[half] += 0.5 * c;
            out[m - half] += 0.5 * c;
        } else if j < half || (n % 2 == 1 && j == half) {
            out[j] = c;
        } else {
            out[m - (n - j)] = c;
        }
    }
    planner.plan_fft_inverse(m).process(&mut out);
    out
}

#[derive(Debug, Clone)]
struct SourceNodes {
    grid: Arc<CurveGrid>,
    h: f64,
    r: Vec<f64>,
    z: Vec<f64>,
    dr: Vec<f64>,
    dz: Vec<f64>,
    sigma: Vec<C64>,
    ut: Vec<C64>,
    uphi: Vec<C64>,
}

/// Densities resampled for off-surface quadrature.
#[derive(Debug, Clone)]
pub struct FieldEvaluator {
    pub lambda: f64,
    pub ell: i32,
    pub upsample: usize,
    sources: Vec<SourceNodes>,
    outer_poly: Vec<(f64, f64)>,
    inner_poly: Option<Vec<(f64, f64)>>,
}

impl FieldEvaluator {
    /// `upsample` = 1 integrates on the solve nodes; larger factors allow
    /// targets proportionally closer to the boundary.
    pub fn new(sol: &DebyeSolution, upsample: usize) -> Result<Self> {
        if upsample == 0 {
            return Err(Error::Config("upsampling factor must be >= 1".into()));
        }
        let mut sources = Vec::new();
        for (k, b) in sol.boundaries.iter().enumerate() {
            let g = &b.grid;
            let m = g.n * upsample;
            let h = g.length / m as f64;
            let (mut r, mut z, mut dr, mut dz) = (vec![], vec![], vec![], vec![]);
            for j in 0..m {
                if j % upsample == 0 {
                    let i = j / upsample;
                    r.push(g.r[i]);
                    z.push(g.z[i]);
                    dr.push(g.dr[i]);
                    dz.push(g.dz[i]);
                } else {
                    let p = g.sample_at(j as f64 * h);
                    r.push(p.r);
                    z.push(p.z);
                    dr.push(p.dr);
                    dz.push(p.dz);
                }
            }
            sources.push(SourceNodes {
                grid: g.clone(),
                h,
                r,
                z,
                dr,
                dz,
                sigma: upsample_vec(&sol.sigma[k], upsample),
                ut: upsample_vec(&sol.densities[k].ut, upsample),
                uphi: upsample_vec(&sol.densities[k].uphi, upsample),
            });
        }
        let outer_poly = sol.boundaries[0].grid.polyline(8);
        let inner_poly = sol.boundaries.get(1).map(|b| b.grid.polyline(8));
        Ok(Self { lambda: sol.lambda, ell: sol.ell, upsample, sources, outer_poly, inner_poly })
    }

    /// Minimum distance allowed between a target and the boundary.
    pub fn exclusion(&self) -> f64 {
        self.sources.iter().map(|s| 2.0 * s.grid.h() / self.upsample as f64).fold(0.0, f64::max)
    }

    pub fn inside(&self, r: f64, z: f64) -> bool {
        crate::geometry::point_in_polygon(&self.outer_poly, r, z)
            && !self.inner_poly.as_ref().is_some_and(|p| crate::geometry::point_in_polygon(p, r, z))
    }

    /// Checks that a target lies in the domain outside the exclusion zone.
    pub fn check_target(&self, r: f64, z: f64) -> Result<()> {
        if !(r > 0.0) {
            return Err(Error::Domain(format!("target r = {r} must be positive")));
        }
        if !self.inside(r, z) {
            return Err(Error::Outside { r, z });
        }
        let min = self.exclusion();
        for s in &self.sources {
            let d = s.grid.distance(r, z);
            if d < min {
                return Err(Error::Proximity { r, z, distance: d, min });
            }
        }
        Ok(())
    }

    /// B at (r, z) without domain or proximity checks.
    pub fn eval_unchecked(&self, r: f64, z: f64) -> Result<[C64; 3]> {
        let lambda = self.lambda;
        let il = C64::new(0.0, self.ell as f64);
        let zero = C64::new(0.0, 0.0);
        // v, dv/dr, dv/dz, Q_{r,phi,z} and their r, z derivatives
        let (mut v, mut vr, mut vz) = (zero, zero, zero);
        let mut q = [zero; 3];
        let mut qr = [zero; 3];
        let mut qz = [zero; 3];
        for s in &self.sources {
            for j in 0..s.r.len() {
                let k = modal_family(&KernelArgs::new(r, z, s.r[j], s.z[j], lambda, self.ell))?;
                let c = 2.0 * PI * s.r[j] * s.h;
                let sg = s.sigma[j] * c;
                v += k.g * sg;
                vr += k.dg[0] * sg;
                vz += k.dg[1] * sg;
                let at = s.ut[j] * c;
                let ap = s.uphi[j] * c;
                let drs = s.dr[j];
                let dzs = s.dz[j];
                q[0] += at * drs * k.g_cos + ap * k.g_sin;
                q[1] += -at * drs * k.g_sin + ap * k.g_cos;
                q[2] += at * dzs * k.g;
                for d in 0..2 {
                    let (gc, gs, gg) = (k.dg_cos[d], k.dg_sin[d], k.dg[d]);
                    let t = [at * drs * gc + ap * gs, -at * drs * gs + ap * gc, at * dzs * gg];
                    for m in 0..3 {
                        if d == 0 {
                            qr[m] += t[m];
                        } else {
                            qz[m] += t[m];
                        }
                    }
                }
            }
        }
        let curl = [il / r * q[2] - qz[1], qz[0] - qr[2], q[1] / r + qr[1] - il / r * q[0]];
        let grad = [vr, il / r * v, vz];
        Ok(std::array::from_fn(|m| I * lambda * q[m] - grad[m] + I * curl[m]))
    }

    pub fn eval(&self, r: f64, z: f64) -> Result<[C64; 3]> {
        self.check_target(r, z)?;
        self.eval_unchecked(r, z)
    }

    /// Evaluates at many (r, phi, z) targets; the phi factor e^{i ell phi}
    /// is applied to the returned components.
    pub fn eval_b(&self, targets: &[(f64, f64, f64)], exec: Execution) -> Result<Vec<FieldSample>> {
        map_indexed(exec, targets.len(), |k| {
            let (r, phi, z) = targets[k];
            let b = self.eval(r, z)?;
            let ph = C64::from_polar(1.0, self.ell as f64 * phi);
            Ok(FieldSample { r, phi, z, b: b.map(|c| c * ph), ell: self.ell })
        })
        .into_iter()
        .collect()
    }

    /// Interior limit of B at boundary node `j` of boundary `k`, by
    /// polynomial extrapolation from six interior offsets.
    pub fn extrapolated_trace(&self, k: usize, j: usize, side: f64) -> Result<[C64; 3]> {
        let g = &self.sources[k].grid;
        let delta = g.h() / 4.0;
        let (nr, nz) = (side * g.dz[j], -side * g.dr[j]);
        let m = 6;
        let mut vals = Vec::with_capacity(m);
        for p in 1..=m {
            let d = p as f64 * delta;
            vals.push(self.eval_unchecked(g.r[j] + d * nr, g.z[j] + d * nz)?);
        }
        // Lagrange extrapolation to offset 0 from nodes 1..m
        let mut out = [C64::new(0.0, 0.0); 3];
        for p in 0..m {
            let xp = (p + 1) as f64;
            let mut w = 1.0;
            for q in 0..m {
                if q != p {
                    let xq = (q + 1) as f64;
                    w *= (0.0 - xq) / (xp - xq);
                }
            }
            for c in 0..3 {
                out[c] += vals[p][c] * w;
            }
        }
        Ok(out)
    }
}

fn upsample_vec(v: &[C64], k: usize) -> Vec<C64> {
    upsample(v, k)
}

/// Finite-difference residuals of the Beltrami equation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct VerifyReport {
    pub curl_residual: f64,
    pub div_residual: f64,
    pub points: usize,
}

/// Fourth-order centered-difference check of curl B = lambda B and
/// div B = 0 at each point, relative to max |lambda B|.
pub fn verify_field<F>(field: F, lambda: f64, ell: i32, points: &[(f64, f64)], h: f64) -> Result<VerifyReport>
where
    F: Fn(f64, f64) -> Result<[C64; 3]>,
{
    let il = C64::new(0.0, ell as f64);
    let stencil = [(-2.0, 1.0 / 12.0), (-1.0, -8.0 / 12.0), (1.0, 8.0 / 12.0), (2.0, -1.0 / 12.0)];
    let mut rep = VerifyReport { points: points.len(), ..Default::default() };
    let mut scale: f64 = 0.0;
    let mut curl_max: f64 = 0.0;
    let mut div_max: f64 = 0.0;
    for &(r, z) in points {
        let b = field(r, z)?;
        let mut dr = [C64::new(0.0, 0.0); 3];
        let mut dz = [C64::new(0.0, 0.0); 3];
        for &(o, w) in &stencil {
            let br = field(r + o * h, z)?;
            let bz = field(r, z + o * h)?;
            for c in 0..3 {
                dr[c] += br[c] * (w / h);
                dz[c] += bz[c] * (w / h);
            }
        }
        let curl = [il / r * b[2] - dz[1], dz[0] - dr[2], b[1] / r + dr[1] - il / r * b[0]];
        let div = b[0] / r + dr[0] + il / r * b[1] + dz[2];
        let res = (0..3).map(|c| (curl[c] - b[c] * lambda).norm_sqr()).sum::<f64>().sqrt();
        let mag = lambda.abs() * b.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        scale = scale.max(mag);
        curl_max = curl_max.max(res);
        div_max = div_max.max(div.norm());
    }
    if scale > 0.0 {
        rep.curl_residual = curl_max / scale;
        rep.div_residual = div_max / scale;
    }
    Ok(rep)
}

/// Toroidal and poloidal fluxes recomputed from extrapolated interior
/// traces of the evaluated field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxCheck {
    pub toroidal: C64,
    pub poloidal: Option<C64>,
    /// Max |B| over the boundary traces.
    pub field_scale: f64,
}

pub fn recompute_fluxes(eval: &FieldEvaluator, sol: &DebyeSolution, exec: Execution) -> Result<FluxCheck> {
    let lambda = sol.lambda;
    let mut tor = C64::new(0.0, 0.0);
    let mut scale: f64 = 0.0;
    let mut bphi0 = Vec::new();
    for (k, b) in sol.boundaries.iter().enumerate() {
        let g = &b.grid;
        let side = b.kind.side();
        let tr = map_indexed(exec, g.n, |j| eval.extrapolated_trace(k, j, side))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
        let mut circ = C64::new(0.0, 0.0);
        for (j, t) in tr.iter().enumerate() {
            circ += t[0] * g.dr[j] + t[2] * g.dz[j];
            scale = scale.max(t.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt());
        }
        tor += circ * (b.kind.kappa() * g.h() / lambda);
        bphi0.push((0..g.n).map(|j| tr[j][1] * g.r[j]).sum::<C64>() / g.n as f64);
    }
    // azimuthal circulation for mode ell integrates e^{i ell phi} over a turn
    let turn = if sol.ell == 0 { 2.0 * PI } else { 0.0 };
    let poloidal = (bphi0.len() == 2).then(|| (bphi0[0] - bphi0[1]) * (turn / lambda));
    Ok(FluxCheck { toroidal: tor, poloidal, field_scale: scale })
}

/// Toroidal and poloidal fluxes of the field generated by the unknown vector
/// `x`, from its on-surface interior traces. `x` may carry harmonic
/// coefficients (solve layout) or not (resonance layout).
pub fn trace_fluxes(disc: &Discretization, lambda: f64, x: &DVector<C64>, exec: Execution) -> Result<FluxCheck> {
    if lambda.abs() < 1e-3 {
        return Err(Error::Domain(format!("|lambda| = {lambda:e} too small for circulation fluxes")));
    }
    let with_coeffs = x.len() != disc.n_sigma();
    let layout = Layout::new(disc, with_coeffs);
    if layout.cols != x.len() {
        return Err(Error::Contract(format!("unknown vector has length {}, expected {}", x.len(), layout.cols)));
    }
    let ops = assemble_operators(disc, lambda, exec)?;
    let traces = surface_traces(disc, &ops, &layout);
    let mut tor = C64::new(0.0, 0.0);
    let mut scale: f64 = 0.0;
    let mut bphi0 = Vec::new();
    for (k, t) in traces.iter().enumerate() {
        let b = disc.boundary(k);
        let (bn, bt, bp) = (&t.bn * x, &t.btau * x, &t.bphi * x);
        for j in 0..bt.len() {
            scale = scale.max((bn[j].norm_sqr() + bt[j].norm_sqr() + bp[j].norm_sqr()).sqrt());
        }
        tor += bt.sum() * (b.kind.kappa() * b.grid.h() / lambda);
        bphi0.push((0..b.grid.n).map(|j| bp[j] * b.grid.r[j]).sum::<C64>() / b.grid.n as f64);
    }
    let turn = if disc.ell == 0 { 2.0 * PI } else { 0.0 };
    let poloidal = (bphi0.len() == 2).then(|| (bphi0[0] - bphi0[1]) * (turn / lambda));
    Ok(FluxCheck { toroidal: tor, poloidal, field_scale: scale })
}

/// Writes samples as CSV with 17 significant digits.
pub fn write_csv<W: Write>(mut w: W, samples: &[FieldSample]) -> std::io::Result<()> {
    writeln!(w, "r,phi,z,Br_re,Br_im,Bphi_re,Bphi_im,Bz_re,Bz_im")?;
    for s in samples {
        write!(w, "{:.16e},{:.16e},{:.16e}", s.r, s.phi, s.z)?;
        for c in &s.b {
            write!(w, ",{:.16e},{:.16e}", c.re, c.im)?;
        }
        writeln!(w)?;
    }
    Ok(())
}
