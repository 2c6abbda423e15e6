//! Nyström discretization of the generalized Debye boundary integral
//! equations for one azimuthal mode, the flux constraints, dense solves and
//! the resonance scan.

use crate::error::{Error, Result};
use crate::geometry::{CurveGrid, GridSample};
use crate::modal_kernels::{modal_family, KernelArgs};
use crate::par::{map_indexed, Execution};
use crate::quad::{periodic_interp_weights, CorrectionRule};
use crate::surface_calculus::{harmonic_field, SpectralOperators, Surface, TangentialField};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::sync::Arc;

type C64 = Complex64;
type CMat = DMatrix<C64>;

const I: C64 = C64::new(0.0, 1.0);
const MIN_FLUX_LAMBDA: f64 = 1e-3;

/// One boundary component: its generating curve grid and role.
#[derive(Debug, Clone)]
pub struct Boundary {
    pub grid: Arc<CurveGrid>,
    pub kind: Surface,
}

impl Boundary {
    pub fn new(grid: Arc<CurveGrid>, kind: Surface) -> Self {
        Self { grid, kind }
    }
}

/// Off-grid source samples for the singular correction at one target node.
#[derive(Debug, Clone)]
struct AuxNode {
    sample: GridSample,
    weight: f64,
    interp: usize,
}

#[derive(Debug, Clone)]
struct BoundaryData {
    boundary: Boundary,
    ops: SpectralOperators,
    gmap: CMat,
    aux: Vec<Vec<AuxNode>>,
}

/// Geometry-dependent (lambda-independent) part of a discretization.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub ell: i32,
    pub rule: CorrectionRule,
    data: Vec<BoundaryData>,
    interp: Vec<Vec<Vec<f64>>>,
}

impl Discretization {
    /// `boundaries` is either `[outer]` or `[outer, inner]`.
    pub fn new(boundaries: Vec<Boundary>, ell: i32, order: usize) -> Result<Self> {
        let rule = CorrectionRule::new(order)?;
        match boundaries.as_slice() {
            [b] if b.kind == Surface::Outer => {}
            [o, i] if o.kind == Surface::Outer && i.kind == Surface::Inner => {
                check_nested(&o.grid, &i.grid)?;
            }
            _ => return Err(Error::Topology("expected [outer] or [outer, inner] boundaries".into())),
        }
        let mut interp = Vec::new();
        let mut data = Vec::new();
        for b in boundaries {
            let n = b.grid.n;
            rule.check_n(n)?;
            let weights: Vec<Vec<f64>> = rule.signed_nodes().map(|(x, _)| periodic_interp_weights(n, x)).collect();
            let h = b.grid.h();
            let aux = (0..n)
                .map(|i| {
                    rule.signed_nodes()
                        .enumerate()
                        .map(|(p, (x, w))| AuxNode { sample: b.grid.sample_at(b.grid.s[i] + x * h), weight: w, interp: p })
                        .collect()
                })
                .collect();
            let ops = SpectralOperators::new(&b.grid, ell)?;
            let gmap = ops.density_map(&b.grid, b.kind).map(|v| C64::new(v, 0.0));
            interp.push(weights);
            data.push(BoundaryData { boundary: b, ops, gmap, aux });
        }
        Ok(Self { ell, rule, data, interp })
    }

    pub fn genus(&self) -> usize {
        self.data.len()
    }

    pub fn boundary(&self, k: usize) -> &Boundary {
        &self.data[k].boundary
    }

    pub fn boundaries(&self) -> Vec<Boundary> {
        self.data.iter().map(|d| d.boundary.clone()).collect()
    }

    pub fn ops(&self, k: usize) -> &SpectralOperators {
        &self.data[k].ops
    }

    /// Number of density unknowns over all boundaries.
    pub fn n_sigma(&self) -> usize {
        self.data.iter().map(|d| d.boundary.grid.n).sum()
    }

    fn offset(&self, k: usize) -> usize {
        self.data[..k].iter().map(|d| d.boundary.grid.n).sum()
    }
}

fn check_nested(outer: &CurveGrid, inner: &CurveGrid) -> Result<()> {
    let poly = outer.polyline(4);
    for j in 0..inner.n {
        if !crate::geometry::point_in_polygon(&poly, inner.r[j], inner.z[j]) {
            return Err(Error::Geometry(format!(
                "inner curve point ({}, {}) is not inside the outer curve",
                inner.r[j], inner.z[j]
            )));
        }
    }
    let ipoly = inner.polyline(4);
    if (0..outer.n).any(|j| crate::geometry::point_in_polygon(&ipoly, outer.r[j], outer.z[j])) {
        return Err(Error::Geometry("curves intersect".into()));
    }
    Ok(())
}

/// Layer-potential matrices from densities on a source boundary to values
/// at the nodes of a target boundary. `a_*` map (u^tau, u^phi) to the
/// cylindrical components of the vector single layer; `n_*` are the
/// principal-value normal derivatives of the same.
#[derive(Debug, Clone)]
pub struct PairBlocks {
    pub s: CMat,
    pub sp: CMat,
    pub ar_t: CMat,
    pub ar_p: CMat,
    pub ap_t: CMat,
    pub ap_p: CMat,
    pub az_t: CMat,
    pub nar_t: CMat,
    pub nar_p: CMat,
    pub nap_t: CMat,
    pub nap_p: CMat,
    pub naz_t: CMat,
}

const NBLK: usize = 12;

impl PairBlocks {
    fn from_rows(rows: Vec<[Vec<C64>; NBLK]>, ncols: usize) -> Self {
        let nrows = rows.len();
        let mut m: Vec<CMat> = (0..NBLK).map(|_| CMat::zeros(nrows, ncols)).collect();
        for (i, row) in rows.iter().enumerate() {
            for q in 0..NBLK {
                for (k, v) in row[q].iter().enumerate() {
                    m[q][(i, k)] = *v;
                }
            }
        }
        let mut it = m.into_iter();
        let mut next = || it.next().unwrap();
        Self {
            s: next(),
            sp: next(),
            ar_t: next(),
            ar_p: next(),
            ap_t: next(),
            ap_p: next(),
            az_t: next(),
            nar_t: next(),
            nar_p: next(),
            nap_t: next(),
            nap_p: next(),
            naz_t: next(),
        }
    }
}

/// Assembled operators for fixed lambda: `blocks[a][b]` maps densities on
/// boundary b to target nodes on boundary a.
#[derive(Debug, Clone)]
pub struct NystromOperators {
    pub lambda: f64,
    pub ell: i32,
    pub blocks: Vec<Vec<PairBlocks>>,
}

#[inline]
fn kernel_contrib(
    target: (f64, f64, f64, f64),
    src: (f64, f64, f64, f64),
    c: f64,
    lambda: f64,
    ell: i32,
) -> Result<[C64; NBLK]> {
    let (r, z, nr, nz) = target;
    let (rs, zs, drs, dzs) = src;
    let k = modal_family(&KernelArgs::new(r, z, rs, zs, lambda, ell))?;
    let nd = |g: [C64; 2]| g[0] * nr + g[1] * nz;
    let (ng, ngc, ngs) = (nd(k.dg), nd(k.dg_cos), nd(k.dg_sin));
    Ok([
        k.g * c,
        ng * c,
        k.g_cos * (c * drs),
        k.g_sin * c,
        -k.g_sin * (c * drs),
        k.g_cos * c,
        k.g * (c * dzs),
        ngc * (c * drs),
        ngs * c,
        -ngs * (c * drs),
        ngc * c,
        ng * (c * dzs),
    ])
}

fn pair_row(disc: &Discretization, a: usize, b: usize, i: usize, lambda: f64) -> Result<[Vec<C64>; NBLK]> {
    let tg = &disc.data[a].boundary.grid;
    let sd = &disc.data[b];
    let sg = &sd.boundary.grid;
    let n = sg.n;
    let h = sg.h();
    let target = (tg.r[i], tg.z[i], tg.dz[i], -tg.dr[i]);
    let mut row: [Vec<C64>; NBLK] = std::array::from_fn(|_| vec![C64::new(0.0, 0.0); n]);
    let same = a == b;
    let off = disc.rule.offset;
    for k in 0..n {
        if same {
            let d = if k > i { k - i } else { i - k };
            if d.min(n - d) < off {
                continue;
            }
        }
        let c = 2.0 * PI * sg.r[k] * h;
        let v = kernel_contrib(target, (sg.r[k], sg.z[k], sg.dr[k], sg.dz[k]), c, lambda, disc.ell)?;
        for q in 0..NBLK {
            row[q][k] += v[q];
        }
    }
    if same {
        for node in &sd.aux[i] {
            let p = &node.sample;
            let c = 2.0 * PI * p.r * h * node.weight;
            let v = kernel_contrib(target, (p.r, p.z, p.dr, p.dz), c, lambda, disc.ell)?;
            let w = &disc.interp[b][node.interp];
            for (m, &wm) in w.iter().enumerate() {
                let col = (i + m) % n;
                for q in 0..NBLK {
                    row[q][col] += v[q] * wm;
                }
            }
        }
    }
    Ok(row)
}

/// Assembles all target/source block pairs, parallel over target nodes.
pub fn assemble_operators(disc: &Discretization, lambda: f64, exec: Execution) -> Result<NystromOperators> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::Domain(format!("lambda = {lambda} must be positive")));
    }
    let g = disc.genus();
    let mut blocks = Vec::with_capacity(g);
    for a in 0..g {
        let mut row_blocks = Vec::with_capacity(g);
        for b in 0..g {
            let na = disc.data[a].boundary.grid.n;
            let rows = map_indexed(exec, na, |i| pair_row(disc, a, b, i, lambda));
            let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
            row_blocks.push(PairBlocks::from_rows(rows, disc.data[b].boundary.grid.n));
        }
        blocks.push(row_blocks);
    }
    Ok(NystromOperators { lambda, ell: disc.ell, blocks })
}

/// Column layout of the unknown vector: densities of each boundary in
/// order, then (optionally) one harmonic coefficient per boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    pub sigma_offsets: Vec<usize>,
    pub sigma_len: Vec<usize>,
    pub coeff_offset: Option<usize>,
    pub cols: usize,
}

impl Layout {
    pub fn new(disc: &Discretization, with_coeffs: bool) -> Self {
        let g = disc.genus();
        let sigma_offsets: Vec<usize> = (0..g).map(|k| disc.offset(k)).collect();
        let sigma_len: Vec<usize> = (0..g).map(|k| disc.data[k].boundary.grid.n).collect();
        let ns = disc.n_sigma();
        let coeff_offset = with_coeffs.then_some(ns);
        Self { sigma_offsets, sigma_len, coeff_offset, cols: ns + if with_coeffs { g } else { 0 } }
    }
}

/// Linear maps from the unknown vector to the interior-limit traces of the
/// field at the nodes of one boundary (one row per node).
#[derive(Debug, Clone)]
pub struct SurfaceTraces {
    /// B . n (interior limit).
    pub bn: CMat,
    /// B . tau.
    pub btau: CMat,
    /// B . phi-hat.
    pub bphi: CMat,
    /// Scalar potential v = S[sigma].
    pub v: CMat,
}

fn scale_rows(m: &CMat, f: impl Fn(usize) -> C64) -> CMat {
    let mut out = m.clone();
    for i in 0..out.nrows() {
        let s = f(i);
        for j in 0..out.ncols() {
            out[(i, j)] *= s;
        }
    }
    out
}

fn density_maps(disc: &Discretization, layout: &Layout, b: usize, lambda: f64) -> (CMat, CMat) {
    let d = &disc.data[b];
    let grid = &d.boundary.grid;
    let n = grid.n;
    let kappa = d.boundary.kind.kappa();
    let mut ut = CMat::zeros(n, layout.cols);
    let mut up = CMat::zeros(n, layout.cols);
    let off = layout.sigma_offsets[b];
    ut.view_mut((0, off), (n, n)).copy_from(&(&d.gmap * C64::new(0.0, lambda)));
    up.view_mut((0, off), (n, n)).copy_from(&(&d.gmap * C64::new(-kappa * lambda, 0.0)));
    if let Some(c) = layout.coeff_offset {
        let hf = harmonic_field(grid, d.boundary.kind);
        for j in 0..n {
            ut[(j, c + b)] = hf.ut[j];
            up[(j, c + b)] = hf.uphi[j];
        }
    }
    (ut, up)
}

/// Builds the trace maps for every boundary.
pub fn surface_traces(disc: &Discretization, ops: &NystromOperators, layout: &Layout) -> Vec<SurfaceTraces> {
    let g = disc.genus();
    let lambda = ops.lambda;
    let ell = disc.ell as f64;
    let dens: Vec<(CMat, CMat)> = (0..g).map(|b| density_maps(disc, layout, b, lambda)).collect();
    (0..g)
        .map(|a| {
            let da = &disc.data[a];
            let grid = &da.boundary.grid;
            let n = grid.n;
            let eps = da.boundary.kind.side();
            let z = || CMat::zeros(n, layout.cols);
            let (mut ar, mut ap, mut az, mut nar, mut nap, mut naz, mut v, mut sp) = (z(), z(), z(), z(), z(), z(), z(), z());
            for b in 0..g {
                let blk = &ops.blocks[a][b];
                let (ut, up) = &dens[b];
                ar += &blk.ar_t * ut + &blk.ar_p * up;
                ap += &blk.ap_t * ut + &blk.ap_p * up;
                az += &blk.az_t * ut;
                nar += &blk.nar_t * ut + &blk.nar_p * up;
                nap += &blk.nap_t * ut + &blk.nap_p * up;
                naz += &blk.naz_t * ut;
                let off = layout.sigma_offsets[b];
                let nb = layout.sigma_len[b];
                v.view_mut((0, off), (n, nb)).copy_from(&blk.s);
                sp.view_mut((0, off), (n, nb)).copy_from(&blk.sp);
            }
            let (ut, up) = &dens[a];
            let d = da.ops.d.map(|x| C64::new(x, 0.0));
            let r = |j: usize| grid.r[j];
            let rp = |j: usize| C64::new(grid.dr[j], 0.0);
            let zp = |j: usize| C64::new(grid.dz[j], 0.0);
            let il_r = |j: usize| C64::new(0.0, ell / r(j));
            let an = scale_rows(&ar, zp) - scale_rows(&az, rp);
            let at = scale_rows(&ar, rp) + scale_rows(&az, zp);
            let rap = scale_rows(&ap, |j| C64::new(r(j), 0.0));
            let ncurl = scale_rows(&(&d * &rap), |j| C64::new(-1.0 / r(j), 0.0)) + scale_rows(&at, il_r);
            let mut sig = CMat::zeros(n, layout.cols);
            for j in 0..n {
                sig[(j, layout.sigma_offsets[a] + j)] = C64::new(1.0, 0.0);
            }
            let dn_v = &sp - sig * C64::new(0.5 * eps, 0.0);
            let bn = &an * (I * lambda) - dn_v + &ncurl * I;
            let tcurl = -scale_rows(&an, il_r) + &nap - up * C64::new(0.5 * eps, 0.0) + scale_rows(&ap, |j| zp(j) / r(j));
            let btau = &at * (I * lambda) - &d * &v + tcurl * I;
            let pcurl = scale_rows(&(&d * &ar), zp) - scale_rows(&(&d * &az), rp)
                - (scale_rows(&nar, rp) + scale_rows(&naz, zp))
                + ut * C64::new(0.5 * eps, 0.0);
            let bphi = &ap * (I * lambda) - scale_rows(&v, il_r) + pcurl * I;
            SurfaceTraces { bn, btau, bphi, v }
        })
        .collect()
}

/// Toroidal flux functional (1/lambda) * sum over boundaries of the signed
/// circulation of B . tau, as a row acting on the unknown vector.
pub fn flux_row_toroidal(disc: &Discretization, traces: &[SurfaceTraces], lambda: f64) -> Result<DVector<C64>> {
    if lambda.abs() < MIN_FLUX_LAMBDA {
        return Err(Error::Domain(format!(
            "|lambda| = {lambda:e} too small: the circulation form of the toroidal flux loses accuracy"
        )));
    }
    let cols = traces[0].btau.ncols();
    let mut row = DVector::zeros(cols);
    for (k, t) in traces.iter().enumerate() {
        let b = &disc.data[k].boundary;
        let w = b.kind.kappa() * b.grid.h() / lambda;
        for j in 0..t.btau.nrows() {
            for c in 0..cols {
                row[c] += t.btau[(j, c)] * w;
            }
        }
    }
    Ok(row)
}

/// Poloidal flux functional (2 pi / lambda)(r B_phi|outer - r B_phi|inner),
/// with r B_phi averaged in arc length over each curve (it is constant on
/// each boundary for mode 0).
pub fn flux_row_poloidal(disc: &Discretization, traces: &[SurfaceTraces], lambda: f64) -> Result<DVector<C64>> {
    if disc.genus() != 2 {
        return Err(Error::Topology("poloidal flux needs an outer and an inner boundary".into()));
    }
    if lambda.abs() < MIN_FLUX_LAMBDA {
        return Err(Error::Domain(format!("|lambda| = {lambda:e} too small for the flux rows")));
    }
    let c = 2.0 * PI / lambda;
    let mut row = DVector::zeros(traces[0].bphi.ncols());
    for (k, sign) in [(0, 1.0), (1, -1.0)] {
        let g = &disc.data[k].boundary.grid;
        for j in 0..g.n {
            row += traces[k].bphi.row(j).transpose() * C64::new(sign * c * g.r[j] / g.n as f64, 0.0);
        }
    }
    Ok(row)
}

/// Dense linear system with its layout.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub matrix: CMat,
    pub rhs: DVector<C64>,
    pub layout: Layout,
    pub lambda: f64,
    pub phi_tor: f64,
    pub phi_pol: Option<f64>,
}

/// Boundary-condition rows -B.n for every boundary, stacked.
fn bc_rows(traces: &[SurfaceTraces], rows: usize, cols: usize) -> CMat {
    let mut a = CMat::zeros(rows, cols);
    let mut r0 = 0;
    for t in traces {
        let n = t.bn.nrows();
        a.view_mut((r0, 0), (n, cols)).copy_from(&(-&t.bn));
        r0 += n;
    }
    a
}

pub fn build_system_genus1(disc: &Discretization, ops: &NystromOperators, phi_tor: f64) -> Result<LinearSystem> {
    if disc.genus() != 1 || disc.ell != 0 {
        return Err(Error::Topology("genus-1 system needs one boundary and mode 0".into()));
    }
    let layout = Layout::new(disc, true);
    let tr = surface_traces(disc, ops, &layout);
    let n = layout.cols;
    let mut a = bc_rows(&tr, n, n);
    let row = flux_row_toroidal(disc, &tr, ops.lambda)?;
    a.row_mut(n - 1).copy_from(&row.transpose());
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = C64::new(phi_tor, 0.0);
    Ok(LinearSystem { matrix: a, rhs, layout, lambda: ops.lambda, phi_tor, phi_pol: None })
}

pub fn build_system_genus2(
    disc: &Discretization,
    ops: &NystromOperators,
    phi_tor: f64,
    phi_pol: f64,
) -> Result<LinearSystem> {
    if disc.genus() != 2 || disc.ell != 0 {
        return Err(Error::Topology("genus-2 system needs two boundaries and mode 0".into()));
    }
    let layout = Layout::new(disc, true);
    let tr = surface_traces(disc, ops, &layout);
    let n = layout.cols;
    let mut a = bc_rows(&tr, n, n);
    a.row_mut(n - 2).copy_from(&flux_row_toroidal(disc, &tr, ops.lambda)?.transpose());
    a.row_mut(n - 1).copy_from(&flux_row_poloidal(disc, &tr, ops.lambda)?.transpose());
    let mut rhs = DVector::zeros(n);
    rhs[n - 2] = C64::new(phi_tor, 0.0);
    rhs[n - 1] = C64::new(phi_pol, 0.0);
    Ok(LinearSystem { matrix: a, rhs, layout, lambda: ops.lambda, phi_tor, phi_pol: Some(phi_pol) })
}

/// Solved densities and diagnostics.
#[derive(Debug, Clone)]
pub struct DebyeSolution {
    pub lambda: f64,
    pub ell: i32,
    pub boundaries: Vec<Boundary>,
    pub sigma: Vec<Vec<C64>>,
    pub coeffs: Vec<C64>,
    pub densities: Vec<TangentialField>,
    pub phi_tor: f64,
    pub phi_pol: Option<f64>,
    pub condition: f64,
    pub residual: f64,
    /// Flux functionals applied to the solution.
    pub flux_achieved: Vec<f64>,
    pub unknowns: DVector<C64>,
}

fn norm1(a: &CMat) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn norm_inf_vec(x: &DVector<C64>) -> f64 {
    x.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// LU solve with 1-norm condition number and scaled residual.
pub fn dense_solve(a: &CMat, b: &DVector<C64>, lambda: f64) -> Result<(DVector<C64>, f64, f64)> {
    let lu = a.clone().lu();
    let inv = lu.try_inverse().ok_or(Error::Resonance { lambda })?;
    let x = &inv * b;
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Resonance { lambda });
    }
    let cond = norm1(a) * norm1(&inv);
    let r = a * &x - b;
    let anorm = (0..a.nrows()).map(|i| a.row(i).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max);
    let denom = anorm * norm_inf_vec(&x) + norm_inf_vec(b);
    let residual = if denom > 0.0 { norm_inf_vec(&r) / denom } else { 0.0 };
    if cond > 1e8 {
        log::warn!("condition estimate {cond:.3e} at lambda = {lambda}: close to a resonance");
    }
    Ok((x, cond, residual))
}

/// Reconstructs per-boundary densities from an unknown vector.
pub fn unpack_solution(
    disc: &Discretization,
    layout: &Layout,
    x: &DVector<C64>,
    lambda: f64,
) -> (Vec<Vec<C64>>, Vec<C64>, Vec<TangentialField>) {
    let g = disc.genus();
    let mut sig = Vec::new();
    let mut coeffs = Vec::new();
    let mut dens = Vec::new();
    for b in 0..g {
        let (ut, up) = density_maps(disc, layout, b, lambda);
        let s: Vec<C64> = (0..layout.sigma_len[b]).map(|j| x[layout.sigma_offsets[b] + j]).collect();
        coeffs.push(layout.coeff_offset.map_or(C64::new(0.0, 0.0), |c| x[c + b]));
        let ut = &ut * x;
        let up = &up * x;
        dens.push(TangentialField { ut: ut.iter().copied().collect(), uphi: up.iter().copied().collect(), ell: disc.ell });
        sig.push(s);
    }
    (sig, coeffs, dens)
}

pub fn solve_taylor_state(disc: &Discretization, system: &LinearSystem) -> Result<DebyeSolution> {
    let (x, condition, residual) = dense_solve(&system.matrix, &system.rhs, system.lambda)?;
    let n = system.layout.cols;
    let nflux = if system.phi_pol.is_some() { 2 } else { 1 };
    let ax = &system.matrix * &x;
    let flux_achieved = (0..nflux).map(|k| ax[n - nflux + k].re).collect();
    let (sigma, coeffs, densities) = unpack_solution(disc, &system.layout, &x, system.lambda);
    for (k, s) in sigma.iter().enumerate() {
        let ops = &disc.data[k].ops;
        let area: f64 = ops.w.sum();
        let mean = ops.integrate(s).norm() / area;
        let scale = s.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if scale > 0.0 && mean > 1e-8 * scale {
            log::warn!("density on boundary {k} has relative mean {:.2e}", mean / scale);
        }
    }
    Ok(DebyeSolution {
        lambda: system.lambda,
        ell: disc.ell,
        boundaries: disc.boundaries(),
        sigma,
        coeffs,
        densities,
        phi_tor: system.phi_tor,
        phi_pol: system.phi_pol,
        condition,
        residual,
        flux_achieved,
        unknowns: x,
    })
}

/// Convenience wrapper: assemble, build and solve for mode 0.
pub fn solve(
    disc: &Discretization,
    lambda: f64,
    phi_tor: f64,
    phi_pol: Option<f64>,
    exec: Execution,
) -> Result<DebyeSolution> {
    let ops = assemble_operators(disc, lambda, exec)?;
    let sys = match (disc.genus(), phi_pol) {
        (1, _) => build_system_genus1(disc, &ops, phi_tor)?,
        (2, Some(p)) => build_system_genus2(disc, &ops, phi_tor, p)?,
        _ => return Err(Error::Config("genus-2 solve needs a poloidal flux".into())),
    };
    solve_taylor_state(disc, &sys)
}

/// Mode-ell boundary operator (no flux rows) at lambda.
pub fn resonance_operator(disc: &Discretization, lambda: f64, exec: Execution) -> Result<CMat> {
    let ops = assemble_operators(disc, lambda, exec)?;
    let layout = Layout::new(disc, false);
    let tr = surface_traces(disc, &ops, &layout);
    Ok(bc_rows(&tr, layout.cols, layout.cols))
}

/// A located resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub lambda: f64,
    pub sigma_min: f64,
    /// sigma_min divided by the local slope of the determinant proxy.
    pub error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanOptions {
    pub step: f64,
    /// Accept a refined minimum when sigma_min <= tol * ||A||_2.
    pub accept: f64,
    pub xtol: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { step: 0.02, accept: 1e-6, xtol: 1e-12 }
    }
}

fn sv_pair(a: &CMat) -> (f64, f64, f64) {
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| x.partial_cmp(y).unwrap());
    (s[0], s.get(1).copied().unwrap_or(f64::INFINITY), *s.last().unwrap())
}

/// Smallest singular value of the mode operator at each lambda.
pub fn sigma_min_curve(disc: &Discretization, lambdas: &[f64], exec: Execution) -> Result<Vec<f64>> {
    // Parallelism is over lambda points; each assembly runs sequentially.
    let inner = Execution::Sequential;
    map_indexed(exec, lambdas.len(), |k| {
        resonance_operator(disc, lambdas[k], inner).map(|a| sv_pair(&a).0)
    })
    .into_iter()
    .collect()
}

struct Proxy<'a> {
    disc: &'a Discretization,
    u: DVector<C64>,
    v: DVector<C64>,
    exec: Execution,
}

impl Proxy<'_> {
    /// 1 / (v^H A^{-1} u): analytic in lambda with a simple zero at a root.
    fn eval(&self, lambda: f64) -> Result<C64> {
        let a = resonance_operator(self.disc, lambda, self.exec)?;
        let y = a.lu().solve(&self.u).ok_or(Error::Resonance { lambda })?;
        Ok(C64::new(1.0, 0.0) / self.v.dotc(&y))
    }
}

fn golden_min(f: &dyn Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while hi - lo > tol {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Refines a bracketed minimum of sigma_min. Returns (lambda, slope).
fn refine(disc: &Discretization, lo: f64, hi: f64, center: f64, opts: &ScanOptions, exec: Execution) -> Result<(f64, f64)> {
    let a = resonance_operator(disc, center, exec)?;
    let svd = a.svd(true, true);
    let k = (0..svd.singular_values.len())
        .min_by(|&i, &j| svd.singular_values[i].partial_cmp(&svd.singular_values[j]).unwrap())
        .unwrap();
    let u = svd.u.as_ref().unwrap().column(k).into_owned();
    let v = svd.v_t.as_ref().unwrap().row(k).adjoint().into_owned();
    let proxy = Proxy { disc, u, v, exec };
    let (mut x0, mut x1) = (center, center + 0.25 * (hi - center).min(center - lo));
    let (mut f0, mut f1) = (proxy.eval(x0)?, proxy.eval(x1)?);
    let mut slope = ((f1 - f0) / (x1 - x0)).norm();
    for _ in 0..40 {
        let df = f1 - f0;
        if df.norm() == 0.0 {
            break;
        }
        let x2 = (x1 - f1 * (x1 - x0) / df).re;
        if !(x2 > lo && x2 < hi) {
            let f = |x: f64| resonance_operator(disc, x, exec).map(|a| sv_pair(&a).0);
            return Ok((golden_min(&f, lo, hi, opts.xtol.max(1e-10))?, slope));
        }
        let f2 = proxy.eval(x2)?;
        let step = (x2 - x1).abs();
        if x2 != x1 && f2 != f1 {
            slope = ((f2 - f1) / (x2 - x1)).norm();
        }
        x0 = x1;
        f0 = f1;
        x1 = x2;
        f1 = f2;
        if step < opts.xtol {
            break;
        }
    }
    Ok((x1, slope))
}

/// Locates resonances in [lo, hi]: coarse sigma_min scan, then refinement of
/// each local minimum. Coarse points run in parallel.
pub fn eigen_scan(disc: &Discretization, lo: f64, hi: f64, opts: &ScanOptions, exec: Execution) -> Result<Vec<Root>> {
    if disc.ell == 0 {
        return Err(Error::Config("resonance scan needs mode ell >= 1".into()));
    }
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Config(format!("invalid lambda range [{lo}, {hi}]")));
    }
    let m = ((hi - lo) / opts.step).ceil() as usize;
    let grid: Vec<f64> = (0..=m).map(|k| lo + (hi - lo) * k as f64 / m as f64).collect();
    let s = sigma_min_curve(disc, &grid, exec)?;
    let mut roots: Vec<Root> = Vec::new();
    for k in 0..grid.len() {
        let left = if k > 0 { s[k - 1] } else { f64::INFINITY };
        let right = if k + 1 < s.len() { s[k + 1] } else { f64::INFINITY };
        if !(s[k] < left && s[k] <= right) {
            continue;
        }
        let blo = grid[k.saturating_sub(1)];
        let bhi = grid[(k + 1).min(grid.len() - 1)];
        let (lam, slope) = refine(disc, blo, bhi, grid[k], opts, Execution::default())?;
        let a = resonance_operator(disc, lam, Execution::default())?;
        let (smin, s2, smax) = sv_pair(&a);
        if smin > opts.accept * smax {
            log::debug!("minimum at {lam} rejected: sigma_min/||A|| = {:.2e}", smin / smax);
            continue;
        }
        if s2 <= opts.accept * smax {
            log::warn!("unresolved cluster near lambda = {lam} in [{blo}, {bhi}]");
        }
        if roots.iter().any(|r| (r.lambda - lam).abs() < 1e-8) {
            continue;
        }
        let error = if slope > 0.0 { smin / slope } else { f64::INFINITY };
        roots.push(Root { lambda: lam, sigma_min: smin, error });
    }
    Ok(roots)
}

/// Null vector of a numerically rank-one-deficient operator at a root,
/// normalized to unit L2 norm along the generating curve.
pub fn null_vector(a: &CMat, h: f64, seed: u64) -> Result<DVector<C64>> {
    let (s1, s2, smax) = sv_pair(a);
    if s1 > 1e-6 * smax {
        return Err(Error::Contract(format!("operator is not rank deficient (sigma_min/||A|| = {:.2e})", s1 / smax)));
    }
    if s2 <= 1e-6 * smax {
        return Err(Error::Multiplicity { lambda: f64::NAN, s1, s2 });
    }
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rv = || DVector::from_fn(n, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    let (r, r1, r2) = (rv(), rv(), rv());
    let b = a + &r1 * r2.transpose();
    let rhs = a * &r;
    let x = b.lu().solve(&rhs).ok_or(Error::Resonance { lambda: f64::NAN })?;
    let z = x - r;
    let norm = (h * z.iter().map(|v| v.norm_sqr()).sum::<f64>()).sqrt();
    let z = z / C64::new(norm, 0.0);
    let res = (a * &z).norm() / z.norm();
    if res > 10.0 * s1.max(1e-14 * smax) {
        log::warn!("null vector residual {res:.2e} exceeds 10 sigma_min = {:.2e}", 10.0 * s1);
    }
    Ok(z)
}
