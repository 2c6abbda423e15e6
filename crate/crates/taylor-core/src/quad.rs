//! Adaptive Gauss-Kronrod integration of vector-valued integrands and the
//! hybrid Gauss-trapezoidal correction rules for log-singular periodic
//! integrands.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::f64::consts::PI;

const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

const MAX_PANELS: usize = 4000;

fn gk21<const N: usize, F>(f: &F, a: f64, b: f64) -> ([Complex64; N], f64)
where
    F: Fn(f64) -> [Complex64; N],
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = [Complex64::new(0.0, 0.0); N];
    let mut g = [Complex64::new(0.0, 0.0); N];
    for i in 0..N {
        k[i] = fc[i] * WGK[10];
    }
    for j in 0..10 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        for i in 0..N {
            let s = f1[i] + f2[i];
            k[i] += s * WGK[j];
            if j % 2 == 1 {
                g[i] += s * WG[j / 2];
            }
        }
    }
    let mut err = 0.0f64;
    for i in 0..N {
        k[i] *= h;
        err = err.max((k[i] - g[i] * h).norm());
    }
    (k, err)
}

/// Integrates a vector-valued integrand over [a, b] to absolute tolerance
/// `tol` (max-norm over components) by recursive bisection of GK21 panels.
pub fn integrate<const N: usize, F>(f: F, a: f64, b: f64, tol: f64) -> Result<[Complex64; N]>
where
    F: Fn(f64) -> [Complex64; N],
{
    let width = b - a;
    let mut total = [Complex64::new(0.0, 0.0); N];
    let mut stack = vec![(a, b)];
    let mut panels = 0usize;
    while let Some((lo, hi)) = stack.pop() {
        panels += 1;
        let (v, err) = gk21(&f, lo, hi);
        let budget = tol * (hi - lo) / width;
        if err <= budget || (hi - lo) < 1e-13 * width {
            for i in 0..N {
                total[i] += v[i];
            }
        } else if panels > MAX_PANELS {
            return Err(Error::Accuracy {
                what: "adaptive quadrature panel budget exhausted".into(),
                achieved: err,
            });
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi));
            stack.push((lo, mid));
        }
    }
    Ok(total)
}

/// Hybrid Gauss-trapezoidal correction rule for integrands with a
/// logarithmic singularity at a grid node. Nodes lie at +-x_p h around the
/// singular point; grid points closer than `offset` are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrectionRule {
    pub order: usize,
    pub offset: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

const W8: [f64; 8] = [
    0.162_692_753_579_751_293_83,
    0.573_588_877_822_403_667_76,
    0.779_315_641_287_744_393_97,
    1.017_340_295_137_922_343_2,
    0.872_579_105_867_112_060_81,
    0.997_227_755_992_287_185_85,
    0.123_537_223_673_594_144_38,
    -0.026_281_653_360_815_089_851,
];

const W16: [f64; 16] = [
    0.082_335_560_969_953_330_157,
    0.295_489_732_460_645_661_39,
    0.455_097_798_596_221_655_89,
    0.626_568_379_265_089_953_8,
    0.760_614_500_449_663_929,
    0.856_882_524_409_142_354_97,
    0.957_810_378_088_177_165_61,
    0.946_433_813_336_970_734_59,
    1.023_946_407_336_443_413_3,
    0.869_790_406_767_638_604_6,
    0.969_180_583_178_710_107_52,
    0.603_503_597_379_683_795_9,
    0.846_390_970_317_922_248_96,
    0.274_730_815_120_274_231_12,
    -0.095_425_000_641_722_379_157,
    0.026_649_532_965_185_192_311,
];

impl CorrectionRule {
    /// Rules of order 8 (offset 5) and 16 (offset 10). Nodes are the
    /// Chebyshev points of (0, offset); weights solve the even power and
    /// log-power moment conditions.
    pub fn new(order: usize) -> Result<Self> {
        let (offset, weights): (usize, &[f64]) = match order {
            8 => (5, &W8),
            16 => (10, &W16),
            _ => return Err(Error::Config(format!("correction order {order} not in {{8, 16}}"))),
        };
        let m = weights.len();
        let nodes = (0..m)
            .map(|p| {
                offset as f64 * (1.0 - (PI * (p as f64 + 0.5) / m as f64).cos()) / 2.0
            })
            .collect();
        Ok(Self { order, offset, nodes, weights: weights.to_vec() })
    }

    pub fn check_n(&self, n: usize) -> Result<()> {
        if n < 2 * self.offset {
            return Err(Error::Config(format!(
                "n = {n} too small for the order-{} correction rule (needs n >= {})",
                self.order,
                2 * self.offset
            )));
        }
        Ok(())
    }

    /// Signed off-grid offsets (in units of h) with their weights.
    pub fn signed_nodes(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes
            .iter()
            .zip(&self.weights)
            .flat_map(|(&x, &w)| [(x, w), (-x, w)])
    }
}

/// Periodic band-limited interpolation weights: value at node index
/// position `xi` (fractional) is sum_m w[m] f[m].
pub fn periodic_interp_weights(n: usize, xi: f64) -> Vec<f64> {
    let nf = n as f64;
    (0..n)
        .map(|m| {
            let mut d = xi - m as f64;
            d -= nf * (d / nf).round();
            if d.abs() < 1e-15 {
                return 1.0;
            }
            let x = 2.0 * PI * d / nf;
            if n % 2 == 0 {
                (0.5 * nf * x).sin() / (nf * (0.5 * x).tan())
            } else {
                (0.5 * nf * x).sin() / (nf * (0.5 * x).sin())
            }
        })
        .collect()
}

/// Integrates f over one period [0, 2 pi) on n nodes where f has a log
/// singularity at t = 0. `f` is evaluated at both grid and off-grid points.
pub fn log_periodic_integral<F: Fn(f64) -> f64>(f: F, n: usize, rule: &CorrectionRule) -> f64 {
    let h = 2.0 * PI / n as f64;
    let a = rule.offset;
    let mut s: f64 = (a..=n - a).map(|k| f(k as f64 * h)).sum();
    for (x, w) in rule.signed_nodes() {
        s += w * f(x * h);
    }
    s * h
}
