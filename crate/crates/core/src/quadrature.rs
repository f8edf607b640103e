//! Adaptive Gauss–Kronrod quadrature (21-point rule) and a cumulative table
//! built on top of it.

use alloc::collections::BinaryHeap;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::{Error, Result};
use crate::math;

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

// 10-point Gauss weights, attached to XGK[1], XGK[3], ..., XGK[9].
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_146,
];

/// Tolerances and limits for the adaptive integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol: 1e-12,
            max_intervals: 2000,
        }
    }
}

impl QuadConfig {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        Self {
            abs_tol,
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub evaluations: usize,
    pub intervals: usize,
}

/// Single 21-point Kronrod panel on `[a, b]`, returning (estimate, error).
pub fn gk21<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    for (j, (&x, &wk)) in XGK.iter().zip(WGK.iter()).take(10).enumerate() {
        let dx = half * x;
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        kronrod += wk * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let value = kronrod * half;
    // QUADPACK-style error scaling is too pessimistic for the smooth
    // integrands here; plain |K − G| is kept so tolerances mean what they say.
    let error = ((kronrod - gauss) * half).abs();
    (value, error)
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
///
/// `breaks` are interior points where `f` is known to be non-smooth; the
/// interval is split there before adaptation starts.
pub fn integrate<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    b: f64,
    breaks: &[f64],
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    if a == b {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
            intervals: 0,
        });
    }
    if b < a {
        let r = integrate(f, b, a, breaks, cfg)?;
        return Ok(QuadResult {
            value: -r.value,
            ..r
        });
    }
    let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    cuts.push(a);
    for &x in breaks {
        if x > a && x < b {
            cuts.push(x);
        }
    }
    cuts.push(b);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    let mut evaluations = 0;
    for w in cuts.windows(2) {
        let (v, e) = gk21(&f, w[0], w[1]);
        evaluations += 21;
        total += v;
        total_err += e;
        heap.push(Panel {
            a: w[0],
            b: w[1],
            value: v,
            error: e,
        });
    }
    loop {
        if !total.is_finite() || !total_err.is_finite() {
            return Err(Error::Numeric(alloc::format!(
                "non-finite integrand on [{a:e}, {b:e}]"
            )));
        }
        let target = cfg.abs_tol.max(cfg.rel_tol * total.abs());
        if total_err <= target {
            break;
        }
        if heap.len() >= cfg.max_intervals {
            return Err(Error::Quadrature {
                a,
                b,
                error: total_err,
                intervals: heap.len(),
            });
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Interval cannot be split further in floating point.
            return Err(Error::Quadrature {
                a,
                b,
                error: total_err,
                intervals: heap.len() + 1,
            });
        }
        let (v1, e1) = gk21(&f, worst.a, mid);
        let (v2, e2) = gk21(&f, mid, worst.b);
        evaluations += 42;
        total += v1 + v2 - worst.value;
        total_err += e1 + e2 - worst.error;
        heap.push(Panel {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Panel {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed accumulated cancellation from the running updates.
    let intervals = heap.len();
    let mut value = 0.0;
    let mut error = 0.0;
    for p in heap.into_iter() {
        value += p.value;
        error += p.error;
    }
    Ok(QuadResult {
        value,
        error,
        evaluations,
        intervals,
    })
}

/// Integral of `f` over `[a, ∞)` through the map `x = a + t/(1−t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(
    f: F,
    a: f64,
    cfg: &QuadConfig,
) -> Result<QuadResult> {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let s = 1.0 - t;
        let x = a + t / s;
        let v = f(x) / (s * s);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(g, 0.0, 1.0, &[], cfg)
}

/// Cumulative integral `∫_{x0}^x f` tabulated at nodes, with exact
/// (adaptive) completion between the node below `x` and `x`.
///
/// Lookups cost one short adaptive integral instead of an interpolation, so
/// the table is exact to the integrator tolerance everywhere.
#[derive(Debug, Clone)]
pub struct CumulativeTable {
    nodes: Vec<f64>,
    values: Vec<f64>,
    cfg: QuadConfig,
}

impl CumulativeTable {
    /// Builds the table on the sorted node list `nodes` (first node is the
    /// origin of integration).
    pub fn build<F: Fn(f64) -> f64>(f: &F, nodes: Vec<f64>, cfg: QuadConfig) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Config("cumulative table needs nodes".into()));
        }
        let mut values = Vec::with_capacity(nodes.len());
        let mut acc = 0.0;
        values.push(0.0);
        for w in nodes.windows(2) {
            acc += integrate(f, w[0], w[1], &[], &cfg)?.value;
            values.push(acc);
        }
        Ok(Self { nodes, values, cfg })
    }

    pub fn origin(&self) -> f64 {
        self.nodes[0]
    }

    pub fn end(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn total(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// `∫_{origin}^x f`. Points outside the table are completed from the
    /// nearest end node.
    pub fn eval<F: Fn(f64) -> f64>(&self, f: &F, x: f64) -> Result<f64> {
        let idx = match self
            .nodes
            .binary_search_by(|n| n.partial_cmp(&x).unwrap_or(Ordering::Less))
        {
            Ok(i) => return Ok(self.values[i]),
            Err(0) => 0,
            Err(i) => i - 1,
        };
        let base = self.nodes[idx];
        Ok(self.values[idx] + integrate(f, base, x, &[], &self.cfg)?.value)
    }
}

/// Uniform node list on `[a, b]` with at least `min_nodes` nodes, merged with
/// extra breakpoints that fall inside.
pub fn node_list(a: f64, b: f64, spacing: f64, extra: &[f64]) -> Vec<f64> {
    let n = math::ceil(((b - a) / spacing).max(1.0)) as usize;
    let mut nodes: Vec<f64> = (0..=n).map(|i| a + (b - a) * i as f64 / n as f64).collect();
    for &x in extra {
        if x > a && x < b {
            nodes.push(x);
        }
    }
    nodes.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    nodes.dedup();
    nodes
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn weights_sum_to_two() {
        let k: f64 = WGK[10] + 2.0 * WGK[..10].iter().sum::<f64>();
        let g: f64 = 2.0 * WG.iter().sum::<f64>();
        assert_relative_eq!(k, 2.0, epsilon = 1e-15);
        assert_relative_eq!(g, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn single_panel_is_exact_for_high_degree_polynomials() {
        // Kronrod 21 integrates degree 31 exactly.
        let f = |x: f64| x.powi(30) + 3.0 * x.powi(7);
        let (v, _) = gk21(&f, -1.0, 1.0);
        assert_relative_eq!(v, 2.0 / 31.0, max_relative = 1e-13);
    }

    #[test]
    fn adaptive_handles_breaks_and_reversal() {
        let f = |x: f64| (x - 0.3).abs();
        let r = integrate(f, 0.0, 1.0, &[0.3], &QuadConfig::default()).unwrap();
        assert_relative_eq!(r.value, 0.045 + 0.245, max_relative = 1e-13);
        let rev = integrate(f, 1.0, 0.0, &[0.3], &QuadConfig::default()).unwrap();
        assert_relative_eq!(rev.value, -r.value, max_relative = 1e-14);
    }

    #[test]
    fn semi_infinite_algebraic_tail() {
        let r = integrate_to_infinity(|x| 1.0 / ((1.0 + x) * (1.0 + x)), 0.0, &QuadConfig::default())
            .unwrap();
        assert_relative_eq!(r.value, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn cumulative_table_matches_closed_form() {
        let f = |x: f64| x.cos();
        let nodes = node_list(0.0, 10.0, 0.5, &[3.3]);
        let t = CumulativeTable::build(&f, nodes, QuadConfig::default()).unwrap();
        for &x in &[0.0, 0.1, 3.3, 7.77, 10.0, 12.0] {
            assert_relative_eq!(t.eval(&f, x).unwrap(), x.sin(), epsilon = 1e-13);
        }
    }
}
