//! Quadrature rules on bounded intervals.

use crate::error::{PcrError, Result};
use std::sync::OnceLock;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule, nodes found by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if n == 1 { x } else { p1 };
                let pm = if n == 1 { 1.0 } else { p0 };
                dp = nf * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // Map from [-1, 1] to [0, 1].
            nodes[i] = 0.5 * (1.0 - x);
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    /// Shared 2048-node rule used for log-partition functions.
    pub fn standard() -> &'static GaussLegendre {
        static RULE: OnceLock<GaussLegendre> = OnceLock::new();
        RULE.get_or_init(|| GaussLegendre::new(2048))
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const G_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and its difference from the embedded Gauss rule, for a
/// vector-valued integrand.
fn gk15(f: &impl Fn(f64) -> Vec<f64>, a: f64, b: f64, dim: usize) -> (Vec<f64>, Vec<f64>) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let fc = f(c);
    for d in 0..dim {
        k[d] = GK_WEIGHTS[7] * fc[d];
        g[d] = G_WEIGHTS[3] * fc[d];
    }
    for j in 0..7 {
        let x = h * GK_NODES[j];
        let f1 = f(c - x);
        let f2 = f(c + x);
        for d in 0..dim {
            let s = f1[d] + f2[d];
            k[d] += GK_WEIGHTS[j] * s;
            if j % 2 == 1 {
                g[d] += G_WEIGHTS[j / 2] * s;
            }
        }
    }
    let est: Vec<f64> = k.iter().map(|v| v * h).collect();
    let err: Vec<f64> = k.iter().zip(&g).map(|(kv, gv)| ((kv - gv) * h).abs()).collect();
    (est, err)
}

/// Adaptive Gauss–Kronrod integration of a vector-valued integrand with an
/// absolute tolerance per component.
pub fn adaptive_vec(f: impl Fn(f64) -> Vec<f64>, a: f64, b: f64, dim: usize, abs_tol: f64) -> Result<Vec<f64>> {
    const MAX_INTERVALS: usize = 4000;
    let mut total = vec![0.0; dim];
    let mut stack = vec![(a, b, abs_tol)];
    let mut intervals = 0;
    while let Some((lo, hi, tol)) = stack.pop() {
        intervals += 1;
        if intervals > MAX_INTERVALS {
            return Err(PcrError::NumericFailure(format!(
                "adaptive quadrature on [{a}, {b}] did not reach tolerance {abs_tol}"
            )));
        }
        let (est, err) = gk15(&f, lo, hi, dim);
        if est.iter().any(|v| !v.is_finite()) {
            return Err(PcrError::NumericFailure("non-finite integrand".into()));
        }
        let worst = err.iter().copied().fold(0.0, f64::max);
        if worst <= tol || (hi - lo) < 1e-12 * (b - a) {
            for d in 0..dim {
                total[d] += est[d];
            }
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((mid, hi, tol / 2.0));
            stack.push((lo, mid, tol / 2.0));
        }
    }
    Ok(total)
}

/// Scalar adaptive Gauss–Kronrod integration.
pub fn adaptive(f: impl Fn(f64) -> f64, a: f64, b: f64, abs_tol: f64) -> Result<f64> {
    Ok(adaptive_vec(|x| vec![f(x)], a, b, 1, abs_tol)?[0])
}

/// Uniform grid of `[0, 1]` with `intervals + 1` nodes.
pub fn unit_grid(intervals: usize) -> Vec<f64> {
    (0..=intervals).map(|i| i as f64 / intervals as f64).collect()
}

/// Running trapezoid integral of values sampled on a uniform grid.
pub fn cumulative_trapezoid(values: &[f64], step: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * step * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Running integral `∫_0^{x_i} f` of values on a uniform grid, fourth-order
/// accurate (cubic interpolation on each interval).
pub fn cumulative_integral(values: &[f64], step: f64) -> Vec<f64> {
    let n = values.len();
    if n < 4 {
        return cumulative_trapezoid(values, step);
    }
    let f = values;
    let mut out = Vec::with_capacity(n);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 0..n - 1 {
        let piece = if i == 0 {
            9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]
        } else if i == n - 2 {
            9.0 * f[n - 1] + 19.0 * f[n - 2] - 5.0 * f[n - 3] + f[n - 4]
        } else {
            -f[i - 1] + 13.0 * f[i] + 13.0 * f[i + 1] - f[i + 2]
        };
        acc += piece * step / 24.0;
        out.push(acc);
    }
    out
}

/// Composite Simpson weights for an odd number of uniform nodes.
pub fn simpson_weights(nodes: usize, step: f64) -> Vec<f64> {
    assert!(nodes >= 3 && nodes % 2 == 1, "Simpson needs an odd node count >= 3");
    (0..nodes)
        .map(|i| {
            let c = if i == 0 || i == nodes - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * step / 3.0
        })
        .collect()
}
