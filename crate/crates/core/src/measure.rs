//! Probability measures on the line, empirical measures, and Wasserstein
//! distances computed through quantile coupling.
//!
//! Distances between two empirical measures are exact. Distances against an
//! analytic quantile function use a midpoint rule on `(0,1)` refined inside
//! every step of the empirical quantile.

use crate::error::{PcrError, Result};
use crate::scalar::{from_usize, lit, Scalar};
use std::fmt;
use std::sync::Arc;

/// Default number of interior quadrature points for analytic quantiles.
pub const DEFAULT_QUANTILE_GRID: usize = 4096;

/// Weights below this are dropped before renormalizing.
pub const WEIGHT_PRUNE: f64 = 1e-15;

fn prune_and_normalize<T: Scalar>(weights: &[T]) -> Result<(Vec<bool>, T)> {
    let mut keep = Vec::with_capacity(weights.len());
    let mut total = T::zero();
    for &w in weights {
        if !w.is_finite() || w < T::zero() {
            return Err(PcrError::InvalidInput("weights must be finite and nonnegative".into()));
        }
        let k = w >= lit(WEIGHT_PRUNE);
        if k {
            total = total + w;
        }
        keep.push(k);
    }
    if total <= T::zero() {
        return Err(PcrError::InvalidInput("all weights vanish".into()));
    }
    Ok((keep, total))
}

/// Finite weighted sample on the real line, stored in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure<T> {
    samples: Vec<T>,
    weights: Option<Vec<T>>,
}

impl<T: Scalar> EmpiricalMeasure<T> {
    /// Equal-weight empirical measure of `samples`.
    pub fn new(mut samples: Vec<T>) -> Result<Self> {
        if samples.is_empty() {
            return Err(PcrError::InvalidInput("empty sample set".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(PcrError::InvalidInput("non-finite sample".into()));
        }
        samples.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
        Ok(Self { samples, weights: None })
    }

    /// Weighted empirical measure; weights are pruned and renormalized.
    pub fn with_weights(samples: Vec<T>, weights: Vec<T>) -> Result<Self> {
        if samples.len() != weights.len() {
            return Err(PcrError::InvalidInput("samples and weights differ in length".into()));
        }
        if samples.is_empty() {
            return Err(PcrError::InvalidInput("empty sample set".into()));
        }
        if samples.iter().any(|x| !x.is_finite()) {
            return Err(PcrError::InvalidInput("non-finite sample".into()));
        }
        let (keep, total) = prune_and_normalize(&weights)?;
        let mut pairs: Vec<(T, T)> = samples
            .into_iter()
            .zip(weights)
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|((x, w), _)| (x, w / total))
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite samples"));
        let (samples, weights) = pairs.into_iter().unzip();
        Ok(Self { samples, weights: Some(weights) })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// True when every atom carries weight `1/len`.
    pub fn is_uniform(&self) -> bool {
        self.weights.is_none()
    }

    pub fn weight(&self, i: usize) -> T {
        match &self.weights {
            Some(w) => w[i],
            None => T::one() / from_usize(self.samples.len()),
        }
    }

    /// Left-continuous quantile function `inf{x : F(x) >= u}`.
    pub fn quantile(&self, u: T) -> T {
        let n = self.samples.len();
        if self.weights.is_none() {
            let idx = (u * from_usize(n)).ceil().to_usize().unwrap_or(1).clamp(1, n);
            return self.samples[idx - 1];
        }
        let mut acc = T::zero();
        for i in 0..n {
            acc = acc + self.weight(i);
            if acc >= u {
                return self.samples[i];
            }
        }
        self.samples[n - 1]
    }

    /// Upper ends of the cumulative-weight steps, the last one equal to 1.
    fn step_ends(&self) -> Vec<T> {
        let n = self.samples.len();
        let mut ends = Vec::with_capacity(n);
        let mut acc = T::zero();
        for i in 0..n {
            acc = acc + self.weight(i);
            ends.push(if i + 1 == n { T::one() } else { acc.min(T::one()) });
        }
        ends
    }
}

type QuantileFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
type MomentFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Measure described by its quantile function, optionally with closed-form
/// absolute moments `p -> ∫|x|^p`.
#[derive(Clone)]
pub struct QuantileMeasure<T> {
    quantile: QuantileFn<T>,
    moment: Option<MomentFn<T>>,
}

impl<T> fmt::Debug for QuantileMeasure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuantileMeasure")
            .field("closed_form_moment", &self.moment.is_some())
            .finish()
    }
}

impl<T: Scalar> QuantileMeasure<T> {
    pub fn from_fn(quantile: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        Self { quantile: Arc::new(quantile), moment: None }
    }

    pub fn with_moment(mut self, moment: impl Fn(T) -> T + Send + Sync + 'static) -> Self {
        self.moment = Some(Arc::new(moment));
        self
    }

    /// Uniform law on `[lo, hi]`.
    pub fn uniform(lo: T, hi: T) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(PcrError::InvalidParameter("uniform requires finite lo < hi".into()));
        }
        let q = Self::from_fn(move |u| lo + (hi - lo) * u);
        Ok(if lo >= T::zero() {
            // ∫|x|^p for x ~ U[lo, hi] with lo >= 0.
            q.with_moment(move |p| {
                let p1 = p + T::one();
                (hi.powf(p1) - lo.powf(p1)) / (p1 * (hi - lo))
            })
        } else {
            q
        })
    }

    /// Point mass at `x`.
    pub fn dirac(x: T) -> Self {
        Self::from_fn(move |_| x).with_moment(move |p| x.abs().powf(p))
    }

    /// Exponential law with the given rate.
    pub fn exponential(rate: T) -> Result<Self> {
        if !(rate > T::zero()) {
            return Err(PcrError::InvalidParameter("exponential rate must be positive".into()));
        }
        Ok(Self::from_fn(move |u| -(T::one() - u).ln() / rate).with_moment(move |p| {
            let g = statrs::function::gamma::gamma((p + T::one()).to_f64().unwrap_or(f64::NAN));
            lit::<T>(g) / rate.powf(p)
        }))
    }

    pub fn quantile(&self, u: T) -> T {
        (self.quantile)(u)
    }

    pub fn closed_form_moment(&self, p: T) -> Option<T> {
        self.moment.as_ref().map(|m| m(p))
    }
}

/// Borrowed view of either kind of one-dimensional measure.
#[derive(Debug, Clone, Copy)]
pub enum MeasureRef<'a, T> {
    Empirical(&'a EmpiricalMeasure<T>),
    Quantile(&'a QuantileMeasure<T>),
}

impl<'a, T> From<&'a EmpiricalMeasure<T>> for MeasureRef<'a, T> {
    fn from(m: &'a EmpiricalMeasure<T>) -> Self {
        MeasureRef::Empirical(m)
    }
}

impl<'a, T> From<&'a QuantileMeasure<T>> for MeasureRef<'a, T> {
    fn from(m: &'a QuantileMeasure<T>) -> Self {
        MeasureRef::Quantile(m)
    }
}

/// Finitely supported measure on coefficient vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedPointCloud<T> {
    points: Vec<Vec<T>>,
    weights: Vec<T>,
}

impl<T: Scalar> WeightedPointCloud<T> {
    /// Builds a cloud; `None` weights mean equal weights.
    pub fn new(points: Vec<Vec<T>>, weights: Option<Vec<T>>) -> Result<Self> {
        if points.is_empty() {
            return Err(PcrError::InvalidInput("empty point cloud".into()));
        }
        let dim = points[0].len();
        if points.iter().any(|p| p.len() != dim) {
            return Err(PcrError::InvalidInput("points differ in dimension".into()));
        }
        let weights = weights.unwrap_or_else(|| vec![T::one(); points.len()]);
        if weights.len() != points.len() {
            return Err(PcrError::InvalidInput("points and weights differ in length".into()));
        }
        let (keep, total) = prune_and_normalize(&weights)?;
        let (points, weights) = points
            .into_iter()
            .zip(weights)
            .zip(keep)
            .filter(|(_, k)| *k)
            .map(|((p, w), _)| (p, w / total))
            .unzip();
        Ok(Self { points, weights })
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn points(&self) -> &[Vec<T>] {
        &self.points
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }
}

fn check_p<T: Scalar>(p: T) -> Result<()> {
    if !(p >= T::one()) || !p.is_finite() {
        return Err(PcrError::InvalidParameter(format!("order p must be finite and >= 1, got {p}")));
    }
    Ok(())
}

/// p-Wasserstein distance between two measures on the line, using the default
/// quantile grid for analytic measures.
pub fn wasserstein_1d<'a, T: Scalar>(
    a: &EmpiricalMeasure<T>,
    b: impl Into<MeasureRef<'a, T>>,
    p: T,
) -> Result<T> {
    wasserstein_1d_with_grid(a, b, p, DEFAULT_QUANTILE_GRID)
}

/// As [`wasserstein_1d`] with an explicit minimum number of quadrature points.
pub fn wasserstein_1d_with_grid<'a, T: Scalar>(
    a: &EmpiricalMeasure<T>,
    b: impl Into<MeasureRef<'a, T>>,
    p: T,
    grid: usize,
) -> Result<T> {
    check_p(p)?;
    if grid == 0 {
        return Err(PcrError::InvalidParameter("quantile grid must be nonempty".into()));
    }
    let value = match b.into() {
        MeasureRef::Empirical(b) => transport_cost_empirical(a, b, p),
        MeasureRef::Quantile(b) => transport_cost_quantile(a, b, p, grid),
    };
    if !value.is_finite() {
        return Err(PcrError::NumericFailure("non-finite transport cost".into()));
    }
    Ok(value.powf(T::one() / p))
}

/// Midpoint-rule quantile coupling `(1/G) Σ |F_a^{-1}(u_j) − F_b^{-1}(u_j)|^p`,
/// `u_j = (j − ½)/G`, between two empirical measures.
pub fn wasserstein_1d_quantile_grid<T: Scalar>(
    a: &EmpiricalMeasure<T>,
    b: &EmpiricalMeasure<T>,
    p: T,
    grid: usize,
) -> Result<T> {
    check_p(p)?;
    if grid == 0 {
        return Err(PcrError::InvalidParameter("quantile grid must be nonempty".into()));
    }
    let g = from_usize::<T>(grid);
    let half = lit::<T>(0.5);
    let mut acc = T::zero();
    for j in 0..grid {
        let u = (from_usize::<T>(j) + half) / g;
        acc = acc + (a.quantile(u) - b.quantile(u)).abs().powf(p);
    }
    Ok((acc / g).powf(T::one() / p))
}

/// Exact `∫|F_a^{-1} − F_b^{-1}|^p` for two step quantile functions.
fn transport_cost_empirical<T: Scalar>(a: &EmpiricalMeasure<T>, b: &EmpiricalMeasure<T>, p: T) -> T {
    if a.is_uniform() && b.is_uniform() && a.len() == b.len() {
        let n = from_usize::<T>(a.len());
        let s = a
            .samples
            .iter()
            .zip(&b.samples)
            .fold(T::zero(), |acc, (x, y)| acc + (*x - *y).abs().powf(p));
        return s / n;
    }
    let ea = a.step_ends();
    let eb = b.step_ends();
    let (mut i, mut j) = (0usize, 0usize);
    let mut prev = T::zero();
    let mut acc = T::zero();
    while i < ea.len() && j < eb.len() {
        let next = ea[i].min(eb[j]);
        let width = next - prev;
        if width > T::zero() {
            acc = acc + width * (a.samples[i] - b.samples[j]).abs().powf(p);
        }
        prev = next;
        if ea[i] <= next {
            i += 1;
        }
        if eb[j] <= next {
            j += 1;
        }
    }
    acc
}

/// `∫|F_a^{-1} − Q_b|^p` with a midpoint rule refined inside each step of `a`
/// so that at least `grid` interior points are used overall.
fn transport_cost_quantile<T: Scalar>(a: &EmpiricalMeasure<T>, b: &QuantileMeasure<T>, p: T, grid: usize) -> T {
    let ends = a.step_ends();
    let g = from_usize::<T>(grid);
    let half = lit::<T>(0.5);
    let mut prev = T::zero();
    let mut acc = T::zero();
    for (i, &end) in ends.iter().enumerate() {
        let width = end - prev;
        if width <= T::zero() {
            continue;
        }
        let m = (width * g).ceil().to_usize().unwrap_or(1).max(1);
        let h = width / from_usize(m);
        let x = a.samples[i];
        let mut part = T::zero();
        for k in 0..m {
            let u = prev + (from_usize::<T>(k) + half) * h;
            part = part + (x - b.quantile(u)).abs().powf(p);
        }
        acc = acc + part * h;
        prev = end;
    }
    acc
}

/// `(Σ_i w_i ‖θ_i − θ0‖^p)^{1/p}`, the p-Wasserstein distance to a point mass.
pub fn wasserstein_to_dirac<T: Scalar>(cloud: &WeightedPointCloud<T>, theta0: &[T], p: T) -> Result<T> {
    check_p(p)?;
    if theta0.len() != cloud.dim() {
        return Err(PcrError::InvalidInput(format!(
            "theta0 has dimension {} but cloud points have dimension {}",
            theta0.len(),
            cloud.dim()
        )));
    }
    let mut acc = T::zero();
    for (pt, &w) in cloud.points.iter().zip(&cloud.weights) {
        let sq = pt
            .iter()
            .zip(theta0)
            .fold(T::zero(), |s, (x, y)| s + (*x - *y) * (*x - *y));
        acc = acc + w * sq.sqrt().powf(p);
    }
    Ok(acc.powf(T::one() / p))
}

/// Absolute moment `∫|x|^p dm`.
pub fn moment_p<'a, T: Scalar>(m: impl Into<MeasureRef<'a, T>>, p: T) -> Result<T> {
    if !(p > T::zero()) || !p.is_finite() {
        return Err(PcrError::InvalidParameter("moment order must be positive".into()));
    }
    match m.into() {
        MeasureRef::Empirical(e) => {
            let mut acc = T::zero();
            for (i, &x) in e.samples.iter().enumerate() {
                acc = acc + e.weight(i) * x.abs().powf(p);
            }
            Ok(acc)
        }
        MeasureRef::Quantile(q) => {
            if let Some(v) = q.closed_form_moment(p) {
                return Ok(v);
            }
            let grid = DEFAULT_QUANTILE_GRID;
            let g = from_usize::<T>(grid);
            let half = lit::<T>(0.5);
            let mut acc = T::zero();
            for j in 0..grid {
                let x = q.quantile((from_usize::<T>(j) + half) / g);
                if !x.is_finite() {
                    return Err(PcrError::InvalidInput("quantile returned a non-finite value".into()));
                }
                acc = acc + x.abs().powf(p);
            }
            Ok(acc / g)
        }
    }
}
