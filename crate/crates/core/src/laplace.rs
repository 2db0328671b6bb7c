//! Rate formulas: Gaussian ratio series, the max-term Poincaré rate,
//! truncated traces, predicted exponents, and assembly of the four-term bound.

use crate::error::{PcrError, Result};
use crate::scalar::{from_usize, lit, Scalar};

/// Terms smaller than this (relative to the partial sum) stop exponential series.
const EXP_SERIES_FLOOR: f64 = 1e-300;
/// Direct summation hands over to the analytic tail once `nλ_kγ_k` drops below this.
const TAIL_SWITCH: f64 = 1e-2;
/// Minimum number of directly summed terms before the analytic tail is used.
const MIN_DIRECT_TERMS: usize = 64;
/// Consecutive decreases that end the max-term scan.
const MAXTERM_PATIENCE: usize = 64;
/// Hard cap on scanned indices.
const MAX_SCAN: usize = 100_000_000;

/// A positive (or zero) sequence indexed by `k = 1, 2, ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum Sequence<T> {
    /// Explicit values; entries past the end are zero.
    Array(Vec<T>),
    /// `scale · k^{-exponent}`.
    Power { scale: T, exponent: T },
    /// `e^{-k^r}`.
    Exponential { r: T },
    /// Identically zero.
    Zero,
}

impl<T: Scalar> Sequence<T> {
    pub fn power(exponent: T) -> Self {
        Sequence::Power { scale: T::one(), exponent }
    }

    /// Value at the 1-based index `k`.
    pub fn at(&self, k: usize) -> T {
        match self {
            Sequence::Array(v) => v.get(k - 1).copied().unwrap_or_else(T::zero),
            Sequence::Power { scale, exponent } => *scale * from_usize::<T>(k).powf(-*exponent),
            Sequence::Exponential { r } => (-from_usize::<T>(k).powf(*r)).exp(),
            Sequence::Zero => T::zero(),
        }
    }

    /// Number of nonzero entries when finite.
    pub fn finite_len(&self) -> Option<usize> {
        match self {
            Sequence::Array(v) => Some(v.len()),
            Sequence::Zero => Some(0),
            _ => None,
        }
    }
}

/// Spectral data: prior eigenvalues λ_k, Fisher eigenvalues γ_k, Hessian
/// lower-bound eigenvalues η_k (default γ_k), Fourier coefficients ω_k of
/// `θ0 − m` and prior-mean coefficients m_k.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecay<T> {
    pub lambda: Sequence<T>,
    pub gamma: Sequence<T>,
    pub eta: Option<Sequence<T>>,
    pub omega: Sequence<T>,
    pub mean: Sequence<T>,
}

impl<T: Scalar> SpectralDecay<T> {
    /// `λ_k = k^{-(1+a)}`, `γ_k = k^{-b}`, `ω = 0`.
    pub fn power(a: T, b: T) -> Self {
        Self {
            lambda: Sequence::power(T::one() + a),
            gamma: Sequence::power(b),
            eta: None,
            omega: Sequence::Zero,
            mean: Sequence::Zero,
        }
    }

    /// Adds `ω_k² = k^{-(1+c)}`.
    pub fn with_omega_power(mut self, c: T) -> Self {
        self.omega = Sequence::power((T::one() + c) / lit(2.0));
        self
    }

    /// Explicit finite arrays for λ and γ.
    pub fn from_arrays(lambda: Vec<T>, gamma: Vec<T>) -> Self {
        Self {
            lambda: Sequence::Array(lambda),
            gamma: Sequence::Array(gamma),
            eta: None,
            omega: Sequence::Zero,
            mean: Sequence::Zero,
        }
    }

    pub fn eta_at(&self, k: usize) -> T {
        self.eta.as_ref().unwrap_or(&self.gamma).at(k)
    }

    /// Checks positivity and the trace-class condition.
    pub fn validate(&self) -> Result<()> {
        let positive = |s: &Sequence<T>, name: &str, allow_zero: bool| -> Result<()> {
            match s {
                Sequence::Array(v) => {
                    if v.iter().any(|x| !x.is_finite() || (!allow_zero && *x <= T::zero())) {
                        return Err(PcrError::InvalidSpec(format!("{name} must be finite and positive")));
                    }
                }
                Sequence::Power { scale, exponent } => {
                    if !(*scale > T::zero()) || !exponent.is_finite() {
                        return Err(PcrError::InvalidSpec(format!("{name} power family needs positive scale")));
                    }
                }
                Sequence::Exponential { r } => {
                    if !(*r > T::zero()) {
                        return Err(PcrError::InvalidSpec(format!("{name} exponential family needs r > 0")));
                    }
                }
                Sequence::Zero => {
                    if !allow_zero {
                        return Err(PcrError::InvalidSpec(format!("{name} cannot be identically zero")));
                    }
                }
            }
            Ok(())
        };
        positive(&self.lambda, "lambda", false)?;
        positive(&self.gamma, "gamma", false)?;
        if let Some(eta) = &self.eta {
            positive(eta, "eta", false)?;
        }
        positive(&self.omega, "omega", true)?;
        if let Sequence::Power { exponent, .. } = self.lambda {
            if exponent <= T::one() {
                return Err(PcrError::InvalidSpec("sum of lambda_k diverges (exponent <= 1)".into()));
            }
        }
        if let Sequence::Power { exponent, .. } = self.omega {
            if exponent <= lit(0.5) {
                return Err(PcrError::InvalidSpec("sum of omega_k^2 diverges".into()));
            }
        }
        Ok(())
    }
}

/// Hurwitz zeta `Σ_{k≥0} (q+k)^{-s}` by Euler–Maclaurin, for `s > 1`, `q ≥ 1`.
pub fn hurwitz_zeta<T: Scalar>(s: T, q: T) -> T {
    // B_{2j}/(2j)! for j = 1..8.
    const COEF: [f64; 8] = [
        1.0 / 12.0,
        -1.0 / 720.0,
        1.0 / 30240.0,
        -1.0 / 1209600.0,
        1.0 / 47900160.0,
        -691.0 / 1307674368000.0,
        1.0 / 74724249600.0,
        -3617.0 / 10670622842880000.0,
    ];
    let shift = 16usize;
    let mut direct = T::zero();
    for k in 0..shift {
        direct = direct + (q + from_usize(k)).powf(-s);
    }
    let x = q + from_usize(shift);
    let mut tail = x.powf(T::one() - s) / (s - T::one()) + x.powf(-s) / lit(2.0);
    // Rising factorial s(s+1)...(s+2j-2) times x^{-s-2j+1}.
    let mut rising = s;
    let mut xpow = x.powf(-s - T::one());
    let x2 = x * x;
    for (j, c) in COEF.iter().enumerate() {
        if j > 0 {
            let m = from_usize::<T>(2 * j);
            rising = rising * (s + m - T::one()) * (s + m);
            xpow = xpow / x2;
        }
        tail = tail + lit::<T>(*c) * rising * xpow;
    }
    direct + tail
}

/// `Σ_{k ≥ start} scale·k^{-s}`.
fn power_tail<T: Scalar>(scale: T, s: T, start: usize) -> T {
    scale * hurwitz_zeta(s, from_usize(start))
}

fn power_params<T: Scalar>(s: &Sequence<T>) -> Option<(T, T)> {
    match s {
        Sequence::Power { scale, exponent } => Some((*scale, *exponent)),
        _ => None,
    }
}

/// `(Σ_k λ_k/(nλ_kγ_k+1), Σ_k ω_k²/(nλ_kγ_k+1)²)`.
pub fn gaussian_ratio_series<T: Scalar>(n: T, spec: &SpectralDecay<T>) -> Result<(T, T)> {
    spec.validate()?;
    if !(n >= T::zero()) {
        return Err(PcrError::InvalidParameter("n must be nonnegative".into()));
    }
    let s1 = ratio_sum(n, spec, |k| spec.lambda.at(k), &spec.lambda, 1, 0)?;
    let s2 = if matches!(spec.omega, Sequence::Zero) {
        T::zero()
    } else {
        ratio_sum(n, spec, |k| spec.omega.at(k).powi(2), &spec.omega, 2, 1)?
    };
    Ok((s1, s2))
}

/// Sums `num_k / (1 + x_k)^pow` with `x_k = nλ_kγ_k`. `numer_seq` is the
/// sequence whose (power of) values form the numerator; `numer_square` says
/// whether the numerator is its square.
fn ratio_sum<T: Scalar>(
    n: T,
    spec: &SpectralDecay<T>,
    numer: impl Fn(usize) -> T,
    numer_seq: &Sequence<T>,
    pow: i32,
    numer_square: i32,
) -> Result<T> {
    let lens = [spec.lambda.finite_len(), spec.gamma.finite_len(), numer_seq.finite_len()];
    let finite = lens.iter().flatten().min().copied();
    let term = |k: usize| -> T {
        let x = n * spec.lambda.at(k) * spec.gamma.at(k);
        numer(k) / (T::one() + x).powi(pow)
    };
    if let Some(len) = finite {
        if let (Some(la), Some(nl)) = (spec.lambda.finite_len(), numer_seq.finite_len()) {
            if nl > la {
                return Err(PcrError::InvalidSpec("omega is longer than lambda".into()));
            }
        }
        return Ok((1..=len).fold(T::zero(), |acc, k| acc + term(k)));
    }
    match (&spec.lambda, &spec.gamma) {
        (Sequence::Exponential { .. }, _) => {
            // x_k vanishes quickly; sum until it is negligible, then add the
            // numerator tail (itself negligible unless the numerator is a power law).
            let floor = lit::<T>(EXP_SERIES_FLOOR);
            let mut acc = T::zero();
            for k in 1..MAX_SCAN {
                let t = term(k);
                acc = acc + t;
                let x = n * spec.lambda.at(k) * spec.gamma.at(k);
                if x < lit(1e-17) {
                    return match numer_seq {
                        Sequence::Power { scale, exponent } => {
                            let m = numer_square + 1;
                            Ok(acc + power_tail(scale.powi(m), *exponent * from_usize::<T>(m as usize), k + 1))
                        }
                        _ if t < floor || t <= acc * lit(1e-18) => Ok(acc),
                        _ => continue,
                    };
                }
            }
            Err(PcrError::InvalidSpec("exponential series did not converge".into()))
        }
        (Sequence::Power { .. }, Sequence::Power { .. }) => {
            power_series_with_tail(n, spec, numer_seq, term, pow, numer_square)
        }
        _ => Err(PcrError::UnsupportedSpec(
            "series needs finite arrays, an exponential lambda, or power-law lambda and gamma".into(),
        )),
    }
}

fn power_series_with_tail<T: Scalar>(
    n: T,
    spec: &SpectralDecay<T>,
    numer_seq: &Sequence<T>,
    term: impl Fn(usize) -> T,
    pow: i32,
    numer_square: i32,
) -> Result<T> {
    let (ls, le) = power_params(&spec.lambda).expect("power lambda");
    let (gs, ge) = power_params(&spec.gamma).expect("power gamma");
    let (ns, ne) = match numer_seq {
        Sequence::Power { scale, exponent } => (*scale, *exponent),
        _ => return Err(PcrError::UnsupportedSpec("omega must be a power law here".into())),
    };
    // numerator = ns^(1+numer_square) k^{-ne(1+numer_square)}
    let m = numer_square + 1;
    let (num_scale, num_exp) = (ns.powi(m), ne * from_usize::<T>(m as usize));
    let switch = lit::<T>(TAIL_SWITCH);
    let mut acc = T::zero();
    let mut k = 1usize;
    loop {
        let x = n * spec.lambda.at(k) * spec.gamma.at(k);
        if k >= MIN_DIRECT_TERMS && x <= switch {
            break;
        }
        acc = acc + term(k);
        k += 1;
        if k > MAX_SCAN {
            return Err(PcrError::InvalidSpec("power series did not reach its tail regime".into()));
        }
    }
    // Tail via (1+x)^{-pow} = Σ_j c_j (−x)^j, c_j = 1 (pow 1) or j+1 (pow 2).
    let eps = lit::<T>(1e-17);
    let x_k = n * spec.lambda.at(k) * spec.gamma.at(k);
    let mut tail = T::zero();
    let mut j = 0usize;
    loop {
        let jt = from_usize::<T>(j);
        let coef = if pow == 1 { T::one() } else { jt + T::one() };
        let sign = if j % 2 == 0 { T::one() } else { -T::one() };
        let scale = num_scale * (n * ls * gs).powi(j as i32);
        let expo = num_exp + jt * (le + ge);
        let piece = if scale == T::zero() { T::zero() } else { coef * power_tail(scale, expo, k) };
        tail = tail + sign * piece;
        // Terms shrink geometrically in x_k; stop when the next is negligible.
        if piece <= eps * (acc + tail).abs() || x_k.powi(j as i32 + 1) * (jt + lit(2.0)) < eps {
            break;
        }
        j += 1;
        if j > 40 {
            return Err(PcrError::NumericFailure("tail expansion did not converge".into()));
        }
    }
    Ok(acc + tail)
}

/// `max_k λ_k/(nλ_kη_k + 1)`.
pub fn maxterm_rate<T: Scalar>(n: T, spec: &SpectralDecay<T>) -> T {
    let term = |k: usize| {
        let l = spec.lambda.at(k);
        l / (n * l * spec.eta_at(k) + T::one())
    };
    let eta_len = spec.eta.as_ref().unwrap_or(&spec.gamma).finite_len();
    let limit = match (spec.lambda.finite_len(), eta_len) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (Some(a), None) | (None, Some(a)) => Some(a),
        (None, None) => None,
    };
    if let Some(len) = limit {
        return (1..=len).map(term).fold(T::zero(), T::max);
    }
    let mut best = term(1);
    let mut prev = best;
    let mut decreasing = 0usize;
    for k in 2..MAX_SCAN {
        let t = term(k);
        if t > best {
            best = t;
        }
        decreasing = if t < prev { decreasing + 1 } else { 0 };
        prev = t;
        if decreasing >= MAXTERM_PATIENCE {
            break;
        }
    }
    best
}

/// Exponents of the two leading bound terms for power families.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct PredictedExponents<T> {
    pub first: T,
    pub fourth: T,
    pub overall: T,
}

/// Reads `(a, b, c)` off power-law λ, γ and ω (`c = None` when ω = 0).
pub fn power_law_parameters<T: Scalar>(spec: &SpectralDecay<T>) -> Result<(T, T, Option<T>)> {
    let (_, le) = power_params(&spec.lambda)
        .ok_or_else(|| PcrError::UnsupportedSpec("lambda is not a power family".into()))?;
    let (_, ge) = power_params(&spec.gamma)
        .ok_or_else(|| PcrError::UnsupportedSpec("gamma is not a power family".into()))?;
    let c = match &spec.omega {
        Sequence::Zero => None,
        Sequence::Power { exponent, .. } => Some(lit::<T>(2.0) * *exponent - T::one()),
        _ => return Err(PcrError::UnsupportedSpec("omega is neither zero nor a power family".into())),
    };
    Ok((le - T::one(), ge, c))
}

pub fn predicted_exponents<T: Scalar>(spec: &SpectralDecay<T>) -> Result<PredictedExponents<T>> {
    let (a, b, c) = power_law_parameters(spec)?;
    Ok(exponents_from_parameters(a, b, c))
}

/// Exponents from `(a, b, c)` directly.
pub fn exponents_from_parameters<T: Scalar>(a: T, b: T, c: Option<T>) -> PredictedExponents<T> {
    let denom = lit::<T>(2.0) * (a + b + T::one());
    let lead = c.map_or(a, |c| a.min(c));
    let first = -lead / denom;
    let fourth = -(a + T::one() - b) / denom;
    PredictedExponents { first, fourth, overall: first.max(fourth) }
}

/// Lower-triangular Cholesky factor of a row-major symmetric matrix.
fn cholesky<T: Scalar>(m: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = m.len();
    let scale = (0..n).map(|i| m[i][i].abs()).fold(T::zero(), T::max);
    let tol = scale * lit(1e-13);
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > tol) {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `L Lᵀ x = b` in place.
fn cholesky_solve<T: Scalar>(l: &[Vec<T>], b: &mut [T]) {
    let n = l.len();
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i][k] * b[k];
        }
        b[i] = s / l[i][i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s = s - l[k][i] * b[k];
        }
        b[i] = s / l[i][i];
    }
}

/// `Tr[(n·I + Q⁻¹)⁻¹]` for symmetric `Q` (positive definite) and `I`
/// (positive semidefinite), both given as square row-major matrices.
pub fn truncated_trace<T: Scalar>(n: T, q: &[Vec<T>], info: &[Vec<T>]) -> Result<T> {
    let dim = q.len();
    if dim == 0 || dim > 512 {
        return Err(PcrError::InvalidInput("matrix size must be in 1..=512".into()));
    }
    if info.len() != dim || q.iter().chain(info).any(|r| r.len() != dim) {
        return Err(PcrError::InvalidInput("matrices must be square and of equal size".into()));
    }
    let l = cholesky(q).ok_or_else(|| PcrError::InvalidInput("Q is not positive definite".into()))?;
    // (nI + Q⁻¹)⁻¹ = L (n LᵀIL + Id)⁻¹ Lᵀ, so the trace is Tr[(n LᵀIL + Id)⁻¹ LᵀL].
    let mut il = vec![vec![T::zero(); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut s = T::zero();
            for k in j..dim {
                s = s + info[i][k] * l[k][j];
            }
            il[i][j] = s;
        }
    }
    let mut b = vec![vec![T::zero(); dim]; dim];
    let mut ltl = vec![vec![T::zero(); dim]; dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut s = T::zero();
            let mut t = T::zero();
            for k in i.max(j)..dim {
                t = t + l[k][i] * l[k][j];
            }
            for k in i..dim {
                s = s + l[k][i] * il[k][j];
            }
            b[i][j] = n * s + if i == j { T::one() } else { T::zero() };
            ltl[i][j] = t;
        }
    }
    for i in 0..dim {
        for j in 0..i {
            let avg = (b[i][j] + b[j][i]) / lit(2.0);
            b[i][j] = avg;
            b[j][i] = avg;
        }
    }
    let lb = cholesky(&b).ok_or_else(|| PcrError::NumericFailure("n·LᵀIL + Id is not positive definite".into()))?;
    let mut trace = T::zero();
    for j in 0..dim {
        let mut col: Vec<T> = (0..dim).map(|i| ltl[i][j]).collect();
        cholesky_solve(&lb, &mut col);
        trace = trace + col[j];
    }
    Ok(trace)
}

/// `(2/n)^{p/2} Γ((d+p)/2)/Γ(d/2)`, the p-th absolute moment of `N(0, I_d/n)`.
pub fn finite_laplace_prediction<T: Scalar>(n: T, d: usize, p: T) -> Result<T> {
    if !(n > T::zero()) || d == 0 || !(p > T::zero()) {
        return Err(PcrError::InvalidParameter("need n > 0, d >= 1, p > 0".into()));
    }
    use statrs::function::gamma::ln_gamma;
    let pf = p.to_f64().unwrap_or(f64::NAN);
    let df = d as f64;
    let log_ratio = ln_gamma((df + pf) / 2.0) - ln_gamma(df / 2.0);
    let nf = n.to_f64().unwrap_or(f64::NAN);
    Ok(lit((pf / 2.0 * (2.0 / nf).ln() + log_ratio).exp()))
}

/// The four terms of the bound and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PcrBoundTerms<T> {
    pub term1_shrinkage: T,
    pub term2_tail_scaled: T,
    pub term3_posterior_tail: T,
    pub term4_lipschitz: T,
    pub total: T,
}

impl<T: Scalar> PcrBoundTerms<T> {
    pub fn from_terms(t1: T, t2: T, t3: T, t4: T) -> Self {
        Self {
            term1_shrinkage: t1,
            term2_tail_scaled: t2,
            term3_posterior_tail: t3,
            term4_lipschitz: t4,
            total: t1 + t2 + t3 + t4,
        }
    }
}

/// Inputs of the exponential-family bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundComponents<T> {
    pub shrinkage: T,
    pub l0n: T,
    pub mean_stat_dev: T,
    pub tail_prob: T,
    pub posterior_moment_ap: T,
    pub a: T,
    pub p: T,
    pub norm_theta0: T,
}

/// term1 = shrinkage, term2 = ‖θ0‖·J, term3 = moment^{1/(ap)}·J^{1−1/(ap)},
/// term4 = L0n·E‖Ŝ_n − S0‖.
pub fn assemble_pcr_bound<T: Scalar>(c: &BoundComponents<T>) -> Result<PcrBoundTerms<T>> {
    if !(c.a > T::one()) {
        return Err(PcrError::InvalidParameter(format!("moment exponent a must exceed 1, got {}", c.a)));
    }
    if !(c.p >= T::one()) {
        return Err(PcrError::InvalidParameter("p must be at least 1".into()));
    }
    let inputs = [c.shrinkage, c.l0n, c.mean_stat_dev, c.tail_prob, c.posterior_moment_ap, c.norm_theta0];
    if inputs.iter().any(|x| !(*x >= T::zero()) || !x.is_finite()) {
        return Err(PcrError::InvalidInput("bound components must be finite and nonnegative".into()));
    }
    let ap = c.a * c.p;
    let term3 = if c.tail_prob == T::zero() {
        T::zero()
    } else {
        c.posterior_moment_ap.powf(T::one() / ap) * c.tail_prob.powf(T::one() - T::one() / ap)
    };
    Ok(PcrBoundTerms::from_terms(c.shrinkage, c.norm_theta0 * c.tail_prob, term3, c.l0n * c.mean_stat_dev))
}

/// Inputs of the bound for general dominated models with an empirical-measure
/// statistic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneralBoundComponents<T> {
    pub shrinkage: T,
    pub l0n: T,
    pub gc_rate: T,
    pub outside_prob: T,
    /// `E[(2∫‖θ‖²π_n)^{1/2} · 1{outside}]`.
    pub outside_moment: T,
    pub norm_theta0: T,
}

/// `3·shrinkage + 2‖θ0‖·P(outside) + outside moment + L0n·GC rate`.
pub fn assemble_general_bound<T: Scalar>(c: &GeneralBoundComponents<T>) -> Result<PcrBoundTerms<T>> {
    let inputs = [c.shrinkage, c.l0n, c.gc_rate, c.outside_prob, c.outside_moment, c.norm_theta0];
    if inputs.iter().any(|x| !(*x >= T::zero()) || !x.is_finite()) {
        return Err(PcrError::InvalidInput("bound components must be finite and nonnegative".into()));
    }
    Ok(PcrBoundTerms::from_terms(
        lit::<T>(3.0) * c.shrinkage,
        lit::<T>(2.0) * c.norm_theta0 * c.outside_prob,
        c.outside_moment,
        c.l0n * c.gc_rate,
    ))
}

/// Ratio `value / n^{exponent}`, the empirical constant in front of an
/// asymptotic rate.
pub fn asymptotic_constant<T: Scalar>(n: T, value: T, exponent: T) -> T {
    value / n.powf(exponent)
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(PcrError::InvalidInput("need at least two paired points".into()));
    }
    if x.iter().chain(y).any(|v| !(*v > T::zero())) {
        return Err(PcrError::InvalidInput("log-log fit needs positive values".into()));
    }
    let lx: Vec<T> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<T> = y.iter().map(|v| v.ln()).collect();
    Ok(ols(&lx, &ly).0)
}

/// `(slope, intercept)` of an ordinary least-squares line.
pub(crate) fn ols<T: Scalar>(x: &[T], y: &[T]) -> (T, T) {
    let n = from_usize::<T>(x.len());
    let mx = x.iter().fold(T::zero(), |a, b| a + *b) / n;
    let my = y.iter().fold(T::zero(), |a, b| a + *b) / n;
    let mut sxy = T::zero();
    let mut sxx = T::zero();
    for (a, b) in x.iter().zip(y) {
        sxy = sxy + (*a - mx) * (*b - my);
        sxx = sxx + (*a - mx) * (*a - mx);
    }
    let slope = if sxx > T::zero() { sxy / sxx } else { T::zero() };
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hurwitz_zeta_matches_known_values() {
        assert_relative_eq!(hurwitz_zeta(2.0, 1.0), std::f64::consts::PI.powi(2) / 6.0, max_relative = 1e-14);
        assert_relative_eq!(hurwitz_zeta(4.0, 1.0), std::f64::consts::PI.powi(4) / 90.0, max_relative = 1e-14);
        // ζ(2, 3) = π²/6 − 1 − 1/4.
        assert_relative_eq!(
            hurwitz_zeta(2.0, 3.0),
            std::f64::consts::PI.powi(2) / 6.0 - 1.25,
            max_relative = 1e-14
        );
    }

    #[test]
    fn series_at_zero_is_trace() {
        let spec = SpectralDecay::power(1.0, 2.0).with_omega_power(3.0);
        let (s1, s2) = gaussian_ratio_series(0.0, &spec).unwrap();
        assert_relative_eq!(s1, std::f64::consts::PI.powi(2) / 6.0, max_relative = 1e-13);
        assert_relative_eq!(s2, std::f64::consts::PI.powi(4) / 90.0, max_relative = 1e-13);
    }

    #[test]
    fn single_mode_series() {
        let spec = SpectralDecay::from_arrays(vec![1.0], vec![1.0]);
        assert_eq!(gaussian_ratio_series(1.0, &spec).unwrap(), (0.5, 0.0));
    }

    #[test]
    fn power_series_matches_brute_force() {
        // Brute force with a huge explicit array plus an integral-test tail.
        let spec = SpectralDecay::power(2.0, 1.0).with_omega_power(1.5);
        for &n in &[0.0, 10.0, 1e4, 1e7] {
            let (s1, s2) = gaussian_ratio_series(n, &spec).unwrap();
            let kmax = 2_000_000usize;
            let mut b1 = 0.0;
            let mut b2 = 0.0;
            for k in (1..=kmax).rev() {
                let kf = k as f64;
                let l = kf.powf(-3.0);
                let x = n * l / kf;
                b1 += l / (1.0 + x);
                b2 += kf.powf(-2.5) / (1.0 + x).powi(2);
            }
            let kf = kmax as f64 + 0.5;
            b1 += kf.powf(-2.0) / 2.0;
            b2 += kf.powf(-1.5) / 1.5;
            assert_relative_eq!(s1, b1, max_relative = 1e-9);
            assert_relative_eq!(s2, b2, max_relative = 1e-7);
        }
    }

    #[test]
    fn exponential_lambda_terminates() {
        let spec = SpectralDecay {
            lambda: Sequence::Exponential { r: 1.0 },
            gamma: Sequence::power(1.0),
            eta: None,
            omega: Sequence::Zero,
            mean: Sequence::Zero,
        };
        let (s1, _) = gaussian_ratio_series(0.0, &spec).unwrap();
        assert_relative_eq!(s1, 1.0 / (std::f64::consts::E - 1.0), max_relative = 1e-14);
    }

    #[test]
    fn divergent_lambda_is_invalid() {
        let spec = SpectralDecay::power(0.0, 1.0);
        assert!(matches!(gaussian_ratio_series(1.0, &spec), Err(PcrError::InvalidSpec(_))));
    }

    #[test]
    fn maxterm_examples() {
        let spec = SpectralDecay::power(1.0, 2.0);
        assert_eq!(maxterm_rate(0.0, &spec), 1.0);
        let spec = SpectralDecay::from_arrays(vec![1.0, 0.1], vec![1.0, 1.0]);
        assert_relative_eq!(maxterm_rate(9.0, &spec), 0.1);
    }

    #[test]
    fn exponent_examples() {
        let e = predicted_exponents(&SpectralDecay::power(15.0, 2.0)).unwrap();
        assert_relative_eq!(e.first, -15.0 / 36.0);
        assert_relative_eq!(e.fourth, -14.0 / 36.0);
        assert_relative_eq!(e.overall, -14.0 / 36.0);
        let e = predicted_exponents(&SpectralDecay::power(1.0, 2.0)).unwrap();
        assert_relative_eq!(e.first, -1.0 / 8.0);
        assert_eq!(e.fourth, 0.0);
        assert_eq!(e.overall, 0.0);
        let e = predicted_exponents(&SpectralDecay::power(2.0, 1.0).with_omega_power(1.0)).unwrap();
        assert_relative_eq!(e.first, -1.0 / 8.0, max_relative = 1e-12);
        let arr = SpectralDecay::from_arrays(vec![1.0], vec![1.0]);
        assert!(matches!(predicted_exponents(&arr), Err(PcrError::UnsupportedSpec(_))));
    }

    #[test]
    fn truncated_trace_diagonal_and_singular() {
        let q = vec![vec![2.0, 0.0], vec![0.0, 0.5]];
        let i = vec![vec![1.0, 0.0], vec![0.0, 3.0]];
        let t = truncated_trace(4.0, &q, &i).unwrap();
        assert_relative_eq!(t, 2.0 / 9.0 + 0.5 / 7.0, max_relative = 1e-14);
        assert_relative_eq!(truncated_trace(0.0, &q, &i).unwrap(), 2.5, max_relative = 1e-14);
        let sing = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        assert!(matches!(truncated_trace(1.0, &sing, &i), Err(PcrError::InvalidInput(_))));
    }

    #[test]
    fn laplace_prediction_is_gaussian_moment() {
        // d = 1, p = 2: E Z² for Z ~ N(0, 1/n) is 1/n.
        assert_relative_eq!(finite_laplace_prediction(10.0, 1, 2.0).unwrap(), 0.1, max_relative = 1e-12);
        assert_relative_eq!(finite_laplace_prediction(5.0, 3, 2.0).unwrap(), 0.6, max_relative = 1e-12);
    }

    #[test]
    fn bound_assembly_examples() {
        let c = BoundComponents {
            shrinkage: 0.3,
            l0n: 0.0,
            mean_stat_dev: 0.0,
            tail_prob: 0.0,
            posterior_moment_ap: 5.0,
            a: 2.0,
            p: 2.0,
            norm_theta0: 1.0,
        };
        assert_eq!(assemble_pcr_bound(&c).unwrap().total, 0.3);
        let ones = BoundComponents {
            shrinkage: 1.0,
            l0n: 1.0,
            mean_stat_dev: 1.0,
            tail_prob: 1.0,
            posterior_moment_ap: 1.0,
            a: 2.0,
            p: 2.0,
            norm_theta0: 1.0,
        };
        let t = assemble_pcr_bound(&ones).unwrap();
        assert_eq!(
            (t.term1_shrinkage, t.term2_tail_scaled, t.term3_posterior_tail, t.term4_lipschitz, t.total),
            (1.0, 1.0, 1.0, 1.0, 4.0)
        );
        let bad = BoundComponents { a: 1.0, ..ones };
        assert!(matches!(assemble_pcr_bound(&bad), Err(PcrError::InvalidParameter(_))));
    }

    #[test]
    fn generic_over_f32() {
        let spec = SpectralDecay::<f32>::power(1.0, 2.0);
        let (s1, _) = gaussian_ratio_series(100.0f32, &spec).unwrap();
        let (d1, _) = gaussian_ratio_series(100.0f64, &SpectralDecay::power(1.0, 2.0)).unwrap();
        assert!(((s1 as f64) - d1).abs() / d1 < 1e-4);
    }
}
