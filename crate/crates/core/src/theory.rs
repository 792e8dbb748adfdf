//! Closed-form and fixed-point quantities of the supercritical hypergraph
//! model: edge probability, survival probabilities, the dual branching
//! parameter, the variance constant and the quadratic rate functions, plus
//! the deterministic trajectory functions `g`, `f` and `u`.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::sampler::binom_f64;

/// Above this edge size factorials are handled in log space.
const LOG_SPACE_D: u32 = 20;

/// The model tuple `(d, λ, N)` together with the derived edge probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub d: u32,
    pub lambda: f64,
    pub n: u64,
    pub p: f64,
}

impl ModelParams {
    /// Builds the parameters with `p = λ (d-2)! / N^(d-1)`.
    pub fn new(d: u32, lambda: f64, n: u64) -> Result<Self> {
        let p = edge_probability(d, lambda, n)?;
        Ok(Self { d, lambda, n, p })
    }

    /// Builds the parameters from an explicit edge probability; `λ` is
    /// recovered by inverting the scaling.
    pub fn with_p(d: u32, n: u64, p: f64) -> Result<Self> {
        check_shape(d, n)?;
        if !(0.0..=1.0).contains(&p) {
            return invalid("p", format!("edge probability {p} must lie in [0, 1]"));
        }
        let lambda = (p.ln() + (d as f64 - 1.0) * (n as f64).ln() - ln_factorial(d - 2)).exp();
        Ok(Self { d, lambda, n, p })
    }

    pub fn epsilon(&self) -> f64 {
        self.lambda - 1.0
    }

    pub fn require_supercritical(&self) -> Result<()> {
        if self.lambda > 1.0 {
            Ok(())
        } else {
            invalid(
                "lambda",
                format!("{} must exceed 1 (supercritical regime)", self.lambda),
            )
        }
    }
}

fn check_shape(d: u32, n: u64) -> Result<()> {
    if d < 2 {
        return invalid("d", format!("edge size {d} must be at least 2"));
    }
    if n < d as u64 {
        return invalid("N", format!("vertex count {n} must be at least d = {d}"));
    }
    Ok(())
}

fn ln_factorial(m: u32) -> f64 {
    ln_gamma(m as f64 + 1.0)
}

fn factorial_exact(m: u32) -> f64 {
    (1..=m as u64).product::<u64>() as f64
}

/// `p = λ (d-2)! / N^(d-1)`.
pub fn edge_probability(d: u32, lambda: f64, n: u64) -> Result<f64> {
    check_shape(d, n)?;
    if !(lambda > 0.0) || !lambda.is_finite() {
        return invalid("lambda", format!("{lambda} must be positive and finite"));
    }
    let p = if d > LOG_SPACE_D {
        (lambda.ln() + ln_factorial(d - 2) - (d as f64 - 1.0) * (n as f64).ln()).exp()
    } else {
        lambda * factorial_exact(d - 2) / (n as f64).powi(d as i32 - 1)
    };
    if p > 1.0 {
        return invalid(
            "lambda",
            format!("edge probability {p} exceeds 1 for d = {d}, N = {n}, lambda = {lambda}"),
        );
    }
    Ok(p)
}

fn require_lambda(lambda: f64) -> Result<()> {
    if lambda > 1.0 && lambda.is_finite() {
        Ok(())
    } else {
        invalid(
            "lambda",
            format!("{lambda} must exceed 1; the root is 0 otherwise"),
        )
    }
}

/// Finds the root of a function that is positive on `(0, root)` and negative
/// on `(root, hi]`. Bisection narrows the bracket to relative width 1e-6,
/// then safeguarded Newton polishes.
fn bracketed_root(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
) -> Result<f64> {
    if !(f(lo) > 0.0 && f(hi) < 0.0) {
        return Err(Error::Solver(format!("no sign change on [{lo}, {hi}]")));
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..100 {
        let fx = f(x);
        if fx == 0.0 {
            return Ok(x);
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - fx / df(x);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - x).abs() <= 1e-16 * x.abs() {
            return Ok(next);
        }
        x = next;
    }
    Ok(x)
}

/// Walks a candidate lower bracket down until the function is positive there.
fn positive_lower_bracket(f: &impl Fn(f64) -> f64, guess: f64) -> f64 {
    let mut lo = guess.min(0.5);
    while !(f(lo) > 0.0) && lo > f64::MIN_POSITIVE {
        lo *= 0.5;
    }
    lo
}

/// Survival probability of the Poisson(λ) branching process, the root in
/// `(0, 1)` of `1 - ρ = exp(-λρ)`.
pub fn solve_rho2(lambda: f64) -> Result<f64> {
    require_lambda(lambda)?;
    let h = |r: f64| -r - (-lambda * r).exp_m1();
    let dh = |r: f64| -1.0 + lambda * (-lambda * r).exp();
    let lo = positive_lower_bracket(&h, (lambda - 1.0) / (lambda * lambda));
    bracketed_root(h, dh, lo, 1.0)
}

/// `1 - (1 - x)^(d-1)`, accurate for small `x`.
fn one_minus_pow(x: f64, d: u32) -> f64 {
    -((d as f64 - 1.0) * (-x).ln_1p()).exp_m1()
}

/// The giant-component density: root in `(0, 1)` of
/// `1 - ρ = exp(-(λ/(d-1)) (1 - (1-ρ)^(d-1)))`, cross-checked against
/// `1 - (1 - ρ_λ)^(1/(d-1))`.
pub fn solve_rho_d(d: u32, lambda: f64) -> Result<f64> {
    if d < 2 {
        return invalid("d", format!("edge size {d} must be at least 2"));
    }
    require_lambda(lambda)?;
    let k = lambda / (d as f64 - 1.0);
    let gf = |x: f64| -x - (-k * one_minus_pow(x, d)).exp_m1();
    let dg =
        |x: f64| -1.0 + lambda * (1.0 - x).powi(d as i32 - 2) * (-k * one_minus_pow(x, d)).exp();
    let guess = (lambda - 1.0) / (lambda * (d as f64 - 2.0) + lambda * lambda);
    let lo = positive_lower_bracket(&gf, guess);
    let rho = bracketed_root(gf, dg, lo, 1.0)?;

    let rho2 = solve_rho2(lambda)?;
    let via_rho2 = -((-rho2).ln_1p() / (d as f64 - 1.0)).exp_m1();
    if (rho - via_rho2).abs() > 1e-10 {
        return Err(Error::Solver(format!(
            "rho_d = {rho} disagrees with 1-(1-rho_2)^(1/(d-1)) = {via_rho2}"
        )));
    }
    Ok(rho)
}

/// Dual (subcritical) branching parameter `λ* = λ (1 - ρ̄)^(d-1)`.
pub fn dual_lambda(d: u32, lambda: f64) -> Result<f64> {
    let rho = solve_rho_d(d, lambda)?;
    Ok(lambda * (1.0 - rho).powi(d as i32 - 1))
}

fn c_from(lambda: f64, rho: f64, lambda_star: f64) -> f64 {
    let q = 1.0 - rho;
    lambda * q * q - lambda_star * q + rho * q
}

/// The martingale variance constant
/// `c = λ(1-ρ̄)² - λ*(1-ρ̄) + ρ̄(1-ρ̄)`.
pub fn variance_constant(d: u32, lambda: f64) -> Result<f64> {
    let rho = solve_rho_d(d, lambda)?;
    let lambda_star = lambda * (1.0 - rho).powi(d as i32 - 1);
    Ok(c_from(lambda, rho, lambda_star))
}

/// Quadratic rate `I(x) = x² / 2c`.
pub fn rate_i(x: f64, c: f64) -> Result<f64> {
    if !(c > 0.0) {
        return invalid("c", format!("variance constant {c} must be positive"));
    }
    Ok(x * x / (2.0 * c))
}

/// Rate of the giant component, `J(y) = I(y (1 - λ*))`.
pub fn rate_j(y: f64, d: u32, lambda: f64) -> Result<f64> {
    TheoryConstants::compute(d, lambda)?.rate_j(y)
}

/// `g(x) = 1 - x - exp(-(λ/(d-1)) (1 - (1-x)^(d-1)))`.
pub fn g(x: f64, d: u32, lambda: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return invalid("x", format!("{x} must lie in [0, 1]"));
    }
    Ok(g_unchecked(x, d, lambda))
}

fn g_unchecked(x: f64, d: u32, lambda: f64) -> f64 {
    let k = lambda / (d as f64 - 1.0);
    -x - (-k * one_minus_pow(x, d)).exp_m1()
}

fn check_time(t: u64, params: &ModelParams) -> Result<()> {
    if t > params.n {
        return invalid("t", format!("{t} exceeds N = {}", params.n));
    }
    Ok(())
}

/// Deterministic trajectory `f(t) = N g(t/N)`.
pub fn f(t: u64, params: &ModelParams) -> Result<f64> {
    check_time(t, params)?;
    let n = params.n as f64;
    Ok(n * g_unchecked(t as f64 / n, params.d, params.lambda))
}

/// Expected unseen count `u(i) = N exp(-(λ/(d-1)) (1 - (1-i/N)^(d-1)))`.
pub fn u(i: u64, params: &ModelParams) -> Result<f64> {
    check_time(i, params)?;
    Ok(u_unchecked(i as f64, params))
}

fn u_unchecked(i: f64, params: &ModelParams) -> f64 {
    let n = params.n as f64;
    let k = params.lambda / (params.d as f64 - 1.0);
    n * (-k * one_minus_pow(i / n, params.d)).exp()
}

/// `λ(d-2)(1-t/N)^(d-3) U²/N² + λ(1-t/N)^(d-2) U/N`; the first term is
/// identically zero for graphs.
pub fn asymptotic_conditional_variance(t: u64, unseen: u64, params: &ModelParams) -> Result<f64> {
    if t >= params.n {
        return invalid("t", format!("{t} must be below N = {}", params.n));
    }
    if unseen > params.n - t {
        return invalid("U", format!("{unseen} exceeds N - t = {}", params.n - t));
    }
    Ok(conditional_variance_term(t as f64, unseen as f64, params))
}

fn conditional_variance_term(t: f64, unseen: f64, params: &ModelParams) -> f64 {
    let n = params.n as f64;
    let lambda = params.lambda;
    let s = 1.0 - t / n;
    let r = unseen / n;
    let pair = if params.d == 2 {
        0.0
    } else {
        lambda * (params.d as f64 - 2.0) * s.powi(params.d as i32 - 3) * r * r
    };
    pair + lambda * s.powi(params.d as i32 - 2) * r
}

/// `α_j = p C(N-j-1, d-2)`.
pub(crate) fn alpha(j: u64, params: &ModelParams) -> f64 {
    if j + 1 > params.n {
        return 0.0;
    }
    params.p * binom_f64(params.n - j - 1, params.d - 2)
}

/// Finite-N Riemann sum whose limit is `c`:
/// `(1/N) Σ_{i<⌊ρ̄N⌋} (β_m/β_{i+1})² [λ(d-2)(1-i/N)^(d-3) u_i²/N² + λ(1-i/N)^(d-2) u_i/N]`
/// with `β` accumulated in log space.
pub fn numeric_c(params: &ModelParams) -> Result<f64> {
    params.require_supercritical()?;
    if params.n < 1000 {
        return invalid(
            "N",
            format!(
                "{} is too small for the variance sum (need N >= 1000)",
                params.n
            ),
        );
    }
    let rho = solve_rho_d(params.d, params.lambda)?;
    let m = (rho * params.n as f64).floor() as u64;
    let mut ln_beta = Vec::with_capacity(m as usize + 1);
    ln_beta.push(0.0f64);
    let mut acc = 0.0f64;
    for j in 1..=m {
        acc += (-alpha(j, params)).ln_1p();
        ln_beta.push(acc);
    }
    let ln_beta_m = ln_beta[m as usize];
    let mut sum = 0.0;
    for i in 0..m {
        let weight = (2.0 * (ln_beta_m - ln_beta[i as usize + 1])).exp();
        let ui = u_unchecked(i as f64, params);
        sum += weight * conditional_variance_term(i as f64, ui, params);
    }
    Ok(sum / params.n as f64)
}

/// Every derived constant for a supercritical `(d, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryConstants {
    pub d: u32,
    pub lambda: f64,
    pub rho2: f64,
    pub rho_d: f64,
    pub lambda_star: f64,
    pub c: f64,
    /// Gaussian-scale variance `c / (1 - λ*)²` of the giant component.
    pub sigma2: f64,
}

impl TheoryConstants {
    pub fn compute(d: u32, lambda: f64) -> Result<Self> {
        let rho2 = solve_rho2(lambda)?;
        let rho_d = solve_rho_d(d, lambda)?;
        let lambda_star = lambda * (1.0 - rho_d).powi(d as i32 - 1);
        let c = c_from(lambda, rho_d, lambda_star);
        let sigma2 = c / ((1.0 - lambda_star) * (1.0 - lambda_star));
        Ok(Self {
            d,
            lambda,
            rho2,
            rho_d,
            lambda_star,
            c,
            sigma2,
        })
    }

    pub fn for_params(params: &ModelParams) -> Result<Self> {
        Self::compute(params.d, params.lambda)
    }

    pub fn rate_i(&self, x: f64) -> Result<f64> {
        rate_i(x, self.c)
    }

    pub fn rate_j(&self, y: f64) -> Result<f64> {
        rate_i(y * (1.0 - self.lambda_star), self.c)
    }

    /// Inverse of `J` on `y >= 0`: the deviation level with `J(y) = rate`.
    pub fn y_for_rate(&self, rate: f64) -> f64 {
        (2.0 * self.c * rate).sqrt() / (1.0 - self.lambda_star)
    }
}

/// Strength of the supercritical regime relative to the moderate-deviation
/// exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub epsilon: f64,
    pub tau: f64,
    /// `ε³ N^τ`.
    pub strength: f64,
    pub reliable: bool,
}

/// Runs below this value of `ε³ N^τ` are flagged, never rejected.
pub const REGIME_THRESHOLD: f64 = 10.0;

pub fn validate_regime(params: &ModelParams, alpha: f64, iota: f64) -> Result<RegimeReport> {
    if !(alpha > 0.5 && alpha < 1.0) {
        return invalid("alpha", format!("alpha must lie in (1/2, 1), got {alpha}"));
    }
    if !(iota > 0.0) {
        return invalid("iota", format!("{iota} must be positive"));
    }
    let epsilon = params.epsilon();
    let tau = 0.5f64.min(2.0 - 2.0 * alpha - iota);
    let strength = epsilon.powi(3) * (params.n as f64).powf(tau);
    Ok(RegimeReport {
        epsilon,
        tau,
        strength,
        reliable: strength >= REGIME_THRESHOLD,
    })
}
