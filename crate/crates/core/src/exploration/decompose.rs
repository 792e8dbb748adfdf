use serde::{Deserialize, Serialize};

use crate::sampler::binom_f64;
use crate::theory::ModelParams;

/// Martingale decomposition of one trace, indexed like the trace itself.
/// Index 0 carries the initial values `D = Δ = α = S = x = Ã = 0`, `β = 1`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Decomposition {
    /// Conditional drift `D_t = E[η_t - 1 | F_{t-1}]`.
    pub drift: Vec<f64>,
    /// Martingale increment `Δ_t = η_t - E[η_t | F_{t-1}]`.
    pub delta: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub s: Vec<f64>,
    /// Deterministic trajectory `x_t`.
    pub x: Vec<f64>,
    /// `Ã_t = x_t + β_t S_t`.
    pub a_tilde: Vec<f64>,
    /// Residual of the linear drift model: `(A_t - A_{t-1}) - (α_t(N-t+1-A_{t-1}) - 1) - Δ_t`.
    pub eps: Vec<f64>,
}

impl Decomposition {
    pub(crate) fn with_capacity(n: usize) -> Self {
        let v = || Vec::with_capacity(n);
        Self {
            drift: v(),
            delta: v(),
            alpha: v(),
            beta: v(),
            s: v(),
            x: v(),
            a_tilde: v(),
            eps: v(),
        }
    }

    fn push(&mut self, st: &StepTerms) {
        self.drift.push(st.drift);
        self.delta.push(st.delta);
        self.alpha.push(st.alpha);
        self.beta.push(st.beta);
        self.s.push(st.s);
        self.x.push(st.x);
        self.a_tilde.push(st.a_tilde);
        self.eps.push(st.eps);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct StepTerms {
    pub drift: f64,
    pub delta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
    pub x: f64,
    pub a_tilde: f64,
    pub eps: f64,
}

/// Online evaluation of the decomposition from the `(η_t, restart_t)`
/// sequence.
///
/// The conditional mean of `η_t` is `c_t π` with the exact marginal
/// `π = 1 - (1-p)^ν_t`, `ν_t = C(N-t-1, d-2)`, and `c_t` the number of
/// unseen vertices that can be activated at step `t`: the true unseen count
/// before the step, minus one when the explored vertex itself was taken from
/// the unseen set (a restart). Before the first restart `c_t = U_{t-1}`.
#[derive(Debug, Clone)]
pub(crate) struct Decomposer {
    n: u64,
    d: u32,
    p: f64,
    ln_q: f64,
    t: u64,
    /// Formal walk `A_t = A_{t-1} + η_t - 1`.
    a: i64,
    restarts: i64,
    beta: f64,
    s: f64,
    x: f64,
}

impl Decomposer {
    pub(crate) fn new(params: &ModelParams, k: u32) -> Self {
        Self {
            n: params.n,
            d: params.d,
            p: params.p,
            ln_q: (-params.p).ln_1p(),
            t: 0,
            a: k as i64,
            restarts: 0,
            beta: 1.0,
            s: 0.0,
            x: 0.0,
        }
    }

    pub(crate) fn initial() -> StepTerms {
        StepTerms {
            drift: 0.0,
            delta: 0.0,
            alpha: 0.0,
            beta: 1.0,
            s: 0.0,
            x: 0.0,
            a_tilde: 0.0,
            eps: 0.0,
        }
    }

    pub(crate) fn beta(&self) -> f64 {
        self.beta
    }

    pub(crate) fn s(&self) -> f64 {
        self.s
    }

    pub(crate) fn x(&self) -> f64 {
        self.x
    }

    pub(crate) fn step(&mut self, eta: u32, restart: bool) -> StepTerms {
        self.t += 1;
        let t = self.t;
        let remaining = self.n - t;
        let nu = if remaining >= 1 {
            binom_f64(remaining - 1, self.d - 2)
        } else {
            0.0
        };
        let alpha = self.p * nu;
        let pi = -(nu * self.ln_q).exp_m1();

        let true_active = self.a + self.restarts;
        let unseen_before = (self.n - (t - 1)) as i64 - true_active;
        let candidates = (unseen_before - restart as i64) as f64;
        let mean = candidates * pi;
        let drift = mean - 1.0;
        let delta = eta as f64 - mean;

        let a_prev = self.a as f64;
        let base = (self.n - t + 1) as f64;
        let eps = (eta as f64 - 1.0) - (alpha * (base - a_prev) - 1.0) - delta;

        self.beta *= 1.0 - alpha;
        self.s += delta / self.beta;
        self.x = (1.0 - alpha) * self.x + alpha * base - 1.0;
        self.a += eta as i64 - 1;
        self.restarts += restart as i64;

        StepTerms {
            drift,
            delta,
            alpha,
            beta: self.beta,
            s: self.s,
            x: self.x,
            a_tilde: self.x + self.beta * self.s,
            eps,
        }
    }
}

/// Replays a recorded `(η, restart)` sequence.
pub(crate) fn decompose_steps(
    params: &ModelParams,
    k: u32,
    eta: &[u32],
    restart: &[bool],
) -> Decomposition {
    let mut out = Decomposition::with_capacity(eta.len());
    out.push(&Decomposer::initial());
    let mut dec = Decomposer::new(params, k);
    for (&e, &r) in eta.iter().zip(restart).skip(1) {
        out.push(&dec.step(e, r));
    }
    out
}
