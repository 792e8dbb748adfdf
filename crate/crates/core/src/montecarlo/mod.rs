//! Replicated experiments: law of large numbers and CLT scale of the giant
//! component, moderate-deviation tail rates, the martingale variance at
//! `γ(N) = ⌊ρ̄N + ζN^α⌋`, and the `C_max` versus `C_≤k_N` coupling.
//!
//! Replica `r` always draws from `RngStream(master_seed, r)` and results are
//! gathered in replica order, so every report is independent of the thread
//! count.

mod stats;

use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::components::{connected_components, giant_and_seed_union};
use crate::error::{invalid, Error, Result};
use crate::exploration::{
    explore_stream, stream_hit_time, Backend, ExplorationConfig, Record, Stop,
};
use crate::format::fmt_f64;
use crate::rng::RngStream;
use crate::sampler::sample_hypergraph;
use crate::theory::{ModelParams, TheoryConstants};

pub use stats::{fnv1a64, moments, wilson_interval, Moments, Z95};

/// Tail levels are observable at desk scale when `J(y) N^(2α-1)` is here.
pub const OBSERVABILITY_WINDOW: (f64, f64) = (1.0, 8.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Sample the hypergraph and take the largest component.
    Exact,
    /// Streaming exploration from `k_N` seeds; `|C_≤k_N|` stands in for
    /// `|C_max|`.
    Proxy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub params: ModelParams,
    pub reps: u64,
    /// Moderate-deviation exponent in `(1/2, 1)`.
    pub alpha: f64,
    pub y_grid: Vec<f64>,
    pub zeta: f64,
    /// `k_N = ⌈N^gamma_exp⌉`.
    pub gamma_exp: f64,
    /// `r_N = N^xi_exp`.
    pub xi_exp: f64,
    pub mode: Mode,
    pub master_seed: u64,
    /// Worker threads; 0 uses the available parallelism. Results never
    /// depend on it, so it is left out of the serialized spec.
    #[serde(skip)]
    pub threads: usize,
}

impl ExperimentSpec {
    /// Defaults: `α = 0.6`, `γ = 0.35`, `ξ = 0.45`, `ζ = 0`, proxy mode.
    pub fn new(params: ModelParams, reps: u64) -> Self {
        Self {
            params,
            reps,
            alpha: 0.6,
            y_grid: Vec::new(),
            zeta: 0.0,
            gamma_exp: 0.35,
            xi_exp: 0.45,
            mode: Mode::Proxy,
            master_seed: 0,
            threads: 0,
        }
    }

    /// Checks `1/2 < α < 1` and `2α - 1 < γ < ξ < α`, naming the first
    /// violated inequality.
    pub fn validate(&self) -> Result<()> {
        let (a, g, x) = (self.alpha, self.gamma_exp, self.xi_exp);
        if !(a > 0.5 && a < 1.0) {
            return invalid("alpha", format!("alpha must lie in (1/2, 1), got {a}"));
        }
        if !(g > 2.0 * a - 1.0) {
            return invalid(
                "gamma",
                format!(
                    "need 2*alpha - 1 < gamma, got gamma = {g} <= {}",
                    2.0 * a - 1.0
                ),
            );
        }
        if !(x > g) {
            return invalid(
                "xi",
                format!("need gamma < xi, got xi = {x} <= gamma = {g}"),
            );
        }
        if !(x < a) {
            return invalid(
                "xi",
                format!("need xi < alpha, got xi = {x} >= alpha = {a}"),
            );
        }
        if !self.zeta.is_finite() {
            return invalid("zeta", "must be finite");
        }
        self.params.require_supercritical()
    }

    fn n(&self) -> f64 {
        self.params.n as f64
    }

    /// Moderate-deviation speed `N^(2α-1)`.
    pub fn speed(&self) -> f64 {
        self.n().powf(2.0 * self.alpha - 1.0)
    }

    pub fn k_n(&self) -> u32 {
        (self.n().powf(self.gamma_exp).ceil() as u64).clamp(1, self.params.n) as u32
    }

    pub fn r_n(&self) -> f64 {
        self.n().powf(self.xi_exp)
    }

    /// `⌊ρ̄N⌋`.
    pub fn center(&self, theory: &TheoryConstants) -> u64 {
        (theory.rho_d * self.n()).floor() as u64
    }

    /// `γ(N) = ⌊ρ̄N + ζN^α⌋`, clamped to `0..=N`.
    pub fn gamma_n(&self, theory: &TheoryConstants) -> u64 {
        let v = (theory.rho_d * self.n() + self.zeta * self.n().powf(self.alpha)).floor();
        v.clamp(0.0, self.n()) as u64
    }

    pub fn spec_hash(&self) -> u64 {
        fnv1a64(
            serde_json::to_string(self)
                .expect("spec serializes")
                .as_bytes(),
        )
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.threads)
            .build()
            .map_err(|e| Error::InvalidParameter {
                name: "threads",
                reason: e.to_string(),
            })
    }
}

/// Runs `job(r, stream_r)` for every replica and returns results in replica
/// order.
pub fn run_replicas<T, F>(spec: &ExperimentSpec, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64, &mut RngStream) -> Result<T> + Sync,
{
    spec.pool()?.install(|| {
        (0..spec.reps)
            .into_par_iter()
            .map(|r| job(r, &mut RngStream::new(spec.master_seed, r)))
            .collect()
    })
}

/// One `|C_max|` (exact) or `|C_≤k_N|` (proxy) value per replica.
pub fn run_giant_samples(spec: &ExperimentSpec) -> Result<Vec<u64>> {
    spec.validate()?;
    let params = spec.params;
    match spec.mode {
        Mode::Exact => run_replicas(spec, |_, rng| {
            let h = sample_hypergraph(&params, rng)?;
            Ok(connected_components(&h).l1 as u64)
        }),
        Mode::Proxy => {
            let k = spec.k_n();
            run_replicas(spec, move |_, rng| {
                Ok(stream_hit_time(&params, k, rng)?.unwrap_or(params.n))
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltRecord {
    pub n: u64,
    pub d: u32,
    pub lambda: f64,
    pub reps: u64,
    /// Mean of `(sample - ⌊ρ̄N⌋)/√N`.
    pub mean_scaled: f64,
    pub se_mean_scaled: f64,
    pub var_scaled: f64,
    /// `c / (1 - λ*)²`.
    pub sigma2_theory: f64,
}

pub fn clt_from_samples(spec: &ExperimentSpec, samples: &[u64]) -> Result<CltRecord> {
    let theory = TheoryConstants::for_params(&spec.params)?;
    let center = spec.center(&theory) as f64;
    let root_n = spec.n().sqrt();
    let scaled: Vec<f64> = samples
        .iter()
        .map(|&s| (s as f64 - center) / root_n)
        .collect();
    let m = moments(&scaled);
    Ok(CltRecord {
        n: spec.params.n,
        d: spec.params.d,
        lambda: spec.params.lambda,
        reps: samples.len() as u64,
        mean_scaled: m.mean,
        se_mean_scaled: m.se_mean(),
        var_scaled: m.var,
        sigma2_theory: theory.sigma2,
    })
}

pub fn estimate_clt(spec: &ExperimentSpec) -> Result<CltRecord> {
    if spec.reps < 100 {
        return invalid(
            "reps",
            format!(
                "the CLT estimate needs at least 100 replicas, got {}",
                spec.reps
            ),
        );
    }
    clt_from_samples(spec, &run_giant_samples(spec)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailRecord {
    pub n: u64,
    pub d: u32,
    pub lambda: f64,
    pub alpha: f64,
    pub y: f64,
    pub reps: u64,
    /// Samples strictly above `m_y^+ = ⌊ρ̄N⌋ + yN^α`.
    pub hits_up: u64,
    /// Samples strictly below `m_y^- = ⌊ρ̄N⌋ - yN^α`.
    pub hits_down: u64,
    /// Two-sided exceedance frequency.
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `-ln(p_hat) / N^(2α-1)`; absent without hits.
    pub rate_hat: Option<f64>,
    /// Rate interval from the Wilson bounds. With no hits the lower end comes
    /// from the rule-of-three bound `p <= 3/reps` and the upper end is open.
    pub rate_lo: f64,
    pub rate_hi: Option<f64>,
    pub rate_up: Option<f64>,
    pub rate_down: Option<f64>,
    #[serde(rename = "J_y")]
    pub j_y: f64,
    /// `J(y) N^(2α-1)`.
    pub observability: f64,
}

impl TailRecord {
    pub fn in_window(&self) -> bool {
        (OBSERVABILITY_WINDOW.0..=OBSERVABILITY_WINDOW.1).contains(&self.observability)
    }
}

fn rate_of(hits: u64, reps: u64, speed: f64) -> Option<f64> {
    (hits > 0).then(|| -(hits as f64 / reps as f64).ln() / speed)
}

pub fn tail_from_samples(spec: &ExperimentSpec, samples: &[u64]) -> Result<Vec<TailRecord>> {
    let theory = TheoryConstants::for_params(&spec.params)?;
    let center = spec.center(&theory) as f64;
    let scale = spec.n().powf(spec.alpha);
    let speed = spec.speed();
    let reps = samples.len() as u64;
    spec.y_grid
        .iter()
        .map(|&y| {
            if !(y >= 0.0) {
                return invalid("y", format!("deviation level {y} must be non-negative"));
            }
            let upper = center + y * scale;
            let lower = center - y * scale;
            let hits_up = samples.iter().filter(|&&s| s as f64 > upper).count() as u64;
            let hits_down = samples.iter().filter(|&&s| (s as f64) < lower).count() as u64;
            let hits = hits_up + hits_down;
            let p_hat = if reps > 0 {
                hits as f64 / reps as f64
            } else {
                f64::NAN
            };
            let (ci_lo, ci_hi) = wilson_interval(hits, reps, Z95);
            let (rate_lo, rate_hi) = if hits > 0 {
                (-ci_hi.ln() / speed, Some(-ci_lo.ln() / speed))
            } else {
                (-(3.0 / reps as f64).min(1.0).ln() / speed, None)
            };
            let j_y = theory.rate_j(y)?;
            Ok(TailRecord {
                n: spec.params.n,
                d: spec.params.d,
                lambda: spec.params.lambda,
                alpha: spec.alpha,
                y,
                reps,
                hits_up,
                hits_down,
                p_hat,
                ci_lo,
                ci_hi,
                rate_hat: rate_of(hits, reps, speed),
                rate_lo,
                rate_hi,
                rate_up: rate_of(hits_up, reps, speed),
                rate_down: rate_of(hits_down, reps, speed),
                j_y,
                observability: j_y * speed,
            })
        })
        .collect()
}

pub fn estimate_tail(spec: &ExperimentSpec) -> Result<Vec<TailRecord>> {
    if spec.reps < 1000 {
        return invalid(
            "reps",
            format!(
                "tail estimates need at least 1000 replicas, got {}",
                spec.reps
            ),
        );
    }
    tail_from_samples(spec, &run_giant_samples(spec)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleRecord {
    pub n: u64,
    pub d: u32,
    pub lambda: f64,
    pub alpha: f64,
    pub zeta: f64,
    #[serde(rename = "gamma_N")]
    pub gamma_n: u64,
    pub reps: u64,
    /// Mean of `β_γ(N) S_γ(N)`.
    pub mean: f64,
    pub se_mean: f64,
    /// `Var(β_γ(N) S_γ(N)) / N`.
    pub var_over_n: f64,
    pub c_theory: f64,
}

/// `β_γ(N) S_γ(N)` per replica from streaming runs started at `k_N` seeds.
pub fn martingale_samples(spec: &ExperimentSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let theory = TheoryConstants::for_params(&spec.params)?;
    let cfg = ExplorationConfig::new(spec.k_n(), Backend::Stream)
        .with_stop(Stop::RunToHorizon(spec.gamma_n(&theory)))
        .with_record(Record::Summary);
    let params = spec.params;
    run_replicas(spec, move |_, rng| {
        let tr = explore_stream(&params, &cfg, rng)?;
        Ok(tr.final_beta.unwrap_or(1.0) * tr.final_s.unwrap_or(0.0))
    })
}

pub fn martingale_mdp_check(spec: &ExperimentSpec) -> Result<MartingaleRecord> {
    if spec.reps < 1000 {
        return invalid(
            "reps",
            format!(
                "the martingale check needs at least 1000 replicas, got {}",
                spec.reps
            ),
        );
    }
    let theory = TheoryConstants::for_params(&spec.params)?;
    let m = moments(&martingale_samples(spec)?);
    Ok(MartingaleRecord {
        n: spec.params.n,
        d: spec.params.d,
        lambda: spec.params.lambda,
        alpha: spec.alpha,
        zeta: spec.zeta,
        gamma_n: spec.gamma_n(&theory),
        reps: spec.reps,
        mean: m.mean,
        se_mean: m.se_mean(),
        var_over_n: m.var / spec.n(),
        c_theory: theory.c,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingRecord {
    pub n: u64,
    pub d: u32,
    pub lambda: f64,
    #[serde(rename = "k_N")]
    pub k_n: u32,
    #[serde(rename = "r_N")]
    pub r_n: f64,
    pub reps: u64,
    /// Frequency of `|C_max| > |C_≤k_N|`.
    pub freq_cmax_exceeds: f64,
    /// Frequency of `|C_max| + r_N < |C_≤k_N|`.
    pub freq_union_exceeds: f64,
}

pub fn coupling_check(spec: &ExperimentSpec) -> Result<CouplingRecord> {
    spec.validate()?;
    let params = spec.params;
    let k = spec.k_n();
    let r_n = spec.r_n();
    let pairs = run_replicas(spec, move |_, rng| {
        let h = sample_hypergraph(&params, rng)?;
        giant_and_seed_union(&h, k)
    })?;
    let reps = pairs.len() as f64;
    let above = pairs.iter().filter(|(l1, union)| l1 > union).count() as f64;
    let beyond = pairs
        .iter()
        .filter(|(l1, union)| *l1 as f64 + r_n < *union as f64)
        .count() as f64;
    Ok(CouplingRecord {
        n: params.n,
        d: params.d,
        lambda: params.lambda,
        k_n: k,
        r_n,
        reps: spec.reps,
        freq_cmax_exceeds: if reps > 0.0 { above / reps } else { f64::NAN },
        freq_union_exceeds: if reps > 0.0 { beyond / reps } else { f64::NAN },
    })
}

/// Compares the hitting time of the proxy walk with the size formula
/// `t₁ + Ã_{t₁}/(1 - λ*)`, `t₁ = ⌊ρ̄N⌋`, evaluated on the same path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeIdentityRecord {
    pub n: u64,
    pub reps: u64,
    /// Mean and variance of `(hit - predicted)/√N`.
    pub mean_gap_scaled: f64,
    pub var_gap_scaled: f64,
    /// Variance of `(hit - ⌊ρ̄N⌋)/√N`, for scale.
    pub var_hit_scaled: f64,
}

pub fn size_identity_diagnostic(spec: &ExperimentSpec) -> Result<SizeIdentityRecord> {
    spec.validate()?;
    let theory = TheoryConstants::for_params(&spec.params)?;
    let t1 = spec.center(&theory);
    let params = spec.params;
    let k = spec.k_n();
    let to_t1 = ExplorationConfig::new(k, Backend::Stream)
        .with_stop(Stop::RunToHorizon(t1))
        .with_record(Record::Summary);
    let pairs = run_replicas(spec, move |r, _| {
        // Both runs consume the same stream identically up to the earlier stop.
        let tr = explore_stream(&params, &to_t1, &mut RngStream::new(spec.master_seed, r))?;
        let a_tilde =
            tr.final_x.unwrap_or(0.0) + tr.final_beta.unwrap_or(1.0) * tr.final_s.unwrap_or(0.0);
        let predicted = t1 as f64 + a_tilde / (1.0 - theory.lambda_star);
        let hit = stream_hit_time(&params, k, &mut RngStream::new(spec.master_seed, r))?
            .unwrap_or(params.n);
        Ok((hit as f64, predicted))
    })?;
    let root_n = spec.n().sqrt();
    let gaps: Vec<f64> = pairs.iter().map(|(h, p)| (h - p) / root_n).collect();
    let hits: Vec<f64> = pairs
        .iter()
        .map(|(h, _)| (h - t1 as f64) / root_n)
        .collect();
    let g = moments(&gaps);
    Ok(SizeIdentityRecord {
        n: params.n,
        reps: spec.reps,
        mean_gap_scaled: g.mean,
        var_gap_scaled: g.var,
        var_hit_scaled: moments(&hits).var,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    /// FNV-1a of the serialized spec, hex.
    pub spec_hash: String,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub tail: Vec<TailRecord>,
    pub clt: Vec<CltRecord>,
    pub martingale: Vec<MartingaleRecord>,
    pub coupling: Vec<CouplingRecord>,
    pub size_identity: Vec<SizeIdentityRecord>,
    pub warnings: Vec<String>,
    pub provenance: Provenance,
}

impl ExperimentReport {
    pub fn new(spec: &ExperimentSpec) -> Self {
        Self {
            spec: spec.clone(),
            tail: Vec::new(),
            clt: Vec::new(),
            martingale: Vec::new(),
            coupling: Vec::new(),
            size_identity: Vec::new(),
            warnings: Vec::new(),
            provenance: Provenance {
                seed: spec.master_seed,
                spec_hash: format!("{:016x}", spec.spec_hash()),
                wall_time_s: 0.0,
            },
        }
    }

    /// Stamps the elapsed time; the report is complete afterwards.
    pub fn seal(mut self, started: Instant) -> Self {
        self.provenance.wall_time_s = started.elapsed().as_secs_f64();
        self
    }

    /// Equality of everything except the wall time and the thread count.
    pub fn same_results(&self, other: &Self) -> bool {
        let strip = |r: &Self| {
            let mut r = r.clone();
            r.provenance.wall_time_s = 0.0;
            r.spec.threads = 0;
            r
        };
        strip(self) == strip(other)
    }
}

/// Runs the tail experiment and wraps it in a report, warning about levels
/// outside the observability window.
pub fn tail_report(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let started = Instant::now();
    let mut report = ExperimentReport::new(spec);
    report.tail = estimate_tail(spec)?;
    for rec in &report.tail {
        if !rec.in_window() {
            report.warnings.push(format!(
                "y = {} has J(y) N^(2 alpha - 1) = {:.3}, outside [{}, {}]",
                rec.y, rec.observability, OBSERVABILITY_WINDOW.0, OBSERVABILITY_WINDOW.1
            ));
        }
    }
    Ok(report.seal(started))
}

pub fn clt_report(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let started = Instant::now();
    let mut report = ExperimentReport::new(spec);
    report.clt.push(estimate_clt(spec)?);
    Ok(report.seal(started))
}

pub fn martingale_report(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let started = Instant::now();
    let mut report = ExperimentReport::new(spec);
    report.martingale.push(martingale_mdp_check(spec)?);
    report.size_identity.push(size_identity_diagnostic(spec)?);
    Ok(report.seal(started))
}

pub fn coupling_report(spec: &ExperimentSpec) -> Result<ExperimentReport> {
    let started = Instant::now();
    let mut report = ExperimentReport::new(spec);
    report.coupling.push(coupling_check(spec)?);
    Ok(report.seal(started))
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

pub fn write_tail_csv<W: Write>(records: &[TailRecord], mut out: W) -> Result<()> {
    writeln!(
        out,
        "N,d,lambda,alpha,y,reps,hits_up,hits_down,p_hat,ci_lo,ci_hi,rate_hat,J_y"
    )?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.d,
            fmt_f64(r.lambda),
            fmt_f64(r.alpha),
            fmt_f64(r.y),
            r.reps,
            r.hits_up,
            r.hits_down,
            fmt_f64(r.p_hat),
            fmt_f64(r.ci_lo),
            fmt_f64(r.ci_hi),
            opt(r.rate_hat),
            fmt_f64(r.j_y),
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_clt_csv<W: Write>(records: &[CltRecord], mut out: W) -> Result<()> {
    writeln!(out, "N,d,lambda,reps,mean_scaled,var_scaled,sigma2_theory")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.n,
            r.d,
            fmt_f64(r.lambda),
            r.reps,
            fmt_f64(r.mean_scaled),
            fmt_f64(r.var_scaled),
            fmt_f64(r.sigma2_theory),
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_martingale_csv<W: Write>(records: &[MartingaleRecord], mut out: W) -> Result<()> {
    writeln!(
        out,
        "N,d,lambda,alpha,zeta,gamma_N,reps,mean,se_mean,var_over_N,c_theory"
    )?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{}",
            r.n,
            r.d,
            fmt_f64(r.lambda),
            fmt_f64(r.alpha),
            fmt_f64(r.zeta),
            r.gamma_n,
            r.reps,
            fmt_f64(r.mean),
            fmt_f64(r.se_mean),
            fmt_f64(r.var_over_n),
            fmt_f64(r.c_theory),
        )?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_coupling_csv<W: Write>(records: &[CouplingRecord], mut out: W) -> Result<()> {
    writeln!(
        out,
        "N,d,lambda,k_N,r_N,reps,freq_cmax_exceeds,freq_union_exceeds"
    )?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.n,
            r.d,
            fmt_f64(r.lambda),
            r.k_n,
            fmt_f64(r.r_n),
            r.reps,
            fmt_f64(r.freq_cmax_exceeds),
            fmt_f64(r.freq_union_exceeds),
        )?;
    }
    out.flush()?;
    Ok(())
}
