//! The active/unseen/explored exploration process and its martingale
//! decomposition.
//!
//! Vertices `1..=k` start active, all others unseen. Each step explores one
//! active vertex (the lowest-indexed by default) and activates its unseen
//! neighbours, so `A_t = A_{t-1} + η_t - 1` and the first zero of `A` is
//! `|C_≤k|`. Past that zero a horizon run keeps going on the formal walk:
//! when nothing is active the lowest-indexed unseen vertex is explored next
//! and `A` keeps the same recursion, so it may turn negative. The true active
//! count is then `A_t` plus the number of such restarts.
//!
//! Two backends produce identically distributed traces. [`explore_graph`]
//! walks a realized [`Hypergraph`]; [`explore_stream`] never builds one and
//! instead draws, at each step, the edges between the explored vertex and
//! the not-yet-explored vertices. Those candidate edges are disjoint across
//! steps: an edge examined at step `s` contains the vertex explored at `s`,
//! which is excluded from every later candidate set. Every potential edge is
//! therefore examined at most once and independent per-step draws reproduce
//! the law of a fresh `G^d(N, p)`.

mod decompose;
mod stream;

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::format::fmt_f64;
use crate::hypergraph::Hypergraph;
use crate::rng::RngStream;
use crate::theory::ModelParams;

pub(crate) use decompose::Decomposer;
pub use decompose::Decomposition;
pub(crate) use stream::stream_hit_time;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Graph,
    Stream,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stop {
    HitZero,
    RunToHorizon(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    #[default]
    MinIndex,
    Fifo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Record {
    Summary,
    FullTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationConfig {
    pub k: u32,
    pub backend: Backend,
    pub stop: Stop,
    pub selection: Selection,
    pub record: Record,
}

impl ExplorationConfig {
    pub fn new(k: u32, backend: Backend) -> Self {
        Self {
            k,
            backend,
            stop: Stop::HitZero,
            selection: Selection::MinIndex,
            record: Record::FullTrace,
        }
    }

    pub fn with_stop(mut self, stop: Stop) -> Self {
        self.stop = stop;
        self
    }

    pub fn with_selection(mut self, selection: Selection) -> Self {
        self.selection = selection;
        self
    }

    pub fn with_record(mut self, record: Record) -> Self {
        self.record = record;
        self
    }

    fn validate(&self, n: u64) -> Result<u64> {
        if self.k == 0 || self.k as u64 > n {
            return invalid("k", format!("{} must lie in 1..={n}", self.k));
        }
        match self.stop {
            Stop::HitZero => Ok(n),
            Stop::RunToHorizon(t) if t <= n => Ok(t),
            Stop::RunToHorizon(t) => invalid("horizon", format!("{t} exceeds N = {n}")),
        }
    }
}

/// The JSON summary of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSummary {
    pub hit_zero_time: Option<u64>,
    #[serde(rename = "max_A")]
    pub max_a: i64,
    #[serde(rename = "argmax_A")]
    pub argmax_a: u64,
    #[serde(rename = "final_S")]
    pub final_s: Option<f64>,
}

/// One exploration run. Per-step arrays (indexed `t = 0..=steps`) are
/// present only for [`Record::FullTrace`]; the scalar summaries always are.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExplorationTrace {
    pub n: u64,
    pub k: u32,
    pub steps: u64,
    pub hit_zero_time: Option<u64>,
    pub max_a: i64,
    pub argmax_a: u64,
    pub final_a: i64,
    /// Restarts performed after the walk had no active vertex.
    pub restarts: u64,
    /// `β_T` and `S_T` at the last step, when computed online.
    pub final_beta: Option<f64>,
    pub final_s: Option<f64>,
    /// `x_T` at the last step, when computed online.
    pub final_x: Option<f64>,

    pub a: Vec<i64>,
    pub u: Vec<i64>,
    pub eta: Vec<u32>,
    pub restart: Vec<bool>,
    /// `𝒞_t`: steps so far with `A_t - A_{t-1} = -1`.
    pub comp_count: Vec<u64>,
    /// `X_t = A_t - 𝒞_t`.
    pub walk_x: Vec<i64>,
    pub decomposition: Option<Decomposition>,
}

impl ExplorationTrace {
    pub fn has_full_trace(&self) -> bool {
        !self.a.is_empty()
    }

    pub fn summary(&self) -> ExplorationSummary {
        ExplorationSummary {
            hit_zero_time: self.hit_zero_time,
            max_a: self.max_a,
            argmax_a: self.argmax_a,
            final_s: self
                .decomposition
                .as_ref()
                .and_then(|d| d.s.last().copied())
                .or(self.final_s),
        }
    }

    /// Writes `t,A,U,eta,D,Delta,alpha,beta,S,x,A_tilde,C_count,X`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let Some(dec) = &self.decomposition else {
            return invalid("trace", "the trace has not been decomposed");
        };
        writeln!(out, "t,A,U,eta,D,Delta,alpha,beta,S,x,A_tilde,C_count,X")?;
        for t in 0..self.a.len() {
            writeln!(
                out,
                "{t},{},{},{},{},{},{},{},{},{},{},{},{}",
                self.a[t],
                self.u[t],
                self.eta[t],
                fmt_f64(dec.drift[t]),
                fmt_f64(dec.delta[t]),
                fmt_f64(dec.alpha[t]),
                fmt_f64(dec.beta[t]),
                fmt_f64(dec.s[t]),
                fmt_f64(dec.x[t]),
                fmt_f64(dec.a_tilde[t]),
                self.comp_count[t],
                self.walk_x[t],
            )?;
        }
        out.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub(crate) enum Status {
    Unseen,
    Active,
    Explored,
}

pub(crate) enum Frontier {
    MinIndex(BinaryHeap<Reverse<u32>>),
    Fifo(VecDeque<u32>),
}

impl Frontier {
    fn new(selection: Selection, k: u32) -> Self {
        match selection {
            Selection::MinIndex => Frontier::MinIndex((1..=k).map(Reverse).collect()),
            Selection::Fifo => Frontier::Fifo((1..=k).collect()),
        }
    }

    pub(crate) fn push(&mut self, v: u32) {
        match self {
            Frontier::MinIndex(h) => h.push(Reverse(v)),
            Frontier::Fifo(q) => q.push_back(v),
        }
    }

    fn pop(&mut self) -> Option<u32> {
        match self {
            Frontier::MinIndex(h) => h.pop().map(|Reverse(v)| v),
            Frontier::Fifo(q) => q.pop_front(),
        }
    }
}

/// Vertex labels plus the frontier. Vertex `v` lives at `status[v - 1]`.
pub(crate) struct Labels {
    pub(crate) status: Vec<Status>,
    pub(crate) frontier: Frontier,
    /// Every vertex below this id is no longer unseen.
    cursor: u32,
}

impl Labels {
    fn new(n: u64, k: u32, selection: Selection) -> Self {
        let mut status = vec![Status::Unseen; n as usize];
        status[..k as usize].fill(Status::Active);
        Self {
            status,
            frontier: Frontier::new(selection, k),
            cursor: k + 1,
        }
    }

    /// Marks `v` active if it is unseen; returns whether it was.
    #[inline]
    pub(crate) fn activate(&mut self, v: u32) -> bool {
        let slot = &mut self.status[v as usize - 1];
        if *slot == Status::Unseen {
            *slot = Status::Active;
            self.frontier.push(v);
            true
        } else {
            false
        }
    }

    fn lowest_unseen(&mut self) -> Option<u32> {
        while (self.cursor as usize) <= self.status.len() {
            if self.status[self.cursor as usize - 1] == Status::Unseen {
                return Some(self.cursor);
            }
            self.cursor += 1;
        }
        None
    }
}

/// One step of a backend: explore `v` (already labelled explored) at step
/// `t` and return the number of newly activated vertices.
pub(crate) trait Reveal {
    fn reveal(&mut self, v: u32, t: u64, labels: &mut Labels) -> u32;
}

/// Shared driver for both backends.
pub(crate) fn run<B: Reveal>(
    n: u64,
    cfg: &ExplorationConfig,
    backend: &mut B,
    mut decomposer: Option<Decomposer>,
) -> Result<ExplorationTrace> {
    let horizon = cfg.validate(n)?;
    let full = cfg.record == Record::FullTrace;
    let k = cfg.k;
    let mut labels = Labels::new(n, k, cfg.selection);

    let mut trace = ExplorationTrace {
        n,
        k,
        steps: 0,
        hit_zero_time: None,
        max_a: k as i64,
        argmax_a: 0,
        final_a: k as i64,
        restarts: 0,
        final_beta: None,
        final_s: None,
        final_x: None,
        a: Vec::new(),
        u: Vec::new(),
        eta: Vec::new(),
        restart: Vec::new(),
        comp_count: Vec::new(),
        walk_x: Vec::new(),
        decomposition: None,
    };
    if full {
        let cap = (horizon as usize + 1).min(1 << 24);
        trace.a.reserve(cap);
        trace.a.push(k as i64);
        trace.u.push(n as i64 - k as i64);
        trace.eta.push(0);
        trace.restart.push(false);
        trace.comp_count.push(0);
        trace.walk_x.push(k as i64);
    }

    let mut a = k as i64;
    let mut comps = 0u64;
    let mut t = 0u64;
    while t < horizon {
        let (v, restart) = match labels.frontier.pop() {
            Some(v) => (v, false),
            None => {
                if cfg.stop == Stop::HitZero {
                    break;
                }
                match labels.lowest_unseen() {
                    Some(v) => (v, true),
                    None => break,
                }
            }
        };
        labels.status[v as usize - 1] = Status::Explored;
        t += 1;
        let eta = backend.reveal(v, t, &mut labels);
        a += eta as i64 - 1;
        trace.restarts += restart as u64;
        if eta == 0 {
            comps += 1;
        }
        if a > trace.max_a {
            trace.max_a = a;
            trace.argmax_a = t;
        }
        if a == 0 && trace.hit_zero_time.is_none() {
            trace.hit_zero_time = Some(t);
        }
        if let Some(dec) = decomposer.as_mut() {
            dec.step(eta, restart);
        }
        if full {
            trace.a.push(a);
            trace.u.push(n as i64 - t as i64 - a);
            trace.eta.push(eta);
            trace.restart.push(restart);
            trace.comp_count.push(comps);
            trace.walk_x.push(a - comps as i64);
        }
    }
    trace.steps = t;
    trace.final_a = a;
    if let Some(dec) = decomposer {
        trace.final_beta = Some(dec.beta());
        trace.final_s = Some(dec.s());
        trace.final_x = Some(dec.x());
    }
    Ok(trace)
}

struct GraphReveal<'a> {
    h: &'a Hypergraph,
}

impl Reveal for GraphReveal<'_> {
    fn reveal(&mut self, v: u32, _t: u64, labels: &mut Labels) -> u32 {
        let mut eta = 0;
        for &e in self.h.incidence().edges_of(v) {
            for &w in self.h.edge(e as usize) {
                eta += labels.activate(w) as u32;
            }
        }
        eta
    }
}

/// Explores a realized hypergraph. Deterministic given `h` and `cfg`.
pub fn explore_graph(h: &Hypergraph, cfg: &ExplorationConfig) -> Result<ExplorationTrace> {
    run(h.n() as u64, cfg, &mut GraphReveal { h }, None)
}

/// Explores a fresh `G^d(N, p)` by sampling revealed edges step by step.
/// Summary runs also evaluate the decomposition online so `final_S` and
/// `β_T` are available without storing arrays.
pub fn explore_stream(
    params: &ModelParams,
    cfg: &ExplorationConfig,
    rng: &mut RngStream,
) -> Result<ExplorationTrace> {
    if params.n > u32::MAX as u64 {
        return invalid(
            "N",
            format!("{} exceeds the supported vertex range", params.n),
        );
    }
    let online = (cfg.record == Record::Summary).then(|| Decomposer::new(params, cfg.k));
    let mut backend = stream::StreamReveal::new(params, rng);
    run(params.n, cfg, &mut backend, online)
}

/// Fills the decomposition arrays of a full trace.
pub fn decompose(trace: &ExplorationTrace, params: &ModelParams) -> Result<ExplorationTrace> {
    if !trace.has_full_trace() {
        return invalid("trace", "decomposition needs a full trace");
    }
    if trace.n != params.n {
        return invalid(
            "params",
            format!(
                "trace has N = {}, parameters have N = {}",
                trace.n, params.n
            ),
        );
    }
    let mut out = trace.clone();
    let dec = decompose::decompose_steps(params, trace.k, &trace.eta, &trace.restart);
    out.final_beta = dec.beta.last().copied();
    out.final_s = dec.s.last().copied();
    out.final_x = dec.x.last().copied();
    out.decomposition = Some(dec);
    Ok(out)
}

#[cfg(test)]
mod tests;
