use std::collections::HashSet;

use super::{run, ExplorationConfig, Labels, Record, Reveal, Stop};
use crate::error::Result;
use crate::hypergraph::{EdgeCodec, EdgeKey};
use crate::rng::RngStream;
use crate::sampler::{binom_f64, floyd_ranks, BinomialSampler};
use crate::theory::ModelParams;

/// Not-yet-explored vertices in a rank-indexed array with swap removal.
struct Pool {
    items: Vec<u32>,
    pos: Vec<u32>,
}

impl Pool {
    fn new(n: u32) -> Self {
        Self {
            items: (1..=n).collect(),
            pos: (0..n).collect(),
        }
    }

    fn remove(&mut self, v: u32) {
        let i = self.pos[v as usize - 1] as usize;
        let last = self.items.pop().expect("pool is non-empty while exploring");
        if last != v {
            self.items[i] = last;
            self.pos[last as usize - 1] = i as u32;
        }
    }
}

pub(super) struct StreamReveal<'r> {
    arity: u32,
    binomial: BinomialSampler,
    pool: Pool,
    rng: &'r mut RngStream,
    ranks: Vec<u64>,
    ids: Vec<u32>,
    seen_small: Vec<EdgeKey>,
    seen_large: HashSet<EdgeKey>,
}

impl<'r> StreamReveal<'r> {
    pub(super) fn new(params: &ModelParams, rng: &'r mut RngStream) -> Self {
        let arity = params.d - 1;
        Self {
            arity,
            binomial: BinomialSampler::new(params.p),
            pool: Pool::new(params.n as u32),
            rng,
            ranks: Vec::with_capacity(arity as usize),
            ids: Vec::with_capacity(arity as usize),
            seen_small: Vec::new(),
            seen_large: HashSet::new(),
        }
    }

    fn activate_ranks(&self, labels: &mut Labels) -> u32 {
        self.ranks
            .iter()
            .map(|&r| labels.activate(self.pool.items[r as usize]) as u32)
            .sum()
    }
}

impl Reveal for StreamReveal<'_> {
    fn reveal(&mut self, v: u32, _t: u64, labels: &mut Labels) -> u32 {
        self.pool.remove(v);
        let size = self.pool.items.len() as u64;
        let m = self.binomial.sample(binom_f64(size, self.arity), self.rng);
        if m == 0 {
            return 0;
        }
        let k = self.arity as usize;
        if m == 1 {
            floyd_ranks(size, k, &mut self.ranks, self.rng);
            return self.activate_ranks(labels);
        }
        // Distinct (d-1)-subsets of the pool; ranks are stable within a step.
        let codec = EdgeCodec::new(size, self.arity);
        let small = m <= 16;
        self.seen_small.clear();
        self.seen_large.clear();
        let mut eta = 0;
        let mut accepted = 0;
        while accepted < m {
            floyd_ranks(size, k, &mut self.ranks, self.rng);
            self.ids.clear();
            self.ids.extend(self.ranks.iter().map(|&r| r as u32));
            let key = codec.encode(&self.ids);
            let fresh = if small {
                if self.seen_small.contains(&key) {
                    false
                } else {
                    self.seen_small.push(key);
                    true
                }
            } else {
                self.seen_large.insert(key)
            };
            if fresh {
                accepted += 1;
                eta += self.activate_ranks(labels);
            }
        }
        eta
    }
}

/// `|C_≤k|` of a fresh `G^d(N, p)` without recording anything else.
pub(crate) fn stream_hit_time(
    params: &ModelParams,
    k: u32,
    rng: &mut RngStream,
) -> Result<Option<u64>> {
    let cfg = ExplorationConfig {
        k,
        backend: super::Backend::Stream,
        stop: Stop::HitZero,
        selection: super::Selection::MinIndex,
        record: Record::Summary,
    };
    let mut backend = StreamReveal::new(params, rng);
    Ok(run(params.n, &cfg, &mut backend, None)?.hit_zero_time)
}
