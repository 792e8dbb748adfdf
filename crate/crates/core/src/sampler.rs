//! Exact sampling of `G^d(N, p)` and the primitives behind it: exact subset
//! counts, binomial variates for huge `n` and tiny `p`, and uniform distinct
//! subsets.

use std::collections::HashSet;

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Result};
use crate::hypergraph::{EdgeCodec, Hypergraph};
use crate::rng::RngStream;
use crate::theory::ModelParams;

/// Binomial means above this bound are rejected.
pub const MAX_BINOMIAL_MEAN: f64 = 1e9;

/// `C(n, k)`: exact when the value fits in 128 bits, always with its natural
/// logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubsetCount {
    pub exact: Option<u128>,
    pub ln: f64,
}

impl SubsetCount {
    pub fn as_f64(&self) -> f64 {
        match self.exact {
            Some(v) => v as f64,
            None => self.ln.exp(),
        }
    }
}

/// `C(n, k)` with `C(n, k) = 0` whenever `k < 0` or `k > n`.
pub fn count_subsets(n: i64, k: i64) -> SubsetCount {
    if k < 0 || n < 0 || k > n {
        return SubsetCount {
            exact: Some(0),
            ln: f64::NEG_INFINITY,
        };
    }
    let k = k.min(n - k);
    let mut acc: Option<u128> = Some(1);
    for i in 0..k {
        // acc * (n - i) is divisible by i + 1 at every step.
        acc = acc
            .and_then(|a| a.checked_mul((n - i) as u128))
            .map(|a| a / (i as u128 + 1));
        if acc.is_none() {
            break;
        }
    }
    let ln = match acc {
        Some(v) => (v as f64).ln(),
        None => {
            ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
        }
    };
    SubsetCount { exact: acc, ln }
}

/// `C(n, k)` as a float by the multiplicative formula; exact while the value
/// stays below 2^53.
pub(crate) fn binom_f64(n: u64, k: u32) -> f64 {
    if k as u64 > n {
        return 0.0;
    }
    let mut acc = 1.0f64;
    for i in 0..k as u64 {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// `ln Γ(x+1) - (x+½) ln x + x - ½ ln 2π`.
fn stirlerr(x: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if x <= 15.0 {
        return ln_gamma(x + 1.0) - (x + 0.5) * x.ln() + x - LN_SQRT_2PI;
    }
    let xx = x * x;
    if x > 500.0 {
        (S0 - S1 / xx) / x
    } else if x > 80.0 {
        (S0 - (S1 - S2 / xx) / xx) / x
    } else if x > 35.0 {
        (S0 - (S1 - (S2 - S3 / xx) / xx) / xx) / x
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / xx) / xx) / xx) / xx) / x
    }
}

/// Deviance term `x ln(x/m) + m - x`, series-evaluated near `x = m`.
fn bd0(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let next = s + ej / (2 * j + 1) as f64;
            if next == s {
                return next;
            }
            s = next;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// Log pmf of Binomial(n, p) at `x`, stable for `n` far beyond 2^53.
fn ln_binomial_pmf(x: f64, n: f64, p: f64, q: f64, ln_q: f64) -> f64 {
    if x < 0.0 || x > n {
        return f64::NEG_INFINITY;
    }
    if x == 0.0 {
        return n * ln_q;
    }
    if x == n {
        return n * p.ln();
    }
    let lc = stirlerr(n) - stirlerr(x) - stirlerr(n - x) - bd0(x, n * p) - bd0(n - x, n * q);
    let lf = 2.0 * LN_SQRT_2PI + x.ln() + (-x / n).ln_1p();
    lc - 0.5 * lf
}

/// Binomial sampler for a fixed `p <= 1/2` and varying `n`.
///
/// Inversion ordered outward from the mode: the uniform is consumed by
/// `f(m), f(m+1), f(m-1), f(m+2), ...` with neighbours obtained through the
/// pmf ratio. The rare uniform left over after both tails underflow is
/// redrawn.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BinomialInversion {
    p: f64,
    q: f64,
    ln_q: f64,
    odds: f64,
}

impl BinomialInversion {
    pub(crate) fn new(p: f64) -> Self {
        debug_assert!((0.0..=0.5).contains(&p));
        Self {
            p,
            q: 1.0 - p,
            ln_q: (-p).ln_1p(),
            odds: p / (1.0 - p),
        }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, n: f64, rng: &mut R) -> u64 {
        if n <= 0.0 || self.p == 0.0 {
            return 0;
        }
        let mode = ((n + 1.0) * self.p).floor().min(n);
        let pmf_mode = ln_binomial_pmf(mode, n, self.p, self.q, self.ln_q).exp();
        loop {
            let mut u: f64 = rng.random();
            u -= pmf_mode;
            if u <= 0.0 {
                return mode as u64;
            }
            let (mut hi, mut p_hi) = (mode, pmf_mode);
            let (mut lo, mut p_lo) = (mode, pmf_mode);
            loop {
                let mut live = false;
                if hi < n {
                    p_hi *= (n - hi) / (hi + 1.0) * self.odds;
                    hi += 1.0;
                    u -= p_hi;
                    if u <= 0.0 {
                        return hi as u64;
                    }
                    live |= p_hi > 0.0;
                }
                if lo > 0.0 {
                    p_lo *= lo / (n - lo + 1.0) / self.odds;
                    lo -= 1.0;
                    u -= p_lo;
                    if u <= 0.0 {
                        return lo as u64;
                    }
                    live |= p_lo > 0.0;
                }
                if !live {
                    break;
                }
            }
        }
    }
}

/// Inversion sampler for any fixed `p`, flipping to failures above 1/2.
#[derive(Debug, Clone, Copy)]
pub(crate) struct BinomialSampler {
    inv: BinomialInversion,
    flipped: bool,
}

impl BinomialSampler {
    pub(crate) fn new(p: f64) -> Self {
        let flipped = p > 0.5;
        Self {
            inv: BinomialInversion::new(if flipped { 1.0 - p } else { p }),
            flipped,
        }
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, n: f64, rng: &mut R) -> u64 {
        let draw = self.inv.sample(n, rng);
        if self.flipped {
            n as u64 - draw
        } else {
            draw
        }
    }
}

/// An exact Binomial(n, p) variate. No normal or Poisson approximation is
/// involved.
pub fn sample_binomial<R: Rng + ?Sized>(n: u128, p: f64, rng: &mut R) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return invalid("p", format!("{p} must lie in [0, 1]"));
    }
    let nf = n as f64;
    if nf * p > MAX_BINOMIAL_MEAN {
        return invalid(
            "n",
            format!(
                "mean {} exceeds the supported bound {MAX_BINOMIAL_MEAN}",
                nf * p
            ),
        );
    }
    if n == 0 || p == 0.0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(n as u64);
    }
    Ok(BinomialSampler::new(p).sample(nf, rng))
}

/// Floyd's selection of `k` distinct values from `0..n`, returned sorted.
pub(crate) fn floyd_ranks<R: Rng + ?Sized>(n: u64, k: usize, out: &mut Vec<u64>, rng: &mut R) {
    out.clear();
    debug_assert!(k as u64 <= n);
    if k <= 32 {
        for j in n - k as u64..n {
            let t = rng.random_range(0..=j);
            out.push(if out.contains(&t) { j } else { t });
        }
    } else {
        let mut chosen = HashSet::with_capacity(k);
        for j in n - k as u64..n {
            let t = rng.random_range(0..=j);
            let pick = if chosen.contains(&t) { j } else { t };
            chosen.insert(pick);
            out.push(pick);
        }
    }
    out.sort_unstable();
}

/// A uniformly random `k`-subset of `pool`, sorted ascending.
pub fn sample_k_subset<T: Ord + Copy, R: Rng + ?Sized>(
    pool: &[T],
    k: usize,
    rng: &mut R,
) -> Result<Vec<T>> {
    if k > pool.len() {
        return invalid("k", format!("{k} exceeds the pool size {}", pool.len()));
    }
    let mut ranks = Vec::with_capacity(k);
    floyd_ranks(pool.len() as u64, k, &mut ranks, rng);
    let mut picked: Vec<T> = ranks.iter().map(|&r| pool[r as usize]).collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Bookkeeping from one hypergraph draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleStats {
    pub edges: u64,
    /// Subset draws discarded because the edge was already present.
    pub rejections: u64,
}

/// Draws `G^d(N, p)`: the edge count `M ~ Binomial(C(N,d), p)`, then `M`
/// distinct uniform `d`-subsets. Given `M`, independent inclusion makes every
/// `M`-set of edges equally likely, so the two laws coincide.
pub fn sample_hypergraph(params: &ModelParams, rng: &mut RngStream) -> Result<Hypergraph> {
    sample_hypergraph_with_stats(params, rng).map(|(h, _)| h)
}

pub fn sample_hypergraph_with_stats(
    params: &ModelParams,
    rng: &mut RngStream,
) -> Result<(Hypergraph, SampleStats)> {
    if params.n > u32::MAX as u64 {
        return invalid(
            "N",
            format!("{} exceeds the supported vertex range", params.n),
        );
    }
    let total = count_subsets(params.n as i64, params.d as i64);
    let Some(total) = total.exact else {
        return invalid("N", "C(N, d) exceeds 128 bits".to_string());
    };
    let m = sample_binomial(total, params.p, rng)?;
    let d = params.d as usize;
    let codec = EdgeCodec::new(params.n, params.d);
    let mut seen = HashSet::with_capacity(m as usize);
    let mut flat = Vec::with_capacity(m as usize * d);
    let mut ranks = Vec::with_capacity(d);
    let mut edge = vec![0u32; d];
    let mut rejections = 0u64;
    while (seen.len() as u64) < m {
        floyd_ranks(params.n, d, &mut ranks, rng);
        for (slot, &r) in edge.iter_mut().zip(&ranks) {
            *slot = r as u32 + 1;
        }
        if seen.insert(codec.encode(&edge)) {
            flat.extend_from_slice(&edge);
        } else {
            rejections += 1;
        }
    }
    let h = Hypergraph::from_canonical(params.n as u32, params.d, flat, rng.master_seed());
    Ok((
        h,
        SampleStats {
            edges: m,
            rejections,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn count_subsets_examples() {
        assert_eq!(count_subsets(8, 1).exact, Some(8));
        assert_eq!(count_subsets(5, 3).exact, Some(10));
        assert_eq!(count_subsets(7, -1).exact, Some(0));
        assert_eq!(count_subsets(3, 4).exact, Some(0));
        assert_eq!(count_subsets(0, 0).exact, Some(1));
        assert_eq!(count_subsets(100_000, 3).exact, Some(166_661_666_700_000));
        let big = count_subsets(1000, 500);
        assert!(big.exact.is_none());
        assert!((big.ln - 689.467_261_567_851).abs() < 1e-6);
    }

    #[test]
    fn binom_f64_matches_exact() {
        for (n, k) in [(10u64, 3u32), (99_999, 2), (100_000, 3), (40, 0), (3, 5)] {
            let exact = count_subsets(n as i64, k as i64).exact.unwrap() as f64;
            assert_eq!(binom_f64(n, k), exact);
        }
    }

    #[test]
    fn stirlerr_branches_agree_with_lgamma() {
        for x in [16.0, 40.0, 100.0, 600.0, 1e5] {
            let direct = ln_gamma(x + 1.0) - (x + 0.5) * f64::ln(x) + x - LN_SQRT_2PI;
            assert!((stirlerr(x) - direct).abs() < 1e-12 * x.max(1.0), "{x}");
        }
    }

    #[test]
    fn ln_pmf_sums_to_one() {
        for (n, p) in [(30.0, 0.2), (1000.0, 0.01), (5e9, 1.5e-10)] {
            let inv = BinomialInversion::new(p);
            let total: f64 = (0..200)
                .map(|x| ln_binomial_pmf(x as f64, n, p, inv.q, inv.ln_q).exp())
                .sum();
            assert!((total - 1.0).abs() < 1e-12, "{n} {p}: {total}");
        }
    }

    #[test]
    fn binomial_edge_cases() {
        let mut rng = RngStream::new(1, 0);
        assert_eq!(sample_binomial(1_000, 0.0, &mut rng).unwrap(), 0);
        assert_eq!(sample_binomial(1_000, 1.0, &mut rng).unwrap(), 1_000);
        assert_eq!(sample_binomial(0, 0.3, &mut rng).unwrap(), 0);
        assert!(sample_binomial(10, 1.5, &mut rng).is_err());
        assert!(sample_binomial(10, -0.1, &mut rng).is_err());
        assert!(sample_binomial(1u128 << 60, 0.5, &mut rng).is_err());
    }

    #[test]
    fn binomial_moments_moderate() {
        let mut rng = RngStream::new(2, 0);
        let (n, p) = (200u128, 0.7);
        let reps = 200_000;
        let xs: Vec<f64> = (0..reps)
            .map(|_| sample_binomial(n, p, &mut rng).unwrap() as f64)
            .collect();
        let mean = xs.iter().sum::<f64>() / reps as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (42.0f64 / reps as f64).sqrt();
        assert!((mean - 140.0).abs() < 4.0 * se);
        assert!((var / 42.0 - 1.0).abs() < 0.02);
    }

    #[test]
    fn k_subset_examples() {
        let mut rng = RngStream::new(3, 0);
        let pool = [4u32, 9, 1, 7];
        assert_eq!(
            sample_k_subset(&pool, 4, &mut rng).unwrap(),
            vec![1, 4, 7, 9]
        );
        assert!(sample_k_subset(&pool, 5, &mut rng).is_err());
        for _ in 0..1000 {
            let s = sample_k_subset(&pool, 2, &mut rng).unwrap();
            assert!(s.windows(2).all(|w| w[0] < w[1]));
        }
        let big: Vec<u32> = (0..500).collect();
        let s = sample_k_subset(&big, 100, &mut rng).unwrap();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn hypergraph_p_zero_is_empty() {
        let params = ModelParams::with_p(3, 50, 0.0).unwrap();
        let h = sample_hypergraph(&params, &mut RngStream::new(4, 0)).unwrap();
        assert_eq!(h.edge_count(), 0);
    }

    #[test]
    fn hypergraph_is_deterministic() {
        let params = ModelParams::new(3, 1.5, 2_000).unwrap();
        let a = sample_hypergraph(&params, &mut RngStream::new(5, 3)).unwrap();
        let b = sample_hypergraph(&params, &mut RngStream::new(5, 3)).unwrap();
        let c = sample_hypergraph(&params, &mut RngStream::new(5, 4)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        a.write_hgr(&mut x).unwrap();
        b.write_hgr(&mut y).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn duplicate_rejections_are_rare() {
        let params = ModelParams::new(3, 1.5, 10_000).unwrap();
        let mut rng = RngStream::new(6, 0);
        let (_, stats) = sample_hypergraph_with_stats(&params, &mut rng).unwrap();
        let bound = stats.edges as f64 / count_subsets(10_000, 3).as_f64();
        assert!(bound < 1e-5);
        assert!((stats.rejections as f64) <= 10.0 * bound * stats.edges as f64 + 2.0);
    }
}
