use std::collections::HashMap;

use hypergiant::components::connected_components;
use hypergiant::sampler::{
    sample_binomial, sample_hypergraph, sample_hypergraph_with_stats, sample_k_subset,
};
use hypergiant::{ModelParams, RngStream};

/// Every 3-subset of `1..=n` in lexicographic order.
fn triples(n: u32) -> Vec<[u32; 3]> {
    let mut out = Vec::new();
    for a in 1..=n {
        for b in a + 1..=n {
            for c in b + 1..=n {
                out.push([a, b, c]);
            }
        }
    }
    out
}

/// Law of the edge set, compared with independent per-edge coins.
#[test]
fn small_n_matches_independent_coins() {
    for (n, p) in [(4u32, 0.3), (5, 0.1)] {
        let all = triples(n);
        let params = ModelParams::with_p(3, n as u64, p).unwrap();
        let reps = 1_000_000u64;
        let mut counts: HashMap<u32, u64> = HashMap::new();
        for r in 0..reps {
            let h = sample_hypergraph(&params, &mut RngStream::new(77, r)).unwrap();
            let mut mask = 0u32;
            for e in h.edges() {
                let i = all.iter().position(|t| t[..] == *e).unwrap();
                mask |= 1 << i;
            }
            *counts.entry(mask).or_default() += 1;
        }
        let m = all.len() as i32;
        let tv: f64 = 0.5
            * (0u32..1 << m)
                .map(|mask| {
                    let k = mask.count_ones() as i32;
                    let exact = p.powi(k) * (1.0 - p).powi(m - k);
                    let seen = counts.get(&mask).copied().unwrap_or(0) as f64 / reps as f64;
                    (seen - exact).abs()
                })
                .sum::<f64>();
        assert!(tv <= 0.01, "N={n}: TV {tv}");
    }
}

#[test]
fn same_stream_same_bytes() {
    let params = ModelParams::new(3, 1.5, 5_000).unwrap();
    let bytes = |s| {
        let mut out = Vec::new();
        sample_hypergraph(&params, &mut RngStream::new(3, s))
            .unwrap()
            .write_hgr(&mut out)
            .unwrap();
        out
    };
    assert_eq!(bytes(4), bytes(4));
    assert_ne!(bytes(4), bytes(5));
}

#[test]
fn duplicate_rejections_are_rare() {
    let params = ModelParams::new(3, 1.5, 20_000).unwrap();
    let (mut edges, mut rejections) = (0u64, 0u64);
    for r in 0..20 {
        let (_, stats) = sample_hypergraph_with_stats(&params, &mut RngStream::new(8, r)).unwrap();
        edges += stats.edges;
        rejections += stats.rejections;
    }
    // Expected rejections per edge are about M / C(N, 3) ~ 1e-8.
    assert!(
        (rejections as f64) / (edges as f64) < 1e-4,
        "{rejections}/{edges}"
    );
}

#[test]
fn binomial_huge_n_small_p() {
    let mut rng = RngStream::new(12, 0);
    let (n, p) = (100_000_000_000_000u128, 2.5e-14);
    let reps = 200_000;
    let xs: Vec<f64> = (0..reps)
        .map(|_| sample_binomial(n, p, &mut rng).unwrap() as f64)
        .collect();
    let mean = xs.iter().sum::<f64>() / reps as f64;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
    let se = (2.5f64 / reps as f64).sqrt();
    assert!((mean - 2.5).abs() < 4.0 * se, "{mean}");
    assert!((var / 2.5 - 1.0).abs() < 0.03, "{var}");
    let zeros = xs.iter().filter(|&&x| x == 0.0).count() as f64 / reps as f64;
    assert!((zeros - (-2.5f64).exp()).abs() < 0.005, "{zeros}");
}

#[test]
fn k_subsets_are_uniform() {
    let pool: Vec<u32> = (10..16).collect();
    let mut rng = RngStream::new(13, 0);
    let reps = 200_000;
    let mut counts: HashMap<Vec<u32>, u64> = HashMap::new();
    for _ in 0..reps {
        let s = sample_k_subset(&pool, 3, &mut rng).unwrap();
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        *counts.entry(s).or_default() += 1;
    }
    assert_eq!(counts.len(), 20);
    let expected = reps as f64 / 20.0;
    let chi2: f64 = counts
        .values()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    // 19 degrees of freedom; 43.8 is the 0.999 quantile.
    assert!(chi2 < 43.8, "{chi2}");
}

#[test]
fn supercritical_sanity() {
    let n = 100_000u64;
    let params = ModelParams::new(3, 1.5, n).unwrap();
    let rho = hypergiant::TheoryConstants::for_params(&params)
        .unwrap()
        .rho_d;
    let mut l1 = Vec::new();
    let mut l2 = Vec::new();
    for r in 0..21 {
        let s =
            connected_components(&sample_hypergraph(&params, &mut RngStream::new(14, r)).unwrap());
        l1.push(s.l1);
        l2.push(s.l2);
    }
    l1.sort_unstable();
    l2.sort_unstable();
    let med1 = l1[10] as f64 / n as f64;
    assert!((med1 - rho).abs() <= 0.05, "{med1}");
    assert!(l2[10] as f64 <= 10.0 * (n as f64).ln(), "{}", l2[10]);
}
