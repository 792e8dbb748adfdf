use super::*;
use crate::components::component_of_set;
use crate::sampler::sample_hypergraph;

fn h3(n: u32, edges: &[[u32; 3]]) -> Hypergraph {
    Hypergraph::from_edges(n, 3, edges, 0).unwrap()
}

#[test]
fn single_edge_hand_simulation() {
    let h = h3(4, &[[1, 2, 3]]);
    let tr = explore_graph(&h, &ExplorationConfig::new(1, Backend::Graph)).unwrap();
    assert_eq!(tr.a, vec![1, 2, 1, 0]);
    assert_eq!(tr.eta, vec![0, 2, 0, 0]);
    assert_eq!(tr.hit_zero_time, Some(3));
    assert_eq!(tr.u, vec![3, 1, 1, 1]);
}

#[test]
fn edgeless_graph() {
    let h = h3(5, &[]);
    let tr = explore_graph(&h, &ExplorationConfig::new(1, Backend::Graph)).unwrap();
    assert_eq!(tr.a, vec![1, 0]);
    assert_eq!(tr.hit_zero_time, Some(1));
}

#[test]
fn horizon_run_restarts_on_formal_walk() {
    let h = h3(5, &[[3, 4, 5]]);
    let cfg = ExplorationConfig::new(1, Backend::Graph).with_stop(Stop::RunToHorizon(5));
    let tr = explore_graph(&h, &cfg).unwrap();
    // 1 explored (dies), restart at 2 (dies), restart at 3 activating 4 and 5.
    assert_eq!(tr.a, vec![1, 0, -1, 0, -1, -2]);
    assert_eq!(tr.restart, vec![false, false, true, true, false, false]);
    assert_eq!(tr.hit_zero_time, Some(1));
    assert_eq!(tr.restarts, 2);
    assert_eq!(tr.comp_count, vec![0, 1, 2, 2, 3, 4]);
    for t in 0..tr.a.len() {
        assert_eq!(tr.walk_x[t], tr.a[t] - tr.comp_count[t] as i64);
        assert_eq!(tr.u[t], 5 - t as i64 - tr.a[t]);
    }
}

#[test]
fn rejects_bad_config() {
    let h = h3(4, &[]);
    assert!(explore_graph(&h, &ExplorationConfig::new(5, Backend::Graph)).is_err());
    assert!(explore_graph(&h, &ExplorationConfig::new(0, Backend::Graph)).is_err());
    let cfg = ExplorationConfig::new(1, Backend::Graph).with_stop(Stop::RunToHorizon(9));
    assert!(explore_graph(&h, &cfg).is_err());
}

#[test]
fn k_equal_n_hits_zero_at_n() {
    let h = h3(6, &[[1, 2, 3]]);
    let tr = explore_graph(&h, &ExplorationConfig::new(6, Backend::Graph)).unwrap();
    assert_eq!(tr.hit_zero_time, Some(6));
}

#[test]
fn stream_with_p_zero() {
    let params = ModelParams::with_p(3, 100, 0.0).unwrap();
    let cfg = ExplorationConfig::new(4, Backend::Stream);
    let tr = explore_stream(&params, &cfg, &mut RngStream::new(1, 0)).unwrap();
    assert!(tr.eta.iter().all(|&e| e == 0));
    assert_eq!(tr.hit_zero_time, Some(4));

    let dec = decompose(&tr, &params).unwrap();
    let d = dec.decomposition.unwrap();
    for t in 1..d.drift.len() {
        assert_eq!(d.drift[t], -1.0);
        assert_eq!(d.delta[t], 0.0);
        assert_eq!(d.s[t], 0.0);
    }
}

#[test]
fn stream_identities_hold_exactly() {
    let params = ModelParams::new(3, 1.5, 2_000).unwrap();
    let cfg = ExplorationConfig::new(10, Backend::Stream).with_stop(Stop::RunToHorizon(2_000));
    let tr = explore_stream(&params, &cfg, &mut RngStream::new(2, 0)).unwrap();
    let tr = decompose(&tr, &params).unwrap();
    let d = tr.decomposition.as_ref().unwrap();
    assert_eq!(tr.a.len(), 2_001);
    assert_eq!(tr.a[0], 10);
    for t in 1..tr.a.len() {
        assert_eq!(tr.a[t], tr.a[t - 1] + tr.eta[t] as i64 - 1);
        assert_eq!(tr.u[t], 2_000 - t as i64 - tr.a[t]);
        assert_eq!(d.beta[t], d.beta[t - 1] * (1.0 - d.alpha[t]));
        assert_eq!(d.s[t], d.s[t - 1] + d.delta[t] / d.beta[t]);
        assert_eq!(d.a_tilde[t], d.x[t] + d.beta[t] * d.s[t]);
        let x = (1.0 - d.alpha[t]) * d.x[t - 1] + d.alpha[t] * (2_000 - t + 1) as f64 - 1.0;
        assert_eq!(d.x[t], x);
        let inc = tr.a[t] - tr.a[t - 1];
        assert_eq!(tr.comp_count[t] - tr.comp_count[t - 1], (inc == -1) as u64);
    }
}

#[test]
fn summary_matches_decomposed_full_trace() {
    let params = ModelParams::new(3, 1.5, 3_000).unwrap();
    let stop = Stop::RunToHorizon(1_500);
    let full = ExplorationConfig::new(5, Backend::Stream).with_stop(stop);
    let summary = full.with_record(Record::Summary);
    let a = explore_stream(&params, &full, &mut RngStream::new(3, 1)).unwrap();
    let a = decompose(&a, &params).unwrap();
    let b = explore_stream(&params, &summary, &mut RngStream::new(3, 1)).unwrap();
    assert!(b.a.is_empty());
    assert_eq!(a.summary(), b.summary());
    assert_eq!(a.final_beta, b.final_beta);
    assert_eq!(a.hit_zero_time, b.hit_zero_time);
}

#[test]
fn stream_is_deterministic() {
    let params = ModelParams::new(3, 1.5, 1_000).unwrap();
    let cfg = ExplorationConfig::new(1, Backend::Stream);
    let a = explore_stream(&params, &cfg, &mut RngStream::new(7, 0)).unwrap();
    let b = explore_stream(&params, &cfg, &mut RngStream::new(7, 0)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn graph_hit_time_is_seed_union_size() {
    let params = ModelParams::new(3, 1.5, 300).unwrap();
    for r in 0..200 {
        let h = sample_hypergraph(&params, &mut RngStream::new(11, r)).unwrap();
        for k in [1, 3, 17] {
            let expected = component_of_set(&h, k).unwrap() as u64;
            for selection in [Selection::MinIndex, Selection::Fifo] {
                let cfg = ExplorationConfig::new(k, Backend::Graph).with_selection(selection);
                assert_eq!(
                    explore_graph(&h, &cfg).unwrap().hit_zero_time,
                    Some(expected)
                );
            }
        }
    }
}

#[test]
fn csv_layout() {
    let h = h3(4, &[[1, 2, 3]]);
    let params = ModelParams::with_p(3, 4, 0.1).unwrap();
    let tr = explore_graph(&h, &ExplorationConfig::new(1, Backend::Graph)).unwrap();
    assert!(tr.write_csv(Vec::new()).is_err());
    let tr = decompose(&tr, &params).unwrap();
    let mut buf = Vec::new();
    tr.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "t,A,U,eta,D,Delta,alpha,beta,S,x,A_tilde,C_count,X"
    );
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("0,1,3,0,"));
    assert_eq!(lines[1].split(',').count(), 13);
}

#[test]
fn summary_json_keys() {
    let s = ExplorationSummary {
        hit_zero_time: Some(3),
        max_a: 2,
        argmax_a: 1,
        final_s: Some(0.25),
    };
    let v = serde_json::to_value(s).unwrap();
    let mut keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    keys.sort();
    assert_eq!(keys, ["argmax_A", "final_S", "hit_zero_time", "max_A"]);
}

#[test]
fn decompose_requires_full_trace() {
    let params = ModelParams::new(3, 1.5, 500).unwrap();
    let cfg = ExplorationConfig::new(1, Backend::Stream).with_record(Record::Summary);
    let tr = explore_stream(&params, &cfg, &mut RngStream::new(1, 1)).unwrap();
    assert!(decompose(&tr, &params).is_err());
}
