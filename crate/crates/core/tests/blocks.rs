use std::collections::HashSet;

use approx::assert_abs_diff_eq;
use cpde::blocks::*;
use cpde::estimators::stats::chi2_independence_2x2;
use cpde::streams::{EventStreams, StreamKind};
use cpde::{LazyStreams, Params, ReplicaKey, Topology};
use proptest::prelude::*;

#[test]
fn delta_reference_values() {
    let b = delta_bound(1.0, 0.5, 1.0).unwrap();
    assert_abs_diff_eq!(b.delta, 0.119324, epsilon = 2e-6);
    assert_abs_diff_eq!(b.delta, b.delta0, epsilon = 1e-15);
    assert_abs_diff_eq!(b.delta, (-0.5f64).exp() * b.delta_prime, epsilon = 1e-15);
    // Closed-form written out directly.
    let (v, p, t): (f64, f64, f64) = (2.0, 0.2, 0.5);
    let direct = (-p * v * t).exp() * ((-v * t).exp() + (1.0 - p) * (1.0 - (-v * t).exp()) - (-p * v * t).exp())
        / (1.0 - (-p * v * t).exp());
    assert_abs_diff_eq!(delta_bound(v, p, t).unwrap().delta, direct, epsilon = 1e-14);
}

#[test]
fn delta_limits() {
    assert_abs_diff_eq!(delta_bound(1.0, 1.0, 1.0).unwrap().delta, 0.0, epsilon = 1e-15);
    assert!(delta_bound(1.0, 1.0 - 1e-9, 1.0).unwrap().delta < 1e-8);
    for m in [0.1f64, 0.5, 1.0] {
        let limit = 1.0 - (1.0 - (-m).exp()) / m;
        assert_abs_diff_eq!(delta_bound(m, 0.0, 1.0).unwrap().delta, limit, epsilon = 1e-15);
        assert_abs_diff_eq!(delta_bound(m, 1e-6, 1.0).unwrap().delta, limit, epsilon = 1e-6);
    }
    assert!(delta_bound(1.0, 1.5, 1.0).is_err());
}

#[test]
fn conditionals_reference_values() {
    let c = edge_chain_conditionals(1.0, 0.5, 1.0).unwrap();
    assert_abs_diff_eq!(c[0], 0.3160603, epsilon = 5e-8);
    assert_eq!(c[2], 1.0);
    assert_abs_diff_eq!(c[1], delta_bound(1.0, 0.5, 1.0).unwrap().delta_prime, epsilon = 1e-15);
}

proptest! {
    #[test]
    fn delta_is_ordered(v in 0.01f64..20.0, p in 0.0f64..=1.0, t in 0.01f64..10.0) {
        let b = delta_bound(v, p, t).unwrap();
        prop_assert!(0.0 <= b.delta && b.delta <= b.delta_prime + 1e-15 && b.delta_prime <= 1.0);
        let c = edge_chain_conditionals(v, p, t).unwrap();
        // The first conditional bounds delta' from above.
        prop_assert!(c[0] + 1e-12 >= c[1]);
    }
}

fn streams(topology: &Topology, lambda: f64, v: f64, p: f64, horizon: f64, seed: u64) -> LazyStreams {
    let params = Params::new(lambda, v, p, horizon).unwrap();
    LazyStreams::new(topology, &params, ReplicaKey::new(seed), false).unwrap()
}

#[test]
fn n_closed_trivial_cases() {
    let t = Topology::cycle(12).unwrap();
    let s = streams(&t, 1.0, 1.0, 0.0, 10.0, 1);
    let env = EnvTrajectory::from_streams(&s, &[false; 12]).unwrap();
    assert!(env.n_closed_edges(1.0, 10).unwrap().iter().flatten().all(|&c| c));
    let s = streams(&t, 1.0, 0.0, 0.5, 10.0, 1);
    let env = EnvTrajectory::from_streams(&s, &[true; 12]).unwrap();
    assert!(env.n_closed_edges(2.0, 5).unwrap().iter().flatten().all(|&c| !c));
    assert!(env.n_closed_edges(2.0, 6).is_err());
}

#[test]
fn edge_chain_matches_closed_forms() {
    let (v, p, t_len) = (1.0, 0.5, 1.0);
    let topo = Topology::path(101).unwrap();
    let s = streams(&topo, 0.0, v, p, 400.0, 3);
    let zeta0 = cpde::sample_initial_environment(&topo, p, &ReplicaKey::new(3)).unwrap();
    let env = EnvTrajectory::from_streams(&s, &zeta0).unwrap();
    let stats = edge_chain_statistics(&env, t_len, 400, 2).unwrap();
    let exact = edge_chain_conditionals(v, p, t_len).unwrap();
    for (tally, &q) in stats.conditionals.iter().zip(&exact).take(2) {
        assert!((tally.fraction() - q).abs() < 3.0 * tally.sigma_at(q), "{tally:?} vs {q}");
    }
    assert_eq!(stats.conditionals[2].hits, stats.conditionals[2].total);
    let delta = delta_bound(v, p, t_len).unwrap().delta;
    for tally in &stats.closed_given_history {
        assert!(tally.fraction() >= delta - 3.0 * tally.sigma_at(delta), "{tally:?}");
    }
}

/// Blocks from the definition: walk right from `k r0` until a closed edge or
/// `(k+1) r0`; the block spans from just after the previous walk's last edge
/// to the start of this one's.
fn transcribed_blocks(closed: &[bool], r0: usize, m: usize) -> Vec<Vec<usize>> {
    let n = m * r0;
    let last_edge = |k: usize| {
        let mut e = k * r0;
        while !closed[e % n] && e < (k + 1) * r0 - 1 {
            e += 1;
        }
        e
    };
    (0..m)
        .map(|k| {
            let start = last_edge((k + m - 1) % m) + 1;
            let end = last_edge(k);
            let mut x = start % n;
            let mut out = vec![x];
            while x != end % n {
                x = (x + 1) % n;
                out.push(x);
            }
            out
        })
        .collect()
}

fn static_grid(closed: &[bool], r0: usize) -> IntervalBlockGrid {
    let n = closed.len();
    let t = Topology::cycle(n).unwrap();
    let s = EventStreams::for_topology(&t, 1.0, false);
    let zeta0: Vec<bool> = closed.iter().map(|&c| !c).collect();
    let env = EnvTrajectory::from_streams(&s, &zeta0).unwrap();
    interval_block_variables(&t, &env, &s, r0, 1.0, 1).unwrap()
}

#[test]
fn blocks_without_barriers_are_default() {
    let g = static_grid(&[false; 24], 4);
    assert_eq!(g.blocks[0], vec![(0, 4), (4, 4), (8, 4), (12, 4), (16, 4), (20, 4)]);
    assert!(g.v[0].iter().all(|&v| v));
}

#[test]
fn all_closed_blocks_match_transcription() {
    let closed = [true; 12];
    let g = static_grid(&closed, 4);
    let want = transcribed_blocks(&closed, 4, 3);
    for k in 0..3 {
        assert_eq!(g.sites(0, k).collect::<Vec<_>>(), want[k]);
    }
    assert_eq!(want[1], vec![1, 2, 3, 4]);
    assert!(g.v[0].iter().all(|&v| !v));
}

proptest! {
    #[test]
    fn blocks_partition_and_match_transcription(
        r0 in 1usize..6,
        m in 3usize..6,
        bits in proptest::collection::vec(any::<bool>(), 30),
    ) {
        let n = r0 * m;
        let closed: Vec<bool> = bits.iter().cycle().take(n).copied().collect();
        let g = static_grid(&closed, r0);
        let want = transcribed_blocks(&closed, r0, m);
        let mut seen = vec![0; n];
        for k in 0..m {
            let sites: Vec<usize> = g.sites(0, k).collect();
            prop_assert_eq!(&sites, &want[k]);
            prop_assert!(sites.contains(&(k * r0)));
            prop_assert!(!sites.is_empty() && sites.len() <= 2 * r0 - 1);
            for x in sites {
                seen[x] += 1;
            }
            let barrier = (0..r0).any(|j| closed[k * r0 + j]);
            prop_assert_eq!(g.v[0][k], !barrier);
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }
}

#[test]
fn u_from_hand_log() {
    // Cycle of 12, r0 = 4, all edges open and static: blocks {0..3}, {4..7}, {8..11}.
    let t = Topology::cycle(12).unwrap();
    let mut s = EventStreams::for_topology(&t, 2.0, false);
    let recover = |s: &mut EventStreams, sites: &[usize], time: f64| {
        for &x in sites {
            s.push(StreamKind::Recover, x, time).unwrap();
        }
    };
    // Window 0: site 3 never recovers; block 1 dies and the attempt across
    // edge 3 = {3, 4} leaves the block, so it does not count.
    recover(&mut s, &[0, 1, 2], 0.2);
    recover(&mut s, &[4, 5, 6, 7], 0.3);
    s.push(StreamKind::Infect, 3, 0.4).unwrap();
    // Window 1: block 0 and block 2 die; block 1 survives through a chain
    // 5 -> 4 before 5, 6, 7 recover.
    recover(&mut s, &[4], 1.2);
    s.push(StreamKind::Infect, 4, 1.3).unwrap();
    recover(&mut s, &[5, 6, 7], 1.35);
    recover(&mut s, &[0, 1, 2, 3], 1.4);
    s.push(StreamKind::Infect, 11, 1.5).unwrap();
    recover(&mut s, &[8, 9, 10, 11], 1.6);
    let env = EnvTrajectory::from_streams(&s, &[true; 12]).unwrap();
    let g = interval_block_variables(&t, &env, &s, 4, 1.0, 2).unwrap();
    assert_eq!(g.u[0], vec![true, false, true]);
    assert_eq!(g.u[1], vec![false, true, false]);
}

fn explicit_z(m: usize, d: &GridDrivers, z0: &[i64], levels: usize) -> Vec<HashSet<i64>> {
    // Undirected edges of H on a ring of m blocks.
    let mut adj: Vec<Vec<Vec<(i64, usize)>>> = vec![vec![vec![]; m]; levels + 1];
    let mm = m as i64;
    let mut add = |a: (i64, usize), b: (i64, usize)| {
        adj[a.1][a.0 as usize].push((b.0, b.1));
        adj[b.1][b.0 as usize].push((a.0, a.1));
    };
    for n in 0..levels {
        for k in 0..mm {
            let up = |k: i64| [(k - 1).rem_euclid(mm), k, (k + 1) % mm];
            if d.u(k, n as u32) {
                for j in up(k) {
                    add((k, n), (j, n + 1));
                }
            }
            if d.v(k, n as u32) {
                let k1 = (k + 1) % mm;
                for s in [k, k1] {
                    for j in up(s) {
                        add((s, n), (j, n + 1));
                    }
                }
                add((k, n), (k1, n));
            }
        }
    }
    let mut reach: HashSet<(i64, usize)> = z0.iter().map(|&k| (k, 0)).collect();
    let mut stack: Vec<(i64, usize)> = reach.iter().copied().collect();
    while let Some((k, n)) = stack.pop() {
        for &(j, l) in &adj[n][k as usize] {
            if l >= n && reach.insert((j, l)) {
                stack.push((j, l));
            }
        }
    }
    let mut out = vec![z0.iter().copied().collect::<HashSet<_>>()];
    for n in 1..=levels {
        let level: HashSet<i64> = reach
            .iter()
            .filter(|&&(j, l)| l == n && adj[n][j as usize].iter().any(|&(i, l2)| l2 == n - 1 && reach.contains(&(i, l2))))
            .map(|&(j, _)| j)
            .collect();
        out.push(level);
    }
    out
}

fn random_grid(m: usize, levels: usize, bits: &[u8]) -> GridDrivers {
    let mut it = bits.iter().cycle();
    let mut row = || (0..m).map(|_| it.next().unwrap() % 4 == 0).collect::<Vec<bool>>();
    let u = (0..levels).map(|_| row()).collect();
    let v = (0..levels).map(|_| row()).collect();
    GridDrivers { u, v }
}

proptest! {
    #[test]
    fn z_agrees_with_explicit_h_graph(
        m in 3usize..9,
        bits in proptest::collection::vec(any::<u8>(), 64),
        start in 0i64..3,
    ) {
        let levels = 5;
        let d = random_grid(m, levels, &bits);
        let z0 = vec![start];
        let trace = run_z(&ZGeometry::Ring(m), &d, &z0, levels as u32, true).unwrap();
        let want = explicit_z(m, &d, &z0, levels);
        for (n, set) in trace.sets.unwrap().iter().enumerate() {
            let got: HashSet<i64> = set.iter().copied().collect();
            prop_assert_eq!(&got, &want[n], "level {}", n);
        }
    }

    #[test]
    fn z_is_monotone_in_drivers(
        m in 3usize..9,
        bits in proptest::collection::vec(any::<u8>(), 64),
        flip in 0usize..1000,
    ) {
        let levels = 6;
        let d = random_grid(m, levels, &bits);
        let mut raised = d.clone();
        let (which, n, k) = (flip % 2, (flip / 2) % levels, (flip / 2 / levels) % m);
        if which == 0 { raised.u[n][k] = true } else { raised.v[n][k] = true }
        let a = run_z(&ZGeometry::Ring(m), &d, &[0], levels as u32, true).unwrap().sets.unwrap();
        let b = run_z(&ZGeometry::Ring(m), &raised, &[0], levels as u32, true).unwrap().sets.unwrap();
        for n in 0..a.len() {
            let bigger: HashSet<i64> = b.get(n).cloned().unwrap_or_default().into_iter().collect();
            prop_assert!(a[n].iter().all(|k| bigger.contains(k)));
        }
    }
}

struct UOnly;

impl Drivers for UOnly {
    fn u(&self, _: i64, _: u32) -> bool {
        true
    }
    fn v(&self, _: i64, _: u32) -> bool {
        false
    }
}

#[test]
fn z_trivial_drivers() {
    let none = BernoulliDrivers { eps: 0.0, seed: 1 };
    let t = run_z(&ZGeometry::Line, &none, &[0], 10, false).unwrap();
    assert_eq!(t.n_ext, Some(1));
    let all = BernoulliDrivers { eps: 1.0, seed: 1 };
    let t = run_z(&ZGeometry::Segment(-50, 50), &all, &[0], 10, false).unwrap();
    assert!(t.budget_hit());
    assert_eq!(t.sizes[1], 101);
    assert!(run_z(&ZGeometry::Line, &all, &[0], 10, false).is_err());
    let t = run_z(&ZGeometry::Line, &UOnly, &[0], 10, false).unwrap();
    assert_eq!(t.sizes, (0..=10).map(|n| 2 * n + 1).collect::<Vec<_>>());
    assert!(run_z(&ZGeometry::Line, &all, &[0], 0, false).is_err());
}

#[test]
fn z_on_graph_steps_in_place() {
    let t = Topology::cycle(6).unwrap();
    let d = GridDrivers {
        u: vec![vec![false, false, true, false, false, false]],
        v: vec![vec![true, false, false, false, false, false]],
    };
    // Edge 0 joins 0 and 1, so both keep going; site 2 keeps going by its U.
    let z = run_z(&ZGeometry::Graph(t), &d, &[0, 2, 4], 1, true).unwrap();
    assert_eq!(z.sets.unwrap()[1], vec![0, 1, 2]);
}

#[test]
fn containment_holds_on_small_cycles() {
    let t = Topology::cycle(64).unwrap();
    let params = Params::new(2.0, 1.0, 0.5, 1.0).unwrap();
    let eta0 = vec![true; 64];
    let mut total = 0;
    for i in 0..40 {
        let r = interval_containment_replica(&t, &params, &eta0, 8, 2.0, 6, &ReplicaKey::derive(11, &[i])).unwrap();
        total += r.violations + r.empty_z_alive;
    }
    assert_eq!(total, 0);
}

#[test]
fn containment_detects_a_wrong_z() {
    let t = Topology::cycle(24).unwrap();
    let params = Params::new(3.0, 1.0, 0.9, 4.0).unwrap();
    let s = LazyStreams::new(&t, &params, ReplicaKey::new(5), false).unwrap();
    let zeta0 = vec![true; 24];
    let env = EnvTrajectory::from_streams(&s, &zeta0).unwrap();
    let grid = interval_block_variables(&t, &env, &s, 4, 1.0, 4).unwrap();
    let out = cpde::simulate_cpde(
        &t,
        &params,
        &vec![true; 24],
        &zeta0,
        &s,
        &cpde::SimOptions {
            snapshot_times: vec![0.0, 1.0, 2.0, 3.0],
            ..Default::default()
        },
    )
    .unwrap();
    let empty = ZTrace {
        sizes: vec![0; 4],
        sets: Some(vec![vec![]; 4]),
        n_ext: Some(0),
    };
    assert!(z_containment_check(&out.snapshots, &grid, &empty).unwrap() > 0);
}

#[test]
fn vertex_u_probability() {
    let t = Topology::cycle(200).unwrap();
    let s = streams(&t, 1.0, 1.0, 0.5, 50.0, 9);
    let env = EnvTrajectory::from_streams(&s, &[false; 200]).unwrap();
    let vars = vertex_block_variables(&env, &s, 2.0, 25).unwrap();
    let mut tally = Tally::default();
    vars.u.iter().flatten().for_each(|&u| tally.add(u));
    let q = (-2.0f64).exp();
    assert!((tally.fraction() - q).abs() < 3.0 * tally.sigma_at(q), "{tally:?}");
    let s = streams(&t, 1.0, 1.0, 0.0, 10.0, 9);
    let env = EnvTrajectory::from_streams(&s, &[false; 200]).unwrap();
    assert!(vertex_block_variables(&env, &s, 1.0, 10).unwrap().v.iter().flatten().all(|&v| !v));
}

#[test]
fn block_intervals_overlap_by_half() {
    assert_eq!(block_interval(0, 0), [0, 1, 2, 3]);
    assert_eq!(block_interval(1, 1), [2, 3, 4, 5]);
    for k in -5..5 {
        for n in 0..5 {
            let top: HashSet<i64> = block_interval(k, n + 1).into_iter().collect();
            let left: HashSet<i64> = block_interval(k - 1, n).into_iter().collect();
            let right: HashSet<i64> = block_interval(k, n).into_iter().collect();
            assert_eq!(top.intersection(&left).count(), 2);
            assert_eq!(top.intersection(&right).count(), 2);
        }
    }
}

#[test]
fn c1_c2_probabilities_and_independence() {
    let (m, p, v) = (2.0, 0.9, 1.0);
    let t = Topology::cycle(64).unwrap();
    let cfg = GoodBlockConfig {
        m,
        gap_delta: 0.05,
        k_range: (0, 7),
        windows: 4,
        origin: 0,
    };
    let (mut c1, mut c2) = (Tally::default(), Tally::default());
    let mut table = [[0u64; 2]; 2];
    for i in 0..300 {
        let s = streams(&t, 5.0, v, p, m / v * 4.0, 100 + i);
        let g = good_block_grid(&t, &s, v, &cfg).unwrap();
        for row in &g.conditions {
            for c in row {
                c1.add(c[0]);
                c2.add(c[1]);
            }
            for k in (0..8).step_by(2) {
                table[row[k][0] as usize][row[k + 1][0] as usize] += 1;
            }
        }
    }
    let q1 = (1.0 - (-m * p).exp()).powi(3);
    let q2 = (-3.0 * (1.0 - p) * m).exp();
    assert_abs_diff_eq!(q1, 0.58156, epsilon = 5e-6);
    assert_abs_diff_eq!(q2, 0.54881, epsilon = 5e-6);
    assert!((c1.fraction() - q1).abs() < 3.0 * c1.sigma_at(q1), "{c1:?}");
    assert!((c2.fraction() - q2).abs() < 3.0 * c2.sigma_at(q2), "{c2:?}");
    let p_value = chi2_independence_2x2(table).unwrap();
    assert!(p_value > 0.01, "{table:?}");
}

#[test]
fn good_block_domain_errors() {
    let t = Topology::cycle(16).unwrap();
    let s = streams(&t, 1.0, 1.0, 0.9, 10.0, 1);
    let mut cfg = GoodBlockConfig {
        m: 2.0,
        gap_delta: 1.5,
        k_range: (0, 1),
        windows: 1,
        origin: 0,
    };
    assert!(good_block_grid(&t, &s, 1.0, &cfg).is_err());
    cfg.gap_delta = 0.1;
    assert!(good_block_grid(&t, &s, 1.0, &cfg).is_ok());
    let path = Topology::path(4).unwrap();
    let sp = streams(&path, 1.0, 1.0, 0.9, 10.0, 1);
    cfg.k_range = (0, 1);
    assert!(good_block_grid(&path, &sp, 1.0, &cfg).is_err());
}

#[test]
fn seeded_propagation_fills_good_blocks() {
    let t = Topology::path(6).unwrap();
    let params = Params::new(36_000.0, 10.0, 0.9, 1.0).unwrap();
    let cfg = GoodBlockConfig {
        m: 2.0,
        gap_delta: 0.01,
        k_range: (0, 0),
        windows: 1,
        origin: 1,
    };
    let mut conditioned = 0;
    for i in 0..300 {
        match seeded_block_propagation(&t, &params, &cfg, (i % 3) as usize, &ReplicaKey::derive(2, &[i])).unwrap() {
            Propagation::Conditioned { filled } => {
                assert!(filled, "replica {i}");
                conditioned += 1;
            }
            Propagation::NotConditioned => {}
        }
    }
    assert!(conditioned > 20, "{conditioned}");
}

#[test]
fn r0_calibration() {
    assert_eq!(calibrate_r0(0.5, 0.1).unwrap(), 4);
    assert_eq!(calibrate_r0(0.119324, 0.01).unwrap(), 37);
    assert!(calibrate_r0(0.0, 0.1).is_err());
    let c = calibrate(0.5, 0.5, 0.2, 2000, 4).unwrap();
    assert!(c.tail + 2.0 * c.tail_se < 0.2 && c.t_len > 0.0);
}
