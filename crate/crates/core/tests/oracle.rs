use approx::assert_abs_diff_eq;
use cpde::estimators::{estimate_mean_extinction_time, estimate_survival, InitialEnvironment, InitialInfection, McConfig};
use cpde::oracle::*;
use cpde::{Params, Topology};

fn model(n: usize, lambda: f64, v: f64, p: f64) -> CtmcModel {
    CtmcModel::new(&Topology::path(n).unwrap(), &Params::new(lambda, v, p, 1.0).unwrap()).unwrap()
}

#[test]
fn fixture_matches_recomputation() {
    let frozen = parse_fixture(FIXTURE).unwrap();
    let insts = instances();
    assert_eq!(frozen.len(), insts.len());
    for (row, inst) in frozen.iter().zip(&insts) {
        assert_eq!(row.id, inst.id);
        let now = compute_instance(inst).unwrap();
        let scale = if row.value.abs() > 1.0 { row.value.abs() } else { 1.0 };
        assert!((now.value - row.value).abs() <= row.tolerance * scale, "{} {} {}", row.id, now.value, row.value);
    }
}

#[test]
fn trivial_values() {
    let m = model(2, 0.0, 1.0, 0.5);
    for t in [0.5, 1.0, 3.0] {
        let s = exact_survival_to_horizon(&m, &[true, false], &ZetaInit::Stationary, t).unwrap();
        assert_abs_diff_eq!(s, (-t).exp(), epsilon = 1e-10);
    }
    assert_eq!(exact_survival_to_horizon(&m, &[true, false], &ZetaInit::Stationary, 0.0).unwrap(), 1.0);
    assert_eq!(exact_survival_to_horizon(&m, &[false, false], &ZetaInit::Stationary, 0.0).unwrap(), 0.0);
    let single = exact_mean_extinction_time(&m, &[true, false], &ZetaInit::Fixed(vec![true])).unwrap();
    assert_abs_diff_eq!(single, 1.0, epsilon = 1e-12);
    let m = model(4, 3.0, 2.0, 0.0);
    let h4 = 1.0 + 0.5 + 1.0 / 3.0 + 0.25;
    let t = exact_mean_extinction_time(&m, &[true; 4], &ZetaInit::Fixed(vec![false; 3])).unwrap();
    assert_abs_diff_eq!(t, h4, epsilon = 1e-10);
}

#[test]
fn generator_rates_match_a_recount() {
    let topo = Topology::cycle(4).unwrap();
    let (lambda, v, p) = (1.3, 0.7, 0.4);
    let m = CtmcModel::new(&topo, &Params::new(lambda, v, p, 1.0).unwrap()).unwrap();
    for s in 0..m.n_states() as u32 {
        let eta: Vec<bool> = (0..4).map(|x| s >> x & 1 == 1).collect();
        let zeta: Vec<bool> = (0..4).map(|e| s >> (4 + e) & 1 == 1).collect();
        let expected = if eta.iter().any(|&b| b) {
            let mut r = 0.0;
            for x in 0..4 {
                if eta[x] {
                    r += 1.0;
                } else {
                    // Cycle neighbors x-1 (edge x-1) and x+1 (edge x).
                    let left = (x + 3) % 4;
                    let right = (x + 1) % 4;
                    r += lambda * ((eta[left] && zeta[left]) as u8 + (eta[right] && zeta[x]) as u8) as f64;
                }
            }
            r + zeta.iter().map(|&z| if z { v * (1.0 - p) } else { v * p }).sum::<f64>()
        } else {
            0.0
        };
        assert_abs_diff_eq!(m.outflow(s), expected, epsilon = 1e-12);
        let sum: f64 = m.transitions(s).iter().map(|&(_, r)| r).sum();
        assert_abs_diff_eq!(sum, m.outflow(s), epsilon = 1e-12);
        if m.is_absorbing(s) {
            assert!(m.transitions(s).is_empty());
        }
    }
}

#[test]
fn integrated_survival_matches_linear_solve() {
    let m = model(2, 1.0, 1.0, 0.5);
    let z = ZetaInit::Fixed(vec![true]);
    let mean = exact_mean_extinction_time(&m, &[true, true], &z).unwrap();
    let integral = integrated_survival(&m, &[true, true], &z, 0.01).unwrap();
    assert!((integral - mean).abs() < 1e-4, "{integral} {mean}");
}

#[test]
fn state_space_limits() {
    let big = Topology::path(11).unwrap();
    assert!(CtmcModel::new(&big, &Params::new(1.0, 1.0, 0.5, 1.0).unwrap()).is_err());
    let m = model(7, 1.0, 1.0, 0.5);
    assert!(exact_mean_extinction_time(&m, &[true; 7], &ZetaInit::Stationary).is_err());
    assert!(exact_survival_to_horizon(&m, &[true; 7], &ZetaInit::Stationary, 1.0).is_ok());
}

#[test]
fn z_one_step_law() {
    let z = exact_z_one_step(0.0, 8).unwrap();
    assert_eq!(z.law[0], 1.0);
    let z = exact_z_one_step(1.0, 8).unwrap();
    assert_eq!(z.law[2 * 8 + 3], 1.0);
    let z = exact_z_one_step(0.1, 8).unwrap();
    assert_abs_diff_eq!(z.law.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    assert!(z.tv_to_count < 1e-8, "{}", z.tv_to_count);
    for k in 0..10 {
        assert_abs_diff_eq!(z.law[k], interval_count_law(0.1, k), epsilon = 1e-9);
    }
    assert!(exact_z_one_step(0.1, MAX_RADIUS + 1).is_err());
}

#[test]
fn simulator_matches_transient_oracle() {
    let topo = Topology::path(3).unwrap();
    let params = Params::new(1.5, 1.0, 0.5, 5.0).unwrap();
    let m = CtmcModel::new(&topo, &params).unwrap();
    let exact = exact_survival_to_horizon(&m, &[true; 3], &ZetaInit::Stationary, 5.0).unwrap();
    let eta0 = InitialInfection::All.eta(3).unwrap();
    let est = estimate_survival(&topo, &params, &eta0, &InitialEnvironment::Stationary, &McConfig::new(20_000, 17)).unwrap();
    let sigma = (exact * (1.0 - exact) / 20_000.0).sqrt();
    assert!((est.point - exact).abs() < 3.0 * sigma, "{} vs {exact}", est.point);
}

#[test]
fn simulator_matches_absorption_oracle() {
    let topo = Topology::path(2).unwrap();
    let params = Params::new(1.0, 1.0, 0.5, 200.0).unwrap();
    let m = CtmcModel::new(&topo, &params).unwrap();
    let exact = exact_mean_extinction_time(&m, &[true; 2], &ZetaInit::Fixed(vec![true])).unwrap();
    let s = estimate_mean_extinction_time(
        &topo,
        &params,
        &[true; 2],
        &InitialEnvironment::AllOpen,
        200.0,
        &McConfig::new(50_000, 18),
        false,
    )
    .unwrap();
    assert_eq!(s.cap_hits, 0);
    assert!((s.mean.point - exact).abs() < 3.0 * s.mean.se(), "{:?} vs {exact}", s.mean);
}
