//! Execution of a resolved run.

use std::fmt::Write as _;

use cpde::blocks::{
    good_block_grid, interval_containment_replica, run_z, BernoulliDrivers, GoodBlockConfig, ZGeometry,
};
use cpde::couplings::{
    domination_check, rescale_coupling_check, simulate_sandwich, simulate_weak_processes, CouplingRow,
    SandwichOptions, WeakOptions,
};
use cpde::estimators::{
    crossover_experiment, estimate_lambda0, extinction_stats, replica_key, run_replicas, survival_estimate,
    sweep_phase_diagram, CrossoverConfig, CsvRow, Lambda0Config, McConfig, SweepGrid, CSV_HEADER,
};
use cpde::oracle::{compute_instance, instances, parse_fixture, FIXTURE};
use cpde::parallel::map_indexed;
use cpde::streams::LazyStreams;
use cpde::{Extinction, ReplicaKey, TopologyKind};

use crate::config::{BlocksJob, CouplingMode, Job, RunConfig};

/// Everything a run produces.
#[derive(Debug, Default)]
pub struct Report {
    /// Result table, including its header line.
    pub table: String,
    pub summary: Vec<String>,
    /// Hard invariant failures.
    pub violations: Vec<String>,
    /// Oracle values that disagree with their reference.
    pub mismatches: Vec<String>,
}

impl Report {
    fn with_header(header: &str) -> Self {
        Report {
            table: format!("{header}\n"),
            ..Default::default()
        }
    }

    fn row(&mut self, line: &str) {
        self.table.push_str(line);
        self.table.push('\n');
    }
}

fn fmt_ext(e: Extinction) -> String {
    match e {
        Extinction::At(t) => t.to_string(),
        Extinction::Survived => "survived".into(),
    }
}

pub fn run(cfg: &RunConfig) -> cpde::Result<Report> {
    let threads = cfg.parallelism;
    let seed = cfg.seed;
    match &cfg.job {
        Job::Simulate(job) => {
            let eta0 = job.eta0.eta(job.topology.n_vertices())?;
            let mc = McConfig::new(job.replicas, seed).with_threads(threads);
            let ext = run_replicas(&job.topology, &job.params, &eta0, &job.env, &mc)?;
            let mut report = Report::with_header(CSV_HEADER);
            let row = CsvRow {
                topology: job.topology.label(),
                kind: "simulate".into(),
                n: job.topology.n_vertices(),
                lambda: job.params.lambda,
                v: job.params.v,
                p: job.params.p,
                horizon: job.params.horizon,
                eta0_spec: job.eta0.to_string(),
                replicas: job.replicas,
                seed,
                survival: Some(survival_estimate(&ext, seed)),
                extinction: Some(extinction_stats(&ext, job.params.horizon, seed, true)),
            };
            report.row(&row.to_line());
            Ok(report)
        }
        Job::Sweep(job) => {
            let eta0 = job.eta0.eta(job.topology.n_vertices())?;
            let grid = SweepGrid {
                vs: job.vs.clone(),
                ps: job.ps.clone(),
                lambdas: job.lambdas.clone(),
            };
            let mc = McConfig::new(job.replicas, seed).with_threads(threads);
            let result = sweep_phase_diagram(&job.topology, &grid, job.horizon, &eta0, &job.env, &mc, job.theta)?;
            let mut report = Report::with_header(CSV_HEADER);
            let base = CsvRow {
                topology: job.topology.label(),
                n: job.topology.n_vertices(),
                horizon: job.horizon,
                eta0_spec: job.eta0.to_string(),
                replicas: job.replicas,
                ..Default::default()
            };
            for c in &result.cells {
                report.row(
                    &CsvRow {
                        kind: "sweep".into(),
                        lambda: c.lambda,
                        v: c.v,
                        p: c.p,
                        seed: c.survival.seed,
                        survival: Some(c.survival),
                        ..base.clone()
                    }
                    .to_line(),
                );
            }
            let top = job.lambdas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            for &(v, p) in &result.immune {
                let cell = result.cells.iter().find(|c| c.v == v && c.p == p && c.lambda == top);
                report.row(
                    &CsvRow {
                        kind: "sweep-immune".into(),
                        lambda: top,
                        v,
                        p,
                        seed,
                        survival: cell.map(|c| c.survival),
                        ..base.clone()
                    }
                    .to_line(),
                );
            }
            report.summary.push(format!("cells = {}", result.cells.len()));
            report.summary.push(format!("immune pairs = {}", result.immune.len()));
            report.summary.extend(result.monotonicity_flags.iter().map(|f| format!("monotonicity flag: {f}")));
            Ok(report)
        }
        Job::Lambda0(job) => {
            let lc = Lambda0Config {
                theta: job.theta,
                tolerance: job.tolerance,
                eta0: job.eta0.clone(),
                env: job.env.clone(),
                max_widen: job.max_widen,
                threads,
                ..Lambda0Config::new(job.lo, job.hi, job.horizon, job.replicas)
            };
            let b = estimate_lambda0(&job.topology, job.v, job.p, &lc, seed)?;
            let mut report = Report::with_header(CSV_HEADER);
            let base = CsvRow {
                topology: job.topology.label(),
                n: job.topology.n_vertices(),
                v: job.v,
                p: job.p,
                horizon: job.horizon,
                eta0_spec: job.eta0.to_string(),
                replicas: job.replicas,
                seed,
                ..Default::default()
            };
            for h in &b.history {
                report.row(
                    &CsvRow {
                        kind: "lambda0-eval".into(),
                        lambda: h.lambda,
                        seed: h.survival.seed,
                        survival: Some(h.survival),
                        ..base.clone()
                    }
                    .to_line(),
                );
            }
            for (kind, lambda) in [("lambda0-lo", b.lo), ("lambda0-hi", b.hi)] {
                report.row(
                    &CsvRow {
                        kind: kind.into(),
                        lambda,
                        ..base.clone()
                    }
                    .to_line(),
                );
            }
            report.summary.push(format!("bracket = [{}, {}] at theta = {}, horizon = {}", b.lo, b.hi, b.theta, b.horizon));
            report.summary.push(format!("converged = {}", b.converged));
            if let Some(note) = b.note {
                report.summary.push(format!("note: {note}"));
            }
            Ok(report)
        }
        Job::Crossover(job) => {
            let cc = CrossoverConfig {
                lambda: job.lambda,
                p: job.p,
                v_small: job.v_small,
                sizes: job.sizes.clone(),
                cap: job.cap,
                alpha: job.alpha,
            };
            let mc = McConfig::new(job.replicas, seed).with_threads(threads);
            let result = crossover_experiment(&job.topology, &cc, &mc)?;
            let mut report = Report::with_header(CSV_HEADER);
            for r in &result.rows {
                for (kind, v, arm) in [
                    ("crossover-static", 0.0, &r.static_arm),
                    ("crossover-dynamic", job.v_small, &r.dynamic_arm),
                ] {
                    report.row(
                        &CsvRow {
                            topology: job.topology.label(),
                            kind: kind.into(),
                            n: r.n,
                            lambda: job.lambda,
                            v,
                            p: job.p,
                            horizon: job.cap,
                            eta0_spec: format!("block:{}", r.n),
                            replicas: job.replicas,
                            seed: arm.mean.seed,
                            survival: None,
                            extinction: Some(arm.clone()),
                        }
                        .to_line(),
                    );
                }
                report.summary.push(format!("n = {}: median ratio = {} (se {})", r.n, r.ratio, r.ratio_se));
            }
            let t = &result.ratio_trend;
            report.summary.push(format!(
                "ratio trend: increasing = {}, p_violation = {}, slope z = {}",
                t.increasing, t.p_violation, t.slope_z
            ));
            let f = &result.dynamic_fit;
            report.summary.push(format!(
                "dynamic arm: median = {} + {} ln n, R^2 = {}",
                f.intercept, f.slope, f.r2
            ));
            if result.truncated {
                report.summary.push("truncated: most runs of some arm hit the cap; medians are lower bounds".into());
            }
            Ok(report)
        }
        Job::Blocks(job) => run_blocks(job, seed, threads),
        Job::Couplings(job) => {
            let n = job.topology.n_vertices();
            let eta0 = job.eta0.eta(n)?;
            let keys = |i: usize| replica_key(seed, i);
            let zeta = |key: &ReplicaKey| job.env.zeta(&job.topology, job.params.p, key);
            match job.mode {
                CouplingMode::Sandwich => {
                    let options = SandwichOptions {
                        fault: job.fault,
                        ..Default::default()
                    };
                    let outcomes = map_indexed(job.replicas, threads, |i| {
                        let key = keys(i);
                        simulate_sandwich(&job.topology, &job.params, &eta0, &zeta(&key)?, &key, &options)
                    })
                    .into_iter()
                    .collect::<cpde::Result<Vec<_>>>()?;
                    let mut report = Report::with_header("replica,violations,attempts,valid,accepted,edge_time");
                    for (i, o) in outcomes.iter().enumerate() {
                        report.row(&format!("{i},{},{},{},{},{}", o.violations, o.attempts, o.valid, o.accepted, o.edge_time));
                        if o.violations > 0 {
                            report.violations.push(format!("replica {i}: {} ordering violations", o.violations));
                        }
                    }
                    let d = domination_check(&outcomes, 3.0)?;
                    report.summary.push(format!(
                        "beta = {}, valid rate = {}, accepted rate = {}, se = {}, domination holds = {}",
                        d.beta, d.valid_rate, d.accepted_rate, d.se, d.holds
                    ));
                    Ok(report)
                }
                CouplingMode::Weak => {
                    let options = WeakOptions {
                        m_radius: job.m_radius,
                        ..Default::default()
                    };
                    let outcomes = map_indexed(job.replicas, threads, |i| {
                        let key = keys(i);
                        simulate_weak_processes(&job.topology, &job.params, &eta0, &zeta(&key)?, &key, &options)
                    })
                    .into_iter()
                    .collect::<cpde::Result<Vec<_>>>()?;
                    let mut report = Report::with_header(CouplingRow::HEADER);
                    for (i, o) in outcomes.iter().enumerate() {
                        let row = CouplingRow {
                            seed,
                            replica: i as u64,
                            violations: o.ordering_violations,
                            n_p: o.stats.n_p,
                            n_bar_p: o.stats.n_bar_p,
                            m_n: o.stats.m_n,
                            tallies: o.stats.tallies,
                        };
                        report.row(&row.to_csv());
                        if o.ordering_violations > 0 {
                            report.violations.push(format!("replica {i}: {} ordering violations", o.ordering_violations));
                        }
                    }
                    Ok(report)
                }
                CouplingMode::Rescale => {
                    let outcomes = map_indexed(job.replicas, threads, |i| {
                        let key = keys(i);
                        let p = &job.params;
                        rescale_coupling_check(&job.topology, p.lambda, p.v, job.v_prime, p.p, p.horizon, &eta0, &zeta(&key)?, &key)
                    })
                    .into_iter()
                    .collect::<cpde::Result<Vec<_>>>()?;
                    let mut report = Report::with_header("replica,violations,extinction_a,extinction_b");
                    for (i, o) in outcomes.iter().enumerate() {
                        report.row(&format!("{i},{},{},{}", o.violations, fmt_ext(o.extinction_a), fmt_ext(o.extinction_b)));
                        if o.violations > 0 {
                            report.violations.push(format!("replica {i}: {} containment violations", o.violations));
                        }
                    }
                    Ok(report)
                }
            }
        }
        Job::OracleCheck { fixture } => {
            let text = match fixture {
                Some(path) => std::fs::read_to_string(path)
                    .map_err(|e| cpde::Error::Precondition(format!("cannot read {}: {e}", path.display())))?,
                None => FIXTURE.to_string(),
            };
            let reference = parse_fixture(&text)?;
            let all = instances();
            let mut report = Report::with_header("id,value,reference,tolerance,ok");
            for r in &reference {
                let Some(inst) = all.iter().find(|i| i.id == r.id) else {
                    report.row(&format!("{},,{},{},false", r.id, r.value, r.tolerance));
                    report.mismatches.push(format!("{}: no such oracle instance", r.id));
                    continue;
                };
                let now = compute_instance(inst)?;
                let scale = r.value.abs().max(1.0);
                let ok = (now.value - r.value).abs() <= r.tolerance * scale;
                report.row(&format!("{},{},{},{},{ok}", r.id, now.value, r.value, r.tolerance));
                if !ok {
                    report.mismatches.push(format!("{}: computed {} against {}", r.id, now.value, r.value));
                }
            }
            Ok(report)
        }
        Job::Calibrate(job) => {
            let c = cpde::blocks::calibrate(job.lambda, job.p, job.eps, job.replicas, seed)?;
            let mut report = Report::with_header("delta0,r0,t_len,tail,tail_se,cap");
            report.row(&format!("{},{},{},{},{},{}", c.delta0, c.r0, c.t_len, c.tail, c.tail_se, c.cap));
            Ok(report)
        }
    }
}

fn run_blocks(job: &BlocksJob, seed: u64, threads: usize) -> cpde::Result<Report> {
    match job {
        BlocksJob::Containment {
            topology,
            params,
            eta0,
            replicas,
            r0,
            t_len,
            windows,
        } => {
            let eta0 = eta0.eta(topology.n_vertices())?;
            let reports = map_indexed(*replicas, threads, |i| {
                interval_containment_replica(topology, params, &eta0, *r0, *t_len, *windows, &replica_key(seed, i))
            })
            .into_iter()
            .collect::<cpde::Result<Vec<_>>>()?;
            let mut report = Report::with_header("replica,violations,empty_z_alive,n_ext,cpde_alive_at_end");
            for (i, r) in reports.iter().enumerate() {
                let n_ext = r.n_ext.map_or(String::new(), |n| n.to_string());
                report.row(&format!("{i},{},{},{n_ext},{}", r.violations, r.empty_z_alive, r.cpde_alive_at_end));
                if r.violations > 0 || r.empty_z_alive > 0 {
                    report.violations.push(format!(
                        "replica {i}: {} infected blocks outside Z, {} levels with Z empty and the process alive",
                        r.violations, r.empty_z_alive
                    ));
                }
            }
            let died = reports.iter().filter(|r| r.n_ext.is_some()).count();
            report.summary.push(format!("Z extinct within the windows in {died} of {replicas} replicas"));
            Ok(report)
        }
        BlocksJob::Z {
            eps,
            z0_size,
            budget,
            replicas,
        } => {
            let z0: Vec<i64> = (0..*z0_size as i64).collect();
            let traces = map_indexed(*replicas, threads, |i| {
                let drivers = BernoulliDrivers {
                    eps: *eps,
                    seed: replica_key(seed, i).digest(),
                };
                run_z(&ZGeometry::Line, &drivers, &z0, *budget, false)
            })
            .into_iter()
            .collect::<cpde::Result<Vec<_>>>()?;
            let mut report = Report::with_header("run,n_ext,max_size");
            let mut total = 0.0;
            let mut hits = 0;
            for (i, t) in traces.iter().enumerate() {
                let max = t.sizes.iter().copied().max().unwrap_or(0);
                let n_ext = t.n_ext.map_or(String::new(), |n| n.to_string());
                report.row(&format!("{i},{n_ext},{max}"));
                match t.n_ext {
                    Some(n) => total += f64::from(n),
                    None => hits += 1,
                }
            }
            let done = replicas - hits;
            if done > 0 {
                report.summary.push(format!("mean extinction level = {}", total / done as f64));
            }
            report.summary.push(format!("budget hits = {hits}"));
            Ok(report)
        }
        BlocksJob::Good {
            topology,
            params,
            replicas,
            m,
            gap_delta,
            windows,
        } => {
            let n = topology.n_vertices() as i64;
            let (origin, k_hi) = match topology.kind() {
                TopologyKind::Cycle => (0, n / 4 - 1),
                _ => {
                    let origin = 2 * (*windows as i64 - 1);
                    (origin, (n - origin - 4) / 4)
                }
            };
            if k_hi < 0 || origin >= n {
                return Err(cpde::Error::Precondition(format!("{topology} is too small for {windows} windows of blocks")));
            }
            let cfg = GoodBlockConfig {
                m: *m,
                gap_delta: *gap_delta,
                k_range: (0, k_hi),
                windows: *windows,
                origin: origin as usize,
            };
            let grids = map_indexed(*replicas, threads, |i| {
                let streams = LazyStreams::new(topology, params, replica_key(seed, i), false)?;
                good_block_grid(topology, &streams, params.v, &cfg)
            })
            .into_iter()
            .collect::<cpde::Result<Vec<_>>>()?;
            let mut report = Report::with_header("replica,blocks,c1,c2,c3,c4,good");
            let mut totals = [0usize; 6];
            for (i, g) in grids.iter().enumerate() {
                let mut counts = [0usize; 6];
                for row in &g.conditions {
                    for c in row {
                        counts[0] += 1;
                        for j in 0..4 {
                            counts[j + 1] += c[j] as usize;
                        }
                        counts[5] += c.iter().all(|&b| b) as usize;
                    }
                }
                let mut line = i.to_string();
                for c in counts {
                    let _ = write!(line, ",{c}");
                }
                report.row(&line);
                for (t, c) in totals.iter_mut().zip(counts) {
                    *t += c;
                }
            }
            let frac = |j: usize| totals[j] as f64 / totals[0] as f64;
            report.summary.push(format!(
                "fractions: c1 = {}, c2 = {}, c3 = {}, c4 = {}, good = {}",
                frac(1),
                frac(2),
                frac(3),
                frac(4),
                frac(5)
            ));
            Ok(report)
        }
    }
}
