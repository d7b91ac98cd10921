//! Run configuration: a flat `key = value` text with `[section]` headers.
//!
//! ```text
//! # comment
//! [run]
//! topology = cycle:64
//! lambda = 2
//! [sweep]
//! vs = 0.1, 1, 10
//! ```
//!
//! `[run]` holds the keys shared by every subcommand. A subcommand section may
//! repeat any of them, and its value wins. Keys not listed for a section are
//! rejected, as are unknown sections and repeated keys.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use clap::ValueEnum;
use cpde::couplings::SandwichFault;
use cpde::estimators::{InitialEnvironment, InitialInfection};
use cpde::{Params, Topology};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Simulate,
    Sweep,
    Lambda0,
    Crossover,
    Blocks,
    Couplings,
    OracleCheck,
    Calibrate,
}

impl Command {
    pub fn section(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Lambda0 => "lambda0",
            Command::Crossover => "crossover",
            Command::Blocks => "blocks",
            Command::Couplings => "couplings",
            Command::OracleCheck => "oracle-check",
            Command::Calibrate => "calibrate",
        }
    }

    fn from_section(s: &str) -> Option<Command> {
        Command::value_variants().iter().copied().find(|c| c.section() == s)
    }

    fn keys(self) -> &'static [&'static str] {
        match self {
            Command::Simulate => &[],
            Command::Sweep => &["vs", "ps", "lambdas", "theta"],
            Command::Lambda0 => &["lambda_bar", "lo", "hi", "theta", "tolerance", "max_widen"],
            Command::Crossover => &["v_small", "sizes", "cap", "alpha"],
            Command::Blocks => &[
                "mode", "r0", "t_len", "windows", "eps", "z0_size", "budget", "m", "gap_delta",
            ],
            Command::Couplings => &["mode", "v_prime", "m_radius", "fault"],
            Command::OracleCheck => &["fixture"],
            Command::Calibrate => &["eps"],
        }
    }

    /// Whether the subcommand draws random numbers and so needs a seed.
    pub fn needs_seed(self) -> bool {
        self != Command::OracleCheck
    }
}

const RUN_KEYS: &[&str] = &[
    "topology", "lambda", "v", "p", "horizon", "eta0", "env", "replicas", "seed", "parallelism",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<cpde::Error> for ConfigError {
    fn from(e: cpde::Error) -> Self {
        ConfigError(e.to_string())
    }
}

type Res<T> = Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Res<T> {
    Err(ConfigError(msg.into()))
}

/// Raw values by `(section, key)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    values: BTreeMap<(String, String), String>,
}

impl Table {
    pub fn parse(text: &str) -> Res<Table> {
        let mut table = Table::default();
        let mut section = "run".to_string();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if name != "run" && Command::from_section(name).is_none() {
                    return err(format!("line {}: unknown section [{name}]", i + 1));
                }
                section = name.to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return err(format!("line {}: expected `key = value`, got `{line}`", i + 1));
            };
            table.insert(&section, key.trim(), value.trim()).map_err(|e| ConfigError(format!("line {}: {e}", i + 1)))?;
        }
        Ok(table)
    }

    /// Adds a value, rejecting unknown and repeated keys.
    pub fn insert(&mut self, section: &str, key: &str, value: &str) -> Res<()> {
        check_known(section, key)?;
        let slot = (section.to_string(), key.to_string());
        if self.values.contains_key(&slot) {
            return err(format!("key `{key}` given twice in [{section}]"));
        }
        self.values.insert(slot, value.to_string());
        Ok(())
    }

    /// Adds or replaces a value; `key` may be `section.key`, otherwise it
    /// goes to `[run]` for shared keys and to `default_section` for the rest.
    pub fn set(&mut self, key: &str, value: &str, default_section: &str) -> Res<()> {
        let (section, key) = match key.split_once('.') {
            Some((s, k)) => (s.to_string(), k.to_string()),
            None if RUN_KEYS.contains(&key) => ("run".to_string(), key.to_string()),
            None => (default_section.to_string(), key.to_string()),
        };
        check_known(&section, &key)?;
        if RUN_KEYS.contains(&key.as_str()) {
            // An override of a shared key must win over a section value.
            self.values.retain(|(_, k), _| *k != key);
        }
        self.values.insert((section, key), value.to_string());
        Ok(())
    }

    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .or_else(|| self.values.get(&("run".to_string(), key.to_string())))
            .map(String::as_str)
    }
}

fn check_known(section: &str, key: &str) -> Res<()> {
    let known = if section == "run" {
        RUN_KEYS.contains(&key)
    } else {
        match Command::from_section(section) {
            Some(c) => RUN_KEYS.contains(&key) || c.keys().contains(&key),
            None => return err(format!("unknown section [{section}]")),
        }
    };
    if known {
        Ok(())
    } else {
        err(format!("unknown key `{key}` in [{section}]"))
    }
}

/// Reads typed values out of a table, validating each and recording the
/// resolved value for the echo.
struct Resolver<'t> {
    table: &'t Table,
    section: &'static str,
    echo: Vec<(String, String)>,
}

impl Resolver<'_> {
    fn raw(&self, key: &str) -> Option<&str> {
        self.table.get(self.section, key)
    }

    fn missing<T>(&self, key: &str) -> Res<T> {
        err(format!("missing required key `{key}` (in [run] or [{}])", self.section))
    }

    fn record(&mut self, key: &str, value: String) {
        self.echo.push((key.to_string(), value));
    }

    fn number<T: std::str::FromStr + fmt::Display + Copy>(
        &mut self,
        key: &str,
        default: Option<T>,
        ok: impl Fn(T) -> bool,
        expected: &str,
    ) -> Res<T> {
        let value = match self.raw(key) {
            Some(s) => s
                .parse::<T>()
                .map_err(|_| ConfigError(format!("invalid value for `{key}`: `{s}` (expected {expected})")))?,
            None => match default {
                Some(d) => d,
                None => return self.missing(key),
            },
        };
        if !ok(value) {
            return err(format!("invalid value for `{key}`: {value} (expected {expected})"));
        }
        self.record(key, value.to_string());
        Ok(value)
    }

    fn f64(&mut self, key: &str, default: Option<f64>, lo: f64, hi: f64, expected: &str) -> Res<f64> {
        self.number(key, default, |x: f64| x >= lo && x <= hi, expected)
    }

    fn usize(&mut self, key: &str, default: Option<usize>, min: usize) -> Res<usize> {
        let expected = format!("an integer >= {min}");
        self.number(key, default, |x: usize| x >= min, &expected)
    }

    fn list<T: std::str::FromStr + fmt::Display + Copy>(
        &mut self,
        key: &str,
        default: Option<&[T]>,
        ok: impl Fn(T) -> bool,
        expected: &str,
    ) -> Res<Vec<T>> {
        let values = match self.raw(key) {
            Some(s) => s
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    match item.parse::<T>() {
                        Ok(x) if ok(x) => Ok(x),
                        _ => err(format!("invalid value for `{key}`: `{item}` (expected a list of {expected})")),
                    }
                })
                .collect::<Res<Vec<T>>>()?,
            None => match default {
                Some(d) => d.to_vec(),
                None => return self.missing(key),
            },
        };
        if values.is_empty() {
            return err(format!("invalid value for `{key}`: empty list"));
        }
        let text: Vec<String> = values.iter().map(|x| x.to_string()).collect();
        self.record(key, text.join(", "));
        Ok(values)
    }

    fn choice(&mut self, key: &str, default: &str, options: &[&str]) -> Res<String> {
        let value = self.raw(key).unwrap_or(default).to_string();
        if !options.contains(&value.as_str()) {
            return err(format!("invalid value for `{key}`: `{value}` (expected one of {})", options.join(", ")));
        }
        self.record(key, value.clone());
        Ok(value)
    }

    fn topology(&mut self) -> Res<Topology> {
        let Some(label) = self.raw("topology") else {
            return self.missing("topology");
        };
        let t = Topology::from_label(label)
            .map_err(|e| ConfigError(format!("invalid value for `topology`: `{label}` ({e})")))?;
        self.record("topology", t.label());
        Ok(t)
    }

    fn rate(&mut self, key: &str, default: Option<f64>) -> Res<f64> {
        self.f64(key, default, 0.0, f64::MAX, "a finite rate >= 0")
    }

    fn density(&mut self, key: &str) -> Res<f64> {
        self.f64(key, None, 0.0, 1.0, "a density in [0, 1]")
    }

    fn horizon(&mut self) -> Res<f64> {
        self.number("horizon", None, |x: f64| x > 0.0 && x.is_finite(), "a finite time > 0")
    }

    fn eta0(&mut self, topology: &Topology) -> Res<InitialInfection> {
        let spec = self.raw("eta0").unwrap_or("all").to_string();
        let parsed: InitialInfection = spec
            .parse()
            .map_err(|e: cpde::Error| ConfigError(format!("invalid value for `eta0`: `{spec}` ({e})")))?;
        parsed
            .eta(topology.n_vertices())
            .map_err(|e| ConfigError(format!("invalid value for `eta0`: `{spec}` ({e})")))?;
        self.record("eta0", parsed.to_string());
        Ok(parsed)
    }

    fn env(&mut self) -> Res<InitialEnvironment> {
        Ok(match self.choice("env", "stationary", &["stationary", "open", "closed"])?.as_str() {
            "open" => InitialEnvironment::AllOpen,
            "closed" => InitialEnvironment::AllClosed,
            _ => InitialEnvironment::Stationary,
        })
    }

    fn replicas(&mut self, default: usize) -> Res<usize> {
        self.usize("replicas", Some(default), 1)
    }

    fn probability(&mut self, key: &str, default: Option<f64>) -> Res<f64> {
        self.number(key, default, |x: f64| x > 0.0 && x < 1.0, "a probability in (0, 1)")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulateJob {
    pub topology: Topology,
    pub params: Params,
    pub eta0: InitialInfection,
    pub env: InitialEnvironment,
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepJob {
    pub topology: Topology,
    pub horizon: f64,
    pub eta0: InitialInfection,
    pub env: InitialEnvironment,
    pub replicas: usize,
    pub vs: Vec<f64>,
    pub ps: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub theta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Lambda0Job {
    pub topology: Topology,
    pub v: f64,
    pub p: f64,
    pub horizon: f64,
    pub eta0: InitialInfection,
    pub env: InitialEnvironment,
    pub replicas: usize,
    pub lambda_bar: f64,
    pub lo: f64,
    pub hi: f64,
    pub theta: f64,
    pub tolerance: f64,
    pub max_widen: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossoverJob {
    pub topology: Topology,
    pub lambda: f64,
    pub p: f64,
    pub replicas: usize,
    pub v_small: f64,
    pub sizes: Vec<usize>,
    pub cap: f64,
    pub alpha: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum BlocksJob {
    Containment {
        topology: Topology,
        params: Params,
        eta0: InitialInfection,
        replicas: usize,
        r0: usize,
        t_len: f64,
        windows: usize,
    },
    Z {
        eps: f64,
        z0_size: usize,
        budget: u32,
        replicas: usize,
    },
    Good {
        topology: Topology,
        params: Params,
        replicas: usize,
        m: f64,
        gap_delta: f64,
        windows: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingMode {
    Sandwich,
    Weak,
    Rescale,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CouplingsJob {
    pub topology: Topology,
    pub params: Params,
    pub eta0: InitialInfection,
    pub env: InitialEnvironment,
    pub replicas: usize,
    pub mode: CouplingMode,
    pub v_prime: f64,
    pub m_radius: Option<u32>,
    pub fault: SandwichFault,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibrateJob {
    pub lambda: f64,
    pub p: f64,
    pub eps: f64,
    pub replicas: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Job {
    Simulate(SimulateJob),
    Sweep(SweepJob),
    Lambda0(Lambda0Job),
    Crossover(CrossoverJob),
    Blocks(BlocksJob),
    Couplings(CouplingsJob),
    OracleCheck { fixture: Option<PathBuf> },
    Calibrate(CalibrateJob),
}

/// A resolved, validated run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub seed: u64,
    pub parallelism: usize,
    pub job: Job,
    /// Resolved values of every key that affects results, in resolution order.
    pub echo: Vec<(String, String)>,
}

impl RunConfig {
    /// The resolved config as config text; parsing it back gives the same run.
    pub fn echo_text(&self) -> String {
        let mut out = format!("[{}]\n", self.command.section());
        for (k, v) in &self.echo {
            out.push_str(&format!("{k} = {v}\n"));
        }
        if let Job::Sweep(s) = &self.job {
            out.push_str(&format!("# cells = {}\n", s.vs.len() * s.ps.len() * s.lambdas.len()));
        }
        out
    }
}

pub fn resolve(command: Command, table: &Table) -> Res<RunConfig> {
    let mut r = Resolver {
        table,
        section: command.section(),
        echo: Vec::new(),
    };
    let seed = if command.needs_seed() {
        match r.raw("seed") {
            Some(_) => r.number("seed", None, |_: u64| true, "an unsigned 64-bit integer")?,
            None => return err(format!("`{}` needs a master seed: pass --seed or set `seed`", command.section())),
        }
    } else {
        0
    };
    let parallelism = match table.get(command.section(), "parallelism") {
        Some(s) => s
            .parse::<usize>()
            .map_err(|_| ConfigError(format!("invalid value for `parallelism`: `{s}` (expected an integer >= 0, 0 = all cores)")))?,
        None => 0,
    };
    let job = match command {
        Command::Simulate => {
            let topology = r.topology()?;
            let lambda = r.rate("lambda", None)?;
            let v = r.rate("v", None)?;
            let p = r.density("p")?;
            let horizon = r.horizon()?;
            Job::Simulate(SimulateJob {
                params: Params::new(lambda, v, p, horizon)?,
                eta0: r.eta0(&topology)?,
                env: r.env()?,
                replicas: r.replicas(1000)?,
                topology,
            })
        }
        Command::Sweep => {
            let topology = r.topology()?;
            let horizon = r.horizon()?;
            let eta0 = r.eta0(&topology)?;
            let env = r.env()?;
            let replicas = r.replicas(1000)?;
            let rate = |x: f64| x >= 0.0 && x.is_finite();
            let vs = r.list("vs", None, rate, "rates >= 0")?;
            let ps = r.list("ps", None, |x: f64| (0.0..=1.0).contains(&x), "densities in [0, 1]")?;
            let lambdas = r.list("lambdas", None, rate, "rates >= 0")?;
            let theta = r.probability("theta", Some(0.02))?;
            Job::Sweep(SweepJob {
                topology,
                horizon,
                eta0,
                env,
                replicas,
                vs,
                ps,
                lambdas,
                theta,
            })
        }
        Command::Lambda0 => {
            let topology = r.topology()?;
            let v = r.rate("v", None)?;
            let p = r.density("p")?;
            let horizon = r.horizon()?;
            let eta0 = r.eta0(&topology)?;
            let env = r.env()?;
            let replicas = r.replicas(1000)?;
            let lambda_bar = r.number("lambda_bar", Some(1.649), |x: f64| x > 0.0 && x.is_finite(), "a finite rate > 0")?;
            let hat = cpde::couplings::lambda_hat(lambda_bar, v, p)?.finite();
            let lo = r.rate("lo", Some(lambda_bar))?;
            let hi = r.number("hi", hat.or(Some(2.0 * lambda_bar / p.max(0.05))), |x: f64| x > lo && x.is_finite(), "a finite rate above lo")?;
            Job::Lambda0(Lambda0Job {
                topology,
                v,
                p,
                horizon,
                eta0,
                env,
                replicas,
                lambda_bar,
                lo,
                hi,
                theta: r.probability("theta", Some(0.02))?,
                tolerance: r.number("tolerance", Some(0.02), |x: f64| x > 0.0, "a bracket width > 0")?,
                max_widen: r.usize("max_widen", Some(3), 0)?,
            })
        }
        Command::Crossover => {
            let topology = r.topology()?;
            let lambda = r.rate("lambda", None)?;
            let p = r.density("p")?;
            let replicas = r.replicas(200)?;
            let v_small = r.number("v_small", None, |x: f64| x > 0.0 && x.is_finite(), "a finite rate > 0")?;
            let sizes = r.list("sizes", None, |n: usize| n >= 1 && n <= topology.n_vertices(), "block sizes that fit the topology")?;
            if sizes.len() < 2 || sizes.windows(2).any(|w| w[1] <= w[0]) {
                return err("invalid value for `sizes`: expected at least two increasing sizes");
            }
            Job::Crossover(CrossoverJob {
                topology,
                lambda,
                p,
                replicas,
                v_small,
                sizes,
                cap: r.horizon_like("cap", 1e4)?,
                alpha: r.probability("alpha", Some(0.05))?,
            })
        }
        Command::Blocks => {
            let mode = r.choice("mode", "containment", &["containment", "z", "good"])?;
            Job::Blocks(match mode.as_str() {
                "containment" => {
                    let topology = r.topology()?;
                    let lambda = r.rate("lambda", None)?;
                    let v = r.rate("v", None)?;
                    let p = r.density("p")?;
                    let t_len = r.horizon_like("t_len", 4.0)?;
                    let windows = r.usize("windows", Some(25), 1)?;
                    BlocksJob::Containment {
                        params: Params::new(lambda, v, p, t_len * windows as f64)?,
                        eta0: r.eta0(&topology)?,
                        replicas: r.replicas(100)?,
                        r0: r.usize("r0", None, 1)?,
                        topology,
                        t_len,
                        windows,
                    }
                }
                "z" => BlocksJob::Z {
                    eps: r.probability("eps", None)?,
                    z0_size: r.usize("z0_size", Some(10), 1)?,
                    budget: r.number("budget", Some(10_000u32), |b: u32| b >= 1, "an integer >= 1")?,
                    replicas: r.replicas(1000)?,
                },
                _ => {
                    let topology = r.topology()?;
                    let lambda = r.rate("lambda", None)?;
                    let v = r.number("v", None, |x: f64| x > 0.0 && x.is_finite(), "a finite rate > 0")?;
                    let p = r.density("p")?;
                    let m = r.number("m", None, |x: f64| x > 0.0 && x.is_finite(), "a finite value > 0")?;
                    let windows = r.usize("windows", Some(1), 1)?;
                    BlocksJob::Good {
                        params: Params::new(lambda, v, p, m / v * windows as f64)?,
                        replicas: r.replicas(100)?,
                        gap_delta: r.probability("gap_delta", None)?,
                        topology,
                        m,
                        windows,
                    }
                }
            })
        }
        Command::Couplings => {
            let topology = r.topology()?;
            let lambda = r.rate("lambda", None)?;
            let v = r.rate("v", None)?;
            let p = r.density("p")?;
            let horizon = r.horizon()?;
            let params = Params::new(lambda, v, p, horizon)?;
            let eta0 = r.eta0(&topology)?;
            let env = r.env()?;
            let replicas = r.replicas(100)?;
            let mode = match r.choice("mode", "sandwich", &["sandwich", "weak", "rescale"])?.as_str() {
                "weak" => CouplingMode::Weak,
                "rescale" => CouplingMode::Rescale,
                _ => CouplingMode::Sandwich,
            };
            let v_prime = if mode == CouplingMode::Rescale {
                r.number("v_prime", Some(2.0 * v), |x: f64| x > v && x.is_finite(), "a finite rate above v")?
            } else {
                0.0
            };
            let m_radius = if mode == CouplingMode::Weak && r.raw("m_radius").is_some() {
                Some(r.number("m_radius", None, |x: u32| x >= 1, "an integer >= 1")?)
            } else {
                None
            };
            let fault = match r.choice("fault", "none", &["none", "lower-ignores-environment"])?.as_str() {
                "none" => SandwichFault::None,
                _ if mode != CouplingMode::Sandwich => {
                    return err("invalid value for `fault`: faults exist only for mode = sandwich");
                }
                _ => SandwichFault::LowerIgnoresEnvironment,
            };
            Job::Couplings(CouplingsJob {
                topology,
                params,
                eta0,
                env,
                replicas,
                mode,
                v_prime,
                m_radius,
                fault,
            })
        }
        Command::OracleCheck => {
            let fixture = r.raw("fixture").map(PathBuf::from);
            if let Some(f) = &fixture {
                r.record("fixture", f.display().to_string());
            }
            Job::OracleCheck { fixture }
        }
        Command::Calibrate => Job::Calibrate(CalibrateJob {
            lambda: r.rate("lambda", None)?,
            p: r.density("p")?,
            eps: r.probability("eps", None)?,
            replicas: r.replicas(1000)?,
        }),
    };
    Ok(RunConfig {
        command,
        seed,
        parallelism,
        job,
        echo: r.echo,
    })
}

impl Resolver<'_> {
    fn horizon_like(&mut self, key: &str, default: f64) -> Res<f64> {
        self.number(key, Some(default), |x: f64| x > 0.0 && x.is_finite(), "a finite time > 0")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(text: &str) -> Table {
        Table::parse(text).unwrap()
    }

    #[test]
    fn missing_lambda_is_named() {
        let t = table("topology = cycle:8\nv = 1\np = 0.5\nhorizon = 2\nseed = 1\n");
        let e = resolve(Command::Simulate, &t).unwrap_err();
        assert!(e.0.contains("`lambda`"), "{e}");
    }

    #[test]
    fn density_out_of_range() {
        let t = table("topology = cycle:8\nlambda = 1\nv = 1\np = 1.5\nhorizon = 2\nseed = 1\n");
        let e = resolve(Command::Simulate, &t).unwrap_err();
        assert!(e.0.contains("`p`") && e.0.contains("1.5") && e.0.contains("[0, 1]"), "{e}");
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected() {
        assert!(Table::parse("lamda = 1\n").unwrap_err().0.contains("lamda"));
        assert!(Table::parse("[sweeps]\n").is_err());
        assert!(Table::parse("[simulate]\nvs = 1\n").is_err());
        assert!(Table::parse("lambda = 1\nlambda = 2\n").is_err());
        assert!(Table::parse("just text\n").is_err());
    }

    #[test]
    fn section_values_override_run() {
        let t = table("[run]\nlambda = 1\n[simulate]\nlambda = 3\ntopology = path:4\nv = 1\np = 0.5\nhorizon = 1\nseed = 2\n");
        let Job::Simulate(s) = resolve(Command::Simulate, &t).unwrap().job else { panic!() };
        assert_eq!(s.params.lambda, 3.0);
    }

    #[test]
    fn seed_is_required() {
        let t = table("topology = cycle:8\nlambda = 1\nv = 1\np = 0.5\nhorizon = 2\n");
        assert!(resolve(Command::Simulate, &t).unwrap_err().0.contains("seed"));
        assert!(resolve(Command::OracleCheck, &t).is_ok());
    }

    #[test]
    fn sweep_echo_round_trips() {
        let text = "[run]\ntopology = cycle:32\nhorizon = 10\nseed = 7\nreplicas = 50\n[sweep]\nvs = 0.1, 1, 10\nps = 0.2, 0.5, 0.8\nlambdas = 1, 2.5, 4\n";
        let cfg = resolve(Command::Sweep, &table(text)).unwrap();
        let echo = cfg.echo_text();
        assert!(echo.contains("# cells = 27"), "{echo}");
        let again = resolve(Command::Sweep, &table(&echo)).unwrap();
        assert_eq!(again, cfg);
        assert_eq!(again.echo_text(), echo);
    }

    #[test]
    fn overrides_replace_values() {
        let mut t = table("[simulate]\nlambda = 1\n");
        t.set("lambda", "2", "simulate").unwrap();
        assert_eq!(t.get("simulate", "lambda"), Some("2"));
        t.set("blocks.r0", "8", "simulate").unwrap();
        assert!(t.set("bogus", "1", "simulate").is_err());
    }

    #[test]
    fn fault_only_for_sandwich() {
        let base = "topology = cycle:8\nlambda = 1\nv = 1\np = 0.5\nhorizon = 2\nseed = 1\n";
        let t = table(&format!("{base}[couplings]\nmode = weak\nfault = lower-ignores-environment\n"));
        assert!(resolve(Command::Couplings, &t).is_err());
        let t = table(&format!("{base}[couplings]\nfault = lower-ignores-environment\n"));
        assert!(resolve(Command::Couplings, &t).is_ok());
    }
}
