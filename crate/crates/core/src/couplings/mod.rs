//! Closed-form bounds and pathwise coupling harnesses.

mod bounds;
mod rescale;
mod sandwich;
mod weak;

pub use bounds::{beta_rate, lambda_hat, m_n_bound, LambdaHat};
pub use rescale::{rescale_coupling_check, RescaleReport};
pub use sandwich::{
    domination_check, sandwich_on, simulate_sandwich, DominationReport, OpenPosterior, SandwichFault,
    SandwichOptions, SandwichOutcome,
};
pub use weak::{
    check_freshness, simulate_weak_processes, weak_processes_on, ClassTallies, WeakCouplingStats, WeakOptions,
    WeakOutcome,
};

/// One CSV row of a coupling report.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingRow {
    pub seed: u64,
    pub replica: u64,
    pub violations: u64,
    pub n_p: u64,
    pub n_bar_p: u64,
    pub m_n: u64,
    pub tallies: ClassTallies,
}

impl CouplingRow {
    pub const HEADER: &'static str = "seed,replica,violations,n_p,n_bar_p,m_n,attempts,valid,weakly_valid,p_weakly_valid";

    pub fn to_csv(&self) -> String {
        let t = &self.tallies;
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.seed,
            self.replica,
            self.violations,
            self.n_p,
            self.n_bar_p,
            self.m_n,
            t.attempts,
            t.valid,
            t.weakly_valid,
            t.p_weakly_valid
        )
    }
}
