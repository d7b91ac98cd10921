//! The shared CSV schema of estimator output.

use super::survival::{Estimate, ExtinctionStats};

pub const CSV_HEADER: &str =
    "topology,kind,n,lambda,v,p,horizon,eta0_spec,replicas,seed,survival,ci_low,ci_high,mean_tau,se_tau,median_tau,cap_hits";

/// One output row. Columns that do not apply to a row are left empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvRow {
    pub topology: String,
    pub kind: String,
    pub n: usize,
    pub lambda: f64,
    pub v: f64,
    pub p: f64,
    pub horizon: f64,
    pub eta0_spec: String,
    pub replicas: usize,
    pub seed: u64,
    pub survival: Option<Estimate>,
    pub extinction: Option<ExtinctionStats>,
}

fn num(x: f64) -> String {
    if x.is_nan() {
        String::new()
    } else {
        format!("{x}")
    }
}

impl CsvRow {
    pub fn to_line(&self) -> String {
        let (s, lo, hi) = match &self.survival {
            Some(e) => (num(e.point), num(e.ci_low), num(e.ci_high)),
            None => Default::default(),
        };
        let (mean, se, med, hits) = match &self.extinction {
            Some(x) => (num(x.mean.point), num(x.mean.se()), num(x.median.point), x.cap_hits.to_string()),
            None => Default::default(),
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.topology,
            self.kind,
            self.n,
            num(self.lambda),
            num(self.v),
            num(self.p),
            num(self.horizon),
            self.eta0_spec,
            self.replicas,
            self.seed,
            s,
            lo,
            hi,
            mean,
            se,
            med,
            hits
        )
    }
}
