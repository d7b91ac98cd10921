//! Named oracle instances and their frozen values.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::Params;
use crate::topology::Topology;

use super::ctmc::{exact_mean_extinction_time, exact_survival_to_horizon, CtmcModel, ZetaInit};
use super::zexact::exact_z_one_step;

/// `id value tolerance` lines; `#` starts a comment.
pub const FIXTURE: &str = include_str!("../../fixtures/oracle_constants.txt");

#[derive(Clone, Debug, PartialEq)]
pub enum Quantity {
    Survival { horizon: f64 },
    MeanExtinction,
    /// Total variation between the exact one-step `Z` law and the interval count.
    ZCountDistance { epsilon: f64, radius: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleInstance {
    pub id: &'static str,
    pub topology: Topology,
    pub params: Params,
    pub eta0: Vec<bool>,
    pub zeta0: ZetaInit,
    pub quantity: Quantity,
    pub tolerance: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OracleRow {
    pub id: String,
    pub value: f64,
    pub tolerance: f64,
}

impl fmt::Display for OracleRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{:.15e},{:e}", self.id, self.value, self.tolerance)
    }
}

pub fn instances() -> Vec<OracleInstance> {
    let p = |n| Topology::path(n).unwrap();
    let params = |lambda, v, prob| Params::new(lambda, v, prob, 1.0).unwrap();
    vec![
        OracleInstance {
            id: "path2-single-death-T1",
            topology: p(2),
            params: params(0.0, 1.0, 0.5),
            eta0: vec![true, false],
            zeta0: ZetaInit::Stationary,
            quantity: Quantity::Survival { horizon: 1.0 },
            tolerance: 1e-10,
        },
        OracleInstance {
            id: "path3-survival-T5",
            topology: p(3),
            params: params(1.5, 1.0, 0.5),
            eta0: vec![true; 3],
            zeta0: ZetaInit::Stationary,
            quantity: Quantity::Survival { horizon: 5.0 },
            tolerance: 1e-10,
        },
        OracleInstance {
            id: "path2-mean-extinction",
            topology: p(2),
            params: params(1.0, 1.0, 0.5),
            eta0: vec![true; 2],
            zeta0: ZetaInit::Fixed(vec![true]),
            quantity: Quantity::MeanExtinction,
            tolerance: 1e-10,
        },
        OracleInstance {
            id: "path3-closed-mean-extinction",
            topology: p(3),
            params: params(2.0, 1.0, 0.0),
            eta0: vec![true; 3],
            zeta0: ZetaInit::Fixed(vec![false; 2]),
            quantity: Quantity::MeanExtinction,
            tolerance: 1e-10,
        },
        OracleInstance {
            id: "z-one-step-count-distance",
            topology: p(2),
            params: params(0.0, 0.0, 0.0),
            eta0: vec![true, false],
            zeta0: ZetaInit::Stationary,
            quantity: Quantity::ZCountDistance {
                epsilon: 0.1,
                radius: 8,
            },
            tolerance: 1e-12,
        },
    ]
}

pub fn compute_instance(inst: &OracleInstance) -> Result<OracleRow> {
    let value = match inst.quantity {
        Quantity::Survival { horizon } => {
            let model = CtmcModel::new(&inst.topology, &inst.params)?;
            exact_survival_to_horizon(&model, &inst.eta0, &inst.zeta0, horizon)?
        }
        Quantity::MeanExtinction => {
            let model = CtmcModel::new(&inst.topology, &inst.params)?;
            exact_mean_extinction_time(&model, &inst.eta0, &inst.zeta0)?
        }
        Quantity::ZCountDistance { epsilon, radius } => exact_z_one_step(epsilon, radius)?.tv_to_count,
    };
    Ok(OracleRow {
        id: inst.id.to_string(),
        value,
        tolerance: inst.tolerance,
    })
}

pub fn parse_fixture(text: &str) -> Result<Vec<OracleRow>> {
    text.lines()
        .map(|l| l.split('#').next().unwrap().trim())
        .filter(|l| !l.is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split_whitespace().collect();
            let bad = || Error::Structure(format!("malformed fixture line `{l}`"));
            if f.len() != 3 {
                return Err(bad());
            }
            Ok(OracleRow {
                id: f[0].to_string(),
                value: f[1].parse().map_err(|_| bad())?,
                tolerance: f[2].parse().map_err(|_| bad())?,
            })
        })
        .collect()
}
