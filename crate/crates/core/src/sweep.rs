//! Coexistence sweeps over a grid of `(p, q)` values.
//!
//! Cells are numbered in row-major order over `(p, q)` (all `q` for the first
//! `p`, then the next `p`); replica `r` of cell `c` runs on the hashed field
//! with seed `derive_seed(seed, &[c, r])`. A sweep can therefore be split by
//! cells across machines and still reproduce the monolithic output.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::competition::{run_competition, CompetitionParams};
use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::lattice::{BoxDomain, HashedField};
use crate::stats::run_replicas;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub dim: usize,
    #[serde(rename = "L")]
    pub half_width: u32,
    pub p_values: Vec<f64>,
    pub q_values: Vec<f64>,
    pub s1: Vec<i64>,
    pub s2: Vec<i64>,
    #[serde(rename = "T")]
    pub horizon: u32,
    pub replicas: usize,
    pub seed: u64,
}

/// Aggregated outcomes of one `(p, q)` cell. Cells with `p > q` are not run
/// and appear with zero replicas.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub q: f64,
    pub replicas: usize,
    pub coexist: usize,
    pub y_only: usize,
    pub b_only: usize,
    pub both_dead: usize,
    pub mean_colored_y: Option<f64>,
    pub mean_colored_b: Option<f64>,
}

impl SweepRow {
    pub fn skipped(&self) -> bool {
        self.replicas == 0
    }

    pub fn coexistence_frequency(&self) -> Option<f64> {
        (self.replicas > 0).then(|| self.coexist as f64 / self.replicas as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

pub const SWEEP_CSV_HEADER: &str = "p,q,replicas,coexist,y_only,b_only,both_dead,mean_colored_y,mean_colored_b";

impl SweepResult {
    /// CSV with one line per cell; skipped cells leave the means empty.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{SWEEP_CSV_HEADER}\n");
        let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_default();
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.p,
                r.q,
                r.replicas,
                r.coexist,
                r.y_only,
                r.b_only,
                r.both_dead,
                opt(r.mean_colored_y),
                opt(r.mean_colored_b)
            );
        }
        out
    }

    pub fn row(&self, p: f64, q: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.p == p && r.q == q)
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    let domain = BoxDomain::new(config.dim, config.half_width)?;
    for &v in config.p_values.iter().chain(&config.q_values) {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::arg(format!("{v} is not a probability")));
        }
    }
    // validates the sources and the exactness bound once, up front
    if !config.p_values.is_empty() && !config.q_values.is_empty() {
        let probe = CompetitionParams::new(0.0, 0.0, config.s1.clone(), config.s2.clone())?;
        if probe.s1.len() != config.dim {
            return Err(Error::arg("source dimension does not match dim"));
        }
        let slack = config.half_width as i64 - probe.source_radius();
        if config.horizon as i64 > slack {
            return Err(Error::arg(format!(
                "horizon {} exceeds the exact bound {slack} for this box and sources",
                config.horizon
            )));
        }
    }

    let mut rows = Vec::new();
    let cells = config.p_values.iter().flat_map(|&p| config.q_values.iter().map(move |&q| (p, q)));
    for (cell, (p, q)) in cells.enumerate() {
        if p > q {
            log::warn!("skipping cell p = {p} > q = {q}");
            rows.push(SweepRow {
                p,
                q,
                replicas: 0,
                coexist: 0,
                y_only: 0,
                b_only: 0,
                both_dead: 0,
                mean_colored_y: None,
                mean_colored_b: None,
            });
            continue;
        }
        let params = CompetitionParams::new(p, q, config.s1.clone(), config.s2.clone())?;
        let outcomes = run_replicas(config.replicas, |rep| {
            let field = HashedField::new(derive_seed(config.seed, &[cell as u64, rep as u64]), domain.clone());
            run_competition(&params, &field, config.horizon, false)
                .map(|s| (s.survived_y, s.survived_b, s.state.count_yellow(), s.state.count_blue()))
        });
        let mut row = SweepRow {
            p,
            q,
            replicas: config.replicas,
            coexist: 0,
            y_only: 0,
            b_only: 0,
            both_dead: 0,
            mean_colored_y: None,
            mean_colored_b: None,
        };
        let (mut sum_y, mut sum_b) = (0usize, 0usize);
        for outcome in outcomes {
            let (y, b, cy, cb) = outcome?;
            match (y, b) {
                (true, true) => row.coexist += 1,
                (true, false) => row.y_only += 1,
                (false, true) => row.b_only += 1,
                (false, false) => row.both_dead += 1,
            }
            sum_y += cy;
            sum_b += cb;
        }
        if config.replicas > 0 {
            row.mean_colored_y = Some(sum_y as f64 / config.replicas as f64);
            row.mean_colored_b = Some(sum_b as f64 / config.replicas as f64);
        }
        rows.push(row);
    }
    Ok(SweepResult { rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(p_values: Vec<f64>, q_values: Vec<f64>, replicas: usize) -> SweepConfig {
        SweepConfig {
            dim: 2,
            half_width: 20,
            p_values,
            q_values,
            s1: vec![0, 0],
            s2: vec![3, 0],
            horizon: 15,
            replicas,
            seed: 99,
        }
    }

    #[test]
    fn empty_grid_has_header_only() {
        let res = run_sweep(&config(vec![], vec![0.5], 3)).unwrap();
        assert_eq!(res.to_csv(), format!("{SWEEP_CSV_HEADER}\n"));
    }

    #[test]
    fn counts_sum_to_replicas_and_skips_are_marked() {
        let res = run_sweep(&config(vec![0.5, 0.9], vec![0.6, 0.8], 12)).unwrap();
        assert_eq!(res.rows.len(), 4);
        for r in &res.rows {
            assert_eq!(r.coexist + r.y_only + r.b_only + r.both_dead, r.replicas);
            assert_eq!(r.skipped(), r.p > r.q);
        }
        assert!(res.to_csv().contains("0.9,0.6,0,0,0,0,0,,\n"));
    }

    #[test]
    fn repeat_runs_are_identical() {
        let c = config(vec![0.6], vec![0.7], 10);
        assert_eq!(run_sweep(&c).unwrap().to_csv(), run_sweep(&c).unwrap().to_csv());
    }

    #[test]
    fn inexact_horizon_is_rejected() {
        let mut c = config(vec![0.6], vec![0.7], 2);
        c.horizon = 18;
        assert!(run_sweep(&c).is_err());
    }
}
