//! Monte Carlo estimators for the asymptotic norm of chemical distance.
//!
//! For `p` above the percolation threshold, `D_p(0, n x) / n` converges on
//! `{0 <-> n x}` to a norm `||x||_p`. Replica `r` of every estimator here uses
//! the field seeded by `derive_seed(seed, &[0, r])`, so estimates at different
//! parameters with the same seed are coupled replica by replica.

use std::fmt::Write as _;

use crate::competition::{run_competition, CompetitionParams};
use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::lattice::{BoxDomain, DenseField, EdgeWeights, HashedField};
use crate::percolation::{distances_from, ClusterLabeling};
use crate::stats::{ratio_of_means, run_replicas, Moments};

/// Chemical distances to `n * direction` for one replica, indexed by `n`.
type ReplicaDistances = Vec<Option<u32>>;

/// Estimates of `||direction||_p` at each `n`.
#[derive(Clone, Debug)]
pub struct NormEstimate {
    pub p: f64,
    pub direction: Vec<i64>,
    pub rows: Vec<NormRow>,
}

#[derive(Clone, Debug)]
pub struct NormRow {
    pub n: u32,
    /// Mean of `D_p(0, n x) / n` over connected replicas; `None` when every
    /// replica was disconnected.
    pub estimate: Option<f64>,
    pub ci: f64,
    pub disconnected_frac: f64,
    /// Raw `D_p(0, n x)` per replica, `None` when disconnected.
    pub samples: Vec<Option<u32>>,
}

impl NormEstimate {
    /// The estimate at the largest `n` that has one.
    pub fn headline(&self) -> Option<f64> {
        self.rows.iter().rev().find_map(|r| r.estimate)
    }
}

pub const NORM_CSV_HEADER: &str = "direction,n,estimate,ci,disconnected_frac";

fn direction_label(dir: &[i64]) -> String {
    dir.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(":")
}

pub fn norm_csv(estimates: &[NormEstimate]) -> String {
    let mut out = format!("{NORM_CSV_HEADER}\n");
    for est in estimates {
        for row in &est.rows {
            let value = row.estimate.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                direction_label(&est.direction),
                row.n,
                value,
                row.ci,
                row.disconnected_frac
            );
        }
    }
    out
}

fn sup_norm(v: &[i64]) -> i64 {
    v.iter().map(|c| c.abs()).max().unwrap_or(0)
}

/// Box large enough for every target `n * direction`, plus `margin` sites.
/// The default margin is a quarter of the farthest target plus ten.
pub fn norm_domain(dim: usize, directions: &[Vec<i64>], n_max: u32, margin: Option<u32>) -> Result<BoxDomain> {
    let reach = directions.iter().map(|d| sup_norm(d)).max().unwrap_or(0) as u32 * n_max;
    let margin = margin.unwrap_or(reach / 4 + 10);
    BoxDomain::new(dim, reach + margin)
}

fn check_directions(dim: usize, directions: &[Vec<i64>]) -> Result<()> {
    if directions.is_empty() {
        return Err(Error::arg("at least one direction is required"));
    }
    for d in directions {
        if d.len() != dim || d.iter().all(|&c| c == 0) {
            return Err(Error::arg(format!("direction {d:?} must be a nonzero vector of dimension {dim}")));
        }
    }
    Ok(())
}

fn check_n_values(n_values: &[u32]) -> Result<()> {
    if n_values.is_empty() || n_values[0] == 0 || n_values.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("n values must be positive and strictly increasing"));
    }
    Ok(())
}

/// Distances from the origin to every `n * direction` on one field.
fn target_distances<W: EdgeWeights + ?Sized>(
    field: &W,
    p: f64,
    directions: &[Vec<i64>],
    n_values: &[u32],
) -> Vec<ReplicaDistances> {
    let domain = field.domain();
    let origin = domain.index_unchecked(&vec![0; domain.dim()]);
    let df = distances_from(field, p, origin);
    directions
        .iter()
        .map(|dir| {
            n_values
                .iter()
                .map(|&n| {
                    let x: Vec<i64> = dir.iter().map(|c| c * n as i64).collect();
                    df.get(domain.index_unchecked(&x))
                })
                .collect()
        })
        .collect()
}

fn summarize(p: f64, direction: &[i64], n_values: &[u32], per_replica: Vec<ReplicaDistances>) -> NormEstimate {
    let replicas = per_replica.len();
    let rows = n_values
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let samples: Vec<Option<u32>> = per_replica.iter().map(|r| r[i]).collect();
            let m: Moments = samples.iter().flatten().map(|&d| d as f64 / n as f64).collect();
            NormRow {
                n,
                estimate: m.mean(),
                ci: if m.count > 0 { m.ci95() } else { f64::NAN },
                disconnected_frac: (replicas - m.count as usize) as f64 / replicas as f64,
                samples,
            }
        })
        .collect();
    NormEstimate { p, direction: direction.to_vec(), rows }
}

/// Norm estimates for several directions sharing each replica's field.
pub fn norm_estimates(
    p: f64,
    directions: &[Vec<i64>],
    n_values: &[u32],
    replicas: usize,
    seed: u64,
    margin: Option<u32>,
) -> Result<Vec<NormEstimate>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::arg(format!("norm estimation needs 0 < p <= 1, got {p}")));
    }
    if replicas == 0 {
        return Err(Error::arg("at least one replica is required"));
    }
    let dim = directions.first().map_or(0, Vec::len);
    check_directions(dim, directions)?;
    check_n_values(n_values)?;
    let domain = norm_domain(dim, directions, *n_values.last().unwrap(), margin)?;
    let per_replica = run_replicas(replicas, |rep| {
        let field = HashedField::new(derive_seed(seed, &[0, rep as u64]), domain.clone());
        target_distances(&field, p, directions, n_values)
    });
    Ok(directions
        .iter()
        .enumerate()
        .map(|(k, dir)| summarize(p, dir, n_values, per_replica.iter().map(|r| r[k].clone()).collect()))
        .collect())
}

/// Estimates `||direction||_p` from `D_p(0, n * direction) / n`.
pub fn norm_estimate(
    p: f64,
    direction: &[i64],
    n_values: &[u32],
    replicas: usize,
    seed: u64,
) -> Result<NormEstimate> {
    Ok(norm_estimates(p, &[direction.to_vec()], n_values, replicas, seed, None)?.remove(0))
}

/// Coupled ratio `||x||_q / ||x||_p` per direction.
#[derive(Clone, Debug)]
pub struct CpqTable {
    pub p: f64,
    pub q: f64,
    pub n: u32,
    pub rows: Vec<CpqRow>,
}

#[derive(Clone, Debug)]
pub struct CpqRow {
    pub direction: Vec<i64>,
    /// `sum D_q / sum D_p` over replicas with `0 <-p-> n x`.
    pub ratio: Option<f64>,
    pub ci: f64,
    pub connected: usize,
    /// Per-replica `(D_p, D_q)` for connected replicas.
    pub pairs: Vec<(u32, u32)>,
}

impl CpqTable {
    /// Largest ratio over directions, the estimate of `C_{p,q}`.
    pub fn sup_ratio(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.ratio).reduce(f64::max)
    }

    /// Largest upper 95% bound over directions.
    pub fn sup_upper(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.ratio.map(|v| v + r.ci)).reduce(f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("direction,ratio,ci\n");
        for row in &self.rows {
            let ratio = row.ratio.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{}", direction_label(&row.direction), ratio, row.ci);
        }
        if let (Some(sup), Some(upper)) = (self.sup_ratio(), self.sup_upper()) {
            let _ = writeln!(out, "sup,{},{}", sup, upper - sup);
        } else {
            out.push_str("sup,,\n");
        }
        out
    }
}

/// Estimates the norm-comparison constant: for each direction the coupled
/// ratio of `D_q(0, n x)` to `D_p(0, n x)` on replicas where `0 <-p-> n x`.
pub fn cpq_estimate(
    p: f64,
    q: f64,
    directions: &[Vec<i64>],
    n: u32,
    replicas: usize,
    seed: u64,
) -> Result<CpqTable> {
    if !(0.0 < p && p <= q && q <= 1.0) {
        return Err(Error::arg(format!("need 0 < p <= q <= 1, got p = {p}, q = {q}")));
    }
    if replicas == 0 {
        return Err(Error::arg("at least one replica is required"));
    }
    let dim = directions.first().map_or(0, Vec::len);
    check_directions(dim, directions)?;
    check_n_values(&[n])?;
    let domain = norm_domain(dim, directions, n, None)?;
    let per_replica = run_replicas(replicas, |rep| {
        let field = HashedField::new(derive_seed(seed, &[0, rep as u64]), domain.clone());
        let dense = DenseField::materialize(&field);
        let dp = target_distances(&dense, p, directions, &[n]);
        let dq = if q == p { dp.clone() } else { target_distances(&dense, q, directions, &[n]) };
        (dp, dq)
    });
    let rows = directions
        .iter()
        .enumerate()
        .map(|(k, dir)| {
            let pairs: Vec<(u32, u32)> = per_replica
                .iter()
                .filter_map(|(dp, dq)| match (dp[k][0], dq[k][0]) {
                    (Some(a), Some(b)) => Some((a, b)),
                    _ => None,
                })
                .collect();
            let floats: Vec<(f64, f64)> = pairs.iter().map(|&(a, b)| (a as f64, b as f64)).collect();
            let (ratio, ci) = match ratio_of_means(&floats) {
                Some((r, c)) => (Some(r), c),
                None => (None, f64::NAN),
            };
            CpqRow { direction: dir.clone(), ratio, ci, connected: pairs.len(), pairs }
        })
        .collect();
    Ok(CpqTable { p, q, n, rows })
}

/// A norm on `R^d` evaluated at lattice points.
pub trait NormEvaluator: Sync {
    fn norm(&self, x: &[f64]) -> f64;

    fn norm_of_site(&self, x: &[i64]) -> f64 {
        let v: Vec<f64> = x.iter().map(|&c| c as f64).collect();
        self.norm(&v)
    }
}

/// The l1 norm, which is `||.||_1` exactly.
#[derive(Clone, Copy, Debug, Default)]
pub struct L1Norm;

impl NormEvaluator for L1Norm {
    fn norm(&self, x: &[f64]) -> f64 {
        x.iter().map(|c| c.abs()).sum()
    }
}

/// Positively homogeneous interpolation of directional norm values.
///
/// The norm is invariant under coordinate permutations and sign changes, so
/// every point is first folded into the wedge `x_1 >= x_2 >= ... >= x_d >= 0`.
/// In dimension 2 the wedge is cut into cones by the fan directions and the
/// norm is linear on each cone. In higher dimensions the fan must consist of
/// the generators `e_1 + ... + e_k`, and the norm is linear on the wedge.
#[derive(Clone, Debug)]
pub struct FanNorm {
    dim: usize,
    /// Fan directions in the wedge, by increasing angle, with their values.
    fan: Vec<(Vec<f64>, f64)>,
}

/// Fan directions in the fundamental wedge.
///
/// For `d = 2` these are the primitive `(k, j)` with `0 <= j <= k <= resolution`;
/// for `d >= 3` the generators `e_1 + ... + e_k`.
pub fn fan_directions(dim: usize, resolution: u32) -> Vec<Vec<i64>> {
    if dim == 2 {
        let res = resolution.max(1) as i64;
        let mut out = Vec::new();
        for k in 1..=res {
            for j in 0..=k {
                if gcd(k, j) == 1 {
                    out.push(vec![k, j]);
                }
            }
        }
        out.sort_by(|a, b| (a[1] * b[0]).cmp(&(b[1] * a[0])));
        out
    } else {
        (1..=dim).map(|k| (0..dim).map(|i| i64::from(i < k)).collect()).collect()
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn fold_to_wedge(x: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = x.iter().map(|c| c.abs()).collect();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

impl FanNorm {
    /// Builds the interpolant from `(direction, ||direction||)` pairs.
    pub fn new(dim: usize, values: &[(Vec<i64>, f64)]) -> Result<Self> {
        let mut fan: Vec<(Vec<f64>, f64)> = values
            .iter()
            .map(|(d, v)| (fold_to_wedge(&d.iter().map(|&c| c as f64).collect::<Vec<_>>()), *v))
            .collect();
        if fan.iter().any(|(d, v)| d.len() != dim || !v.is_finite() || *v <= 0.0) {
            return Err(Error::arg("fan values must be finite, positive and match the dimension"));
        }
        if dim == 2 {
            fan.sort_by(|a, b| (a.0[1] / a.0[0]).total_cmp(&(b.0[1] / b.0[0])));
            fan.dedup_by(|a, b| (a.0[1] / a.0[0] - b.0[1] / b.0[0]).abs() < 1e-12);
            let first = fan.first().map(|f| f.0[1]);
            let last = fan.last().map(|f| f.0[1] / f.0[0]);
            if first != Some(0.0) || last != Some(1.0) {
                return Err(Error::arg("a planar fan must contain the axis and the diagonal"));
            }
        } else {
            let gens = fan_directions(dim, 0);
            let mut ordered = Vec::with_capacity(dim);
            for g in &gens {
                let gf: Vec<f64> = g.iter().map(|&c| c as f64).collect();
                let hit = fan.iter().find(|(d, _)| {
                    let scale = d[0];
                    d.iter().zip(&gf).all(|(a, b)| (a - b * scale).abs() < 1e-12)
                });
                match hit {
                    Some(h) => ordered.push(h.clone()),
                    None => return Err(Error::arg(format!("fan lacks generator {g:?}"))),
                }
            }
            fan = ordered;
        }
        Ok(FanNorm { dim, fan })
    }

    /// Estimates `||.||_p` on the fan: each direction `u` is measured at
    /// `n = max(1, reach / |u|_inf)` using [`norm_estimates`].
    pub fn estimate(
        p: f64,
        dim: usize,
        resolution: u32,
        reach: u32,
        replicas: usize,
        seed: u64,
    ) -> Result<Self> {
        let dirs = fan_directions(dim, resolution);
        let mut values = Vec::with_capacity(dirs.len());
        for d in &dirs {
            let n = (reach / sup_norm(d) as u32).max(1);
            let est = norm_estimates(p, std::slice::from_ref(d), &[n], replicas, seed, None)?;
            let v = est[0]
                .headline()
                .ok_or_else(|| Error::arg(format!("direction {d:?}: every replica disconnected")))?;
            values.push((d.clone(), v));
        }
        Self::new(dim, &values)
    }

    pub fn fan(&self) -> &[(Vec<f64>, f64)] {
        &self.fan
    }
}

impl NormEvaluator for FanNorm {
    fn norm(&self, x: &[f64]) -> f64 {
        let v = fold_to_wedge(x);
        if self.dim == 2 {
            if v[0] == 0.0 {
                return 0.0;
            }
            let slope = v[1] / v[0];
            let i = self.fan.iter().rposition(|(d, _)| d[1] / d[0] <= slope).unwrap_or(0);
            let j = (i + 1).min(self.fan.len() - 1);
            let (u, nu) = (&self.fan[i].0, self.fan[i].1);
            let (w, nw) = (&self.fan[j].0, self.fan[j].1);
            if i == j {
                return v[0] / u[0] * nu;
            }
            // v = a u + b w
            let det = u[0] * w[1] - u[1] * w[0];
            let a = (v[0] * w[1] - v[1] * w[0]) / det;
            let b = (u[0] * v[1] - u[1] * v[0]) / det;
            a * nu + b * nw
        } else {
            (0..self.dim)
                .map(|k| {
                    let next = if k + 1 < self.dim { v[k + 1] } else { 0.0 };
                    // generator k is stored scaled by its first coordinate
                    (v[k] - next) / self.fan[k].0[0] * self.fan[k].1
                })
                .sum()
        }
    }
}

/// Sup- and inf-reach of a site set.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReachValues {
    /// `|A|_p = max over A of ||x||_p` (zero for empty `A`).
    pub sup_reach: f64,
    /// `|A|_{*,p} = min of ||x||_p over quasi-infinite sites outside A`;
    /// `None` when there is no such site.
    pub inf_reach: Option<f64>,
}

/// Computes `|A|_p` and `|A|_{*,p}` over the labelled box of `domain`.
pub fn reach_metrics<N: NormEvaluator + ?Sized>(
    domain: &BoxDomain,
    set: &[usize],
    norm: &N,
    labeling: &ClusterLabeling,
) -> Result<ReachValues> {
    if labeling.labels().len() != domain.num_sites() {
        return Err(Error::arg("labeling does not match the domain"));
    }
    let mut in_set = vec![false; domain.num_sites()];
    for &s in set {
        if s >= domain.num_sites() {
            return Err(Error::domain(format!("site index {s} outside the box")));
        }
        in_set[s] = true;
    }
    let mut coords = vec![0i64; domain.dim()];
    let mut norm_at = |s: usize| {
        domain.coords_into(s, &mut coords);
        norm.norm_of_site(&coords)
    };
    let sup_reach = set.iter().map(|&s| norm_at(s)).fold(0.0, f64::max);
    let inf_reach = (0..domain.num_sites())
        .filter(|&s| !in_set[s] && labeling.is_quasi_infinite(s))
        .map(&mut norm_at)
        .reduce(f64::min);
    Ok(ReachValues { sup_reach, inf_reach })
}

/// Per-replica outcome of the speed-ratio experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeedRatioRow {
    pub replica: usize,
    /// `|B_b(T)|_p / T`, only on coexistence replicas.
    pub ratio: Option<f64>,
    pub coexisted: bool,
}

#[derive(Clone, Debug)]
pub struct SpeedRatioResult {
    pub rows: Vec<SpeedRatioRow>,
    pub coexist_count: usize,
    pub excluded: usize,
    /// Set when no replica coexisted.
    pub diagnostic: Option<String>,
}

impl SpeedRatioResult {
    pub fn ratios(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.ratio).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("replica,ratio,coexisted\n");
        for r in &self.rows {
            let ratio = r.ratio.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{}", r.replica, ratio, r.coexisted);
        }
        out
    }
}

/// Runs `replicas` competitions to `horizon` and reports, on replicas where
/// both colours still have active sites, the reach of the blue set measured
/// in the weaker parameter's norm, divided by the horizon.
pub fn speed_ratio_experiment<N: NormEvaluator + ?Sized>(
    params: &CompetitionParams,
    half_width: u32,
    horizon: u32,
    replicas: usize,
    seed: u64,
    norm_p: &N,
) -> Result<SpeedRatioResult> {
    params.validate()?;
    if horizon == 0 {
        return Err(Error::arg("horizon must be positive"));
    }
    let domain = BoxDomain::new(params.s1.len(), half_width)?;
    let rows: Vec<Result<SpeedRatioRow>> = run_replicas(replicas, |rep| {
        let field = HashedField::new(derive_seed(seed, &[0, rep as u64]), domain.clone());
        let run = run_competition(params, &field, horizon, false)?;
        let coexisted = run.coexisted();
        let ratio = coexisted.then(|| {
            let mut coords = vec![0i64; domain.dim()];
            let mut reach = 0.0f64;
            for s in 0..domain.num_sites() {
                if run.state.has_blue(s) {
                    domain.coords_into(s, &mut coords);
                    reach = reach.max(norm_p.norm_of_site(&coords));
                }
            }
            reach / horizon as f64
        });
        Ok(SpeedRatioRow { replica: rep, ratio, coexisted })
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let coexist_count = rows.iter().filter(|r| r.coexisted).count();
    let diagnostic = (coexist_count == 0)
        .then(|| format!("no coexistence among {replicas} replicas at horizon {horizon}"));
    Ok(SpeedRatioResult { excluded: replicas - coexist_count, rows, coexist_count, diagnostic })
}
