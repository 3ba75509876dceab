//! Single-parameter percolation: clusters, chemical distance and tail
//! statistics of finite clusters and of holes in the infinite cluster.
//!
//! Inside a finite box the infinite cluster is replaced by the set of
//! clusters touching the box boundary ("quasi-infinite" clusters).

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::lattice::{BoxDomain, EdgeWeights, HashedField};
use crate::stats::{least_squares, run_replicas, LineFit, Moments};

/// Marker for sites outside the source's cluster.
pub const UNREACHABLE: u32 = u32::MAX;

struct DisjointSets {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        DisjointSets { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
    }
}

/// Partition of the box into `p`-open clusters.
#[derive(Clone, Debug)]
pub struct ClusterLabeling {
    labels: Vec<u32>,
    sizes: Vec<u32>,
    touches_boundary: Vec<bool>,
}

impl ClusterLabeling {
    /// Cluster label of a site. Labels are numbered in order of their
    /// smallest site index.
    #[inline]
    pub fn label(&self, site: usize) -> u32 {
        self.labels[site]
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_clusters(&self) -> usize {
        self.sizes.len()
    }

    pub fn size(&self, label: u32) -> u32 {
        self.sizes[label as usize]
    }

    pub fn touches_boundary(&self, label: u32) -> bool {
        self.touches_boundary[label as usize]
    }

    /// True when the site's cluster touches the box boundary.
    #[inline]
    pub fn is_quasi_infinite(&self, site: usize) -> bool {
        self.touches_boundary[self.labels[site] as usize]
    }

    pub fn same_cluster(&self, a: usize, b: usize) -> bool {
        self.labels[a] == self.labels[b]
    }
}

/// Labels the clusters of `p`-open edges by union-find.
pub fn clusters<W: EdgeWeights + ?Sized>(field: &W, p: f64) -> ClusterLabeling {
    let domain = field.domain();
    let n = domain.num_sites();
    let mut sets = DisjointSets::new(n);
    for site in 0..n {
        for (nb, slot) in domain.neighbors(site) {
            if nb > site && field.is_open(slot, p) {
                sets.union(site as u32, nb as u32);
            }
        }
    }
    let mut root_label = vec![u32::MAX; n];
    let mut labels = vec![0u32; n];
    let mut sizes = Vec::new();
    let mut touches_boundary = Vec::new();
    for (site, slot) in labels.iter_mut().enumerate() {
        let root = sets.find(site as u32) as usize;
        if root_label[root] == u32::MAX {
            root_label[root] = sizes.len() as u32;
            sizes.push(0);
            touches_boundary.push(false);
        }
        let label = root_label[root];
        *slot = label;
        sizes[label as usize] += 1;
        if domain.on_boundary(site) {
            touches_boundary[label as usize] = true;
        }
    }
    ClusterLabeling { labels, sizes, touches_boundary }
}

/// Chemical distances from one source over the `p`-open subgraph.
#[derive(Clone, Debug)]
pub struct DistanceField {
    source: usize,
    p: f64,
    dist: Vec<u32>,
}

impl DistanceField {
    pub fn source(&self) -> usize {
        self.source
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Distance to `site`, or `None` outside the source's cluster.
    #[inline]
    pub fn get(&self, site: usize) -> Option<u32> {
        let d = self.dist[site];
        (d != UNREACHABLE).then_some(d)
    }

    /// Raw distances with [`UNREACHABLE`] as the sentinel.
    pub fn raw(&self) -> &[u32] {
        &self.dist
    }

    /// The chemical ball `{y : D_p(source, y) <= t}`, sorted by site index.
    pub fn ball(&self, t: u32) -> Vec<usize> {
        self.dist.iter().enumerate().filter(|(_, &d)| d <= t).map(|(i, _)| i).collect()
    }
}

/// Breadth-first chemical distances from `source`.
pub fn chemical_distance_field<W: EdgeWeights + ?Sized>(
    field: &W,
    p: f64,
    source: &[i64],
) -> Result<DistanceField> {
    let src = field.domain().index(source)?;
    Ok(distances_from(field, p, src))
}

/// As [`chemical_distance_field`] with the source given by index.
pub fn distances_from<W: EdgeWeights + ?Sized>(field: &W, p: f64, source: usize) -> DistanceField {
    let domain = field.domain();
    let mut dist = vec![UNREACHABLE; domain.num_sites()];
    dist[source] = 0;
    let mut frontier = vec![source];
    let mut next = Vec::new();
    let mut level = 0u32;
    while !frontier.is_empty() {
        level += 1;
        for &x in &frontier {
            for (y, slot) in domain.neighbors(x) {
                if dist[y] == UNREACHABLE && field.is_open(slot, p) {
                    dist[y] = level;
                    next.push(y);
                }
            }
        }
        frontier.clear();
        std::mem::swap(&mut frontier, &mut next);
    }
    DistanceField { source, p, dist }
}

/// Parameters of a tail-statistics run.
///
/// Each replica samples a box of half-width `interior + 3 * max(radii)` and
/// averages over every site `x` with `|x|_inf <= interior`, so the sampling
/// box around each counted site is at least three times the largest radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TailConfig {
    pub dim: usize,
    pub p: f64,
    pub radii: Vec<u32>,
    pub replicas: usize,
    pub seed: u64,
    #[serde(default = "default_interior")]
    pub interior: u32,
}

fn default_interior() -> u32 {
    50
}

/// One row of the tail table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailRow {
    pub r: u32,
    /// Estimate of `P(C_0 finite, 0 connected to distance r)`.
    pub radius_tail: f64,
    pub radius_ci: f64,
    /// Estimate of `P(no infinite-cluster site within l1 distance r of 0)`.
    pub hole_tail: f64,
    pub hole_ci: f64,
    pub replicas: usize,
}

pub const TAIL_CSV_HEADER: &str = "r,radius_tail,radius_ci,hole_tail,hole_ci,replicas";

pub fn tail_csv(rows: &[TailRow]) -> String {
    let mut out = String::from(TAIL_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.r, r.radius_tail, r.radius_ci, r.hole_tail, r.hole_ci, r.replicas
        );
    }
    out
}

/// Monte Carlo estimates of the finite-cluster radius tail and the hole tail.
pub fn tail_statistics(cfg: &TailConfig) -> Result<Vec<TailRow>> {
    if cfg.replicas == 0 {
        return Err(Error::arg("tail statistics need at least one replica"));
    }
    if !(0.0..=1.0).contains(&cfg.p) {
        return Err(Error::arg(format!("p = {} is not a probability", cfg.p)));
    }
    if cfg.radii.is_empty() || cfg.radii[0] == 0 || cfg.radii.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::arg("radii must be positive and strictly increasing"));
    }
    let r_max = *cfg.radii.last().unwrap();
    let domain = BoxDomain::new(cfg.dim, cfg.interior + 3 * r_max)?;
    let per_replica = run_replicas(cfg.replicas, |rep| {
        let field = HashedField::new(derive_seed(cfg.seed, &[0, rep as u64]), domain.clone());
        tail_fractions(&field, cfg.p, &cfg.radii, cfg.interior)
    });
    Ok(cfg
        .radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let radius: Moments = per_replica.iter().map(|f| f.0[i]).collect();
            let hole: Moments = per_replica.iter().map(|f| f.1[i]).collect();
            TailRow {
                r,
                radius_tail: radius.mean().unwrap_or(0.0),
                radius_ci: radius.ci95(),
                hole_tail: hole.mean().unwrap_or(0.0),
                hole_ci: hole.ci95(),
                replicas: cfg.replicas,
            }
        })
        .collect())
}

/// Per-replica fractions of interior sites whose finite cluster reaches
/// distance `r`, and of interior sites with no quasi-infinite site within `r`.
fn tail_fractions<W: EdgeWeights + ?Sized>(
    field: &W,
    p: f64,
    radii: &[u32],
    interior: u32,
) -> (Vec<f64>, Vec<f64>) {
    let domain = field.domain();
    let d = domain.dim();
    let labeling = clusters(field, p);
    let signs = 1usize << d;
    let mut coords = vec![0i64; d];
    let signed = |coords: &[i64], s: usize| -> i64 {
        coords.iter().enumerate().map(|(a, &c)| if s >> a & 1 == 1 { -c } else { c }).sum()
    };

    // l1 eccentricity of a site within its cluster is
    // max over sign vectors s of (max_{y in C} s.y) - s.x
    let mut extremes = vec![i64::MIN; labeling.num_clusters() * signs];
    for site in 0..domain.num_sites() {
        let label = labeling.label(site);
        if labeling.touches_boundary(label) {
            continue;
        }
        domain.coords_into(site, &mut coords);
        let base = label as usize * signs;
        for s in 0..signs {
            let v = signed(&coords, s);
            if v > extremes[base + s] {
                extremes[base + s] = v;
            }
        }
    }

    let hole_dist = distance_to_quasi_infinite(domain, &labeling);

    let mut radius_counts = vec![0u64; radii.len()];
    let mut hole_counts = vec![0u64; radii.len()];
    let mut counted = 0u64;
    for (site, &hole) in hole_dist.iter().enumerate() {
        if domain.sup_norm(site) > interior as i64 {
            continue;
        }
        counted += 1;
        let label = labeling.label(site);
        if !labeling.touches_boundary(label) {
            domain.coords_into(site, &mut coords);
            let base = label as usize * signs;
            let radius = (0..signs).map(|s| extremes[base + s] - signed(&coords, s)).max().unwrap();
            for (c, &r) in radius_counts.iter_mut().zip(radii) {
                if radius >= r as i64 {
                    *c += 1;
                }
            }
        }
        for (c, &r) in hole_counts.iter_mut().zip(radii) {
            if hole > r {
                *c += 1;
            }
        }
    }
    let frac = |c: &u64| *c as f64 / counted as f64;
    (radius_counts.iter().map(frac).collect(), hole_counts.iter().map(frac).collect())
}

/// Lattice (l1) distance from every site to the nearest quasi-infinite site.
fn distance_to_quasi_infinite(domain: &BoxDomain, labeling: &ClusterLabeling) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; domain.num_sites()];
    let mut frontier: Vec<usize> =
        (0..domain.num_sites()).filter(|&s| labeling.is_quasi_infinite(s)).collect();
    for &s in &frontier {
        dist[s] = 0;
    }
    let mut next = Vec::new();
    let mut level = 0;
    while !frontier.is_empty() {
        level += 1;
        for &x in &frontier {
            for (y, _) in domain.neighbors(x) {
                if dist[y] == UNREACHABLE {
                    dist[y] = level;
                    next.push(y);
                }
            }
        }
        frontier.clear();
        std::mem::swap(&mut frontier, &mut next);
    }
    dist
}

/// Exponential-decay fit of a tail column: least squares of `ln(estimate)`
/// against `r`.
#[derive(Clone, Copy, Debug)]
pub struct DecayFit {
    pub fit: LineFit,
    /// Slope standard error propagated from the replica confidence intervals
    /// (weighted least squares with `var(ln y) = (se / y)^2`).
    pub sampling_se: f64,
}

impl DecayFit {
    /// The larger of the residual and sampling standard errors.
    pub fn slope_se(&self) -> f64 {
        self.fit.slope_se.max(self.sampling_se)
    }
}

/// Fits `ln(tail)` against `r`. Returns `None` if any estimate is zero.
pub fn decay_fit(points: &[(u32, f64, f64)]) -> Option<DecayFit> {
    if points.iter().any(|&(_, y, _)| y <= 0.0) {
        return None;
    }
    let x: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let fit = least_squares(&x, &y)?;
    // ci half-widths are 1.96 standard errors
    let w: Vec<f64> = points
        .iter()
        .map(|&(_, est, ci)| {
            let se = ci / crate::stats::Z95 / est;
            if se > 0.0 {
                1.0 / (se * se)
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let sampling_se = if w.iter().all(|v| v.is_finite()) {
        let sw: f64 = w.iter().sum();
        let xw = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
        let sxx: f64 = x.iter().zip(&w).map(|(a, b)| b * (a - xw).powi(2)).sum();
        (1.0 / sxx).sqrt()
    } else {
        0.0
    };
    Some(DecayFit { fit, sampling_se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::DenseField;

    fn square_field(l: u32, seed: u64) -> HashedField {
        HashedField::new(seed, BoxDomain::new(2, l).unwrap())
    }

    #[test]
    fn p_zero_gives_singletons_and_p_one_a_single_cluster() {
        let f = square_field(4, 3);
        let c0 = clusters(&f, 0.0);
        assert_eq!(c0.num_clusters(), f.domain().num_sites());
        let c1 = clusters(&f, 1.0);
        assert_eq!(c1.num_clusters(), 1);
        assert!(c1.touches_boundary(0));
    }

    #[test]
    fn distance_at_p_one_is_l1() {
        let f = square_field(5, 9);
        let src = [1, -2];
        let df = chemical_distance_field(&f, 1.0, &src).unwrap();
        for site in 0..f.domain().num_sites() {
            let x = f.domain().coords(site);
            let l1 = (x[0] - src[0]).abs() + (x[1] - src[1]).abs();
            assert_eq!(df.get(site), Some(l1 as u32));
        }
        assert_eq!(df.get(df.source()), Some(0));
    }

    #[test]
    fn source_outside_box_is_rejected() {
        let f = square_field(2, 0);
        assert!(matches!(chemical_distance_field(&f, 0.5, &[3, 0]), Err(Error::Domain(_))));
    }

    #[test]
    fn ball_is_a_filter() {
        let f = square_field(6, 11);
        let df = chemical_distance_field(&f, 0.6, &[0, 0]).unwrap();
        let ball = df.ball(3);
        assert!(ball.iter().all(|&s| df.get(s).unwrap() <= 3));
        let count = (0..f.domain().num_sites()).filter(|&s| df.get(s).is_some_and(|d| d <= 3)).count();
        assert_eq!(ball.len(), count);
    }

    #[test]
    fn isolated_origin() {
        let d = BoxDomain::new(2, 2).unwrap();
        let f = DenseField::constant(d.clone(), 0.8);
        let df = chemical_distance_field(&f, 0.5, &[0, 0]).unwrap();
        assert_eq!(df.ball(10), vec![d.index(&[0, 0]).unwrap()]);
    }

    #[test]
    fn tail_extremes() {
        let base = TailConfig { dim: 2, p: 0.0, radii: vec![1, 2, 4], replicas: 3, seed: 5, interior: 4 };
        for row in tail_statistics(&base).unwrap() {
            assert_eq!(row.radius_tail, 0.0);
            assert_eq!(row.hole_tail, 1.0);
        }
        let full = TailConfig { p: 1.0, ..base.clone() };
        for row in tail_statistics(&full).unwrap() {
            assert_eq!(row.radius_tail, 0.0);
            assert_eq!(row.hole_tail, 0.0);
        }
    }

    #[test]
    fn tail_argument_errors() {
        let cfg = TailConfig { dim: 2, p: 0.5, radii: vec![2, 2], replicas: 1, seed: 0, interior: 2 };
        assert!(tail_statistics(&cfg).is_err());
        let cfg = TailConfig { radii: vec![1], replicas: 0, ..cfg };
        assert!(tail_statistics(&cfg).is_err());
    }

    #[test]
    fn tail_csv_header() {
        let csv = tail_csv(&[]);
        assert_eq!(csv, "r,radius_tail,radius_ci,hole_tail,hole_ci,replicas\n");
    }
}
