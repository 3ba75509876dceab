//! Renormalization grid, main crossings of self-avoiding paths, and the
//! black/white coloring of N-boxes.
//!
//! The `N`-cube with coordinates `k` holds the sites `u` with
//! `floor(u_j / N) = k_j` for every `j`; its large cube `L_N(k)` holds the
//! sites with `u_j - N k_j` in `[-N, 2N - 1]`. Between the two sit `2d`
//! N-boxes, one per axis and sign; for axis `i` and sign `+` the box is
//! `N <= u_i - N k_i <= 2N - 1` with the other coordinates spanning the large
//! cube. Its inner boundary is the layer `u_i - N k_i = N` and its outer
//! boundary the layer `u_i - N k_i = 2N` just outside the large cube.
//!
//! # Main cubes
//!
//! A path visits a sequence of cubes (`sigma0`). Loop removal scans it
//! forward; on revisiting a cube already on the kept list, everything after
//! that cube is discarded and the cube's kept visit moves to the current one.
//! For example with `N = 1`, cubes `a b c b d` become `a b d`, and the kept
//! visit of `b` is its second one. The main cubes are then extracted greedily:
//! from the current main cube, jump to the last kept cube before the first
//! kept cube at sup-distance more than one.
//!
//! The crossing attached to a main cube starts from the kept visit: it is the
//! last stretch of the path inside one N-box before the path's first exit from
//! the large cube, ending at the exit site on that box's outer boundary.

use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::derive_seed;
use crate::lattice::{BoxDomain, EdgeWeights, HashedField};
use crate::stats::{run_replicas, Moments};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RenormGrid {
    dim: usize,
    n: i64,
}

impl RenormGrid {
    pub fn new(dim: usize, n: u32) -> Result<Self> {
        if dim == 0 || n == 0 {
            return Err(Error::arg("grid needs a positive dimension and cube side"));
        }
        Ok(RenormGrid { dim, n: n as i64 })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn side(&self) -> i64 {
        self.n
    }

    /// Coordinates of the N-cube containing `x`.
    pub fn cube_of(&self, x: &[i64]) -> Vec<i64> {
        x.iter().map(|&c| c.div_euclid(self.n)).collect()
    }

    pub fn in_cube(&self, x: &[i64], k: &[i64]) -> bool {
        x.iter().zip(k).all(|(&c, &kc)| c.div_euclid(self.n) == kc)
    }

    pub fn in_large_cube(&self, x: &[i64], k: &[i64]) -> bool {
        let n = self.n;
        x.iter().zip(k).all(|(&c, &kc)| (-n..2 * n).contains(&(c - n * kc)))
    }

    /// Sites outside `L_N(k)` with a neighbour inside.
    pub fn on_large_boundary(&self, x: &[i64], k: &[i64]) -> bool {
        self.exit_box(x, k).is_some()
    }

    /// The N-box whose outer boundary contains `x`, if any.
    pub fn exit_box(&self, x: &[i64], k: &[i64]) -> Option<NBox> {
        let n = self.n;
        let mut found = None;
        for (axis, (&c, &kc)) in x.iter().zip(k).enumerate() {
            let rel = c - n * kc;
            if (-n..2 * n).contains(&rel) {
                continue;
            }
            let sign = match rel {
                r if r == 2 * n => 1,
                r if r == -n - 1 => -1,
                _ => return None,
            };
            if found.is_some() {
                return None;
            }
            found = Some((axis, sign));
        }
        found.map(|(axis, sign)| NBox { n: self.n, k: k.to_vec(), axis, sign })
    }

    /// The `2d` N-boxes around `C_N(k)`.
    pub fn boxes(&self, k: &[i64]) -> Vec<NBox> {
        (0..self.dim)
            .flat_map(|axis| [1i8, -1].map(|sign| NBox { n: self.n, k: k.to_vec(), axis, sign }))
            .collect()
    }
}

/// One of the rectangular boxes surrounding an N-cube in its large cube.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NBox {
    pub n: i64,
    pub k: Vec<i64>,
    pub axis: usize,
    pub sign: i8,
}

impl NBox {
    fn rel(&self, x: &[i64], j: usize) -> i64 {
        x[j] - self.n * self.k[j]
    }

    fn lateral_ok(&self, x: &[i64]) -> bool {
        let n = self.n;
        (0..x.len()).all(|j| j == self.axis || (-n..2 * n).contains(&self.rel(x, j)))
    }

    /// Relative coordinate along the box axis of the inner layer, the box
    /// range and the outer layer.
    fn axis_layout(&self) -> (i64, std::ops::RangeInclusive<i64>, i64) {
        let n = self.n;
        if self.sign > 0 {
            (n, n..=2 * n - 1, 2 * n)
        } else {
            (-1, -n..=-1, -n - 1)
        }
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        self.axis_layout().1.contains(&self.rel(x, self.axis)) && self.lateral_ok(x)
    }

    pub fn is_inner(&self, x: &[i64]) -> bool {
        self.rel(x, self.axis) == self.axis_layout().0 && self.lateral_ok(x)
    }

    pub fn is_outer(&self, x: &[i64]) -> bool {
        self.rel(x, self.axis) == self.axis_layout().2 && self.lateral_ok(x)
    }

    /// Sites with the given relative coordinates along the box axis.
    fn layer_sites(&self, axis_rel: impl Iterator<Item = i64> + Clone) -> Vec<Vec<i64>> {
        let n = self.n;
        let d = self.k.len();
        let mut out = vec![Vec::with_capacity(d)];
        for j in 0..d {
            let range: Vec<i64> =
                if j == self.axis { axis_rel.clone().collect() } else { (-n..2 * n).collect() };
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    range.iter().map(move |&r| {
                        let mut v = prefix.clone();
                        v.push(r + n * self.k[j]);
                        v
                    })
                })
                .collect();
        }
        out
    }

    pub fn sites(&self) -> Vec<Vec<i64>> {
        self.layer_sites(self.axis_layout().1)
    }

    pub fn inner_sites(&self) -> Vec<Vec<i64>> {
        let a = self.axis_layout().0;
        self.layer_sites(a..=a)
    }

    pub fn outer_sites(&self) -> Vec<Vec<i64>> {
        let a = self.axis_layout().2;
        self.layer_sites(a..=a)
    }

    /// `+1`, `-2`, ...: the sign and the 1-based axis.
    pub fn label(&self) -> String {
        format!("{}{}", if self.sign > 0 { '+' } else { '-' }, self.axis + 1)
    }
}

/// A main crossing: the path vertices `start..=end` and the box they cross.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Crossing {
    /// Position of the owning cube in the main-cube sequence.
    pub main_index: usize,
    pub nbox: NBox,
    pub start: usize,
    pub end: usize,
}

impl Crossing {
    /// Number of edges in the crossing.
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

#[derive(Clone, Debug)]
pub struct CrossingSequence {
    /// Cubes successively visited by the path.
    pub sigma0: Vec<Vec<i64>>,
    /// `sigma0` after loop removal.
    pub sigma1: Vec<Vec<i64>>,
    /// Positions in `sigma1` of the main cubes.
    pub main_positions: Vec<usize>,
    /// Main cube coordinates.
    pub main: Vec<Vec<i64>>,
    /// Crossings, at most one per main cube, in main-cube order.
    pub crossings: Vec<Crossing>,
}

impl CrossingSequence {
    /// Number of main cubes.
    pub fn tau(&self) -> usize {
        self.main.len()
    }

    /// One line per main cube: `k,box_direction,crossing_len`; the last two
    /// fields are empty for cubes without a crossing.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        for (i, k) in self.main.iter().enumerate() {
            let label = k.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(":");
            match self.crossings.iter().find(|c| c.main_index == i) {
                Some(c) => {
                    let _ = writeln!(out, "{label},{},{}", c.nbox.label(), c.len());
                }
                None => {
                    let _ = writeln!(out, "{label},,");
                }
            }
        }
        out
    }

    /// Checks the structural properties of the main cubes on `path`: the
    /// first main cube holds the start, the last one is within sup-distance
    /// one of the end cube, consecutive main cubes are at sup-distance exactly
    /// one, and each crossing runs inside its box from a box site to an
    /// outer-boundary site.
    pub fn check_properties(&self, path: &[Vec<i64>], grid: &RenormGrid) -> std::result::Result<(), String> {
        let first = self.main.first().ok_or("no main cube")?;
        if !grid.in_cube(&path[0], first) {
            return Err("first main cube does not contain the start".into());
        }
        let last_visited = self.sigma0.last().ok_or("empty cube sequence")?;
        if sup_dist(self.main.last().unwrap(), last_visited) > 1 {
            return Err("last main cube is far from the end cube".into());
        }
        for w in self.main.windows(2) {
            if sup_dist(&w[0], &w[1]) != 1 {
                return Err(format!("main cubes {:?} and {:?} are not at sup-distance 1", w[0], w[1]));
            }
        }
        for c in &self.crossings {
            if !c.nbox.is_outer(&path[c.end]) {
                return Err(format!("crossing of main cube {} does not end on the outer boundary", c.main_index));
            }
            if (c.start..c.end).any(|j| !c.nbox.contains(&path[j])) {
                return Err(format!("crossing of main cube {} leaves its box", c.main_index));
            }
        }
        Ok(())
    }
}

fn sup_dist(a: &[i64], b: &[i64]) -> i64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).max().unwrap_or(0)
}

fn check_path(path: &[Vec<i64>]) -> Result<()> {
    let start = path.first().ok_or_else(|| Error::arg("empty path"))?;
    if start.iter().any(|&c| c != 0) {
        return Err(Error::arg("path must start at the origin"));
    }
    for w in path.windows(2) {
        let l1: i64 = w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).sum();
        if l1 != 1 || w[0].len() != w[1].len() {
            return Err(Error::arg(format!("{:?} -> {:?} is not a lattice step", w[0], w[1])));
        }
    }
    let mut seen = std::collections::HashSet::with_capacity(path.len());
    for x in path {
        if !seen.insert(x) {
            return Err(Error::arg(format!("path has a double point at {x:?}")));
        }
    }
    Ok(())
}

/// Extracts main cubes and main crossings of a self-avoiding path from the
/// origin.
pub fn main_crossings(path: &[Vec<i64>], grid: &RenormGrid) -> Result<CrossingSequence> {
    check_path(path)?;
    if path[0].len() != grid.dim() {
        return Err(Error::arg("path dimension does not match the grid"));
    }

    // sigma0 with the first path index of each stint
    let mut sigma0: Vec<Vec<i64>> = Vec::new();
    let mut stint_start: Vec<usize> = Vec::new();
    for (j, x) in path.iter().enumerate() {
        let k = grid.cube_of(x);
        if sigma0.last() != Some(&k) {
            sigma0.push(k);
            stint_start.push(j);
        }
    }

    // loop removal; each kept cube remembers its latest visit in sigma0
    let mut kept: Vec<usize> = Vec::new();
    let mut position: HashMap<&[i64], usize> = HashMap::new();
    for (i, k) in sigma0.iter().enumerate() {
        if let Some(&pos) = position.get(k.as_slice()) {
            for &gone in &kept[pos + 1..] {
                position.remove(sigma0[gone].as_slice());
            }
            kept.truncate(pos + 1);
            kept[pos] = i;
        } else {
            position.insert(k.as_slice(), kept.len());
            kept.push(i);
        }
    }
    let sigma1: Vec<Vec<i64>> = kept.iter().map(|&i| sigma0[i].clone()).collect();

    let mut main_positions = vec![0usize];
    loop {
        let cur = *main_positions.last().unwrap();
        match (cur + 1..sigma1.len()).find(|&j| sup_dist(&sigma1[j], &sigma1[cur]) > 1) {
            Some(j) => main_positions.push(j - 1),
            None => break,
        }
    }
    let main: Vec<Vec<i64>> = main_positions.iter().map(|&j| sigma1[j].clone()).collect();

    let mut crossings = Vec::new();
    for (mi, &pos) in main_positions.iter().enumerate() {
        let k = &sigma1[pos];
        let z = stint_start[kept[pos]];
        let Some(exit) = (z..path.len()).find(|&j| !grid.in_large_cube(&path[j], k)) else {
            continue;
        };
        let nbox = grid
            .exit_box(&path[exit], k)
            .expect("a unit step leaving the large cube lands on its boundary");
        let before = (z..exit).rev().find(|&j| !nbox.contains(&path[j])).expect("the kept visit lies in the cube");
        crossings.push(Crossing { main_index: mi, nbox, start: before + 1, end: exit });
    }

    Ok(CrossingSequence { sigma0, sigma1, main_positions, main, crossings })
}

/// True when the box admits no `p`-open path inside it from an inner-boundary
/// site `y` to an outer-boundary site `z` of length exactly `|z - y|_1`.
///
/// Runs a breadth-first search restricted to the box from every inner site;
/// outer sites are reachable as endpoints only.
pub fn box_is_black<W: EdgeWeights + ?Sized>(field: &W, p: f64, nbox: &NBox) -> Result<bool> {
    let domain = field.domain();
    let inner = nbox.inner_sites();
    let outer = nbox.outer_sites();
    for x in nbox.sites().iter().chain(&outer) {
        if !domain.contains(x) {
            return Err(Error::domain(format!("box {nbox:?} does not fit in the field's box")));
        }
    }
    let mut stamp = vec![0u32; domain.num_sites()];
    let mut dist = vec![0u32; domain.num_sites()];
    let mut coords = vec![0i64; domain.dim()];
    let mut frontier = Vec::new();
    let mut next = Vec::new();
    for (si, y) in inner.iter().enumerate() {
        let tag = si as u32 + 1;
        let src = domain.index_unchecked(y);
        stamp[src] = tag;
        dist[src] = 0;
        frontier.clear();
        frontier.push(src);
        while !frontier.is_empty() {
            for &x in &frontier {
                for (nb, slot) in domain.neighbors(x) {
                    if stamp[nb] == tag || !field.is_open(slot, p) {
                        continue;
                    }
                    domain.coords_into(nb, &mut coords);
                    if nbox.is_outer(&coords) {
                        let l1: i64 = coords.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
                        if dist[x] as i64 + 1 == l1 {
                            return Ok(false);
                        }
                        stamp[nb] = tag;
                        continue;
                    }
                    if nbox.contains(&coords) {
                        stamp[nb] = tag;
                        dist[nb] = dist[x] + 1;
                        next.push(nb);
                    }
                }
            }
            frontier.clear();
            std::mem::swap(&mut frontier, &mut next);
        }
    }
    Ok(true)
}

/// True when `C_N(k)` is white, i.e. one of its boxes is white.
pub fn cube_is_white<W: EdgeWeights + ?Sized>(field: &W, p: f64, grid: &RenormGrid, k: &[i64]) -> Result<bool> {
    for b in grid.boxes(k) {
        if !box_is_black(field, p, &b)? {
            return Ok(true);
        }
    }
    Ok(false)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PnRow {
    #[serde(rename = "N")]
    pub n: u32,
    pub p_white: f64,
    pub ci: f64,
    pub replicas: usize,
}

pub const PN_CSV_HEADER: &str = "N,p_white,ci,replicas";

pub fn pn_csv(rows: &[PnRow]) -> String {
    let mut out = format!("{PN_CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{}", r.n, r.p_white, r.ci, r.replicas);
    }
    out
}

/// Fraction of replicas in which `C_N(0)` is white, per `N`. Replica `r` uses
/// the same hashed field for every `N`.
pub fn estimate_pn(p: f64, dim: usize, n_values: &[u32], replicas: usize, seed: u64) -> Result<Vec<PnRow>> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::arg(format!("p = {p} is not a probability")));
    }
    if replicas == 0 {
        return Err(Error::arg("at least one replica is required"));
    }
    let origin = vec![0i64; dim];
    n_values
        .iter()
        .map(|&n| {
            let grid = RenormGrid::new(dim, n)?;
            let domain = BoxDomain::new(dim, 2 * n + 1)?;
            let whites = run_replicas(replicas, |rep| {
                let field = HashedField::new(derive_seed(seed, &[0, rep as u64]), domain.clone());
                cube_is_white(&field, p, &grid, &origin)
            });
            let m: Moments = whites
                .into_iter()
                .map(|w| w.map(|w| if w { 1.0 } else { 0.0 }))
                .collect::<Result<Vec<f64>>>()?
                .into_iter()
                .collect();
            Ok(PnRow { n, p_white: m.mean().unwrap_or(0.0), ci: m.ci95(), replicas })
        })
        .collect()
}
