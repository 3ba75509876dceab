//! Finite-box lattice geometry, uniform edge weights and the boundary operator.
//!
//! A [`BoxDomain`] is the set of sites `x` in `Z^d` with `|x|_inf <= L`,
//! indexed densely in row-major order (axis 0 varies slowest). Edges are the
//! nearest-neighbour pairs with both endpoints in the box; an edge is stored
//! in the slot `lower_site * d + axis`, where `lower_site` is the endpoint
//! with the smaller coordinate along `axis`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hash::{absorb, mix64, unit_interval};

/// Largest supported lattice dimension.
pub const MAX_DIM: usize = 8;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoxDomain {
    dim: usize,
    half_width: u32,
    side: usize,
    strides: Vec<usize>,
    num_sites: usize,
}

impl BoxDomain {
    pub fn new(dim: usize, half_width: u32) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::arg(format!("dimension must be in 1..={MAX_DIM}, got {dim}")));
        }
        if half_width == 0 {
            return Err(Error::arg("half-width must be positive"));
        }
        let side = 2 * half_width as usize + 1;
        let num_sites = side
            .checked_pow(dim as u32)
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or_else(|| Error::arg(format!("box of side {side} in dimension {dim} is too large")))?;
        let mut strides = vec![1usize; dim];
        for axis in (0..dim.saturating_sub(1)).rev() {
            strides[axis] = strides[axis + 1] * side;
        }
        Ok(BoxDomain { dim, half_width, side, strides, num_sites })
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn half_width(&self) -> u32 {
        self.half_width
    }

    /// Number of sites along one axis, `2L + 1`.
    #[inline]
    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn num_sites(&self) -> usize {
        self.num_sites
    }

    /// Number of edge slots, `num_sites * dim`. Slots on the upper face of an
    /// axis do not correspond to edges.
    #[inline]
    pub fn num_edge_slots(&self) -> usize {
        self.num_sites * self.dim
    }

    /// Number of in-box edges.
    pub fn num_edges(&self) -> usize {
        self.dim * (self.side - 1) * self.side.pow(self.dim as u32 - 1)
    }

    #[inline]
    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        let l = self.half_width as i64;
        x.len() == self.dim && x.iter().all(|&c| -l <= c && c <= l)
    }

    pub fn index(&self, x: &[i64]) -> Result<usize> {
        if !self.contains(x) {
            return Err(Error::domain(format!("site {x:?} not in box of half-width {}", self.half_width)));
        }
        Ok(self.index_unchecked(x))
    }

    #[inline]
    pub fn index_unchecked(&self, x: &[i64]) -> usize {
        let l = self.half_width as i64;
        x.iter().zip(&self.strides).map(|(&c, &s)| (c + l) as usize * s).sum()
    }

    /// Coordinate of site `idx` along `axis`.
    #[inline]
    pub fn coord(&self, idx: usize, axis: usize) -> i64 {
        ((idx / self.strides[axis]) % self.side) as i64 - self.half_width as i64
    }

    pub fn coords_into(&self, idx: usize, out: &mut [i64]) {
        for (axis, c) in out.iter_mut().enumerate().take(self.dim) {
            *c = self.coord(idx, axis);
        }
    }

    pub fn coords(&self, idx: usize) -> Vec<i64> {
        let mut out = vec![0; self.dim];
        self.coords_into(idx, &mut out);
        out
    }

    /// `|x|_inf` of site `idx`.
    pub fn sup_norm(&self, idx: usize) -> i64 {
        (0..self.dim).map(|a| self.coord(idx, a).abs()).max().unwrap_or(0)
    }

    /// True when the site lies on the box boundary `|x|_inf = L`.
    pub fn on_boundary(&self, idx: usize) -> bool {
        self.sup_norm(idx) == self.half_width as i64
    }

    /// In-box neighbours of `idx` with the slot of the connecting edge.
    #[inline]
    pub fn neighbors(&self, idx: usize) -> Neighbors<'_> {
        Neighbors { domain: self, site: idx, dir: 0 }
    }

    pub fn edge_slot(&self, e: &EdgeId) -> Result<usize> {
        if e.axis >= self.dim || !self.contains(&e.lower) {
            return Err(Error::domain(format!("edge {e:?} not in box")));
        }
        if e.lower[e.axis] >= self.half_width as i64 {
            return Err(Error::domain(format!("edge {e:?} leaves the box")));
        }
        Ok(self.index_unchecked(&e.lower) * self.dim + e.axis)
    }

    /// True when `slot` stores an in-box edge.
    #[inline]
    pub fn slot_is_edge(&self, slot: usize) -> bool {
        let (site, axis) = (slot / self.dim, slot % self.dim);
        slot < self.num_edge_slots() && self.coord(site, axis) < self.half_width as i64
    }

    pub fn edge_from_slot(&self, slot: usize) -> EdgeId {
        EdgeId { lower: self.coords(slot / self.dim), axis: slot % self.dim }
    }

    /// Iterates every in-box edge slot.
    pub fn edge_slots(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.num_edge_slots()).filter(move |&s| self.slot_is_edge(s))
    }
}

/// Iterator over the in-box neighbours of a site.
pub struct Neighbors<'a> {
    domain: &'a BoxDomain,
    site: usize,
    dir: usize,
}

impl Iterator for Neighbors<'_> {
    /// `(neighbour index, edge slot)`
    type Item = (usize, usize);

    #[inline]
    fn next(&mut self) -> Option<(usize, usize)> {
        let d = self.domain.dim;
        let l = self.domain.half_width as i64;
        while self.dir < 2 * d {
            let axis = self.dir >> 1;
            let up = self.dir & 1 == 0;
            self.dir += 1;
            let c = self.domain.coord(self.site, axis);
            let stride = self.domain.strides[axis];
            if up && c < l {
                return Some((self.site + stride, self.site * d + axis));
            }
            if !up && c > -l {
                let nb = self.site - stride;
                return Some((nb, nb * d + axis));
            }
        }
        None
    }
}

/// Canonical name of an edge: its lower endpoint and the axis of the step.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EdgeId {
    pub lower: Vec<i64>,
    pub axis: usize,
}

impl EdgeId {
    /// The edge joining two neighbouring sites, in either orientation.
    pub fn between(x: &[i64], y: &[i64]) -> Result<EdgeId> {
        if x.len() != y.len() {
            return Err(Error::arg("endpoints have different dimensions"));
        }
        let mut axis = None;
        for (a, (&u, &v)) in x.iter().zip(y).enumerate() {
            match (u - v).abs() {
                0 => {}
                1 if axis.is_none() => axis = Some(a),
                _ => return Err(Error::arg(format!("{x:?} and {y:?} are not neighbours"))),
            }
        }
        let axis = axis.ok_or_else(|| Error::arg("an edge needs two distinct endpoints"))?;
        let lower = if x[axis] < y[axis] { x.to_vec() } else { y.to_vec() };
        Ok(EdgeId { lower, axis })
    }

    pub fn upper(&self) -> Vec<i64> {
        let mut u = self.lower.clone();
        u[self.axis] += 1;
        u
    }
}

/// A source of edge weights in `[0, 1)` over a box.
pub trait EdgeWeights: Sync {
    fn domain(&self) -> &BoxDomain;

    /// Weight of the in-box edge stored at `slot`. Callers only pass slots
    /// produced by [`BoxDomain::neighbors`] or [`BoxDomain::edge_slot`].
    fn weight_at(&self, slot: usize) -> f64;

    fn edge_weight(&self, e: &EdgeId) -> Result<f64> {
        let slot = self.domain().edge_slot(e)?;
        Ok(self.weight_at(slot))
    }

    #[inline]
    fn is_open(&self, slot: usize, p: f64) -> bool {
        self.weight_at(slot) <= p
    }
}

impl<W: EdgeWeights + ?Sized> EdgeWeights for &W {
    fn domain(&self) -> &BoxDomain {
        (**self).domain()
    }

    #[inline]
    fn weight_at(&self, slot: usize) -> f64 {
        (**self).weight_at(slot)
    }
}

/// The i.i.d. uniform field, derived on demand from `(seed, edge)`.
///
/// The weight of an edge depends only on the seed, the axis and the
/// coordinates of its lower endpoint, so every box reproduces the same values
/// on the edges it shares with any other box.
#[derive(Clone, Debug)]
pub struct HashedField {
    seed: u64,
    domain: BoxDomain,
}

impl HashedField {
    pub fn new(seed: u64, domain: BoxDomain) -> Self {
        HashedField { seed, domain }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Weight of the edge from `lower` along `axis` under `seed`.
    #[inline]
    pub fn weight_of(seed: u64, lower: &[i64], axis: usize) -> f64 {
        let h = lower.iter().fold(absorb(mix64(seed), axis as u64), |h, &c| absorb(h, c as u64));
        unit_interval(h)
    }
}

impl EdgeWeights for HashedField {
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    #[inline]
    fn weight_at(&self, slot: usize) -> f64 {
        let d = self.domain.dim;
        let mut lower = [0i64; MAX_DIM];
        self.domain.coords_into(slot / d, &mut lower[..d]);
        Self::weight_of(self.seed, &lower[..d], slot % d)
    }
}

/// Edge weights stored in memory, one value per slot.
///
/// Used for hand-written tables in tests and to cache a hashed field when
/// several parameters are evaluated on the same replica.
#[derive(Clone, Debug)]
pub struct DenseField {
    domain: BoxDomain,
    weights: Vec<f64>,
}

impl DenseField {
    pub fn from_fn(domain: BoxDomain, mut f: impl FnMut(&EdgeId) -> f64) -> Self {
        let mut weights = vec![f64::INFINITY; domain.num_edge_slots()];
        for slot in domain.edge_slots() {
            weights[slot] = f(&domain.edge_from_slot(slot));
        }
        DenseField { domain, weights }
    }

    /// Every edge gets weight `w`.
    pub fn constant(domain: BoxDomain, w: f64) -> Self {
        Self::from_fn(domain, |_| w)
    }

    /// Copies the weights of `source` over its whole domain.
    pub fn materialize<W: EdgeWeights + ?Sized>(source: &W) -> Self {
        let domain = source.domain().clone();
        let mut weights = vec![f64::INFINITY; domain.num_edge_slots()];
        for slot in domain.edge_slots() {
            weights[slot] = source.weight_at(slot);
        }
        DenseField { domain, weights }
    }

    pub fn set(&mut self, e: &EdgeId, w: f64) -> Result<()> {
        let slot = self.domain.edge_slot(e)?;
        self.weights[slot] = w;
        Ok(())
    }
}

impl EdgeWeights for DenseField {
    fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    #[inline]
    fn weight_at(&self, slot: usize) -> f64 {
        self.weights[slot]
    }
}

/// The random boundary `{y not in A : exists x in A, {x,y} p-open}`.
pub fn p_boundary<W: EdgeWeights + ?Sized>(field: &W, p: f64, set: &BTreeSet<usize>) -> BTreeSet<usize> {
    let domain = field.domain();
    let mut out = BTreeSet::new();
    for &x in set {
        for (y, slot) in domain.neighbors(x) {
            if !set.contains(&y) && field.is_open(slot, p) {
                out.insert(y);
            }
        }
    }
    out
}
