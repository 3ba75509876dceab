//! Independent reference implementations shared by the integration suites.
#![allow(dead_code)]

use std::collections::HashSet;

use rand::seq::IndexedRandom;
use rand::Rng;

use percomp_core::{BoxDomain, EdgeId, EdgeWeights, NBox};

/// Whether edge `{x, y}` is `p`-open.
pub fn open<W: EdgeWeights>(field: &W, p: f64, x: &[i64], y: &[i64]) -> bool {
    field.edge_weight(&EdgeId::between(x, y).unwrap()).unwrap() <= p
}

/// All in-box edges as coordinate pairs.
pub fn edge_list(domain: &BoxDomain) -> Vec<(Vec<i64>, Vec<i64>)> {
    let mut out = Vec::new();
    for i in 0..domain.num_sites() {
        let x = domain.coords(i);
        for axis in 0..domain.dim() {
            let mut y = x.clone();
            y[axis] += 1;
            if domain.contains(&y) {
                out.push((x.clone(), y));
            }
        }
    }
    out
}

/// Shortest open-walk lengths from `source` using at most `max_len` edges,
/// by dynamic programming over walk length; `u32::MAX` when unreachable.
pub fn walk_dp<W: EdgeWeights>(field: &W, p: f64, source: &[i64], max_len: usize) -> Vec<u32> {
    let domain = field.domain();
    let edges: Vec<(usize, usize)> = edge_list(domain)
        .into_iter()
        .filter(|(x, y)| open(field, p, x, y))
        .map(|(x, y)| (domain.index(&x).unwrap(), domain.index(&y).unwrap()))
        .collect();
    let mut best = vec![u32::MAX; domain.num_sites()];
    best[domain.index(source).unwrap()] = 0;
    for _ in 0..max_len {
        let prev = best.clone();
        for &(a, b) in &edges {
            if prev[a] != u32::MAX {
                best[b] = best[b].min(prev[a] + 1);
            }
            if prev[b] != u32::MAX {
                best[a] = best[a].min(prev[b] + 1);
            }
        }
    }
    best
}

/// A random planar self-avoiding walk from the origin inside
/// `|x|_inf <= half`, grown until stuck or `max_len` steps long.
pub fn random_saw(rng: &mut impl Rng, half: i64, max_len: usize) -> Vec<Vec<i64>> {
    const STEPS: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    let mut path = vec![vec![0i64, 0]];
    let mut seen = HashSet::from([vec![0i64, 0]]);
    // a persistent drift makes long, box-spanning paths common
    let drift = STEPS[rng.random_range(0..4)];
    while path.len() <= max_len {
        let x = path.last().unwrap();
        let options: Vec<Vec<i64>> = STEPS
            .iter()
            .map(|(dx, dy)| vec![x[0] + dx, x[1] + dy])
            .filter(|y| y[0].abs() <= half && y[1].abs() <= half && !seen.contains(y))
            .collect();
        if options.is_empty() {
            break;
        }
        let preferred = vec![x[0] + drift.0, x[1] + drift.1];
        let next = if options.contains(&preferred) && rng.random_bool(0.4) {
            preferred
        } else {
            options.choose(rng).unwrap().clone()
        };
        seen.insert(next.clone());
        path.push(next);
    }
    path
}

/// Whether some coordinate-monotone `p`-open path inside the planar box
/// joins an inner site to an outer site. A path of length `|z - y|_1` is
/// exactly a monotone one, so this decides the box colour independently of
/// breadth-first search.
pub fn monotone_crossing_exists<W: EdgeWeights>(field: &W, p: f64, b: &NBox) -> bool {
    let outward = b.sign as i64;
    let lateral = 1 - b.axis;
    let sites = b.sites();
    for y in b.inner_sites() {
        for side in [-1i64, 1] {
            let mut order: Vec<&Vec<i64>> = sites
                .iter()
                .filter(|x| (x[b.axis] - y[b.axis]) * outward >= 0 && (x[lateral] - y[lateral]) * side >= 0)
                .collect();
            order.sort_by_key(|x| (x[0] - y[0]).abs() + (x[1] - y[1]).abs());
            let mut reach: HashSet<Vec<i64>> = HashSet::from([y.clone()]);
            for x in order {
                if reach.contains(x) {
                    continue;
                }
                let mut back_axis = x.clone();
                back_axis[b.axis] -= outward;
                let mut back_lat = x.clone();
                back_lat[lateral] -= side;
                if (reach.contains(&back_axis) && open(field, p, &back_axis, x))
                    || (reach.contains(&back_lat) && open(field, p, &back_lat, x))
                {
                    reach.insert(x.clone());
                }
            }
            for z in b.outer_sites() {
                if (z[lateral] - y[lateral]) * side < 0 {
                    continue;
                }
                let mut last = z.clone();
                last[b.axis] -= outward;
                if reach.contains(&last) && open(field, p, &last, &z) {
                    return true;
                }
            }
        }
    }
    false
}
