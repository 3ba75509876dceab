//! Norm, comparison and reach estimators against exact couplings and
//! brute-force scans.

use std::collections::VecDeque;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use percomp_core::shape::{norm_estimates, FanNorm};
use percomp_core::{
    clusters, cpq_estimate, norm_estimate, reach_metrics, BoxDomain, ClusterLabeling, EdgeId,
    EdgeWeights, HashedField, L1Norm, NormEvaluator,
};

#[test]
fn coupled_estimates_are_monotone_per_replica() {
    let dirs = vec![vec![1, 0], vec![1, 1], vec![2, 1]];
    let n_values = [10, 20, 40];
    let ps = [0.55, 0.6, 0.7, 0.85, 1.0];
    let all: Vec<_> = ps.iter().map(|&p| norm_estimates(p, &dirs, &n_values, 30, 8, Some(20)).unwrap()).collect();
    for w in all.windows(2) {
        for (lo, hi) in w[0].iter().zip(&w[1]) {
            for (rl, rh) in lo.rows.iter().zip(&hi.rows) {
                for (a, b) in rl.samples.iter().zip(&rh.samples) {
                    if let Some(a) = a {
                        let b = b.expect("connected at p stays connected at larger p");
                        assert!(b <= *a);
                    }
                }
            }
        }
    }
    // every retained sample is at least the l1 distance
    for est in all.iter().flatten() {
        let l1: i64 = est.direction.iter().map(|c| c.abs()).sum();
        for row in &est.rows {
            for d in row.samples.iter().flatten() {
                assert!(*d as i64 >= l1 * row.n as i64);
            }
            if let Some(v) = row.estimate {
                assert!(v >= l1 as f64);
            }
        }
    }
}

#[test]
fn homogeneity_on_the_same_field() {
    let a = norm_estimates(0.65, &[vec![2, 0]], &[10, 15], 20, 4, Some(30)).unwrap();
    let b = norm_estimates(0.65, &[vec![1, 0]], &[20, 30], 20, 4, Some(30)).unwrap();
    for (ra, rb) in a[0].rows.iter().zip(&b[0].rows) {
        assert_eq!(ra.samples, rb.samples);
        match (ra.estimate, rb.estimate) {
            (Some(x), Some(y)) => assert!((x - 2.0 * y).abs() < 1e-9),
            (x, y) => assert_eq!(x.is_none(), y.is_none()),
        }
    }
}

#[test]
fn axis_norm_estimate_above_threshold() {
    let est = norm_estimate(0.7, &[1, 0], &[50, 100, 200, 400], 100, 12).unwrap();
    let headline = est.headline().unwrap();
    assert!((1.0..2.0).contains(&headline), "{headline}");
    let first = &est.rows[0];
    let last = est.rows.last().unwrap();
    assert!(last.ci < first.ci, "ci {} at n=50, {} at n=400", first.ci, last.ci);
    assert!(last.disconnected_frac < 0.5);
}

#[test]
fn cpq_coupling_extremes() {
    let dirs = vec![vec![1, 0], vec![1, 1]];
    let same = cpq_estimate(0.65, 0.65, &dirs, 30, 10, 2).unwrap();
    assert!(same.rows.iter().all(|r| r.ratio == Some(1.0)));
    let full = cpq_estimate(0.65, 1.0, &dirs, 30, 10, 2).unwrap();
    for row in &full.rows {
        let l1: u32 = row.direction.iter().map(|c| c.unsigned_abs() as u32).sum::<u32>() * 30;
        assert!(row.pairs.iter().all(|&(dp, dq)| dq == l1 && dq <= dp));
        assert!(row.ratio.unwrap() <= 1.0);
    }
    let csv = full.to_csv();
    assert!(csv.starts_with("direction,ratio,ci\n1:0,"));
    assert!(csv.lines().last().unwrap().starts_with("sup,"));
}

/// Quasi-infinite sites by flood fill from the box boundary.
fn boundary_connected<W: EdgeWeights>(field: &W, p: f64) -> Vec<bool> {
    let domain = field.domain();
    let mut mark = vec![false; domain.num_sites()];
    let mut queue: VecDeque<usize> = (0..domain.num_sites()).filter(|&s| domain.on_boundary(s)).collect();
    for &s in &queue {
        mark[s] = true;
    }
    while let Some(x) = queue.pop_front() {
        let cx = domain.coords(x);
        for axis in 0..domain.dim() {
            for delta in [-1, 1] {
                let mut cy = cx.clone();
                cy[axis] += delta;
                if !domain.contains(&cy) {
                    continue;
                }
                let y = domain.index(&cy).unwrap();
                if !mark[y] && field.edge_weight(&EdgeId::between(&cx, &cy).unwrap()).unwrap() <= p {
                    mark[y] = true;
                    queue.push_back(y);
                }
            }
        }
    }
    mark
}

fn check_reach<N: NormEvaluator>(domain: &BoxDomain, set: &[usize], norm: &N, lab: &ClusterLabeling, qi: &[bool]) {
    let rv = reach_metrics(domain, set, norm, lab).unwrap();
    let sup = set.iter().map(|&s| norm.norm_of_site(&domain.coords(s))).fold(0.0, f64::max);
    let mut inf = None::<f64>;
    for (s, &q) in qi.iter().enumerate() {
        if q && !set.contains(&s) {
            let v = norm.norm_of_site(&domain.coords(s));
            inf = Some(inf.map_or(v, |m| m.min(v)));
        }
    }
    assert_eq!(rv.sup_reach, sup);
    assert_eq!(rv.inf_reach, inf);
}

#[test]
fn reach_matches_brute_force_scan() {
    let domain = BoxDomain::new(2, 25).unwrap();
    let fan = FanNorm::new(2, &[(vec![1, 0], 1.3), (vec![2, 1], 3.6), (vec![1, 1], 2.2)]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for seed in 0..20 {
        let field = HashedField::new(seed, domain.clone());
        let p = 0.5 + 0.01 * seed as f64;
        let lab = clusters(&field, p);
        let qi = boundary_connected(&field, p);
        for (s, &q) in qi.iter().enumerate() {
            assert_eq!(lab.is_quasi_infinite(s), q);
        }
        let set: Vec<usize> = sample(&mut rng, domain.num_sites(), 20).into_vec();
        check_reach(&domain, &set, &L1Norm, &lab, &qi);
        check_reach(&domain, &set, &fan, &lab, &qi);
    }
}

#[test]
fn equal_parameters_speed_ratio_is_near_one() {
    use percomp_core::{speed_ratio_experiment, CompetitionParams};
    let norm = FanNorm::estimate(0.7, 2, 2, 120, 40, 3).unwrap();
    let params = CompetitionParams::new(0.7, 0.7, vec![0, 0], vec![1, 0]).unwrap();
    let res = speed_ratio_experiment(&params, 121, 120, 60, 5, &norm).unwrap();
    assert!(res.coexist_count >= 10);
    let ratios = res.ratios();
    let median = percomp_core::stats::quantile(&ratios, 0.5).unwrap();
    assert!((0.9..=1.1).contains(&median), "median ratio {median}");
}
