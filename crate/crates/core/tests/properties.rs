//! Property tests for the structural invariants of the lattice, percolation,
//! competition and renormalization layers.

use std::collections::BTreeSet;

use proptest::prelude::*;

use percomp_core::{
    box_is_black, chemical_distance_field, clusters, p_boundary, run_competition, BoxDomain,
    CompetitionParams, EdgeId, EdgeWeights, HashedField, RenormGrid,
};

fn site_set(domain: &BoxDomain, picks: &[usize]) -> BTreeSet<usize> {
    picks.iter().map(|&i| i % domain.num_sites()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn site_and_edge_indices_round_trip(dim in 1usize..=3, half in 1u32..=4, pick in any::<usize>()) {
        let domain = BoxDomain::new(dim, half).unwrap();
        let idx = pick % domain.num_sites();
        let x = domain.coords(idx);
        prop_assert_eq!(domain.index(&x).unwrap(), idx);
        let n = domain.neighbors(idx).count();
        prop_assert!(n >= dim && n <= 2 * dim);
        prop_assert_eq!(n == 2 * dim, !domain.on_boundary(idx));
        for (nb, slot) in domain.neighbors(idx) {
            let e = EdgeId::between(&x, &domain.coords(nb)).unwrap();
            prop_assert_eq!(&EdgeId::between(&domain.coords(nb), &x).unwrap(), &e);
            prop_assert_eq!(domain.edge_slot(&e).unwrap(), slot);
            prop_assert_eq!(domain.edge_from_slot(slot), e);
        }
    }

    #[test]
    fn boundary_is_disjoint_and_monotone(
        seed in any::<u64>(),
        p in 0.0f64..=1.0,
        dp in 0.0f64..=0.5,
        a in prop::collection::vec(any::<usize>(), 0..12),
        extra in prop::collection::vec(any::<usize>(), 0..8),
    ) {
        let domain = BoxDomain::new(2, 4).unwrap();
        let field = HashedField::new(seed, domain.clone());
        let a = site_set(&domain, &a);
        let mut a2 = a.clone();
        a2.extend(site_set(&domain, &extra));
        let b = p_boundary(&field, p, &a);
        prop_assert!(b.is_disjoint(&a));
        let p2 = (p + dp).min(1.0);
        prop_assert!(b.is_subset(&p_boundary(&field, p2, &a)));
        let b2 = p_boundary(&field, p, &a2);
        prop_assert!(b.difference(&a2).all(|y| b2.contains(y)));
    }

    #[test]
    fn distances_are_coupled_metrics(seed in any::<u64>(), p in 0.3f64..0.9, dq in 0.0f64..0.3, picks in prop::collection::vec(any::<usize>(), 3)) {
        let domain = BoxDomain::new(2, 5).unwrap();
        let field = HashedField::new(seed, domain.clone());
        let q = (p + dq).min(1.0);
        let [x, y, z] = [picks[0], picks[1], picks[2]].map(|i| i % domain.num_sites());
        let dpx = chemical_distance_field(&field, p, &domain.coords(x)).unwrap();
        let dqx = chemical_distance_field(&field, q, &domain.coords(x)).unwrap();
        let dpy = chemical_distance_field(&field, p, &domain.coords(y)).unwrap();
        let lab = clusters(&field, p);
        let cx = domain.coords(x);
        for s in 0..domain.num_sites() {
            let l1: i64 = domain.coords(s).iter().zip(&cx).map(|(a, b)| (a - b).abs()).sum();
            match (dpx.get(s), dqx.get(s)) {
                (Some(a), Some(b)) => {
                    prop_assert!(b <= a);
                    prop_assert!(a as i64 >= l1);
                }
                (Some(_), None) => prop_assert!(false, "p-connected but not q-connected"),
                _ => {}
            }
            prop_assert_eq!(dpx.get(s).is_some(), lab.same_cluster(x, s));
        }
        if let (Some(a), Some(b), Some(c)) = (dpx.get(y), dpy.get(z), dpx.get(z)) {
            prop_assert!(c <= a + b);
        }
    }

    #[test]
    fn competition_sits_between_chemical_balls(seed in any::<u64>(), p in 0.4f64..0.9, dq in 0.0f64..0.3, t in 0u32..14) {
        let domain = BoxDomain::new(2, 15).unwrap();
        let field = HashedField::new(seed, domain.clone());
        let q = (p + dq).min(1.0);
        let params = CompetitionParams::new(p, q, vec![0, 0], vec![1, 1]).unwrap();
        let run = run_competition(&params, &field, t, false).unwrap();
        let ball = |param: f64, src: &[i64]| -> BTreeSet<usize> {
            chemical_distance_field(&field, param, src).unwrap().ball(t).into_iter().collect()
        };
        let bp1 = ball(p, &[0, 0]);
        let bq2 = ball(q, &[1, 1]);
        let by = run.state.total_yellow();
        let bb = run.state.total_blue();
        let union: BTreeSet<usize> = by.union(&bb).copied().collect();
        prop_assert!(bp1.is_subset(&union));
        prop_assert!(by.is_subset(&bp1));
        prop_assert!(bb.is_subset(&bq2));
        for (i, &e) in run.entry_y.iter().enumerate() {
            prop_assert_eq!(e != percomp_core::competition::NEVER, by.contains(&i));
            if e != percomp_core::competition::NEVER {
                prop_assert!(e <= t);
            }
        }
    }

    #[test]
    fn yellow_grows_and_blue_shrinks_with_p(seed in any::<u64>(), p in 0.3f64..0.7, dp in 0.0f64..0.2, t in 1u32..14) {
        let domain = BoxDomain::new(2, 15).unwrap();
        let field = HashedField::new(seed, domain.clone());
        let q = 0.8;
        let lo = CompetitionParams::new(p, q, vec![0, 0], vec![2, 0]).unwrap();
        let hi = CompetitionParams::new((p + dp).min(q), q, vec![0, 0], vec![2, 0]).unwrap();
        let a = run_competition(&lo, &field, t, false).unwrap();
        let b = run_competition(&hi, &field, t, false).unwrap();
        prop_assert!(a.state.total_yellow().is_subset(&b.state.total_yellow()));
        prop_assert!(b.state.total_blue().is_subset(&a.state.total_blue()));
    }

    #[test]
    fn cubes_partition_the_lattice(n in 1u32..8, x in -50i64..50, y in -50i64..50) {
        let grid = RenormGrid::new(2, n).unwrap();
        let site = [x, y];
        let k = grid.cube_of(&site);
        let mut owners = 0;
        for dx in -1..=1 {
            for dy in -1..=1 {
                owners += usize::from(grid.in_cube(&site, &[k[0] + dx, k[1] + dy]));
            }
        }
        prop_assert_eq!(owners, 1);
        prop_assert!(grid.in_large_cube(&site, &k));
        let outer = grid.boxes(&k).iter().filter(|b| b.is_outer(&site)).count();
        prop_assert_eq!(outer, 0);
    }

    #[test]
    fn opening_edges_only_whitens_boxes(seed in any::<u64>(), p in 0.2f64..0.8, dp in 0.0f64..0.2, which in 0usize..4) {
        let grid = RenormGrid::new(2, 3).unwrap();
        let field = HashedField::new(seed, BoxDomain::new(2, 7).unwrap());
        let b = &grid.boxes(&[0, 0])[which];
        let black_hi = box_is_black(&field, p + dp, b).unwrap();
        let black_lo = box_is_black(&field, p, b).unwrap();
        prop_assert!(!black_hi || black_lo);
    }

    #[test]
    fn edge_weights_are_pure(seed in any::<u64>(), x in -20i64..20, y in -20i64..20, axis in 0usize..2) {
        let w = HashedField::weight_of(seed, &[x, y], axis);
        prop_assert!((0.0..1.0).contains(&w));
        prop_assert_eq!(w.to_bits(), HashedField::weight_of(seed, &[x, y], axis).to_bits());
        let small = HashedField::new(seed, BoxDomain::new(2, 21).unwrap());
        let large = HashedField::new(seed, BoxDomain::new(2, 40).unwrap());
        let mut upper = vec![x, y];
        upper[axis] += 1;
        let e = EdgeId::between(&[x, y], &upper).unwrap();
        prop_assert_eq!(small.edge_weight(&e).unwrap(), large.edge_weight(&e).unwrap());
    }
}
