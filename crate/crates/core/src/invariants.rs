// SPDX-License-Identifier: Apache-2.0

//! Property tests over the public API.

use std::collections::HashMap;

use proptest::prelude::*;

use crate::audit::audit_fap;
use crate::baselines::{krr_calibrate, krr_perturb, KrrParams};
use crate::client::{fap_perturb, FapMode};
use crate::fagms::{frequencies, median};
use crate::hashing::{fwht, hadamard_entry, hadamard_sign};
use crate::multiway::{true_chain_join, PerturbedReport2D};
use crate::seeding::client_rng;
use crate::server::{read_snapshot, write_snapshot};
use crate::wire::{read_reports, read_reports_2d, write_reports, write_reports_2d};
use crate::*;

fn width() -> impl Strategy<Value = usize> {
    (1u32..=8).prop_map(|b| 1usize << b)
}

fn epsilon() -> impl Strategy<Value = f64> {
    prop_oneof![0.05f64..10.0, Just(f64::INFINITY)]
}

fn reports_for(values: &[u64], p: &SketchParams, f: &HashFamily, stream: u64) -> Vec<PerturbedReport> {
    values
        .iter()
        .enumerate()
        .map(|(i, &d)| client_perturb(d, p, f, &mut client_rng(stream, i as u64)))
        .collect()
}

fn raw(reports: &[PerturbedReport], p: &SketchParams, f: &HashFamily) -> PrivateSketch {
    let mut s = PrivateSketch::new(*p, f.clone()).unwrap();
    s.extend(reports).unwrap();
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hash_outputs_in_range(k in 1usize..6, m in width(), seed: u64, values in prop::collection::vec(any::<u64>(), 1..50)) {
        let f = HashFamily::new(k, m, seed).unwrap();
        let g = HashFamily::new(k, m, seed).unwrap();
        for &d in &values {
            for (r, s) in f.rows().iter().zip(g.rows()) {
                prop_assert!(r.eval_h(d) < m);
                prop_assert!(r.eval_xi(d) == 1 || r.eval_xi(d) == -1);
                prop_assert_eq!((r.eval_h(d), r.eval_xi(d)), (s.eval_h(d), s.eval_xi(d)));
            }
        }
    }

    #[test]
    fn hadamard_symmetric_and_orthogonal(m in width(), a in 0usize..256, b in 0usize..256) {
        let (a, b) = (a % m, b % m);
        prop_assert_eq!(hadamard_entry(a, b, m).unwrap(), hadamard_entry(b, a, m).unwrap());
        let dot: i64 = (0..m).map(|x| (hadamard_sign(a, x) * hadamard_sign(b, x)) as i64).sum();
        prop_assert_eq!(dot, if a == b { m as i64 } else { 0 });
    }

    #[test]
    fn fwht_twice_scales_by_m(m in width(), seed: u64) {
        let mut rng = client_rng(seed, 0);
        let v: Vec<i64> = (0..m).map(|_| (rand::RngCore::next_u32(&mut rng) % 201) as i64 - 100).collect();
        let mut w = v.clone();
        fwht(&mut w);
        fwht(&mut w);
        prop_assert_eq!(w, v.iter().map(|x| x * m as i64).collect::<Vec<_>>());
    }

    #[test]
    fn reports_are_well_formed(k in 1usize..20, m in width(), eps in epsilon(), seed: u64, d: u64) {
        let p = SketchParams::new(k, m, eps, seed).unwrap();
        let f = derive_family(&p).unwrap();
        for i in 0..20u64 {
            let r = client_perturb(d, &p, &f, &mut client_rng(seed, i));
            prop_assert!(r.y == 1 || r.y == -1);
            prop_assert!((r.j as usize) < k && (r.l as usize) < m);
            if eps.is_infinite() {
                let row = f.row(r.j as usize);
                prop_assert_eq!(r.y, hadamard_sign(row.eval_h(d), r.l as usize) * row.eval_xi(d));
            }
        }
    }

    #[test]
    fn non_target_report_ignores_value(m in width(), seed: u64, d1: u64, d2: u64, stream: u64) {
        let p = SketchParams::new(3, m, 1.0, seed).unwrap();
        let f = derive_family(&p).unwrap();
        let fi = SortedIdSet::default();
        let r1 = fap_perturb(d1, FapMode::High, &fi, &p, &f, &mut client_rng(stream, 0));
        let r2 = fap_perturb(d2, FapMode::High, &fi, &p, &f, &mut client_rng(stream, 0));
        prop_assert_eq!(r1, r2);
    }

    #[test]
    fn merge_is_exact_on_any_partition(
        values in prop::collection::vec(0u64..40, 0..300),
        cuts in prop::collection::vec(any::<prop::sample::Index>(), 2),
        eps in epsilon(),
        seed: u64,
    ) {
        let p = SketchParams::new(4, 16, eps, seed).unwrap();
        let f = derive_family(&p).unwrap();
        let reps = reports_for(&values, &p, &f, seed);
        let mut idx: Vec<usize> = cuts.iter().map(|c| c.index(reps.len() + 1)).collect();
        idx.sort();
        let (x, rest) = reps.split_at(idx[0]);
        let (y, z) = rest.split_at(idx[1] - idx[0]);
        let (sx, sy, sz) = (raw(x, &p, &f), raw(y, &p, &f), raw(z, &p, &f));
        let left = sx.merge(&sy).unwrap().merge(&sz).unwrap();
        let right = sx.merge(&sy.merge(&sz).unwrap()).unwrap();
        prop_assert_eq!(&left, &right);
        prop_assert_eq!(sx.merge(&sy).unwrap(), sy.merge(&sx).unwrap());
        prop_assert_eq!(&left, &raw(&reps, &p, &f));
        prop_assert_eq!(left.n_reports(), values.len() as u64);
    }

    #[test]
    fn wire_round_trip(raw_reports in prop::collection::vec((prop::bool::ANY, any::<u16>(), any::<u32>(), any::<u32>()), 0..50)) {
        let one: Vec<_> = raw_reports.iter().map(|&(s, j, l, _)| PerturbedReport { y: if s { 1 } else { -1 }, j, l }).collect();
        let two: Vec<_> = raw_reports.iter().map(|&(s, j, l1, l2)| PerturbedReport2D { y: if s { 1 } else { -1 }, j, l1, l2 }).collect();
        let mut buf = Vec::new();
        write_reports(&mut buf, &one).unwrap();
        prop_assert_eq!(buf.len(), 7 * one.len());
        prop_assert_eq!(read_reports(&buf[..]).unwrap(), one);
        let mut buf = Vec::new();
        write_reports_2d(&mut buf, &two).unwrap();
        prop_assert_eq!(buf.len(), 11 * two.len());
        prop_assert_eq!(read_reports_2d(&buf[..]).unwrap(), two);
    }

    #[test]
    fn snapshot_round_trip(values in prop::collection::vec(0u64..1000, 0..200), eps in epsilon(), seed: u64, restore: bool) {
        let p = SketchParams::new(3, 32, eps, seed).unwrap();
        let f = derive_family(&p).unwrap();
        let mut s = raw(&reports_for(&values, &p, &f, 1), &p, &f);
        if restore {
            s.restore().unwrap();
        }
        let mut buf = Vec::new();
        write_snapshot(&mut buf, &s).unwrap();
        prop_assert_eq!(read_snapshot(&buf[..]).unwrap(), s);
    }

    #[test]
    fn median_within_range(mut v in prop::collection::vec(-1e9f64..1e9, 1..40)) {
        let (lo, hi) = v.iter().fold((f64::MAX, f64::MIN), |(a, b), &x| (a.min(x), b.max(x)));
        let mut rev: Vec<f64> = v.iter().rev().copied().collect();
        let med = median(&mut v);
        prop_assert!(lo <= med && med <= hi);
        prop_assert_eq!(med, median(&mut rev));
    }

    #[test]
    fn join_size_matches_pair_count(a in prop::collection::vec(0u64..20, 0..80), b in prop::collection::vec(0u64..20, 0..80)) {
        let pairs = a.iter().flat_map(|x| b.iter().filter(move |y| *y == x)).count() as u128;
        prop_assert_eq!(true_join_size(&a, &b), pairs);
        prop_assert_eq!(true_join_size(&b, &a), pairs);
    }

    #[test]
    fn chain_join_matches_nested_loops(
        t1 in prop::collection::vec(0u64..6, 0..30),
        t2 in prop::collection::vec((0u64..6, 0u64..6), 0..30),
        t3 in prop::collection::vec(0u64..6, 0..30),
    ) {
        let mut count = 0u128;
        for &x in &t1 {
            for &(a, b) in &t2 {
                for &y in &t3 {
                    count += (x == a && b == y) as u128;
                }
            }
        }
        prop_assert_eq!(true_chain_join(&t1, &t2, &t3), count);
    }

    #[test]
    fn fagms_sketch_is_linear(a in prop::collection::vec(any::<u64>(), 0..60), b in prop::collection::vec(any::<u64>(), 0..60), seed: u64) {
        let f = HashFamily::new(5, 64, seed).unwrap();
        let mut sa = FagmsSketch::from_values(f.clone(), &a);
        let sb = FagmsSketch::from_values(f.clone(), &b);
        sa.merge(&sb).unwrap();
        let both: Vec<u64> = a.iter().chain(&b).copied().collect();
        let whole = FagmsSketch::from_values(f, &both);
        prop_assert_eq!(sa.counters(), whole.counters());
    }

    #[test]
    fn krr_calibration_sums_to_n(values in prop::collection::vec(0u64..30, 1..300), eps in 0.1f64..8.0, seed: u64) {
        let p = KrrParams::new(eps, 30).unwrap();
        let reports: Vec<u64> = values.iter().enumerate().map(|(i, &d)| krr_perturb(d, &p, &mut client_rng(seed, i as u64)).unwrap()).collect();
        let total: f64 = krr_calibrate(&reports, &p).unwrap().iter().sum();
        prop_assert!((total - values.len() as f64).abs() < 1e-6 * values.len() as f64);
    }

    #[test]
    fn frequency_table_counts(values in prop::collection::vec(0u64..10, 0..100)) {
        let freq = frequencies(&values);
        let mut brute: HashMap<u64, u64> = HashMap::new();
        for v in &values {
            *brute.entry(*v).or_default() += 1;
        }
        prop_assert_eq!(freq, brute);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn privacy_holds_for_small_sketches(k in 1usize..3, m in prop::sample::select(vec![2usize, 4]), eps in 0.01f64..12.0) {
        let audit = audit_fap(k, m, eps).unwrap();
        prop_assert!(audit.holds);
        prop_assert!(audit.max_ratio <= eps.exp());
    }
}
