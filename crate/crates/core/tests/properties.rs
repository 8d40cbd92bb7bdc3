use autoseg_core::blend::{interpolate_patch, sample_rectangle};
use autoseg_core::corrupt::{apply, CorruptionKind, CorruptionParams};
use autoseg_core::io::{split_manifest, Manifest, ManifestEntry, Split};
use autoseg_core::metrics::{average_precision, ScoredSet};
use autoseg_core::planes::{extract_plane, iterate_stacks, PlaneAssembler};
use autoseg_core::{fuse_predictions, sphere_indicator, AnomalyMask, RngStream, SphereRegion, ViewAxis, Volume};
use proptest::prelude::*;
use rand::Rng;

fn random_volume(shape: &[usize], seed: u64) -> Volume<f32> {
    let n = shape.iter().product();
    let mut rng = RngStream::new(seed, 99).rng();
    Volume::new("v", shape.to_vec(), (0..n).map(|_| rng.random::<f32>()).collect(), (0.0, 1.0)).unwrap()
}

/// Average of precision@k over every positive, with tied scores all counted
/// as ranked above each other.
fn ap_oracle(scores: &[f64], labels: &[bool]) -> f64 {
    let p = labels.iter().filter(|&&l| l).count() as f64;
    let mut total = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        let above = scores.iter().filter(|&&s| s >= scores[i]).count() as f64;
        let tp = scores
            .iter()
            .zip(labels)
            .filter(|(&s, &l)| l && s >= scores[i])
            .count() as f64;
        total += tp / above;
    }
    total / p
}

fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![
        (4usize..20, 4usize..20).prop_map(|(a, b)| vec![a, b]),
        (4usize..14, 4usize..14, 4usize..14).prop_map(|(a, b, c)| vec![a, b, c]),
    ]
}

fn scored_set() -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1usize..200).prop_flat_map(|n| {
        (
            prop::collection::vec((0u8..12).prop_map(|q| q as f64 / 11.0), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_filter("needs a positive", |(_, l)| l.iter().any(|&b| b))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn blend_is_elementwise_affine(shape in shape_strategy(), seed in 0u64..1000, alpha in 0.05f32..0.95) {
        let a = random_volume(&shape, seed);
        let b = random_volume(&shape, seed + 1);
        let m: AnomalyMask<f32> = sample_rectangle(RngStream::new(seed, 2), &shape, (0.2, 0.8)).unwrap();
        let out = interpolate_patch(&a, &b, &m, alpha).unwrap();
        for i in 0..out.len() {
            let expected = if m.values()[i] > 0.0 { (1.0 - alpha) * a.data()[i] + alpha * b.data()[i] } else { a.data()[i] };
            prop_assert_eq!(out.data()[i].to_bits(), expected.to_bits());
        }
        let target = m.with_level(alpha).unwrap();
        prop_assert!(target.values().iter().all(|&v| v == 0.0 || v == alpha));
    }

    #[test]
    fn ap_matches_quadratic_oracle((scores, labels) in scored_set()) {
        let r = average_precision(&ScoredSet::new(scores.clone(), labels.clone()).unwrap()).unwrap();
        prop_assert!((r.ap - ap_oracle(&scores, &labels)).abs() <= 1e-12);
        prop_assert!(r.ap > 0.0 && r.ap <= 1.0 + 1e-15);
    }

    #[test]
    fn ap_ignores_order_and_monotone_maps((scores, labels) in scored_set(), seed in 0u64..100) {
        let base = average_precision(&ScoredSet::new(scores.clone(), labels.clone()).unwrap()).unwrap().ap;
        let mut idx: Vec<usize> = (0..scores.len()).collect();
        let mut rng = RngStream::new(seed, 0).rng();
        for i in (1..idx.len()).rev() {
            idx.swap(i, rng.random_range(0..=i));
        }
        let s2: Vec<f64> = idx.iter().map(|&i| scores[i]).collect();
        let l2: Vec<bool> = idx.iter().map(|&i| labels[i]).collect();
        let permuted = average_precision(&ScoredSet::new(s2, l2).unwrap()).unwrap().ap;
        prop_assert!((permuted - base).abs() <= 1e-12);
        let mapped: Vec<f64> = scores.iter().map(|s| (3.0 * s).exp() - 7.0).collect();
        let warped = average_precision(&ScoredSet::new(mapped, labels).unwrap()).unwrap().ap;
        prop_assert!((warped - base).abs() <= 1e-12);
    }

    #[test]
    fn sphere_indicator_matches_membership(cz in 0.0f64..16.0, cy in 0.0f64..16.0, cx in 0.0f64..16.0, r in 0.3f64..9.0) {
        let shape = [16usize, 16, 16];
        let region = SphereRegion::new(vec![cz, cy, cx], r).unwrap();
        let m: AnomalyMask<f64> = sphere_indicator(&region, &shape).unwrap();
        let mut i = 0;
        for z in 0..16 {
            for y in 0..16 {
                for x in 0..16 {
                    let d2 = (z as f64 + 0.5 - cz).powi(2) + (y as f64 + 0.5 - cy).powi(2) + (x as f64 + 0.5 - cx).powi(2);
                    prop_assert_eq!(m.values()[i] > 0.0, d2 <= r * r);
                    i += 1;
                }
            }
        }
    }

    #[test]
    fn corruptions_stay_inside_the_sphere(shape in shape_strategy(), seed in 0u64..1000, k in 0usize..8) {
        let kind = CorruptionKind::ALL[k];
        let v = random_volume(&shape, seed);
        let r = 0.3 * *shape.iter().min().unwrap() as f64;
        let center: Vec<f64> = shape.iter().map(|&n| n as f64 / 2.0).collect();
        let region = SphereRegion::new(center, r).unwrap();
        let (out, mask) = apply(kind, RngStream::new(seed, 5), &v, &region, &CorruptionParams::default()).unwrap();
        prop_assert_eq!(&mask, &sphere_indicator(&region, &shape).unwrap());
        for i in 0..v.len() {
            if mask.values()[i] == 0.0 {
                prop_assert_eq!(out.data()[i].to_bits(), v.data()[i].to_bits());
            } else {
                prop_assert!((0.0..=1.0).contains(&out.data()[i]));
            }
        }
    }

    #[test]
    fn stacks_reassemble(shape in shape_strategy(), seed in 0u64..1000, k in prop_oneof![Just(1usize), Just(3), Just(5)]) {
        let v = random_volume(&shape, seed);
        let axes = ViewAxis::available(shape.len());
        let mut count = 0;
        for &axis in axes {
            let mut asm = PlaneAssembler::new(&shape, axis).unwrap();
            for s in iterate_stacks(&v, k, &[axis]).unwrap() {
                let direct = extract_plane(&v, axis, s.index).unwrap();
                prop_assert_eq!(s.center(), direct.as_slice());
                asm.write(s.index, s.center()).unwrap();
                count += 1;
            }
            let rebuilt = asm.finish("v").unwrap();
            prop_assert_eq!(rebuilt.data(), v.data());
        }
        let expected: usize = if shape.len() == 3 { shape.iter().sum() } else { 1 };
        prop_assert_eq!(count, expected);
    }

    #[test]
    fn fusion_is_order_invariant(seed in 0u64..1000) {
        let shape = [5usize, 6, 7];
        let p: Vec<_> = (0..3).map(|i| random_volume(&shape, seed * 3 + i)).collect();
        let a = fuse_predictions(&[p[0].clone(), p[1].clone(), p[2].clone()]).unwrap();
        let b = fuse_predictions(&[p[2].clone(), p[0].clone(), p[1].clone()]).unwrap();
        prop_assert_eq!(a.data(), b.data());
        for i in 0..a.len() {
            let mean = (p[0].data()[i] as f64 + p[1].data()[i] as f64 + p[2].data()[i] as f64) / 3.0;
            prop_assert_eq!(a.data()[i], mean as f32);
        }
    }

    #[test]
    fn split_is_a_partition(n in 20usize..300, seed in 0u64..50) {
        let mut m = Manifest::new(0);
        m.entries = (0..n).map(|i| ManifestEntry {
            id: format!("e{i}"),
            path: format!("e{i}.f32"),
            shape: vec![2, 2],
            dtype: "float32".into(),
            group: String::new(),
            split: None,
        }).collect();
        let s = split_manifest(&m, 0.6, 0.05, RngStream::new(seed, 0)).unwrap();
        let (tr, va, te) = s.split_counts();
        prop_assert_eq!(tr + va + te, n);
        let all = (0.6 * n as f64).round_ties_even() as usize;
        prop_assert_eq!(te, n - all);
        prop_assert_eq!(va, (0.05 * all as f64).round_ties_even() as usize);
        prop_assert!(s.entries.iter().all(|e| matches!(e.split, Some(Split::Train | Split::Val | Split::Test))));
    }

    #[test]
    fn rng_streams_are_reproducible(seed in any::<u64>(), tag in any::<u64>()) {
        let a: u64 = RngStream::new(seed, 0).fork(tag).rng().random();
        let b: u64 = RngStream::new(seed, 0).fork(tag).rng().random();
        prop_assert_eq!(a, b);
        let c: u64 = RngStream::new(seed, 0).child(tag).rng().random();
        let d: u64 = RngStream::new(seed, 0).child(tag).rng().random();
        prop_assert_eq!(c, d);
    }
}
