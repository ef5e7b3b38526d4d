mod common;

use common::*;
use proptest::prelude::*;
use r1dl::metrics::{match_atoms, pearson, spatial_overlap_rate, ReferenceSeries, SpatialPattern, DEFAULT_THRESHOLD};
use r1dl::Error;

fn pattern(values: &[f64]) -> SpatialPattern {
    SpatialPattern::new(values.to_vec())
}

fn sparse_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), -2.0..2.0f64], 12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sor_matches_counting_oracle(a in sparse_values(), b in sparse_values()) {
        match sor_oracle(&a, &b, DEFAULT_THRESHOLD) {
            Some(expect) => {
                let got = spatial_overlap_rate(&pattern(&a), &pattern(&b)).unwrap();
                prop_assert_eq!(got, expect);
                prop_assert!((0.0..=1.0).contains(&got));
                let scaled: Vec<f64> = a.iter().map(|x| x * 3.5).collect();
                prop_assert_eq!(spatial_overlap_rate(&pattern(&scaled), &pattern(&b)).unwrap(), got);
            }
            None => prop_assert!(matches!(
                spatial_overlap_rate(&pattern(&a), &pattern(&b)),
                Err(Error::EmptyReference)
            )),
        }
    }

    #[test]
    fn pearson_matches_formula(x in prop::collection::vec(-10.0..10.0f64, 3..20), seed in any::<u64>()) {
        let mut g = rng(seed);
        let y: Vec<f64> = x.iter().map(|_| rand::Rng::random_range(&mut g, -10.0..10.0)).collect();
        let got = pearson(&x, &y).unwrap();
        prop_assert!((got - pearson_oracle(&x, &y)).abs() <= 1e-12);
        let affine: Vec<f64> = x.iter().map(|v| 2.5 * v + 7.0).collect();
        prop_assert!((pearson(&affine, &y).unwrap() - got).abs() <= 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        prop_assert!((pearson(&neg, &y).unwrap() + got).abs() <= 1e-12);
    }

    #[test]
    fn match_atoms_matches_exhaustive_scan(seed in any::<u64>(), k in 1usize..6, m in 1usize..4) {
        let mut g = rng(seed);
        let d = random_matrix(&mut g, k, 10);
        let refs = random_matrix(&mut g, m, 10);
        let patterns: Vec<Vec<f64>> = d.row_iter().map(<[f64]>::to_vec).collect();
        let report = match_atoms(&patterns, &ReferenceSeries::from_matrix(&refs).unwrap()).unwrap();
        for (j, r) in refs.row_iter().enumerate() {
            let mut best = (0, f64::NEG_INFINITY);
            for (i, p) in patterns.iter().enumerate() {
                let c = pearson_oracle(p, r);
                if c > best.1 {
                    best = (i, c);
                }
            }
            prop_assert_eq!(report.matches[j].atom, best.0);
            prop_assert!((report.matches[j].correlation - best.1).abs() <= 1e-12);
        }
        let rescaled: Vec<Vec<f64>> = patterns
            .iter()
            .enumerate()
            .map(|(i, p)| p.iter().map(|x| x * (i as f64 + 0.5)).collect())
            .collect();
        let again = match_atoms(&rescaled, &ReferenceSeries::from_matrix(&refs).unwrap()).unwrap();
        let atoms = |r: &r1dl::metrics::MatchReport| r.matches.iter().map(|m| m.atom).collect::<Vec<_>>();
        prop_assert_eq!(atoms(&again), atoms(&report));
    }
}

#[test]
fn hand_counted_overlap() {
    let p2 = [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
    let p1 = [0.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
    assert_eq!(spatial_overlap_rate(&pattern(&p1), &pattern(&p2)).unwrap(), 0.75);
    assert_eq!(spatial_overlap_rate(&pattern(&p2), &pattern(&p2)).unwrap(), 1.0);
}

#[test]
fn pearson_fixture() {
    let x = [1.0, 2.0, 3.0, 4.0];
    let y = [2.0, 4.0, 6.0, 9.0];
    assert!((pearson(&x, &y).unwrap() - pearson_oracle(&x, &y)).abs() < 1e-12);
    assert!(matches!(pearson(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::ZeroVariance)));
}

#[test]
fn references_equal_to_atoms_match_themselves() {
    let d = random_matrix(&mut rng(8), 4, 15);
    let patterns: Vec<Vec<f64>> = d.row_iter().map(<[f64]>::to_vec).collect();
    let report = match_atoms(&patterns, &ReferenceSeries::from_matrix(&d).unwrap()).unwrap();
    for (j, m) in report.matches.iter().enumerate() {
        assert_eq!(m.atom, j);
        assert!((m.correlation - 1.0).abs() < 1e-12);
    }
}
