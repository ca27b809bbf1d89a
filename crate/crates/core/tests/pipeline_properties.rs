mod common;

use std::collections::BTreeMap;

use epec::analysis::{mass_polarization, MassPolarizationInput, Party, SurveyResponse};
use epec::model::{validate, AggregationLevel, UnitKey};
use epec::pipeline::{curate_records, TopN};
use epec::synth::{sample_n_candidate, sample_sweep_cell};
use epec::{build_matrix, curate, pearson, reaggregate, CurationConfig, SyntheticSpec, VoteRecord};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn records_strategy() -> impl Strategy<Value = Vec<VoteRecord>> {
    prop::collection::vec((0usize..3, 0usize..3, 0usize..4, 0usize..6, 0i64..1000), 1..80).prop_map(|cells| {
        let mut out: Vec<VoteRecord> = cells
            .into_iter()
            .map(|(g, d, s, c, v)| VoteRecord::new(format!("G{g}|D{d}|S{s}"), format!("cand{c}"), v + 1))
            .collect();
        out.push(VoteRecord::new("G0|D0|S0", "cand0", 1));
        out.push(VoteRecord::new("G0|D0|S0", "cand1", 1));
        epec::model::assign_ranks_and_rates(&mut out);
        out
    })
}

fn level_strategy() -> impl Strategy<Value = AggregationLevel> {
    prop::sample::select(vec![
        AggregationLevel::Unit,
        AggregationLevel::Prefix(0),
        AggregationLevel::Prefix(1),
        AggregationLevel::Prefix(2),
        AggregationLevel::Prefix(3),
    ])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn matrix_ignores_record_order(records in records_strategy(), seed in any::<u64>(), level in level_strategy()) {
        let mut shuffled = records.clone();
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let key = UnitKey::new(level);
        prop_assert_eq!(build_matrix(&records, &key).unwrap(), build_matrix(&shuffled, &key).unwrap());
    }

    #[test]
    fn every_level_sums_to_national_totals(records in records_strategy(), level in level_strategy()) {
        let m = build_matrix(&records, &UnitKey::new(level)).unwrap();
        let mut want: BTreeMap<String, i64> = BTreeMap::new();
        for r in &records {
            *want.entry(r.candidate.clone()).or_default() += r.value;
        }
        for (i, c) in m.candidates().iter().enumerate() {
            prop_assert_eq!(m.candidate_total(i), want[c] as f64);
        }
    }

    #[test]
    fn matrix_record_round_trip(records in records_strategy()) {
        let key = UnitKey::default();
        let m = build_matrix(&records, &key).unwrap();
        let back = build_matrix(&m.to_records().unwrap(), &key).unwrap();
        prop_assert_eq!(&m, &back);
        prop_assert!(validate(&m.to_records().unwrap()).is_clean());
    }

    #[test]
    fn curation_conserves_votes(records in records_strategy(), n in 2usize..7) {
        let curated = curate_records(&records, &CurationConfig::top(n)).unwrap();
        let before: i64 = records.iter().map(|r| r.value).sum();
        let after: i64 = curated.records.iter().map(|r| r.value).sum();
        prop_assert_eq!(before, after);
        let pool: i64 = curated.records.iter().filter(|r| r.candidate == "other").map(|r| r.value).sum();
        let pooled_before: i64 = records.iter().filter(|r| curated.pooled.contains(&r.candidate)).map(|r| r.value).sum();
        prop_assert_eq!(pool, pooled_before);
    }

    #[test]
    fn top_n_sets_are_nested(records in records_strategy(), n in 2usize..6) {
        let small = curate(&records, &CurationConfig::top(n)).unwrap();
        let large = curate(&records, &CurationConfig::top(n + 1)).unwrap();
        for c in &small.retained {
            prop_assert!(large.retained.contains(c));
        }
        prop_assert!(small.coverage <= large.coverage);
    }

    #[test]
    fn reaggregation_keeps_national_shares(records in records_strategy(), to in 0usize..3) {
        let m = build_matrix(&records, &UnitKey::default()).unwrap();
        let coarse = reaggregate(&m, AggregationLevel::Unit, AggregationLevel::Prefix(to), &Default::default()).unwrap();
        for (a, b) in m.overall_share().iter().zip(coarse.overall_share()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        let direct = build_matrix(&records, &UnitKey::new(AggregationLevel::Prefix(to))).unwrap();
        prop_assert_eq!(coarse, direct);
    }

    #[test]
    fn synthetic_matrices_are_deterministic_and_valid(
        n in 2usize..6,
        leader in prop::sample::select(vec![0.2, 0.5, 0.66, 0.75, 0.8333, 1.0]),
        sigma in prop::sample::select(vec![0.0, 0.0025, 0.05, 0.10, 0.25]),
        seed in any::<u64>(),
    ) {
        let a = sample_sweep_cell(n, leader, sigma, 40, seed).unwrap();
        let b = sample_sweep_cell(n, leader, sigma, 40, seed).unwrap();
        prop_assert_eq!(&a, &b);
        for k in 0..a.n_units() {
            prop_assert!((a.unit_total(k) - 100.0).abs() < 1e-9);
        }
        let ints = epec::synth::apportion_integer_votes(&a).unwrap();
        prop_assert!(validate(&ints.to_records().unwrap()).is_clean());
    }

    #[test]
    fn pearson_is_symmetric_and_affine_invariant(
        pairs in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..50),
        slope in 0.01f64..100.0,
        shift in -1000.0f64..1000.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        if let Ok(r) = pearson(&x, &y) {
            prop_assert!((r - pearson(&y, &x).unwrap()).abs() < 1e-12);
            let mapped: Vec<f64> = x.iter().map(|v| slope * v + shift).collect();
            if let Ok(r2) = pearson(&mapped, &y) {
                prop_assert!((r - r2).abs() < 1e-9, "{} vs {}", r, r2);
            }
        }
    }

    #[test]
    fn mass_polarization_ignores_weight_scale(
        dem in prop::collection::vec((1u8..=3, 0.1f64..5.0), 1..10),
        rep in prop::collection::vec((1u8..=3, 0.1f64..5.0), 1..10),
        scale_dem in 0.01f64..100.0,
        scale_rep in 0.01f64..100.0,
    ) {
        let build = |sd: f64, sr: f64| {
            let mut responses = Vec::new();
            for &(s, w) in &dem {
                responses.push(SurveyResponse { region: "X".into(), year: 2020, party: Party::Democrat, strength: s, weight: w * sd });
            }
            for &(s, w) in &rep {
                responses.push(SurveyResponse { region: "X".into(), year: 2020, party: Party::Republican, strength: s, weight: w * sr });
            }
            mass_polarization(&MassPolarizationInput { responses }, "X", 2020).unwrap()
        };
        let (a, b) = (build(1.0, 1.0), build(scale_dem, scale_rep));
        prop_assert!((a.pp - b.pp).abs() < 1e-12);
        prop_assert!((a.ideology_dem - b.ideology_dem).abs() < 1e-12);
    }
}

#[test]
fn chile_style_ids_resum_to_region_totals() {
    let records = vec![
        VoteRecord::new("R01|PROV|COMM|ST7", "Ana", 10),
        VoteRecord::new("R01|PROV|COMM|ST8", "Ana", 5),
        VoteRecord::new("R01|PROV2|COMM3|ST1", "Ana", 7),
        VoteRecord::new("R01|PROV|COMM|ST7", "Beto", 3),
        VoteRecord::new("R02|PROV|COMM|ST7", "Ana", 2),
        VoteRecord::new("R02|PROV|COMM|ST7", "Beto", 9),
    ];
    let m = build_matrix(&records, &UnitKey::new(AggregationLevel::Prefix(1))).unwrap();
    assert_eq!(m.units(), ["R01", "R02"]);
    assert_eq!(m.unit_votes(0), [22.0, 3.0]);
    assert_eq!(m.unit_votes(1), [2.0, 9.0]);
}

#[test]
fn n_candidate_sampler_agrees_with_two_candidate_sampler() {
    for seed in 0..20 {
        let spec = SyntheticSpec::two_candidate(0.6, 0.1, 50, seed);
        let two = epec::sample_two_candidate(&spec).unwrap();
        let general = sample_n_candidate(2, &spec).unwrap();
        // The general sampler does not floor to the 0.01 grid.
        for k in 0..two.n_units() {
            assert!((two.votes(k, 0) - general.votes(k, 0)).abs() < 1.0);
        }
    }
}

#[test]
fn top_n_beyond_candidate_count_keeps_everything() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let records = common::hierarchical_records(&mut rng, 3, 2, 2, &[1.0, 0.5, 0.2]);
    let c = curate(&records, &CurationConfig { top_n: TopN::Count(9), ..Default::default() }).unwrap();
    assert_eq!(c.retained.len(), 3);
    assert!(c.pooled.is_empty());
    assert_eq!(c.warnings.len(), 1);
}
