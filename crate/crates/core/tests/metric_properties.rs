mod common;

use epec::metrics::{dispersion_all, esteban_ray};
use epec::{
    effective_number_of_candidates, margin_of_victory, polarization_report, reynal_querol, EstebanRayParams,
};
use proptest::prelude::*;

const TOL: f64 = 1e-9;

fn rows_strategy() -> impl Strategy<Value = Vec<Vec<f64>>> {
    (2usize..=6, 2usize..=30).prop_flat_map(|(n, m)| {
        prop::collection::vec(prop::collection::vec((0u32..2000).prop_map(f64::from), n), m)
            .prop_filter("needs votes", |rows| rows.iter().flatten().sum::<f64>() > 0.0)
    })
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOL
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn antagonism_stays_in_range(rows in rows_strategy()) {
        let m = common::matrix(rows);
        let n = m.n_candidates() as f64;
        let report = polarization_report(&m);
        // Within-A is only bounded by 1/N when units are balanced; Between-A always is.
        for c in &report.per_candidate {
            prop_assert!(c.within >= -TOL && c.within <= 1.0 + TOL);
            prop_assert!(c.between >= -TOL && c.between <= 1.0 / n + TOL);
        }
        prop_assert!(report.ec >= -TOL && report.ec <= 1.0 + TOL);
        prop_assert!(report.ep >= -TOL);
    }

    #[test]
    fn tied_two_candidate_elections_sum_to_one(a in prop::collection::vec(1u32..1000, 2..40), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut b = a.clone();
        b.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let rows: Vec<Vec<f64>> = a.iter().zip(&b).map(|(&x, &y)| vec![x as f64, y as f64]).collect();
        let report = polarization_report(&common::matrix(rows));
        for c in &report.per_candidate {
            prop_assert!(close(c.total, 0.5), "A = {}", c.total);
        }
        prop_assert!(close(report.ep + report.ec, 1.0));
    }

    #[test]
    fn unanimous_elections_score_zero(units in 2usize..20, n in 2usize..6, winner in 0usize..6, votes in 1u32..500) {
        let winner = winner % n;
        let rows: Vec<Vec<f64>> = (0..units)
            .map(|k| (0..n).map(|i| if i == winner { (votes as usize + k) as f64 } else { 0.0 }).collect())
            .collect();
        let report = polarization_report(&common::matrix(rows));
        prop_assert_eq!(report.ep, 0.0);
        prop_assert_eq!(report.ec, 0.0);
    }

    #[test]
    fn metrics_are_scale_invariant(rows in rows_strategy(), factor in 1u32..50) {
        let m = common::matrix(rows.clone());
        let scaled = common::matrix(rows.iter().map(|r| r.iter().map(|v| v * factor as f64).collect()).collect());
        let (a, b) = (polarization_report(&m), polarization_report(&scaled));
        prop_assert!(close(a.ep, b.ep) && close(a.ec, b.ec));
        for alpha in [0.25, 1.0] {
            let p = EstebanRayParams::new(alpha).unwrap();
            prop_assert!(close(esteban_ray(&m, p).aggregate, esteban_ray(&scaled, p).aggregate));
        }
        prop_assert!(close(reynal_querol(&m), reynal_querol(&scaled)));
        prop_assert!(close(effective_number_of_candidates(&m), effective_number_of_candidates(&scaled)));
    }

    #[test]
    fn antagonism_is_subdivision_invariant(rows in rows_strategy()) {
        let m = common::matrix(rows.clone());
        let halves: Vec<Vec<f64>> = rows
            .iter()
            .flat_map(|r| {
                let h: Vec<f64> = r.iter().map(|v| v / 2.0).collect();
                [h.clone(), h]
            })
            .collect();
        let split = common::matrix(halves);
        let (a, b) = (polarization_report(&m), polarization_report(&split));
        for (x, y) in a.per_candidate.iter().zip(&b.per_candidate) {
            prop_assert!(close(x.within, y.within) && close(x.between, y.between));
        }
        prop_assert!(close(a.ep, b.ep) && close(a.ec, b.ec));
        // Esteban-Ray weights unit votes superlinearly, so halving every unit
        // rescales it by exactly 2^-(1+alpha).
        for alpha in [0.25, 1.0] {
            let p = EstebanRayParams::new(alpha).unwrap();
            let want = esteban_ray(&m, p).aggregate * 2f64.powf(-(1.0 + alpha));
            prop_assert!(close(esteban_ray(&split, p).aggregate, want));
        }
    }

    #[test]
    fn metrics_are_permutation_invariant(rows in rows_strategy(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let n = rows[0].len();
        let mut unit_order: Vec<usize> = (0..rows.len()).collect();
        let mut cand_order: Vec<usize> = (0..n).collect();
        unit_order.shuffle(&mut rng);
        cand_order.shuffle(&mut rng);
        let permuted: Vec<Vec<f64>> = unit_order.iter().map(|&k| cand_order.iter().map(|&i| rows[k][i]).collect()).collect();
        let (m, p) = (common::matrix(rows), common::matrix(permuted));
        let (a, b) = (polarization_report(&m), polarization_report(&p));
        prop_assert!(close(a.ep, b.ep) && close(a.ec, b.ec));
        for (new_i, &old_i) in cand_order.iter().enumerate() {
            prop_assert!(close(a.per_candidate[old_i].total, b.per_candidate[new_i].total));
        }
        prop_assert!(close(margin_of_victory(&m), margin_of_victory(&p)));
        prop_assert!(close(reynal_querol(&m), reynal_querol(&p)));
        prop_assert!(close(effective_number_of_candidates(&m), effective_number_of_candidates(&p)));
        let er = EstebanRayParams::new(1.0).unwrap();
        prop_assert!(close(esteban_ray(&m, er).aggregate, esteban_ray(&p, er).aggregate));
        if let (Ok(x), Ok(y)) = (dispersion_all(&m), dispersion_all(&p)) {
            prop_assert!(close(x.aggregate, y.aggregate));
        }
    }

    /// Stretching every unit's deviation from the national share by lambda > 1
    /// (equal unit sizes, so national shares stay put) never lowers EP.
    #[test]
    fn spreading_unit_shares_raises_ep(
        base in prop::collection::vec(0.2f64..0.8, 4..30),
        lambda in 1.0f64..2.5,
    ) {
        let mean = base.iter().sum::<f64>() / base.len() as f64;
        let max_dev = base.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max);
        let cap = (mean.min(1.0 - mean) / max_dev.max(1e-12)).max(1.0);
        let lambda = lambda.min(cap);
        let rows_of = |l: f64| -> Vec<Vec<f64>> {
            base.iter().map(|r| { let s = (mean + l * (r - mean)).clamp(0.0, 1.0); vec![1000.0 * s, 1000.0 * (1.0 - s)] }).collect()
        };
        let narrow = polarization_report(&common::matrix(rows_of(1.0)));
        let wide = polarization_report(&common::matrix(rows_of(lambda)));
        prop_assert!(wide.ep >= narrow.ep - TOL, "{} < {}", wide.ep, narrow.ep);
    }
}
