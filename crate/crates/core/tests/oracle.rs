//! Library scores against deliberately naive reimplementations written
//! straight from the definitions.

use mcrank_core::ranking::{
    ar_scores, gd_scores, hybrid_scores, kd_scores, mr_scores, pg_scores, pr_scores,
};
use mcrank_core::{CandidateSet, MethodSpec};
use proptest::prelude::*;

#[path = "common/naive.rs"]
mod naive;

fn table2_rows() -> Vec<Vec<f64>> {
    vec![
        vec![5.0, 5.0, 5.0],
        vec![4.0, 4.0, 4.0],
        vec![3.0, 3.0, 3.0],
        vec![4.0, 3.0, 3.0],
        vec![4.0, 5.0, 3.0],
    ]
}

fn set(rows: &[Vec<f64>]) -> CandidateSet {
    CandidateSet::from_rows(
        "u",
        rows.iter()
            .enumerate()
            .map(|(i, r)| (format!("T{}", i + 1), r.clone())),
    )
    .unwrap()
}

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
}

/// The worked-example fixtures used across the crate, reproduced by the oracle.
#[test]
fn oracle_reproduces_table2_fixtures() {
    let rows = table2_rows();
    assert_eq!(
        naive::count(&rows, naive::dominates),
        vec![4.0, 2.0, 0.0, 1.0, 2.0]
    );
    assert_eq!(
        naive::count(&rows, |a, b| naive::k_dominates(a, b, 1.0)),
        vec![4.0, 3.0, 0.0, 1.0, 3.0]
    );
    let ar = naive::ar(&rows);
    assert!(close(&ar, &[3.5, 8.0, 13.5, 11.5, 8.5]));
    assert!(close(&naive::mr(&rows), &[1.0, 2.0, 4.0, 3.0, 1.5]));
    assert!(close(&naive::gd(&rows), &[17.0, 6.0, 0.0, 1.0, 6.0]));
    let pg = naive::pg(&rows);
    assert!(close(&pg, &[6.0, 0.0, -6.0, -4.0, 0.0]));
    let pr = naive::count(&rows, naive::dominates);
    let hybrid_ar: Vec<f64> = pr
        .iter()
        .zip(naive::normalized(&ar, false))
        .map(|(a, b)| a + b)
        .collect();
    assert!(close(&hybrid_ar, &[4.8, 2.6, 0.0, 1.2, 2.4]));
    let hybrid_pg: Vec<f64> = pr
        .iter()
        .zip(naive::normalized(&pg, true))
        .map(|(a, b)| a + b)
        .collect();
    assert!(close(&hybrid_pg, &[4.8, 2.5, 0.0, 1.2, 2.5]));
}

fn rows_strategy(max_n: usize, max_m: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    (1..=max_n, 1..=max_m).prop_flat_map(|(n, m)| {
        proptest::collection::vec(
            proptest::collection::vec((1u8..=5).prop_map(f64::from), m),
            n,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn scores_match_naive(rows in rows_strategy(15, 5), k in prop::sample::select(vec![0.0, 0.25, 0.5, 0.75, 1.0])) {
        let c = set(&rows);
        prop_assert_eq!(pr_scores(&c).scores, naive::count(&rows, naive::dominates));
        prop_assert_eq!(kd_scores(&c, k).unwrap().scores, naive::count(&rows, |a, b| naive::k_dominates(a, b, k)));
        prop_assert!(close(&ar_scores(&c).scores, &naive::ar(&rows)));
        prop_assert!(close(&mr_scores(&c).scores, &naive::mr(&rows)));
        prop_assert!(close(&gd_scores(&c).scores, &naive::gd(&rows)));
        prop_assert!(close(&pg_scores(&c).scores, &naive::pg(&rows)));
    }

    #[test]
    fn hybrid_matches_naive(rows in rows_strategy(15, 5)) {
        let c = set(&rows);
        let pr = naive::count(&rows, naive::dominates);
        for (sub, naive_sub, higher) in [
            (MethodSpec::Ar, naive::ar(&rows), false),
            (MethodSpec::Mr, naive::mr(&rows), false),
            (MethodSpec::Gd, naive::gd(&rows), true),
            (MethodSpec::Pg, naive::pg(&rows), true),
        ] {
            let expected: Vec<f64> = pr.iter().zip(naive::normalized(&naive_sub, higher)).map(|(a, b)| a + b).collect();
            prop_assert!(close(&hybrid_scores(&c, MethodSpec::Pr, sub).unwrap().scores, &expected));
        }
    }
}
