mod common;

use distlingape_core::bai::{optimal_weights, ArmSet};
use distlingape_core::lp::min_l1_representation;
use distlingape_core::rng;
use proptest::prelude::*;
use rand::Rng;

fn check_against_vertices(columns: &[Vec<f64>], target: &[f64]) {
    let oracle = common::min_l1_by_vertices(columns, target).expect("target lies in the span");
    let w = min_l1_representation(columns, target).unwrap();
    let l1: f64 = w.iter().map(|v| v.abs()).sum();
    assert!((l1 - oracle).abs() <= 1e-7 * oracle.max(1.0), "L1 {l1} vs oracle {oracle}");
    for (i, t) in target.iter().enumerate() {
        let back: f64 = columns.iter().zip(&w).map(|(c, wk)| c[i] * wk).sum();
        assert!((back - t).abs() <= 1e-7, "representation residual");
    }
}

#[test]
fn random_instances_match_vertex_enumeration() {
    let mut r = rng::stream(3, 0);
    for _ in 0..500 {
        let d = r.random_range(1..=3);
        let k = r.random_range(d..=6);
        let columns: Vec<Vec<f64>> = (0..k).map(|_| (0..d).map(|_| r.random_range(-2.0..2.0)).collect()).collect();
        let (i, j) = (r.random_range(0..k), r.random_range(0..k));
        let target: Vec<f64> = columns[i].iter().zip(&columns[j]).map(|(a, b)| a - b).collect();
        check_against_vertices(&columns, &target);
    }
}

#[test]
fn degenerate_instances_match_vertex_enumeration() {
    // Repeated, parallel and zero columns plus rank-deficient sets.
    let cases: Vec<Vec<Vec<f64>>> = vec![
        vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 0.0]],
        vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0], vec![0.0, 0.0, 1.0], vec![-1.0, -1.0, 0.0]],
        vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0], vec![0.5, 0.5], vec![-1.0, 1.0]],
        vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.99, 0.01, 0.0]],
    ];
    for columns in &cases {
        for i in 0..columns.len() {
            for j in 0..columns.len() {
                let target: Vec<f64> = columns[i].iter().zip(&columns[j]).map(|(a, b)| a - b).collect();
                check_against_vertices(columns, &target);
            }
        }
    }
}

#[test]
fn ratios_form_a_distribution() {
    let arms = ArmSet::new(vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![0.6, 0.8]]).unwrap();
    for i in 0..3 {
        for j in 0..3 {
            let sol = optimal_weights(&arms, i, j).unwrap();
            let total: f64 = sol.ratios.iter().sum();
            if i == j {
                assert_eq!(sol.alpha, 0.0);
                assert_eq!(total, 0.0);
            } else {
                assert!((total - 1.0).abs() < 1e-12);
                assert!(sol.ratios.iter().all(|p| *p >= 0.0));
            }
        }
    }
}

proptest! {
    #[test]
    fn optimum_never_beaten_by_vertices(
        columns in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 2..=6),
        pick in (0usize..6, 0usize..6),
    ) {
        let k = columns.len();
        let (i, j) = (pick.0 % k, pick.1 % k);
        let target: Vec<f64> = columns[i].iter().zip(&columns[j]).map(|(a, b)| a - b).collect();
        check_against_vertices(&columns, &target);
    }
}
