use std::collections::BTreeSet;

use maxlinear_ttt::fixtures;
use maxlinear_ttt::graph::{NodeId, TttGraph};
use maxlinear_ttt::identify::{
    exit_path, identifiability_check, match_subatoms, non_identifiability_witness, reconstruct,
    Condition, IdentifyError, WitnessOutcome, RATIO_MARGIN,
};
use maxlinear_ttt::model::{validate_theta, MaxLinearModel};
use maxlinear_ttt::random;
use maxlinear_ttt::spectral::subvector_measure;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn set(v: &[u32]) -> BTreeSet<NodeId> {
    v.iter().map(|&x| NodeId(x)).collect()
}

fn observed(g: &TttGraph, ubar: &BTreeSet<NodeId>) -> Vec<NodeId> {
    g.labels()
        .iter()
        .copied()
        .filter(|v| !ubar.contains(v))
        .collect()
}

fn case() -> impl Strategy<Value = (MaxLinearModel, BTreeSet<NodeId>)> {
    any::<u64>().prop_map(|seed| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = random::unique_source_ttt(&mut r, 8);
        let ubar = random::latent_set(&mut r, &g);
        (random::model(&mut r, g), ubar)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn latent_round_trip((m, ubar) in case()) {
        let g = m.graph();
        prop_assume!(ubar.len() < g.node_count());
        prop_assert!(identifiability_check(g, &ubar).unwrap().ok);
        let h = subvector_measure(&m, &observed(g, &ubar)).unwrap();
        let rep = reconstruct(&h, g, &ubar).unwrap();
        prop_assert!(rep.theta_hat.max_abs_diff(m.theta()).unwrap() <= 1e-9);
        for (k, &v) in g.labels().iter().enumerate() {
            prop_assert!((rep.diag[&v] - m.diag()[k]).abs() <= 1e-9);
        }
        for d in &rep.diagnostics {
            let scale = d.parent_ratio.abs().max(d.child_ratio.abs());
            prop_assert!(d.parent_ratio - d.child_ratio > RATIO_MARGIN * scale);
        }
    }

    #[test]
    fn shared_descendant_patterns_come_from_a_parent_child_pair((m, ubar) in case()) {
        let g = m.graph();
        let u: BTreeSet<NodeId> = observed(g, &ubar).into_iter().collect();
        let pattern = |i: NodeId| -> BTreeSet<NodeId> {
            g.relatives(i).unwrap().desc_incl.intersection(&u).copied().collect()
        };
        for &i in g.labels() {
            let shared: Vec<NodeId> = g
                .labels()
                .iter()
                .copied()
                .filter(|&j| j != i && pattern(j) == pattern(i))
                .collect();
            prop_assert!(shared.len() <= 1);
            let Some(&j) = shared.first() else { continue };
            // orient so that `i` is the parent
            let (i, j) = if g.relatives(j).unwrap().pa.contains(&i) { (i, j) } else { (j, i) };
            let rj = g.relatives(j).unwrap();
            prop_assert!(ubar.contains(&i));
            prop_assert_eq!(rj.pa.iter().copied().collect::<Vec<_>>(), vec![i]);
            let ri = g.relatives(i).unwrap();
            prop_assert!(ri.ch.intersection(&rj.ch).next().is_some());
            prop_assert!(pattern(i).len() >= 2);
        }
    }

    #[test]
    fn witnesses_are_sound(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = random::unique_source_ttt(&mut r, 8);
        let m = random::model(&mut r, g);
        let g = m.graph();
        prop_assume!(g.node_count() > 1);
        for &u in g.labels() {
            let fails = identifiability_check(g, &set(&[u.0])).unwrap();
            match non_identifiability_witness(&m, u) {
                Err(IdentifyError::CriterionSatisfied(_)) => prop_assert!(fails.ok),
                Ok(WitnessOutcome::Found(w)) => {
                    prop_assert!(!fails.ok);
                    prop_assert!(validate_theta(g, &w.theta_prime).is_ok());
                    prop_assert!(w.theta_prime.max_abs_diff(m.theta()).unwrap() > 0.0);
                    prop_assert!(w.max_stdf_diff <= 1e-12);
                    prop_assert_eq!(w.grid_points, 100);
                }
                Ok(WitnessOutcome::NonConstructive { .. }) => {
                    prop_assert!(fails.violations.iter().any(|v| v.condition == Condition::TournamentSource));
                }
                Err(e) => return Err(TestCaseError::fail(e.to_string())),
            }
        }
    }
}

#[test]
fn latent_example_exit_paths() {
    let g = fixtures::latent_eight();
    let ubar = set(&[1, 3, 7]);
    let labels = |t: maxlinear_ttt::Trail| t.nodes.iter().map(|v| v.0).collect::<Vec<_>>();
    assert_eq!(labels(exit_path(&g, NodeId(7), &ubar).unwrap()), vec![7, 8]);
    assert_eq!(labels(exit_path(&g, NodeId(3), &ubar).unwrap()), vec![3, 4]);
    assert_eq!(
        labels(exit_path(&g, NodeId(1), &ubar).unwrap()),
        vec![1, 3, 4]
    );
}

#[test]
fn violated_criterion_is_reported_per_node() {
    let g = fixtures::latent_eight();
    let rep = identifiability_check(&g, &set(&[2])).unwrap();
    assert!(!rep.ok);
    assert!(rep.violations.iter().all(|v| v.node == NodeId(2)));
    let m = MaxLinearModel::new(
        g.clone(),
        random::theta(&mut ChaCha8Rng::seed_from_u64(9), &g),
    )
    .unwrap();
    let h = subvector_measure(&m, &observed(&g, &set(&[2]))).unwrap();
    assert!(matches!(
        match_subatoms(&h, &g, &set(&[2])),
        Err(IdentifyError::CriterionViolated(_))
    ));
}

#[test]
fn multi_source_graphs_are_refused() {
    let g = fixtures::multi_source_eight();
    assert!(matches!(
        identifiability_check(&g, &set(&[3])),
        Err(IdentifyError::NotUniqueSource(_))
    ));
}

#[test]
fn observing_nothing_is_refused() {
    let g = fixtures::graph(2, &[(1, 2)]);
    assert!(matches!(
        identifiability_check(&g, &set(&[1, 2])),
        Err(IdentifyError::NoObservedNodes)
    ));
}

#[test]
fn a_measure_with_a_missing_atom_is_rejected() {
    let m = fixtures::tournament3();
    let h = subvector_measure(&m, &[NodeId(1), NodeId(2)]).unwrap();
    // observing only 1 and 2 of a 3-node tournament hides node 3 entirely
    assert!(reconstruct(&h, m.graph(), &BTreeSet::new()).is_err());
}
