use std::collections::BTreeSet;

use maxlinear_ttt::graph::NodeId;
use maxlinear_ttt::model::MaxLinearModel;
use maxlinear_ttt::random;
use maxlinear_ttt::spectral::{
    angular_measure, match_atoms_full, recover_from_full_measure, stdf_from_measure,
    subvector_measure,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn any_model() -> impl Strategy<Value = MaxLinearModel> {
    (any::<u64>(), any::<bool>()).prop_map(|(seed, unique)| {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let g = if unique {
            random::unique_source_ttt(&mut r, 8)
        } else {
            random::multi_source_ttt(&mut r, 8)
        };
        random::model(&mut r, g)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn full_measure_has_one_distinct_atom_per_node(m in any_model()) {
        let h = angular_measure(&m);
        let n = m.node_count();
        prop_assert_eq!(h.law.len(), n);
        for (k, a) in h.law.atoms().iter().enumerate() {
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
            prop_assert!(a.iter().all(|&x| x >= 0.0));
            for b in &h.law.atoms()[k + 1..] {
                let d = a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                prop_assert!(d > 1e-12);
            }
        }
        let nodes = match_atoms_full(&h, m.graph()).unwrap();
        let distinct: BTreeSet<NodeId> = nodes.iter().copied().collect();
        prop_assert_eq!(distinct.len(), n);
    }

    #[test]
    fn total_mass_is_the_dimension(m in any_model()) {
        let h = angular_measure(&m);
        let n = m.node_count();
        let column_sums: f64 = (0..n).map(|i| (0..n).map(|v| m.b()[v][i]).sum::<f64>()).sum();
        prop_assert!((h.total_mass() - column_sums).abs() <= 1e-12);
        prop_assert!((h.total_mass() - n as f64).abs() <= 1e-12);
        let max_sums: f64 = (0..n).map(|i| (0..n).map(|v| m.b()[v][i]).fold(0.0, f64::max)).sum();
        prop_assert!((m.stdf(&vec![1.0; n]).unwrap() - max_sums).abs() <= 1e-12);
    }

    #[test]
    fn full_measure_round_trip(m in any_model()) {
        let rec = recover_from_full_measure(&angular_measure(&m), m.graph()).unwrap();
        prop_assert!(rec.weights.max_abs_diff(m.theta()).unwrap() <= 1e-10);
        for (k, &v) in m.graph().labels().iter().enumerate() {
            prop_assert!((rec.diag[&v] - m.diag()[k]).abs() <= 1e-10);
        }
    }

    #[test]
    fn measure_reproduces_stdf(m in any_model(), seed in any::<u64>()) {
        let h = angular_measure(&m);
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let x: Vec<f64> = (0..m.node_count()).map(|_| r.gen::<f64>()).collect();
            prop_assert!((stdf_from_measure(&h, &x).unwrap() - m.stdf(&x).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn subvector_measure_is_the_stdf_with_other_coordinates_zeroed(
        m in any_model(),
        seed in any::<u64>(),
    ) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let labels = m.graph().labels().to_vec();
        let mut u: Vec<NodeId> = labels.iter().copied().filter(|_| r.gen_bool(0.6)).collect();
        if u.is_empty() {
            u.push(labels[0]);
        }
        let h = subvector_measure(&m, &u).unwrap();
        prop_assert_eq!(h.coords(), &u[..]);
        prop_assert!(h.law.len() <= m.node_count());
        for a in h.law.atoms() {
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
        for _ in 0..20 {
            let xu: Vec<f64> = u.iter().map(|_| r.gen::<f64>()).collect();
            let x: Vec<f64> = labels
                .iter()
                .map(|v| u.iter().position(|w| w == v).map_or(0.0, |k| xu[k]))
                .collect();
            prop_assert!((stdf_from_measure(&h, &xu).unwrap() - m.stdf(&x).unwrap()).abs() <= 1e-12);
        }
    }

    #[test]
    fn subvector_of_everything_is_the_full_measure(m in any_model()) {
        let full = angular_measure(&m);
        let sub = subvector_measure(&m, m.graph().labels()).unwrap();
        prop_assert_eq!(&sub.law, &full.law);
    }
}
