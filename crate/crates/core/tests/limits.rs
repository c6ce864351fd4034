use maxlinear_ttt::law::{laws_equal, LIMIT_ATOM_TOL};
use maxlinear_ttt::limits::{
    direct_limit, factorization_failures, factorized_limit, increment_block, increment_marginal,
    is_global_markov, marginal_limit, IncrementCase, LimitError,
};
use maxlinear_ttt::model::MaxLinearModel;
use maxlinear_ttt::random;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn model(seed: u64, unique: bool) -> MaxLinearModel {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let g = if unique {
        random::unique_source_ttt(&mut r, 8)
    } else {
        random::multi_source_ttt(&mut r, 8)
    };
    random::model(&mut r, g)
}

fn unique_model() -> impl Strategy<Value = MaxLinearModel> {
    any::<u64>().prop_map(|s| model(s, true))
}

fn multi_model() -> impl Strategy<Value = MaxLinearModel> {
    any::<u64>().prop_map(|s| model(s, false))
}

fn any_model() -> impl Strategy<Value = MaxLinearModel> {
    (any::<u64>(), any::<bool>()).prop_map(|(s, u)| model(s, u))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn unique_source_limits_factorize(m in unique_model()) {
        prop_assert!(is_global_markov(m.graph()));
        for &u in m.graph().labels() {
            let d = direct_limit(&m, u).unwrap();
            let f = factorized_limit(&m, u).unwrap();
            let cmp = laws_equal(&d.law, &f.law, 1e-9).unwrap();
            prop_assert!(cmp.equal, "u={} tv={}", u, cmp.tv_distance);
        }
    }

    #[test]
    fn several_sources_break_the_factorization(m in multi_model()) {
        prop_assert!(!is_global_markov(m.graph()));
        let failures = factorization_failures(&m, 1e-6).unwrap();
        prop_assert!(!failures.is_empty());
    }

    #[test]
    fn limit_laws_are_probability_laws(m in any_model()) {
        for &u in m.graph().labels() {
            let ui = m.graph().index_of(u).unwrap();
            let d = direct_limit(&m, u).unwrap();
            prop_assert!((d.law.total_mass() - 1.0).abs() <= 1e-12);
            let ancestors = (0..m.node_count()).filter(|&j| m.graph().reaches_idx(j, ui)).count();
            prop_assert!(d.law.len() <= ancestors + 1);
            prop_assert!(d.law.atoms().iter().flatten().all(|&x| x >= 0.0));
            let f = factorized_limit(&m, u).unwrap();
            prop_assert!((f.law.total_mass() - 1.0).abs() <= 1e-12);
            for t in 0..m.graph().tournaments().len() {
                let blk = increment_block(&m, u, t).unwrap();
                prop_assert!((blk.law.total_mass() - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_marginals_match_the_direct_limit(m in any_model()) {
        let labels = m.graph().labels().to_vec();
        for &u in &labels {
            let d = direct_limit(&m, u).unwrap();
            for &v in &labels {
                if u == v {
                    continue;
                }
                let closed = match marginal_limit(&m, u, v) {
                    Ok(c) => c,
                    Err(LimitError::NoApplicableCase { .. }) => {
                        prop_assert!(!is_global_markov(m.graph()));
                        continue;
                    }
                    Err(e) => return Err(TestCaseError::fail(e.to_string())),
                };
                let marg = d.law.marginal(v, LIMIT_ATOM_TOL).unwrap();
                let cmp = laws_equal(&marg, &closed.law, 1e-12).unwrap();
                prop_assert!(cmp.equal, "u={} v={} case={:?} tv={}", u, v, closed.case, cmp.tv_distance);
            }
        }
    }

    #[test]
    fn increments_put_mass_at_zero_only_backwards(m in any_model()) {
        let g = m.graph();
        for &(a, b) in g.edges_idx() {
            for (w, v) in [(a, b), (b, a)] {
                let (case, law) = increment_marginal(&m, g.label(w), g.label(v)).unwrap();
                let zero = law.mass_near(&[0.0], 1e-12);
                match case {
                    IncrementCase::ForwardFromSource | IncrementCase::Forward => {
                        prop_assert_eq!(zero, 0.0)
                    }
                    IncrementCase::BackwardFromSource | IncrementCase::Backward => {
                        prop_assert!(zero > 0.0)
                    }
                }
                prop_assert!((law.total_mass() - 1.0).abs() <= 1e-12);
            }
        }
    }
}

#[test]
fn single_edge_is_markov() {
    let m = maxlinear_ttt::fixtures::model(2, &[(1, 2, 0.3)]);
    assert!(is_global_markov(m.graph()));
    let d = direct_limit(&m, maxlinear_ttt::NodeId(1)).unwrap();
    assert_eq!(d.law.atoms(), &[vec![0.3]]);
}
