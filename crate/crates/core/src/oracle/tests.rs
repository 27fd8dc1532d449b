use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::Error;
use crate::numerics::SimplexVector;

fn ev(pairs: &[(usize, usize)]) -> Evidence {
    Evidence::from_pairs(pairs.iter().copied()).unwrap()
}

/// Binary entropy in nats, written out independently of the table code.
fn hb(p: f64) -> f64 {
    -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
}

#[test]
fn posterior_examples_on_channel() {
    let d2 = channel_table::<f64>();
    let p = d2.bayes_posterior(&Evidence::new()).unwrap();
    assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
    let p = d2.bayes_posterior(&ev(&[(0, 1)])).unwrap();
    assert_abs_diff_eq!(p[1], 0.9, epsilon = 1e-12);
    let p = d2.bayes_posterior(&ev(&[(2, 0)])).unwrap();
    assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);
}

#[test]
fn impossible_evidence_is_an_error() {
    let d3 = switch_table::<f64>();
    let mut t = d3.clone();
    // zero out everything with x0 = 1
    if let TableTarget::Classes { prob, .. } = &t.target().clone() {
        let mut prob = prob.clone();
        for c in 4..8 {
            prob[2 * c] = 0.0;
            prob[2 * c + 1] = 0.0;
        }
        let total: f64 = prob.iter().sum();
        prob.iter_mut().for_each(|p| *p /= total);
        t = JointTable::classification(vec![2, 2, 2], 2, prob, None).unwrap();
    }
    assert!(matches!(t.bayes_posterior(&ev(&[(0, 1)])), Err(Error::ImpossibleEvidence)));
    assert!(matches!(t.exact_cmi(&ev(&[(0, 1)]), 1), Err(Error::ImpossibleEvidence)));
}

#[test]
fn conditional_feature_examples() {
    let d2 = channel_table::<f64>();
    let p = d2.conditional_feature(&Evidence::new(), 2).unwrap();
    assert_eq!(p.as_slice(), &[0.5, 0.5]);
    let p = d2.conditional_feature(&Evidence::new(), 0).unwrap();
    assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-12);
    let p = d2.conditional_feature(&ev(&[(0, 1)]), 1).unwrap();
    assert_abs_diff_eq!(p[1], 0.9 * 0.7 + 0.1 * 0.3, epsilon = 1e-12);
    assert!(matches!(d2.conditional_feature(&ev(&[(0, 1)]), 0), Err(Error::AlreadyObserved(0))));
}

#[test]
fn cmi_examples_match_binary_channel_capacity() {
    let d2 = channel_table::<f64>();
    let e = Evidence::new();
    assert_abs_diff_eq!(d2.exact_cmi(&e, 2).unwrap(), 0.0, epsilon = 1e-15);
    let x1 = d2.exact_cmi(&e, 0).unwrap();
    let x2 = d2.exact_cmi(&e, 1).unwrap();
    assert_abs_diff_eq!(x1, 2f64.ln() - hb(0.1), epsilon = 1e-12);
    assert_abs_diff_eq!(x2, 2f64.ln() - hb(0.3), epsilon = 1e-12);
    assert_abs_diff_eq!(x1, 0.3680, epsilon = 1e-4);
    assert_abs_diff_eq!(x2, 0.0823, epsilon = 1e-4);
}

#[test]
fn greedy_policy_examples() {
    let d2 = channel_table::<f64>();
    assert_eq!(d2.greedy_oracle_policy(&Evidence::new()).unwrap(), 0);
    assert_eq!(d2.greedy_oracle_policy(&ev(&[(0, 1)])).unwrap(), 1);
    assert_eq!(d2.greedy_oracle_policy(&ev(&[(0, 0)])).unwrap(), 1);
    let d3 = switch_table::<f64>();
    assert_eq!(d3.greedy_oracle_policy(&ev(&[(0, 0)])).unwrap(), 1);
    assert_eq!(d3.greedy_oracle_policy(&ev(&[(0, 1)])).unwrap(), 2);
    assert_abs_diff_eq!(d3.exact_cmi(&ev(&[(0, 0)]), 1).unwrap(), 2f64.ln(), epsilon = 1e-12);
    assert_abs_diff_eq!(d3.exact_cmi(&ev(&[(0, 0)]), 2).unwrap(), 0.0, epsilon = 1e-12);
    let full = ev(&[(0, 0), (1, 0), (2, 0)]);
    assert!(matches!(d3.greedy_oracle_policy(&full), Err(Error::AllSelected)));
}

#[test]
fn switch_distribution_is_myopically_hard() {
    // The switch bit carries no information on its own, so the greedy policy
    // starts with x1 (tied with x2) even though x0 first is optimal.
    let d3 = switch_table::<f64>();
    let e = Evidence::new();
    assert_abs_diff_eq!(d3.exact_cmi(&e, 0).unwrap(), 0.0, epsilon = 1e-15);
    assert_abs_diff_eq!(d3.exact_cmi(&e, 1).unwrap(), 2f64.ln() - hb(0.25), epsilon = 1e-12);
    assert_eq!(d3.greedy_argmax_set(&e).unwrap(), vec![1, 2]);
    let (acc, first) = d3.lookahead_policy(&e, 2).unwrap();
    assert_eq!(first, Some(0));
    assert_abs_diff_eq!(acc, 1.0, epsilon = 1e-12);
    let (pair, best) = d3.best_static_subset(2).unwrap();
    assert_eq!(pair, vec![0, 1]);
    assert_abs_diff_eq!(best, 0.75, epsilon = 1e-12);
}

#[test]
fn one_step_loss_examples() {
    let d2 = channel_table::<f64>();
    let bayes = |e: &Evidence| d2.bayes_posterior(e);
    let loss = d2.one_step_loss(&Evidence::new(), 0, bayes).unwrap();
    assert_abs_diff_eq!(loss, 2f64.ln() - d2.exact_cmi(&Evidence::new(), 0).unwrap(), epsilon = 1e-12);
    assert_abs_diff_eq!(loss, 0.3251, epsilon = 1e-4);

    let d3 = switch_table::<f64>();
    let loss = d3.one_step_loss(&ev(&[(0, 0)]), 1, |e| d3.bayes_posterior(e)).unwrap();
    assert_abs_diff_eq!(loss, 0.0, epsilon = 1e-12);

    let constant = JointTable::<f64>::from_weights(vec![2, 3], 2, None, |_, y| if y == 1 { 1.0 } else { 0.0 }).unwrap();
    for i in 0..2 {
        let l = constant.one_step_loss(&Evidence::new(), i, |e| constant.bayes_posterior(e)).unwrap();
        assert_abs_diff_eq!(l, 0.0, epsilon = 1e-12);
    }
}

#[test]
fn one_step_loss_rejects_bad_predictor() {
    let d2 = channel_table::<f64>();
    let bad = |_: &Evidence| Ok(SimplexVector::uniform(3));
    assert!(d2.one_step_loss(&Evidence::new(), 0, bad).is_err());
}

#[test]
fn conditional_variance_examples() {
    let r1 = regression_toy_table::<f64>();
    let e = Evidence::new();
    assert_abs_diff_eq!(r1.expected_conditional_variance(&e, 0).unwrap(), 0.04, epsilon = 1e-12);
    assert_abs_diff_eq!(r1.expected_conditional_variance(&e, 1).unwrap(), 0.29, epsilon = 1e-12);
    let flat = JointTable::<f64>::regression(vec![2, 2], vec![0.25; 4], vec![3.0; 4], vec![0.0; 4], None).unwrap();
    for i in 0..2 {
        assert_eq!(flat.expected_conditional_variance(&e, i).unwrap(), 0.0);
    }
    assert!(matches!(
        channel_table::<f64>().expected_conditional_variance(&e, 0),
        Err(Error::TaskMismatch { .. })
    ));
}

#[test]
fn sampling_matches_marginal() {
    let d2 = channel_table::<f64>();
    let sampler = d2.instance_sampler().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let n = 100_000;
    let mut positives = 0;
    for _ in 0..n {
        if let (_, Target::Class(1)) = sampler.sample(&mut rng).unwrap() {
            positives += 1;
        }
    }
    assert!((positives as f64 / n as f64 - 0.5).abs() <= 0.01);
}

#[test]
fn conditional_sampler_on_deterministic_conditional() {
    // x1 copies x0
    let copy = JointTable::<f64>::from_weights(vec![2, 2], 2, None, |x, y| {
        if x[0] == x[1] && y == x[0] { 1.0 } else { 0.0 }
    })
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        assert_eq!(copy.conditional_sampler(&ev(&[(0, 1)]), 1, &mut rng).unwrap(), 1);
    }
    let draws = |seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..50).map(|_| switch_table::<f64>().sample_instance(&mut rng).unwrap().0).collect::<Vec<_>>()
    };
    assert_eq!(draws(4), draws(4));
}

#[test]
fn text_format_round_trips() {
    for table in [channel_table::<f64>(), switch_table(), random_table(3, 3, 3, 3).unwrap()] {
        let back = JointTable::<f64>::parse(&table.to_text()).unwrap();
        assert_eq!(back, table);
    }
    let r1 = regression_toy_table::<f64>();
    assert_eq!(JointTable::<f64>::parse(&r1.to_text()).unwrap(), r1);
}

#[test]
fn text_format_errors_name_lines() {
    let err = JointTable::<f64>::parse("2 2\n2 2\n0 0 0 0.5\n0 0 0 0.5\n").unwrap_err();
    assert!(matches!(err, Error::Parse { line: 4, .. }), "{err}");
    let err = JointTable::<f64>::parse("1 2\n2\n0 0 0.5\n0 1 0.2\n").unwrap_err();
    assert!(matches!(err, Error::InvalidTable(_)), "{err}");
    let err = JointTable::<f64>::parse("21 2\n".to_string().as_str()).unwrap_err();
    assert!(matches!(err, Error::Parse { .. }));
    let err = JointTable::<f64>::parse("2 2\n2048 1024\n").unwrap_err();
    assert!(matches!(err, Error::EnumerationBound(_)));
}

#[test]
fn possible_evidence_counts() {
    let d2 = channel_table::<f64>();
    // 3^3 partial assignments over binary features
    assert_eq!(d2.possible_evidence().len(), 27);
    assert!(d2.possible_evidence()[0].is_empty());
}

#[test]
fn f32_tables_agree_with_f64() {
    let a = channel_table::<f32>().exact_cmi(&Evidence::new(), 0).unwrap();
    let b = channel_table::<f64>().exact_cmi(&Evidence::new(), 0).unwrap();
    assert!((a as f64 - b).abs() < 1e-6);
}

fn perturb(p: &SimplexVector<f64>, from: usize, to: usize, amount: f64) -> SimplexVector<f64> {
    let mut v = p.as_slice().to_vec();
    let shift = amount.min(v[from]);
    v[from] -= shift;
    v[to] += shift;
    SimplexVector::from_weights(v).unwrap()
}

fn small_table() -> impl Strategy<Value = JointTable<f64>> {
    (any::<u64>(), 1usize..=4, 2usize..=3, 2usize..=3)
        .prop_map(|(seed, d, card, k)| random_table(seed, d, card, k).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn chain_rule_identity(table in small_table()) {
        for e in table.possible_evidence() {
            for i in (0..table.feature_count()).filter(|i| !e.contains(*i)) {
                let lhs = table.conditional_entropy(&e).unwrap() - table.expected_conditional_entropy(&e, i).unwrap();
                let cmi = table.exact_cmi(&e, i).unwrap();
                prop_assert!((lhs - cmi).abs() <= 1e-10, "{} vs {}", lhs, cmi);
                prop_assert!(cmi >= 0.0);
            }
        }
    }

    #[test]
    fn bayes_posterior_minimizes_one_step_loss(table in small_table()) {
        let k = table.classes().unwrap();
        for e in table.possible_evidence() {
            for i in (0..table.feature_count()).filter(|i| !e.contains(*i)) {
                let bayes = table.one_step_loss(&e, i, |x| table.bayes_posterior(x)).unwrap();
                for from in 0..k {
                    for to in (0..k).filter(|t| *t != from) {
                        let perturbed = table.one_step_loss(&e, i, |x| {
                            Ok(perturb(&table.bayes_posterior(x)?, from, to, 0.05))
                        }).unwrap();
                        prop_assert!(perturbed >= bayes - 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn loss_argmin_equals_cmi_argmax(table in small_table()) {
        for e in table.possible_evidence() {
            let free: Vec<usize> = (0..table.feature_count()).filter(|i| !e.contains(*i)).collect();
            if free.is_empty() {
                continue;
            }
            let losses: Vec<f64> = free.iter().map(|&i| table.one_step_loss(&e, i, |x| table.bayes_posterior(x)).unwrap()).collect();
            let min = losses.iter().copied().fold(f64::INFINITY, f64::min);
            let argmin: Vec<usize> = free.iter().zip(&losses).filter(|(_, l)| **l <= min + CMI_TIE_TOLERANCE).map(|(i, _)| *i).collect();
            prop_assert_eq!(argmin, table.greedy_argmax_set(&e).unwrap());
        }
    }

    #[test]
    fn squared_loss_argmin_equals_variance_argmin(seed in any::<u64>(), d in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let configs = 1 << d;
        let w: Vec<f64> = (0..configs).map(|_| rng.random::<f64>() + 0.01).collect();
        let total: f64 = w.iter().sum();
        let prob: Vec<f64> = w.iter().map(|x| x / total).collect();
        let mean: Vec<f64> = (0..configs).map(|_| rng.random_range(-2.0..2.0)).collect();
        let var: Vec<f64> = (0..configs).map(|_| rng.random_range(0.0..0.5)).collect();
        let table = JointTable::regression(vec![2; d], prob, mean, var, None).unwrap();
        for e in table.possible_evidence() {
            let free: Vec<usize> = (0..d).filter(|i| !e.contains(*i)).collect();
            if free.is_empty() {
                continue;
            }
            let mean_pred = |x: &Evidence| Ok(table.regression_moments(x)?.0);
            let losses: Vec<f64> = free.iter().map(|&i| table.one_step_squared_loss(&e, i, mean_pred).unwrap()).collect();
            let ecv: Vec<f64> = free.iter().map(|&i| table.expected_conditional_variance(&e, i).unwrap()).collect();
            for (l, v) in losses.iter().zip(&ecv) {
                prop_assert!((l - v).abs() <= 1e-10);
            }
            let argmin = |xs: &[f64]| {
                let m = xs.iter().copied().fold(f64::INFINITY, f64::min);
                xs.iter().position(|x| *x <= m + 1e-12).unwrap()
            };
            prop_assert_eq!(argmin(&losses), argmin(&ecv));
        }
    }

    #[test]
    fn independent_feature_has_zero_cmi(seed in any::<u64>()) {
        // x1 independent of (x0, y): the table factorizes as p(x0, y) p(x1)
        let base = random_table::<f64>(seed, 1, 3, 2).unwrap();
        let px1 = [0.2, 0.5, 0.3];
        let table = JointTable::from_weights(vec![3, 3], 2, None, |x, y| {
            let p0: f64 = (0..1).map(|_| {
                if let TableTarget::Classes { prob, .. } = base.target() { prob[x[0] * 2 + y] } else { 0.0 }
            }).sum();
            p0 * px1[x[1]]
        }).unwrap();
        for e in table.possible_evidence().into_iter().filter(|e| !e.contains(1)) {
            prop_assert!(table.exact_cmi(&e, 1).unwrap().abs() <= 1e-12);
        }
    }
}
