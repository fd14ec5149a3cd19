mod common;

use aqs::metrics::{
    pearson, redundancy, rouge_l, rouge_n, sentiment_consistency, simulate_majority_success, EvalRecord,
    MajoritySimConfig, RougeScores,
};
use proptest::prelude::*;

/// Clipped n-gram overlap by list scanning.
fn rouge_n_oracle(pred: &[&str], refr: &[&str], n: usize) -> f64 {
    let grams = |t: &[&str]| -> Vec<Vec<String>> {
        if t.len() < n {
            return vec![];
        }
        (0..=t.len() - n).map(|i| t[i..i + n].iter().map(|s| s.to_string()).collect()).collect()
    };
    let pg = grams(pred);
    let mut rg = grams(refr);
    let (p_total, r_total) = (pg.len(), rg.len());
    let mut overlap = 0;
    for g in &pg {
        if let Some(pos) = rg.iter().position(|x| x == g) {
            rg.remove(pos);
            overlap += 1;
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / p_total as f64;
    let r = overlap as f64 / r_total as f64;
    2.0 * p * r / (p + r)
}

/// Naive exponential-free recursive LCS with memo.
fn lcs_oracle(a: &[&str], b: &[&str]) -> usize {
    fn go(a: &[&str], b: &[&str], i: usize, j: usize, memo: &mut Vec<Vec<Option<usize>>>) -> usize {
        if i == a.len() || j == b.len() {
            return 0;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if a[i] == b[j] {
            1 + go(a, b, i + 1, j + 1, memo)
        } else {
            go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }
    go(a, b, 0, 0, &mut vec![vec![None; b.len()]; a.len()])
}

/// Pearson via the raw-sums formula.
fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    let syy: f64 = y.iter().map(|b| b * b).sum();
    (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
}

#[test]
fn worked_rouge_examples() {
    assert!((rouge_n::<f64>("the cat", "the cat sat", 1) - 0.8).abs() < 1e-9);
    assert!((rouge_n_oracle(&["the", "cat"], &["the", "cat", "sat"], 1) - 0.8).abs() < 1e-12);
    assert_eq!(rouge_n::<f64>("x y", "a b", 1), 0.0);
    assert!((rouge_l::<f64>("a c e", "a b c d e") - 0.75).abs() < 1e-9);
    assert_eq!(lcs_oracle(&["a", "c", "e"], &["a", "b", "c", "d", "e"]), 3);
    assert!((rouge_l::<f64>("c b a", "a b c") - 1.0 / 3.0).abs() < 1e-9);
    assert_eq!(lcs_oracle(&["c", "b", "a"], &["a", "b", "c"]), 1);
}

#[test]
fn binomial_oracle_sanity() {
    assert!((common::binomial_tail(2, 0.5, 2) - 0.25).abs() < 1e-12);
    assert!((common::binomial_tail(3, 0.5, 2) - 0.5).abs() < 1e-12);
    assert!((common::binomial_tail(25, 0.7, 0) - 1.0).abs() < 1e-12);
}

#[test]
fn simulation_tracks_binomial_tail() {
    let exact = common::binomial_tail(25, 0.7, 13);
    let out = simulate_majority_success(&MajoritySimConfig {
        success_prob: 0.7,
        queries_per_doc: 25,
        trials: 10_000,
        rng_seed: 7,
    })
    .unwrap();
    assert!((out.rate - exact).abs() <= 0.01, "rate {} exact {exact}", out.rate);
    // The histogram is the empirical Binomial(25, 0.7) pmf.
    let mean: f64 = out.histogram.iter().map(|(&c, &n)| c as f64 * n as f64).sum::<f64>() / 10_000.0;
    assert!((mean - 17.5).abs() < 0.1);
}

#[test]
fn sentiment_consistency_fixture() {
    let rec = |src: f64, pred: f64| EvalRecord {
        query: String::new(),
        context: String::new(),
        reference: String::new(),
        prediction: String::new(),
        rouge: RougeScores::default(),
        embed_match: None,
        sentiment_src: src,
        sentiment_pred: pred,
        effective_query_rate: None,
    };
    let records = vec![rec(-0.5, -0.2), rec(0.1, 0.3), rec(0.4, 0.2), rec(0.9, 1.0)];
    let got = sentiment_consistency(&records).unwrap();
    let want = pearson_oracle(&[-0.5, 0.1, 0.4, 0.9], &[-0.2, 0.3, 0.2, 1.0]);
    assert!((got - want).abs() < 1e-9);

    let same: Vec<_> = [-0.3, 0.0, 0.5].iter().map(|&s| rec(s, s)).collect();
    assert!((sentiment_consistency(&same).unwrap() - 1.0).abs() < 1e-12);
    let negated: Vec<_> = [-0.3, 0.0, 0.5].iter().map(|&s| rec(s, -s)).collect();
    assert!((sentiment_consistency(&negated).unwrap() + 1.0).abs() < 1e-12);
}

#[test]
fn redundancy_direction_when_distractors_are_disjoint() {
    let reference = "leaking pipe in bedroom";
    let kept = "leaking pipe bedroom. leaking pipe";
    let all = "email sender greeting. leaking pipe bedroom. leaking pipe";
    assert!(redundancy::<f64>(kept, reference) <= redundancy::<f64>(all, reference));
}

fn words() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec("[a-e]{1,2}", 1..12)
}

proptest! {
    #[test]
    fn rouge_matches_oracle(p in words(), r in words(), n in 1usize..3) {
        let ps: Vec<&str> = p.iter().map(String::as_str).collect();
        let rs: Vec<&str> = r.iter().map(String::as_str).collect();
        let got: f64 = rouge_n(&p.join(" "), &r.join(" "), n);
        if ps.len() >= n && rs.len() >= n {
            prop_assert!((got - rouge_n_oracle(&ps, &rs, n)).abs() < 1e-9);
        }
        let l = lcs_oracle(&ps, &rs) as f64;
        let want_l = if l == 0.0 { 0.0 } else {
            let (pp, rr) = (l / ps.len() as f64, l / rs.len() as f64);
            2.0 * pp * rr / (pp + rr)
        };
        prop_assert!((rouge_l::<f64>(&p.join(" "), &r.join(" ")) - want_l).abs() < 1e-9);
    }

    #[test]
    fn rouge_f1_is_symmetric(p in words(), r in words()) {
        let (a, b) = (p.join(" "), r.join(" "));
        for n in 1..3 {
            prop_assert!((rouge_n::<f64>(&a, &b, n) - rouge_n::<f64>(&b, &a, n)).abs() < 1e-12);
        }
        prop_assert!((rouge_l::<f64>(&a, &b) - rouge_l::<f64>(&b, &a)).abs() < 1e-12);
    }

    #[test]
    fn rouge_one_iff_same_multiset(p in words(), r in words()) {
        let (a, b) = (p.join(" "), r.join(" "));
        let mut ps = p.clone();
        let mut rs = r.clone();
        ps.sort();
        rs.sort();
        prop_assert_eq!(rouge_n::<f64>(&a, &b, 1) == 1.0, ps == rs);
    }

    #[test]
    fn pearson_affine_invariant(
        pts in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..20),
        scale in 0.1f64..10.0,
        shift in -5.0f64..5.0,
    ) {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        if let Ok(base) = pearson(&xs, &ys) {
            let moved: Vec<f64> = xs.iter().map(|x| scale * x + shift).collect();
            prop_assert!((pearson(&moved, &ys).unwrap() - base).abs() < 1e-9);
            prop_assert!((base - pearson_oracle(&xs, &ys)).abs() < 1e-9);
            prop_assert!((-1.0..=1.0).contains(&base));
        }
    }
}
