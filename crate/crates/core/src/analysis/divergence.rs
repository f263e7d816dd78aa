/// `KL(P ‖ Q) = sum_i p_i ln(p_i / q_i)`, with `0 ln 0 = 0` and `+∞` when
/// `q_i = 0 < p_i`. Lengths must match.
pub fn categorical_kl(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "laws must have the same length");
    p.iter()
        .zip(q)
        .map(|(&pi, &qi)| {
            if pi <= 0.0 {
                0.0
            } else if qi <= 0.0 {
                f64::INFINITY
            } else {
                pi * (pi / qi).ln()
            }
        })
        .sum::<f64>()
        .max(0.0)
}

/// `KL(Bern(p) ‖ Bern(q))`.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    categorical_kl(&[p, 1.0 - p], &[q, 1.0 - q])
}

/// `(1/2) sum_i |p_i - q_i|`.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len(), "laws must have the same length");
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn bernoulli_tv(p: f64, q: f64) -> f64 {
    (p - q).abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn self_divergence_is_zero() {
        for p in [0.0, 0.3, 1.0] {
            assert_eq!(bernoulli_kl(p, p), 0.0);
            assert_eq!(bernoulli_tv(p, p), 0.0);
        }
        let law = [0.2, 0.5, 0.3];
        assert_eq!(categorical_kl(&law, &law), 0.0);
        assert_eq!(tv_distance(&law, &law), 0.0);
    }

    #[test]
    fn bernoulli_kl_regression() {
        // 0.5 ln(0.5/0.75) + 0.5 ln(0.5/0.25) = 0.5 ln(4/3)
        let kl = bernoulli_kl(0.5, 0.75);
        assert!((kl - 0.5 * (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert!((kl - 0.143_841_036_225_890_3).abs() < 1e-15);
    }

    #[test]
    fn infinite_when_support_mismatches() {
        assert_eq!(bernoulli_kl(0.5, 0.0), f64::INFINITY);
        assert_eq!(bernoulli_kl(0.0, 0.5), 2f64.ln());
        assert_eq!(categorical_kl(&[0.5, 0.5, 0.0], &[1.0, 0.0, 0.0]), f64::INFINITY);
    }

    fn normalize(raw: &[f64]) -> Vec<f64> {
        let s: f64 = raw.iter().sum();
        raw.iter().map(|x| x / s).collect()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn pinsker_bernoulli(p in 0.0f64..=1.0, q in 1e-9f64..1.0 - 1e-9) {
            prop_assert!(bernoulli_tv(p, q) <= (bernoulli_kl(p, q) / 2.0).sqrt() + 1e-12);
        }

        #[test]
        fn pinsker_categorical((raw_p, raw_q) in (2usize..8).prop_flat_map(|k| {
            (prop::collection::vec(0.0f64..1.0, k), prop::collection::vec(1e-6f64..1.0, k))
        })) {
            let p = normalize(&raw_p.iter().map(|x| x + 1e-12).collect::<Vec<_>>());
            let q = normalize(&raw_q);
            prop_assert!(tv_distance(&p, &q) <= (categorical_kl(&p, &q) / 2.0).sqrt() + 1e-12);
        }
    }
}
