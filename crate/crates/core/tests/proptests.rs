//! Property suites for the numeric kernels, the nonlinearity, and the
//! graph serialization.

use llrlab::fp::phi;
use llrlab::graph::{parse_alist, TannerGraph};
use llrlab::kernels::{
    cn_extrinsic_into, cn_min_sum, cn_pairwise_exact, CnScratch, KernelKind, MinSumVariant,
    NumericEvents,
};
use proptest::prelude::*;
use std::collections::BTreeSet;

// Magnitude floor keeps properties away from the sign-cancellation
// corner at zero, where a correctly rounded result can straddle zero.
fn llr() -> impl Strategy<Value = f64> {
    (1e-3f64..30.0, any::<bool>()).prop_map(|(m, neg)| if neg { -m } else { m })
}

fn llr_vec(len: impl Into<proptest::collection::SizeRange>) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(llr(), len)
}

fn extrinsic(kind: KernelKind, inputs: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; inputs.len()];
    let mut scratch = CnScratch::default();
    let mut events = NumericEvents::default();
    cn_extrinsic_into(kind, inputs, &mut out, &mut scratch, &mut events).unwrap();
    out
}

proptest! {
    #[test]
    fn phi_is_an_involution(x in 1e-3f64..30.0) {
        let round_trip = phi(phi(x));
        prop_assert!(
            (round_trip - x).abs() <= x * 1e-12 + 1e-12,
            "phi(phi({x})) = {round_trip}"
        );
    }

    #[test]
    fn phi_is_non_increasing(a in 1e-3f64..700.0, b in 1e-3f64..700.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(phi(lo) >= phi(hi), "phi({lo}) < phi({hi})");
    }

    #[test]
    fn pair_magnitude_sits_within_ln2_below_the_min(a in llr(), b in llr()) {
        let p = cn_pairwise_exact(a, b);
        let floor = a.abs().min(b.abs());
        prop_assert!(p.abs() <= floor, "|pair({a},{b})| = {} > {floor}", p.abs());
        prop_assert!(
            floor - p.abs() <= std::f64::consts::LN_2 + 1e-12,
            "pair({a},{b}) fell {} below the min",
            floor - p.abs()
        );
    }

    #[test]
    fn pair_sign_is_the_product_of_input_signs(a in llr(), b in llr()) {
        let p = cn_pairwise_exact(a, b);
        if p.abs() > 1e-9 {
            prop_assert_eq!(p.signum(), a.signum() * b.signum());
        }
    }

    #[test]
    fn pair_is_symmetric_and_odd(a in llr(), b in llr()) {
        let p = cn_pairwise_exact(a, b);
        prop_assert_eq!(p, cn_pairwise_exact(b, a));
        prop_assert_eq!(p, cn_pairwise_exact(-a, -b));
        prop_assert_eq!(-p, cn_pairwise_exact(-a, b));
        prop_assert_eq!(-p, cn_pairwise_exact(a, -b));
    }

    #[test]
    fn min_sum_scales_exactly_with_powers_of_two(
        inputs in llr_vec(2..7),
        j in -6i32..=6,
    ) {
        let k = 2f64.powi(j);
        let scaled: Vec<f64> = inputs.iter().map(|x| x * k).collect();
        for variant in [MinSumVariant::Plain, MinSumVariant::Normalized(0.8)] {
            let direct = cn_min_sum(&scaled, variant);
            let lifted = k * cn_min_sum(&inputs, variant);
            prop_assert_eq!(direct, lifted, "variant {:?}, j = {}", variant, j);
        }
    }

    #[test]
    fn forward_backward_matches_direct_exclusion_folds(inputs in llr_vec(3..8)) {
        let out = extrinsic(KernelKind::PairwiseExact, &inputs);
        for k in 0..inputs.len() {
            let mut acc = None;
            for (i, &x) in inputs.iter().enumerate() {
                if i == k {
                    continue;
                }
                acc = Some(match acc {
                    None => x,
                    Some(a) => cn_pairwise_exact(a, x),
                });
            }
            let direct = acc.unwrap();
            prop_assert!(
                (out[k] - direct).abs() <= 1e-11 * (1.0 + direct.abs()),
                "slot {k}: tree {} vs fold {direct}",
                out[k]
            );
        }
    }

    #[test]
    fn min_sum_magnitude_dominates_the_exact_pair(a in llr(), b in llr()) {
        let exact = cn_pairwise_exact(a, b);
        let approx = cn_min_sum(&[a, b], MinSumVariant::Plain);
        prop_assert!(
            approx.abs() >= exact.abs(),
            "msa {} vs exact {}",
            approx.abs(),
            exact.abs()
        );
    }

    #[test]
    fn min_sum_extrinsics_are_permutation_invariant(
        inputs in llr_vec(3..7),
        rotation in 0usize..6,
    ) {
        let d = inputs.len();
        let shift = rotation % d;
        let rotated: Vec<f64> = (0..d).map(|i| inputs[(i + shift) % d]).collect();
        let base = extrinsic(KernelKind::Msa, &inputs);
        let moved = extrinsic(KernelKind::Msa, &rotated);
        for i in 0..d {
            prop_assert_eq!(base[(i + shift) % d], moved[i]);
        }
    }

    #[test]
    fn random_graphs_round_trip_through_their_text_form(
        nv in 1usize..8,
        nc in 1usize..5,
        var_home in proptest::collection::vec(0u32..16, 8),
        check_home in proptest::collection::vec(0u32..16, 5),
        extra in proptest::collection::vec((0u32..16, 0u32..16), 0..12),
    ) {
        // Every node gets at least one edge; extras fill in at random.
        let mut edges = BTreeSet::new();
        for v in 0..nv {
            edges.insert((var_home[v] % nc as u32, v as u32));
        }
        for c in 0..nc {
            edges.insert((c as u32, check_home[c] % nv as u32));
        }
        for (c, v) in extra {
            edges.insert((c % nc as u32, v % nv as u32));
        }
        let edges: Vec<(u32, u32)> = edges.into_iter().collect();
        let g = TannerGraph::from_edges(nv, nc, &edges).unwrap();
        let text = g.to_alist();
        let back = parse_alist(&text).unwrap();
        prop_assert_eq!(&g, &back);
        prop_assert_eq!(text, back.to_alist());
    }
}
