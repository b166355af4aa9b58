use mautner::grid::TimeGrid;
use mautner::group::*;
use mautner::kernel::{group_element_operator, induced_kernel, operator_norm};
use mautner::sigma::{loglog_slope, mask_m, scheme_default, sigma_operator};
use mautner::symbols::{involution, make_bump_profile, FourierProfile};
use num_complex::Complex64;
use proptest::prelude::*;

fn coord() -> impl Strategy<Value = f64> {
    -2.0..2.0f64
}

fn element() -> impl Strategy<Value = GroupElement> {
    (coord(), coord(), coord(), coord(), coord()).prop_map(|(t, a, b, c, d)| GroupElement::new(t, Complex64::new(a, b), Complex64::new(c, d)))
}

fn dual() -> impl Strategy<Value = DualVector> {
    [coord(), coord(), coord(), coord()].prop_map(DualVector::from_reals)
}

fn param() -> impl Strategy<Value = f64> {
    -1.0..=1.0f64
}

fn bump(center: DualVector) -> FourierProfile {
    make_bump_profile(0.1, 0.7, center, 1.1, Complex64::new(0.9, -0.4)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn group_law(p in param(), g in element(), h in element(), k in element()) {
        let ctx = GroupContext::default();
        let lhs = multiply(&ctx, p, &multiply(&ctx, p, &g, &h).unwrap(), &k).unwrap();
        let rhs = multiply(&ctx, p, &g, &multiply(&ctx, p, &h, &k).unwrap()).unwrap();
        prop_assert!(lhs.max_distance(&rhs) <= 1e-11);
        let gi = inverse(&ctx, p, &g).unwrap();
        prop_assert!(multiply(&ctx, p, &g, &gi).unwrap().max_distance(&GroupElement::identity()) <= 1e-12);
        prop_assert!(inverse(&ctx, p, &gi).unwrap().max_distance(&g) <= 1e-12);
    }

    #[test]
    fn pairing_duality(p in param(), t in coord(), g in element(), l in dual()) {
        let ctx = GroupContext::default();
        let c = g.fiber();
        let lhs = pairing(&automorphism_alpha(&ctx, p, t, c), &l);
        let rhs = pairing(&c, &dual_action(&ctx, p, t, &l));
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        // the dual action is a flow
        let twice = dual_action(&ctx, p, t, &dual_action(&ctx, p, 0.5, &l));
        prop_assert!(twice.distance(&dual_action(&ctx, p, t + 0.5, &l)) <= 1e-12);
    }

    #[test]
    fn iso_h_identity_and_inverse(p0 in 0.1..1.0f64, p in 0.1..1.0f64, g in element()) {
        prop_assert_eq!(iso_h(p, p, &g).unwrap(), g);
        let back = iso_h(p, p0, &iso_h(p0, p, &g).unwrap()).unwrap();
        prop_assert!(back.max_distance(&g) <= 1e-12);
    }

    #[test]
    fn kernel_support_is_banded(p in param(), l in dual()) {
        let ctx = GroupContext::default();
        let grid = TimeGrid::closed(2.0, 33).unwrap();
        let a = bump(DualVector::zero());
        let k = induced_kernel(&ctx, p, &l, &a, &grid).unwrap();
        let (lo, hi) = a.time_interval();
        for (i, s) in grid.points().iter().enumerate() {
            for (j, t) in grid.points().iter().enumerate() {
                if s - t < lo || s - t > hi {
                    prop_assert_eq!(k.kernel()[(i, j)], Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn adjoint_symbol_gives_adjoint_kernel(p in -0.5..0.5f64, l in dual()) {
        let ctx = GroupContext::default();
        let grid = TimeGrid::closed(3.0, 48).unwrap();
        let a = bump(DualVector::new(Complex64::new(0.2, 0.0), Complex64::new(0.0, -0.1)));
        let k = induced_kernel(&ctx, p, &l, &a, &grid).unwrap();
        let ks = induced_kernel(&ctx, p, &l, &involution(&ctx, p, &a), &grid).unwrap();
        let diff = (ks.kernel() - k.kernel().adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-12, "{}", diff);
    }

    #[test]
    fn group_elements_are_unitary(p in param(), l in dual(), g in element(), steps in -20i64..20) {
        let ctx = GroupContext::default();
        let grid = TimeGrid::periodic(3.0, 60).unwrap();
        let m = GroupElement::new(steps as f64 * grid.spacing(), g.z, g.w);
        let u = group_element_operator(&ctx, p, &l, &m, &grid).unwrap();
        prop_assert!((operator_norm(&u) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn masks_partition(delta in 0.01..1.0f64) {
        let grid = TimeGrid::closed(4.0, 65).unwrap();
        let s = scheme_default(delta, &grid).unwrap();
        prop_assert!(s.r * s.epsilon <= 1.0 + 1e-12);
        let mut cover = vec![0; grid.len()];
        for j in s.j_min..=s.j_max {
            for (i, b) in mask_m(&s, j, &grid).unwrap().indicator().iter().enumerate() {
                cover[i] += *b as u32;
            }
        }
        prop_assert!(cover.iter().all(|&c| c == 1));
    }

    #[test]
    fn sigma_is_pi_at_zero(delta in 0.005..1.0f64, l in dual()) {
        let ctx = GroupContext::default();
        let grid = TimeGrid::closed(3.0, 40).unwrap();
        let a = bump(DualVector::zero());
        let s = scheme_default(delta, &grid).unwrap();
        let sigma = sigma_operator(&ctx, 0.0, &l, &a, &s, &grid).unwrap();
        let pi = induced_kernel(&ctx, 0.0, &l, &a, &grid).unwrap();
        prop_assert_eq!(sigma.kernel(), pi.kernel());
    }

    #[test]
    fn slope_recovers_power_laws(k in 0.1..3.0f64, power in -2.0..3.0f64) {
        let x = [0.5, 0.25, 0.125, 0.0625];
        let y = x.map(|v: f64| k * v.powf(power));
        prop_assert!((loglog_slope(&x, &y).unwrap() - power).abs() <= 1e-10);
    }
}
