use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use translab::experiments::{format_f64, predict_limit_configuration, random_configuration};
use translab::kernels::{self, BoundaryTrace};
use translab::{specfun, DomainSpec, Point2};

fn domains() -> impl Strategy<Value = DomainSpec> {
    prop_oneof![
        (-2.0..2.0f64).prop_map(|b| DomainSpec::LowerHalfPlane { b }),
        (0.1..1.4f64).prop_map(|half_angle| DomainSpec::Wedge { apex: Point2::new(0.0, 0.0), half_angle }),
        (0.2..3.0f64).prop_map(|radius| DomainSpec::ExteriorDisk { radius }),
        (0.2..2.0f64, 0.0..2.0f64).prop_map(|(t, s)| DomainSpec::UShape { t, s }),
        (-1.5..1.5f64, -1.0..1.0f64).prop_map(|(slope, offset)| DomainSpec::SlantedUpperHalfPlane { slope, offset }),
    ]
}

fn point() -> impl Strategy<Value = Point2> {
    (-6.0..6.0f64, -6.0..6.0f64).prop_map(|(a, b)| Point2::new(a, b))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn boundary_distance_is_1_lipschitz(d in domains(), p in point(), q in point()) {
        prop_assume!(d.contains(p) && d.contains(q));
        let (dp, dq) = (d.dist_to_boundary(p).unwrap(), d.dist_to_boundary(q).unwrap());
        prop_assert!((dp - dq).abs() <= p.dist(q) + 1e-12, "{dp} {dq} {}", p.dist(q));
    }

    #[test]
    fn bessel_k_ordering(x in 1e-3..50.0f64) {
        let k0 = specfun::bessel_k0(x).unwrap();
        let k1 = specfun::bessel_k1(x).unwrap();
        prop_assert!(k0 > 0.0 && k1 > k0);
        prop_assert!(specfun::bessel_k0(x * 1.01).unwrap() < k0);
        prop_assert!(specfun::bessel_i0(x).unwrap() >= 1.0);
    }

    #[test]
    fn ei_derivative_matches_integrand(x in -30.0..-0.1f64) {
        let h = 1e-5 * x.abs();
        let d = (specfun::expint_ei(x + h).unwrap() - specfun::expint_ei(x - h).unwrap()) / (2.0 * h);
        let exact = x.exp() / x;
        prop_assert!((d - exact).abs() <= 1e-6 * exact.abs(), "{d} {exact}");
    }

    #[test]
    fn duffin_extension_stays_within_data_range(
        x0 in -3.0..3.0f64, cl in -2.0..2.0f64, cr in -2.0..2.0f64,
        x2 in -20.0..20.0f64, depth in 0.05..200.0f64,
    ) {
        let t = BoundaryTrace::step(x0, cl, cr).unwrap();
        let v = kernels::poisson_duffin(&t, 0.0, Point2::new(x2, -depth)).unwrap();
        let (lo, hi) = (cl.min(cr), cl.max(cr));
        prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "{v} outside [{lo}, {hi}]");
    }

    #[test]
    fn heat_flow_is_monotone_in_data(x0 in -3.0..3.0f64, x in -10.0..10.0f64, t in 0.01..100.0f64) {
        // A step that is pointwise larger evolves to a larger value.
        let small = BoundaryTrace::step(x0, 0.0, 1.0).unwrap();
        let large = BoundaryTrace::step(x0 - 1.0, 0.0, 1.0).unwrap();
        let a = kernels::heat_convolve(&small, x, t).unwrap();
        let b = kernels::heat_convolve(&large, x, t).unwrap();
        prop_assert!(b >= a - 1e-12);
        prop_assert!((0.0..=1.0).contains(&a));
    }

    #[test]
    fn floats_print_round_trip(x in prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO) {
        let s = format_f64(x);
        let back: f64 = s.parse().unwrap();
        prop_assert_eq!(back.to_bits(), x.to_bits(), "{}", s);
    }

    #[test]
    fn wing_bookkeeping_matches_construction(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (cfg, truth) = random_configuration(&mut rng);
        let got = predict_limit_configuration(&cfg).unwrap();
        let total = |v: &[translab::experiments::Multiplicity]| v.iter().map(|m| m.multiplicity).sum::<usize>();
        prop_assert_eq!(total(&got.up), got.entropy);
        prop_assert_eq!(&got, &truth);
    }
}

#[test]
fn duffin_mass_is_one_across_depths() {
    for t in [1e-3, 0.1, 1.0, 10.0, 1e3, 1e6] {
        let m = kernels::duffin_kernel_mass(t).unwrap();
        assert!((m - 1.0).abs() < 1e-8, "depth {t}: {m}");
    }
}
