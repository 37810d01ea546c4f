use fracgeom::bodies::{ConvexBody, Polytope};
use fracgeom::constants::FracParams;
use fracgeom::fields::{layer_cake_sides, RadialProfile, ScalarField};
use fracgeom::fractional::gauge_power;
use fracgeom::quadrature::sphere_grid;
use fracgeom::radialmean::radial_mean_body;
use fracgeom::verify::{check_frac_petty, Tolerances};
use proptest::prelude::*;

fn boxed(lo: [f64; 2], size: [f64; 2]) -> ConvexBody {
    Polytope::axis_box(&lo, &[lo[0] + size[0], lo[1] + size[1]]).unwrap().into()
}

fn ind(b: ConvexBody) -> ScalarField {
    ScalarField::indicator(b, 1.0).unwrap()
}

fn polygon() -> impl Strategy<Value = Polytope> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5..12)
        .prop_filter_map("degenerate hull", |pts| {
            let p = Polytope::from_vertices(pts.into_iter().map(|(x, y)| vec![x, y]).collect()).ok()?;
            (p.volume() > 0.05).then_some(p)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gauge_is_s_homogeneous_and_even(
        w in 0.2f64..3.0, h in 0.2f64..3.0, th in 0.0f64..std::f64::consts::TAU,
        lambda in 0.1f64..10.0, s in 0.1f64..0.9,
    ) {
        let f = ind(boxed([0.0, 0.0], [w, h]));
        let p = FracParams::new(2, s).unwrap();
        let xi = [th.cos(), th.sin()];
        let g = gauge_power(&f, &xi, p).unwrap();
        let scaled = gauge_power(&f, &[lambda * xi[0], lambda * xi[1]], p).unwrap();
        prop_assert!(((scaled - lambda.powf(s) * g) / scaled).abs() < 1e-12);
        prop_assert_eq!(g.to_bits(), gauge_power(&f, &[-xi[0], -xi[1]], p).unwrap().to_bits());
    }

    #[test]
    fn gauge_ignores_translation(
        tx in -5.0f64..5.0, ty in -5.0f64..5.0, th in 0.0f64..std::f64::consts::TAU, s in 0.1f64..0.9,
    ) {
        let p = FracParams::new(2, s).unwrap();
        let xi = [th.cos(), th.sin()];
        let a = gauge_power(&ind(boxed([0.0, 0.0], [1.0, 0.5])), &xi, p).unwrap();
        let b = gauge_power(&ind(boxed([tx, ty], [1.0, 0.5])), &xi, p).unwrap();
        prop_assert!(((a - b) / a).abs() < 1e-9);
    }

    #[test]
    fn covariogram_and_deficit_add_up(poly in polygon(), th in 0.0f64..std::f64::consts::TAU, t in 0.0f64..2.5) {
        let z = [t * th.cos(), t * th.sin()];
        let sum = poly.covariogram(&z) + poly.covariogram_deficit(&z);
        prop_assert!((sum - poly.volume()).abs() < 1e-9 * poly.volume().max(1.0));
    }

    #[test]
    fn layer_cake_two_levels(r1 in 0.1f64..1.0, dr in 0.05f64..1.0, v2 in 0.1f64..2.0, dv in 0.05f64..2.0, s in 0.1f64..0.9) {
        let f = ScalarField::Radial(RadialProfile::new(2, vec![(r1, v2 + dv), (r1 + dr, v2)]).unwrap());
        let (l, r) = layer_cake_sides(&f, FracParams::new(2, s).unwrap(), 256).unwrap();
        prop_assert!(l <= r * (1.0 + 1e-12));
    }

    #[test]
    fn radial_mean_of_order_n_keeps_volume(w in 0.2f64..3.0, h in 0.2f64..3.0) {
        let b = boxed([0.0, 0.0], [w, h]);
        let q = sphere_grid(2, 256).unwrap();
        let r = radial_mean_body(&b, 2.0, &q, 0, 0).unwrap();
        prop_assert!(((r.volume() - w * h) / (w * h)).abs() < 1e-3);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    // the middle term of the fractional Petty chain never exceeds the right one
    #[test]
    fn petty_middle_below_perimeter(poly in polygon()) {
        let q = sphere_grid(2, 64).unwrap();
        let b: ConvexBody = poly.into();
        let [left, right] = check_frac_petty(&b, FracParams::new(2, 0.5).unwrap(), &q, &Tolerances::default()).unwrap();
        prop_assert!(left.passed(), "{:?}", left);
        prop_assert!(right.passed(), "{:?}", right);
    }
}
