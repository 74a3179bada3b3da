mod common;

use common::random_grid;
use lfpp_core::estimate::{ks_statistic, ols, order_quantile};
use lfpp_core::field::Field;
use lfpp_core::lfpp::{across_annulus, around_annulus, build_weighted_grid, crossing_length, distance, Square};
use lfpp_core::{AnnulusSpec, GridSpec, Point, RegionMask};
use proptest::prelude::*;

fn spec() -> GridSpec {
    GridSpec::new(32, 1.0, 2).unwrap()
}

fn point() -> impl Strategy<Value = Point> {
    (-0.9..0.9f64, -0.9..0.9f64).prop_map(|(x, y)| Point::new(x, y))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn symmetric_and_zero_on_diagonal(seed in any::<u64>(), a in point(), b in point()) {
        let g = random_grid(spec(), 1.0, seed, false);
        let ab = distance(&g, a, b, None).unwrap();
        let ba = distance(&g, b, a, None).unwrap();
        prop_assert_eq!(ab.value.finite().unwrap().to_bits(), ba.value.finite().unwrap().to_bits());
        prop_assert_eq!(distance(&g, a, a, None).unwrap().value.finite(), Some(0.0));
        let mut back = ba.path.unwrap();
        back.reverse();
        prop_assert_eq!(ab.path.unwrap(), back);
    }

    #[test]
    fn triangle_inequality(seed in any::<u64>(), a in point(), b in point(), c in point()) {
        let g = random_grid(spec(), 1.0, seed, false);
        let d = |p, q| distance(&g, p, q, None).unwrap().value.finite().unwrap();
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 1e-9);
    }

    #[test]
    fn witness_length_matches_value(seed in any::<u64>(), a in point(), b in point()) {
        let g = random_grid(spec(), 1.0, seed, false);
        let r = distance(&g, a, b, None).unwrap();
        let v = r.value.finite().unwrap();
        prop_assert!((g.path_length(&r.path.unwrap()) - v).abs() <= 1e-12 * v.max(1.0));
    }

    #[test]
    fn shrinking_the_mask_never_shortens(seed in any::<u64>(), a in point(), b in point(), pad in 0.0..0.4f64) {
        let s = spec();
        let g = random_grid(s, 1.0, seed, false);
        let (x0, x1) = (a.x.min(b.x) - pad, a.x.max(b.x) + pad);
        let (y0, y1) = (a.y.min(b.y) - pad, a.y.max(b.y) + pad);
        let delta = s.delta();
        let outer = RegionMask::from_points(&s, |p| p.x >= x0 - delta && p.x <= x1 + delta && p.y >= y0 - delta && p.y <= y1 + delta);
        let inner = RegionMask::from_points(&s, |p| p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1);
        prop_assume!(inner.contains(s.node_of(a).unwrap()) && inner.contains(s.node_of(b).unwrap()));
        prop_assert!(inner.is_subset_of(&outer));
        let full = distance(&g, a, b, None).unwrap().value.finite().unwrap();
        let mid = distance(&g, a, b, Some(&outer)).unwrap().value.finite().unwrap();
        let small = distance(&g, a, b, Some(&inner)).unwrap().value.finite().unwrap();
        prop_assert!(full <= mid && mid <= small);
    }

    #[test]
    fn constant_shift_scales_every_query(seed in any::<u64>(), c in -2.0..2.0f64, xi in 0.1..2.0f64, a in point(), b in point()) {
        let s = spec();
        let base = Field::from_fn(s, |p| (3.0 * p.x + (seed % 7) as f64).sin() * p.y).unwrap();
        let shifted = Field::from_values(s, base.values().iter().map(|v| v + c).collect()).unwrap();
        let g = build_weighted_grid(&base.into_synthetic_mollified(2.0 * s.delta(), 0), xi).unwrap();
        let gc = build_weighted_grid(&shifted.into_synthetic_mollified(2.0 * s.delta(), 0), xi).unwrap();
        let factor = (xi * c).exp();
        let ann = AnnulusSpec::new(Point::new(0.05, -0.05), 0.2, 0.6);
        let square = Square { x0: -0.5, y0: -0.5, side: 1.0 };
        let pairs = [
            (distance(&g, a, b, None).unwrap(), distance(&gc, a, b, None).unwrap()),
            (crossing_length(&g, square).unwrap(), crossing_length(&gc, square).unwrap()),
            (across_annulus(&g, ann).unwrap(), across_annulus(&gc, ann).unwrap()),
            (around_annulus(&g, ann).unwrap(), around_annulus(&gc, ann).unwrap()),
        ];
        for (x, y) in pairs {
            let (x, y) = (x.value.finite().unwrap(), y.value.finite().unwrap());
            if x == 0.0 {
                prop_assert_eq!(y, 0.0);
            } else {
                prop_assert!((y / (factor * x) - 1.0).abs() <= 1e-12, "{} vs {}", y, factor * x);
            }
        }
    }

    #[test]
    fn shrinking_the_annulus_never_shortens_loops(seed in any::<u64>(), r1 in 0.1..0.25f64, w in 0.42..0.5f64, t1 in 0.0..0.08f64, t2 in 0.0..0.08f64) {
        let g = random_grid(spec(), 1.0, seed, false);
        let big = AnnulusSpec::new(Point::ORIGIN, r1, r1 + w);
        let small = AnnulusSpec::new(Point::ORIGIN, r1 + t1, r1 + w - t2);
        let a = around_annulus(&g, big).unwrap().value.finite().unwrap();
        let b = around_annulus(&g, small).unwrap().value.finite().unwrap();
        prop_assert!(b >= a);
    }

    #[test]
    fn across_is_superadditive_over_nested_annuli(seed in any::<u64>(), r in 0.125..0.2f64) {
        let g = random_grid(GridSpec::new(64, 1.0, 2).unwrap(), 1.0, seed, false);
        let across = |r1: f64, r2: f64| across_annulus(&g, AnnulusSpec::new(Point::ORIGIN, r1, r2)).unwrap().value.finite().unwrap();
        prop_assert!(across(r, 4.0 * r) >= across(r, 2.0 * r) + across(2.0 * r, 4.0 * r) - 1e-9);
    }

    #[test]
    fn quantiles_are_monotone(values in prop::collection::vec(-1e3..1e3f64, 1..60), p in 0.01..1.0f64, q in 0.01..1.0f64) {
        let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
        prop_assert!(order_quantile(&values, lo) <= order_quantile(&values, hi));
    }

    #[test]
    fn line_fit_is_affine_equivariant(
        pts in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 3..30),
        scale in 0.1..10.0f64,
        shift in -5.0..5.0f64,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
        let spread = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - x.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let base = ols(&x, &y).unwrap();
        let y2: Vec<f64> = y.iter().map(|v| scale * v + shift).collect();
        let fit = ols(&x, &y2).unwrap();
        let tol = 1e-8 * (1.0 + base.slope.abs() * scale);
        prop_assert!((fit.slope - scale * base.slope).abs() <= tol);
        prop_assert!((fit.r2 - base.r2).abs() <= 1e-8);
    }

    #[test]
    fn ks_is_a_symmetric_bounded_distance(a in prop::collection::vec(-5.0..5.0f64, 1..40), b in prop::collection::vec(-5.0..5.0f64, 1..40)) {
        let ab = ks_statistic(&a, &b).unwrap();
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab, ks_statistic(&b, &a).unwrap());
        prop_assert_eq!(ks_statistic(&a, &a).unwrap(), 0.0);
    }
}

#[test]
fn randomized_axiom_battery() {
    let t = common::axiom_battery(5, 100);
    assert_eq!(t.violations(), 0, "{t:?}");
}
