use proptest::prelude::*;

use perfrec::segeval::{
    confusion_counts, label_components, largest_component, mann_whitney_u, metrics, Alternative, Connectivity, Mask,
};
use perfrec::tensorio::Tensor;

fn mask_pair() -> impl Strategy<Value = (Mask, Mask)> {
    (1usize..12, 1usize..12).prop_flat_map(|(h, w)| {
        (
            proptest::collection::vec(0u8..=1, h * w),
            proptest::collection::vec(0u8..=1, h * w),
        )
            .prop_map(move |(a, b)| (Mask::new(h, w, a).unwrap(), Mask::new(h, w, b).unwrap()))
    })
}

fn connectivity() -> impl Strategy<Value = Connectivity> {
    prop_oneof![Just(Connectivity::Four), Just(Connectivity::Eight)]
}

proptest! {
    #[test]
    fn metrics_stay_in_unit_range((p, g) in mask_pair()) {
        let m = metrics(&confusion_counts(&p, &g).unwrap());
        for v in m.values() {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!((m.dice - 2.0 * m.iou / (1.0 + m.iou)).abs() < 1e-12);
        prop_assert!(m.iou <= m.dice + 1e-15);
    }

    #[test]
    fn specificity_is_sensitivity_of_complements((p, g) in mask_pair()) {
        let m = metrics(&confusion_counts(&p, &g).unwrap());
        let c = metrics(&confusion_counts(&p.complement(), &g.complement()).unwrap());
        prop_assert_eq!(m.specificity, c.sensitivity);
    }

    #[test]
    fn metrics_are_symmetric_where_expected((p, g) in mask_pair()) {
        let a = metrics(&confusion_counts(&p, &g).unwrap());
        let b = metrics(&confusion_counts(&g, &p).unwrap());
        prop_assert_eq!(a.dice, b.dice);
        prop_assert_eq!(a.iou, b.iou);
        prop_assert_eq!(a.precision, b.sensitivity);
    }

    #[test]
    fn largest_component_is_idempotent((p, _) in mask_pair(), conn in connectivity()) {
        let once = largest_component(&p, conn);
        prop_assert_eq!(&largest_component(&once, conn), &once);
        prop_assert!(once.data.iter().zip(&p.data).all(|(a, b)| a <= b));
        let comps = label_components(&once.to_bools(), once.height, once.width, conn);
        prop_assert_eq!(comps.count(), usize::from(p.count_ones() > 0));
    }

    #[test]
    fn u_statistics_sum_to_product(
        a in proptest::collection::vec(0u8..20, 1..25),
        b in proptest::collection::vec(0u8..20, 1..25),
    ) {
        let a: Vec<f64> = a.into_iter().map(f64::from).collect();
        let b: Vec<f64> = b.into_iter().map(f64::from).collect();
        let ab = mann_whitney_u(&a, &b, Alternative::TwoSided).unwrap();
        let ba = mann_whitney_u(&b, &a, Alternative::TwoSided).unwrap();
        prop_assert_eq!(ab.u_statistic + ba.u_statistic, (a.len() * b.len()) as f64);
        prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
        prop_assert!(ab.p_value > 0.0 && ab.p_value <= 1.0);
    }

    #[test]
    fn tsr_round_trips(dims in proptest::collection::vec(1u64..5, 1..4), seed in any::<u32>()) {
        let n: u64 = dims.iter().product();
        let f = Tensor::F32 {
            dims: dims.clone(),
            data: (0..n).map(|i| (i as f32 + seed as f32) * 0.37 - 5.0).collect(),
        };
        prop_assert_eq!(Tensor::decode(&f.encode().unwrap()).unwrap(), f);
        let u = Tensor::U8 { dims, data: (0..n).map(|i| ((i as u32 ^ seed) % 2) as u8).collect() };
        prop_assert_eq!(Tensor::decode(&u.encode().unwrap()).unwrap(), u);
    }
}
