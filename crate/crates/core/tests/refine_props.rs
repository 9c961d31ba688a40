use proptest::prelude::*;
use tricube::raster::Raster;
use tricube::refine::{conv2d, conv3x3, mac_forward, rconv, ConvWeights, MacConfig};

fn features(w: usize, h: usize, c: usize) -> impl Strategy<Value = Raster> {
    prop::collection::vec(-1.0f32..1.0, w * h * c).prop_map(move |v| Raster::from_vec(w, h, c, v).unwrap())
}

fn no_bias(mut cfg: MacConfig) -> MacConfig {
    for t in cfg.projections.iter_mut().chain(cfg.convs.iter_mut()) {
        t.bias.iter_mut().for_each(|b| *b = 0.0);
    }
    cfg.head.bias.iter_mut().for_each(|b| *b = 0.0);
    cfg
}

fn combine(x: &Raster, y: &Raster, a: f32, b: f32) -> Raster {
    let data = x.data().iter().zip(y.data()).map(|(p, q)| a * p + b * q).collect();
    Raster::from_vec(x.width(), x.height(), x.channels(), data).unwrap()
}

fn close(x: &Raster, y: &Raster, rel: f64) -> bool {
    let scale = y.data().iter().fold(0.0f64, |m, v| m.max(f64::from(v.abs()))).max(1.0);
    x.data().iter().zip(y.data()).all(|(p, q)| (f64::from(*p) - f64::from(*q)).abs() <= rel * scale)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn rconv_at_zero_is_conv(f in features(9, 8, 2), seed in any::<u64>()) {
        let cfg = MacConfig::random(2, 1, &[0.0], seed).unwrap();
        let w = &cfg.convs[0];
        prop_assert_eq!(rconv(&f, 0.0, w).unwrap(), conv3x3(&f, w).unwrap());
    }

    #[test]
    fn mac_is_linear_without_bias(x in features(10, 9, 4), y in features(10, 9, 4), a in -2.0f32..2.0, b in -2.0f32..2.0, seed in any::<u64>()) {
        let cfg = no_bias(MacConfig::random(4, 1, &[0.0, 0.7], seed).unwrap());
        let lhs = mac_forward(&combine(&x, &y, a, b), &cfg).unwrap();
        let rhs = combine(&mac_forward(&x, &cfg).unwrap(), &mac_forward(&y, &cfg).unwrap(), a, b);
        prop_assert!(close(&lhs, &rhs, 1e-5));
    }

    #[test]
    fn rconv_is_linear_without_bias(x in features(11, 7, 1), y in features(11, 7, 1), a in -2.0f32..2.0, angle in 0.0..1.57f64, seed in any::<u64>()) {
        let mut w = MacConfig::random(1, 1, &[0.0], seed).unwrap().convs[0].clone();
        w.bias = vec![0.0];
        let lhs = rconv(&combine(&x, &y, a, 1.0), angle, &w).unwrap();
        let rhs = combine(&rconv(&x, angle, &w).unwrap(), &rconv(&y, angle, &w).unwrap(), a, 1.0);
        prop_assert!(close(&lhs, &rhs, 1e-5));
    }

    #[test]
    fn identity_conv_is_a_no_op(f in features(6, 5, 3)) {
        prop_assert_eq!(conv2d(&f, &ConvWeights::identity(3)).unwrap(), f);
    }
}
