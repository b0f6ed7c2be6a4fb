use std::sync::OnceLock;

use dualshear::grid::FourierGrid;
use dualshear::system::{DualizableSystem, SystemConfig};
use dualshear::ShearParam;
use proptest::prelude::*;

fn sys16() -> &'static DualizableSystem {
    static SYS: OnceLock<DualizableSystem> = OnceLock::new();
    SYS.get_or_init(|| DualizableSystem::new(SystemConfig { n: 16, order: 2, ..SystemConfig::default() }).unwrap())
}

proptest! {
    #[test]
    fn shear_reduce_is_canonical((k, e) in (0u32..=10).prop_flat_map(|e| (-(1i64 << e)..=(1i64 << e), Just(e)))) {
        let s = ShearParam::reduce(k, e).unwrap();
        prop_assert!((s.value() - k as f64 / (e as f64).exp2()).abs() < 1e-15);
        prop_assert!(s.q() == 0 || s.q() % 2 != 0);
        let back: ShearParam = s.to_string().parse().unwrap();
        prop_assert_eq!(back, s);
        // every scale at or above j0 admits the shear
        prop_assert!(dualshear::index::k_for(s, s.min_scale()).is_ok());
    }

    #[test]
    fn quarter_turns(v in proptest::collection::vec(-1.0f64..1.0, 64)) {
        let g = FourierGrid::new(8).unwrap();
        let r = g.rotate_signal(&v);
        prop_assert_eq!(g.unrotate_signal(&r), v.clone());
        let r4 = g.rotate_signal(&g.rotate_signal(&g.rotate_signal(&r)));
        prop_assert_eq!(r4, v);
    }

    #[test]
    fn rotate_spectrum_matches_signal(v in proptest::collection::vec(-1.0f64..1.0, 64)) {
        let g = FourierGrid::new(8).unwrap();
        let a = g.rotate_spectrum(&g.forward_real(&v).unwrap());
        let b = g.forward_real(&g.unrotate_signal(&v)).unwrap();
        let err = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-14);
    }

    #[test]
    fn analysis_linear_and_exact(
        seed in any::<u64>(),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let sys = sys16();
        let mut x = seed | 1;
        let mut next = move || { x ^= x << 13; x ^= x >> 7; x ^= x << 17; (x % 1000) as f64 / 1000.0 - 0.5 };
        let f: Vec<f64> = (0..256).map(|_| next()).collect();
        let g: Vec<f64> = (0..256).map(|_| next()).collect();
        let h: Vec<f64> = f.iter().zip(&g).map(|(p, q)| a * p + b * q).collect();
        let want = sys.analyze(&f).unwrap().combine(a, &sys.analyze(&g).unwrap(), b).unwrap();
        let got = sys.analyze(&h).unwrap();
        let err = got.values().zip(want.values()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
        let back = sys.synthesize_dual(&got).unwrap();
        let e = h.iter().zip(&back).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
        prop_assert!(e < 1e-11);
    }

    #[test]
    fn lambda_lookup_is_periodic(flat in 0usize..4608, w1 in -3i64..3) {
        let sys = sys16();
        let f: Vec<f64> = (0..256).map(|i| (i as f64 * 0.37).sin()).collect();
        let c = sys.analyze(&f).unwrap();
        let lam = c.lambda_at(flat).unwrap();
        let v = c.get(&lam).unwrap();
        // shifting m by a full period of the slice lattice lands on the same entry
        let blk = c.blocks.iter().find(|b| b.cone == lam.cone && b.shear == lam.s).unwrap();
        let sl = blk.slices.iter().find(|s| s.j_label() == lam.j && s.p == lam.p).unwrap();
        let m = (lam.m.0 + w1 * sl.a as i64, lam.m.1);
        let shifted = dualshear::LambdaIndex { m, ..lam };
        prop_assert_eq!(c.get(&shifted).unwrap(), v);
    }

    #[test]
    fn ranking_is_sorted_permutation(seed in 0u64..1000) {
        let sys = sys16();
        let f: Vec<f64> = (0..256).map(|i| ((i as u64 * 2654435761 + seed) % 97) as f64 / 97.0).collect();
        let c = sys.analyze(&f).unwrap();
        let r = c.ranking();
        let vals: Vec<f64> = c.values().map(|v| v.norm_sqr()).collect();
        let mut seen = vec![false; vals.len()];
        for w in r.windows(2) {
            let (x, y) = (vals[w[0] as usize], vals[w[1] as usize]);
            prop_assert!(x > y || (x == y && w[0] < w[1]));
        }
        for &i in &r { seen[i as usize] = true; }
        prop_assert!(seen.iter().all(|s| *s));
    }
}
