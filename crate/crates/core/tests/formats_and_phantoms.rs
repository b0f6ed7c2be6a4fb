use dualshear::cartoon::{self, CartoonSpec};
use dualshear::io;
use dualshear::system::{DualizableSystem, SystemConfig};

fn sys(n: usize) -> DualizableSystem {
    DualizableSystem::new(SystemConfig { n, order: 2, ..SystemConfig::default() }).unwrap()
}

#[test]
fn coefficient_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = sys(32);
    let f = cartoon::generate(&CartoonSpec::default_phantom(), 32).unwrap();
    let c = s.analyze(&f).unwrap();
    io::save_coefficients(dir.path(), &c, Some("abc")).unwrap();
    let (back, man) = io::load_coefficients(dir.path()).unwrap();
    assert_eq!(back, c);
    assert_eq!(man.config_hash.as_deref(), Some("abc"));
    assert_eq!(man.grid.n, 32);
    let g = s.synthesize_dual(&back).unwrap();
    let err = f.iter().zip(&g).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err < 1e-11);
}

#[test]
fn bank_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let s = sys(16);
    io::save_bank(dir.path(), s.bank(), None).unwrap();
    let (_, g, w) = io::load_bank(dir.path()).unwrap();
    assert_eq!(g, s.bank().g);
    assert_eq!(w, s.bank().w);
}

#[test]
fn pgm_16_bit_quantization() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("x.pgm");
    let data: Vec<f64> = (0..64).map(|i| i as f64 / 63.0).collect();
    io::write_pgm(&p, &data, 8, 16, 0.0, 1.0).unwrap();
    let im = io::read_pgm(&p).unwrap();
    assert_eq!(im.n, 8);
    let err = data.iter().zip(&im.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(err <= 0.5 / 65535.0 + 1e-15, "{err}");
}

#[test]
fn signal_by_extension() {
    let dir = tempfile::tempdir().unwrap();
    let data: Vec<f64> = (0..256).map(|i| (i as f64 * 0.1).sin()).collect();
    let raw = dir.path().join("f.bin");
    io::save_signal(&raw, &data, 16, serde_json::json!({})).unwrap();
    assert_eq!(io::load_signal(&raw).unwrap().data, data);
}

#[test]
fn rejects_non_square_and_truncated_files() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("r.pgm");
    std::fs::write(&p, b"P5\n4 2\n255\n\0\0\0\0\0\0\0\0").unwrap();
    assert!(io::read_pgm(&p).is_err());
    std::fs::write(&p, b"P5\n4 4\n255\n\0\0").unwrap();
    assert!(io::read_pgm(&p).is_err());
}

#[test]
fn phantom_sampling_converges() {
    // pixel-center samples of a cartoon: the L2 gap halves-ish with each refinement
    let spec = CartoonSpec::default_phantom();
    let gaps: Vec<f64> = [128usize, 256, 512].iter().map(|&n| cartoon::refinement_gap(&spec, n).unwrap()).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "{gaps:?}");
    // jump discontinuity: gap ~ N^{-1/2}
    let rate = (gaps[0] / gaps[2]).log2() / 2.0;
    assert!(rate > 0.35 && rate < 0.65, "{rate}");
}

#[test]
fn default_phantom_is_valid() {
    let spec = CartoonSpec::default_phantom();
    spec.validate().unwrap();
    let rep = cartoon::curvature_report(&spec);
    assert!(rep.max_abs_kappa.is_finite() && rep.max_abs_kappa > 1.0 / 0.5);
    assert!(rep.c2_norm_f0 <= 1.0 && rep.c2_norm_f1 <= 1.0);
    let back = CartoonSpec::parse(&spec.to_text()).unwrap();
    assert_eq!(back, spec);
}
