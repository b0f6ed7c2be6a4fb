//! Acceptance run: one PASS/FAIL line per criterion with the measured values.
//! `cargo test --test validation -- 9` runs a single criterion.

use std::io::Write;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dualshear::bench;
use dualshear::cartoon::{self, CartoonSpec};
use dualshear::filters::partition_identity_residual;
use dualshear::onb::{gram_check, parseval_fraction};
use dualshear::support::{cap_scan, SupportProbe};
use dualshear::system::{DualizableSystem, ElementKind, SystemConfig};
use dualshear::ShearParam;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn sys(n: usize) -> DualizableSystem {
    DualizableSystem::new(SystemConfig::with_n(n)).unwrap()
}

fn random_signal(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n * n).map(|_| rng.random::<f64>() - 0.5).collect()
}

fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = a.iter().map(|x| x * x).sum();
    (num / den).sqrt()
}

fn criterion_01_perfect_reconstruction() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for n in [64usize, 128, 256] {
        let s = sys(n);
        for _ in 0..20 {
            let f = random_signal(&mut rng, n);
            let back = s.synthesize_dual(&s.analyze(&f).unwrap()).unwrap();
            worst = worst.max(rel_l2(&f, &back));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    outcome(
        worst <= 1e-10 && secs <= 30.0,
        format!("max rel err {worst:.3e} (tol 1e-10), 60 signals in {secs:.1} s (limit 30 s)"),
    )
}

fn criterion_02_weighted_parseval() -> Outcome {
    let s = sys(128);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let f = random_signal(&mut rng, 128);
        let spec = s.grid().forward_real(&f).unwrap();
        let want: f64 = spec.iter().zip(&s.bank().w).map(|(v, w)| w * v.norm_sqr()).sum();
        let got = s.analyze(&f).unwrap().energy();
        worst = worst.max((got - want).abs() / want);
    }
    outcome(worst <= 1e-8, format!("max relative mismatch {worst:.3e} (tol 1e-8), 20 signals on 128^2"))
}

fn criterion_03_partition_identity() -> Outcome {
    let s = DualizableSystem::new(SystemConfig { jmax: Some(6), ..SystemConfig::with_n(128) }).unwrap();
    let r = partition_identity_residual(s.bank(), s.filter_tables()).unwrap();
    outcome(r < 1e-11, format!("residual {r:.3e} on 128^2, jmax 6 (tol 1e-11)"))
}

fn criterion_04_frame_bounds() -> Outcome {
    let s = sys(256);
    let b = s.bank();
    let pass = b.a_hat > 0.0 && b.a_hat >= b.lower_bound_cert;
    outcome(
        pass,
        format!(
            "A_hat {:.4}, certificate {:.4} (delta_phi {:.4}, delta_g {:.4}), B_hat {:.4}, B/A {:.3}",
            b.a_hat,
            b.lower_bound_cert,
            b.delta_phi,
            b.delta_g,
            b.b_hat,
            b.b_hat / b.a_hat
        ),
    )
}

fn criterion_05_onb() -> Outcome {
    let s = sys(128);
    let grid = s.grid();
    let n = grid.n();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_gram: f64 = 0.0;
    let mut worst_gap: f64 = 0.0;
    let mut max_count = 0;
    for sh in ["0", "1/2", "1"] {
        let sp: ShearParam = sh.parse().unwrap();
        let basis = s.basis(s.bank().shear_index(sp).unwrap());
        let g = gram_check(basis, 3, 3, 2).unwrap();
        max_count = max_count.max(g.count);
        worst_gram = worst_gram.max(g.max_off_diagonal).max(g.max_diagonal_deviation);
        for _ in 0..3 {
            let r = (n / 8) as i64;
            let spec: Vec<Complex64> = (0..n * n)
                .map(|i| {
                    let (a, b) = (grid.freq(i / n), grid.freq(i % n));
                    if a.abs() < r && b.abs() < r {
                        Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                    } else {
                        Complex64::default()
                    }
                })
                .collect();
            worst_gap = worst_gap.max((1.0 - parseval_fraction(basis, &spec, u32::MAX, u32::MAX)).abs());
        }
    }
    let pass = max_count <= 2000 && worst_gram <= 1e-3 && worst_gap <= 1e-3;
    outcome(pass, format!("Gram deviation {worst_gram:.3e}, completeness gap {worst_gap:.3e} (tol 1e-3), subsystems of {max_count} elements"))
}

fn criterion_06_support_cap() -> Outcome {
    let probe = SupportProbe::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for sh in ["0", "1/2", "1"] {
        let sc = cap_scan(&probe, sh.parse().unwrap(), 0, 4).unwrap();
        let ok = sc.variation <= 0.10 && sc.trend <= 0.0;
        pass &= ok;
        let cs: Vec<String> = sc.fits.iter().map(|f| format!("{:.2}", f.c)).collect();
        parts.push(format!("s={sh}: c=[{}] var {:.0}% trend {:+.2}", cs.join(","), 100.0 * sc.variation, sc.trend));
    }
    outcome(pass, format!("{} (need var <= 10%, trend <= 0)", parts.join("; ")))
}

fn criterion_07_theta_path() -> Outcome {
    let s = sys(64);
    let f: Vec<f64> = vec![0.0; 64 * 64];
    let c = s.analyze(&f).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let lam = c.lambda_at(rng.random_range(0..c.len())).unwrap();
        let a = s.element_spatial_complex(&lam, ElementKind::Primal).unwrap();
        let b = s.element_theta_spatial(&lam).unwrap();
        worst = worst.max(a.iter().zip(&b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max));
    }
    outcome(worst <= 1e-10, format!("max spatial difference {worst:.3e} over 50 random indices (tol 1e-10)"))
}

fn criterion_08_decay() -> Outcome {
    let n = 512;
    let s4 = sys(n);
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec) in [("phantom", CartoonSpec::default_phantom()), ("disk", CartoonSpec::disk([0.5, 0.5], 0.3))] {
        let f = cartoon::generate(&spec, n).unwrap();
        let r = bench::decay_probe(&f, &s4, None, None).unwrap();
        let js = r.j_slope.unwrap_or(f64::NAN);
        pass &= js <= -0.70;
        parts.push(format!("{name} j-slope {js:.3}"));
    }
    let f = cartoon::generate(&CartoonSpec::default_phantom(), n).unwrap();
    let mut ps = Vec::new();
    for k in [2u32, 3, 4, 5] {
        let s = DualizableSystem::new(SystemConfig { order: k, ..SystemConfig::with_n(n) }).unwrap();
        ps.push((k, bench::decay_probe(&f, &s, None, None).unwrap().p_slope.unwrap_or(f64::NAN)));
    }
    let p4 = ps.iter().find(|p| p.0 == 4).unwrap().1;
    let mono = ps.windows(2).all(|w| w[1].1 < w[0].1);
    pass &= p4 <= -1.0 && mono;
    let pl: Vec<String> = ps.iter().map(|(k, v)| format!("K{k} {v:.2}")).collect();
    parts.push(format!("p-slopes [{}] monotone {mono}", pl.join(", ")));
    outcome(pass, format!("{} (need j <= -0.70, p(K4) <= -1)", parts.join("; ")))
}

fn criterion_09_nterm() -> Outcome {
    let t = Instant::now();
    let n = 512;
    let s = sys(n);
    let f = cartoon::generate(&CartoonSpec::default_phantom(), n).unwrap();
    let budgets: Vec<usize> = (8..=13).map(|e| 1usize << e).collect();
    let sh = bench::shearlet_curve(&f, &s, &budgets).unwrap();
    let tn = bench::tensor_curve(&f, &s, &budgets).unwrap();
    let fit = bench::rate_fit(&sh).unwrap();
    let tfit = bench::rate_fit(&tn).unwrap();
    let below = sh.points.iter().zip(&tn.points).all(|(a, b)| a.1 < b.1);
    let secs = t.elapsed().as_secs_f64();
    let pass = fit.log_corrected_slope <= -0.75 && below && secs <= 600.0;
    let errs: Vec<String> =
        sh.points.iter().zip(&tn.points).map(|(a, b)| format!("{}:{:.4}/{:.4}", a.0, a.1, b.1)).collect();
    outcome(pass,
        format!(
            "log-corrected slope {:.3} (plain {:.3}; tensor {:.3}), below baseline {below}, N:shearlet/tensor [{}], {secs:.0} s",
            fit.log_corrected_slope,
            fit.slope,
            tfit.slope,
            errs.join(" ")
        ),
    )
}

fn nterm_csv(bin: &str, img: &Path, out: &Path) -> Vec<u8> {
    let st = Command::new(bin)
        .args(["nterm", img.to_str().unwrap(), "--budgets", "64,256,1024,4096", "--out", out.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    std::fs::read(out).unwrap()
}

fn criterion_10_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_dualshear");
    let dir = tempfile::tempdir().unwrap();
    let img = dir.path().join("phantom.pgm");
    let st = Command::new(bin).args(["gen-cartoon", "default", img.to_str().unwrap(), "--n", "128"]).output().unwrap();
    assert!(st.status.success(), "{}", String::from_utf8_lossy(&st.stderr));
    let a = nterm_csv(bin, &img, &dir.path().join("a.csv"));
    let b = nterm_csv(bin, &img, &dir.path().join("b.csv"));
    outcome(
        a == b && !a.is_empty(),
        format!("two nterm runs on a 128^2 phantom: {} bytes each, identical {}", a.len(), a == b),
    )
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 10] = [
        (1, criterion_01_perfect_reconstruction),
        (2, criterion_02_weighted_parseval),
        (3, criterion_03_partition_identity),
        (4, criterion_04_frame_bounds),
        (5, criterion_05_onb),
        (6, criterion_06_support_cap),
        (7, criterion_07_theta_path),
        (8, criterion_08_decay),
        (9, criterion_09_nterm),
        (10, criterion_10_determinism),
    ];
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let only: Option<u32> = std::env::args().skip(1).find_map(|a| a.parse().ok());
    let mut failed = 0;
    for (id, run) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let o = run();
        failed += usize::from(!o.pass);
        println!("criterion {id:2}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        let _ = std::io::stdout().flush();
    }
    println!("acceptance: {failed} criteria failing");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
