use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use dualshear::bench::{self, NORM_NOTE};
use dualshear::cartoon::{self, CartoonSpec};
use dualshear::config::RunConfig;
use dualshear::error::{Error, Result};
use dualshear::filters::partition_identity_residual;
use dualshear::io::{self, RunManifest};
use dualshear::onb::{gram_check, parseval_fraction};
use dualshear::system::{DualizableSystem, TIE_BREAK_POLICY};
use dualshear::ShearParam;

#[derive(Parser)]
#[command(name = "dualshear", version, about = "Dualizable shearlet frames on a periodic grid")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample a cartoon phantom (`default` for the built-in one).
    GenCartoon {
        spec: String,
        out: PathBuf,
        #[arg(long, default_value_t = 512)]
        n: usize,
    },
    /// Analyze an image into a coefficient directory.
    Analyze {
        img: PathBuf,
        coeff_dir: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Dual synthesis from a coefficient directory.
    Synth {
        coeff_dir: PathBuf,
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Frame bounds, floors and partition residual of the configured bank.
    FrameReport {
        config: PathBuf,
        /// Also write the bank multipliers here.
        #[arg(long)]
        bank_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gram and completeness checks of the per-shear bases at s in {0, 1/2, 1}.
    OnbCheck {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// N-term curve (CSV) with fitted slopes.
    Nterm {
        img: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        budgets: Vec<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "nterm.csv")]
        out: PathBuf,
        /// Skip the separable baseline.
        #[arg(long)]
        no_baseline: bool,
    },
    /// Coefficient maxima per scale and per level with slope fits.
    DecayProbe {
        img: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn config_for(path: Option<&Path>, n: usize) -> Result<RunConfig> {
    let cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig { n, ..RunConfig::default() },
    };
    if cfg.n != n {
        return Err(Error::Config(format!("config grid {} does not match input grid {n}", cfg.n)));
    }
    Ok(cfg)
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn manifest(cmd: &str, cfg: &RunConfig, inputs: &[&Path], outputs: &[&Path], report: serde_json::Value) -> RunManifest {
    RunManifest {
        command: cmd.into(),
        config_hash: cfg.hash(),
        config: cfg.canonical(),
        inputs: inputs.iter().map(|p| p.display().to_string()).collect(),
        outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
        tie_break: TIE_BREAK_POLICY.into(),
        norm: NORM_NOTE.into(),
        report,
    }
}

fn emit_report(cmd: &str, cfg: &RunConfig, inputs: &[&Path], out: Option<&Path>, report: serde_json::Value) -> Result<()> {
    let outs: Vec<&Path> = out.into_iter().collect();
    let man = manifest(cmd, cfg, inputs, &outs, report);
    println!("{}", serde_json::to_string_pretty(&man)?);
    if let Some(p) = out {
        io::write_manifest(p, &man)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::GenCartoon { spec, out, n } => {
            let s = if spec == "default" { CartoonSpec::default_phantom() } else { CartoonSpec::load(Path::new(&spec))? };
            let f = cartoon::generate(&s, n)?;
            let rep = cartoon::curvature_report(&s);
            io::save_signal(&out, &f, n, json!({ "phantom": s.to_text() }))?;
            let cfg = RunConfig { n, ..RunConfig::default() };
            let man = manifest("gen-cartoon", &cfg, &[Path::new(&spec)], &[&out], json!({ "curvature": rep, "spec": s }));
            io::write_manifest(&manifest_path(&out), &man)?;
            eprintln!("wrote {} ({n}x{n}), max |kappa| {:.4}", out.display(), rep.max_abs_kappa);
        }
        Cmd::Analyze { img, coeff_dir, config } => {
            let im = io::load_signal(&img)?;
            let cfg = config_for(config.as_deref(), im.n)?;
            let sys = DualizableSystem::new(cfg.system())?;
            let c = sys.analyze(&im.data)?;
            io::save_coefficients(&coeff_dir, &c, Some(&cfg.hash()))?;
            let man = manifest("analyze", &cfg, &[&img], &[&coeff_dir], json!({ "count": c.len(), "energy": c.energy() }));
            io::write_manifest(&coeff_dir.join("run.json"), &man)?;
            eprintln!("{} coefficients in {}", c.len(), coeff_dir.display());
        }
        Cmd::Synth { coeff_dir, out, config } => {
            let (c, cm) = io::load_coefficients(&coeff_dir)?;
            let cfg = config_for(config.as_deref(), cm.grid.n)?;
            if let Some(h) = &cm.config_hash {
                if config.is_some() && *h != cfg.hash() {
                    return Err(Error::Config(format!("coefficients were produced under config {h}")));
                }
            }
            let sys = DualizableSystem::new(cfg.system())?;
            let f = sys.synthesize_dual(&c)?;
            io::save_signal(&out, &f, cm.grid.n, json!({ "coefficients": coeff_dir.display().to_string() }))?;
            let man = manifest("synth", &cfg, &[&coeff_dir], &[&out], json!({}));
            io::write_manifest(&manifest_path(&out), &man)?;
        }
        Cmd::FrameReport { config, bank_dir, out } => {
            let cfg = RunConfig::load(&config)?;
            let sys = DualizableSystem::new(cfg.system())?;
            let bank = sys.bank();
            let residual = partition_identity_residual(bank, sys.filter_tables())?;
            if let Some(d) = &bank_dir {
                io::save_bank(d, bank, Some(&cfg.hash()))?;
            }
            let report = json!({
                "a_hat": bank.a_hat,
                "b_hat": bank.b_hat,
                "ratio": bank.b_hat / bank.a_hat,
                "delta_phi": bank.delta_phi,
                "delta_g": bank.delta_g,
                "lower_bound_certificate": bank.lower_bound_cert,
                "certificate_holds": bank.a_hat >= bank.lower_bound_cert,
                "partition_residual": residual,
                "jmax": bank.jmax,
                "shear_count": bank.shears.len(),
                "max_truncation_tail": bank.tails.iter().fold(0.0f64, |m, v| m.max(*v)),
                "window_gain": sys.window().gain,
            });
            emit_report("frame-report", &cfg, &[&config], out.as_deref(), report)?;
        }
        Cmd::OnbCheck { config, out } => {
            let cfg = RunConfig::load(&config)?;
            let sys = DualizableSystem::new(cfg.system())?;
            let grid = sys.grid();
            let n = grid.n();
            // band-limited test signal: random spectrum on |xi| < N/8
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut rnd = || rng.random::<f64>() - 0.5;
            let spec: Vec<num_complex::Complex64> = (0..n * n)
                .map(|i| {
                    let (a, b) = (grid.freq(i / n), grid.freq(i % n));
                    let r = (n / 8) as i64;
                    if a.abs() < r && b.abs() < r {
                        num_complex::Complex64::new(rnd(), rnd())
                    } else {
                        num_complex::Complex64::default()
                    }
                })
                .collect();
            let mut rows = Vec::new();
            for s in ["0", "1/2", "1"] {
                let sp: ShearParam = s.parse()?;
                let k = sys.bank().shear_index(sp).ok_or_else(|| Error::Domain(format!("shear {s} not in set")))?;
                let basis = sys.basis(k);
                let max_j = cfg.resolved_j().min(3);
                let g = gram_check(basis, max_j, 3, cfg.p.min(2))?;
                let full = parseval_fraction(basis, &spec, cfg.resolved_j(), u32::MAX);
                rows.push(json!({
                    "shear": s,
                    "elements": g.count,
                    "max_off_diagonal": g.max_off_diagonal,
                    "max_diagonal_deviation": g.max_diagonal_deviation,
                    "completeness_gap": (1.0 - full).abs(),
                    "pass": g.max_off_diagonal <= cfg.tol_gram && g.max_diagonal_deviation <= cfg.tol_gram && (1.0 - full).abs() <= cfg.tol_gram,
                }));
            }
            emit_report("onb-check", &cfg, &[&config], out.as_deref(), json!({ "shears": rows }))?;
        }
        Cmd::Nterm { img, budgets, config, out, no_baseline } => {
            let im = io::load_signal(&img)?;
            let cfg = config_for(config.as_deref(), im.n)?;
            let sys = DualizableSystem::new(cfg.system())?;
            let mut budgets = budgets;
            budgets.sort_unstable();
            budgets.dedup();
            let sh = bench::shearlet_curve(&im.data, &sys, &budgets)?;
            let tn = if no_baseline { None } else { Some(bench::tensor_curve(&im.data, &sys, &budgets)?) };
            std::fs::write(&out, bench::curves_csv(&sh, tn.as_ref()))?;
            let fit_sh = bench::rate_fit(&sh).ok();
            let fit_tn = tn.as_ref().and_then(|t| bench::rate_fit(t).ok());
            let report = json!({
                "shearlet_fit": fit_sh,
                "tensor_fit": fit_tn,
                "max_error_increase": sh.max_increase(),
                "coefficient_count": sys.coefficient_count(),
            });
            let man = manifest("nterm", &cfg, &[&img], &[&out], report);
            io::write_manifest(&manifest_path(&out), &man)?;
            print!("{}", bench::curves_csv(&sh, tn.as_ref()));
            if let Some(f) = fit_sh {
                eprintln!("slope {:.4}, log-corrected {:.4}", f.slope, f.log_corrected_slope);
            }
        }
        Cmd::DecayProbe { img, config, out } => {
            let im = io::load_signal(&img)?;
            let cfg = config_for(config.as_deref(), im.n)?;
            let sys = DualizableSystem::new(cfg.system())?;
            let rep = bench::decay_probe(&im.data, &sys, cfg.j, Some(cfg.p))?;
            emit_report("decay-probe", &cfg, &[&img], out.as_deref(), serde_json::to_value(&rep)?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
