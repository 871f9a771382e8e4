//! `w2lab` command line: spectral tables, simulations, pipelines and the
//! acceptance ledger.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::Context as _;
use clap::{Parser, Subcommand};
use serde::Serialize;
use w2lab::checks::{determinism_entry, verify_with, Scale, Suite, VerifyOptions, DEFAULT_SEED};
use w2lab::config::ExperimentConfig;
use w2lab::manifest::RunManifest;
use w2lab::pipeline::{run_constant_pipeline, run_w2_pipeline, write_csv};
use w2lab_core::concentration::{tail_empirics, write_tail_csv, TestFunction};
use w2lab_core::diffusion::{simulate, write_psi_csv};
use w2lab_core::spectral::{
    enumerate_modes, heat_trace, spectral_sum_inv_lambda, spectral_sum_inv_lambda_sq, weyl_count, KVec, Parity,
};
use w2lab_core::variance::{clt_empirics, GeneratorMatrix};

#[derive(Parser)]
#[command(name = "w2lab", version, about = "Wasserstein asymptotics of diffusion occupation measures on flat tori")]
struct Cli {
    /// Flat-key TOML experiment config; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `sim.seed` (and the verify seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Heat trace and inverse-power spectral sums at the given times.
    Trace {
        #[arg(long, value_delimiter = ',', default_value = "1e-3,1e-2,1e-1,1")]
        t: Vec<f64>,
    },
    /// Mode table up to `modes.lambda_max` and Weyl counts.
    Spectral,
    /// Simulate replicas and write the occupation coefficients ψ.
    Simulate,
    /// CLT diagnostics of ψ per mode against 2𝐕(φ).
    Psi,
    /// Rescaled H⁻¹ energy across `sim.T_grid`.
    Energy,
    /// Sinkhorn W₂² against uniform across `sim.T_grid`.
    W2,
    /// Empirical tails of T⁻¹∫√2cos(x₁) against the Bernstein bound.
    Concentration {
        #[arg(long, value_delimiter = ',', default_value = "0.2,0.3,0.4")]
        xi: Vec<f64>,
    },
    /// Run an acceptance suite and write its ledger.
    Verify {
        /// spectral, variance, concentration, pipeline or all.
        #[arg(default_value = "all")]
        suite: String,
        /// full (pinned acceptance sizes) or smoke.
        #[arg(long, default_value = "full")]
        scale: String,
        /// Replace vol/(8π²) by vol/(4π²) (fault injection).
        #[arg(long)]
        tamper_constant: bool,
        /// Run the suite twice and add the determinism entry.
        #[arg(long)]
        twice: bool,
    },
}

struct Run {
    cfg: ExperimentConfig,
    out: PathBuf,
    manifest: RunManifest,
}

impl Run {
    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn table<R: Serialize>(&mut self, stage: &str, name: &str, rows: &[R]) -> anyhow::Result<()> {
        let mut paths = Vec::new();
        if self.cfg.output.formats.iter().any(|f| f == "csv") {
            let p = self.path(&format!("{name}.csv"));
            write_csv(BufWriter::new(File::create(&p)?), rows)?;
            paths.push(p);
        }
        if self.cfg.output.formats.iter().any(|f| f == "json") {
            let p = self.path(&format!("{name}.json"));
            std::fs::write(&p, serde_json::to_string_pretty(rows)? + "\n")?;
            paths.push(p);
        }
        self.manifest.record(stage, &paths)?;
        Ok(())
    }

    fn finish(mut self) -> anyhow::Result<()> {
        self.manifest.finish();
        self.manifest.write(&self.path("manifest.json"))?;
        Ok(())
    }
}

#[derive(Serialize)]
struct TraceRow {
    t: f64,
    heat_trace: f64,
    scaled_trace: f64,
    weyl_term: f64,
    sum_inv_lambda: f64,
    sum_inv_lambda_sq: f64,
}

#[derive(Serialize)]
struct ModeRow {
    index: usize,
    k: String,
    parity: Parity,
    lambda: f64,
}

#[derive(Serialize)]
struct WeylRow {
    lambda: f64,
    count: usize,
    scaled_count: f64,
    weyl_constant: f64,
}

#[derive(Serialize)]
struct PsiRow {
    index: usize,
    k: String,
    parity: Parity,
    lambda: f64,
    samples: usize,
    mean: f64,
    sample_variance: f64,
    variance_stderr: f64,
    predicted_variance: f64,
    z_score: f64,
    excess_kurtosis: f64,
    normality_p_value: f64,
}

fn kstr(k: &KVec, d: usize) -> String {
    k.0[..d].iter().map(|c| c.to_string()).collect::<Vec<_>>().join(" ")
}

fn load_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.sim.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.output.dir = o.display().to_string();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Trace { .. } => "trace",
        Command::Spectral => "spectral",
        Command::Simulate => "simulate",
        Command::Psi => "psi",
        Command::Energy => "energy",
        Command::W2 => "w2",
        Command::Concentration { .. } => "concentration",
        Command::Verify { .. } => "verify",
    }
}

fn run(cli: Cli) -> anyhow::Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the worker pool")?;
    }
    let cfg = load_config(&cli)?;
    let out = PathBuf::from(&cfg.output.dir);
    std::fs::create_dir_all(&out).with_context(|| format!("creating {}", out.display()))?;

    if let Command::Verify { suite, scale, tamper_constant, twice } = &cli.command {
        let suite: Suite = suite.parse()?;
        let opts = VerifyOptions {
            scale: scale.parse::<Scale>()?,
            seed: cli.seed.unwrap_or(DEFAULT_SEED),
            tamper_limit_constant: *tamper_constant,
        };
        return verify_command(suite, opts, *twice, &out);
    }

    let geom = cfg.geometry()?;
    let d = geom.dim();
    let manifest = RunManifest::start(&cfg, command_name(&cli.command));
    let mut r = Run { cfg, out, manifest };
    match &cli.command {
        Command::Trace { t } => {
            let rows = t
                .iter()
                .map(|&t| {
                    let h = heat_trace(t, &geom)?;
                    Ok(TraceRow {
                        t,
                        heat_trace: h,
                        scaled_trace: t.powf(d as f64 / 2.0) * h,
                        weyl_term: geom.volume() / (4.0 * std::f64::consts::PI).powf(d as f64 / 2.0),
                        sum_inv_lambda: spectral_sum_inv_lambda(t, &geom)?,
                        sum_inv_lambda_sq: spectral_sum_inv_lambda_sq(t / 2.0, &geom)?,
                    })
                })
                .collect::<w2lab_core::Result<Vec<_>>>()?;
            r.table("trace", "trace", &rows)?;
        }
        Command::Spectral => {
            let ms = enumerate_modes(geom, r.cfg.modes.lambda_max)?;
            let modes: Vec<ModeRow> = ms
                .pairs
                .iter()
                .enumerate()
                .map(|(i, p)| ModeRow { index: i, k: kstr(&p.k, d), parity: p.parity, lambda: p.lambda })
                .collect();
            r.table("spectral", "modes", &modes)?;
            let lmax = ms.lambda_max;
            let weyl: Vec<WeylRow> = (1..=20)
                .map(|j| lmax * j as f64 / 20.0)
                .map(|lam| {
                    let count = weyl_count(&ms, lam)?;
                    Ok(WeylRow {
                        lambda: lam,
                        count,
                        scaled_count: count as f64 / lam.powf(d as f64 / 2.0),
                        weyl_constant: geom.volume() / ((4.0 * std::f64::consts::PI).powf(d as f64 / 2.0) * gamma_half_d_plus_one(d)),
                    })
                })
                .collect::<w2lab_core::Result<_>>()?;
            r.table("spectral", "weyl", &weyl)?;
        }
        Command::Simulate => {
            let ms = enumerate_modes(geom, r.cfg.modes.lambda_max)?;
            let res = simulate(&r.cfg.sim_config(r.cfg.sim.horizon), &r.cfg.drift_spec()?, &ms, &[])?;
            let p = r.path("psi.csv");
            write_psi_csv(BufWriter::new(File::create(&p)?), &ms, &res)?;
            r.manifest.record("simulate", &[p])?;
        }
        Command::Psi => {
            let ms = enumerate_modes(geom, r.cfg.modes.lambda_max)?;
            let drift = r.cfg.drift_spec()?;
            let gen = GeneratorMatrix::assemble(&drift, &ms)?;
            let res = simulate(&r.cfg.sim_config(r.cfg.sim.horizon), &drift, &ms, &[])?;
            let rows = (0..ms.len())
                .map(|i| {
                    let psi: Vec<f64> = res.iter().map(|x| x.psi[i]).collect();
                    let c = clt_empirics(i, &gen, &psi)?;
                    let p = ms.pairs[i];
                    Ok(PsiRow {
                        index: i,
                        k: kstr(&p.k, d),
                        parity: p.parity,
                        lambda: p.lambda,
                        samples: c.samples,
                        mean: c.mean,
                        sample_variance: c.sample_variance,
                        variance_stderr: c.variance_stderr,
                        predicted_variance: c.predicted_variance,
                        z_score: c.z_score,
                        excess_kurtosis: c.excess_kurtosis,
                        normality_p_value: c.normality_p_value,
                    })
                })
                .collect::<w2lab_core::Result<Vec<_>>>()?;
            r.table("psi", "psi_report", &rows)?;
        }
        Command::Energy => {
            let rows = run_constant_pipeline(&r.cfg, geom.vol_over_8pi2())?;
            r.table("energy", "energy", &rows)?;
        }
        Command::W2 => {
            // the energy table is written first so an OT failure leaves it intact
            let rows = run_constant_pipeline(&r.cfg, geom.vol_over_8pi2())?;
            r.table("energy", "energy", &rows)?;
            let rows = run_w2_pipeline(&r.cfg, geom.vol_over_8pi2())?;
            r.table("w2", "w2", &rows)?;
        }
        Command::Concentration { xi } => {
            let ms = Arc::new(enumerate_modes(geom, geom.lambda_min())?);
            let i = ms.index_of(&KVec::unit(0), Parity::Cos).context("first mode")?;
            let g = TestFunction::single_mode(ms, i, 1.0)?;
            let rep = tail_empirics(&g, xi, &r.cfg.sim_config(r.cfg.sim.horizon), &r.cfg.drift_spec()?)?;
            let p = r.path("tails.csv");
            write_tail_csv(BufWriter::new(File::create(&p)?), &rep.rows)?;
            r.manifest.record("concentration", &[p])?;
        }
        Command::Verify { .. } => unreachable!("handled above"),
    }
    r.finish()?;
    Ok(true)
}

/// `Γ(d/2 + 1)` for the Weyl constant `vol·ω_d/(2π)^d = vol/((4π)^{d/2}Γ(d/2+1))`.
fn gamma_half_d_plus_one(d: usize) -> f64 {
    // Γ(1.5) = √π/2, Γ(2) = 1, Γ(2.5) = 3√π/4, Γ(3) = 2
    let sp = std::f64::consts::PI.sqrt();
    [sp / 2.0, 1.0, 0.75 * sp, 2.0][d - 1]
}

fn verify_command(suite: Suite, opts: VerifyOptions, twice: bool, out: &Path) -> anyhow::Result<bool> {
    let first = verify_with(suite, opts, |e| println!("{}", e.summary()));
    for t in &first.timings {
        eprintln!("{} took {:.2}s", t.id, t.seconds);
    }
    let mut ledger = first.ledger;
    if twice {
        let second = verify_with(suite, opts, |_| {});
        let entry = determinism_entry(&ledger, &second.ledger);
        println!("{}", entry.summary());
        ledger.passed &= entry.passed;
        ledger.entries.push(entry);
    }
    let path = out.join(format!("ledger_{suite}.json"));
    std::fs::write(&path, ledger.to_json())?;
    let failed = ledger.entries.iter().filter(|e| !e.passed).count();
    println!("{}: {} entries, {failed} failed; ledger at {}", suite, ledger.entries.len(), path.display());
    Ok(ledger.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
