// SPDX-License-Identifier: Apache-2.0

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ldpjoin_core::audit::{audit_client, audit_client_2d, audit_fap, LdpAudit};
use ldpjoin_core::harness::{
    build_workload, ldpjs_sketches, repetition_seed, run_on_workload, write_dataset, write_pairs, DatasetSpec,
    ExperimentConfig, Method, MetricsWriter,
};
use ldpjoin_core::seeding::client_rng;
use ldpjoin_core::server::{write_snapshot, NonTargetCorrection};
use ldpjoin_core::{derive_family, LdpClient, PrivateSketch, SketchParams};

#[derive(Parser)]
#[command(name = "ldpjoin", version, about = "Join size estimation under local differential privacy")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic datasets to files.
    Generate(GenerateArgs),
    /// Run one experiment and write a CSV row.
    Run(RunArgs),
    /// Run an experiment for each value of one parameter.
    Sweep(SweepArgs),
    /// Check the privacy guarantee by exact enumeration of output laws.
    VerifyLdp(VerifyArgs),
    /// Time client perturbation, sketch restore and estimation.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Fagms,
    Ldpjs,
    #[value(name = "ldpjs_plus", alias = "ldpjs-plus")]
    LdpjsPlus,
    Krr,
    Multiway,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Fagms => Method::Fagms,
            MethodArg::Ldpjs => Method::Ldpjs,
            MethodArg::LdpjsPlus => Method::LdpjsPlus,
            MethodArg::Krr => Method::Krr,
            MethodArg::Multiway => Method::Multiway,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DatasetArg {
    Zipf,
    Gaussian,
    Files,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrectionArg {
    Group,
    Population,
}

#[derive(Args, Clone)]
struct DataArgs {
    #[arg(long, value_enum, default_value = "zipf")]
    dataset: DatasetArg,
    #[arg(long, default_value_t = 1.1)]
    alpha: f64,
    #[arg(long, default_value_t = 5000.0)]
    mu: f64,
    #[arg(long, default_value_t = 1000.0)]
    sigma: f64,
    /// Values per attribute.
    #[arg(long, default_value_t = 100_000)]
    n: usize,
    #[arg(long, default_value_t = 10_000)]
    domain: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    input_a: Option<PathBuf>,
    #[arg(long)]
    input_b: Option<PathBuf>,
    /// Two-column CSV middle table for chain joins.
    #[arg(long)]
    input_mid: Option<PathBuf>,
}

impl DataArgs {
    fn spec(&self) -> Result<DatasetSpec> {
        Ok(match self.dataset {
            DatasetArg::Zipf => DatasetSpec::Zipf { alpha: self.alpha },
            DatasetArg::Gaussian => DatasetSpec::Gaussian { mu: self.mu, sigma: self.sigma },
            DatasetArg::Files => {
                let (Some(a), Some(b)) = (&self.input_a, &self.input_b) else {
                    bail!("--dataset files needs --input-a and --input-b");
                };
                DatasetSpec::Files { a: a.clone(), b: b.clone(), middle: self.input_mid.clone() }
            }
        })
    }
}

#[derive(Args, Clone)]
struct ExperimentArgs {
    #[arg(long, value_enum, default_value = "ldpjs")]
    method: MethodArg,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, default_value_t = 18)]
    k: usize,
    #[arg(long, default_value_t = 1024)]
    m: usize,
    #[arg(long, default_value_t = 4.0)]
    epsilon: f64,
    /// Phase-one sample rate.
    #[arg(long, default_value_t = 0.1)]
    rate: f64,
    /// Frequent-item threshold as a fraction of the attribute size.
    #[arg(long, default_value_t = 0.001)]
    theta: f64,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    /// Encode without random signs.
    #[arg(long)]
    xi_disabled: bool,
    #[arg(long, value_enum, default_value = "group")]
    correction: CorrectionArg,
    /// Output CSV path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Add wall-clock timing columns.
    #[arg(long)]
    timings: bool,
}

impl ExperimentArgs {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::new(self.method.into(), self.data.spec()?);
        cfg.n = self.data.n;
        cfg.domain = self.data.domain;
        cfg.seed = self.data.seed;
        cfg.k = self.k;
        cfg.m = self.m;
        cfg.epsilon = self.epsilon;
        cfg.rate = self.rate;
        cfg.theta = self.theta;
        cfg.reps = self.reps;
        cfg.xi_disabled = self.xi_disabled;
        cfg.correction = match self.correction {
            CorrectionArg::Group => NonTargetCorrection::GroupScaled,
            CorrectionArg::Population => NonTargetCorrection::Population,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn writer(&self) -> Result<MetricsWriter<Box<dyn Write>>> {
        let out: Box<dyn Write> = match &self.out {
            Some(path) => Box::new(BufWriter::new(
                File::create(path).with_context(|| format!("creating {}", path.display()))?,
            )),
            None => Box::new(io::stdout().lock()),
        };
        Ok(MetricsWriter::new(out, self.timings)?)
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Also write a middle table for chain joins.
    #[arg(long)]
    middle: bool,
    /// Output directory for a.txt, b.txt and middle.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Write the first repetition's sketches to PREFIX_a.skt and PREFIX_b.skt (ldpjs only).
    #[arg(long, value_name = "PREFIX")]
    snapshot: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    exp: ExperimentArgs,
    /// Parameter to vary: epsilon, m, k, n, domain, rate, theta, alpha, mu, sigma, reps, seed.
    #[arg(long)]
    vary: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<String>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 2)]
    k: usize,
    #[arg(long, default_value_t = 4)]
    m: usize,
    /// Width of the second attribute for the middle-table client.
    #[arg(long, default_value_t = 2)]
    m2: usize,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.5, 1.0, 4.0])]
    epsilon: Vec<f64>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, default_value_t = 18)]
    k: usize,
    #[arg(long, default_value_t = 1024)]
    m: usize,
    #[arg(long, default_value_t = 4.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 1_000_000)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn generate(args: &GenerateArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::new(if args.middle { Method::Multiway } else { Method::Ldpjs }, args.data.spec()?);
    cfg.n = args.data.n;
    cfg.domain = args.data.domain;
    cfg.seed = args.data.seed;
    let w = build_workload(&cfg)?;
    fs::create_dir_all(&args.out)?;
    write_dataset(args.out.join("a.txt"), &w.a)?;
    write_dataset(args.out.join("b.txt"), &w.b)?;
    if args.middle {
        write_pairs(args.out.join("middle.csv"), &w.middle)?;
    }
    eprintln!("wrote {} values per attribute to {}; exact join size {}", w.a.len(), args.out.display(), w.truth);
    Ok(())
}

fn run(args: &RunArgs) -> Result<()> {
    let cfg = args.exp.config()?;
    let w = build_workload(&cfg)?;
    let mut out = args.exp.writer()?;
    out.write(&run_on_workload(&cfg, &w)?)?;
    if let Some(prefix) = &args.snapshot {
        if cfg.method != Method::Ldpjs {
            bail!("--snapshot is only available for --method ldpjs");
        }
        let (sa, sb) = ldpjs_sketches(&cfg, &w, repetition_seed(cfg.seed, 0))?;
        for (sketch, suffix) in [(&sa, "_a.skt"), (&sb, "_b.skt")] {
            let mut path = prefix.clone().into_os_string();
            path.push(suffix);
            write_snapshot(BufWriter::new(File::create(&path)?), sketch)?;
        }
    }
    out.into_inner()?.flush()?;
    Ok(())
}

fn sweep(args: &SweepArgs) -> Result<()> {
    let base = args.exp.config()?;
    let mut configs = Vec::with_capacity(args.values.len());
    for value in &args.values {
        let mut cfg = base.clone();
        cfg.set(&args.vary, value)?;
        cfg.validate()?;
        configs.push(cfg);
    }
    let mut out = args.exp.writer()?;
    for cfg in &configs {
        let w = build_workload(cfg)?;
        out.write(&run_on_workload(cfg, &w)?)?;
    }
    out.into_inner()?.flush()?;
    Ok(())
}

fn print_audit(name: &str, a: &LdpAudit) {
    println!(
        "{name:<8} eps={:<6} inputs={:<6} outputs={:<6} max_ratio={:.12} bound={:.12} {}",
        a.epsilon,
        a.inputs,
        a.outputs,
        a.max_ratio,
        a.bound,
        if a.holds { "PASS" } else { "FAIL" }
    );
}

fn verify(args: &VerifyArgs) -> Result<bool> {
    let mut ok = true;
    for &eps in &args.epsilon {
        SketchParams::new(args.k, args.m, eps, 0)?;
        for (name, audit) in [
            ("client", audit_client(args.k, args.m, eps)?),
            ("fap", audit_fap(args.k, args.m, eps)?),
            ("client2d", audit_client_2d(args.k, args.m, args.m2, eps)?),
        ] {
            print_audit(name, &audit);
            ok &= audit.holds;
        }
    }
    Ok(ok)
}

fn bench(args: &BenchArgs) -> Result<()> {
    let params = SketchParams::new(args.k, args.m, args.epsilon, args.seed)?;
    let family = derive_family(&params)?;
    let client = LdpClient::new(&params, &family);
    let start = Instant::now();
    let reports: Vec<_> = (0..args.n as u64).map(|i| client.perturb(i % 10_000, &mut client_rng(args.seed, i))).collect();
    let perturb = start.elapsed();
    let start = Instant::now();
    let mut sketch = PrivateSketch::new(params, family.clone())?;
    sketch.extend(&reports)?;
    let accumulate = start.elapsed();
    let start = Instant::now();
    sketch.restore()?;
    let restore = start.elapsed();
    let start = Instant::now();
    let estimate = sketch.join(&sketch)?;
    let join = start.elapsed();
    println!("clients      {}", args.n);
    println!("perturb      {:.3} s ({:.1} ns/client)", perturb.as_secs_f64(), perturb.as_nanos() as f64 / args.n as f64);
    println!("accumulate   {:.3} s", accumulate.as_secs_f64());
    println!("restore      {:.3} s", restore.as_secs_f64());
    println!("join         {:.6} s (self-join estimate {estimate:.0})", join.as_secs_f64());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Sweep(a) => sweep(a),
        Command::Bench(a) => bench(a),
        Command::VerifyLdp(a) => match verify(a) {
            Ok(true) => Ok(()),
            Ok(false) => return ExitCode::from(1),
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
