use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use lplq::blpq::BKpqSpec;
use lplq::counterexample::{
    build_counterexample, certify_isometry, certify_non_equimeasurable, moment_certificate, obstruction_report,
    rational_samples,
};
use lplq::equimeasure::{compare, default_degree_cap, moment_match_report, pushforward, pushforward_q, TAU_MASS, TAU_VAL};
use lplq::random::random_embedding;
use lplq::stepfn::{mixed_norm, n_map, NormParams, StepFunctionJson};
use lplq::transport::{auh_pipeline, PipelineReport};
use lplq::{Error, StepFunction2D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Parser)]
#[command(name = "lplq", version, about = "Mixed-norm step functions, lattice automorphisms and moment certificates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mixed norm of a step function followed by its N-profile as CSV.
    Norm {
        file: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        /// Write the profile CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the homogeneity pipeline on seeded random embedding pairs.
    AuhDemo {
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        blocks: Vec<usize>,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        trials: u64,
        /// Use the same embedding on both sides.
        #[arg(long)]
        identical: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact certificates and step atoms for integer p / q >= 2.
    Counterexample {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = 1024)]
        resolution: usize,
        /// Seed for the sampled isometry coefficients.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Directory for the full set of JSON outputs.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the N-profile laws of two families of step functions.
    Equimeasure {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        q: f64,
        #[arg(long, default_value_t = TAU_VAL)]
        tau_val: f64,
        #[arg(long, default_value_t = TAU_MASS)]
        tau_mass: f64,
        /// Write the moment report CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidNormParams { .. } => 2,
            Error::InvalidPartition(_) | Error::InvalidFunction(_) | Error::InvalidAutomorphism(_) => 3,
            _ => 4,
        };
        Self { code, message: e.to_string() }
    }
}

type Outcome = Result<(), Failure>;

fn io_error(path: &Path, e: std::io::Error) -> Failure {
    Failure::parse(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, text: &str) -> Outcome {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("reports serialize")
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(StepFunctionJson),
    Many(Vec<StepFunctionJson>),
}

/// A single step function or a JSON array of them. Malformed JSON is a parse
/// failure, well-formed input breaking an invariant is an invariant failure.
fn read_functions(path: &Path) -> Result<Vec<StepFunction2D>, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let raw: OneOrMany =
        serde_json::from_str(&text).map_err(|e| Failure::parse(format!("{}: {e}", path.display())))?;
    let raw = match raw {
        OneOrMany::One(f) => vec![f],
        OneOrMany::Many(fs) => fs,
    };
    if raw.is_empty() {
        return Err(Failure::parse(format!("{}: no functions", path.display())));
    }
    raw.into_iter()
        .map(|r| StepFunction2D::try_from(r).map_err(Failure::from))
        .collect()
}

fn norm(file: &Path, params: NormParams, out: Option<&Path>) -> Outcome {
    let fs = read_functions(file)?;
    if fs.len() != 1 {
        return Err(Failure::parse(format!("{}: expected one function, found {}", file.display(), fs.len())));
    }
    let f = &fs[0];
    let profile = n_map(f, params);
    let mut csv = String::from("x0,x1,n\n");
    for (i, v) in profile.values().iter().enumerate() {
        let (a, b) = profile.partition().cell(i);
        csv.push_str(&format!("{a},{b},{v}\n"));
    }
    println!("{}", mixed_norm(f, params));
    match out {
        Some(path) => write_file(path, &csv),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct Trial {
    trial: u64,
    seed: u64,
    report: PipelineReport,
}

#[derive(Serialize)]
struct DemoReport {
    blocks: Vec<usize>,
    p: f64,
    q: f64,
    epsilon: f64,
    seed: u64,
    identical: bool,
    max_residual: f64,
    all_below_epsilon: bool,
    trials: Vec<Trial>,
}

#[allow(clippy::too_many_arguments)]
fn auh_demo(
    blocks: Vec<usize>,
    params: NormParams,
    epsilon: f64,
    seed: u64,
    trials: u64,
    identical: bool,
    out: Option<&Path>,
) -> Outcome {
    let spec = BKpqSpec::new(blocks.clone(), params)?;
    let results: Vec<Result<Trial, Error>> = (0..trials)
        .into_par_iter()
        .map(|trial| {
            let trial_seed = seed.wrapping_add(trial);
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
            let e1 = random_embedding(&mut rng, &spec)?;
            let e2 = if identical { e1.clone() } else { random_embedding(&mut rng, &spec)? };
            let (_, report) = auh_pipeline(&e1, &e2, epsilon)?;
            Ok(Trial { trial, seed: trial_seed, report })
        })
        .collect();
    let trials = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    let max_residual = trials.iter().map(|t| t.report.max_residual).fold(0.0, f64::max);
    let report = DemoReport {
        blocks,
        p: params.p(),
        q: params.q(),
        epsilon,
        seed,
        identical,
        max_residual,
        all_below_epsilon: max_residual < epsilon,
        trials,
    };
    emit(&to_json(&report), out)
}

fn emit(text: &str, out: Option<&Path>) -> Outcome {
    match out {
        Some(path) => write_file(path, text),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| Failure::parse(e.to_string()))
        }
    }
}

#[derive(Serialize)]
struct StepAtoms<'a> {
    first: &'a [StepFunction2D],
    second: &'a [StepFunction2D],
}

fn counterexample(params: NormParams, resolution: usize, seed: u64, out: Option<&Path>) -> Outcome {
    let bundle = build_counterexample(params, resolution)?;
    let certificate = moment_certificate(&bundle).to_json();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vs: Vec<(f64, f64)> = (0..20)
        .map(|_| {
            let a = rng.gen_range(0.0..4.0);
            let b = rng.gen_range(0.0..4.0);
            (a, b)
        })
        .collect();
    let isometry = certify_isometry(&bundle, &rational_samples(&vs))?;
    let non_equimeasurable = certify_non_equimeasurable(&bundle)?;
    let m1 = pushforward_q(&bundle.step[0].images, params)?;
    let m2 = pushforward_q(&bundle.step[1].images, params)?;
    let obstruction = obstruction_report(&m1, &m2)?;

    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        let atoms = StepAtoms { first: &bundle.step[0].images, second: &bundle.step[1].images };
        write_file(&dir.join("certificate.json"), &to_json(&certificate))?;
        write_file(&dir.join("isometry.json"), &to_json(&isometry))?;
        write_file(&dir.join("non_equimeasurable.json"), &to_json(&non_equimeasurable))?;
        write_file(&dir.join("obstruction.json"), &to_json(&obstruction))?;
        write_file(&dir.join("step_atoms.json"), &serde_json::to_string(&atoms).expect("atoms serialize"))?;
    }
    let summary = serde_json::json!({
        "certificate": certificate,
        "isometry_all_equal": isometry.all_equal,
        "non_equimeasurable": non_equimeasurable,
        "obstruction": obstruction,
    });
    emit(&to_json(&summary), None)
}

#[derive(Serialize)]
struct Verdict {
    equimeasurable: bool,
    unmatched_mass: f64,
    clusters: usize,
    max_mass_gap: f64,
    first_mismatch_degree: Option<u32>,
    max_functional_diff: f64,
}

fn equimeasure(
    a: &Path,
    b: &Path,
    params: NormParams,
    tau_val: f64,
    tau_mass: f64,
    out: Option<&Path>,
) -> Outcome {
    let fa = read_functions(a)?;
    let fb = read_functions(b)?;
    if fa.len() != fb.len() {
        return Err(Error::DimensionMismatch(fa.len(), fb.len()).into());
    }
    let cmp = compare(&pushforward(&fa, params)?, &pushforward(&fb, params)?, tau_val, tau_mass)?;
    let r = params.ratio();
    let n = fa.len();
    let mut samples = vec![(0.0, vec![1.0; n]), (1.0, vec![1.0; n]), (0.5, vec![0.5; n])];
    for k in 0..n {
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        samples.push((0.0, v));
    }
    let report = moment_match_report(
        &pushforward_q(&fa, params)?,
        &pushforward_q(&fb, params)?,
        r,
        default_degree_cap(r),
        &samples,
        tau_mass,
    )?;
    if let Some(path) = out {
        let file = fs::File::create(path).map_err(|e| io_error(path, e))?;
        report.write_csv(file).map_err(|e| io_error(path, e))?;
    }
    let verdict = Verdict {
        equimeasurable: cmp.equimeasurable,
        unmatched_mass: cmp.unmatched_mass,
        clusters: cmp.clusters,
        max_mass_gap: cmp.max_mass_gap,
        first_mismatch_degree: report.first_mismatch_degree,
        max_functional_diff: report.max_functional_diff,
    };
    emit(&to_json(&verdict), None)
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Norm { file, p, q, out } => norm(&file, NormParams::new(p, q)?, out.as_deref()),
        Command::AuhDemo { blocks, p, q, epsilon, seed, trials, identical, out } => {
            auh_demo(blocks, NormParams::new(p, q)?, epsilon, seed, trials, identical, out.as_deref())
        }
        Command::Counterexample { p, q, resolution, seed, out } => {
            counterexample(NormParams::new(p, q)?, resolution, seed, out.as_deref())
        }
        Command::Equimeasure { a, b, p, q, tau_val, tau_mass, out } => {
            equimeasure(&a, &b, NormParams::new(p, q)?, tau_val, tau_mass, out.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
