mod config;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use theta_core::padic::{hilbert_symbol, Place};
use theta_core::schwartz::SchwartzFn;
use theta_core::theta_match::{run_suite, MatchingContext, Suite, SuiteResult};
use theta_core::{Exec, Result, ThetaError};

use config::{parse_nonzero, RunConfig};

#[derive(Parser)]
#[command(
    name = "theta",
    version,
    about = "Local theta matching computations over Q_p"
)]
struct Cli {
    /// Run loops on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Hilbert symbols (a, b)_v and their product.
    Hilbert {
        #[arg(short, allow_hyphen_values = true)]
        a: String,
        #[arg(short, allow_hyphen_values = true)]
        b: String,
        /// Comma-separated places, e.g. 2,3,5,inf. Defaults to 2, infinity
        /// and the primes dividing a and b.
        #[arg(long, value_delimiter = ',')]
        places: Option<Vec<String>>,
    },
    /// Transforms a rank-3 function file to its rank-1 image.
    Transform {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        phi: PathBuf,
        #[arg(short)]
        o: Option<PathBuf>,
    },
    /// Runs a verification suite and writes the JSON report.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        suite: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(short)]
        o: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let exec = if cli.sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    };
    let res = match cli.command {
        Command::Hilbert { a, b, places } => cmd_hilbert(&a, &b, places.as_deref()),
        Command::Transform { config, phi, o } => cmd_transform(&config, &phi, o.as_deref(), exec),
        Command::Verify {
            config,
            suite,
            seed,
            o,
        } => cmd_verify(&config, &suite, seed, o.as_deref(), exec),
    };
    match res {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn small_prime_factors(x: &BigInt, out: &mut Vec<u64>) -> Result<()> {
    let mut n = u64::try_from(x.magnitude())
        .map_err(|_| ThetaError::Invalid(format!("{x} is too large to factor; pass --places")))?;
    let mut d = 2u64;
    while d * d <= n {
        while n % d == 0 {
            out.push(d);
            n /= d;
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    Ok(())
}

fn default_places(a: &BigRational, b: &BigRational) -> Result<Vec<Place>> {
    let mut primes = vec![2];
    for x in [a, b] {
        small_prime_factors(x.numer(), &mut primes)?;
        small_prime_factors(x.denom(), &mut primes)?;
    }
    primes.sort_unstable();
    primes.dedup();
    let mut places: Vec<Place> = primes.into_iter().map(Place::Finite).collect();
    places.push(Place::Infinity);
    Ok(places)
}

fn cmd_hilbert(a: &str, b: &str, places: Option<&[String]>) -> Result<bool> {
    let a = parse_nonzero("a", a)?;
    let b = parse_nonzero("b", b)?;
    let places = match places {
        Some(ps) => ps
            .iter()
            .map(|s| s.parse())
            .collect::<Result<Vec<Place>>>()?,
        None => default_places(&a, &b)?,
    };
    let mut out = std::io::stdout().lock();
    let mut product = 1i8;
    let _ = writeln!(out, "place  ({a}, {b})_v");
    for &pl in &places {
        let s = hilbert_symbol(&a, &b, pl)?;
        product *= s;
        let _ = writeln!(out, "{:<6} {s:+}", pl.to_string());
    }
    let _ = writeln!(out, "product {product:+}");
    Ok(true)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| ThetaError::Invalid(format!("cannot write {}: {e}", p.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn cmd_transform(config: &Path, phi: &Path, out: Option<&Path>, exec: Exec) -> Result<bool> {
    let cfg = RunConfig::load(config)?;
    let text = std::fs::read_to_string(phi)
        .map_err(|e| ThetaError::Invalid(format!("cannot read {}: {e}", phi.display())))?;
    let phi = SchwartzFn::from_json(&text)?;
    if phi.p() != cfg.p {
        return Err(ThetaError::FieldMismatch(cfg.p, phi.p()));
    }
    let ctx = MatchingContext::new(cfg.spec()?, cfg.settings()?, exec)?;
    let res = ctx.transform_phi0(&phi)?;
    eprintln!(
        "extension near 0: {} from valuation {}",
        format!("{:?}", res.mode).to_lowercase(),
        res.onset
    );
    write_output(out.or(cfg.output.as_deref()), &res.function.to_json())?;
    Ok(true)
}

fn cmd_verify(
    config: &Path,
    suite: &str,
    seed: Option<u64>,
    out: Option<&Path>,
    exec: Exec,
) -> Result<bool> {
    let mut cfg = RunConfig::load(config)?;
    let suite: Suite = suite.parse()?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let battery = cfg.battery(None);
    let reports = if suite == Suite::Gauss {
        theta_core::theta_match::verify_gauss(cfg.p, &cfg.settings()?, battery.seed)?
    } else {
        let ctx = MatchingContext::new(cfg.spec()?, cfg.settings()?, exec)?;
        run_suite(&ctx, suite, &battery)?
    };
    for r in &reports {
        eprintln!("{}", r.line());
    }
    let echo = serde_json::to_value(&cfg).map_err(|e| ThetaError::Invalid(e.to_string()))?;
    let result = SuiteResult::new(suite, reports, echo);
    eprintln!(
        "{}: {}/{} passed, {} blocking failures",
        result.suite, result.summary.passed, result.summary.total, result.summary.failed_blocking
    );
    let json =
        serde_json::to_string_pretty(&result).map_err(|e| ThetaError::Invalid(e.to_string()))?;
    write_output(out.or(cfg.output.as_deref()), &json)?;
    Ok(result.success())
}
