//! `kfree`: command-line access to the kfree-core computations.
//!
//! JSON goes to stdout (or `--output`), `scaling` writes CSV. Exit status is
//! 0 on success, 2 on usage errors and 3 when a size budget is exceeded.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use kfree::arith::Modulus;
use kfree::box_counting::{
    count_congruence_box, count_s_prime_with, count_s_with, CountPath, Restriction,
};
use kfree::dioph::{count_n, reuss_bound, DyadicInstance};
use kfree::euler_product::{c_f, c_f_prime};
use kfree::experiments::{predicted_exponents, scaling_run};
use kfree::local_density::{rho, rho_brute, rho_prime_brute, rho_prime_variant};
use kfree::sieves::{fold_kfree_segments, kfree_flags, KfreeTable, SieveConfig};
use kfree::{Error, PolySpec};

#[derive(Parser, Debug)]
#[command(
    name = "kfree",
    version,
    about = "Count k-free values of x*y^k + C and related quantities"
)]
struct Cli {
    /// Upper bound on worker threads.
    #[arg(long, global = true, env = "KFREE_THREADS", value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,

    /// Directory for cached KFSV sieve tables.
    #[arg(long, global = true, env = "KFREE_CACHE_DIR")]
    cache_dir: Option<PathBuf>,

    /// Write the result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct PolyArgs {
    #[arg(long, value_parser = clap::value_parser!(u32).range(2..=64))]
    k: u32,
    /// Nonzero constant term C.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_nonzero)]
    c: i64,
}

impl PolyArgs {
    fn spec(self) -> PolySpec {
        PolySpec::new(self.k, self.c).expect("validated by clap")
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum VariantArg {
    Plain,
    Coprime,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum MethodArg {
    Closed,
    Brute,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum RestrictionArg {
    AllIntegers,
    PrimesOnly,
}

impl From<RestrictionArg> for Restriction {
    fn from(r: RestrictionArg) -> Self {
        match r {
            RestrictionArg::AllIntegers => Restriction::AllIntegers,
            RestrictionArg::PrimesOnly => Restriction::PrimesOnly,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum PathArg {
    Sieve,
    Factorization,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count k-free integers in [lo, hi], optionally saving the KFSV table.
    Sieve {
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..=255))]
        k: u32,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        lo: u64,
        #[arg(long)]
        hi: u64,
        /// Also write the table to this KFSV file.
        #[arg(long)]
        kfsv: Option<PathBuf>,
    },
    /// Local density rho(m) or rho'(m).
    Rho {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        m: u64,
        #[arg(long, value_enum, default_value = "plain")]
        variant: VariantArg,
        #[arg(long, value_enum, default_value = "closed")]
        method: MethodArg,
    },
    /// Certified enclosure of c_f or c'_f.
    Constant {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, value_enum, default_value = "plain")]
        variant: VariantArg,
        #[arg(long, default_value_t = 1e-6)]
        precision: f64,
    },
    /// S(H) or S'(H) with its main term.
    Count {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        h: u64,
        #[arg(long, value_enum, default_value = "all-integers")]
        restriction: RestrictionArg,
        #[arg(long, value_enum, default_value = "sieve")]
        path: PathArg,
    },
    /// S(m, H): pairs in the box with f(x, y) divisible by m.
    Congruence {
        #[command(flatten)]
        poly: PolyArgs,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        m: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        h: u64,
    },
    /// N(z; D, E) for v^l e^k - u^l d^k = h and its upper bound.
    Reuss {
        #[arg(long)]
        z: f64,
        #[arg(long)]
        dbox: f64,
        #[arg(long)]
        ebox: f64,
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..=64))]
        k: u32,
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        l: u32,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_nonzero)]
        h_const: i64,
        #[arg(long, default_value_t = 0.1)]
        epsilon: f64,
    },
    /// CSV of counts against the main term for a list of H.
    Scaling {
        #[command(flatten)]
        poly: PolyArgs,
        /// Ascending comma-separated H values.
        #[arg(long, value_delimiter = ',', required = true)]
        hs: Vec<u64>,
        #[arg(long, value_enum, default_value = "all-integers")]
        restriction: RestrictionArg,
    },
    /// Predicted exponents delta, g and G_k.
    Exponents {
        #[arg(long, value_parser = clap::value_parser!(u32).range(2..))]
        k: u32,
    },
}

fn parse_nonzero(s: &str) -> Result<i64, String> {
    match s.parse::<i64>() {
        Ok(0) => Err("must be nonzero".into()),
        Ok(v) => Ok(v),
        Err(e) => Err(e.to_string()),
    }
}

enum Failure {
    Usage(String),
    Budget(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            e if e.is_budget() => Failure::Budget(e.to_string()),
            Error::InvalidInput(msg) => Failure::Usage(msg),
            e => Failure::Other(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Other(e.to_string())
    }
}

enum Document {
    Json(Value),
    Csv(String),
}

fn variant_name(v: VariantArg) -> &'static str {
    match v {
        VariantArg::Plain => "plain",
        VariantArg::Coprime => "coprime",
    }
}

fn cache_path(dir: &Path, k: u32, lo: u64, hi: u64) -> PathBuf {
    dir.join(format!("kfree-k{k}-{lo}-{hi}.kfsv"))
}

/// Reuses a cached table only if its header names the same `(k, lo, hi)`.
fn load_cached(path: &Path, k: u32, lo: u64, hi: u64) -> Option<KfreeTable> {
    let file = File::open(path).ok()?;
    let mut reader = BufReader::new(file);
    let header = KfreeTable::read_kfsv_header(&mut reader).ok()?;
    if header != (k, lo, hi) {
        eprintln!(
            "ignoring cache file {} with header {header:?}",
            path.display()
        );
        return None;
    }
    let file = File::open(path).ok()?;
    KfreeTable::read_kfsv(BufReader::new(file)).ok()
}

fn write_table(table: &KfreeTable, path: &Path) -> Result<(), Failure> {
    let mut w = BufWriter::new(File::create(path)?);
    table.write_kfsv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn run_sieve(
    k: u32,
    lo: u64,
    hi: u64,
    kfsv: Option<&Path>,
    cache_dir: Option<&Path>,
) -> Result<Value, Failure> {
    if lo > hi {
        return Err(Failure::Usage(format!("--lo {lo} exceeds --hi {hi}")));
    }
    let cached = cache_dir.map(|d| cache_path(d, k, lo, hi));
    let mut cache_hit = false;
    let count = if kfsv.is_some() || cached.is_some() {
        let table = match cached.as_deref().and_then(|p| load_cached(p, k, lo, hi)) {
            Some(t) => {
                cache_hit = true;
                t
            }
            None => kfree_flags(lo, hi, k)?,
        };
        if let Some(p) = cached.as_deref().filter(|_| !cache_hit) {
            std::fs::create_dir_all(p.parent().expect("file in a directory"))?;
            write_table(&table, p)?;
        }
        if let Some(p) = kfsv {
            write_table(&table, p)?;
        }
        table.count_kfree()
    } else {
        fold_kfree_segments(lo, hi, k, &SieveConfig::default(), |seg| seg.count_kfree())?
            .into_iter()
            .sum()
    };
    Ok(json!({
        "k": k,
        "lo": lo,
        "hi": hi,
        "kfree_count": count,
        "cache_hit": cache_hit,
    }))
}

fn dispatch(cmd: &Command, cache_dir: Option<&Path>) -> Result<Document, Failure> {
    let doc = match *cmd {
        Command::Sieve {
            k,
            lo,
            hi,
            ref kfsv,
        } => Document::Json(run_sieve(k, lo, hi, kfsv.as_deref(), cache_dir)?),
        Command::Rho {
            poly,
            m,
            variant,
            method,
        } => {
            let (s, md) = (poly.spec(), Modulus::new(m)?);
            let d = match (variant, method) {
                (VariantArg::Plain, MethodArg::Closed) => rho(s, md)?,
                (VariantArg::Plain, MethodArg::Brute) => rho_brute(s, md)?,
                (VariantArg::Coprime, MethodArg::Closed) => rho_prime_variant(s, md)?,
                (VariantArg::Coprime, MethodArg::Brute) => rho_prime_brute(s, md)?,
            };
            Document::Json(json!({
                "m": m,
                "k": poly.k,
                "c": poly.c,
                "variant": variant_name(variant),
                "rho": d.value,
            }))
        }
        Command::Constant {
            poly,
            variant,
            precision,
        } => {
            let b = match variant {
                VariantArg::Plain => c_f(poly.spec(), precision)?,
                VariantArg::Coprime => c_f_prime(poly.spec(), precision)?,
            };
            Document::Json(json!({
                "variant": variant_name(variant),
                "k": b.k,
                "c": b.c,
                "lower": b.lower,
                "upper": b.upper,
                "prime_cutoff": b.prime_cutoff,
                "tail_bound": b.tail_bound,
            }))
        }
        Command::Count {
            poly,
            h,
            restriction,
            path,
        } => {
            let path = match path {
                PathArg::Sieve => CountPath::Sieve,
                PathArg::Factorization => CountPath::Factorization,
            };
            let b = match restriction {
                RestrictionArg::AllIntegers => count_s_with(poly.spec(), h, path)?,
                RestrictionArg::PrimesOnly => count_s_prime_with(poly.spec(), h, path)?,
            };
            Document::Json(json!({
                "k": b.k,
                "c": b.c,
                "h": b.h,
                "restriction": b.restriction.as_str(),
                "count": b.count,
                "main_term_lower": b.main_term_lower,
                "main_term_upper": b.main_term_upper,
                "relative_deviation": b.relative_deviation,
            }))
        }
        Command::Congruence { poly, m, h } => {
            let s = poly.spec();
            let md = Modulus::new(m)?;
            let count = count_congruence_box(s, md, h)?;
            let r = rho(s, md)?.value as f64;
            Document::Json(json!({
                "k": poly.k,
                "c": poly.c,
                "m": m,
                "h": h,
                "count": count,
                "rho": r,
                "expected": (h as f64).powi(2) * r / (m as f64).powi(2),
            }))
        }
        Command::Reuss {
            z,
            dbox,
            ebox,
            k,
            l,
            h_const,
            epsilon,
        } => {
            let inst = DyadicInstance::new(z, dbox, ebox, k, l, h_const)?;
            let b = reuss_bound(&inst, epsilon)?;
            let count = count_n(&inst)?;
            Document::Json(json!({
                "count": count,
                "bound": b.bound,
                "m": b.m,
                "conditions": {
                    "logs_comparable": b.conditions_ok.0,
                    "l_or_de": b.conditions_ok.1,
                    "log_de_over_log_z": b.log_ratio_de,
                    "log_uv_over_log_z": b.log_ratio_uv,
                    "log_de_over_log_uv": b.log_ratio_de_uv,
                },
            }))
        }
        Command::Scaling {
            poly,
            ref hs,
            restriction,
        } => {
            let rows = scaling_run(poly.spec(), hs, restriction.into())?;
            let mut csv = String::from("H,count,main_lower,main_upper,abs_dev,rel_dev\n");
            for r in rows {
                csv.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.h, r.count, r.main_lower, r.main_upper, r.abs_deviation, r.rel_deviation
                ));
            }
            Document::Csv(csv)
        }
        Command::Exponents { k } => {
            let r = predicted_exponents(k)?;
            Document::Json(json!({
                "k": r.k,
                "delta": r.delta,
                "g": r.g_value,
                "G_k": r.g_k,
                "error_exponent": r.error_exponent,
            }))
        }
    };
    Ok(doc)
}

fn emit(doc: &Document, output: Option<&Path>) -> io::Result<()> {
    let text = match doc {
        Document::Json(v) => format!(
            "{}\n",
            serde_json::to_string_pretty(v).expect("serializable")
        ),
        Document::Csv(s) => s.clone(),
    };
    match output {
        Some(p) => std::fs::write(p, text),
        None => io::stdout().lock().write_all(text.as_bytes()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global()
        {
            eprintln!("error: could not set thread count: {e}");
            return ExitCode::from(1);
        }
    }
    let result = dispatch(&cli.command, cli.cache_dir.as_deref())
        .and_then(|doc| emit(&doc, cli.output.as_deref()).map_err(Failure::from));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
        Err(Failure::Other(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
