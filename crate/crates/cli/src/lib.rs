//! Command-line frontend: argument parsing, worker pool setup and report emission.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Read;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use tamecusp::characters::{enumerate_chars, AddChar, MultChar};
use tamecusp::epsilon::{eps_character, eps_simple_cuspidal, EpsilonFactor};
use tamecusp::hereditary::DEFAULT_BUDGET;
use tamecusp::localfield::{FieldParams, FieldTag, Res};
use tamecusp::pairs::{enumerate_pairs, AdmissiblePair};
use tamecusp::verify::{self, Corruption, VerifyReport, SCHEMA};
use tamecusp::{Cyclo, Error, QHalf};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "tamecusp", version, about = "Exact epsilon factors of simple supercuspidals of GL_n over F_q((t))")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List admissible pairs of the given degree and level.
    Enumerate(RunConfig),
    /// Epsilon factors of enumerated pairs, or of characters of F with --chi-level.
    Epsilon(RunConfig),
    /// Fingerprint equality vs pair isomorphism over all pairs.
    VerifyConverse(RunConfig),
    /// Twisting by a high-level character against the det-twist epsilon.
    VerifyStability(RunConfig),
    /// Matrix Gauss sums over a hereditary order against τ(χ, ψ)^n.
    VerifyGauss(RunConfig),
    /// Tame twists separate pairs on different extensions.
    VerifyFieldSeparation(RunConfig),
    /// Pretty-print a serialized report, pair or character.
    Show(ShowArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
pub struct RunConfig {
    /// Residue characteristic.
    #[arg(long)]
    pub p: u64,
    /// Residue degree; q = p^f.
    #[arg(long, default_value_t = 1)]
    pub f: u32,
    /// Degree of the extension / size of the matrices.
    #[arg(long, default_value_t = 2)]
    pub n: u64,
    /// Level 2k+1 of the pairs.
    #[arg(long, default_value_t = 1)]
    pub level: u64,
    /// θ(u) (and χ(ϖ)) ranges over μ_M.
    #[arg(long = "M", default_value_t = 1)]
    pub m: u64,
    /// Ramification index of the hereditary order.
    #[arg(long)]
    pub e: Option<u64>,
    /// Level of the twisting character.
    #[arg(long = "chi-level")]
    pub chi_level: Option<u64>,
    /// Number of sampled cross-field pairs; exhaustive when absent.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Largest brute-force enumeration allowed.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u128,
    /// Output path; standard output when absent.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Unit b of ψ(x) = ψ₀(b·x); default 1.
    #[arg(long = "psi-unit", default_value_t = 1)]
    pub psi_unit: u32,
    /// Leave out the timing field, for byte comparison of reports.
    #[arg(long = "no-timing")]
    pub no_timing: bool,
    /// Multiply fingerprint entry ENTRY of pair PAIR by 2 (negative control).
    #[arg(long = "corrupt-pair", value_name = "PAIR:ENTRY", hide = true)]
    pub corrupt_pair: Option<String>,
}

#[derive(Args, Debug, Clone)]
pub struct ShowArgs {
    /// JSON file; standard input when absent.
    pub input: Option<std::path::PathBuf>,
    /// Residue characteristic, needed to decode pairs and characters.
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub f: u32,
}

/// Failure categories mapped onto exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Core(Error),
    Io(std::io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Output of a subcommand: the rendered document and its exit code.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub text: String,
    pub code: i32,
}

/// Parses `argv` (program name first), runs, writes the output, returns the exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(o) => {
            let out = match &cli.command {
                Command::Show(_) => None,
                Command::Enumerate(c)
                | Command::Epsilon(c)
                | Command::VerifyConverse(c)
                | Command::VerifyStability(c)
                | Command::VerifyGauss(c)
                | Command::VerifyFieldSeparation(c) => c.out.clone(),
            };
            let written = match out {
                Some(path) => std::fs::write(path, &o.text),
                None => {
                    print!("{}", o.text);
                    Ok(())
                }
            };
            match written {
                Ok(()) => o.code,
                Err(e) => {
                    eprintln!("i/o error: {e}");
                    EXIT_USAGE
                }
            }
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_USAGE
        }
    }
}

/// Runs a parsed command without touching standard output.
pub fn execute(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Show(a) => show(a),
        Command::Enumerate(c) => in_pool(c, enumerate),
        Command::Epsilon(c) => in_pool(c, epsilon),
        Command::VerifyConverse(c) => in_pool(c, verify_converse),
        Command::VerifyStability(c) => in_pool(c, verify_stability),
        Command::VerifyGauss(c) => in_pool(c, verify_gauss),
        Command::VerifyFieldSeparation(c) => in_pool(c, verify_field_separation),
    }
}

fn in_pool(c: &RunConfig, f: fn(&RunConfig) -> CliResult<Outcome>) -> CliResult<Outcome> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(t) = c.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        b = b.num_threads(t);
    }
    let pool = b.build().map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| f(c))
}

fn setup(c: &RunConfig) -> CliResult<AddChar> {
    let params = Arc::new(FieldParams::new(c.p, c.f)?);
    if c.m == 0 {
        return Err(CliError::Usage("--M must be positive".into()));
    }
    if c.psi_unit == 0 || u64::from(c.psi_unit) >= params.q() {
        return Err(CliError::Usage(format!("--psi-unit must be a nonzero element code below q = {}", params.q())));
    }
    Ok(AddChar::new(&params, Res(c.psi_unit))?)
}

fn header(cmd: &str, c: &RunConfig) -> Value {
    json!({ "schema": SCHEMA, "command": cmd, "params": { "p": c.p, "f": c.f, "n": c.n, "level": c.level, "M": c.m, "psi_unit": c.psi_unit } })
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values always serialize");
    s.push('\n');
    s
}

/// `order:c0,c1,...` with rational coefficients.
pub fn flatten_cyclo(x: &Cyclo) -> String {
    let coeffs: Vec<String> = x.coeffs().iter().map(|c| c.to_string()).collect();
    format!("{}:{}", x.order(), coeffs.join(","))
}

/// Two cells: the rational-cyclotomic part and the coefficient of `√q`.
pub fn flatten_qhalf(x: &QHalf) -> [String; 2] {
    [flatten_cyclo(x.base()), flatten_cyclo(x.half())]
}

fn csv_doc(rows: &[Vec<String>]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.write_record(r).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 cells")
}

fn header_row(cells: &[&str]) -> Vec<String> {
    cells.iter().map(|c| c.to_string()).collect()
}

fn pair_cells(i: usize, p: &AdmissiblePair) -> Vec<String> {
    let th = p.theta();
    let alpha = alpha_terms(th, "@");
    vec![
        i.to_string(),
        p.n().to_string(),
        p.r().to_string(),
        p.level().to_string(),
        th.pi_value().reduced().to_string(),
        th.teich_exp().to_string(),
        alpha.join(" "),
    ]
}

fn enumerate(c: &RunConfig) -> CliResult<Outcome> {
    let psi = setup(c)?;
    let pairs = enumerate_pairs(&psi, c.n, c.level, c.m)?;
    let text = match c.format {
        Format::Json => {
            let mut v = header("enumerate", c);
            v["count"] = json!(pairs.len());
            v["pairs"] = Value::Array(pairs.iter().map(AdmissiblePair::to_json).collect());
            render_json(&v)
        }
        Format::Csv => {
            let mut rows = vec![header_row(&["index", "n", "r", "level", "theta_u", "theta_eta_exp", "alpha"])];
            rows.extend(pairs.iter().enumerate().map(|(i, p)| pair_cells(i, p)));
            csv_doc(&rows)
        }
    };
    Ok(Outcome { text, code: EXIT_PASS })
}

fn epsilon(c: &RunConfig) -> CliResult<Outcome> {
    let psi = setup(c)?;
    let rows: Vec<(Value, Vec<String>, EpsilonFactor)> = match c.chi_level {
        Some(l) => enumerate_chars(&psi, FieldTag::Base, l, c.m)?
            .iter()
            .enumerate()
            .map(|(i, chi)| -> CliResult<_> {
                let eps = eps_character(chi, &psi)?;
                Ok((chi.to_json(), char_cells(i, chi), eps))
            })
            .collect::<CliResult<_>>()?,
        None => enumerate_pairs(&psi, c.n, c.level, c.m)?
            .iter()
            .enumerate()
            .map(|(i, p)| -> CliResult<_> {
                let eps = eps_simple_cuspidal(p, &psi)?;
                Ok((p.to_json(), pair_cells(i, p), eps))
            })
            .collect::<CliResult<_>>()?,
    };
    let text = match c.format {
        Format::Json => {
            let mut v = header("epsilon", c);
            v["params"]["chi_level"] = json!(c.chi_level);
            v["count"] = json!(rows.len());
            v["items"] = Value::Array(
                rows.iter()
                    .map(|(obj, _, eps)| json!({ "object": obj, "epsilon": eps.to_json() }))
                    .collect(),
            );
            render_json(&v)
        }
        Format::Csv => {
            let mut head = if c.chi_level.is_some() {
                header_row(&["index", "level", "chi_pi", "chi_eta_exp", "alpha"])
            } else {
                header_row(&["index", "n", "r", "level", "theta_u", "theta_eta_exp", "alpha"])
            };
            head.extend(header_row(&["exponent", "constant", "constant_sqrt_q"]));
            let mut out = vec![head];
            for (_, cells, eps) in &rows {
                let mut r = cells.clone();
                r.push(eps.exponent.to_string());
                r.extend(flatten_qhalf(&eps.constant));
                out.push(r);
            }
            csv_doc(&out)
        }
    };
    Ok(Outcome { text, code: EXIT_PASS })
}

fn char_cells(i: usize, chi: &MultChar) -> Vec<String> {
    let alpha = alpha_terms(chi, "@");
    vec![
        i.to_string(),
        chi.level().to_string(),
        chi.pi_value().reduced().to_string(),
        chi.teich_exp().to_string(),
        alpha.join(" "),
    ]
}

fn emit_report(c: &RunConfig, r: &VerifyReport) -> Outcome {
    let text = match c.format {
        Format::Json => render_json(&r.to_json(!c.no_timing)),
        Format::Csv => {
            let mut head = header_row(&["check", "verdict", "pair_count", "comparisons", "violations"]);
            let mut row = vec![
                r.check.to_string(),
                r.verdict().to_string(),
                r.pair_count.to_string(),
                r.comparisons.to_string(),
                r.violations.len().to_string(),
            ];
            if !c.no_timing {
                head.push("elapsed_ms".into());
                row.push(r.elapsed_ms.to_string());
            }
            csv_doc(&[head, row])
        }
    };
    let code = if r.pass() { EXIT_PASS } else { EXIT_VIOLATION };
    Outcome { text, code }
}

fn parse_corruption(s: &str) -> CliResult<Corruption> {
    let bad = || CliError::Usage(format!("--corrupt-pair expects PAIR:ENTRY, got {s:?}"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    Ok(Corruption { pair: a.trim().parse().map_err(|_| bad())?, entry: b.trim().parse().map_err(|_| bad())? })
}

fn verify_converse(c: &RunConfig) -> CliResult<Outcome> {
    let psi = setup(c)?;
    let corrupt = c.corrupt_pair.as_deref().map(parse_corruption).transpose()?;
    let r = verify::converse_check(&psi, c.n, c.level, c.m, corrupt)?;
    Ok(emit_report(c, &r))
}

fn verify_stability(c: &RunConfig) -> CliResult<Outcome> {
    let psi = setup(c)?;
    let l = c.chi_level.ok_or_else(|| CliError::Usage("--chi-level is required".into()))?;
    let r = verify::stability_sweep(&psi, c.n, c.level, c.m, l, c.m, c.budget)?;
    Ok(emit_report(c, &r))
}

fn verify_gauss(c: &RunConfig) -> CliResult<Outcome> {
    let psi = setup(c)?;
    let e = c.e.ok_or_else(|| CliError::Usage("--e is required".into()))?;
    let l = c.chi_level.ok_or_else(|| CliError::Usage("--chi-level is required".into()))?;
    let r = verify::gauss_check(&psi, c.n, e, l, c.m, c.budget)?;
    Ok(emit_report(c, &r))
}

fn verify_field_separation(c: &RunConfig) -> CliResult<Outcome> {
    let psi = setup(c)?;
    if c.level % 2 == 0 {
        return Err(CliError::Usage("--level must be odd (2k+1)".into()));
    }
    let r = verify::field_separation_check(&psi, c.n, c.level / 2, c.m, c.samples, c.seed)?;
    Ok(emit_report(c, &r))
}

fn show(a: &ShowArgs) -> CliResult<Outcome> {
    let mut raw = String::new();
    match &a.input {
        Some(p) => raw = std::fs::read_to_string(p)?,
        None => {
            std::io::stdin().read_to_string(&mut raw)?;
        }
    }
    let v: Value = serde_json::from_str(&raw).map_err(|e| CliError::Usage(format!("not JSON: {e}")))?;
    let mut out = render_json(&v);
    if let Some(p) = a.p {
        let params = Arc::new(FieldParams::new(p, a.f)?);
        let summary = if v.get("theta").is_some() {
            let pair = AdmissiblePair::from_json(&params, &v)?;
            Some(describe_pair(&pair))
        } else if v.get("alpha").is_some() {
            let chi = MultChar::from_json(&params, &v)?;
            Some(describe_char(&chi))
        } else {
            None
        };
        if let Some(s) = summary {
            out.push_str(&s);
        }
    } else if let Some(verdict) = v.get("verdict").and_then(Value::as_str) {
        let n = v["violations"].as_array().map_or(0, Vec::len);
        let _ = writeln!(out, "{}: {verdict} ({n} violations)", v["check"].as_str().unwrap_or("report"));
    }
    Ok(Outcome { text: out, code: EXIT_PASS })
}

fn describe_char(chi: &MultChar) -> String {
    let alpha = alpha_terms(chi, "·u^");
    format!(
        "level {}, value on uniformizer {}, η ↦ ζ^{}, α = {}\n",
        chi.level(),
        chi.pi_value().reduced(),
        chi.teich_exp(),
        if alpha.is_empty() { "0".into() } else { alpha.join(" + ") }
    )
}

fn describe_pair(p: &AdmissiblePair) -> String {
    format!("E_{} of degree {} over F; θ: {}", p.r(), p.n(), describe_char(p.theta()))
}

fn alpha_terms(chi: &MultChar, sep: &str) -> Vec<String> {
    chi.alpha().terms().map(|(v, x)| format!("{}{sep}{v}", chi.params().show(x))).collect()
}
