//! Command-line front end.
//!
//! Exit codes: 0 holds / normal-class, 1 fails / not subnormal,
//! 2 inconclusive / unresolved / computation error, 64 usage, 65 bad input.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::blaschke::FiniteBlaschkeProduct;
use crate::classify::{self, Status, Verdict, Witness, DEFAULT_LADDER};
use crate::completion::{self, CompletionFamily, CompletionStatus, CompletionVerdict, VerificationReport};
use crate::error::Error;
use crate::hardy_ops::{self, DEFAULT_BUFFER, DEFAULT_N, DEFAULT_TOL};
use crate::inner_matrix::{self, InnerMatrixFunction};
use crate::symbol::{coprime_factorization, MatrixSymbol, MatrixSymbolJson, ScalarSymbol, TermKind, DEFAULT_SAMPLES};

pub const EXIT_HOLDS: i32 = 0;
pub const EXIT_FAILS: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_PARSE: i32 = 65;

#[derive(Debug, Parser)]
#[command(name = "blocktoep", version, about = "Hyponormality, normality and subnormal completion checks for block Toeplitz operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Options {
    /// Truncation size (number of blocks).
    #[arg(long = "N")]
    n: Option<usize>,
    /// Extra blocks used when forming operator products.
    #[arg(long)]
    buffer: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    /// Boundary samples for sup norms and pointwise checks.
    #[arg(long, default_value_t = DEFAULT_SAMPLES)]
    samples: usize,
    /// Comma-separated truncation sizes.
    #[arg(long, value_delimiter = ',')]
    ladder: Option<Vec<usize>>,
    /// JSON report (default).
    #[arg(long, conflicts_with = "text")]
    json: bool,
    /// Plain-text report.
    #[arg(long)]
    text: bool,
    /// Include wall-clock timings (makes output non-reproducible).
    #[arg(long)]
    timings: bool,
}

impl Options {
    fn size(&self) -> usize {
        self.n.unwrap_or(DEFAULT_N)
    }

    fn ladder(&self) -> Vec<usize> {
        match (&self.ladder, self.n) {
            (Some(l), _) => l.clone(),
            (None, Some(n)) => vec![n],
            (None, None) => DEFAULT_LADDER.to_vec(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TestKind {
    Hyponormal,
    Normal,
    Quasinormal,
    #[value(name = "2-hyponormal")]
    TwoHyponormal,
    #[value(name = "3-hyponormal")]
    ThreeHyponormal,
    Rank,
    SymbolNormal,
    Unitary,
    Ghr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Family1,
    Family2,
    Quasinormal,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one operator or symbol test on a matrix symbol.
    Analyze {
        #[arg(long, value_enum)]
        test: TestKind,
        /// Contractive analytic symbol K for the `ghr` test.
        #[arg(long)]
        certificate: Option<PathBuf>,
        /// Shift for the `quasinormal` test (re[,im]).
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        beta: Option<Complex64>,
        symbol: PathBuf,
        #[command(flatten)]
        options: Options,
    },
    /// Completion problem tools.
    Completion {
        #[command(subcommand)]
        action: CompletionCommand,
    },
    /// Check that `Δ H^2` is the kernel of `H_{Φ_-^*}`.
    Kernel {
        /// Inner matrix function Δ.
        #[arg(long)]
        delta: PathBuf,
        /// The analytic symbol Φ_-.
        phi_minus: PathBuf,
        #[command(flatten)]
        options: Options,
    },
    /// Diagonal hull δ of an inner matrix function.
    Hull {
        delta: PathBuf,
        #[command(flatten)]
        options: Options,
    },
    /// Coprimeness of a scalar inner θ with an inner matrix function, three ways.
    Coprime {
        /// 1x1 symbol file holding one analytic term.
        #[arg(long)]
        theta: PathBuf,
        delta: PathBuf,
        #[command(flatten)]
        options: Options,
    },
    /// Coprime factorization f = θ conj(b) of an analytic scalar symbol.
    Factor {
        symbol: PathBuf,
        #[command(flatten)]
        options: Options,
    },
}

#[derive(Debug, Subcommand)]
enum CompletionCommand {
    /// Classify a candidate pair (φ, ψ).
    Classify {
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        alpha: Complex64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        beta: Complex64,
        #[arg(long)]
        phi: PathBuf,
        #[arg(long)]
        psi: PathBuf,
        /// Cross-check the verdict on finite sections.
        #[arg(long)]
        verify: bool,
        #[command(flatten)]
        options: Options,
    },
    /// Build a member of a solution family.
    Build {
        #[arg(long, value_enum)]
        family: FamilyArg,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        alpha: Complex64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0")]
        mu: Complex64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        theta: f64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
        omega: f64,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0")]
        zeta: Complex64,
        /// Also write the bare symbol JSON to this file.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        options: Options,
    },
}

fn parse_complex(s: &str) -> std::result::Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |p: &str| p.parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re` or `re,im`, got `{s}`")),
    }
}

/// Failure of a command before a verdict exists.
enum Failure {
    Parse(String),
    Compute(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidZero(_) | Error::GrammarParse(_) | Error::NotUnimodular(_) => Failure::Parse(e.to_string()),
            _ => Failure::Compute(e.to_string()),
        }
    }
}

type Outcome = std::result::Result<(i32, Report), Failure>;

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct Inputs {
    paths: Vec<String>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    buffer: Option<usize>,
    tol: f64,
    samples: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    ladder: Option<Vec<usize>>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
struct Timings {
    elapsed_seconds: f64,
}

#[derive(Debug, Serialize)]
struct Report {
    command: String,
    inputs: Inputs,
    result: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    timings: Option<Timings>,
}

/// Writes every float with 17 significant digits so that reports are
/// byte-for-byte reproducible.
struct FixedFloats;

impl serde_json::ser::Formatter for FixedFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, writer: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(writer, value as f64)
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FixedFloats);
    value.serialize(&mut ser).expect("report types serialize infallibly");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

fn to_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("report types serialize infallibly")
}

fn text_lines(prefix: &str, v: &serde_json::Value, out: &mut Vec<String>) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                text_lines(&key, x, out);
            }
        }
        serde_json::Value::Array(items) if items.iter().any(|x| x.is_object()) => {
            for (i, x) in items.iter().enumerate() {
                text_lines(&format!("{prefix}[{i}]"), x, out);
            }
        }
        other => out.push(format!("{prefix}: {other}")),
    }
}

/// Parses and canonicalizes a symbol file.
pub fn parse_symbol(path: &Path) -> crate::error::Result<MatrixSymbol> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::GrammarParse(format!("{}: {e}", path.display())))?;
    let json: MatrixSymbolJson = serde_json::from_str(&text).map_err(|e| {
        Error::GrammarParse(format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column()))
    })?;
    json.to_symbol()
}

fn parse_scalar(path: &Path) -> std::result::Result<ScalarSymbol, Failure> {
    let s = parse_symbol(path)?;
    if s.n() != 1 {
        return Err(Failure::Parse(format!("{}: expected a 1x1 symbol", path.display())));
    }
    Ok(s.get(0, 0).clone())
}

fn parse_inner_scalar(path: &Path) -> std::result::Result<FiniteBlaschkeProduct, Failure> {
    let s = parse_scalar(path)?;
    match s.terms() {
        [t] if t.kind == TermKind::Analytic && (t.coeff.norm() - 1.0).abs() < 1e-12 => {
            Ok(t.inner.with_constant(t.coeff * t.inner.constant())?)
        }
        _ => Err(Failure::Parse(format!("{}: expected one analytic term with unimodular coefficient", path.display()))),
    }
}

fn verdict_exit(v: &Verdict) -> i32 {
    match v.status {
        Status::Holds => EXIT_HOLDS,
        Status::Fails => EXIT_FAILS,
        Status::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn completion_exit(v: &CompletionVerdict) -> i32 {
    match v.status {
        CompletionStatus::Normal | CompletionStatus::QuasinormalAfterShift { .. } => EXIT_HOLDS,
        CompletionStatus::NotSubnormal => EXIT_FAILS,
        CompletionStatus::ExceptionalCaseUnresolved => EXIT_INCONCLUSIVE,
    }
}

fn pack_matrix(m: &DMatrix<Complex64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

fn pack_zeros(b: &FiniteBlaschkeProduct) -> Vec<[f64; 2]> {
    b.zeros().iter().map(|z| [z.re, z.im]).collect()
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Section {
    #[serde(rename = "N")]
    n: usize,
    lambda_min: f64,
    error_bound: f64,
}

fn analyze(test: TestKind, certificate: Option<&Path>, beta: Option<Complex64>, path: &Path, o: &Options) -> Outcome {
    let phi = parse_symbol(path)?;
    let tol = o.tol;
    let mut paths = vec![path.display().to_string()];
    let (code, result) = match test {
        TestKind::Hyponormal => {
            let mut sections = Vec::new();
            let mut verdict = Verdict::holds(0.0, 0);
            for size in o.ladder() {
                let c = hardy_ops::self_commutator(&phi, size, tol)?;
                sections.push(Section { n: size, lambda_min: classify::lambda_min(&c.matrix), error_bound: c.error_bound });
                verdict = classify::psd_check(&c.matrix, tol, size);
                if verdict.is_fails() {
                    break;
                }
            }
            let value = serde_json::json!({ "test": "hyponormal", "verdict": to_value(&verdict), "sections": to_value(&sections) });
            (verdict_exit(&verdict), value)
        }
        TestKind::Normal => {
            let v = classify::normal_operator(&phi, &o.ladder(), tol)?;
            (verdict_exit(&v), serde_json::json!({ "test": "normal", "verdict": to_value(&v) }))
        }
        TestKind::Quasinormal => {
            let beta = beta.unwrap_or_default();
            let v = classify::quasinormal_after_shift(&phi, beta, o.size(), o.buffer.unwrap_or(DEFAULT_BUFFER), tol)?;
            (verdict_exit(&v), serde_json::json!({ "test": "quasinormal", "beta": [beta.re, beta.im], "verdict": to_value(&v) }))
        }
        TestKind::TwoHyponormal | TestKind::ThreeHyponormal => {
            let k = if test == TestKind::TwoHyponormal { 2 } else { 3 };
            let size = o.size();
            let buffer = o.buffer.unwrap_or_else(|| {
                let words = vec![&phi; 2 * k];
                let budget = tol / (2 * k * k) as f64;
                hardy_ops::required_buffer(&words, size, budget, (16 * size).max(256)).map_or(2 * size, |b| b.max(2 * size))
            });
            let v = classify::k_hyponormal(&phi, k, size, buffer, tol)?;
            (verdict_exit(&v), serde_json::json!({ "test": format!("{k}-hyponormal"), "verdict": to_value(&v) }))
        }
        TestKind::Rank => {
            let r = classify::commutator_rank(&phi, o.size(), tol)?;
            (EXIT_HOLDS, serde_json::json!({ "test": "rank", "rank": r }))
        }
        TestKind::SymbolNormal => {
            let (ok, defect) = phi.is_normal_symbol(o.samples, tol);
            let v = if ok {
                Verdict::holds(defect, o.samples)
            } else {
                Verdict::fails(defect, o.samples, Witness::PointwiseDefect { value: defect })
            };
            (verdict_exit(&v), serde_json::json!({ "test": "symbol-normal", "verdict": to_value(&v) }))
        }
        TestKind::Unitary => {
            let (v, u) = classify::normality_unitary_test(&phi, None, tol)?;
            let u = u.as_ref().map(pack_matrix);
            (verdict_exit(&v), serde_json::json!({ "test": "unitary", "verdict": to_value(&v), "U": to_value(&u) }))
        }
        TestKind::Ghr => {
            let Some(kp) = certificate else {
                return Err(Failure::Parse("--test ghr needs --certificate".into()));
            };
            let k = parse_symbol(kp)?;
            paths.push(kp.display().to_string());
            let v = classify::ghr_certificate(&phi, &k, o.samples, tol)?;
            (verdict_exit(&v), serde_json::json!({ "test": "ghr", "verdict": to_value(&v) }))
        }
    };
    Ok((code, report("analyze", paths, o, result)))
}

fn report(command: &str, paths: Vec<String>, o: &Options, result: serde_json::Value) -> Report {
    Report {
        command: command.into(),
        inputs: Inputs { paths, n: o.n, buffer: o.buffer, tol: o.tol, samples: o.samples, ladder: o.ladder.clone() },
        result,
        timings: None,
    }
}

fn classify_cmd(alpha: Complex64, beta: Complex64, phi: &Path, psi: &Path, verify: bool, o: &Options) -> Outcome {
    let (f, g) = (parse_scalar(phi)?, parse_scalar(psi)?);
    let verdict = completion::classify_candidate(alpha, beta, &f, &g)?;
    let mut verification: Option<VerificationReport> = None;
    if verify {
        let sym = completion::completion_symbol(alpha, beta, &f, &g)?;
        verification = Some(completion::verify_completion(&sym, &verdict, o.size(), o.tol)?);
    }
    let result = serde_json::json!({
        "alpha": [alpha.re, alpha.im],
        "beta": [beta.re, beta.im],
        "verdict": to_value(&verdict),
        "verification": to_value(&verification),
    });
    let paths = vec![phi.display().to_string(), psi.display().to_string()];
    Ok((completion_exit(&verdict), report("completion classify", paths, o, result)))
}

#[allow(clippy::too_many_arguments)]
fn build_cmd(
    family: FamilyArg,
    alpha: Complex64,
    mu: Complex64,
    theta: f64,
    omega: f64,
    zeta: Complex64,
    output: Option<&Path>,
    o: &Options,
) -> Outcome {
    let f = match family {
        FamilyArg::Family1 => CompletionFamily::family1(alpha, theta, omega, zeta),
        FamilyArg::Family2 => CompletionFamily::family2(alpha, mu, theta, zeta),
        FamilyArg::Quasinormal => CompletionFamily::quasinormal(alpha, theta, omega, zeta),
    };
    let sym = completion::build_completion(&f)?;
    let json = MatrixSymbolJson::from_symbol(&sym);
    if let Some(p) = output {
        std::fs::write(p, to_json(&json) + "\n").map_err(|e| Failure::Compute(format!("{}: {e}", p.display())))?;
    }
    let result = serde_json::json!({ "family": to_value(&f), "symbol": to_value(&json) });
    let paths = output.map(|p| vec![p.display().to_string()]).unwrap_or_default();
    Ok((EXIT_HOLDS, report("completion build", paths, o, result)))
}

fn kernel_cmd(delta: &Path, phi_minus: &Path, o: &Options) -> Outcome {
    let d = InnerMatrixFunction::new(parse_symbol(delta)?)?;
    let pm = parse_symbol(phi_minus)?;
    let check = inner_matrix::kernel_check(&pm, &d, o.n.unwrap_or(32), o.tol)?;
    let result = serde_json::json!({
        "verdict": to_value(&check.verdict),
        "maxResidual": check.max_residual,
        "rank": check.rank,
        "expectedRank": check.expected_rank,
    });
    let paths = vec![delta.display().to_string(), phi_minus.display().to_string()];
    Ok((verdict_exit(&check.verdict), report("kernel", paths, o, result)))
}

fn hull_cmd(delta: &Path, o: &Options) -> Outcome {
    let d = InnerMatrixFunction::new(parse_symbol(delta)?)?;
    let hull = inner_matrix::diagonal_hull(&d)?;
    let result = serde_json::json!({
        "zeros": pack_zeros(&hull),
        "degree": hull.degree(),
        "detDegree": d.det_degree()?,
    });
    Ok((EXIT_HOLDS, report("hull", vec![delta.display().to_string()], o, result)))
}

fn coprime_cmd(theta: &Path, delta: &Path, o: &Options) -> Outcome {
    let t = parse_inner_scalar(theta)?;
    let d = InnerMatrixFunction::new(parse_symbol(delta)?)?;
    let by_hull = inner_matrix::coprime_diag(&t, &d)?;
    let by_det = inner_matrix::coprime_det(&t, &d)?;
    let (by_point, failing) = inner_matrix::coprime_point_test(&t, d.symbol())?;
    let agree = by_hull == by_det && by_det == by_point;
    let code = match (agree, by_hull) {
        (false, _) => EXIT_INCONCLUSIVE,
        (true, true) => EXIT_HOLDS,
        (true, false) => EXIT_FAILS,
    };
    let result = serde_json::json!({
        "hullCoprime": by_hull,
        "detCoprime": by_det,
        "pointTest": by_point,
        "failingZero": failing.map(|w| [w.re, w.im]),
        "agree": agree,
    });
    Ok((code, report("coprime", vec![theta.display().to_string(), delta.display().to_string()], o, result)))
}

fn factor_cmd(path: &Path, o: &Options) -> Outcome {
    let f = coprime_factorization(&parse_scalar(path)?)?;
    let pack = |c: &[Complex64]| c.iter().map(|x| [x.re, x.im]).collect::<Vec<_>>();
    let result = serde_json::json!({
        "theta": { "zeros": pack_zeros(&f.theta), "degree": f.theta.degree() },
        "cofactor": {
            "numerator": pack(f.cofactor.numerator.coeffs()),
            "denominator": pack(f.cofactor.denominator.coeffs()),
        },
    });
    Ok((EXIT_HOLDS, report("factor", vec![path.display().to_string()], o, result)))
}

fn options(cmd: &Command) -> &Options {
    match cmd {
        Command::Analyze { options, .. }
        | Command::Kernel { options, .. }
        | Command::Hull { options, .. }
        | Command::Coprime { options, .. }
        | Command::Factor { options, .. } => options,
        Command::Completion { action: CompletionCommand::Classify { options, .. } }
        | Command::Completion { action: CompletionCommand::Build { options, .. } } => options,
    }
}

/// Runs one invocation, writing the report to `out` and diagnostics to `err`.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_HOLDS };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{rendered}");
            } else {
                let _ = write!(out, "{rendered}");
            }
            return code;
        }
    };
    let o = options(&cli.command).clone();
    let start = Instant::now();
    let outcome = match &cli.command {
        Command::Analyze { test, certificate, beta, symbol, options } => {
            analyze(*test, certificate.as_deref(), *beta, symbol, options)
        }
        Command::Completion { action } => match action {
            CompletionCommand::Classify { alpha, beta, phi, psi, verify, options } => {
                classify_cmd(*alpha, *beta, phi, psi, *verify, options)
            }
            CompletionCommand::Build { family, alpha, mu, theta, omega, zeta, output, options } => {
                build_cmd(*family, *alpha, *mu, *theta, *omega, *zeta, output.as_deref(), options)
            }
        },
        Command::Kernel { delta, phi_minus, options } => kernel_cmd(delta, phi_minus, options),
        Command::Hull { delta, options } => hull_cmd(delta, options),
        Command::Coprime { theta, delta, options } => coprime_cmd(theta, delta, options),
        Command::Factor { symbol, options } => factor_cmd(symbol, options),
    };
    match outcome {
        Ok((code, mut rep)) => {
            if o.timings {
                rep.timings = Some(Timings { elapsed_seconds: start.elapsed().as_secs_f64() });
            }
            let written = if o.text {
                let mut lines = Vec::new();
                text_lines("", &to_value(&rep), &mut lines);
                writeln!(out, "{}", lines.join("\n"))
            } else {
                writeln!(out, "{}", to_json(&rep))
            };
            if written.is_err() {
                return EXIT_INCONCLUSIVE;
            }
            code
        }
        Err(Failure::Parse(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_PARSE
        }
        Err(Failure::Compute(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INCONCLUSIVE
        }
    }
}

pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(argv, &mut io::stdout().lock(), &mut io::stderr().lock())
}
