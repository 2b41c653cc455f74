//! The `gconv` command line.
//!
//! Exit codes: 0 success, 1 check failure, 2 parse or validation error,
//! 3 group or dimension mismatch, 4 mollifier radius below `10 h`.

mod laws;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::calculus::{cont_diff_check, MAX_CHECK_ORDER};
use crate::conv::{ConvRequest, Variant};
use crate::csv::{parse_csv, to_csv};
use crate::error::Error;
use crate::fastpath::{bench, convolve_routed};
use crate::function::SampledFunction;
use crate::group::{GroupPoint, GroupSpace, InvariantMeasure};
use crate::mollify::{bump, convergence_study, mollify, BumpSpec};
use crate::pairing::Pairing;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;
pub const EXIT_RADIUS: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "gconv", version, about = "Generalized convolution over groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convolve two signals.
    Conv(ConvArgs),
    /// Smooth a lattice signal with a normalized bump, or run a convergence study.
    Mollify(MollifyArgs),
    /// Check the algebraic laws of convolution on the given data.
    Laws(LawsArgs),
    /// Compare the derivative formula with finite differences.
    DerivCheck(DerivArgs),
    /// Time the transform path against the direct sum.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct Selectors {
    /// Z, Zn:<n>, lattice:<d>:<h> or D<n>; defaults to the file header.
    #[arg(long)]
    group: Option<GroupSpace>,
    /// Defaults to grid on lattices, counting elsewhere.
    #[arg(long, value_enum)]
    measure: Option<MeasureArg>,
}

#[derive(Args, Debug)]
struct Output {
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
    /// Report format.
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args, Debug)]
struct ConvArgs {
    f: PathBuf,
    g: PathBuf,
    #[command(flatten)]
    selectors: Selectors,
    /// mul or smul:<m>; inferred from the value dimensions when omitted.
    #[arg(long)]
    pairing: Option<PairingArg>,
    #[arg(long, value_enum, default_value = "std")]
    variant: VariantArg,
    /// Use the transform path for scalar requests with counting measure.
    #[arg(long)]
    fast: bool,
    #[arg(short = 'o', long = "output")]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MollifyArgs {
    input: PathBuf,
    #[command(flatten)]
    selectors: Selectors,
    /// Bump radius R.
    #[arg(long, required_unless_present = "study")]
    radius: Option<f64>,
    /// Strictly decreasing radii; writes a convergence report instead.
    #[arg(long, value_delimiter = ',')]
    study: Option<Vec<f64>>,
    /// Lattice indices of the study point, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    at: Option<Vec<i64>>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct LawsArgs {
    f: PathBuf,
    /// Second operand; the first is reused when omitted.
    g: Option<PathBuf>,
    #[command(flatten)]
    selectors: Selectors,
    #[arg(long)]
    pairing: Option<PairingArg>,
    #[arg(long, value_enum, default_value = "std")]
    variant: VariantArg,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// A claimed convolution of the operands to check.
    #[arg(long)]
    verify: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct DerivArgs {
    input: PathBuf,
    #[command(flatten)]
    selectors: Selectors,
    /// Bump radius R of the smooth operand.
    #[arg(long)]
    radius: f64,
    #[arg(long, default_value_t = 1)]
    order: usize,
    #[arg(long, default_value_t = 1e-2)]
    tol: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Signal lengths, at least 64 each.
    #[arg(required = true, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 3)]
    trials: usize,
    #[command(flatten)]
    out: Output,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum MeasureArg {
    Counting,
    Grid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum VariantArg {
    Std,
    Alt,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Std => Variant::Standard,
            VariantArg::Alt => Variant::NonabelianAlt,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum PairingArg {
    Mul,
    Smul(usize),
}

impl FromStr for PairingArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "mul" {
            return Ok(Self::Mul);
        }
        match s.strip_prefix("smul:").map(str::parse::<usize>) {
            Some(Ok(m)) if m > 0 => Ok(Self::Smul(m)),
            _ => Err(format!(
                "expected `mul` or `smul:<m>` with m > 0, got `{s}`"
            )),
        }
    }
}

/// A command's failure: exit code plus message for stderr.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn invalid(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INVALID,
            message: message.into(),
        }
    }

    fn in_file(path: &Path) -> impl FnOnce(Error) -> Failure + '_ {
        move |e| match e {
            Error::Parse { line, message } => {
                Failure::invalid(format!("{}:{line}: {message}", path.display()))
            }
            other => other.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Self {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

/// Maps library errors onto the exit-code contract.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::SpaceMismatch { .. }
        | Error::DimensionMismatch { .. }
        | Error::NotLattice(_)
        | Error::InterpretationMismatch => EXIT_MISMATCH,
        Error::RadiusTooSmall { .. } => EXIT_RADIUS,
        _ => EXIT_INVALID,
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                EXIT_INVALID
            } else {
                EXIT_OK
            };
        }
    };
    let outcome = match cli.command {
        Command::Conv(a) => cmd_conv(a),
        Command::Mollify(a) => cmd_mollify(a),
        Command::Laws(a) => laws::cmd_laws(a),
        Command::DerivCheck(a) => cmd_deriv_check(a),
        Command::Bench(a) => cmd_bench(a),
    };
    match outcome {
        Ok(code) => code,
        Err(f) => {
            eprintln!("gconv: {}", f.message);
            f.code
        }
    }
}

fn read_signal(
    path: &Path,
    group: Option<GroupSpace>,
) -> std::result::Result<SampledFunction, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::invalid(format!("{}: {e}", path.display())))?;
    let f = parse_csv(&text).map_err(Failure::in_file(path))?;
    if let Some(expected) = group {
        if *f.group() != expected {
            return Err(Failure {
                code: EXIT_MISMATCH,
                message: format!(
                    "{}: file group {} differs from --group {expected}",
                    path.display(),
                    f.group()
                ),
            });
        }
    }
    Ok(f)
}

/// Writes via a temporary file in the target directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> std::result::Result<(), Failure> {
    let io = |e: std::io::Error| Failure::invalid(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn emit_signal(output: Option<&Path>, f: &SampledFunction) -> std::result::Result<(), Failure> {
    let text = to_csv(f);
    match output {
        Some(p) => write_atomic(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// A report with a human table, a CSV form and a JSON form.
struct Report<T: Serialize> {
    table: String,
    csv: String,
    json: T,
}

fn emit_report<T: Serialize>(out: &Output, report: &Report<T>) -> std::result::Result<(), Failure> {
    let json = || serde_json::to_string_pretty(&report.json).expect("reports serialize") + "\n";
    match (&out.output, out.format) {
        (Some(p), Format::Csv) => {
            print!("{}", report.table);
            write_atomic(p, &report.csv)
        }
        (Some(p), Format::Json) => {
            print!("{}", report.table);
            write_atomic(p, &json())
        }
        (None, Format::Csv) => {
            print!("{}", report.table);
            Ok(())
        }
        (None, Format::Json) => {
            print!("{}", json());
            Ok(())
        }
    }
}

fn resolve_measure(
    arg: Option<MeasureArg>,
    group: &GroupSpace,
) -> std::result::Result<InvariantMeasure, Failure> {
    match (arg, group) {
        (Some(MeasureArg::Counting), _)
        | (None, GroupSpace::Integers | GroupSpace::Cyclic(_) | GroupSpace::Dihedral(_)) => {
            Ok(InvariantMeasure::counting(*group))
        }
        (Some(MeasureArg::Grid), _) | (None, GroupSpace::Lattice { .. }) => {
            Ok(InvariantMeasure::grid_volume(*group)?)
        }
    }
}

/// Explicit selection, else `Mul` for scalar operands and `ScalarSmul(m)`
/// for a scalar `f` against `m`-vector `g`.
fn resolve_pairing(
    arg: Option<PairingArg>,
    f: &SampledFunction,
    g: &SampledFunction,
) -> std::result::Result<Pairing, Failure> {
    let p = match arg {
        Some(PairingArg::Mul) => Pairing::mul(),
        Some(PairingArg::Smul(m)) => Pairing::scalar_smul(m)?,
        None if g.vdim() == 1 => Pairing::mul(),
        None => Pairing::scalar_smul(g.vdim())?,
    };
    if p.dim_left() != f.vdim() || p.dim_right() != g.vdim() {
        return Err(Failure {
            code: EXIT_MISMATCH,
            message: format!(
                "pairing takes value dimensions ({}, {}) but the inputs have ({}, {})",
                p.dim_left(),
                p.dim_right(),
                f.vdim(),
                g.vdim()
            ),
        });
    }
    Ok(p)
}

fn check_tol(tol: f64) -> std::result::Result<(), Failure> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Failure::invalid(format!(
            "--tol must be positive, got {tol}"
        )))
    }
}

fn cmd_conv(a: ConvArgs) -> CmdResult {
    let f = read_signal(&a.f, a.selectors.group)?;
    let g = read_signal(&a.g, a.selectors.group)?;
    if f.group() != g.group() {
        return Err(Error::SpaceMismatch {
            expected: *f.group(),
            found: *g.group(),
        }
        .into());
    }
    let mu = resolve_measure(a.selectors.measure, f.group())?;
    let l = resolve_pairing(a.pairing, &f, &g)?;
    let req = ConvRequest::new(&f, &g, &l, &mu)?.with_variant(a.variant.into());
    let out = if a.fast {
        convolve_routed(&req)?
    } else {
        req.convolve()?
    };
    emit_signal(a.output.as_deref(), &out)?;
    Ok(EXIT_OK)
}

fn lattice_params(group: &GroupSpace) -> std::result::Result<(usize, f64), Failure> {
    match *group {
        GroupSpace::Lattice { dim, spacing } => Ok((dim, spacing)),
        other => Err(Error::NotLattice(other).into()),
    }
}

#[derive(Serialize)]
struct StudyJson<'a> {
    at: GroupPoint,
    #[serde(flatten)]
    report: &'a crate::mollify::ConvergenceReport,
    within_bounds: bool,
    nonincreasing: bool,
}

fn cmd_mollify(a: MollifyArgs) -> CmdResult {
    let g = read_signal(&a.input, a.selectors.group)?;
    let (dim, h) = lattice_params(g.group())?;
    if a.selectors.measure == Some(MeasureArg::Counting) {
        return Err(Failure::invalid(
            "mollify integrates against the grid measure",
        ));
    }
    let mu = InvariantMeasure::grid_volume(*g.group())?;
    let Some(radii) = a.study else {
        let spec = BumpSpec::new(
            a.radius.expect("clap requires --radius without --study"),
            dim,
            h,
        )?;
        let out = mollify(&g, &spec, &mu)?;
        emit_signal(a.out.output.as_deref(), &out)?;
        return Ok(EXIT_OK);
    };
    let x0 = match a.at {
        Some(c) if c.len() == dim => GroupPoint::new(&c),
        Some(c) => {
            return Err(Error::DimensionMismatch {
                what: "study point",
                expected: dim,
                found: c.len(),
            }
            .into())
        }
        None => g.group().zero(),
    };
    let rep = convergence_study(&g, &x0, &radii, &mu)?;
    let ok = rep.within_bounds();
    let mut table = format!("convergence at {x0} (slack {:.3e})\n", rep.slack);
    let mut csv = format!(
        "# at={x0} slack={} lipschitz={}\nradius,distance,bound\n",
        rep.slack, rep.lipschitz
    );
    let _ = writeln!(table, "{:>12} {:>14} {:>14}", "radius", "distance", "bound");
    for ((r, d), b) in rep.radii.iter().zip(&rep.distances).zip(&rep.bounds) {
        let _ = writeln!(table, "{r:>12} {d:>14.6e} {b:>14.6e}");
        let _ = writeln!(csv, "{r},{d},{b}");
    }
    let _ = writeln!(
        table,
        "{}, distances {}",
        if ok {
            "within bounds"
        } else {
            "BOUND VIOLATED"
        },
        if rep.is_nonincreasing() {
            "nonincreasing"
        } else {
            "not monotone"
        }
    );
    let json = StudyJson {
        at: x0,
        report: &rep,
        within_bounds: ok,
        nonincreasing: rep.is_nonincreasing(),
    };
    emit_report(&a.out, &Report { table, csv, json })?;
    Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_deriv_check(a: DerivArgs) -> CmdResult {
    check_tol(a.tol)?;
    if a.order > MAX_CHECK_ORDER {
        return Err(Error::UnsupportedOrder(a.order).into());
    }
    let f = read_signal(&a.input, a.selectors.group)?;
    let (dim, h) = lattice_params(f.group())?;
    let mu = resolve_measure(a.selectors.measure, f.group())?;
    let g = bump(&BumpSpec::new(a.radius, dim, h)?)?;
    let l = if f.vdim() == 1 {
        Pairing::mul()
    } else {
        Pairing::scalar_smul(f.vdim())?.transpose()
    };
    let rep = cont_diff_check(&f, &g, &l, &mu, a.order, a.tol)?;
    let mut table = format!(
        "{:>6} {:>16} {:>8}  (tol {:e})\n",
        "order", "max_deviation", "points", rep.tol
    );
    let mut csv = String::from("order,max_deviation,points_checked\n");
    for o in &rep.orders {
        let _ = writeln!(
            table,
            "{:>6} {:>16.6e} {:>8}",
            o.order, o.max_deviation, o.points_checked
        );
        let _ = writeln!(csv, "{},{},{}", o.order, o.max_deviation, o.points_checked);
    }
    let _ = writeln!(table, "{}", if rep.pass { "pass" } else { "FAIL" });
    emit_report(
        &a.out,
        &Report {
            table,
            csv,
            json: &rep,
        },
    )?;
    Ok(if rep.pass { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn cmd_bench(a: BenchArgs) -> CmdResult {
    let rows = bench(&a.sizes, a.trials)?;
    let mut table = format!(
        "{:>8} {:>14} {:>14} {:>10} {:>14}\n",
        "size", "naive_s", "fast_s", "speedup", "max_deviation"
    );
    let mut csv = String::from("size,naive_time,fast_time,max_deviation\n");
    for r in &rows {
        let _ = writeln!(
            table,
            "{:>8} {:>14.6e} {:>14.6e} {:>10.1} {:>14.3e}",
            r.size,
            r.naive_time,
            r.fast_time,
            r.naive_time / r.fast_time,
            r.max_deviation
        );
        let _ = writeln!(
            csv,
            "{},{},{},{}",
            r.size, r.naive_time, r.fast_time, r.max_deviation
        );
    }
    let accurate = rows.iter().all(|r| r.max_deviation <= 1e-9);
    let largest = rows
        .iter()
        .max_by_key(|r| r.size)
        .expect("clap requires a size");
    let faster = largest.fast_time < largest.naive_time;
    if !accurate {
        let _ = writeln!(table, "FAIL: deviation above 1e-9");
    }
    if !faster {
        let _ = writeln!(
            table,
            "FAIL: transform path not faster at size {}",
            largest.size
        );
    }
    emit_report(
        &a.out,
        &Report {
            table,
            csv,
            json: &rows,
        },
    )?;
    Ok(if accurate && faster {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairing_arg_parses() {
        assert_eq!("mul".parse::<PairingArg>(), Ok(PairingArg::Mul));
        assert_eq!("smul:3".parse::<PairingArg>(), Ok(PairingArg::Smul(3)));
        assert!("smul:0".parse::<PairingArg>().is_err());
        assert!("tensor".parse::<PairingArg>().is_err());
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(
            exit_code(&Error::Parse {
                line: 1,
                message: String::new()
            }),
            EXIT_INVALID
        );
        assert_eq!(exit_code(&Error::UnsupportedOrder(3)), EXIT_INVALID);
        assert_eq!(
            exit_code(&Error::DimensionMismatch {
                what: "x",
                expected: 1,
                found: 2
            }),
            EXIT_MISMATCH
        );
        assert_eq!(
            exit_code(&Error::RadiusTooSmall {
                radius: 0.1,
                grid_h: 0.1
            }),
            EXIT_RADIUS
        );
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(run(["gconv"]), EXIT_INVALID);
        assert_eq!(run(["gconv", "conv", "a.csv"]), EXIT_INVALID);
        assert_eq!(
            run(["gconv", "conv", "--pairing", "bogus", "a", "b"]),
            EXIT_INVALID
        );
        assert_eq!(run(["gconv", "bench", "--trials", "x", "64"]), EXIT_INVALID);
    }

    #[test]
    fn measure_defaults() {
        let z = resolve_measure(None, &GroupSpace::Integers).unwrap();
        assert_eq!(z.weight(&GroupPoint::scalar(3)), 1.0);
        let lat = GroupSpace::lattice(2, 0.5).unwrap();
        assert_eq!(
            resolve_measure(None, &lat).unwrap().weight(&lat.zero()),
            0.25
        );
        assert!(resolve_measure(Some(MeasureArg::Grid), &GroupSpace::Integers).is_err());
    }
}
