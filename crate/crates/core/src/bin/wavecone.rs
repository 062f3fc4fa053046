//! `wavecone` command-line interface. Exit codes: 0 success, 1 input error,
//! 2 undecided (inconclusive analysis, inconclusive membership, failed
//! residual check or failed validation); the report is written either way.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use wavecone::cone::oracle::grid_oracle;
use wavecone::cone::Cone;
use wavecone::measure::{
    admissible_polar_set, bv_jump_example, model_rectifiable_measure, read_field, verify_afree_fft, DiscreteMeasure,
    LatticePlane, Shape, SpectralConvention,
};
use wavecone::report::{self, AnalysisReport, MemberReport, OperatorSummary, SCHEMA_VERSION};
use wavecone::{AnalysisConfig, Error, OperatorSpec, Result};

#[derive(Parser)]
#[command(
    name = "wavecone",
    version,
    about = "Wave cones, ℓ-dimensional wave cones and A-free model measures"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct GlobalOpts {
    /// JSON config file (flags override it).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    tol_zero: Option<f64>,
    #[arg(long, global = true)]
    tol_rank: Option<f64>,
    #[arg(long, global = true)]
    plane_budget: Option<usize>,
    #[arg(long, global = true)]
    lambda_budget: Option<usize>,
    #[arg(long, global = true)]
    resolution: Option<usize>,
    /// Disable the closed forms for builtin operators.
    #[arg(long, global = true)]
    no_closed_forms: bool,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct OpArgs {
    /// `builtin:<name>` or a path to an operator JSON file.
    spec: String,
    /// Dimension parameter of a builtin.
    #[arg(long)]
    d: Option<usize>,
    /// Row count parameter of builtin curl.
    #[arg(long)]
    p: Option<usize>,
}

#[derive(Args)]
struct LambdaArgs {
    /// Comma-separated entries, `e<i>` (a coordinate vector of R^m) or
    /// `e<i>⊗e<j>` (also written `e<i>xe<j>`) for matrix-valued inputs.
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<String>,
    /// File holding λ in the inline syntax (whitespace also separates).
    #[arg(long)]
    lambda_file: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ConventionArg {
    Continuous,
    Centered,
}

#[derive(Subcommand)]
enum Command {
    /// Full cone profile of an operator.
    Analyze {
        #[command(flatten)]
        op: OpArgs,
        /// Include wall-clock timings (makes the report run-dependent).
        #[arg(long)]
        timings: bool,
    },
    /// Membership of λ in Λ_A (`wave`), Λ^ℓ_A (`ell:ℓ`) or N^ℓ_A (`n:ℓ`).
    Member {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[arg(long)]
        cone: String,
    },
    /// Fourier residual of a field file or a generated model measure.
    MeasureCheck {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
        /// Field file (text or binary).
        #[arg(long)]
        field: Option<PathBuf>,
        /// `x1=0[,x3=0…]` or `span:<int vec>;<int vec>…`.
        #[arg(long)]
        plane: Option<String>,
        /// Use the first admissible polar vector for the plane.
        #[arg(long)]
        auto_lambda: bool,
        /// Gradient of the slab {1/4 ≤ x1 < 3/4}.
        #[arg(long)]
        bv_slab: bool,
        /// Gradient of the cube [1/4, 3/4)^d.
        #[arg(long)]
        bv_square: bool,
        /// Jump vector a of the BV examples (default e1).
        #[arg(long, allow_hyphen_values = true)]
        jump: Option<String>,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Defaults to `centered` for BV examples, `continuous` otherwise.
        #[arg(long, value_enum)]
        convention: Option<ConventionArg>,
    },
    /// Brute-force grid sweep (d ≤ 3) for cross-checking.
    GridOracle {
        #[command(flatten)]
        op: OpArgs,
        #[command(flatten)]
        lambda: LambdaArgs,
        #[arg(long)]
        cone: String,
    },
    /// Re-validate an analysis or membership report.
    Validate { report: PathBuf },
}

fn config(g: &GlobalOpts) -> Result<AnalysisConfig> {
    let mut cfg = match &g.config {
        Some(p) => AnalysisConfig::from_json_str(&std::fs::read_to_string(p)?)?,
        None => AnalysisConfig::default(),
    };
    if let Some(v) = g.seed {
        cfg.seed = v;
    }
    if let Some(v) = g.tol_zero {
        cfg.tol_zero = v;
    }
    if let Some(v) = g.tol_rank {
        cfg.tol_rank = v;
    }
    if let Some(v) = g.plane_budget {
        cfg.plane_budget = v;
    }
    if let Some(v) = g.lambda_budget {
        cfg.lambda_budget = v;
    }
    if let Some(v) = g.resolution {
        cfg.resolution = v;
    }
    if g.no_closed_forms {
        cfg.closed_forms = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_op(a: &OpArgs) -> Result<OperatorSpec> {
    match a.spec.strip_prefix("builtin:") {
        Some(name) => OperatorSpec::builtin_by_name(name, a.d, a.p),
        None => {
            if a.d.is_some() || a.p.is_some() {
                return Err(Error::InvalidInput("--d/--p only apply to builtin operators".into()));
            }
            OperatorSpec::from_json_str(&std::fs::read_to_string(&a.spec)?)
        }
    }
}

/// Parse the inline vector syntax for a vector of length `m`; `d` is the
/// column count used by `e<i>⊗e<j>`.
fn parse_vector(text: &str, m: usize, d: usize) -> Result<Vec<f64>> {
    let t = text.trim();
    let bad = || Error::InvalidInput(format!("cannot parse vector '{t}'"));
    let unit = |i: usize| -> Result<Vec<f64>> {
        if i == 0 || i > m {
            return Err(Error::InvalidInput(format!("index {i} out of range 1..={m}")));
        }
        let mut v = vec![0.0; m];
        v[i - 1] = 1.0;
        Ok(v)
    };
    let idx = |s: &str| s.strip_prefix('e').and_then(|r| r.parse::<usize>().ok());
    for sep in ["⊗", "x"] {
        if let Some((a, b)) = t.split_once(sep) {
            if let (Some(i), Some(j)) = (idx(a), idx(b)) {
                if !m.is_multiple_of(d) || j == 0 || j > d || i == 0 || i > m / d {
                    return Err(Error::InvalidInput(format!(
                        "'{t}' does not fit a {}×{d} layout",
                        m / d.max(1)
                    )));
                }
                return unit((i - 1) * d + j);
            }
        }
    }
    if let Some(i) = idx(t) {
        return unit(i);
    }
    let v: Vec<f64> = t
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    if v.len() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: v.len(),
            context: "vector entries",
        });
    }
    Ok(v)
}

fn load_lambda(a: &LambdaArgs, op: &OperatorSpec) -> Result<Option<Vec<f64>>> {
    match (&a.lambda, &a.lambda_file) {
        (Some(_), Some(_)) => Err(Error::InvalidInput("give either --lambda or --lambda-file".into())),
        (Some(t), None) => parse_vector(t, op.m(), op.d()).map(Some),
        (None, Some(p)) => parse_vector(&std::fs::read_to_string(p)?, op.m(), op.d()).map(Some),
        (None, None) => Ok(None),
    }
}

fn require_lambda(a: &LambdaArgs, op: &OperatorSpec) -> Result<Vec<f64>> {
    load_lambda(a, op)?.ok_or_else(|| Error::InvalidInput("λ required (--lambda or --lambda-file)".into()))
}

fn parse_plane(text: &str, d: usize) -> Result<LatticePlane> {
    if let Some(rest) = text.strip_prefix("span:") {
        let gens = rest
            .split(';')
            .map(|g| {
                g.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<i64>()
                            .map_err(|_| Error::InvalidInput(format!("bad integer in '{g}'")))
                    })
                    .collect::<Result<Vec<i64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        if gens.iter().any(|g| g.len() != d) {
            return Err(Error::InvalidInput(format!("plane generators need {d} entries")));
        }
        return LatticePlane::new(gens);
    }
    let mut free = vec![true; d];
    for c in text.split(',') {
        let axis = c
            .trim()
            .strip_prefix('x')
            .and_then(|r| r.strip_suffix("=0"))
            .and_then(|i| i.parse::<usize>().ok())
            .filter(|&i| (1..=d).contains(&i))
            .ok_or_else(|| Error::InvalidInput(format!("plane constraint '{c}': expected x<i>=0 with 1 ≤ i ≤ {d}")))?;
        free[axis - 1] = false;
    }
    let gens: Vec<Vec<i64>> = (0..d)
        .filter(|&i| free[i])
        .map(|i| (0..d).map(|j| i64::from(i == j)).collect())
        .collect();
    if gens.is_empty() {
        return Err(Error::InvalidInput("plane constraints leave only the origin".into()));
    }
    LatticePlane::new(gens)
}

fn emit<T: Serialize>(value: &T, out: &Option<PathBuf>) -> Result<()> {
    let text = report::to_json(value)?;
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn measure_check(
    op: &OperatorSpec,
    lambda: Option<Vec<f64>>,
    field: &Option<PathBuf>,
    plane: &Option<String>,
    auto_lambda: bool,
    bv: Option<Shape>,
    jump: &Option<String>,
    n: usize,
    tol: f64,
    convention: Option<ConventionArg>,
) -> Result<(Value, bool)> {
    let mut info = serde_json::Map::new();
    let (mu, default_conv): (DiscreteMeasure, SpectralConvention) = if let Some(path) = field {
        info.insert("source".into(), json!(format!("field:{}", path.display())));
        (read_field(Path::new(path))?, SpectralConvention::Continuous)
    } else if let Some(shape) = bv {
        let d = op.d();
        if !op.m().is_multiple_of(d) {
            return Err(Error::InvalidInput(format!(
                "BV examples need m divisible by d (m={}, d={d})",
                op.m()
            )));
        }
        let p = op.m() / d;
        let a = match jump {
            Some(t) => parse_vector(t, p, 1)?,
            None => (0..p).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect(),
        };
        info.insert(
            "source".into(),
            json!(if matches!(shape, Shape::Slab { .. }) {
                "bv_slab"
            } else {
                "bv_square"
            }),
        );
        info.insert("jump".into(), json!(a));
        (bv_jump_example(&shape, &a, n)?, SpectralConvention::CenteredDifference)
    } else {
        let text = plane
            .as_ref()
            .ok_or_else(|| Error::InvalidInput("give --field, --plane or a BV example".into()))?;
        let lp = parse_plane(text, op.d())?;
        let adm = admissible_polar_set(op, lp.plane())?;
        let lambda = match (lambda, auto_lambda) {
            (Some(_), true) => return Err(Error::InvalidInput("--lambda and --auto-lambda are exclusive".into())),
            (Some(l), false) => l,
            (None, true) => {
                if adm.ncols() == 0 {
                    return Err(Error::InvalidInput(
                        "the admissible polar set of this plane is {0}".into(),
                    ));
                }
                adm.column(0).iter().copied().collect()
            }
            (None, false) => {
                return Err(Error::InvalidInput(
                    "model measures need --lambda or --auto-lambda".into(),
                ))
            }
        };
        info.insert("source".into(), json!("model"));
        info.insert("plane_generators".into(), json!(lp.generators()));
        info.insert("admissible_dim".into(), json!(adm.ncols()));
        info.insert("lambda".into(), json!(lambda));
        (
            model_rectifiable_measure(&lambda, &lp, n)?,
            SpectralConvention::Continuous,
        )
    };
    let conv = match convention {
        Some(ConventionArg::Continuous) => SpectralConvention::Continuous,
        Some(ConventionArg::Centered) => SpectralConvention::CenteredDifference,
        None => default_conv,
    };
    let res = verify_afree_fft(op, &mu, tol, conv)?;
    let passed = res.passed;
    let mut doc = serde_json::Map::new();
    doc.insert("schema_version".into(), json!(SCHEMA_VERSION));
    doc.insert("tool_version".into(), json!(env!("CARGO_PKG_VERSION")));
    doc.insert(
        "operator".into(),
        serde_json::to_value(OperatorSummary::of(op)).expect("serializable"),
    );
    doc.extend(info);
    doc.insert("n".into(), json!(mu.grid_size()));
    doc.insert("total_variation".into(), json!(mu.total_variation()));
    doc.insert("residual".into(), serde_json::to_value(&res).expect("serializable"));
    Ok((Value::Object(doc), passed))
}

fn run(cli: Cli) -> Result<i32> {
    let g = &cli.global;
    match &cli.cmd {
        Command::Analyze { op, timings } => {
            let cfg = config(g)?;
            let op = load_op(op)?;
            let r = report::analyze(&op, &cfg, *timings)?;
            emit(&r, &g.out)?;
            Ok(r.exit_code())
        }
        Command::Member { op, lambda, cone } => {
            let cfg = config(g)?;
            let op = load_op(op)?;
            let cone: Cone = cone.parse()?;
            let l = require_lambda(lambda, &op)?;
            let r = report::member(&op, &l, cone, &cfg)?;
            emit(&r, &g.out)?;
            Ok(r.exit_code())
        }
        Command::MeasureCheck {
            op,
            lambda,
            field,
            plane,
            auto_lambda,
            bv_slab,
            bv_square,
            jump,
            n,
            tol,
            convention,
        } => {
            let op = load_op(op)?;
            let d = op.d();
            let bv = match (bv_slab, bv_square) {
                (true, true) => return Err(Error::InvalidInput("choose one BV example".into())),
                (true, false) => Some(Shape::Slab {
                    d,
                    axis: 0,
                    lo: 0.25,
                    hi: 0.75,
                }),
                (false, true) => Some(Shape::Cube { d, lo: 0.25, hi: 0.75 }),
                (false, false) => None,
            };
            let l = load_lambda(lambda, &op)?;
            let (doc, passed) = measure_check(&op, l, field, plane, *auto_lambda, bv, jump, *n, *tol, *convention)?;
            emit(&doc, &g.out)?;
            Ok(if passed { 0 } else { 2 })
        }
        Command::GridOracle { op, lambda, cone } => {
            let cfg = config(g)?;
            let op = load_op(op)?;
            let cone: Cone = cone.parse()?;
            let l = require_lambda(lambda, &op)?;
            let norm = l.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm.is_nan() || norm == 0.0 {
                return Err(Error::InvalidInput("λ must be nonzero".into()));
            }
            let unit: Vec<f64> = l.iter().map(|x| x / norm).collect();
            let r = grid_oracle(&op, &unit, cone, cfg.resolution)?;
            emit(&r, &g.out)?;
            Ok(0)
        }
        Command::Validate { report: path } => {
            let text = std::fs::read_to_string(path)?;
            let value: Value = serde_json::from_str(&text).map_err(|e| Error::InvalidInput(format!("report: {e}")))?;
            let parse_err = |e: serde_json::Error| Error::InvalidInput(format!("report: {e}"));
            let v = if value.get("cone").is_some() {
                report::validate_member(&serde_json::from_value::<MemberReport>(value).map_err(parse_err)?)?
            } else {
                report::validate_analysis(&serde_json::from_value::<AnalysisReport>(value).map_err(parse_err)?)?
            };
            emit(
                &json!({ "valid": v.ok(), "checks": v.checks, "failures": v.failures }),
                &g.out,
            )?;
            Ok(if v.ok() { 0 } else { 2 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help and version are not errors; usage errors are input errors
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
