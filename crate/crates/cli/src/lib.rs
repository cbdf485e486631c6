//! Command-line front end: validation, measure data, ψ evaluation, curve
//! export, Hölder sampling and pseudo-norm evaluation for spec files.
//!
//! Vertices are 1-based on the command line and in all output. Exit codes:
//! 0 success, 1 validation failure, 2 usage error, 3 I/O error.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use lgifs::addressing::{check_chain_condition, DEFAULT_CHAIN_TOL};
use lgifs::export::{export_curve, Format, SvgOptions};
use lgifs::gifs::is_primitive;
use lgifs::parametrize::holder_constant_bound;
use lgifs::{
    corpus, BoundaryData, HolderConfig, OrderedGifs, ParamError, Parametrization, PerronData,
    Point, PseudoNorm, SpecError,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "lgifs",
    version,
    about = "Optimal parametrizations of linear single-matrix GIFS"
)]
struct Cli {
    /// Emit one JSON object per check instead of human-readable text.
    #[arg(long, global = true)]
    report: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check expansion, primitivity and the chain condition.
    Validate { spec: String },
    /// Print λ, α, the measure vector and the edge weights.
    Measure { spec: String },
    /// Evaluate ψ_i(t) for t in [0, 1].
    Param {
        spec: String,
        #[arg(long)]
        vertex: usize,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
    },
    /// Export the generation-k curve through E_i.
    Curve {
        spec: String,
        #[arg(long)]
        vertex: usize,
        #[arg(long)]
        depth: usize,
        #[arg(long, value_enum)]
        format: CurveFormat,
        #[arg(long)]
        out: PathBuf,
        /// Replace corners by quadratic fillets (SVG only).
        #[arg(long)]
        rounded_corners: bool,
        #[arg(long, default_value_t = 0.005)]
        stroke_width: f64,
        #[arg(long, default_value_t = 0.05)]
        viewbox_padding: f64,
    },
    /// Sample parameter pairs and estimate Hölder behaviour of ψ_i.
    Holder {
        spec: String,
        #[arg(long)]
        vertex: usize,
        #[arg(long, default_value_t = 10_000)]
        pairs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate the pseudo-norm of a vector given as "a,b,...".
    Norm {
        spec: String,
        #[arg(long, allow_hyphen_values = true)]
        x: String,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CurveFormat {
    Svg,
    Csv,
}

/// An error carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }
}

impl From<SpecError> for Failure {
    fn from(e: SpecError) -> Self {
        let code = match e {
            SpecError::Io { .. } => EXIT_IO,
            _ => EXIT_VALIDATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<ParamError> for Failure {
    fn from(e: ParamError) -> Self {
        let code = match e {
            ParamError::OutOfRange(_)
            | ParamError::BadTolerance(_)
            | ParamError::VertexOutOfRange { .. } => EXIT_USAGE,
            _ => EXIT_VALIDATION,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// Output sink that renders either text lines or JSON-lines records.
struct Sink<'a> {
    out: &'a mut dyn Write,
    report: bool,
}

impl Sink<'_> {
    fn check(
        &mut self,
        check: &str,
        status: &str,
        value: Value,
        tolerance: Option<f64>,
        text: &str,
    ) {
        let line = if self.report {
            json!({ "check": check, "status": status, "value": value, "tolerance": tolerance })
                .to_string()
        } else {
            text.to_string()
        };
        let _ = writeln!(self.out, "{line}");
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            return code;
        }
    };
    let mut sink = Sink {
        out,
        report: cli.report,
    };
    match dispatch(cli.command, &mut sink) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

/// Resolves a spec argument: an existing file, else a built-in name.
fn load(spec: &str) -> Result<OrderedGifs, Failure> {
    let path = Path::new(spec);
    if !path.exists() {
        if let Some(result) = corpus::try_load(spec) {
            return Ok(result?);
        }
    }
    Ok(lgifs::parse_spec(path)?)
}

fn vertex_index(g: &OrderedGifs, vertex: usize) -> Result<usize, Failure> {
    if vertex == 0 || vertex > g.vertex_count() {
        return Err(Failure::usage(format!(
            "vertex {vertex} outside 1..={}",
            g.vertex_count()
        )));
    }
    Ok(vertex - 1)
}

fn dispatch(command: Command, sink: &mut Sink) -> Result<i32, Failure> {
    match command {
        Command::Validate { spec } => validate(&load(&spec)?, sink),
        Command::Measure { spec } => measure(&load(&spec)?, sink),
        Command::Param {
            spec,
            vertex,
            t,
            tol,
        } => {
            let g = load(&spec)?;
            let i = vertex_index(&g, vertex)?;
            let p = Parametrization::new(g)?;
            let x = p.psi(i, t, tol)?;
            sink.check(
                "psi",
                "pass",
                json!(x.as_slice()),
                Some(tol),
                &format!("psi_{vertex}({t}) = {}", coords(&x)),
            );
            Ok(EXIT_OK)
        }
        Command::Curve {
            spec,
            vertex,
            depth,
            format,
            out,
            rounded_corners,
            stroke_width,
            viewbox_padding,
        } => {
            let g = load(&spec)?;
            let i = vertex_index(&g, vertex)?;
            if matches!(format, CurveFormat::Svg) && g.dimension() != 2 {
                return Err(Failure::usage("SVG export needs a planar system"));
            }
            let p = Parametrization::new(g)?;
            let curve = p.curve(i, depth)?;
            let opts = SvgOptions {
                rounded_corners,
                stroke_width,
                viewbox_padding,
            };
            let format = match format {
                CurveFormat::Svg => Format::Svg,
                CurveFormat::Csv => Format::Csv,
            };
            export_curve(&curve, format, &out, &opts).map_err(|e| Failure {
                code: EXIT_IO,
                message: format!("cannot write {}: {e}", out.display()),
            })?;
            sink.check(
                "curve_points",
                "pass",
                json!(curve.points.len()),
                None,
                &format!("wrote {} points to {}", curve.points.len(), out.display()),
            );
            Ok(EXIT_OK)
        }
        Command::Holder {
            spec,
            vertex,
            pairs,
            seed,
        } => holder(&load(&spec)?, vertex, pairs, seed, sink),
        Command::Norm { spec, x } => {
            let g = load(&spec)?;
            let x = parse_vector(&x, g.dimension())?;
            let norm = PseudoNorm::new(&g).map_err(|e| Failure::validation(e.to_string()))?;
            let value = norm
                .eval(&x)
                .map_err(|e| Failure::validation(e.to_string()))?;
            sink.check(
                "pseudo_norm",
                "pass",
                json!(value),
                None,
                &format!("|x|_omega = {value}"),
            );
            Ok(EXIT_OK)
        }
    }
}

fn validate(g: &OrderedGifs, sink: &mut Sink) -> Result<i32, Failure> {
    // construction already rejected non-expanding matrices
    sink.check(
        "expanding",
        "pass",
        json!(g.det_q()),
        None,
        &format!("expanding matrix: pass (q = {})", g.det_q()),
    );
    let m = g.associated_matrix();
    let primitive = is_primitive(&m);
    sink.check(
        "primitive",
        status(primitive),
        json!(m),
        None,
        &format!("primitive associated matrix: {}", status(primitive)),
    );
    if !primitive {
        return Ok(EXIT_VALIDATION);
    }
    let pd = PerronData::compute(g).map_err(|e| Failure::validation(e.to_string()))?;
    sink.check(
        "perron_root",
        "pass",
        json!(pd.lambda),
        None,
        &format!("Perron root: {}", pd.lambda),
    );
    let bd = BoundaryData::compute(g).map_err(|e| Failure::validation(e.to_string()))?;
    for i in 0..g.vertex_count() {
        sink.check(
            &format!("head_{}", i + 1),
            "info",
            json!(bd.heads[i].as_slice()),
            None,
            &format!(
                "head_{} = {}  tail_{} = {}",
                i + 1,
                coords(&bd.heads[i]),
                i + 1,
                coords(&bd.tails[i])
            ),
        );
        if sink.report {
            sink.check(
                &format!("tail_{}", i + 1),
                "info",
                json!(bd.tails[i].as_slice()),
                None,
                "",
            );
        }
    }
    let chain = check_chain_condition(g, &bd, DEFAULT_CHAIN_TOL);
    sink.check(
        "chain_condition",
        status(chain.passed()),
        json!(chain.max_gap),
        Some(chain.tolerance),
        &format!(
            "chain condition: {} (max gap {:.3e}, tolerance {:.0e}, {} pairs)",
            status(chain.passed()),
            chain.max_gap,
            chain.tolerance,
            chain.pairs_checked
        ),
    );
    for v in &chain.violations {
        sink.check(
            "chain_violation",
            "fail",
            json!({ "vertex": v.vertex + 1, "ranks": [v.lower_rank, v.upper_rank], "gap": v.gap }),
            Some(chain.tolerance),
            &format!(
                "  vertex {}: ranks {} and {} miss by {:.6}",
                v.vertex + 1,
                v.lower_rank,
                v.upper_rank,
                v.gap
            ),
        );
    }
    sink.check(
        "open_set_condition",
        "info",
        json!(g.osc_asserted()),
        None,
        &format!(
            "open set condition: {}",
            if g.osc_asserted() {
                "asserted by spec"
            } else {
                "not asserted"
            }
        ),
    );
    Ok(if chain.passed() {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    })
}

fn measure(g: &OrderedGifs, sink: &mut Sink) -> Result<i32, Failure> {
    let pd = PerronData::compute(g).map_err(|e| Failure::validation(e.to_string()))?;
    sink.check(
        "lambda",
        "info",
        json!(pd.lambda),
        None,
        &format!("lambda = {}", pd.lambda),
    );
    sink.check(
        "alpha",
        "info",
        json!(pd.alpha),
        None,
        &format!("alpha = {}", pd.alpha),
    );
    sink.check(
        "measure",
        "info",
        json!(pd.measure),
        None,
        &format!("v = {}", list(&pd.measure)),
    );
    for i in 0..g.vertex_count() {
        let w: Vec<f64> = g.outgoing(i).iter().map(|&e| pd.weights[e]).collect();
        sink.check(
            &format!("weights_{}", i + 1),
            "info",
            json!(w),
            None,
            &format!("p(vertex {}) = {}", i + 1, list(&w)),
        );
    }
    Ok(EXIT_OK)
}

fn holder(
    g: &OrderedGifs,
    vertex: usize,
    pairs: usize,
    seed: u64,
    sink: &mut Sink,
) -> Result<i32, Failure> {
    let i = vertex_index(g, vertex)?;
    let p = Parametrization::new(g.clone())?;
    let norm = PseudoNorm::new(g).map_err(|e| Failure::validation(e.to_string()))?;
    let cfg = HolderConfig {
        pairs,
        seed,
        ..HolderConfig::default()
    };
    let est = p.holder_empirical(&norm, i, &cfg)?;
    let beta = norm.quasi_triangle_beta(100_000, seed);
    let diameter = p.omega_diameter_bound(&norm, 6, beta)?;
    let bound = holder_constant_bound(g, p.perron(), beta, diameter, p.perron().min_measure());
    let violations = est
        .omega_ratios
        .iter()
        .filter(|&&r| r.is_nan() || r > bound)
        .count();
    sink.check(
        "euclid_slope",
        "info",
        json!(est.euclid_slope),
        None,
        &format!(
            "log-log slope (|dt| <= 1e-3, {} pairs): {:.6}",
            est.euclid_pairs, est.euclid_slope
        ),
    );
    sink.check(
        "omega_ratio_max",
        status(violations == 0),
        json!(est.omega_max_ratio),
        Some(bound),
        &format!(
            "max |dpsi|_omega / |dt|^(1/alpha): {:.6} (bound {:.6}, {violations} violations)",
            est.omega_max_ratio, bound
        ),
    );
    sink.check(
        "envelope_constant",
        "info",
        json!(est.envelope.constant),
        None,
        &format!(
            "|dpsi| / |dt|^{:.6} envelope: {:.6}",
            est.envelope.exponent, est.envelope.constant
        ),
    );
    Ok(if violations == 0 {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    })
}

fn parse_vector(text: &str, dim: usize) -> Result<Point, Failure> {
    let xs = text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::usage(format!("bad vector `{text}`: {e}")))?;
    if xs.len() != dim {
        return Err(Failure::usage(format!(
            "vector needs {dim} components, got {}",
            xs.len()
        )));
    }
    Ok(Point::from_vec(xs))
}

fn status(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "fail"
    }
}

fn coords(x: &Point) -> String {
    list(x.as_slice())
}

fn list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|x| x.to_string()).collect();
    format!("({})", parts.join(", "))
}
