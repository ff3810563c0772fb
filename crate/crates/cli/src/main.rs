//! Command-line frontend: classification, exact counting, periods,
//! gluing functions, generating-function evaluation, and a validation
//! report. JSON goes to stdout, diagnostics to stderr.
//!
//! Exit codes: 0 success, 1 usage/parse errors, 2 validation tolerance
//! failures, 3 numeric failures (quadrature, branch selection, poles).

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use qwalk_core::{
    branch_points, build_kernel, classify, count, eval_singular_boundary, eval_singular_q,
    gfeval::Pipeline, parse_step_set, registry, registry_lookup, singular_contraction_holds,
    CgfEvaluator, Error as CoreError, GFValue, Side, StepSet, SumMode,
};
use serde_json::{json, Map, Value};

#[derive(Parser)]
#[command(
    name = "qwalk",
    about = "Quarter-plane walk models: classify, count, and evaluate generating functions",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Step set: compass tokens ("N,E,SW"), an 8-bit mask, or a
    /// registry name such as "kreweras"
    #[arg(long)]
    steps: String,
    /// Weight z in (0, 1/k); defaults to 1/(2k)
    #[arg(long)]
    z: Option<f64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output format for scalar reports
    #[arg(long, default_value = "json", value_parser = ["json", "text"])]
    output: String,
    /// Significant digits in text output
    #[arg(long, default_value_t = 12)]
    precision: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a model: covariance, δ, singularity, group order, and
    /// the predicted nature of its gluing functions
    Classify {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exact path counts q(i,j;n) as CSV
    Count {
        #[command(flatten)]
        model: ModelArgs,
        /// Maximum walk length
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Restrict to one endpoint (requires --j)
        #[arg(long)]
        i: Option<usize>,
        #[arg(long)]
        j: Option<usize>,
    },
    /// Periods, invariants, and branch points of the uniformization
    Periods {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Conformal gluing function values at a point
    Cgf {
        #[command(flatten)]
        model: ModelArgs,
        /// Evaluation point t, as "re[,im]"
        #[arg(long)]
        t: String,
        /// Which construction to evaluate
        #[arg(long, default_value = "general", value_parser = ["general", "closed"])]
        form: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Evaluate the counting generating function
    Eval {
        #[command(flatten)]
        model: ModelArgs,
        /// x as "re[,im]"
        #[arg(long, default_value = "0")]
        x: String,
        /// y as "re[,im]"
        #[arg(long, default_value = "0")]
        y: String,
        /// q: Q(x,y;z); qx0: Q(x,0;z); q0y: Q(0,y;z); q00: Q(0,0;z)
        #[arg(long, default_value = "q", value_parser = ["q", "qx0", "q0y", "q00"])]
        mode: String,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Full residual and oracle-comparison report; exit 0 on pass
    Validate {
        #[command(flatten)]
        model: ModelArgs,
        /// Tolerance for the oracle comparisons
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        /// Oracle truncation length
        #[arg(long, default_value_t = 60)]
        n_max: usize,
    },
    /// List the bundled named models
    Registry,
}

fn parse_complex(s: &str) -> Result<Complex64, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || CliError::Usage(format!("bad complex literal {s:?}; expected re[,im]"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(re.trim().parse().map_err(|_| bad())?, 0.0)),
        [re, im] => Ok(Complex64::new(
            re.trim().parse().map_err(|_| bad())?,
            im.trim().parse().map_err(|_| bad())?,
        )),
        _ => Err(bad()),
    }
}

fn parse_model(text: &str) -> Result<StepSet, CliError> {
    if let Some(s) = registry_lookup(text) {
        return Ok(s);
    }
    parse_step_set(text).map_err(CliError::from_parse)
}

enum CliError {
    Usage(String),
    Tolerance(String),
    Numeric(String),
}

impl CliError {
    fn from_parse(e: CoreError) -> CliError {
        CliError::Usage(e.to_string())
    }

    fn from_core(e: CoreError) -> CliError {
        match e {
            CoreError::Parse(_) | CoreError::Domain(_) | CoreError::Degenerate(_) => {
                CliError::Usage(e.to_string())
            }
            _ => CliError::Numeric(e.to_string()),
        }
    }

    fn report(self) -> ExitCode {
        let (code, msg) = match self {
            CliError::Usage(m) => (1, m),
            CliError::Tolerance(m) => (2, m),
            CliError::Numeric(m) => (3, m),
        };
        eprintln!("error: {msg}");
        ExitCode::from(code)
    }
}

fn z_or_default(model: &ModelArgs, set: StepSet) -> Result<f64, CliError> {
    let z = model
        .z
        .unwrap_or_else(|| 0.5 / set.k() as f64);
    if !(z > 0.0 && z < 1.0 / set.k() as f64) {
        return Err(CliError::Usage(format!(
            "z = {z} outside (0, 1/k) = (0, {})",
            1.0 / set.k() as f64
        )));
    }
    Ok(z)
}

fn emit(out: &OutputArgs, v: &Value) {
    if out.output == "json" {
        println!("{}", serde_json::to_string_pretty(v).unwrap());
    } else {
        fn walk(prefix: &str, v: &Value, digits: usize) {
            match v {
                Value::Object(m) => {
                    for (k, vv) in m {
                        let p = if prefix.is_empty() {
                            k.clone()
                        } else {
                            format!("{prefix}.{k}")
                        };
                        walk(&p, vv, digits);
                    }
                }
                Value::Number(n) if n.is_f64() => {
                    println!("{prefix} = {:.*}", digits, n.as_f64().unwrap());
                }
                other => println!("{prefix} = {other}"),
            }
        }
        walk("", v, out.precision);
    }
}

fn complex_json(v: Complex64) -> Value {
    json!({ "re": v.re, "im": v.im })
}

fn gf_json(v: &GFValue) -> Value {
    json!({
        "value": complex_json(v.value),
        "error_estimate": v.error_estimate,
        "method": v.method.to_string(),
    })
}

fn run() -> Result<ExitCode, CliError> {
    let cli = Cli::parse();
    match cli.command {
        Command::Registry => {
            for (name, set) in registry() {
                println!("{name:20} {set}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Classify { model, out } => {
            let set = parse_model(&model.steps)?;
            let c = classify(set);
            let v = json!({
                "steps": set.to_string(),
                "k": set.k(),
                "covariance": c.covariance,
                "delta": if c.delta { 1 } else { 0 },
                "singular": c.singular,
                "degenerate": c.degenerate,
                "group_order": c.group_order.map(|g| g.to_string()),
                "cgf_nature": c.cgf_nature.map(|n| n.to_string()),
            });
            emit(&out, &v);
            Ok(ExitCode::SUCCESS)
        }
        Command::Count { model, n, i, j } => {
            let set = parse_model(&model.steps)?;
            let table = count(set, n);
            let cell = match (i, j) {
                (Some(i), Some(j)) => Some((i, j)),
                (None, None) => None,
                _ => {
                    return Err(CliError::Usage(
                        "--i and --j must be given together".into(),
                    ))
                }
            };
            let mut stdout = std::io::stdout().lock();
            table
                .write_csv(&mut stdout, cell)
                .map_err(|e| CliError::Numeric(e.to_string()))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Periods { model, out } => {
            let set = parse_model(&model.steps)?;
            let z = z_or_default(&model, set)?;
            let kernel = build_kernel(set, z).map_err(CliError::from_core)?;
            let bp = branch_points(&kernel).map_err(CliError::from_core)?;
            let u = qwalk_core::build_uniformization(&kernel, &bp).map_err(CliError::from_core)?;
            let inf_or = |x: f64| {
                if x.is_finite() {
                    json!(x)
                } else {
                    json!("inf")
                }
            };
            let v = json!({
                "steps": set.to_string(),
                "z": z,
                "omega1_im": u.omega1_im,
                "omega2": u.omega2,
                "omega3": u.omega3,
                "ratio": u.omega3_ratio(),
                "g2": u.g2,
                "g3": u.g3,
                "branch_points": {
                    "x": bp.x.iter().map(|t| inf_or(*t)).collect::<Vec<_>>(),
                    "y": bp.y.iter().map(|t| inf_or(*t)).collect::<Vec<_>>(),
                },
            });
            emit(&out, &v);
            Ok(ExitCode::SUCCESS)
        }
        Command::Cgf {
            model,
            t,
            form,
            out,
        } => {
            let set = parse_model(&model.steps)?;
            let z = z_or_default(&model, set)?;
            let tv = parse_complex(&t)?;
            let kernel = build_kernel(set, z).map_err(CliError::from_core)?;
            let bp = branch_points(&kernel).map_err(CliError::from_core)?;
            let u = std::sync::Arc::new(
                qwalk_core::build_uniformization(&kernel, &bp).map_err(CliError::from_core)?,
            );
            let e = if form == "closed" {
                CgfEvaluator::build_closed_form(u).map_err(CliError::from_core)?
            } else {
                CgfEvaluator::build_general(u).map_err(CliError::from_core)?
            };
            let w = e.eval(tv).map_err(CliError::from_core)?;
            let wt = e.w_tilde_value(tv).map_err(CliError::from_core)?;
            let glue = e.gluing_residual(64).map_err(CliError::from_core)?;
            let v = json!({
                "steps": set.to_string(),
                "z": z,
                "t": complex_json(tv),
                "form": if e.is_general() { "general" } else { "closed" },
                "w": complex_json(w.w),
                "dw": complex_json(w.dw),
                "w_tilde": complex_json(wt),
                "gluing_residual": glue,
            });
            emit(&out, &v);
            Ok(ExitCode::SUCCESS)
        }
        Command::Eval {
            model,
            x,
            y,
            mode,
            out,
        } => {
            let set = parse_model(&model.steps)?;
            let z = z_or_default(&model, set)?;
            let xv = parse_complex(&x)?;
            let yv = parse_complex(&y)?;
            let g = if set.is_singular() {
                let kernel = build_kernel(set, z).map_err(CliError::from_core)?;
                match mode.as_str() {
                    "q00" => eval_singular_boundary(&kernel, Side::X, Complex64::new(0.0, 0.0)),
                    "qx0" => eval_singular_boundary(&kernel, Side::X, xv),
                    "q0y" => eval_singular_boundary(&kernel, Side::Y, yv),
                    _ => eval_singular_q(&kernel, xv, yv),
                }
                .map_err(CliError::from_core)?
            } else {
                let p = Pipeline::build(set, z).map_err(CliError::from_core)?;
                match mode.as_str() {
                    "q00" => p.eval_q00(),
                    "qx0" => p.eval_axis(Side::X, xv),
                    "q0y" => p.eval_axis(Side::Y, yv),
                    _ => p.eval_q(xv, yv),
                }
                .map_err(CliError::from_core)?
            };
            let mut v = gf_json(&g).as_object().unwrap().clone();
            v.insert("steps".into(), json!(set.to_string()));
            v.insert("z".into(), json!(z));
            v.insert("mode".into(), json!(mode));
            emit(&out, &Value::Object(v));
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate { model, tol, n_max } => {
            let set = parse_model(&model.steps)?;
            let z = z_or_default(&model, set)?;
            validate(set, z, tol, n_max)
        }
    }
}

fn validate(set: StepSet, z: f64, tol: f64, n_max: usize) -> Result<ExitCode, CliError> {
    let mut checks: Vec<(String, f64, f64, bool)> = Vec::new();
    let mut push = |name: &str, value: f64, bound: f64| {
        let ok = value <= bound;
        eprintln!(
            "  {} {name}: {value:.3e} (bound {bound:.1e})",
            if ok { "ok  " } else { "FAIL" }
        );
        checks.push((name.into(), value, bound, ok));
    };

    eprintln!("validate {set} at z = {z}");
    let table = count(set, n_max);
    let kz = set.k() as f64 * z;
    let   _ = kz.powi(n_max as i32 + 1) / (1.0 - kz);

    if set.is_singular() {
        let kernel = build_kernel(set, z).map_err(CliError::from_core)?;
        for x in [0.3, 0.5] {
            let v = eval_singular_boundary(&kernel, Side::X, Complex64::new(x, 0.0))
                .map_err(CliError::from_core)?;
            let (orc, t) = table
                .partial_sum_with_bound(
                    Complex64::new(x, 0.0),
                    Complex64::new(1.0, 0.0),
                    z,
                    SumMode::XAxis,
                )
                .map_err(CliError::from_core)?;
            push(
                &format!("series vs oracle Q({x},0)"),
                (v.value - orc).norm(),
                tol + t,
            );
            let ok = singular_contraction_holds(&kernel, Complex64::new(x, 0.0))
                .map_err(CliError::from_core)?;
            push(
                &format!("iterate contraction from x = {x}"),
                if ok { 0.0 } else { 1.0 },
                0.5,
            );
        }
    } else {
        let p = Pipeline::build(set, z).map_err(CliError::from_core)?;
        let r = p.residual_report(32).map_err(CliError::from_core)?;
        push("boundary condition residual", r.boundary_condition, 1e-7);
        push("gluing residual", r.gluing, 1e-8);
        push("kernel vanishing residual", r.kernel_vanishing, 1e-7);
        push("functional equation residual", r.functional_equation, 1e-7);

        let q00 = p.eval_q00().map_err(CliError::from_core)?;
        let (orc, t) = table
            .partial_sum_with_bound(
                Complex64::new(0.0, 0.0),
                Complex64::new(0.0, 0.0),
                z,
                SumMode::Origin,
            )
            .map_err(CliError::from_core)?;
        push("oracle |Q(0,0) - partial sum|", (q00.value - orc).norm(), tol + t);

        for (x, y) in [(0.3, 0.4), (0.5, 0.5)] {
            let xv = Complex64::new(x, 0.0);
            let yv = Complex64::new(y, 0.0);
            let inside = p.region_contains(Side::X, xv).unwrap_or(false)
                && p.region_contains(Side::Y, yv).unwrap_or(false);
            if !inside {
                eprintln!("  skip oracle point ({x},{y}): outside GX x GY");
                continue;
            }
            let q = p.eval_q(xv, yv).map_err(CliError::from_core)?;
            let (orc, t) = table
                .partial_sum_with_bound(xv, yv, z, SumMode::Full)
                .map_err(CliError::from_core)?;
            push(
                &format!("oracle |Q({x},{y}) - partial sum|"),
                (q.value - orc).norm(),
                tol + t,
            );
        }
    }

    let failed: Vec<&(String, f64, f64, bool)> = checks.iter().filter(|c| !c.3).collect();
    let mut summary = Map::new();
    summary.insert("steps".into(), json!(set.to_string()));
    summary.insert("z".into(), json!(z));
    summary.insert("tol".into(), json!(tol));
    summary.insert("passed".into(), json!(checks.len() - failed.len()));
    summary.insert("failed".into(), json!(failed.len()));
    summary.insert(
        "checks".into(),
        Value::Array(
            checks
                .iter()
                .map(|(n, v, b, ok)| json!({"name": n, "value": v, "bound": b, "pass": ok}))
                .collect(),
        ),
    );
    println!("{}", serde_json::to_string_pretty(&Value::Object(summary)).unwrap());
    if failed.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        Err(CliError::Tolerance(format!(
            "{} validation check(s) out of tolerance",
            failed.len()
        )))
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => e.report(),
    }
}
