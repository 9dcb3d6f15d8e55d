use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finsler_core::geodesics::{energy_drift, integrate_geodesic};
use finsler_core::geometry::{causal_character, connection, metric_tensor, spray, TOL_NULL};
use finsler_core::runner::{self, emit, load_experiment, parse_experiment, ExperimentSpec, Report, SUITES};
use finsler_core::zoo::{conformal_deform, make_berwald_moor, make_minkowski, make_pseudo_euclidean, Lagrangian};
use finsler_core::{expr, Error};
use serde_json::json;

const EXIT_FAIL: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "finsler", version, about = "Numerical pseudo-Finsler geometry")]
struct Cli {
    /// Experiment file; also the source of named metrics, maps and fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for report.json, summary.txt and CSV files.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Overrides the experiment seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for probes (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Print the bundled suites and exit.
    #[arg(long)]
    list_suites: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Geometry at a single point: L, g, signature, spray, connection.
    Eval {
        #[command(flatten)]
        metric: MetricArg,
        /// Base point, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        /// Direction, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
    },
    /// Integrate one geodesic and write it as CSV.
    Geodesic {
        #[command(flatten)]
        metric: MetricArg,
        /// Base point, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        x: Vec<f64>,
        /// Direction, comma separated
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        y: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
    },
    /// Check that a map is conformal with the given factor.
    CheckConformal {
        #[command(flatten)]
        metric: MetricArg,
        /// Target metric (defaults to the source metric).
        #[arg(long)]
        target: Option<String>,
        /// Map components separated by ';', or a map name from --config.
        #[arg(long)]
        map: String,
        /// Expected log conformal factor.
        #[arg(long)]
        factor: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Classify a vector field as Killing, conformal or neither.
    CheckField {
        #[command(flatten)]
        metric: MetricArg,
        /// Field components separated by ';', or a field name from --config.
        #[arg(long)]
        field: String,
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// Required verdict: killing, conformal or not-conformal.
        #[arg(long)]
        expect: Option<String>,
    },
    /// Run bundled suites (all of them when none are named).
    Verify { suites: Vec<String> },
    /// Run an experiment file.
    Run { path: Option<PathBuf> },
}

#[derive(Args)]
struct MetricArg {
    /// `minkowski:N`, `berwald-moor:N`, `pseudo-euclidean:s1,s2,..`, or a
    /// metric name from --config.
    #[arg(long)]
    metric: String,
    /// Conformal deformation exponent applied on top of --metric.
    #[arg(long)]
    sigma: Option<String>,
}

enum Failure {
    Config(String),
    Probe(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. }
            | Error::Parse(_)
            | Error::UnknownIdentifier { .. }
            | Error::IndexOutOfRange { .. }
            | Error::YDependentSigma(_)
            | Error::DimensionMismatch { .. } => Failure::Config(e.to_string()),
            other => Failure::Probe(other.to_string()),
        }
    }
}

type CliResult = std::result::Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = if cli.list_suites {
        for (name, _) in SUITES {
            println!("{name}");
        }
        Ok(())
    } else {
        match &cli.command {
            Some(cmd) => dispatch(&cli, cmd),
            None if cli.config.is_some() => run_file(&cli, cli.config.as_deref().unwrap()),
            None => Err(Failure::Config("no command given; see --help".into())),
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Probe(m)) => {
            if !m.is_empty() {
                eprintln!("error: {m}");
            }
            ExitCode::from(EXIT_FAIL)
        }
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn dispatch(cli: &Cli, cmd: &Command) -> CliResult {
    match cmd {
        Command::Eval { metric, x, y } => {
            let l = resolve_metric(cli, metric)?;
            eval(&l, x, y)
        }
        Command::Geodesic { metric, x, y, t_end, h } => {
            let l = resolve_metric(cli, metric)?;
            geodesic(cli, &l, x, y, *t_end, *h)
        }
        Command::CheckConformal {
            metric,
            target,
            map,
            factor,
            samples,
            tol,
        } => {
            let mut probe = toml::Table::new();
            probe.insert("kind".into(), "conformal-map".into());
            probe.insert("sigma".into(), factor.clone().into());
            probe.insert("samples".into(), (*samples as i64).into());
            probe.insert("tol".into(), (*tol).into());
            let mut doc = adhoc_document(cli, metric, "check-conformal")?;
            let n = doc_dimension(&doc);
            if let Some(t) = target {
                let key = add_metric(&mut doc, t, None, "target")?;
                probe.insert("target".into(), key.into());
            }
            probe.insert("map".into(), add_components(&mut doc, "maps", map, n)?.into());
            probe.insert("metric".into(), "cli".into());
            run_adhoc(cli, doc, probe)
        }
        Command::CheckField {
            metric,
            field,
            points,
            expect,
        } => {
            let mut probe = toml::Table::new();
            probe.insert("kind".into(), "conformal-field".into());
            probe.insert("points".into(), (*points as i64).into());
            if let Some(e) = expect {
                probe.insert("expect".into(), e.clone().into());
            }
            let mut doc = adhoc_document(cli, metric, "check-field")?;
            let n = doc_dimension(&doc);
            probe.insert("field".into(), add_components(&mut doc, "fields", field, n)?.into());
            probe.insert("metric".into(), "cli".into());
            run_adhoc(cli, doc, probe)
        }
        Command::Verify { suites } => {
            let names: Vec<&str> = if suites.is_empty() {
                SUITES.iter().map(|(n, _)| *n).collect()
            } else {
                suites.iter().map(String::as_str).collect()
            };
            let mut failed = false;
            for name in names {
                let text = runner::suite(name)
                    .ok_or_else(|| Failure::Config(format!("unknown suite `{name}`; try --list-suites")))?;
                let spec = parse_experiment(text)?;
                let out = cli.out.as_ref().map(|d| d.join(name));
                failed |= !execute(cli, spec, out.as_deref())?;
            }
            if failed {
                Err(Failure::Probe(String::new()))
            } else {
                Ok(())
            }
        }
        Command::Run { path } => {
            let path = path
                .as_deref()
                .or(cli.config.as_deref())
                .ok_or_else(|| Failure::Config("run needs a config path".into()))?;
            run_file(cli, path)
        }
    }
}

fn run_file(cli: &Cli, path: &Path) -> CliResult {
    let spec = load_experiment(path)?;
    let out = cli
        .out
        .clone()
        .or_else(|| spec.output.dir.as_ref().map(PathBuf::from));
    if execute(cli, spec, out.as_deref())? {
        Ok(())
    } else {
        Err(Failure::Probe(String::new()))
    }
}

/// Runs and reports; `Ok(false)` means some probe did not pass.
fn execute(cli: &Cli, mut spec: ExperimentSpec, out: Option<&Path>) -> std::result::Result<bool, Failure> {
    if let Some(s) = cli.seed {
        spec = spec.with_seed(s);
    }
    let report: Report = runner::run(&spec, cli.jobs)?;
    print!("{}", report.summary());
    if let Some(dir) = out {
        emit(&report, dir)?;
        println!("wrote {}", dir.display());
    }
    Ok(report.passed)
}

fn config_table(cli: &Cli) -> std::result::Result<Option<toml::Table>, Failure> {
    let Some(path) = &cli.config else { return Ok(None) };
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    // Validate the whole file first so errors point at it.
    parse_experiment(&text)?;
    let table: toml::Table = toml::from_str(&text).map_err(|e| Failure::Config(e.to_string()))?;
    Ok(Some(table))
}

fn inline_metric(spec: &str) -> Option<std::result::Result<toml::Table, Failure>> {
    let (family, params) = spec.split_once(':')?;
    let mut t = toml::Table::new();
    let bad = |m: String| Failure::Config(format!("--metric `{spec}`: {m}"));
    let int = |p: &str| p.trim().parse::<i64>().map_err(|e| bad(e.to_string()));
    let r = match family {
        "minkowski" | "berwald-moor" => int(params).map(|n| {
            t.insert("family".into(), family.into());
            t.insert("dimension".into(), n.into());
            t
        }),
        "pseudo-euclidean" => params
            .split(',')
            .map(|s| s.trim().parse::<f64>().map(toml::Value::from).map_err(|e| bad(e.to_string())))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(|signs| {
                t.insert("family".into(), family.into());
                t.insert("signs".into(), toml::Value::Array(signs));
                t
            }),
        other => Err(bad(format!("unknown family `{other}`"))),
    };
    Some(r)
}

fn inline_dimension(t: &toml::Table) -> Option<i64> {
    t.get("dimension")
        .and_then(toml::Value::as_integer)
        .or_else(|| t.get("signs").and_then(toml::Value::as_array).map(|a| a.len() as i64))
}

/// Adds metric `spec` to the document under `key`, wrapping it in a
/// conformal deformation when `sigma` is given. Returns the key used.
fn add_metric(doc: &mut toml::Table, spec: &str, sigma: Option<&str>, key: &str) -> std::result::Result<String, Failure> {
    let metrics = doc
        .entry("metrics")
        .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        .as_table_mut()
        .ok_or_else(|| Failure::Config("`metrics` is not a table".into()))?;
    let base = match inline_metric(spec) {
        Some(t) => {
            let t = t?;
            let inner = format!("{key}_base");
            metrics.insert(inner.clone(), toml::Value::Table(t));
            inner
        }
        None if metrics.contains_key(spec) => spec.to_string(),
        None => return Err(Failure::Config(format!("unknown metric `{spec}`"))),
    };
    let mut t = toml::Table::new();
    t.insert("family".into(), "conformal".into());
    t.insert("base".into(), base.into());
    t.insert("sigma".into(), sigma.unwrap_or("0").into());
    metrics.insert(key.to_string(), toml::Value::Table(t));
    Ok(key.to_string())
}

fn adhoc_document(cli: &Cli, metric: &MetricArg, name: &str) -> std::result::Result<toml::Table, Failure> {
    let mut doc = config_table(cli)?.unwrap_or_default();
    doc.remove("probes");
    doc.remove("output");
    doc.insert("name".into(), name.into());
    if !doc.contains_key("seed") {
        doc.insert("seed".into(), 0.into());
    }
    let dim = match inline_metric(&metric.metric) {
        Some(t) => inline_dimension(&t?),
        None => None,
    };
    match dim {
        Some(n) => {
            doc.insert("dimension".into(), n.into());
        }
        None if doc.contains_key("dimension") => {}
        None => return Err(Failure::Config(format!("unknown metric `{}`", metric.metric))),
    }
    add_metric(&mut doc, &metric.metric, metric.sigma.as_deref(), "cli")?;
    Ok(doc)
}

fn doc_dimension(doc: &toml::Table) -> usize {
    doc.get("dimension").and_then(toml::Value::as_integer).unwrap_or(0) as usize
}

/// A name already defined in the document, or inline components
/// separated by `;` stored under a fresh name.
fn add_components(doc: &mut toml::Table, section: &str, src: &str, n: usize) -> std::result::Result<String, Failure> {
    let table = doc
        .entry(section)
        .or_insert_with(|| toml::Value::Table(toml::Table::new()))
        .as_table_mut()
        .ok_or_else(|| Failure::Config(format!("`{section}` is not a table")))?;
    if !src.contains(';') && table.contains_key(src) {
        return Ok(src.to_string());
    }
    let comps: Vec<toml::Value> = src.split(';').map(|s| toml::Value::from(s.trim())).collect();
    if comps.len() != n {
        return Err(Failure::Config(format!(
            "`{src}` has {} components, metric has dimension {n}",
            comps.len()
        )));
    }
    let mut t = toml::Table::new();
    t.insert("components".into(), toml::Value::Array(comps));
    table.insert("cli".into(), toml::Value::Table(t));
    Ok("cli".into())
}

fn run_adhoc(cli: &Cli, mut doc: toml::Table, mut probe: toml::Table) -> CliResult {
    probe.insert("name".into(), doc["name"].clone());
    doc.insert("probes".into(), toml::Value::Array(vec![toml::Value::Table(probe)]));
    let text = toml::to_string(&doc).map_err(|e| Failure::Config(e.to_string()))?;
    let spec = parse_experiment(&text)?;
    if execute(cli, spec, cli.out.as_deref())? {
        Ok(())
    } else {
        Err(Failure::Probe(String::new()))
    }
}

fn resolve_metric(cli: &Cli, m: &MetricArg) -> std::result::Result<Lagrangian, Failure> {
    let base = match inline_metric(&m.metric) {
        Some(t) => {
            let t = t?;
            let n = inline_dimension(&t).unwrap_or(0) as usize;
            match t["family"].as_str() {
                Some("minkowski") => make_minkowski(n)?,
                Some("berwald-moor") => make_berwald_moor(n)?,
                _ => {
                    let signs: Vec<f64> = t["signs"]
                        .as_array()
                        .into_iter()
                        .flatten()
                        .filter_map(toml::Value::as_float)
                        .collect();
                    make_pseudo_euclidean(&signs)?
                }
            }
        }
        None => {
            let path = cli
                .config
                .as_ref()
                .ok_or_else(|| Failure::Config(format!("unknown metric `{}` (no --config given)", m.metric)))?;
            let spec = load_experiment(path)?;
            spec.metrics
                .get(&m.metric)
                .cloned()
                .ok_or_else(|| Failure::Config(format!("metric `{}` not in {}", m.metric, path.display())))?
        }
    };
    match &m.sigma {
        Some(s) => {
            let e = expr::parse(s, base.dim())?;
            Ok(conformal_deform(&base, &e)?)
        }
        None => Ok(base),
    }
}

fn matrix_json(m: &finsler_core::nalgebra::DMatrix<f64>) -> serde_json::Value {
    json!((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>())
}

fn eval(l: &Lagrangian, x: &[f64], y: &[f64]) -> CliResult {
    let g = metric_tensor(l, x, y)?;
    let c = causal_character(l, x, y, TOL_NULL)?;
    let s = spray(l, x, y, false)?;
    let conn = connection(l, x, y)?;
    let out = json!({
        "metric": l.label(),
        "x": x,
        "y": y,
        "L": l.value(x, y)?,
        "causal": c.tag,
        "g": matrix_json(&g.g),
        "g_inv": matrix_json(&g.g_inv),
        "eigenvalues": g.eigenvalues,
        "signature": [g.signature.0, g.signature.1],
        "det": g.det,
        "spray_2G": s.g2,
        "connection": matrix_json(&conn),
    });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
    Ok(())
}

fn geodesic(cli: &Cli, l: &Lagrangian, x: &[f64], y: &[f64], t_end: f64, h: f64) -> CliResult {
    let tr = integrate_geodesic(l, x, y, t_end, h)?;
    let csv = tr.to_csv(l);
    match &cli.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::Probe(e.to_string()))?;
            let path = dir.join("geodesic.csv");
            std::fs::write(&path, csv).map_err(|e| Failure::Probe(e.to_string()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    eprintln!(
        "samples={} energy_drift={:e}{}",
        tr.len(),
        energy_drift(&tr, l),
        match tr.truncation() {
            Some(t) => format!(" truncated: {}", serde_json::to_string(t).expect("json")),
            None => String::new(),
        }
    );
    Ok(())
}
