use clap::{Parser, Subcommand};
use polydet::connection::{CutDirection, FlatConnection, PunctureSet};
use polydet::continuum::{continuum_zeta_prime_zero, rectangle_heat_trace, KacCoefficients};
use polydet::fit::{fit_expansion, geometric_scales, sigma_ratio_experiment, sweep, corner_log_sum};
use polydet::geometry::{build_graph, LatticeRegion};
use polydet::spectral::SymmetricOperator;
use polydet::store::{resume_sweep, ResultStore};
use polydet::validate;
use polydet::walker::mc_dirichlet_kernel;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "polydet", version, about = "Twisted lattice Laplacian determinants on polygonal domains")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build the lattice graph of a domain and print its summary
    Graph {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        scale: Option<i64>,
    },
    /// Exact log-determinant of the twisted Dirichlet Laplacian
    Logdet {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        scale: Option<i64>,
        /// punctures as doubled coordinates, e.g. "9,9;13,13"
        #[arg(long, default_value = "")]
        sigma: String,
        #[arg(long, default_value = "+x")]
        cut: String,
    },
    /// Dense heat trace at the given times
    Heat {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        scale: Option<i64>,
        #[arg(long, default_value = "")]
        sigma: String,
        #[arg(long, default_value = "+x")]
        cut: String,
        /// comma-separated times
        #[arg(long)]
        t: String,
    },
    /// Monte Carlo estimate of the diagonal kernel at one site
    McKernel {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long)]
        scale: Option<i64>,
        #[arg(long, default_value = "")]
        sigma: String,
        #[arg(long, default_value = "+x")]
        cut: String,
        /// lattice site "x,y"
        #[arg(long)]
        x: String,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Continuum rectangle reference: Kac coefficients and zeta data
    Continuum {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        /// optional comma-separated times for heat traces
        #[arg(long, default_value = "")]
        t: String,
    },
    /// Log-determinant sweep over scales
    Sweep {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, default_value = "")]
        sigma: String,
        #[arg(long, default_value = "+x")]
        cut: String,
        #[arg(long, default_value_t = 8)]
        lmin: i64,
        #[arg(long, default_value_t = 128)]
        lmax: i64,
        /// CSV result store for resuming
        #[arg(long)]
        store: Option<PathBuf>,
        /// recompute even if stored
        #[arg(long)]
        force: bool,
    },
    /// Sweep plus regression of the expansion coefficients
    Fit {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, default_value = "")]
        sigma: String,
        #[arg(long, default_value = "+x")]
        cut: String,
        #[arg(long, default_value_t = 8)]
        lmin: i64,
        #[arg(long, default_value_t = 128)]
        lmax: i64,
        /// pin the bulk coefficient to the analytic reference
        #[arg(long)]
        pin_alpha0: bool,
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Compare log-determinants under two puncture sets across scales
    Ratio {
        #[arg(long)]
        domain: PathBuf,
        #[arg(long, default_value = "")]
        sigma1: String,
        #[arg(long, default_value = "")]
        sigma2: String,
        #[arg(long, default_value = "+x")]
        cut: String,
        #[arg(long, default_value_t = 8)]
        lmin: i64,
        #[arg(long, default_value_t = 128)]
        lmax: i64,
    },
    /// Run the validation suites
    Validate {
        #[arg(long, default_value = "quick")]
        suite: String,
    },
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Computation(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {}", m),
            CliError::Computation(m) => write!(f, "computation error: {}", m),
        }
    }
}

fn config<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Config(e.to_string())
}

fn compute<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Computation(e.to_string())
}

fn load_region(path: &PathBuf, scale: Option<i64>) -> Result<LatticeRegion, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {}", path.display(), e)))?;
    let region = LatticeRegion::parse(&text).map_err(config)?;
    match scale {
        Some(s) => region.with_scale(s).map_err(config),
        None => Ok(region),
    }
}

fn parse_sigma(s: &str) -> Result<Vec<[i64; 2]>, CliError> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(';')
        .map(|pair| {
            let parts: Vec<&str> = pair.split(',').collect();
            if parts.len() != 2 {
                return Err(CliError::Config(format!("bad puncture '{}'", pair)));
            }
            let x = parts[0].trim().parse::<i64>().map_err(config)?;
            let y = parts[1].trim().parse::<i64>().map_err(config)?;
            Ok([x, y])
        })
        .collect()
}

fn parse_cut(s: &str) -> Result<CutDirection, CliError> {
    match s {
        "+x" => Ok(CutDirection::PosX),
        "-x" => Ok(CutDirection::NegX),
        "+y" => Ok(CutDirection::PosY),
        "-y" => Ok(CutDirection::NegY),
        other => Err(CliError::Config(format!(
            "cut must be one of +x,-x,+y,-y; got '{}'",
            other
        ))),
    }
}

fn parse_times(s: &str) -> Result<Vec<f64>, CliError> {
    if s.trim().is_empty() {
        return Ok(vec![]);
    }
    s.split(',')
        .map(|x| x.trim().parse::<f64>().map_err(config))
        .collect()
}

fn assemble(
    region: &LatticeRegion,
    sigma: &[[i64; 2]],
    cut: CutDirection,
) -> Result<SymmetricOperator, CliError> {
    let graph = build_graph(region).map_err(compute)?;
    let punctures = PunctureSet::new(region, sigma).map_err(config)?;
    let conn = FlatConnection::build(&graph, punctures, cut);
    SymmetricOperator::assemble(&graph, &conn).map_err(compute)
}

fn emit(value: serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(&value).expect("json"));
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.cmd {
        Cmd::Graph { domain, scale } => {
            let region = load_region(&domain, scale)?;
            let graph = build_graph(&region).map_err(compute)?;
            let summary = region.summarize();
            emit(json!({
                "format": 1,
                "version": polydet::VERSION,
                "scale": region.scale(),
                "n": graph.n(),
                "edges": graph.edges.len(),
                "ext_boundary": graph.ext_boundary.len(),
                "area": summary.area(),
                "perimeter": summary.perimeter,
                "corner_angles": summary.corners.iter().map(|c| c.theta).collect::<Vec<_>>(),
            }));
            Ok(true)
        }
        Cmd::Logdet {
            domain,
            scale,
            sigma,
            cut,
        } => {
            let region = load_region(&domain, scale)?;
            let sigma = parse_sigma(&sigma)?;
            let cut = parse_cut(&cut)?;
            let op = assemble(&region, &sigma, cut)?;
            let logdet = op.logdet().map_err(compute)?;
            emit(json!({
                "format": 1,
                "version": polydet::VERSION,
                "scale": region.scale(),
                "n": op.n(),
                "sigma": sigma,
                "logdet": logdet,
            }));
            Ok(true)
        }
        Cmd::Heat {
            domain,
            scale,
            sigma,
            cut,
            t,
        } => {
            let region = load_region(&domain, scale)?;
            let sigma = parse_sigma(&sigma)?;
            let cut = parse_cut(&cut)?;
            let times = parse_times(&t)?;
            if times.is_empty() {
                return Err(CliError::Config("need at least one time".into()));
            }
            let op = assemble(&region, &sigma, cut)?;
            let mut points = Vec::new();
            for t in times {
                let p = op.heat_trace(t).map_err(compute)?;
                points.push(json!({"t": p.t, "trace": p.value, "stderr": p.stderr}));
            }
            emit(json!({
                "format": 1,
                "version": polydet::VERSION,
                "n": op.n(),
                "points": points,
            }));
            Ok(true)
        }
        Cmd::McKernel {
            domain,
            scale,
            sigma,
            cut,
            x,
            t,
            samples,
            seed,
        } => {
            let region = load_region(&domain, scale)?;
            let sigma_pts = parse_sigma(&sigma)?;
            let cut = parse_cut(&cut)?;
            let site = parse_sigma(&x)?;
            let [site] = site[..] else {
                return Err(CliError::Config("x must be a single 'x,y' site".into()));
            };
            let graph = build_graph(&region).map_err(compute)?;
            let punctures = PunctureSet::new(&region, &sigma_pts).map_err(config)?;
            let conn = FlatConnection::build(&graph, punctures, cut);
            let est = mc_dirichlet_kernel(&graph, &conn, site, t, samples, seed)
                .map_err(compute)?;
            emit(json!({
                "format": 1,
                "version": polydet::VERSION,
                "x": site,
                "t": t,
                "estimate": est,
            }));
            Ok(true)
        }
        Cmd::Continuum { a, b, t } => {
            if a <= 0.0 || b <= 0.0 {
                return Err(CliError::Config("rectangle sides must be positive".into()));
            }
            let times = parse_times(&t)?;
            let kac = KacCoefficients::rectangle(a, b);
            let zeta = continuum_zeta_prime_zero(a, b).map_err(compute)?;
            let traces: Vec<serde_json::Value> = times
                .iter()
                .map(|&t| json!({"t": t, "trace": rectangle_heat_trace(a, b, t)}))
                .collect();
            emit(json!({
                "format": 1,
                "version": polydet::VERSION,
                "a": a, "b": b,
                "a0": kac.a0, "a1": kac.a1, "a2": kac.a2,
                "zeta_prime_zero": zeta,
                "heat_traces": traces,
            }));
            Ok(true)
        }
        Cmd::Sweep {
            domain,
            sigma,
            cut,
            lmin,
            lmax,
            store,
            force,
        } => {
            let region = load_region(&domain, None)?;
            let sigma = parse_sigma(&sigma)?;
            let cut = parse_cut(&cut)?;
            if lmin < 2 || lmax < lmin {
                return Err(CliError::Config("need 2 <= lmin <= lmax".into()));
            }
            let ls = geometric_scales(lmin, lmax);
            let records = match store {
                Some(path) => {
                    let mut store = ResultStore::open(&path).map_err(compute)?;
                    if store.quarantined() > 0 {
                        eprintln!(
                            "warning: {} corrupt store rows quarantined",
                            store.quarantined()
                        );
                    }
                    resume_sweep(&mut store, &region, &sigma, &ls, cut, force)
                        .map_err(compute)?
                }
                None => sweep(&region, &sigma, &ls, cut).map_err(compute)?,
            };
            emit(json!({
                "format": 1,
                "version": polydet::VERSION,
                "records": records,
            }));
            Ok(true)
        }
        Cmd::Fit {
            domain,
            sigma,
            cut,
            lmin,
            lmax,
            pin_alpha0,
            store,
            force,
        } => {
            let region = load_region(&domain, None)?;
            let sigma = parse_sigma(&sigma)?;
            let cut = parse_cut(&cut)?;
            if lmin < 2 || lmax < lmin {
                return Err(CliError::Config("need 2 <= lmin <= lmax".into()));
            }
            let ls = geometric_scales(lmin, lmax);
            let records = match store {
                Some(path) => {
                    let mut store = ResultStore::open(&path).map_err(compute)?;
                    resume_sweep(&mut store, &region, &sigma, &ls, cut, force)
                        .map_err(compute)?
                }
                None => sweep(&region, &sigma, &ls, cut).map_err(compute)?,
            };
            let pin = if pin_alpha0 {
                Some(polydet::fit::alpha0_reference().map_err(compute)?)
            } else {
                None
            };
            let report = fit_expansion(&records, pin, Some(corner_log_sum(&region)))
                .map_err(compute)?;
            emit(json!({
                "format": 1,
                "version": polydet::VERSION,
                "report": report,
            }));
            Ok(true)
        }
        Cmd::Ratio {
            domain,
            sigma1,
            sigma2,
            cut,
            lmin,
            lmax,
        } => {
            let region = load_region(&domain, None)?;
            let s1 = parse_sigma(&sigma1)?;
            let s2 = parse_sigma(&sigma2)?;
            let cut = parse_cut(&cut)?;
            if lmin < 2 || lmax < lmin {
                return Err(CliError::Config("need 2 <= lmin <= lmax".into()));
            }
            let ls = geometric_scales(lmin, lmax);
            let table = sigma_ratio_experiment(&region, &s1, &s2, &ls, cut).map_err(compute)?;
            emit(json!({
                "format": 1,
                "version": polydet::VERSION,
                "table": table,
            }));
            Ok(true)
        }
        Cmd::Validate { suite } => {
            let results = match suite.as_str() {
                "quick" => validate::quick_suite(),
                "full" => validate::full_suite(),
                other => {
                    return Err(CliError::Config(format!(
                        "suite must be quick or full; got '{}'",
                        other
                    )))
                }
            };
            let mut all_pass = true;
            for r in &results {
                println!("{}", r.line());
                all_pass &= r.passed;
            }
            Ok(all_pass)
        }
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("POLYDET_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e @ CliError::Config(_)) => {
            eprintln!("{}", e);
            ExitCode::from(2)
        }
        Err(e @ CliError::Computation(_)) => {
            eprintln!("{}", e);
            ExitCode::from(1)
        }
    }
}
