use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use quantised_eclipse::bounds::{ball_width_bound, prop1_m, prop2_m, width_is_small, BoundConfig, QuantisedBound};
use quantised_eclipse::certificates::TrialCertificate;
use quantised_eclipse::embedding::checks;
use quantised_eclipse::geometry::{difference_set, mean_width_estimate, separation};
use quantised_eclipse::harness::{
    extract_curve, extract_phase_curve, parse_config, run_grid, scene_from_sigma, write_csv, write_heatmap, Estimator,
    GridSpec, PhaseCurve,
};
use quantised_eclipse::{Error, Execution, Result, SolverConfig};

#[derive(Parser, Debug)]
#[command(
    name = "qeclipse",
    version,
    about = "Ball separability under quantised random embeddings"
)]
struct Cli {
    /// Flat `key = value` file supplying defaults for any flag.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Margins and certificates of a single sensing draw.
    Margins(Common),
    /// Grid experiment, phase curves and heat maps.
    Phase(Common),
    /// Monte Carlo mean width against the closed-form scale.
    Widths(Common),
    /// Sample-complexity formulas.
    Bound(Common),
    /// Statistical checks of the embedding.
    Distcheck(Common),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Profile {
    Desk,
    Full,
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long, value_enum, default_value = "desk")]
    profile: Profile,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    m_list: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    sigma_list: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    delta_list: Option<Vec<f64>>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    direction_seed: Option<u64>,
    #[arg(long)]
    level: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long)]
    eps_abs: Option<f64>,
    #[arg(long)]
    eps_rel: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    c1: f64,
    #[arg(long, default_value_t = 1.0)]
    c2: f64,
    /// Mean width fed to the bounds.
    #[arg(long, default_value_t = 1.0)]
    w: f64,
    #[arg(long, default_value_t = 0.1)]
    eta: f64,
    /// Width samples per σ.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
}

impl Common {
    fn grid(&self) -> GridSpec {
        let base = match self.profile {
            Profile::Desk => GridSpec::desk(),
            Profile::Full => GridSpec::full(),
        };
        GridSpec {
            n: self.n.unwrap_or(base.n),
            m_values: self.m_list.clone().unwrap_or(base.m_values),
            sigma_values: self.sigma_list.clone().unwrap_or(base.sigma_values),
            delta_values: self.delta_list.clone().unwrap_or(base.delta_values),
            r: self.r.unwrap_or(base.r),
            trials: self.trials.unwrap_or(base.trials),
            master_seed: self.seed.unwrap_or(base.master_seed),
            level: self.level.unwrap_or(base.level),
            direction_seed: self.direction_seed.unwrap_or(base.direction_seed),
        }
    }

    fn solver(&self) -> Result<SolverConfig> {
        let d = SolverConfig::default();
        SolverConfig::new(
            self.eps_abs.unwrap_or(d.eps_abs),
            self.eps_rel.unwrap_or(d.eps_rel),
            self.max_iter.unwrap_or(d.max_iter),
        )
    }

    fn bound_config(&self) -> BoundConfig {
        BoundConfig {
            c1: self.c1,
            c2: self.c2,
            ..BoundConfig::default()
        }
    }
}

/// Config-file entries go after the user's arguments, skipping any key the
/// user already passed.
fn expand_args(raw: Vec<String>) -> Result<Vec<String>> {
    let mut config = None;
    let mut i = 1;
    while i < raw.len() {
        if raw[i] == "--config" {
            config = raw.get(i + 1).cloned();
            break;
        }
        if let Some(path) = raw[i].strip_prefix("--config=") {
            config = Some(path.to_string());
            break;
        }
        i += 1;
    }
    let Some(path) = config else {
        return Ok(raw);
    };
    let text = fs::read_to_string(&path)?;
    let given = |key: &str| raw.iter().any(|a| a == key || a.starts_with(&format!("{key}=")));
    let mut args = raw.clone();
    for pair in parse_config(&text)?.chunks(2) {
        if pair[0] != "--config" && !given(&pair[0]) {
            args.extend_from_slice(pair);
        }
    }
    Ok(args)
}

fn main() -> ExitCode {
    let args = match expand_args(std::env::args().collect()) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::InvalidParameter("threads must be at least 1".into()));
        }
        #[cfg(feature = "parallel")]
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    match cli.command {
        Command::Margins(c) => margins(&c),
        Command::Phase(c) => phase(&c),
        Command::Widths(c) => widths(&c),
        Command::Bound(c) => bound(&c),
        Command::Distcheck(c) => distcheck(&c),
    }
}

fn first<T: Copy>(values: &[T]) -> T {
    values[0]
}

fn margins(c: &Common) -> Result<()> {
    let spec = c.grid();
    spec.validate()?;
    let cfg = c.solver()?;
    let (m, sigma, delta) = (
        first(&spec.m_values),
        first(&spec.sigma_values),
        first(&spec.delta_values),
    );
    let (c1, c2) = scene_from_sigma(spec.n, sigma, spec.r, spec.direction_seed)?;
    let d = difference_set(&c1, &c2)?;
    let cert = TrialCertificate::run(&d, m, 0, spec.master_seed, &cfg)?;
    let o = cert.outcome(delta);
    let t = &cert.margins;
    let tau_j: Vec<String> = t.cones.tau_j.iter().map(|v| v.to_string()).collect();

    let header = "n,m,sigma,delta,r,seed,tau,tau_lower,tau_j,linear_eclipse,pbar_indicator,pbarbar_factor,converged";
    let line = format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        spec.n,
        m,
        sigma,
        delta,
        spec.r,
        spec.master_seed,
        t.margin.tau,
        t.margin.lower_bound,
        tau_j.join(";"),
        t.linear_eclipse,
        o.pbar_indicator,
        o.pbarbar_factor,
        cert.converged()
    );
    if let Some(path) = &c.out {
        fs::write(path, format!("{header}\n{line}\n"))?;
        return Ok(());
    }
    let mut out = io::stdout().lock();
    writeln!(
        out,
        "n = {}, m = {m}, sigma = {sigma}, delta = {delta}, r = {}",
        spec.n, spec.r
    )?;
    writeln!(out, "separation      {}", separation(&d))?;
    writeln!(
        out,
        "tau             {}  (certified >= {})",
        t.margin.tau, t.margin.lower_bound
    )?;
    writeln!(out, "tau_j           {}", tau_j.join(" "))?;
    writeln!(out, "linear eclipse  {}", t.linear_eclipse)?;
    writeln!(out, "1[tau > delta]  {}", o.pbar_indicator)?;
    writeln!(out, "prod min(1, tau_j/delta)  {}", o.pbarbar_factor)?;
    writeln!(
        out,
        "converged       {} ({} Newton steps)",
        cert.converged(),
        t.margin.iterations + t.cones.iterations
    )?;
    Ok(())
}

fn svg_path(base: &Path, delta: f64, many: bool) -> PathBuf {
    if !many {
        return base.to_path_buf();
    }
    let stem = base
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match base.extension() {
        Some(ext) => format!("{stem}_delta{delta}.{}", ext.to_string_lossy()),
        None => format!("{stem}_delta{delta}"),
    };
    base.with_file_name(name)
}

fn format_curve(label: &str, curve: &PhaseCurve) -> String {
    let points: Vec<String> = curve
        .points
        .iter()
        .map(|(s, m)| match m {
            Some(m) => format!("{s}:{m}"),
            None => format!("{s}:-"),
        })
        .collect();
    format!("{label:<14} {}", points.join(" "))
}

fn phase(c: &Common) -> Result<()> {
    let spec = c.grid();
    let cfg = c.solver()?;
    let run = run_grid(&spec, &cfg, Execution::Parallel)?;

    let mut report = Vec::new();
    report.push(format!("phase curves at level {} (sigma:m_star)", spec.level));
    let linear = extract_curve(&run.rows, spec.delta_values[0], spec.level, Estimator::Linear)?;
    report.push(format_curve("linear", &linear));
    let many = spec.delta_values.len() > 1;
    for &delta in &spec.delta_values {
        let curve = extract_phase_curve(&run.rows, delta, spec.level)?;
        report.push(format_curve(&format!("delta={delta}"), &curve));
        if let Some(base) = &c.svg {
            write_heatmap(&run.rows, delta, &curve, &svg_path(base, delta, many))?;
        }
    }

    match &c.out {
        Some(path) => {
            write_csv(&run.rows, fs::File::create(path)?)?;
            let mut out = io::stdout().lock();
            for line in &report {
                writeln!(out, "{line}")?;
            }
        }
        None => {
            write_csv(&run.rows, io::stdout().lock())?;
            for line in &report {
                eprintln!("{line}");
            }
        }
    }
    Ok(())
}

fn widths(c: &Common) -> Result<()> {
    let spec = c.grid();
    spec.validate()?;
    let mut text = String::from("n,sigma,r,samples,estimate,stderr,bound,ratio\n");
    for &sigma in &spec.sigma_values {
        let (c1, c2) = scene_from_sigma(spec.n, sigma, spec.r, spec.direction_seed)?;
        let d = difference_set(&c1, &c2)?;
        let (est, se) = mean_width_estimate(&d, c.samples, spec.master_seed)?;
        let bound = ball_width_bound(&d);
        text.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            spec.n,
            sigma,
            spec.r,
            c.samples,
            est,
            se,
            bound,
            est / bound
        ));
    }
    match &c.out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn bound(c: &Common) -> Result<()> {
    let spec = c.grid();
    let cfg = c.bound_config();
    let m1 = prop1_m(c.w, c.eta, &cfg)?;
    let q = QuantisedBound {
        w: c.w,
        n: spec.n,
        delta: first(&spec.delta_values),
        sigma: first(&spec.sigma_values),
        r: spec.r,
        eta: c.eta,
    };
    let m2 = prop2_m(&q, &cfg)?;
    let mut out = io::stdout().lock();
    writeln!(out, "constants       C1 = {}, C2 = {}", cfg.c1, cfg.c2)?;
    writeln!(
        out,
        "inputs          w = {}, eta = {}, n = {}, delta = {}, sigma = {}, r = {}",
        q.w, q.eta, q.n, q.delta, q.sigma, q.r
    )?;
    writeln!(out, "linear m        {m1}")?;
    writeln!(out, "quantised m     {m2}")?;
    if width_is_small(c.w) {
        writeln!(out, "warning         w < 0.1: the w^-2 log(1/eta) term dominates")?;
    }
    Ok(())
}

fn distcheck(c: &Common) -> Result<()> {
    let seed = c.seed.unwrap_or(GridSpec::desk().master_seed);
    let mut out = io::stdout().lock();
    for report in checks::battery(seed)? {
        writeln!(out, "{report}")?;
    }
    Ok(())
}
