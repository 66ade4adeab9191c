use std::path::{Path, PathBuf};

use serde_json::json;
use tickwork::clock_model::{
    load_spec, validate_elementary_with, validate_general, ClockSpec, LoadedSpec, ToleranceConfig,
};
use tickwork::discrete_maps::{bitstring_distribution, build_step, tv_distance, StepOrder};
use tickwork::evolution::{tick_number_moments, ClockState, Evolver};
use tickwork::numerics::matrix::hermitian_eigen;
use tickwork::statistics::{
    allan_variance_formula, allan_variance_trajectory, binned_waiting_time, fcs_rates, waiting_time, RateMethod,
};
use tickwork::structure_lab::{
    ki_decompose, load_channel, swp_demo, verify_decomposition, zeno_experiment, Schedule, SwpConfig, ZenoConfig,
};
use tickwork::trajectories::{relative_counts, sample_pairs, sample_trajectories, sample_trajectory};

use crate::args::{AllanMode, Cli, Command, Format, Method, Order, PairArgs};
use crate::error::CliError;
use crate::output::{Cell, Report, Table};

type CliResult<T> = Result<T, CliError>;

macro_rules! to_json {
    ($value:expr) => {
        serde_json::to_value($value).expect("report types serialize")
    };
}

/// Everything a subcommand needs besides its own numeric parameters.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub subcommand: &'static str,
    pub output: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub threads: usize,
    pub tolerance: Option<f64>,
    pub plot_data: bool,
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Self {
        let (subcommand, format, tolerance, plot_data) = match &cli.command {
            Command::Validate { tolerance, out, .. } => ("validate", *out, Some(*tolerance), false),
            Command::Evolve { out, plot, .. } => ("evolve", *out, None, plot.plot_data),
            Command::Fcs { out, .. } => ("fcs", *out, None, false),
            Command::WaitingTime { out, plot, .. } => ("waiting-time", *out, None, plot.plot_data),
            Command::Allan { out, plot, .. } => ("allan", *out, None, plot.plot_data),
            Command::Sample { out, .. } => ("sample", *out, None, false),
            Command::Pair { out, .. } => ("pair", *out, None, false),
            Command::RelativeCounts { out, plot, .. } => ("relative-counts", *out, None, plot.plot_data),
            Command::Discrete { out, plot, .. } => ("discrete", *out, None, plot.plot_data),
            Command::Ki { out, .. } => ("ki", *out, None, false),
            Command::Zeno { out, plot, .. } => ("zeno", *out, None, plot.plot_data),
            Command::Swp { out, plot, .. } => ("swp", *out, None, plot.plot_data),
        };
        RunConfig {
            subcommand,
            output: cli.output.clone(),
            format: if plot_data { Format::Csv } else { format },
            seed: cli.seed,
            threads: cli.threads,
            tolerance,
            plot_data,
        }
    }

    /// Formats each subcommand can emit.
    pub fn emitters(&self) -> &'static [Format] {
        match self.subcommand {
            "validate" | "ki" => &[Format::Json],
            "sample" => &[Format::Jsonl, Format::Csv],
            "pair" => &[Format::Jsonl],
            _ => &[Format::Csv, Format::Json],
        }
    }

    pub fn check(&self) -> CliResult<()> {
        if !self.emitters().contains(&self.format) {
            let allowed: Vec<&str> = self.emitters().iter().map(|f| f.name()).collect();
            return Err(CliError::usage(format!(
                "{} writes {}, not {}",
                self.subcommand,
                allowed.join(" or "),
                self.format.name()
            )));
        }
        Ok(())
    }
}

fn elementary(path: &Path) -> CliResult<ClockSpec> {
    match load_spec(path)? {
        LoadedSpec::Elementary(s) => Ok(s),
        LoadedSpec::General(_) => Err(CliError::new(
            "precondition",
            format!("{} has blocks of differing dimension; this subcommand needs an elementary spec", path.display()),
        )),
    }
}

/// `a:b:step`, inclusive of `b` up to rounding.
pub fn parse_grid(text: &str) -> CliResult<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::usage(format!("grid {text:?} must be start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<Result<_, _>>().map_err(|_| bad())?;
    let (a, b, step) = (nums[0], nums[1], nums[2]);
    if !(a.is_finite() && b.is_finite() && step.is_finite()) || step <= 0.0 || b < a {
        return Err(CliError::usage(format!("grid {text:?} needs finite start <= stop and step > 0")));
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| a + k as f64 * step).collect())
}

pub fn parse_schedule(text: &str) -> CliResult<Schedule> {
    if text == "fixed" {
        return Ok(Schedule::Fixed);
    }
    let width = text
        .strip_prefix("jitter:")
        .and_then(|w| w.parse::<f64>().ok())
        .ok_or_else(|| CliError::usage(format!("schedule {text:?} must be fixed or jitter:WIDTH")))?;
    Ok(Schedule::Jittered { width })
}

pub fn run(cli: &Cli, cfg: &RunConfig) -> CliResult<Report> {
    match &cli.command {
        Command::Validate { spec, .. } => validate(&spec.spec, cfg.tolerance.unwrap_or_default()),
        Command::Evolve { spec, times, n_max, .. } => evolve(cfg, &elementary(&spec.spec)?, times, *n_max),
        Command::Fcs { spec, method, .. } => fcs(&elementary(&spec.spec)?, *method),
        Command::WaitingTime { spec, grid, .. } => waiting(cfg, &elementary(&spec.spec)?, grid.as_deref()),
        Command::Allan { spec, tau, mode, bins, .. } => allan(cfg, &elementary(&spec.spec)?, tau, *mode, *bins),
        Command::Sample { spec, horizon, n_traj, .. } => sample(cfg, &elementary(&spec.spec)?, *horizon, *n_traj),
        Command::Pair { pair, .. } => {
            let seqs = sample_pairs(
                &elementary(&pair.spec_a)?,
                &elementary(&pair.spec_b)?,
                pair.horizon,
                pair.n_seq,
                cfg.seed,
                cfg.threads,
            )?;
            Ok(Report::lines(seqs.iter().map(|s| to_json!(&s.entries)).collect()))
        }
        Command::RelativeCounts { pair, n, .. } => relative(cfg, pair, *n),
        Command::Discrete { spec, delta, steps, order, .. } => {
            discrete(cfg, &elementary(&spec.spec)?, *delta, *steps, *order)
        }
        Command::Ki { channel, .. } => ki(channel),
        Command::Zeno { omega, time, m, schedule, .. } => zeno(cfg, *omega, *time, m, schedule),
        Command::Swp { dim, omega, alphas, .. } => swp(cfg, *dim, *omega, alphas),
    }
}

fn validate(path: &Path, tolerance: f64) -> CliResult<Report> {
    if !(tolerance >= 0.0) || !tolerance.is_finite() {
        return Err(CliError::usage(format!("tolerance {tolerance} must be finite and >= 0")));
    }
    match load_spec(path)? {
        LoadedSpec::Elementary(spec) => {
            let flags = validate_elementary_with(&spec, &ToleranceConfig::uniform(tolerance))?;
            Ok(Report::json(json!({
                "kind": "elementary",
                "dim": spec.dim,
                "flags": to_json!(&flags),
                "elementary": flags.is_elementary(),
            })))
        }
        LoadedSpec::General(spec) => {
            let v = validate_general(&spec)?;
            Ok(Report::json(json!({
                "kind": "general",
                "dim": spec.dim(),
                "blocks": spec.blocks,
                "flags": to_json!(&v.flags),
                "elementary": v.flags.is_elementary(),
                "edges": v.edges,
                "diagnostics": v.diagnostics,
            })))
        }
    }
}

fn evolve(cfg: &RunConfig, spec: &ClockSpec, times: &str, n_max: usize) -> CliResult<Report> {
    let grid = parse_grid(times)?;
    let start = ClockState::from_spec(spec, n_max);
    let moments = tick_number_moments(spec, &start, &grid)?;
    let states = Evolver::new(spec, n_max)?.trajectory(&start, &grid)?;
    if cfg.plot_data {
        let mut t = Table::long();
        for s in &states {
            for (n, p) in s.probabilities().iter().enumerate() {
                t.point(format!("p_{n}"), s.time, *p);
            }
        }
        return Ok(Report::table(t));
    }
    let mut header = vec!["t".to_string()];
    header.extend((0..=n_max).map(|n| format!("p_{n}")));
    header.extend(["mean".to_string(), "var".to_string()]);
    let mut table = Table::new(header);
    let mut rows = Vec::new();
    for (s, m) in states.iter().zip(&moments) {
        let p = s.probabilities();
        let mut row: Vec<Cell> = vec![s.time.into()];
        row.extend(p.iter().map(|&x| Cell::Float(x)));
        row.extend([Cell::Float(m.mean), Cell::Float(m.variance)]);
        table.push(row);
        rows.push(json!({ "t": s.time, "p": p, "mean": m.mean, "var": m.variance }));
    }
    Ok(Report::json(json!({ "n_max": n_max, "points": rows })).with_table(table))
}

fn fcs(spec: &ClockSpec, method: Method) -> CliResult<Report> {
    let (m, name) = match method {
        Method::EigDerivative => (RateMethod::EigDerivative, "eig-derivative"),
        Method::SlopeFit => (RateMethod::SlopeFit, "slope-fit"),
    };
    let r = fcs_rates(spec, m)?;
    let mut table = Table::new(["nu", "sigma", "r1"]);
    table.push(vec![r.nu.into(), r.sigma_rate.into(), r.r1.into()]);
    Ok(Report::json(json!({ "nu": r.nu, "sigma": r.sigma_rate, "r1": r.r1, "method": name })).with_table(table))
}

fn waiting(cfg: &RunConfig, spec: &ClockSpec, grid: Option<&str>) -> CliResult<Report> {
    let grid = grid.map(parse_grid).transpose()?.unwrap_or_default();
    let w = waiting_time(spec, &spec.initial, &grid)?;
    let mut table = if cfg.plot_data { Table::long() } else { Table::new(["t", "density"]) };
    for (t, p) in w.grid.iter().zip(&w.density) {
        if cfg.plot_data {
            table.point("density", *t, *p);
        } else {
            table.push(vec![(*t).into(), (*p).into()]);
        }
    }
    Ok(Report::json(to_json!(&w)).with_table(table))
}

fn allan(cfg: &RunConfig, spec: &ClockSpec, taus: &[f64], mode: AllanMode, bins: usize) -> CliResult<Report> {
    let estimates = match mode {
        AllanMode::Formula => {
            let rates = fcs_rates(spec, RateMethod::EigDerivative)?;
            taus.iter().map(|&tau| allan_variance_formula(&rates, tau)).collect::<Result<Vec<_>, _>>()?
        }
        AllanMode::Trajectory => {
            let longest = taus.iter().copied().fold(0.0, f64::max);
            let record = sample_trajectory(spec, (bins + 2) as f64 * longest, cfg.seed)?;
            taus.iter().map(|&tau| allan_variance_trajectory(&record, tau, bins)).collect::<Result<Vec<_>, _>>()?
        }
    };
    let name = match mode {
        AllanMode::Formula => "formula",
        AllanMode::Trajectory => "trajectory",
    };
    let mut table = if cfg.plot_data { Table::long() } else { Table::new(["tau", "value", "stderr"]) };
    for e in &estimates {
        if cfg.plot_data {
            table.point(name, e.tau, e.value);
        } else {
            table.push(vec![e.tau.into(), e.value.into(), e.stderr.into()]);
        }
    }
    Ok(Report::json(json!({ "mode": name, "estimates": to_json!(&estimates) })).with_table(table))
}

fn sample(cfg: &RunConfig, spec: &ClockSpec, horizon: f64, n: usize) -> CliResult<Report> {
    let records = sample_trajectories(spec, horizon, n, cfg.seed, cfg.threads)?;
    let mut table = Table::new(["trajectory", "tick", "time"]);
    for r in &records {
        for (k, t) in r.tick_times.iter().enumerate() {
            table.push(vec![r.clock_id.into(), (k + 1).into(), (*t).into()]);
        }
    }
    let lines = records.iter().map(|r| json!({ "clock_id": r.clock_id, "tick_times": r.tick_times })).collect();
    Ok(Report::lines(lines).with_table(table))
}

fn relative(cfg: &RunConfig, pair: &PairArgs, n: usize) -> CliResult<Report> {
    let seqs = sample_pairs(
        &elementary(&pair.spec_a)?,
        &elementary(&pair.spec_b)?,
        pair.horizon,
        pair.n_seq,
        cfg.seed,
        cfg.threads,
    )?;
    let dist = relative_counts(&seqs, n)?;
    let mut table = if cfg.plot_data { Table::long() } else { Table::new(["m", "probability", "lower", "upper"]) };
    for (m, p) in dist.pmf.iter().enumerate() {
        if cfg.plot_data {
            table.point("probability", m, *p);
        } else {
            table.push(vec![m.into(), (*p).into(), dist.lower[m].into(), dist.upper[m].into()]);
        }
    }
    Ok(Report::json(to_json!(&dist)).with_table(table))
}

fn discrete(cfg: &RunConfig, spec: &ClockSpec, delta: f64, steps: usize, order: Order) -> CliResult<Report> {
    let order = match order {
        Order::First => StepOrder::First,
        Order::Exact => StepOrder::Exact,
    };
    let step = build_step(spec, delta, order)?;
    let pmf = bitstring_distribution(&step, &spec.initial, steps)?;
    let binned = binned_waiting_time(spec, &spec.initial, delta, steps)?;
    let tv = tv_distance(&pmf, &binned);
    let mut table = if cfg.plot_data { Table::long() } else { Table::new(["step", "time", "pmf", "binned"]) };
    for (j, (p, b)) in pmf.iter().zip(&binned).enumerate() {
        let time = (j + 1) as f64 * delta;
        if cfg.plot_data {
            table.point("pmf", time, *p);
            table.point("binned", time, *b);
        } else {
            table.push(vec![(j + 1).into(), time.into(), (*p).into(), (*b).into()]);
        }
    }
    let json = json!({ "delta": delta, "order": to_json!(&order), "tv": tv, "pmf": pmf, "binned": binned });
    Ok(Report::json(json).with_table(table))
}

fn ki(path: &Path) -> CliResult<Report> {
    let channel = load_channel(path)?;
    let decomp = ki_decompose(&channel)?;
    let residuals = verify_decomposition(&channel, &decomp)?;
    let spectra: Vec<Vec<f64>> = decomp.omegas.iter().map(|w| hermitian_eigen(w).0).collect();
    Ok(Report::json(json!({
        "dim": channel.dim(),
        "blocks": to_json!(&decomp.blocks),
        "omega_spectra": spectra,
        "residuals": to_json!(&residuals),
    })))
}

fn zeno(cfg: &RunConfig, omega: f64, time: f64, m: &[usize], schedule: &str) -> CliResult<Report> {
    let config = ZenoConfig {
        schedule: parse_schedule(schedule)?,
        seed: cfg.seed,
        ..ZenoConfig::fixed(omega, time, m.to_vec())
    };
    let report = zeno_experiment(&config)?;
    let mut table =
        if cfg.plot_data { Table::long() } else { Table::new(["m", "survival", "closed_form", "p0", "mean_register"]) };
    for p in &report.points {
        if cfg.plot_data {
            table.point("survival", p.m, p.survival);
            if let Some(c) = p.closed_form {
                table.point("closed_form", p.m, c);
            }
        } else {
            table.push(vec![p.m.into(), p.survival.into(), p.closed_form.into(), p.p0.into(), p.mean_register.into()]);
        }
    }
    Ok(Report::json(to_json!(&report)).with_table(table))
}

fn swp(cfg: &RunConfig, dim: usize, omega: f64, alphas: &[f64]) -> CliResult<Report> {
    let report = swp_demo(&SwpConfig { dim, omega, alphas: alphas.to_vec() })?;
    let table = if cfg.plot_data {
        let mut t = Table::long();
        for a in &report.alphas {
            for point in &a.timeline {
                for (k, p) in point.theta.iter().enumerate() {
                    t.point(format!("alpha={}:theta_{k}", a.alpha), point.time, *p);
                }
                for (l, p) in point.lambda.iter().enumerate() {
                    t.point(format!("alpha={}:lambda_{l}", a.alpha), point.time, *p);
                }
            }
        }
        t
    } else {
        let mut t = Table::new(["alpha", "l", "time", "probability"]);
        for a in &report.alphas {
            for arr in &a.arrivals {
                t.push(vec![a.alpha.into(), arr.l.into(), arr.time.into(), arr.probability.into()]);
            }
        }
        t
    };
    Ok(Report::json(to_json!(&report)).with_table(table))
}
