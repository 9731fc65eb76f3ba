//! Subcommand execution and CSV emission.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use levyfield::mc::{map_paths, McConfig};
use levyfield::term_structure::Model;
use levyfield::validation::{
    cf_test, drift_identity_check, identity_triples, mc_identity6_test, mc_martingale_test, positivity_scan,
    variance_check, ValidationReport,
};

use crate::config::{parse_config, RunConfig};
use crate::error::CliError;

/// Significant digits written by default; enough to round-trip an `f64`.
pub const DEFAULT_PRECISION: usize = 17;
/// File receiving the resolved configuration.
pub const RESOLVED_CONFIG: &str = "resolved.toml";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Simulate,
    DriftTable,
    Price,
    Validate,
}

impl Subcommand {
    /// Name of the CSV artifact the subcommand writes.
    pub fn artifact(self) -> &'static str {
        match self {
            Self::Simulate => "atoms.csv",
            Self::DriftTable => "drift_table.csv",
            Self::Price => "prices.csv",
            Self::Validate => "report.csv",
        }
    }
}

/// Command-line values that take precedence over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub n_paths: Option<usize>,
    pub precision: Option<usize>,
}

#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub artifact: PathBuf,
    /// Human-readable validation lines; empty for other subcommands.
    pub reports: Vec<String>,
}

/// Reads the configuration at `config_path` and runs `command`.
pub fn run_file(command: Subcommand, config_path: &Path, overrides: &Overrides) -> Result<Outcome, CliError> {
    let text = fs::read_to_string(config_path).map_err(CliError::io(config_path))?;
    run(command, &text, overrides)
}

/// Runs `command` on a configuration document. Everything is written inside
/// the output directory: the subcommand's CSV and `resolved.toml`.
pub fn run(command: Subcommand, config_text: &str, overrides: &Overrides) -> Result<Outcome, CliError> {
    let mut config = parse_config(config_text)?;
    apply_overrides(&mut config, overrides);
    let out_dir = config
        .run
        .out
        .clone()
        .ok_or_else(|| CliError::Value("no output directory: pass --out or set run.out".into()))?;
    let precision = overrides.precision.unwrap_or(DEFAULT_PRECISION);
    if !(1..=17).contains(&precision) {
        return Err(CliError::Value(format!(
            "precision must be between 1 and 17, got {precision}"
        )));
    }
    let (resolved, model) = config.resolve()?;
    log::info!("resolved truncation level {:e}", model.trunc_eps());
    fs::create_dir_all(&out_dir).map_err(CliError::io(&out_dir))?;
    write_file(&out_dir.join(RESOLVED_CONFIG), &resolved.to_toml()?)?;

    let cfg = McConfig::new(resolved.run.n_paths, resolved.run.seed, resolved.run.workers);
    let fmt = Float(precision);
    let mut reports = Vec::new();
    let mut exit_code = 0;
    let csv = match command {
        Subcommand::Simulate => simulate_csv(&model, &cfg, fmt)?,
        Subcommand::DriftTable => drift_table_csv(&model, &resolved, fmt)?,
        Subcommand::Price => price_csv(&model, &resolved, &cfg, fmt)?,
        Subcommand::Validate => {
            let results = validate(&model, &resolved, &cfg)?;
            if results.iter().any(|r| !r.pass) {
                exit_code = 1;
            }
            reports = results.iter().map(|r| format!("{r}  [{:.2}s]", r.wall_time)).collect();
            report_csv(&results, fmt)
        }
    };
    let artifact = out_dir.join(command.artifact());
    write_file(&artifact, &csv)?;
    Ok(Outcome {
        exit_code,
        artifact,
        reports,
    })
}

fn apply_overrides(config: &mut RunConfig, overrides: &Overrides) {
    let run = &mut config.run;
    if let Some(out) = &overrides.out {
        run.out = Some(out.clone());
    }
    if let Some(seed) = overrides.seed {
        run.seed = seed;
    }
    if let Some(workers) = overrides.workers {
        run.workers = workers;
    }
    if let Some(n) = overrides.n_paths {
        run.n_paths = n;
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let mut file = fs::File::create(path).map_err(CliError::io(path))?;
    file.write_all(contents.as_bytes()).map_err(CliError::io(path))
}

/// Scientific notation with a fixed number of significant digits.
#[derive(Debug, Clone, Copy)]
struct Float(usize);

impl Float {
    fn put(self, buf: &mut String, v: f64) {
        let _ = write!(buf, "{:.*e}", self.0 - 1, v);
    }
}

fn row(buf: &mut String, fmt: Float, leading: &[String], values: &[f64]) {
    let mut first = true;
    for field in leading {
        if !first {
            buf.push(',');
        }
        buf.push_str(field);
        first = false;
    }
    for &v in values {
        if !first {
            buf.push(',');
        }
        fmt.put(buf, v);
        first = false;
    }
    buf.push('\n');
}

fn simulate_csv(model: &Model, cfg: &McConfig, fmt: Float) -> Result<String, CliError> {
    let paths = map_paths(cfg, |_, rng| Ok(model.simulate_path(rng)?.sheet))?;
    let mut buf = String::from("path_id,x,y,tau\n");
    for (i, sheet) in paths.iter().enumerate() {
        for atom in sheet.atoms() {
            row(&mut buf, fmt, &[i.to_string()], &[atom.x, atom.y, atom.tau]);
        }
    }
    Ok(buf)
}

fn axis(max: f64, nodes: usize) -> Vec<f64> {
    match nodes {
        0 => Vec::new(),
        1 => vec![max],
        n => (0..n).map(|k| max * k as f64 / (n - 1) as f64).collect(),
    }
}

fn upper_grid(model: &Model, s_nodes: usize, t_nodes: usize) -> Vec<(f64, f64)> {
    let h = model.horizon();
    let ts = axis(h.t_max, t_nodes);
    axis(h.s_max, s_nodes)
        .into_iter()
        .flat_map(|s| ts.iter().filter(move |&&t| t >= s).map(move |&t| (s, t)))
        .collect()
}

fn drift_table_csv(model: &Model, config: &RunConfig, fmt: Float) -> Result<String, CliError> {
    let table = config.run.drift_table;
    let mut buf = String::from("s,t,mu0_t,jump_increment,gaussian_correction,mu_s_t\n");
    for (s, t) in upper_grid(model, table.s_nodes, table.t_nodes) {
        let c = model.mu_components(s, t)?;
        row(
            &mut buf,
            fmt,
            &[],
            &[s, t, c.mu0, c.jump_increment, c.gaussian_correction, c.total()],
        );
    }
    Ok(buf)
}

fn price_csv(model: &Model, config: &RunConfig, cfg: &McConfig, fmt: Float) -> Result<String, CliError> {
    let points: Vec<(f64, f64)> = match &config.run.price.points {
        Some(p) => p.iter().map(|&[s, t]| (s, t)).collect(),
        None => upper_grid(model, config.run.price.nodes, config.run.price.nodes),
    };
    let quotes = points
        .iter()
        .map(|&(s, t)| model.quote(s, t))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = map_paths(cfg, |_, rng| {
        let path = model.simulate_path(rng)?;
        quotes
            .iter()
            .map(|q| {
                Ok([
                    q.s,
                    q.t,
                    model.forward_rate(&path, q.s, q.t)?,
                    model.spot_rate(&path, q.s)?,
                    model.bond_price_at(q, &path)?,
                    model.discounted_price_at(q, &path)?,
                ])
            })
            .collect::<levyfield::Result<Vec<_>>>()
    })?;
    let mut buf = String::from("path_id,s,t,F_s_t,R_s,P_s_t,Z_s_t\n");
    for (i, values) in rows.iter().enumerate() {
        for v in values {
            row(&mut buf, fmt, &[i.to_string()], v);
        }
    }
    Ok(buf)
}

fn validate(model: &Model, config: &RunConfig, cfg: &McConfig) -> Result<Vec<ValidationReport>, CliError> {
    let checks = &config.run.validate;
    let z_crit = config.run.z_crit;
    let mut reports = Vec::new();
    if let Some(m) = &checks.martingale {
        reports.extend(mc_martingale_test(model, m.t, &m.s, cfg, z_crit)?);
    }
    if let Some(i) = checks.identity {
        reports.push(mc_identity6_test(model, i.s2, i.s1, i.t, cfg, z_crit)?);
    }
    if let Some(c) = &checks.cf {
        reports.extend(cf_test(model, c.s, c.t, &c.lambdas, cfg, z_crit)?);
    }
    if let Some(v) = &checks.variance {
        let points: Vec<(f64, f64)> = v.points.iter().map(|&[s, t]| (s, t)).collect();
        reports.extend(variance_check(model, &points, cfg, z_crit)?);
    }
    if let Some(p) = checks.positivity {
        let scan_cfg = McConfig::new(p.n_paths.unwrap_or(cfg.n_paths), cfg.seed, cfg.workers);
        reports.push(positivity_scan(model, p.nodes, &scan_cfg)?);
    }
    if let Some(d) = checks.drift_identity {
        let spec = model.spec();
        let triples = identity_triples(d.triples, model.horizon().t_max);
        reports.push(drift_identity_check(&spec.measure, &spec.kappa, &triples, d.tolerance)?);
    }
    Ok(reports)
}

/// The report table without timings, so it is reproducible byte for byte.
fn report_csv(reports: &[ValidationReport], fmt: Float) -> String {
    let mut buf =
        String::from("test,n_paths,estimate,reference,standard_error,z_score,z_crit,trimmed_mean,exact,pass\n");
    for r in reports {
        let _ = write!(buf, "{},{},", r.test_name.replace(',', ";"), r.n_paths);
        for v in [r.estimate, r.reference, r.standard_error, r.z_score, r.z_crit] {
            fmt.put(&mut buf, v);
            buf.push(',');
        }
        if let Some(t) = r.trimmed_mean {
            fmt.put(&mut buf, t);
        }
        let _ = writeln!(buf, ",{},{}", r.exact, r.pass);
    }
    buf
}
