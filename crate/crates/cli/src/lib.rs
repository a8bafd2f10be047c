//! `gradflux solve|certify|sweep|table1|contour|plotdata --config <file>`.

pub mod config;
mod plot;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use gradflux_core::bregman::solve;
use gradflux_core::contour::max_level_set_length;
use gradflux_core::duality::certify;
use gradflux_core::fmt::fmt_f64;
use gradflux_core::grid::{GridSpec, NormKind};
use gradflux_core::io::{
    history_csv, read_field, sweep_csv, sweep_summary, table1_csv, table1_summary, write_field,
    write_text, CsvTable,
};
use gradflux_core::perturbation::noisy_instance;
use gradflux_core::poisson::PoissonSolver;
use gradflux_core::problem::ProblemData;
use gradflux_core::stability::{run_sweep, table1_experiment_with, SweepSpec};
use gradflux_core::Error;

use config::{ProblemSource, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error("compute failure: {0}")]
    Compute(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Compute(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. }
            | Error::Io { .. }
            | Error::GridMismatch { .. }
            | Error::ShapeMismatch { .. }
            | Error::GridTooSmall(_)
            | Error::InvalidParameter { .. }
            | Error::MissingPotential => CliError::Usage(e.to_string()),
            _ => CliError::Compute(e.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Solve one instance: solution field, certificate, history CSV.
    Solve,
    /// Certify a solution field given in `u_file`.
    Certify,
    /// Perturbation sweep report.
    Sweep,
    /// Noisy-data replication experiment.
    Table1,
    /// Level-set length table.
    Contour,
    /// Gnuplot data and script from earlier outputs in `--out`.
    Plotdata,
}

#[derive(Debug, Parser)]
#[command(
    name = "gradflux",
    version,
    about = "Weighted least-gradient solver and stability lab"
)]
pub struct Cli {
    pub command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Treat non-convergence as a failure (exit 2).
    #[arg(long)]
    pub strict: bool,
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("gradflux: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::load(&cli.config)?;
    fs::create_dir_all(&cli.out).map_err(|e| {
        CliError::Usage(format!(
            "cannot create output directory `{}`: {e}",
            cli.out.display()
        ))
    })?;
    match cli.command {
        Command::Solve => cmd_solve(&cfg, &cli.out, cli.strict),
        Command::Certify => cmd_certify(&cfg, &cli.out),
        Command::Sweep => cmd_sweep(&cfg, &cli.out, cli.strict),
        Command::Table1 => cmd_table1(&cfg, &cli.out, cli.strict),
        Command::Contour => cmd_contour(&cfg, &cli.out),
        Command::Plotdata => plot::cmd_plotdata(&cfg, &cli.out),
    }
}

fn load_problem(cfg: &RunConfig) -> Result<ProblemData, CliError> {
    match cfg.problem {
        ProblemSource::Example1 => Ok(ProblemData::example1(GridSpec::new(cfg.n)?)),
        ProblemSource::Files => {
            let read = |p: &Option<PathBuf>| read_field(p.as_deref().expect("checked in config"));
            let (a, f, h) = (read(&cfg.a_file)?, read(&cfg.f_file)?, read(&cfg.h_file)?);
            let n = a.field.grid().n();
            if cfg.explicit.contains("n") && cfg.n != n {
                return Err(CliError::Usage(format!(
                    "config key `n` = {} but a_file has n = {n}",
                    cfg.n
                )));
            }
            Ok(ProblemData::from_potential(
                a.field, f.field, h.field, a.tag,
            )?)
        }
    }
}

fn out_file(out: &Path, name: &str) -> PathBuf {
    out.join(name)
}

fn with_config(mut table: CsvTable, cfg: &RunConfig, command: &str) -> String {
    let mut comments = vec![format!("command = {command}")];
    comments.extend(cfg.comment_lines());
    comments.append(&mut table.comments);
    table.comments = comments;
    table.render()
}

fn header_block(cfg: &RunConfig, command: &str) -> String {
    let mut s = format!("# command = {command}\n");
    for l in cfg.comment_lines() {
        s.push_str(&format!("# {l}\n"));
    }
    s
}

fn cmd_solve(cfg: &RunConfig, out: &Path, strict: bool) -> Result<(), CliError> {
    let base = load_problem(cfg)?;
    let p = if cfg.delta > 0.0 {
        let mut noisy = noisy_instance(&base, cfg.delta, cfg.seeds[0])?.perturbed;
        noisy.exact_u = base.exact_u.clone();
        noisy
    } else {
        base
    };
    let r = solve(&p, &cfg.solver(true), &PoissonSolver::fast(p.grid))?;
    let u = &r.state.u;
    let cert = certify(u, &p, cfg.eta);
    write_field(&out_file(out, "solution.field"), u, "u", &p.tag)?;

    let mut text = header_block(cfg, "solve");
    text.push_str(&format!("iterations = {}\n", r.iterations));
    text.push_str(&format!("converged = {}\n", r.converged));
    text.push_str(&format!(
        "last_rel_change = {}\n",
        fmt_f64(r.last_rel_change)
    ));
    if let Some(exact) = &p.exact_u {
        let rel = (u - exact).norm(NormKind::L2) / exact.norm(NormKind::L2);
        text.push_str(&format!("rel_l2_error = {}\n", fmt_f64(rel)));
    }
    text.push_str(&cert.to_key_values());
    write_text(&out_file(out, "certificate.txt"), &text)?;
    let history = r.history.as_deref().unwrap_or(&[]);
    write_text(
        &out_file(out, "history.csv"),
        &with_config(history_csv(history), cfg, "solve"),
    )?;
    println!(
        "solve: {} iterations, converged = {}, relative gap = {:.3e}",
        r.iterations,
        r.converged,
        cert.relative_gap()
    );
    if strict && !r.converged {
        return Err(CliError::Compute(format!(
            "solver did not converge in {} iterations (last relative change {:.3e})",
            r.iterations, r.last_rel_change
        )));
    }
    Ok(())
}

fn cmd_certify(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let path = cfg
        .u_file
        .as_deref()
        .ok_or_else(|| CliError::Usage("config key `u_file` is required for certify".into()))?;
    let p = load_problem(cfg)?;
    let u = read_field(path)?.field;
    if u.grid() != &p.grid {
        return Err(CliError::Usage(format!(
            "u_file `{}` has n = {} but the problem has n = {}",
            path.display(),
            u.grid().n(),
            p.grid.n()
        )));
    }
    let cert = certify(&u, &p, cfg.eta);
    let mut text = header_block(cfg, "certify");
    text.push_str(&cert.to_key_values());
    write_text(&out_file(out, "certificate.txt"), &text)?;
    println!(
        "certify: relative gap = {:.3e}, relative EL residual = {:.3e}",
        cert.relative_gap(),
        cert.relative_el_residual()
    );
    Ok(())
}

fn cmd_sweep(cfg: &RunConfig, out: &Path, strict: bool) -> Result<(), CliError> {
    let p = load_problem(cfg)?;
    let spec = SweepSpec {
        param: cfg.param,
        epsilons: cfg.epsilons.clone(),
        mode: cfg.mode,
        seeds: cfg.seeds.clone(),
        solver: cfg.solver(false),
        eta: cfg.eta,
    };
    spec.validate()?;
    let report = run_sweep(&p, &spec)?;
    write_text(
        &out_file(out, "sweep.csv"),
        &with_config(sweep_csv(&report), cfg, "sweep"),
    )?;
    let summary = header_block(cfg, "sweep") + &sweep_summary(&report);
    write_text(&out_file(out, "sweep_summary.txt"), &summary)?;
    let invalid = report.rows.iter().filter(|r| !r.valid()).count();
    println!(
        "sweep: {} rows ({} invalid), shapes {}",
        report.rows.len(),
        invalid,
        if report.all_shapes_hold() {
            "hold"
        } else {
            "do not all hold"
        }
    );
    if strict && (invalid > 0 || !report.base_converged) {
        return Err(CliError::Compute(format!(
            "{invalid} sweep rows did not converge"
        )));
    }
    Ok(())
}

fn cmd_table1(cfg: &RunConfig, out: &Path, strict: bool) -> Result<(), CliError> {
    if cfg.problem != ProblemSource::Example1 {
        return Err(CliError::Usage("table1 requires problem = example1".into()));
    }
    let report = table1_experiment_with(&cfg.solver(false), &cfg.seeds, cfg.n, &cfg.deltas)?;
    write_text(
        &out_file(out, "table1.csv"),
        &with_config(table1_csv(&report), cfg, "table1"),
    )?;
    write_text(
        &out_file(out, "table1_summary.csv"),
        &with_config(table1_summary(&report), cfg, "table1"),
    )?;
    for l in &report.levels {
        println!(
            "table1: delta = {}, mean relative L2 error = {:.4}, mean iterations = {:.0}",
            l.delta, l.mean_rel_l2, l.mean_iters
        );
    }
    let failed = report
        .levels
        .iter()
        .flat_map(|l| &l.runs)
        .filter(|r| !r.converged)
        .count();
    if strict && failed > 0 {
        return Err(CliError::Compute(format!(
            "{failed} table1 runs did not converge"
        )));
    }
    Ok(())
}

fn cmd_contour(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let v = match &cfg.u_file {
        Some(path) => read_field(path)?.field,
        None => load_problem(cfg)?.exact_u.ok_or_else(|| {
            CliError::Usage(
                "config key `u_file` is required when the problem has no exact solution".into(),
            )
        })?,
    };
    let (sup, table) = max_level_set_length(&v, cfg.levels);
    let mut t = CsvTable::new(&["t", "length"]);
    t.comment(format!("sup_length = {}", fmt_f64(sup)));
    for (level, len) in table {
        t.push(vec![fmt_f64(level), fmt_f64(len)]);
    }
    write_text(
        &out_file(out, "contour.csv"),
        &with_config(t, cfg, "contour"),
    )?;
    println!("contour: sup level-set length = {sup:.6}");
    Ok(())
}
