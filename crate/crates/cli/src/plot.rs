//! Gnuplot data files and a driver script built from earlier outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use gradflux_core::io::{read_field, write_text};
use gradflux_core::problem::ProblemData;

use crate::config::{ProblemSource, RunConfig};
use crate::CliError;

struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_csv(path: &Path) -> Result<Option<Csv>, CliError> {
    let Ok(text) = fs::read_to_string(path) else {
        return Ok(None);
    };
    let mut lines = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.is_empty());
    let header: Vec<String> = match lines.next() {
        Some(h) => h.split(',').map(str::to_string).collect(),
        None => {
            return Err(CliError::Usage(format!("{}: empty CSV", path.display())));
        }
    };
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    Ok(Some(Csv { header, rows }))
}

impl Csv {
    fn column(&self, name: &str, path: &Path) -> Result<usize, CliError> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("{}: missing column `{name}`", path.display())))
    }
}

pub fn cmd_plotdata(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let mut script = String::from(
        "# gnuplot script generated by gradflux plotdata\nset term pngcairo size 800,600\n",
    );
    let mut produced = Vec::new();

    let history = out.join("history.csv");
    if let Some(csv) = read_csv(&history)? {
        let (k, rc) = (
            csv.column("k", &history)?,
            csv.column("rel_change", &history)?,
        );
        let mut data = String::from("# k rel_change\n");
        for r in &csv.rows {
            let _ = writeln!(data, "{} {}", r[k], r[rc]);
        }
        write_text(&out.join("convergence.dat"), &data)?;
        script.push_str(
            "set output 'convergence.png'\nset logscale y\nset xlabel 'iteration k'\n\
             set ylabel '|u^{k+1}-u^k|/|u^{k+1}|'\n\
             plot 'convergence.dat' using 1:2 with lines title 'relative change'\nunset logscale y\n",
        );
        produced.push("convergence.dat");
    }

    let solution = out.join("solution.field");
    if solution.exists() {
        let u = read_field(&solution)?.field;
        let g = *u.grid();
        let exact = match cfg.problem {
            ProblemSource::Example1 => ProblemData::example1(g).exact_u,
            ProblemSource::Files => None,
        };
        let mut data = String::from("# x y u abs_error\n");
        for i in 0..g.nodes() {
            for j in 0..g.nodes() {
                let err = exact
                    .as_ref()
                    .map_or(0.0, |e| (u.get(i, j) - e.get(i, j)).abs());
                let _ = writeln!(
                    data,
                    "{} {} {} {}",
                    g.coord(i),
                    g.coord(j),
                    u.get(i, j),
                    err
                );
            }
            data.push('\n');
        }
        write_text(&out.join("error_surface.dat"), &data)?;
        script.push_str(
            "set output 'error_surface.png'\nset xlabel 'x'\nset ylabel 'y'\n\
             splot 'error_surface.dat' using 1:2:4 with pm3d title '|u - u*|'\n",
        );
        produced.push("error_surface.dat");
    }

    let sweep = out.join("sweep.csv");
    if let Some(csv) = read_csv(&sweep)? {
        let names = [
            "eps",
            "err_u_l1",
            "err_gradu_l1",
            "err_sigma_l1",
            "err_J_l1",
            "energy_diff",
            "misalignment",
        ];
        let idx = names
            .iter()
            .map(|n| csv.column(n, &sweep))
            .collect::<Result<Vec<_>, _>>()?;
        let mut data = format!("# {}\n", names.join(" "));
        for r in &csv.rows {
            let vals: Vec<&str> = idx.iter().map(|&c| r[c].as_str()).collect();
            let _ = writeln!(data, "{}", vals.join(" "));
        }
        write_text(&out.join("sweep.dat"), &data)?;
        script.push_str("set output 'sweep.png'\nset logscale xy\nset xlabel 'eps'\nplot ");
        let plots: Vec<String> = names[1..]
            .iter()
            .enumerate()
            .map(|(k, n)| format!("'sweep.dat' using 1:{} with linespoints title '{n}'", k + 2))
            .collect();
        script.push_str(&plots.join(", "));
        script.push_str("\nunset logscale xy\n");
        produced.push("sweep.dat");
    }

    if produced.is_empty() {
        return Err(CliError::Usage(format!(
            "no history.csv, solution.field or sweep.csv found in `{}`; run solve or sweep first",
            out.display()
        )));
    }
    write_text(&out.join("plot.gp"), &script)?;
    println!("plotdata: wrote {} and plot.gp", produced.join(", "));
    Ok(())
}
