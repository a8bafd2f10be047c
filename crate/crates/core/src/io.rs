//! Field files and CSV emission.
//!
//! A field file is a header line `gradflux-field <n> <kind> <tag>` followed
//! by the `(n+1)^2` node values, one grid row `i` per line, printed with 17
//! significant digits so that a write/read round trip is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::bregman::HistoryEntry;
use crate::error::{Error, Result};
use crate::fmt::fmt_f64;
use crate::grid::{GridSpec, ScalarField};
use crate::stability::{StabilityReport, Table1Report, COLUMNS};

const MAGIC: &str = "gradflux-field";

#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub kind: String,
    pub tag: String,
    pub field: ScalarField,
}

pub fn format_field(field: &ScalarField, kind: &str, tag: &str) -> String {
    let n = field.grid().n();
    let mut out = format!("{MAGIC} {n} {kind} {tag}\n");
    for row in field.values().rows() {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(" "));
        out.push('\n');
    }
    out
}

/// Parses a field file; `path` only labels error messages.
pub fn parse_field(text: &str, path: &str) -> Result<FieldFile> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_string(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate().map(|(k, l)| (k + 1, l));
    let (hline, header) = lines
        .by_ref()
        .find(|(_, l)| !l.trim().is_empty())
        .ok_or_else(|| parse_err(1, "missing header".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.first() != Some(&MAGIC) || parts.len() != 4 {
        return Err(parse_err(
            hline,
            format!("missing header: expected `{MAGIC} <n> <kind> <tag>`"),
        ));
    }
    let n: usize = parts[1]
        .parse()
        .map_err(|_| parse_err(hline, format!("bad grid size `{}`", parts[1])))?;
    let grid = GridSpec::new(n).map_err(|e| parse_err(hline, e.to_string()))?;
    let expected = grid.nodes() * grid.nodes();
    let mut values = Vec::with_capacity(expected);
    for (k, line) in lines {
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(k, format!("bad number `{tok}`")))?;
            if !v.is_finite() {
                return Err(parse_err(k, format!("non-finite value `{tok}`")));
            }
            values.push(v);
        }
    }
    if values.len() != expected {
        return Err(parse_err(
            hline,
            format!(
                "header declares n = {n}, which needs {expected} values, found {}",
                values.len()
            ),
        ));
    }
    let arr =
        Array2::from_shape_vec((grid.nodes(), grid.nodes()), values).expect("length checked above");
    Ok(FieldFile {
        kind: parts[2].to_string(),
        tag: parts[3].to_string(),
        field: ScalarField::new(grid, arr)?,
    })
}

fn io_err(path: &Path, e: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

pub fn read_field(path: &Path) -> Result<FieldFile> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_field(&text, &path.display().to_string())
}

pub fn write_field(path: &Path, field: &ScalarField, kind: &str, tag: &str) -> Result<()> {
    write_text(path, &format_field(field, kind, tag))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

/// Comma-separated table with a `#`-prefixed block of `key = value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CsvTable {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            let _ = writeln!(out, "# {c}");
        }
        let _ = writeln!(out, "{}", self.header.join(","));
        for r in &self.rows {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

/// Lines of a CSV document that are not comments.
pub fn csv_body(text: &str) -> String {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

pub fn history_csv(history: &[HistoryEntry]) -> CsvTable {
    let mut t = CsvTable::new(&["k", "rel_change", "energy"]);
    for h in history {
        t.push(vec![
            h.k.to_string(),
            fmt_f64(h.rel_change),
            fmt_f64(h.energy),
        ]);
    }
    t
}

/// One row per `(eps, seed)`; the first ten columns are the report columns
/// proper, the rest are diagnostics.
pub fn sweep_csv(report: &StabilityReport) -> CsvTable {
    let mut header = vec!["eps", "seed"];
    header.extend(COLUMNS.iter().map(|(c, _)| *c));
    header.extend([
        "iters",
        "rel_l2",
        "valid",
        "excluded_fraction",
        "min_misalignment_density",
        "sigma0_est",
        "sigma1_est",
        "size_a_linf",
        "size_F_l1",
        "size_H_linf",
        "bound_energy",
        "bound_misalignment",
        "bound_flux",
    ]);
    let mut t = CsvTable::new(&header);
    for r in &report.rows {
        let mut row = vec![fmt_f64(r.eps), r.seed.to_string()];
        row.extend(r.cols.values().iter().map(|&v| fmt_f64(v)));
        row.extend([
            r.iters.to_string(),
            fmt_f64(r.rel_l2),
            r.valid().to_string(),
            fmt_f64(r.excluded_fraction),
            fmt_f64(r.min_misalignment_density),
            fmt_f64(r.sigma0_est),
            fmt_f64(r.sigma1_est),
            fmt_f64(r.sizes.weight_linf),
            fmt_f64(r.sizes.drift_l1),
            fmt_f64(r.sizes.forcing_linf),
        ]);
        for name in ["energy", "misalignment", "flux"] {
            row.push(match r.bounds.iter().find(|b| b.name == name) {
                Some(b) => if b.holds { "holds" } else { "fails" }.to_string(),
                None => "n/a".to_string(),
            });
        }
        t.push(row);
    }
    t
}

/// Fitted rates and shape verdicts as `key = value` lines.
pub fn sweep_summary(report: &StabilityReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "param = {}", report.spec.param.name());
    let _ = writeln!(out, "mode = {}", report.spec.mode.name());
    let _ = writeln!(out, "base_iters = {}", report.base_iters);
    let _ = writeln!(out, "base_converged = {}", report.base_converged);
    let _ = writeln!(out, "sigma0_est = {}", fmt_f64(report.base_sigma.0));
    let _ = writeln!(out, "sigma1_est = {}", fmt_f64(report.base_sigma.1));
    for v in &report.verdicts {
        let slope = v.fit.map_or("undefined".to_string(), |f| fmt_f64(f.slope));
        let _ = writeln!(out, "{}.exponent = {}", v.column, v.exponent);
        let _ = writeln!(out, "{}.slope = {slope}", v.column);
        let _ = writeln!(
            out,
            "{}.ratio_growth = {}",
            v.column,
            fmt_f64(v.ratio_growth)
        );
        let _ = writeln!(out, "{}.monotone = {}", v.column, v.monotone);
        let _ = writeln!(
            out,
            "{}.shape = {}",
            v.column,
            if v.holds() { "holds" } else { "fails" }
        );
    }
    if report.spec.param == crate::stability::SweepParam::Drift {
        let verdict = if report.all_bounds_hold() {
            "holds"
        } else {
            "fails"
        };
        let _ = writeln!(out, "explicit_bounds = {verdict}");
    }
    out
}

pub fn table1_csv(report: &Table1Report) -> CsvTable {
    let mut t = CsvTable::new(&["delta", "seed", "rel_l2", "iters", "max_err", "converged"]);
    for level in &report.levels {
        for r in &level.runs {
            t.push(vec![
                fmt_f64(r.delta),
                r.seed.to_string(),
                fmt_f64(r.rel_l2),
                r.iters.to_string(),
                fmt_f64(r.max_err),
                r.converged.to_string(),
            ]);
        }
    }
    t
}

pub fn table1_summary(report: &Table1Report) -> CsvTable {
    let mut t = CsvTable::new(&["delta", "mean_rel_l2", "mean_iters", "max_err", "runs"]);
    t.comment(format!("n = {}", report.n));
    t.comment(format!("replication = {}", report.replication));
    for l in &report.levels {
        t.push(vec![
            fmt_f64(l.delta),
            fmt_f64(l.mean_rel_l2),
            fmt_f64(l.mean_iters),
            fmt_f64(l.max_err),
            l.runs.len().to_string(),
        ]);
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problem::ProblemData;
    use proptest::prelude::*;

    #[test]
    fn round_trip_example_weight() {
        let p = ProblemData::example1(GridSpec::new(12).unwrap());
        let text = format_field(&p.weight, "a", "example1");
        let back = parse_field(&text, "mem").unwrap();
        assert_eq!(back.field, p.weight);
        assert_eq!(back.kind, "a");
        assert_eq!(back.tag, "example1");
    }

    #[test]
    fn round_trip_through_disk() {
        let dir = std::env::temp_dir().join(format!("gradflux-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("h.field");
        let f = ScalarField::from_fn(GridSpec::new(5).unwrap(), |x, y| x - y / 3.0);
        write_field(&path, &f, "H", "t").unwrap();
        assert_eq!(read_field(&path).unwrap().field, f);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn empty_file_is_missing_header() {
        let err = parse_field("", "x.field").unwrap_err();
        assert!(err.to_string().contains("missing header"), "{err}");
        let err = parse_field("1 2 3\n", "x.field").unwrap_err();
        assert!(err.to_string().contains("missing header"), "{err}");
    }

    #[test]
    fn count_mismatch_names_header_line() {
        let text = "\ngradflux-field 2 a t\n0 0 0\n0 1 0\n";
        let err = parse_field(text, "x.field").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        assert!(err.to_string().starts_with("x.field:2:"));
    }

    #[test]
    fn bad_token_names_its_line() {
        let text = "gradflux-field 2 a t\n0 0 0\n0 x 0\n0 0 0\n";
        let err = parse_field(text, "x.field").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = read_field(Path::new("/nonexistent/a.field")).unwrap_err();
        assert!(matches!(err, Error::Io { .. }));
    }

    #[test]
    fn csv_rendering() {
        let mut t = CsvTable::new(&["a", "b"]);
        t.comment("n = 4");
        t.push(vec!["1".into(), "2".into()]);
        let text = t.render();
        assert_eq!(text, "# n = 4\na,b\n1,2\n");
        assert_eq!(csv_body(&text), "a,b\n1,2\n");
    }

    proptest! {
        #[test]
        fn random_fields_round_trip(seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let g = GridSpec::new(4).unwrap();
            let values = Array2::from_shape_simple_fn((5, 5), || rng.random::<f64>() * 1e3 - 5e2);
            let f = ScalarField::new(g, values).unwrap();
            let back = parse_field(&format_field(&f, "a", "r"), "mem").unwrap();
            prop_assert_eq!(back.field, f);
        }
    }
}
