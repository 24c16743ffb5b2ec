//! Suite runner behind the CLI: a (problem × algorithm × preconditioner)
//! grid with termination classification, table rendering and residual dumps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::problems::load_problem;
use crate::solvers::{
    fixed_point_solve, run_algorithm, shift_split_solve, Algorithm, ShiftConfig, SolverConfig,
    SolverReport, Status,
};
use crate::splitting::{SplitSystem, DEFAULT_TARGET_NORM};
use crate::vector::ComplexVector;

/// One column of the comparison table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AlgorithmColumn {
    Fp(f64),
    Gmres(usize),
    Bicgstab,
}

impl AlgorithmColumn {
    pub fn label(&self) -> String {
        match self {
            AlgorithmColumn::Fp(alpha) => format!("fp α={alpha}"),
            AlgorithmColumn::Gmres(m) => format!("gmres{m}"),
            AlgorithmColumn::Bicgstab => "bicgstab".into(),
        }
    }

    /// Parse a column tag: `fp`, `fp0.9`, `gmres20`, `gmres5`, `bicgstab`.
    pub fn parse(tag: &str) -> Result<Self> {
        if tag == "bicgstab" {
            return Ok(AlgorithmColumn::Bicgstab);
        }
        if let Some(rest) = tag.strip_prefix("gmres") {
            let m = if rest.is_empty() {
                20
            } else {
                rest.parse()
                    .map_err(|_| Error::Config(format!("bad gmres restart in \"{tag}\"")))?
            };
            return Ok(AlgorithmColumn::Gmres(m));
        }
        if let Some(rest) = tag.strip_prefix("fp") {
            let alpha = if rest.is_empty() {
                1.0
            } else {
                rest.parse()
                    .map_err(|_| Error::Config(format!("bad fp step size in \"{tag}\"")))?
            };
            return Ok(AlgorithmColumn::Fp(alpha));
        }
        Err(Error::Config(format!("unknown algorithm \"{tag}\"")))
    }

    /// The seven-column layout of the comparison study.
    pub fn standard_set() -> Vec<Self> {
        vec![
            AlgorithmColumn::Fp(1.0),
            AlgorithmColumn::Fp(0.9),
            AlgorithmColumn::Fp(0.8),
            AlgorithmColumn::Fp(0.7),
            AlgorithmColumn::Gmres(20),
            AlgorithmColumn::Gmres(5),
            AlgorithmColumn::Bicgstab,
        ]
    }

    fn algorithm(&self) -> Algorithm {
        match self {
            AlgorithmColumn::Fp(_) => Algorithm::FixedPoint,
            AlgorithmColumn::Gmres(_) => Algorithm::Gmres,
            AlgorithmColumn::Bicgstab => Algorithm::Bicgstab,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Precond {
    None,
    Universal,
    Shift(f64),
}

impl Precond {
    pub fn label(&self) -> String {
        match self {
            Precond::None => "none".into(),
            Precond::Universal => "universal".into(),
            Precond::Shift(g) => format!("shift γ={g}"),
        }
    }

    /// Parse `none`, `universal`, `shift` or `shift:γ`.
    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "none" => Ok(Precond::None),
            "universal" => Ok(Precond::Universal),
            "shift" => Ok(Precond::Shift(1.0)),
            other => {
                if let Some(rest) = other.strip_prefix("shift:") {
                    let g: f64 = rest
                        .parse()
                        .map_err(|_| Error::Config(format!("bad shift γ in \"{other}\"")))?;
                    if !(g > 0.0) {
                        return Err(Error::Config("shift γ must be positive".into()));
                    }
                    return Ok(Precond::Shift(g));
                }
                Err(Error::Config(format!("unknown preconditioner \"{other}\"")))
            }
        }
    }
}

#[derive(Deserialize)]
struct RawSuite {
    problems: Vec<String>,
    algorithms: Option<Vec<String>>,
    preconditioners: Option<Vec<String>>,
    tol: Option<f64>,
    max_iter: Option<u64>,
}

#[derive(Clone)]
pub struct SuiteSpec {
    pub problems: Vec<PathBuf>,
    pub algorithms: Vec<AlgorithmColumn>,
    pub preconditioners: Vec<Precond>,
    pub tol: f64,
    pub max_iter: u64,
}

/// Load and validate a suite specification; problem paths are resolved
/// relative to the spec file.
pub fn load_suite_spec(path: &Path) -> Result<SuiteSpec> {
    let text = std::fs::read_to_string(path)?;
    let raw: RawSuite = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    if raw.problems.is_empty() {
        return Err(Error::Config("suite needs at least one problem".into()));
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let problems: Vec<PathBuf> = raw.problems.iter().map(|p| base.join(p)).collect();
    for p in &problems {
        if !p.is_file() {
            return Err(Error::Config(format!("problem file {} not found", p.display())));
        }
    }
    let algorithms = match raw.algorithms {
        None => AlgorithmColumn::standard_set(),
        Some(tags) => tags
            .iter()
            .map(|t| AlgorithmColumn::parse(t))
            .collect::<Result<Vec<_>>>()?,
    };
    let preconditioners = match raw.preconditioners {
        None => vec![Precond::None, Precond::Universal],
        Some(tags) => tags
            .iter()
            .map(|t| Precond::parse(t))
            .collect::<Result<Vec<_>>>()?,
    };
    if algorithms.is_empty() || preconditioners.is_empty() {
        return Err(Error::Config("suite algorithm/preconditioner lists must be non-empty".into()));
    }
    Ok(SuiteSpec {
        problems,
        algorithms,
        preconditioners,
        tol: raw.tol.unwrap_or(1e-3),
        max_iter: raw.max_iter.unwrap_or(30_000),
    })
}

#[derive(Clone, Debug)]
pub enum CellOutcome {
    Ran {
        report: SolverReport,
        /// True relative residual `‖Ax−b‖/‖b‖` of the canonical system,
        /// recomputed from the returned iterate.
        raw_residual: f64,
    },
    Failed(String),
}

#[derive(Clone, Debug)]
pub struct SuiteRow {
    pub problem: String,
    pub precond: Precond,
    pub cells: Vec<CellOutcome>,
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub algorithms: Vec<AlgorithmColumn>,
    pub rows: Vec<SuiteRow>,
}

/// Run one cell of the grid on an already-built split system.
pub fn run_cell(
    split: &SplitSystem,
    column: AlgorithmColumn,
    precond: Precond,
    tol: f64,
    max_iter: u64,
) -> CellOutcome {
    let mut config = SolverConfig {
        tol,
        max_iter,
        ..SolverConfig::default()
    };
    match column {
        AlgorithmColumn::Fp(alpha) => config.alpha = alpha,
        AlgorithmColumn::Gmres(m) => config.restart = Some(m),
        AlgorithmColumn::Bicgstab => {}
    }
    let solved = match precond {
        Precond::None => {
            let a = split.forward_map();
            run_algorithm(&a, &split.source, column.algorithm(), &config)
        }
        Precond::Universal => {
            let mut s = split.clone();
            if let AlgorithmColumn::Fp(alpha) = column {
                s.alpha = alpha;
            }
            let pre = s.build_preconditioned();
            match column.algorithm() {
                Algorithm::FixedPoint => Ok(fixed_point_solve(&pre, &config, None)),
                other => run_algorithm(&pre.precond_op, &pre.precond_source, other, &config),
            }
        }
        Precond::Shift(gamma) => {
            let shift = ShiftConfig {
                gamma,
                ..ShiftConfig::default()
            };
            shift_split_solve(split, &shift, column.algorithm(), &config)
        }
    };
    match solved {
        Ok((x, report)) => {
            let raw_residual = canonical_residual(split, &x);
            CellOutcome::Ran { report, raw_residual }
        }
        Err(e) => CellOutcome::Failed(e.to_string()),
    }
}

fn canonical_residual(split: &SplitSystem, x: &ComplexVector) -> f64 {
    let r = split.forward_map().apply(x).sub(&split.source);
    r.norm() / split.source.norm().max(f64::MIN_POSITIVE)
}

/// Run the full grid. Per-cell failures land in the cell; only spec-level
/// problems (already caught at load time) abort the suite.
pub fn run_suite(spec: &SuiteSpec) -> SuiteResult {
    let mut rows = Vec::new();
    for path in &spec.problems {
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        let built = load_problem(path).and_then(|kind| kind.build(DEFAULT_TARGET_NORM));
        for precond in &spec.preconditioners {
            let cells = match &built {
                Ok(split) => spec
                    .algorithms
                    .iter()
                    .map(|col| run_cell(split, *col, *precond, spec.tol, spec.max_iter))
                    .collect(),
                Err(e) => vec![CellOutcome::Failed(e.to_string()); spec.algorithms.len()],
            };
            rows.push(SuiteRow {
                problem: label.clone(),
                precond: *precond,
                cells,
            });
        }
    }
    SuiteResult {
        algorithms: spec.algorithms.clone(),
        rows,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableFormat {
    Markdown,
    Csv,
}

/// Iteration-count formatting with the table suffix rule: `6026 → "6.0 k"`.
pub fn format_count(n: u64) -> String {
    if n < 1_000 {
        n.to_string()
    } else if n < 1_000_000 {
        format!("{:.1} k", n as f64 / 1e3)
    } else {
        format!("{:.1} M", n as f64 / 1e6)
    }
}

/// Parse a rendered cell back into (status, count): the inverse of the
/// rendering up to the suffix rounding rule.
pub fn parse_cell(text: &str) -> Result<(Status, Option<u64>)> {
    let t = text.trim().trim_matches('*');
    match t {
        "s" => return Ok((Status::Stagnated, None)),
        "m" => return Ok((Status::MaxIter, None)),
        "d" => return Ok((Status::Diverged, None)),
        "!" => return Err(Error::Config("cell recorded an execution failure".into())),
        _ => {}
    }
    let (value, scale) = if let Some(v) = t.strip_suffix(" k") {
        (v, 1e3)
    } else if let Some(v) = t.strip_suffix(" M") {
        (v, 1e6)
    } else {
        (t, 1.0)
    };
    let v: f64 = value
        .parse()
        .map_err(|_| Error::Config(format!("unparseable cell \"{text}\"")))?;
    Ok((Status::Converged, Some((v * scale).round() as u64)))
}

fn cell_text(outcome: &CellOutcome) -> String {
    match outcome {
        CellOutcome::Failed(_) => "!".into(),
        CellOutcome::Ran { report, .. } => match report.status.letter() {
            Some(letter) => letter.to_string(),
            None => format_count(report.operator_evals),
        },
    }
}

/// Render the grid. Markdown flags the fastest converged cell per row (by
/// wall time) in bold; CSV omits the flag so output is byte-reproducible.
pub fn render_table(result: &SuiteResult, format: TableFormat) -> String {
    let mut header: Vec<String> = vec!["problem".into(), "preconditioner".into()];
    header.extend(result.algorithms.iter().map(|a| a.label()));
    let mut out = String::new();
    match format {
        TableFormat::Csv => {
            let _ = writeln!(out, "{}", header.join(","));
            for row in &result.rows {
                let mut fields = vec![row.problem.clone(), row.precond.label()];
                fields.extend(row.cells.iter().map(cell_text));
                let _ = writeln!(out, "{}", fields.join(","));
            }
        }
        TableFormat::Markdown => {
            let _ = writeln!(out, "| {} |", header.join(" | "));
            let _ = writeln!(out, "|{}|", vec!["---"; header.len()].join("|"));
            for row in &result.rows {
                let fastest = row
                    .cells
                    .iter()
                    .enumerate()
                    .filter_map(|(i, c)| match c {
                        CellOutcome::Ran { report, .. } if report.status == Status::Converged => {
                            Some((i, report.wall_time))
                        }
                        _ => None,
                    })
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .map(|(i, _)| i);
                let mut fields = vec![row.problem.clone(), row.precond.label()];
                for (i, c) in row.cells.iter().enumerate() {
                    let text = cell_text(c);
                    if Some(i) == fastest {
                        fields.push(format!("**{text}**"));
                    } else {
                        fields.push(text);
                    }
                }
                let _ = writeln!(out, "| {} |", fields.join(" | "));
            }
        }
    }
    out
}

/// Write the residual history: a header plus one `iteration,residual` record
/// per line, residuals with 9 significant digits.
pub fn dump_residuals(report: &SolverReport, path: &Path) -> Result<()> {
    let mut out = String::from("iteration,relative_residual\n");
    for (i, r) in report.residual_history.iter().enumerate() {
        let _ = writeln!(out, "{i},{r:.8e}");
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_smoke_problem(dir: &Path) -> PathBuf {
        std::fs::create_dir_all(dir).unwrap();
        let path = dir.join("smoke.json");
        let k2: Vec<String> = (0..16).map(|_| "[1.0, 0.0]".into()).collect();
        let mut source: Vec<String> = (0..16).map(|_| "[0,0]".into()).collect();
        source[8] = "[1,0]".into();
        let json = format!(
            r#"{{
                "problem": "helmholtz1d",
                "shape": [16],
                "spacing": [0.4],
                "k2_field": [{}],
                "source": [{}],
                "absorber_width": 8,
                "absorber_strength": 0.5
            }}"#,
            k2.join(","),
            source.join(",")
        );
        std::fs::write(&path, json).unwrap();
        path
    }

    #[test]
    fn count_formatting() {
        assert_eq!(format_count(123), "123");
        assert_eq!(format_count(6026), "6.0 k");
        assert_eq!(format_count(2_500_000), "2.5 M");
    }

    #[test]
    fn empty_grid_renders_header_only() {
        let result = SuiteResult {
            algorithms: AlgorithmColumn::standard_set(),
            rows: vec![],
        };
        let md = render_table(&result, TableFormat::Markdown);
        assert_eq!(md.lines().count(), 2); // header + separator
        let csv = render_table(&result, TableFormat::Csv);
        assert_eq!(csv.lines().count(), 1);
    }

    #[test]
    fn column_and_precond_parsing() {
        assert_eq!(AlgorithmColumn::parse("fp0.9").unwrap(), AlgorithmColumn::Fp(0.9));
        assert_eq!(AlgorithmColumn::parse("fp").unwrap(), AlgorithmColumn::Fp(1.0));
        assert_eq!(AlgorithmColumn::parse("gmres5").unwrap(), AlgorithmColumn::Gmres(5));
        assert_eq!(AlgorithmColumn::parse("bicgstab").unwrap(), AlgorithmColumn::Bicgstab);
        assert!(AlgorithmColumn::parse("sor").is_err());
        assert_eq!(Precond::parse("shift:2.5").unwrap(), Precond::Shift(2.5));
        assert!(Precond::parse("ilu").is_err());
    }

    #[test]
    fn smoke_suite_converges_and_round_trips() {
        let dir = std::env::temp_dir().join("splitprec-bench-smoke");
        let problem = write_smoke_problem(&dir);
        let spec = SuiteSpec {
            problems: vec![problem],
            algorithms: vec![AlgorithmColumn::Fp(1.0), AlgorithmColumn::Gmres(20)],
            preconditioners: vec![Precond::Universal],
            tol: 1e-8,
            max_iter: 30_000,
        };
        let result = run_suite(&spec);
        assert_eq!(result.rows.len(), 1);
        for cell in &result.rows[0].cells {
            match cell {
                CellOutcome::Ran { report, raw_residual } => {
                    assert_eq!(report.status, Status::Converged);
                    assert!(*raw_residual < 1e-4, "raw residual {raw_residual}");
                }
                CellOutcome::Failed(e) => panic!("cell failed: {e}"),
            }
        }
        // Rendered statuses/counts parse back.
        let csv = render_table(&result, TableFormat::Csv);
        let data_line = csv.lines().nth(1).unwrap();
        for field in data_line.split(',').skip(2) {
            let (status, count) = parse_cell(field).unwrap();
            assert_eq!(status, Status::Converged);
            assert!(count.unwrap() > 0);
        }
        // Determinism: an identical rerun is byte-identical in CSV form.
        let again = render_table(&run_suite(&spec), TableFormat::Csv);
        assert_eq!(csv, again);
    }

    #[test]
    fn suite_spec_loading_and_validation() {
        let dir = std::env::temp_dir().join("splitprec-bench-spec");
        let problem = write_smoke_problem(&dir);
        let spec_path = dir.join("suite.json");
        std::fs::write(
            &spec_path,
            format!(
                r#"{{"problems": ["{}"], "preconditioners": ["universal", "shift:2.0"]}}"#,
                problem.file_name().unwrap().to_string_lossy()
            ),
        )
        .unwrap();
        let spec = load_suite_spec(&spec_path).unwrap();
        assert_eq!(spec.algorithms, AlgorithmColumn::standard_set());
        assert_eq!(spec.preconditioners, vec![Precond::Universal, Precond::Shift(2.0)]);
        assert_eq!(spec.tol, 1e-3);

        std::fs::write(&spec_path, r#"{"problems": ["missing.json"]}"#).unwrap();
        assert!(matches!(load_suite_spec(&spec_path), Err(Error::Config(_))));
    }

    #[test]
    fn residual_dump_has_header_and_monotone_column() {
        let report = SolverReport {
            status: Status::Converged,
            iterations: 2,
            operator_evals: 3,
            residual_history: vec![1.0, 0.25, 1e-9],
            wall_time: 0.0,
            outer_iterations: None,
        };
        let dir = std::env::temp_dir().join("splitprec-bench-residuals");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("res.csv");
        dump_residuals(&report, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[0], "iteration,relative_residual");
        let values: Vec<f64> = lines[1..]
            .iter()
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
        assert!(values[2] <= 1e-8);
    }
}
