//! Pointwise and aggregate error measures on test grids, and tabular reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::networks::{evaluate_batch, FieldModel};
use crate::problems::ProblemSpec;

/// Aggregate errors of a model against the exact solution.
///
/// `e_rms` is `‖e‖₂ / N`; `e_rms_conventional` is `‖e‖₂ / √N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub e_max: f64,
    pub e_rms: f64,
    pub e_rms_conventional: f64,
    pub e_l2rel: f64,
    pub n_test: usize,
}

impl ErrorReport {
    /// Aggregates per-point errors `e = u − u_nn` against exact values `u`.
    pub fn from_errors(errors: &[f64], exact: &[f64]) -> Result<Self> {
        if errors.len() != exact.len() {
            return Err(Error::DimensionMismatch {
                expected: exact.len(),
                got: errors.len(),
            });
        }
        if errors.is_empty() {
            return Err(Error::Config("no test points".into()));
        }
        let n = errors.len() as f64;
        let e2: f64 = errors.iter().map(|e| e * e).sum();
        let u2: f64 = exact.iter().map(|u| u * u).sum();
        if u2 == 0.0 {
            return Err(Error::UndefinedRelativeError);
        }
        let norm = e2.sqrt();
        Ok(ErrorReport {
            e_max: errors.iter().fold(0.0, |m, e| m.max(e.abs())),
            e_rms: norm / n,
            e_rms_conventional: norm / n.sqrt(),
            e_l2rel: norm / u2.sqrt(),
            n_test: errors.len(),
        })
    }
}

/// Exact values and signed errors `u − u_nn` at `points` (row-major).
///
/// Points are assigned to subdomains by level-set sign, so a point exactly on
/// an interface is evaluated on its inside subdomain.
pub fn pointwise_errors(
    model: &dyn FieldModel,
    params: &[f64],
    spec: &ProblemSpec,
    points: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = spec.dim();
    if model.input_dim() != d {
        return Err(Error::Mismatch(format!(
            "{}-dimensional model for a {d}-dimensional problem",
            model.input_dim()
        )));
    }
    if params.len() != model.num_params() {
        return Err(Error::DimensionMismatch {
            expected: model.num_params(),
            got: params.len(),
        });
    }
    if !points.len().is_multiple_of(d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: points.len() % d,
        });
    }
    let n = points.len() / d;
    let mut groups: Vec<(Vec<usize>, Vec<f64>)> =
        vec![(Vec::new(), Vec::new()); spec.n_subdomains()];
    let mut exact = Vec::with_capacity(n);
    for (i, x) in points.chunks_exact(d).enumerate() {
        let sub = spec.domain.subdomain_by_sign(x)?;
        groups[sub].0.push(i);
        groups[sub].1.extend_from_slice(x);
        exact.push(spec.exact(sub, x));
    }
    let mut errors = vec![0.0; n];
    for (sub, (idx, pts)) in groups.iter().enumerate() {
        let pred = evaluate_batch(model, params, pts, sub);
        for (&i, p) in idx.iter().zip(pred) {
            errors[i] = exact[i] - p;
        }
    }
    Ok((exact, errors))
}

/// Errors on the problem's test grid, optionally with `per_axis` nodes per dimension.
pub fn compute_errors(
    model: &dyn FieldModel,
    params: &[f64],
    spec: &ProblemSpec,
    per_axis: Option<usize>,
) -> Result<ErrorReport> {
    let points = spec.grid_points(per_axis);
    let (exact, errors) = pointwise_errors(model, params, spec, &points)?;
    ErrorReport::from_errors(&errors, &exact)
}

/// One line of a comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorRow {
    pub method: String,
    pub problem: String,
    pub kappa: Option<i32>,
    pub report: ErrorReport,
    pub seed: u64,
    pub iterations: usize,
}

pub const ERROR_CSV_HEADER: &str =
    "method,problem,kappa,E_M,E_R,E_R_conventional,E_L,n_test,seed,iterations";

/// CSV with floats in shortest round-trip form.
pub fn error_csv(rows: &[ErrorRow]) -> String {
    let mut out = String::from(ERROR_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let e = &r.report;
        let kappa = r.kappa.map(|k| k.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{:?},{:?},{:?},{:?},{},{},{}",
            r.method,
            r.problem,
            kappa,
            e.e_max,
            e.e_rms,
            e.e_rms_conventional,
            e.e_l2rel,
            e.n_test,
            r.seed,
            r.iterations
        );
    }
    out
}

/// Inverse of [`error_csv`].
pub fn parse_error_csv(text: &str) -> Result<Vec<ErrorRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(ERROR_CSV_HEADER) {
        return Err(Error::Parse("missing error CSV header".into()));
    }
    let bad =
        |line: usize, what: &str| Error::Parse(format!("error CSV line {}: bad {what}", line + 2));
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let f: Vec<&str> = l.split(',').collect();
            if f.len() != 10 {
                return Err(bad(i, "field count"));
            }
            let num = |k: usize, what: &str| f[k].parse::<f64>().map_err(|_| bad(i, what));
            Ok(ErrorRow {
                method: f[0].to_string(),
                problem: f[1].to_string(),
                kappa: match f[2] {
                    "" => None,
                    k => Some(k.parse().map_err(|_| bad(i, "kappa"))?),
                },
                report: ErrorReport {
                    e_max: num(3, "E_M")?,
                    e_rms: num(4, "E_R")?,
                    e_rms_conventional: num(5, "E_R_conventional")?,
                    e_l2rel: num(6, "E_L")?,
                    n_test: f[7].parse().map_err(|_| bad(i, "n_test"))?,
                },
                seed: f[8].parse().map_err(|_| bad(i, "seed"))?,
                iterations: f[9].parse().map_err(|_| bad(i, "iterations"))?,
            })
        })
        .collect()
}

/// Aligned text table: one row per metric (and per `κ` when present), one
/// column per method, in first-appearance order.
pub fn error_table(rows: &[ErrorRow]) -> String {
    let mut methods: Vec<&str> = Vec::new();
    let mut kappas: Vec<Option<i32>> = Vec::new();
    for r in rows {
        if !methods.contains(&r.method.as_str()) {
            methods.push(&r.method);
        }
        if !kappas.contains(&r.kappa) {
            kappas.push(r.kappa);
        }
    }
    let with_kappa = kappas.iter().any(Option::is_some);
    let mut table: Vec<Vec<String>> = Vec::new();
    let mut header = Vec::new();
    if with_kappa {
        header.push("kappa".to_string());
    }
    header.push("metric".to_string());
    header.extend(methods.iter().map(|m| m.to_string()));
    table.push(header);
    type Getter = fn(&ErrorReport) -> f64;
    let metrics: [(&str, Getter); 3] = [
        ("E_M", |e| e.e_max),
        ("E_R", |e| e.e_rms),
        ("E_L", |e| e.e_l2rel),
    ];
    for k in &kappas {
        for (name, get) in metrics {
            let mut line = Vec::new();
            if with_kappa {
                line.push(k.map(|k| k.to_string()).unwrap_or_default());
            }
            line.push(name.to_string());
            for m in &methods {
                let cell = rows
                    .iter()
                    .find(|r| r.method == *m && r.kappa == *k)
                    .map(|r| format!("{:.2e}", get(&r.report)))
                    .unwrap_or_else(|| "-".into());
                line.push(cell);
            }
            table.push(line);
        }
    }
    render(&table)
}

/// Left-aligned columns separated by two spaces.
pub fn render(table: &[Vec<String>]) -> String {
    let cols = table.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| {
            table
                .iter()
                .filter_map(|r| r.get(c))
                .map(|s| s.chars().count())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let mut out = String::new();
    for row in table {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, s)| format!("{s:<w$}", w = widths[c]))
            .collect();
        out.push_str(cells.join("  ").trim_end());
        out.push('\n');
    }
    out
}
