use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::stats::{paired_t_test, TTestReport};
use super::{ExperimentResult, MethodResult};
use crate::combiners::{pair_count, CombinerKind};
use crate::error::{Error, Result};

fn io_err(e: std::io::Error) -> Error {
    Error::Io {
        path: "<report>".into(),
        source: e,
    }
}

/// Report rows: one per kernel, then one per kernel family average.
fn rows(result: &ExperimentResult) -> Vec<(String, Vec<MethodResult>)> {
    let mut out: Vec<(String, Vec<MethodResult>)> = result
        .cells
        .iter()
        .map(|c| (c.kernel.tag(), c.methods.clone()))
        .collect();
    for fam in result.families() {
        out.push((format!("{fam}-mean"), result.family_summary(fam)));
    }
    out
}

fn fmt_f(x: f64) -> String {
    format!("{x:.6}")
}

/// Per-fold and mean accuracy: `row,method,fold_1..fold_k,mean`.
pub fn write_accuracy_csv<W: Write>(out: W, result: &ExperimentResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["row".to_string(), "method".to_string()];
    header.extend((1..=result.outer_k).map(|f| format!("fold_{f}")));
    header.push("mean".into());
    w.write_record(&header)?;
    for (row, methods) in rows(result) {
        for m in methods {
            let mut rec = vec![row.clone(), m.method.name().to_string()];
            rec.extend(m.fold_accuracy.iter().map(|&a| fmt_f(a)));
            rec.push(fmt_f(m.mean_accuracy));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(io_err)
}

/// A proposed combiner tested against a baseline on one report row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub row: String,
    pub proposed: CombinerKind,
    pub baseline: CombinerKind,
    pub proposed_accuracy: f64,
    pub baseline_accuracy: f64,
    pub test: TTestReport,
}

const PROPOSED: [CombinerKind; 4] = [
    CombinerKind::Radag,
    CombinerKind::Se,
    CombinerKind::We,
    CombinerKind::Vcf,
];
const BASELINES: [CombinerKind; 3] = [CombinerKind::MaxWins, CombinerKind::Ddag, CombinerKind::Adag];

/// Paired t-tests of each error-guided combiner against each baseline.
pub fn comparisons(result: &ExperimentResult) -> Result<Vec<Comparison>> {
    let mut out = Vec::new();
    for (row, methods) in rows(result) {
        let find = |k: CombinerKind| methods.iter().find(|m| m.method == k);
        for p in PROPOSED {
            for b in BASELINES {
                if let (Some(pm), Some(bm)) = (find(p), find(b)) {
                    out.push(Comparison {
                        row: row.clone(),
                        proposed: p,
                        baseline: b,
                        proposed_accuracy: pm.mean_accuracy,
                        baseline_accuracy: bm.mean_accuracy,
                        test: paired_t_test(&pm.fold_accuracy, &bm.fold_accuracy)?,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// `row,proposed,baseline,t,df,sig90,sig95,sig99,marker`.
pub fn write_ttest_csv<W: Write>(out: W, result: &ExperimentResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "row", "proposed", "baseline", "t", "df", "sig90", "sig95", "sig99", "marker",
    ])?;
    for c in comparisons(result)? {
        let s = c.test.significant;
        w.write_record([
            c.row.as_str(),
            c.proposed.name(),
            c.baseline.name(),
            &format!("{:.4}", c.test.t),
            &c.test.df.to_string(),
            &s[0].to_string(),
            &s[1].to_string(),
            &s[2].to_string(),
            c.test.marker(),
        ])?;
    }
    w.flush().map_err(io_err)
}

/// Human-readable accuracy tables: all methods per row, then one
/// baseline-versus-proposed table per baseline with significance markers.
pub fn write_accuracy_text<W: Write>(mut out: W, result: &ExperimentResult) -> Result<()> {
    let rows = rows(result);
    let width = rows.iter().map(|(r, _)| r.len()).max().unwrap_or(0).max(6);
    let mut s = String::new();
    let _ = write!(s, "{:<width$}", "kernel");
    for m in &result.methods {
        let _ = write!(s, " {:>9}", m.label());
    }
    s.push('\n');
    for (row, methods) in &rows {
        let _ = write!(s, "{row:<width$}");
        for m in methods {
            let _ = write!(s, " {:>9.2}", 100.0 * m.mean_accuracy);
        }
        s.push('\n');
    }

    let comps = comparisons(result)?;
    for b in BASELINES {
        let props: Vec<CombinerKind> = PROPOSED
            .into_iter()
            .filter(|p| comps.iter().any(|c| c.baseline == b && c.proposed == *p))
            .collect();
        if props.is_empty() {
            continue;
        }
        let _ = write!(s, "\n{:<width$} {:>9}", format!("vs {}", b.label()), b.label());
        for p in &props {
            let _ = write!(s, " {:>12}", p.label());
        }
        s.push('\n');
        for (row, _) in &rows {
            let here: Vec<&Comparison> = comps.iter().filter(|c| &c.row == row && c.baseline == b).collect();
            let Some(first) = here.first() else { continue };
            let _ = write!(s, "{row:<width$} {:>9.2}", 100.0 * first.baseline_accuracy);
            for p in &props {
                if let Some(c) = here.iter().find(|c| c.proposed == *p) {
                    let cell = format!("{:.2}{}", 100.0 * c.proposed_accuracy, c.test.marker());
                    let _ = write!(s, " {cell:>12}");
                }
            }
            s.push('\n');
        }
    }
    out.write_all(s.as_bytes()).map_err(io_err)
}

/// `row,method,mean_ns,sd_ns`. Wall-clock values; not reproducible.
pub fn write_timing_csv<W: Write>(out: W, result: &ExperimentResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "method", "mean_ns", "sd_ns"])?;
    for c in &result.cells {
        for m in &c.methods {
            w.write_record([
                c.kernel.tag().as_str(),
                m.method.name(),
                &format!("{:.0}", m.mean_time_ns),
                &format!("{:.0}", m.sd_time_ns),
            ])?;
        }
    }
    w.flush().map_err(io_err)
}

/// How many classifiers a combiner consults per example.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountGroup {
    /// Exactly `N − 1`.
    NMinusOne,
    /// Strictly between `N − 1` and `N(N − 1)/2`.
    Between,
    /// All `N(N − 1)/2`.
    AllPairs,
}

impl CountGroup {
    pub fn of(mean_evaluations: f64, n: usize) -> CountGroup {
        let lo = n.saturating_sub(1) as f64;
        let hi = pair_count(n) as f64;
        if (mean_evaluations - lo).abs() < 1e-9 {
            CountGroup::NMinusOne
        } else if (mean_evaluations - hi).abs() < 1e-9 {
            CountGroup::AllPairs
        } else {
            CountGroup::Between
        }
    }

    /// The group a combiner structurally belongs to.
    pub fn expected(kind: CombinerKind) -> CountGroup {
        match kind {
            CombinerKind::MaxWins | CombinerKind::Vcf => CountGroup::AllPairs,
            CombinerKind::We => CountGroup::Between,
            _ => CountGroup::NMinusOne,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CountGroup::NMinusOne => "n-1",
            CountGroup::Between => "between",
            CountGroup::AllPairs => "all-pairs",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub method: CombinerKind,
    pub mean_evaluations: f64,
    pub group: CountGroup,
    /// The mean lies where the combiner's structure says it must.
    pub consistent: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountReport {
    pub n_classes: usize,
    pub rows: Vec<CountRow>,
}

/// Mean classifier evaluations per example for each method, over all kernels.
pub fn count_report(result: &ExperimentResult) -> CountReport {
    let n = result.n_classes;
    let (lo, hi) = (n.saturating_sub(1) as f64, pair_count(n) as f64);
    let rows = result
        .methods
        .iter()
        .enumerate()
        .map(|(i, &method)| {
            let mean_evaluations =
                result.cells.iter().map(|c| c.methods[i].mean_evaluations).sum::<f64>() / result.cells.len() as f64;
            let group = CountGroup::of(mean_evaluations, n);
            let consistent = match CountGroup::expected(method) {
                CountGroup::Between => mean_evaluations >= lo - 1e-9 && mean_evaluations <= hi + 1e-9,
                g => g == group || lo == hi,
            };
            CountRow {
                method,
                mean_evaluations,
                group,
                consistent,
            }
        })
        .collect();
    CountReport { n_classes: n, rows }
}

impl CountReport {
    pub fn all_consistent(&self) -> bool {
        self.rows.iter().all(|r| r.consistent)
    }

    /// `method,mean_evaluations,group,consistent`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["method", "mean_evaluations", "group", "consistent"])?;
        for r in &self.rows {
            w.write_record([
                r.method.name(),
                &format!("{:.4}", r.mean_evaluations),
                r.group.name(),
                &r.consistent.to_string(),
            ])?;
        }
        w.flush().map_err(io_err)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups() {
        assert_eq!(CountGroup::of(9.0, 10), CountGroup::NMinusOne);
        assert_eq!(CountGroup::of(45.0, 10), CountGroup::AllPairs);
        assert_eq!(CountGroup::of(20.5, 10), CountGroup::Between);
        assert_eq!(CountGroup::expected(CombinerKind::Radag), CountGroup::NMinusOne);
    }
}
