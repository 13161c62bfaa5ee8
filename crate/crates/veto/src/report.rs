//! Run reports: a JSON report per run, a CSV metric curve for sweeps, and a
//! short human-readable summary for the terminal.

use serde::{Deserialize, Serialize};

use veto_core::metrics::EvalReport;

/// The JSON report written after every run, tagged by task.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "kebab-case")]
pub enum TaskReport {
    Paraphrase {
        rounds: Vec<RoundReport>,
    },
    Refine {
        baseline_bleu: f64,
        refined_bleu: f64,
        bleu_delta: f64,
        eval: EvalReport,
    },
    GenTrainData {
        lines: usize,
        with_constraints: usize,
        without_constraints: usize,
    },
    Sweep {
        /// Which decoding parameter the sweep varied.
        control: String,
        rows: Vec<SweepRow>,
    },
}

/// Metrics for one paraphrase round.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundReport {
    pub round: usize,
    pub eval: EvalReport,
}

/// One sweep measurement. The control value is kept as its display string so
/// special values like "-inf" survive JSON; metric fields are `None` when
/// the run for this value failed or the metric had no inputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: String,
    pub bleu: Option<f64>,
    pub sim_bleu: Option<f64>,
    pub coverage_surface: Option<f64>,
    pub coverage_stem: Option<f64>,
}

/// Formats a control value the way sweep rows store it ("-inf", "0.5", "2").
pub fn format_value(v: f64) -> String {
    format!("{v}")
}

/// Pretty JSON plus a trailing newline, byte-stable for identical reports.
pub fn render_report(report: &TaskReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports hold only finite numbers");
    s.push('\n');
    s
}

/// The sweep curve as CSV, one row per control value, `NaN` for missing
/// metrics.
pub fn render_curve_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("value,bleu,sim_bleu,coverage_surface,coverage_stem\n");
    for row in rows {
        out.push_str(&row.value);
        for metric in [
            row.bleu,
            row.sim_bleu,
            row.coverage_surface,
            row.coverage_stem,
        ] {
            out.push(',');
            match metric {
                Some(v) => out.push_str(&format_value(v)),
                None => out.push_str("NaN"),
            }
        }
        out.push('\n');
    }
    out
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.2}"),
        None => "-".into(),
    }
}

fn eval_line(eval: &EvalReport) -> String {
    format!(
        "BLEU {}  similarity {}  coverage surface {} / stem {} / detok {}",
        fmt_opt(eval.bleu),
        fmt_opt(eval.sim_bleu),
        fmt_opt(eval.coverage_surface),
        fmt_opt(eval.coverage_stem),
        fmt_opt(eval.coverage_detok),
    )
}

/// A short, deterministic terminal summary of the run.
pub fn summarize(report: &TaskReport) -> String {
    let mut out = String::new();
    match report {
        TaskReport::Paraphrase { rounds } => {
            for r in rounds {
                out.push_str(&format!("round {}: {}\n", r.round, eval_line(&r.eval)));
            }
        }
        TaskReport::Refine {
            baseline_bleu,
            refined_bleu,
            bleu_delta,
            eval,
        } => {
            out.push_str(&format!(
                "pass 1 BLEU {baseline_bleu:.2}  pass 2 BLEU {refined_bleu:.2}  delta {bleu_delta:+.2}\n"
            ));
            out.push_str(&format!("pass 2: {}\n", eval_line(eval)));
        }
        TaskReport::GenTrainData {
            lines,
            with_constraints,
            without_constraints,
        } => {
            out.push_str(&format!(
                "wrote {lines} training lines ({with_constraints} with constraints, \
                 {without_constraints} without)\n"
            ));
        }
        TaskReport::Sweep { control, rows } => {
            out.push_str(&format!("sweep over {control}: {} values\n", rows.len()));
            for row in rows {
                out.push_str(&format!(
                    "{control} {}: BLEU {}  similarity {}  coverage surface {} / stem {}\n",
                    row.value,
                    fmt_opt(row.bleu),
                    fmt_opt(row.sim_bleu),
                    fmt_opt(row.coverage_surface),
                    fmt_opt(row.coverage_stem),
                ));
            }
        }
    }
    out
}
