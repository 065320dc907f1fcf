//! Deterministic TSV report rendering for evaluation and perturbation
//! studies.
//!
//! Evaluation tables have the columns `method  class  ap  mf`; study tables
//! have `method  f  m  std`, with the ground-truth set as the first row.
//! Metrics print with six decimals; the output is byte-stable for identical
//! inputs.

use std::fmt::Write as _;

use crate::boundary::EvalTable;
use crate::perturbation::StudyTable;

/// Class label used for the mean row of an evaluation table. Parentheses
/// keep it out of the space of real class tokens.
pub const MEAN_ROW_LABEL: &str = "(mean)";

/// Renders a dataset evaluation as TSV, one row per class plus a mean row.
pub fn render_eval_table(method_label: &str, table: &EvalTable) -> String {
    let mut out = String::from("method\tclass\tap\tmf\n");
    for class in &table.per_class {
        let _ = writeln!(
            out,
            "{method_label}\t{}\t{:.6}\t{:.6}",
            class.class_label, class.average_precision, class.max_f_score
        );
    }
    let _ = writeln!(
        out,
        "{method_label}\t{MEAN_ROW_LABEL}\t{:.6}\t{:.6}",
        table.mean_average_precision, table.mean_max_f_score
    );
    out
}

/// Renders a perturbation study as TSV: the ground-truth row first, then one
/// row per method set.
pub fn render_study_table(table: &StudyTable) -> String {
    let mut out = String::from("method\tf\tm\tstd\n");
    for row in &table.rows {
        let _ = writeln!(
            out,
            "{}\t{:.6}\t{:.6}\t{:.6}",
            row.set_label, row.baseline_mean, row.decline_mean, row.std_mean
        );
    }
    out
}
