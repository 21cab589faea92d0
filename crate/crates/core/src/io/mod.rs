//! Text formats: datasets, optimization traces, key=value configs,
//! diagnostic tables and SVG plots.

mod dataset;
mod keyvalue;
mod svg;
mod table;
mod trace;

pub use dataset::{load_dataset, parse_dataset, write_csv, DataFormat, LoadOptions, MAX_ENTRIES};
pub use keyvalue::parse_key_values;
pub use svg::{render_log_plot, Series};
pub use table::{parse_table, Table};
pub use trace::{parse_trace, write_trace, TraceFile};

/// Shortest decimal text that parses back to exactly `v`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}
