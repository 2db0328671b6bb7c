//! CSV output for runs. Rows follow the ladder and replication order, so
//! identical runs produce identical files.

use super::run::PcrRunResult;
use crate::error::Result;
use std::io::Write;

pub const REPLICATION_HEADER: [&str; 11] =
    ["n", "replication", "eps", "term1", "term2", "term3", "term4", "bound_total", "jn", "gc", "seed"];
pub const SUMMARY_HEADER: [&str; 6] = ["n", "eps_mean", "eps_se", "slope", "ci_lo", "ci_hi"];

/// One row per `(n, replication)` cell. Terms 1–3 and `jn` are per-level
/// values; term 4 and the total use the cell's own statistic deviation.
pub fn write_replications_csv<W: Write>(result: &PcrRunResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REPLICATION_HEADER)?;
    for level in &result.levels {
        for c in &level.cells {
            w.write_record([
                c.n.to_string(),
                c.replication.to_string(),
                c.eps.to_string(),
                level.terms.term1.to_string(),
                level.terms.term2.to_string(),
                level.terms.term3.to_string(),
                c.term4.to_string(),
                c.bound_total.to_string(),
                level.jn.to_string(),
                c.gc.to_string(),
                c.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per ladder point; the slope and interval of the `ε̂_n` fit are
/// repeated on every row (empty when no fit is available).
pub fn write_summary_csv<W: Write>(result: &PcrRunResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_HEADER)?;
    let fit = result.eps_fit.as_ref();
    let cell = |f: Option<f64>| f.map_or_else(String::new, |v| v.to_string());
    for level in &result.levels {
        w.write_record([
            level.n.to_string(),
            level.eps_hat.to_string(),
            level.eps_se.to_string(),
            cell(fit.map(|f| f.slope)),
            cell(fit.map(|f| f.bootstrap_ci90.0)),
            cell(fit.map(|f| f.bootstrap_ci90.1)),
        ])?;
    }
    w.flush()?;
    Ok(())
}
