//! Experiment configuration and the CSV result schema.

use std::fmt::Write as _;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Static,
    Dynamic,
    Range2d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Eval {
    Analytic,
    Stochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum KeyMode {
    /// Key = check-in timestamp as epoch seconds.
    Timestamp,
    /// Key = (round(lat * 10^4), round(lon * 10^4)).
    Location2d,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub n: usize,
    pub b: u32,
    /// Fraction of the dataset one query covers, in (0, 1].
    pub selectivity: f64,
    pub query_count: usize,
    pub seed: u64,
    /// None means synthetic data.
    pub dataset: Option<std::path::PathBuf>,
    pub key_mode: KeyMode,
    pub eval: Eval,
}

impl ExperimentConfig {
    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(
            self.selectivity > 0.0 && self.selectivity <= 1.0,
            "selectivity must be in (0, 1]"
        );
        anyhow::ensure!(self.query_count >= 1, "need at least one query");
        anyhow::ensure!(self.n >= 1, "need at least one record");
        Ok(())
    }
}

/// One CSV row: the measurements of one structure under one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub structure: &'static str,
    pub n: usize,
    pub b: u32,
    pub selectivity: f64,
    pub mean_query_io: Option<f64>,
    pub mean_attempts: Option<f64>,
    pub mean_insert_io: Option<f64>,
    pub mean_delete_io: Option<f64>,
    pub seed: u64,
}

pub const CSV_HEADER: &str =
    "structure,N,B,selectivity,mean_query_io,mean_attempts,mean_insert_io,mean_delete_io,seed";

fn field(v: Option<f64>) -> String {
    // Fixed precision keeps re-runs byte-identical.
    v.map(|x| format!("{x:.4}")).unwrap_or_default()
}

pub fn to_csv(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.structure,
            r.n,
            r.b,
            format_args!("{:.4}", r.selectivity),
            field(r.mean_query_io),
            field(r.mean_attempts),
            field(r.mean_insert_io),
            field(r.mean_delete_io),
            r.seed,
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_leaves_inapplicable_fields_empty() {
        let rows = vec![ResultRow {
            structure: "classical_bptree",
            n: 10,
            b: 4,
            selectivity: 0.05,
            mean_query_io: Some(3.25),
            mean_attempts: None,
            mean_insert_io: None,
            mean_delete_io: None,
            seed: 7,
        }];
        let csv = to_csv(&rows);
        assert!(csv.starts_with(CSV_HEADER));
        assert!(csv.contains("classical_bptree,10,4,0.0500,3.2500,,,,7\n"));
    }
}
