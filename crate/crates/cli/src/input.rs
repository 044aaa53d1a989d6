//! Reading observations from `id,y,sigma` CSV files or earlier JSON reports.

use std::path::Path;

use rankgauge::{Item, Observations};
use serde::Deserialize;

use crate::report::RanksReport;
use crate::CliError;

#[derive(Debug, Deserialize)]
struct Row {
    id: String,
    y: f64,
    sigma: f64,
}

/// Parses CSV text with the header `id,y,sigma`.
pub fn parse_csv(text: &str) -> Result<Vec<Item>, CliError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CliError::Input(e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["id", "y", "sigma"] {
        return Err(CliError::Input(format!(
            "expected header `id,y,sigma`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    reader
        .deserialize::<Row>()
        .map(|row| {
            row.map(|r| Item::new(r.id, r.y, r.sigma))
                .map_err(|e| CliError::Input(e.to_string()))
        })
        .collect()
}

/// Loads observations from a CSV file, or from the `items` of a JSON
/// report written by `rankgauge ranks --out json`.
pub fn read_observations(path: &Path) -> Result<Observations, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let items = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        let report: RanksReport =
            serde_json::from_str(&text).map_err(|e| CliError::Input(e.to_string()))?;
        report
            .items
            .into_iter()
            .map(|i| Item::new(i.id, i.y, i.sigma))
            .collect()
    } else {
        parse_csv(&text)?
    };
    Ok(Observations::new(items)?)
}
