use std::fs;
use std::io::Write;
use std::path::Path;

use wavecirc::circuits::CircuitSpec;
use wavecirc::numfmt::fmt17;

use crate::error::CliError;

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))
}

pub fn read_spec(path: &Path) -> Result<CircuitSpec, CliError> {
    Ok(CircuitSpec::from_json(&read_text(path)?)?)
}

/// Writes to `out`, or to stdout when no file is given.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| CliError::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::usage(format!("cannot write to stdout: {e}")))
        }
    }
}

pub fn json_line(text: String) -> String {
    text + "\n"
}

/// Comma-delimited rows, floats with 17 significant digits.
pub fn csv_text(header: Option<&[&str]>, rows: impl IntoIterator<Item = Vec<f64>>) -> Result<String, CliError> {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let fail = |e: csv::Error| CliError::usage(format!("csv: {e}"));
    if let Some(h) = header {
        w.write_record(h).map_err(fail)?;
    }
    for row in rows {
        w.write_record(row.iter().map(|x| fmt17(*x))).map_err(fail)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::usage(format!("csv: {e}")))?;
    String::from_utf8(bytes).map_err(|e| CliError::usage(format!("csv: {e}")))
}

/// First column of a comma-delimited file. A first row that does not parse
/// as a number is taken as a header.
pub fn read_column(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = read_text(path)?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        let Some(field) = rec.get(0).filter(|f| !f.is_empty()) else {
            continue;
        };
        match field.parse::<f64>() {
            Ok(x) => out.push(x),
            Err(_) if i == 0 => continue,
            Err(_) => {
                return Err(CliError::usage(format!(
                    "{}: line {}: '{field}' is not a number",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}
