//! Plain-text table output and the readers that parse it back.
//!
//! Every numeric table is CSV with a header row, LF line endings, and floats
//! printed with 17 significant digits so that values round-trip through text
//! exactly. Unit lists are written 1-based inside one quoted field, matching
//! the `--units` flag syntax.
//!
//! Each writer has a matching reader. The readers exist so scripts (and the
//! integration tests) can consume the files without guessing the format; any
//! deviation between writer and reader is a bug.

use std::num::ParseFloatError;

/// Formats a float with 17 significant digits, enough to round-trip `f64`.
pub fn fmt_float(value: f64) -> String {
    format!("{value:.16e}")
}

/// Joins 1-based unit indices into the quoted CSV field syntax.
pub fn fmt_units(units_one_based: &[usize]) -> String {
    let joined = units_one_based
        .iter()
        .map(|u| u.to_string())
        .collect::<Vec<_>>()
        .join(",");
    format!("\"{joined}\"")
}

/// Splits a comma-separated list of 1-based unit indices.
pub fn parse_units(field: &str) -> Result<Vec<usize>, String> {
    let trimmed = field.trim().trim_matches('"');
    if trimmed.is_empty() {
        return Err("empty unit list".to_string());
    }
    trimmed
        .split(',')
        .map(|token| {
            let unit: usize = token
                .trim()
                .parse()
                .map_err(|_| format!("bad unit index '{token}'"))?;
            if unit == 0 {
                return Err("unit indices are 1-based; 0 is not a unit".to_string());
            }
            Ok(unit)
        })
        .collect()
}

/// Splits a comma-separated list of positive exponents.
pub fn parse_powers(field: &str) -> Result<Vec<u32>, String> {
    let trimmed = field.trim();
    if trimmed.is_empty() {
        return Err("empty power list".to_string());
    }
    trimmed
        .split(',')
        .map(|token| {
            token
                .trim()
                .parse::<u32>()
                .map_err(|_| format!("bad power '{token}'"))
        })
        .collect()
}

/// Splits a comma-separated list of population sizes.
pub fn parse_sizes(field: &str) -> Result<Vec<usize>, String> {
    let trimmed = field.trim();
    if trimmed.is_empty() {
        return Err("empty size list".to_string());
    }
    trimmed
        .split(',')
        .map(|token| {
            token
                .trim()
                .parse::<usize>()
                .map_err(|_| format!("bad population size '{token}'"))
        })
        .collect()
}

fn parse_float(field: &str) -> Result<f64, ParseFloatError> {
    field.trim().parse::<f64>()
}

/// Splits one CSV line, honouring double quotes around the first field only.
///
/// The formats here never quote numeric fields and never embed quotes, so a
/// full CSV state machine is not needed.
pub fn split_line(line: &str) -> Vec<String> {
    if let Some(rest) = line.strip_prefix('"') {
        if let Some(end) = rest.find('"') {
            let mut fields = vec![rest[..end].to_string()];
            let tail = &rest[end + 1..];
            if let Some(tail) = tail.strip_prefix(',') {
                fields.extend(tail.split(',').map(str::to_string));
            }
            return fields;
        }
    }
    line.split(',').map(str::to_string).collect()
}

/// One parsed row of a units-and-values table (`exact-pi`, `approx-pi`).
#[derive(Debug, Clone, PartialEq)]
pub struct UnitsRow {
    pub units_one_based: Vec<usize>,
    pub values: Vec<Option<f64>>,
    pub label: String,
}

/// Parses a table whose rows are `"units",<floats...>,<label>`.
pub fn read_units_table(content: &str, header: &str) -> Result<Vec<UnitsRow>, String> {
    let mut lines = content.lines();
    let first = lines.next().ok_or("empty file")?;
    if first != header {
        return Err(format!("expected header '{header}', found '{first}'"));
    }
    let columns = header.split(',').count();
    let mut rows = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields = split_line(line);
        if fields.len() != columns {
            return Err(format!("row '{line}' has {} fields, expected {columns}", fields.len()));
        }
        let units_one_based = parse_units(&fields[0])?;
        let mut values = Vec::new();
        for field in &fields[1..columns - 1] {
            if field.is_empty() {
                values.push(None);
            } else {
                values.push(Some(
                    parse_float(field).map_err(|e| format!("bad float '{field}': {e}"))?,
                ));
            }
        }
        rows.push(UnitsRow {
            units_one_based,
            values,
            label: fields[columns - 1].clone(),
        });
    }
    Ok(rows)
}

/// A parsed numeric table: header names plus rows of optional floats.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// Trailing `name,value` summary lines after the numeric rows.
    pub footers: Vec<(String, f64)>,
}

/// Parses a table of float columns with optional `name,value` footer lines.
pub fn read_numeric_table(content: &str) -> Result<NumericTable, String> {
    let mut lines = content.lines();
    let header = lines.next().ok_or("empty file")?;
    let columns: Vec<String> = header.split(',').map(str::to_string).collect();
    let mut rows = Vec::new();
    let mut footers = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() == columns.len() {
            let row: Result<Vec<f64>, _> = fields.iter().map(|f| parse_float(f)).collect();
            match row {
                Ok(row) => {
                    if !footers.is_empty() {
                        return Err(format!("numeric row '{line}' after a footer line"));
                    }
                    rows.push(row);
                    continue;
                }
                Err(_) if fields.len() == 2 => {}
                Err(e) => return Err(format!("bad row '{line}': {e}")),
            }
        }
        if fields.len() == 2 {
            let value =
                parse_float(fields[1]).map_err(|e| format!("bad footer '{line}': {e}"))?;
            footers.push((fields[0].to_string(), value));
        } else {
            return Err(format!(
                "row '{line}' has {} fields, expected {}",
                fields.len(),
                columns.len()
            ));
        }
    }
    Ok(NumericTable {
        columns,
        rows,
        footers,
    })
}

/// Parses `sample` output: one line of comma-separated 1-based units per draw.
pub fn read_sample_lines(content: &str) -> Result<Vec<Vec<usize>>, String> {
    content
        .lines()
        .filter(|line| !line.is_empty())
        .map(parse_units)
        .collect()
}
