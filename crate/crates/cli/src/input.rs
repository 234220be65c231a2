//! CSV input with header `group,value`; groups keep their order of first
//! appearance.

use std::io::Read;
use std::path::Path;

use permutest::GroupedSample;

use crate::{CliError, CliResult};

pub fn read_csv<R: Read>(reader: R) -> CliResult<GroupedSample> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers().map_err(|e| CliError::Parse(e.to_string()))?;
    if headers.len() != 2 || &headers[0] != "group" || &headers[1] != "value" {
        return Err(CliError::Parse(format!("expected header `group,value`, found `{}`", headers.iter().collect::<Vec<_>>().join(","))));
    }
    let mut names: Vec<String> = Vec::new();
    let mut groups: Vec<Vec<f64>> = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| CliError::Parse(format!("line {line}: {e}")))?;
        let value: f64 = row[1]
            .parse()
            .map_err(|_| CliError::Parse(format!("line {line}: `{}` is not a number", &row[1])))?;
        if !value.is_finite() {
            return Err(CliError::Parse(format!("line {line}: value must be finite")));
        }
        match names.iter().position(|n| n == &row[0]) {
            Some(g) => groups[g].push(value),
            None => {
                names.push(row[0].to_string());
                groups.push(vec![value]);
            }
        }
    }
    if groups.len() < 2 {
        return Err(CliError::Config(format!("need at least two groups, found {}", groups.len())));
    }
    Ok(GroupedSample::from_groups(&groups)?)
}

pub fn read_csv_file(path: &Path) -> CliResult<GroupedSample> {
    let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
    read_csv(file)
}
