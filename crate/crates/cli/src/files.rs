//! Vector files: header `csvec v1 <len>`, then one value per line.

use std::fmt::Write as _;

use crate::CliError;

pub fn serialize_vector(v: &[f64]) -> String {
    let mut out = format!("csvec v1 {}\n", v.len());
    for x in v {
        writeln!(out, "{x:?}").expect("writing to a String");
    }
    out
}

pub fn parse_vector(text: &str) -> Result<Vec<f64>, CliError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Runtime("vector file is empty".into()))?;
    let len: usize = match header.split_whitespace().collect::<Vec<_>>()[..] {
        ["csvec", "v1", n] => n
            .parse()
            .map_err(|_| CliError::Runtime(format!("line 1: bad length {n:?}")))?,
        _ => return Err(CliError::Runtime(format!("line 1: expected `csvec v1 <len>`, got {header:?}"))),
    };
    let values: Vec<f64> = lines
        .map(|(k, l)| {
            let v: f64 = l
                .trim()
                .parse()
                .map_err(|_| CliError::Runtime(format!("line {}: bad value {:?}", k + 1, l.trim())))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(CliError::Runtime(format!("line {}: non-finite value", k + 1)))
            }
        })
        .collect::<Result<_, _>>()?;
    if values.len() != len {
        return Err(CliError::Runtime(format!(
            "header declares {len} values, found {}",
            values.len()
        )));
    }
    Ok(values)
}
