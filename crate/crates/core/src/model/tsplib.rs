//! Reader for TSPLIB files with `EDGE_WEIGHT_TYPE: EUC_2D` node coordinates.

use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TsplibCoords {
    pub name: String,
    /// Coordinates in file order; TSPLIB's 1-based ids are dropped.
    pub coords: Vec<(f64, f64)>,
}

pub fn parse_tsplib(text: &str) -> Result<TsplibCoords> {
    let mut name = String::new();
    let mut dimension = None;
    let mut coords = Vec::new();
    let mut in_coords = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if in_coords {
            if line == "EOF" || line.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
                in_coords = false;
            } else {
                let f: Vec<&str> = line.split_whitespace().collect();
                if f.len() != 3 {
                    return Err(Error::Parse(format!("bad coordinate line `{line}`")));
                }
                let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}`")));
                coords.push((num(f[1])?, num(f[2])?));
                continue;
            }
        }
        let (key, value) = match line.split_once(':') {
            Some((k, v)) => (k.trim(), v.trim()),
            None => (line, ""),
        };
        match key {
            "NAME" => name = value.to_string(),
            "DIMENSION" => {
                dimension = Some(value.parse::<usize>().map_err(|_| Error::Parse(format!("bad DIMENSION `{value}`")))?)
            }
            "EDGE_WEIGHT_TYPE" if value != "EUC_2D" => {
                return Err(Error::Parse(format!("unsupported EDGE_WEIGHT_TYPE {value}")));
            }
            "NODE_COORD_SECTION" => in_coords = true,
            "EOF" => break,
            _ => {}
        }
    }
    if let Some(d) = dimension {
        if d != coords.len() {
            return Err(Error::Parse(format!("DIMENSION {d} but {} coordinates", coords.len())));
        }
    }
    if coords.is_empty() {
        return Err(Error::Parse("no NODE_COORD_SECTION".into()));
    }
    Ok(TsplibCoords { name, coords })
}

pub fn read_tsplib(path: impl AsRef<Path>) -> Result<TsplibCoords> {
    parse_tsplib(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "NAME : tiny\nCOMMENT : x\nTYPE : TSP\nDIMENSION : 3\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n1 0 0\n2 3 4\n3 6.5 8\nEOF\n";

    #[test]
    fn parses_coordinates() {
        let t = parse_tsplib(SAMPLE).unwrap();
        assert_eq!(t.name, "tiny");
        assert_eq!(t.coords, vec![(0.0, 0.0), (3.0, 4.0), (6.5, 8.0)]);
    }

    #[test]
    fn rejects_other_weight_types() {
        let s = SAMPLE.replace("EUC_2D", "GEO");
        assert!(parse_tsplib(&s).is_err());
    }

    #[test]
    fn dimension_mismatch() {
        let s = SAMPLE.replace("DIMENSION : 3", "DIMENSION : 4");
        assert!(parse_tsplib(&s).is_err());
    }
}
