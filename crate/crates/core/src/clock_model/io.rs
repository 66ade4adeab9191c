//! JSON interchange for clock definitions.
//!
//! Complex numbers are `[re, im]` pairs and matrices are arrays of rows. An
//! elementary spec carries `dim`, `hamiltonian`, `jumps[{delta, rate, op}]`,
//! `initial` and optional `labels`. A file with a `blocks` field describes a
//! [`GeneralClockSpec`]; its operators live on the full direct-sum space and
//! its jumps carry no `delta`.
//!
//! [`to_canonical_json`] writes a fixed layout with shortest round-trip float
//! formatting, so `to_canonical_json(parse_spec(s))` reproduces any canonical
//! input byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{ClockSpec, GeneralClockSpec, GeneralJump, JumpTerm, ToleranceConfig};
use crate::error::{Error, Result};
use crate::numerics::matrix::{c, CMatrix};

pub type RawMatrix = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, PartialEq)]
pub enum LoadedSpec {
    Elementary(ClockSpec),
    General(GeneralClockSpec),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJump {
    delta: Option<i32>,
    rate: f64,
    op: RawMatrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    dim: Option<usize>,
    blocks: Option<Vec<usize>>,
    hamiltonian: RawMatrix,
    jumps: Vec<RawJump>,
    initial: Option<RawMatrix>,
    labels: Option<Vec<String>>,
}

fn field_error(location: impl Into<String>, detail: impl Into<String>) -> Error {
    Error::Parse { location: location.into(), detail: detail.into() }
}

/// Converts nested `[re, im]` rows into a matrix, naming `field` on failure.
pub fn matrix_from_raw(raw: &RawMatrix, field: &str) -> Result<CMatrix> {
    let rows = raw.len();
    if rows == 0 {
        return Err(field_error(field, "matrix has no rows"));
    }
    let cols = raw[0].len();
    if cols == 0 {
        return Err(field_error(field, "matrix has an empty row"));
    }
    if let Some(i) = raw.iter().position(|r| r.len() != cols) {
        return Err(field_error(format!("{field}[{i}]"), format!("row has {} entries, expected {cols}", raw[i].len())));
    }
    for (i, row) in raw.iter().enumerate() {
        for (j, z) in row.iter().enumerate() {
            if !z[0].is_finite() || !z[1].is_finite() {
                return Err(field_error(format!("{field}[{i}][{j}]"), "non-finite entry"));
            }
        }
    }
    Ok(CMatrix::from_fn(rows, cols, |i, j| c(raw[i][j][0], raw[i][j][1])))
}

fn expect_square(m: &CMatrix, d: usize, field: &str) -> Result<()> {
    if m.shape() != (d, d) {
        return Err(field_error(field, format!("matrix is {}x{}, expected {d}x{d}", m.nrows(), m.ncols())));
    }
    Ok(())
}

/// Parses a spec from JSON text.
pub fn parse_spec(text: &str) -> Result<LoadedSpec> {
    let raw: RawSpec = serde_json::from_str(text)
        .map_err(|e| field_error(format!("line {}, column {}", e.line(), e.column()), e.to_string()))?;
    for (k, j) in raw.jumps.iter().enumerate() {
        if !j.rate.is_finite() || j.rate < 0.0 {
            return Err(field_error(format!("jumps[{k}].rate"), format!("rate {} must be finite and >= 0", j.rate)));
        }
    }
    match &raw.blocks {
        Some(blocks) => parse_general(&raw, blocks.clone()).map(LoadedSpec::General),
        None => parse_elementary(&raw).map(LoadedSpec::Elementary),
    }
}

fn parse_elementary(raw: &RawSpec) -> Result<ClockSpec> {
    let d = raw.dim.ok_or_else(|| field_error("dim", "missing field (required unless `blocks` is given)"))?;
    if d == 0 {
        return Err(field_error("dim", "must be positive"));
    }
    let hamiltonian = matrix_from_raw(&raw.hamiltonian, "hamiltonian")?;
    expect_square(&hamiltonian, d, "hamiltonian")?;
    let mut jumps = Vec::with_capacity(raw.jumps.len());
    for (k, j) in raw.jumps.iter().enumerate() {
        let delta = j.delta.ok_or_else(|| field_error(format!("jumps[{k}].delta"), "missing field"))?;
        let field = format!("jumps[{k}].op");
        let op = matrix_from_raw(&j.op, &field)?;
        expect_square(&op, d, &field)?;
        jumps.push(JumpTerm::new(delta, j.rate, op));
    }
    let initial_raw = raw.initial.as_ref().ok_or_else(|| field_error("initial", "missing field"))?;
    let initial = matrix_from_raw(initial_raw, "initial")?;
    expect_square(&initial, d, "initial")?;
    let spec = ClockSpec { dim: d, hamiltonian, jumps, initial, labels: raw.labels.clone() };
    let problems = spec.violations(&ToleranceConfig::default());
    if let Some(first) = problems.first() {
        let location = first.split_whitespace().next().unwrap_or("spec").to_string();
        return Err(field_error(location, problems.join("; ")));
    }
    Ok(spec)
}

fn parse_general(raw: &RawSpec, blocks: Vec<usize>) -> Result<GeneralClockSpec> {
    if blocks.is_empty() || blocks.contains(&0) {
        return Err(field_error("blocks", "must be a nonempty list of positive dimensions"));
    }
    let d: usize = blocks.iter().sum();
    if let Some(dim) = raw.dim {
        if dim != d {
            return Err(field_error("dim", format!("{dim} differs from the block total {d}")));
        }
    }
    if raw.labels.is_some() {
        return Err(field_error("labels", "not supported together with `blocks`"));
    }
    let hamiltonian = matrix_from_raw(&raw.hamiltonian, "hamiltonian")?;
    expect_square(&hamiltonian, d, "hamiltonian")?;
    let mut jumps = Vec::with_capacity(raw.jumps.len());
    for (k, j) in raw.jumps.iter().enumerate() {
        if j.delta.is_some() {
            return Err(field_error(
                format!("jumps[{k}].delta"),
                "shifts are implied by the blocks; remove this field",
            ));
        }
        let field = format!("jumps[{k}].op");
        let op = matrix_from_raw(&j.op, &field)?;
        expect_square(&op, d, &field)?;
        jumps.push(GeneralJump { rate: j.rate, op });
    }
    let initial = match &raw.initial {
        Some(m) => {
            let rho = matrix_from_raw(m, "initial")?;
            expect_square(&rho, d, "initial")?;
            Some(rho)
        }
        None => None,
    };
    Ok(GeneralClockSpec { blocks, hamiltonian, jumps, initial })
}

pub fn load_spec(path: impl AsRef<Path>) -> Result<LoadedSpec> {
    let text = std::fs::read_to_string(path)?;
    parse_spec(&text)
}

pub fn save_spec(path: impl AsRef<Path>, spec: &LoadedSpec) -> Result<()> {
    std::fs::write(path, to_canonical_json(spec))?;
    Ok(())
}

fn float(x: f64) -> String {
    serde_json::to_string(&x).expect("finite floats serialize")
}

/// Writes a matrix as indented rows, one row per line.
pub fn write_matrix(out: &mut String, m: &CMatrix, indent: usize) {
    let pad = " ".repeat(indent);
    out.push_str("[\n");
    for i in 0..m.nrows() {
        let entries: Vec<String> =
            (0..m.ncols()).map(|j| format!("[{}, {}]", float(m[(i, j)].re), float(m[(i, j)].im))).collect();
        let sep = if i + 1 < m.nrows() { "," } else { "" };
        let _ = writeln!(out, "{pad}  [{}]{sep}", entries.join(", "));
    }
    let _ = write!(out, "{pad}]");
}

pub fn to_canonical_json(spec: &LoadedSpec) -> String {
    let mut out = String::from("{\n");
    match spec {
        LoadedSpec::Elementary(s) => {
            let _ = writeln!(out, "  \"dim\": {},", s.dim);
            write_body(&mut out, &s.hamiltonian, s.jumps.iter().map(|j| (Some(j.delta), j.rate, &j.op)));
            out.push_str(",\n  \"initial\": ");
            write_matrix(&mut out, &s.initial, 2);
            if let Some(labels) = &s.labels {
                out.push_str(",\n  \"labels\": ");
                let quoted: Vec<String> =
                    labels.iter().map(|l| serde_json::to_string(l).expect("strings serialize")).collect();
                out.push_str(&format!("[{}]", quoted.join(", ")));
            }
        }
        LoadedSpec::General(g) => {
            let blocks: Vec<String> = g.blocks.iter().map(|b| b.to_string()).collect();
            let _ = writeln!(out, "  \"blocks\": [{}],", blocks.join(", "));
            write_body(&mut out, &g.hamiltonian, g.jumps.iter().map(|j| (None, j.rate, &j.op)));
            if let Some(rho) = &g.initial {
                out.push_str(",\n  \"initial\": ");
                write_matrix(&mut out, rho, 2);
            }
        }
    }
    out.push_str("\n}\n");
    out
}

fn write_body<'a>(out: &mut String, h: &CMatrix, jumps: impl Iterator<Item = (Option<i32>, f64, &'a CMatrix)>) {
    out.push_str("  \"hamiltonian\": ");
    write_matrix(out, h, 2);
    out.push_str(",\n  \"jumps\": [");
    let jumps: Vec<_> = jumps.collect();
    for (k, (delta, rate, op)) in jumps.iter().enumerate() {
        out.push_str(if k == 0 { "\n" } else { ",\n" });
        out.push_str("    {\n");
        if let Some(d) = delta {
            let _ = writeln!(out, "      \"delta\": {d},");
        }
        let _ = writeln!(out, "      \"rate\": {},", float(*rate));
        out.push_str("      \"op\": ");
        write_matrix(out, op, 6);
        out.push_str("\n    }");
    }
    if jumps.is_empty() {
        out.push(']');
    } else {
        out.push_str("\n  ]");
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const POISSON: &str = r#"{
  "dim": 1,
  "hamiltonian": [
    [[0.0, 0.0]]
  ],
  "jumps": [
    {
      "delta": 1,
      "rate": 1.0,
      "op": [
        [[1.0, 0.0]]
      ]
    }
  ],
  "initial": [
    [[1.0, 0.0]]
  ]
}
"#;

    #[test]
    fn canonical_poisson_round_trips_bytewise() {
        let spec = parse_spec(POISSON).unwrap();
        assert_eq!(spec, LoadedSpec::Elementary(ClockSpec::poisson(1.0)));
        assert_eq!(to_canonical_json(&spec), POISSON);
    }

    #[test]
    fn negative_rate_is_a_parse_error() {
        let text = POISSON.replace("\"rate\": 1.0", "\"rate\": -1.0");
        match parse_spec(&text) {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "jumps[0].rate"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn syntax_errors_report_line() {
        let text = POISSON.replace("\"dim\": 1,", "\"dim\": 1");
        match parse_spec(&text) {
            Err(Error::Parse { location, .. }) => assert!(location.starts_with("line 3"), "{location}"),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = POISSON.replace("\"dim\": 1,", "\"dim\": 1, \"colour\": 3,");
        assert!(matches!(parse_spec(&text), Err(Error::Parse { .. })));
    }

    #[test]
    fn fixtures_round_trip() {
        for spec in [
            ClockSpec::erlang(3, 1.25),
            ClockSpec::coherent_two_level(0.7, 1.0 / 3.0),
            ClockSpec::branching(1.0, 0.1, 0.01),
        ] {
            let loaded = LoadedSpec::Elementary(spec);
            let text = to_canonical_json(&loaded);
            let back = parse_spec(&text).unwrap();
            assert_eq!(back, loaded);
            assert_eq!(to_canonical_json(&back), text);
        }
    }

    #[test]
    fn general_spec_round_trip() {
        let g = GeneralClockSpec {
            blocks: vec![1, 2],
            hamiltonian: CMatrix::zeros(3, 3),
            jumps: vec![GeneralJump { rate: 0.5, op: crate::numerics::matrix::ket_bra(3, 1, 0) }],
            initial: None,
        };
        let loaded = LoadedSpec::General(g);
        let text = to_canonical_json(&loaded);
        assert_eq!(parse_spec(&text).unwrap(), loaded);
    }
}
