//! CSV traces. Floats carry 12 significant digits.

use std::io::Write;
use std::path::Path;

use forge_core::{IterationRecord, RunSummary};

use crate::error::{CliError, Result};

pub const TRACE_HEADER: &str =
    "iter,energy,eps_E,infidelity,max_gradient,circuit_id,generator_id,cnot_max,cnot_per_circuit,wall_ms";
pub const SUMMARY_HEADER: &str = "cuts,N_q,N_it,eps_E,I_conv,r";

/// `x` with 12 significant digits.
pub fn sig12(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

fn opt(x: Option<usize>) -> String {
    x.map_or_else(String::new, |v| v.to_string())
}

fn per_circuit(v: &[(usize, u64)]) -> String {
    v.iter().map(|(c, n)| format!("{c}:{n}")).collect::<Vec<_>>().join(";")
}

pub fn trace_row(r: &IterationRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},\"{}\",{}",
        r.iter,
        sig12(r.energy),
        sig12(r.eps_e),
        sig12(r.infidelity),
        sig12(r.max_gradient),
        opt(r.circuit_id),
        opt(r.generator_id),
        r.cnot_max,
        per_circuit(&r.cnot_per_circuit),
        sig12(r.wall_ms)
    )
}

pub fn trace_string(records: &[IterationRecord]) -> String {
    let mut s = String::from(TRACE_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&trace_row(r));
        s.push('\n');
    }
    s
}

pub fn emit_trace(records: &[IterationRecord], path: &Path) -> Result<()> {
    if records.is_empty() {
        return Err(CliError::Trace("no records to write".into()));
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(trace_string(records).as_bytes())?;
    f.flush()?;
    Ok(())
}

fn field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str) -> Result<T> {
    rec.get(i)
        .ok_or_else(|| CliError::Trace(format!("missing {name}")))?
        .parse()
        .map_err(|_| CliError::Trace(format!("bad {name}: {:?}", rec.get(i))))
}

fn opt_field(rec: &csv::StringRecord, i: usize, name: &str) -> Result<Option<usize>> {
    match rec.get(i) {
        Some("") => Ok(None),
        _ => field(rec, i, name).map(Some),
    }
}

/// Reads a trace written by [`emit_trace`].
pub fn parse_trace(text: &str) -> Result<Vec<IterationRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.join(",") != TRACE_HEADER {
        return Err(CliError::Trace(format!("unexpected header {header:?}")));
    }
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        let cnots = row.get(8).unwrap_or_default();
        let cnot_per_circuit = if cnots.is_empty() {
            Vec::new()
        } else {
            cnots
                .split(';')
                .map(|p| {
                    let (c, n) = p
                        .split_once(':')
                        .ok_or_else(|| CliError::Trace(format!("bad pair {p}")))?;
                    Ok((
                        c.parse().map_err(|_| CliError::Trace(format!("bad circuit id {c}")))?,
                        n.parse().map_err(|_| CliError::Trace(format!("bad count {n}")))?,
                    ))
                })
                .collect::<Result<Vec<_>>>()?
        };
        out.push(IterationRecord {
            iter: field(&row, 0, "iter")?,
            energy: field(&row, 1, "energy")?,
            eps_e: field(&row, 2, "eps_E")?,
            infidelity: field(&row, 3, "infidelity")?,
            max_gradient: field(&row, 4, "max_gradient")?,
            circuit_id: opt_field(&row, 5, "circuit_id")?,
            generator_id: opt_field(&row, 6, "generator_id")?,
            cnot_max: field(&row, 7, "cnot_max")?,
            cnot_per_circuit,
            wall_ms: field(&row, 9, "wall_ms")?,
        });
    }
    Ok(out)
}

pub fn summary_row(s: &RunSummary) -> String {
    format!(
        "{},{},{},{},{},{}",
        s.cuts,
        s.n_q,
        s.n_it,
        sig12(s.eps_e),
        sig12(s.i_conv),
        sig12(s.r)
    )
}

/// One-line human summary with the same columns.
pub fn summary_line(s: &RunSummary) -> String {
    format!(
        "cuts={} N_q={} N_it={} eps_E={:.3e} I_conv={:.3e} r={:.3}",
        s.cuts, s.n_q, s.n_it, s.eps_e, s.i_conv, s.r
    )
}

pub fn emit_summary(s: &RunSummary, path: &Path) -> Result<()> {
    std::fs::write(path, format!("{SUMMARY_HEADER}\n{}\n", summary_row(s)))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(iter: usize) -> IterationRecord {
        IterationRecord {
            iter,
            energy: -3.5083463936123,
            eps_e: 1.874e-2,
            infidelity: 1.878e-2,
            max_gradient: 9.58e-7,
            circuit_id: (iter > 0).then_some(1),
            generator_id: (iter > 0).then_some(6),
            cnot_max: 40,
            cnot_per_circuit: vec![(0, 40), (1, 16)],
            wall_ms: 0.0,
        }
    }

    #[test]
    fn one_record_two_lines() {
        let s = trace_string(&[rec(0)]);
        assert_eq!(s.lines().count(), 2);
        assert!(s.lines().nth(1).unwrap().contains("\"0:40;1:16\""));
    }

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(sig12(-3.5083463936123), "-3.50834639361e0");
        assert_eq!(sig12(0.0), "0.00000000000e0");
    }

    #[test]
    fn empty_records_rejected() {
        let dir = std::env::temp_dir().join("forge-cli-empty-trace.csv");
        assert!(emit_trace(&[], &dir).is_err());
    }

    #[test]
    fn header_checked_on_parse() {
        assert!(parse_trace("a,b\n1,2\n").is_err());
    }
}
