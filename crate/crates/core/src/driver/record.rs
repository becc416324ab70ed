use std::io::Write;

use serde::Serialize;

/// One row of the iteration ledger. Values refer to the iterate `x_k` at the
/// start of iteration `k` and to the trial step `s_k` computed there.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub k: usize,
    pub accepted: bool,
    /// Leading 16 hex digits of a SHA-256 over the bit patterns of `x_k`.
    pub x_hash: String,
    pub f: f64,
    pub r: f64,
    pub c_norm: f64,
    pub delta: f64,
    pub beta: f64,
    pub backtracks: usize,
    pub v_norm: f64,
    pub u_norm: f64,
    pub s_norm: f64,
    pub alpha: f64,
    pub tau: f64,
    pub tau_trial: f64,
    pub a_k: f64,
    /// `‖c‖ − ‖c + Js‖`.
    pub lin_gain: f64,
    pub phi_before: f64,
    pub phi_after: f64,
    pub chi: f64,
    pub chi_bar: f64,
    pub stationarity: f64,
    pub complementarity: f64,
    pub normal_qp_iters: usize,
    pub tangential_iters: usize,
    pub tangential_kkt: f64,
    pub tangential_method: String,
    pub active_set: String,
    pub sign_pattern: String,
    /// Seconds since the solve started. Not part of the CSV ledger.
    #[serde(skip_serializing)]
    pub wall_time: f64,
}

/// Writes the ledger as CSV with a fixed column order. Wall time is left out
/// so that identical runs give identical files.
pub fn write_ledger_csv<W: Write>(records: &[IterationRecord], out: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    if records.is_empty() {
        w.write_record(LEDGER_COLUMNS)?;
    }
    w.flush()?;
    Ok(())
}

pub const LEDGER_COLUMNS: &[&str] = &[
    "k",
    "accepted",
    "x_hash",
    "f",
    "r",
    "c_norm",
    "delta",
    "beta",
    "backtracks",
    "v_norm",
    "u_norm",
    "s_norm",
    "alpha",
    "tau",
    "tau_trial",
    "a_k",
    "lin_gain",
    "phi_before",
    "phi_after",
    "chi",
    "chi_bar",
    "stationarity",
    "complementarity",
    "normal_qp_iters",
    "tangential_iters",
    "tangential_kkt",
    "tangential_method",
    "active_set",
    "sign_pattern",
];

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(k: usize) -> IterationRecord {
        IterationRecord {
            k,
            accepted: true,
            x_hash: "00".into(),
            f: 1.0,
            r: 0.0,
            c_norm: 0.5,
            delta: 1.0,
            beta: 1.0,
            backtracks: 0,
            v_norm: 0.1,
            u_norm: 0.2,
            s_norm: 0.3,
            alpha: 10.0,
            tau: 1.0,
            tau_trial: f64::INFINITY,
            a_k: -1.0,
            lin_gain: 0.5,
            phi_before: 1.5,
            phi_after: 1.0,
            chi: 1.0,
            chi_bar: 1.0,
            stationarity: 0.0,
            complementarity: 0.0,
            normal_qp_iters: 1,
            tangential_iters: 2,
            tangential_kkt: 0.0,
            tangential_method: "split_qp".into(),
            active_set: "l:|u:".into(),
            sign_pattern: "+".into(),
            wall_time: k as f64 * 0.123,
        }
    }

    #[test]
    fn header_matches_columns_and_skips_wall_time() {
        let mut buf = Vec::new();
        write_ledger_csv(&[sample(0), sample(1)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header, LEDGER_COLUMNS.join(","));
        assert!(!text.contains("wall_time"));
        assert_eq!(text.lines().count(), 3);
    }

    #[test]
    fn wall_time_does_not_change_bytes() {
        let mut a = sample(3);
        let mut b = sample(3);
        a.wall_time = 1.0;
        b.wall_time = 99.0;
        let (mut ba, mut bb) = (Vec::new(), Vec::new());
        write_ledger_csv(&[a], &mut ba).unwrap();
        write_ledger_csv(&[b], &mut bb).unwrap();
        assert_eq!(ba, bb);
    }

    #[test]
    fn empty_ledger_still_has_header() {
        let mut buf = Vec::new();
        write_ledger_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim_end(),
            LEDGER_COLUMNS.join(",")
        );
    }
}
