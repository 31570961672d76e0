//! File emission. Every float is written with 17 significant digits in
//! scientific notation, lines end in `\n`, and nothing time- or
//! host-dependent is written, so identical runs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::continuous::Snapshot;
use crate::error::{Error, Result};
use crate::observables::ObservableSeries;
use crate::potentials::PotentialField;
use crate::spectral::SpectrumResult;
use crate::state::{Domain, Grid1D, Lattice};

/// `{:.16e}`: one leading digit plus 16 decimals.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn table(header: &str, rows: impl Iterator<Item = String>) -> String {
    let mut out = String::with_capacity(4096);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

fn coordinate_label(domain: &Domain, i: usize) -> String {
    match domain {
        Domain::Grid(_) => fmt_f64(domain.coordinate(i)),
        Domain::Lattice(_) => (i + 1).to_string(),
    }
}

/// Two columns `x,V`.
pub fn potential_csv(v: &PotentialField) -> String {
    let d = v.domain();
    table(
        "x,V",
        v.values()
            .iter()
            .enumerate()
            .map(|(i, val)| format!("{},{}", coordinate_label(d, i), fmt_f64(*val))),
    )
}

/// `t,norm,energy` followed by whichever of `overlap` and `arrival_prob`
/// the series carries.
pub fn series_csv(series: &ObservableSeries) -> String {
    let mut header = String::from("t,norm,energy");
    if series.overlap.is_some() {
        header.push_str(",overlap");
    }
    if series.arrival_prob.is_some() {
        header.push_str(",arrival_prob");
    }
    table(
        &header,
        (0..series.len()).map(|k| {
            let mut row = format!(
                "{},{},{}",
                fmt_f64(series.times[k]),
                fmt_f64(series.norm[k]),
                fmt_f64(series.energy[k])
            );
            for col in [&series.overlap, &series.arrival_prob].into_iter().flatten() {
                row.push(',');
                row.push_str(&fmt_f64(col[k]));
            }
            row
        }),
    )
}

/// Continuous snapshot `x,rho,S,V,W`; W is left empty where undefined.
pub fn snapshot_csv(snapshot: &Snapshot, grid: &Grid1D, v: &PotentialField) -> String {
    let dp = &snapshot.density_phase;
    table(
        "x,rho,S,V,W",
        (0..grid.len()).map(|i| {
            let w = snapshot
                .w
                .as_ref()
                .and_then(|w| w.values[i])
                .map(fmt_f64)
                .unwrap_or_default();
            format!(
                "{},{},{},{},{}",
                fmt_f64(grid.x(i)),
                fmt_f64(dp.rho[i]),
                fmt_f64(dp.phase[i]),
                fmt_f64(v.values()[i]),
                w
            )
        }),
    )
}

/// Snapshot file name for time `t`.
pub fn snapshot_file_name(t: f64) -> String {
    format!("t_{t:.6}.csv")
}

/// Long-format space-time density `t,x,rho`.
pub fn density_map_csv(snapshots: &[Snapshot], lattice: &Lattice) -> String {
    let mut out = String::from("t,x,rho\n");
    for snap in snapshots {
        let t = fmt_f64(snap.t);
        for (x, rho) in lattice.labels().zip(&snap.density_phase.rho) {
            let _ = writeln!(out, "{t},{x},{}", fmt_f64(*rho));
        }
    }
    out
}

pub fn spectrum_csv(spec: &SpectrumResult) -> String {
    table(
        "index,eigenvalue",
        spec.eigenvalues
            .iter()
            .enumerate()
            .map(|(i, e)| format!("{i},{}", fmt_f64(*e))),
    )
}

/// `x,amplitude` for a real ground state.
pub fn ground_state_csv(spec: &SpectrumResult) -> String {
    let gs = &spec.ground_state;
    let d = gs.domain();
    table(
        "x,amplitude",
        gs.amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| format!("{},{}", coordinate_label(d, i), fmt_f64(a.re))),
    )
}

/// Parses a two-column `x,V` table (header line required).
pub fn parse_potential_csv(text: &str) -> Result<(Vec<f64>, Vec<f64>)> {
    let field = "custom.potential_file";
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for record in reader.deserialize::<(f64, f64)>() {
        let (x, v) = record.map_err(|e| Error::config(field, e.to_string()))?;
        xs.push(x);
        vs.push(v);
    }
    if xs.is_empty() {
        return Err(Error::config(field, "no data rows"));
    }
    Ok((xs, vs))
}
