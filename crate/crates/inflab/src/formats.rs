//! On-disk formats: grid functions as CSV, witnesses and decay summaries as
//! JSON, decay rows as CSV.

use std::io::{Read, Write};
use std::sync::Arc;

use inflab_core::geometry::{UniformConditionParams, UniformConditionWitness};
use inflab_core::grid::{CellClass, DomainMask, GridFunction};
use inflab_core::regularity::DecayReport;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, LabResult};

fn csv_err(what: &'static str) -> impl Fn(csv::Error) -> LabError {
    move |e| LabError::Format { what, message: e.to_string() }
}

fn class_name(c: CellClass) -> &'static str {
    match c {
        CellClass::Inside => "INSIDE",
        CellClass::Boundary => "BOUNDARY",
        CellClass::Outside => "OUTSIDE",
    }
}

/// Valued cells ordered with the first axis slowest.
fn row_major(mask: &DomainMask) -> Vec<usize> {
    let spec = mask.spec();
    let mut cells: Vec<usize> = mask.valued_cells().collect();
    cells.sort_by_key(|&i| {
        let c = spec.cell(i);
        (c[0], c[1], c[2])
    });
    cells
}

/// Writes `i,j[,k],x1,x2[,x3],class,value` rows for INSIDE and BOUNDARY
/// cells, reals with 17 significant digits.
pub fn write_grid_csv<W: Write>(f: &GridFunction, out: W) -> LabResult<()> {
    let mask = f.mask();
    let spec = mask.spec();
    let dim = spec.dim();
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = ["i", "j", "k"][..dim].iter().map(|s| s.to_string()).collect();
    header.extend((1..=dim).map(|a| format!("x{a}")));
    header.push("class".into());
    header.push("value".into());
    w.write_record(&header).map_err(csv_err("grid csv"))?;
    let mut rec = Vec::with_capacity(header.len());
    for idx in row_major(mask) {
        rec.clear();
        let cell = spec.cell(idx);
        let x = spec.center(idx);
        rec.extend(cell[..dim].iter().map(|c| c.to_string()));
        rec.extend(x[..dim].iter().map(|v| format!("{v:.16e}")));
        rec.push(class_name(mask.class(idx)).to_string());
        rec.push(format!("{:.16e}", f.value(idx)));
        w.write_record(&rec).map_err(csv_err("grid csv"))?;
    }
    w.flush().map_err(|e| LabError::Format { what: "grid csv", message: e.to_string() })?;
    Ok(())
}

/// Reads values written by [`write_grid_csv`] back onto `mask`; every
/// valued cell must appear with a matching class.
pub fn read_grid_csv<R: Read>(mask: &Arc<DomainMask>, input: R) -> LabResult<GridFunction> {
    let spec = mask.spec();
    let dim = spec.dim();
    let bad = |message: String| LabError::Format { what: "grid csv", message };
    let mut r = csv::Reader::from_reader(input);
    let mut values = vec![0.0; spec.len()];
    let mut seen = vec![false; spec.len()];
    for rec in r.records() {
        let rec = rec.map_err(csv_err("grid csv"))?;
        if rec.len() != 2 * dim + 2 {
            return Err(bad(format!("expected {} fields, found {}", 2 * dim + 2, rec.len())));
        }
        let mut cell = [0usize; 3];
        for a in 0..dim {
            cell[a] = rec[a].parse().map_err(|e| bad(format!("{e}")))?;
            if cell[a] >= spec.extent()[a] {
                return Err(bad(format!("cell index {} out of range", cell[a])));
            }
        }
        let idx = spec.index(&cell[..dim]);
        if rec[2 * dim] != *class_name(mask.class(idx)) {
            return Err(bad(format!("class mismatch at cell {:?}", &cell[..dim])));
        }
        values[idx] = rec[2 * dim + 1].parse().map_err(|e| bad(format!("{e}")))?;
        seen[idx] = true;
    }
    if let Some(idx) = mask.valued_cells().find(|&i| !seen[i]) {
        return Err(bad(format!("missing cell {:?}", &spec.cell(idx)[..dim])));
    }
    Ok(GridFunction::from_values(mask, values)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessJson {
    pub x0: Vec<f64>,
    pub tau1: f64,
    pub tau2: f64,
    pub nu: f64,
    pub radii: Vec<f64>,
    pub cap_centers: Vec<Vec<f64>>,
}

impl From<&UniformConditionWitness> for WitnessJson {
    fn from(w: &UniformConditionWitness) -> Self {
        let p = w.params();
        WitnessJson {
            x0: w.x0().to_vec(),
            tau1: p.tau1,
            tau2: p.tau2,
            nu: p.nu,
            radii: w.radii().to_vec(),
            cap_centers: w.cap_centers().to_vec(),
        }
    }
}

impl WitnessJson {
    /// Rebuilds the witness, re-checking its invariants.
    pub fn to_witness(&self) -> LabResult<UniformConditionWitness> {
        let params = UniformConditionParams::new(self.tau1, self.tau2, self.nu)?;
        Ok(UniformConditionWitness::new(self.x0.clone(), params, self.radii.clone(), self.cap_centers.clone())?)
    }
}

pub fn witness_to_json(w: &UniformConditionWitness) -> String {
    serde_json::to_string_pretty(&WitnessJson::from(w)).expect("witness serializes")
}

pub fn witness_from_json(text: &str) -> LabResult<UniformConditionWitness> {
    let raw: WitnessJson =
        serde_json::from_str(text).map_err(|e| LabError::Format { what: "witness json", message: e.to_string() })?;
    raw.to_witness()
}

/// `k,r_k,sup_k,bound_k,pass`; scales below resolution leave `sup_k` empty
/// and report `UNRESOLVED`.
pub fn write_decay_csv<W: Write>(report: &DecayReport, out: W) -> LabResult<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["k", "r_k", "sup_k", "bound_k", "pass"]).map_err(csv_err("decay csv"))?;
    for row in &report.rows {
        let (sup, pass) = match (row.resolved, row.pass) {
            (false, _) => (String::new(), "UNRESOLVED"),
            (true, true) => (format!("{:.16e}", row.sup_k), "PASS"),
            (true, false) => (format!("{:.16e}", row.sup_k), "FAIL"),
        };
        w.write_record([row.k.to_string(), format!("{:.16e}", row.r_k), sup, format!("{:.16e}", row.bound_k), pass.into()])
            .map_err(csv_err("decay csv"))?;
    }
    w.flush().map_err(|e| LabError::Format { what: "decay csv", message: e.to_string() })?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySummary {
    pub beta: f64,
    #[serde(rename = "M")]
    pub m: f64,
    pub mu: f64,
    pub overall_pass: bool,
    pub solver_tol: f64,
    pub resolved_scales: usize,
    pub final_points: usize,
    pub final_failures: usize,
    /// Largest `|u(x) - g0| / (8 M |x|^beta)` over the final check.
    pub worst_final_ratio: f64,
}

impl From<&DecayReport> for DecaySummary {
    fn from(r: &DecayReport) -> Self {
        DecaySummary {
            beta: r.beta,
            m: r.m,
            mu: r.mu,
            overall_pass: r.overall_pass,
            solver_tol: r.solver_tol,
            resolved_scales: r.rows.iter().filter(|row| row.resolved).count(),
            final_points: r.final_rows.len(),
            final_failures: r.final_rows.iter().filter(|row| !row.pass).count(),
            worst_final_ratio: r.worst_final_ratio(),
        }
    }
}

pub fn decay_summary_json(report: &DecayReport) -> String {
    serde_json::to_string_pretty(&DecaySummary::from(report)).expect("summary serializes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use inflab_core::domain::Ball;
    use inflab_core::geometry::axis_witness;
    use inflab_core::grid::{rasterize_domain, GridSpec};

    fn mask(dim: usize, h: f64) -> Arc<DomainMask> {
        let spec = GridSpec::centered(dim, h, &vec![0.0; dim], 1.0, 1).unwrap();
        Arc::new(rasterize_domain(Arc::new(Ball::unit(dim)), spec, 1).unwrap())
    }

    #[test]
    fn grid_csv_header_and_order() {
        let m = mask(2, 0.25);
        let f = GridFunction::from_fn(&m, |x| x[0] - 2.0 * x[1]);
        let mut buf = Vec::new();
        write_grid_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("i,j,x1,x2,class,value"));
        let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
        assert_eq!(rows.len(), m.inside().len() + m.boundary().len());
        let keys: Vec<(usize, usize)> = rows.iter().map(|r| (r[0].parse().unwrap(), r[1].parse().unwrap())).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert!(rows.iter().all(|r| r[4] == "INSIDE" || r[4] == "BOUNDARY"));
        // 17 significant digits: one leading digit and sixteen after the point
        let mantissa = rows[0][5].split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.len(), 18);
    }

    #[test]
    fn grid_csv_round_trips_bitwise() {
        for dim in [2, 3] {
            let m = mask(dim, 0.25);
            let f = GridFunction::from_fn(&m, |x| (x[0] * 1e3).sin() / 7.0 + x[1] * 1e-300);
            let mut buf = Vec::new();
            write_grid_csv(&f, &mut buf).unwrap();
            let g = read_grid_csv(&m, buf.as_slice()).unwrap();
            for i in m.valued_cells() {
                assert_eq!(f.value(i).to_bits(), g.value(i).to_bits());
            }
        }
    }

    #[test]
    fn grid_csv_rejects_truncated_input() {
        let m = mask(2, 0.25);
        let f = GridFunction::constant(&m, 1.0);
        let mut buf = Vec::new();
        write_grid_csv(&f, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(read_grid_csv(&m, cut.as_bytes()).is_err());
    }

    #[test]
    fn witness_json_round_trip() {
        let params = UniformConditionParams::new(0.4, 0.6, 0.3).unwrap();
        let w = axis_witness(2, params, 0.5, 4).unwrap();
        let text = witness_to_json(&w);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        for key in ["x0", "tau1", "tau2", "nu", "radii", "cap_centers"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let back = witness_from_json(&text).unwrap();
        assert_eq!(back.radii(), w.radii());
        assert_eq!(back.cap_centers(), w.cap_centers());
    }

    #[test]
    fn witness_json_rechecks_invariants() {
        let params = UniformConditionParams::new(0.4, 0.6, 0.3).unwrap();
        let w = axis_witness(2, params, 0.5, 4).unwrap();
        let mut raw = WitnessJson::from(&w);
        raw.radii[2] = raw.radii[1] * 0.9;
        assert!(raw.to_witness().is_err());
    }
}
