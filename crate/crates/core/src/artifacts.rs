//! CSV and JSON output files, and reading a potential back for verification.
//!
//! Floats are written with 17 significant digits so the decimal text
//! round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::characteristics::Trajectory;
use crate::error::{Error, Result};
use crate::params::Species;
use crate::quadrature::RadialGrid;
use crate::steady_state::{StateKind, SteadyState};
use crate::verification::VerificationReport;

pub const POTENTIAL_CSV: &str = "potential.csv";
pub const DENSITY_CSV: &str = "density.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const REPORT_JSON: &str = "report.json";
pub const TRAJECTORIES_CSV: &str = "trajectories.csv";

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_table(path: &Path, header: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(fmt).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn write_potential_csv(path: &Path, state: &SteadyState) -> Result<()> {
    let s = state.solution();
    write_table(
        path,
        "r,phi,dphi,d2phi",
        (0..s.grid.len()).map(|i| vec![s.grid.node(i), s.phi[i], s.dphi[i], s.d2phi[i]]),
    )
}

pub fn write_density_csv(path: &Path, state: &SteadyState) -> Result<()> {
    let s = state.solution();
    write_table(
        path,
        "r,rho_minus,rho_plus,net",
        (0..s.grid.len()).map(|i| {
            vec![
                s.grid.node(i),
                s.rho_minus[i],
                s.rho_plus[i],
                s.rho_plus[i] - s.rho_minus[i],
            ]
        }),
    )
}

/// Potential samples read back from `potential.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSamples {
    pub grid: RadialGrid,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub d2phi: Vec<f64>,
}

pub fn read_potential_csv(path: &Path) -> Result<PotentialSamples> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or("");
    if header.trim() != "r,phi,dphi,d2phi" {
        return Err(Error::Config(format!(
            "{}: unexpected header `{header}`",
            path.display()
        )));
    }
    let mut cols: [Vec<f64>; 4] = Default::default();
    for (i, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let vals: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::Config(format!("{}: bad number on row {}", path.display(), i + 2)))?;
        if vals.len() != 4 {
            return Err(Error::Config(format!(
                "{}: row {} needs 4 columns",
                path.display(),
                i + 2
            )));
        }
        for (c, v) in cols.iter_mut().zip(vals) {
            c.push(v);
        }
    }
    let [r, phi, dphi, d2phi] = cols;
    if r.len() < 3 || r[0] != 0.0 {
        return Err(Error::Config(format!(
            "{}: grid must start at r = 0 with >= 3 nodes",
            path.display()
        )));
    }
    let grid = RadialGrid::new(r[r.len() - 1], r.len() - 1)?;
    let h = grid.step();
    if r.iter().enumerate().any(|(i, &x)| (x - grid.node(i)).abs() > 1e-9 * h) {
        return Err(Error::Config(format!("{}: grid is not uniform", path.display())));
    }
    Ok(PotentialSamples { grid, phi, dphi, d2phi })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub kind: StateKind,
    pub c0: Option<f64>,
    pub e0: Option<f64>,
    pub radius: Option<f64>,
    pub growth_slope: Option<f64>,
    pub iterations: usize,
    pub history: Vec<f64>,
    pub charge_minus: f64,
    pub charge_plus: f64,
    pub net_charge: f64,
    pub charge_finite: bool,
    pub support_position: Option<f64>,
    pub support_velocity: Option<f64>,
    pub constant_density: bool,
    pub witness_r0: [Option<f64>; 2],
}

impl Summary {
    pub fn of(state: &SteadyState) -> Self {
        let k = state.confinement();
        let sol = state.solution();
        let support = state.support();
        let witness = |s: Species| {
            if state.kind() == StateKind::SelfConsistent {
                state.positivity_witness(s).ok().map(|w| w.r0)
            } else {
                None
            }
        };
        Self {
            kind: state.kind(),
            c0: k.map(|k| k.c0),
            e0: k.map(|k| k.e0),
            radius: k.map(|k| k.radius),
            growth_slope: k.map(|k| k.c_star),
            iterations: sol.iterations,
            history: sol.history.clone(),
            charge_minus: state.total_charge(Species::Minus),
            charge_plus: state.total_charge(Species::Plus),
            net_charge: state.net_charge(),
            charge_finite: state.charge_is_finite(),
            support_position: support.position,
            support_velocity: support.velocity,
            constant_density: state.kind() == StateKind::AngularOnly,
            witness_r0: [witness(Species::Minus), witness(Species::Plus)],
        }
    }
}

pub fn write_summary_json(path: &Path, summary: &Summary) -> Result<()> {
    let text = serde_json::to_string_pretty(summary).map_err(|e| Error::Config(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(())
}

pub fn read_summary_json(path: &Path) -> Result<Summary> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn write_report_json(path: &Path, report: &VerificationReport) -> Result<()> {
    fs::write(path, report.to_json() + "\n")?;
    Ok(())
}

/// Rows `id,t,x1,x2,v1,v2,E,P,f`, keeping every `stride`-th sample and the last.
pub fn write_trajectories_csv(path: &Path, trajectories: &[Trajectory], stride: usize) -> Result<()> {
    let stride = stride.max(1);
    let mut out = String::from("id,t,x1,x2,v1,v2,E,P,f\n");
    for (id, tr) in trajectories.iter().enumerate() {
        let last = tr.len().saturating_sub(1);
        for k in (0..tr.len()).filter(|k| k % stride == 0 || *k == last) {
            let vals = [
                tr.time(k),
                tr.x[k][0],
                tr.x[k][1],
                tr.v[k][0],
                tr.v[k][1],
                tr.energy[k],
                tr.momentum[k],
                tr.f[k],
            ];
            let _ = write!(out, "{id}");
            for v in vals {
                let _ = write!(out, ",{}", fmt(v));
            }
            out.push('\n');
        }
    }
    fs::write(path, out)?;
    Ok(())
}
