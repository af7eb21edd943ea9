//! Picard iteration for the radial potential on a uniform grid.
//!
//! The fixed-point map is
//! `phi -> -4 pi e int_0^r (1/s) int_0^s tau g(tau, phi(tau)) dtau ds`
//! with the gauge `phi(0) = 0`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::GEvaluator;
use crate::error::{Error, Result};
use crate::params::{ConfinementConstants, Species};
use crate::quadrature::{cumulative_integral, RadialGrid, RadialRule};

/// Net radial charge density as a functional of the local potential value.
pub trait RadialSource: Sync {
    fn net_density(&self, r: f64, phi: f64) -> f64;
}

impl RadialSource for GEvaluator {
    fn net_density(&self, r: f64, phi: f64) -> f64 {
        self.net_g(r, phi)
    }
}

impl<F: Fn(f64, f64) -> f64 + Sync> RadialSource for F {
    fn net_density(&self, r: f64, phi: f64) -> f64 {
        self(r, phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardConfig {
    pub tol: f64,
    pub max_iter: usize,
    /// Grid intervals.
    pub n: usize,
    /// `r_max = r_max_factor * R`.
    pub r_max_factor: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 200,
            n: 1 << 12,
            r_max_factor: 1.25,
        }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "picard tol must be > 0, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParameter("picard max_iter must be >= 1".into()));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!("grid n must be >= 2, got {}", self.n)));
        }
        if !(self.r_max_factor > 1.0) {
            return Err(Error::InvalidParameter(format!(
                "r_max_factor must exceed 1 so the grid covers R, got {}",
                self.r_max_factor
            )));
        }
        Ok(())
    }
}

/// One application of the Picard map, with the intermediate quantities.
#[derive(Debug, Clone)]
pub struct PicardImage {
    pub phi: Vec<f64>,
    /// `g(r_i, phi_i)` of the input iterate.
    pub source: Vec<f64>,
    /// `I(r_i) = int_0^{r_i} tau g dtau`.
    pub moment: Vec<f64>,
}

/// Applies the Picard map to the samples `phi` on `grid`.
pub fn picard_step<S: RadialSource + ?Sized>(
    grid: &RadialGrid,
    phi: &[f64],
    source: &S,
    e: f64,
    rule: RadialRule,
) -> Result<PicardImage> {
    if phi.len() != grid.len() {
        return Err(Error::InvalidArgument(format!(
            "phi has {} samples, grid has {} nodes",
            phi.len(),
            grid.len()
        )));
    }
    let h = grid.step();
    let g: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|i| source.net_density(grid.node(i), phi[i]))
        .collect();
    let weighted: Vec<f64> = g.iter().enumerate().map(|(i, v)| grid.node(i) * v).collect();
    let moment = cumulative_integral(&weighted, h, rule)?;
    // I(s) = O(s^2), so I(s)/s -> 0 at the origin
    let outer: Vec<f64> = moment
        .iter()
        .enumerate()
        .map(|(i, m)| if i == 0 { 0.0 } else { m / grid.node(i) })
        .collect();
    let scale = -4.0 * std::f64::consts::PI * e;
    let mut next: Vec<f64> = cumulative_integral(&outer, h, rule)?
        .into_iter()
        .map(|v| scale * v)
        .collect();
    next[0] = 0.0;
    Ok(PicardImage {
        phi: next,
        source: g,
        moment,
    })
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Converged potential with its derivatives and the species densities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialSolution {
    pub grid: RadialGrid,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub d2phi: Vec<f64>,
    pub rho_minus: Vec<f64>,
    pub rho_plus: Vec<f64>,
    pub iterations: usize,
    /// `sup |phi_{n+1} - phi_n|` per iteration.
    pub history: Vec<f64>,
    /// `c0 R E0`.
    pub growth_slope_bound: f64,
    /// `sup |T phi - phi|` at the returned potential.
    pub fixed_point_residual: f64,
}

impl PotentialSolution {
    /// All-zero potential on `grid`, used by the vanishing-potential states.
    pub fn zero(grid: RadialGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            phi: vec![0.0; n],
            dphi: vec![0.0; n],
            d2phi: vec![0.0; n],
            rho_minus: vec![0.0; n],
            rho_plus: vec![0.0; n],
            iterations: 0,
            history: Vec::new(),
            growth_slope_bound: 0.0,
            fixed_point_residual: 0.0,
        }
    }

    /// Rebuilds derived samples around externally supplied `phi`, `dphi`,
    /// `d2phi` (e.g. read back from disk). Densities are recomputed from `g`.
    pub fn from_samples(
        grid: RadialGrid,
        phi: Vec<f64>,
        dphi: Vec<f64>,
        d2phi: Vec<f64>,
        geval: &GEvaluator,
        rule: RadialRule,
    ) -> Result<Self> {
        let n = grid.len();
        if phi.len() != n || dphi.len() != n || d2phi.len() != n {
            return Err(Error::InvalidArgument(format!("expected {n} samples per column")));
        }
        let (rho_minus, rho_plus) = species_densities(&grid, &phi, geval);
        let image = picard_step(&grid, &phi, geval, geval.params().e(), rule)?;
        Ok(Self {
            fixed_point_residual: sup_diff(&image.phi, &phi),
            grid,
            phi,
            dphi,
            d2phi,
            rho_minus,
            rho_plus,
            iterations: 0,
            history: Vec::new(),
            growth_slope_bound: 0.0,
        })
    }

    pub fn net_density(&self) -> Vec<f64> {
        self.rho_plus.iter().zip(&self.rho_minus).map(|(p, m)| p - m).collect()
    }

    pub fn density(&self, species: Species) -> &[f64] {
        match species {
            Species::Minus => &self.rho_minus,
            Species::Plus => &self.rho_plus,
        }
    }

    /// Largest node residual of `(r phi')' + 4 pi e r rho` by centred second
    /// differences, with the scale `max |4 pi e r rho|`.
    pub fn poisson_residual(&self, e: f64) -> (f64, f64) {
        let g = &self.grid;
        let h = g.step();
        let net = self.net_density();
        let four_pi_e = 4.0 * std::f64::consts::PI * e;
        let scale = net
            .iter()
            .enumerate()
            .map(|(i, q)| (four_pi_e * g.node(i) * q).abs())
            .fold(0.0, f64::max);
        let worst = self
            .phi
            .windows(3)
            .zip(&net[1..])
            .enumerate()
            .map(|(k, (w, q))| {
                let r = g.node(k + 1);
                let flux_right = (r + 0.5 * h) * (w[2] - w[1]);
                let flux_left = (r - 0.5 * h) * (w[1] - w[0]);
                ((flux_right - flux_left) / (h * h) + four_pi_e * r * q).abs()
            })
            .fold(0.0, f64::max);
        (worst, scale)
    }

    /// Quintic Hermite interpolant of `(phi, phi', phi'')`.
    pub fn interpolant(&self) -> RadialPotential {
        RadialPotential {
            h: self.grid.step(),
            r_max: self.grid.r_max(),
            phi: self.phi.clone(),
            dphi: self.dphi.clone(),
            d2phi: self.d2phi.clone(),
        }
    }
}

fn species_densities(grid: &RadialGrid, phi: &[f64], geval: &GEvaluator) -> (Vec<f64>, Vec<f64>) {
    let pairs: Vec<(f64, f64)> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let r = grid.node(i);
            (geval.g(Species::Minus, r, phi[i]), geval.g(Species::Plus, r, phi[i]))
        })
        .collect();
    pairs.into_iter().unzip()
}

/// `phi''(0) = -2 pi e g(0, phi(0))`.
pub fn phi_second_derivative_at_zero(geval: &GEvaluator, phi0: f64) -> f64 {
    -2.0 * std::f64::consts::PI * geval.params().e() * geval.net_g(0.0, phi0)
}

/// Runs the Picard sequence from `phi_0 = 0`.
pub fn solve(
    geval: &GEvaluator,
    consts: &ConfinementConstants,
    cfg: &PicardConfig,
    rule: RadialRule,
) -> Result<PotentialSolution> {
    cfg.validate()?;
    let grid = RadialGrid::new(cfg.r_max_factor * consts.radius, cfg.n)?;
    let zero = vec![0.0; grid.len()];
    solve_from(geval, consts, cfg, rule, grid, zero)
}

/// Runs the Picard sequence from a supplied first iterate.
pub fn solve_from(
    geval: &GEvaluator,
    consts: &ConfinementConstants,
    cfg: &PicardConfig,
    rule: RadialRule,
    grid: RadialGrid,
    initial: Vec<f64>,
) -> Result<PotentialSolution> {
    cfg.validate()?;
    let e = geval.params().e();
    let mut phi = initial;
    let mut history = Vec::new();
    let mut converged = false;
    for _ in 0..cfg.max_iter {
        let image = picard_step(&grid, &phi, geval, e, rule)?;
        let diff = sup_diff(&image.phi, &phi);
        history.push(diff);
        phi = image.phi;
        if !diff.is_finite() {
            break;
        }
        if diff <= cfg.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            iterations: history.len(),
            last: history.last().copied().unwrap_or(f64::NAN),
            history,
        });
    }

    let c_star = consts.c_star;
    for (i, v) in phi.iter().enumerate() {
        let bound = c_star * grid.node(i) + cfg.tol;
        if v.abs() > bound {
            return Err(Error::Consistency(format!(
                "growth bound violated at r = {}: |phi| = {} > c0 R E0 r + tol = {bound}",
                grid.node(i),
                v.abs()
            )));
        }
    }

    let image = picard_step(&grid, &phi, geval, e, rule)?;
    let four_pi_e = 4.0 * std::f64::consts::PI * e;
    let n = grid.len();
    let mut dphi = vec![0.0; n];
    let mut d2phi = vec![0.0; n];
    for i in 1..n {
        let r = grid.node(i);
        dphi[i] = -four_pi_e * image.moment[i] / r;
        d2phi[i] = four_pi_e * image.moment[i] / (r * r) - four_pi_e * image.source[i];
    }
    d2phi[0] = phi_second_derivative_at_zero(geval, phi[0]);
    let (rho_minus, rho_plus) = species_densities(&grid, &phi, geval);

    Ok(PotentialSolution {
        fixed_point_residual: sup_diff(&image.phi, &phi),
        iterations: history.len(),
        history,
        growth_slope_bound: c_star,
        grid,
        phi,
        dphi,
        d2phi,
        rho_minus,
        rho_plus,
    })
}

/// C^2 radial potential on `[0, inf)`: quintic Hermite between grid nodes,
/// exterior solution `phi(R1) + R1 phi'(R1) ln(r / R1)` beyond the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialPotential {
    h: f64,
    r_max: f64,
    phi: Vec<f64>,
    dphi: Vec<f64>,
    d2phi: Vec<f64>,
}

impl RadialPotential {
    pub fn zero() -> Self {
        Self {
            h: 1.0,
            r_max: 1.0,
            phi: vec![0.0; 2],
            dphi: vec![0.0; 2],
            d2phi: vec![0.0; 2],
        }
    }

    fn cell(&self, r: f64) -> (usize, f64) {
        let last = self.phi.len() - 2;
        let i = ((r / self.h) as usize).min(last);
        (i, (r - i as f64 * self.h) / self.h)
    }

    /// `(phi(r), phi'(r))`.
    pub fn eval(&self, r: f64) -> (f64, f64) {
        let n = self.phi.len() - 1;
        if r >= self.r_max {
            let flux = self.r_max * self.dphi[n];
            return (self.phi[n] + flux * (r / self.r_max).ln(), flux / r);
        }
        let (i, t) = self.cell(r.max(0.0));
        let h = self.h;
        let (p0, p1) = (self.phi[i], self.phi[i + 1]);
        let (d0, d1) = (h * self.dphi[i], h * self.dphi[i + 1]);
        let (s0, s1) = (h * h * self.d2phi[i], h * h * self.d2phi[i + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let v = p0 * (1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5)
            + d0 * (t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5)
            + s0 * (0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5)
            + s1 * (0.5 * t3 - t4 + 0.5 * t5)
            + d1 * (-4.0 * t3 + 7.0 * t4 - 3.0 * t5)
            + p1 * (10.0 * t3 - 15.0 * t4 + 6.0 * t5);
        let dv = p0 * (-30.0 * t2 + 60.0 * t3 - 30.0 * t4)
            + d0 * (1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4)
            + s0 * (t - 4.5 * t2 + 6.0 * t3 - 2.5 * t4)
            + s1 * (1.5 * t2 - 4.0 * t3 + 2.5 * t4)
            + d1 * (-12.0 * t2 + 28.0 * t3 - 15.0 * t4)
            + p1 * (30.0 * t2 - 60.0 * t3 + 30.0 * t4);
        (v, dv / h)
    }

    pub fn value(&self, r: f64) -> f64 {
        self.eval(r).0
    }

    pub fn derivative(&self, r: f64) -> f64 {
        self.eval(r).1
    }

    pub fn sup_abs(&self) -> f64 {
        self.phi.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}
