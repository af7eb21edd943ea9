//! Machine-checkable report of the structural properties of a steady state.

use std::collections::BTreeSet;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::characteristics::{batch_drift, sample_confined};
use crate::density::GEvaluator;
use crate::error::Result;
use crate::params::{ConfinementConstants, Species};
use crate::potential::{self, PicardConfig};
use crate::quadrature::RadialRule;
use crate::steady_state::{StateKind, SteadyState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Check {
    PoissonResidual,
    GrowthBound,
    SupportX,
    SupportV,
    Neutrality,
    DensityConstancy,
    SourceSupport,
    ExteriorFlux,
    ChargePositivity,
    CharacteristicInvariants,
    FixedPointResidual,
    Uniqueness,
    RefinementOrder,
}

impl Check {
    pub const ALL: [Check; 13] = [
        Check::PoissonResidual,
        Check::GrowthBound,
        Check::SupportX,
        Check::SupportV,
        Check::Neutrality,
        Check::DensityConstancy,
        Check::SourceSupport,
        Check::ExteriorFlux,
        Check::ChargePositivity,
        Check::CharacteristicInvariants,
        Check::FixedPointResidual,
        Check::Uniqueness,
        Check::RefinementOrder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::PoissonResidual => "poisson_residual",
            Check::GrowthBound => "growth_bound",
            Check::SupportX => "support_x",
            Check::SupportV => "support_v",
            Check::Neutrality => "neutrality",
            Check::DensityConstancy => "density_constancy",
            Check::SourceSupport => "source_support",
            Check::ExteriorFlux => "exterior_flux",
            Check::ChargePositivity => "charge_positivity",
            Check::CharacteristicInvariants => "characteristic_invariants",
            Check::FixedPointResidual => "fixed_point_residual",
            Check::Uniqueness => "uniqueness",
            Check::RefinementOrder => "refinement_order",
        }
    }

    pub fn parse(s: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == s)
    }

    /// The property the check measures.
    pub fn anchor(self) -> &'static str {
        match self {
            Check::PoissonResidual => "radial Poisson equation (r phi')' = -4 pi e r (rho+ - rho-)",
            Check::GrowthBound => "|phi(r)| <= c0 R E0 r",
            Check::SupportX => "f = 0 for |x| beyond the position support radius",
            Check::SupportV => "f = 0 for |v| beyond the velocity support radius",
            Check::Neutrality => "matched vanishing-potential families have rho+ = rho-",
            Check::DensityConstancy => "angular-only family has spatially constant density",
            Check::SourceSupport => "net source g(r, phi(r)) = 0 for r > R",
            Check::ExteriorFlux => "r phi'(r) constant for r > R",
            Check::ChargePositivity => "both species carry positive finite charge",
            Check::CharacteristicInvariants => "E, P and f constant along characteristics",
            Check::FixedPointResidual => "phi is a fixed point of the Picard map",
            Check::Uniqueness => "Picard iteration from another start reaches the same phi",
            Check::RefinementOrder => "second-order decay of the discrete Poisson residual",
        }
    }

    /// Stream offset keeping sampled checks independent of each other.
    fn stream(self) -> u64 {
        0x9E37_79B9_7F4A_7C15_u64.wrapping_mul(self as u64 + 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative to `max |4 pi e r rho|`.
    pub poisson_relative: f64,
    pub growth: f64,
    pub neutrality_relative: f64,
    pub density_constancy: f64,
    pub exterior_flux: f64,
    pub fixed_point: f64,
    pub uniqueness: f64,
    pub order_target: f64,
    pub order_halfwidth: f64,
    pub drift_energy: f64,
    pub drift_momentum: f64,
    /// Scaled by `1 + sup f`.
    pub drift_f: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            poisson_relative: 1e-4,
            growth: 1e-10,
            neutrality_relative: 1e-8,
            density_constancy: 1e-8,
            exterior_flux: 1e-8,
            fixed_point: 2e-10,
            uniqueness: 1e-9,
            order_target: 2.0,
            order_halfwidth: 0.3,
            drift_energy: 1e-8,
            drift_momentum: 1e-8,
            drift_f: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationConfig {
    pub tolerances: Tolerances,
    pub seed: u64,
    pub disabled: BTreeSet<Check>,
    pub support_samples: usize,
    pub neutrality_radii: usize,
    pub trajectories: usize,
    pub step: f64,
    pub horizon: f64,
    pub ladder: Vec<usize>,
    /// Used for the restart and refinement re-solves.
    pub picard: PicardConfig,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            seed: 2024,
            disabled: BTreeSet::new(),
            support_samples: 10_000,
            neutrality_radii: 100,
            trajectories: 100,
            step: 1e-3,
            horizon: 10.0,
            ladder: vec![1 << 10, 1 << 11, 1 << 12, 1 << 13],
            picard: PicardConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub tolerance: f64,
    pub anchor: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckRecord>,
}

impl VerificationReport {
    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, check: Check) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == check.name())
    }

    /// JSON array of check records.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.checks).expect("check records serialize")
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<27} {:<6} {:>12} {:>12}  detail",
            "check", "result", "measured", "tolerance"
        )?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<27} {:<6} {:>12.4e} {:>12.4e}  {}",
                c.name,
                if c.pass { "PASS" } else { "FAIL" },
                c.measured,
                c.tolerance,
                c.detail
            )?;
        }
        write!(f, "overall: {}", if self.pass() { "PASS" } else { "FAIL" })
    }
}

/// Poisson residuals on a ladder of grids with the observed orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementStudy {
    pub intervals: Vec<usize>,
    pub residuals: Vec<f64>,
    pub scales: Vec<f64>,
    /// `log2(res_k / res_{k+1})`.
    pub orders: Vec<f64>,
    pub monotone: bool,
    /// Every residual at rounding level relative to the source.
    pub at_floor: bool,
}

pub fn refinement_study(
    evaluator: &GEvaluator,
    consts: &ConfinementConstants,
    picard: &PicardConfig,
    rule: RadialRule,
    ladder: &[usize],
) -> Result<RefinementStudy> {
    let mut intervals = Vec::new();
    let mut residuals = Vec::new();
    let mut scales = Vec::new();
    for &n in ladder {
        let cfg = PicardConfig { n, ..*picard };
        let sol = potential::solve(evaluator, consts, &cfg, rule)?;
        let (res, scale) = sol.poisson_residual(evaluator.params().e());
        intervals.push(n);
        residuals.push(res);
        scales.push(scale);
    }
    let orders: Vec<f64> = residuals.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let monotone = residuals.windows(2).all(|w| w[1] < w[0]);
    let at_floor = residuals
        .iter()
        .zip(&scales)
        .all(|(r, s)| *r <= 1e-13 * s.max(f64::MIN_POSITIVE) || *r == 0.0);
    Ok(RefinementStudy {
        intervals,
        residuals,
        scales,
        orders,
        monotone,
        at_floor,
    })
}

fn record(check: Check, pass: bool, measured: f64, tolerance: f64, detail: impl Into<String>) -> CheckRecord {
    CheckRecord {
        name: check.name().to_string(),
        pass,
        measured,
        tolerance,
        anchor: check.anchor().to_string(),
        detail: detail.into(),
    }
}

fn applicable(check: Check, state: &SteadyState) -> bool {
    let sc = state.kind() == StateKind::SelfConsistent;
    let support = state.support();
    match check {
        Check::PoissonResidual
        | Check::GrowthBound
        | Check::SourceSupport
        | Check::ExteriorFlux
        | Check::ChargePositivity
        | Check::FixedPointResidual
        | Check::Uniqueness
        | Check::RefinementOrder => sc,
        Check::SupportX => support.position.is_some(),
        Check::SupportV => support.velocity.is_some(),
        Check::Neutrality => !sc,
        Check::DensityConstancy => state.kind() == StateKind::AngularOnly,
        Check::CharacteristicInvariants => true,
    }
}

fn random_in_annulus(rng: &mut ChaCha8Rng, inner: f64, outer: f64) -> [f64; 2] {
    let r = rng.random_range(inner..outer);
    let t = rng.random_range(0.0..std::f64::consts::TAU);
    [r * t.cos(), r * t.sin()]
}

fn run_check(check: Check, state: &SteadyState, cfg: &VerificationConfig) -> Result<CheckRecord> {
    let tol = &cfg.tolerances;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ check.stream());
    let sol = state.solution();
    let e = state.params().e();
    Ok(match check {
        Check::PoissonResidual => {
            let (res, scale) = sol.poisson_residual(e);
            let measured = if scale > 0.0 { res / scale } else { res };
            record(
                check,
                measured <= tol.poisson_relative,
                measured,
                tol.poisson_relative,
                format!("max residual {res:.3e}, source scale {scale:.3e}"),
            )
        }
        Check::GrowthBound => {
            let slope = state.confinement().map_or(0.0, |k| k.c_star);
            let excess = sol
                .phi
                .iter()
                .enumerate()
                .map(|(i, p)| p.abs() - slope * sol.grid.node(i))
                .fold(f64::NEG_INFINITY, f64::max);
            record(
                check,
                excess <= tol.growth,
                excess.max(0.0),
                tol.growth,
                format!("slope c0 R E0 = {slope:.6e}"),
            )
        }
        Check::SupportX | Check::SupportV => {
            let sup = state.support();
            let rx = sup.position.unwrap_or(1.0);
            let rv = sup.velocity.unwrap_or(1.0);
            let mut worst = 0.0_f64;
            for k in 0..cfg.support_samples {
                let species = Species::BOTH[k % 2];
                let (x, v) = if check == Check::SupportX {
                    let x = random_in_annulus(&mut rng, rx * (1.0 + 1e-12), 3.0 * rx);
                    (x, random_in_annulus(&mut rng, 0.0, 3.0 * rv))
                } else {
                    let x = random_in_annulus(&mut rng, 0.0, 3.0 * rx);
                    (x, random_in_annulus(&mut rng, rv * (1.0 + 1e-12), 3.0 * rv))
                };
                worst = worst.max(state.eval_f(species, x, v));
            }
            let radius = if check == Check::SupportX { rx } else { rv };
            record(
                check,
                worst == 0.0,
                worst,
                0.0,
                format!("{} samples beyond radius {radius:.6e}", cfg.support_samples),
            )
        }
        Check::Neutrality | Check::DensityConstancy => {
            let r_max = sol.grid.r_max();
            let radii: Vec<f64> = (0..cfg.neutrality_radii)
                .map(|_| rng.random_range(0.0..r_max))
                .collect();
            let pairs: Vec<(f64, f64)> = radii
                .par_iter()
                .map(|&r| {
                    (
                        state.density_radial(Species::Minus, r),
                        state.density_radial(Species::Plus, r),
                    )
                })
                .collect();
            let peak = pairs.iter().fold(0.0_f64, |m, (a, b)| m.max(*a).max(*b));
            if check == Check::Neutrality {
                let diff = pairs.iter().fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                let measured = if peak > 0.0 { diff / peak } else { diff };
                record(
                    check,
                    measured <= tol.neutrality_relative,
                    measured,
                    tol.neutrality_relative,
                    format!("max rho {peak:.6e}"),
                )
            } else {
                let low = pairs.iter().fold(f64::INFINITY, |m, (a, b)| m.min(*a).min(*b));
                let measured = if peak > 0.0 { (peak - low) / peak } else { 0.0 };
                record(
                    check,
                    measured <= tol.density_constancy,
                    measured,
                    tol.density_constancy,
                    format!("rho in [{low:.12e}, {peak:.12e}]"),
                )
            }
        }
        Check::SourceSupport => {
            let radius = state.support().position.unwrap_or(f64::INFINITY);
            let net = sol.net_density();
            let mut count = 0;
            let mut worst = 0.0_f64;
            for (i, g) in net.iter().enumerate() {
                if sol.grid.node(i) > radius {
                    count += 1;
                    worst = worst.max(g.abs());
                }
            }
            record(
                check,
                worst == 0.0,
                worst,
                0.0,
                format!("{count} nodes beyond R = {radius:.6e}"),
            )
        }
        Check::ExteriorFlux => {
            let radius = state.support().position.unwrap_or(f64::INFINITY);
            let flux: Vec<f64> = (0..sol.grid.len())
                .filter(|&i| sol.grid.node(i) > radius)
                .map(|i| sol.grid.node(i) * sol.dphi[i])
                .collect();
            let hi = flux.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = flux.iter().cloned().fold(f64::INFINITY, f64::min);
            let scale = hi.abs().max(lo.abs());
            let measured = if flux.is_empty() || scale == 0.0 {
                0.0
            } else {
                (hi - lo) / scale
            };
            record(
                check,
                measured <= tol.exterior_flux,
                measured,
                tol.exterior_flux,
                format!("{} exterior nodes", flux.len()),
            )
        }
        Check::ChargePositivity => {
            let q = [state.total_charge(Species::Minus), state.total_charge(Species::Plus)];
            let witnesses: Vec<String> = Species::BOTH
                .iter()
                .map(|&s| match state.positivity_witness(s) {
                    Ok(w) => format!("{}: r0 = {:.4e}", s.name(), w.r0),
                    Err(err) => format!("{}: {err}", s.name()),
                })
                .collect();
            let found = Species::BOTH.iter().all(|&s| state.positivity_witness(s).is_ok());
            let measured = q[0].min(q[1]).max(0.0);
            let pass = found && q.iter().all(|c| *c > 0.0 && c.is_finite());
            record(check, pass, measured, 0.0, witnesses.join("; "))
        }
        Check::CharacteristicInvariants => {
            if sol.rho_minus.iter().chain(&sol.rho_plus).all(|&r| r == 0.0) {
                return Ok(record(
                    check,
                    true,
                    0.0,
                    tol.drift_energy,
                    "distribution vanishes identically",
                ));
            }
            let starts = sample_confined(state, cfg.trajectories, cfg.seed ^ check.stream())?;
            let (drift, sup_f) = batch_drift(state, &starts, cfg.step, cfg.horizon)?;
            let f_gate = tol.drift_f * (1.0 + sup_f);
            let pass = drift.energy <= tol.drift_energy
                && drift.momentum <= tol.drift_momentum
                && drift.distribution <= f_gate;
            record(
                check,
                pass,
                drift.energy.max(drift.momentum),
                tol.drift_energy.min(tol.drift_momentum),
                format!(
                    "{} trajectories, h = {}, T = {}: dE = {:.3e}, dP = {:.3e}, df = {:.3e} (gate {:.3e})",
                    starts.len(),
                    cfg.step,
                    cfg.horizon,
                    drift.energy,
                    drift.momentum,
                    drift.distribution,
                    f_gate
                ),
            )
        }
        Check::FixedPointResidual => {
            let m = sol.fixed_point_residual;
            record(check, m <= tol.fixed_point, m, tol.fixed_point, "sup |T phi - phi|")
        }
        Check::Uniqueness => {
            let (ev, k) = (
                state.evaluator().expect("applicable"),
                state.confinement().expect("applicable"),
            );
            // start on the growth-bound envelope, far from the solution
            let start: Vec<f64> = sol.grid.nodes().iter().map(|r| 0.5 * k.c_star * r).collect();
            let picard = PicardConfig {
                n: sol.grid.intervals(),
                ..cfg.picard
            };
            let restart = potential::solve_from(ev, k, &picard, ev.config().radial_rule, sol.grid.clone(), start)?;
            let diff = restart
                .phi
                .iter()
                .zip(&sol.phi)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let h = &restart.history;
            let contracting = h.iter().skip(2).zip(h.iter().skip(3)).all(|(a, b)| b < a || *b == 0.0);
            record(
                check,
                diff <= tol.uniqueness && contracting,
                diff,
                tol.uniqueness,
                format!(
                    "{} restart iterations, history decreasing after iterate 3: {contracting}",
                    h.len()
                ),
            )
        }
        Check::RefinementOrder => {
            let (ev, k) = (
                state.evaluator().expect("applicable"),
                state.confinement().expect("applicable"),
            );
            let study = refinement_study(ev, k, &cfg.picard, ev.config().radial_rule, &cfg.ladder)?;
            let detail = format!(
                "residuals {:?}, orders {:?}{}",
                study.residuals.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>(),
                study.orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>(),
                if study.monotone { "" } else { ", non-monotone" }
            );
            if study.at_floor {
                record(
                    check,
                    true,
                    0.0,
                    tol.order_halfwidth,
                    format!("residuals at rounding floor; {detail}"),
                )
            } else {
                let worst = study
                    .orders
                    .iter()
                    .map(|o| (o - tol.order_target).abs())
                    .fold(0.0, f64::max);
                let pass = !study.orders.is_empty() && worst <= tol.order_halfwidth;
                record(check, pass, worst, tol.order_halfwidth, detail)
            }
        }
    })
}

/// Runs every enabled check applicable to the state's kind.
pub fn run_all(state: &SteadyState, cfg: &VerificationConfig) -> Result<VerificationReport> {
    let checks: Vec<Check> = Check::ALL
        .into_iter()
        .filter(|c| !cfg.disabled.contains(c) && applicable(*c, state))
        .collect();
    let records: Vec<Result<CheckRecord>> = checks.par_iter().map(|&c| run_check(c, state, cfg)).collect();
    Ok(VerificationReport {
        checks: records.into_iter().collect::<Result<_>>()?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::PlasmaParams;
    use crate::profiles::{Profile, ProfilePair, SpeciesProfiles, TrivialProfileSpec};
    use crate::quadrature::QuadratureConfig;

    fn state(amp: f64) -> SteadyState {
        let params = PlasmaParams::new(1.0, 1.0, 1.0, 2.0, 4.0).unwrap();
        let sp = SpeciesProfiles {
            sigma1: Profile::bump(-0.1, 1.0, 1.0, 2).unwrap(),
            sigma2: Profile::bump(-2.0, 0.0, amp, 2).unwrap(),
        };
        let picard = PicardConfig {
            n: 1 << 10,
            ..PicardConfig::default()
        };
        SteadyState::self_consistent(
            params,
            ProfilePair::new(sp.clone(), sp).unwrap(),
            QuadratureConfig::default(),
            &picard,
        )
        .unwrap()
    }

    fn quick() -> VerificationConfig {
        VerificationConfig {
            support_samples: 500,
            trajectories: 4,
            step: 1e-2,
            horizon: 1.0,
            ladder: vec![1 << 9, 1 << 10],
            ..VerificationConfig::default()
        }
    }

    #[test]
    fn zero_state_fails_only_charge_positivity() {
        let report = run_all(&state(0.0), &quick()).unwrap();
        for c in &report.checks {
            assert_eq!(c.pass, c.name != "charge_positivity", "{c:?}");
        }
        assert_eq!(report.get(Check::ChargePositivity).unwrap().measured, 0.0);
        assert!(!report.pass());
    }

    #[test]
    fn toy_state_passes_and_is_deterministic() {
        let st = state(0.004);
        let a = run_all(&st, &quick()).unwrap();
        assert!(a.pass(), "{a}");
        let b = run_all(&st, &quick()).unwrap();
        assert_eq!(a.to_json(), b.to_json());
    }

    #[test]
    fn disabling_a_check_leaves_the_others_unchanged() {
        let st = state(0.004);
        let full = run_all(&st, &quick()).unwrap();
        let mut cfg = quick();
        cfg.disabled.insert(Check::SupportX);
        let part = run_all(&st, &cfg).unwrap();
        assert!(part.get(Check::SupportX).is_none());
        for c in &part.checks {
            assert_eq!(Some(c), full.checks.iter().find(|d| d.name == c.name));
        }
    }

    #[test]
    fn vanishing_family_report() {
        let params = PlasmaParams::new(1.0, 1.0, 1.0, 1.5, 3.0).unwrap();
        let spec = TrivialProfileSpec::EnergyMomentum {
            energy: Profile::bump(0.0, 2.0, 1.0, 2).unwrap(),
            momentum: Profile::bump(-1.0, 1.0, 1.0, 2).unwrap(),
        };
        let st = SteadyState::vanishing(spec, params, QuadratureConfig::default(), 64, None).unwrap();
        let report = run_all(&st, &quick()).unwrap();
        let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(
            names,
            ["support_x", "support_v", "neutrality", "characteristic_invariants"]
        );
        assert!(report.pass(), "{report}");
    }

    #[test]
    fn check_names_round_trip() {
        for c in Check::ALL {
            assert_eq!(Check::parse(c.name()), Some(c));
        }
        assert_eq!(Check::parse("nope"), None);
    }
}
