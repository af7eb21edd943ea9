//! Phase-space steady states built from conserved quantities.
//!
//! A [`SteadyState`] is either self-consistent (nonzero potential obtained
//! from the Picard solver) or belongs to one of the vanishing-potential
//! families, whose species are matched so that the charge densities cancel.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::density::{theta_window_integral, GEvaluator};
use crate::error::{Error, Result};
use crate::params::{compute_c0, ConfinementConstants, PlasmaParams, Species};
use crate::potential::{self, PicardConfig, PotentialSolution, RadialPotential};
use crate::profiles::{make_matched_pair, MatchedProfiles, Profile, ProfilePair, TrivialKind, TrivialProfileSpec};
use crate::quadrature::{cumulative_integral, GaussLegendre, QuadratureConfig, RadialGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateKind {
    /// Product ansatz in total energy and `P`, with a self-consistent potential.
    SelfConsistent,
    /// `sigma1(E_kin)`, zero potential.
    EnergyOnly,
    /// `sigma2(L)`, zero potential, spatially constant density.
    AngularOnly,
    /// `sigma3(E_kin, P)`, zero potential, compact support.
    EnergyMomentum,
}

impl StateKind {
    pub fn name(self) -> &'static str {
        match self {
            StateKind::SelfConsistent => "self_consistent",
            StateKind::EnergyOnly => "energy_only",
            StateKind::AngularOnly => "angular_only",
            StateKind::EnergyMomentum => "energy_momentum",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "self_consistent" => StateKind::SelfConsistent,
            "energy_only" => StateKind::EnergyOnly,
            "angular_only" => StateKind::AngularOnly,
            "energy_momentum" => StateKind::EnergyMomentum,
            _ => return None,
        })
    }
}

impl From<TrivialKind> for StateKind {
    fn from(k: TrivialKind) -> Self {
        match k {
            TrivialKind::EnergyOnly => StateKind::EnergyOnly,
            TrivialKind::AngularOnly => StateKind::AngularOnly,
            TrivialKind::EnergyMomentum => StateKind::EnergyMomentum,
        }
    }
}

#[inline]
pub(crate) fn perp(v: [f64; 2]) -> [f64; 2] {
    [v[1], -v[0]]
}

#[inline]
fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
fn norm(a: [f64; 2]) -> f64 {
    a[0].hypot(a[1])
}

/// Evaluators for the quantities conserved by the characteristic flow.
#[derive(Debug, Clone, Copy)]
pub struct ConservedQuantities<'a> {
    params: &'a PlasmaParams,
    potential: &'a RadialPotential,
}

impl<'a> ConservedQuantities<'a> {
    pub fn new(params: &'a PlasmaParams, potential: &'a RadialPotential) -> Self {
        Self { params, potential }
    }

    pub fn kinetic_energy(&self, species: Species, v: [f64; 2]) -> f64 {
        0.5 * self.params.mass(species) * dot(v, v)
    }

    /// `E = m |v|^2 / 2 + alpha e phi(|x|)`.
    pub fn energy(&self, species: Species, x: [f64; 2], v: [f64; 2]) -> f64 {
        self.kinetic_energy(species, v) + species.sign() * self.params.e() * self.potential.value(norm(x))
    }

    /// `P = |x|^2 / 2 + kappa x . v_perp` with the signed gyration coefficient.
    pub fn momentum(&self, species: Species, x: [f64; 2], v: [f64; 2]) -> f64 {
        0.5 * dot(x, x) + self.params.gyro_coefficient(species) * dot(x, perp(v))
    }

    /// `L = |x + kappa v_perp|^2 / 2`.
    pub fn guiding_center(&self, species: Species, x: [f64; 2], v: [f64; 2]) -> f64 {
        let k = self.params.gyro_coefficient(species);
        let p = perp(v);
        let y = [x[0] + k * p[0], x[1] + k * p[1]];
        0.5 * dot(y, y)
    }
}

/// Radii outside of which the distribution vanishes, when known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportRadii {
    pub position: Option<f64>,
    pub velocity: Option<f64>,
}

/// Region of phase space on which the distribution is shown to be positive:
/// `r0 < |x| < 2 r0`, `u0 < |v| < 2 u0`, and the angle of `v` relative to `x`
/// in `(theta0, theta0 + pi/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WitnessRegion {
    pub species: Species,
    pub r0: f64,
    pub u0: f64,
    pub theta0: f64,
    /// Smallest sampled value of `f` over the region.
    pub min_f: f64,
}

#[derive(Debug, Clone)]
enum Ansatz {
    SelfConsistent {
        evaluator: GEvaluator,
        consts: ConfinementConstants,
    },
    Vanishing {
        matched: MatchedProfiles,
        gl: GaussLegendre,
        quad: QuadratureConfig,
    },
}

/// An assembled steady state with its potential and sampled densities.
#[derive(Debug, Clone)]
pub struct SteadyState {
    kind: StateKind,
    params: PlasmaParams,
    ansatz: Ansatz,
    solution: PotentialSolution,
    potential: RadialPotential,
    support: SupportRadii,
    charges: [f64; 2],
    finite_charge: bool,
}

fn radial_charges(solution: &PotentialSolution, rule: crate::quadrature::RadialRule) -> Result<[f64; 2]> {
    let grid = &solution.grid;
    let mut out = [0.0; 2];
    for s in Species::BOTH {
        let weighted: Vec<f64> = solution
            .density(s)
            .iter()
            .enumerate()
            .map(|(i, rho)| rho * grid.node(i))
            .collect();
        let cum = cumulative_integral(&weighted, grid.step(), rule)?;
        out[s.index()] = 2.0 * PI * cum[cum.len() - 1];
    }
    Ok(out)
}

impl SteadyState {
    /// Solves for the self-consistent potential and assembles the state.
    pub fn self_consistent(
        params: PlasmaParams,
        profiles: ProfilePair,
        quad: QuadratureConfig,
        picard: &PicardConfig,
    ) -> Result<Self> {
        let c0 = compute_c0(&params, &profiles.norms());
        let consts = ConfinementConstants::from_energy_cutoff(&params, c0, profiles.energy_cutoff())?;
        let evaluator = GEvaluator::new(params, profiles, quad)?;
        let solution = potential::solve(&evaluator, &consts, picard, quad.radial_rule)?;
        Self::from_solution(evaluator, consts, solution)
    }

    /// Wraps an already computed (or externally loaded) potential.
    pub fn from_solution(
        evaluator: GEvaluator,
        consts: ConfinementConstants,
        solution: PotentialSolution,
    ) -> Result<Self> {
        let params = *evaluator.params();
        let charges = radial_charges(&solution, evaluator.config().radial_rule)?;
        Ok(Self {
            kind: StateKind::SelfConsistent,
            params,
            potential: solution.interpolant(),
            solution,
            support: SupportRadii {
                position: Some(consts.radius),
                velocity: Some(consts.radius),
            },
            charges,
            finite_charge: true,
            ansatz: Ansatz::SelfConsistent { evaluator, consts },
        })
    }

    /// Builds a vanishing-potential state from one mother profile set.
    ///
    /// The densities are sampled on `n` intervals of `[0, r_max]`; without an
    /// explicit `r_max` the grid extends a quarter beyond the family's natural
    /// length scale.
    pub fn vanishing(
        spec: TrivialProfileSpec,
        params: PlasmaParams,
        quad: QuadratureConfig,
        n: usize,
        r_max: Option<f64>,
    ) -> Result<Self> {
        quad.validate()?;
        let matched = make_matched_pair(spec, &params)?;
        let kind = StateKind::from(matched.kind());
        let support = match kind {
            StateKind::EnergyOnly => SupportRadii {
                position: None,
                velocity: matched.energy_cutoff.map(|e0| (2.0 * e0 / params.m_max()).sqrt()),
            },
            StateKind::AngularOnly => SupportRadii {
                position: None,
                velocity: None,
            },
            _ => {
                let e0 = matched.energy_cutoff.unwrap_or(0.0);
                let p0 = matched.momentum_cutoff.unwrap_or(0.0);
                SupportRadii {
                    position: Some((4.0 * p0 + 2.0 * e0 / params.m_min()).sqrt()),
                    velocity: Some((2.0 * e0 / params.m_min()).sqrt()),
                }
            }
        };
        let scale = match kind {
            StateKind::AngularOnly => (2.0 * matched.angular_cutoff.unwrap_or(1.0)).sqrt(),
            StateKind::EnergyOnly => support.velocity.unwrap_or(1.0),
            _ => support.position.unwrap_or(1.0),
        };
        let r_max = r_max.unwrap_or(1.25 * scale);
        let grid = RadialGrid::new(r_max, n)?;
        let mut state = Self {
            kind,
            params,
            ansatz: Ansatz::Vanishing {
                matched,
                gl: GaussLegendre::new(quad.gl_order),
                quad,
            },
            solution: PotentialSolution::zero(grid.clone()),
            potential: RadialPotential::zero(),
            support,
            charges: [0.0; 2],
            finite_charge: kind == StateKind::EnergyMomentum,
        };
        for s in Species::BOTH {
            let rho: Vec<f64> = grid.nodes().iter().map(|&r| state.density_radial(s, r)).collect();
            match s {
                Species::Minus => state.solution.rho_minus = rho,
                Species::Plus => state.solution.rho_plus = rho,
            }
        }
        state.charges = radial_charges(&state.solution, quad.radial_rule)?;
        Ok(state)
    }

    pub fn kind(&self) -> StateKind {
        self.kind
    }

    pub fn params(&self) -> &PlasmaParams {
        &self.params
    }

    pub fn solution(&self) -> &PotentialSolution {
        &self.solution
    }

    pub fn potential(&self) -> &RadialPotential {
        &self.potential
    }

    pub fn support(&self) -> SupportRadii {
        self.support
    }

    /// The density evaluator of a self-consistent state.
    pub fn evaluator(&self) -> Option<&GEvaluator> {
        match &self.ansatz {
            Ansatz::SelfConsistent { evaluator, .. } => Some(evaluator),
            Ansatz::Vanishing { .. } => None,
        }
    }

    pub fn confinement(&self) -> Option<&ConfinementConstants> {
        match &self.ansatz {
            Ansatz::SelfConsistent { consts, .. } => Some(consts),
            Ansatz::Vanishing { .. } => None,
        }
    }

    pub fn matched_profiles(&self) -> Option<&MatchedProfiles> {
        match &self.ansatz {
            Ansatz::Vanishing { matched, .. } => Some(matched),
            Ansatz::SelfConsistent { .. } => None,
        }
    }

    pub fn invariants(&self) -> ConservedQuantities<'_> {
        ConservedQuantities::new(&self.params, &self.potential)
    }

    /// The distribution function `f^alpha(x, v)`.
    pub fn eval_f(&self, species: Species, x: [f64; 2], v: [f64; 2]) -> f64 {
        let q = self.invariants();
        match &self.ansatz {
            Ansatz::SelfConsistent { evaluator, .. } => {
                let prof = evaluator.profiles().get(species);
                let angular = prof.sigma2.value(q.momentum(species, x, v));
                if angular == 0.0 {
                    return 0.0;
                }
                prof.sigma1.value(q.energy(species, x, v)) * angular
            }
            Ansatz::Vanishing { matched, .. } => match self.kind {
                StateKind::EnergyOnly => matched.sigma1(species, q.kinetic_energy(species, v)),
                StateKind::AngularOnly => matched.sigma2(species, q.guiding_center(species, x, v)),
                _ => matched.sigma3(species, q.kinetic_energy(species, v), q.momentum(species, x, v)),
            },
        }
    }

    /// Charge density `rho^alpha(r)`: the velocity integral of `f` at `|x| = r`.
    pub fn density_radial(&self, species: Species, r: f64) -> f64 {
        let r = r.max(0.0);
        match &self.ansatz {
            Ansatz::SelfConsistent { evaluator, .. } => evaluator.g(species, r, self.potential.value(r)),
            Ansatz::Vanishing { matched, gl, quad } => vanishing_density(&self.params, matched, gl, quad, species, r),
        }
    }

    /// `2 pi int_0^{r_max} rho^alpha(r) r dr` on the sampling grid. For the
    /// families with non-integrable densities this is the truncated value.
    pub fn total_charge(&self, species: Species) -> f64 {
        self.charges[species.index()]
    }

    /// `false` for the families whose density does not decay in `x`.
    pub fn charge_is_finite(&self) -> bool {
        self.finite_charge
    }

    /// Difference of total ion and electron charge.
    pub fn net_charge(&self) -> f64 {
        self.charges[Species::Plus.index()] - self.charges[Species::Minus.index()]
    }

    /// Searches `r0 = R 2^{-k}`, `k = 0..=20`, for a region on which both
    /// profile arguments are guaranteed to lie strictly inside their windows,
    /// then confirms `f > 0` on a 5 x 5 x 5 sample of the region.
    pub fn positivity_witness(&self, species: Species) -> Result<WitnessRegion> {
        let (evaluator, consts) = match &self.ansatz {
            Ansatz::SelfConsistent { evaluator, consts } => (evaluator, consts),
            Ansatz::Vanishing { .. } => {
                return Err(Error::InvalidArgument(
                    "positivity witness needs a self-consistent state".into(),
                ))
            }
        };
        let p = &self.params;
        let prof = evaluator.profiles().get(species);
        if prof.sigma1.is_zero() || prof.sigma2.is_zero() {
            return Err(Error::NoWitness(format!(
                "{} profiles vanish identically",
                species.name()
            )));
        }
        let e0_low = prof.e0_low();
        let p0 = prof.p0();
        let e_cut = consts.e0;
        let slope = p.e() * consts.c_star;
        let kappa_max = p.c() * p.m_max() / (p.e() * p.beta());
        let kappa_min = p.c() * p.m_min() / (p.e() * p.beta());
        let theta0 = match species {
            Species::Minus => 0.25 * PI,
            Species::Plus => 1.25 * PI,
        };

        for k in 0..=20 {
            let r0 = consts.radius * 0.5_f64.powi(k);
            let r32 = r0 * r0.sqrt();
            let momentum_ok = p0 < 0.5 * r0 * r0 - 4.0 * kappa_max * r32
                && 2.0 * r0 * r0 - (2.0_f64.sqrt() / 4.0) * kappa_min * r32 < 0.0;
            // |phi| <= c* r < 2 c* r0 on the region
            let energy_ok =
                e0_low < 0.5 * p.m_min() * r0 - 2.0 * slope * r0 && 2.0 * p.m_max() * r0 + 2.0 * slope * r0 < e_cut;
            if !(momentum_ok && energy_ok) {
                continue;
            }
            let u0 = r0.sqrt();
            let mut min_f = f64::INFINITY;
            for i in 0..5 {
                let r = r0 * (1.0 + (i as f64 + 0.5) / 5.0);
                for j in 0..5 {
                    let u = u0 * (1.0 + (j as f64 + 0.5) / 5.0);
                    for l in 0..5 {
                        let th = theta0 + FRAC_PI_2 * (l as f64 + 0.5) / 5.0;
                        let f = self.eval_f(species, [r, 0.0], [u * th.cos(), u * th.sin()]);
                        min_f = min_f.min(f);
                    }
                }
            }
            if min_f > 0.0 {
                return Ok(WitnessRegion {
                    species,
                    r0,
                    u0,
                    theta0,
                    min_f,
                });
            }
        }
        Err(Error::NoWitness(format!(
            "no admissible r0 for {}: e0 = {e0_low} and p0 = {p0} are not small enough",
            species.name()
        )))
    }
}

/// Velocity-space integral `int_0^{u_max} w(u) Theta(u) u du` where `Theta(u)`
/// is the angle integral of `h(a(u) + b(u) sin theta)` (or `2 pi` without an
/// angular profile), split at the given breakpoints.
fn polar_integral(
    gl: &GaussLegendre,
    quad: &QuadratureConfig,
    u_max: f64,
    mut cuts: Vec<f64>,
    weight: impl Fn(f64) -> f64,
    window: impl Fn(f64) -> (f64, f64),
    angular: Option<&Profile>,
) -> f64 {
    cuts.push(0.0);
    cuts.push(u_max);
    cuts.retain(|c| c.is_finite() && *c >= 0.0 && *c <= u_max);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let integrand = |u: f64| {
        let w = weight(u);
        if w == 0.0 {
            return 0.0;
        }
        let theta = match angular {
            Some(h) => {
                let (a, b) = window(u);
                theta_window_integral(|p| h.value(p), h.support(), a, b, gl, quad.panels_theta)
            }
            None => 2.0 * PI,
        };
        w * theta * u
    };
    cuts.windows(2)
        .map(|s| gl.composite_clustered(integrand, s[0], s[1], quad.panels_e))
        .sum()
}

fn vanishing_density(
    params: &PlasmaParams,
    matched: &MatchedProfiles,
    gl: &GaussLegendre,
    quad: &QuadratureConfig,
    species: Species,
    r: f64,
) -> f64 {
    let m = params.mass(species);
    let kappa = params.gyro_coefficient(species);
    let k_abs = kappa.abs();
    match matched.spec() {
        TrivialProfileSpec::EnergyOnly { mother } => {
            let (lo, hi) = mother.support();
            if hi <= 0.0 {
                return 0.0;
            }
            let u_max = (2.0 * hi).sqrt();
            let mut cuts = Vec::new();
            if lo > 0.0 {
                cuts.push((2.0 * lo).sqrt());
            }
            polar_integral(
                gl,
                quad,
                u_max,
                cuts,
                |u| matched.sigma1(species, 0.5 * m * u * u),
                |_| (0.0, 0.0),
                None,
            )
        }
        TrivialProfileSpec::AngularOnly { mother } => {
            let (_, hi) = mother.support();
            if hi <= 0.0 || mother.is_zero() {
                return 0.0;
            }
            let u_max = (r + (2.0 * hi).sqrt()) / k_abs;
            let mut cuts = Vec::new();
            for edge in [mother.support().0, hi] {
                if edge > 0.0 {
                    let s = (2.0 * edge).sqrt();
                    cuts.extend([(s - r) / k_abs, (s + r) / k_abs, (r - s) / k_abs]);
                }
            }
            polar_integral(
                gl,
                quad,
                u_max,
                cuts,
                |_| m * m,
                |u| (0.5 * r * r + 0.5 * kappa * kappa * u * u, kappa * r * u),
                Some(mother),
            )
        }
        TrivialProfileSpec::EnergyMomentum { energy, momentum } => {
            let (lo, hi) = energy.support();
            if hi <= 0.0 || energy.is_zero() || momentum.is_zero() {
                return 0.0;
            }
            // sigma3 = m^2 s(m E_kin) q(P) with m E_kin = m^2 u^2 / 2
            let u_max = (2.0 * hi).sqrt() / m;
            let a = 0.5 * r * r;
            let mut cuts = Vec::new();
            if lo > 0.0 {
                cuts.push((2.0 * lo).sqrt() / m);
            }
            if r > 0.0 {
                let (plo, phi) = momentum.support();
                cuts.extend([(a - plo).abs() / (k_abs * r), (a - phi).abs() / (k_abs * r)]);
            }
            polar_integral(
                gl,
                quad,
                u_max,
                cuts,
                |u| m * m * energy.value(0.5 * m * m * u * u),
                |u| (a, kappa * r * u),
                Some(momentum),
            )
        }
    }
}
