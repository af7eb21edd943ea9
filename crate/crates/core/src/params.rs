//! Physical constants, the magnetic-field condition and the scalar equations
//! tying the energy cutoff `E0` to the confinement radius `R`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::profiles::ProfileNorms;

/// Particle species. Electrons carry charge `-e`, ions `+e`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Species {
    Minus,
    Plus,
}

impl Species {
    pub const BOTH: [Species; 2] = [Species::Minus, Species::Plus];

    /// The charge sign alpha.
    pub fn sign(self) -> f64 {
        match self {
            Species::Minus => -1.0,
            Species::Plus => 1.0,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Species::Minus => 0,
            Species::Plus => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Species::Minus => "minus",
            Species::Plus => "plus",
        }
    }
}

/// Gaussian-unit constants of the two-component plasma in the field `B = beta e3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlasmaParams {
    e: f64,
    c: f64,
    m_minus: f64,
    m_plus: f64,
    beta: f64,
}

impl PlasmaParams {
    /// Validates positivity and the strong-field condition `beta >= 2 c m_bar / e`.
    pub fn new(e: f64, c: f64, m_minus: f64, m_plus: f64, beta: f64) -> Result<Self> {
        let params = Self::new_unchecked_field(e, c, m_minus, m_plus, beta)?;
        if !params.validate_beta() {
            return Err(Error::WeakField {
                beta,
                threshold: params.beta_threshold(),
            });
        }
        Ok(params)
    }

    /// Positivity checks only. Used for the vanishing-potential families (a) and
    /// (b), which do not need the strong-field condition.
    pub fn new_unchecked_field(e: f64, c: f64, m_minus: f64, m_plus: f64, beta: f64) -> Result<Self> {
        for (name, v) in [
            ("e", e),
            ("c", c),
            ("m_minus", m_minus),
            ("m_plus", m_plus),
            ("beta", beta),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and > 0, got {v}"
                )));
            }
        }
        Ok(Self {
            e,
            c,
            m_minus,
            m_plus,
            beta,
        })
    }

    pub fn e(&self) -> f64 {
        self.e
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mass(&self, species: Species) -> f64 {
        match species {
            Species::Minus => self.m_minus,
            Species::Plus => self.m_plus,
        }
    }

    /// `m = min(m_-, m_+)`.
    pub fn m_min(&self) -> f64 {
        self.m_minus.min(self.m_plus)
    }

    /// `m_bar = max(m_-, m_+)`.
    pub fn m_max(&self) -> f64 {
        self.m_minus.max(self.m_plus)
    }

    pub fn beta_threshold(&self) -> f64 {
        2.0 * self.c * self.m_max() / self.e
    }

    pub fn validate_beta(&self) -> bool {
        self.beta >= self.beta_threshold()
    }

    /// Signed gyration coefficient `alpha c m_alpha / (e beta)` entering `P^alpha`.
    pub fn gyro_coefficient(&self, species: Species) -> f64 {
        species.sign() * self.c * self.mass(species) / (self.e * self.beta)
    }
}

/// `c0 = 8 pi^2 e sum_alpha ||sigma1||_L1 ||sigma2||_inf / m_alpha`.
pub fn compute_c0(params: &PlasmaParams, norms: &[ProfileNorms; 2]) -> f64 {
    let pi = std::f64::consts::PI;
    let sum: f64 = Species::BOTH
        .iter()
        .map(|&s| {
            let n = &norms[s.index()];
            n.l1_sigma1 * n.sup_sigma2 / params.mass(s)
        })
        .sum();
    8.0 * pi * pi * params.e() * sum
}

/// Left side of the cutoff/radius relation: `a + sqrt(2 E0 / m + a^2)` with
/// `a = e c* / m`.
fn confinement_lhs(params: &PlasmaParams, c_star: f64, e0: f64) -> f64 {
    let m = params.m_min();
    let a = params.e() * c_star / m;
    a + (2.0 * e0 / m + a * a).sqrt()
}

/// Radius `R = e c*/m + sqrt(2 E0/m + (e c*/m)^2)` of the support estimate.
pub fn radius_from_cutoffs(params: &PlasmaParams, c_star: f64, e0: f64) -> f64 {
    confinement_lhs(params, c_star, e0)
}

const BISECTION_MAX_ITER: usize = 400;

/// Unique `E0 > 0` with `e c0 R E0/m + sqrt(2 E0/m + (e c0 R E0/m)^2) = R`.
///
/// The left side is strictly increasing in `E0`, vanishes at zero and is at
/// least `R` at `m R^2 / 2`, so plain bisection on that bracket converges.
pub fn solve_e0_for_radius(params: &PlasmaParams, c0: f64, radius: f64) -> Result<f64> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::InvalidArgument(format!("radius must be > 0, got {radius}")));
    }
    if !(c0.is_finite() && c0 >= 0.0) {
        return Err(Error::InvalidArgument(format!("c0 must be >= 0, got {c0}")));
    }
    let f = |e0: f64| confinement_lhs(params, c0 * radius * e0, e0) - radius;
    let mut lo = 0.0_f64;
    let mut hi = 0.5 * params.m_min() * radius * radius;
    if f(hi) == 0.0 {
        return Ok(hi);
    }
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let residual = f(root).abs();
    if residual > 1e-12 * radius {
        return Err(Error::Bisection {
            iterations: BISECTION_MAX_ITER,
            residual,
        });
    }
    Ok(root)
}

/// The constants tying the profiles to the support radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfinementConstants {
    pub c0: f64,
    pub e0: f64,
    pub radius: f64,
    /// Growth-bound slope `c* = c0 R E0`.
    pub c_star: f64,
}

impl ConfinementConstants {
    /// For a fixed energy cutoff the relation is solvable for `R` in closed
    /// form: with `a = e c0 E0 / m`, `R = sqrt(2 E0 / (m (1 - 2a)))`, which
    /// needs `a < 1/2`.
    pub fn from_energy_cutoff(params: &PlasmaParams, c0: f64, e0: f64) -> Result<Self> {
        if !(e0.is_finite() && e0 > 0.0) {
            return Err(Error::InvalidArgument(format!("E0 must be > 0, got {e0}")));
        }
        if !(c0.is_finite() && c0 >= 0.0) {
            return Err(Error::InvalidArgument(format!("c0 must be >= 0, got {c0}")));
        }
        let m = params.m_min();
        let a = params.e() * c0 * e0 / m;
        if a >= 0.5 {
            return Err(Error::Unconfinable(a));
        }
        let radius = (2.0 * e0 / (m * (1.0 - 2.0 * a))).sqrt();
        let out = Self {
            c0,
            e0,
            radius,
            c_star: c0 * radius * e0,
        };
        let back = radius_from_cutoffs(params, out.c_star, e0);
        if (back - radius).abs() > 1e-10 * radius {
            return Err(Error::Consistency(format!(
                "confinement radius {radius} does not reproduce itself ({back})"
            )));
        }
        Ok(out)
    }
}
