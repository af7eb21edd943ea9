//! The species density functional `g^alpha(r, phi)`: the velocity integral of
//! the product ansatz written in the energy variable, so that the radial
//! charge density is `rho^alpha(r) = g^alpha(r, phi(r))`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::{PlasmaParams, Species};
use crate::profiles::{Profile, ProfilePair};
use crate::quadrature::{GaussLegendre, QuadratureConfig};

/// Angle integral `int_0^{2 pi} h(a + b sin(theta)) d theta` for a profile `h`
/// that vanishes outside the open interval `support`.
///
/// The set where the argument lies inside the support is located exactly, so
/// each quadrature piece sees a smooth integrand. The two mirror arcs
/// `[t1, t2]` and `[pi - t2, pi - t1]` are integrated separately.
pub fn theta_window_integral<H: Fn(f64) -> f64>(
    h: H,
    support: (f64, f64),
    a: f64,
    b: f64,
    gl: &GaussLegendre,
    panels: usize,
) -> f64 {
    let (lo, hi) = support;
    if b == 0.0 {
        return if a > lo && a < hi { 2.0 * PI * h(a) } else { 0.0 };
    }
    let (mut s1, mut s2) = if b > 0.0 {
        ((lo - a) / b, (hi - a) / b)
    } else {
        ((hi - a) / b, (lo - a) / b)
    };
    s1 = s1.max(-1.0);
    s2 = s2.min(1.0);
    if !(s1 < s2) {
        return 0.0;
    }
    let t1 = s1.asin();
    let t2 = s2.asin();
    let f = |t: f64| h(a + b * t.sin());
    let rising = gl.composite(f, t1, t2, panels);
    let falling = gl.composite(f, PI - t2, PI - t1, panels);
    rising + falling
}

/// Radii in the shifted energy `w` at which an edge of the `sigma2` window
/// touches `sin(theta) = +-1`; the angle integral is only piecewise smooth in
/// `w` across these points.
fn window_breakpoints(support: (f64, f64), a: f64, kappa_r: f64, mass: f64, out: &mut Vec<f64>) {
    if kappa_r == 0.0 {
        return;
    }
    for edge in [support.0, support.1] {
        let t = (a - edge).abs();
        if t > 0.0 {
            let w = 0.5 * mass * (t / kappa_r).powi(2);
            out.push(w);
        }
    }
}

/// Evaluates `g^alpha`, its shifted form and `d g^alpha / d phi`.
#[derive(Debug, Clone)]
pub struct GEvaluator {
    params: PlasmaParams,
    profiles: ProfilePair,
    cfg: QuadratureConfig,
    gl: GaussLegendre,
}

#[derive(Clone, Copy)]
enum Form {
    Raw,
    Shifted,
    PhiDerivative,
}

impl GEvaluator {
    pub fn new(params: PlasmaParams, profiles: ProfilePair, cfg: QuadratureConfig) -> Result<Self> {
        cfg.validate()?;
        if !params.validate_beta() {
            return Err(Error::WeakField {
                beta: params.beta(),
                threshold: params.beta_threshold(),
            });
        }
        let gl = GaussLegendre::new(cfg.gl_order);
        Ok(Self {
            params,
            profiles,
            cfg,
            gl,
        })
    }

    pub fn params(&self) -> &PlasmaParams {
        &self.params
    }

    pub fn profiles(&self) -> &ProfilePair {
        &self.profiles
    }

    pub fn config(&self) -> &QuadratureConfig {
        &self.cfg
    }

    pub fn energy_cutoff(&self) -> f64 {
        self.profiles.energy_cutoff()
    }

    fn check_r(r: f64) -> Result<()> {
        if !(r >= 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be >= 0, got {r}")));
        }
        Ok(())
    }

    /// `g^alpha(r, phi)`, integrated in the energy `E` over `[alpha e phi, E0]`.
    pub fn eval_g(&self, species: Species, r: f64, phi: f64) -> Result<f64> {
        Self::check_r(r)?;
        Ok(self.integrate(species, r, phi, Form::Raw))
    }

    /// The same value with `E -> E + alpha e phi`, integrated over
    /// `[0, E0 - alpha e phi]`.
    pub fn eval_g_shifted(&self, species: Species, r: f64, phi: f64) -> Result<f64> {
        Self::check_r(r)?;
        Ok(self.integrate(species, r, phi, Form::Shifted))
    }

    /// `d g^alpha / d phi` by differentiating the shifted form under the integral.
    pub fn eval_dg_dphi(&self, species: Species, r: f64, phi: f64) -> Result<f64> {
        Self::check_r(r)?;
        Ok(self.integrate(species, r, phi, Form::PhiDerivative))
    }

    /// `g = g^+ - g^-`.
    pub fn eval_net_g(&self, r: f64, phi: f64) -> Result<f64> {
        Self::check_r(r)?;
        Ok(self.net_g(r, phi))
    }

    #[inline]
    pub(crate) fn net_g(&self, r: f64, phi: f64) -> f64 {
        self.integrate(Species::Plus, r, phi, Form::Raw) - self.integrate(Species::Minus, r, phi, Form::Raw)
    }

    #[inline]
    pub(crate) fn g(&self, species: Species, r: f64, phi: f64) -> f64 {
        self.integrate(species, r, phi, Form::Raw)
    }

    /// The Lipschitz-type bound `(2 pi e / m) (E0 + e |phi|) ||sigma1||_{C1b} ||sigma2||_inf`.
    pub fn dg_dphi_bound(&self, species: Species, phi: f64) -> f64 {
        let e = self.params.e();
        let p = self.profiles.get(species);
        2.0 * PI * e / self.params.mass(species)
            * (self.energy_cutoff() + e * phi.abs())
            * p.sigma1.c1b_norm()
            * p.sigma2.sup_norm()
    }

    /// Uniform bound `(2 pi / m) ||sigma1||_L1 ||sigma2||_inf`.
    pub fn g_bound(&self, species: Species) -> f64 {
        let p = self.profiles.get(species);
        2.0 * PI / self.params.mass(species) * p.sigma1.l1_norm() * p.sigma2.sup_norm()
    }

    fn integrate(&self, species: Species, r: f64, phi: f64, form: Form) -> f64 {
        let alpha = species.sign();
        let e = self.params.e();
        let mass = self.params.mass(species);
        let shift = alpha * e * phi;
        let cutoff = self.energy_cutoff();
        if shift >= cutoff {
            return 0.0;
        }
        let prof = self.profiles.get(species);
        let sigma1: &Profile = &prof.sigma1;
        let sigma2: &Profile = &prof.sigma2;
        if sigma1.is_zero() || sigma2.is_zero() {
            return 0.0;
        }
        let (e_low, _) = sigma1.support();
        // range in the shifted variable w = E - alpha e phi
        let w_lo = (e_low - shift).max(0.0);
        let w_hi = cutoff - shift;
        if !(w_lo < w_hi) {
            return 0.0;
        }

        let a = 0.5 * r * r;
        let kappa = self.params.gyro_coefficient(species);
        let kappa_r = kappa.abs() * r;
        let support2 = sigma2.support();

        let mut cuts = Vec::with_capacity(4);
        cuts.push(w_lo);
        window_breakpoints(support2, a, kappa_r, mass, &mut cuts);
        cuts.push(w_hi);
        cuts.retain(|&w| w >= w_lo && w <= w_hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();

        let panels_theta = self.cfg.panels_theta;
        let angle = |w: f64| {
            let b = kappa * r * (2.0 * w.max(0.0) / mass).sqrt();
            theta_window_integral(|p| sigma2.value(p), support2, a, b, &self.gl, panels_theta)
        };

        let mut total = 0.0;
        for seg in cuts.windows(2) {
            let (lo, hi) = (seg[0], seg[1]);
            if hi <= lo {
                continue;
            }
            total += match form {
                Form::Shifted => {
                    self.gl
                        .composite_clustered(|w| sigma1.value(w + shift) * angle(w), lo, hi, self.cfg.panels_e)
                }
                Form::PhiDerivative => {
                    self.gl
                        .composite_clustered(|w| sigma1.derivative(w + shift) * angle(w), lo, hi, self.cfg.panels_e)
                }
                Form::Raw => self.gl.composite_clustered(
                    // clamp: E - alpha e phi may round below zero at the lower limit
                    |en| sigma1.value(en) * angle((en - shift).max(0.0)),
                    lo + shift,
                    hi + shift,
                    self.cfg.panels_e,
                ),
            };
        }
        match form {
            Form::PhiDerivative => alpha * e * total / mass,
            _ => total / mass,
        }
    }
}
