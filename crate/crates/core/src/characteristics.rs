//! Classical RK4 integration of the characteristic flow
//! `x' = v`, `v' = (alpha e / m) [ -(x/|x|) phi'(|x|) + (beta/c) v_perp ]`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Species;
use crate::steady_state::{perp, SteadyState};

/// A sampled characteristic curve together with the invariants along it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub species: Species,
    pub step: f64,
    pub x: Vec<[f64; 2]>,
    pub v: Vec<[f64; 2]>,
    pub energy: Vec<f64>,
    pub momentum: Vec<f64>,
    pub f: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.step
    }
}

/// Largest deviations of `E`, `P` and `f` from their initial values.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Drift {
    pub energy: f64,
    pub momentum: f64,
    pub distribution: f64,
}

impl Drift {
    pub fn max(self, other: Drift) -> Drift {
        Drift {
            energy: self.energy.max(other.energy),
            momentum: self.momentum.max(other.momentum),
            distribution: self.distribution.max(other.distribution),
        }
    }
}

struct Field<'a> {
    state: &'a SteadyState,
    charge_over_mass: f64,
    cyclotron: f64,
}

impl Field<'_> {
    #[inline]
    fn rhs(&self, x: [f64; 2], v: [f64; 2]) -> ([f64; 2], [f64; 2]) {
        let r = x[0].hypot(x[1]);
        // the radial field is taken as zero on the axis
        let radial = if r > 0.0 {
            -self.state.potential().derivative(r) / r
        } else {
            0.0
        };
        let vp = perp(v);
        let a = [
            self.charge_over_mass * (radial * x[0] + self.cyclotron * vp[0]),
            self.charge_over_mass * (radial * x[1] + self.cyclotron * vp[1]),
        ];
        (v, a)
    }
}

#[inline]
fn axpy(x: [f64; 2], a: f64, d: [f64; 2]) -> [f64; 2] {
    [x[0] + a * d[0], x[1] + a * d[1]]
}

/// Integrates `n_steps` steps of size `h` from `(x0, v0)`.
pub fn integrate(
    state: &SteadyState,
    species: Species,
    x0: [f64; 2],
    v0: [f64; 2],
    h: f64,
    n_steps: usize,
) -> Result<Trajectory> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {h}")));
    }
    if x0 == [0.0, 0.0] && v0 == [0.0, 0.0] {
        return Err(Error::InvalidArgument(
            "initial state must have nonzero position or velocity".into(),
        ));
    }
    let params = state.params();
    let field = Field {
        state,
        charge_over_mass: species.sign() * params.e() / params.mass(species),
        cyclotron: params.beta() / params.c(),
    };
    let q = state.invariants();
    let mut traj = Trajectory {
        species,
        step: h,
        x: Vec::with_capacity(n_steps + 1),
        v: Vec::with_capacity(n_steps + 1),
        energy: Vec::with_capacity(n_steps + 1),
        momentum: Vec::with_capacity(n_steps + 1),
        f: Vec::with_capacity(n_steps + 1),
    };
    let mut record = |x: [f64; 2], v: [f64; 2]| {
        traj.x.push(x);
        traj.v.push(v);
        traj.energy.push(q.energy(species, x, v));
        traj.momentum.push(q.momentum(species, x, v));
        traj.f.push(state.eval_f(species, x, v));
    };
    let (mut x, mut v) = (x0, v0);
    record(x, v);
    for step in 1..=n_steps {
        let (k1x, k1v) = field.rhs(x, v);
        let (k2x, k2v) = field.rhs(axpy(x, 0.5 * h, k1x), axpy(v, 0.5 * h, k1v));
        let (k3x, k3v) = field.rhs(axpy(x, 0.5 * h, k2x), axpy(v, 0.5 * h, k2v));
        let (k4x, k4v) = field.rhs(axpy(x, h, k3x), axpy(v, h, k3v));
        for i in 0..2 {
            x[i] += h / 6.0 * (k1x[i] + 2.0 * k2x[i] + 2.0 * k3x[i] + k4x[i]);
            v[i] += h / 6.0 * (k1v[i] + 2.0 * k2v[i] + 2.0 * k3v[i] + k4v[i]);
        }
        if !(x.iter().chain(&v).all(|c| c.is_finite())) {
            return Err(Error::Integration { step });
        }
        record(x, v);
    }
    Ok(traj)
}

pub fn invariant_drift(traj: &Trajectory) -> Drift {
    let dev = |s: &[f64]| s.iter().map(|&y| (y - s[0]).abs()).fold(0.0, f64::max);
    if traj.is_empty() {
        return Drift::default();
    }
    Drift {
        energy: dev(&traj.energy),
        momentum: dev(&traj.momentum),
        distribution: dev(&traj.f),
    }
}

/// A starting point inside the support of `f^alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialCondition {
    pub species: Species,
    pub x: [f64; 2],
    pub v: [f64; 2],
}

/// Draws `count` phase points with `f > 0`, alternating species, by rejection
/// from the product of the position and velocity support discs.
pub fn sample_confined(state: &SteadyState, count: usize, seed: u64) -> Result<Vec<InitialCondition>> {
    let support = state.support();
    let rx = support.position.unwrap_or(1.0);
    let rv = support.velocity.unwrap_or(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    let budget = 10_000 * count.max(1);
    let disc = |rng: &mut ChaCha8Rng, radius: f64| {
        let r = radius * rng.random_range(0.0..1.0f64).sqrt();
        let t = rng.random_range(0.0..std::f64::consts::TAU);
        [r * t.cos(), r * t.sin()]
    };
    for attempt in 0..budget {
        if out.len() == count {
            break;
        }
        let species = Species::BOTH[out.len() % 2];
        let x = disc(&mut rng, rx);
        let v = disc(&mut rng, rv);
        if state.eval_f(species, x, v) > 0.0 {
            out.push(InitialCondition { species, x, v });
        }
        if attempt + 1 == budget {
            return Err(Error::InvalidArgument(format!(
                "found only {} of {count} points with f > 0",
                out.len()
            )));
        }
    }
    Ok(out)
}

/// Integrates every initial condition to time `t_end` and returns the
/// largest drifts together with `sup f` over the starting points.
pub fn batch_drift(state: &SteadyState, starts: &[InitialCondition], h: f64, t_end: f64) -> Result<(Drift, f64)> {
    let n_steps = (t_end / h).round() as usize;
    let results: Vec<Result<Drift>> = starts
        .par_iter()
        .map(|ic| integrate(state, ic.species, ic.x, ic.v, h, n_steps).map(|t| invariant_drift(&t)))
        .collect();
    let mut worst = Drift::default();
    for r in results {
        worst = worst.max(r?);
    }
    let sup_f = starts
        .iter()
        .map(|ic| state.eval_f(ic.species, ic.x, ic.v))
        .fold(0.0, f64::max);
    Ok((worst, sup_f))
}
