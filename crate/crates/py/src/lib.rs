//! Python bindings. Species are passed as the strings `"minus"` and `"plus"`;
//! phase-space points as pairs `(x1, x2)`.

use std::path::Path;

use mirror_steady::characteristics::{integrate, invariant_drift};
use mirror_steady::config::RunConfig;
use mirror_steady::density;
use mirror_steady::potential::PicardConfig;
use mirror_steady::profiles::{self, MonotoneTable, ProfilePair, SpeciesProfiles, TrivialProfileSpec};
use mirror_steady::quadrature::QuadratureConfig;
use mirror_steady::verification::{run_all, Check, VerificationConfig};
use mirror_steady::{params, steady_state, Error, Species};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::NonConvergence { .. } | Error::Consistency(_) | Error::Integration { .. } | Error::NoWitness(_) => {
            PyRuntimeError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn species(name: &str) -> PyResult<Species> {
    match name {
        "minus" | "-" => Ok(Species::Minus),
        "plus" | "+" => Ok(Species::Plus),
        _ => Err(PyValueError::new_err(format!(
            "species must be 'minus' or 'plus', got '{name}'"
        ))),
    }
}

/// Physical constants `e`, `c`, the two masses and the field strength `beta`.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct PlasmaParams(params::PlasmaParams);

#[pymethods]
impl PlasmaParams {
    #[new]
    fn new(e: f64, c: f64, m_minus: f64, m_plus: f64, beta: f64) -> PyResult<Self> {
        params::PlasmaParams::new(e, c, m_minus, m_plus, beta)
            .map(Self)
            .map_err(to_py)
    }

    #[getter]
    fn e(&self) -> f64 {
        self.0.e()
    }

    #[getter]
    fn c(&self) -> f64 {
        self.0.c()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.0.beta()
    }

    fn mass(&self, species_name: &str) -> PyResult<f64> {
        Ok(self.0.mass(species(species_name)?))
    }

    fn beta_threshold(&self) -> f64 {
        self.0.beta_threshold()
    }

    fn gyro_coefficient(&self, species_name: &str) -> PyResult<f64> {
        Ok(self.0.gyro_coefficient(species(species_name)?))
    }

    fn __repr__(&self) -> String {
        format!(
            "PlasmaParams(e={}, c={}, m_minus={}, m_plus={}, beta={})",
            self.0.e(),
            self.0.c(),
            self.0.mass(Species::Minus),
            self.0.mass(Species::Plus),
            self.0.beta()
        )
    }
}

/// A compactly supported, nonnegative profile function.
#[pyclass(frozen, from_py_object)]
#[derive(Clone)]
struct Profile(profiles::Profile);

#[pymethods]
impl Profile {
    /// `amplitude * ((hi - x)(x - lo) / half_width^2)^exponent` on `(lo, hi)`, zero elsewhere.
    #[staticmethod]
    fn bump(lo: f64, hi: f64, amplitude: f64, exponent: u32) -> PyResult<Self> {
        profiles::Profile::bump(lo, hi, amplitude, exponent)
            .map(Self)
            .map_err(to_py)
    }

    /// Piecewise-linear profile through `(x, y)` points.
    #[staticmethod]
    fn table(points: Vec<(f64, f64)>) -> PyResult<Self> {
        MonotoneTable::new(&points)
            .map(|t| Self(profiles::Profile::Table(t)))
            .map_err(to_py)
    }

    fn value(&self, x: f64) -> f64 {
        self.0.value(x)
    }

    fn derivative(&self, x: f64) -> f64 {
        self.0.derivative(x)
    }

    fn support(&self) -> (f64, f64) {
        self.0.support()
    }

    fn l1_norm(&self) -> f64 {
        self.0.l1_norm()
    }

    fn sup_norm(&self) -> f64 {
        self.0.sup_norm()
    }
}

fn pair(minus: (Profile, Profile), plus: (Profile, Profile)) -> PyResult<ProfilePair> {
    let sp = |(s1, s2): (Profile, Profile)| SpeciesProfiles {
        sigma1: s1.0,
        sigma2: s2.0,
    };
    ProfilePair::new(sp(minus), sp(plus)).map_err(to_py)
}

fn quadrature(gl_order: usize, panels_e: usize, panels_theta: usize) -> QuadratureConfig {
    QuadratureConfig {
        gl_order,
        panels_e,
        panels_theta,
        ..QuadratureConfig::default()
    }
}

/// Pointwise evaluator of the spatial density `g(r, phi)` for a product ansatz.
#[pyclass(frozen)]
struct DensityEvaluator(density::GEvaluator);

#[pymethods]
impl DensityEvaluator {
    /// `minus` and `plus` are `(sigma1, sigma2)` profile pairs.
    #[new]
    #[pyo3(signature = (params, minus, plus, gl_order = 16, panels_e = 2, panels_theta = 1))]
    fn new(
        params: PlasmaParams,
        minus: (Profile, Profile),
        plus: (Profile, Profile),
        gl_order: usize,
        panels_e: usize,
        panels_theta: usize,
    ) -> PyResult<Self> {
        let quad = quadrature(gl_order, panels_e, panels_theta);
        density::GEvaluator::new(params.0, pair(minus, plus)?, quad)
            .map(Self)
            .map_err(to_py)
    }

    fn eval_g(&self, species_name: &str, r: f64, phi: f64) -> PyResult<f64> {
        self.0.eval_g(species(species_name)?, r, phi).map_err(to_py)
    }

    fn eval_dg_dphi(&self, species_name: &str, r: f64, phi: f64) -> PyResult<f64> {
        self.0.eval_dg_dphi(species(species_name)?, r, phi).map_err(to_py)
    }

    fn eval_net_g(&self, r: f64, phi: f64) -> PyResult<f64> {
        self.0.eval_net_g(r, phi).map_err(to_py)
    }

    fn dg_dphi_bound(&self, species_name: &str, phi: f64) -> PyResult<f64> {
        Ok(self.0.dg_dphi_bound(species(species_name)?, phi))
    }

    fn energy_cutoff(&self) -> f64 {
        self.0.energy_cutoff()
    }
}

/// A solved or assembled steady state.
#[pyclass(frozen)]
struct SteadyState(steady_state::SteadyState);

#[pymethods]
impl SteadyState {
    /// Solves the self-consistent potential by Picard iteration.
    #[staticmethod]
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (params, minus, plus, n = 4096, tol = 1e-10, max_iter = 200, r_max_factor = 1.25))]
    fn solve(
        py: Python<'_>,
        params: PlasmaParams,
        minus: (Profile, Profile),
        plus: (Profile, Profile),
        n: usize,
        tol: f64,
        max_iter: usize,
        r_max_factor: f64,
    ) -> PyResult<Self> {
        let pair = pair(minus, plus)?;
        let picard = PicardConfig {
            tol,
            max_iter,
            n,
            r_max_factor,
        };
        py.detach(|| steady_state::SteadyState::self_consistent(params.0, pair, QuadratureConfig::default(), &picard))
            .map(Self)
            .map_err(to_py)
    }

    /// Builds a vanishing-potential state. `kind` is `energy_only` or
    /// `angular_only` (with `mother`) or `energy_momentum` (with `energy`
    /// and `momentum`).
    #[staticmethod]
    #[pyo3(signature = (kind, params, mother = None, energy = None, momentum = None, n = 256, r_max = None))]
    fn vanishing(
        kind: &str,
        params: PlasmaParams,
        mother: Option<Profile>,
        energy: Option<Profile>,
        momentum: Option<Profile>,
        n: usize,
        r_max: Option<f64>,
    ) -> PyResult<Self> {
        let missing = |what: &str| PyValueError::new_err(format!("{kind} needs `{what}`"));
        let spec = match kind {
            "energy_only" => TrivialProfileSpec::EnergyOnly {
                mother: mother.ok_or_else(|| missing("mother"))?.0,
            },
            "angular_only" => TrivialProfileSpec::AngularOnly {
                mother: mother.ok_or_else(|| missing("mother"))?.0,
            },
            "energy_momentum" => TrivialProfileSpec::EnergyMomentum {
                energy: energy.ok_or_else(|| missing("energy"))?.0,
                momentum: momentum.ok_or_else(|| missing("momentum"))?.0,
            },
            other => return Err(PyValueError::new_err(format!("unknown vanishing kind '{other}'"))),
        };
        steady_state::SteadyState::vanishing(spec, params.0, QuadratureConfig::default(), n, r_max)
            .map(Self)
            .map_err(to_py)
    }

    /// Loads a run configuration file and builds its state.
    #[staticmethod]
    fn from_config(py: Python<'_>, path: &str) -> PyResult<Self> {
        let cfg = RunConfig::load(Path::new(path)).map_err(to_py)?;
        py.detach(|| cfg.build_state()).map(Self).map_err(to_py)
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.0.kind().name()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.solution().iterations
    }

    #[getter]
    fn history(&self) -> Vec<f64> {
        self.0.solution().history.clone()
    }

    /// `c0`, `E0`, `R` and the growth slope, or `None` for vanishing kinds.
    fn confinement<'py>(&self, py: Python<'py>) -> PyResult<Option<Bound<'py, PyDict>>> {
        let Some(k) = self.0.confinement() else {
            return Ok(None);
        };
        let d = PyDict::new(py);
        d.set_item("c0", k.c0)?;
        d.set_item("e0", k.e0)?;
        d.set_item("radius", k.radius)?;
        d.set_item("c_star", k.c_star)?;
        Ok(Some(d))
    }

    /// `(position, velocity)` support radii; either may be `None`.
    fn support(&self) -> (Option<f64>, Option<f64>) {
        let s = self.0.support();
        (s.position, s.velocity)
    }

    fn grid(&self) -> Vec<f64> {
        self.0.solution().grid.nodes()
    }

    fn phi_samples(&self) -> Vec<f64> {
        self.0.solution().phi.clone()
    }

    fn density_samples(&self, species_name: &str) -> PyResult<Vec<f64>> {
        Ok(self.0.solution().density(species(species_name)?).to_vec())
    }

    /// `(phi(r), phi'(r))` from the interpolated potential.
    fn potential(&self, r: f64) -> (f64, f64) {
        self.0.potential().eval(r)
    }

    fn eval_f(&self, species_name: &str, x: [f64; 2], v: [f64; 2]) -> PyResult<f64> {
        Ok(self.0.eval_f(species(species_name)?, x, v))
    }

    fn density(&self, species_name: &str, r: f64) -> PyResult<f64> {
        Ok(self.0.density_radial(species(species_name)?, r))
    }

    fn energy(&self, species_name: &str, x: [f64; 2], v: [f64; 2]) -> PyResult<f64> {
        Ok(self.0.invariants().energy(species(species_name)?, x, v))
    }

    fn momentum(&self, species_name: &str, x: [f64; 2], v: [f64; 2]) -> PyResult<f64> {
        Ok(self.0.invariants().momentum(species(species_name)?, x, v))
    }

    fn total_charge(&self, species_name: &str) -> PyResult<f64> {
        Ok(self.0.total_charge(species(species_name)?))
    }

    fn net_charge(&self) -> f64 {
        self.0.net_charge()
    }

    fn charge_is_finite(&self) -> bool {
        self.0.charge_is_finite()
    }

    /// The annular region on which `f > 0` was certified, as a dict.
    fn positivity_witness<'py>(&self, py: Python<'py>, species_name: &str) -> PyResult<Bound<'py, PyDict>> {
        let w = self.0.positivity_witness(species(species_name)?).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("r0", w.r0)?;
        d.set_item("u0", w.u0)?;
        d.set_item("theta0", w.theta0)?;
        d.set_item("min_f", w.min_f)?;
        Ok(d)
    }

    /// RK4 characteristic; returns a dict of per-step lists plus the drifts.
    fn characteristic<'py>(
        &self,
        py: Python<'py>,
        species_name: &str,
        x: [f64; 2],
        v: [f64; 2],
        step: f64,
        n_steps: usize,
    ) -> PyResult<Bound<'py, PyDict>> {
        let s = species(species_name)?;
        let traj = py
            .detach(|| integrate(&self.0, s, x, v, step, n_steps))
            .map_err(to_py)?;
        let drift = invariant_drift(&traj);
        let d = PyDict::new(py);
        d.set_item("x", traj.x.clone())?;
        d.set_item("v", traj.v.clone())?;
        d.set_item("energy", traj.energy.clone())?;
        d.set_item("momentum", traj.momentum.clone())?;
        d.set_item("f", traj.f.clone())?;
        d.set_item("drift", (drift.energy, drift.momentum, drift.distribution))?;
        Ok(d)
    }

    /// Runs the verification checks and returns `(all_passed, report_json)`.
    #[pyo3(signature = (skip = Vec::new(), trajectories = 100, horizon = 10.0, ladder = None, seed = 2024))]
    fn verify(
        &self,
        py: Python<'_>,
        skip: Vec<String>,
        trajectories: usize,
        horizon: f64,
        ladder: Option<Vec<usize>>,
        seed: u64,
    ) -> PyResult<(bool, String)> {
        let mut cfg = VerificationConfig {
            trajectories,
            horizon,
            seed,
            ..VerificationConfig::default()
        };
        if let Some(l) = ladder {
            cfg.ladder = l;
        }
        for name in &skip {
            let c = Check::parse(name).ok_or_else(|| PyValueError::new_err(format!("unknown check '{name}'")))?;
            cfg.disabled.insert(c);
        }
        let report = py.detach(|| run_all(&self.0, &cfg)).map_err(to_py)?;
        Ok((report.pass(), report.to_json()))
    }
}

#[pymodule]
fn mirror_steady_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PlasmaParams>()?;
    m.add_class::<Profile>()?;
    m.add_class::<DensityEvaluator>()?;
    m.add_class::<SteadyState>()?;
    Ok(())
}
