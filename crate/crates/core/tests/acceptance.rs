//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails. Tolerances are pinned below.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mirror_steady::characteristics::{batch_drift, sample_confined, Drift, InitialCondition};
use mirror_steady::config::RunConfig;
use mirror_steady::density::GEvaluator;
use mirror_steady::params::ConfinementConstants;
use mirror_steady::potential::{self, picard_step, PicardConfig};
use mirror_steady::profiles::{Profile, ProfilePair, SpeciesProfiles};
use mirror_steady::quadrature::RadialRule;
use mirror_steady::verification::refinement_study;
use mirror_steady::{Species, SteadyState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SUPPORT_SAMPLES: usize = 10_000;
const SUPPORT_RUNTIME: Duration = Duration::from_secs(10);
const GROWTH_SLACK: f64 = 1e-10;
const POISSON_RELATIVE: f64 = 1e-4;
const POISSON_N: usize = 1 << 12;
const LADDER: [usize; 4] = [1 << 10, 1 << 11, 1 << 12, 1 << 13];
const ORDER_TARGET: f64 = 2.0;
const ORDER_HALFWIDTH: f64 = 0.3;
const POISSON_RUNTIME: Duration = Duration::from_secs(120);
const FIXED_POINT: f64 = 2e-10;
const RESTART: f64 = 1e-9;
const EXTERIOR_FLUX: f64 = 1e-8;
const NEUTRALITY: f64 = 1e-8;
const CONSTANCY: f64 = 1e-8;
const RADIUS_EXACT: f64 = 1e-12;
const TRAJECTORIES: usize = 100;
const DRIFT_STEP: f64 = 1e-3;
const DRIFT_HORIZON: f64 = 10.0;
const DRIFT_EP: f64 = 1e-8;
const DRIFT_F: f64 = 1e-6;
/// Coarse steps for the order study; at `h = 1e-3` drifts sit at rounding level.
const ORDER_STEPS: [f64; 3] = [0.2, 0.1, 0.05];
const ORDER_HORIZON: f64 = 2.0;
/// Lowest accepted `log2` drift ratio per halving (fourth order gives 4).
const RK_ORDER_MIN: f64 = 3.5;
const CHARACTERISTICS_RUNTIME: Duration = Duration::from_secs(60);
const MC_SAMPLES: usize = 16_000_000;
const MC_RELATIVE: f64 = 1e-2;
const DERIVATIVE_POINTS: usize = 100;
const DERIVATIVE_RELATIVE: f64 = 1e-4;
const FD_STEP: f64 = 1e-6;
const SEED: u64 = 20240;

struct Outcome {
    pass: bool,
    summary: String,
}

fn outcome(pass: bool, summary: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        summary: summary.into(),
    }
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn load(name: &str) -> RunConfig {
    RunConfig::load(&config_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

struct Toy {
    cfg: RunConfig,
    state: SteadyState,
    evaluator: GEvaluator,
    consts: ConfinementConstants,
}

impl Toy {
    fn rule(&self) -> RadialRule {
        self.cfg.quadrature.radial_rule
    }

    fn radius(&self) -> f64 {
        self.consts.radius
    }
}

fn annulus(rng: &mut ChaCha8Rng, inner: f64, outer: f64) -> [f64; 2] {
    // uniform in area
    let r = (rng.random_range(inner * inner..outer * outer)).sqrt();
    let t = rng.random_range(0.0..TAU);
    [r * t.cos(), r * t.sin()]
}

fn support_confinement(toy: &Toy) -> Outcome {
    let start = Instant::now();
    let r = toy.radius();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut worst = 0.0_f64;
    for k in 0..SUPPORT_SAMPLES {
        let species = Species::BOTH[k % 2];
        let (x, v) = if k % 4 < 2 {
            (
                annulus(&mut rng, r * (1.0 + 1e-12), 3.0 * r),
                annulus(&mut rng, 0.0, 3.0 * r),
            )
        } else {
            (
                annulus(&mut rng, 0.0, 3.0 * r),
                annulus(&mut rng, r * (1.0 + 1e-12), 3.0 * r),
            )
        };
        worst = worst.max(toy.state.eval_f(species, x, v).abs());
    }
    let elapsed = start.elapsed();
    outcome(
        worst == 0.0 && elapsed < SUPPORT_RUNTIME,
        format!("max |f| = {worst:e} over {SUPPORT_SAMPLES} samples beyond R = {r:.6}, {elapsed:.2?}"),
    )
}

fn growth_bound(toy: &Toy) -> Outcome {
    let sol = toy.state.solution();
    let slope = toy.consts.c0 * toy.consts.radius * toy.consts.e0;
    let excess = (0..sol.grid.len())
        .map(|i| sol.phi[i].abs() - slope * sol.grid.node(i))
        .fold(f64::NEG_INFINITY, f64::max);
    outcome(
        excess <= GROWTH_SLACK,
        format!("max(|phi| - c0 R E0 r) = {excess:.3e}, slope {slope:.6}"),
    )
}

/// Centred flux-form residual of `(r phi')' + 4 pi e r (rho+ - rho-)`, with
/// the net density re-evaluated from the potential samples.
fn independent_residual(evaluator: &GEvaluator, grid_phi: (&[f64], f64)) -> (f64, f64) {
    let (phi, h) = grid_phi;
    let e = evaluator.params().e();
    let net: Vec<f64> = (0..phi.len())
        .into_par_iter()
        .map(|i| evaluator.eval_net_g(i as f64 * h, phi[i]).expect("finite input"))
        .collect();
    let scale = (0..phi.len())
        .map(|i| (4.0 * PI * e * i as f64 * h * net[i]).abs())
        .fold(0.0, f64::max);
    let worst = (1..phi.len() - 1)
        .map(|i| {
            let r = i as f64 * h;
            let flux = (r + 0.5 * h) * (phi[i + 1] - phi[i]) - (r - 0.5 * h) * (phi[i] - phi[i - 1]);
            (flux / (h * h) + 4.0 * PI * e * r * net[i]).abs()
        })
        .fold(0.0, f64::max);
    (worst, scale)
}

fn poisson_residual(toy: &Toy) -> Outcome {
    let start = Instant::now();
    let sol = toy.state.solution();
    assert_eq!(sol.grid.intervals(), POISSON_N, "toy config must use n = 2^12");
    let (res, scale) = independent_residual(&toy.evaluator, (&sol.phi, sol.grid.step()));
    let relative = res / scale;
    let study = refinement_study(&toy.evaluator, &toy.consts, &toy.cfg.picard, toy.rule(), &LADDER);
    let elapsed = start.elapsed();
    let study = match study {
        Ok(s) => s,
        Err(e) => return outcome(false, format!("refinement study failed: {e}")),
    };
    let worst_order = study
        .orders
        .iter()
        .map(|o| (o - ORDER_TARGET).abs())
        .fold(0.0, f64::max);
    let orders: Vec<String> = study.orders.iter().map(|o| format!("{o:.3}")).collect();
    outcome(
        relative <= POISSON_RELATIVE && worst_order <= ORDER_HALFWIDTH && elapsed < POISSON_RUNTIME,
        format!(
            "relative residual {relative:.3e} at n = 2^12, orders [{}] over 2^10..2^13, {elapsed:.2?}",
            orders.join(", ")
        ),
    )
}

fn strictly_decreasing_after_third(history: &[f64]) -> bool {
    history
        .iter()
        .skip(2)
        .zip(history.iter().skip(3))
        .all(|(a, b)| b < a || *b == 0.0)
}

fn fixed_point_and_uniqueness(toy: &Toy) -> Outcome {
    let sol = toy.state.solution();
    let e = toy.evaluator.params().e();
    let image = match picard_step(&sol.grid, &sol.phi, &toy.evaluator, e, toy.rule()) {
        Ok(img) => img,
        Err(err) => return outcome(false, format!("picard step failed: {err}")),
    };
    let step_change = image
        .phi
        .iter()
        .zip(&sol.phi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let r_cut = toy.radius();
    let perturbed: Vec<f64> = sol
        .grid
        .nodes()
        .iter()
        .zip(&sol.phi)
        .map(|(&r, &p)| 1.5 * p + 0.1 * toy.consts.c_star * r * (PI * r / r_cut).sin().powi(2))
        .collect();
    let picard = PicardConfig {
        n: sol.grid.intervals(),
        ..toy.cfg.picard
    };
    let restart = match potential::solve_from(
        &toy.evaluator,
        &toy.consts,
        &picard,
        toy.rule(),
        sol.grid.clone(),
        perturbed,
    ) {
        Ok(r) => r,
        Err(err) => return outcome(false, format!("restart failed: {err}")),
    };
    let restart_gap = restart
        .phi
        .iter()
        .zip(&sol.phi)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let decreasing = strictly_decreasing_after_third(&sol.history) && strictly_decreasing_after_third(&restart.history);
    outcome(
        step_change <= FIXED_POINT && restart_gap <= RESTART && decreasing,
        format!(
            "sup|T phi - phi| = {step_change:.3e}, restart gap {restart_gap:.3e} after {} iterations, histories decreasing: {decreasing}",
            restart.iterations
        ),
    )
}

fn source_support(toy: &Toy) -> Outcome {
    let sol = toy.state.solution();
    let r_cut = toy.radius();
    let exterior: Vec<usize> = (0..sol.grid.len()).filter(|&i| sol.grid.node(i) > r_cut).collect();
    let worst_g = exterior
        .par_iter()
        .map(|&i| {
            toy.evaluator
                .eval_net_g(sol.grid.node(i), sol.phi[i])
                .expect("finite")
                .abs()
        })
        .reduce(|| 0.0, f64::max);
    let flux: Vec<f64> = exterior.iter().map(|&i| sol.grid.node(i) * sol.dphi[i]).collect();
    let hi = flux.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lo = flux.iter().cloned().fold(f64::INFINITY, f64::min);
    let spread = (hi - lo) / hi.abs().max(lo.abs());
    outcome(
        !exterior.is_empty() && worst_g == 0.0 && spread <= EXTERIOR_FLUX,
        format!(
            "{} nodes beyond R: max |g| = {worst_g:e}, r phi' spread {spread:.3e}",
            exterior.len()
        ),
    )
}

fn radial_densities(state: &SteadyState, radii: &[f64]) -> Vec<(f64, f64)> {
    radii
        .par_iter()
        .map(|&r| {
            (
                state.density_radial(Species::Minus, r),
                state.density_radial(Species::Plus, r),
            )
        })
        .collect()
}

fn neutrality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 6);
    let mut parts = Vec::new();
    let mut pass = true;
    for name in ["energy_only.cfg", "angular_only.cfg", "energy_momentum.cfg"] {
        let state = load(name).build_state().expect("vanishing state");
        let r_max = state.solution().grid.r_max();
        let radii: Vec<f64> = (0..100).map(|_| rng.random_range(0.0..r_max)).collect();
        let pairs = radial_densities(&state, &radii);
        let peak = pairs.iter().fold(0.0_f64, |m, (a, b)| m.max(*a).max(*b));
        let diff = pairs.iter().fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        let rel = diff / peak;
        pass &= peak > 0.0 && rel <= NEUTRALITY;
        parts.push(format!("{} {rel:.1e}", state.kind().name()));
        if name == "angular_only.cfg" {
            let low = pairs.iter().fold(f64::INFINITY, |m, (a, b)| m.min(*a).min(*b));
            let spread = (peak - low) / peak;
            pass &= spread <= CONSTANCY;
            parts.push(format!("angular_only constancy {spread:.1e}"));
        }
    }
    outcome(pass, format!("max|rho+ - rho-| / max rho: {}", parts.join(", ")))
}

fn energy_momentum_radii() -> Outcome {
    let state = load("energy_momentum.cfg").build_state().expect("family state");
    let m = state.params().m_min();
    let (e0, p0) = (2.0, 1.0);
    let expected_x = (4.0 * p0 + 2.0 * e0 / m).sqrt();
    let expected_v = (2.0 * e0 / m).sqrt();
    let support = state.support();
    let (Some(rx), Some(rv)) = (support.position, support.velocity) else {
        return outcome(false, "support radii missing");
    };
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 7);
    let mut outside = 0.0_f64;
    let mut inside_positive = 0usize;
    for k in 0..SUPPORT_SAMPLES {
        let species = Species::BOTH[k % 2];
        let (x, v) = if k % 4 < 2 {
            (
                annulus(&mut rng, rx * (1.0 + 1e-12), 3.0 * rx),
                annulus(&mut rng, 0.0, 3.0 * rv),
            )
        } else {
            (
                annulus(&mut rng, 0.0, 3.0 * rx),
                annulus(&mut rng, rv * (1.0 + 1e-12), 3.0 * rv),
            )
        };
        outside = outside.max(state.eval_f(species, x, v).abs());
        let (x, v) = (annulus(&mut rng, 0.0, rx), annulus(&mut rng, 0.0, rv));
        if state.eval_f(species, x, v) > 0.0 {
            inside_positive += 1;
        }
    }
    let pass = (rx - 8f64.sqrt()).abs() <= RADIUS_EXACT
        && (rx - expected_x).abs() <= RADIUS_EXACT
        && (rv - expected_v).abs() <= RADIUS_EXACT
        && outside == 0.0
        && inside_positive > 0;
    outcome(
        pass,
        format!(
            "|x| radius {rx:.15} (sqrt 8 = {:.15}), |v| radius {rv:.15}, max f outside {outside:e}, {inside_positive} positive inside",
            8f64.sqrt()
        ),
    )
}

fn drifts(state: &SteadyState, starts: &[InitialCondition], h: f64, horizon: f64) -> (Drift, f64) {
    batch_drift(state, starts, h, horizon).expect("integration stays finite")
}

fn characteristic_invariants(toy: &Toy) -> Outcome {
    let start = Instant::now();
    let starts = sample_confined(&toy.state, TRAJECTORIES, SEED + 8).expect("confined samples");
    let (gate, sup_f) = drifts(&toy.state, &starts, DRIFT_STEP, DRIFT_HORIZON);
    let f_gate = DRIFT_F * (1.0 + sup_f);
    let gates_ok = gate.energy <= DRIFT_EP && gate.momentum <= DRIFT_EP && gate.distribution <= f_gate;

    let ladder: Vec<Drift> = ORDER_STEPS
        .iter()
        .map(|&h| drifts(&toy.state, &starts, h, ORDER_HORIZON).0)
        .collect();
    let orders: Vec<[f64; 3]> = ladder
        .windows(2)
        .map(|w| {
            [
                (w[0].energy / w[1].energy).log2(),
                (w[0].momentum / w[1].momentum).log2(),
                (w[0].distribution / w[1].distribution).log2(),
            ]
        })
        .collect();
    let min_order = orders.iter().flatten().cloned().fold(f64::INFINITY, f64::min);
    let elapsed = start.elapsed();
    outcome(
        gates_ok && min_order >= RK_ORDER_MIN && elapsed < CHARACTERISTICS_RUNTIME,
        format!(
            "h = 1e-3, T = 10: dE {:.2e}, dP {:.2e}, df {:.2e} (gate {f_gate:.2e}); min observed order {min_order:.2} over h = {ORDER_STEPS:?}; {elapsed:.2?}",
            gate.energy, gate.momentum, gate.distribution
        ),
    )
}

/// Plain Monte-Carlo estimate of `int int f dx dv` with `x` and `v` uniform
/// on a disc of radius `radius` that contains the support of `f`.
fn monte_carlo_charge(state: &SteadyState, species: Species, radius: f64, samples: usize, seed: u64) -> f64 {
    const CHUNKS: usize = 64;
    let per_chunk = samples / CHUNKS;
    let total: f64 = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            (0..per_chunk)
                .map(|_| {
                    let x = annulus(&mut rng, 0.0, radius);
                    let v = annulus(&mut rng, 0.0, radius);
                    state.eval_f(species, x, v)
                })
                .sum::<f64>()
        })
        .sum();
    let disc = PI * radius * radius;
    total / (per_chunk * CHUNKS) as f64 * disc * disc
}

fn charge_positivity(toy: &Toy) -> Outcome {
    let prof = toy.evaluator.profiles();
    let r_cut = toy.radius();
    let windows_ok = Species::BOTH.iter().all(|&s| {
        let p = prof.get(s);
        p.e0_low() == -0.1 * toy.consts.e0 && (p.p0() - (-0.5 * r_cut * r_cut)).abs() <= 1e-12
    });
    let mut parts = Vec::new();
    let mut pass = windows_ok;
    for (k, s) in Species::BOTH.into_iter().enumerate() {
        let witness = toy.state.positivity_witness(s);
        let q = toy.state.total_charge(s);
        // f > 0 needs E < E0, so |v| < speed; and P < 0, which the strong field
        // rules out for |x| > |v|
        let e = toy.evaluator.params().e();
        let sup_phi = toy.state.potential().sup_abs();
        let speed = (2.0 * (toy.consts.e0 + e * sup_phi) / toy.evaluator.params().mass(s)).sqrt();
        let mc = monte_carlo_charge(&toy.state, s, speed.min(r_cut), MC_SAMPLES, SEED + 9 + k as u64);
        let rel = (mc - q).abs() / q;
        pass &= witness.is_ok() && q > 0.0 && rel <= MC_RELATIVE;
        parts.push(format!(
            "{}: witness r0 = {}, Q = {q:.6e}, MC rel diff {rel:.2e}",
            s.name(),
            witness.map_or_else(|e| e.to_string(), |w| format!("{:.3e}", w.r0))
        ));
    }
    outcome(
        pass,
        format!("windows e0 = -0.1 E0, p0 = -R^2/2: {windows_ok}; {}", parts.join("; ")),
    )
}

fn derivative_consistency(toy: &Toy) -> Outcome {
    let ev = &toy.evaluator;
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 10);
    let sol = toy.state.solution();
    // sample just past the outermost node carrying charge
    let occupied = (0..sol.grid.len())
        .filter(|&i| sol.rho_minus[i] > 0.0 || sol.rho_plus[i] > 0.0)
        .map(|i| sol.grid.node(i))
        .fold(0.0, f64::max);
    let r_cut = (1.1 * occupied).min(toy.radius());
    let phi_range = 0.1 * toy.consts.e0 / ev.params().e();
    let points: Vec<(Species, f64, f64)> = (0..DERIVATIVE_POINTS)
        .map(|k| {
            (
                Species::BOTH[k % 2],
                rng.random_range(0.0..r_cut),
                rng.random_range(-phi_range..phi_range),
            )
        })
        .collect();
    let rows: Vec<(f64, f64, f64)> = points
        .par_iter()
        .map(|&(s, r, phi)| {
            let d = ev.eval_dg_dphi(s, r, phi).expect("finite");
            let fd = (ev.eval_g(s, r, phi + FD_STEP).expect("finite")
                - ev.eval_g(s, r, phi - FD_STEP).expect("finite"))
                / (2.0 * FD_STEP);
            (d, fd, ev.dg_dphi_bound(s, phi))
        })
        .collect();
    let floor = rows.iter().map(|(d, _, _)| d.abs()).fold(0.0, f64::max) * 1e-6;
    let worst_rel = rows
        .iter()
        .map(|(d, fd, _)| (d - fd).abs() / d.abs().max(floor))
        .fold(0.0, f64::max);
    let bound_ok = rows.iter().all(|(d, _, b)| d.abs() <= *b);
    let nonzero = rows.iter().filter(|(d, _, _)| *d != 0.0).count();
    outcome(
        worst_rel <= DERIVATIVE_RELATIVE && bound_ok && nonzero > DERIVATIVE_POINTS / 2,
        format!("max relative FD mismatch {worst_rel:.2e} ({nonzero} nonzero), bound respected: {bound_ok}"),
    )
}

/// The reference configuration with its momentum window edge recomputed as
/// `-R^2/2` from the closed-form radius.
fn build_toy() -> Toy {
    let mut cfg = load("toy.cfg");
    let consts = cfg.confinement().expect("confinable");
    let p0 = -0.5 * consts.radius * consts.radius;
    let pair = cfg.profiles.clone().expect("self-consistent config");
    let reshape = |sp: &SpeciesProfiles| -> SpeciesProfiles {
        let Profile::Bump(b) = &sp.sigma2 else {
            panic!("toy uses bump profiles")
        };
        SpeciesProfiles {
            sigma1: sp.sigma1.clone(),
            sigma2: Profile::bump(p0, b.hi, b.amplitude, b.exponent).unwrap(),
        }
    };
    let pair = ProfilePair::new(reshape(pair.get(Species::Minus)), reshape(pair.get(Species::Plus))).unwrap();
    cfg.profiles = Some(pair.clone());
    let evaluator = GEvaluator::new(cfg.params, pair.clone(), cfg.quadrature).unwrap();
    let state = SteadyState::self_consistent(cfg.params, pair, cfg.quadrature, &cfg.picard).expect("toy solves");
    let consts = *state.confinement().expect("self-consistent");
    Toy {
        cfg,
        state,
        evaluator,
        consts,
    }
}

fn main() -> ExitCode {
    // the harness-free target still receives libtest flags; a `--list` request gets an empty answer
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let t0 = Instant::now();
    let toy = build_toy();
    println!(
        "toy state: c0 = {:.12}, E0 = {}, R = {:.12}, {} Picard iterations, built in {:.2?}",
        toy.consts.c0,
        toy.consts.e0,
        toy.consts.radius,
        toy.state.solution().iterations,
        t0.elapsed()
    );

    let criteria: [(&str, &dyn Fn() -> Outcome); 10] = [
        ("support confinement", &|| support_confinement(&toy)),
        ("growth bound", &|| growth_bound(&toy)),
        ("Poisson residual and refinement order", &|| poisson_residual(&toy)),
        ("fixed point and uniqueness", &|| fixed_point_and_uniqueness(&toy)),
        ("source support and exterior flux", &|| source_support(&toy)),
        ("neutrality of vanishing-potential families", &neutrality),
        ("energy-momentum support radii", &energy_momentum_radii),
        ("characteristic invariants", &|| characteristic_invariants(&toy)),
        ("charge positivity", &|| charge_positivity(&toy)),
        ("derivative consistency", &|| derivative_consistency(&toy)),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failures += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            o.summary
        );
    }
    println!(
        "acceptance: {}/{} passed in {:.2?}",
        criteria.len() - failures,
        criteria.len(),
        t0.elapsed()
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
