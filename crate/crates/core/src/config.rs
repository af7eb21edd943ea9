//! Run configuration in a flat `key = value` text format.
//!
//! Keys use dotted prefixes (`params.beta = 4`), `#` starts a comment, and
//! profiles are written as `bump(lo, hi, amplitude, exponent)` or
//! `table(path.csv)` with paths relative to the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::characteristics::InitialCondition;
use crate::error::{Error, Result};
use crate::params::{compute_c0, ConfinementConstants, PlasmaParams, Species};
use crate::potential::PicardConfig;
use crate::profiles::{MonotoneTable, Profile, ProfilePair, SpeciesProfiles, TrivialProfileSpec};
use crate::quadrature::{QuadratureConfig, RadialRule};
use crate::steady_state::{StateKind, SteadyState};
use crate::verification::{Check, VerificationConfig};

/// Settings of the trajectory batch written by the characteristics command.
#[derive(Debug, Clone, PartialEq)]
pub struct CharacteristicsConfig {
    /// Number of seeded starts drawn inside the support when `starts` is empty.
    pub count: usize,
    pub step: f64,
    pub horizon: f64,
    /// Write every `stride`-th step.
    pub stride: usize,
    pub starts: Vec<InitialCondition>,
}

impl Default for CharacteristicsConfig {
    fn default() -> Self {
        Self {
            count: 10,
            step: 1e-3,
            horizon: 10.0,
            stride: 10,
            starts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub kind: StateKind,
    pub params: PlasmaParams,
    /// Profiles of the self-consistent kind.
    pub profiles: Option<ProfilePair>,
    /// Mother profiles of the vanishing-potential kinds.
    pub family: Option<TrivialProfileSpec>,
    pub quadrature: QuadratureConfig,
    pub picard: PicardConfig,
    /// Sampling radius for the vanishing-potential kinds.
    pub r_max: Option<f64>,
    pub output: PathBuf,
    pub seed: u64,
    pub verification: VerificationConfig,
    pub characteristics: CharacteristicsConfig,
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected `key = value`", i + 1)));
            };
            let key = k.trim().to_string();
            if key.is_empty() {
                return Err(Error::Config(format!("line {}: empty key", i + 1)));
            }
            if map.insert(key.clone(), (i + 1, v.trim().to_string())).is_some() {
                return Err(Error::Config(format!("line {}: duplicate key `{key}`", i + 1)));
            }
        }
        Ok(Self { map })
    }

    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn take_prefixed(&mut self, prefix: &str) -> Vec<(String, usize, String)> {
        let keys: Vec<String> = self.map.keys().filter(|k| k.starts_with(prefix)).cloned().collect();
        keys.into_iter()
            .map(|k| {
                let (line, v) = self.map.remove(&k).expect("key listed");
                (k, line, v)
            })
            .collect()
    }

    fn num<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>> {
        match self.take(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| Error::Config(format!("line {line}: `{key}` has invalid value `{v}`"))),
        }
    }

    fn required<T: std::str::FromStr>(&mut self, key: &str) -> Result<T> {
        self.num(key)?
            .ok_or_else(|| Error::Config(format!("missing required key `{key}`")))
    }

    fn finish(self) -> Result<()> {
        match self.map.iter().next() {
            None => Ok(()),
            Some((k, (line, _))) => Err(Error::Config(format!("line {line}: unknown key `{k}`"))),
        }
    }
}

fn parse_profile(text: &str, base: &Path, line: usize) -> Result<Profile> {
    let err = |msg: String| Error::Config(format!("line {line}: {msg}"));
    let text = text.trim();
    let (name, rest) = text
        .split_once('(')
        .ok_or_else(|| err(format!("expected bump(...) or table(...), got `{text}`")))?;
    let args = rest
        .strip_suffix(')')
        .ok_or_else(|| err(format!("missing closing parenthesis in `{text}`")))?;
    match name.trim() {
        "bump" => {
            let parts: Vec<&str> = args.split(',').map(str::trim).collect();
            if parts.len() != 4 {
                return Err(err("bump takes (lo, hi, amplitude, exponent)".into()));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
            let k = parts[3]
                .parse::<u32>()
                .map_err(|_| err(format!("bad exponent `{}`", parts[3])))?;
            Profile::bump(num(parts[0])?, num(parts[1])?, num(parts[2])?, k).map_err(|e| err(e.to_string()))
        }
        "table" => {
            let path = base.join(args.trim());
            let csv = std::fs::read_to_string(&path).map_err(|e| err(format!("{}: {e}", path.display())))?;
            MonotoneTable::from_csv(&csv)
                .map(Profile::Table)
                .map_err(|e| err(e.to_string()))
        }
        other => Err(err(format!("unknown profile type `{other}`"))),
    }
}

fn parse_start(text: &str, line: usize) -> Result<InitialCondition> {
    let parts: Vec<&str> = text.split_whitespace().collect();
    let err = || Error::Config(format!("line {line}: expected `minus|plus x1 x2 v1 v2`, got `{text}`"));
    if parts.len() != 5 {
        return Err(err());
    }
    let species = match parts[0] {
        "minus" => Species::Minus,
        "plus" => Species::Plus,
        _ => return Err(err()),
    };
    let n: Vec<f64> = parts[1..]
        .iter()
        .map(|s| s.parse::<f64>().map_err(|_| err()))
        .collect::<Result<_>>()?;
    Ok(InitialCondition {
        species,
        x: [n[0], n[1]],
        v: [n[2], n[3]],
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses and validates a configuration; `base` resolves relative paths.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut en = Entries::parse(text)?;
        let kind_text: String = en.required("kind")?;
        let kind = StateKind::parse(&kind_text).ok_or_else(|| Error::Config(format!("unknown kind `{kind_text}`")))?;

        let (e, c) = (en.required("params.e")?, en.required("params.c")?);
        let (m_minus, m_plus) = (en.required("params.m_minus")?, en.required("params.m_plus")?);
        let beta = en.required("params.beta")?;
        let params = match kind {
            StateKind::EnergyOnly | StateKind::AngularOnly => {
                PlasmaParams::new_unchecked_field(e, c, m_minus, m_plus, beta)?
            }
            _ => PlasmaParams::new(e, c, m_minus, m_plus, beta)?,
        };

        let mut quadrature = QuadratureConfig::default();
        if let Some(v) = en.num("quadrature.gl_order")? {
            quadrature.gl_order = v;
        }
        if let Some(v) = en.num("quadrature.panels_e")? {
            quadrature.panels_e = v;
        }
        if let Some(v) = en.num("quadrature.panels_theta")? {
            quadrature.panels_theta = v;
        }
        if let Some((line, v)) = en.take("quadrature.radial_rule") {
            quadrature.radial_rule = match v.as_str() {
                "simpson" => RadialRule::Simpson,
                "trapezoid" => RadialRule::Trapezoid,
                _ => {
                    return Err(Error::Config(format!(
                        "line {line}: radial_rule must be simpson or trapezoid"
                    )))
                }
            };
        }
        quadrature.validate()?;

        let mut picard = PicardConfig::default();
        if let Some(v) = en.num("grid.n")? {
            picard.n = v;
        }
        if let Some(v) = en.num("grid.r_max_factor")? {
            picard.r_max_factor = v;
        }
        if let Some(v) = en.num("picard.tol")? {
            picard.tol = v;
        }
        if let Some(v) = en.num("picard.max_iter")? {
            picard.max_iter = v;
        }
        picard.validate()?;
        let r_max = en.num("grid.r_max")?;

        let mut profile = |key: &str| -> Result<Option<Profile>> {
            en.take(key).map(|(line, v)| parse_profile(&v, base, line)).transpose()
        };
        let mut profiles = None;
        let mut family = None;
        match kind {
            StateKind::SelfConsistent => {
                let mut get =
                    |key: &str| profile(key)?.ok_or_else(|| Error::Config(format!("missing required key `{key}`")));
                let minus = SpeciesProfiles {
                    sigma1: get("profile.minus.sigma1")?,
                    sigma2: get("profile.minus.sigma2")?,
                };
                let plus = SpeciesProfiles {
                    sigma1: get("profile.plus.sigma1")?,
                    sigma2: get("profile.plus.sigma2")?,
                };
                let pair = ProfilePair::new(minus, plus)?;
                // fail before any computation if no finite radius exists
                let c0 = compute_c0(&params, &pair.norms());
                ConfinementConstants::from_energy_cutoff(&params, c0, pair.energy_cutoff())?;
                profiles = Some(pair);
            }
            StateKind::EnergyOnly | StateKind::AngularOnly => {
                let mother = profile("family.mother")?
                    .ok_or_else(|| Error::Config("missing required key `family.mother`".into()))?;
                family = Some(if kind == StateKind::EnergyOnly {
                    TrivialProfileSpec::EnergyOnly { mother }
                } else {
                    TrivialProfileSpec::AngularOnly { mother }
                });
            }
            StateKind::EnergyMomentum => {
                let energy = profile("family.energy")?
                    .ok_or_else(|| Error::Config("missing required key `family.energy`".into()))?;
                let momentum = profile("family.momentum")?
                    .ok_or_else(|| Error::Config("missing required key `family.momentum`".into()))?;
                family = Some(TrivialProfileSpec::EnergyMomentum { energy, momentum });
            }
        }
        if let Some(spec) = &family {
            crate::profiles::make_matched_pair(spec.clone(), &params)?;
        }

        let output = en
            .take("output")
            .map(|(_, v)| base.join(v))
            .unwrap_or_else(|| base.join("out"));
        let seed = en.num("seed")?.unwrap_or(2024);

        let mut verification = VerificationConfig {
            seed,
            picard,
            ..VerificationConfig::default()
        };
        if let Some((line, v)) = en.take("verify.disable") {
            for name in v.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let check =
                    Check::parse(name).ok_or_else(|| Error::Config(format!("line {line}: unknown check `{name}`")))?;
                verification.disabled.insert(check);
            }
        }
        if let Some(v) = en.num("verify.support_samples")? {
            verification.support_samples = v;
        }
        if let Some(v) = en.num("verify.neutrality_radii")? {
            verification.neutrality_radii = v;
        }
        if let Some(v) = en.num("verify.trajectories")? {
            verification.trajectories = v;
        }
        if let Some(v) = en.num("verify.step")? {
            verification.step = v;
        }
        if let Some(v) = en.num("verify.horizon")? {
            verification.horizon = v;
        }
        if let Some((line, v)) = en.take("verify.ladder") {
            verification.ladder = v
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Config(format!("line {line}: ladder must be a list of grid sizes")))?;
        }
        let t = &mut verification.tolerances;
        for (key, slot) in [
            ("verify.tol.poisson_relative", &mut t.poisson_relative),
            ("verify.tol.growth", &mut t.growth),
            ("verify.tol.neutrality_relative", &mut t.neutrality_relative),
            ("verify.tol.density_constancy", &mut t.density_constancy),
            ("verify.tol.exterior_flux", &mut t.exterior_flux),
            ("verify.tol.fixed_point", &mut t.fixed_point),
            ("verify.tol.uniqueness", &mut t.uniqueness),
            ("verify.tol.order_target", &mut t.order_target),
            ("verify.tol.order_halfwidth", &mut t.order_halfwidth),
            ("verify.tol.drift_energy", &mut t.drift_energy),
            ("verify.tol.drift_momentum", &mut t.drift_momentum),
            ("verify.tol.drift_f", &mut t.drift_f),
        ] {
            if let Some(v) = en.num(key)? {
                *slot = v;
            }
        }

        let mut characteristics = CharacteristicsConfig::default();
        if let Some(v) = en.num("characteristics.count")? {
            characteristics.count = v;
        }
        if let Some(v) = en.num("characteristics.step")? {
            characteristics.step = v;
        }
        if let Some(v) = en.num("characteristics.horizon")? {
            characteristics.horizon = v;
        }
        if let Some(v) = en.num::<usize>("characteristics.stride")? {
            characteristics.stride = v.max(1);
        }
        let mut starts = en.take_prefixed("characteristics.start.");
        starts.sort_by_key(|(_, line, _)| *line);
        for (_, line, v) in starts {
            characteristics.starts.push(parse_start(&v, line)?);
        }
        if !(characteristics.step > 0.0 && characteristics.horizon >= 0.0) {
            return Err(Error::Config(
                "characteristics step must be > 0 and horizon >= 0".into(),
            ));
        }

        en.finish()?;
        Ok(Self {
            kind,
            params,
            profiles,
            family,
            quadrature,
            picard,
            r_max,
            output,
            seed,
            verification,
            characteristics,
        })
    }

    /// Confinement constants of the self-consistent kind.
    pub fn confinement(&self) -> Option<ConfinementConstants> {
        let pair = self.profiles.as_ref()?;
        let c0 = compute_c0(&self.params, &pair.norms());
        ConfinementConstants::from_energy_cutoff(&self.params, c0, pair.energy_cutoff()).ok()
    }

    /// Solves (self-consistent kind) or assembles (vanishing kinds) the state.
    pub fn build_state(&self) -> Result<SteadyState> {
        match (&self.profiles, &self.family) {
            (Some(pair), _) => SteadyState::self_consistent(self.params, pair.clone(), self.quadrature, &self.picard),
            (None, Some(spec)) => {
                SteadyState::vanishing(spec.clone(), self.params, self.quadrature, self.picard.n, self.r_max)
            }
            (None, None) => Err(Error::Config("configuration defines no profiles".into())),
        }
    }
}
