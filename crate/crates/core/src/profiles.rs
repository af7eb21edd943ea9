//! Cutoff profiles `sigma1` (energy) and `sigma2` (momentum-type invariant),
//! their norms, and the matched per-species families used by the
//! vanishing-potential constructions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{PlasmaParams, Species};

/// Normalized polynomial bump `A ((hi - x)(x - lo) / half^2)^k` on `(lo, hi)`,
/// zero elsewhere. `k >= 2` makes it C^1 on the whole line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub lo: f64,
    pub hi: f64,
    pub amplitude: f64,
    pub exponent: u32,
}

impl Bump {
    pub fn new(lo: f64, hi: f64, amplitude: f64, exponent: u32) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidProfile(format!(
                "bump needs finite lo < hi, got ({lo}, {hi})"
            )));
        }
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::InvalidProfile(format!(
                "amplitude must be >= 0, got {amplitude}"
            )));
        }
        if exponent < 2 {
            return Err(Error::InvalidProfile(format!(
                "exponent must be >= 2 for C^1 regularity, got {exponent}"
            )));
        }
        Ok(Self {
            lo,
            hi,
            amplitude,
            exponent,
        })
    }

    fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return 0.0;
        }
        let h = self.half_width();
        let q = (self.hi - x) * (x - self.lo) / (h * h);
        self.amplitude * q.powi(self.exponent as i32)
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        if x <= self.lo || x >= self.hi {
            return 0.0;
        }
        let h = self.half_width();
        let h2 = h * h;
        let q = (self.hi - x) * (x - self.lo) / h2;
        let k = self.exponent as i32;
        self.amplitude * f64::from(self.exponent) * q.powi(k - 1) * (self.lo + self.hi - 2.0 * x) / h2
    }

    /// `A (hi - lo) 4^k (k!)^2 / (2k + 1)!`, i.e. `A (hi - lo) 4^k B(k+1, k+1)`.
    pub fn l1_norm(&self) -> f64 {
        let k = self.exponent;
        let mut beta = 1.0;
        // B(k+1, k+1) = prod_{j=1}^{k} j / (k + j) / (2k + 1)
        for j in 1..=k {
            beta *= f64::from(j) / f64::from(k + j);
        }
        beta /= f64::from(2 * k + 1);
        self.amplitude * (self.hi - self.lo) * 4f64.powi(k as i32) * beta
    }

    pub fn sup_norm(&self) -> f64 {
        self.amplitude
    }

    /// Maximum slope, attained at `|x - mid| = half / sqrt(2k - 1)`.
    pub fn derivative_sup(&self) -> f64 {
        let k = f64::from(self.exponent);
        let h = self.half_width();
        let y = h / (2.0 * k - 1.0).sqrt();
        let q = 1.0 - y * y / (h * h);
        self.amplitude * 2.0 * k * y * q.powf(k - 1.0) / (h * h)
    }
}

/// Piecewise monotone cubic (Fritsch-Butland weighted harmonic slopes)
/// through tabulated points, extended by zero. End values must vanish and end
/// slopes are pinned to zero so the extension stays C^1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl MonotoneTable {
    pub fn new(points: &[(f64, f64)]) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidProfile("custom table needs at least 3 rows".into()));
        }
        let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
        if xs.iter().chain(ys.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("custom table has non-finite entries".into()));
        }
        if xs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile(
                "custom table arguments must be strictly increasing".into(),
            ));
        }
        let n = xs.len();
        if ys[0] != 0.0 || ys[n - 1] != 0.0 {
            return Err(Error::InvalidProfile(format!(
                "custom table is not C^1 under zero extension: end values {} and {} must be 0",
                ys[0],
                ys[n - 1]
            )));
        }
        if ys[1..n - 1].iter().any(|&y| y <= 0.0) {
            return Err(Error::InvalidProfile(
                "custom table must be strictly positive at interior rows".into(),
            ));
        }
        let secants: Vec<f64> = (0..n - 1).map(|i| (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])).collect();
        let mut slopes = vec![0.0; n];
        for i in 1..n - 1 {
            let (d0, d1) = (secants[i - 1], secants[i]);
            if d0 * d1 > 0.0 {
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                slopes[i] = (w1 + w2) / (w1 / d0 + w2 / d1);
            }
        }
        Ok(Self { xs, ys, slopes })
    }

    pub fn support(&self) -> (f64, f64) {
        (self.xs[0], *self.xs.last().unwrap())
    }

    fn locate(&self, x: f64) -> Option<usize> {
        let (lo, hi) = self.support();
        if x <= lo || x >= hi {
            return None;
        }
        let idx = self.xs.partition_point(|&v| v <= x);
        Some(idx - 1)
    }

    pub fn value(&self, x: f64) -> f64 {
        let Some(i) = self.locate(x) else { return 0.0 };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h * h10 * self.slopes[i] + h01 * self.ys[i + 1] + h * h11 * self.slopes[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let Some(i) = self.locate(x) else { return 0.0 };
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        (d00 * self.ys[i] + d01 * self.ys[i + 1]) / h + d10 * self.slopes[i] + d11 * self.slopes[i + 1]
    }

    /// Exact integral of the Hermite cubics.
    pub fn l1_norm(&self) -> f64 {
        (0..self.xs.len() - 1)
            .map(|i| {
                let h = self.xs[i + 1] - self.xs[i];
                0.5 * h * (self.ys[i] + self.ys[i + 1]) + h * h * (self.slopes[i] - self.slopes[i + 1]) / 12.0
            })
            .sum()
    }

    /// Each piece is monotone, so the maximum sits on a node.
    pub fn sup_norm(&self) -> f64 {
        self.ys.iter().copied().fold(0.0, f64::max)
    }

    pub fn derivative_sup(&self) -> f64 {
        const SAMPLES_PER_PIECE: usize = 256;
        let mut best = 0.0_f64;
        for i in 0..self.xs.len() - 1 {
            let (a, b) = (self.xs[i], self.xs[i + 1]);
            for j in 0..=SAMPLES_PER_PIECE {
                let x = a + (b - a) * j as f64 / SAMPLES_PER_PIECE as f64;
                let x = x.clamp(a + 1e-15 * (b - a), b - 1e-15 * (b - a));
                best = best.max(self.derivative(x).abs());
            }
        }
        best
    }

    /// Reads a two-column `argument,value` CSV. Blank lines, `#` comments and a
    /// non-numeric header row are skipped.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut cols = line.split(',').map(str::trim);
            let (Some(a), Some(b)) = (cols.next(), cols.next()) else {
                return Err(Error::InvalidProfile(format!(
                    "table line {}: expected two columns",
                    lineno + 1
                )));
            };
            match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => rows.push((x, y)),
                _ if rows.is_empty() => continue,
                _ => {
                    return Err(Error::InvalidProfile(format!(
                        "table line {}: could not parse numbers",
                        lineno + 1
                    )))
                }
            }
        }
        Self::new(&rows)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Profile {
    Bump(Bump),
    Table(MonotoneTable),
}

impl Profile {
    pub fn bump(lo: f64, hi: f64, amplitude: f64, exponent: u32) -> Result<Self> {
        Bump::new(lo, hi, amplitude, exponent).map(Profile::Bump)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Profile::Bump(b) => b.value(x),
            Profile::Table(t) => t.value(x),
        }
    }

    #[inline]
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Profile::Bump(b) => b.derivative(x),
            Profile::Table(t) => t.derivative(x),
        }
    }

    /// Open interval outside of which the profile vanishes identically.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Profile::Bump(b) => (b.lo, b.hi),
            Profile::Table(t) => t.support(),
        }
    }

    pub fn l1_norm(&self) -> f64 {
        match self {
            Profile::Bump(b) => b.l1_norm(),
            Profile::Table(t) => t.l1_norm(),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            Profile::Bump(b) => b.sup_norm(),
            Profile::Table(t) => t.sup_norm(),
        }
    }

    pub fn derivative_sup(&self) -> f64 {
        match self {
            Profile::Bump(b) => b.derivative_sup(),
            Profile::Table(t) => t.derivative_sup(),
        }
    }

    /// `sup |s| + sup |s'|`.
    pub fn c1b_norm(&self) -> f64 {
        self.sup_norm() + self.derivative_sup()
    }

    pub fn is_zero(&self) -> bool {
        self.sup_norm() == 0.0
    }
}

/// Norms of one species' profiles that enter `c0` and the Lipschitz bound.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ProfileNorms {
    pub l1_sigma1: f64,
    pub sup_sigma2: f64,
    pub c1b_sigma1: f64,
}

/// `sigma1` on `(e0, E0)` and `sigma2` on `(p0, 0)` for a single species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesProfiles {
    pub sigma1: Profile,
    pub sigma2: Profile,
}

impl SpeciesProfiles {
    pub fn norms(&self) -> ProfileNorms {
        ProfileNorms {
            l1_sigma1: self.sigma1.l1_norm(),
            sup_sigma2: self.sigma2.sup_norm(),
            c1b_sigma1: self.sigma1.c1b_norm(),
        }
    }

    /// Lower energy cutoff `e0`.
    pub fn e0_low(&self) -> f64 {
        self.sigma1.support().0
    }

    /// Lower momentum cutoff `p0`.
    pub fn p0(&self) -> f64 {
        self.sigma2.support().0
    }
}

/// Both species' profiles with the shared energy cutoff `E0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfilePair {
    species: [SpeciesProfiles; 2],
    energy_cutoff: f64,
}

impl ProfilePair {
    pub fn new(minus: SpeciesProfiles, plus: SpeciesProfiles) -> Result<Self> {
        let energy_cutoff = minus.sigma1.support().1;
        for (s, p) in [(Species::Minus, &minus), (Species::Plus, &plus)] {
            let (_, hi1) = p.sigma1.support();
            if (hi1 - energy_cutoff).abs() > 1e-12 * energy_cutoff.abs().max(1.0) {
                return Err(Error::InvalidProfile(format!(
                    "sigma1 upper cutoffs differ between species ({} vs {energy_cutoff})",
                    hi1
                )));
            }
            if !(hi1 > 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "energy cutoff E0 must be > 0, got {hi1} for species {}",
                    s.name()
                )));
            }
            let (lo2, hi2) = p.sigma2.support();
            if hi2 != 0.0 || !(lo2 < 0.0) {
                return Err(Error::InvalidProfile(format!(
                    "sigma2 for species {} must live on (p0, 0) with p0 < 0, got ({lo2}, {hi2})",
                    s.name()
                )));
            }
        }
        Ok(Self {
            species: [minus, plus],
            energy_cutoff,
        })
    }

    pub fn get(&self, species: Species) -> &SpeciesProfiles {
        &self.species[species.index()]
    }

    pub fn energy_cutoff(&self) -> f64 {
        self.energy_cutoff
    }

    pub fn norms(&self) -> [ProfileNorms; 2] {
        [self.species[0].norms(), self.species[1].norms()]
    }
}

/// The three vanishing-potential families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TrivialKind {
    /// `f = sigma1(E_kin)`.
    EnergyOnly,
    /// `f = sigma2(L^alpha)`.
    AngularOnly,
    /// `f = sigma3(E_kin, P^alpha)`.
    EnergyMomentum,
}

/// Mother functions from which both species' profiles are derived.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrivialProfileSpec {
    /// `sigma1^alpha(eta) = s(eta / m_alpha)`.
    EnergyOnly { mother: Profile },
    /// `sigma2^alpha(lambda) = m_alpha^2 t(lambda)`.
    AngularOnly { mother: Profile },
    /// `sigma3^alpha(eta, p) = m_alpha^2 s(m_alpha eta) q(p)`.
    EnergyMomentum { energy: Profile, momentum: Profile },
}

impl TrivialProfileSpec {
    pub fn kind(&self) -> TrivialKind {
        match self {
            TrivialProfileSpec::EnergyOnly { .. } => TrivialKind::EnergyOnly,
            TrivialProfileSpec::AngularOnly { .. } => TrivialKind::AngularOnly,
            TrivialProfileSpec::EnergyMomentum { .. } => TrivialKind::EnergyMomentum,
        }
    }
}

/// Per-species evaluators of a matched vanishing-potential family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchedProfiles {
    spec: TrivialProfileSpec,
    masses: [f64; 2],
    /// `E0`, `L0` or `P0` depending on the family (`E0` and `P0` for (c)).
    pub energy_cutoff: Option<f64>,
    pub angular_cutoff: Option<f64>,
    pub momentum_cutoff: Option<f64>,
}

/// Builds both species' profiles from one mother so the matching identities
/// hold by construction.
pub fn make_matched_pair(spec: TrivialProfileSpec, params: &PlasmaParams) -> Result<MatchedProfiles> {
    let masses = [params.mass(Species::Minus), params.mass(Species::Plus)];
    let (mut e_cut, mut l_cut, mut p_cut) = (None, None, None);
    match &spec {
        TrivialProfileSpec::EnergyOnly { mother } => {
            let hi = mother.support().1;
            if !(hi > 0.0) {
                return Err(Error::InvalidProfile(
                    "energy mother must have positive upper cutoff".into(),
                ));
            }
            e_cut = Some(params.m_max() * hi);
        }
        TrivialProfileSpec::AngularOnly { mother } => {
            let hi = mother.support().1;
            if !(hi > 0.0) {
                return Err(Error::InvalidProfile(
                    "angular mother must have positive upper cutoff L0".into(),
                ));
            }
            l_cut = Some(hi);
        }
        TrivialProfileSpec::EnergyMomentum { energy, momentum } => {
            let he = energy.support().1;
            let hp = momentum.support().1;
            if !(he > 0.0 && hp > 0.0) {
                return Err(Error::InvalidProfile(
                    "family (c) needs positive energy and momentum cutoffs".into(),
                ));
            }
            if !params.validate_beta() {
                return Err(Error::WeakField {
                    beta: params.beta(),
                    threshold: params.beta_threshold(),
                });
            }
            e_cut = Some(he / params.m_min());
            p_cut = Some(hp);
        }
    }
    Ok(MatchedProfiles {
        spec,
        masses,
        energy_cutoff: e_cut,
        angular_cutoff: l_cut,
        momentum_cutoff: p_cut,
    })
}

impl MatchedProfiles {
    pub fn spec(&self) -> &TrivialProfileSpec {
        &self.spec
    }

    pub fn kind(&self) -> TrivialKind {
        self.spec.kind()
    }

    fn mass(&self, species: Species) -> f64 {
        self.masses[species.index()]
    }

    /// Family (a): `sigma1^alpha(eta)`.
    pub fn sigma1(&self, species: Species, eta: f64) -> f64 {
        match &self.spec {
            TrivialProfileSpec::EnergyOnly { mother } => mother.value(eta / self.mass(species)),
            _ => 0.0,
        }
    }

    /// Family (b): `sigma2^alpha(lambda)`.
    pub fn sigma2(&self, species: Species, lambda: f64) -> f64 {
        match &self.spec {
            TrivialProfileSpec::AngularOnly { mother } => {
                let m = self.mass(species);
                m * m * mother.value(lambda)
            }
            _ => 0.0,
        }
    }

    /// Family (c): `sigma3^alpha(eta, p)`.
    pub fn sigma3(&self, species: Species, eta: f64, p: f64) -> f64 {
        match &self.spec {
            TrivialProfileSpec::EnergyMomentum { energy, momentum } => {
                let m = self.mass(species);
                let q = momentum.value(p);
                if q == 0.0 {
                    return 0.0;
                }
                m * m * energy.value(m * eta) * q
            }
            _ => 0.0,
        }
    }

    /// Checks the family's matching identity at the given sample arguments;
    /// returns the largest relative mismatch.
    pub fn matching_defect(&self, samples: &[(f64, f64)]) -> f64 {
        let (mm, mp) = (self.masses[0], self.masses[1]);
        let mut worst = 0.0_f64;
        for &(a, b) in samples {
            let (lhs, rhs) = match self.kind() {
                TrivialKind::EnergyOnly => {
                    let eta = a.abs();
                    (
                        self.sigma1(Species::Minus, eta * mm),
                        self.sigma1(Species::Plus, eta * mp),
                    )
                }
                TrivialKind::AngularOnly => (
                    self.sigma2(Species::Minus, a) / (mm * mm),
                    self.sigma2(Species::Plus, a) / (mp * mp),
                ),
                TrivialKind::EnergyMomentum => {
                    let eta = a.abs();
                    (
                        self.sigma3(Species::Minus, eta / mm, b) / (mm * mm),
                        self.sigma3(Species::Plus, eta / mp, b) / (mp * mp),
                    )
                }
            };
            let scale = lhs.abs().max(rhs.abs());
            if scale > 0.0 {
                worst = worst.max((lhs - rhs).abs() / scale);
            }
        }
        worst
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / (2 * panels) as f64;
        let mut s = f(a) + f(b);
        for i in 1..2 * panels {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn sigma1_bump_values() {
        let b = Bump::new(0.0, 1.0, 1.0, 2).unwrap();
        assert_eq!(b.value(1.0), 0.0);
        assert_eq!(b.value(1.5), 0.0);
        assert_relative_eq!(b.value(0.5), 1.0);
        assert_relative_eq!(b.value(0.25), 0.5625, max_relative = 1e-15);
        let b = Bump::new(-0.3, 2.0, 1.0, 3).unwrap();
        assert_relative_eq!(b.value(0.85), 1.0, max_relative = 1e-15);
    }

    #[test]
    fn sigma2_bump_values() {
        let b = Bump::new(-1.0, 0.0, 1.0, 2).unwrap();
        assert_eq!(b.value(0.0), 0.0);
        assert_relative_eq!(b.value(-0.5), 1.0);
        assert_relative_eq!(b.value(-0.25), 0.5625, max_relative = 1e-15);
    }

    #[test]
    fn bump_rejects_bad_input() {
        assert!(Bump::new(1.0, 0.0, 1.0, 2).is_err());
        assert!(Bump::new(0.0, 1.0, -1.0, 2).is_err());
        assert!(Bump::new(0.0, 1.0, 1.0, 1).is_err());
    }

    #[test]
    fn bump_norms() {
        let b = Profile::bump(0.0, 1.0, 1.0, 2).unwrap();
        assert_relative_eq!(b.l1_norm(), 16.0 / 30.0, max_relative = 1e-15);
        assert_relative_eq!(b.sup_norm(), 1.0);
        let z = Profile::bump(0.0, 1.0, 0.0, 2).unwrap();
        assert_eq!(z.l1_norm(), 0.0);
        assert_eq!(z.sup_norm(), 0.0);
        assert_eq!(z.c1b_norm(), 0.0);
    }

    #[test]
    fn l1_closed_form_matches_simpson() {
        for (lo, hi, a, k) in [(0.0, 1.0, 1.0, 2), (-0.1, 1.0, 2.5, 3), (-4.0, 0.0, 0.01, 5)] {
            let b = Bump::new(lo, hi, a, k).unwrap();
            let q = simpson(|x| b.value(x), lo, hi, 1 << 13);
            assert_relative_eq!(b.l1_norm(), q, max_relative = 1e-8);
        }
    }

    #[test]
    fn derivative_sup_matches_dense_scan() {
        for k in 2..6 {
            let b = Bump::new(-0.7, 1.3, 1.7, k).unwrap();
            let scan = (0..=200_000)
                .map(|i| b.derivative(-0.7 + 2.0 * i as f64 / 200_000.0).abs())
                .fold(0.0, f64::max);
            assert_relative_eq!(b.derivative_sup(), scan, max_relative = 1e-6);
        }
    }

    fn sample_table() -> MonotoneTable {
        MonotoneTable::new(&[(-1.0, 0.0), (-0.7, 0.4), (-0.5, 1.0), (-0.2, 0.3), (0.0, 0.0)]).unwrap()
    }

    #[test]
    fn table_validation() {
        assert!(MonotoneTable::new(&[(0.0, 0.0), (1.0, 1.0)]).is_err());
        // non-zero end value: jump under zero extension
        assert!(MonotoneTable::new(&[(0.0, 0.0), (0.5, 1.0), (1.0, 0.2)]).is_err());
        assert!(MonotoneTable::new(&[(0.0, 0.0), (0.5, 1.0), (0.4, 0.0)]).is_err());
        assert!(MonotoneTable::new(&[(0.0, 0.0), (0.5, 0.0), (1.0, 0.0)]).is_err());
        let t = sample_table();
        assert_eq!(t.value(-1.0), 0.0);
        assert_eq!(t.value(0.0), 0.0);
        assert_relative_eq!(t.value(-0.5), 1.0);
        assert_relative_eq!(t.sup_norm(), 1.0);
        let q = simpson(|x| t.value(x), -1.0, 0.0, 1 << 14);
        assert_relative_eq!(t.l1_norm(), q, max_relative = 1e-8);
    }

    #[test]
    fn table_from_csv() {
        let t = MonotoneTable::from_csv("p,value\n-1,0\n-0.5,1\n# note\n0,0\n").unwrap();
        assert_eq!(t.support(), (-1.0, 0.0));
        assert!(MonotoneTable::from_csv("0,0\n0.5\n").is_err());
    }

    #[test]
    fn c1_finite_differences() {
        let profiles = [
            Profile::bump(-0.1, 1.0, 1.0, 2).unwrap(),
            Profile::bump(-2.0, 0.0, 0.3, 4).unwrap(),
            Profile::Table(sample_table()),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for p in &profiles {
            let (lo, hi) = p.support();
            let scale = hi - lo;
            let step = 1e-5 * scale;
            let peak = p.derivative_sup();
            for _ in 0..1000 {
                let x = rng.random_range(lo - 0.2 * scale..hi + 0.2 * scale);
                let fd = (p.value(x + step) - p.value(x - step)) / (2.0 * step);
                let exact = p.derivative(x);
                // relative to the derivative scale; second-order FD error plus
                // cancellation near the cutoffs
                assert!(
                    (fd - exact).abs() <= 1e-6 * peak.max(1e-300) + 1e-6 * exact.abs(),
                    "x = {x}: fd {fd} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn cutoffs_exact() {
        let s1 = Profile::bump(-0.1, 1.0, 1.0, 2).unwrap();
        let s2 = Profile::bump(-0.8, 0.0, 1.0, 3).unwrap();
        let t = Profile::Table(sample_table());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..1000 {
            let eta = 1.0 + i as f64 * 1e-3;
            assert_eq!(s1.value(eta), 0.0);
            assert_eq!(s2.value(i as f64 * 1e-3), 0.0);
            assert_eq!(t.value(i as f64 * 1e-3), 0.0);
            let r: f64 = rng.random_range(0.0..100.0);
            assert_eq!(s1.value(1.0 + r), 0.0);
            assert_eq!(s2.value(r), 0.0);
        }
    }

    fn unequal_masses() -> PlasmaParams {
        PlasmaParams::new(1.0, 1.0, 1.0, 2.0, 4.0).unwrap()
    }

    #[test]
    fn matched_energy_family() {
        let params = unequal_masses();
        let zero = make_matched_pair(
            TrivialProfileSpec::EnergyOnly {
                mother: Profile::bump(0.0, 5.0, 0.0, 2).unwrap(),
            },
            &params,
        )
        .unwrap();
        assert_eq!(zero.sigma1(Species::Minus, 1.0), 0.0);
        assert_eq!(zero.sigma1(Species::Plus, 1.0), 0.0);

        let mother = Profile::bump(0.0, 5.0, 1.0, 2).unwrap();
        let s3 = mother.value(3.0);
        let m = make_matched_pair(TrivialProfileSpec::EnergyOnly { mother }, &params).unwrap();
        assert_eq!(m.sigma1(Species::Minus, 3.0), s3);
        assert_eq!(m.sigma1(Species::Plus, 6.0), s3);
        assert_eq!(m.energy_cutoff, Some(10.0));
    }

    #[test]
    fn matched_angular_family_mass_ratio() {
        let params = unequal_masses();
        let table = MonotoneTable::new(&[(0.0, 0.0), (0.1, 1.0), (0.9, 1.0), (1.0, 0.0)]).unwrap();
        let m = make_matched_pair(
            TrivialProfileSpec::AngularOnly {
                mother: Profile::Table(table),
            },
            &params,
        )
        .unwrap();
        assert_relative_eq!(m.sigma2(Species::Minus, 0.5), 1.0);
        assert_relative_eq!(m.sigma2(Species::Plus, 0.5), 4.0);
    }

    #[test]
    fn matching_identities_hold() {
        let params = unequal_masses();
        let specs = [
            TrivialProfileSpec::EnergyOnly {
                mother: Profile::bump(0.0, 1.0, 1.0, 2).unwrap(),
            },
            TrivialProfileSpec::AngularOnly {
                mother: Profile::bump(0.0, 1.0, 1.0, 3).unwrap(),
            },
            TrivialProfileSpec::EnergyMomentum {
                energy: Profile::bump(0.0, 2.0, 1.0, 2).unwrap(),
                momentum: Profile::bump(-1.0, 1.0, 1.0, 2).unwrap(),
            },
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let samples: Vec<(f64, f64)> = (0..1000)
            .map(|_| (rng.random_range(-0.5..3.0), rng.random_range(-1.5..1.5)))
            .collect();
        for spec in specs {
            let m = make_matched_pair(spec, &params).unwrap();
            assert!(m.matching_defect(&samples) <= 4.0 * f64::EPSILON);
        }
    }

    #[test]
    fn family_c_requires_strong_field() {
        let weak = PlasmaParams::new_unchecked_field(1.0, 1.0, 1.0, 2.0, 1.0).unwrap();
        let spec = TrivialProfileSpec::EnergyMomentum {
            energy: Profile::bump(0.0, 2.0, 1.0, 2).unwrap(),
            momentum: Profile::bump(-1.0, 1.0, 1.0, 2).unwrap(),
        };
        assert!(make_matched_pair(spec, &weak).is_err());
    }

    #[test]
    fn pair_validation() {
        let ok = SpeciesProfiles {
            sigma1: Profile::bump(-0.1, 1.0, 1.0, 2).unwrap(),
            sigma2: Profile::bump(-1.0, 0.0, 1.0, 2).unwrap(),
        };
        assert!(ProfilePair::new(ok.clone(), ok.clone()).is_ok());
        let other_cut = SpeciesProfiles {
            sigma1: Profile::bump(-0.1, 2.0, 1.0, 2).unwrap(),
            ..ok.clone()
        };
        assert!(ProfilePair::new(ok.clone(), other_cut).is_err());
        let positive_p = SpeciesProfiles {
            sigma2: Profile::bump(-1.0, 0.5, 1.0, 2).unwrap(),
            ..ok.clone()
        };
        assert!(ProfilePair::new(positive_p, ok).is_err());
    }
}
