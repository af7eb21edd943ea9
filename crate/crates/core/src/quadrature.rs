//! Fixed-order composite Gauss-Legendre rules and cumulative radial
//! integration on a uniform grid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RadialRule {
    Trapezoid,
    Simpson,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    /// Gauss-Legendre nodes per panel.
    pub gl_order: usize,
    /// Panels per smooth piece of the energy integral.
    pub panels_e: usize,
    /// Panels per smooth piece of the angle integral.
    pub panels_theta: usize,
    pub radial_rule: RadialRule,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            gl_order: 16,
            panels_e: 2,
            panels_theta: 1,
            radial_rule: RadialRule::Simpson,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gl_order < 2 {
            return Err(Error::InvalidParameter(format!(
                "gl_order must be >= 2, got {}",
                self.gl_order
            )));
        }
        if self.panels_e == 0 || self.panels_theta == 0 {
            return Err(Error::InvalidParameter("panel counts must be >= 1".into()));
        }
        Ok(())
    }
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Roots of `P_n` by Newton iteration from the Chebyshev-like guess.
    pub fn new(order: usize) -> Self {
        let n = order.max(1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// Single-panel rule on `[a, b]`.
    #[inline]
    pub fn panel<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Composite rule with `panels` equal panels; sums in panel order.
    pub fn composite<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, panels: usize) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        let mut acc = 0.0;
        for k in 0..panels {
            let lo = a + k as f64 * h;
            let hi = if k + 1 == panels { b } else { lo + h };
            acc += self.panel(&mut f, lo, hi);
        }
        acc
    }

    /// Composite rule after the substitution `x = a + (b - a)(3t^2 - 2t^3)`,
    /// whose Jacobian vanishes at both ends. Integrands behaving like
    /// `(x - a)^{k + 1/2}` or `(b - x)^{k + 1/2}` become smooth in `t`.
    pub fn composite_clustered<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64, panels: usize) -> f64 {
        let len = b - a;
        let g = |t: f64| {
            let x = a + len * t * t * (3.0 - 2.0 * t);
            6.0 * len * t * (1.0 - t) * f(x.clamp(a.min(b), a.max(b)))
        };
        self.composite(g, 0.0, 1.0, panels)
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre integral of `f` over `[a, b]` using
/// `cfg.gl_order` nodes on each of `cfg.panels_e` panels.
pub fn integrate_1d<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(a <= b) {
        return Err(Error::InvalidArgument(format!(
            "integration bounds must satisfy a <= b, got [{a}, {b}]"
        )));
    }
    cfg.validate()?;
    if a == b {
        return Ok(0.0);
    }
    Ok(GaussLegendre::new(cfg.gl_order).composite(f, a, b, cfg.panels_e))
}

/// Running integral `C[i] ~ int_0^{r_i} f` of uniformly spaced samples.
///
/// Simpson pairs give the even nodes; an odd node takes the even value before
/// it plus the three-point quadratic rule on its last interval, so every node
/// carries O(h^4) error. A two-sample input falls back to the trapezoid.
pub fn cumulative_integral(samples: &[f64], h: f64, rule: RadialRule) -> Result<Vec<f64>> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "cumulative integral needs at least 2 samples, got {n}"
        )));
    }
    let f = samples;
    let mut out = vec![0.0; n];
    match rule {
        RadialRule::Trapezoid => {
            for i in 1..n {
                out[i] = out[i - 1] + 0.5 * h * (f[i - 1] + f[i]);
            }
        }
        RadialRule::Simpson if n == 2 => {
            out[1] = 0.5 * h * (f[0] + f[1]);
        }
        RadialRule::Simpson => {
            out[1] = h * (5.0 * f[0] + 8.0 * f[1] - f[2]) / 12.0;
            for i in 2..n {
                out[i] = if i % 2 == 0 {
                    out[i - 2] + h * (f[i - 2] + 4.0 * f[i - 1] + f[i]) / 3.0
                } else {
                    out[i - 1] + h * (-f[i - 2] + 8.0 * f[i - 1] + 5.0 * f[i]) / 12.0
                };
            }
        }
    }
    Ok(out)
}

/// Uniform radial grid `r_i = i h` on `[0, r_max]` with `n` intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_max: f64,
    n: usize,
}

impl RadialGrid {
    pub fn new(r_max: f64, n: usize) -> Result<Self> {
        if !(r_max.is_finite() && r_max > 0.0) {
            return Err(Error::InvalidParameter(format!("r_max must be > 0, got {r_max}")));
        }
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least 2 intervals, got {n}"
            )));
        }
        Ok(Self { r_max, n })
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    /// Number of intervals; there are `n + 1` nodes.
    pub fn intervals(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        self.r_max / self.n as f64
    }

    #[inline]
    pub fn node(&self, i: usize) -> f64 {
        if i == self.n {
            self.r_max
        } else {
            i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.node(i)).collect()
    }
}
