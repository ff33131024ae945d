//! Bregman losses L(y, x) = φ(y) − φ(x) − ⟨∇φ(x), y − x⟩.

use crate::error::{Error, Result};
use std::fmt;
use std::sync::Arc;

pub type GeneratorFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// One coordinate of a box domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        lo_open: true,
        hi_open: true,
    };
    pub const POSITIVE: Interval = Interval {
        lo: 0.0,
        hi: f64::INFINITY,
        lo_open: true,
        hi_open: true,
    };

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_open: false, hi_open: false }
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self { lo, hi, lo_open: true, hi_open: true }
    }

    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() {
            return false;
        }
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_open { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.hi_open { ')' } else { ']' }
        )
    }
}

/// Box domain A = I_1 × ... × I_k.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain(pub Vec<Interval>);

impl BoxDomain {
    pub fn uniform(interval: Interval, dim: usize) -> Self {
        Self(vec![interval; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.0.iter().zip(x).all(|(i, &v)| i.contains(v))
    }
}

#[derive(Clone)]
enum Generator {
    /// φ(x) = ‖x‖²
    Squared,
    /// φ(x) = −Σ log x_i
    NegLog,
    Custom { phi: GeneratorFn, grad: GradientFn },
}

/// A Bregman loss family described by its strictly convex generator.
#[derive(Clone)]
pub struct BregmanSpec {
    name: String,
    generator: Generator,
    domain: BoxDomain,
}

impl fmt::Debug for BregmanSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BregmanSpec")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .finish()
    }
}

impl BregmanSpec {
    /// Squared error, φ(x) = ‖x‖² on ℝ^dim.
    pub fn squared_error(dim: usize) -> Self {
        Self {
            name: "se".into(),
            generator: Generator::Squared,
            domain: BoxDomain::uniform(Interval::REAL_LINE, dim),
        }
    }

    /// QLIKE-type loss, φ(x) = −Σ log x_i on (0, ∞)^dim.
    pub fn qlike(dim: usize) -> Self {
        Self {
            name: "qlike".into(),
            generator: Generator::NegLog,
            domain: BoxDomain::uniform(Interval::POSITIVE, dim),
        }
    }

    /// User-supplied generator and (sub)gradient. Convexity is not verified
    /// here; see [`BregmanSpec::probe_convexity`].
    pub fn custom(
        name: impl Into<String>,
        domain: BoxDomain,
        phi: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    ) -> Result<Self> {
        if domain.dim() == 0 {
            return Err(Error::Argument("Bregman domain must have dimension >= 1".into()));
        }
        Ok(Self {
            name: name.into(),
            generator: Generator::Custom { phi: Arc::new(phi), grad: Arc::new(grad) },
            domain,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn domain(&self) -> &BoxDomain {
        &self.domain
    }

    pub fn phi(&self, x: &[f64]) -> f64 {
        match &self.generator {
            Generator::Squared => x.iter().map(|v| v * v).sum(),
            Generator::NegLog => -x.iter().map(|v| v.ln()).sum::<f64>(),
            Generator::Custom { phi, .. } => phi(x),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match &self.generator {
            Generator::Squared => x.iter().map(|v| 2.0 * v).collect(),
            Generator::NegLog => x.iter().map(|v| -1.0 / v).collect(),
            Generator::Custom { grad, .. } => grad(x),
        }
    }

    fn check_forecast(&self, x: &[f64]) -> Result<()> {
        if !self.domain.contains(x) {
            return Err(Error::Domain(format!(
                "forecast {x:?} lies outside the domain of loss '{}'",
                self.name
            )));
        }
        Ok(())
    }

    fn check_dim(&self, y: &[f64]) -> Result<()> {
        if y.len() != self.dim() {
            return Err(Error::Domain(format!(
                "observation has dimension {}, loss '{}' expects {}",
                y.len(),
                self.name,
                self.dim()
            )));
        }
        Ok(())
    }

    /// L(y, x) = φ(y) − φ(x) − ⟨∇φ(x), y − x⟩ (nonnegative orientation).
    pub fn loss(&self, y: &[f64], x: &[f64]) -> Result<f64> {
        self.check_forecast(x)?;
        self.check_dim(y)?;
        let v = match &self.generator {
            Generator::Squared => y.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum(),
            Generator::NegLog => y
                .iter()
                .zip(x)
                .map(|(&a, &b)| {
                    let r = a / b;
                    r - r.ln() - 1.0
                })
                .sum(),
            Generator::Custom { .. } => {
                let g = self.gradient(x);
                let inner: f64 = g.iter().zip(y.iter().zip(x)).map(|(gi, (a, b))| gi * (a - b)).sum();
                self.phi(y) - self.phi(x) - inner
            }
        };
        if !v.is_finite() {
            return Err(Error::Domain(format!(
                "loss '{}' is undefined at observation {y:?}",
                self.name
            )));
        }
        Ok(v)
    }

    /// L(y, x1) − L(y, x2).
    pub fn loss_difference(&self, y: &[f64], x1: &[f64], x2: &[f64]) -> Result<f64> {
        Ok(self.loss(y, x1)? - self.loss(y, x2)?)
    }

    /// The loss difference is affine in the observation:
    /// L(y, x1) − L(y, x2) = a + ⟨b, y⟩ with b = ∇φ(x2) − ∇φ(x1).
    pub fn affine_decomposition(&self, x1: &[f64], x2: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.check_forecast(x1)?;
        self.check_forecast(x2)?;
        let g1 = self.gradient(x1);
        let g2 = self.gradient(x2);
        let dot = |g: &[f64], x: &[f64]| g.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let a = self.phi(x2) - self.phi(x1) + dot(&g1, x1) - dot(&g2, x2);
        let b = g2.iter().zip(&g1).map(|(p, q)| p - q).collect();
        Ok((a, b))
    }

    /// Scalar shorthand for one-dimensional specs.
    pub fn loss_difference_scalar(&self, y: f64, x1: f64, x2: f64) -> Result<f64> {
        match self.generator {
            Generator::Squared if self.dim() == 1 => {
                Ok((y - x1) * (y - x1) - (y - x2) * (y - x2))
            }
            _ => self.loss_difference(&[y], &[x1], &[x2]),
        }
    }

    /// Checks strict convexity along chords and the subgradient inequality at
    /// the supplied pairs of points. Returns the first violated pair.
    pub fn probe_convexity(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<()> {
        const TOL: f64 = 1e-12;
        for (x, y) in pairs {
            self.check_forecast(x)?;
            self.check_forecast(y)?;
            let (fx, fy) = (self.phi(x), self.phi(y));
            let g = self.gradient(x);
            let lin: f64 = g.iter().zip(y.iter().zip(x)).map(|(gi, (b, a))| gi * (b - a)).sum();
            if fy < fx + lin - TOL * (1.0 + fy.abs()) {
                return Err(Error::Argument(format!(
                    "subgradient inequality fails for '{}' at x = {x:?}, y = {y:?}",
                    self.name
                )));
            }
            if x != y {
                for &lam in &[0.25, 0.5, 0.75] {
                    let mid: Vec<f64> = x.iter().zip(y).map(|(a, b)| lam * a + (1.0 - lam) * b).collect();
                    let chord = lam * fx + (1.0 - lam) * fy;
                    if self.phi(&mid) >= chord - TOL * (1.0 + chord.abs()) {
                        return Err(Error::Argument(format!(
                            "generator of '{}' is not strictly convex between {x:?} and {y:?}",
                            self.name
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}
