use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::vi::ProblemConstants;

/// A stateful stepsize generator, queried once per iteration starting at `k = 0`.
pub trait StepRule {
    /// Returns the stepsize for iteration `k` and advances. Calls must be
    /// sequential: `k` has to equal [`StepRule::next_index`].
    fn next_step(&mut self, k: usize) -> Result<f64>;

    fn next_index(&self) -> usize;

    /// The next `count` stepsizes.
    fn take_steps(&mut self, count: usize) -> Result<Vec<f64>> {
        let start = self.next_index();
        (start..start + count).map(|k| self.next_step(k)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
struct Cursor(usize);

impl Cursor {
    fn advance(&mut self, k: usize) -> Result<()> {
        if k != self.0 {
            return Err(Error::OutOfOrder {
                expected: self.0,
                requested: k,
            });
        }
        self.0 += 1;
        Ok(())
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Harmonic rule `γ_k = θ / (k + 1)`, the 1-indexed form of `θ/k`.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicPolicy {
    theta: f64,
    cursor: Cursor,
}

impl HarmonicPolicy {
    pub fn new(theta: f64) -> Result<Self> {
        positive("theta", theta)?;
        Ok(Self {
            theta,
            cursor: Cursor::default(),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }
}

impl StepRule for HarmonicPolicy {
    fn next_step(&mut self, k: usize) -> Result<f64> {
        self.cursor.advance(k)?;
        Ok(self.theta / (k as f64 + 1.0))
    }

    fn next_index(&self) -> usize {
        self.cursor.0
    }
}

/// Fixed stepsize. Zero is accepted, which is useful for degenerate checks.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantPolicy {
    gamma: f64,
    cursor: Cursor,
}

impl ConstantPolicy {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(invalid(format!("constant stepsize must be >= 0, got {gamma}")));
        }
        Ok(Self {
            gamma,
            cursor: Cursor::default(),
        })
    }
}

impl StepRule for ConstantPolicy {
    fn next_step(&mut self, k: usize) -> Result<f64> {
        self.cursor.advance(k)?;
        Ok(self.gamma)
    }

    fn next_index(&self) -> usize {
        self.cursor.0
    }
}

/// Which envelope a [`CentralizedAdaptivePolicy`] generates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AdaptiveMode {
    /// `δ*_k`, the error-minimizing lower envelope.
    LowerSequence,
    /// `Γ*_k`, the matching upper envelope.
    UpperSequence,
}

/// Self-tuned centralized stepsizes.
///
/// With `a = η - βL`:
///
/// * lower: `δ*_0 = a e_0 / (2(1+β)²ν²)`, `δ*_k = δ*_{k-1} (1 - (a/2) δ*_{k-1})`
/// * upper: `Γ*_0 = a e_0 / (2(1+β)ν²)`, `Γ*_k = Γ*_{k-1} (1 - a/(2(1+β)) Γ*_{k-1})`
///
/// The error-minimizing property requires `e_0 < 2ν²/L²`. [`Self::new`]
/// enforces it; [`Self::relaxed`] only requires the sequence to stay positive
/// and reports the hypothesis through [`Self::certified`].
#[derive(Debug, Clone, PartialEq)]
pub struct CentralizedAdaptivePolicy {
    eta: f64,
    lipschitz: f64,
    nu: f64,
    beta: f64,
    e0: f64,
    mode: AdaptiveMode,
    initial: f64,
    contraction: f64,
    current: Option<f64>,
    cursor: Cursor,
    certified: bool,
}

impl CentralizedAdaptivePolicy {
    /// `e0 = None` defaults to `D²`, which then must be available.
    pub fn new(
        constants: &ProblemConstants,
        beta: f64,
        e0: Option<f64>,
        mode: AdaptiveMode,
    ) -> Result<Self> {
        let policy = Self::relaxed(constants, beta, e0, mode)?;
        if !policy.certified {
            return Err(invalid(format!(
                "e0 = {} violates e0 < 2 nu^2 / L^2 = {}",
                policy.e0,
                2.0 * policy.nu * policy.nu / (policy.lipschitz * policy.lipschitz)
            )));
        }
        Ok(policy)
    }

    pub fn relaxed(
        constants: &ProblemConstants,
        beta: f64,
        e0: Option<f64>,
        mode: AdaptiveMode,
    ) -> Result<Self> {
        constants.validate()?;
        let ProblemConstants {
            eta,
            lipschitz,
            nu,
            ..
        } = *constants;
        positive("nu", nu)?;
        if !(beta >= 0.0 && beta < eta / lipschitz) {
            return Err(invalid(format!(
                "beta = {beta} outside [0, eta/L) = [0, {})",
                eta / lipschitz
            )));
        }
        let e0 = match e0 {
            Some(e) => e,
            None => constants.require_diameter()?.powi(2),
        };
        positive("e0", e0)?;
        let a = eta - beta * lipschitz;
        let (initial, contraction) = match mode {
            AdaptiveMode::LowerSequence => {
                (a * e0 / (2.0 * (1.0 + beta).powi(2) * nu * nu), a / 2.0)
            }
            AdaptiveMode::UpperSequence => (
                a * e0 / (2.0 * (1.0 + beta) * nu * nu),
                a / (2.0 * (1.0 + beta)),
            ),
        };
        if contraction * initial >= 1.0 {
            return Err(invalid(format!(
                "initial stepsize {initial} makes the recursion non-positive"
            )));
        }
        Ok(Self {
            eta,
            lipschitz,
            nu,
            beta,
            e0,
            mode,
            initial,
            contraction,
            current: None,
            cursor: Cursor::default(),
            certified: e0 < 2.0 * nu * nu / (lipschitz * lipschitz),
        })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn mode(&self) -> AdaptiveMode {
        self.mode
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn current(&self) -> Option<f64> {
        self.current
    }

    /// Whether `e0 < 2ν²/L²`.
    pub fn certified(&self) -> bool {
        self.certified
    }
}

impl StepRule for CentralizedAdaptivePolicy {
    fn next_step(&mut self, k: usize) -> Result<f64> {
        self.cursor.advance(k)?;
        let next = match self.current {
            None => self.initial,
            Some(prev) => prev * (1.0 - self.contraction * prev),
        };
        self.current = Some(next);
        Ok(next)
    }

    fn next_index(&self) -> usize {
        self.cursor.0
    }
}

/// One player's distributed adaptive stepsize.
///
/// `γ_{0,i} = r_i c D² / ((1 + (η-2c)/L)² ν²)` and
/// `γ_{k,i} = γ_{k-1,i} (1 - (c/r_i) γ_{k-1,i})`, with a shared constant
/// `0 < c < η/2` and a private `r_i ∈ [1, 1 + (η-2c)/L]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DasaPlayerPolicy {
    c: f64,
    r: f64,
    constants: ProblemConstants,
    initial: f64,
    current: Option<f64>,
    cursor: Cursor,
    certified: bool,
}

impl DasaPlayerPolicy {
    /// Strict constructor: also requires `D < √2 ν / L`.
    pub fn new(constants: &ProblemConstants, c: f64, r: f64) -> Result<Self> {
        let policy = Self::relaxed(constants, c, r)?;
        if !policy.certified {
            return Err(invalid(format!(
                "D = {} violates D < sqrt(2) nu / L = {}",
                constants.diameter.unwrap_or(f64::NAN),
                std::f64::consts::SQRT_2 * constants.nu / constants.lipschitz
            )));
        }
        Ok(policy)
    }

    /// Accepts `D >= √2 ν / L` as long as the recursion stays positive
    /// (`c γ_0 / r < 1`); see [`Self::certified`].
    pub fn relaxed(constants: &ProblemConstants, c: f64, r: f64) -> Result<Self> {
        constants.validate()?;
        positive("nu", constants.nu)?;
        let d = constants.require_diameter()?;
        let ProblemConstants { eta, lipschitz, nu, .. } = *constants;
        if !(c > 0.0 && c < eta / 2.0) {
            return Err(invalid(format!("c = {c} outside (0, eta/2) = (0, {})", eta / 2.0)));
        }
        let beta = (eta - 2.0 * c) / lipschitz;
        if !(r >= 1.0 && r <= 1.0 + beta) {
            return Err(invalid(format!("r = {r} outside [1, {}]", 1.0 + beta)));
        }
        let initial = r * c * d * d / ((1.0 + beta).powi(2) * nu * nu);
        if c / r * initial >= 1.0 {
            return Err(invalid(format!(
                "initial stepsize {initial} makes the recursion non-positive (c gamma_0 / r >= 1)"
            )));
        }
        Ok(Self {
            c,
            r,
            constants: *constants,
            initial,
            current: None,
            cursor: Cursor::default(),
            certified: d < std::f64::consts::SQRT_2 * nu / lipschitz,
        })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `β = (η - 2c)/L`, the spread bound the family satisfies.
    pub fn beta(&self) -> f64 {
        (self.constants.eta - 2.0 * self.c) / self.constants.lipschitz
    }

    pub fn constants(&self) -> &ProblemConstants {
        &self.constants
    }

    pub fn initial(&self) -> f64 {
        self.initial
    }

    pub fn current(&self) -> Option<f64> {
        self.current
    }

    /// Index of the last emitted stepsize.
    pub fn last_index(&self) -> Option<usize> {
        self.cursor.0.checked_sub(1)
    }

    /// Whether `D < √2 ν / L`.
    pub fn certified(&self) -> bool {
        self.certified
    }
}

impl StepRule for DasaPlayerPolicy {
    fn next_step(&mut self, k: usize) -> Result<f64> {
        self.cursor.advance(k)?;
        let next = match self.current {
            None => self.initial,
            Some(prev) => prev * (1.0 - self.c / self.r * prev),
        };
        self.current = Some(next);
        Ok(next)
    }

    fn next_index(&self) -> usize {
        self.cursor.0
    }
}

/// Any of the supported stepsize rules.
#[derive(Debug, Clone, PartialEq)]
pub enum SteplengthPolicy {
    Harmonic(HarmonicPolicy),
    Constant(ConstantPolicy),
    Centralized(CentralizedAdaptivePolicy),
    Dasa(DasaPlayerPolicy),
}

impl SteplengthPolicy {
    fn rule(&mut self) -> &mut dyn StepRule {
        match self {
            SteplengthPolicy::Harmonic(p) => p,
            SteplengthPolicy::Constant(p) => p,
            SteplengthPolicy::Centralized(p) => p,
            SteplengthPolicy::Dasa(p) => p,
        }
    }
}

impl StepRule for SteplengthPolicy {
    fn next_step(&mut self, k: usize) -> Result<f64> {
        self.rule().next_step(k)
    }

    fn next_index(&self) -> usize {
        match self {
            SteplengthPolicy::Harmonic(p) => p.next_index(),
            SteplengthPolicy::Constant(p) => p.next_index(),
            SteplengthPolicy::Centralized(p) => p.next_index(),
            SteplengthPolicy::Dasa(p) => p.next_index(),
        }
    }
}

impl From<HarmonicPolicy> for SteplengthPolicy {
    fn from(p: HarmonicPolicy) -> Self {
        SteplengthPolicy::Harmonic(p)
    }
}

impl From<ConstantPolicy> for SteplengthPolicy {
    fn from(p: ConstantPolicy) -> Self {
        SteplengthPolicy::Constant(p)
    }
}

impl From<CentralizedAdaptivePolicy> for SteplengthPolicy {
    fn from(p: CentralizedAdaptivePolicy) -> Self {
        SteplengthPolicy::Centralized(p)
    }
}

impl From<DasaPlayerPolicy> for SteplengthPolicy {
    fn from(p: DasaPlayerPolicy) -> Self {
        SteplengthPolicy::Dasa(p)
    }
}
