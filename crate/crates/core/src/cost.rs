//! Local cost functions `f: R>=0 -> R>=0` that are `alpha`-strongly convex,
//! `beta`-smooth and satisfy `f(0) = f'(0) = 0`, plus the samplers used when an
//! agent is replaced.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

/// Curvature certificates `(alpha, beta)` shared by a family of functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawClass")]
pub struct ClassParams {
    alpha: f64,
    beta: f64,
}

#[derive(Deserialize)]
struct RawClass {
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawClass> for ClassParams {
    type Error = Error;

    fn try_from(raw: RawClass) -> Result<Self> {
        ClassParams::new(raw.alpha, raw.beta)
    }
}

impl ClassParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha > 0.0 && alpha <= beta) {
            return Err(Error::InvalidClass { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    /// Builds the class from `alpha` and the condition number `kappa = beta / alpha`.
    pub fn from_kappa(alpha: f64, kappa: f64) -> Result<Self> {
        Self::new(alpha, alpha * kappa)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn kappa(&self) -> f64 {
        self.beta / self.alpha
    }
}

/// Closed-form shape of a cost function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Family {
    /// `f(x) = phi * x^2`.
    Quadratic { phi: f64 },
    /// C¹ two-piece quadratic: `phi1 * x^2` up to `breakpoint`, then
    /// `phi2 * (x - b)^2 + 2 * phi1 * b * (x - b) + phi1 * b^2`.
    PiecewiseQuadratic {
        phi1: f64,
        phi2: f64,
        breakpoint: f64,
    },
}

/// A local cost function together with the class it claims to belong to.
///
/// Construction only checks that the shape parameters are positive and
/// finite; membership in the class is certified separately by
/// [`CostFunction::verify_class`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostFunction {
    #[serde(flatten)]
    family: Family,
    #[serde(flatten)]
    class: ClassParams,
}

fn positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidFunction { name, value })
    }
}

fn nonnegative(what: &'static str, value: f64) -> Result<()> {
    // NaN fails the comparison and is rejected as well.
    if value >= 0.0 {
        Ok(())
    } else {
        Err(Error::Domain { what, value })
    }
}

impl CostFunction {
    pub fn new(family: Family, class: ClassParams) -> Result<Self> {
        match family {
            Family::Quadratic { phi } => positive("phi", phi)?,
            Family::PiecewiseQuadratic {
                phi1,
                phi2,
                breakpoint,
            } => {
                positive("phi1", phi1)?;
                positive("phi2", phi2)?;
                positive("breakpoint", breakpoint)?;
            }
        }
        Ok(Self { family, class })
    }

    pub fn quadratic(phi: f64, class: ClassParams) -> Result<Self> {
        Self::new(Family::Quadratic { phi }, class)
    }

    pub fn piecewise(phi1: f64, phi2: f64, breakpoint: f64, class: ClassParams) -> Result<Self> {
        Self::new(
            Family::PiecewiseQuadratic {
                phi1,
                phi2,
                breakpoint,
            },
            class,
        )
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn class(&self) -> ClassParams {
        self.class
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self.family, Family::Quadratic { .. })
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        nonnegative("x", x)?;
        Ok(self.value_at(x))
    }

    pub fn grad(&self, x: f64) -> Result<f64> {
        nonnegative("x", x)?;
        Ok(self.slope_at(x))
    }

    /// Returns the unique `x >= 0` with `f'(x) = g`.
    pub fn grad_inverse(&self, g: f64) -> Result<f64> {
        nonnegative("g", g)?;
        Ok(self.slope_inverse(g))
    }

    pub(crate) fn value_at(&self, x: f64) -> f64 {
        match self.family {
            Family::Quadratic { phi } => phi * x * x,
            Family::PiecewiseQuadratic {
                phi1,
                phi2,
                breakpoint: b,
            } => {
                if x <= b {
                    phi1 * x * x
                } else {
                    let d = x - b;
                    phi2 * d * d + 2.0 * phi1 * b * d + phi1 * b * b
                }
            }
        }
    }

    pub(crate) fn slope_at(&self, x: f64) -> f64 {
        match self.family {
            Family::Quadratic { phi } => 2.0 * phi * x,
            Family::PiecewiseQuadratic {
                phi1,
                phi2,
                breakpoint: b,
            } => {
                if x <= b {
                    2.0 * phi1 * x
                } else {
                    2.0 * phi2 * (x - b) + 2.0 * phi1 * b
                }
            }
        }
    }

    /// Right second derivative, i.e. `d x / d f'` inverted; piecewise constant.
    pub(crate) fn curvature_at(&self, x: f64) -> f64 {
        match self.family {
            Family::Quadratic { phi } => 2.0 * phi,
            Family::PiecewiseQuadratic {
                phi1,
                phi2,
                breakpoint,
            } => {
                if x < breakpoint {
                    2.0 * phi1
                } else {
                    2.0 * phi2
                }
            }
        }
    }

    pub(crate) fn slope_inverse(&self, g: f64) -> f64 {
        match self.family {
            Family::Quadratic { phi } => g / (2.0 * phi),
            Family::PiecewiseQuadratic {
                phi1,
                phi2,
                breakpoint: b,
            } => {
                let knee = 2.0 * phi1 * b;
                if g <= knee {
                    g / (2.0 * phi1)
                } else {
                    b + (g - knee) / (2.0 * phi2)
                }
            }
        }
    }

    /// Grid check of the class certificates on `[0, upper]`.
    ///
    /// Verifies `f(0) = f'(0) = 0`, that every difference quotient of `f'`
    /// between neighbouring grid points lies in `[alpha, beta]`, and the
    /// envelopes `alpha x <= f'(x) <= beta x`, `(alpha/2) x^2 <= f(x) <= (beta/2) x^2`,
    /// all within `1e-8 * beta`.
    pub fn verify_class(&self, grid_size: usize, upper: f64) -> bool {
        if grid_size < 3 || !(upper > 0.0) {
            return false;
        }
        let (alpha, beta) = (self.class.alpha, self.class.beta);
        let tol = 1e-8 * beta;
        if self.value_at(0.0) != 0.0 || self.slope_at(0.0) != 0.0 {
            return false;
        }
        let h = upper / (grid_size - 1) as f64;
        let mut prev_slope = 0.0;
        for k in 1..grid_size {
            let x = h * k as f64;
            let slope = self.slope_at(x);
            let quotient = (slope - prev_slope) / h;
            if quotient < alpha - tol || quotient > beta + tol {
                return false;
            }
            let scale = tol * x.max(1.0) * x.max(1.0);
            if slope < alpha * x - scale || slope > beta * x + scale {
                return false;
            }
            let value = self.value_at(x);
            if value < 0.5 * alpha * x * x - scale || value > 0.5 * beta * x * x + scale {
                return false;
            }
            prev_slope = slope;
        }
        true
    }
}

/// Law of the cost function given to an incoming agent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReplacementMode {
    /// Random replacements: two-piece quadratics with uniform parameters.
    Random,
    /// Adversarial replacements: `phi x^2` with `phi` uniform on `{alpha/2, beta/2}`.
    Adversarial,
    /// `phi x^2` with `phi` uniform on `[alpha/2, beta/2]`.
    QuadraticUniform,
}

impl ReplacementMode {
    /// Whether every sampled function is a pure quadratic `phi x^2`.
    pub fn is_quadratic(self) -> bool {
        !matches!(self, ReplacementMode::Random)
    }
}

impl fmt::Display for ReplacementMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ReplacementMode::Random => "rr",
            ReplacementMode::Adversarial => "ar",
            ReplacementMode::QuadraticUniform => "quadratic",
        })
    }
}

impl FromStr for ReplacementMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rr" | "random" => Ok(ReplacementMode::Random),
            "ar" | "adversarial" => Ok(ReplacementMode::Adversarial),
            "quadratic" | "quadratic-uniform" | "quad" => Ok(ReplacementMode::QuadraticUniform),
            other => Err(Error::config(
                "mode",
                format!("unknown replacement mode `{other}` (expected rr, ar or quadratic)"),
            )),
        }
    }
}

/// Sampler of incoming cost functions with its own private random stream.
#[derive(Debug, Clone)]
pub struct ReplacementDistribution {
    mode: ReplacementMode,
    class: ClassParams,
    rng: ChaCha8Rng,
}

impl ReplacementDistribution {
    pub fn new(mode: ReplacementMode, class: ClassParams, seed: u64) -> Self {
        Self {
            mode,
            class,
            rng: seed::rng_from(seed),
        }
    }

    pub fn mode(&self) -> ReplacementMode {
        self.mode
    }

    pub fn class(&self) -> ClassParams {
        self.class
    }

    pub fn sample(&mut self) -> CostFunction {
        let lo = 0.5 * self.class.alpha;
        let hi = 0.5 * self.class.beta;
        let family = match self.mode {
            ReplacementMode::Random => {
                let phi1 = self.rng.gen_range(lo..=hi);
                let phi2 = self.rng.gen_range(lo..=hi);
                // gen::<f64>() is in [0, 1), so the breakpoint lands in (0, 2].
                let breakpoint = 2.0 * (1.0 - self.rng.gen::<f64>());
                Family::PiecewiseQuadratic {
                    phi1,
                    phi2,
                    breakpoint,
                }
            }
            ReplacementMode::Adversarial => Family::Quadratic {
                phi: if self.rng.gen_bool(0.5) { lo } else { hi },
            },
            ReplacementMode::QuadraticUniform => Family::Quadratic {
                phi: self.rng.gen_range(lo..=hi),
            },
        };
        CostFunction {
            family,
            class: self.class,
        }
    }

    pub fn sample_n(&mut self, n: usize) -> Vec<CostFunction> {
        (0..n).map(|_| self.sample()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn class(alpha: f64, beta: f64) -> ClassParams {
        ClassParams::new(alpha, beta).unwrap()
    }

    fn example_piecewise() -> CostFunction {
        CostFunction::piecewise(0.5, 5.0, 1.0, class(1.0, 10.0)).unwrap()
    }

    #[test]
    fn class_params_validation() {
        assert!(ClassParams::new(0.0, 1.0).is_err());
        assert!(ClassParams::new(2.0, 1.0).is_err());
        assert!(ClassParams::new(1.0, f64::INFINITY).is_err());
        let c = ClassParams::from_kappa(2.0, 5.0).unwrap();
        assert_eq!(c.beta(), 10.0);
        assert_eq!(c.kappa(), 5.0);
    }

    #[test]
    fn eval_examples() {
        let q = CostFunction::quadratic(3.0, class(1.0, 10.0)).unwrap();
        assert_eq!(q.eval(2.0).unwrap(), 12.0);
        assert_eq!(q.eval(0.0).unwrap(), 0.0);
        assert_eq!(example_piecewise().eval(0.0).unwrap(), 0.0);
        assert_relative_eq!(example_piecewise().eval(2.0).unwrap(), 6.5, epsilon = 1e-15);
        assert!(matches!(q.eval(-1.0), Err(Error::Domain { .. })));
        assert!(q.eval(f64::NAN).is_err());
    }

    #[test]
    fn grad_examples() {
        let q = CostFunction::quadratic(3.0, class(1.0, 10.0)).unwrap();
        assert_eq!(q.grad(2.0).unwrap(), 12.0);
        assert_eq!(q.grad(0.0).unwrap(), 0.0);
        assert_eq!(example_piecewise().grad(0.0).unwrap(), 0.0);
        assert_relative_eq!(example_piecewise().grad(2.0).unwrap(), 11.0, epsilon = 1e-15);
        assert!(q.grad(-0.5).is_err());
    }

    #[test]
    fn grad_inverse_examples() {
        let q = CostFunction::quadratic(3.0, class(1.0, 10.0)).unwrap();
        assert_eq!(q.grad_inverse(12.0).unwrap(), 2.0);
        assert_eq!(q.grad_inverse(0.0).unwrap(), 0.0);
        assert_eq!(example_piecewise().grad_inverse(0.0).unwrap(), 0.0);
        assert_relative_eq!(
            example_piecewise().grad_inverse(11.0).unwrap(),
            2.0,
            epsilon = 1e-15
        );
        assert!(q.grad_inverse(-1.0).is_err());
    }

    #[test]
    fn grad_matches_central_difference() {
        let h = 1e-5;
        let mut dist = ReplacementDistribution::new(ReplacementMode::Random, class(1.0, 10.0), 7);
        for _ in 0..200 {
            let f = dist.sample();
            for k in 1..40 {
                let x = 0.25 * k as f64;
                let fd = (f.value_at(x + h) - f.value_at(x - h)) / (2.0 * h);
                let g = f.slope_at(x);
                assert!(
                    (fd - g).abs() <= 1e-6 * g.abs(),
                    "f={f:?} x={x} fd={fd} g={g}"
                );
            }
        }
    }

    #[test]
    fn verify_class_examples() {
        let c = class(1.0, 10.0);
        assert!(CostFunction::quadratic(0.5, c).unwrap().verify_class(101, 5.0));
        assert!(CostFunction::quadratic(5.0, c).unwrap().verify_class(101, 5.0));
        assert!(!CostFunction::quadratic(10.0, c).unwrap().verify_class(101, 5.0));
        assert!(!CostFunction::quadratic(0.25, c).unwrap().verify_class(101, 5.0));
        assert!(!CostFunction::quadratic(0.5, c).unwrap().verify_class(2, 5.0));
        assert!(example_piecewise().verify_class(1001, 5.0));
    }

    #[test]
    fn rr_samples_pass_verify_class() {
        let mut dist = ReplacementDistribution::new(ReplacementMode::Random, class(1.0, 10.0), 11);
        for _ in 0..1000 {
            let f = dist.sample();
            assert!(f.verify_class(257, 10.0), "{f:?}");
            if let Family::PiecewiseQuadratic { breakpoint, .. } = f.family() {
                assert!(breakpoint > 0.0 && breakpoint <= 2.0);
            } else {
                panic!("RR must produce piecewise quadratics");
            }
        }
    }

    #[test]
    fn ar_is_fair_two_point() {
        let c = class(1.0, 10.0);
        let mut dist = ReplacementDistribution::new(ReplacementMode::Adversarial, c, 3);
        let draws = 100_000;
        let mut low = 0usize;
        for _ in 0..draws {
            match dist.sample().family() {
                Family::Quadratic { phi: 0.5 } => low += 1,
                Family::Quadratic { phi } => assert_eq!(phi, 5.0),
                other => panic!("unexpected {other:?}"),
            }
        }
        let freq = low as f64 / draws as f64;
        assert!((0.49..=0.51).contains(&freq), "freq {freq}");
    }

    #[test]
    fn quadratic_uniform_degenerate_interval() {
        let mut dist =
            ReplacementDistribution::new(ReplacementMode::QuadraticUniform, class(2.0, 2.0), 5);
        for _ in 0..100 {
            assert_eq!(dist.sample().family(), Family::Quadratic { phi: 1.0 });
        }
    }

    #[test]
    fn samplers_are_deterministic() {
        let c = class(1.0, 4.0);
        for mode in [
            ReplacementMode::Random,
            ReplacementMode::Adversarial,
            ReplacementMode::QuadraticUniform,
        ] {
            let a = ReplacementDistribution::new(mode, c, 99).sample_n(50);
            let b = ReplacementDistribution::new(mode, c, 99).sample_n(50);
            assert_eq!(a, b);
        }
    }

    #[test]
    fn serializes_as_tagged_record() {
        let f = example_piecewise();
        let json = serde_json::to_value(f).unwrap();
        assert_eq!(json["family"], "piecewise_quadratic");
        assert_eq!(json["phi2"], 5.0);
        assert_eq!(json["alpha"], 1.0);
        let back: CostFunction = serde_json::from_value(json).unwrap();
        assert_eq!(back, f);

        let bad = serde_json::json!({"family": "quadratic", "phi": 1.0, "alpha": 3.0, "beta": 1.0});
        assert!(serde_json::from_value::<CostFunction>(bad).is_err());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("RR".parse::<ReplacementMode>().unwrap(), ReplacementMode::Random);
        assert_eq!("ar".parse::<ReplacementMode>().unwrap(), ReplacementMode::Adversarial);
        assert_eq!(
            "quadratic".parse::<ReplacementMode>().unwrap(),
            ReplacementMode::QuadraticUniform
        );
        assert!("xx".parse::<ReplacementMode>().is_err());
    }

    proptest! {
        #[test]
        fn sampled_functions_respect_envelopes(
            seed in any::<u64>(),
            kappa in 1.0f64..20.0,
            mode_idx in 0usize..3,
        ) {
            let c = ClassParams::from_kappa(1.0, kappa).unwrap();
            let mode = [ReplacementMode::Random, ReplacementMode::Adversarial, ReplacementMode::QuadraticUniform][mode_idx];
            let f = ReplacementDistribution::new(mode, c, seed).sample();
            let n = 5.0;
            for k in 0..=100 {
                let x = 2.0 * n * k as f64 / 100.0;
                let v = f.value_at(x);
                let g = f.slope_at(x);
                let slack = 1e-12 * (1.0 + x * x) * c.beta();
                prop_assert!(0.5 * c.alpha() * x * x <= v + slack);
                prop_assert!(v <= 0.5 * c.beta() * x * x + slack);
                prop_assert!(c.alpha() * x <= g + slack);
                prop_assert!(g <= c.beta() * x + slack);
                prop_assert!((f.slope_inverse(g) - x).abs() <= 1e-10);
            }
        }
    }
}
