//! Binary entropy, the flaw penalties δ₀/δ₁/δ and the two analytic
//! phase-error upper bounds.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{check_probability, Error, Result};

const FLAW_INVARIANT: &str = "RandomnessFlaw invariant (0 ≤ ε0 ≤ 1/2, 0 ≤ ε1 < 1/2)";

/// Shannon entropy of a Bernoulli(x) variable, in bits. `0·log 0` is taken as 0.
pub fn binary_entropy(x: f64) -> Result<f64> {
    check_probability("binary_entropy domain", "x", x)?;
    Ok(entropy_term(x) + entropy_term(1.0 - x))
}

fn entropy_term(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        -p * p.log2()
    }
}

/// Eve's prior knowledge of Alice's bit choice (`epsilon0`) and of the basis
/// choice (`epsilon1`), as maximal deviations of the conditional probabilities
/// from 1/2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFlaw")]
pub struct RandomnessFlaw {
    epsilon0: f64,
    epsilon1: f64,
}

#[derive(Deserialize)]
struct RawFlaw {
    epsilon0: f64,
    epsilon1: f64,
}

impl TryFrom<RawFlaw> for RandomnessFlaw {
    type Error = Error;

    fn try_from(raw: RawFlaw) -> Result<Self> {
        RandomnessFlaw::new(raw.epsilon0, raw.epsilon1)
    }
}

impl RandomnessFlaw {
    pub const NONE: RandomnessFlaw = RandomnessFlaw {
        epsilon0: 0.0,
        epsilon1: 0.0,
    };

    pub fn new(epsilon0: f64, epsilon1: f64) -> Result<Self> {
        if !(0.0..=0.5).contains(&epsilon0) {
            return Err(Error::domain(
                FLAW_INVARIANT,
                format!("epsilon0 must satisfy 0 ≤ ε0 ≤ 1/2, got {epsilon0}"),
            ));
        }
        if !(0.0..0.5).contains(&epsilon1) {
            return Err(Error::domain(
                FLAW_INVARIANT,
                format!("epsilon1 must satisfy 0 ≤ ε1 < 1/2, got {epsilon1}"),
            ));
        }
        Ok(Self { epsilon0, epsilon1 })
    }

    /// Same deviation for both random bits.
    pub fn symmetric(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, epsilon)
    }

    pub fn epsilon0(&self) -> f64 {
        self.epsilon0
    }

    pub fn epsilon1(&self) -> f64 {
        self.epsilon1
    }

    pub fn is_flawless(&self) -> bool {
        self.epsilon0 == 0.0 && self.epsilon1 == 0.0
    }

    pub fn deltas(&self) -> DeltaSet {
        delta_set(self)
    }

    /// Multiplier `(1 + 2ε₁)/(1 − 2ε₁)` of the tight bound.
    pub fn tight_factor(&self) -> f64 {
        (1.0 + 2.0 * self.epsilon1) / (1.0 - 2.0 * self.epsilon1)
    }
}

/// Additive phase-error penalties derived from a [`RandomnessFlaw`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSet {
    /// `1/2 − sqrt(1/4 − ε₀²)`
    pub delta0: f64,
    /// `2ε₁`
    pub delta1: f64,
    pub delta: f64,
}

/// Worst-case bit-choice penalty `1/2 − sqrt(1/4 − ε₀²)`.
pub fn delta0(epsilon0: f64) -> f64 {
    // (1/4 − ε²) can round to a tiny negative at ε = 1/2
    0.5 - (0.25 - epsilon0 * epsilon0).max(0.0).sqrt()
}

pub fn delta_set(flaw: &RandomnessFlaw) -> DeltaSet {
    let delta0 = delta0(flaw.epsilon0);
    let delta1 = 2.0 * flaw.epsilon1;
    DeltaSet {
        delta0,
        delta1,
        delta: delta0.max(delta1),
    }
}

/// How the phase error is bounded from the observed bit error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundMethod {
    /// `e_bit + max(δ₀, δ₁)`.
    Original,
    /// `(1+2ε₁)/(1−2ε₁) · e_bit + δ₀`.
    Tight,
    /// Pointwise minimum of the two, itself a valid bound.
    Best,
}

impl BoundMethod {
    pub const ALL: [BoundMethod; 3] = [BoundMethod::Original, BoundMethod::Tight, BoundMethod::Best];

    pub fn as_str(&self) -> &'static str {
        match self {
            BoundMethod::Original => "original",
            BoundMethod::Tight => "tight",
            BoundMethod::Best => "best",
        }
    }
}

impl fmt::Display for BoundMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BoundMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "original" => Ok(BoundMethod::Original),
            "tight" => Ok(BoundMethod::Tight),
            "best" => Ok(BoundMethod::Best),
            other => Err(Error::domain(
                "BoundMethod",
                format!("expected one of original|tight|best, got {other:?}"),
            )),
        }
    }
}

fn check_bit_error(e_bit: f64) -> Result<f64> {
    check_probability("phase bound precondition (0 ≤ e_bit ≤ 1)", "e_bit", e_bit)
}

pub fn phase_bound_original(e_bit: f64, flaw: &RandomnessFlaw) -> Result<f64> {
    let e_bit = check_bit_error(e_bit)?;
    Ok((e_bit + flaw.deltas().delta).min(1.0))
}

pub fn phase_bound_tight(e_bit: f64, flaw: &RandomnessFlaw) -> Result<f64> {
    let e_bit = check_bit_error(e_bit)?;
    Ok((flaw.tight_factor() * e_bit + flaw.deltas().delta0).min(1.0))
}

/// Phase-error upper bound for `method`, clamped to at most 1.
pub fn phase_bound(e_bit: f64, flaw: &RandomnessFlaw, method: BoundMethod) -> Result<f64> {
    match method {
        BoundMethod::Original => phase_bound_original(e_bit, flaw),
        BoundMethod::Tight => phase_bound_tight(e_bit, flaw),
        BoundMethod::Best => {
            Ok(phase_bound_original(e_bit, flaw)?.min(phase_bound_tight(e_bit, flaw)?))
        }
    }
}

/// Largest `e_bit` at which the tight bound is no larger than the original one,
/// for a nonzero basis flaw. Below the crossover the tight bound wins.
pub fn crossover_bit_error(flaw: &RandomnessFlaw) -> Option<f64> {
    if flaw.epsilon1 == 0.0 {
        return None;
    }
    let d = flaw.deltas();
    Some((1.0 - 2.0 * flaw.epsilon1) * (d.delta - d.delta0) / (4.0 * flaw.epsilon1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // Frozen from a 50-digit mpmath evaluation of the same closed forms.
    const H_003: f64 = 0.194_391_857_831_576_16;
    const DELTA0_01: f64 = 0.010_102_051_443_364_38;
    const TIGHT_003_00235: f64 = 0.032_959_076_600_209_86;

    fn flaw(e0: f64, e1: f64) -> RandomnessFlaw {
        RandomnessFlaw::new(e0, e1).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.03).unwrap() - H_003).abs() < 1e-15);
    }

    #[test]
    fn entropy_rejects_out_of_range() {
        assert!(binary_entropy(-1e-9).is_err());
        assert!(binary_entropy(1.0 + 1e-9).is_err());
        assert!(binary_entropy(f64::NAN).is_err());
    }

    #[test]
    fn delta_examples() {
        let d = flaw(0.0, 0.0).deltas();
        assert_eq!((d.delta0, d.delta1, d.delta), (0.0, 0.0, 0.0));

        let d = flaw(0.1, 0.1).deltas();
        assert!((d.delta0 - DELTA0_01).abs() < 1e-15);
        assert_eq!(d.delta1, 0.2);
        assert_eq!(d.delta, 0.2);

        let d = flaw(0.5, 0.0).deltas();
        assert_eq!((d.delta0, d.delta1, d.delta), (0.5, 0.0, 0.5));
    }

    #[test]
    fn flaw_range_is_enforced() {
        assert!(RandomnessFlaw::new(0.5000001, 0.0).is_err());
        assert!(RandomnessFlaw::new(-0.01, 0.0).is_err());
        assert!(RandomnessFlaw::new(0.0, 0.5).is_err());
        assert!(RandomnessFlaw::new(0.0, 0.4999).is_ok());
        let msg = RandomnessFlaw::new(0.0, 0.5).unwrap_err().to_string();
        assert!(msg.contains("RandomnessFlaw"), "{msg}");
    }

    #[test]
    fn original_bound_examples() {
        let f = flaw(0.1, 0.1);
        assert!((phase_bound_original(0.034, &f).unwrap() - 0.234).abs() < 1e-15);
        assert_eq!(phase_bound_original(0.07, &RandomnessFlaw::NONE).unwrap(), 0.07);
        assert_eq!(phase_bound_original(0.9, &f).unwrap(), 1.0);
    }

    #[test]
    fn tight_bound_examples() {
        let f = flaw(0.1, 0.1);
        let expected = 1.5 * 0.034 + DELTA0_01;
        assert!((phase_bound_tight(0.034, &f).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.061_102_1).abs() < 1e-7);
        assert_eq!(phase_bound_tight(0.07, &RandomnessFlaw::NONE).unwrap(), 0.07);
        let f = flaw(0.0, 0.0235);
        assert!((phase_bound_tight(0.03, &f).unwrap() - TIGHT_003_00235).abs() < 1e-15);
    }

    #[test]
    fn best_is_pointwise_minimum() {
        let f = flaw(0.1, 0.1);
        let b = phase_bound(0.034, &f, BoundMethod::Best).unwrap();
        assert_eq!(b, phase_bound_tight(0.034, &f).unwrap());
        let b = phase_bound(0.45, &f, BoundMethod::Best).unwrap();
        assert!((b - 0.65).abs() < 1e-15);
        for m in BoundMethod::ALL {
            assert_eq!(phase_bound(0.042, &RandomnessFlaw::NONE, m).unwrap(), 0.042);
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("Tight".parse::<BoundMethod>().unwrap(), BoundMethod::Tight);
        assert!("loose".parse::<BoundMethod>().is_err());
    }

    proptest! {
        #[test]
        fn entropy_symmetric(x in 0.0f64..=1.0) {
            let a = binary_entropy(x).unwrap();
            let b = binary_entropy(1.0 - x).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn entropy_midpoint_concave(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let mid = binary_entropy(0.5 * (a + b)).unwrap();
            let avg = 0.5 * (binary_entropy(a).unwrap() + binary_entropy(b).unwrap());
            prop_assert!(mid >= avg - 1e-12);
        }

        #[test]
        fn delta0_monotone_delta1_linear(e in 0.0f64..0.5, step in 1e-6f64..0.01) {
            let hi = (e + step).min(0.5);
            prop_assert!(delta0(hi) >= delta0(e));
            let f = RandomnessFlaw::new(0.0, e).unwrap();
            prop_assert!((f.deltas().delta1 - 2.0 * e).abs() == 0.0);
        }

        #[test]
        fn bounds_reduce_without_flaw(e in 0.0f64..=1.0) {
            for m in BoundMethod::ALL {
                prop_assert_eq!(phase_bound(e, &RandomnessFlaw::NONE, m).unwrap(), e);
            }
        }

        #[test]
        fn crossover_identity(eps in 1e-3f64..0.2, e in 0.0f64..0.3) {
            let f = RandomnessFlaw::symmetric(eps).unwrap();
            let threshold = crossover_bit_error(&f).unwrap();
            prop_assume!((e - threshold).abs() > 1e-9);
            let tight = phase_bound_tight(e, &f).unwrap();
            let original = phase_bound_original(e, &f).unwrap();
            prop_assert_eq!(tight <= original, e <= threshold);
        }
    }
}
