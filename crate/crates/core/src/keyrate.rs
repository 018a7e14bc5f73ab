//! Final key-rate formulas: symmetric single-photon and weak-coherent rates
//! under any [`BoundMethod`], and the biased-basis (two-step) variants where
//! the rectilinear and diagonal keys are distilled separately.

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::channel::{ChannelParams, LinkObservables};
use crate::error::{check_probability, Error, Result};
use crate::flaw::{binary_entropy, phase_bound, BoundMethod, RandomnessFlaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceKind {
    Sps,
    Wps,
}

impl fmt::Display for SourceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SourceKind::Sps => "sps",
            SourceKind::Wps => "wps",
        })
    }
}

/// Result of a key-rate evaluation.
///
/// `raw_rate` is the unclamped lower bound, which may be negative; use
/// [`KeyRateReport::rate`] for the extractable rate. For the biased-basis
/// engines `phase_estimate` and `bit_error` are the basis-probability weighted
/// averages of the per-basis values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeyRateReport {
    pub raw_rate: f64,
    pub phase_estimate: f64,
    pub bit_error: f64,
    pub method: BoundMethod,
    pub source_kind: SourceKind,
}

impl KeyRateReport {
    /// Rate clamped at zero, in bits per pulse.
    pub fn rate(&self) -> f64 {
        self.raw_rate.max(0.0)
    }

    pub fn has_key(&self) -> bool {
        self.raw_rate > 0.0
    }
}

/// Entropy charged for a phase error known only through an upper bound.
///
/// H is maximal at 1/2, so a bound at or above 1/2 costs a full bit.
fn phase_entropy(bound: f64) -> Result<f64> {
    binary_entropy(bound.min(0.5))
}

/// `1 − H(e_phase) − H(e_bit)` for a single-photon source.
pub fn sps_rate(e_bit: f64, flaw: &RandomnessFlaw, method: BoundMethod) -> Result<KeyRateReport> {
    let phase = phase_bound(e_bit, flaw, method)?;
    let raw_rate = 1.0 - phase_entropy(phase)? - binary_entropy(e_bit)?;
    Ok(KeyRateReport {
        raw_rate,
        phase_estimate: phase,
        bit_error: e_bit,
        method,
        source_kind: SourceKind::Sps,
    })
}

/// GLLP rate `−Q_s f H(E_s) + Q_s1 (1 − H(e_phase(e₁)))` for a weak coherent source.
pub fn wps_rate(
    obs: &LinkObservables,
    flaw: &RandomnessFlaw,
    method: BoundMethod,
    params: &ChannelParams,
) -> Result<KeyRateReport> {
    obs.validate()?;
    params.validate()?;
    let phase = phase_bound(obs.single_photon_error, flaw, method)?;
    let raw_rate = gllp(obs, phase, params.ec_efficiency)?;
    Ok(KeyRateReport {
        raw_rate,
        phase_estimate: phase,
        bit_error: obs.single_photon_error,
        method,
        source_kind: SourceKind::Wps,
    })
}

fn gllp(obs: &LinkObservables, phase: f64, ec_efficiency: f64) -> Result<f64> {
    Ok(-obs.gain * ec_efficiency * binary_entropy(obs.error_rate)?
        + obs.single_photon_gain * (1.0 - phase_entropy(phase)?))
}

/// Joint probabilities of the basis hidden variable λ₁ and Bob's basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisProbabilities {
    /// `p(λ₁=0) p(x₁=0 | λ₁=0)`
    pub rec1: f64,
    /// `p(λ₁=1) p(x₁=0 | λ₁=1)`
    pub rec2: f64,
    /// `p(λ₁=0) p(x₁=1 | λ₁=0)`
    pub dia1: f64,
    /// `p(λ₁=1) p(x₁=1 | λ₁=1)`
    pub dia2: f64,
}

impl BasisProbabilities {
    pub fn rec(&self) -> f64 {
        self.rec1 + self.rec2
    }

    pub fn dia(&self) -> f64 {
        self.dia1 + self.dia2
    }

    pub fn split(&self) -> Result<BasisSplit> {
        BasisSplit::new(self.rec(), self.dia())
    }
}

pub fn basis_probabilities(
    p_lambda1_0: f64,
    p_x1_0_given_0: f64,
    p_x1_0_given_1: f64,
) -> Result<BasisProbabilities> {
    const INV: &str = "basis_probabilities inputs (probabilities in [0,1])";
    let w0 = check_probability(INV, "p_lambda1_0", p_lambda1_0)?;
    let c0 = check_probability(INV, "p_x1_0_given_0", p_x1_0_given_0)?;
    let c1 = check_probability(INV, "p_x1_0_given_1", p_x1_0_given_1)?;
    let w1 = 1.0 - w0;
    Ok(BasisProbabilities {
        rec1: w0 * c0,
        rec2: w1 * c1,
        dia1: w0 * (1.0 - c0),
        dia2: w1 * (1.0 - c1),
    })
}

/// Checks that the basis conditionals stay inside the declared flaw ball.
pub fn check_basis_conditionals(
    flaw: &RandomnessFlaw,
    conditionals: &[f64],
) -> Result<()> {
    for (j, &c) in conditionals.iter().enumerate() {
        if (c - 0.5).abs() > flaw.epsilon1() + 1e-12 {
            return Err(Error::domain(
                "BiasedBasisInputs invariant (|p(x1=0|λ1=j) − 1/2| ≤ ε1)",
                format!("conditional {j} = {c} is outside 1/2 ± {}", flaw.epsilon1()),
            ));
        }
    }
    Ok(())
}

/// Probabilities that Bob's outcome falls in the rectilinear or diagonal basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BasisSplit {
    rec: f64,
    dia: f64,
}

impl BasisSplit {
    pub fn new(rec: f64, dia: f64) -> Result<Self> {
        const INV: &str = "BiasedBasisInputs invariant (p_rec, p_dia in [0,1], sum 1)";
        check_probability(INV, "p_rec", rec)?;
        check_probability(INV, "p_dia", dia)?;
        if (rec + dia - 1.0).abs() > 1e-12 {
            return Err(Error::domain(INV, format!("p_rec + p_dia = {}", rec + dia)));
        }
        Ok(Self { rec, dia })
    }

    pub fn even() -> Self {
        Self { rec: 0.5, dia: 0.5 }
    }

    pub fn rec(&self) -> f64 {
        self.rec
    }

    pub fn dia(&self) -> f64 {
        self.dia
    }

    pub fn swapped(&self) -> Self {
        Self {
            rec: self.dia,
            dia: self.rec,
        }
    }
}

/// Inputs for the biased-basis engines. `T` is a measured bit-error rate
/// (`f64`) for a single-photon source and [`LinkObservables`] for a weak
/// coherent source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasedBasisInputs<T> {
    pub split: BasisSplit,
    pub rectilinear: T,
    pub diagonal: T,
    /// Per-basis δ₀ replacing the one derived from ε₀, for systems whose bit
    /// randomness differs between the bases. Order: (rectilinear, diagonal).
    pub delta0_override: Option<(f64, f64)>,
}

impl<T: Copy> BiasedBasisInputs<T> {
    pub fn new(split: BasisSplit, rectilinear: T, diagonal: T) -> Self {
        Self {
            split,
            rectilinear,
            diagonal,
            delta0_override: None,
        }
    }

    /// Relabels rectilinear ↔ diagonal together with all their observables.
    pub fn swapped(&self) -> Self {
        Self {
            split: self.split.swapped(),
            rectilinear: self.diagonal,
            diagonal: self.rectilinear,
            delta0_override: self.delta0_override.map(|(r, d)| (d, r)),
        }
    }

    fn delta0s(&self, flaw: &RandomnessFlaw) -> Result<(f64, f64)> {
        match self.delta0_override {
            None => {
                let d = flaw.deltas().delta0;
                Ok((d, d))
            }
            Some((r, d)) => {
                const INV: &str = "δ0 override (0 ≤ δ0 ≤ 1/2)";
                for v in [r, d] {
                    if !(0.0..=0.5).contains(&v) {
                        return Err(Error::domain(INV, format!("got {v}")));
                    }
                }
                Ok((r, d))
            }
        }
    }

    fn require_both_bases(&self, operation: &'static str) -> Result<()> {
        if self.split.rec <= 0.0 || self.split.dia <= 0.0 {
            return Err(Error::degenerate(
                operation,
                format!(
                    "p_rec = {} and p_dia = {} must both be positive",
                    self.split.rec, self.split.dia
                ),
            ));
        }
        Ok(())
    }
}

/// Phase-error bound of the key distilled in one basis, from the bit error
/// observed in the other: `e_other · p_other(1/2+ε₁) / (p_own(1/2−ε₁)) + δ₀`,
/// clamped to 1.
pub fn biased_phase_bound(
    other_bit_error: f64,
    p_own: f64,
    p_other: f64,
    epsilon1: f64,
    delta0: f64,
) -> f64 {
    let ratio = (p_other * (0.5 + epsilon1)) / (p_own * (0.5 - epsilon1));
    (other_bit_error * ratio + delta0).min(1.0)
}

pub fn biased_sps_rate(
    inputs: &BiasedBasisInputs<f64>,
    flaw: &RandomnessFlaw,
) -> Result<KeyRateReport> {
    inputs.require_both_bases("biased_sps_rate")?;
    const INV: &str = "BiasedBasisInputs invariant (bit errors in [0,1])";
    let e_rec = check_probability(INV, "e_rec_b", inputs.rectilinear)?;
    let e_dia = check_probability(INV, "e_dia_b", inputs.diagonal)?;
    let (d_rec, d_dia) = inputs.delta0s(flaw)?;
    let (p_rec, p_dia) = (inputs.split.rec, inputs.split.dia);
    let eps1 = flaw.epsilon1();

    let phase_rec = biased_phase_bound(e_dia, p_rec, p_dia, eps1, d_rec);
    let phase_dia = biased_phase_bound(e_rec, p_dia, p_rec, eps1, d_dia);
    let raw_rate = p_rec * (1.0 - binary_entropy(e_rec)? - phase_entropy(phase_rec)?)
        + p_dia * (1.0 - binary_entropy(e_dia)? - phase_entropy(phase_dia)?);

    Ok(KeyRateReport {
        raw_rate,
        phase_estimate: p_rec * phase_rec + p_dia * phase_dia,
        bit_error: p_rec * e_rec + p_dia * e_dia,
        method: BoundMethod::Tight,
        source_kind: SourceKind::Sps,
    })
}

/// Weak-coherent biased-basis rate. The basis flaw ε₁ appears in both the
/// numerator and denominator of the cross-basis ratio, as in the single-photon
/// formula.
pub fn biased_wps_rate(
    inputs: &BiasedBasisInputs<LinkObservables>,
    flaw: &RandomnessFlaw,
    params: &ChannelParams,
) -> Result<KeyRateReport> {
    inputs.require_both_bases("biased_wps_rate")?;
    inputs.rectilinear.validate()?;
    inputs.diagonal.validate()?;
    params.validate()?;
    let (d_rec, d_dia) = inputs.delta0s(flaw)?;
    let (p_rec, p_dia) = (inputs.split.rec, inputs.split.dia);
    let (rec, dia) = (&inputs.rectilinear, &inputs.diagonal);
    let eps1 = flaw.epsilon1();

    let phase_rec = biased_phase_bound(dia.single_photon_error, p_rec, p_dia, eps1, d_rec);
    let phase_dia = biased_phase_bound(rec.single_photon_error, p_dia, p_rec, eps1, d_dia);
    let raw_rate = p_rec * gllp(rec, phase_rec, params.ec_efficiency)?
        + p_dia * gllp(dia, phase_dia, params.ec_efficiency)?;

    Ok(KeyRateReport {
        raw_rate,
        phase_estimate: p_rec * phase_rec + p_dia * phase_dia,
        bit_error: p_rec * rec.single_photon_error + p_dia * dia.single_photon_error,
        method: BoundMethod::Tight,
        source_kind: SourceKind::Wps,
    })
}
