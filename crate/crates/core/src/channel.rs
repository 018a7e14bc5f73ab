//! Weak-coherent-source link model: transmittance, signal gain and error rate,
//! and infinite-decoy single-photon estimates.

use serde::{Deserialize, Serialize};

use crate::error::{check_probability, Error, Result};

const PARAMS_INVARIANT: &str =
    "ChannelParams invariant (probabilities in [0,1], loss_coeff ≥ 0, f_ec ≥ 1)";

/// Detector, fiber and post-processing parameters of a link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Dark-count probability per pulse, Y₀.
    #[serde(rename = "y0")]
    pub dark_count: f64,
    /// Error probability of a background (dark) event, e₀.
    #[serde(rename = "e0")]
    pub background_error: f64,
    /// Receiver transmittance including detector efficiency.
    #[serde(rename = "eta_bob")]
    pub eta_bob: f64,
    /// Fiber loss in dB/km.
    #[serde(rename = "loss_coeff")]
    pub loss_db_per_km: f64,
    /// Optical misalignment error probability, e_det.
    #[serde(rename = "e_det")]
    pub misalignment_error: f64,
    /// Error-correction inefficiency f ≥ 1.
    #[serde(rename = "f_ec")]
    pub ec_efficiency: f64,
}

impl ChannelParams {
    /// Parameters of the GYS field experiment (Gobby, Yuan, Shields).
    pub const GYS: ChannelParams = ChannelParams {
        dark_count: 1.7e-6,
        background_error: 0.5,
        eta_bob: 0.045,
        loss_db_per_km: 0.21,
        misalignment_error: 0.033,
        ec_efficiency: 1.22,
    };

    /// Signal intensity used with [`ChannelParams::GYS`].
    pub const GYS_SIGNAL_INTENSITY: f64 = 0.48;

    pub fn validate(&self) -> Result<()> {
        check_probability(PARAMS_INVARIANT, "y0", self.dark_count)?;
        check_probability(PARAMS_INVARIANT, "e0", self.background_error)?;
        check_probability(PARAMS_INVARIANT, "eta_bob", self.eta_bob)?;
        check_probability(PARAMS_INVARIANT, "e_det", self.misalignment_error)?;
        if !(self.loss_db_per_km >= 0.0 && self.loss_db_per_km.is_finite()) {
            return Err(Error::domain(
                PARAMS_INVARIANT,
                format!("loss_coeff must be ≥ 0, got {}", self.loss_db_per_km),
            ));
        }
        if !(self.ec_efficiency >= 1.0 && self.ec_efficiency.is_finite()) {
            return Err(Error::domain(
                PARAMS_INVARIANT,
                format!("f_ec must be ≥ 1, got {}", self.ec_efficiency),
            ));
        }
        Ok(())
    }
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self::GYS
    }
}

/// Photon source driving the link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SourceSpec {
    /// Ideal single-photon source.
    Sps,
    /// Phase-randomised weak coherent pulses with the given mean photon number.
    Wps { intensity: f64 },
}

impl SourceSpec {
    pub fn gys() -> Self {
        SourceSpec::Wps {
            intensity: ChannelParams::GYS_SIGNAL_INTENSITY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            SourceSpec::Sps => Ok(()),
            SourceSpec::Wps { intensity } if intensity > 0.0 && intensity.is_finite() => Ok(()),
            SourceSpec::Wps { intensity } => Err(Error::domain(
                "SourceSpec invariant (intensity > 0 for WPS)",
                format!("got intensity {intensity}"),
            )),
        }
    }
}

/// What Alice and Bob measure on the signal pulses, plus the single-photon
/// quantities recovered by the decoy method.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkObservables {
    /// Signal gain Q_s.
    pub gain: f64,
    /// Signal bit-error rate E_s.
    pub error_rate: f64,
    /// Single-photon yield Y₁.
    pub single_photon_yield: f64,
    /// Single-photon gain inside the signal pulses, Q_{s,1}.
    pub single_photon_gain: f64,
    /// Single-photon bit-error rate e₁.
    pub single_photon_error: f64,
}

impl LinkObservables {
    pub fn validate(&self) -> Result<()> {
        const INV: &str = "LinkObservables invariant (all in [0,1], Q_s1 ≤ Q_s)";
        check_probability(INV, "Q_s", self.gain)?;
        check_probability(INV, "E_s", self.error_rate)?;
        check_probability(INV, "Y1", self.single_photon_yield)?;
        check_probability(INV, "Q_s1", self.single_photon_gain)?;
        check_probability(INV, "e1", self.single_photon_error)?;
        if self.single_photon_gain > self.gain {
            return Err(Error::domain(
                INV,
                format!(
                    "Q_s1 = {} exceeds Q_s = {}",
                    self.single_photon_gain, self.gain
                ),
            ));
        }
        Ok(())
    }
}

/// Overall transmittance `η_Bob · 10^(−loss·L/10)`.
pub fn transmittance(distance_km: f64, params: &ChannelParams) -> Result<f64> {
    if !(distance_km >= 0.0 && distance_km.is_finite()) {
        return Err(Error::domain(
            "transmittance precondition (distance_km ≥ 0)",
            format!("got {distance_km}"),
        ));
    }
    Ok(params.eta_bob * 10f64.powf(-params.loss_db_per_km * distance_km / 10.0))
}

fn check_intensity_and_eta(intensity: f64, eta: f64) -> Result<()> {
    if !(intensity > 0.0 && intensity.is_finite()) {
        return Err(Error::domain(
            "source intensity (ω > 0)",
            format!("got {intensity}"),
        ));
    }
    check_probability("transmittance (0 ≤ η ≤ 1)", "eta", eta)?;
    Ok(())
}

/// Gain `Q_ω` and error rate `E_ω` for pulses of mean photon number `intensity`.
pub fn gain_and_error(intensity: f64, eta: f64, params: &ChannelParams) -> Result<(f64, f64)> {
    check_intensity_and_eta(intensity, eta)?;
    // 1 − e^{−ωη}, accurate for tiny ωη
    let detected = -(-intensity * eta).exp_m1();
    // 1 − (1 − Y₀)e^{−ωη}, rearranged to avoid cancellation when both terms are small
    let gain = params.dark_count + (1.0 - params.dark_count) * detected;
    if gain <= 0.0 {
        return Err(Error::degenerate(
            "gain_and_error",
            "Q_ω = 0 (no dark counts and no transmitted light)",
        ));
    }
    let error_mass =
        params.background_error * params.dark_count + params.misalignment_error * detected;
    Ok((gain, error_mass / gain))
}

/// Single-photon quantities under the infinite-decoy assumption.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinglePhotonEstimates {
    pub yield_: f64,
    pub gain: f64,
    pub error: f64,
}

pub fn single_photon_estimates(
    intensity: f64,
    eta: f64,
    params: &ChannelParams,
) -> Result<SinglePhotonEstimates> {
    check_intensity_and_eta(intensity, eta)?;
    let yield_ = params.dark_count + (1.0 - params.dark_count) * eta;
    if yield_ <= 0.0 {
        return Err(Error::degenerate(
            "single_photon_estimates",
            "Y1 = 0 (no dark counts and η = 0)",
        ));
    }
    let gain = intensity * (-intensity).exp() * yield_;
    let error = (params.background_error * params.dark_count + params.misalignment_error * eta)
        / yield_;
    Ok(SinglePhotonEstimates {
        yield_,
        gain,
        error,
    })
}

/// Observables of a weak-coherent link of the given length.
pub fn simulate_link(
    distance_km: f64,
    source: &SourceSpec,
    params: &ChannelParams,
) -> Result<LinkObservables> {
    params.validate()?;
    let intensity = match *source {
        SourceSpec::Wps { intensity } => intensity,
        SourceSpec::Sps => {
            return Err(Error::domain(
                "simulate_link precondition (WPS source)",
                "the link model needs a weak coherent source",
            ))
        }
    };
    let eta = transmittance(distance_km, params)?;
    let (gain, error_rate) = gain_and_error(intensity, eta, params)?;
    let single = single_photon_estimates(intensity, eta, params)?;
    Ok(LinkObservables {
        gain,
        error_rate,
        single_photon_yield: single.yield_,
        single_photon_gain: single.gain,
        single_photon_error: single.error,
    })
}
