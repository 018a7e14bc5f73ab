//! Rate curves, threshold searches and the γ degradation table.

use rayon::prelude::*;

use crate::channel::{simulate_link, ChannelParams, SourceSpec};
use crate::error::{Error, Result};
use crate::flaw::{BoundMethod, RandomnessFlaw};
use crate::ingest::TemperatureKey;
use crate::keyrate::{sps_rate, wps_rate};

/// Bit-error rates at which the single-photon γ columns are evaluated.
pub const TABLE1_BIT_ERRORS: [f64; 3] = [0.03, 0.05, 0.07];
/// Fiber lengths (km) at which the weak-coherent γ columns are evaluated.
pub const TABLE1_DISTANCES_KM: [f64; 3] = [10.0, 50.0, 100.0];

const ERROR_SCAN_STEP: f64 = 1e-3;
const ERROR_TOLERANCE: f64 = 1e-6;
const DISTANCE_SCAN_STEP_KM: f64 = 1.0;
const DISTANCE_TOLERANCE_KM: f64 = 0.01;
/// Far enough that any realistic fiber link has lost all key.
const DISTANCE_SEARCH_LIMIT_KM: f64 = 2000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    BitError,
    DistanceKm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub lo: f64,
    pub hi: f64,
    pub steps: usize,
    pub flaw: RandomnessFlaw,
    pub source: SourceSpec,
    pub params: ChannelParams,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        const INV: &str = "SweepSpec invariant (lo < hi, steps ≥ 2)";
        if !(self.lo < self.hi) || !self.lo.is_finite() || !self.hi.is_finite() {
            return Err(Error::domain(INV, format!("range [{}, {}]", self.lo, self.hi)));
        }
        if self.steps < 2 {
            return Err(Error::domain(INV, format!("steps = {}", self.steps)));
        }
        self.source.validate()?;
        self.params.validate()?;
        match (self.variable, self.source) {
            (SweepVariable::BitError, SourceSpec::Sps) => Ok(()),
            (SweepVariable::DistanceKm, SourceSpec::Wps { .. }) => Ok(()),
            (SweepVariable::BitError, _) => Err(Error::domain(
                "SweepSpec invariant (bit_error sweeps use a single-photon source)",
                "got a weak coherent source",
            )),
            (SweepVariable::DistanceKm, _) => Err(Error::domain(
                "SweepSpec invariant (distance sweeps use a weak coherent source)",
                "got a single-photon source",
            )),
        }
    }

    pub fn grid(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|k| {
                if k == self.steps - 1 {
                    self.hi
                } else {
                    self.lo + (self.hi - self.lo) * k as f64 / last
                }
            })
            .collect()
    }
}

/// Clamped key rates at one sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub original: f64,
    pub tight: f64,
    pub best: f64,
    /// Rate without any randomness flaw.
    pub ideal: f64,
}

fn raw_rate_at(
    variable: SweepVariable,
    x: f64,
    flaw: &RandomnessFlaw,
    method: BoundMethod,
    source: &SourceSpec,
    params: &ChannelParams,
) -> Result<f64> {
    match variable {
        SweepVariable::BitError => Ok(sps_rate(x, flaw, method)?.raw_rate),
        SweepVariable::DistanceKm => {
            let obs = simulate_link(x, source, params)?;
            Ok(wps_rate(&obs, flaw, method, params)?.raw_rate)
        }
    }
}

/// Evaluates every method plus the flawless reference on the grid. Points are
/// computed in parallel; rows come back in ascending `x`.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    spec.grid()
        .par_iter()
        .map(|&x| {
            let rate = |flaw: &RandomnessFlaw, method| -> Result<f64> {
                Ok(raw_rate_at(spec.variable, x, flaw, method, &spec.source, &spec.params)?
                    .max(0.0))
            };
            Ok(SweepRow {
                x,
                original: rate(&spec.flaw, BoundMethod::Original)?,
                tight: rate(&spec.flaw, BoundMethod::Tight)?,
                best: rate(&spec.flaw, BoundMethod::Best)?,
                ideal: rate(&RandomnessFlaw::NONE, BoundMethod::Tight)?,
            })
        })
        .collect()
}

/// Largest `x` in `[lo, hi]` with `f(x) ≥ 0`, assuming `f` starts positive and
/// decreases. Scans with `scan_step` up to the first sign change, then bisects
/// that bracket down to `tolerance`. `Ok(None)` means no sign change up to `hi`.
pub fn scan_then_bisect<F>(
    f: F,
    lo: f64,
    hi: f64,
    scan_step: f64,
    tolerance: f64,
) -> Result<Option<f64>>
where
    F: Fn(f64) -> Result<f64>,
{
    let f_lo = f(lo)?;
    if f_lo <= 0.0 {
        return Err(Error::NoPositiveRate(format!("rate {f_lo:e} at x = {lo}")));
    }
    let (mut a, mut fa) = (lo, f_lo);
    let mut k = 1usize;
    let (mut b, mut fb) = loop {
        let x = (lo + k as f64 * scan_step).min(hi);
        let fx = f(x)?;
        if fx >= fa {
            return Err(Error::NotMonotonic { at: x });
        }
        if fx < 0.0 {
            break (x, fx);
        }
        if x >= hi {
            return Ok(None);
        }
        a = x;
        fa = fx;
        k += 1;
    };
    while b - a >= tolerance {
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if !(fm < fa && fm > fb) {
            return Err(Error::NotMonotonic { at: mid });
        }
        if fm >= 0.0 {
            a = mid;
            fa = fm;
        } else {
            b = mid;
            fb = fm;
        }
    }
    Ok(Some(a))
}

/// Highest bit-error rate at which a single-photon source still yields key.
pub fn max_tolerable_error(flaw: &RandomnessFlaw, method: BoundMethod) -> Result<f64> {
    let f = |e: f64| Ok(sps_rate(e, flaw, method)?.raw_rate);
    match scan_then_bisect(f, 0.0, 0.5, ERROR_SCAN_STEP, ERROR_TOLERANCE) {
        Err(Error::NoPositiveRate(_)) => Err(Error::NoPositiveRate(format!(
            "single-photon rate is not positive at e_bit = 0 (ε0 = {}, ε1 = {}, {method})",
            flaw.epsilon0(),
            flaw.epsilon1()
        ))),
        // H(1/2) = 1 makes the rate negative at e_bit = 1/2, so None is unreachable
        Ok(root) => Ok(root.unwrap_or(0.5)),
        Err(e) => Err(e),
    }
}

/// Longest fiber over which a weak-coherent link still yields key.
///
/// Returns [`Error::NoPositiveRate`] when there is no key even at 0 km.
pub fn max_distance(
    flaw: &RandomnessFlaw,
    method: BoundMethod,
    source: &SourceSpec,
    params: &ChannelParams,
) -> Result<f64> {
    source.validate()?;
    params.validate()?;
    let f = |l: f64| {
        let obs = simulate_link(l, source, params)?;
        Ok(wps_rate(&obs, flaw, method, params)?.raw_rate)
    };
    match scan_then_bisect(
        f,
        0.0,
        DISTANCE_SEARCH_LIMIT_KM,
        DISTANCE_SCAN_STEP_KM,
        DISTANCE_TOLERANCE_KM,
    ) {
        Err(Error::NoPositiveRate(_)) => Err(Error::NoPositiveRate(format!(
            "weak-coherent rate is not positive at any distance (ε0 = {}, ε1 = {}, {method})",
            flaw.epsilon0(),
            flaw.epsilon1()
        ))),
        Ok(None) => Err(Error::domain(
            "max_distance search range",
            format!("rate still positive at {DISTANCE_SEARCH_LIMIT_KM} km"),
        )),
        Ok(Some(l)) => Ok(l),
        Err(e) => Err(e),
    }
}

/// Relative rate loss `(R_ideal − R_prac) / R_ideal`.
pub fn gamma(r_ideal: f64, r_prac: f64) -> Result<f64> {
    if !(r_ideal > 0.0) {
        return Err(Error::degenerate(
            "gamma",
            format!("ideal rate must be positive, got {r_ideal}"),
        ));
    }
    Ok((r_ideal - r_prac) / r_ideal)
}

/// γ values for one temperature: single-photon at [`TABLE1_BIT_ERRORS`],
/// weak-coherent at [`TABLE1_DISTANCES_KM`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub temperature: TemperatureKey,
    pub epsilon1: f64,
    pub sps: [f64; 3],
    pub wps: [f64; 3],
}

/// Degradation table with ε₀ = 0, the tight bound, and raw (unclamped) rates.
pub fn table1(
    epsilon1_by_temperature: &[(TemperatureKey, f64)],
    source: &SourceSpec,
    params: &ChannelParams,
) -> Result<Vec<Table1Row>> {
    source.validate()?;
    params.validate()?;
    let method = BoundMethod::Tight;
    let ideal_sps = TABLE1_BIT_ERRORS
        .iter()
        .map(|&e| Ok(sps_rate(e, &RandomnessFlaw::NONE, method)?.raw_rate))
        .collect::<Result<Vec<_>>>()?;
    let links = TABLE1_DISTANCES_KM
        .iter()
        .map(|&l| simulate_link(l, source, params))
        .collect::<Result<Vec<_>>>()?;
    let ideal_wps = links
        .iter()
        .map(|obs| Ok(wps_rate(obs, &RandomnessFlaw::NONE, method, params)?.raw_rate))
        .collect::<Result<Vec<_>>>()?;

    epsilon1_by_temperature
        .iter()
        .map(|&(temperature, eps1)| {
            let flaw = RandomnessFlaw::new(0.0, eps1)?;
            let mut sps = [0.0; 3];
            let mut wps = [0.0; 3];
            for k in 0..3 {
                let prac = sps_rate(TABLE1_BIT_ERRORS[k], &flaw, method)?.raw_rate;
                sps[k] = gamma(ideal_sps[k], prac)?;
                let prac = wps_rate(&links[k], &flaw, method, params)?.raw_rate;
                wps[k] = gamma(ideal_wps[k], prac)?;
            }
            Ok(Table1Row {
                temperature,
                epsilon1: eps1,
                sps,
                wps,
            })
        })
        .collect()
}
