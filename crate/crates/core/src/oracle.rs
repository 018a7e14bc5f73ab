//! Brute-force verifier for the phase-error bounds.
//!
//! For an explicit attack (Eve applies `XᵘZᵛ` with probability `q_μν` on Bob's
//! qubit, conjugated by `H` when the diagonal basis is used) and explicit
//! hidden-variable conditionals, the shared two-qubit state is built as a 4×4
//! density matrix and projected onto the Bell basis. Nothing here uses the
//! analytic bounds being certified, except [`verify_bounds`] which compares
//! against them.

use nalgebra::{Matrix2, Matrix4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{check_probability, Error, Result};
use crate::flaw::{binary_entropy, phase_bound_original, phase_bound_tight, RandomnessFlaw};

/// Slack allowed when comparing exact errors against analytic bounds.
pub const CERT_TOLERANCE: f64 = 1e-12;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-12;
const PSD_TOL: f64 = 1e-10;
const IMAG_TOL: f64 = 1e-15;

/// Probabilities that Eve applies `I`, `Z`, `X`, `XZ` (indexed by the
/// exponents μ of X and ν of Z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PauliMixture {
    pub q00: f64,
    pub q01: f64,
    pub q10: f64,
    pub q11: f64,
}

impl PauliMixture {
    pub const IDENTITY: PauliMixture = PauliMixture {
        q00: 1.0,
        q01: 0.0,
        q10: 0.0,
        q11: 0.0,
    };

    pub fn new(q00: f64, q01: f64, q10: f64, q11: f64) -> Result<Self> {
        let m = Self { q00, q01, q10, q11 };
        m.validate()?;
        Ok(m)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.q00, self.q01, self.q10, self.q11]
    }

    pub fn validate(&self) -> Result<()> {
        const INV: &str = "EveStrategy invariant (q_μν in [0,1], Σ q_μν = 1)";
        for (name, q) in ["q00", "q01", "q10", "q11"].iter().zip(self.as_array()) {
            check_probability(INV, name, q)?;
        }
        let sum: f64 = self.as_array().iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::domain(INV, format!("Σ q_μν = {sum}")));
        }
        Ok(())
    }
}

/// An attack together with the hidden-variable conditionals it faces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EveStrategy {
    pub mixture: PauliMixture,
    /// `p(x₀ = 0 | λ₀ = i)`
    pub p_bit0: f64,
    /// `p(x₁ = 0 | λ₁ = j)`
    pub p_basis0: f64,
}

impl EveStrategy {
    pub fn new(mixture: PauliMixture, p_bit0: f64, p_basis0: f64) -> Result<Self> {
        let s = Self {
            mixture,
            p_bit0,
            p_basis0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        const INV: &str = "EveStrategy invariant (conditionals in [0,1])";
        self.mixture.validate()?;
        check_probability(INV, "p(x0=0|λ0=i)", self.p_bit0)?;
        check_probability(INV, "p(x1=0|λ1=j)", self.p_basis0)?;
        Ok(())
    }

    /// Exact bit-choice phase term `(√p₀ − √p₁)²/2 = (1 − 2√(p₀p₁))/2`.
    pub fn bit_bias_term(&self) -> f64 {
        let p0 = self.p_bit0;
        (1.0 - 2.0 * (p0 * (1.0 - p0)).sqrt()) / 2.0
    }
}

/// Two-qubit density matrix, Alice's qubit first.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    rho: Matrix4<Complex64>,
}

impl TwoQubitState {
    pub fn from_matrix(rho: Matrix4<Complex64>) -> Result<Self> {
        let s = Self { rho };
        s.validate()?;
        Ok(s)
    }

    pub fn matrix(&self) -> &Matrix4<Complex64> {
        &self.rho
    }

    pub fn validate(&self) -> Result<()> {
        const INV: &str = "TwoQubitState invariant";
        let rho = &self.rho;
        let herm = (rho - rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > HERMITIAN_TOL {
            return Err(Error::domain(INV, format!("not Hermitian (deviation {herm:e})")));
        }
        let trace = rho.trace();
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(Error::domain(INV, format!("trace {trace} ≠ 1")));
        }
        let min_eig = rho
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if min_eig < -PSD_TOL {
            return Err(Error::domain(
                INV,
                format!("not positive semidefinite (eigenvalue {min_eig:e})"),
            ));
        }
        Ok(())
    }

    /// Largest imaginary part of any entry; every state built here is real.
    pub fn max_imaginary(&self) -> f64 {
        self.rho.iter().map(|z| z.im.abs()).fold(0.0, f64::max)
    }

    /// `⟨φ_k|ρ|φ_k⟩` for the four Bell states, in the order `Φ⁺, Ψ⁺, Φ⁻, Ψ⁻`.
    pub fn bell_projections(&self) -> [f64; 4] {
        bell_states().map(|phi| (phi.adjoint() * self.rho * phi)[(0, 0)].re)
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn pauli_x() -> Matrix2<Complex64> {
    Matrix2::new(c(0.0), c(1.0), c(1.0), c(0.0))
}

fn pauli_z() -> Matrix2<Complex64> {
    Matrix2::new(c(1.0), c(0.0), c(0.0), c(-1.0))
}

fn hadamard() -> Matrix2<Complex64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    Matrix2::new(c(s), c(s), c(s), c(-s))
}

/// `XᵘZᵛ`
fn eve_operator(mu: u8, nu: u8) -> Matrix2<Complex64> {
    let mut op = Matrix2::identity();
    if mu == 1 {
        op *= pauli_x();
    }
    if nu == 1 {
        op *= pauli_z();
    }
    op
}

fn on_bob(op: &Matrix2<Complex64>) -> Matrix4<Complex64> {
    let k = Matrix2::<Complex64>::identity().kronecker(op);
    Matrix4::from_fn(|r, col| k[(r, col)])
}

/// Bell basis `Φ⁺, Ψ⁺, Φ⁻, Ψ⁻` in the computational order `|00⟩,|01⟩,|10⟩,|11⟩`.
pub fn bell_states() -> [Vector4<Complex64>; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    [
        Vector4::new(c(s), c(0.0), c(0.0), c(s)),
        Vector4::new(c(0.0), c(s), c(s), c(0.0)),
        Vector4::new(c(s), c(0.0), c(0.0), c(-s)),
        Vector4::new(c(0.0), c(s), c(-s), c(0.0)),
    ]
}

/// Builds the state shared by Alice and Bob for one hidden-variable pair.
pub fn build_state(strategy: &EveStrategy) -> Result<TwoQubitState> {
    strategy.validate()?;
    let p0 = strategy.p_bit0;
    let phi = Vector4::new(c(p0.sqrt()), c(0.0), c(0.0), c((1.0 - p0).sqrt()));
    let pure = phi * phi.adjoint();
    let h = hadamard();

    let mut rho = Matrix4::<Complex64>::zeros();
    let q = strategy.mixture.as_array();
    for (idx, &weight) in q.iter().enumerate() {
        if weight == 0.0 {
            continue;
        }
        let op = eve_operator((idx >> 1) as u8, (idx & 1) as u8);
        for (basis_weight, local) in [
            (strategy.p_basis0, op),
            (1.0 - strategy.p_basis0, h * op * h),
        ] {
            let u = on_bob(&local);
            rho += (u * pure * u.adjoint()) * c(weight * basis_weight);
        }
    }
    let state = TwoQubitState::from_matrix(rho)?;
    debug_assert!(state.max_imaginary() <= IMAG_TOL);
    Ok(state)
}

/// Exact bit and phase error rates of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellErrors {
    pub bit: f64,
    pub phase: f64,
}

/// `e_bit = ⟨Ψ⁺⟩ + ⟨Ψ⁻⟩`, `e_phase = ⟨Φ⁻⟩ + ⟨Ψ⁻⟩`.
pub fn bell_errors(state: &TwoQubitState) -> BellErrors {
    let [_, psi_plus, phi_minus, psi_minus] = state.bell_projections();
    BellErrors {
        bit: (psi_plus + psi_minus).clamp(0.0, 1.0),
        phase: (phi_minus + psi_minus).clamp(0.0, 1.0),
    }
}

/// Algebraic Bell-basis errors, with the exact bit-bias term in place of the
/// worst-case δ₀.
pub fn closed_form_errors(strategy: &EveStrategy) -> BellErrors {
    let PauliMixture { q00, q01, q10, q11 } = strategy.mixture;
    let c0 = strategy.p_basis0;
    let c1 = 1.0 - c0;
    let d = strategy.bit_bias_term();
    BellErrors {
        bit: q01 * c1 + q10 * c0 + q11,
        phase: q00 * d
            + q11 * (1.0 - d)
            + q01 * (0.5 + (c0 - c1) * (0.5 - d))
            + q10 * (0.5 + (c1 - c0) * (0.5 - d)),
    }
}

/// Exact errors through the matrix route.
pub fn exact_errors(strategy: &EveStrategy) -> Result<BellErrors> {
    Ok(bell_errors(&build_state(strategy)?))
}

/// One evaluated grid point of a certification run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertificationRow {
    pub index: usize,
    pub strategy: EveStrategy,
    pub exact: BellErrors,
    pub original_bound: f64,
    pub tight_bound: f64,
    /// `(1/2 − ε₁)(q01 + q10) + q11`
    pub bit_error_floor: f64,
}

impl CertificationRow {
    pub fn original_margin(&self) -> f64 {
        self.original_bound - self.exact.phase
    }

    pub fn tight_margin(&self) -> f64 {
        self.tight_bound - self.exact.phase
    }

    pub fn is_counterexample(&self) -> bool {
        self.original_margin() < -CERT_TOLERANCE
            || self.tight_margin() < -CERT_TOLERANCE
            || self.exact.bit < self.bit_error_floor - CERT_TOLERANCE
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certification {
    pub flaw: RandomnessFlaw,
    pub step: f64,
    pub checked: usize,
    /// Grid points where the tight bound exceeds the original one.
    pub tight_looser: usize,
    /// Largest |matrix − closed form| over both error rates.
    pub max_closed_form_gap: f64,
    pub counterexamples: Vec<CertificationRow>,
}

impl Certification {
    pub fn passed(&self) -> bool {
        self.counterexamples.is_empty()
    }
}

fn grid_divisions(step: f64) -> Result<usize> {
    const INV: &str = "verify_bounds precondition (step = 1/n with n ≥ 4)";
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::domain(INV, format!("got step {step}")));
    }
    let n = (1.0 / step).round();
    if (n * step - 1.0).abs() > 1e-9 || n < 4.0 {
        return Err(Error::domain(
            INV,
            format!("step {step} must divide 1 into at least 4 intervals"),
        ));
    }
    Ok(n as usize)
}

/// All points of the probability 3-simplex with coordinates in multiples of `1/n`.
pub fn simplex_lattice(n: usize) -> Vec<PauliMixture> {
    let inv = 1.0 / n as f64;
    let mut out = Vec::new();
    for a in 0..=n {
        for b in 0..=n - a {
            for c in 0..=n - a - b {
                let d = n - a - b - c;
                out.push(PauliMixture {
                    q00: a as f64 * inv,
                    q01: b as f64 * inv,
                    q10: c as f64 * inv,
                    q11: d as f64 * inv,
                });
            }
        }
    }
    out
}

/// Extremes and centre of `1/2 ± epsilon`.
fn ball_points(epsilon: f64) -> Vec<f64> {
    if epsilon == 0.0 {
        vec![0.5]
    } else {
        vec![0.5 - epsilon, 0.5, 0.5 + epsilon]
    }
}

/// Certifies both analytic phase-error bounds on a lattice of attacks.
///
/// Every error rate is affine in each conditional probability, so checking the
/// ends and centre of the ε-interval covers it.
pub fn verify_bounds(flaw: &RandomnessFlaw, step: f64) -> Result<Certification> {
    let n = grid_divisions(step)?;
    let mut points = Vec::new();
    for mixture in simplex_lattice(n) {
        for &p_bit0 in &ball_points(flaw.epsilon0()) {
            for &p_basis0 in &ball_points(flaw.epsilon1()) {
                points.push(EveStrategy {
                    mixture,
                    p_bit0,
                    p_basis0,
                });
            }
        }
    }

    let eps1 = flaw.epsilon1();
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(index, strategy)| -> Result<(CertificationRow, f64)> {
            let exact = exact_errors(strategy)?;
            let algebra = closed_form_errors(strategy);
            let gap = (exact.bit - algebra.bit)
                .abs()
                .max((exact.phase - algebra.phase).abs());
            let m = strategy.mixture;
            Ok((
                CertificationRow {
                    index,
                    strategy: *strategy,
                    exact,
                    original_bound: phase_bound_original(exact.bit, flaw)?,
                    tight_bound: phase_bound_tight(exact.bit, flaw)?,
                    bit_error_floor: (0.5 - eps1) * (m.q01 + m.q10) + m.q11,
                },
                gap,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cert = Certification {
        flaw: *flaw,
        step,
        checked: rows.len(),
        tight_looser: 0,
        max_closed_form_gap: 0.0,
        counterexamples: Vec::new(),
    };
    for (row, gap) in rows {
        cert.max_closed_form_gap = cert.max_closed_form_gap.max(gap);
        if row.tight_bound > row.original_bound + CERT_TOLERANCE {
            cert.tight_looser += 1;
        }
        if row.is_counterexample() {
            cert.counterexamples.push(row);
        }
    }
    Ok(cert)
}

/// Hidden-variable distributions `p(λ₀ = i)`, `p(λ₁ = j)` with the conditional
/// bit and basis probabilities attached to each value.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenVariableModel {
    /// `(p(λ₀ = i), p(x₀ = 0 | λ₀ = i))`
    pub bit: Vec<(f64, f64)>,
    /// `(p(λ₁ = j), p(x₁ = 0 | λ₁ = j))`
    pub basis: Vec<(f64, f64)>,
}

impl HiddenVariableModel {
    pub fn validate(&self) -> Result<()> {
        const INV: &str = "HiddenVariableModel invariant (weights sum to 1)";
        for (label, values) in [("λ0", &self.bit), ("λ1", &self.basis)] {
            if values.is_empty() {
                return Err(Error::domain(INV, format!("{label} has no values")));
            }
            for &(w, cond) in values.iter() {
                check_probability(INV, "weight", w)?;
                check_probability(INV, "conditional", cond)?;
            }
            let sum: f64 = values.iter().map(|(w, _)| w).sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::domain(INV, format!("{label} weights sum to {sum}")));
            }
        }
        Ok(())
    }

    /// Whether every conditional lies inside the flaw's ε-ball.
    pub fn within(&self, flaw: &RandomnessFlaw) -> bool {
        let tol = 1e-12;
        self.bit
            .iter()
            .all(|&(_, c)| (c - 0.5).abs() <= flaw.epsilon0() + tol)
            && self
                .basis
                .iter()
                .all(|&(_, c)| (c - 0.5).abs() <= flaw.epsilon1() + tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JensenReport {
    /// `Σ p_i p_j (1 − H(e_phase^ij) − H(e_bit^ij))`
    pub averaged_rate: f64,
    /// `1 − H(Σ p_i p_j e_phase^ij) − H(Σ p_i p_j e_bit^ij)`
    pub aggregated_rate: f64,
    pub mean_bit_error: f64,
    pub mean_phase_error: f64,
}

impl JensenReport {
    /// The aggregated formula never exceeds the per-strategy average.
    pub fn is_conservative(&self) -> bool {
        self.aggregated_rate <= self.averaged_rate + CERT_TOLERANCE
    }

    pub fn gap(&self) -> f64 {
        self.averaged_rate - self.aggregated_rate
    }
}

/// Compares the per-(i, j) averaged rate with the rate computed from the
/// aggregated errors. `mixtures[i][j]` is Eve's attack for `λ₀ = i, λ₁ = j`.
pub fn jensen_check(
    model: &HiddenVariableModel,
    mixtures: &[Vec<PauliMixture>],
) -> Result<JensenReport> {
    model.validate()?;
    if mixtures.len() != model.bit.len() || mixtures.iter().any(|r| r.len() != model.basis.len())
    {
        return Err(Error::domain(
            "jensen_check precondition (one strategy per (i, j))",
            format!(
                "expected {}×{} strategies",
                model.bit.len(),
                model.basis.len()
            ),
        ));
    }
    let mut averaged_rate = 0.0;
    let mut mean_bit_error = 0.0;
    let mut mean_phase_error = 0.0;
    for (&(wi, p_bit0), row) in model.bit.iter().zip(mixtures) {
        for (&(wj, p_basis0), mixture) in model.basis.iter().zip(row) {
            let strategy = EveStrategy::new(*mixture, p_bit0, p_basis0)?;
            let e = exact_errors(&strategy)?;
            let w = wi * wj;
            averaged_rate += w * (1.0 - binary_entropy(e.phase)? - binary_entropy(e.bit)?);
            mean_bit_error += w * e.bit;
            mean_phase_error += w * e.phase;
        }
    }
    let mean_bit_error = mean_bit_error.clamp(0.0, 1.0);
    let mean_phase_error = mean_phase_error.clamp(0.0, 1.0);
    Ok(JensenReport {
        averaged_rate,
        aggregated_rate: 1.0
            - binary_entropy(mean_phase_error)?
            - binary_entropy(mean_bit_error)?,
        mean_bit_error,
        mean_phase_error,
    })
}
