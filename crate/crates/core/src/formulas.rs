//! Closed-form success probabilities, infidelity scalings, repetition counts and
//! the protocol comparison table.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::bandgap::{ideal_step_probability, BandgapParams};

fn inv(p1d: f64) -> f64 {
    1.0 / p1d
}

/// π-pulse step probability `exp[−(√2π/(8√(2N)))(3 + 2√m + 8/P₁d)]`.
pub fn p_double_mirrors(n_atoms: u32, m: u32, p1d: f64) -> f64 {
    let pre = 2f64.sqrt() * PI / (8.0 * (2.0 * n_atoms as f64).sqrt());
    (-pre * (3.0 + 2.0 * (m as f64).sqrt() + 8.0 * inv(p1d))).exp()
}

/// Fixed-ratio step probability
/// `4m/(m+1)² · exp[−2π/√(2N(m+1)) · ((3m²+m+1)/(2(m+1)²) + 1/P₁d)]`.
pub fn p_fixed_ratio(n_atoms: u32, m: u32, p1d: f64) -> f64 {
    let mf = m as f64;
    let m1 = mf + 1.0;
    let pre = 2.0 * PI / (2.0 * n_atoms as f64 * m1).sqrt();
    4.0 * mf / (m1 * m1) * (-pre * ((3.0 * mf * mf + mf + 1.0) / (2.0 * m1 * m1) + inv(p1d))).exp()
}

/// The two large-`N` plateaus printed for the fixed-ratio variant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FixedRatioLimits {
    /// `4m/(m+1)²`.
    pub m_plus_1: f64,
    /// `4m/(m+2)²`.
    pub m_plus_2: f64,
}

pub fn limit_fixed_ratio(m: u32) -> FixedRatioLimits {
    let mf = m as f64;
    FixedRatioLimits {
        m_plus_1: 4.0 * mf / ((mf + 1.0) * (mf + 1.0)),
        m_plus_2: 4.0 * mf / ((mf + 2.0) * (mf + 2.0)),
    }
}

/// Continuous-drive step probability `exp[−(√6π/√(2N))((10 + 9√m)/64 + 29/(64 P₁d))]`.
pub fn p_continuous_drive(n_atoms: u32, m: u32, p1d: f64) -> f64 {
    let pre = 6f64.sqrt() * PI / (2.0 * n_atoms as f64).sqrt();
    (-pre * ((10.0 + 9.0 * (m as f64).sqrt()) / 64.0 + 29.0 * inv(p1d) / 64.0)).exp()
}

/// Bandgap step probability `exp[−πξ/(√N_m P₁d)]`, `N_m = N − m + 1`.
pub fn p_bandgap(n_atoms: u32, m: u32, xi: f64, p1d: f64) -> f64 {
    let params = BandgapParams::new(n_atoms, m, xi).with_purcell(p1d);
    ideal_step_probability(&params)
}

/// Step probability with previous excitations stored in another level.
pub fn p_fresh_level(n_atoms: u32, p1d: f64) -> f64 {
    let pre = 2f64.sqrt() * PI / (8.0 * (2.0 * n_atoms as f64).sqrt());
    (-pre * (5.0 + 8.0 * inv(p1d))).exp()
}

/// Fitted infidelity `0.061 m(m−1)/N²`.
pub fn infidelity_fit(n_atoms: u32, m: u32) -> f64 {
    let mf = m as f64;
    0.061 * mf * (mf - 1.0) / (n_atoms as f64).powi(2)
}

/// Expected repetitions `Π_k 1/p_k`.
pub fn repetitions(p_list: &[f64]) -> f64 {
    p_list.iter().map(|p| 1.0 / p).product()
}

/// Asymptotic repetitions `e^{m√(m/N)}`.
pub fn r_m_asymptotic(n_atoms: u32, m: u32) -> f64 {
    let mf = m as f64;
    (mf * (mf / n_atoms as f64).sqrt()).exp()
}

/// Rates after adiabatic elimination through off-resonant `Ω_η/Δ_η` legs.
///
/// Returns `Γ_η |Ω_η/(2Δ_η)|²` per channel and `Γ* Σ_η |Ω_η/(2Δ_η)|²`.
pub fn effective_rates_m_scheme(gamma_1d: &[f64], gamma_star: f64, omega: &[f64], delta: &[f64]) -> (Vec<f64>, f64) {
    let factors: Vec<f64> = omega
        .iter()
        .zip(delta)
        .map(|(o, d)| {
            let r = o / (2.0 * d);
            r * r
        })
        .collect();
    let rates = gamma_1d.iter().zip(&factors).map(|(g, f)| g * f).collect();
    (rates, gamma_star * factors.iter().sum::<f64>())
}

/// Error from repumping with intermediate storage, `1/(P₁d N^{3/2})`.
pub fn repumping_error_bound(n_atoms: u32, p1d: f64) -> f64 {
    inv(p1d) * (n_atoms as f64).powf(-1.5)
}

/// Extra infidelity of the single-guided-mode variant, `N (ΔΩT)² + γ_c*/(√N Γg)`.
pub fn single_mode_infidelity_terms(n_atoms: u32, pulse_area_error: f64, gamma_c_star: f64, gamma_g: f64) -> f64 {
    let n = n_atoms as f64;
    n * pulse_area_error * pulse_area_error + gamma_c_star / (n.sqrt() * gamma_g)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Protocol {
    Deterministic,
    ProbabilisticI,
    ProbabilisticII,
    DoubleMirrors,
    DipoleDipole,
}

impl Protocol {
    pub const ALL: [Protocol; 5] = [
        Protocol::Deterministic,
        Protocol::ProbabilisticI,
        Protocol::ProbabilisticII,
        Protocol::DoubleMirrors,
        Protocol::DipoleDipole,
    ];

    pub fn requirement(&self) -> &'static str {
        match self {
            Protocol::Deterministic | Protocol::ProbabilisticII => "P1d >> 1",
            Protocol::ProbabilisticI => "x << 1",
            Protocol::DoubleMirrors => "N >> 1",
            Protocol::DipoleDipole => "xi >> N",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonInputs {
    pub m: u32,
    pub n_atoms: u32,
    pub p1d: f64,
    pub xi: f64,
    /// Detector efficiency.
    pub eta: f64,
    /// Drive parameter `ΩT√N`.
    pub x: f64,
}

/// Thresholds turning "≫"/"≪" requirements into yes/no gates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub min_purcell: f64,
    pub max_x: f64,
    pub min_atoms: f64,
    /// Required `ξ/N`.
    pub min_xi_over_n: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { min_purcell: 10.0, max_x: 0.1, min_atoms: 10.0, min_xi_over_n: 5.0 }
    }
}

/// One row of the comparison. The scalings are orders of magnitude, constants dropped.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonEntry {
    pub protocol: Protocol,
    pub error_scaling: f64,
    pub p_m: f64,
    pub requirement_satisfied: bool,
    pub inputs: ComparisonInputs,
}

pub fn table1_compare(inputs: &ComparisonInputs, thresholds: &Thresholds) -> Vec<ComparisonEntry> {
    let ComparisonInputs { m, n_atoms, p1d, xi, eta, x } = *inputs;
    let mf = m as f64;
    let n = n_atoms as f64;
    let n_m = (n_atoms as f64 - mf + 1.0).max(1.0);
    Protocol::ALL
        .iter()
        .map(|&protocol| {
            let (error_scaling, p_m, ok) = match protocol {
                Protocol::Deterministic => (mf / p1d.sqrt(), 1.0, p1d > thresholds.min_purcell),
                Protocol::ProbabilisticI => (mf * (1.0 - eta) * x * x, (eta * x * x).powi(m as i32), x < thresholds.max_x),
                Protocol::ProbabilisticII => (0.0, (-mf / p1d.sqrt()).exp(), p1d > thresholds.min_purcell),
                Protocol::DoubleMirrors => (
                    mf * mf / (n * n),
                    (-mf * (mf / n).sqrt() * (1.0 + inv(p1d))).exp(),
                    n > thresholds.min_atoms,
                ),
                Protocol::DipoleDipole => (
                    xi.powi(-2),
                    (-xi / (n_m.sqrt() * p1d)).exp(),
                    xi > thresholds.min_xi_over_n * n,
                ),
            };
            ComparisonEntry { protocol, error_scaling, p_m, requirement_satisfied: ok, inputs: *inputs }
        })
        .collect()
}
