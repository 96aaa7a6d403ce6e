//! Bandgap regime: finite-range dipole-dipole exchange `(Γ/2ξ) e^{−|z_i − z_j|/ξ}`
//! between the source and an atom-resolved target ensemble.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexVector, OperatorMatrix, Propagator, C64};
use crate::optimize::golden_section_max;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandgapParams {
    /// Target atoms.
    pub n_atoms: u32,
    pub m: u32,
    /// Interaction range in lattice spacings.
    pub xi: f64,
    pub gamma_g: f64,
    pub gamma_s: f64,
    pub gamma_star: f64,
    pub source_site: i64,
    pub target_sites: Vec<i64>,
    pub detector_sites: Vec<i64>,
}

impl BandgapParams {
    /// Source at site 0, target on sites `1..=N`, detector on `N+1..=2N`.
    pub fn new(n_atoms: u32, m: u32, xi: f64) -> Self {
        let n = n_atoms as i64;
        Self {
            n_atoms,
            m,
            xi,
            gamma_g: 1.0,
            gamma_s: 1.0 / (m.max(1) as f64).sqrt(),
            gamma_star: 0.0,
            source_site: 0,
            target_sites: (1..=n).collect(),
            detector_sites: (n + 1..=2 * n).collect(),
        }
    }

    pub fn with_purcell(mut self, p1d: f64) -> Self {
        self.gamma_star = if p1d.is_infinite() { 0.0 } else { self.gamma_g / p1d };
        self
    }

    /// `N_m = N − m + 1`: target atoms still in `|g⟩` before the step.
    pub fn n_m(&self) -> f64 {
        self.n_atoms as f64 - self.m as f64 + 1.0
    }

    /// `G = √N Γg/(2ξ)`.
    pub fn coupling(&self) -> f64 {
        (self.n_atoms as f64).sqrt() * self.gamma_g / (2.0 * self.xi)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.xi > 0.0) || !self.xi.is_finite() {
            return Err(Error::domain(format!("xi must be positive and finite, got {}", self.xi)));
        }
        if self.n_atoms == 0 || self.m == 0 || self.m > self.n_atoms {
            return Err(Error::domain(format!("need 1 <= m <= N (N = {}, m = {})", self.n_atoms, self.m)));
        }
        for (name, v) in [("gamma_g", self.gamma_g), ("gamma_s", self.gamma_s), ("gamma_star", self.gamma_star)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.target_sites.len() != self.n_atoms as usize {
            return Err(Error::domain("one target site per target atom required"));
        }
        let mut all: Vec<i64> = std::iter::once(self.source_site)
            .chain(self.target_sites.iter().copied())
            .chain(self.detector_sites.iter().copied())
            .collect();
        all.sort_unstable();
        if all.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::domain("atom positions must be distinct"));
        }
        Ok(())
    }

    fn exchange(&self, a: i64, b: i64) -> f64 {
        self.gamma_g / (2.0 * self.xi) * (-((a - b).abs() as f64) / self.xi).exp()
    }
}

/// Single-excitation Hamiltonian on `{source e, target atom n e}` (atom-resolved,
/// uncompensated), or with `single_excitation = false` the compensated ideal-limit
/// chain `{source e, symmetric target e, detector e}`.
pub fn build_h_bandgap(p: &BandgapParams, single_excitation: bool) -> Result<OperatorMatrix> {
    p.validate()?;
    let decay = C64::new(0.0, -p.gamma_star / 2.0);
    if !single_excitation {
        let a = p.n_m().sqrt() * p.gamma_g / (2.0 * p.xi);
        let b = (p.m as f64 * p.detector_sites.len() as f64).sqrt() * p.gamma_s / (2.0 * p.xi);
        return Ok(OperatorMatrix::from_fn(3, |i, j| match (i, j) {
            (0, 1) | (1, 0) => C64::new(a, 0.0),
            (1, 2) | (2, 1) => C64::new(b, 0.0),
            _ if i == j => decay,
            _ => C64::new(0.0, 0.0),
        }));
    }
    let sites: Vec<i64> = std::iter::once(p.source_site).chain(p.target_sites.iter().copied()).collect();
    Ok(OperatorMatrix::from_fn(sites.len(), |i, j| {
        let v = C64::new(p.exchange(sites[i], sites[j]), 0.0);
        if i == j {
            v + decay
        } else {
            v
        }
    }))
}

/// Collective Lamb shifts of the ideal limit (`ξ ≫ N`), to be subtracted from the diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LambShifts {
    pub source: f64,
    /// `N_m Γg/(2ξ)` on the symmetric target mode.
    pub target: f64,
    pub detector: f64,
}

pub fn lamb_shift_compensation(p: &BandgapParams) -> LambShifts {
    LambShifts {
        source: p.gamma_g / (2.0 * p.xi),
        target: p.n_m() * p.gamma_g / (2.0 * p.xi),
        detector: p.detector_sites.len() as f64 * p.gamma_s / (2.0 * p.xi),
    }
}

/// Finite-range shifts: the source self term, and the mean over target atoms of
/// the intra-target row sums.
pub fn finite_range_shifts(p: &BandgapParams) -> (f64, f64) {
    let n = p.target_sites.len() as f64;
    let total: f64 = p
        .target_sites
        .iter()
        .map(|&a| p.target_sites.iter().map(|&b| p.exchange(a, b)).sum::<f64>())
        .sum();
    (p.exchange(p.source_site, p.source_site), total / n)
}

/// Atom-resolved single-excitation Hamiltonian with the finite-range shifts removed.
pub fn compensated_hamiltonian(p: &BandgapParams) -> Result<OperatorMatrix> {
    let mut h = build_h_bandgap(p, true)?;
    let (src, tgt) = finite_range_shifts(p);
    for i in 0..h.dim() {
        let shift = if i == 0 { src } else { tgt };
        h.set(i, i, h.get(i, i) - shift);
    }
    Ok(h)
}

/// `exp[−πξ/(√N_m P₁d)]`.
pub fn ideal_step_probability(p: &BandgapParams) -> f64 {
    if p.gamma_star == 0.0 {
        return 1.0;
    }
    let p1d = p.gamma_g / p.gamma_star;
    (-PI * p.xi / (p.n_m().sqrt() * p1d)).exp()
}

/// Complete-transfer time of the ideal three-state chain, `π/√(a² + b²)`.
pub fn ideal_chain_time(p: &BandgapParams) -> Result<f64> {
    let h = build_h_bandgap(p, false)?;
    Ok(PI / (h.get(0, 1).norm_sqr() + h.get(1, 2).norm_sqr()).sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransferRecord {
    pub times: Vec<f64>,
    pub source_population: Vec<f64>,
    pub target_population: Vec<f64>,
    pub optimal_time: f64,
    /// Target population at the optimum.
    pub p_transfer: f64,
    pub source_population_at_optimum: f64,
    /// `|c_n|²` at the optimum.
    pub intensities: Vec<f64>,
    /// `arg c_n` at the optimum.
    pub phases: Vec<f64>,
    /// `1 − |⟨sym|c⟩|²/‖c‖²`.
    pub infidelity: f64,
}

/// Scan points per `π/G`.
const SCAN_DENSITY: usize = 400;
/// Keep every `RECORD_STRIDE`-th scan point in the stored series.
const RECORD_STRIDE: usize = 10;

fn target_population(v: &ComplexVector) -> f64 {
    v.iter().skip(1).map(|a| a.norm_sqr()).sum()
}

/// `1 − |⟨sym|c⟩|²/‖c‖²` for target amplitudes `c`.
pub fn symmetric_infidelity(target: &[C64]) -> f64 {
    let norm: f64 = target.iter().map(|a| a.norm_sqr()).sum();
    let proj: C64 = target.iter().sum();
    1.0 - proj.norm_sqr() / (target.len() as f64 * norm)
}

pub fn run_transfer(p: &BandgapParams) -> Result<TransferRecord> {
    let h = compensated_hamiltonian(p)?;
    let prop = Propagator::new(&h)?;
    let psi0 = ComplexVector::unit(h.dim(), 0);
    let unit = PI / p.coupling();
    let window = 10.0 * unit;
    let steps = 10 * SCAN_DENSITY;
    let dt = window / steps as f64;

    let mut times = Vec::new();
    let mut src = Vec::new();
    let mut tgt = Vec::new();
    let mut found = None;
    let mut prev = (0.0, f64::NEG_INFINITY);
    let mut rising = false;
    for i in 0..=steps {
        let t = i as f64 * dt;
        let v = prop.apply(t, &psi0)?;
        let pop = target_population(&v);
        if i % RECORD_STRIDE == 0 {
            times.push(t);
            src.push(v[0].norm_sqr());
            tgt.push(pop);
        }
        if found.is_none() {
            if pop > prev.1 {
                rising = true;
            } else if rising && pop < prev.1 {
                found = Some(prev.0);
            }
        }
        prev = (t, pop);
    }
    let coarse = found.ok_or(Error::NoTransferMaximum { window })?;
    let t_opt = golden_section_max(
        |t| prop.apply(t, &psi0).map(|v| target_population(&v)),
        (coarse - dt).max(0.0),
        coarse + dt,
        1e-6 * unit,
    )?;
    let v = prop.apply(t_opt, &psi0)?;
    let target: Vec<C64> = v.iter().skip(1).copied().collect();
    Ok(TransferRecord {
        times,
        source_population: src,
        target_population: tgt,
        optimal_time: t_opt,
        p_transfer: target_population(&v),
        source_population_at_optimum: v[0].norm_sqr(),
        intensities: target.iter().map(|a| a.norm_sqr()).collect(),
        phases: target.iter().map(|a| a.arg()).collect(),
        infidelity: symmetric_infidelity(&target),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_site_case() {
        let p = BandgapParams::new(1, 1, 3.0);
        let h = build_h_bandgap(&p, true).unwrap();
        assert_eq!(h.dim(), 2);
        assert!((h.get(0, 1).re - (-1.0f64 / 3.0).exp() / 6.0).abs() < 1e-15);
    }

    #[test]
    fn long_range_symmetric_coupling() {
        let p = BandgapParams::new(50, 1, 1e9);
        let h = build_h_bandgap(&p, true).unwrap();
        let sym: C64 = (1..=50).map(|n| h.get(0, n)).sum::<C64>() / (50f64).sqrt();
        assert!((sym.re - p.coupling()).abs() < 1e-6 * p.coupling());
    }

    #[test]
    fn lamb_shift_values() {
        let p = BandgapParams::new(100, 1, 100.0);
        assert!((lamb_shift_compensation(&p).target - 0.5).abs() < 1e-15);
        let q = BandgapParams::new(7, 7, 20.0);
        assert!((lamb_shift_compensation(&q).target - 1.0 / 40.0).abs() < 1e-15);
        let chain = build_h_bandgap(&p, false).unwrap();
        assert_eq!(chain.get(1, 1).re, 0.0);
    }

    #[test]
    fn ideal_probability() {
        let p = BandgapParams::new(100, 1, 100.0).with_purcell(10.0);
        assert!((ideal_step_probability(&p) - (-PI).exp()).abs() < 1e-15);
        assert_eq!(ideal_step_probability(&BandgapParams::new(100, 1, 100.0)), 1.0);
        let base = BandgapParams::new(100, 1, 100.0).with_purcell(10.0);
        let wider = BandgapParams::new(100, 1, 200.0).with_purcell(10.0);
        let bigger = BandgapParams::new(200, 1, 100.0).with_purcell(10.0);
        assert!(ideal_step_probability(&wider) < ideal_step_probability(&base));
        assert!(ideal_step_probability(&bigger) > ideal_step_probability(&base));
    }

    #[test]
    fn invalid_geometry_rejected() {
        let mut p = BandgapParams::new(3, 1, 10.0);
        p.target_sites[1] = 0;
        assert!(build_h_bandgap(&p, true).is_err());
        assert!(build_h_bandgap(&BandgapParams::new(3, 1, 0.0), true).is_err());
    }

    #[test]
    fn ideal_limit_transfer_time() {
        let p = BandgapParams::new(20, 1, 1e6);
        let r = run_transfer(&p).unwrap();
        assert!(r.infidelity < 1e-8);
        assert!((r.optimal_time * p.coupling() / PI - 0.5).abs() < 1e-4);
        assert!(r.p_transfer > 1.0 - 1e-8);
    }
}
