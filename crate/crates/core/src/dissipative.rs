//! Double-mirror model in the dissipative regime: coherent Hamiltonian, jump
//! channels and the no-jump generator `H_nh = H − (i/2) Σ_k γ_k O_k†O_k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::basis::{BasisSet, CollectiveOp, DetectorOp, Level, OperatorExpr};
use crate::error::{Error, Result};
use crate::linalg::{OperatorMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DissipativeParams {
    /// Atoms per mirror ensemble.
    pub n_atoms: u32,
    /// Excitation sector of the step (target ends with `m` excitations).
    pub m: u32,
    pub gamma_g: f64,
    pub gamma_s: f64,
    pub gamma_star: f64,
    /// Continuous drive on the source `s–e` and detector `g–e` transitions; 0 for the π-pulse protocol.
    pub drive_omega: f64,
    /// Keep the collective guided-mode jump channels.
    pub collective_jumps: bool,
}

impl DissipativeParams {
    /// `Γg = 1`, `Γs = Γg/√m`, no free-space decay, no drive.
    pub fn new(n_atoms: u32, m: u32) -> Self {
        Self {
            n_atoms,
            m,
            gamma_g: 1.0,
            gamma_s: 1.0 / (m.max(1) as f64).sqrt(),
            gamma_star: 0.0,
            drive_omega: 0.0,
            collective_jumps: true,
        }
    }

    /// Sets `Γ* = Γg/P₁d`; an infinite Purcell factor switches free-space decay off.
    pub fn with_purcell(mut self, p1d: f64) -> Self {
        self.gamma_star = if p1d.is_infinite() { 0.0 } else { self.gamma_g / p1d };
        self
    }

    pub fn purcell(&self) -> f64 {
        if self.gamma_star == 0.0 {
            f64::INFINITY
        } else {
            self.gamma_g / self.gamma_star
        }
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("gamma_g", self.gamma_g),
            ("gamma_s", self.gamma_s),
            ("gamma_star", self.gamma_star),
            ("drive_omega", self.drive_omega),
        ];
        for (name, v) in rates {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::domain(format!("{name} must be finite and non-negative, got {v}")));
            }
        }
        if self.gamma_g <= 0.0 {
            return Err(Error::domain("gamma_g must be positive"));
        }
        if self.n_atoms == 0 || self.m == 0 {
            return Err(Error::domain("N and m must be at least 1"));
        }
        if self.m > self.n_atoms {
            return Err(Error::domain(format!("m = {} exceeds N = {}", self.m, self.n_atoms)));
        }
        Ok(())
    }
}

fn check_basis(p: &DissipativeParams, basis: &BasisSet) -> Result<()> {
    p.validate()?;
    if basis.n_atoms() != p.n_atoms || basis.m() != p.m {
        return Err(Error::domain(format!(
            "basis built for (N={}, m={}) but parameters have (N={}, m={})",
            basis.n_atoms(),
            basis.m(),
            p.n_atoms,
            p.m
        )));
    }
    if p.drive_omega > 0.0 && !basis.with_drive() {
        return Err(Error::domain("drive requested on a basis built without drive states"));
    }
    Ok(())
}

fn op(o: CollectiveOp) -> OperatorExpr {
    OperatorExpr::op(o)
}

/// Coherent Hamiltonian as an operator expression.
pub fn coherent_expr(p: &DissipativeParams) -> OperatorExpr {
    let sigma_ge = CollectiveOp::source(Level::G, Level::E);
    let mut h = OperatorExpr::product(&[sigma_ge, CollectiveOp::S_EG_PLUS_T])
        .plus(OperatorExpr::product(&[sigma_ge.adjoint(), CollectiveOp::S_EG_PLUS_T.adjoint()]))
        .scaled(p.gamma_g / 2.0);
    let es_d = CollectiveOp::Detector(DetectorOp::EsMinus);
    h = h.plus(
        OperatorExpr::product(&[es_d, CollectiveOp::S_SE_MINUS_T])
            .plus(OperatorExpr::product(&[es_d.adjoint(), CollectiveOp::S_SE_MINUS_T.adjoint()]))
            .scaled(p.gamma_s / 2.0),
    );
    if p.drive_omega > 0.0 {
        let sigma_es = CollectiveOp::source(Level::E, Level::S);
        let ge_d = CollectiveOp::Detector(DetectorOp::GePlus);
        h = h.plus(
            op(sigma_es)
                .plus(op(sigma_es.adjoint()))
                .plus(op(ge_d))
                .plus(op(ge_d.adjoint()))
                .scaled(p.drive_omega / 2.0),
        );
    }
    h
}

pub fn build_h_coherent(p: &DissipativeParams, basis: &BasisSet) -> Result<OperatorMatrix> {
    check_basis(p, basis)?;
    Ok(basis.project_expr(&coherent_expr(p)).matrix)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// `σ_ge^(s)` into the guided mode at `Γg`.
    SourceGuided,
    /// `S_{ge,−}^(t)` at `Γg`.
    TargetGuidedG,
    /// `S_{se,−}^(t)` at `Γs`.
    TargetGuidedS,
    /// Independent free-space emission `Γ* Σ_j σ_ge^j`, all atoms.
    FreeSpace,
}

impl ChannelKind {
    pub fn name(&self) -> &'static str {
        match self {
            ChannelKind::SourceGuided => "source_guided",
            ChannelKind::TargetGuidedG => "target_guided_g",
            ChannelKind::TargetGuidedS => "target_guided_s",
            ChannelKind::FreeSpace => "free_space",
        }
    }
}

#[derive(Clone, Debug)]
pub struct JumpChannel {
    pub kind: ChannelKind,
    pub rate: f64,
    /// The jump operator, or `None` for the free-space channel where only
    /// `Σ_j σ_eg^j σ_ge^j = Σ_j σ_ee^j` enters.
    pub operator: Option<OperatorExpr>,
}

impl JumpChannel {
    /// Matrix of `O†O` (summed over atoms for the free-space channel) on the basis.
    pub fn decay_matrix(&self, basis: &BasisSet) -> OperatorMatrix {
        match &self.operator {
            Some(o) => basis.gram(o),
            None => basis.project_expr(&OperatorExpr::op(CollectiveOp::TotalExcited)).matrix,
        }
    }

    pub fn weighted_decay_matrix(&self, basis: &BasisSet) -> OperatorMatrix {
        &self.decay_matrix(basis) * C64::new(self.rate, 0.0)
    }
}

/// Jump channels with standard Lindblad rates. The detector's collective
/// `S_{se,+}^(d)` channel is omitted: it annihilates every tracked detector state.
pub fn build_jump_operators(p: &DissipativeParams) -> Vec<JumpChannel> {
    let mut out = Vec::new();
    if p.collective_jumps {
        out.push(JumpChannel {
            kind: ChannelKind::SourceGuided,
            rate: p.gamma_g,
            operator: Some(op(CollectiveOp::source(Level::G, Level::E))),
        });
        out.push(JumpChannel {
            kind: ChannelKind::TargetGuidedG,
            rate: p.gamma_g,
            operator: Some(op(CollectiveOp::S_GE_MINUS_T)),
        });
        out.push(JumpChannel {
            kind: ChannelKind::TargetGuidedS,
            rate: p.gamma_s,
            operator: Some(op(CollectiveOp::S_SE_MINUS_T)),
        });
    }
    if p.gamma_star > 0.0 {
        out.push(JumpChannel { kind: ChannelKind::FreeSpace, rate: p.gamma_star, operator: None });
    }
    out
}

pub fn build_h_nh(p: &DissipativeParams, basis: &BasisSet) -> Result<OperatorMatrix> {
    let mut h = build_h_coherent(p, basis)?;
    for ch in build_jump_operators(p) {
        let d = ch.weighted_decay_matrix(basis);
        h = &h - &(&d * C64::new(0.0, 0.5));
    }
    if !h.is_finite() {
        return Err(Error::NonFinite("H_nh"));
    }
    Ok(h)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub gamma_s: f64,
    pub time: f64,
    /// Drive amplitude, present for the continuous-drive protocol.
    pub omega: Option<f64>,
}

/// Optimal `Γs` and step time.
///
/// π-pulse: `Γs = Γg/√m`, `T = √2π/(√(2N)Γg)`. With drive (`drive_omega > 0`):
/// `Ω = √(2/3)√(2N)Γg` and `T = π√6/(√(2N)Γg) = 2π/Ω`.
pub fn optimal_parameters(p: &DissipativeParams) -> Schedule {
    let root = (2.0 * p.n_atoms as f64).sqrt() * p.gamma_g;
    let gamma_s = p.gamma_g / (p.m as f64).sqrt();
    if p.drive_omega > 0.0 {
        let omega = (2.0f64 / 3.0).sqrt() * root;
        Schedule { gamma_s, time: PI * 6f64.sqrt() / root, omega: Some(omega) }
    } else {
        Schedule { gamma_s, time: 2f64.sqrt() * PI / root, omega: None }
    }
}

/// Step time of the fixed-ratio variant, `T = 2π/(√(2N(m+1)) Γs)`.
pub fn fixed_ratio_time(p: &DissipativeParams) -> f64 {
    2.0 * PI / ((2.0 * p.n_atoms as f64 * (p.m as f64 + 1.0)).sqrt() * p.gamma_s)
}
