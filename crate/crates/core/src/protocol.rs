//! Heralded single-excitation step and the accumulation loop.
//!
//! One step: π-pulse on the source (`s → e`), no-jump evolution under `H_nh`,
//! de-excitation of the detector (`S_{ge,+}^(d)`), projection onto the heralded
//! branch. With the continuous drive the pulses are replaced by the drive and the
//! heralded branch is read off directly.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::basis::{
    apply_op, build_basis, goal_state, target_label, BasisSet, CollectiveOp, DetectorState, HpMode, LabelState, Level,
};
use crate::dissipative::{
    build_h_nh, build_jump_operators, fixed_ratio_time, optimal_parameters, ChannelKind, DissipativeParams,
};
use crate::error::{Error, Result};
use crate::formulas::repetitions;
use crate::linalg::{overlap, ComplexVector, OperatorMatrix, Propagator};
use crate::optimize::golden_section_max;

pub const HERALD_FLOOR: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    PiPulse,
    FixedRatio,
    ContinuousDrive,
    FreshLevel,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::PiPulse, Variant::FixedRatio, Variant::ContinuousDrive, Variant::FreshLevel];

    pub fn name(&self) -> &'static str {
        match self {
            Variant::PiPulse => "pi-pulse",
            Variant::FixedRatio => "fixed-ratio",
            Variant::ContinuousDrive => "continuous-drive",
            Variant::FreshLevel => "fresh-level",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::domain(format!("unknown variant '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ChannelLoss {
    pub channel: ChannelKind,
    pub probability: f64,
}

/// Where the initial norm went.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NormBudget {
    /// Probability of a jump in each channel during the step.
    pub channel_losses: Vec<ChannelLoss>,
    /// No-jump weight that is not heralded.
    pub unheralded: f64,
    /// Input weight outside the step basis (non-zero only for approximate bases).
    pub outside_basis: f64,
}

impl NormBudget {
    pub fn total(&self, p_success: f64) -> f64 {
        p_success + self.channel_losses.iter().map(|c| c.probability).sum::<f64>() + self.unheralded + self.outside_basis
    }
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub p_success: f64,
    /// Normalized target state on `|m−i, 0; i, 0⟩`, `i = 0..=m`.
    pub post_state: ComplexVector,
    /// `|⟨ψ_m|post⟩|²`.
    pub overlap_goal: f64,
    pub time: f64,
    pub diagnostics: NormBudget,
}

/// Basis, generator and decay weights of one step, reusable across times and inputs.
#[derive(Clone, Debug)]
pub struct StepModel {
    params: DissipativeParams,
    basis: BasisSet,
    h_nh: OperatorMatrix,
    decay: Vec<(ChannelKind, OperatorMatrix)>,
    propagator: Propagator,
}

impl StepModel {
    pub fn new(params: DissipativeParams, mode: HpMode) -> Result<Self> {
        params.validate()?;
        let basis = build_basis(params.n_atoms, params.m, mode, params.drive_omega > 0.0)?;
        let h_nh = build_h_nh(&params, &basis)?;
        let decay = build_jump_operators(&params)
            .iter()
            .map(|ch| (ch.kind, ch.weighted_decay_matrix(&basis)))
            .collect();
        let propagator = Propagator::new(&h_nh)?;
        Ok(Self { params, basis, h_nh, decay, propagator })
    }

    pub fn params(&self) -> &DissipativeParams {
        &self.params
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn h_nh(&self) -> &OperatorMatrix {
        &self.h_nh
    }

    fn driven(&self) -> bool {
        self.params.drive_omega > 0.0
    }

    /// Basis coordinates right after initialization, and the input norm² outside the basis.
    pub fn initial_state(&self, input: &ComplexVector) -> Result<(ComplexVector, f64)> {
        let m = self.params.m;
        if input.dim() != m as usize {
            return Err(Error::DimensionMismatch { expected: m as usize, found: input.dim() });
        }
        if !input.is_finite() {
            return Err(Error::NonFinite("input state"));
        }
        if (input.norm_sq() - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("input state not normalized (norm² = {})", input.norm_sq())));
        }
        let mut state: LabelState = (0..m)
            .map(|i| (target_label(Level::S, DetectorState::Idle, m - 1, i), input[i as usize]))
            .collect();
        if !self.driven() {
            state = apply_op(CollectiveOp::source(Level::E, Level::S), &state, self.params.n_atoms, self.basis.mode());
        }
        Ok(self.basis.project(&state))
    }

    /// Heralding probability at time `t` without building the full result.
    pub fn herald_probability(&self, input: &ComplexVector, t: f64) -> Result<f64> {
        let (c0, _) = self.initial_state(input)?;
        let ct = self.propagator.apply(t, &c0)?;
        Ok(self.heralded(&ct)?.values().map(|a| a.norm_sqr()).sum())
    }

    fn heralded(&self, coords: &ComplexVector) -> Result<LabelState> {
        let mut state = self.basis.expand(coords)?;
        if !self.driven() {
            state = apply_op(CollectiveOp::S_GE_PLUS_D, &state, self.params.n_atoms, self.basis.mode());
        }
        state.retain(|l, _| l.detector == DetectorState::Heralded);
        Ok(state)
    }
}

pub fn run_step(model: &StepModel, input: &ComplexVector, t: f64) -> Result<StepResult> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::domain(format!("step time must be positive and finite, got {t}")));
    }
    let m = model.params.m;
    let (c0, outside_basis) = model.initial_state(input)?;
    let ct = model.propagator.apply(t, &c0)?;
    let heralded = model.heralded(&ct)?;
    let p: f64 = heralded.values().map(|a| a.norm_sqr()).sum();
    if !p.is_finite() {
        return Err(Error::NonFinite("herald probability"));
    }
    if p < HERALD_FLOOR {
        return Err(Error::HeraldImpossible { p });
    }
    let mut post = ComplexVector::zeros(m as usize + 1);
    let mut captured = 0.0;
    for i in 0..=m {
        if let Some(a) = heralded.get(&target_label(Level::G, DetectorState::Heralded, m, i)) {
            post[i as usize] = *a;
            captured += a.norm_sqr();
        }
    }
    if p - captured > 1e-12 * p.max(1.0) {
        return Err(Error::domain("heralded branch left the target ground-source subspace"));
    }
    let post = post.normalized().ok_or(Error::NonFinite("post-herald state"))?;
    let overlap_goal = overlap(&goal_state(m), &post)?.norm_sqr().min(1.0);

    let weights: Vec<&OperatorMatrix> = model.decay.iter().map(|(_, q)| q).collect();
    let integrals = model.propagator.decay_integrals(&weights, t)?;
    let channel_losses = model
        .decay
        .iter()
        .zip(integrals.iter())
        .map(|((kind, _), g)| {
            let gc = g.apply(&c0)?;
            Ok(ChannelLoss { channel: *kind, probability: overlap(&c0, &gc)?.re })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(StepResult {
        p_success: p,
        post_state: post,
        overlap_goal,
        time: t,
        diagnostics: NormBudget { channel_losses, unheralded: ct.norm_sq() - p, outside_basis },
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccumulationConfig {
    pub n_atoms: u32,
    pub m_target: u32,
    pub gamma_g: f64,
    pub p1d: f64,
    pub mode: HpMode,
    pub variant: Variant,
    /// Overrides `Γs/Γg`; default `1/√k` at step `k` (1 for the fixed-ratio variant).
    pub gamma_s_ratio: Option<f64>,
    /// Overrides the drive amplitude of the continuous-drive variant.
    pub omega: Option<f64>,
    /// Golden-section refinement of each step time within ±20%.
    pub refine_time: bool,
}

impl AccumulationConfig {
    pub fn new(n_atoms: u32, m_target: u32, mode: HpMode) -> Self {
        Self {
            n_atoms,
            m_target,
            gamma_g: 1.0,
            p1d: f64::INFINITY,
            mode,
            variant: Variant::PiPulse,
            gamma_s_ratio: None,
            omega: None,
            refine_time: false,
        }
    }

    pub fn with_purcell(mut self, p1d: f64) -> Self {
        self.p1d = p1d;
        self
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_target == 0 || self.m_target > self.n_atoms {
            return Err(Error::domain(format!(
                "m_target must be in 1..=N (m_target = {}, N = {})",
                self.m_target, self.n_atoms
            )));
        }
        if !(self.p1d > 0.0) {
            return Err(Error::domain(format!("P1d must be positive, got {}", self.p1d)));
        }
        if let Some(r) = self.gamma_s_ratio {
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::domain(format!("gamma_s ratio must be finite and non-negative, got {r}")));
            }
        }
        if let Some(o) = self.omega {
            if !(o > 0.0) || !o.is_finite() {
                return Err(Error::domain(format!("omega must be positive and finite, got {o}")));
            }
        }
        Ok(())
    }

    /// Model parameters and step time for the step that reaches `k` excitations.
    pub fn step_schedule(&self, k: u32) -> (DissipativeParams, f64) {
        let sector = if self.variant == Variant::FreshLevel { 1 } else { k };
        let mut p = DissipativeParams::new(self.n_atoms, sector);
        p.gamma_g = self.gamma_g;
        p = p.with_purcell(self.p1d);
        let default_ratio = match self.variant {
            Variant::FixedRatio => 1.0,
            _ => 1.0 / (sector as f64).sqrt(),
        };
        p.gamma_s = self.gamma_g * self.gamma_s_ratio.unwrap_or(default_ratio);
        let time = match self.variant {
            Variant::PiPulse | Variant::FreshLevel => optimal_parameters(&p).time,
            Variant::FixedRatio => fixed_ratio_time(&p),
            Variant::ContinuousDrive => {
                p.drive_omega = 1.0;
                let opt = optimal_parameters(&p);
                let omega = self.omega.or(opt.omega).unwrap_or(1.0);
                p.drive_omega = omega;
                if self.omega.is_some() {
                    2.0 * PI / omega
                } else {
                    opt.time
                }
            }
        };
        (p, time)
    }
}

#[derive(Clone, Debug)]
pub struct AccumulationResult {
    pub steps: Vec<StepResult>,
    /// `1 − |⟨ψ_m|post⟩|` after the last step.
    pub infidelity: f64,
    /// Expected repetitions `Π_k 1/p_k`.
    pub repetitions: f64,
}

fn refine(model: &StepModel, input: &ComplexVector, t: f64) -> Result<f64> {
    golden_section_max(|x| model.herald_probability(input, x), 0.8 * t, 1.2 * t, 1e-10 * t)
}

pub fn run_accumulation(cfg: &AccumulationConfig) -> Result<AccumulationResult> {
    cfg.validate()?;
    let mut steps: Vec<StepResult> = Vec::with_capacity(cfg.m_target as usize);
    let mut input = ComplexVector::unit(1, 0);
    let mut infidelity = 0.0;
    for k in 1..=cfg.m_target {
        let (params, t0) = cfg.step_schedule(k);
        let model = StepModel::new(params, cfg.mode)?;
        let t = if cfg.refine_time { refine(&model, &input, t0)? } else { t0 };
        let step = run_step(&model, &input, t)?;
        if cfg.variant == Variant::FreshLevel {
            infidelity += 1.0 - step.overlap_goal.sqrt();
        } else {
            infidelity = 1.0 - step.overlap_goal.sqrt();
            input = step.post_state.clone();
        }
        steps.push(step);
    }
    let repetitions = repetitions(&steps.iter().map(|s| s.p_success).collect::<Vec<_>>());
    Ok(AccumulationResult { steps, infidelity: infidelity.clamp(0.0, 1.0), repetitions })
}

fn single_step(params: DissipativeParams, mode: HpMode, t: f64) -> Result<StepResult> {
    let model = StepModel::new(params, mode)?;
    let input = goal_state(params.m - 1);
    run_step(&model, &input, t)
}

/// Optimal π-pulse step from the ideal `(m−1)` state.
pub fn run_step_pi_pulse(n_atoms: u32, m: u32, p1d: f64, mode: HpMode) -> Result<StepResult> {
    let (p, t) = AccumulationConfig::new(n_atoms, m, mode).with_purcell(p1d).step_schedule(m);
    single_step(p, mode, t)
}

/// `Γs = Γg` at `T = 2π/(√(2N(m+1)) Γs)`.
pub fn run_step_fixed_ratio(n_atoms: u32, m: u32, p1d: f64, mode: HpMode) -> Result<StepResult> {
    let (p, t) = AccumulationConfig::new(n_atoms, m, mode)
        .with_purcell(p1d)
        .with_variant(Variant::FixedRatio)
        .step_schedule(m);
    single_step(p, mode, t)
}

/// Drive `Ω = √(2/3)√(2N)Γg` with `Γs = Γg/√m` at `T = 2π/Ω`.
pub fn run_step_continuous_drive(n_atoms: u32, m: u32, p1d: f64, mode: HpMode) -> Result<StepResult> {
    let (p, t) = AccumulationConfig::new(n_atoms, m, mode)
        .with_purcell(p1d)
        .with_variant(Variant::ContinuousDrive)
        .step_schedule(m);
    single_step(p, mode, t)
}

/// Step with the previous excitations stored in another level: they are
/// spectators and the step is the single-excitation step.
pub fn run_step_fresh_level(n_atoms: u32, p1d: f64, stored: u32, mode: HpMode) -> Result<StepResult> {
    if stored + 1 > n_atoms {
        return Err(Error::domain(format!("cannot store {stored} excitations in {n_atoms} atoms")));
    }
    let (p, t) = AccumulationConfig::new(n_atoms, 1, mode)
        .with_purcell(p1d)
        .with_variant(Variant::FreshLevel)
        .step_schedule(stored + 1);
    single_step(p, mode, t)
}
