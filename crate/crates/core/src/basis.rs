//! Labelled symmetric-subspace bases and collective operators.
//!
//! A state of the double-mirror system is a product of the source atom, two target
//! mirrors (`t1`, `t2`, `N` atoms each) and the detector ensemble. Each mirror is
//! permutation symmetric and labelled by `(k, l)`: the number of atoms in `|s⟩`
//! and in `|e⟩`. The detector starts with all atoms in `|s⟩` and can only hold the
//! antisymmetric collective `e` excitation or its de-excited `g` counterpart, so it is
//! tracked by [`DetectorState`].
//!
//! Operators act on labels through Holstein–Primakoff coefficients, either exact
//! (`√(N − k − l)` factors kept) or linearized (`√N`). Basis vectors are
//! superpositions of labels, which lets both modes share one engine.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{ComplexVector, OperatorMatrix, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    G,
    E,
    S,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DetectorState {
    /// Every detector atom in `|s⟩`.
    Idle,
    /// One antisymmetric collective `e` excitation.
    Excited,
    /// The excitation de-excited to `|g⟩`: the herald.
    Heralded,
}

/// One product configuration. Field order fixes the lexicographic basis ordering.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisLabel {
    pub source: Level,
    pub detector: DetectorState,
    pub k1: u32,
    pub l1: u32,
    pub k2: u32,
    pub l2: u32,
}

impl BasisLabel {
    pub fn new(source: Level, detector: DetectorState, k1: u32, l1: u32, k2: u32, l2: u32) -> Self {
        Self { source, detector, k1, l1, k2, l2 }
    }

    /// Excitations conserved by the coherent Hamiltonian: source out of `|g⟩`
    /// plus every target atom out of `|g⟩`.
    pub fn excitation_number(&self) -> u32 {
        (self.source != Level::G) as u32 + self.k1 + self.l1 + self.k2 + self.l2
    }

    /// Number of atoms in `|e⟩` across the whole system.
    pub fn excited_count(&self) -> u32 {
        (self.source == Level::E) as u32
            + self.l1
            + self.l2
            + (self.detector == DetectorState::Excited) as u32
    }
}

impl fmt::Display for BasisLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:?}|{},{};{},{}|{:?}",
            self.source, self.k1, self.l1, self.k2, self.l2, self.detector
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HpMode {
    /// Linearized: `S_eg ≈ √N b_e†`.
    HpApprox,
    /// Exact: `S_eg = b_e† √(N − b_s†b_s − b_e†b_e)`.
    HpExact,
}

impl HpMode {
    pub fn name(&self) -> &'static str {
        match self {
            HpMode::HpApprox => "hp-approx",
            HpMode::HpExact => "hp-exact",
        }
    }
}

impl fmt::Display for HpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for HpMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hp-approx" => Ok(HpMode::HpApprox),
            "hp-exact" => Ok(HpMode::HpExact),
            _ => Err(Error::domain(format!("unknown mode '{s}'"))),
        }
    }
}

/// Which single mirror, or which (anti)symmetric combination `S^{t1} ± S^{t2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Ensemble {
    Mirror1,
    Mirror2,
    Plus,
    Minus,
}

/// Detector operators restricted to the three tracked detector states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DetectorOp {
    /// `S_{es,−}^(d)`: Idle → Excited with amplitude `√(2N)`.
    EsMinus,
    /// `S_{se,−}^(d)`: Excited → Idle with amplitude `√(2N)`.
    SeMinus,
    /// `S_{ge,+}^(d)`: Excited → Heralded with amplitude 1.
    GePlus,
    /// `S_{eg,+}^(d)`: Heralded → Excited with amplitude 1.
    EgPlus,
}

/// `|to⟩⟨from|` summed over an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CollectiveOp {
    Target { to: Level, from: Level, ensemble: Ensemble },
    Source { to: Level, from: Level },
    Detector(DetectorOp),
    /// `Σ_j σ_ee^j` over every atom of the system.
    TotalExcited,
}

impl CollectiveOp {
    pub const fn target(to: Level, from: Level, ensemble: Ensemble) -> Self {
        CollectiveOp::Target { to, from, ensemble }
    }

    pub const fn source(to: Level, from: Level) -> Self {
        CollectiveOp::Source { to, from }
    }

    pub const S_EG_PLUS_T: Self = Self::target(Level::E, Level::G, Ensemble::Plus);
    pub const S_EG_MINUS_T: Self = Self::target(Level::E, Level::G, Ensemble::Minus);
    pub const S_GE_MINUS_T: Self = Self::target(Level::G, Level::E, Ensemble::Minus);
    pub const S_SE_MINUS_T: Self = Self::target(Level::S, Level::E, Ensemble::Minus);
    pub const S_SE_PLUS_T: Self = Self::target(Level::S, Level::E, Ensemble::Plus);
    pub const S_EE_T: Self = Self::target(Level::E, Level::E, Ensemble::Plus);
    pub const S_SS_T: Self = Self::target(Level::S, Level::S, Ensemble::Plus);
    pub const S_ES_MINUS_D: Self = CollectiveOp::Detector(DetectorOp::EsMinus);
    pub const S_GE_PLUS_D: Self = CollectiveOp::Detector(DetectorOp::GePlus);
    pub const SIGMA_EE_S: Self = Self::source(Level::E, Level::E);

    pub fn adjoint(self) -> Self {
        match self {
            CollectiveOp::Target { to, from, ensemble } => CollectiveOp::Target { to: from, from: to, ensemble },
            CollectiveOp::Source { to, from } => CollectiveOp::Source { to: from, from: to },
            CollectiveOp::Detector(op) => CollectiveOp::Detector(match op {
                DetectorOp::EsMinus => DetectorOp::SeMinus,
                DetectorOp::SeMinus => DetectorOp::EsMinus,
                DetectorOp::GePlus => DetectorOp::EgPlus,
                DetectorOp::EgPlus => DetectorOp::GePlus,
            }),
            CollectiveOp::TotalExcited => CollectiveOp::TotalExcited,
        }
    }

    /// Image of a single label: at most two output labels with real amplitudes.
    pub fn act(self, label: &BasisLabel, n_atoms: u32, mode: HpMode) -> Vec<(BasisLabel, f64)> {
        match self {
            CollectiveOp::Target { to, from, ensemble } => {
                let mut out = Vec::with_capacity(2);
                let (w1, w2) = match ensemble {
                    Ensemble::Mirror1 => (1.0, 0.0),
                    Ensemble::Mirror2 => (0.0, 1.0),
                    Ensemble::Plus => (1.0, 1.0),
                    Ensemble::Minus => (1.0, -1.0),
                };
                if w1 != 0.0 {
                    if let Some((k, l, a)) = mirror_action(to, from, label.k1, label.l1, n_atoms, mode) {
                        out.push((BasisLabel { k1: k, l1: l, ..*label }, w1 * a));
                    }
                }
                if w2 != 0.0 {
                    if let Some((k, l, a)) = mirror_action(to, from, label.k2, label.l2, n_atoms, mode) {
                        out.push((BasisLabel { k2: k, l2: l, ..*label }, w2 * a));
                    }
                }
                out
            }
            CollectiveOp::Source { to, from } => {
                if label.source == from {
                    vec![(BasisLabel { source: to, ..*label }, 1.0)]
                } else {
                    Vec::new()
                }
            }
            CollectiveOp::Detector(op) => {
                let root = (2.0 * n_atoms as f64).sqrt();
                let (from, to, amp) = match op {
                    DetectorOp::EsMinus => (DetectorState::Idle, DetectorState::Excited, root),
                    DetectorOp::SeMinus => (DetectorState::Excited, DetectorState::Idle, root),
                    DetectorOp::GePlus => (DetectorState::Excited, DetectorState::Heralded, 1.0),
                    DetectorOp::EgPlus => (DetectorState::Heralded, DetectorState::Excited, 1.0),
                };
                if label.detector == from {
                    vec![(BasisLabel { detector: to, ..*label }, amp)]
                } else {
                    Vec::new()
                }
            }
            CollectiveOp::TotalExcited => {
                let c = label.excited_count();
                if c == 0 {
                    Vec::new()
                } else {
                    vec![(*label, c as f64)]
                }
            }
        }
    }
}

fn sqrt_pos(x: f64) -> f64 {
    x.max(0.0).sqrt()
}

/// `|to⟩⟨from|` summed over one mirror in state `(k, l)`.
fn mirror_action(to: Level, from: Level, k: u32, l: u32, n: u32, mode: HpMode) -> Option<(u32, u32, f64)> {
    let (kf, lf, nf) = (k as f64, l as f64, n as f64);
    let ground = |removed: f64| match mode {
        HpMode::HpExact => sqrt_pos(nf - removed),
        HpMode::HpApprox => nf.sqrt(),
    };
    let (k2, l2, amp) = match (from, to) {
        (Level::G, Level::G) => (
            k,
            l,
            match mode {
                HpMode::HpExact => nf - kf - lf,
                HpMode::HpApprox => nf,
            },
        ),
        (Level::G, Level::E) => (k, l + 1, (lf + 1.0).sqrt() * ground(kf + lf)),
        (Level::G, Level::S) => (k + 1, l, (kf + 1.0).sqrt() * ground(kf + lf)),
        (Level::E, _) if l == 0 => return None,
        (Level::E, Level::G) => (k, l - 1, lf.sqrt() * ground(kf + lf - 1.0)),
        (Level::E, Level::E) => (k, l, lf),
        (Level::E, Level::S) => (k + 1, l - 1, (kf + 1.0).sqrt() * lf.sqrt()),
        (Level::S, _) if k == 0 => return None,
        (Level::S, Level::G) => (k - 1, l, kf.sqrt() * ground(kf + lf - 1.0)),
        (Level::S, Level::E) => (k - 1, l + 1, kf.sqrt() * (lf + 1.0).sqrt()),
        (Level::S, Level::S) => (k, l, kf),
    };
    if amp == 0.0 {
        None
    } else {
        Some((k2, l2, amp))
    }
}

/// Sparse superposition of labels.
pub type LabelState = BTreeMap<BasisLabel, C64>;

/// Sum of products of collective operators. Each product acts right to left.
#[derive(Clone, Debug, Default)]
pub struct OperatorExpr {
    terms: Vec<(f64, Vec<CollectiveOp>)>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn op(op: CollectiveOp) -> Self {
        Self { terms: vec![(1.0, vec![op])] }
    }

    pub fn product(ops: &[CollectiveOp]) -> Self {
        Self { terms: vec![(1.0, ops.to_vec())] }
    }

    pub fn scaled(mut self, factor: f64) -> Self {
        for t in &mut self.terms {
            t.0 *= factor;
        }
        self
    }

    pub fn plus(mut self, other: OperatorExpr) -> Self {
        self.terms.extend(other.terms);
        self
    }

    pub fn times(&self, other: &OperatorExpr) -> Self {
        let mut terms = Vec::new();
        for (a, pa) in &self.terms {
            for (b, pb) in &other.terms {
                let mut p = pa.clone();
                p.extend_from_slice(pb);
                terms.push((a * b, p));
            }
        }
        Self { terms }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(c, p)| (*c, p.iter().rev().map(|o| o.adjoint()).collect()))
                .collect(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|(c, _)| *c == 0.0)
    }

    pub fn apply(&self, state: &LabelState, n_atoms: u32, mode: HpMode) -> LabelState {
        let mut out = LabelState::new();
        for (coeff, product) in &self.terms {
            if *coeff == 0.0 {
                continue;
            }
            let mut cur = state.clone();
            for op in product.iter().rev() {
                cur = apply_op(*op, &cur, n_atoms, mode);
                if cur.is_empty() {
                    break;
                }
            }
            for (label, amp) in cur {
                *out.entry(label).or_default() += amp * *coeff;
            }
        }
        out.retain(|_, a| *a != C64::new(0.0, 0.0));
        out
    }
}

pub fn apply_op(op: CollectiveOp, state: &LabelState, n_atoms: u32, mode: HpMode) -> LabelState {
    let mut out = LabelState::new();
    for (label, amp) in state {
        for (next, a) in op.act(label, n_atoms, mode) {
            *out.entry(next).or_default() += amp * a;
        }
    }
    out
}

pub fn label_norm_sq(state: &LabelState) -> f64 {
    state.values().map(|a| a.norm_sqr()).sum()
}

pub fn label_overlap(u: &LabelState, v: &LabelState) -> C64 {
    let (small, large, conj_small) = if u.len() <= v.len() { (u, v, true) } else { (v, u, false) };
    let mut acc = C64::new(0.0, 0.0);
    for (label, a) in small {
        if let Some(b) = large.get(label) {
            acc += if conj_small { a.conj() * b } else { b.conj() * a };
        }
    }
    acc
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisVector {
    pub name: String,
    pub components: Vec<(BasisLabel, f64)>,
}

impl BasisVector {
    fn single(label: BasisLabel) -> Self {
        Self {
            name: label.to_string(),
            components: vec![(label, 1.0)],
        }
    }

    pub fn to_state(&self) -> LabelState {
        self.components
            .iter()
            .map(|(l, c)| (*l, C64::new(*c, 0.0)))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct BasisSet {
    mode: HpMode,
    n_atoms: u32,
    m: u32,
    with_drive: bool,
    vectors: Vec<BasisVector>,
    index: HashMap<BasisLabel, Vec<(usize, f64)>>,
}

/// Result of projecting an operator onto a basis.
#[derive(Clone, Debug)]
pub struct ProjectedOperator {
    pub matrix: OperatorMatrix,
    /// Norm² of `O|b_j⟩` outside the basis, summed over basis vectors `j`.
    pub truncation_loss: f64,
}

impl BasisSet {
    fn from_vectors(mode: HpMode, n_atoms: u32, m: u32, with_drive: bool, vectors: Vec<BasisVector>) -> Self {
        let mut index: HashMap<BasisLabel, Vec<(usize, f64)>> = HashMap::new();
        for (i, v) in vectors.iter().enumerate() {
            for (label, c) in &v.components {
                index.entry(*label).or_default().push((i, *c));
            }
        }
        Self { mode, n_atoms, m, with_drive, vectors, index }
    }

    /// Every label within the cutoffs: `l ≤ 1` per mirror, `k ≤ m`, total target
    /// occupation `≤ m`, any source level and detector state.
    pub fn cutoff_space(n_atoms: u32, m: u32, mode: HpMode) -> Result<Self> {
        validate_sector(n_atoms, m)?;
        let mut labels = Vec::new();
        for source in [Level::G, Level::E, Level::S] {
            for detector in [DetectorState::Idle, DetectorState::Excited, DetectorState::Heralded] {
                for l1 in 0..=1 {
                    for l2 in 0..=1 {
                        for k1 in 0..=m {
                            for k2 in 0..=m {
                                if k1 + l1 + k2 + l2 <= m && k1 + l1 <= n_atoms && k2 + l2 <= n_atoms {
                                    labels.push(BasisLabel::new(source, detector, k1, l1, k2, l2));
                                }
                            }
                        }
                    }
                }
            }
        }
        labels.sort();
        let vectors = labels.into_iter().map(BasisVector::single).collect();
        Ok(Self::from_vectors(mode, n_atoms, m, true, vectors))
    }

    pub fn mode(&self) -> HpMode {
        self.mode
    }

    pub fn n_atoms(&self) -> u32 {
        self.n_atoms
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn with_drive(&self) -> bool {
        self.with_drive
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[BasisVector] {
        &self.vectors
    }

    /// Labels of single-label basis vectors, in basis order.
    pub fn labels(&self) -> Vec<BasisLabel> {
        self.vectors.iter().flat_map(|v| v.components.first().map(|c| c.0)).collect()
    }

    /// Coordinates `⟨b_i|ψ⟩` and the norm² of `ψ` outside the span.
    pub fn project(&self, state: &LabelState) -> (ComplexVector, f64) {
        let mut coords = ComplexVector::zeros(self.dim());
        for (label, amp) in state {
            if let Some(entries) = self.index.get(label) {
                for (i, c) in entries {
                    coords[*i] += amp * *c;
                }
            }
        }
        let outside = (label_norm_sq(state) - coords.norm_sq()).max(0.0);
        (coords, outside)
    }

    /// `Σ_i c_i |b_i⟩` as a label superposition.
    pub fn expand(&self, coords: &ComplexVector) -> Result<LabelState> {
        if coords.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: coords.dim() });
        }
        let mut out = LabelState::new();
        for (v, c) in self.vectors.iter().zip(coords.iter()) {
            for (label, a) in &v.components {
                *out.entry(*label).or_default() += c * *a;
            }
        }
        Ok(out)
    }

    /// `⟨b_i|X|b_j⟩` together with the norm of `X|b_j⟩` that leaves the span.
    pub fn project_expr(&self, expr: &OperatorExpr) -> ProjectedOperator {
        let dim = self.dim();
        let mut matrix = OperatorMatrix::zeros(dim);
        let mut loss = 0.0;
        for (j, v) in self.vectors.iter().enumerate() {
            let image = expr.apply(&v.to_state(), self.n_atoms, self.mode);
            let (coords, outside) = self.project(&image);
            for i in 0..dim {
                matrix.set(i, j, coords[i]);
            }
            loss += outside;
        }
        ProjectedOperator { matrix, truncation_loss: loss }
    }

    /// `⟨X b_i|X b_j⟩`: the matrix of `X†X` restricted to the span, exact even
    /// when `X` leaves it.
    pub fn gram(&self, expr: &OperatorExpr) -> OperatorMatrix {
        let images: Vec<LabelState> = self
            .vectors
            .iter()
            .map(|v| expr.apply(&v.to_state(), self.n_atoms, self.mode))
            .collect();
        OperatorMatrix::from_fn(self.dim(), |i, j| label_overlap(&images[i], &images[j]))
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.vectors.iter().position(|v| v.name == name)
    }
}

pub fn collective_operator(basis: &BasisSet, which: CollectiveOp) -> ProjectedOperator {
    basis.project_expr(&OperatorExpr::op(which))
}

fn validate_sector(n_atoms: u32, m: u32) -> Result<()> {
    if n_atoms == 0 {
        return Err(Error::domain("N must be at least 1"));
    }
    if m == 0 {
        return Err(Error::domain("m must be at least 1"));
    }
    if m > n_atoms {
        return Err(Error::domain(format!("m = {m} exceeds N = {n_atoms}")));
    }
    Ok(())
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Amplitudes of `(b_{s,1}† − b_{s,2}†)^m |0⟩/√(2^m m!)` on `|m−i, 0; i, 0⟩`, `i = 0..=m`.
pub fn goal_amplitudes(m: u32) -> Vec<f64> {
    let norm = 2f64.powi(m as i32).sqrt();
    (0..=m)
        .map(|i| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            sign * binomial(m, i).sqrt() / norm
        })
        .collect()
}

/// Target goal state in the `|m−i, 0; i, 0⟩` coordinates, `i = 0..=m`.
pub fn goal_state(m: u32) -> ComplexVector {
    ComplexVector::from_real(&goal_amplitudes(m))
}

/// Target label `|m−i, 0; i, 0⟩` with given source and detector.
pub fn target_label(source: Level, detector: DetectorState, m: u32, i: u32) -> BasisLabel {
    BasisLabel::new(source, detector, m - i, 0, i, 0)
}

/// The reachable basis of one protocol step in sector `m`.
///
/// `HpExact` gives `4m + 1` labels (`6m + 2` with the drive); `HpApprox` gives the
/// chain `φ1, φ2, φ3` (`φ0, φ4` appended with the drive).
pub fn build_basis(n_atoms: u32, m: u32, mode: HpMode, with_drive: bool) -> Result<BasisSet> {
    validate_sector(n_atoms, m)?;
    let vectors = match mode {
        HpMode::HpExact => {
            let mut labels = Vec::new();
            for i in 0..m {
                labels.push(target_label(Level::E, DetectorState::Idle, m - 1, i));
                labels.push(BasisLabel::new(Level::G, DetectorState::Idle, m - 1 - i, 1, i, 0));
                labels.push(BasisLabel::new(Level::G, DetectorState::Idle, m - 1 - i, 0, i, 1));
                if with_drive {
                    labels.push(target_label(Level::S, DetectorState::Idle, m - 1, i));
                }
            }
            for i in 0..=m {
                labels.push(target_label(Level::G, DetectorState::Excited, m, i));
                if with_drive {
                    labels.push(target_label(Level::G, DetectorState::Heralded, m, i));
                }
            }
            labels.sort();
            labels.into_iter().map(BasisVector::single).collect()
        }
        HpMode::HpApprox => {
            let prev = goal_amplitudes(m - 1);
            let cur = goal_amplitudes(m);
            let chain = |name: &str, source: Level, detector: DetectorState, sector: u32, amps: &[f64]| BasisVector {
                name: name.to_string(),
                components: amps
                    .iter()
                    .enumerate()
                    .map(|(i, a)| (target_label(source, detector, sector, i as u32), *a))
                    .collect(),
            };
            let r = std::f64::consts::FRAC_1_SQRT_2;
            let mut phi2 = Vec::new();
            for (i, a) in prev.iter().enumerate() {
                let i = i as u32;
                phi2.push((BasisLabel::new(Level::G, DetectorState::Idle, m - 1 - i, 1, i, 0), a * r));
                phi2.push((BasisLabel::new(Level::G, DetectorState::Idle, m - 1 - i, 0, i, 1), a * r));
            }
            let mut v = vec![
                chain("phi1", Level::E, DetectorState::Idle, m - 1, &prev),
                BasisVector { name: "phi2".into(), components: phi2 },
                chain("phi3", Level::G, DetectorState::Excited, m, &cur),
            ];
            if with_drive {
                v.push(chain("phi0", Level::S, DetectorState::Idle, m - 1, &prev));
                v.push(chain("phi4", Level::G, DetectorState::Heralded, m, &cur));
            }
            v
        }
    };
    Ok(BasisSet::from_vectors(mode, n_atoms, m, with_drive, vectors))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn basis_sizes() {
        assert_eq!(build_basis(10, 1, HpMode::HpExact, false).unwrap().dim(), 5);
        assert_eq!(build_basis(10, 3, HpMode::HpExact, false).unwrap().dim(), 13);
        assert_eq!(build_basis(10, 3, HpMode::HpExact, true).unwrap().dim(), 20);
        assert_eq!(build_basis(10, 1, HpMode::HpApprox, false).unwrap().dim(), 3);
        assert_eq!(build_basis(10, 2, HpMode::HpApprox, true).unwrap().dim(), 5);
    }

    #[test]
    fn sector_validation() {
        assert!(matches!(build_basis(3, 4, HpMode::HpExact, false), Err(Error::Domain(_))));
        assert!(build_basis(3, 0, HpMode::HpApprox, false).is_err());
    }

    #[test]
    fn exact_labels_are_sorted_and_unique() {
        let b = build_basis(8, 4, HpMode::HpExact, true).unwrap();
        let labels = b.labels();
        assert!(labels.windows(2).all(|w| w[0] < w[1]));
        for l in &labels {
            assert!(l.l1 <= 1 && l.l2 <= 1);
            assert!(l.k1 + l.l1 + l.k2 + l.l2 <= 4);
            assert_eq!(l.excitation_number(), 4);
        }
    }

    #[test]
    fn goal_examples() {
        let g1 = goal_amplitudes(1);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((g1[0] - r).abs() < 1e-15 && (g1[1] + r).abs() < 1e-15);
        let g2 = goal_amplitudes(2);
        let expected = [2f64.sqrt() / (2.0 * 2f64.sqrt()), -2.0 / (2.0 * 2f64.sqrt()), 2f64.sqrt() / (2.0 * 2f64.sqrt())];
        for (a, b) in g2.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        for m in 1..=6 {
            assert!((goal_state(m).norm_sq() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn approx_symmetric_excitation() {
        let n = 7;
        let b = build_basis(n, 1, HpMode::HpApprox, false).unwrap();
        let vac = BasisLabel::new(Level::G, DetectorState::Idle, 0, 0, 0, 0);
        let state: LabelState = [(vac, C64::new(1.0, 0.0))].into_iter().collect();
        let out = apply_op(CollectiveOp::S_EG_PLUS_T, &state, n, HpMode::HpApprox);
        let root_n = (n as f64).sqrt();
        assert_eq!(out.len(), 2);
        for a in out.values() {
            assert!((a.re - root_n).abs() < 1e-14);
        }
        let (coords, outside) = b.project(&out);
        assert!(outside < 1e-12);
        assert!((coords[1].re - (2.0 * n as f64).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn single_atom_exact_is_pauli() {
        let b = BasisSet::cutoff_space(1, 1, HpMode::HpExact).unwrap();
        let op = collective_operator(&b, CollectiveOp::target(Level::E, Level::G, Ensemble::Mirror1));
        for (j, v) in b.vectors().iter().enumerate() {
            let l = v.components[0].0;
            for i in 0..b.dim() {
                let li = b.vectors()[i].components[0].0;
                let expected = if l.k1 == 0 && l.l1 == 0 && li == (BasisLabel { l1: 1, ..l }) { 1.0 } else { 0.0 };
                assert_eq!(op.matrix.get(i, j).re, expected);
            }
        }
    }

    #[test]
    fn operator_adjoints_match_matrices() {
        let b = BasisSet::cutoff_space(4, 2, HpMode::HpExact).unwrap();
        for op in [CollectiveOp::S_EG_PLUS_T, CollectiveOp::S_SE_MINUS_T, CollectiveOp::source(Level::E, Level::S)] {
            let a = b.project_expr(&OperatorExpr::op(op)).matrix;
            let ad = b.project_expr(&OperatorExpr::op(op.adjoint())).matrix;
            assert!(a.adjoint().max_deviation(&ad) < 1e-13, "{op:?}");
        }
    }

    #[test]
    fn boson_commutator_in_approx_mode() {
        let n = 9;
        let b = BasisSet::cutoff_space(n, 2, HpMode::HpApprox).unwrap();
        let up = CollectiveOp::target(Level::E, Level::G, Ensemble::Mirror1);
        let down = up.adjoint();
        let comm = OperatorExpr::product(&[down, up]).plus(OperatorExpr::product(&[up, down]).scaled(-1.0)).scaled(1.0 / n as f64);
        for v in b.vectors() {
            let state = v.to_state();
            let out = comm.apply(&state, n, HpMode::HpApprox);
            let diff: f64 = out
                .iter()
                .map(|(l, a)| (a - state.get(l).copied().unwrap_or_default()).norm_sqr())
                .sum();
            assert!(diff < 1e-24);
        }
    }

    #[test]
    fn goal_has_definite_s_number() {
        for m in 1..=5 {
            let b = build_basis(20, m, HpMode::HpApprox, false).unwrap();
            let phi3 = b.vectors()[b.position("phi3").unwrap()].to_state();
            let out = apply_op(CollectiveOp::S_SS_T, &phi3, 20, HpMode::HpApprox);
            for (l, a) in &phi3 {
                assert!((out[l] - a * m as f64).norm() < 1e-13);
            }
        }
    }
}
