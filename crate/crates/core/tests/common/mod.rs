//! Brute-force reference: every atom tracked individually.
//!
//! Atom 0 is the source, then `N` atoms per mirror `t1`, `t2` and per detector half
//! `d1`, `d2`. A configuration is a base-3 integer (g=0, e=1, s=2).
#![allow(dead_code)]

use std::collections::HashMap;

use herald_core::basis::{BasisLabel, BasisSet, CollectiveOp, DetectorOp, DetectorState, Ensemble, Level};
use herald_core::dissipative::DissipativeParams;
use herald_core::linalg::{ComplexVector, OperatorMatrix, C64};

pub type Sparse = HashMap<u64, f64>;

fn digit(l: Level) -> u64 {
    match l {
        Level::G => 0,
        Level::E => 1,
        Level::S => 2,
    }
}

#[derive(Clone, Copy, Debug)]
pub enum Block {
    Source,
    T1,
    T2,
    D1,
    D2,
}

pub struct Oracle {
    pub n: u32,
    pow: Vec<u64>,
}

/// `Σ_j c_j |to⟩⟨from|_j`.
#[derive(Clone, Debug, Default)]
pub struct AtomSum(pub Vec<(usize, u64, u64, f64)>);

impl Oracle {
    pub fn new(n: u32) -> Self {
        let atoms = 1 + 4 * n as usize;
        let pow = (0..atoms).map(|j| 3u64.pow(j as u32)).collect();
        Self { n, pow }
    }

    pub fn atoms(&self, b: Block) -> Vec<usize> {
        let n = self.n as usize;
        match b {
            Block::Source => vec![0],
            Block::T1 => (1..=n).collect(),
            Block::T2 => (n + 1..=2 * n).collect(),
            Block::D1 => (2 * n + 1..=3 * n).collect(),
            Block::D2 => (3 * n + 1..=4 * n).collect(),
        }
    }

    fn level(&self, config: u64, atom: usize) -> u64 {
        (config / self.pow[atom]) % 3
    }

    /// Symmetric state of one block with `k` atoms in s and `l` in e.
    fn dicke(&self, b: Block, k: u32, l: u32) -> Sparse {
        let atoms = self.atoms(b);
        let mut out = Sparse::new();
        for code in 0..3u64.pow(atoms.len() as u32) {
            let digits: Vec<u64> = (0..atoms.len()).map(|i| (code / 3u64.pow(i as u32)) % 3).collect();
            let ns = digits.iter().filter(|d| **d == 2).count() as u32;
            let ne = digits.iter().filter(|d| **d == 1).count() as u32;
            if ns == k && ne == l {
                let cfg: u64 = atoms.iter().zip(&digits).map(|(a, d)| d * self.pow[*a]).sum();
                out.insert(cfg, 1.0);
            }
        }
        let norm = (out.len() as f64).sqrt();
        out.values_mut().for_each(|v| *v /= norm);
        out
    }

    fn detector(&self, d: DetectorState) -> Sparse {
        let idle = |b| self.dicke(b, self.n, 0);
        match d {
            DetectorState::Idle => product(&idle(Block::D1), &idle(Block::D2)),
            DetectorState::Excited | DetectorState::Heralded => {
                let (k, l) = if d == DetectorState::Excited { (self.n - 1, 1) } else { (self.n - 1, 0) };
                let a = product(&self.dicke(Block::D1, k, l), &idle(Block::D2));
                let b = product(&idle(Block::D1), &self.dicke(Block::D2, k, l));
                let r = std::f64::consts::FRAC_1_SQRT_2;
                add(&scale(&a, r), &scale(&b, -r))
            }
        }
    }

    pub fn label_state(&self, label: &BasisLabel) -> Sparse {
        let mut s = Sparse::new();
        s.insert(digit(label.source), 1.0);
        let s = product(&s, &self.dicke(Block::T1, label.k1, label.l1));
        let s = product(&s, &self.dicke(Block::T2, label.k2, label.l2));
        product(&s, &self.detector(label.detector))
    }

    pub fn basis_states(&self, basis: &BasisSet) -> Vec<Sparse> {
        basis
            .vectors()
            .iter()
            .map(|v| {
                v.components
                    .iter()
                    .fold(Sparse::new(), |acc, (l, c)| add(&acc, &scale(&self.label_state(l), *c)))
            })
            .collect()
    }

    pub fn block_sum(&self, b: Block, to: Level, from: Level, c: f64) -> AtomSum {
        AtomSum(self.atoms(b).into_iter().map(|a| (a, digit(to), digit(from), c)).collect())
    }

    /// Atom-level form of a collective operator.
    pub fn collective(&self, op: CollectiveOp) -> AtomSum {
        match op {
            CollectiveOp::Target { to, from, ensemble } => {
                let (w1, w2) = match ensemble {
                    Ensemble::Mirror1 => (1.0, 0.0),
                    Ensemble::Mirror2 => (0.0, 1.0),
                    Ensemble::Plus => (1.0, 1.0),
                    Ensemble::Minus => (1.0, -1.0),
                };
                let mut s = self.block_sum(Block::T1, to, from, w1);
                s.0.extend(self.block_sum(Block::T2, to, from, w2).0);
                s.0.retain(|t| t.3 != 0.0);
                s
            }
            CollectiveOp::Source { to, from } => self.block_sum(Block::Source, to, from, 1.0),
            CollectiveOp::Detector(op) => {
                let (to, from, sign) = match op {
                    DetectorOp::EsMinus => (Level::E, Level::S, -1.0),
                    DetectorOp::SeMinus => (Level::S, Level::E, -1.0),
                    DetectorOp::GePlus => (Level::G, Level::E, 1.0),
                    DetectorOp::EgPlus => (Level::E, Level::G, 1.0),
                };
                let mut s = self.block_sum(Block::D1, to, from, 1.0);
                s.0.extend(self.block_sum(Block::D2, to, from, sign).0);
                s
            }
            CollectiveOp::TotalExcited => AtomSum(
                (0..self.pow.len()).map(|a| (a, digit(Level::E), digit(Level::E), 1.0)).collect(),
            ),
        }
    }

    pub fn apply(&self, op: &AtomSum, state: &Sparse) -> Sparse {
        let mut out = Sparse::new();
        for (&cfg, &amp) in state {
            for &(atom, to, from, c) in &op.0 {
                if self.level(cfg, atom) == from {
                    let new = cfg - from * self.pow[atom] + to * self.pow[atom];
                    *out.entry(new).or_default() += c * amp;
                }
            }
        }
        out
    }

    /// Applies `ops` right to left.
    pub fn apply_product(&self, ops: &[AtomSum], state: &Sparse) -> Sparse {
        ops.iter().rev().fold(state.clone(), |s, o| self.apply(o, &s))
    }

    /// `⟨b_i|O|b_j⟩` where `image(b_j) = O b_j`.
    pub fn matrix(&self, states: &[Sparse], image: impl Fn(&Sparse) -> Sparse) -> OperatorMatrix {
        let index = inverse_index(states);
        let mut m = OperatorMatrix::zeros(states.len());
        for (j, s) in states.iter().enumerate() {
            for (cfg, amp) in image(s) {
                for &(i, c) in index.get(&cfg).map(Vec::as_slice).unwrap_or(&[]) {
                    m.set(i, j, m.get(i, j) + C64::new(c * amp, 0.0));
                }
            }
        }
        m
    }

    /// `⟨O b_i|O b_j⟩`.
    pub fn gram(&self, states: &[Sparse], image: impl Fn(&Sparse) -> Sparse) -> OperatorMatrix {
        let images: Vec<Sparse> = states.iter().map(image).collect();
        let index = inverse_index(&images);
        let mut m = OperatorMatrix::zeros(states.len());
        for entries in index.values() {
            for &(i, a) in entries {
                for &(j, b) in entries {
                    m.set(i, j, m.get(i, j) + C64::new(a * b, 0.0));
                }
            }
        }
        m
    }

    /// Full no-jump generator, including the detector `S_{se,+}` channel and
    /// free-space decay of every atom separately.
    pub fn h_nh(&self, p: &DissipativeParams, states: &[Sparse]) -> OperatorMatrix {
        let src = |to, from| self.block_sum(Block::Source, to, from, 1.0);
        let s_eg_plus = self.collective(CollectiveOp::S_EG_PLUS_T);
        let s_se_minus = self.collective(CollectiveOp::S_SE_MINUS_T);
        let d_es_minus = self.collective(CollectiveOp::S_ES_MINUS_D);
        let adj = |o: &AtomSum| AtomSum(o.0.iter().map(|&(a, to, from, c)| (a, from, to, c)).collect());
        let terms: Vec<(f64, Vec<AtomSum>)> = vec![
            (p.gamma_g / 2.0, vec![src(Level::G, Level::E), s_eg_plus.clone()]),
            (p.gamma_g / 2.0, vec![src(Level::E, Level::G), adj(&s_eg_plus)]),
            (p.gamma_s / 2.0, vec![d_es_minus.clone(), s_se_minus.clone()]),
            (p.gamma_s / 2.0, vec![adj(&d_es_minus), adj(&s_se_minus)]),
        ];
        let mut h = OperatorMatrix::zeros(states.len());
        for (c, ops) in &terms {
            h = &h + &(&self.matrix(states, |s| self.apply_product(ops, s)) * C64::new(*c, 0.0));
        }
        if p.drive_omega > 0.0 {
            let mut drive = src(Level::E, Level::S);
            drive.0.extend(src(Level::S, Level::E).0);
            let ge = self.collective(CollectiveOp::S_GE_PLUS_D);
            drive.0.extend(ge.0.iter().cloned());
            drive.0.extend(adj(&ge).0);
            h = &h + &(&self.matrix(states, |s| self.apply(&drive, s)) * C64::new(p.drive_omega / 2.0, 0.0));
        }
        let mut decays: Vec<(f64, AtomSum)> = Vec::new();
        if p.collective_jumps {
            decays.push((p.gamma_g, src(Level::G, Level::E)));
            decays.push((p.gamma_g, self.collective(CollectiveOp::S_GE_MINUS_T)));
            decays.push((p.gamma_s, s_se_minus.clone()));
            let mut det_plus = self.block_sum(Block::D1, Level::S, Level::E, 1.0);
            det_plus.0.extend(self.block_sum(Block::D2, Level::S, Level::E, 1.0).0);
            decays.push((p.gamma_s, det_plus));
        }
        if p.gamma_star > 0.0 {
            for atom in 0..self.pow.len() {
                decays.push((p.gamma_star, AtomSum(vec![(atom, digit(Level::G), digit(Level::E), 1.0)])));
            }
        }
        for (rate, o) in &decays {
            let g = self.gram(states, |s| self.apply(o, s));
            h = &h - &(&g * C64::new(0.0, rate / 2.0));
        }
        h
    }
}

fn inverse_index(states: &[Sparse]) -> HashMap<u64, Vec<(usize, f64)>> {
    let mut index: HashMap<u64, Vec<(usize, f64)>> = HashMap::new();
    for (i, s) in states.iter().enumerate() {
        for (&cfg, &amp) in s {
            if amp != 0.0 {
                index.entry(cfg).or_default().push((i, amp));
            }
        }
    }
    index
}

/// Configurations of disjoint atom sets combine by addition.
pub fn product(a: &Sparse, b: &Sparse) -> Sparse {
    let mut out = Sparse::new();
    for (ca, va) in a {
        for (cb, vb) in b {
            out.insert(ca + cb, va * vb);
        }
    }
    out
}

pub fn add(a: &Sparse, b: &Sparse) -> Sparse {
    let mut out = a.clone();
    for (c, v) in b {
        *out.entry(*c).or_default() += v;
    }
    out
}

pub fn scale(a: &Sparse, c: f64) -> Sparse {
    a.iter().map(|(k, v)| (*k, v * c)).collect()
}

/// Classical RK4 for `dψ/dt = −iHψ`.
pub fn rk4(h: &OperatorMatrix, psi: &ComplexVector, t: f64, steps: usize) -> ComplexVector {
    let a = h.entries() * C64::new(0.0, -1.0);
    let dt = t / steps as f64;
    let mut v = nalgebra::DVector::from_column_slice(psi.as_slice());
    for _ in 0..steps {
        let k1 = &a * &v;
        let k2 = &a * (&v + &k1 * C64::new(dt / 2.0, 0.0));
        let k3 = &a * (&v + &k2 * C64::new(dt / 2.0, 0.0));
        let k4 = &a * (&v + &k3 * C64::new(dt, 0.0));
        v += (k1 + k2 * C64::new(2.0, 0.0) + k3 * C64::new(2.0, 0.0) + k4) * C64::new(dt / 6.0, 0.0);
    }
    ComplexVector::from_vec(v.as_slice().to_vec())
}

pub fn max_abs_diff(a: &ComplexVector, b: &ComplexVector) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Every collective operator the model defines.
pub fn all_collective_ops() -> Vec<CollectiveOp> {
    let levels = [Level::G, Level::E, Level::S];
    let mut ops = Vec::new();
    for to in levels {
        for from in levels {
            for ens in [Ensemble::Mirror1, Ensemble::Mirror2, Ensemble::Plus, Ensemble::Minus] {
                ops.push(CollectiveOp::target(to, from, ens));
            }
            ops.push(CollectiveOp::source(to, from));
        }
    }
    for d in [DetectorOp::EsMinus, DetectorOp::SeMinus, DetectorOp::GePlus, DetectorOp::EgPlus] {
        ops.push(CollectiveOp::Detector(d));
    }
    ops.push(CollectiveOp::TotalExcited);
    ops
}
