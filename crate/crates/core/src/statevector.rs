//! Dense Jordan–Wigner statevectors.
//!
//! Basis index `d` is the bitmask of occupied modes, mode `i` is bit `i`, and a
//! determinant is `a†_{i1} a†_{i2} … |0⟩` with `i1 < i2 < …`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::ExcitationGenerator;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

#[inline]
pub(crate) fn below(mode: usize) -> u64 {
    (1u64 << mode) - 1
}

/// Sign and result of `a_k |d⟩`, or `None` if mode `k` is empty.
#[inline]
pub(crate) fn annihilate(d: u64, k: usize) -> Option<(u64, f64)> {
    let bit = 1u64 << k;
    if d & bit == 0 {
        return None;
    }
    let sign = if (d & below(k)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    Some((d ^ bit, sign))
}

/// Sign and result of `a†_k |d⟩`, or `None` if mode `k` is occupied.
#[inline]
pub(crate) fn create(d: u64, k: usize) -> Option<(u64, f64)> {
    let bit = 1u64 << k;
    if d & bit != 0 {
        return None;
    }
    let sign = if (d & below(k)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    };
    Some((d | bit, sign))
}

/// Parity (+1/-1) of the permutation that sorts `seq` ascending.
pub(crate) fn sort_parity(seq: &[usize]) -> f64 {
    let mut inv = 0usize;
    for i in 0..seq.len() {
        for j in i + 1..seq.len() {
            if seq[i] > seq[j] {
                inv += 1;
            }
        }
    }
    if inv.is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub(crate) fn occupied(d: u64) -> impl Iterator<Item = usize> {
    let mut rest = d;
    std::iter::from_fn(move || {
        if rest == 0 {
            None
        } else {
            let i = rest.trailing_zeros() as usize;
            rest &= rest - 1;
            Some(i)
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Statevector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl Statevector {
    pub const MAX_QUBITS: usize = 30;

    pub fn zeros(n_qubits: usize) -> Result<Self> {
        if n_qubits > Self::MAX_QUBITS {
            return Err(Error::DimensionMismatch {
                expected: Self::MAX_QUBITS,
                found: n_qubits,
            });
        }
        Ok(Self {
            n_qubits,
            amplitudes: vec![ZERO; 1usize << n_qubits],
        })
    }

    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        if n_qubits > Self::MAX_QUBITS || amplitudes.len() != 1usize << n_qubits {
            return Err(Error::DimensionMismatch {
                expected: 1usize << n_qubits.min(Self::MAX_QUBITS),
                found: amplitudes.len(),
            });
        }
        Ok(Self { n_qubits, amplitudes })
    }

    /// Single determinant with the listed modes occupied.
    pub fn from_slater(occupied: &[usize], n_qubits: usize) -> Result<Self> {
        let mut mask = 0u64;
        for &i in occupied {
            if i >= n_qubits {
                return Err(Error::ModeOutOfRange {
                    index: i,
                    n_modes: n_qubits,
                });
            }
            if mask & (1 << i) != 0 {
                return Err(Error::DuplicateMode(i));
            }
            mask |= 1 << i;
        }
        Self::basis(n_qubits, mask)
    }

    pub fn basis(n_qubits: usize, det: u64) -> Result<Self> {
        let mut s = Self::zeros(n_qubits)?;
        let idx = det as usize;
        if idx >= s.amplitudes.len() {
            return Err(Error::ModeOutOfRange {
                index: 63 - det.leading_zeros() as usize,
                n_modes: n_qubits,
            });
        }
        s.amplitudes[idx] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn normalize(&mut self) -> Result<()> {
        let n = self.norm();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        self.scale(Complex64::new(1.0 / n, 0.0));
        Ok(())
    }

    pub fn scale(&mut self, c: Complex64) {
        self.amplitudes.iter_mut().for_each(|a| *a *= c);
    }

    /// `self += c * other`
    pub fn axpy(&mut self, c: Complex64, other: &Statevector) -> Result<()> {
        self.check_dim(other)?;
        for (a, b) in self.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += c * b;
        }
        Ok(())
    }

    fn check_dim(&self, other: &Statevector) -> Result<()> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: other.n_qubits,
            });
        }
        Ok(())
    }

    /// `⟨self|other⟩`
    pub fn inner(&self, other: &Statevector) -> Result<Complex64> {
        self.check_dim(other)?;
        Ok(inner_slices(&self.amplitudes, &other.amplitudes))
    }

    /// Determinants carrying nonzero amplitude.
    pub fn support(&self) -> impl Iterator<Item = (u64, Complex64)> + '_ {
        self.amplitudes
            .iter()
            .enumerate()
            .filter(|(_, a)| a.re != 0.0 || a.im != 0.0)
            .map(|(d, a)| (d as u64, *a))
    }

    /// Common particle number of the support, `None` when mixed or empty.
    pub fn particle_number(&self) -> Option<u32> {
        let mut n = None;
        for (d, _) in self.support() {
            let w = d.count_ones();
            match n {
                None => n = Some(w),
                Some(m) if m != w => return None,
                _ => {}
            }
        }
        n
    }

    fn check_generator(&self, gen: &ExcitationGenerator) -> Result<()> {
        gen.validate()?;
        let m = gen.max_mode();
        if m >= self.n_qubits {
            return Err(Error::ModeOutOfRange {
                index: m,
                n_modes: self.n_qubits,
            });
        }
        Ok(())
    }

    /// `exp(iθT)|self⟩`.
    pub fn apply_excitation(&self, gen: &ExcitationGenerator, theta: f64) -> Result<Statevector> {
        let mut out = self.clone();
        out.apply_excitation_in_place(gen, theta)?;
        Ok(out)
    }

    pub fn apply_excitation_in_place(&mut self, gen: &ExcitationGenerator, theta: f64) -> Result<()> {
        self.check_generator(gen)?;
        rotate(&mut self.amplitudes, gen, theta);
        Ok(())
    }

    /// `T|self⟩` for the Hermitian generator `T = i(E − E†)`.
    pub fn apply_generator(&self, gen: &ExcitationGenerator) -> Result<Statevector> {
        self.check_generator(gen)?;
        let mut out = vec![ZERO; self.amplitudes.len()];
        generator_into(&self.amplitudes, gen, &mut out);
        Ok(Statevector {
            n_qubits: self.n_qubits,
            amplitudes: out,
        })
    }

    pub fn permute_modes(&self, perm: &ModePermutation) -> Result<Statevector> {
        if perm.len() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: perm.len(),
            });
        }
        let mut out = vec![ZERO; self.amplitudes.len()];
        for (d, a) in self.support() {
            let (d2, ph) = perm.map_det(d);
            out[d2 as usize] += a * ph;
        }
        Ok(Statevector {
            n_qubits: self.n_qubits,
            amplitudes: out,
        })
    }
}

pub(crate) fn inner_slices(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Iterates `(d, d', σ)` over determinants with `E|d⟩ = σ|d'⟩`.
pub(crate) fn for_each_pair(n: usize, gen: &ExcitationGenerator, mut f: impl FnMut(usize, usize, f64)) {
    let (ann, cre) = gen.masks();
    let fresh = cre & !ann;
    let (annihilated, created) = gen.action_order();
    let dim = 1usize << n;
    for d in 0..dim {
        let d64 = d as u64;
        if d64 & ann != ann || d64 & fresh != 0 {
            continue;
        }
        let mut cur = d64;
        let mut sign = 1.0;
        for &k in annihilated.iter() {
            let (nd, s) = annihilate(cur, k).expect("mask checked");
            cur = nd;
            sign *= s;
        }
        for &k in created.iter() {
            let (nd, s) = create(cur, k).expect("mask checked");
            cur = nd;
            sign *= s;
        }
        f(d, cur as usize, sign);
    }
}

/// In-place `exp(iθT)` on a raw amplitude slice of length `2^n`.
pub(crate) fn rotate(amps: &mut [Complex64], gen: &ExcitationGenerator, theta: f64) {
    if theta == 0.0 {
        return;
    }
    let n = amps.len().trailing_zeros() as usize;
    let (s, c) = theta.sin_cos();
    for_each_pair(n, gen, |d, d2, sigma| {
        let a = amps[d];
        let b = amps[d2];
        amps[d] = a * c + b * (sigma * s);
        amps[d2] = b * c - a * (sigma * s);
    });
}

/// `out += T|amps⟩`.
pub(crate) fn generator_into(amps: &[Complex64], gen: &ExcitationGenerator, out: &mut [Complex64]) {
    let n = amps.len().trailing_zeros() as usize;
    for_each_pair(n, gen, |d, d2, sigma| {
        out[d2] += Complex64::new(0.0, sigma) * amps[d];
        out[d] += Complex64::new(0.0, -sigma) * amps[d2];
    });
}

/// `⟨λ|T|ψ⟩` without materializing `T|ψ⟩`.
pub(crate) fn generator_matrix_element(
    lambda: &[Complex64],
    psi: &[Complex64],
    gen: &ExcitationGenerator,
) -> Complex64 {
    let n = psi.len().trailing_zeros() as usize;
    let mut acc = ZERO;
    for_each_pair(n, gen, |d, d2, sigma| {
        acc += lambda[d2].conj() * Complex64::new(0.0, sigma) * psi[d];
        acc += lambda[d].conj() * Complex64::new(0.0, -sigma) * psi[d2];
    });
    acc
}

/// Tensor product of fixed-particle-number factors.
///
/// Each factor's local bit `j` lives on global mode `block[j]`. The composite
/// determinant is the concatenation of the factor creation strings in list
/// order, reordered to ascending global order.
pub fn tensor_embed(factors: &[(&Statevector, &[usize])], n_qubits: usize) -> Result<Statevector> {
    let mut used = 0u64;
    for (block_id, (state, block)) in factors.iter().enumerate() {
        if state.n_qubits() != block.len() {
            return Err(Error::DimensionMismatch {
                expected: block.len(),
                found: state.n_qubits(),
            });
        }
        for &m in block.iter() {
            if m >= n_qubits {
                return Err(Error::ModeOutOfRange {
                    index: m,
                    n_modes: n_qubits,
                });
            }
            if used & (1 << m) != 0 {
                return Err(Error::InvalidPartition(format!("mode {m} appears in two blocks")));
            }
            used |= 1 << m;
        }
        if state.norm_sqr() > 0.0 && state.particle_number().is_none() {
            return Err(Error::MixedParticleNumber { block: block_id });
        }
    }
    if used.count_ones() as usize != n_qubits {
        return Err(Error::InvalidPartition("blocks do not cover the register".into()));
    }

    let mut out = Statevector::zeros(n_qubits)?;
    let supports: Vec<Vec<(u64, Complex64)>> = factors.iter().map(|(s, _)| s.support().collect()).collect();
    if supports.iter().any(|s| s.is_empty()) {
        return Ok(out);
    }
    let mut cursor = vec![0usize; factors.len()];
    let mut seq = Vec::with_capacity(n_qubits);
    loop {
        let mut amp = Complex64::new(1.0, 0.0);
        let mut global = 0u64;
        seq.clear();
        for (k, (_, block)) in factors.iter().enumerate() {
            let (d, a) = supports[k][cursor[k]];
            amp *= a;
            for j in occupied(d) {
                seq.push(block[j]);
                global |= 1 << block[j];
            }
        }
        out.amplitudes[global as usize] += amp * sort_parity(&seq);

        let mut k = factors.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            cursor[k] += 1;
            if cursor[k] < supports[k].len() {
                break;
            }
            cursor[k] = 0;
        }
    }
}

/// Single-particle mode relabelling with per-mode phases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModePermutation {
    target: Vec<usize>,
    phase: Vec<Complex64>,
}

impl ModePermutation {
    pub fn new(target: Vec<usize>, phase: Vec<Complex64>) -> Result<Self> {
        if target.len() != phase.len() {
            return Err(Error::InvalidPermutation("target and phase lengths differ".into()));
        }
        let mut seen = vec![false; target.len()];
        for &t in &target {
            if t >= target.len() || seen[t] {
                return Err(Error::InvalidPermutation(format!("not a bijection at {t}")));
            }
            seen[t] = true;
        }
        if phase.iter().any(|p| (p.norm() - 1.0).abs() > 1e-12) {
            return Err(Error::InvalidPermutation("phase without unit modulus".into()));
        }
        Ok(Self { target, phase })
    }

    pub fn from_target(target: Vec<usize>) -> Result<Self> {
        let n = target.len();
        Self::new(target, vec![Complex64::new(1.0, 0.0); n])
    }

    pub fn identity(n: usize) -> Self {
        Self {
            target: (0..n).collect(),
            phase: vec![Complex64::new(1.0, 0.0); n],
        }
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    pub fn target(&self) -> &[usize] {
        &self.target
    }

    pub fn phase(&self) -> &[Complex64] {
        &self.phase
    }

    /// Image of a determinant, with reorder parity and phases folded in.
    pub fn map_det(&self, d: u64) -> (u64, Complex64) {
        let mut seq = Vec::with_capacity(d.count_ones() as usize);
        let mut out = 0u64;
        let mut ph = Complex64::new(1.0, 0.0);
        for i in occupied(d) {
            let t = self.target[i];
            seq.push(t);
            out |= 1 << t;
            ph *= self.phase[i];
        }
        (out, ph * sort_parity(&seq))
    }

    pub fn inverse(&self) -> Self {
        let mut target = vec![0; self.target.len()];
        let mut phase = vec![Complex64::new(1.0, 0.0); self.target.len()];
        for (i, &t) in self.target.iter().enumerate() {
            target[t] = i;
            phase[t] = self.phase[i].conj();
        }
        Self { target, phase }
    }

    /// `self` after `first`.
    pub fn compose(&self, first: &ModePermutation) -> Result<Self> {
        if self.len() != first.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: first.len(),
            });
        }
        let target = first.target.iter().map(|&t| self.target[t]).collect();
        let phase = first
            .target
            .iter()
            .zip(&first.phase)
            .map(|(&t, p)| p * self.phase[t])
            .collect();
        Ok(Self { target, phase })
    }

    /// Restriction to a block: local index `j` of `from` maps into local
    /// indices of `to`. Fails unless the image of `from` is exactly `to`.
    pub fn restrict(&self, from: &[usize], to: &[usize]) -> Result<Self> {
        let mut target = Vec::with_capacity(from.len());
        let mut phase = Vec::with_capacity(from.len());
        for &g in from {
            let img = self.target[g];
            let j = to
                .iter()
                .position(|&m| m == img)
                .ok_or_else(|| Error::InvalidPermutation(format!("mode {g} leaves the target block")))?;
            target.push(j);
            phase.push(self.phase[g]);
        }
        Self::new(target, phase)
    }
}
