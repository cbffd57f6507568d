//! Schmidt analysis of a statevector across a bipartition of its qubits.
//!
//! The amplitude matrix is indexed `M[a, b]`, with `a` the local index of the
//! A qubits and `b` that of the B qubits; local bit `j` of a block is the
//! block's `j`-th qubit in ascending global order.

use std::collections::BTreeMap;
use std::ops::Range;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fermion::{ModeTable, SectorKey};
use crate::statevector::Statevector;
use crate::tolerance;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Bipartition {
    a: Vec<usize>,
    b: Vec<usize>,
}

impl Bipartition {
    pub fn new(mut a: Vec<usize>, mut b: Vec<usize>, n_qubits: usize) -> Result<Self> {
        a.sort_unstable();
        b.sort_unstable();
        let mut seen = vec![false; n_qubits];
        for &q in a.iter().chain(&b) {
            if q >= n_qubits {
                return Err(Error::ModeOutOfRange {
                    index: q,
                    n_modes: n_qubits,
                });
            }
            if seen[q] {
                return Err(Error::InvalidPartition(format!("qubit {q} on both sides")));
            }
            seen[q] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidPartition("cut does not cover the register".into()));
        }
        Ok(Self { a, b })
    }

    /// First half of the register against the second half.
    pub fn halves(n_qubits: usize) -> Self {
        Self {
            a: (0..n_qubits / 2).collect(),
            b: (n_qubits / 2..n_qubits).collect(),
        }
    }

    pub fn a(&self) -> &[usize] {
        &self.a
    }

    pub fn b(&self) -> &[usize] {
        &self.b
    }

    pub fn n_qubits(&self) -> usize {
        self.a.len() + self.b.len()
    }

    pub(crate) fn split(&self, d: u64) -> (usize, usize) {
        (extract(d, &self.a), extract(d, &self.b))
    }
}

pub(crate) fn extract(d: u64, block: &[usize]) -> usize {
    block
        .iter()
        .enumerate()
        .fold(0usize, |acc, (j, &q)| acc | (((d >> q) & 1) as usize) << j)
}

pub(crate) fn deposit(local: usize, block: &[usize]) -> u64 {
    block
        .iter()
        .enumerate()
        .fold(0u64, |acc, (j, &q)| acc | (((local >> j) & 1) as u64) << q)
}

#[derive(Clone, Debug)]
pub struct SchmidtDecomposition {
    pub values: Vec<f64>,
    pub left: Vec<Statevector>,
    pub right: Vec<Statevector>,
    pub cut: Bipartition,
    /// A-side quantum numbers of each pair (sector-resolved decompositions only).
    pub keys: Vec<SectorKey>,
}

fn check_normalized(state: &Statevector) -> Result<()> {
    let n = state.norm();
    if (n - 1.0).abs() > tolerance::INPUT_NORM {
        return Err(Error::NotNormalized(n));
    }
    Ok(())
}

/// SVD of a compressed block: rows/cols list the local indices kept.
fn svd_block(
    entries: &[(usize, usize, Complex64)],
    rows: &[usize],
    cols: &[usize],
    cut: &Bipartition,
) -> Result<Vec<(f64, Statevector, Statevector)>> {
    let ri: BTreeMap<usize, usize> = rows.iter().enumerate().map(|(i, &r)| (r, i)).collect();
    let ci: BTreeMap<usize, usize> = cols.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let mut m = DMatrix::<Complex64>::zeros(rows.len(), cols.len());
    for &(a, b, v) in entries {
        m[(ri[&a], ci[&b])] += v;
    }
    let svd = m.svd(true, true);
    let u = svd.u.expect("u requested");
    let vt = svd.v_t.expect("v_t requested");
    let mut out = Vec::with_capacity(svd.singular_values.len());
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let mut l = Statevector::zeros(cut.a.len())?;
        for (k, &r) in rows.iter().enumerate() {
            l.amplitudes_mut()[r] = u[(k, i)];
        }
        let mut rv = Statevector::zeros(cut.b.len())?;
        for (k, &c) in cols.iter().enumerate() {
            rv.amplitudes_mut()[c] = vt[(i, k)];
        }
        out.push((s, l, rv));
    }
    Ok(out)
}

fn entries(state: &Statevector, cut: &Bipartition) -> Vec<(usize, usize, Complex64)> {
    state
        .support()
        .map(|(d, v)| {
            let (a, b) = cut.split(d);
            (a, b, v)
        })
        .collect()
}

fn sorted_unique(it: impl Iterator<Item = usize>) -> Vec<usize> {
    let mut v: Vec<usize> = it.collect();
    v.sort_unstable();
    v.dedup();
    v
}

/// Plain Schmidt decomposition.
pub fn decompose(state: &Statevector, cut: &Bipartition) -> Result<SchmidtDecomposition> {
    if state.n_qubits() != cut.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: cut.n_qubits(),
            found: state.n_qubits(),
        });
    }
    check_normalized(state)?;
    let e = entries(state, cut);
    let rows = sorted_unique(e.iter().map(|x| x.0));
    let cols = sorted_unique(e.iter().map(|x| x.1));
    let mut triples = svd_block(&e, &rows, &cols, cut)?;
    triples.sort_by(|x, y| y.0.total_cmp(&x.0));
    Ok(finish(triples, cut, Vec::new()))
}

fn finish(
    triples: Vec<(f64, Statevector, Statevector)>,
    cut: &Bipartition,
    keys: Vec<SectorKey>,
) -> SchmidtDecomposition {
    let mut values = Vec::with_capacity(triples.len());
    let mut left = Vec::with_capacity(triples.len());
    let mut right = Vec::with_capacity(triples.len());
    for (s, l, r) in triples {
        values.push(s);
        left.push(l);
        right.push(r);
    }
    SchmidtDecomposition {
        values,
        left,
        right,
        cut: cut.clone(),
        keys,
    }
}

/// Schmidt decomposition resolved by the A-side symmetry sector, so every
/// pair carries definite quantum numbers even inside degenerate clusters.
/// Requires a state of definite total quantum numbers.
pub fn decompose_by_sector(state: &Statevector, cut: &Bipartition, table: &ModeTable) -> Result<SchmidtDecomposition> {
    if state.n_qubits() != cut.n_qubits() || table.len() != cut.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: cut.n_qubits(),
            found: state.n_qubits(),
        });
    }
    check_normalized(state)?;
    let e = entries(state, cut);
    let mut groups: BTreeMap<SectorKey, Vec<(usize, usize, Complex64)>> = BTreeMap::new();
    for &(a, b, v) in &e {
        let key = table.key(deposit(a, &cut.a));
        groups.entry(key).or_default().push((a, b, v));
    }
    let mut col_owner: BTreeMap<usize, SectorKey> = BTreeMap::new();
    let mut tagged = Vec::new();
    for (key, block) in &groups {
        for &(_, b, _) in block {
            if let Some(k) = col_owner.insert(b, *key) {
                if k != *key {
                    return Err(Error::InvalidPartition(
                        "state mixes symmetry sectors across the cut".into(),
                    ));
                }
            }
        }
        let rows = sorted_unique(block.iter().map(|x| x.0));
        let cols = sorted_unique(block.iter().map(|x| x.1));
        for t in svd_block(block, &rows, &cols, cut)? {
            tagged.push((*key, t));
        }
    }
    tagged.sort_by(|x, y| y.1 .0.total_cmp(&x.1 .0).then(x.0.cmp(&y.0)));
    let keys = tagged.iter().map(|t| t.0).collect();
    Ok(finish(tagged.into_iter().map(|t| t.1).collect(), cut, keys))
}

impl SchmidtDecomposition {
    pub fn rank(&self) -> usize {
        self.values.iter().filter(|&&v| v > tolerance::SINGULAR_ZERO).count()
    }

    /// Von Neumann entropy in bits.
    pub fn entropy(&self) -> f64 {
        entropy(&self.values)
    }

    /// `1 − Σ_{i≤n} λ_i²`
    pub fn truncation_infidelity(&self, n: usize) -> f64 {
        truncation_infidelity(&self.values, n)
    }

    /// Index ranges of numerically degenerate singular values.
    pub fn clusters(&self) -> Vec<Range<usize>> {
        clusters(&self.values, tolerance::SINGULAR_CLUSTER)
    }

    /// `Σ λ_i |ψ_i⟩_A ⊗ |ψ_i⟩_B` over the first `n` pairs.
    pub fn reconstruct(&self, n: usize) -> Result<Statevector> {
        let mut out = Statevector::zeros(self.cut.n_qubits())?;
        let a_sup: Vec<Vec<(u64, Complex64)>> = self.left.iter().map(|s| s.support().collect()).collect();
        let b_sup: Vec<Vec<(u64, Complex64)>> = self.right.iter().map(|s| s.support().collect()).collect();
        let amps = out.amplitudes_mut();
        for i in 0..n.min(self.values.len()) {
            for &(a, x) in &a_sup[i] {
                let ga = deposit(a as usize, &self.cut.a);
                for &(b, y) in &b_sup[i] {
                    let gb = deposit(b as usize, &self.cut.b);
                    amps[(ga | gb) as usize] += x * y * self.values[i];
                }
            }
        }
        Ok(out)
    }
}

pub fn entropy(values: &[f64]) -> f64 {
    values
        .iter()
        .map(|l| l * l)
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.log2())
        .sum::<f64>()
        .max(0.0)
}

pub fn truncation_infidelity(values: &[f64], n: usize) -> f64 {
    let kept: f64 = values.iter().take(n).map(|l| l * l).sum();
    (1.0 - kept).max(0.0)
}

/// Groups consecutive descending values whose relative gap is below `rel`.
pub fn clusters(values: &[f64], rel: f64) -> Vec<Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        let split = i == values.len() || {
            let (x, y) = (values[i - 1], values[i]);
            if x <= tolerance::SINGULAR_ZERO {
                y > tolerance::SINGULAR_ZERO
            } else {
                (x - y).abs() / x >= rel
            }
        };
        if split {
            out.push(start..i);
            start = i;
        }
    }
    out
}
