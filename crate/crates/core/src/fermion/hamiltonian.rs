use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;

use super::modes::ModeTable;
use crate::error::{Error, Result};
use crate::statevector::{annihilate, create, occupied, Statevector};

/// `H = Σ_{p≤q} h_pq (a†_p a_q + h.c.)' + Σ_{i<j,k<l} v̄_ijkl a†_i a†_j a_l a_k`,
/// where the primed sum counts `p = q` once as `h_pp n_p`. The two-body part
/// equals `¼ Σ_ijkl v̄_ijkl a†_i a†_j a_l a_k` for antisymmetric `v̄`.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    modes: ModeTable,
    one_body: Vec<(usize, usize, f64)>,
    two_body: BTreeMap<(usize, usize, usize, usize), f64>,
    one_by_annihilated: Vec<Vec<(usize, f64)>>,
    two_by_pair: Vec<Vec<(usize, usize, f64)>>,
    report: Vec<String>,
}

fn canonical_pair(a: usize, b: usize) -> (usize, usize, f64) {
    if a < b {
        (a, b, 1.0)
    } else {
        (b, a, -1.0)
    }
}

impl Hamiltonian {
    /// Builds from raw term lists. Two-body entries are antisymmetrized
    /// matrix elements `v̄_ijkl`; inconsistent antisymmetric or Hermitian
    /// partners are averaged and reported.
    pub fn new(
        modes: ModeTable,
        one_body: &[(usize, usize, f64)],
        two_body: &[(usize, usize, usize, usize, f64)],
    ) -> Result<Self> {
        let n = modes.len();
        let check = |i: usize| {
            if i >= n {
                Err(Error::ModeOutOfRange { index: i, n_modes: n })
            } else {
                Ok(())
            }
        };
        let mut report = Vec::new();

        let mut ob: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
        for &(p, q, h) in one_body {
            check(p)?;
            check(q)?;
            ob.entry((p.min(q), p.max(q))).or_default().push(h);
        }
        let mut one = Vec::with_capacity(ob.len());
        for ((p, q), vals) in ob {
            let v = average(&vals, &mut report, || {
                format!("one-body ({p},{q}) given inconsistently")
            });
            if v != 0.0 {
                one.push((p, q, v));
            }
        }

        let mut tb: BTreeMap<(usize, usize, usize, usize), Vec<f64>> = BTreeMap::new();
        for &(i, j, k, l, v) in two_body {
            for m in [i, j, k, l] {
                check(m)?;
            }
            if i == j || k == l {
                if v != 0.0 {
                    report.push(format!("v({i},{j},{k},{l}) = {v} violates antisymmetry, dropped"));
                }
                continue;
            }
            let (a, b, s1) = canonical_pair(i, j);
            let (c, d, s2) = canonical_pair(k, l);
            tb.entry((a, b, c, d)).or_default().push(s1 * s2 * v);
        }
        let mut antisym = BTreeMap::new();
        for (key, vals) in tb {
            let v = average(&vals, &mut report, || {
                format!("matrix elements for {key:?} are not antisymmetric; averaged")
            });
            antisym.insert(key, v);
        }
        let mut two = BTreeMap::new();
        for (&(a, b, c, d), &v) in &antisym {
            let partner = antisym.get(&(c, d, a, b)).copied();
            let v = match partner {
                Some(w) if (w - v).abs() > 1e-12 => {
                    if (a, b) < (c, d) {
                        report.push(format!("v({a},{b},{c},{d}) is not Hermitian; averaged"));
                    }
                    0.5 * (v + w)
                }
                _ => v,
            };
            if v != 0.0 {
                two.insert((a, b, c, d), v);
                two.insert((c, d, a, b), v);
            }
        }
        for r in &report {
            log::warn!("{r}");
        }
        Ok(Self::assemble(modes, one, two, report))
    }

    fn assemble(
        modes: ModeTable,
        one_body: Vec<(usize, usize, f64)>,
        two_body: BTreeMap<(usize, usize, usize, usize), f64>,
        report: Vec<String>,
    ) -> Self {
        let n = modes.len();
        let mut one_by_annihilated = vec![Vec::new(); n];
        for &(p, q, h) in &one_body {
            if p == q {
                one_by_annihilated[p].push((p, h));
            } else {
                one_by_annihilated[q].push((p, h));
                one_by_annihilated[p].push((q, h));
            }
        }
        let mut two_by_pair = vec![Vec::new(); n * n];
        for (&(i, j, k, l), &v) in &two_body {
            two_by_pair[k * n + l].push((i, j, v));
        }
        Self {
            modes,
            one_body,
            two_body,
            one_by_annihilated,
            two_by_pair,
            report,
        }
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    pub fn modes(&self) -> &ModeTable {
        &self.modes
    }

    pub fn modes_mut(&mut self) -> &mut ModeTable {
        &mut self.modes
    }

    pub fn one_body(&self) -> &[(usize, usize, f64)] {
        &self.one_body
    }

    /// Canonical two-body terms `(i<j, k<l) → v̄_ijkl`.
    pub fn two_body(&self) -> impl Iterator<Item = ((usize, usize, usize, usize), f64)> + '_ {
        self.two_body.iter().map(|(k, v)| (*k, *v))
    }

    pub(crate) fn prepend_report(&mut self, mut lines: Vec<String>) {
        lines.append(&mut self.report);
        self.report = lines;
    }

    /// Ingestion diagnostics (non-antisymmetric or non-Hermitian input).
    pub fn report(&self) -> &[String] {
        &self.report
    }

    /// Antisymmetric read-back of `v̄_ijkl`.
    pub fn vbar(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        if i == j || k == l {
            return 0.0;
        }
        let (a, b, s1) = canonical_pair(i, j);
        let (c, d, s2) = canonical_pair(k, l);
        s1 * s2 * self.two_body.get(&(a, b, c, d)).copied().unwrap_or(0.0)
    }

    /// Calls `f(d', h)` for every `H|d⟩ = Σ h |d'⟩` contribution.
    pub fn for_each_connection(&self, d: u64, mut f: impl FnMut(u64, f64)) {
        let n = self.n_modes();
        for s in occupied(d) {
            let Some((d1, s1)) = annihilate(d, s) else { continue };
            for &(r, h) in &self.one_by_annihilated[s] {
                if r == s {
                    f(d, h);
                } else if let Some((d2, s2)) = create(d1, r) {
                    f(d2, h * s1 * s2);
                }
            }
        }
        let occ: Vec<usize> = occupied(d).collect();
        for (x, &k) in occ.iter().enumerate() {
            for &l in &occ[x + 1..] {
                let terms = &self.two_by_pair[k * n + l];
                if terms.is_empty() {
                    continue;
                }
                let (d1, s1) = annihilate(d, k).expect("occupied");
                let (d2, s2) = annihilate(d1, l).expect("occupied");
                for &(i, j, v) in terms {
                    let Some((d3, s3)) = create(d2, j) else { continue };
                    let Some((d4, s4)) = create(d3, i) else { continue };
                    f(d4, v * s1 * s2 * s3 * s4);
                }
            }
        }
    }

    /// `⟨d|H|d⟩`
    pub fn diagonal(&self, d: u64) -> f64 {
        let mut e = 0.0;
        self.for_each_connection(d, |d2, h| {
            if d2 == d {
                e += h;
            }
        });
        e
    }

    /// `H|ψ⟩`
    pub fn apply(&self, state: &Statevector) -> Result<Statevector> {
        if state.n_qubits() != self.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: self.n_modes(),
                found: state.n_qubits(),
            });
        }
        let amps = state.amplitudes();
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        // H is real symmetric, so row d gathers from the connections of d.
        out.par_chunks_mut(1024).enumerate().for_each(|(c, chunk)| {
            for (o, slot) in chunk.iter_mut().enumerate() {
                let d = (c * 1024 + o) as u64;
                let mut acc = Complex64::new(0.0, 0.0);
                self.for_each_connection(d, |d2, h| acc += amps[d2 as usize] * h);
                *slot = acc;
            }
        });
        Statevector::from_amplitudes(state.n_qubits(), out)
    }

    /// Rayleigh quotient `⟨ψ|H|ψ⟩ / ⟨ψ|ψ⟩`.
    pub fn expectation(&self, state: &Statevector) -> Result<f64> {
        let nrm = state.norm_sqr();
        if nrm == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let hpsi = self.apply(state)?;
        Ok(state.inner(&hpsi)?.re / nrm)
    }

    /// Terms acting only inside `block`, renumbered to local indices.
    pub fn restrict(&self, block: &[usize]) -> Result<Hamiltonian> {
        let local = |g: usize| block.iter().position(|&b| b == g);
        let modes = self.modes.restrict(block)?;
        let one: Vec<_> = self
            .one_body
            .iter()
            .filter_map(|&(p, q, h)| Some((local(p)?, local(q)?, h)))
            .collect();
        let two: Vec<_> = self
            .two_body
            .iter()
            .filter_map(|(&(i, j, k, l), &v)| Some((local(i)?, local(j)?, local(k)?, local(l)?, v)))
            .collect();
        Hamiltonian::new(modes, &one, &two)
    }
}

fn average(vals: &[f64], report: &mut Vec<String>, msg: impl FnOnce() -> String) -> f64 {
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    if vals.iter().any(|v| (v - mean).abs() > 1e-12) {
        report.push(msg());
    }
    mean
}
