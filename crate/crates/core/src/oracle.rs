//! Exact diagonalisation inside symmetry sectors.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fermion::{Hamiltonian, ModeTable, SectorSpec};
use crate::statevector::Statevector;
use crate::tolerance;

/// Sectors up to this dimension are diagonalised densely.
pub const DENSE_LIMIT: usize = 4000;

const KRYLOV_DIM: usize = 120;
const MAX_RESTARTS: usize = 200;

/// Ordered determinant basis of one symmetry sector.
#[derive(Clone, Debug)]
pub struct SectorBasis {
    n_modes: usize,
    spec: SectorSpec,
    dets: Vec<u64>,
    index: HashMap<u64, usize>,
}

/// All `k`-subsets of `modes` as bitmasks.
pub(crate) fn combinations(modes: &[usize], k: usize) -> Vec<u64> {
    fn rec(modes: &[usize], k: usize, acc: u64, out: &mut Vec<u64>) {
        if k == 0 {
            out.push(acc);
            return;
        }
        if modes.len() < k {
            return;
        }
        rec(&modes[1..], k - 1, acc | 1 << modes[0], out);
        rec(&modes[1..], k, acc, out);
    }
    let mut out = Vec::new();
    rec(modes, k, 0, &mut out);
    out
}

impl SectorBasis {
    pub fn new(table: &ModeTable, spec: &SectorSpec) -> Result<Self> {
        Self::restricted(table, spec, &(0..table.len()).collect::<Vec<_>>())
    }

    /// Sector basis over a subset of modes; determinants use the table's own
    /// (global) bit positions.
    pub fn restricted(table: &ModeTable, spec: &SectorSpec, modes: &[usize]) -> Result<Self> {
        let species: [Vec<usize>; 2] =
            [0, 1].map(|s| modes.iter().copied().filter(|&i| table.species(i) == s).collect());
        let a = combinations(&species[0], spec.counts[0]);
        let b = combinations(&species[1], spec.counts[1]);
        let mut dets = Vec::with_capacity(a.len() * b.len());
        for &x in &a {
            for &y in &b {
                let d = x | y;
                if table.in_sector(d, spec) {
                    dets.push(d);
                }
            }
        }
        if dets.is_empty() {
            return Err(Error::EmptySector(format!("{spec:?}")));
        }
        dets.sort_unstable();
        let index = dets.iter().enumerate().map(|(i, &d)| (d, i)).collect();
        Ok(Self {
            n_modes: table.len(),
            spec: spec.clone(),
            dets,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.dets.len()
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn spec(&self) -> &SectorSpec {
        &self.spec
    }

    pub fn dets(&self) -> &[u64] {
        &self.dets
    }

    pub fn index_of(&self, det: u64) -> Option<usize> {
        self.index.get(&det).copied()
    }

    /// Sector components of a full-register state.
    pub fn gather(&self, state: &Statevector) -> Vec<Complex64> {
        let a = state.amplitudes();
        self.dets.iter().map(|&d| a[d as usize]).collect()
    }

    /// Full-register state from sector components.
    pub fn scatter(&self, coeffs: &[Complex64]) -> Result<Statevector> {
        let mut s = Statevector::zeros(self.n_modes)?;
        let a = s.amplitudes_mut();
        for (&d, &c) in self.dets.iter().zip(coeffs) {
            a[d as usize] = c;
        }
        Ok(s)
    }
}

/// Hamiltonian restricted to a sector, compressed sparse rows.
#[derive(Clone, Debug)]
pub struct SectorMatrix {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SectorMatrix {
    pub fn build(h: &Hamiltonian, basis: &SectorBasis) -> Result<Self> {
        let rows: Vec<Result<Vec<(usize, f64)>>> = basis
            .dets()
            .par_iter()
            .map(|&d| {
                let mut row: BTreeMap<usize, f64> = BTreeMap::new();
                let mut escaped = false;
                h.for_each_connection(d, |d2, v| match basis.index_of(d2) {
                    Some(j) => *row.entry(j).or_insert(0.0) += v,
                    None => escaped |= v != 0.0,
                });
                if escaped {
                    return Err(Error::InvalidModel(format!(
                        "Hamiltonian connects determinant {d:#b} outside the sector"
                    )));
                }
                Ok(row.into_iter().filter(|(_, v)| *v != 0.0).collect())
            })
            .collect();
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in rows {
            for (j, v) in r? {
                cols.push(j);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        Ok(Self { row_ptr, cols, vals })
    }

    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .into_par_iter()
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| self.vals[k] * x[self.cols[k]])
                    .sum()
            })
            .collect()
    }

    pub fn matvec_complex(&self, x: &[Complex64]) -> Vec<Complex64> {
        (0..self.dim())
            .into_par_iter()
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .map(|k| x[self.cols[k]] * self.vals[k])
                    .sum()
            })
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                (self.row_ptr[i]..self.row_ptr[i + 1])
                    .find(|&k| self.cols[k] == i)
                    .map_or(0.0, |k| self.vals[k])
            })
            .collect()
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }
}

/// Lowest eigenpair of a sector Hamiltonian.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    /// Real sector components, unit norm.
    pub vector: Vec<f64>,
    pub basis: SectorBasis,
    pub residual: f64,
    /// Orthonormal basis of the lowest eigenspace (the ground vector first).
    pub eigenspace: Vec<Vec<f64>>,
    /// Next distinct eigenvalue when known.
    pub gap_energy: Option<f64>,
}

impl GroundState {
    pub fn degenerate(&self) -> bool {
        self.eigenspace.len() > 1
    }

    pub fn state(&self) -> Result<Statevector> {
        let c: Vec<Complex64> = self.vector.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.basis.scatter(&c)
    }

    /// Weight of `psi` (sector components) inside the ground eigenspace,
    /// normalised by `⟨ψ|ψ⟩`.
    pub fn fidelity(&self, psi: &[Complex64]) -> f64 {
        let nrm: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if nrm == 0.0 {
            return 0.0;
        }
        self.eigenspace
            .iter()
            .map(|e| {
                let ov: Complex64 = e.iter().zip(psi).map(|(x, y)| y * *x).sum();
                ov.norm_sqr()
            })
            .sum::<f64>()
            / nrm
    }

    pub fn fidelity_full(&self, state: &Statevector) -> f64 {
        let nrm = state.norm_sqr();
        let inside = self.basis.gather(state);
        let f = self.fidelity(&inside);
        let inside_nrm: f64 = inside.iter().map(|a| a.norm_sqr()).sum();
        if nrm == 0.0 {
            0.0
        } else {
            f * inside_nrm / nrm
        }
    }
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() + 1e-12 {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn residual(m: &SectorMatrix, e: f64, v: &[f64]) -> f64 {
    let hv = m.matvec(v);
    hv.iter().zip(v).map(|(a, b)| (a - e * b).powi(2)).sum::<f64>().sqrt()
}

/// Exact ground state of `h` in `basis`.
pub fn ground_state(h: &Hamiltonian, basis: &SectorBasis) -> Result<GroundState> {
    let m = SectorMatrix::build(h, basis)?;
    ground_state_of(&m, basis.clone())
}

pub fn ground_state_of(m: &SectorMatrix, basis: SectorBasis) -> Result<GroundState> {
    let n = m.dim();
    let (energy, mut eigenspace, gap_energy) = if n <= DENSE_LIMIT {
        let eig = SymmetricEigen::new(m.to_dense());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let e0 = eig.eigenvalues[order[0]];
        let mut space = Vec::new();
        let mut gap = None;
        for &k in &order {
            let e = eig.eigenvalues[k];
            if e - e0 < tolerance::DEGENERACY {
                space.push(eig.eigenvectors.column(k).iter().copied().collect::<Vec<f64>>());
            } else {
                gap = Some(e);
                break;
            }
        }
        (e0, space, gap)
    } else {
        let (e0, v0) = lanczos(m, &[])?;
        let mut space = vec![v0];
        let mut gap = None;
        while space.len() < 16 && space.len() < n {
            let (e, v) = lanczos(m, &space)?;
            if e - e0 < tolerance::DEGENERACY {
                space.push(v);
            } else {
                gap = Some(e);
                break;
            }
        }
        (e0, space, gap)
    };
    for v in eigenspace.iter_mut() {
        fix_sign(v);
    }
    let vector = eigenspace[0].clone();
    let res = residual(m, energy, &vector);
    if res >= tolerance::EIGEN_RESIDUAL {
        return Err(Error::NoConvergence {
            iterations: if n <= DENSE_LIMIT { 0 } else { MAX_RESTARTS },
            residual: res,
        });
    }
    if eigenspace.len() > 1 {
        log::warn!("ground state is {}-fold degenerate", eigenspace.len());
    }
    Ok(GroundState {
        energy,
        vector,
        basis,
        residual: res,
        eigenspace,
        gap_energy,
    })
}

/// Deterministic, symmetry-breaking start vector.
fn start_vector(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let mut z = (i as u64).wrapping_add(0x9E37_79B9_7F4A_7C15);
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z as f64 / u64::MAX as f64) - 0.5
        })
        .collect()
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    for _ in 0..2 {
        for u in against {
            let c = dot(u, v);
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// Restarted Lanczos with full reorthogonalisation, deflated against `lock`.
fn lanczos(m: &SectorMatrix, lock: &[Vec<f64>]) -> Result<(f64, Vec<f64>)> {
    let n = m.dim();
    let kdim = KRYLOV_DIM.min(n - lock.len());
    let mut v = start_vector(n);
    let mut last = f64::INFINITY;
    for _ in 0..MAX_RESTARTS {
        orthogonalize(&mut v, lock);
        let nv = norm(&v);
        if nv == 0.0 {
            return Err(Error::NoConvergence {
                iterations: 0,
                residual: f64::NAN,
            });
        }
        v.iter_mut().for_each(|x| *x /= nv);
        let mut q: Vec<Vec<f64>> = vec![v.clone()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..kdim {
            let mut w = m.matvec(&q[j]);
            let a = dot(&w, &q[j]);
            alpha.push(a);
            orthogonalize(&mut w, lock);
            orthogonalize(&mut w, &q);
            let b = norm(&w);
            if j + 1 == kdim || b < 1e-13 {
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            q.push(w);
        }
        let k = alpha.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let lo = (0..k)
            .min_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]))
            .expect("nonempty");
        let theta = eig.eigenvalues[lo];
        let y = eig.eigenvectors.column(lo);
        let mut x = vec![0.0; n];
        for (i, qi) in q.iter().take(k).enumerate() {
            x.iter_mut().zip(qi).for_each(|(a, b)| *a += y[i] * b);
        }
        orthogonalize(&mut x, lock);
        let nx = norm(&x);
        x.iter_mut().for_each(|a| *a /= nx);
        let res = residual(m, theta, &x);
        if res < tolerance::EIGEN_RESIDUAL * 0.1 || (res < tolerance::EIGEN_RESIDUAL && (last - theta).abs() < 1e-14) {
            return Ok((theta, x));
        }
        last = theta;
        v = x;
    }
    Err(Error::NoConvergence {
        iterations: MAX_RESTARTS,
        residual: residual(m, last, &v),
    })
}
