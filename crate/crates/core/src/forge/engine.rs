use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::state::{Derivation, ForgedState};
use crate::adapt::{metrics, IterationRecord};
use crate::error::{Error, Result};
use crate::fermion::{ExcitationGenerator, Hamiltonian};
use crate::optimize::{minimize, BfgsOptions};
use crate::oracle::{GroundState, SectorMatrix};
use crate::resources::ops_cnots;
use crate::schmidt::extract;
use crate::statevector::{generator_matrix_element, inner_slices, rotate, sort_parity, Statevector};
use crate::tolerance;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForgeOptions {
    pub max_iterations: usize,
    pub gradient_tol: f64,
    /// Stop once the infidelity drops below this value.
    pub infidelity_target: Option<f64>,
    /// Stop once the infidelity is within this relative margin of the
    /// Schmidt bound, when the state carries one.
    pub bound_rel_tol: Option<f64>,
    /// Full re-optimization every `lazy_every` iterations, only the newest
    /// parameter otherwise.
    pub lazy_every: usize,
    /// Every `exclude_every`-th iteration the deepest circuit is skipped in
    /// selection; 0 disables.
    pub exclude_every: usize,
    pub bfgs: BfgsOptions,
    pub record_timing: bool,
}

impl Default for ForgeOptions {
    fn default() -> Self {
        Self::edef()
    }
}

impl ForgeOptions {
    pub fn adapt() -> Self {
        Self {
            max_iterations: 100,
            gradient_tol: 1e-6,
            infidelity_target: Some(1e-5),
            bound_rel_tol: None,
            lazy_every: 1,
            exclude_every: 0,
            bfgs: BfgsOptions::default(),
            record_timing: false,
        }
    }

    pub fn edef() -> Self {
        Self {
            infidelity_target: None,
            bound_rel_tol: Some(0.05),
            ..Self::adapt()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    InfidelityTarget,
    SchmidtBound,
    Gradient,
    MaxIterations,
}

/// Local block indices of every sector determinant and its reorder sign.
#[derive(Clone, Debug)]
struct Layout {
    local: Vec<Vec<usize>>,
    sign: Vec<f64>,
}

impl Layout {
    fn new(dets: &[u64], blocks: &[Vec<usize>]) -> Self {
        let mut local = vec![Vec::with_capacity(dets.len()); blocks.len()];
        let mut sign = Vec::with_capacity(dets.len());
        let mut seq = Vec::new();
        for &d in dets {
            seq.clear();
            for (k, b) in blocks.iter().enumerate() {
                local[k].push(extract(d, b));
                seq.extend(b.iter().copied().filter(|&m| d >> m & 1 == 1));
            }
            sign.push(sort_parity(&seq));
        }
        Self { local, sign }
    }
}

/// Everything derived from one parameter point.
#[derive(Clone, Debug)]
pub struct Evaluation {
    pub energy: f64,
    pub norm_sqr: f64,
    /// Sector components of the assembled state.
    pub psi: Vec<Complex64>,
    circuit_states: Vec<Statevector>,
    factor_states: Vec<Vec<Vec<Complex64>>>,
    term_vectors: Vec<Vec<Complex64>>,
    coefficients: Vec<f64>,
    phi: Vec<Complex64>,
}

/// Shared ADAPT loop for plain and forged ansätze.
pub struct Engine {
    matrix: SectorMatrix,
    ground: GroundState,
    layout: Layout,
    state: ForgedState,
    options: ForgeOptions,
    records: Vec<IterationRecord>,
}

impl Engine {
    pub fn new(h: &Hamiltonian, ground: GroundState, state: ForgedState, options: ForgeOptions) -> Result<Self> {
        let matrix = SectorMatrix::build(h, &ground.basis)?;
        Self::with_matrix(matrix, ground, state, options)
    }

    pub fn with_matrix(
        matrix: SectorMatrix,
        ground: GroundState,
        state: ForgedState,
        options: ForgeOptions,
    ) -> Result<Self> {
        if state.n_modes != ground.basis.n_modes() {
            return Err(Error::DimensionMismatch {
                expected: ground.basis.n_modes(),
                found: state.n_modes,
            });
        }
        let layout = Layout::new(ground.basis.dets(), &state.blocks);
        Ok(Self {
            matrix,
            ground,
            layout,
            state,
            options,
            records: Vec::new(),
        })
    }

    /// Continues from saved records; the state must be the one that produced them.
    pub fn resume(mut self, records: Vec<IterationRecord>) -> Self {
        self.records = records;
        self
    }

    pub fn state(&self) -> &ForgedState {
        &self.state
    }

    pub fn records(&self) -> &[IterationRecord] {
        &self.records
    }

    pub fn ground(&self) -> &GroundState {
        &self.ground
    }

    pub fn options(&self) -> &ForgeOptions {
        &self.options
    }

    pub fn into_parts(self) -> (ForgedState, Vec<IterationRecord>) {
        (self.state, self.records)
    }

    pub fn evaluate(&self, state: &ForgedState) -> Result<Evaluation> {
        let circuit_states = state.circuit_states()?;
        let coefficients = state.coefficients();
        let dim = self.layout.sign.len();
        let mut factor_states = Vec::with_capacity(state.terms.len());
        let mut term_vectors = Vec::with_capacity(state.terms.len());
        let mut psi = vec![Complex64::new(0.0, 0.0); dim];
        for (t, term) in state.terms.iter().enumerate() {
            let fs: Vec<Vec<Complex64>> = term
                .factors
                .iter()
                .map(|f| state.factor_state(f, &circuit_states).map(Statevector::into_amplitudes))
                .collect::<Result<_>>()?;
            let v: Vec<Complex64> = (0..dim)
                .map(|d| {
                    fs.iter()
                        .enumerate()
                        .fold(Complex64::new(self.layout.sign[d], 0.0), |acc, (k, f)| {
                            acc * f[self.layout.local[k][d]]
                        })
                })
                .collect();
            for (p, x) in psi.iter_mut().zip(&v) {
                *p += x * coefficients[t];
            }
            factor_states.push(fs);
            term_vectors.push(v);
        }
        let norm_sqr: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        if norm_sqr == 0.0 {
            return Err(Error::ZeroNorm);
        }
        let dev = (norm_sqr.sqrt() - 1.0).abs();
        if dev > tolerance::FORGED_NORM {
            return Err(Error::BrokenOrthogonality(dev));
        }
        let hpsi = self.matrix.matvec_complex(&psi);
        let energy = inner_slices(&psi, &hpsi).re / norm_sqr;
        let phi = hpsi
            .iter()
            .zip(&psi)
            .map(|(h, p)| (h - p * energy) / norm_sqr)
            .collect();
        Ok(Evaluation {
            energy,
            norm_sqr,
            psi,
            circuit_states,
            factor_states,
            term_vectors,
            coefficients,
            phi,
        })
    }

    /// `∂E/∂φ_c` pulled back to each circuit's local register.
    fn environments(&self, state: &ForgedState, ev: &Evaluation) -> Result<Vec<Vec<Complex64>>> {
        let mut env: Vec<Vec<Complex64>> = ev
            .circuit_states
            .iter()
            .map(|s| vec![Complex64::new(0.0, 0.0); s.dim()])
            .collect();
        let dim = self.layout.sign.len();
        for (t, term) in state.terms.iter().enumerate() {
            let c_t = ev.coefficients[t];
            if c_t == 0.0 {
                continue;
            }
            let fs = &ev.factor_states[t];
            for (k, factor) in term.factors.iter().enumerate() {
                let mut e = vec![Complex64::new(0.0, 0.0); fs[k].len()];
                for d in 0..dim {
                    let phi = ev.phi[d];
                    if phi.re == 0.0 && phi.im == 0.0 {
                        continue;
                    }
                    let mut rest = Complex64::new(c_t * self.layout.sign[d], 0.0);
                    for (k2, f) in fs.iter().enumerate() {
                        if k2 != k {
                            rest *= f[self.layout.local[k2][d]];
                        }
                    }
                    e[self.layout.local[k][d]] += phi * rest.conj();
                }
                let pulled = match &factor.transform {
                    None => e,
                    Some(p) => {
                        let n = p.len();
                        Statevector::from_amplitudes(n, e)?
                            .permute_modes(&p.inverse())?
                            .into_amplitudes()
                    }
                };
                for (a, b) in env[factor.circuit].iter_mut().zip(pulled) {
                    *a += b;
                }
            }
        }
        Ok(env)
    }

    /// Energy gradient with respect to the parameter vector, plus environments.
    pub fn gradient(&self, state: &ForgedState, ev: &Evaluation) -> Result<(Vec<f64>, Vec<Vec<Complex64>>)> {
        let env = self.environments(state, ev)?;
        let mut grad = vec![0.0; state.n_params()];
        let offsets = state.group_offsets();
        let per_circuit: Vec<Vec<f64>> = state
            .circuits
            .par_iter()
            .enumerate()
            .map(|(c, circ)| {
                let g = &state.groups[circ.group];
                let mut psi = ev.circuit_states[c].amplitudes().to_vec();
                let mut lam = env[c].clone();
                let mut out = vec![0.0; g.ops.len()];
                for j in (0..g.ops.len()).rev() {
                    out[j] = -2.0 * generator_matrix_element(&lam, &psi, &g.ops[j]).im;
                    rotate(&mut psi, &g.ops[j], -g.params[j]);
                    rotate(&mut lam, &g.ops[j], -g.params[j]);
                }
                out
            })
            .collect();
        for (c, circ) in state.circuits.iter().enumerate() {
            for (j, v) in per_circuit[c].iter().enumerate() {
                grad[offsets[circ.group] + j] += v;
            }
        }

        let lam = state.current_lambdas();
        let n_theta = state.n_theta();
        let dlam = state.lambda_beta_derivative();
        for (t, term) in state.terms.iter().enumerate() {
            let s = state.term_sign(t);
            let overlap: Complex64 = inner_slices(&ev.phi, &ev.term_vectors[t]);
            let de_dw = 2.0 * s * overlap.re;
            for (i, a) in term.angles.iter().enumerate() {
                let mut dw = lam[term.weight];
                for (i2, a2) in term.angles.iter().enumerate() {
                    let x = state.angles[a2.angle];
                    dw *= match (i2 == i, a2.sine) {
                        (true, true) => x.cos(),
                        (true, false) => -x.sin(),
                        (false, true) => x.sin(),
                        (false, false) => x.cos(),
                    };
                }
                grad[n_theta + a.angle] += de_dw * dw;
            }
            if state.lambda_mode == super::state::LambdaMode::Variational {
                let base = state.unsigned_weight(t, &lam);
                let dw = if lam[term.weight] != 0.0 {
                    base / lam[term.weight] * dlam[term.weight]
                } else {
                    let mut unit = lam.clone();
                    unit[term.weight] = 1.0;
                    state.unsigned_weight(t, &unit) * dlam[term.weight]
                };
                *grad.last_mut().expect("β slot") += de_dw * dw;
            }
        }
        Ok((grad, env))
    }

    /// Gradient of appending `exp(iθG)` to every circuit of `group`, at θ = 0.
    pub fn candidate_gradients(&self, state: &ForgedState, ev: &Evaluation, env: &[Vec<Complex64>]) -> Vec<Vec<f64>> {
        state
            .groups
            .iter()
            .enumerate()
            .map(|(gi, g)| {
                let members: Vec<usize> = (0..state.circuits.len())
                    .filter(|&c| state.circuits[c].group == gi)
                    .collect();
                g.pool
                    .par_iter()
                    .map(|gen| {
                        members
                            .iter()
                            .map(|&c| {
                                -2.0 * generator_matrix_element(&env[c], ev.circuit_states[c].amplitudes(), gen).im
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    /// Candidate gradient for a generator placed on a term's factor circuit.
    /// Factors of symmetry-derived terms are not simulated and are rejected.
    pub fn forged_gradient(&self, term: usize, block: usize, gen: &ExcitationGenerator) -> Result<f64> {
        let t = self
            .state
            .terms
            .get(term)
            .ok_or_else(|| Error::RejectedCandidate(format!("no term {term}")))?;
        if t.derivation != Derivation::Simulated {
            return Err(Error::RejectedCandidate(format!("term {term} is derived by symmetry")));
        }
        let f = t
            .factors
            .get(block)
            .ok_or_else(|| Error::RejectedCandidate(format!("no block {block}")))?;
        let group = self.state.circuits[f.circuit].group;
        let Some(pos) = self.state.groups[group].pool.iter().position(|g| g == gen) else {
            return Err(Error::RejectedCandidate(format!("{gen} is not in the circuit's pool")));
        };
        let ev = self.evaluate(&self.state)?;
        let (_, env) = self.gradient(&self.state, &ev)?;
        Ok(self.candidate_gradients(&self.state, &ev, &env)[group][pos])
    }

    fn energy_and_gradient(&self, state: &mut ForgedState, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        state.set_params(params)?;
        let ev = self.evaluate(state)?;
        let (g, _) = self.gradient(state, &ev)?;
        Ok((ev.energy, g))
    }

    fn record(
        &self,
        iter: usize,
        ev: &Evaluation,
        max_gradient: f64,
        pick: Option<(usize, usize)>,
        wall_ms: f64,
    ) -> Result<IterationRecord> {
        let (eps_e, infidelity) = metrics(&ev.psi, ev.energy, &self.ground)?;
        let per: Vec<(usize, u64)> = self
            .state
            .circuits
            .iter()
            .enumerate()
            .map(|(c, circ)| (c, ops_cnots(&self.state.groups[circ.group].ops)))
            .collect();
        Ok(IterationRecord {
            iter,
            energy: ev.energy,
            eps_e,
            infidelity,
            max_gradient,
            circuit_id: pick.map(|p| p.0),
            generator_id: pick.map(|p| p.1),
            cnot_max: per.iter().map(|p| p.1).max().unwrap_or(0),
            cnot_per_circuit: per,
            wall_ms,
        })
    }

    fn max_abs(grads: &[Vec<f64>]) -> f64 {
        grads.iter().flatten().fold(0.0, |m, g| m.max(g.abs()))
    }

    /// Fixes calibration signs and records iteration 0.
    pub fn initialize(&mut self) -> Result<()> {
        if !self.records.is_empty() {
            return Ok(());
        }
        let start = Instant::now();
        self.calibrate()?;
        let ev = self.evaluate(&self.state)?;
        let (_, env) = self.gradient(&self.state, &ev)?;
        let cg = self.candidate_gradients(&self.state, &ev, &env);
        let wall = self.wall(start);
        let rec = self.record(0, &ev, Self::max_abs(&cg), None, wall)?;
        self.records.push(rec);
        Ok(())
    }

    fn wall(&self, start: Instant) -> f64 {
        if self.options.record_timing {
            start.elapsed().as_secs_f64() * 1e3
        } else {
            0.0
        }
    }

    /// Image of sector components under a global mode permutation, or `None`
    /// when the permutation leaves the sector.
    fn permute_sector(&self, perm: &crate::statevector::ModePermutation, v: &[Complex64]) -> Option<Vec<Complex64>> {
        let basis = &self.ground.basis;
        let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
        for (i, &d) in basis.dets().iter().enumerate() {
            let (d2, ph) = perm.map_det(d);
            out[basis.index_of(d2)?] += v[i] * ph;
        }
        Some(out)
    }

    /// Picks each derived sign so that the source terms of its group and
    /// their images overlap the exact state constructively. Ties, e.g. a
    /// source orthogonal to the exact state at the reference, fall back to
    /// the sign implied by the exact state's symmetry eigenvalue.
    fn calibrate(&mut self) -> Result<()> {
        if self.state.sign_groups.is_empty() {
            return Ok(());
        }
        for g in &mut self.state.sign_groups {
            g.sign = 1.0;
        }
        let ev = self.evaluate(&self.state)?;
        let exact: Vec<Complex64> = self.ground.vector.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let lam = self.state.current_lambdas();
        let mut signs = Vec::with_capacity(self.state.sign_groups.len());
        for g in &self.state.sign_groups {
            let mut src = vec![Complex64::new(0.0, 0.0); exact.len()];
            for &t in &g.sources {
                let w = self.state.unsigned_weight(t, &lam) * self.state.term_sign(t);
                src.iter_mut().zip(&ev.term_vectors[t]).for_each(|(a, b)| *a += b * w);
            }
            let mut der = vec![Complex64::new(0.0, 0.0); exact.len()];
            for &t in &g.terms {
                let w = self.state.unsigned_weight(t, &lam);
                der.iter_mut().zip(&ev.term_vectors[t]).for_each(|(a, b)| *a += b * w);
            }
            let orbit = |s: f64| -> Vec<Complex64> { src.iter().zip(&der).map(|(a, b)| a + b * s).collect() };
            let (fp, fm) = (self.ground.fidelity(&orbit(1.0)), self.ground.fidelity(&orbit(-1.0)));
            let sign = if (fp - fm).abs() > 1e-12 {
                if fp > fm {
                    1.0
                } else {
                    -1.0
                }
            } else {
                let perm = &self.state.symmetries[g.symmetry].perm;
                match (self.permute_sector(perm, &exact), self.permute_sector(perm, &src)) {
                    (Some(px), Some(psrc)) => {
                        let eta = inner_slices(&exact, &px).re;
                        let eps = inner_slices(&der, &psrc).re;
                        if eta.abs() > 0.5 && eps.abs() > 1e-12 {
                            eta.signum() * eps.signum()
                        } else {
                            1.0
                        }
                    }
                    _ => 1.0,
                }
            };
            signs.push(sign);
        }
        for (g, s) in self.state.sign_groups.iter_mut().zip(signs) {
            g.sign = s;
        }
        log::debug!(
            "calibration signs {:?}",
            self.state.sign_groups.iter().map(|g| g.sign).collect::<Vec<_>>()
        );
        Ok(())
    }

    /// Why the loop should stop now, if it should.
    pub fn stop_reason(&self) -> Option<StopReason> {
        let last = self.records.last()?;
        if let Some(t) = self.options.infidelity_target {
            if last.infidelity < t {
                return Some(StopReason::InfidelityTarget);
            }
        }
        if let (Some(rel), Some(bound)) = (self.options.bound_rel_tol, self.state.schmidt_bound) {
            if last.infidelity <= bound * (1.0 + rel) + 1e-9 {
                return Some(StopReason::SchmidtBound);
            }
        }
        if last.max_gradient < self.options.gradient_tol {
            return Some(StopReason::Gradient);
        }
        if last.iter >= self.options.max_iterations {
            return Some(StopReason::MaxIterations);
        }
        None
    }

    /// One ADAPT iteration: select, append, re-optimize, record.
    pub fn step(&mut self) -> Result<()> {
        self.initialize()?;
        let start = Instant::now();
        let k = self.records.len();
        let prev_energy = self.records.last().expect("initialized").energy;
        let ev = self.evaluate(&self.state)?;
        let (_, env) = self.gradient(&self.state, &ev)?;
        let cg = self.candidate_gradients(&self.state, &ev, &env);

        let excluded =
            if self.options.exclude_every > 0 && k.is_multiple_of(self.options.exclude_every) && self.state.groups.len() > 1 {
                let mut deepest = 0;
                let mut depth = 0;
                for (gi, g) in self.state.groups.iter().enumerate() {
                    let c = ops_cnots(&g.ops);
                    if c > depth {
                        depth = c;
                        deepest = gi;
                    }
                }
                (depth > 0).then_some(deepest)
            } else {
                None
            };
        let mut pick: Option<(usize, usize, f64)> = None;
        for (gi, grads) in cg.iter().enumerate() {
            if Some(gi) == excluded {
                continue;
            }
            for (i, g) in grads.iter().enumerate() {
                if pick.is_none_or(|(_, _, b)| g.abs() > b + tolerance::GRADIENT_TIE) {
                    pick = Some((gi, i, g.abs()));
                }
            }
        }
        let (gi, gen_id, _) = pick.ok_or_else(|| Error::RejectedCandidate("no candidate generators".into()))?;
        let gen = self.state.groups[gi].pool[gen_id];
        self.state.groups[gi].ops.push(gen);
        self.state.groups[gi].params.push(0.0);

        let full = self.options.lazy_every <= 1 || k.is_multiple_of(self.options.lazy_every);
        let x0 = self.state.params();
        let new_index = self.state.group_offsets()[gi] + self.state.groups[gi].params.len() - 1;
        let free: Vec<usize> = if full { (0..x0.len()).collect() } else { vec![new_index] };
        let mut work = self.state.clone();
        let result = {
            let this = &*self;
            let base = x0.clone();
            let f = |y: &[f64]| -> Result<(f64, Vec<f64>)> {
                let mut x = base.clone();
                for (i, &v) in free.iter().zip(y) {
                    x[*i] = v;
                }
                let (e, g) = this.energy_and_gradient(&mut work, &x)?;
                Ok((e, free.iter().map(|&i| g[i]).collect()))
            };
            let y0: Vec<f64> = free.iter().map(|&i| x0[i]).collect();
            minimize(f, &y0, &self.options.bfgs)?
        };
        let mut x = x0;
        for (i, &v) in free.iter().zip(&result.x) {
            x[*i] = v;
        }
        self.state.set_params(&x)?;
        let ev = self.evaluate(&self.state)?;
        if ev.energy > prev_energy + 1e-9 {
            return Err(Error::OptimizerDiverged {
                increase: ev.energy - prev_energy,
            });
        }
        let (_, env) = self.gradient(&self.state, &ev)?;
        let cg = self.candidate_gradients(&self.state, &ev, &env);
        let circuit = self.state.group_representative(gi);
        let wall = self.wall(start);
        let rec = self.record(k, &ev, Self::max_abs(&cg), Some((circuit, gen_id)), wall)?;
        log::info!(
            "iter {k}: E = {:.12} I = {:.3e} grad = {:.3e} circuit {circuit} op {gen}",
            rec.energy,
            rec.infidelity,
            rec.max_gradient
        );
        self.records.push(rec);
        Ok(())
    }

    /// Runs until a stopping rule fires.
    pub fn run(&mut self) -> Result<StopReason> {
        self.initialize()?;
        loop {
            if let Some(r) = self.stop_reason() {
                return Ok(r);
            }
            self.step()?;
        }
    }
}
