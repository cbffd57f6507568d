use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fermion::{ExcitationGenerator, SectorKey};
use crate::statevector::{tensor_embed, ModePermutation, Statevector};
use crate::tolerance;

/// How the λ coefficients enter the optimization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum LambdaMode {
    /// Fixed to the exact Schmidt values.
    #[default]
    Fixed,
    /// One free angle `β` with `λ₀ = cos β`, `λ₁ = sin β / √m₁`.
    Variational,
}

/// Operators and parameters shared by one or more circuits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TieGroup {
    pub block: usize,
    pub ops: Vec<ExcitationGenerator>,
    pub params: Vec<f64>,
    /// Candidate generators, local block indices, canonical order.
    pub pool: Vec<ExcitationGenerator>,
}

/// A simulated circuit: its group's unitary acting on a local reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub label: String,
    pub group: usize,
    pub reference: Statevector,
    pub sector: SectorKey,
}

/// Factor of a term on one block: a circuit state, optionally transformed
/// by a local mode map from the circuit's block onto this block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Factor {
    pub circuit: usize,
    pub transform: Option<ModePermutation>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Derivation {
    Simulated,
    Transformed { source: usize, symmetry: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AngleFactor {
    pub angle: usize,
    pub sine: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub label: String,
    pub weight: usize,
    pub angles: Vec<AngleFactor>,
    /// One factor per block, in block order.
    pub factors: Vec<Factor>,
    pub derivation: Derivation,
    pub sign_group: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Symmetry {
    pub name: String,
    pub perm: ModePermutation,
}

/// Terms obtained together from one symmetry image, sharing a calibration sign.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignGroup {
    pub symmetry: usize,
    pub sources: Vec<usize>,
    pub terms: Vec<usize>,
    pub sign: f64,
}

/// Weighted sum of block-product terms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForgedState {
    pub n_modes: usize,
    pub cuts: usize,
    /// Leaf blocks, ascending global modes each.
    pub blocks: Vec<Vec<usize>>,
    pub groups: Vec<TieGroup>,
    pub circuits: Vec<Circuit>,
    pub terms: Vec<Term>,
    pub lambdas: Vec<f64>,
    /// Number of terms carrying each λ.
    pub multiplicity: Vec<usize>,
    pub lambda_mode: LambdaMode,
    pub beta: f64,
    pub angles: Vec<f64>,
    pub symmetries: Vec<Symmetry>,
    pub sign_groups: Vec<SignGroup>,
    /// Best reachable infidelity for the kept Schmidt terms.
    pub schmidt_bound: Option<f64>,
}

/// Applies a local symmetry map to a factor state.
pub fn symmetry_transform(factor: &Statevector, transform: &ModePermutation) -> Result<Statevector> {
    factor.permute_modes(transform)
}

impl ForgedState {
    pub fn n_theta(&self) -> usize {
        self.groups.iter().map(|g| g.params.len()).sum()
    }

    pub fn n_params(&self) -> usize {
        self.n_theta() + self.angles.len() + usize::from(self.lambda_mode == LambdaMode::Variational)
    }

    /// Parameter vector: θ by group, then angles, then β.
    pub fn params(&self) -> Vec<f64> {
        let mut p: Vec<f64> = self.groups.iter().flat_map(|g| g.params.iter().copied()).collect();
        p.extend(&self.angles);
        if self.lambda_mode == LambdaMode::Variational {
            p.push(self.beta);
        }
        p
    }

    pub fn set_params(&mut self, p: &[f64]) -> Result<()> {
        if p.len() != self.n_params() {
            return Err(Error::DimensionMismatch {
                expected: self.n_params(),
                found: p.len(),
            });
        }
        let mut k = 0;
        for g in &mut self.groups {
            let n = g.params.len();
            g.params.copy_from_slice(&p[k..k + n]);
            k += n;
        }
        let na = self.angles.len();
        self.angles.copy_from_slice(&p[k..k + na]);
        k += na;
        if self.lambda_mode == LambdaMode::Variational {
            self.beta = p[k];
        }
        Ok(())
    }

    /// Offset of each group's θ block in the parameter vector.
    pub fn group_offsets(&self) -> Vec<usize> {
        let mut off = Vec::with_capacity(self.groups.len());
        let mut k = 0;
        for g in &self.groups {
            off.push(k);
            k += g.params.len();
        }
        off
    }

    pub fn current_lambdas(&self) -> Vec<f64> {
        match self.lambda_mode {
            LambdaMode::Fixed => self.lambdas.clone(),
            LambdaMode::Variational => {
                let m1 = self.multiplicity.get(1).copied().unwrap_or(1).max(1) as f64;
                vec![self.beta.cos(), self.beta.sin() / m1.sqrt()]
            }
        }
    }

    /// `∂λ_w/∂β` for each weight index.
    pub(crate) fn lambda_beta_derivative(&self) -> Vec<f64> {
        let m1 = self.multiplicity.get(1).copied().unwrap_or(1).max(1) as f64;
        vec![-self.beta.sin(), self.beta.cos() / m1.sqrt()]
    }

    pub fn term_sign(&self, t: usize) -> f64 {
        self.terms[t].sign_group.map_or(1.0, |g| self.sign_groups[g].sign)
    }

    /// Signed coefficient of each term.
    pub fn coefficients(&self) -> Vec<f64> {
        let lam = self.current_lambdas();
        (0..self.terms.len())
            .map(|t| self.unsigned_weight(t, &lam) * self.term_sign(t))
            .collect()
    }

    pub(crate) fn unsigned_weight(&self, t: usize, lam: &[f64]) -> f64 {
        let term = &self.terms[t];
        term.angles.iter().fold(lam[term.weight], |w, a| {
            let x = self.angles[a.angle];
            w * if a.sine { x.sin() } else { x.cos() }
        })
    }

    /// State of every circuit at the current parameters.
    pub fn circuit_states(&self) -> Result<Vec<Statevector>> {
        self.circuits
            .iter()
            .map(|c| {
                let g = &self.groups[c.group];
                let mut s = c.reference.clone();
                for (op, &th) in g.ops.iter().zip(&g.params) {
                    s.apply_excitation_in_place(op, th)?;
                }
                Ok(s)
            })
            .collect()
    }

    pub fn factor_state(&self, factor: &Factor, states: &[Statevector]) -> Result<Statevector> {
        let s = &states[factor.circuit];
        match &factor.transform {
            None => Ok(s.clone()),
            Some(p) => symmetry_transform(s, p),
        }
    }

    /// Full-register statevector of the forged state.
    pub fn assemble(&self) -> Result<Statevector> {
        let states = self.circuit_states()?;
        let coeffs = self.coefficients();
        let mut out = Statevector::zeros(self.n_modes)?;
        for (t, term) in self.terms.iter().enumerate() {
            let fs: Vec<Statevector> = term
                .factors
                .iter()
                .map(|f| self.factor_state(f, &states))
                .collect::<Result<_>>()?;
            let pairs: Vec<(&Statevector, &[usize])> =
                fs.iter().zip(&self.blocks).map(|(s, b)| (s, b.as_slice())).collect();
            let v = tensor_embed(&pairs, self.n_modes)?;
            out.axpy(Complex64::new(coeffs[t], 0.0), &v)?;
        }
        let dev = (out.norm() - 1.0).abs();
        if dev > tolerance::FORGED_NORM {
            return Err(Error::BrokenOrthogonality(dev));
        }
        Ok(out)
    }

    /// `Σ coefficient²` over all terms.
    pub fn coefficient_norm(&self) -> f64 {
        self.coefficients().iter().map(|c| c * c).sum()
    }

    /// Lowest-numbered circuit of each group.
    pub fn group_representative(&self, group: usize) -> usize {
        self.circuits
            .iter()
            .position(|c| c.group == group)
            .expect("every group has a circuit")
    }

    pub fn simulated_terms(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms
            .iter()
            .enumerate()
            .filter(|(_, t)| t.derivation == Derivation::Simulated)
            .map(|(i, _)| i)
    }

    /// Largest block size, i.e. qubits per circuit.
    pub fn qubits_per_circuit(&self) -> usize {
        self.blocks.iter().map(Vec::len).max().unwrap_or(0)
    }
}

/// One component of a two-term second-layer expansion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondLayerTerm {
    /// Particles in the (bottom, top) sub-blocks.
    pub distribution: (usize, usize),
    pub coefficient: f64,
}

/// Distributions of `n` particles over sub-blocks of the given capacities.
pub fn available_distributions(n: usize, bottom: usize, top: usize) -> Vec<(usize, usize)> {
    (0..=n)
        .rev()
        .map(|b| (b, n - b))
        .filter(|&(b, t)| b <= bottom && t <= top)
        .collect()
}

/// `b₁ = √λ cos α`, `b₂ = √λ sin α` over two distributions.
pub fn expand_second_layer(
    lambda: f64,
    distributions: [(usize, usize); 2],
    alpha: f64,
    n: usize,
    capacity: (usize, usize),
) -> Result<[SecondLayerTerm; 2]> {
    let avail = available_distributions(n, capacity.0, capacity.1);
    for d in distributions {
        if !avail.contains(&d) {
            return Err(Error::InvalidForging(format!(
                "distribution {d:?} infeasible for {n} particles in sub-blocks of {capacity:?}"
            )));
        }
    }
    if distributions[0] == distributions[1] {
        return Err(Error::InvalidForging(
            "expansion needs two distinct distributions".into(),
        ));
    }
    let r = lambda.sqrt();
    Ok([
        SecondLayerTerm {
            distribution: distributions[0],
            coefficient: r * alpha.cos(),
        },
        SecondLayerTerm {
            distribution: distributions[1],
            coefficient: r * alpha.sin(),
        },
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_protons_three_distributions() {
        assert_eq!(available_distributions(2, 6, 6), vec![(2, 0), (1, 1), (0, 2)]);
        assert_eq!(available_distributions(2, 1, 6), vec![(1, 1), (0, 2)]);
    }

    #[test]
    fn second_layer_normalization() {
        let e = expand_second_layer(0.81, [(2, 0), (0, 2)], 0.0, 2, (6, 6)).unwrap();
        assert_eq!(e[0].coefficient, 0.9);
        assert_eq!(e[1].coefficient, 0.0);
        for alpha in [0.1, 1.3, -2.0] {
            let e = expand_second_layer(0.3, [(2, 0), (1, 1)], alpha, 2, (6, 6)).unwrap();
            let n = (e[0].coefficient.powi(2) + e[1].coefficient.powi(2)).sqrt();
            assert!((n - 0.3f64.sqrt()).abs() < 1e-12);
        }
        assert!(expand_second_layer(0.3, [(3, 0), (1, 1)], 0.0, 2, (6, 6)).is_err());
    }
}
