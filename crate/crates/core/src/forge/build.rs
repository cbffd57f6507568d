//! Constructors for plain, one-cut and two-cut forged states.

use std::collections::BTreeSet;

use super::state::{
    available_distributions, AngleFactor, Circuit, Derivation, Factor, ForgedState, LambdaMode, SignGroup, Symmetry,
    Term, TieGroup,
};
use crate::error::{Error, Result};
use crate::fermion::{build_pool, Hamiltonian, ModeTable, SectorKey, SectorSpec, Side};
use crate::oracle::{GroundState, SectorBasis};
use crate::schmidt::{decompose, decompose_by_sector, deposit, extract, Bipartition};
use crate::statevector::{occupied, Statevector};
use crate::tolerance;

fn spec_of(table: &ModeTable, key: &SectorKey) -> SectorSpec {
    let s = SectorSpec::new(key.counts[0], key.counts[1]);
    if table.is_hubbard() {
        s
    } else {
        s.with_twice_jz(key.twice_m)
    }
}

/// Determinants of one sector of a local Hamiltonian, lowest diagonal energy
/// first; energies are compared after rounding to 1e-9, ties by bitmask.
pub fn lowest_determinants(local: &Hamiltonian, key: &SectorKey) -> Result<Vec<u64>> {
    let basis = SectorBasis::new(local.modes(), &spec_of(local.modes(), key))?;
    let mut dets: Vec<(i64, u64)> = basis
        .dets()
        .iter()
        .map(|&d| ((local.diagonal(d) * 1e9).round() as i64, d))
        .collect();
    dets.sort_unstable();
    Ok(dets.into_iter().map(|x| x.1).collect())
}

/// Incremental assembly of a [`ForgedState`].
struct Builder {
    st: ForgedState,
    locals: Vec<Hamiltonian>,
}

impl Builder {
    fn new(h: &Hamiltonian, cuts: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        if blocks.iter().any(Vec::is_empty) {
            return Err(Error::InvalidForging("empty block".into()));
        }
        let locals = blocks.iter().map(|b| h.restrict(b)).collect::<Result<_>>()?;
        Ok(Self {
            st: ForgedState {
                n_modes: h.n_modes(),
                cuts,
                blocks,
                groups: Vec::new(),
                circuits: Vec::new(),
                terms: Vec::new(),
                lambdas: Vec::new(),
                multiplicity: Vec::new(),
                lambda_mode: LambdaMode::Fixed,
                beta: 0.0,
                angles: Vec::new(),
                symmetries: Vec::new(),
                sign_groups: Vec::new(),
                schmidt_bound: None,
            },
            locals,
        })
    }

    fn group(&mut self, block: usize) -> Result<usize> {
        let pool = build_pool(self.locals[block].modes(), None)?;
        self.st.groups.push(TieGroup {
            block,
            ops: Vec::new(),
            params: Vec::new(),
            pool,
        });
        Ok(self.st.groups.len() - 1)
    }

    /// Circuit on `block` starting from the `rank`-th lowest determinant of `key`.
    fn circuit(&mut self, label: String, group: usize, key: SectorKey, rank: usize) -> Result<usize> {
        let block = self.st.groups[group].block;
        let dets = lowest_determinants(&self.locals[block], &key)?;
        let det = *dets.get(rank).ok_or_else(|| {
            Error::InvalidForging(format!(
                "sector {key:?} of block {block} has {} determinants, circuit {label} needs {}",
                dets.len(),
                rank + 1
            ))
        })?;
        self.circuit_from(label, group, key, Statevector::basis(self.st.blocks[block].len(), det)?)
    }

    fn circuit_from(&mut self, label: String, group: usize, key: SectorKey, reference: Statevector) -> Result<usize> {
        self.st.circuits.push(Circuit {
            label,
            group,
            reference,
            sector: key,
        });
        Ok(self.st.circuits.len() - 1)
    }

    fn sector_dim(&self, block: usize, key: &SectorKey) -> usize {
        let local = self.locals[block].modes();
        SectorBasis::new(local, &spec_of(local, key)).map_or(0, |b| b.dim())
    }

    fn term(&mut self, label: String, weight: usize, circuits: &[usize], angles: Vec<AngleFactor>) -> usize {
        self.st.terms.push(Term {
            label,
            weight,
            angles,
            factors: circuits
                .iter()
                .map(|&c| super::state::Factor {
                    circuit: c,
                    transform: None,
                })
                .collect(),
            derivation: Derivation::Simulated,
            sign_group: None,
        });
        self.st.terms.len() - 1
    }

    fn symmetry(&mut self, name: &str, perm: crate::statevector::ModePermutation) -> usize {
        self.st.symmetries.push(Symmetry {
            name: name.into(),
            perm,
        });
        self.st.symmetries.len() - 1
    }

    fn sign_group(&mut self, symmetry: usize) -> usize {
        self.st.sign_groups.push(SignGroup {
            symmetry,
            sources: Vec::new(),
            terms: Vec::new(),
            sign: 1.0,
        });
        self.st.sign_groups.len() - 1
    }

    /// Image of a term under a global symmetry, expressed with local maps.
    fn derive(&mut self, source: usize, sym: usize, sign_group: usize, label: String) -> Result<usize> {
        let perm = self.st.symmetries[sym].perm.clone();
        let src = self.st.terms[source].clone();
        let mut factors: Vec<Option<Factor>> = vec![None; self.st.blocks.len()];
        for (k, f) in src.factors.iter().enumerate() {
            let from = &self.st.blocks[k];
            let image: BTreeSet<usize> = from.iter().map(|&m| perm.target()[m]).collect();
            let k2 = self
                .st
                .blocks
                .iter()
                .position(|b| b.iter().copied().collect::<BTreeSet<_>>() == image)
                .ok_or_else(|| Error::InvalidForging(format!("symmetry does not map block {k} onto a block")))?;
            let local = perm.restrict(from, &self.st.blocks[k2])?;
            let transform = match &f.transform {
                None => local,
                Some(t0) => local.compose(t0)?,
            };
            factors[k2] = Some(Factor {
                circuit: f.circuit,
                transform: Some(transform),
            });
        }
        let factors = factors
            .into_iter()
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::InvalidForging("symmetry maps two blocks onto one".into()))?;
        self.st.terms.push(Term {
            label,
            weight: src.weight,
            angles: src.angles.clone(),
            factors,
            derivation: Derivation::Transformed { source, symmetry: sym },
            sign_group: Some(sign_group),
        });
        let t = self.st.terms.len() - 1;
        let g = &mut self.st.sign_groups[sign_group];
        if !g.sources.contains(&source) {
            g.sources.push(source);
        }
        g.terms.push(t);
        Ok(t)
    }

    fn finish(self) -> ForgedState {
        self.st
    }
}

/// Unforged ansatz: one block holding every mode. Without an explicit
/// reference the lowest-diagonal determinant of the sector is used.
pub fn single_block(h: &Hamiltonian, sector: &SectorSpec, reference: Option<Statevector>) -> Result<ForgedState> {
    let n = h.n_modes();
    let mut b = Builder::new(h, 0, vec![(0..n).collect()])?;
    let g = b.group(0)?;
    let reference = match reference {
        Some(r) => r,
        None => {
            let basis = SectorBasis::new(h.modes(), sector)?;
            let det = basis
                .dets()
                .iter()
                .copied()
                .min_by_key(|&d| ((h.diagonal(d) * 1e9).round() as i64, d))
                .expect("sector is not empty");
            Statevector::basis(n, det)?
        }
    };
    if reference.n_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: reference.n_qubits(),
        });
    }
    let key = reference
        .support()
        .next()
        .map(|(d, _)| h.modes().key(d))
        .ok_or(Error::ZeroNorm)?;
    let c = b.circuit_from("full".into(), g, key, reference)?;
    b.term("full".into(), 0, &[c], Vec::new());
    b.st.lambdas = vec![1.0];
    b.st.multiplicity = vec![1];
    Ok(b.finish())
}

fn normalized_lambdas(l0: f64, l1: f64, m: usize) -> [f64; 2] {
    let n = (l0 * l0 + m as f64 * l1 * l1).sqrt();
    [l0 / n, l1 / n]
}

/// Central-cut Fermi-Hubbard forging with one simulated λ₁ term and its
/// spin, mirror and combined images.
pub fn fh_one_cut(h: &Hamiltonian, ground: &GroundState) -> Result<ForgedState> {
    let table = h.modes();
    if !table.is_hubbard() {
        return Err(Error::InvalidForging("Hubbard forging needs a Hubbard model".into()));
    }
    let spec = ground.basis.spec();
    let [nu, nd] = spec.counts;
    if nu != nd || nu % 2 != 0 || nu == 0 {
        return Err(Error::InvalidForging(format!(
            "Hubbard forging needs equal, even spin populations, got ({nu}, {nd})"
        )));
    }
    let half = nu / 2;
    let left = table.layer1_block(Side::A);
    let right = table.layer1_block(Side::B);
    if left.len() / 2 < half + 1 {
        return Err(Error::InvalidForging("left block too small for the λ₁ sector".into()));
    }
    let key = |u: usize, d: usize| SectorKey {
        counts: [u, d],
        twice_m: 0,
    };

    let cut = Bipartition::new(left.clone(), right.clone(), table.len())?;
    let values = decompose(&ground.state()?, &cut)?.values;
    let s = |i: usize| values.get(i).copied().unwrap_or(0.0);
    let l1 = (1..5).map(s).sum::<f64>() / 4.0;
    let lam = normalized_lambdas(s(0), l1, 4);

    let mut b = Builder::new(h, 1, vec![left, right])?;
    let g: Vec<usize> = (0..4).map(|i| b.group(i % 2)).collect::<Result<_>>()?;
    let c0 = b.circuit("l(ud)".into(), g[0], key(half, half), 0)?;
    let c1 = b.circuit("r(ud)".into(), g[1], key(half, half), 0)?;
    let c2 = b.circuit("l(uud)".into(), g[2], key(half + 1, half), 0)?;
    let c3 = b.circuit("r(d)".into(), g[3], key(half - 1, half), 0)?;
    b.term("l(ud) r(ud)".into(), 0, &[c0, c1], Vec::new());
    let t1 = b.term("l(uud) r(d)".into(), 1, &[c2, c3], Vec::new());

    let spin = table.spin_exchange()?;
    let mirror = table.mirror()?;
    let both = mirror.compose(&spin)?;
    for (name, perm) in [("mirror", mirror), ("spin", spin), ("mirror-spin", both)] {
        let sym = b.symmetry(name, perm);
        let sg = b.sign_group(sym);
        b.derive(t1, sym, sg, format!("{name}(l(uud) r(d))"))?;
    }
    b.st.lambdas = lam.to_vec();
    b.st.multiplicity = vec![1, 4];
    b.st.schmidt_bound = Some(crate::schmidt::truncation_infidelity(&values, 5));
    Ok(b.finish())
}

/// 1-cut term plan for the shell model, shared by both forging depths.
#[derive(Clone, Debug)]
struct PlanTerm {
    label: String,
    /// Local keys of the proton and neutron factors.
    keys: [SectorKey; 2],
    weight: usize,
    /// Simulated terms: whether the factors are tied to the λ₀ term.
    tied: bool,
    /// Derived terms: source plan index.
    source: Option<usize>,
}

struct Plan {
    blocks: [Vec<usize>; 2],
    terms: Vec<PlanTerm>,
    lambdas: [f64; 2],
    multiplicity: usize,
    bound: f64,
}

fn complement_key(total: &SectorKey, a: &SectorKey) -> SectorKey {
    SectorKey {
        counts: [total.counts[0] - a.counts[0], total.counts[1] - a.counts[1]],
        twice_m: total.twice_m - a.twice_m,
    }
}

fn nsm_plan(h: &Hamiltonian, ground: &GroundState) -> Result<Plan> {
    let table = h.modes();
    if table.is_hubbard() {
        return Err(Error::InvalidForging(
            "shell-model forging needs a shell-model Hamiltonian".into(),
        ));
    }
    let spec = ground.basis.spec();
    let total = SectorKey {
        counts: spec.counts,
        twice_m: spec
            .twice_jz
            .ok_or_else(|| Error::InvalidForging("shell-model forging needs a fixed J_z".into()))?,
    };
    let a = table.layer1_block(Side::A);
    let bb = table.layer1_block(Side::B);
    let cut = Bipartition::new(a.clone(), bb.clone(), table.len())?;
    let dec = decompose_by_sector(&ground.state()?, &cut, table)?;
    // Species and m are per mode, so global and local keys agree.
    let local_keys = |ka: &SectorKey| -> [SectorKey; 2] { [*ka, complement_key(&total, ka)] };

    let key0 = dec.keys[0];
    let mut terms = vec![PlanTerm {
        label: "λ0".into(),
        keys: local_keys(&key0),
        weight: 0,
        tied: false,
        source: None,
    }];
    let clusters = dec.clusters();
    let mut multiplicity = 0;
    let mut l1 = 0.0;
    if clusters.len() > 1 && clusters[0].len() == 1 && dec.values[1] > tolerance::SINGULAR_ZERO {
        let range = clusters[1].clone();
        multiplicity = range.len();
        l1 = dec.values[range.clone()].iter().sum::<f64>() / multiplicity as f64;
        let mut keys: Vec<SectorKey> = dec.keys[range].to_vec();
        keys.sort_by_key(|k| (k.twice_m, k.counts));
        let before = keys.len();
        keys.dedup();
        if keys.len() != before {
            log::warn!("degenerate Schmidt cluster repeats a sector; using one term per sector");
        }
        for k in &keys {
            let mirror = SectorKey {
                counts: k.counts,
                twice_m: -k.twice_m,
            };
            let src = if k.twice_m > 0 {
                terms.iter().position(|t| t.keys[0] == mirror && t.weight == 1)
            } else {
                None
            };
            terms.push(PlanTerm {
                label: format!("λ1[2M={}]", k.twice_m),
                keys: local_keys(k),
                weight: 1,
                tied: src.is_none() && *k == key0,
                source: src,
            });
        }
    } else if clusters.first().is_some_and(|c| c.len() > 1) {
        return Err(Error::InvalidForging("leading Schmidt value is degenerate".into()));
    }
    let lambdas = normalized_lambdas(dec.values[0], l1, multiplicity);
    Ok(Plan {
        blocks: [a, bb],
        terms,
        lambdas,
        multiplicity,
        bound: dec.truncation_infidelity(1 + multiplicity),
    })
}

/// Proton/neutron forging of a shell-model ground state, λ₁ terms with
/// positive `M` obtained from their `−M` partners by the parity map.
pub fn nsm_one_cut(h: &Hamiltonian, ground: &GroundState) -> Result<ForgedState> {
    let plan = nsm_plan(h, ground)?;
    let mut b = Builder::new(h, 1, plan.blocks.to_vec())?;
    let tilde_groups = [b.group(0)?, b.group(1)?];
    let parity = b.symmetry("parity", h.modes().parity()?);
    let mut realized: Vec<usize> = Vec::new();
    for (i, pt) in plan.terms.iter().enumerate() {
        let t = if let Some(src) = pt.source {
            let sg = b.sign_group(parity);
            b.derive(realized[src], parity, sg, format!("parity({})", plan.terms[src].label))?
        } else {
            let mut cs = [0; 2];
            for side in 0..2 {
                let name = ["p", "n"][side];
                cs[side] = if i == 0 {
                    b.circuit(format!("{name}~"), tilde_groups[side], pt.keys[side], 0)?
                } else if pt.tied {
                    b.circuit(format!("{name}0"), tilde_groups[side], pt.keys[side], 1)?
                } else {
                    let g = b.group(side)?;
                    b.circuit(format!("{name}[{}]", pt.keys[side].twice_m), g, pt.keys[side], 0)?
                };
            }
            b.term(pt.label.clone(), pt.weight, &cs, Vec::new())
        };
        realized.push(t);
    }
    b.st.lambdas = plan.lambdas.to_vec();
    b.st.multiplicity = vec![1, plan.multiplicity];
    b.st.schmidt_bound = Some(plan.bound);
    Ok(b.finish())
}

/// One factor of a simulated 1-cut term, expanded over two leaf distributions.
struct Expansion {
    /// Per component: (bottom key, top key).
    components: [(SectorKey, SectorKey); 2],
}

/// Particle distributions of a 1-cut factor over its (bottom, top) leaves.
fn factor_distributions(side: usize, n: usize, cap: (usize, usize), tilde: bool) -> Result<[(usize, usize); 2]> {
    // A more than half filled species is distributed as holes; the top
    // sub-block then starts full.
    let total = cap.0 + cap.1;
    if n > total {
        return Err(Error::InvalidForging(format!("{n} particles over {total} modes")));
    }
    let holes = side == 1 && 2 * n > total;
    let k = if holes { total - n } else { n };
    let kd = if tilde {
        [(k, 0), (0, k)]
    } else {
        [(k, 0), (k.wrapping_sub(1), 1)]
    };
    let dists = if holes {
        // read as (top holes, bottom holes)
        kd.map(|(ht, hb)| (cap.0.wrapping_sub(hb), cap.1.wrapping_sub(ht)))
    } else {
        kd
    };
    let avail = available_distributions(n, cap.0, cap.1);
    for d in dists {
        if !avail.contains(&d) {
            return Err(Error::InvalidForging(format!(
                "distribution {d:?} infeasible for {n} particles over sub-blocks of {cap:?}"
            )));
        }
    }
    if dists[0] == dists[1] {
        return Err(Error::InvalidForging(format!(
            "{n} particles admit a single distribution"
        )));
    }
    Ok(dists)
}

/// Two-cut shell-model forging: each simulated 1-cut factor becomes a
/// two-component sum over proton (or neutron-hole) distributions between its
/// bottom and top sub-blocks.
pub fn nsm_two_cut(h: &Hamiltonian, ground: &GroundState) -> Result<ForgedState> {
    let plan = nsm_plan(h, ground)?;
    let table = h.modes();
    let leaves = vec![
        table.layer2_block(Side::A, Side::A),
        table.layer2_block(Side::A, Side::B),
        table.layer2_block(Side::B, Side::A),
        table.layer2_block(Side::B, Side::B),
    ];
    for side in 0..2 {
        let mut joined: Vec<usize> = leaves[2 * side].iter().chain(&leaves[2 * side + 1]).copied().collect();
        joined.sort_unstable();
        if joined != plan.blocks[side] {
            return Err(Error::InvalidForging(
                "second-layer blocks must split the first-layer blocks".into(),
            ));
        }
    }
    let mut b = Builder::new(h, 2, leaves.clone())?;
    let parity = b.symmetry("parity", table.parity()?);

    // Leaf keys of every simulated factor component.
    let expand = |pt: &PlanTerm, side: usize, tilde: bool| -> Result<Expansion> {
        let key = pt.keys[side];
        let n = key.counts[side];
        let (bot, top) = (&leaves[2 * side], &leaves[2 * side + 1]);
        let dists = factor_distributions(side, n, (bot.len(), top.len()), tilde)?;
        let spec = spec_of(table, &key);
        let basis = SectorBasis::restricted(table, &spec, &plan.blocks[side])?;
        let components = dists
            .iter()
            .map(|&(nb, _)| {
                let det = basis
                    .dets()
                    .iter()
                    .copied()
                    .filter(|&d| extract(d, bot).count_ones() as usize == nb)
                    .min_by_key(|&d| ((h.diagonal(d) * 1e9).round() as i64, d))
                    .ok_or_else(|| {
                        Error::InvalidForging(format!("no determinant with {nb} particles in the bottom block"))
                    })?;
                let kb = table.key(deposit(extract(det, bot), bot));
                let kt = table.key(deposit(extract(det, top), top));
                Ok((kb, kt))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Expansion {
            components: [components[0], components[1]],
        })
    };

    // Sub-term ids of each realized plan term.
    let mut realized: Vec<Vec<usize>> = Vec::new();
    // Leaf circuits of the λ₀ factors: per side, per component, (bottom, top).
    let mut tilde_circuits: [[(usize, usize); 2]; 2] = [[(0, 0); 2]; 2];
    let mut tilde_keys: [[(SectorKey, SectorKey); 2]; 2] = [[(key_zero(), key_zero()); 2]; 2];
    for (i, pt) in plan.terms.iter().enumerate() {
        if let Some(src) = pt.source {
            let sg = b.sign_group(parity);
            let mut subs = Vec::new();
            for (j, &t) in realized[src].clone().iter().enumerate() {
                subs.push(b.derive(t, parity, sg, format!("parity({})/{j}", plan.terms[src].label))?);
            }
            realized.push(subs);
            continue;
        }
        // Per side: per component, (bottom circuit, top circuit).
        let mut circuits = [[(0usize, 0usize); 2]; 2];
        let mut angle = [0usize; 2];
        for side in 0..2 {
            let name = ["p", "n"][side];
            let exp = expand(pt, side, i == 0)?;
            b.st.angles.push(0.0);
            angle[side] = b.st.angles.len() - 1;
            for (c, &(kb, kt)) in exp.components.iter().enumerate() {
                let leaf_b = 2 * side;
                let leaf_t = leaf_b + 1;
                let label = format!(
                    "{name}{}/{c}",
                    if i == 0 {
                        "~".to_string()
                    } else {
                        format!("[{}]", pt.keys[side].twice_m)
                    }
                );
                // Tie to the λ₀ factor when both leaves share sectors.
                let tie = if pt.tied {
                    tilde_keys[side].iter().position(|&(tb, tt)| tb == kb && tt == kt)
                } else {
                    None
                };
                let pair = if let Some(tc) = tie {
                    let (cb0, ct0) = tilde_circuits[side][tc];
                    let dim_b = b.sector_dim(leaf_b, &kb);
                    let dim_t = b.sector_dim(leaf_t, &kt);
                    if dim_b.max(dim_t) < 2 {
                        return Err(Error::InvalidForging(format!(
                            "{label}: no leaf can hold two orthogonal determinants"
                        )));
                    }
                    if dim_b >= dim_t {
                        let gb = b.st.circuits[cb0].group;
                        let cb = b.circuit(format!("{label}/b"), gb, kb, 1)?;
                        let gt = b.group(leaf_t)?;
                        (cb, b.circuit(format!("{label}/t"), gt, kt, 0)?)
                    } else {
                        let gb = b.group(leaf_b)?;
                        let cb = b.circuit(format!("{label}/b"), gb, kb, 0)?;
                        let gt = b.st.circuits[ct0].group;
                        (cb, b.circuit(format!("{label}/t"), gt, kt, 1)?)
                    }
                } else {
                    let gb = b.group(leaf_b)?;
                    let cb = b.circuit(format!("{label}/b"), gb, kb, 0)?;
                    let gt = b.group(leaf_t)?;
                    (cb, b.circuit(format!("{label}/t"), gt, kt, 0)?)
                };
                circuits[side][c] = pair;
                if i == 0 {
                    tilde_circuits[side][c] = pair;
                    tilde_keys[side][c] = (kb, kt);
                }
            }
        }
        let mut subs = Vec::new();
        for ip in 0..2 {
            for jn in 0..2 {
                let (pb, ptop) = circuits[0][ip];
                let (nb, ntop) = circuits[1][jn];
                let angles = vec![
                    AngleFactor {
                        angle: angle[0],
                        sine: ip == 1,
                    },
                    AngleFactor {
                        angle: angle[1],
                        sine: jn == 1,
                    },
                ];
                subs.push(b.term(
                    format!("{}/{ip}{jn}", pt.label),
                    pt.weight,
                    &[pb, ptop, nb, ntop],
                    angles,
                ));
            }
        }
        realized.push(subs);
    }
    b.st.lambdas = plan.lambdas.to_vec();
    b.st.multiplicity = vec![1, plan.multiplicity];
    b.st.schmidt_bound = Some(plan.bound);
    Ok(b.finish())
}

fn key_zero() -> SectorKey {
    SectorKey {
        counts: [0, 0],
        twice_m: 0,
    }
}

/// Forged state for the requested number of cuts, picking the model-specific
/// construction.
pub fn build_forged(h: &Hamiltonian, ground: &GroundState, cuts: usize) -> Result<ForgedState> {
    match (cuts, h.modes().is_hubbard()) {
        (0, _) => single_block(h, ground.basis.spec(), None),
        (1, true) => fh_one_cut(h, ground),
        (1, false) => nsm_one_cut(h, ground),
        (2, false) => nsm_two_cut(h, ground),
        (2, true) => Err(Error::InvalidForging(
            "two cuts are only defined for the shell model".into(),
        )),
        (c, _) => Err(Error::InvalidForging(format!("{c} cuts not supported"))),
    }
}

/// Occupied modes of a determinant, for labels and logs.
pub fn occupied_modes(det: u64) -> Vec<usize> {
    occupied(det).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fermion::build_fh;
    use crate::oracle::ground_state;

    fn fh(tm: f64, u: f64) -> (Hamiltonian, GroundState) {
        let h = build_fh(4, 1.0, tm, u).unwrap();
        let basis = SectorBasis::new(h.modes(), &SectorSpec::new(2, 2)).unwrap();
        let g = ground_state(&h, &basis).unwrap();
        (h, g)
    }

    #[test]
    fn fh_one_cut_structure() {
        let (h, g) = fh(1.0, 1.0);
        let st = fh_one_cut(&h, &g).unwrap();
        assert_eq!(st.terms.len(), 5);
        assert_eq!(st.circuits.len(), 4);
        assert_eq!(st.sign_groups.len(), 3);
        assert_eq!(st.simulated_terms().count(), 2);
        assert!((st.coefficient_norm() - 1.0).abs() < 1e-12);
        let bound = st.schmidt_bound.unwrap();
        assert!((bound - 0.018439).abs() < 1e-5, "{bound}");
        // all terms live in the (2,2) sector and are mutually orthogonal
        let psi = st.assemble().unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        assert_eq!(psi.particle_number(), Some(4));
    }

    #[test]
    fn lowest_determinant_of_dimer_half() {
        let h = build_fh(4, 1.0, 1.0, 4.0).unwrap();
        let local = h.restrict(&[0, 1, 2, 3]).unwrap();
        let k = SectorKey {
            counts: [1, 1],
            twice_m: 0,
        };
        let d = lowest_determinants(&local, &k).unwrap();
        assert_eq!(d.len(), 4);
        // doubly occupied sites cost U, so singly occupied come first
        assert_eq!(local.diagonal(d[0]), 0.0);
        assert_eq!(local.diagonal(d[3]), 4.0);
    }

    #[test]
    fn two_cuts_rejected_for_hubbard() {
        let (h, g) = fh(1.0, 1.0);
        assert!(build_forged(&h, &g, 2).is_err());
    }
}
