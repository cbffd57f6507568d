use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::ModePermutation;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Spin {
    Up,
    Down,
}

/// Side of a cut.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    A,
    B,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum ModeKind {
    Hubbard {
        site: usize,
        spin: Spin,
    },
    Shell {
        label: String,
        twice_j: i32,
        twice_m: i32,
        /// -1 proton, +1 neutron
        twice_tz: i32,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub kind: ModeKind,
    pub energy: f64,
    pub layer1: Side,
    /// Sub-block inside the layer-1 block, when a second cut is defined.
    pub layer2: Option<Side>,
}

impl Mode {
    /// 0 for spin up / proton, 1 for spin down / neutron.
    pub fn species(&self) -> usize {
        match &self.kind {
            ModeKind::Hubbard { spin: Spin::Up, .. } => 0,
            ModeKind::Hubbard { spin: Spin::Down, .. } => 1,
            ModeKind::Shell { twice_tz, .. } => usize::from(*twice_tz > 0),
        }
    }

    pub fn twice_m(&self) -> i32 {
        match &self.kind {
            ModeKind::Hubbard { .. } => 0,
            ModeKind::Shell { twice_m, .. } => *twice_m,
        }
    }
}

/// Symmetry sector: particle count per species and an optional `2·J_z`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SectorSpec {
    pub counts: [usize; 2],
    pub twice_jz: Option<i32>,
}

impl SectorSpec {
    pub fn new(n0: usize, n1: usize) -> Self {
        Self {
            counts: [n0, n1],
            twice_jz: None,
        }
    }

    pub fn with_twice_jz(mut self, m: i32) -> Self {
        self.twice_jz = Some(m);
        self
    }

    pub fn particles(&self) -> usize {
        self.counts[0] + self.counts[1]
    }
}

/// Quantum numbers of a determinant restricted to a set of modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SectorKey {
    pub counts: [usize; 2],
    pub twice_m: i32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    modes: Vec<Mode>,
}

impl ModeTable {
    pub fn new(modes: Vec<Mode>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::InvalidModel("no modes".into()));
        }
        if modes.len() > 64 {
            return Err(Error::InvalidModel(format!(
                "{} modes exceed the 64-mode limit",
                modes.len()
            )));
        }
        for (i, m) in modes.iter().enumerate() {
            if let ModeKind::Shell {
                twice_j,
                twice_m,
                twice_tz,
                ..
            } = &m.kind
            {
                if *twice_j < 0 || twice_m.abs() > *twice_j || (twice_j - twice_m) % 2 != 0 {
                    return Err(Error::InvalidModel(format!(
                        "mode {i}: inconsistent 2j={twice_j}, 2m={twice_m}"
                    )));
                }
                if twice_tz.abs() != 1 {
                    return Err(Error::InvalidModel(format!("mode {i}: 2tz must be ±1")));
                }
            }
        }
        Ok(Self { modes })
    }

    /// Hubbard chain, mode `2i` = site `i` up, `2i+1` = site `i` down; left
    /// half of the chain on side A.
    pub fn hubbard(n_sites: usize) -> Result<Self> {
        let mut modes = Vec::with_capacity(2 * n_sites);
        for site in 0..n_sites {
            for spin in [Spin::Up, Spin::Down] {
                modes.push(Mode {
                    kind: ModeKind::Hubbard { site, spin },
                    energy: 0.0,
                    layer1: if site < n_sites / 2 { Side::A } else { Side::B },
                    layer2: None,
                });
            }
        }
        Self::new(modes)
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> &Mode {
        &self.modes[i]
    }

    pub fn is_hubbard(&self) -> bool {
        matches!(self.modes[0].kind, ModeKind::Hubbard { .. })
    }

    pub fn n_sites(&self) -> usize {
        self.modes
            .iter()
            .filter_map(|m| match m.kind {
                ModeKind::Hubbard { site, .. } => Some(site + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn species(&self, i: usize) -> usize {
        self.modes[i].species()
    }

    pub fn key(&self, det: u64) -> SectorKey {
        let mut counts = [0usize; 2];
        let mut m = 0;
        for i in crate::statevector::occupied(det) {
            counts[self.modes[i].species()] += 1;
            m += self.modes[i].twice_m();
        }
        SectorKey { counts, twice_m: m }
    }

    pub fn in_sector(&self, det: u64, sector: &SectorSpec) -> bool {
        let k = self.key(det);
        k.counts == sector.counts && sector.twice_jz.is_none_or(|m| m == k.twice_m)
    }

    pub fn layer1_block(&self, side: Side) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.modes[i].layer1 == side).collect()
    }

    pub fn layer2_block(&self, outer: Side, inner: Side) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.modes[i].layer1 == outer && self.modes[i].layer2 == Some(inner))
            .collect()
    }

    pub fn set_layer1(&mut self, i: usize, side: Side) {
        self.modes[i].layer1 = side;
    }

    pub fn set_layer2(&mut self, i: usize, side: Side) {
        self.modes[i].layer2 = Some(side);
    }

    /// Table of a sub-block, modes renumbered locally.
    pub fn restrict(&self, block: &[usize]) -> Result<Self> {
        Self::new(block.iter().map(|&i| self.modes[i].clone()).collect())
    }

    /// Hubbard spin exchange `(i, ↑) ↔ (i, ↓)`.
    pub fn spin_exchange(&self) -> Result<ModePermutation> {
        self.hubbard_map(|site, spin, _| {
            (
                site,
                match spin {
                    Spin::Up => Spin::Down,
                    Spin::Down => Spin::Up,
                },
            )
        })
    }

    /// Hubbard chain reflection `site i ↔ site N_s − 1 − i`.
    pub fn mirror(&self) -> Result<ModePermutation> {
        self.hubbard_map(|site, spin, n| (n - 1 - site, spin))
    }

    fn hubbard_map(&self, f: impl Fn(usize, Spin, usize) -> (usize, Spin)) -> Result<ModePermutation> {
        let n = self.n_sites();
        let mut target = Vec::with_capacity(self.len());
        for m in &self.modes {
            let ModeKind::Hubbard { site, spin } = m.kind else {
                return Err(Error::InvalidModel("Hubbard transform on a shell-model table".into()));
            };
            let (s2, sp2) = f(site, spin, n);
            target.push(2 * s2 + usize::from(sp2 == Spin::Down));
        }
        ModePermutation::from_target(target)
    }

    /// `|j, m⟩ → (−1)^{j−m} |j, −m⟩` on every shell-model mode.
    pub fn parity(&self) -> Result<ModePermutation> {
        let mut target = Vec::with_capacity(self.len());
        let mut phase = Vec::with_capacity(self.len());
        for (i, m) in self.modes.iter().enumerate() {
            let ModeKind::Shell {
                label,
                twice_j,
                twice_m,
                twice_tz,
            } = &m.kind
            else {
                return Err(Error::InvalidModel("parity transform on a Hubbard table".into()));
            };
            let partner = self
                .modes
                .iter()
                .position(|o| match &o.kind {
                    ModeKind::Shell {
                        label: l2,
                        twice_j: j2,
                        twice_m: m2,
                        twice_tz: t2,
                    } => l2 == label && j2 == twice_j && *m2 == -twice_m && t2 == twice_tz,
                    _ => false,
                })
                .ok_or_else(|| Error::InvalidModel(format!("mode {i} has no -m partner")))?;
            target.push(partner);
            phase.push(Complex64::new(parity_phase(*twice_j, *twice_m), 0.0));
        }
        ModePermutation::new(target, phase)
    }
}

/// `(−1)^{j−m}` from doubled quantum numbers.
pub fn parity_phase(twice_j: i32, twice_m: i32) -> f64 {
    if ((twice_j - twice_m) / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}
