use super::generator::ExcitationGenerator;
use super::modes::ModeTable;
use crate::error::{Error, Result};

/// Symmetry-conserving generator pool in canonical order.
///
/// Hubbard tables get one- and two-body generators, shell-model tables
/// two-body only. Generators conserve the particle number of each species and
/// the total `J_z`. With `allowed`, only those modes are used.
pub fn build_pool(table: &ModeTable, allowed: Option<&[usize]>) -> Result<Vec<ExcitationGenerator>> {
    let modes: Vec<usize> = match allowed {
        Some(a) => {
            if a.is_empty() {
                return Err(Error::InvalidModel("empty mode subset for pool".into()));
            }
            let mut v = a.to_vec();
            v.sort_unstable();
            v.dedup();
            if let Some(&bad) = v.iter().find(|&&i| i >= table.len()) {
                return Err(Error::ModeOutOfRange {
                    index: bad,
                    n_modes: table.len(),
                });
            }
            v
        }
        None => (0..table.len()).collect(),
    };
    let charge = |ms: &[usize]| {
        let mut c = [0usize; 2];
        let mut m = 0;
        for &i in ms {
            c[table.species(i)] += 1;
            m += table.mode(i).twice_m();
        }
        (c, m)
    };

    let mut pool = Vec::new();
    if table.is_hubbard() {
        for (x, &r) in modes.iter().enumerate() {
            for &s in &modes[x + 1..] {
                if charge(&[r]) == charge(&[s]) {
                    pool.push(ExcitationGenerator::OneBody { r, s });
                }
            }
        }
    }
    let pairs: Vec<(usize, usize)> = modes
        .iter()
        .enumerate()
        .flat_map(|(x, &a)| modes[x + 1..].iter().map(move |&b| (a, b)))
        .collect();
    for (x, &(p, q)) in pairs.iter().enumerate() {
        for &(r, s) in &pairs[x + 1..] {
            if charge(&[p, q]) == charge(&[r, s]) {
                pool.push(ExcitationGenerator::TwoBody { p, q, r, s });
            }
        }
    }
    pool.sort();
    Ok(pool)
}
