use super::hamiltonian::Hamiltonian;
use super::modes::ModeTable;
use crate::error::{Error, Result};

/// Open Hubbard chain of `n_sites` sites: hopping `-t` on every bond except the
/// central one, which carries `-t_m`, plus `U n↑ n↓` on each site.
pub fn build_fh(n_sites: usize, t: f64, t_m: f64, u: f64) -> Result<Hamiltonian> {
    if n_sites < 2 || !n_sites.is_multiple_of(2) {
        return Err(Error::InvalidModel(format!(
            "number of sites must be even and at least 2, got {n_sites}"
        )));
    }
    let modes = ModeTable::hubbard(n_sites)?;
    let centre = n_sites / 2 - 1;
    let mut one = Vec::new();
    for i in 0..n_sites - 1 {
        let hop = if i == centre { t_m } else { t };
        for spin in 0..2 {
            one.push((2 * i + spin, 2 * (i + 1) + spin, -hop));
        }
    }
    let two: Vec<_> = (0..n_sites).map(|i| (2 * i, 2 * i + 1, 2 * i, 2 * i + 1, u)).collect();
    Hamiltonian::new(modes, &one, &two)
}
