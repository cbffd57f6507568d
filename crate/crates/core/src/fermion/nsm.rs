use std::collections::BTreeMap;

use super::hamiltonian::Hamiltonian;
use super::modes::{Mode, ModeKind, ModeTable, Side};
use crate::error::{Error, Result};

/// Parses an m-scheme interaction file.
///
/// ```text
/// MODE <index> <2j> <2m> <2tz> <label>
/// SPE <index> <energy>
/// TBME <i> <j> <k> <l> <value>
/// PARTITION <1|2> <index> <A|B>
/// ```
///
/// `#` starts a comment. `2tz` is -1 for protons and +1 for neutrons.
pub fn build_nsm(text: &str) -> Result<Hamiltonian> {
    let mut modes: BTreeMap<usize, (i32, i32, i32, String)> = BTreeMap::new();
    let mut spe: BTreeMap<usize, f64> = BTreeMap::new();
    let mut tbme: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
    let mut parts: Vec<(usize, u8, usize, Side)> = Vec::new();
    let mut warnings = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tok: Vec<&str> = body.split_whitespace().collect();
        let err = |message: String| Error::Parse { line, message };
        let int = |s: &str| {
            s.parse::<i64>()
                .map_err(|_| err(format!("expected an integer, found `{s}`")))
        };
        let idx = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| err(format!("expected a mode index, found `{s}`")))
        };
        let real = |s: &str| {
            s.parse::<f64>()
                .map_err(|_| err(format!("expected a number, found `{s}`")))
        };
        let arity = |k: usize| {
            if tok.len() != k {
                Err(err(format!(
                    "{} expects {} fields, found {}",
                    tok[0],
                    k - 1,
                    tok.len() - 1
                )))
            } else {
                Ok(())
            }
        };
        match tok[0] {
            "MODE" => {
                arity(6)?;
                let i = idx(tok[1])?;
                let (j, m, tz) = (int(tok[2])? as i32, int(tok[3])? as i32, int(tok[4])? as i32);
                if j < 0 || m.abs() > j || (j - m) % 2 != 0 {
                    return Err(err(format!("inconsistent quantum numbers 2j={j} 2m={m}")));
                }
                if tz.abs() != 1 {
                    return Err(err(format!("2tz must be -1 or +1, found {tz}")));
                }
                if modes.insert(i, (j, m, tz, tok[5].to_string())).is_some() {
                    return Err(err(format!("mode {i} declared twice")));
                }
            }
            "SPE" => {
                arity(3)?;
                let i = idx(tok[1])?;
                if spe.insert(i, real(tok[2])?).is_some() {
                    warnings.push(format!("line {line}: duplicate SPE for mode {i}, last one kept"));
                }
            }
            "TBME" => {
                arity(6)?;
                let key = (idx(tok[1])?, idx(tok[2])?, idx(tok[3])?, idx(tok[4])?);
                if tbme.insert(key, real(tok[5])?).is_some() {
                    warnings.push(format!("line {line}: duplicate TBME {key:?}, last one kept"));
                }
            }
            "PARTITION" => {
                arity(4)?;
                let layer = match tok[1] {
                    "1" => 1,
                    "2" => 2,
                    other => return Err(err(format!("partition layer must be 1 or 2, found `{other}`"))),
                };
                let side = match tok[3] {
                    "A" => Side::A,
                    "B" => Side::B,
                    other => return Err(err(format!("partition side must be A or B, found `{other}`"))),
                };
                parts.push((line, layer, idx(tok[2])?, side));
            }
            first if first.parse::<f64>().is_ok() => {
                return Err(err(
                    "numeric record outside a directive; JT-coupled files are not supported, convert to m-scheme"
                        .into(),
                ));
            }
            other => return Err(err(format!("unknown directive `{other}`"))),
        }
    }

    let n = modes.len();
    if n == 0 {
        return Err(Error::InvalidModel("interaction file declares no modes".into()));
    }
    if modes.keys().copied().ne(0..n) {
        return Err(Error::InvalidModel("mode indices must be 0..N-1 without gaps".into()));
    }
    let check = |line: usize, i: usize| {
        if i >= n {
            Err(Error::Parse {
                line,
                message: format!("mode {i} is not declared"),
            })
        } else {
            Ok(())
        }
    };
    for &i in spe.keys() {
        check(0, i)?;
    }

    let mut table: Vec<Mode> = modes
        .into_values()
        .enumerate()
        .map(|(i, (j, m, tz, label))| Mode {
            kind: ModeKind::Shell {
                label,
                twice_j: j,
                twice_m: m,
                twice_tz: tz,
            },
            energy: spe.get(&i).copied().unwrap_or(0.0),
            layer1: if tz < 0 { Side::A } else { Side::B },
            layer2: None,
        })
        .collect();

    // Lower half of each species by single-particle energy is the bottom block.
    for species in [-1, 1] {
        let mut idxs: Vec<usize> = (0..n)
            .filter(|&i| matches!(table[i].kind, ModeKind::Shell { twice_tz, .. } if twice_tz == species))
            .collect();
        idxs.sort_by(|&a, &b| table[a].energy.total_cmp(&table[b].energy).then(a.cmp(&b)));
        let half = idxs.len() / 2;
        for (rank, &i) in idxs.iter().enumerate() {
            table[i].layer2 = Some(if rank < half { Side::A } else { Side::B });
        }
    }
    for &(line, layer, i, side) in &parts {
        check(line, i)?;
        if layer == 1 {
            table[i].layer1 = side;
        } else {
            table[i].layer2 = Some(side);
        }
    }

    for w in &warnings {
        log::warn!("{w}");
    }
    let one: Vec<_> = spe.iter().map(|(&i, &e)| (i, i, e)).collect();
    let two: Vec<_> = tbme
        .iter()
        .map(|(&(i, j, k, l), &v)| {
            check(0, i.max(j).max(k).max(l))?;
            Ok((i, j, k, l, v))
        })
        .collect::<Result<_>>()?;
    let mut h = Hamiltonian::new(ModeTable::new(table)?, &one, &two)?;
    h.prepend_report(warnings);
    Ok(h)
}
