//! Writes a two-shell toy interaction: per species two j=3/2 shells, pairing
//! inside each species and a quadrupole-quadrupole proton-neutron coupling.
//!
//! usage: toy_interaction <chi> [gap] [pairing]

use std::collections::BTreeMap;

const TWO_J: i32 = 3;

/// Spherical rank-2 tensor built from angular momentum matrices, component μ.
fn quadrupole(mu: i32) -> Vec<Vec<f64>> {
    let n = (TWO_J + 1) as usize;
    let j = TWO_J as f64 / 2.0;
    let m = |i: usize| -j + i as f64;
    let mut jz = vec![vec![0.0; n]; n];
    let mut jp = vec![vec![0.0; n]; n];
    let mut jm = vec![vec![0.0; n]; n];
    for i in 0..n {
        jz[i][i] = m(i);
        if i + 1 < n {
            let v = (j * (j + 1.0) - m(i) * (m(i) + 1.0)).sqrt();
            jp[i + 1][i] = v;
            jm[i][i + 1] = v;
        }
    }
    let mul = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>| {
        let mut c = vec![vec![0.0; n]; n];
        for i in 0..n {
            for k in 0..n {
                for l in 0..n {
                    c[i][l] += a[i][k] * b[k][l];
                }
            }
        }
        c
    };
    let add = |a: &Vec<Vec<f64>>, b: &Vec<Vec<f64>>, s: f64| {
        let mut c = a.clone();
        for i in 0..n {
            for k in 0..n {
                c[i][k] += s * b[i][k];
            }
        }
        c
    };
    let scale = |a: Vec<Vec<f64>>, s: f64| {
        a.into_iter()
            .map(|r| r.into_iter().map(|x| x * s).collect())
            .collect::<Vec<Vec<f64>>>()
    };
    match mu {
        2 => scale(mul(&jp, &jp), 0.5),
        -2 => scale(mul(&jm, &jm), 0.5),
        1 => scale(add(&mul(&jz, &jp), &mul(&jp, &jz), 1.0), -0.5),
        -1 => scale(add(&mul(&jz, &jm), &mul(&jm, &jz), 1.0), 0.5),
        0 => {
            let jj = j * (j + 1.0);
            let mut q = scale(mul(&jz, &jz), 3.0);
            for (i, row) in q.iter_mut().enumerate() {
                row[i] -= jj;
            }
            scale(q, 1.0 / 6f64.sqrt())
        }
        _ => unreachable!(),
    }
}

#[allow(clippy::needless_range_loop)]
fn main() {
    let args: Vec<f64> = std::env::args().skip(1).map(|a| a.parse().expect("number")).collect();
    let chi = args.first().copied().unwrap_or(0.3);
    let gap = args.get(1).copied().unwrap_or(1.5);
    let g = args.get(2).copied().unwrap_or(0.5);
    let per = (TWO_J + 1) as usize;
    // mode(species, shell, k), k indexes m = -j..j
    let mode = |sp: usize, sh: usize, k: usize| sp * 2 * per + sh * per + k;
    let mut v: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
    let mut add = |i: usize, j: usize, k: usize, l: usize, c: f64| {
        // c a†_i a†_j a_l a_k, stored with i<j, k<l
        let mut s = c;
        let (i, j) = if i < j {
            (i, j)
        } else {
            s = -s;
            (j, i)
        };
        let (k, l) = if k < l {
            (k, l)
        } else {
            s = -s;
            (l, k)
        };
        *v.entry((i, j, k, l)).or_insert(0.0) += s;
    };
    // pairing -g P†P per species over both shells
    let phase = |k: usize| {
        if ((TWO_J - (2 * k as i32 - TWO_J)) / 2) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    };
    for sp in 0..2 {
        for sh in 0..2 {
            for k in per / 2..per {
                for sh2 in 0..2 {
                    for k2 in per / 2..per {
                        let c = -g * phase(k) * phase(k2);
                        add(
                            mode(sp, sh, k),
                            mode(sp, sh, per - 1 - k),
                            mode(sp, sh2, k2),
                            mode(sp, sh2, per - 1 - k2),
                            c,
                        );
                    }
                }
            }
        }
    }
    // -chi Σ_μ (-1)^μ Q^p_μ Q^n_{-μ}, shells mixed with equal weight
    if chi != 0.0 {
        for mu in -2i32..=2 {
            let qp = quadrupole(mu);
            let qn = quadrupole(-mu);
            let sign = if mu % 2 == 0 { 1.0 } else { -1.0 };
            for (sa, sb) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                for (na, nb) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                    let w = if sa == sb { 1.0 } else { 0.5 } * if na == nb { 1.0 } else { 0.5 };
                    for a in 0..per {
                        for b in 0..per {
                            if qp[a][b] == 0.0 {
                                continue;
                            }
                            for c in 0..per {
                                for d in 0..per {
                                    if qn[c][d] == 0.0 {
                                        continue;
                                    }
                                    // a†_i a_k a†_j a_l = a†_i a†_j a_l a_k
                                    let val = -chi * sign * w * qp[a][b] * qn[c][d];
                                    add(mode(0, sa, a), mode(1, na, c), mode(0, sb, b), mode(1, nb, d), val);
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    println!("# toy interaction: two j=3/2 shells per species");
    println!("# pairing g={g}, shell gap={gap}, proton-neutron quadrupole chi={chi}");
    for sp in 0..2 {
        for sh in 0..2 {
            for k in 0..per {
                let m2 = 2 * k as i32 - TWO_J;
                let tz = if sp == 0 { -1 } else { 1 };
                let label = format!("{}{}", ["p", "n"][sp], ["a", "b"][sh]);
                println!("MODE {} {TWO_J} {m2} {tz} {label}", mode(sp, sh, k));
            }
        }
    }
    for sp in 0..2 {
        for sh in 0..2 {
            for k in 0..per {
                println!("SPE {} {}", mode(sp, sh, k), if sh == 0 { 0.0 } else { gap });
            }
        }
    }
    for ((i, j, k, l), x) in v {
        if x.abs() > 1e-14 {
            println!("TBME {i} {j} {k} {l} {x:.15}");
        }
    }
}
