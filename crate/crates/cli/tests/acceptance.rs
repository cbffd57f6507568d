//! Acceptance suite. Each criterion is one test and prints one line:
//!
//! ```text
//! cargo test -p forge-cli --test acceptance -- --nocapture --test-threads 1
//! ```
//!
//! Tolerances are pinned below and never relaxed to make a check pass.

use std::fmt::Write as _;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use forge_core::adapt::{candidate_gradient, convergence_rate};
use forge_core::fermion::{build_fh, build_nsm, build_pool};
use forge_core::forge::{build_forged, single_block, Engine, StopReason};
use forge_core::oracle::{ground_state, GroundState};
use forge_core::resources::{generator_cnots, global_cnots};
use forge_core::schmidt::{decompose, decompose_by_sector};
use forge_core::{
    Bipartition, Complex64, ForgeOptions, ForgedState, Hamiltonian, IterationRecord, SectorBasis, SectorSpec, Side,
};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const TOY_PN: &str = include_str!("../../../data/toy_pn_qq.int");
const TOY_NO_PN: &str = include_str!("../../../data/toy_no_pn.int");

/// Reference rows for the 4-site chain, energies in units of `t`.
struct Row {
    tm: f64,
    u: f64,
    n_it0: usize,
    eps1: f64,
    inf1: f64,
    inf0: f64,
    r0: f64,
    r1: f64,
}

const TABLE: [Row; 6] = [
    Row {
        tm: 0.25,
        u: 1.0,
        n_it0: 16,
        inf0: 5.6e-6,
        r0: 0.74,
        eps1: 1.1e-4,
        inf1: 9.9e-5,
        r1: 0.61,
    },
    Row {
        tm: 1.0,
        u: 1.0,
        n_it0: 24,
        inf0: 8.0e-6,
        r0: 0.47,
        eps1: 1.9e-2,
        inf1: 1.9e-2,
        r1: 0.26,
    },
    Row {
        tm: 2.0,
        u: 1.0,
        n_it0: 19,
        inf0: 9.5e-6,
        r0: 0.58,
        eps1: 1.2e-1,
        inf1: 1.3e-1,
        r1: 0.13,
    },
    Row {
        tm: 0.25,
        u: 3.0,
        n_it0: 24,
        inf0: 9.4e-6,
        r0: 0.46,
        eps1: 1.5e-4,
        inf1: 1.4e-4,
        r1: 0.59,
    },
    Row {
        tm: 1.0,
        u: 3.0,
        n_it0: 31,
        inf0: 5.4e-6,
        r0: 0.35,
        eps1: 3.2e-2,
        inf1: 3.5e-2,
        r1: 0.22,
    },
    Row {
        tm: 2.0,
        u: 3.0,
        n_it0: 34,
        inf0: 3.7e-6,
        r0: 0.37,
        eps1: 3.8e-1,
        inf1: 5.6e-1,
        r1: 0.039,
    },
];
/// Every tabulated 1-cut run stopped after this many iterations.
const TABLE_N_IT1: usize = 14;

fn report(n: usize, checks: &[(String, bool)]) {
    let ok = checks.iter().all(|c| c.1);
    let mut line = format!("criterion {n:>2}: {}", if ok { "PASS" } else { "FAIL" });
    for (what, pass) in checks {
        let _ = write!(line, " | {}{what}", if *pass { "" } else { "FAILED " });
    }
    println!("{line}");
    assert!(ok, "{line}");
}

fn fh(tm: f64, u: f64) -> (Hamiltonian, GroundState) {
    let h = build_fh(4, 1.0, tm, u).unwrap();
    let basis = SectorBasis::new(h.modes(), &SectorSpec::new(2, 2)).unwrap();
    let g = ground_state(&h, &basis).unwrap();
    (h, g)
}

fn nsm(text: &str) -> (Hamiltonian, GroundState) {
    let h = build_nsm(text).unwrap();
    let basis = SectorBasis::new(h.modes(), &SectorSpec::new(2, 2).with_twice_jz(0)).unwrap();
    let g = ground_state(&h, &basis).unwrap();
    (h, g)
}

fn central_cut(h: &Hamiltonian) -> Bipartition {
    let t = h.modes();
    Bipartition::new(t.layer1_block(Side::A), t.layer1_block(Side::B), t.len()).unwrap()
}

struct Run {
    records: Vec<IterationRecord>,
    stop: StopReason,
    state: ForgedState,
    bound: Option<f64>,
    residual: f64,
}

fn run(h: &Hamiltonian, g: GroundState, st: ForgedState, opts: ForgeOptions) -> Run {
    let bound = st.schmidt_bound;
    let residual = g.residual;
    let mut e = Engine::new(h, g, st, opts).unwrap();
    let stop = e.run().unwrap();
    let (state, records) = e.into_parts();
    Run {
        records,
        stop,
        state,
        bound,
        residual,
    }
}

/// 0-cut and 1-cut runs for every table row, computed once.
fn fh_runs() -> &'static Vec<(Run, Run)> {
    static RUNS: OnceLock<Vec<(Run, Run)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        std::thread::scope(|s| {
            let handles: Vec<_> = TABLE
                .iter()
                .map(|row| {
                    s.spawn(move || {
                        let (h, g) = fh(row.tm, row.u);
                        let plain = single_block(&h, &SectorSpec::new(2, 2), None).unwrap();
                        let zero = run(&h, g.clone(), plain, ForgeOptions::adapt());
                        let forged = build_forged(&h, &g, 1).unwrap();
                        let one = run(&h, g, forged, ForgeOptions::edef());
                        (zero, one)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().unwrap()).collect()
        })
    })
}

#[test]
fn criterion_01_schmidt_structure() {
    let mut checks = Vec::new();
    let s_over = |tm: f64, u: f64| {
        let (h, g) = fh(tm, u);
        let d = decompose(&g.state().unwrap(), &central_cut(&h)).unwrap();
        (d.entropy() / 4.0, d)
    };
    let (s0, _) = s_over(0.0, 1.0);
    checks.push((format!("S(t_m=0) = {s0:.1e}"), s0.abs() < 1e-10));
    let (s2, _) = s_over(2.0, 1.0);
    checks.push((format!("S/Smax(2t) = {s2:.4}"), (s2 - 0.60).abs() <= 0.01));
    let (s100, _) = s_over(100.0, 1.0);
    checks.push((format!("S/Smax(100t) = {s100:.4}"), (s100 - 0.75).abs() <= 0.01));
    let mut worst_split: f64 = 0.0;
    for tm in [0.25, 1.0, 2.0] {
        for u in [1.0, 3.0] {
            let (_, d) = s_over(tm, u);
            let l = &d.values[1..5];
            let spread = l.iter().fold(0.0f64, |m, x| m.max((x - l[0]).abs()));
            worst_split = worst_split.max(spread);
        }
    }
    checks.push((format!("lambda_2..5 spread {worst_split:.1e}"), worst_split < 1e-8));
    let mut worst_i5: (f64, f64) = (0.0, 0.0);
    for k in 0..=20 {
        let tm = 0.1 * k as f64;
        let (_, d) = s_over(tm, 1.0);
        let i5 = d.truncation_infidelity(5);
        if i5 > worst_i5.1 {
            worst_i5 = (tm, i5);
        }
    }
    checks.push((
        format!("max I5 on t_m in [0,2t] = {:.4} at {:.1}", worst_i5.1, worst_i5.0),
        worst_i5.1 < 0.10,
    ));
    let (_, d) = s_over(1.0, 1.0);
    let i5 = d.truncation_infidelity(5);
    checks.push((format!("I5(t,t) = {i5:.4}"), i5 <= 0.01));
    report(1, &checks);
}

#[test]
fn criterion_02_adapt_reproduction() {
    let mut checks = Vec::new();
    for (row, (zero, _)) in TABLE.iter().zip(fh_runs()) {
        let last = zero.records.last().unwrap();
        let ratio = last.iter as f64 / row.n_it0 as f64;
        let ok = last.infidelity < 1e-5 && (1.0 / 1.7..=1.7).contains(&ratio) && last.eps_e < 1e-4;
        checks.push((
            format!(
                "({},{}) N_it {} vs {} I {:.1e} eps {:.1e}",
                row.tm, row.u, last.iter, row.n_it0, last.infidelity, last.eps_e
            ),
            ok,
        ));
    }
    report(2, &checks);
}

#[test]
fn criterion_03_edef_reproduction() {
    let mut checks = Vec::new();
    for (row, (_, one)) in TABLE.iter().zip(fh_runs()) {
        if row.tm > 1.0 {
            continue;
        }
        let last = one.records.last().unwrap();
        let bound = one.bound.unwrap();
        let within = |x: f64, y: f64| x <= 2.0 * y && y <= 2.0 * x;
        let ok = last.iter <= 20
            && (last.infidelity - bound).abs() <= 0.10 * bound
            && within(last.eps_e, row.eps1)
            && within(last.infidelity, row.inf1);
        checks.push((
            format!(
                "({},{}) N_it {} I {:.3e} bound {:.3e} eps {:.2e} [{:?}]",
                row.tm, row.u, last.iter, last.infidelity, bound, last.eps_e, one.stop
            ),
            ok,
        ));
    }
    let (h, g) = fh(0.0, 1.0);
    let st = build_forged(&h, &g, 1).unwrap();
    let r = run(&h, g, st, ForgeOptions::edef());
    let i = r.records.last().unwrap().infidelity;
    checks.push((format!("t_m=0 I {i:.1e}"), i < 1e-8));
    report(3, &checks);
}

/// Central difference of `f` at 0.
fn central(f: impl Fn(f64) -> f64) -> f64 {
    const H: f64 = 1e-5;
    (f(H) - f(-H)) / (2.0 * H)
}

/// Relative gap, with gradients below this floor compared absolutely.
const GRAD_FLOOR: f64 = 1e-3;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(GRAD_FLOOR)
}

#[test]
fn criterion_04_gradient_correctness() {
    let mut rng = StdRng::seed_from_u64(2024);
    let (h, g) = fh(1.0, 1.0);
    let pool = build_pool(h.modes(), None).unwrap();
    let mut worst_plain: f64 = 0.0;
    for _ in 0..200 {
        let c: Vec<Complex64> = (0..g.basis.dim())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let mut psi = g.basis.scatter(&c).unwrap();
        psi.normalize().unwrap();
        let gen = pool[rng.random_range(0..pool.len())];
        let an = candidate_gradient(&psi, &h, &gen).unwrap();
        let fd = central(|t| h.expectation(&psi.apply_excitation(&gen, t).unwrap()).unwrap());
        worst_plain = worst_plain.max(rel(an, fd));
    }
    let mut worst_forged: f64 = 0.0;
    let base = build_forged(&h, &g, 1).unwrap();
    let engine = Engine::new(&h, g.clone(), base.clone(), ForgeOptions::edef()).unwrap();
    for _ in 0..200 {
        let mut st = base.clone();
        for grp in &mut st.groups {
            for _ in 0..rng.random_range(0..4) {
                let k = rng.random_range(0..grp.pool.len());
                grp.ops.push(grp.pool[k]);
                grp.params.push(rng.random_range(-1.5..1.5));
            }
        }
        let ev = engine.evaluate(&st).unwrap();
        let (_, env) = engine.gradient(&st, &ev).unwrap();
        let cg = engine.candidate_gradients(&st, &ev, &env);
        let gi = rng.random_range(0..st.groups.len());
        let k = rng.random_range(0..st.groups[gi].pool.len());
        let fd = central(|t| {
            let mut w = st.clone();
            let gen = w.groups[gi].pool[k];
            w.groups[gi].ops.push(gen);
            w.groups[gi].params.push(t);
            engine.evaluate(&w).unwrap().energy
        });
        worst_forged = worst_forged.max(rel(cg[gi][k], fd));
    }
    report(
        4,
        &[
            (format!("plain worst rel {worst_plain:.1e}"), worst_plain < 1e-7),
            (format!("forged worst rel {worst_forged:.1e}"), worst_forged < 1e-7),
        ],
    );
}

/// Lowest `n_up + n_down` energy of free fermions on an open chain.
fn free_chain(n: usize, n_up: usize, n_down: usize) -> f64 {
    let mut eps: Vec<f64> = (1..=n)
        .map(|k| -2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
        .collect();
    eps.sort_by(f64::total_cmp);
    eps[..n_up].iter().sum::<f64>() + eps[..n_down].iter().sum::<f64>()
}

#[test]
fn criterion_05_oracle_cross_checks() {
    let h = build_fh(2, 1.0, 1.0, 1.0).unwrap();
    let basis = SectorBasis::new(h.modes(), &SectorSpec::new(1, 1)).unwrap();
    let dimer = ground_state(&h, &basis).unwrap();
    let exact_dimer = (1.0 - 17f64.sqrt()) / 2.0;
    let (_, free) = fh(1.0, 0.0);
    let exact_free = free_chain(4, 2, 2);
    let mut residual = dimer.residual.max(free.residual);
    for row in &TABLE {
        residual = residual.max(fh(row.tm, row.u).1.residual);
    }
    for text in [TOY_PN, TOY_NO_PN] {
        residual = residual.max(nsm(text).1.residual);
    }
    for (zero, one) in fh_runs() {
        residual = residual.max(zero.residual).max(one.residual);
    }
    report(
        5,
        &[
            (
                format!("dimer {:.10}", dimer.energy),
                (dimer.energy - exact_dimer).abs() < 1e-8,
            ),
            (
                format!("U=0 chain {:.10}", free.energy),
                (free.energy - exact_free).abs() < 1e-8,
            ),
            (
                format!("|-1.5616 - E| {:.1e}", (dimer.energy + 1.5616).abs()),
                (dimer.energy + 1.5616).abs() < 1e-4,
            ),
            (
                format!("|-4.4721 - E| {:.1e}", (free.energy + 4.4721).abs()),
                (free.energy + 4.4721).abs() < 1e-4,
            ),
            (format!("max residual {residual:.1e}"), residual < 1e-9),
        ],
    );
}

#[test]
fn criterion_06_variational_monotonicity() {
    let mut worst: f64 = f64::NEG_INFINITY;
    let mut n = 0;
    for (zero, one) in fh_runs() {
        for r in [zero, one] {
            n += 1;
            for w in r.records.windows(2) {
                worst = worst.max(w[1].energy - w[0].energy);
            }
        }
    }
    report(6, &[(format!("{n} runs, largest rise {worst:.1e}"), worst <= 1e-9)]);
}

#[test]
fn criterion_07_rate_convention() {
    let mut checks = Vec::new();
    for row in &TABLE {
        let r0 = convergence_rate(row.inf0, row.n_it0);
        let r1 = convergence_rate(row.inf1, TABLE_N_IT1);
        checks.push((
            format!("({},{}) 0-cut {r0:.3} vs {}", row.tm, row.u, row.r0),
            (r0 - row.r0).abs() <= 0.03,
        ));
        checks.push((
            format!("({},{}) 1-cut {r1:.3} vs {}", row.tm, row.u, row.r1),
            (r1 - row.r1).abs() <= 0.03,
        ));
    }
    report(7, &checks);
}

#[test]
fn criterion_08_cnot_trends() {
    // Runs to iteration 14 unless the gradient criterion ends it first; the
    // Schmidt-bound shortcut is off. A converged circuit keeps its count.
    let (h, g) = fh(1.0, 1.0);
    let opts = ForgeOptions {
        max_iterations: 14,
        bound_rel_tol: None,
        ..ForgeOptions::edef()
    };
    let forged = run(&h, g.clone(), build_forged(&h, &g, 1).unwrap(), opts.clone());
    // For information only: selection forced past convergence picks
    // operators on gradients at the noise floor.
    let forced = run(
        &h,
        g.clone(),
        build_forged(&h, &g, 1).unwrap(),
        ForgeOptions {
            gradient_tol: f64::MIN_POSITIVE,
            ..opts
        },
    );
    let plain = &fh_runs()[1].0;
    let at = |r: &Run, k: usize| r.records.iter().rfind(|x| x.iter <= k).unwrap().cnot_max;
    let (c1, c0) = (at(&forged, 14), at(plain, 14));
    println!(
        "criterion  8: 1-cut stopped at {} ({:?}); forced to 14 it has {} CNOTs",
        forged.records.last().unwrap().iter,
        forged.stop,
        at(&forced, 14)
    );
    let mut monotone = true;
    let mut local = true;
    let all: Vec<&Run> = fh_runs()
        .iter()
        .flat_map(|(a, b)| [a, b])
        .chain([&forged, &forced])
        .collect();
    for r in &all {
        monotone &= r.records.windows(2).all(|w| {
            w[1].cnot_max >= w[0].cnot_max
                && w[1]
                    .cnot_per_circuit
                    .iter()
                    .zip(&w[0].cnot_per_circuit)
                    .all(|(a, b)| a.1 >= b.1)
        });
        for grp in &r.state.groups {
            let block = &r.state.blocks[grp.block];
            local &= grp.ops.iter().all(|op| generator_cnots(op) <= global_cnots(op, block));
        }
    }
    let mut checks = vec![
        (format!("iter 14: 1-cut {c1} vs 0-cut {c0}"), 3 * c1 <= c0),
        ("counts non-decreasing".to_string(), monotone),
        ("local <= global for every operator".to_string(), local),
    ];
    match std::env::var("FORGE_NE28_INT") {
        Ok(path) => checks.push(ne28_cnots(&path)),
        Err(_) => println!("criterion  8: shell-model CNOT comparison skipped, FORGE_NE28_INT not set"),
    }
    report(8, &checks);
}

/// Optional shell-model check: 1-cut deepest circuit at least ten times
/// shallower than plain ADAPT after the same number of iterations.
fn ne28_cnots(path: &str) -> (String, bool) {
    let text = std::fs::read_to_string(path).unwrap();
    let h = build_nsm(&text).unwrap();
    let (z, n) = valence_from_env();
    let sector = SectorSpec::new(z, n).with_twice_jz(0);
    let g = ground_state(&h, &SectorBasis::new(h.modes(), &sector).unwrap()).unwrap();
    let opts = ForgeOptions {
        max_iterations: 20,
        ..ForgeOptions::edef()
    };
    let one = run(&h, g.clone(), build_forged(&h, &g, 1).unwrap(), opts.clone());
    let zero = run(
        &h,
        g,
        single_block(&h, &sector, None).unwrap(),
        ForgeOptions {
            infidelity_target: None,
            ..opts
        },
    );
    let k = one.records.last().unwrap().iter.min(zero.records.last().unwrap().iter);
    let at = |r: &Run| r.records.iter().rfind(|x| x.iter <= k).unwrap().cnot_max;
    (
        format!("shell model iter {k}: 1-cut {} vs 0-cut {}", at(&one), at(&zero)),
        10 * at(&one) <= at(&zero),
    )
}

fn valence_from_env() -> (usize, usize) {
    let get = |k: &str, d: usize| std::env::var(k).ok().and_then(|v| v.parse().ok()).unwrap_or(d);
    (get("FORGE_NE28_Z", 2), get("FORGE_NE28_N", 10))
}

#[test]
fn criterion_09_shell_model_properties() {
    let mut checks = Vec::new();

    let (h, g) = nsm(TOY_NO_PN);
    let d = decompose(&g.state().unwrap(), &central_cut(&h)).unwrap();
    checks.push((format!("no-pn entropy {:.1e}", d.entropy()), d.entropy() < 1e-10));
    let r = run(&h, g.clone(), build_forged(&h, &g, 1).unwrap(), ForgeOptions::edef());
    let i = r.records.last().unwrap().infidelity;
    checks.push((format!("no-pn 1-cut I {i:.1e}"), i < 1e-8));

    let (h, g) = nsm(TOY_PN);
    let d = decompose_by_sector(&g.state().unwrap(), &central_cut(&h), h.modes()).unwrap();
    let l = &d.values[1..6];
    let spread = l.iter().fold(0.0f64, |m, x| m.max((x - l[0]).abs()));
    let distinct = (d.values[0] - l[0]).abs() > 1e-6 && (d.values[6] - l[0]).abs() > 1e-6;
    checks.push((format!("lambda_2..6 spread {spread:.1e}"), spread < 1e-8 && distinct));

    // Schmidt vectors as references: the assembled state must carry exactly
    // the kept Schmidt weight, which needs the parity images and their
    // phases to reproduce the partner vectors.
    let mut st = build_forged(&h, &g, 1).unwrap();
    let simulated: Vec<usize> = st.simulated_terms().collect();
    for t in simulated {
        let term = st.terms[t].clone();
        let (ca, cb) = (term.factors[0].circuit, term.factors[1].circuit);
        let k = if term.weight == 0 {
            0
        } else {
            (1..6).find(|&k| d.keys[k] == st.circuits[ca].sector).unwrap()
        };
        st.circuits[ca].reference = d.left[k].clone();
        st.circuits[cb].reference = d.right[k].clone();
    }
    let mut e = Engine::new(&h, g, st, ForgeOptions::edef()).unwrap();
    e.initialize().unwrap();
    let fid = 1.0 - e.records()[0].infidelity;
    let kept: f64 = d.values[..6].iter().map(|x| x * x).sum();
    checks.push((
        format!("Schmidt-reference fidelity {fid:.10} vs {kept:.10}"),
        (fid - kept).abs() < 1e-8,
    ));

    match std::env::var("FORGE_NE28_INT") {
        Ok(path) => {
            let text = std::fs::read_to_string(path).unwrap();
            let h = build_nsm(&text).unwrap();
            let (z, n) = valence_from_env();
            let sector = SectorSpec::new(z, n).with_twice_jz(0);
            let g = ground_state(&h, &SectorBasis::new(h.modes(), &sector).unwrap()).unwrap();
            let r = run(&h, g.clone(), build_forged(&h, &g, 1).unwrap(), ForgeOptions::edef());
            let last = r.records.last().unwrap();
            checks.push((
                format!("shell model 1-cut I {:.2e} at {}", last.infidelity, last.iter),
                last.infidelity < 5e-3,
            ));
        }
        Err(_) => println!("criterion  9: full shell-model run skipped, FORGE_NE28_INT not set"),
    }
    report(9, &checks);
}

const SMALL: &str = r#"
[model]
kind = "hubbard"
sites = 4
t_m = 0.25
u = 3.0
n_up = 2
n_down = 2

[engine]
cuts = 1
max_iterations = 8
bound_rel_tol = -1
"#;

fn cli(dir: &Path, args: &[&str], config: &str) -> bool {
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_forge-vqe"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .status()
        .unwrap()
        .success()
}

#[test]
fn criterion_10_determinism_and_persistence() {
    let read = |d: &Path, f: &str| std::fs::read(d.join("out").join(f)).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut identical = cli(a.path(), &["edef"], SMALL) && cli(b.path(), &["edef", "--threads", "1"], SMALL);
    for f in ["trace.csv", "summary.csv", "checkpoint.json"] {
        identical &= read(a.path(), f) == read(b.path(), f);
    }
    let reference = read(a.path(), "trace.csv");
    let iterations = String::from_utf8(reference.clone()).unwrap().lines().count() - 2;
    let mut replay = true;
    for k in 1..iterations {
        let dir = tempfile::tempdir().unwrap();
        let partial = SMALL.replace("max_iterations = 8", &format!("max_iterations = {k}"));
        replay &= cli(dir.path(), &["edef"], &partial);
        let ck = dir.path().join("k.json");
        std::fs::copy(dir.path().join("out/checkpoint.json"), &ck).unwrap();
        replay &= cli(dir.path(), &["edef", "--resume", ck.to_str().unwrap()], SMALL);
        replay &= read(dir.path(), "trace.csv") == reference;
    }
    report(
        10,
        &[
            ("byte-identical CSVs and checkpoints".to_string(), identical),
            (format!("replay from each of {} checkpoints", iterations - 1), replay),
        ],
    );
}
