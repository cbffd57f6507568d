use forge_core::adapt::{candidate_gradient, AnsatzCircuit};
use forge_core::fermion::{build_fh, build_nsm, build_pool};
use forge_core::forge::{build_forged, Engine, StopReason};
use forge_core::oracle::{ground_state, GroundState};
use forge_core::{Complex64, ForgeOptions, ForgedState, Hamiltonian, SectorBasis, SectorSpec, Statevector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

const TOY: &str = include_str!("../../../data/toy_pn_qq.int");
const TOY_NO_PN: &str = include_str!("../../../data/toy_no_pn.int");

fn fh_setup(tm: f64, u: f64) -> (Hamiltonian, GroundState) {
    let h = build_fh(4, 1.0, tm, u).unwrap();
    let basis = SectorBasis::new(h.modes(), &SectorSpec::new(2, 2)).unwrap();
    let g = ground_state(&h, &basis).unwrap();
    (h, g)
}

fn nsm_setup(text: &str) -> (Hamiltonian, GroundState) {
    let h = build_nsm(text).unwrap();
    let basis = SectorBasis::new(h.modes(), &SectorSpec::new(2, 2).with_twice_jz(0)).unwrap();
    let g = ground_state(&h, &basis).unwrap();
    (h, g)
}

/// Pushes random operators with random angles onto every group.
fn scramble(st: &mut ForgedState, rng: &mut StdRng, per_group: usize) {
    for g in &mut st.groups {
        for _ in 0..per_group {
            let k = rng.random_range(0..g.pool.len());
            g.ops.push(g.pool[k]);
            g.params.push(rng.random_range(-1.0..1.0));
        }
    }
    for a in &mut st.angles {
        *a = rng.random_range(-1.0..1.0);
    }
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-3)
}

#[test]
fn forged_sector_vector_matches_full_assembly() {
    let mut rng = StdRng::seed_from_u64(1);
    let (h, g) = fh_setup(1.0, 1.0);
    let mut st = build_forged(&h, &g, 1).unwrap();
    scramble(&mut st, &mut rng, 2);
    let engine = Engine::new(&h, g.clone(), st.clone(), ForgeOptions::edef()).unwrap();
    let ev = engine.evaluate(&st).unwrap();
    let full = st.assemble().unwrap();
    let gathered = g.basis.gather(&full);
    let d = gathered
        .iter()
        .zip(&ev.psi)
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(d < 1e-12, "{d}");
    assert!((h.expectation(&full).unwrap() - ev.energy).abs() < 1e-10);
}

#[test]
fn forged_parameter_gradient_matches_finite_differences() {
    let mut rng = StdRng::seed_from_u64(2);
    for (h, g, cuts) in [
        {
            let (h, g) = fh_setup(1.0, 3.0);
            (h, g, 1)
        },
        {
            let (h, g) = nsm_setup(TOY);
            (h, g, 1)
        },
        {
            let (h, g) = nsm_setup(TOY);
            (h, g, 2)
        },
    ] {
        let mut st = build_forged(&h, &g, cuts).unwrap();
        scramble(&mut st, &mut rng, 2);
        let engine = Engine::new(&h, g, st.clone(), ForgeOptions::edef()).unwrap();
        let ev = engine.evaluate(&st).unwrap();
        let (grad, _) = engine.gradient(&st, &ev).unwrap();
        let x0 = st.params();
        let step = 1e-5;
        for (i, &gi) in grad.iter().enumerate() {
            let mut e = [0.0; 2];
            for (k, s) in [1.0, -1.0].into_iter().enumerate() {
                let mut x = x0.clone();
                x[i] += s * step;
                let mut w = st.clone();
                w.set_params(&x).unwrap();
                e[k] = engine.evaluate(&w).unwrap().energy;
            }
            let fd = (e[0] - e[1]) / (2.0 * step);
            assert!(
                (fd - gi).abs() < 1e-7 * gi.abs().max(1.0),
                "cuts {cuts} param {i}: {gi} vs {fd}"
            );
        }
    }
}

#[test]
fn forged_candidate_gradient_matches_appended_energy() {
    let mut rng = StdRng::seed_from_u64(3);
    let (h, g) = fh_setup(0.25, 1.0);
    let mut st = build_forged(&h, &g, 1).unwrap();
    scramble(&mut st, &mut rng, 1);
    let engine = Engine::new(&h, g, st.clone(), ForgeOptions::edef()).unwrap();
    let ev = engine.evaluate(&st).unwrap();
    let (_, env) = engine.gradient(&st, &ev).unwrap();
    let cg = engine.candidate_gradients(&st, &ev, &env);
    let step = 1e-5;
    for (gi, grads) in cg.iter().enumerate() {
        for (k, &an) in grads.iter().enumerate() {
            let mut e = [0.0; 2];
            for (j, s) in [1.0, -1.0].into_iter().enumerate() {
                let mut w = st.clone();
                let gen = w.groups[gi].pool[k];
                w.groups[gi].ops.push(gen);
                w.groups[gi].params.push(s * step);
                e[j] = engine.evaluate(&w).unwrap().energy;
            }
            let fd = (e[0] - e[1]) / (2.0 * step);
            assert!(rel_close(an, fd, 1e-6), "group {gi} op {k}: {an} vs {fd}");
        }
    }
}

#[test]
fn plain_gradients_match_finite_differences() {
    let mut rng = StdRng::seed_from_u64(4);
    let h = build_fh(4, 1.0, 1.0, 1.0).unwrap();
    let pool = build_pool(h.modes(), None).unwrap();
    let mut c = AnsatzCircuit::new(Statevector::from_slater(&[0, 1, 4, 5], 8).unwrap());
    for _ in 0..6 {
        c.push(pool[rng.random_range(0..pool.len())], rng.random_range(-1.0..1.0))
            .unwrap();
    }
    let (_, grad) = c.energy_and_gradient(&h).unwrap();
    let x0 = c.params();
    for (i, &gi) in grad.iter().enumerate() {
        let mut e = [0.0; 2];
        for (k, s) in [1.0, -1.0].into_iter().enumerate() {
            let mut x = x0.clone();
            x[i] += s * 1e-5;
            let mut w = c.clone();
            w.set_params(&x).unwrap();
            e[k] = w.energy_and_gradient(&h).unwrap().0;
        }
        assert!(rel_close(gi, (e[0] - e[1]) / 2e-5, 1e-7));
    }
    let psi = c.evaluate().unwrap();
    for gen in pool.iter().take(20) {
        let an = candidate_gradient(&psi, &h, gen).unwrap();
        let e: Vec<f64> = [1e-5, -1e-5]
            .iter()
            .map(|&t| h.expectation(&psi.apply_excitation(gen, t).unwrap()).unwrap())
            .collect();
        assert!(rel_close(an, (e[0] - e[1]) / 2e-5, 1e-6));
    }
}

#[test]
fn derived_terms_cannot_take_candidates() {
    let (h, g) = fh_setup(1.0, 1.0);
    let st = build_forged(&h, &g, 1).unwrap();
    let derived = st.terms.iter().position(|t| t.sign_group.is_some()).unwrap();
    let gen = st.groups[0].pool[0];
    let engine = Engine::new(&h, g, st, ForgeOptions::edef()).unwrap();
    assert!(engine.forged_gradient(derived, 0, &gen).is_err());
    assert!(engine.forged_gradient(0, 0, &gen).is_ok());
}

#[test]
fn calibration_orients_each_symmetry_orbit() {
    // flipping a calibrated sign never raises the overlap of that sign
    // group's sources plus images with the exact state
    for (h, g) in [fh_setup(1.0, 1.0), fh_setup(0.25, 3.0), nsm_setup(TOY)] {
        let st = build_forged(&h, &g, 1).unwrap();
        let mut engine = Engine::new(&h, g.clone(), st, ForgeOptions::edef()).unwrap();
        engine.initialize().unwrap();
        let st = engine.state().clone();
        let exact = g.state().unwrap();
        let full: Vec<Statevector> = term_vectors(&st);
        for sg in &st.sign_groups {
            let orbit = |s: f64| {
                let mut v = Statevector::zeros(st.n_modes).unwrap();
                for &t in &sg.sources {
                    v.axpy(Complex64::new(st.coefficients()[t], 0.0), &full[t]).unwrap();
                }
                for &t in &sg.terms {
                    v.axpy(Complex64::new(s * st.coefficients()[t], 0.0), &full[t]).unwrap();
                }
                exact.inner(&v).unwrap().norm_sqr() / v.norm_sqr()
            };
            assert!(orbit(1.0) >= orbit(-1.0) - 1e-12);
        }
    }
}

/// Full-register vector of each term, unit coefficient.
fn term_vectors(st: &ForgedState) -> Vec<Statevector> {
    (0..st.terms.len())
        .map(|t| {
            let mut only = st.clone();
            only.terms = vec![st.terms[t].clone()];
            only.terms[0].sign_group = None;
            only.terms[0].angles.clear();
            only.lambdas = vec![1.0; st.lambdas.len()];
            only.lambda_mode = forge_core::LambdaMode::Fixed;
            assemble_unchecked(&only)
        })
        .collect()
}

fn assemble_unchecked(st: &ForgedState) -> Statevector {
    let states = st.circuit_states().unwrap();
    let t = &st.terms[0];
    let fs: Vec<Statevector> = t.factors.iter().map(|f| st.factor_state(f, &states).unwrap()).collect();
    let pairs: Vec<(&Statevector, &[usize])> = fs.iter().zip(&st.blocks).map(|(s, b)| (s, b.as_slice())).collect();
    forge_core::statevector::tensor_embed(&pairs, st.n_modes).unwrap()
}

#[test]
fn infidelity_never_beats_the_schmidt_bound() {
    let (h, g) = fh_setup(1.0, 1.0);
    let st = build_forged(&h, &g, 1).unwrap();
    let bound = st.schmidt_bound.unwrap();
    let mut engine = Engine::new(&h, g, st, ForgeOptions::edef()).unwrap();
    let why = engine.run().unwrap();
    assert_eq!(why, StopReason::SchmidtBound);
    for r in engine.records() {
        assert!(r.infidelity >= bound - 1e-9);
    }
    for w in engine.records().windows(2) {
        assert!(w[1].energy <= w[0].energy + 1e-9);
    }
}

#[test]
fn uncoupled_species_forge_exactly() {
    let (h, g) = nsm_setup(TOY_NO_PN);
    let st = build_forged(&h, &g, 1).unwrap();
    assert!(st.schmidt_bound.unwrap() < 1e-12);
    let mut engine = Engine::new(&h, g, st, ForgeOptions::edef()).unwrap();
    engine.run().unwrap();
    assert!(engine.records().last().unwrap().infidelity < 1e-8);
}

#[test]
fn toy_one_cut_reaches_its_bound() {
    let (h, g) = nsm_setup(TOY);
    let st = build_forged(&h, &g, 1).unwrap();
    assert_eq!(st.terms.len(), 6);
    assert_eq!(st.circuits.len(), 8);
    let bound = st.schmidt_bound.unwrap();
    let mut engine = Engine::new(&h, g, st, ForgeOptions::edef()).unwrap();
    let why = engine.run().unwrap();
    assert_eq!(why, StopReason::SchmidtBound);
    let last = engine.records().last().unwrap();
    assert!(last.infidelity <= bound * 1.05 + 1e-9);
}

#[test]
fn resumed_engine_continues_identically() {
    let (h, g) = fh_setup(1.0, 3.0);
    let st = build_forged(&h, &g, 1).unwrap();
    let opts = ForgeOptions {
        max_iterations: 5,
        ..ForgeOptions::edef()
    };
    let mut straight = Engine::new(&h, g.clone(), st.clone(), opts.clone()).unwrap();
    straight.run().unwrap();
    let mut first = Engine::new(
        &h,
        g.clone(),
        st,
        ForgeOptions {
            max_iterations: 3,
            ..opts.clone()
        },
    )
    .unwrap();
    first.run().unwrap();
    let (mid, rec) = first.into_parts();
    let mut second = Engine::new(&h, g, mid, opts).unwrap().resume(rec);
    second.run().unwrap();
    assert_eq!(straight.records().len(), second.records().len());
    for (a, b) in straight.records().iter().zip(second.records()) {
        assert_eq!(a.generator_id, b.generator_id);
        assert_eq!(a.circuit_id, b.circuit_id);
        assert!((a.energy - b.energy).abs() < 1e-12);
    }
}
