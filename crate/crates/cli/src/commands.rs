//! The six subcommands. Each validates its config first, then computes,
//! then writes CSV files into the output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use forge_core::forge::{build_forged, single_block, Engine, StopReason};
use forge_core::oracle::{ground_state, GroundState};
use forge_core::resources::{generator_cnots, global_cnots};
use forge_core::schmidt::{decompose, decompose_by_sector};
use forge_core::{Bipartition, ForgeOptions, ForgedState, Hamiltonian, LambdaMode, RunSummary, SectorBasis, Side};

use crate::checkpoint::{self, Payload};
use crate::config::{ExperimentConfig, LambdaChoice};
use crate::error::{CliError, Result};
use crate::trace::{emit_summary, emit_trace, sig12, summary_line};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Scan,
    Schmidt,
    Adapt,
    Edef,
    Oracle,
    Resources,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Scan => "scan",
            Command::Schmidt => "schmidt",
            Command::Adapt => "adapt",
            Command::Edef => "edef",
            Command::Oracle => "oracle",
            Command::Resources => "resources",
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct Invocation {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub resume: Option<PathBuf>,
}

/// Loads the config, applies command-line overrides and checks that the
/// command can run on it. Nothing is written.
pub fn prepare(cmd: Command, inv: &Invocation) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(&inv.config)?;
    if let Some(out) = &inv.out {
        cfg.output.dir = out.clone();
    }
    if let Some(t) = inv.threads {
        cfg.engine.threads = t;
    }
    let cuts = cfg.engine.cuts;
    match cmd {
        Command::Scan if !cfg.is_hubbard() => return Err(CliError::Config("scan needs a hubbard model".into())),
        Command::Adapt if cuts.is_some_and(|c| c != 0) => {
            return Err(CliError::Config("adapt runs without cuts; use edef".into()))
        }
        Command::Edef if cuts == Some(0) => return Err(CliError::Config("edef needs cuts = 1 or 2".into())),
        _ => {}
    }
    if let Some(r) = &inv.resume {
        if !r.is_file() {
            return Err(CliError::Config(format!("checkpoint {} not found", r.display())));
        }
    }
    Ok(cfg)
}

/// Runs one subcommand and returns its summary line.
pub fn run(cmd: Command, inv: &Invocation) -> Result<String> {
    let cfg = prepare(cmd, inv)?;
    if cfg.engine.threads > 0 {
        // a second call in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.engine.threads)
            .build_global();
    }
    let h = cfg.hamiltonian()?;
    std::fs::create_dir_all(&cfg.output.dir)?;
    match cmd {
        Command::Scan => scan(&cfg),
        Command::Schmidt => schmidt(&cfg, &h),
        Command::Oracle => oracle(&cfg, &h),
        Command::Adapt | Command::Edef => optimize(cmd, &cfg, &h, inv.resume.as_deref()),
        Command::Resources => resources(&cfg, inv.resume.as_deref()),
    }
}

fn exact(cfg: &ExperimentConfig, h: &Hamiltonian) -> Result<GroundState> {
    let basis = SectorBasis::new(h.modes(), &cfg.sector())?;
    Ok(ground_state(h, &basis)?)
}

fn central_cut(h: &Hamiltonian) -> Result<Bipartition> {
    let t = h.modes();
    Ok(Bipartition::new(
        t.layer1_block(Side::A),
        t.layer1_block(Side::B),
        t.len(),
    )?)
}

fn write(cfg: &ExperimentConfig, name: &str, body: &str) -> Result<PathBuf> {
    let path = cfg.output.dir.join(name);
    std::fs::write(&path, body)?;
    Ok(path)
}

fn scan(cfg: &ExperimentConfig) -> Result<String> {
    let k = cfg.scan.values;
    let mut csv = String::from("t_m,S,S_over_Smax");
    for i in 1..=k {
        let _ = write!(csv, ",lambda_{i}");
    }
    for i in 1..=k {
        let _ = write!(csv, ",I_{i}");
    }
    csv.push('\n');
    let mut peak: f64 = 0.0;
    for tm in cfg.scan.grid() {
        let h = cfg.hubbard_with(tm)?;
        let g = exact(cfg, &h)?;
        let d = decompose(&g.state()?, &central_cut(&h)?)?;
        let s_max = h.modes().n_sites() as f64;
        let s = d.entropy();
        peak = peak.max(s / s_max);
        let _ = write!(csv, "{},{},{}", sig12(tm), sig12(s), sig12(s / s_max));
        for i in 0..k {
            let _ = write!(csv, ",{}", sig12(d.values.get(i).copied().unwrap_or(0.0)));
        }
        for i in 1..=k {
            let _ = write!(csv, ",{}", sig12(d.truncation_infidelity(i)));
        }
        csv.push('\n');
    }
    write(cfg, "scan.csv", &csv)?;
    Ok(format!(
        "scan: {} points, max S/S_max = {:.4}",
        cfg.scan.grid().len(),
        peak
    ))
}

fn schmidt(cfg: &ExperimentConfig, h: &Hamiltonian) -> Result<String> {
    let g = exact(cfg, h)?;
    let d = decompose_by_sector(&g.state()?, &central_cut(h)?, h.modes())?;
    let mut csv = String::from("n,lambda,lambda_sq,I_n,cluster,count_0,count_1,twice_m\n");
    let clusters = d.clusters();
    for (i, &l) in d.values.iter().enumerate() {
        let c = clusters.iter().position(|r| r.contains(&i)).unwrap_or(0);
        let key = d.keys[i];
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{}",
            i + 1,
            sig12(l),
            sig12(l * l),
            sig12(d.truncation_infidelity(i + 1)),
            c,
            key.counts[0],
            key.counts[1],
            key.twice_m
        );
    }
    write(cfg, "schmidt.csv", &csv)?;
    Ok(format!(
        "schmidt: rank {} S = {:.6} bits, {} clusters",
        d.rank(),
        d.entropy(),
        clusters.len()
    ))
}

fn oracle(cfg: &ExperimentConfig, h: &Hamiltonian) -> Result<String> {
    let g = exact(cfg, h)?;
    let mut rows: Vec<(u64, f64)> = g
        .basis
        .dets()
        .iter()
        .zip(&g.vector)
        .filter(|(_, a)| a.abs() > 1e-12)
        .map(|(&d, &a)| (d, a))
        .collect();
    rows.sort_by(|x, y| y.1.abs().total_cmp(&x.1.abs()).then(x.0.cmp(&y.0)));
    let mut csv = String::from("det,occupied,amplitude\n");
    for (d, a) in rows {
        let occ: Vec<String> = (0..h.n_modes())
            .filter(|&m| d >> m & 1 == 1)
            .map(|m| m.to_string())
            .collect();
        let _ = writeln!(csv, "{d},{},{}", occ.join(" "), sig12(a));
    }
    write(cfg, "oracle.csv", &csv)?;
    Ok(format!(
        "oracle: E0 = {:.12} dim = {} degeneracy = {} gap = {} residual = {:.1e}",
        g.energy,
        g.basis.dim(),
        g.eigenspace.len(),
        g.gap_energy
            .map_or("n/a".to_string(), |e| format!("{:.6}", e - g.energy)),
        g.residual
    ))
}

/// Engine options of a command with the config overrides applied.
pub fn engine_options(cmd: Command, cfg: &ExperimentConfig) -> ForgeOptions {
    let e = &cfg.engine;
    let mut o = if cmd == Command::Adapt {
        ForgeOptions::adapt()
    } else {
        ForgeOptions::edef()
    };
    if let Some(x) = e.max_iterations {
        o.max_iterations = x;
    }
    if let Some(x) = e.gradient_tol {
        o.gradient_tol = x;
    }
    if let Some(x) = e.infidelity_target {
        o.infidelity_target = (x >= 0.0).then_some(x);
    }
    if let Some(x) = e.bound_rel_tol {
        o.bound_rel_tol = (x >= 0.0).then_some(x);
    }
    if let Some(x) = e.lazy_every {
        o.lazy_every = x;
    }
    if let Some(x) = e.exclude_every {
        o.exclude_every = x;
    }
    o.record_timing = e.timing;
    o
}

fn cuts_of(cmd: Command, cfg: &ExperimentConfig) -> usize {
    match cmd {
        Command::Adapt => 0,
        _ => cfg.engine.cuts.unwrap_or(1),
    }
}

fn run_key(cmd: Command, cfg: &ExperimentConfig) -> String {
    format!("{:?}|{:?}|cuts={}", cfg.model, cfg.engine.lambda, cuts_of(cmd, cfg))
}

/// Initial state of an adapt or edef run.
pub fn initial_state(cmd: Command, cfg: &ExperimentConfig, h: &Hamiltonian, g: &GroundState) -> Result<ForgedState> {
    let cuts = cuts_of(cmd, cfg);
    let mut st = if cuts == 0 {
        single_block(h, &cfg.sector(), None)?
    } else {
        build_forged(h, g, cuts)?
    };
    if cfg.engine.lambda == LambdaChoice::Variational && cuts > 0 {
        st.lambda_mode = LambdaMode::Variational;
        st.beta = st.lambdas[0].clamp(-1.0, 1.0).acos();
    }
    Ok(st)
}

fn optimize(cmd: Command, cfg: &ExperimentConfig, h: &Hamiltonian, resume: Option<&Path>) -> Result<String> {
    let g = exact(cfg, h)?;
    let key = run_key(cmd, cfg);
    let opts = engine_options(cmd, cfg);
    let mut engine = match resume {
        Some(path) => {
            let p = checkpoint::load(path)?;
            if p.run_key != key {
                return Err(CliError::CheckpointMismatch(format!(
                    "saved for {}, this run is {key}",
                    p.run_key
                )));
            }
            Engine::new(h, g, p.state, opts)?.resume(p.records)
        }
        None => {
            let st = initial_state(cmd, cfg, h, &g)?;
            Engine::new(h, g, st, opts)?
        }
    };
    let ckpt = cfg.output.dir.join("checkpoint.json");
    let save = |e: &Engine| -> Result<()> {
        if cfg.output.checkpoint {
            checkpoint::save(
                &Payload {
                    run_key: key.clone(),
                    state: e.state().clone(),
                    records: e.records().to_vec(),
                },
                &ckpt,
            )?;
        }
        Ok(())
    };
    engine.initialize()?;
    save(&engine)?;
    let reason = loop {
        if let Some(r) = engine.stop_reason() {
            break r;
        }
        engine.step()?;
        if let Some(r) = engine.records().last() {
            log::info!(
                "iter {} E {:.10} I {:.3e} max|g| {:.2e} cnots {}",
                r.iter,
                r.energy,
                r.infidelity,
                r.max_gradient,
                r.cnot_max
            );
        }
        save(&engine)?;
    };
    log::info!("stopped: {reason:?}");
    finish(cmd, cfg, &engine, reason)
}

fn finish(cmd: Command, cfg: &ExperimentConfig, engine: &Engine, reason: StopReason) -> Result<String> {
    let cuts = cuts_of(cmd, cfg);
    emit_trace(engine.records(), &cfg.output.dir.join("trace.csv"))?;
    let summary = RunSummary::from_records(cuts, engine.state().qubits_per_circuit(), engine.records())
        .ok_or_else(|| CliError::Trace("empty trace".into()))?;
    emit_summary(&summary, &cfg.output.dir.join("summary.csv"))?;
    Ok(format!("{} stop={reason:?}", summary_line(&summary)))
}

fn resources(cfg: &ExperimentConfig, resume: Option<&Path>) -> Result<String> {
    let path = resume.map_or_else(|| cfg.output.dir.join("checkpoint.json"), Path::to_path_buf);
    let p = checkpoint::load(&path)?;
    let st = &p.state;
    let mut csv =
        String::from("circuit,label,position,generator,global_generator,cnots_local,cnots_global,cumulative\n");
    let mut deepest = 0;
    for (c, circ) in st.circuits.iter().enumerate() {
        let group = &st.groups[circ.group];
        let block = &st.blocks[group.block];
        let mut total = 0;
        for (k, gen) in group.ops.iter().enumerate() {
            let local = generator_cnots(gen);
            total += local;
            let global = gen.map_modes(block).map(|g| g.to_string()).unwrap_or_default();
            let _ = writeln!(
                csv,
                "{c},\"{}\",{k},\"{gen}\",\"{global}\",{local},{},{total}",
                circ.label,
                global_cnots(gen, block)
            );
        }
        deepest = deepest.max(total);
    }
    write(cfg, "resources.csv", &csv)?;
    Ok(format!(
        "resources: {} circuits, max CNOTs {deepest}",
        st.circuits.len()
    ))
}
