mod config;

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use rollgap::certify::{certify_minimizer, CertifyOptions};
use rollgap::dampsim::{measure_decay, setup, DecayObservable, DecayReport, SimConfig};
use rollgap::genbal::{
    build_b, general_weights, hf_rat, hf_sat, sample_ulem, GeneralModeData, DEFAULT_A_GRID,
};
use rollgap::io::{matrix_to_json, parse_matrix, parse_mode_data, parse_scaling, profile_csv, trajectory_csv};
use rollgap::matgap::{
    candidate_r6, counterexample_c4, gap_reduced, landscape_local_min_2x2, min_scaled_norm, random_gap_stats,
    Ensemble, GapOptions, StatsOptions,
};
use rollgap::rollwave::{
    build_profile, characteristics, damping_weights, default_epsilon, hs_threshold, stability_index,
    CharacteristicData, ProfileOptions, RollWaveProfile, StabilityIndexReport,
};
use rollgap::{Complex64, ComplexMatrix, Error};

#[derive(Parser, Serialize)]
#[command(name = "rollgap", version, about = "Diagonal scaling gaps, minimizer certificates and roll-wave damping")]
struct Cli {
    /// `key = value` file supplying defaults for the subcommand's flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Write outputs and a run manifest into this directory instead of stdout.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,
    /// Worker threads for sweeps (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
enum Command {
    /// inf_S ‖SBS⁻¹‖ against max_U ρ(UB) for one matrix.
    Gap(GapArgs),
    /// Certify a scaling as a minimizer, or find phases closing the gap.
    Certify(CertifyArgs),
    /// Roll-wave profile, stability index, damping weights or threshold.
    Rollwave(RollwaveArgs),
    /// Run the linearized damping simulation and fit the decay rate.
    Simulate(SimulateArgs),
    /// Relative gap statistics over a random ensemble.
    Stats(StatsArgs),
    /// Boundary matrix and high-frequency conditions for general mode data.
    General(GeneralArgs),
}

#[derive(Args, Serialize)]
struct SearchArgs {
    /// Seed for the randomized restarts.
    #[arg(long, default_value_t = 0x5eed)]
    seed: u64,
    /// Random restarts of the phase search.
    #[arg(long, default_value_t = 64)]
    restarts: usize,
    /// Starting points of the scaling search.
    #[arg(long, default_value_t = 3)]
    starts: usize,
}

impl SearchArgs {
    fn options(&self) -> GapOptions {
        GapOptions { seed: self.seed, phase_restarts: self.restarts, scaling_starts: self.starts, ..GapOptions::default() }
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum BuiltIn {
    /// 4×4 matrix with a strict gap.
    C4,
    /// ρ(diag(1, e^{iθ})B) for the 2×2 landscape matrix, as a CSV table.
    Landscape2x2,
    /// Real 6×6 candidate.
    R6,
}

#[derive(Args, Serialize)]
struct GapArgs {
    /// Matrix file (JSON rows of [re, im] or whitespace text); `-` or absent reads stdin.
    matrix: Option<PathBuf>,
    #[arg(long, value_enum)]
    example: Option<BuiltIn>,
    #[command(flatten)]
    search: SearchArgs,
}

#[derive(Args, Serialize)]
struct CertifyArgs {
    matrix: Option<PathBuf>,
    #[arg(long, value_enum)]
    example: Option<BuiltIn>,
    /// Scaling values (JSON list or text); defaults to the computed minimizer.
    #[arg(long, value_name = "FILE")]
    scaling: Option<PathBuf>,
    /// Certify at the identity scaling.
    #[arg(long, conflicts_with = "scaling")]
    identity: bool,
    #[arg(long, default_value_t = 0xc0de)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum RollwaveReport {
    /// CSV: x, h, U, α₁, α₂, γ₁, γ₂, Ω₁, Ω₂.
    Profile,
    /// JSON: stability index and jump coefficients.
    Index,
    /// JSON: damping weights.
    Weights,
    /// JSON: H^s threshold at the sonic point.
    Threshold,
}

#[derive(Args, Serialize)]
struct ProfileArgs {
    #[arg(long)]
    froude: f64,
    /// Position of h₊ in its admissible interval.
    #[arg(long, default_value_t = 0.5)]
    h_plus_fraction: f64,
    /// Explicit h₊, overriding the fraction.
    #[arg(long)]
    h_plus: Option<f64>,
    /// Cells of the profile grid.
    #[arg(long, default_value_t = 400)]
    grid_cells: usize,
}

impl ProfileArgs {
    fn options(&self) -> ProfileOptions {
        ProfileOptions { h_plus: self.h_plus, h_plus_fraction: self.h_plus_fraction, grid_cells: self.grid_cells }
    }
}

#[derive(Args, Serialize)]
struct RollwaveArgs {
    #[arg(value_enum)]
    report: RollwaveReport,
    #[command(flatten)]
    profile: ProfileArgs,
    /// Weight parameter ε; defaults to half the largest value keeping η₁ ≥ η₁(0)/2.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Weight constant C₀.
    #[arg(long, default_value_t = 1.0)]
    c0: f64,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Observable {
    Energy,
    RateEnergy,
}

#[derive(Args, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    profile: ProfileArgs,
    /// Cells of the simulation grid.
    #[arg(long, default_value_t = 256)]
    n: usize,
    #[arg(long, default_value_t = 20.0)]
    t_end: f64,
    /// Floquet exponent ξ.
    #[arg(long, default_value_t = 0.0)]
    xi: f64,
    #[arg(long, default_value_t = 0.5)]
    cfl: f64,
    #[arg(long, default_value_t = 0.05)]
    output_interval: f64,
    /// Seed of the random initial data.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Fourier modes in the random initial data.
    #[arg(long, default_value_t = 6)]
    modes: usize,
    /// Start from zero data.
    #[arg(long)]
    zero_data: bool,
    /// Replace a₀ so that the effective index equals this value.
    #[arg(long, value_name = "INDEX")]
    perturb_a0: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    c0: Option<f64>,
    #[arg(long, value_enum, default_value_t = Observable::RateEnergy)]
    observable: Observable,
    /// Fraction of the horizon discarded before fitting.
    #[arg(long, default_value_t = 0.2)]
    discard: f64,
    /// Write the trajectory CSV here (inside --out-dir it defaults to trajectory.csv).
    #[arg(long, value_name = "FILE")]
    trajectory: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct StatsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    count: usize,
    #[arg(long, value_enum, default_value_t = EnsembleArg::ComplexGaussian)]
    ensemble: EnsembleArg,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Relative gap counted as a violation.
    #[arg(long, default_value_t = 1e-3)]
    threshold: f64,
    /// Replace the first sample by the 4×4 counterexample (n = 4 only).
    #[arg(long)]
    inject_c4: bool,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum EnsembleArg {
    ComplexGaussian,
    RealGaussian,
}

#[derive(Args, Serialize)]
struct GeneralArgs {
    /// Mode data JSON: {n, m, tau, g, C, sonic: {alpha_prime, gamma}}.
    #[arg(long, value_name = "FILE", required_unless_present = "froude")]
    input: Option<PathBuf>,
    /// Build the mode data from the Saint-Venant roll wave at this Froude number.
    #[arg(long, conflicts_with = "input")]
    froude: Option<f64>,
    /// Scaling for the weight recipe; defaults to the minimizer of ‖SBS⁻¹‖.
    #[arg(long, value_name = "FILE")]
    scaling: Option<PathBuf>,
    /// Regularity index; defaults to the smallest integer above the threshold.
    #[arg(long)]
    k: Option<u32>,
    /// Samples of (ζ, ξ) per level of Re λ.
    #[arg(long, default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

/// Failures mapped onto the exit-code contract.
enum Failure {
    Input(anyhow::Error),
    NonConvergence,
    Nonexistence(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast_ref::<Error>() {
            Some(Error::NoRollWave { .. } | Error::NoDampingWeights { .. }) => Failure::Nonexistence(e),
            _ => Failure::Input(e),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::from(e).into()
    }
}

/// Where results go: stdout, or files plus a manifest.
struct Sink {
    dir: Option<PathBuf>,
    written: Vec<String>,
}

impl Sink {
    fn emit(&mut self, name: &str, text: &str) -> Result<()> {
        match &self.dir {
            Some(dir) => {
                let path = dir.join(name);
                fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
                self.written.push(path.display().to_string());
            }
            None => {
                let mut out = io::stdout().lock();
                match writeln!(out, "{}", text.trim_end()) {
                    Err(e) if e.kind() != io::ErrorKind::BrokenPipe => return Err(e).context("writing stdout"),
                    _ => {}
                }
            }
        }
        Ok(())
    }

    fn json(&mut self, name: &str, v: &impl Serialize) -> Result<()> {
        self.emit(name, &(serde_json::to_string_pretty(v)? + "\n"))
    }

    fn file(&mut self, path: &Path, text: &str) -> Result<()> {
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        self.written.push(path.display().to_string());
        Ok(())
    }
}

fn read_input(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) if p != Path::new("-") => fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        _ => {
            let mut s = String::new();
            io::stdin().read_to_string(&mut s).context("reading stdin")?;
            Ok(s)
        }
    }
}

fn load_matrix(path: Option<&Path>, example: Option<BuiltIn>) -> Result<ComplexMatrix> {
    Ok(match example {
        Some(BuiltIn::C4) => counterexample_c4().b,
        Some(BuiltIn::R6) => candidate_r6(),
        Some(BuiltIn::Landscape2x2) => landscape_local_min_2x2().0,
        None => parse_matrix(&read_input(path)?)?,
    })
}

fn cmd_gap(a: &GapArgs, sink: &mut Sink) -> Result<(), Failure> {
    if let Some(BuiltIn::Landscape2x2) = a.example {
        let (_, curve) = landscape_local_min_2x2();
        let mut csv = String::from("theta,rho,closed_form\n");
        for i in 0..=720 {
            let t = std::f64::consts::TAU * i as f64 / 720.0;
            csv += &format!("{t},{},{}\n", curve(t), (2.0 * (1.0 - t.cos())).sqrt());
        }
        sink.emit("landscape.csv", &csv)?;
        return Ok(());
    }
    let b = load_matrix(a.matrix.as_deref(), a.example)?;
    let r = gap_reduced(&b, &a.search.options())?;
    sink.json("gap.json", &r)?;
    if r.converged_s && r.converged_u {
        Ok(())
    } else {
        Err(Failure::NonConvergence)
    }
}

fn cmd_certify(a: &CertifyArgs, sink: &mut Sink) -> Result<(), Failure> {
    let b = load_matrix(a.matrix.as_deref(), a.example)?;
    let s = match (&a.scaling, a.identity) {
        (Some(p), _) => parse_scaling(&read_input(Some(p))?)?,
        (None, true) => rollgap::DiagonalScaling::identity(b.dim()),
        (None, false) => min_scaled_norm(&b, &GapOptions::default())?.scaling,
    };
    let cert = certify_minimizer(&b, &s, &CertifyOptions { seed: a.seed, ..CertifyOptions::default() })?;
    sink.json("certificate.json", &json!({ "scaling": s.values(), "certificate": cert }))?;
    Ok(())
}

struct Wave {
    p: RollWaveProfile,
    cd: CharacteristicData,
    index: StabilityIndexReport,
}

fn wave(a: &ProfileArgs) -> Result<Wave> {
    let p = build_profile(a.froude, &a.options())?;
    let cd = characteristics(&p)?;
    let index = stability_index(&p, &cd)?;
    Ok(Wave { p, cd, index })
}

fn cmd_rollwave(a: &RollwaveArgs, sink: &mut Sink) -> Result<(), Failure> {
    let w = wave(&a.profile)?;
    let eps = || -> Result<f64> { Ok(a.epsilon.map_or_else(|| default_epsilon(&w.index), Ok)?) };
    match a.report {
        RollwaveReport::Profile => {
            let weights = eps().ok().and_then(|e| damping_weights(&w.p, &w.cd, e, a.c0).ok());
            sink.emit("profile.csv", &profile_csv(&w.p, &w.cd, weights.as_ref()))?;
        }
        RollwaveReport::Index => {
            let p = &w.p;
            sink.json(
                "index.json",
                &json!({
                    "froude": p.froude(), "h_plus": p.h_plus, "h_minus": p.h_minus, "period": p.period,
                    "x_s": p.x_s, "c": p.c, "q": p.q, "report": w.index,
                }),
            )?;
        }
        RollwaveReport::Weights => {
            let weights = damping_weights(&w.p, &w.cd, eps()?, a.c0)?;
            sink.json("weights.json", &json!({ "froude": w.p.froude(), "weights": weights }))?;
        }
        RollwaveReport::Threshold => {
            let s = hs_threshold(&w.p, &w.cd)?;
            sink.json(
                "threshold.json",
                &json!({
                    "froude": w.p.froude(), "s_star": s, "gamma2": w.cd.sonic.gamma2,
                    "alpha2_prime": w.cd.sonic.alpha_prime[1],
                }),
            )?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SimulateOutput {
    cells: usize,
    effective_index: f64,
    index: f64,
    blow_up: Option<f64>,
    report: DecayReport,
}

fn cmd_simulate(a: &SimulateArgs, sink: &mut Sink) -> Result<(), Failure> {
    let w = wave(&a.profile)?;
    let cfg = SimConfig {
        cells: a.n,
        cfl: a.cfl,
        t_end: a.t_end,
        floquet_xi: a.xi,
        output_interval: a.output_interval,
        index_override: a.perturb_a0,
        epsilon: a.epsilon,
        c0: a.c0,
        ..SimConfig::default()
    };
    let sim = setup(&w.p, &w.cd, &cfg)?;
    let u0 = if a.zero_data { vec![Complex64::default(); 2 * a.n] } else { sim.random_initial_data(a.seed, a.modes) };
    let tr = sim.run(&u0, Complex64::default())?;
    let observable = match a.observable {
        Observable::Energy => DecayObservable::Energy,
        Observable::RateEnergy => DecayObservable::RateEnergy,
    };
    let report = measure_decay(&sim, &tr, observable, a.discard);
    let csv = trajectory_csv(&tr);
    match (&a.trajectory, &sink.dir) {
        (Some(p), _) => sink.file(p, &csv)?,
        (None, Some(_)) => sink.emit("trajectory.csv", &csv)?,
        (None, None) => {}
    }
    sink.json(
        "decay.json",
        &SimulateOutput {
            cells: a.n,
            effective_index: sim.effective_index,
            index: sim.index.index,
            blow_up: tr.blow_up,
            report,
        },
    )?;
    Ok(())
}

fn cmd_stats(a: &StatsArgs, sink: &mut Sink) -> Result<(), Failure> {
    let ensemble = match a.ensemble {
        EnsembleArg::ComplexGaussian => Ensemble::ComplexGaussian,
        EnsembleArg::RealGaussian => Ensemble::RealGaussian,
    };
    let opts = StatsOptions { threshold: a.threshold, inject_c4: a.inject_c4, ..StatsOptions::default() };
    let s = random_gap_stats(a.n, a.count, ensemble, a.seed, &opts)?;
    sink.json("stats.json", &s)?;
    Ok(())
}

fn cmd_general(a: &GeneralArgs, sink: &mut Sink) -> Result<(), Failure> {
    let d: GeneralModeData = match (&a.input, a.froude) {
        (_, Some(f)) => {
            let w = wave(&ProfileArgs { froude: f, h_plus_fraction: 0.5, h_plus: None, grid_cells: 400 })?;
            GeneralModeData::from_saint_venant(&w.p, &w.cd, &w.index)
        }
        (Some(p), None) => parse_mode_data(&read_input(Some(p))?)?,
        (None, None) => return Err(Failure::Input(anyhow::anyhow!("need --input or --froude"))),
    };
    let b = build_b(&d)?;
    let opts = GapOptions::default();
    let (rat, sat) = (hf_rat(&b, &opts)?, hf_sat(&b, &opts)?);
    let ulem = sample_ulem(&d, &b, &DEFAULT_A_GRID, a.samples, a.seed, &opts)?;
    let s = match &a.scaling {
        Some(p) => parse_scaling(&read_input(Some(p))?)?,
        None => min_scaled_norm(&b, &opts)?.scaling,
    };
    let threshold = d.regularity_threshold()?;
    let k = a.k.unwrap_or_else(|| (threshold.floor() + 1.0).max(1.0) as u32);
    let weights = general_weights(&d, &s, k)?;
    sink.json(
        "general.json",
        &json!({
            "modes": d,
            "B": matrix_to_json(&b),
            "hf_rat": rat,
            "hf_sat": sat,
            "rat_holds": rat < 1.0,
            "sat_holds": sat < 1.0,
            "ulem": ulem,
            "scaling": s.values(),
            "weights": weights,
        }),
    )?;
    Ok(())
}

fn unix_now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64())
}

fn seed_of(c: &Command) -> Option<u64> {
    match c {
        Command::Gap(a) => Some(a.search.seed),
        Command::Certify(a) => Some(a.seed),
        Command::Simulate(a) => Some(a.seed),
        Command::Stats(a) => Some(a.seed),
        Command::General(a) => Some(a.seed),
        Command::Rollwave(_) => None,
    }
}

fn run(cli: &Cli, sink: &mut Sink) -> Result<(), Failure> {
    match &cli.command {
        Command::Gap(a) => cmd_gap(a, sink),
        Command::Certify(a) => cmd_certify(a, sink),
        Command::Rollwave(a) => cmd_rollwave(a, sink),
        Command::Simulate(a) => cmd_simulate(a, sink),
        Command::Stats(a) => cmd_stats(a, sink),
        Command::General(a) => cmd_general(a, sink),
    }
}

fn main() -> ExitCode {
    let args = match config::merge(std::env::args_os().collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let cli = Cli::parse_from(args);
    if cli.jobs > 0 {
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    let mut sink = Sink { dir: cli.out_dir.clone(), written: Vec::new() };
    if let Some(dir) = &sink.dir {
        if let Err(e) = fs::create_dir_all(dir) {
            eprintln!("error: creating {}: {e}", dir.display());
            return ExitCode::from(1);
        }
    }
    let started = unix_now();
    let result = run(&cli, &mut sink);
    let code: u8 = match &result {
        Ok(()) => 0,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            1
        }
        Err(Failure::NonConvergence) => {
            eprintln!("warning: search did not converge");
            2
        }
        Err(Failure::Nonexistence(e)) => {
            eprintln!("error: {e:#}");
            3
        }
    };
    if let Some(dir) = &cli.out_dir {
        let parameters = serde_json::to_value(&cli.command).unwrap_or(Value::Null);
        let manifest = json!({
            "command": parameters["name"],
            "parameters": parameters,
            "seed": seed_of(&cli.command),
            "jobs": cli.jobs,
            "config": cli.config,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "started": started,
            "finished": unix_now(),
            "exit_code": code,
            "outputs": sink.written,
        });
        let text = serde_json::to_string_pretty(&manifest).unwrap_or_default();
        if let Err(e) = fs::write(dir.join("manifest.json"), text + "\n") {
            eprintln!("error: writing manifest: {e}");
            return ExitCode::from(1);
        }
    }
    ExitCode::from(code)
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_valid() {
        Cli::command().debug_assert();
    }

    #[test]
    fn nonexistence_maps_to_exit_three() {
        let e: Failure = Error::NoRollWave { froude: 1.5, reason: "x".into() }.into();
        assert!(matches!(e, Failure::Nonexistence(_)));
        let e: Failure = Error::Parse("x".into()).into();
        assert!(matches!(e, Failure::Input(_)));
    }

    #[test]
    fn unknown_command_is_rejected() {
        assert!(Cli::try_parse_from(["rollgap", "nope"]).is_err());
    }
}
