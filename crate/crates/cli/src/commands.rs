//! Argument parsing and the four subcommands.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cfs_core::diracsea::{self, LatticeSeaSystem, LatticeSpec, ModeLabel, OccupationEdits, SeaError, WeightConvention};
use cfs_core::measure::{self, Assembly, DiscreteMeasure};
use cfs_core::minimize::{self, MinimizeError, MinimizeStatus};
use cfs_core::vacuum::{self, AuditConfig, PairSampler, VacuumError};
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::MinimizeConfig;
use crate::error::CliError;
use crate::export;
use crate::system_file::{Provenance, SystemFile};

#[derive(Debug, Parser)]
#[command(name = "cfs", version, about = "Causal fermion system experiments")]
pub struct Cli {
    /// Worker threads; falls back to CFS_THREADS, then to all cores.
    #[arg(long, global = true, env = "CFS_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the lattice vacuum (optionally with edited occupation) and save it.
    BuildVacuum(BuildArgs),
    /// Compare spectral and Minkowski causality on pairs of a lattice system.
    Classify(ClassifyArgs),
    /// Print the causal action, boundedness functional, volume and trace.
    Action(ActionArgs),
    /// Minimize the action over a registered toy family.
    Minimize(MinimizeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WeightArg {
    Counting,
    Volume,
}

impl From<WeightArg> for WeightConvention {
    fn from(w: WeightArg) -> Self {
        match w {
            WeightArg::Counting => WeightConvention::Counting,
            WeightArg::Volume => WeightConvention::Volume,
        }
    }
}

#[derive(Debug, Args)]
pub struct BuildArgs {
    #[arg(long)]
    pub eps: f64,
    #[arg(long)]
    pub nt: usize,
    #[arg(long)]
    pub ns: usize,
    #[arg(long)]
    pub mass: f64,
    /// Positive-energy mode to occupy, as `kx,ky,kz;spin`.
    #[arg(long = "add-mode", value_parser = parse_mode)]
    pub add_mode: Vec<ModeLabel>,
    /// Sea mode to remove, as `kx,ky,kz;spin`.
    #[arg(long = "remove-mode", value_parser = parse_mode)]
    pub remove_mode: Vec<ModeLabel>,
    #[arg(long, value_enum, default_value = "counting")]
    pub weight: WeightArg,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub sys: PathBuf,
    /// `all`, or `sample N`.
    #[arg(long, num_args = 1..=2, value_names = ["MODE", "N"], default_values = ["all"])]
    pub pairs: Vec<String>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long = "band-mult", default_value_t = vacuum::DEFAULT_BAND_MULTIPLIER)]
    pub band_mult: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ActionArgs {
    #[arg(long)]
    pub sys: PathBuf,
    /// Also print the signature and rank bounds of every atom.
    #[arg(long)]
    pub report_constraints: bool,
}

#[derive(Debug, Args)]
pub struct MinimizeArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long = "out-log")]
    pub out_log: PathBuf,
    #[arg(long = "out-best")]
    pub out_best: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parses `kx,ky,kz;spin`, optionally in parentheses.
pub fn parse_mode(text: &str) -> Result<ModeLabel, String> {
    let trimmed = text.trim().trim_start_matches('(').trim_end_matches(')');
    let (momenta, spin) = trimmed
        .split_once(';')
        .ok_or_else(|| format!("mode `{text}`: expected `kx,ky,kz;spin`"))?;
    let parts: Vec<i64> = momenta
        .split(',')
        .map(|p| p.trim().parse::<i64>())
        .collect::<Result<_, _>>()
        .map_err(|e| format!("mode `{text}`: {e}"))?;
    let momentum: [i64; 3] = parts
        .try_into()
        .map_err(|_| format!("mode `{text}`: expected three momentum labels"))?;
    let spin: u8 = spin.trim().parse().map_err(|e| format!("mode `{text}`: {e}"))?;
    if !(1..=2).contains(&spin) {
        return Err(format!("mode `{text}`: spin must be 1 or 2"));
    }
    Ok(ModeLabel { momentum, spin })
}

/// Runs a parsed command inside a thread pool of the requested size.
pub fn run(cli: Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Computation(format!("thread pool: {e}")))?;
    let mut buffer = Vec::new();
    let result = pool.install(|| {
        let sink: &mut dyn Write = &mut buffer;
        match cli.command {
            Command::BuildVacuum(args) => build_vacuum(&args, sink),
            Command::Classify(args) => classify(&args, sink),
            Command::Action(args) => action(&args, sink),
            Command::Minimize(args) => run_minimize(&args, sink),
        }
    });
    out.write_all(&buffer).map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    result
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn sea_error(e: SeaError) -> CliError {
    match e {
        SeaError::InvalidSpacing(_)
        | SeaError::InvalidExtent { .. }
        | SeaError::InvalidMass(_)
        | SeaError::UnknownMode { .. }
        | SeaError::ModeNotOccupied { .. }
        | SeaError::ModeAlreadyOccupied { .. }
        | SeaError::EmptyOccupation => CliError::Usage(e.to_string()),
        other => CliError::Computation(other.to_string()),
    }
}

pub fn build_vacuum(args: &BuildArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let spec = LatticeSpec::new(args.eps, args.nt, args.ns, args.mass).map_err(sea_error)?;
    let edits = OccupationEdits {
        remove: args.remove_mode.clone(),
        add: args.add_mode.clone(),
    };
    let sys = diracsea::build_system(&spec, &edits, args.weight.into()).map_err(sea_error)?;
    let file = SystemFile::from_measure(
        &sys.measure,
        Provenance::Lattice { lattice: spec, edits },
        sys.convention,
    );
    file.save(&args.out)?;

    let (mut min_pos, mut max_pos, mut min_neg, mut max_neg) = (usize::MAX, 0, usize::MAX, 0);
    for p in sys.measure.points() {
        let (pos, neg) = p.signature();
        min_pos = min_pos.min(pos);
        max_pos = max_pos.max(pos);
        min_neg = min_neg.min(neg);
        max_neg = max_neg.max(neg);
    }
    say(out, format_args!("f = {}", sys.hilbert_dim()))?;
    say(out, format_args!("atoms = {}", sys.measure.len()))?;
    say(out, format_args!("signature: positive {min_pos}..={max_pos}, negative {min_neg}..={max_neg}"))?;
    say(out, format_args!("wrote {}", args.out.display()))
}

fn parse_sampler(args: &ClassifyArgs) -> Result<PairSampler, CliError> {
    match args.pairs.as_slice() {
        [mode] if mode == "all" => Ok(PairSampler::All),
        [mode, n] if mode == "sample" => {
            let count = n
                .parse::<usize>()
                .map_err(|e| CliError::Usage(format!("--pairs sample {n}: {e}")))?;
            if count == 0 {
                return Err(CliError::Usage("--pairs sample needs a positive count".into()));
            }
            Ok(PairSampler::Sample { count, seed: args.seed })
        }
        other => Err(CliError::Usage(format!(
            "--pairs expects `all` or `sample N`, got `{}`",
            other.join(" ")
        ))),
    }
}

/// Reassembles a lattice system from a saved file: atoms from the file, modes
/// rebuilt from the recorded lattice parameters.
pub fn lattice_system(file: &SystemFile) -> Result<LatticeSeaSystem, CliError> {
    let Provenance::Lattice { lattice, edits } = &file.metadata.provenance else {
        return Err(CliError::Usage("classification needs a lattice system file".into()));
    };
    lattice.validate().map_err(|e| CliError::Format(e.to_string()))?;
    let sea = diracsea::build_sea_modes(lattice).map_err(sea_error)?;
    let modes = if edits.is_empty() { sea } else { sea.with_edits(edits).map_err(sea_error)? };
    let measure = file.to_measure()?;
    if measure.len() != lattice.point_count() || measure.hilbert_dim() != modes.len() {
        return Err(CliError::Format(format!(
            "file has {} atoms on C^{}, lattice expects {} atoms on C^{}",
            measure.len(),
            measure.hilbert_dim(),
            lattice.point_count(),
            modes.len()
        )));
    }
    Ok(LatticeSeaSystem {
        spec: *lattice,
        edits: edits.clone(),
        convention: file.metadata.weight_convention,
        modes,
        measure,
    })
}

pub fn classify(args: &ClassifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let sampler = parse_sampler(args)?;
    if !(args.band_mult.is_finite() && args.band_mult >= 0.0) {
        return Err(CliError::Usage(format!("--band-mult must be non-negative, got {}", args.band_mult)));
    }
    let sys = lattice_system(&SystemFile::load(&args.sys)?)?;
    let config = AuditConfig { band_multiplier: args.band_mult, ..AuditConfig::default() };
    let report = vacuum::causality_audit(&sys, sampler, config).map_err(|e| match e {
        VacuumError::Pair { ix, iy, source } => {
            CliError::Computation(format!("pair ({ix}, {iy}): eigenvalue computation failed: {source}"))
        }
        other => CliError::Computation(other.to_string()),
    })?;
    let file = fs::File::create(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    export::write_audit(BufWriter::new(file), &report.rows)?;

    let s = &report.summary;
    say(out, format_args!("pairs = {}", s.pairs))?;
    say(out, format_args!("in band (excluded) = {}", s.in_band))?;
    say(out, format_args!("agreement = {}/{} = {:.6}", s.agreements, s.out_of_band, s.agreement_rate))?;
    let names = ["spacelike", "timelike", "lightlike"];
    for (i, row) in s.confusion.iter().enumerate() {
        say(
            out,
            format_args!("minkowski {:<9} -> spectral s/t/l = {} {} {}", names[i], row[0], row[1], row[2]),
        )?;
    }
    say(
        out,
        format_args!(
            "valid decompositions = {}, max formula discrepancy = {:.3e}, max clifford residual = {:.3e}",
            s.valid_decompositions, s.max_formula_discrepancy, s.max_clifford_residual
        ),
    )?;
    if s.solver_flags > 0 {
        say(out, format_args!("eigensolver disagreement flagged on {} pairs", s.solver_flags))?;
    }
    say(out, format_args!("wrote {}", args.out.display()))
}

/// `S, T` evaluated on a measure.
pub fn functionals(rho: &DiscreteMeasure) -> Result<(f64, f64), CliError> {
    let sums = measure::pair_functionals(rho, Assembly::Symmetric).map_err(|e| CliError::Computation(e.to_string()))?;
    Ok((sums.action, sums.boundedness))
}

pub fn action(args: &ActionArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let rho = SystemFile::load(&args.sys)?.to_measure()?;
    let (s, t) = functionals(&rho)?;
    say(out, format_args!("S = {s:.14e}"))?;
    say(out, format_args!("T = {t:.14e}"))?;
    say(out, format_args!("volume = {:.14e}", measure::total_volume(&rho)))?;
    say(out, format_args!("trace = {:.14e}", measure::trace_integral(&rho)))?;
    if args.report_constraints {
        let n = rho.spin_dim();
        let max_pos = rho.points().map(|p| p.signature().0).max().unwrap_or(0);
        let max_neg = rho.points().map(|p| p.signature().1).max().unwrap_or(0);
        say(out, format_args!("atoms = {}, f = {}, n = {n}", rho.len(), rho.hilbert_dim()))?;
        say(out, format_args!("max positive eigenvalues = {max_pos} (bound {n})"))?;
        say(out, format_args!("max negative eigenvalues = {max_neg} (bound {n})"))?;
    }
    Ok(())
}

fn minimize_error(e: MinimizeError) -> CliError {
    match e {
        MinimizeError::InfeasibleTrace { .. } | MinimizeError::InfeasibleStart { .. } => CliError::Infeasible(e.to_string()),
        MinimizeError::InvalidVolume(_) | MinimizeError::ParameterCount { .. } | MinimizeError::OutOfDomain { .. } => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Computation(other.to_string()),
    }
}

pub fn run_minimize(args: &MinimizeArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let config = MinimizeConfig::load(&args.config)?;
    let problem = config.problem(args.seed)?;
    let outcome = minimize::minimize_action(&problem, &config.budget).map_err(minimize_error)?;

    let log = fs::File::create(&args.out_log).map_err(|e| CliError::io(&args.out_log, e))?;
    export::write_log(BufWriter::new(log), &outcome.log)?;
    SystemFile::from_measure(&outcome.measure, Provenance::abstract_(), WeightConvention::Counting).save(&args.out_best)?;

    let c = &problem.constraints;
    let volume = measure::total_volume(&outcome.measure);
    let trace = measure::trace_integral(&outcome.measure);
    say(out, format_args!("family = {}", problem.family.name()))?;
    say(out, format_args!("params = {:?}", outcome.params))?;
    say(out, format_args!("best S = {:.14e}", outcome.action))?;
    say(out, format_args!("T = {:.14e}", outcome.boundedness))?;
    say(out, format_args!("volume residual = {:.3e}", (volume - c.volume_target).abs()))?;
    say(out, format_args!("trace residual = {:.3e}", (trace - c.trace_target).abs()))?;
    let status = match outcome.status {
        MinimizeStatus::Converged => "converged",
        MinimizeStatus::BudgetExhausted => "budget exhausted",
    };
    say(out, format_args!("status = {status}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_syntax() {
        assert_eq!(parse_mode("1,0,-1;2").unwrap(), ModeLabel { momentum: [1, 0, -1], spin: 2 });
        assert_eq!(parse_mode("(0,0,0;1)").unwrap(), ModeLabel { momentum: [0, 0, 0], spin: 1 });
        assert!(parse_mode("0,0;1").is_err());
        assert!(parse_mode("0,0,0;3").is_err());
        assert!(parse_mode("0,0,0").is_err());
    }

    #[test]
    fn pairs_flag() {
        let cli = Cli::try_parse_from(["cfs", "classify", "--sys", "a", "--out", "b", "--pairs", "sample", "10", "--seed", "4"]).unwrap();
        let Command::Classify(args) = cli.command else { panic!() };
        assert_eq!(parse_sampler(&args).unwrap(), PairSampler::Sample { count: 10, seed: 4 });
        let cli = Cli::try_parse_from(["cfs", "classify", "--sys", "a", "--out", "b"]).unwrap();
        let Command::Classify(args) = cli.command else { panic!() };
        assert_eq!(parse_sampler(&args).unwrap(), PairSampler::All);
        let cli = Cli::try_parse_from(["cfs", "classify", "--sys", "a", "--out", "b", "--pairs", "some"]).unwrap();
        let Command::Classify(args) = cli.command else { panic!() };
        assert_eq!(parse_sampler(&args).unwrap_err().exit_code(), 2);
    }
}
