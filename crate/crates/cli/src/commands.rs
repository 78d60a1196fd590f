use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use curvebpe::analysis::ScanOptions;
use curvebpe::curve::RationalMap;
use curvebpe::measure::{isometry_check, project_measure, pullback_measure, pushforward, DiscreteMeasure};
use curvebpe::multipoly::MultiPoly;
use curvebpe::operators::{block_decomposition_from, witness_sequence, BlockSummary};
use curvebpe::ortho::OrthonormalSystem;
use curvebpe::presets::{analyze, guarded_density_degree};
use curvebpe::rational::parameter_region;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::*;
use crate::CliError;

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn write_report<T: Serialize>(cli: &Cli, job: &JobConfig, result: T) -> anyhow::Result<()> {
    let path = cli.out.join(format!("{}.json", job.command));
    write_json(&path, &Report { config: job, result })?;
    println!("{}", path.display());
    Ok(())
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    CliError::Validation(msg.into()).into()
}

pub fn run(cli: &Cli) -> anyhow::Result<()> {
    let job = JobConfig {
        command: cli.command.name(),
        seed: cli.seed,
        arguments: &cli.command,
    };
    match &cli.command {
        Command::Analyze(a) => run_analyze(cli, &job, a),
        Command::Pullback(a) => run_pullback(cli, &job, a),
        Command::Pushforward(a) => run_pushforward(cli, &job, a),
        Command::Codim(a) => run_codim(cli, &job, a),
        Command::Blocks(a) => run_blocks(cli, &job, a),
        Command::Witness(a) => run_witness(cli, &job, a),
        Command::Region(a) => run_region(cli, &job, a),
        Command::Project(a) => run_project(cli, &job, a),
    }
}

fn run_analyze(cli: &Cli, job: &JobConfig, args: &AnalyzeArgs) -> anyhow::Result<()> {
    let problem = args.source.problem()?;
    let grid = match &args.grid {
        Some(g) => parse_grid(g)?,
        None => problem.default_grid.clone(),
    };
    let mut options = ScanOptions::new(args.dmin, args.dmax);
    options.policy = args.policy.policy()?;
    options.min_component_size = args.min_component;
    let density_dmax = args.density_dmax.unwrap_or_else(|| guarded_density_degree(&problem));
    let report = analyze(&problem, &grid, &options, density_dmax)?;
    report.scan.write_csv(BufWriter::new(File::create(cli.out.join("heatmap.csv"))?))?;
    write_report(cli, job, &report)
}

#[derive(Serialize)]
struct PullbackSummary {
    measure_file: String,
    node_count: usize,
    dropped_mass: f64,
    relative_dropped_mass: f64,
    dropped_nodes: Vec<usize>,
    isometry_checks: usize,
    /// Largest `|‖p∘P‖_ν − ‖p‖_μ| / ‖p‖_μ` over the random polynomials.
    worst_isometry_defect: f64,
}

fn run_pullback(cli: &Cli, job: &JobConfig, args: &PullbackArgs) -> anyhow::Result<()> {
    let map: RationalMap = read_json(&args.map)?;
    let mu: DiscreteMeasure = read_json(&args.measure)?;
    if !(args.max_dropped >= 0.0) {
        return Err(invalid("--max-dropped must be non-negative"));
    }
    let pb = pullback_measure(&mu, &map, args.tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
    let mut worst: f64 = 0.0;
    for _ in 0..args.checks {
        let degree = rng.random_range(0..=6);
        let p = MultiPoly::random(mu.dim(), degree, &mut rng);
        let (a, b) = isometry_check(&p, &mu, &pb.measure, &map)?;
        if a > 0.0 {
            worst = worst.max((a - b).abs() / a);
        }
    }
    let file = "pullback.measure.json";
    write_json(&cli.out.join(file), &pb.measure)?;
    let relative = pb.relative_dropped_mass();
    write_report(
        cli,
        job,
        PullbackSummary {
            measure_file: file.into(),
            node_count: pb.measure.len(),
            dropped_mass: pb.dropped_mass,
            relative_dropped_mass: relative,
            dropped_nodes: pb.dropped_nodes.clone(),
            isometry_checks: args.checks,
            worst_isometry_defect: worst,
        },
    )?;
    if relative > args.max_dropped {
        return Err(CliError::ExcessiveDrop {
            relative,
            limit: args.max_dropped,
        }
        .into());
    }
    Ok(())
}

#[derive(Serialize)]
struct MeasureSummary {
    measure_file: String,
    dim: usize,
    node_count: usize,
    total_mass: f64,
}

fn emit_measure(cli: &Cli, job: &JobConfig, m: &DiscreteMeasure) -> anyhow::Result<()> {
    let file = format!("{}.measure.json", job.command);
    write_json(&cli.out.join(&file), m)?;
    write_report(
        cli,
        job,
        MeasureSummary {
            measure_file: file,
            dim: m.dim(),
            node_count: m.len(),
            total_mass: m.total_mass(),
        },
    )
}

fn run_pushforward(cli: &Cli, job: &JobConfig, args: &PushforwardArgs) -> anyhow::Result<()> {
    let map: RationalMap = read_json(&args.map)?;
    let nu: DiscreteMeasure = read_json(&args.measure)?;
    emit_measure(cli, job, &pushforward(&nu, &map)?)
}

#[derive(Serialize)]
struct CodimSummary {
    #[serde(flatten)]
    report: curvebpe::curve::CodimensionReport,
    /// Parameter monomials spanning a complement of the pullback algebra.
    complement: Vec<usize>,
}

fn run_codim(cli: &Cli, job: &JobConfig, args: &CodimArgs) -> anyhow::Result<()> {
    let map: RationalMap = match (&args.preset, &args.map) {
        (Some(name), None) => resolve_preset(name, None)?
            .build(8)?
            .map
            .ok_or_else(|| invalid(format!("preset {name} has no parametrization")))?,
        (None, Some(path)) => read_json(path)?,
        _ => return Err(invalid("exactly one of --preset or --map is required")),
    };
    let report = map.pullback_codimension(args.cap)?;
    let complement = map.pullback_complement(args.cap)?;
    write_report(cli, job, CodimSummary { report, complement })
}

fn run_blocks(cli: &Cli, job: &JobConfig, args: &BlocksArgs) -> anyhow::Result<()> {
    let problem = args.source.problem()?;
    let dim = problem.mu.dim();
    let coords: Vec<usize> = match args.coordinate {
        Some(i) if i >= dim => return Err(invalid(format!("coordinate {i} out of range for dimension {dim}"))),
        Some(i) => vec![i],
        None => (0..dim).collect(),
    };
    let system = OrthonormalSystem::build(&problem.mu, &problem.family, args.degree)?;
    let summaries: Vec<BlockSummary> = coords
        .into_iter()
        .map(|i| block_decomposition_from(&system, &problem.mu, args.degree, i).map(|b| b.summary))
        .collect::<Result<_, _>>()?;
    write_report(cli, job, summaries)
}

fn run_witness(cli: &Cli, job: &JobConfig, args: &WitnessArgs) -> anyhow::Result<()> {
    let problem = args.source.problem()?;
    let mut beta = parse_points(&args.beta)?;
    if args.through_map {
        let map = problem
            .map
            .as_ref()
            .ok_or_else(|| invalid("--through-map needs a parametrization"))?;
        if beta.len() != 1 {
            return Err(invalid("--through-map takes a single parameter value"));
        }
        beta = map.eval(beta[0])?;
    }
    let degrees = parse_degrees(&args.degrees)?;
    write_report(cli, job, witness_sequence(&problem.mu, &problem.family, &degrees, &beta)?)
}

#[derive(Serialize)]
struct RegionSummary {
    #[serde(flatten)]
    region: curvebpe::rational::ParameterRegion,
    under_resolved: bool,
}

fn run_region(cli: &Cli, job: &JobConfig, args: &RegionArgs) -> anyhow::Result<()> {
    let problem = args.source.problem()?;
    let map = problem
        .map
        .as_ref()
        .ok_or_else(|| invalid("region needs a parametrization (--map or a curve preset)"))?;
    if map.dim() != problem.mu.dim() {
        return Err(invalid("the map does not parametrize the measure's space"));
    }
    let mut region = parameter_region(map, &problem.mu, args.margin)?;
    if let Some(p) = &args.poles {
        let reps: Vec<Complex64> = parse_points(p)?;
        region = region.with_representatives(reps)?;
    }
    let under_resolved = region.under_resolved();
    write_report(cli, job, RegionSummary { region, under_resolved })
}

fn run_project(cli: &Cli, job: &JobConfig, args: &ProjectArgs) -> anyhow::Result<()> {
    let mut source = args.source.clone();
    let a = source.a.take().map(|s| parse_complex(&s)).transpose()?.unwrap_or_default();
    let problem = source.problem()?;
    if problem.mu.dim() != 2 {
        return Err(invalid(format!("project needs a measure on ℂ², got dimension {}", problem.mu.dim())));
    }
    emit_measure(cli, job, &project_measure(&problem.mu, a)?)
}
