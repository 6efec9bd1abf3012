use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use siegel::demo::covering_demo;
use siegel::escape::{area_decay_experiment, mu_field, z_set_enclosure, EscapeConfig, EscapeGrid, GeometricFit};
use siegel::io::{self, IoError, SCHEMA_VERSION};
use siegel::pipeline::{build_model, run_pipeline, ExperimentConfig, ModelFile, PipelineError};
use siegel::render::{render_siegel, RenderConfig};
use siegel_core::arithmetic::{classify, david_constant, shifted_david_constant};
use siegel_core::cells::{build_cells, containment_report, dilatation_report, ExtensionH};
use siegel_core::circle::{cell_partition, dynamical_partition, partition_lemmas_check, real_bounds_report, Arc};
use siegel_core::measure::{david_condition_fit, log_spaced, GridField};

#[derive(Parser)]
#[command(name = "siegel", version, about = "Numerical experiments on the Siegel disk of e^{2πiθ} sin z")]
struct Cli {
    /// Experiment config (JSON); explicit flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Continued fraction, convergents and arithmetic class of θ.
    Classify {
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        depth: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Model-map construction.
    Model {
        #[command(subcommand)]
        action: ModelAction,
    },
    /// Dynamical and cell partitions of one level.
    Partitions {
        #[command(flatten)]
        src: ModelSource,
        #[arg(long)]
        level: usize,
        #[arg(long)]
        csv: bool,
    },
    /// Comparability ratios near the critical point and value.
    RealBounds {
        #[command(flatten)]
        src: ModelSource,
        #[arg(long, value_parser = parse_levels)]
        levels: RangeInclusive<usize>,
        #[arg(long)]
        csv: bool,
    },
    /// Cell annuli and their nesting.
    Cells {
        #[command(flatten)]
        src: ModelSource,
        #[arg(long, value_parser = parse_levels)]
        levels: RangeInclusive<usize>,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        report: Format,
    },
    /// Dilatation of the interior extension, level by level.
    Extension {
        #[command(flatten)]
        src: ModelSource,
        #[arg(long)]
        max_level: Option<usize>,
        #[arg(long)]
        dilatation_csv: bool,
    },
    /// Areas of the first-entry level sets and their geometric decay.
    AreaDecay {
        #[command(flatten)]
        src: ModelSource,
        #[arg(long, value_parser = parse_levels)]
        levels: Option<RangeInclusive<usize>>,
        #[arg(long)]
        res: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        csv: bool,
        /// Directory for the field dump and heatmap.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exponential-area fit of the Beltrami coefficient near modulus one.
    DavidCheck {
        #[command(flatten)]
        src: ModelSource,
        #[arg(long, value_enum, default_value_t = Field::Mu)]
        field: Field,
        /// `lo:hi:count`, log-spaced.
        #[arg(long, value_parser = parse_eps)]
        eps: Option<(f64, f64, usize)>,
        #[arg(long)]
        res: Option<usize>,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Random disk families against the covering lemma.
    CoveringDemo {
        #[arg(long, default_value_t = 12)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        csv: bool,
        /// Writes failing families as JSON disk lists here.
        #[arg(long)]
        counterexamples: Option<PathBuf>,
    },
    /// Pixel picture of the Siegel disk with the critical orbit.
    Render {
        #[arg(long)]
        theta: Option<String>,
        #[arg(long, default_value_t = 1024)]
        res: usize,
        #[arg(long, default_value_t = 2000)]
        iters: usize,
        #[arg(long)]
        half_width: Option<f64>,
        /// PPM output path.
        #[arg(long, default_value = "siegel.ppm")]
        out: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// All stages in order, with a report bundle in the output directory.
    Pipeline {
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        max_level: Option<usize>,
        #[arg(long)]
        res: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ModelAction {
    /// Fits the exterior map and solves for t.
    Build {
        #[arg(long)]
        theta: Option<String>,
        #[arg(long)]
        degree: Option<usize>,
        #[arg(long)]
        grid: Option<usize>,
        #[arg(long, default_value = "model.json")]
        out: PathBuf,
    },
}

/// A saved model, or one built from the config.
#[derive(Args)]
struct ModelSource {
    #[arg(long, alias = "map")]
    model: Option<PathBuf>,
    #[arg(long)]
    theta: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Field {
    Mu,
    Nu,
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Stage(String),
    #[error(transparent)]
    Io(#[from] IoError),
}

impl CliError {
    fn broken_pipe(&self) -> bool {
        let kind = match self {
            CliError::Io(IoError::File { source, .. }) => Some(source.kind()),
            CliError::Io(IoError::Json(e)) => e.io_error_kind(),
            CliError::Io(IoError::Csv(e)) => match e.kind() {
                csv::ErrorKind::Io(io) => Some(io.kind()),
                _ => None,
            },
            _ => None,
        };
        kind == Some(std::io::ErrorKind::BrokenPipe)
    }

    fn code(&self) -> u8 {
        match self {
            CliError::Precondition(_) => 2,
            CliError::Stage(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn stage(e: impl std::fmt::Display) -> Self {
        CliError::Stage(e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::Config(m) => CliError::Precondition(m),
            PipelineError::Io(e) => CliError::Io(e),
            e @ PipelineError::StageFailure { .. } => CliError::Stage(e.to_string()),
        }
    }
}

fn parse_levels(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s.split_once("..").ok_or("expected A..B")?;
    let a: usize = a.parse().map_err(|_| "bad lower level")?;
    let b: usize = b.trim_start_matches('=').parse().map_err(|_| "bad upper level")?;
    if a > b {
        return Err("empty level range".into());
    }
    Ok(a..=b)
}

fn parse_eps(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, n] = parts[..] else {
        return Err("expected lo:hi:count".into());
    };
    let lo = lo.parse().map_err(|_| "bad lo")?;
    let hi = hi.parse().map_err(|_| "bad hi")?;
    let n = n.parse().map_err(|_| "bad count")?;
    Ok((lo, hi, n))
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, CliError> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::default());
    };
    let text = std::fs::read(path).map_err(|source| IoError::File { path: path.display().to_string(), source })?;
    serde_json::from_slice(&text).map_err(|e| CliError::Precondition(format!("{}: {e}", path.display())))
}

fn obtain_model(src: &ModelSource, cfg: &mut ExperimentConfig) -> Result<ModelFile, CliError> {
    if let Some(path) = &src.model {
        return Ok(ModelFile::load(path)?);
    }
    if let Some(t) = &src.theta {
        cfg.theta = t.clone();
    }
    cfg.validate().map_err(CliError::Precondition)?;
    Ok(build_model(cfg)?)
}

fn stdout_json<T: Serialize>(value: &T) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value).map_err(IoError::from)?;
    writeln!(out).map_err(|source| IoError::File { path: "<stdout>".into(), source })?;
    Ok(())
}

fn emit<T: Serialize>(csv: bool, rows: &[T], json: &impl Serialize) -> Result<(), CliError> {
    if csv {
        io::csv_to(std::io::stdout().lock(), rows)?;
        Ok(())
    } else {
        stdout_json(json)
    }
}

#[derive(Serialize)]
struct Versioned<T> {
    schema_version: u32,
    #[serde(flatten)]
    body: T,
}

fn versioned<T>(body: T) -> Versioned<T> {
    Versioned { schema_version: SCHEMA_VERSION, body }
}

#[derive(Serialize)]
struct ArcRow {
    partition: &'static str,
    level: usize,
    start_index: i64,
    end_index: i64,
    start: f64,
    end: f64,
    length: f64,
}

fn arc_rows<'a>(name: &'static str, level: usize, arcs: &'a [Arc]) -> impl Iterator<Item = ArcRow> + 'a {
    arcs.iter().map(move |a| ArcRow {
        partition: name,
        level,
        start_index: a.start,
        end_index: a.end,
        start: a.start_pos,
        end: (a.start_pos + a.length).fract(),
        length: a.length,
    })
}

fn dump_field(dir: &Path, name: &str, field: &GridField) -> Result<(), CliError> {
    io::ensure_dir(dir)?;
    io::write_bytes(&dir.join(format!("{name}.bin")), &io::field_bytes(field))?;
    io::write_bytes(&dir.join(format!("{name}.ppm")), &io::heatmap_ppm(field, 0.0, 1.0))?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::Classify { theta, depth, json } => {
            let cf = io::parse_theta(theta.as_deref().unwrap_or(&cfg.theta), depth.unwrap_or(cfg.depth))
                .map_err(|e| CliError::Precondition(e.to_string()))?;
            let class = classify(&cf);
            let convergents: Vec<(u128, u128)> = (0..cf.depth()).map(|n| (cf.p(n + 1), cf.q(n + 1))).collect();
            #[derive(Serialize)]
            struct Constants {
                david_c: f64,
                shifted_david_c: f64,
                bound_b: u64,
            }
            #[derive(Serialize)]
            struct Out<'a> {
                theta: f64,
                quotients: &'a [u64],
                certified_depth: usize,
                convergents: Vec<(u128, u128)>,
                class: siegel_core::arithmetic::ClassKind,
                constants: Constants,
            }
            let out = Out {
                theta: cf.value,
                quotients: &cf.quotients,
                certified_depth: cf.certified_depth,
                convergents,
                class: class.kind,
                constants: Constants {
                    david_c: david_constant(&cf.quotients),
                    shifted_david_c: shifted_david_constant(&cf.quotients),
                    bound_b: class.bound_b,
                },
            };
            if json {
                stdout_json(&versioned(out))?;
            } else {
                println!("θ = {}  quotients {:?}", out.theta, out.quotients);
                println!("class {:?}  max a_n = {}  david C = {:.4}", out.class, class.bound_b, class.david_c);
            }
        }
        Command::Model { action: ModelAction::Build { theta, degree, grid, out } } => {
            if let Some(t) = theta {
                cfg.theta = t;
            }
            cfg.degree = degree.unwrap_or(cfg.degree);
            cfg.fit_grid = grid.unwrap_or(cfg.fit_grid);
            cfg.validate().map_err(CliError::Precondition)?;
            let file = build_model(&cfg)?;
            io::write_json(&out, &file)?;
            let psi = &file.model.psi;
            eprintln!(
                "degree {} residual {:.3e} t = {} (± {:.1e})",
                psi.degree,
                psi.fit_residual,
                file.model.t(),
                file.model.solution.error_bound
            );
        }
        Command::Partitions { src, level, csv } => {
            let file = obtain_model(&src, &mut cfg)?;
            let table = file.model.orbit_table(level + 2).map_err(CliError::stage)?;
            let lemmas = partition_lemmas_check(&file.model.quotient_lift(), &table, level).map_err(CliError::stage)?;
            let dynamical = dynamical_partition(&table, level).map_err(CliError::stage)?;
            let cell = cell_partition(&table, level).map_err(CliError::stage)?;
            let rows: Vec<ArcRow> =
                arc_rows("dynamical", level, &dynamical.arcs).chain(arc_rows("cell", level, &cell.arcs)).collect();
            if csv {
                io::csv_to(std::io::stdout().lock(), &rows)?;
                eprintln!("{}", serde_json::to_string(&lemmas).map_err(IoError::from)?);
            } else {
                #[derive(Serialize)]
                struct Out<'a> {
                    checks: &'a siegel_core::circle::LemmaReport,
                    arcs: &'a [ArcRow],
                }
                stdout_json(&versioned(Out { checks: &lemmas, arcs: &rows }))?;
            }
        }
        Command::RealBounds { src, levels, csv } => {
            let file = obtain_model(&src, &mut cfg)?;
            let table = file.model.orbit_table(*levels.end() + 1).map_err(CliError::stage)?;
            let rows = real_bounds_report(&table, levels).map_err(CliError::stage)?;
            emit(csv, &rows, &versioned(serde_json::json!({ "rows": rows })))?;
        }
        Command::Cells { src, levels, report } => {
            let file = obtain_model(&src, &mut cfg)?;
            let table = file.model.orbit_table(*levels.end()).map_err(CliError::stage)?;
            let annuli = levels.map(|n| build_cells(&table, n)).collect::<Result<Vec<_>, _>>().map_err(CliError::stage)?;
            #[derive(Serialize)]
            struct Row {
                level: usize,
                cells: usize,
                commensurability: f64,
            }
            let rows: Vec<Row> = annuli
                .iter()
                .map(|a| Row { level: a.level, cells: a.cells.len(), commensurability: a.commensurability })
                .collect();
            let nesting: Vec<_> = annuli.iter().zip(annuli.iter().skip(2)).map(|(c, f)| containment_report(c, f)).collect();
            emit(
                matches!(report, Format::Csv),
                &rows,
                &versioned(serde_json::json!({ "levels": rows, "containment": nesting })),
            )?;
        }
        Command::Extension { src, max_level, dilatation_csv } => {
            let top = max_level.unwrap_or(cfg.max_level);
            let file = obtain_model(&src, &mut cfg)?;
            let model = &file.model;
            let source = model.orbit_table(top).map_err(CliError::stage)?;
            let rigid = model.rigid_table(top).map_err(CliError::stage)?;
            let ext = ExtensionH::build(&source, &rigid, top).map_err(CliError::stage)?;
            let alpha = model.alpha_cf().map_err(CliError::stage)?;
            let report = dilatation_report(&ext, |n| (n + 2 <= alpha.depth()).then(|| alpha.a(n + 2)));
            emit(dilatation_csv, &report.rows, &versioned(&report))?;
        }
        Command::AreaDecay { src, levels, res, radius, max_iter, csv, out } => {
            cfg.escape_resolution = res.unwrap_or(cfg.escape_resolution);
            cfg.escape_radius = radius.unwrap_or(cfg.escape_radius);
            cfg.max_iter = max_iter.unwrap_or(cfg.max_iter);
            let file = obtain_model(&src, &mut cfg)?;
            let model = &file.model;
            let top = levels.as_ref().map_or(cfg.max_level, |l| *l.end());
            let source = model.orbit_table(top).map_err(CliError::stage)?;
            let rigid = model.rigid_table(top).map_err(CliError::stage)?;
            let ext = ExtensionH::build(&source, &rigid, top).map_err(CliError::stage)?;
            let first = levels.as_ref().map_or(ext.first_level, |l| *l.start()).max(ext.first_level);
            let ecfg = EscapeConfig { max_iter: cfg.max_iter, ..EscapeConfig::default() };
            let grid = EscapeGrid::sample(model, &ext, cfg.escape_radius, cfg.escape_resolution, &ecfg)
                .map_err(CliError::stage)?;
            let mut pts = Vec::new();
            for n in 1..top {
                let z = z_set_enclosure(&source, n, cfg.z_alpha, cfg.z_beta).map_err(CliError::stage)?;
                pts.push((n, z.area_bound));
            }
            let zfit = GeometricFit::from_points(&pts);
            let report = area_decay_experiment(&grid, first..=top, |n| zfit.map_or(0.0, |f| f.at(n)))
                .map_err(CliError::stage)?;
            if let Some(dir) = out {
                let [plane, inverted] = grid.nu_fields();
                dump_field(&dir, "nu_plane", &plane)?;
                dump_field(&dir, "nu_inverted", &inverted)?;
            }
            emit(csv, &report.rows, &versioned(&report))?;
        }
        Command::DavidCheck { src, field, eps, res, radius, json, out } => {
            cfg.mu_resolution = res.unwrap_or(cfg.mu_resolution);
            cfg.escape_radius = radius.unwrap_or(cfg.escape_radius);
            if let Some((lo, hi, n)) = eps {
                (cfg.eps_lo, cfg.eps_hi, cfg.eps_count) = (lo, hi, n);
            }
            let file = obtain_model(&src, &mut cfg)?;
            let model = &file.model;
            let top = cfg.max_level;
            let source = model.orbit_table(top).map_err(CliError::stage)?;
            let rigid = model.rigid_table(top).map_err(CliError::stage)?;
            let ext = ExtensionH::build(&source, &rigid, top).map_err(CliError::stage)?;
            let ecfg = EscapeConfig { max_iter: cfg.max_iter, ..EscapeConfig::default() };
            let charts = match field {
                Field::Mu => mu_field(model, &ext, cfg.escape_radius, cfg.mu_resolution, &ecfg)
                    .map_err(CliError::stage)?
                    .charts,
                Field::Nu => EscapeGrid::sample(model, &ext, cfg.escape_radius, cfg.mu_resolution, &ecfg)
                    .map_err(CliError::stage)?
                    .nu_fields(),
            };
            let epsilons = log_spaced(cfg.eps_lo, cfg.eps_hi, cfg.eps_count);
            let fit = david_condition_fit(&[&charts[0], &charts[1]], &epsilons).map_err(CliError::stage)?;
            if let Some(dir) = out {
                dump_field(&dir, "field_plane", &charts[0])?;
                dump_field(&dir, "field_inverted", &charts[1])?;
            }
            emit(!json, &fit.points, &versioned(&fit))?;
        }
        Command::CoveringDemo { n, k, trials, seed, csv, counterexamples } => {
            let seed = seed.unwrap_or(cfg.seed);
            let demo = covering_demo(n, k, trials, seed).map_err(|e| CliError::Precondition(e.to_string()))?;
            if let Some(path) = counterexamples {
                io::write_json(&path, &versioned(serde_json::json!({ "families": demo.counterexamples })))?;
            }
            eprintln!(
                "exact pass rate {:.4}, greedy pass rate {:.4}, {} counterexamples",
                demo.exact_pass_rate,
                demo.greedy_pass_rate,
                demo.counterexamples.len()
            );
            emit(csv, &demo.rows, &versioned(&demo))?;
        }
        Command::Render { theta, res, iters, half_width, out, json } => {
            let value = io::parse_theta_value(theta.as_deref().unwrap_or(&cfg.theta), cfg.depth)
                .map_err(|e| CliError::Precondition(e.to_string()))?;
            let mut rcfg = RenderConfig { resolution: res, iters, ..RenderConfig::default() };
            rcfg.half_width = half_width.unwrap_or(rcfg.half_width);
            let result = render_siegel(value, &rcfg).map_err(|e| CliError::Precondition(e.to_string()))?;
            io::write_bytes(&out, &result.to_ppm())?;
            for w in &result.warnings {
                eprintln!("warning: {w}");
            }
            #[derive(Serialize)]
            struct Summary<'a> {
                theta: f64,
                image: String,
                disk_pixels: usize,
                boundary_hits: [f64; 2],
                orbit_to_boundary: f64,
                boundary_to_orbit: f64,
                symmetry_defect: f64,
                warnings: &'a [String],
            }
            let summary = Summary {
                theta: result.theta,
                image: out.display().to_string(),
                disk_pixels: result.disk_pixels,
                boundary_hits: result.boundary_hits,
                orbit_to_boundary: result.orbit_to_boundary,
                boundary_to_orbit: result.boundary_to_orbit,
                symmetry_defect: result.symmetry_defect,
                warnings: &result.warnings,
            };
            if json {
                stdout_json(&versioned(summary))?;
            } else {
                println!(
                    "disk {} px, critical points {:.2}/{:.2} px from the boundary, orbit/boundary distances {:.2}/{:.2} px",
                    summary.disk_pixels,
                    summary.boundary_hits[0],
                    summary.boundary_hits[1],
                    summary.orbit_to_boundary,
                    summary.boundary_to_orbit
                );
            }
        }
        Command::Pipeline { theta, degree, max_level, res, seed, out } => {
            if let Some(t) = theta {
                cfg.theta = t;
            }
            cfg.degree = degree.unwrap_or(cfg.degree);
            cfg.max_level = max_level.unwrap_or(cfg.max_level);
            if let Some(r) = res {
                cfg.escape_resolution = r;
                cfg.mu_resolution = r;
            }
            cfg.seed = seed.unwrap_or(cfg.seed);
            cfg.out_dir = out.unwrap_or(cfg.out_dir);
            let report = run_pipeline(&cfg)?;
            eprintln!("{} stages complete; report in {}", report.completed.len(), cfg.out_dir.join("report.json").display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // A closed stdout (`siegel ... | head`) is not an error.
        Err(e) if e.broken_pipe() => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
