//! The staged experiment behind `siegel pipeline`: classify, build and solve
//! the model, partitions, cells, extension, area decay, David check.
//! Every stage result lands in one versioned JSON report plus CSVs; a failing
//! stage stops the run after the partial report is written.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use siegel_core::arithmetic::{classify, denominator_interlacing_check, InterlacingReport, RotationClass};
use siegel_core::cells::{build_cells, containment_report, dilatation_report, ContainmentReport, DilatationReport, ExtensionH};
use siegel_core::circle::{self, partition_lemmas_check, real_bounds_report, LemmaReport, OrbitTable, RealBoundsRow};
use siegel_core::measure::{david_condition_fit, log_spaced, DavidFit};

use crate::escape::{self, area_decay_experiment, z_set_enclosure, AreaDecayReport, EscapeConfig, EscapeGrid, GeometricFit};
use crate::io::{self, IoError, SCHEMA_VERSION};
use crate::model::{
    fit_exterior_map, solve_rotation_parameter, trace_domain_d, ConformalModel, DomainD, DEFAULT_DEGREE, DEFAULT_FIT_TOL,
    DEFAULT_GRID,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub theta: String,
    pub depth: usize,
    pub degree: usize,
    pub fit_grid: usize,
    pub fit_tol: f64,
    pub t_tol: f64,
    pub max_q: u64,
    /// Highest cell level built.
    pub max_level: usize,
    pub escape_radius: f64,
    pub escape_resolution: usize,
    pub max_iter: usize,
    pub mu_resolution: usize,
    pub eps_lo: f64,
    pub eps_hi: f64,
    pub eps_count: usize,
    /// Exterior angles `α > β` of the `Z_n` enclosures.
    pub z_alpha: f64,
    pub z_beta: f64,
    pub seed: u64,
    pub invariance_samples: usize,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            theta: "golden".into(),
            depth: 40,
            degree: DEFAULT_DEGREE,
            fit_grid: DEFAULT_GRID,
            fit_tol: DEFAULT_FIT_TOL,
            t_tol: 1e-15,
            max_q: 10_000_000,
            max_level: 6,
            escape_radius: 4.0,
            escape_resolution: 256,
            max_iter: escape::DEFAULT_MAX_ITER,
            mu_resolution: 256,
            eps_lo: 0.02,
            eps_hi: 0.5,
            eps_count: 12,
            z_alpha: 0.9,
            z_beta: 0.6,
            seed: 0,
            invariance_samples: 100,
            out_dir: PathBuf::from("siegel-out"),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        let positive = [
            ("fit_tol", self.fit_tol),
            ("t_tol", self.t_tol),
            ("escape_radius", self.escape_radius),
            ("eps_lo", self.eps_lo),
            ("z_beta", self.z_beta),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| !(*v > 0.0)) {
            return Err(format!("{name} must be positive"));
        }
        if !(self.eps_lo < self.eps_hi && self.eps_hi < 1.0) {
            return Err("need 0 < eps_lo < eps_hi < 1".into());
        }
        if self.eps_count < 5 {
            return Err("eps_count must be at least 5".into());
        }
        if self.escape_resolution == 0 || self.mu_resolution == 0 || self.max_iter == 0 {
            return Err("resolutions and max_iter must be positive".into());
        }
        if self.max_level < 3 {
            return Err("max_level must be at least 3".into());
        }
        io::parse_theta(&self.theta, self.depth).map_err(|e| e.to_string())?;
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("stage {stage} failed: {cause}")]
    StageFailure { stage: Stage, cause: String },
    #[error(transparent)]
    Io(#[from] IoError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Classify,
    Model,
    Solve,
    Partitions,
    Cells,
    Extension,
    AreaDecay,
    DavidCheck,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).ok().and_then(|v| v.as_str().map(str::to_owned)).unwrap_or_default();
        f.write_str(&s)
    }
}

/// The serialized model: boundary samples, expansion, `t` and diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub schema_version: u32,
    pub theta_spec: String,
    pub domain: DomainD,
    pub model: ConformalModel,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<Self, IoError> {
        let text = std::fs::read(path).map_err(|source| IoError::File { path: path.display().to_string(), source })?;
        let mut file: ModelFile = serde_json::from_slice(&text)?;
        file.model.psi.rehydrate();
        Ok(file)
    }
}

/// Traces the domain, fits the map and solves for `t`, outside the staged run.
pub fn build_model(cfg: &ExperimentConfig) -> Result<ModelFile, PipelineError> {
    let theta = io::parse_theta(&cfg.theta, cfg.depth).map_err(|e| PipelineError::Config(e.to_string()))?;
    let domain = trace_domain_d(cfg.fit_grid).map_err(fail(Stage::Model))?;
    let psi = fit_exterior_map(&domain, cfg.degree, cfg.fit_grid, cfg.fit_tol).map_err(fail(Stage::Model))?;
    let solution = solve_rotation_parameter(&psi, &theta, cfg.t_tol, cfg.max_q).map_err(fail(Stage::Solve))?;
    let model = ConformalModel::new(psi, &theta, solution);
    Ok(ModelFile { schema_version: SCHEMA_VERSION, theta_spec: cfg.theta.clone(), domain, model })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyStage {
    pub theta: f64,
    pub quotients: Vec<u64>,
    pub class: RotationClass,
    pub interlacing: InterlacingReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelStage {
    pub degree: usize,
    pub grid: usize,
    pub fit_residual: f64,
    pub iterations: usize,
    pub min_derivative: f64,
    pub c: Complex64,
    pub psi_at_one: Complex64,
    pub boundary_simple: bool,
    pub arc_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveStage {
    pub t: f64,
    pub error_bound: f64,
    pub rho_circle: f64,
    pub rho_quotient: f64,
    pub alpha: f64,
    pub alpha_quotients: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionStage {
    pub table_level: usize,
    pub lemmas: Vec<LemmaReport>,
    pub real_bounds: Vec<RealBoundsRow>,
    pub ratio_variation: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRow {
    pub level: usize,
    pub cells: usize,
    pub commensurability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStage {
    pub first_level: usize,
    pub rows: Vec<CellRow>,
    pub containment: Vec<ContainmentReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtensionStage {
    pub report: DilatationReport,
    /// Least-squares slope of the per-level maximal dilatation.
    pub trend_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnclosureRow {
    pub level: usize,
    pub regions: usize,
    pub area_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AreaStage {
    pub decay: AreaDecayReport,
    pub enclosures: Vec<EnclosureRow>,
    pub enclosure_fit: Option<GeometricFit>,
    /// Largest `||ν(z)| − |ν(g(z))||` over seeded exterior samples whose
    /// image is still exterior.
    pub invariance_defect: f64,
    pub invariance_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DavidStage {
    pub resolution: usize,
    pub fit: Option<DavidFit>,
    pub vacuous: bool,
    /// Largest sampled `|μ|`.
    pub sup_mu: f64,
    /// `sup |μ| < 1 − eps_lo`: the coefficient is bounded away from one on
    /// the grid, so the sublevel areas vanish before the exponential regime.
    pub bounded_away: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub stage: Stage,
    pub cause: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub schema_version: u32,
    pub config: ExperimentConfig,
    pub completed: Vec<Stage>,
    pub failure: Option<Failure>,
    pub classify: Option<ClassifyStage>,
    pub model: Option<ModelStage>,
    pub solve: Option<SolveStage>,
    pub partitions: Option<PartitionStage>,
    pub cells: Option<CellStage>,
    pub extension: Option<ExtensionStage>,
    pub area_decay: Option<AreaStage>,
    pub david: Option<DavidStage>,
}

fn fail<E: std::fmt::Display>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::StageFailure { stage, cause: e.to_string() }
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    report: PipelineReport,
}

impl Run<'_> {
    fn out(&self, name: &str) -> PathBuf {
        self.cfg.out_dir.join(name)
    }

    fn persist(&self) -> Result<(), PipelineError> {
        io::write_json(&self.out("report.json"), &self.report)?;
        Ok(())
    }
}

/// Runs every stage in order. On a stage failure the partial report is
/// written before the error is returned.
pub fn run_pipeline(cfg: &ExperimentConfig) -> Result<PipelineReport, PipelineError> {
    cfg.validate().map_err(PipelineError::Config)?;
    io::ensure_dir(&cfg.out_dir)?;
    let mut run = Run {
        cfg,
        report: PipelineReport {
            schema_version: SCHEMA_VERSION,
            config: cfg.clone(),
            completed: Vec::new(),
            failure: None,
            classify: None,
            model: None,
            solve: None,
            partitions: None,
            cells: None,
            extension: None,
            area_decay: None,
            david: None,
        },
    };
    match stages(&mut run) {
        Ok(()) => {
            run.persist()?;
            Ok(run.report)
        }
        Err(PipelineError::StageFailure { stage, cause }) => {
            run.report.failure = Some(Failure { stage, cause: cause.clone() });
            run.persist()?;
            Err(PipelineError::StageFailure { stage, cause })
        }
        Err(e) => Err(e),
    }
}

fn stages(run: &mut Run<'_>) -> Result<(), PipelineError> {
    let cfg = run.cfg;

    // Classify.
    let theta = io::parse_theta(&cfg.theta, cfg.depth).map_err(fail(Stage::Classify))?;
    let interlacing =
        denominator_interlacing_check(&theta, theta.depth().min(30)).map_err(fail(Stage::Classify))?;
    run.report.classify = Some(ClassifyStage {
        theta: theta.value,
        quotients: theta.quotients.clone(),
        class: classify(&theta),
        interlacing,
    });
    run.report.completed.push(Stage::Classify);

    // Model.
    let domain = trace_domain_d(cfg.fit_grid).map_err(fail(Stage::Model))?;
    let psi = fit_exterior_map(&domain, cfg.degree, cfg.fit_grid, cfg.fit_tol).map_err(fail(Stage::Model))?;
    run.report.model = Some(ModelStage {
        degree: psi.degree,
        grid: psi.grid,
        fit_residual: psi.fit_residual,
        iterations: psi.iterations,
        min_derivative: psi.min_derivative,
        c: psi.c,
        psi_at_one: psi.psi(Complex64::new(1.0, 0.0)),
        boundary_simple: domain.is_simple(),
        arc_length: domain.arc_length(),
    });
    run.report.completed.push(Stage::Model);

    // Solve.
    let solution = solve_rotation_parameter(&psi, &theta, cfg.t_tol, cfg.max_q).map_err(fail(Stage::Solve))?;
    let model = ConformalModel::new(psi, &theta, solution);
    let alpha = model.alpha_cf().map_err(fail(Stage::Solve))?;
    let rho_q = circle::rotation_number(&model.quotient_lift(), 100_000).map_err(fail(Stage::Solve))?;
    run.report.solve = Some(SolveStage {
        t: model.t(),
        error_bound: model.solution.error_bound,
        rho_circle: model.solution.certified.value,
        rho_quotient: rho_q.value,
        alpha: alpha.value,
        alpha_quotients: alpha.quotients.clone(),
    });
    io::write_json(
        &run.out("model.json"),
        &ModelFile { schema_version: SCHEMA_VERSION, theta_spec: cfg.theta.clone(), domain, model: model.clone() },
    )?;
    run.report.completed.push(Stage::Solve);

    // Partitions.
    let top = cfg.max_level;
    let table = model.orbit_table(top).map_err(fail(Stage::Partitions))?;
    let lift = model.quotient_lift();
    let mut lemmas = Vec::new();
    for n in 1..=top.saturating_sub(2) {
        lemmas.push(partition_lemmas_check(&lift, &table, n).map_err(fail(Stage::Partitions))?);
    }
    let real_bounds = real_bounds_report(&table, 1..=top - 1).map_err(fail(Stage::Partitions))?;
    io::write_csv(&run.out("partitions.csv"), &lemmas)?;
    io::write_csv(&run.out("real_bounds.csv"), &real_bounds)?;
    run.report.partitions = Some(PartitionStage {
        table_level: top,
        ratio_variation: circle::ratio_variation(&real_bounds),
        lemmas,
        real_bounds,
    });
    run.report.completed.push(Stage::Partitions);

    // Cells.
    let rigid = model.rigid_table(top).map_err(fail(Stage::Cells))?;
    let ext = ExtensionH::build(&table, &rigid, top).map_err(fail(Stage::Cells))?;
    let cells = cell_stage(&table, ext.first_level, top).map_err(fail(Stage::Cells))?;
    io::write_csv(&run.out("cells.csv"), &cells.rows)?;
    run.report.cells = Some(cells);
    run.report.completed.push(Stage::Cells);

    // Extension.
    let report = dilatation_report(&ext, |n| (n + 2 <= alpha.depth()).then(|| alpha.a(n + 2)));
    let pts: Vec<(f64, f64)> = report.rows.iter().map(|r| (r.level as f64, r.max_dilatation)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    let trend_slope = if xs.len() >= 2 { siegel_core::measure::linear_fit(&xs, &ys).0 } else { 0.0 };
    io::write_csv(&run.out("dilatation.csv"), &report.rows)?;
    run.report.extension = Some(ExtensionStage { report, trend_slope });
    run.report.completed.push(Stage::Extension);

    // Area decay.
    let ecfg = EscapeConfig { max_iter: cfg.max_iter, ..EscapeConfig::default() };
    let area = area_stage(&model, &ext, &table, cfg, &ecfg).map_err(fail(Stage::AreaDecay))?;
    io::write_csv(&run.out("area_decay.csv"), &area.decay.rows)?;
    io::write_csv(&run.out("enclosures.csv"), &area.enclosures)?;
    run.report.area_decay = Some(area);
    run.report.completed.push(Stage::AreaDecay);

    // David check.
    let mu = escape::mu_field(&model, &ext, cfg.escape_radius, cfg.mu_resolution, &ecfg).map_err(fail(Stage::DavidCheck))?;
    let eps = log_spaced(cfg.eps_lo, cfg.eps_hi, cfg.eps_count);
    let sup_mu = mu
        .charts
        .iter()
        .flat_map(|f| f.values.iter().zip(&f.weights).filter(|(_, w)| **w > 0.0).map(|(v, _)| *v))
        .fold(0.0, f64::max);
    let (fit, vacuous) = match david_condition_fit(&[&mu.charts[0], &mu.charts[1]], &eps) {
        Ok(fit) => (Some(fit), false),
        Err(siegel_core::measure::MeasureError::AllBelowThreshold) => (None, true),
        Err(e) => return Err(fail(Stage::DavidCheck)(e)),
    };
    let david = DavidStage {
        resolution: cfg.mu_resolution,
        fit,
        vacuous,
        sup_mu,
        bounded_away: sup_mu < 1.0 - cfg.eps_lo,
    };
    if let Some(fit) = &david.fit {
        io::write_csv(&run.out("david.csv"), &fit.points)?;
    }
    io::write_bytes(&run.out("mu_plane.bin"), &io::field_bytes(&mu.charts[0]))?;
    io::write_bytes(&run.out("mu_plane.ppm"), &io::heatmap_ppm(&mu.charts[0], 0.0, 1.0))?;
    run.report.david = Some(david);
    run.report.completed.push(Stage::DavidCheck);
    Ok(())
}

fn cell_stage(table: &OrbitTable, first: usize, top: usize) -> Result<CellStage, siegel_core::cells::CellError> {
    let annuli = (first..=top).map(|n| build_cells(table, n)).collect::<Result<Vec<_>, _>>()?;
    let rows = annuli
        .iter()
        .map(|a| CellRow { level: a.level, cells: a.cells.len(), commensurability: a.commensurability })
        .collect();
    let containment = annuli.iter().zip(annuli.iter().skip(2)).map(|(c, f)| containment_report(c, f)).collect();
    Ok(CellStage { first_level: first, rows, containment })
}

fn area_stage(
    model: &ConformalModel,
    ext: &ExtensionH,
    table: &OrbitTable,
    cfg: &ExperimentConfig,
    ecfg: &EscapeConfig,
) -> Result<AreaStage, escape::EscapeError> {
    let top = cfg.max_level;
    let mut enclosures = Vec::new();
    for n in 1..top {
        let z = z_set_enclosure(table, n, cfg.z_alpha, cfg.z_beta)?;
        enclosures.push(EnclosureRow { level: n, regions: z.regions.len(), area_bound: z.area_bound });
    }
    let pts: Vec<(usize, f64)> = enclosures.iter().map(|e| (e.level, e.area_bound)).collect();
    let enclosure_fit = GeometricFit::from_points(&pts);
    let grid = EscapeGrid::sample(model, ext, cfg.escape_radius, cfg.escape_resolution, ecfg)?;
    let bound = |n: usize| enclosure_fit.map_or(0.0, |f| f.at(n));
    let decay = area_decay_experiment(&grid, ext.first_level..=top, bound)?;

    // |ν| is constant along exterior orbits before they enter Δ.
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut defect, mut pairs, mut tries) = (0.0f64, 0usize, 0usize);
    while pairs < cfg.invariance_samples && tries < 100 * cfg.invariance_samples.max(1) {
        tries += 1;
        let z = Complex64::from_polar(rng.random_range(1.01..cfg.escape_radius), rng.random_range(0.0..std::f64::consts::TAU));
        let w = model.eval_g(z)?;
        if !(w.norm() > 1.0) {
            continue;
        }
        if let escape::EscapeInfo::NonEscaping { .. } = escape::first_entry(model, ext, z, ecfg)? {
            continue;
        }
        let a = escape::nu_magnitude(model, ext, z, ecfg)?;
        let b = escape::nu_magnitude(model, ext, w, ecfg)?;
        defect = defect.max((a - b).abs());
        pairs += 1;
    }
    Ok(AreaStage { decay, enclosures, enclosure_fit, invariance_defect: defect, invariance_pairs: pairs })
}
