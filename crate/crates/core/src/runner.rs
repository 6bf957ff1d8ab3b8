//! Runs one experiment file and writes its artifacts.
//!
//! Every artifact is listed in `manifest.json` with its SHA-256 digest. The
//! artifacts depend only on the experiment file and the seed; wall times are
//! recorded in the manifest alone. Numerical failures leave a `failure.json`
//! next to whatever was written before the failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::barrier::{build_lower_barrier, build_upper_barrier, Barrier};
use crate::config::{
    parse_barrier_file, AuditSpec, BarrierRun, Command, ConvergenceSpec, DerivativeSpec, Experiment, ExperimentConfig,
    FoliateSpec, HalfspaceSpec, Sigma, SisterSpec, SolveSpec,
};
use crate::error::{Error, Result};
use crate::estimates::{boundary_gradient_audit, height_gradient_estimates, interior_gradient_audit, jacobi_check_nu};
use crate::foliation::{
    build_foliation, derivative_study, exterior_uniqueness_evidence, gap_series, halfspace_experiment, lowered_pairs,
    residual_series, write_series_tsv,
};
use crate::geometry::{identity_audit, ModelParams};
use crate::graph::{pointwise_mean_curvature, write_section_csv};
use crate::grid::{AnnularGrid, GridSection};
use crate::sister::{
    extract_surface_data, flat_chart, gauss_curvature, interior_rows, length_bound, max_abs_on_rows,
    potential_identity_sweep, sister, write_surface_csv, Mat2,
};
use crate::solver::continuation::probe_delta;
use crate::solver::{
    equation_residual, newton_solve_dirichlet, newton_solve_prescribed, sample, BoundaryTraces, SolveReport,
    SolverConfig,
};

pub const MANIFEST: &str = "manifest.json";
pub const FAILURE: &str = "failure.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Stage {
    pub name: String,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub seed: u64,
    pub files: Vec<FileEntry>,
    pub stages: Vec<Stage>,
    pub wall_time_s: f64,
    pub failed: bool,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

/// Single writer for an output directory.
struct Output {
    dir: PathBuf,
    files: Vec<FileEntry>,
    stages: Vec<Stage>,
}

impl Output {
    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes)?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
        });
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_vec_pretty(value).map_err(|e| Error::InvalidInput(e.to_string()))?;
        text.push(b'\n');
        self.write(name, &text)
    }

    fn section(&mut self, name: &str, s: &GridSection) -> Result<()> {
        let mut buf = Vec::new();
        write_section_csv(s, &mut buf)?;
        self.write(name, &buf)
    }

    fn series(&mut self, name: &str, header: (&str, &str), rows: &[(f64, f64)]) -> Result<()> {
        let mut buf = Vec::new();
        write_series_tsv(header, rows, &mut buf)?;
        self.write(name, &buf)
    }

    fn timed<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f();
        self.stages.push(Stage {
            name: name.to_string(),
            wall_time_s: start.elapsed().as_secs_f64(),
        });
        out
    }
}

/// Where to run and with which seed. The seed given here overrides the one
/// in the experiment file; without either it is 0.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
    /// Directory that relative paths in the experiment file refer to.
    pub base_dir: PathBuf,
}

/// Parses the experiment text and runs it if it is a `command` experiment.
/// Configuration errors are reported before anything is written.
pub fn run_text(command: Command, text: &str, options: &RunOptions) -> Result<RunManifest> {
    let config = ExperimentConfig::from_json(text)?;
    if config.command() != command {
        return Err(Error::Config(format!(
            "the experiment file describes `{}`, not `{}`",
            config.command().name(),
            command.name()
        )));
    }
    run(&config, &sha256_hex(text.as_bytes()), options)
}

pub fn run(config: &ExperimentConfig, config_sha256: &str, options: &RunOptions) -> Result<RunManifest> {
    let params = config.model.params()?;
    let solver = config.solver.config()?;
    let seed = options.seed.or(config.seed).unwrap_or(0);
    fs::create_dir_all(&options.out_dir)?;
    let start = Instant::now();
    let mut out = Output {
        dir: options.out_dir.clone(),
        files: Vec::new(),
        stages: Vec::new(),
    };
    let ctx = Context {
        params,
        solver,
        seed,
        base_dir: &options.base_dir,
    };
    let result = match &config.experiment {
        Experiment::Solve(s) => ctx.solve(s, &mut out),
        Experiment::Barrier(s) => ctx.barrier(s, &mut out),
        Experiment::Foliate(s) => ctx.foliate(s, &mut out),
        Experiment::Derivative(s) => ctx.derivative(s, &mut out),
        Experiment::Sister(s) => ctx.sister(s, &mut out),
        Experiment::Audit(s) => ctx.audit(s, &mut out),
        Experiment::Halfspace(s) => ctx.halfspace(s, &mut out),
        Experiment::Convergence(s) => ctx.convergence(s, &mut out),
    };
    let failed = match &result {
        Err(Error::Io(_)) | Ok(()) => false,
        Err(e) => {
            #[derive(Serialize)]
            struct Failure<'a> {
                command: &'a str,
                exit_code: i32,
                error: String,
                detail: String,
            }
            out.json(
                FAILURE,
                &Failure {
                    command: config.command().name(),
                    exit_code: e.exit_code(),
                    error: e.to_string(),
                    detail: format!("{e:?}"),
                },
            )?;
            true
        }
    };
    let manifest = RunManifest {
        command: config.command().name(),
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: config_sha256.to_string(),
        seed,
        files: out.files.clone(),
        stages: out.stages.clone(),
        wall_time_s: start.elapsed().as_secs_f64(),
        failed,
    };
    let mut text = serde_json::to_vec_pretty(&manifest).map_err(|e| Error::InvalidInput(e.to_string()))?;
    text.push(b'\n');
    fs::write(options.out_dir.join(MANIFEST), text)?;
    result.map(|()| manifest)
}

struct Context<'a> {
    params: ModelParams,
    solver: SolverConfig,
    seed: u64,
    base_dir: &'a Path,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    grid: &'a AnnularGrid,
    report: &'a SolveReport,
    equation_residual: f64,
    /// `max |u − σ|` when `σ` is an exact solution.
    oracle_error: Option<f64>,
}

/// Solves `2H = 2H₀` with the traces of `σ`, from the interpolant of the
/// traces.
fn solve_with(
    sigma: &Sigma,
    grid: AnnularGrid,
    params: ModelParams,
    config: &SolverConfig,
) -> Result<(GridSection, SolveReport)> {
    let traces = BoundaryTraces::from_provider(sigma, &grid)?;
    let init = traces.interpolant(grid, params)?;
    newton_solve_dirichlet(&init, &traces, config)
}

/// Solves for a section with the traces of `σ` whose mean curvature is that
/// of `σ`, so `σ` itself is the exact solution.
fn solve_manufactured(
    sigma: &Sigma,
    grid: AnnularGrid,
    params: ModelParams,
    config: &SolverConfig,
) -> Result<(GridSection, SolveReport)> {
    if sigma.is_exact() {
        return solve_with(sigma, grid, params, config);
    }
    let traces = BoundaryTraces::from_provider(sigma, &grid)?;
    let init = traces.interpolant(grid, params)?;
    let mut target = Vec::with_capacity(grid.n_interior());
    for i in 1..grid.n_rho - 1 {
        for j in 0..grid.n_theta {
            target.push(2.0 * pointwise_mean_curvature(&params, sigma, grid.rho(i), grid.theta(j)));
        }
    }
    newton_solve_prescribed(&init, &traces, &target, config)
}

fn max_error(s: &GridSection, sigma: &Sigma) -> Result<f64> {
    let exact = sample(sigma, s.grid, s.params)?;
    Ok(s.values
        .iter()
        .zip(&exact.values)
        .fold(0.0, |m, (a, b)| m.max((a - b).abs())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub h: f64,
    pub linf_error: f64,
    /// Observed order against the previous level.
    pub order: Option<f64>,
    pub iterations: usize,
    pub final_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub manufactured: bool,
    pub rows: Vec<ConvergenceRow>,
    pub min_order: f64,
}

/// Errors against `σ` over refinements of `[ρ_min, ρ_max]`; at least three
/// levels are required. A tilted `σ` is reached through a manufactured
/// right-hand side.
pub fn convergence_study(
    sigma: &Sigma,
    rho: (f64, f64),
    levels: &[usize],
    theta_ratio: usize,
    params: ModelParams,
    config: &SolverConfig,
) -> Result<ConvergenceStudy> {
    if levels.len() < 3 {
        return Err(Error::Config("a convergence study needs at least three levels".into()));
    }
    if levels.windows(2).any(|w| w[1] <= w[0]) || theta_ratio == 0 {
        return Err(Error::Config("levels must increase and theta_ratio be positive".into()));
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for &n in levels {
        let grid = AnnularGrid::new(rho.0, rho.1, n + 1, theta_ratio * n)?;
        let (s, rep) = solve_manufactured(sigma, grid, params, config)?;
        let err = max_error(&s, sigma)?;
        let h = grid.d_rho();
        let order = rows.last().map(|p| (p.linf_error / err).ln() / (p.h / h).ln());
        rows.push(ConvergenceRow {
            n,
            h,
            linf_error: err,
            order,
            iterations: rep.iterations,
            final_residual: rep.final_residual,
        });
    }
    Ok(ConvergenceStudy {
        manufactured: !sigma.is_exact(),
        min_order: rows.iter().filter_map(|r| r.order).fold(f64::INFINITY, f64::min),
        rows,
    })
}

pub fn write_convergence_tsv<W: std::io::Write>(study: &ConvergenceStudy, mut out: W) -> Result<()> {
    writeln!(out, "h\tlinf_error\torder")?;
    for r in &study.rows {
        match r.order {
            Some(o) => writeln!(out, "{}\t{}\t{}", r.h, r.linf_error, o)?,
            None => writeln!(out, "{}\t{}\t", r.h, r.linf_error)?,
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SisterLevel {
    pub n: usize,
    pub nu_jacobi: f64,
    pub gauss_curvature: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SisterConvergence {
    pub levels: Vec<SisterLevel>,
    /// Smallest ratio between consecutive levels, per quantity.
    pub nu_jacobi_min_ratio: Option<f64>,
    pub gauss_min_ratio: Option<f64>,
}

/// `max |K(g₀)|` of the flat chart on the interior audit rows.
pub fn flat_chart_curvature(s: &GridSection) -> Result<f64> {
    let data = extract_surface_data(s)?;
    let chart = flat_chart(&sister(&data, &s.params)?)?;
    let g0: Vec<Mat2> = chart.nodes.iter().map(|f| f.g0).collect();
    let k = gauss_curvature(&s.grid, &g0);
    Ok(max_abs_on_rows(&s.grid, &k, interior_rows(&s.grid)))
}

/// ν-Jacobi residual and flat-chart curvature of the solutions with the
/// traces of `σ` on `n + 1` by `2n` grids.
pub fn sister_convergence(
    sigma: &Sigma,
    rho: (f64, f64),
    levels: &[usize],
    params: ModelParams,
    config: &SolverConfig,
) -> Result<SisterConvergence> {
    let mut out = Vec::with_capacity(levels.len());
    for &n in levels {
        let grid = AnnularGrid::new(rho.0, rho.1, n + 1, 2 * n)?;
        let (s, _) = solve_with(sigma, grid, params, config)?;
        out.push(SisterLevel {
            n,
            nu_jacobi: jacobi_check_nu(&s)?.max_residual,
            gauss_curvature: flat_chart_curvature(&s)?,
        });
    }
    let min_ratio = |f: fn(&SisterLevel) -> f64| out.windows(2).map(|w| f(&w[0]) / f(&w[1])).reduce(f64::min);
    Ok(SisterConvergence {
        nu_jacobi_min_ratio: min_ratio(|l| l.nu_jacobi),
        gauss_min_ratio: min_ratio(|l| l.gauss_curvature),
        levels: out,
    })
}

impl Context<'_> {
    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }

    fn sigma(&self, spec: &crate::config::SigmaSpec) -> Result<Sigma> {
        spec.build(&self.params)
    }

    fn solve(&self, spec: &SolveSpec, out: &mut Output) -> Result<()> {
        let sigma = self.sigma(&spec.sigma)?;
        let grid = spec.grid.grid()?;
        let (s, rep) = out.timed("solve", || solve_with(&sigma, grid, self.params, &self.solver))?;
        out.section("solution.csv", &s)?;
        let oracle_error = if sigma.is_exact() {
            Some(max_error(&s, &sigma)?)
        } else {
            None
        };
        out.json(
            "solve_report.json",
            &SolveOutput {
                grid: &grid,
                report: &rep,
                equation_residual: equation_residual(&s),
                oracle_error,
            },
        )
    }

    fn barrier(&self, spec: &BarrierRun, out: &mut Output) -> Result<()> {
        let b = match (&spec.spec, &spec.spec_file) {
            (Some(inline), None) => inline.spec()?,
            (None, Some(path)) => parse_barrier_file(&fs::read_to_string(self.base_dir.join(path))?)?,
            _ => return Err(Error::Config("give exactly one of `spec` and `spec_file`".into())),
        };
        if b.tau != self.params.tau {
            return Err(Error::Config("the barrier τ differs from the model τ".into()));
        }
        #[derive(Serialize)]
        struct Both<'a> {
            upper: &'a Barrier,
            lower: &'a Barrier,
            pass: bool,
        }
        let upper = out.timed("upper", || build_upper_barrier(&b, spec.n_rho))?;
        let lower = out.timed("lower", || build_lower_barrier(&b, spec.n_rho))?;
        out.section("upper.csv", &upper.section)?;
        out.section("lower.csv", &lower.section)?;
        out.json(
            "barrier.json",
            &Both {
                upper: &upper,
                lower: &lower,
                pass: upper.working.pass && upper.refined.pass && lower.working.pass && lower.refined.pass,
            },
        )
    }

    fn foliate(&self, spec: &FoliateSpec, out: &mut Output) -> Result<()> {
        let sigma = self.sigma(&spec.sigma)?;
        let schedule = spec.radii.schedule()?;
        let delta = spec.delta.0;
        if let Some(bisections) = spec.probe_bisections {
            let grid = schedule.grid(schedule.len() - 1)?;
            let probe = out.timed("probe", || {
                probe_delta(&sigma, 2.0 * delta, bisections, grid, self.params, &self.solver)
            })?;
            out.json("probe.json", &probe)?;
            if probe.certified < 2.0 * delta {
                return Err(Error::InvalidInput(format!(
                    "δ = {delta} exceeds half the certified lift {}",
                    probe.certified
                )));
            }
        }
        let fam = out.timed("family", || {
            build_foliation(
                &sigma,
                delta,
                &schedule,
                spec.t_count,
                spec.a1_outer.0,
                self.params,
                &self.solver,
            )
        })?;
        for (n, secs) in fam.solutions.iter().enumerate() {
            for (j, s) in secs.iter().enumerate() {
                out.section(&format!("solutions/u_t{j}_n{n}.csv"), s)?;
            }
        }
        out.json("family.json", &fam)?;
        out.series("gaps.tsv", ("n", "gap"), &gap_series(&fam.gaps))?;
        let exterior = exterior_uniqueness_evidence(&lowered_pairs(&fam)?, 2.0 * delta)?;
        out.json("exterior.json", &exterior)
    }

    fn derivative(&self, spec: &DerivativeSpec, out: &mut Output) -> Result<()> {
        let sigma = self.sigma(&spec.sigma)?;
        let schedule = spec.radii.schedule()?;
        let eps: Vec<f64> = spec.eps.iter().map(|d| d.0).collect();
        let study = out.timed("derivative", || {
            derivative_study(
                &sigma,
                spec.t_bar.0,
                &eps,
                &schedule,
                spec.a1_outer.0,
                self.params,
                &self.solver,
            )
        })?;
        for (n, f) in study.fields.iter().enumerate() {
            out.series(&format!("residual_n{n}.tsv"), ("eps", "residual"), &residual_series(f))?;
        }
        let dev: Vec<(f64, f64)> = study.deviations.iter().map(|d| (d.outer_radius, d.deviation)).collect();
        out.series("deviation.tsv", ("outer_radius", "deviation"), &dev)?;
        out.json("derivative.json", &study)
    }

    fn sister(&self, spec: &SisterSpec, out: &mut Output) -> Result<()> {
        let sigma = self.sigma(&spec.sigma)?;
        let grid = spec.grid.grid()?;
        let (s, _) = out.timed("solve", || solve_with(&sigma, grid, self.params, &self.solver))?;
        let data = extract_surface_data(&s)?;
        let sis = sister(&data, &self.params)?;
        let mut buf = Vec::new();
        write_surface_csv(&data, Some(&sis), &mut buf)?;
        out.write("surface.csv", &buf)?;
        let chart = flat_chart(&sis)?;
        let rows = interior_rows(&grid);
        let trace: Vec<f64> = data.nodes.iter().map(|n| n.trace_s() - 2.0 * self.params.h0).collect();
        let ray: Vec<(usize, usize)> = (0..grid.n_rho).map(|i| (i, 0)).collect();
        let mid = grid.n_rho / 2;
        let circle: Vec<(usize, usize)> = (0..=grid.n_theta).map(|j| (mid, j % grid.n_theta)).collect();
        let mut rng = self.rng();
        let sweep = out.timed("sweep", || Ok(potential_identity_sweep(spec.samples, &mut rng)))?;
        let levels = if spec.levels.is_empty() {
            None
        } else {
            let rho = (grid.rho_min, grid.rho_max);
            Some(out.timed("levels", || {
                sister_convergence(&sigma, rho, &spec.levels, self.params, &self.solver)
            })?)
        };
        #[derive(Serialize)]
        struct Report {
            theta: f64,
            tau_prime: f64,
            potential_sweep: crate::sister::PotentialSweep,
            trace_defect: f64,
            nu_jacobi: crate::estimates::NuJacobiReport,
            flat_chart_curvature: f64,
            ray_length: crate::sister::LengthBound,
            circle_length: crate::sister::LengthBound,
            convergence: Option<SisterConvergence>,
        }
        let report = Report {
            theta: sis.theta,
            tau_prime: sis.tau_prime,
            potential_sweep: sweep,
            trace_defect: max_abs_on_rows(&grid, &trace, rows),
            nu_jacobi: jacobi_check_nu(&s)?,
            flat_chart_curvature: flat_chart_curvature(&s)?,
            ray_length: length_bound(&grid, &sis, &chart, &ray)?,
            circle_length: length_bound(&grid, &sis, &chart, &circle)?,
            convergence: levels,
        };
        out.json("sister.json", &report)
    }

    fn audit(&self, spec: &AuditSpec, out: &mut Output) -> Result<()> {
        let mut rng = self.rng();
        let mut geometry = Vec::new();
        if let Some(g) = &spec.geometry {
            for [k, t] in &g.params {
                let p = ModelParams::new(k.0, t.0, self.params.h0).map_err(|e| Error::Config(e.to_string()))?;
                let a = out.timed("geometry", || identity_audit(&p, g.points, &mut rng))?;
                geometry.push((k.0, t.0, a));
            }
        }
        let sigma = self.sigma(&spec.sigma)?;
        let grid = spec.grid.grid()?;
        let (s, _) = out.timed("solve", || solve_with(&sigma, grid, self.params, &self.solver))?;
        let reals = |v: &[crate::config::Decimal]| v.iter().map(|d| d.0).collect::<Vec<f64>>();
        let center = (spec.center[0], spec.center[1]);
        #[derive(Serialize)]
        struct Report {
            geometry: Vec<(f64, f64, crate::geometry::IdentityAudit)>,
            nu_jacobi: crate::estimates::NuJacobiReport,
            boundary: crate::estimates::BoundaryGradientReport,
            interior: crate::estimates::InteriorGradientReport,
            height: crate::estimates::HeightGradientReport,
            pass: bool,
        }
        let boundary = boundary_gradient_audit(&s, &reals(&spec.alphas), &reals(&spec.nu0s))?;
        let interior = interior_gradient_audit(&s, center, spec.radius.0, &reals(&spec.ks), &reals(&spec.nu1s))?;
        let height = height_gradient_estimates(&s, center)?;
        let report = Report {
            pass: boundary.certified && boundary.pass && interior.certified && interior.pass && height.identity_pass,
            geometry,
            nu_jacobi: jacobi_check_nu(&s)?,
            boundary,
            interior,
            height,
        };
        out.json("audit.json", &report)
    }

    fn halfspace(&self, spec: &HalfspaceSpec, out: &mut Output) -> Result<()> {
        let sigma = self.sigma(&spec.sigma)?;
        let schedule = spec.radii.schedule()?;
        let fam = out.timed("family", || {
            build_foliation(
                &sigma,
                spec.delta.0,
                &schedule,
                spec.t_count,
                spec.a1_outer.0,
                self.params,
                &self.solver,
            )
        })?;
        let report = halfspace_experiment(&fam, &spec.competitor.competitor())?;
        out.series("gaps.tsv", ("n", "gap"), &gap_series(&report.gaps))?;
        #[derive(Serialize)]
        struct Report<'a> {
            sandwich_pass: bool,
            #[serde(flatten)]
            halfspace: &'a crate::foliation::HalfSpaceReport,
        }
        out.json(
            "halfspace.json",
            &Report {
                sandwich_pass: fam.sandwich_pass,
                halfspace: &report,
            },
        )
    }

    fn convergence(&self, spec: &ConvergenceSpec, out: &mut Output) -> Result<()> {
        if spec.levels.len() < 3 {
            return Err(Error::Config("a convergence study needs at least three levels".into()));
        }
        let sigma = self.sigma(&spec.sigma)?;
        let study = out.timed("study", || {
            convergence_study(
                &sigma,
                (spec.rho_min.0, spec.rho_max.0),
                &spec.levels,
                spec.theta_ratio.unwrap_or(1),
                self.params,
                &self.solver,
            )
        })?;
        let mut buf = Vec::new();
        write_convergence_tsv(&study, &mut buf)?;
        out.write("convergence.tsv", &buf)?;
        out.json("convergence.json", &study)
    }
}

/// Checks that every file listed in a manifest exists with the recorded
/// digest and that no other file is present besides the manifest.
pub fn verify_manifest(dir: &Path) -> Result<bool> {
    let text = fs::read_to_string(dir.join(MANIFEST))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let files = value["files"]
        .as_array()
        .ok_or_else(|| Error::Parse("manifest without files".into()))?;
    let mut listed = Vec::new();
    for f in files {
        let path = f["path"]
            .as_str()
            .ok_or_else(|| Error::Parse("file without path".into()))?;
        let bytes = fs::read(dir.join(path))?;
        if Some(sha256_hex(&bytes).as_str()) != f["sha256"].as_str() {
            return Ok(false);
        }
        listed.push(PathBuf::from(path));
    }
    let mut present = Vec::new();
    collect_files(dir, dir, &mut present)?;
    present.retain(|p| p != Path::new(MANIFEST));
    present.sort();
    listed.sort();
    Ok(present == listed)
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            out.push(path.strip_prefix(root).expect("inside root").to_path_buf());
        }
    }
    Ok(())
}
