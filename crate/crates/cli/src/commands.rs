use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rnrr_core::eval::{
    add_gaussian_normal_noise, add_normal_outliers, radius_for_fraction, random_node_rotations, remove_region,
    rmse_over, synthesize_deformation, GroundTruth,
};
use rnrr_core::geometry::{compute_normals, load, write_error_mesh, write_ply, PlyExtras};
use rnrr_core::graph::build_graph;
use rnrr_core::pipeline::{run_registration, PipelineOutput};
use rnrr_core::solver::write_trace_csv;
use rnrr_core::{Kernel, Sampler, Surface};

use crate::config::RunConfig;
use crate::{AblateArgs, EvalArgs, SynthArgs};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    /// Bad invocation: missing inputs, unparsable settings.
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn failed(message: impl Into<String>) -> Self {
        CliError {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<rnrr_core::Error> for CliError {
    fn from(e: rnrr_core::Error) -> Self {
        CliError::failed(e.to_string())
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn require_exists(what: &str, path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::usage(format!("{what} file not found: {}", path.display())))
    }
}

fn required<'a>(what: &str, v: &'a Option<PathBuf>) -> Result<&'a PathBuf> {
    v.as_ref()
        .ok_or_else(|| CliError::usage(format!("missing --{what} (flag or config key)")))
}

/// Files written into an output directory. Unless `commit` is called they
/// are deleted on drop, along with the directory if this run created it.
struct Outputs {
    dir: PathBuf,
    created_dir: bool,
    files: Vec<PathBuf>,
    committed: bool,
}

impl Outputs {
    fn new(dir: &Path) -> Result<Self> {
        let created_dir = !dir.exists();
        fs::create_dir_all(dir).map_err(|e| CliError::failed(format!("{}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            created_dir,
            files: Vec::new(),
            committed: false,
        })
    }

    fn file(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.files.push(p.clone());
        p
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.file(name);
        fs::write(&p, text).map_err(|e| CliError::failed(format!("{}: {e}", p.display())))
    }

    fn commit(mut self) {
        self.committed = true;
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if self.committed {
            return;
        }
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        if self.created_dir {
            let _ = fs::remove_dir(&self.dir);
        }
    }
}

fn read_indices(path: &Path, n: usize) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::failed(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (k, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let i: usize = line
            .parse()
            .map_err(|_| CliError::failed(format!("{}:{}: not an index: `{line}`", path.display(), k + 1)))?;
        if i >= n {
            return Err(CliError::failed(format!(
                "{}:{}: index {i} out of range for {n} vertices",
                path.display(),
                k + 1
            )));
        }
        out.push(i);
    }
    Ok(out)
}

struct Inputs {
    source: Surface,
    target: Surface,
    gt: Option<GroundTruth>,
    retained: Option<Vec<usize>>,
}

fn load_inputs(c: &RunConfig) -> Result<Inputs> {
    let source_path = required("source", &c.source)?;
    let target_path = required("target", &c.target)?;
    required("out", &c.out)?;
    require_exists("source", source_path)?;
    require_exists("target", target_path)?;
    if let Some(p) = &c.gt {
        require_exists("ground truth", p)?;
    }
    if let Some(p) = &c.retained {
        require_exists("retained index", p)?;
    }
    let source = load(source_path)?;
    let target = load(target_path)?;
    let gt = c.gt.as_ref().map(GroundTruth::load).transpose()?;
    let retained = match &c.retained {
        Some(p) => Some(read_indices(p, source.len())?),
        None => None,
    };
    Ok(Inputs {
        source,
        target,
        gt,
        retained,
    })
}

struct RunSummary {
    nodes: usize,
    seconds: f64,
    rmse: Option<f64>,
    report: String,
}

/// One registration with all of its outputs written into `dir`.
fn register_into(c: &RunConfig, inputs: &Inputs, dir: &Path) -> Result<RunSummary> {
    let mut out = Outputs::new(dir)?;
    let started = Instant::now();
    let result = run_registration(&inputs.source, &inputs.target, &c.solver, inputs.gt.as_ref())?;
    let seconds = started.elapsed().as_secs_f64();
    let PipelineOutput {
        result: reg,
        deformed,
        errors,
        ..
    } = &result;

    write_ply(deformed, out.file("deformed.ply"), PlyExtras::default())?;
    write_trace_csv(&reg.energy_trace, out.file("trace.csv"), c.timing)?;
    if let Some(errors) = errors {
        write_error_mesh(deformed, errors, out.file("errors.ply"))?;
    }
    let mut recorded = c.clone();
    recorded.out = None;
    out.write("config.txt", &recorded.to_text())?;

    let rmse = match (&inputs.gt, &inputs.retained) {
        (Some(gt), Some(idx)) => Some(rmse_over(&deformed.vertices, gt, idx.iter().copied())?),
        (Some(_), None) => result.rmse,
        _ => None,
    };
    let mut report = String::new();
    let _ = writeln!(report, "nodes {}", reg.graph.node_count());
    let _ = writeln!(report, "stages {}", reg.stages.len());
    let _ = writeln!(report, "outer_iterations {}", reg.energy_trace.len());
    if c.timing {
        let _ = writeln!(report, "seconds {seconds:.3}");
    }
    if let Some(r) = rmse {
        let _ = writeln!(report, "rmse {r:e}");
    }
    out.commit();
    Ok(RunSummary {
        nodes: reg.graph.node_count(),
        seconds,
        rmse,
        report,
    })
}

pub fn register(c: &RunConfig) -> Result<()> {
    let inputs = load_inputs(c)?;
    let summary = register_into(c, &inputs, required("out", &c.out)?)?;
    print!("{}", summary.report);
    Ok(())
}

fn csv_field(s: &str) -> String {
    let s: String = s.chars().map(|ch| if ch == '\n' { ' ' } else { ch }).collect();
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}

pub fn ablate(c: &RunConfig, args: &AblateArgs) -> Result<()> {
    let inputs = load_inputs(c)?;
    let root = required("out", &c.out)?;
    let kernels: Vec<Kernel> = args
        .kernels
        .iter()
        .map(|k| k.parse().map_err(|e: rnrr_core::Error| CliError::usage(e.to_string())))
        .collect::<Result<_>>()?;
    let radii = if args.radius_factors.is_empty() {
        vec![c.solver.radius_factor]
    } else {
        args.radius_factors.clone()
    };
    let modes: Vec<bool> = args
        .nu_modes
        .iter()
        .map(|m| match m.as_str() {
            "annealed" => Ok(false),
            "fixed" => Ok(true),
            other => Err(CliError::usage(format!("unknown nu mode `{other}` (annealed or fixed)"))),
        })
        .collect::<Result<_>>()?;

    let single = kernels.len() * radii.len() * modes.len() == 1;
    let mut out = Outputs::new(root)?;
    let mut csv = String::from("kernel,radius_factor,nu_mode,nodes,rmse,seconds,status\n");
    let mut failures = 0;
    for &kernel in &kernels {
        for &radius_factor in &radii {
            for &fixed_nu in &modes {
                let mode = if fixed_nu { "fixed" } else { "annealed" };
                let mut cell = c.clone();
                cell.solver.kernel = kernel;
                cell.solver.radius_factor = radius_factor;
                cell.solver.fixed_nu = fixed_nu;
                let dir = if single {
                    root.clone()
                } else {
                    root.join(format!("{kernel}-r{radius_factor}-{mode}"))
                };
                let outcome = cell
                    .solver
                    .validate()
                    .map_err(CliError::from)
                    .and_then(|_| register_into(&cell, &inputs, &dir));
                let _ = write!(csv, "{kernel},{radius_factor},{mode},");
                match outcome {
                    Ok(s) => {
                        let rmse = s.rmse.map(|r| format!("{r:e}")).unwrap_or_default();
                        let secs = if c.timing { s.seconds } else { 0.0 };
                        let _ = writeln!(csv, "{},{rmse},{secs:e},ok", s.nodes);
                        if single {
                            print!("{}", s.report);
                        }
                    }
                    Err(e) => {
                        failures += 1;
                        eprintln!("cell {kernel} r{radius_factor} {mode} failed: {}", e.message);
                        let _ = writeln!(csv, ",,,{}", csv_field(&format!("error: {}", e.message)));
                    }
                }
            }
        }
    }
    out.write("ablation.csv", &csv)?;
    out.commit();
    if failures > 0 {
        return Err(CliError::failed(format!(
            "{failures} ablation cell(s) failed; see {}",
            root.join("ablation.csv").display()
        )));
    }
    Ok(())
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    require_exists("source", &a.source)?;
    let sampler: Sampler = a.sampler.parse().map_err(|e: rnrr_core::Error| CliError::usage(e.to_string()))?;
    let source = load(&a.source)?;
    let l_bar = source.mean_edge_length();
    if !(l_bar > 0.0) {
        return Err(CliError::failed("source has no edges to measure".to_string()));
    }
    // One generator; every draw happens whether or not its option is used,
    // so enabling one corruption does not change the others.
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let rotation_seed = rng.next_u64();
    let outlier_seed = rng.next_u64();
    let noise_seed = rng.next_u64();
    let removal_vertex = rng.random_range(0..source.len());

    let graph = build_graph(&source, a.radius_factor * l_bar, sampler)?;
    let state = random_node_rotations(&graph, a.rotation_deg, rotation_seed);
    let (target, gt) = synthesize_deformation(&source, &graph, &state)?;
    let mut target = compute_normals(&target)?;
    let lt = target.mean_edge_length();
    if a.outlier_fraction > 0.0 {
        target = add_normal_outliers(&target, a.outlier_fraction, a.outlier_distance * lt, outlier_seed)?;
    }
    if a.noise_fraction > 0.0 {
        target = add_gaussian_normal_noise(&target, a.noise_fraction, a.noise_sigma * lt, noise_seed)?;
    }
    let retained = if a.remove_fraction > 0.0 {
        let radius = radius_for_fraction(&target, removal_vertex, a.remove_fraction)?;
        let (cut, kept) = remove_region(&target, removal_vertex, radius)?;
        target = cut;
        Some(kept)
    } else {
        None
    };
    target.normals = None;

    let mut out = Outputs::new(&a.out)?;
    write_ply(&target, out.file("target.ply"), PlyExtras::default())?;
    gt.write_ply(out.file("gt.ply"))?;
    if let Some(kept) = &retained {
        let text: String = kept.iter().map(|i| format!("{i}\n")).collect();
        out.write("retained.txt", &text)?;
    }
    let record = format!(
        "source = {}\nseed = {}\nrotation-deg = {}\nradius-factor = {}\nsampler = {sampler}\n\
         noise-fraction = {}\nnoise-sigma = {}\noutlier-fraction = {}\noutlier-distance = {}\n\
         remove-fraction = {}\n",
        a.source.display(),
        a.seed,
        a.rotation_deg,
        a.radius_factor,
        a.noise_fraction,
        a.noise_sigma,
        a.outlier_fraction,
        a.outlier_distance,
        a.remove_fraction
    );
    out.write("synth.txt", &record)?;
    out.commit();
    println!("target {} vertices, graph {} nodes", target.len(), graph.node_count());
    Ok(())
}

pub fn eval(a: &EvalArgs) -> Result<()> {
    require_exists("result", &a.result)?;
    require_exists("ground truth", &a.gt)?;
    if let Some(p) = &a.retained {
        require_exists("retained index", p)?;
    }
    let result = load(&a.result)?;
    let gt = GroundTruth::load(&a.gt)?;
    let idx = match &a.retained {
        Some(p) => read_indices(p, result.len())?,
        None => (0..result.len()).collect(),
    };
    let value = rmse_over(&result.vertices, &gt, idx.iter().copied())?;
    if let Some(path) = &a.out {
        let errors: Vec<f64> = result
            .vertices
            .iter()
            .zip(&gt.positions)
            .map(|(p, q)| (p - q).norm())
            .collect();
        write_error_mesh(&result, &errors, path)?;
    }
    println!("rmse {value:e}");
    Ok(())
}
