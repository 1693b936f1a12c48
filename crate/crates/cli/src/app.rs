//! Command-line surface and command implementations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use manifold_core::iterative::{
    fit_metric_mds_points, fit_nonmetric_mds_points, fit_sammon, IterConfig, StressReport,
};
use manifold_core::kernel::KernelSpec;
use manifold_core::landmark::{fit_landmark_isomap, fit_landmark_mds};
use manifold_core::model::{
    embedding_only_to_json, from_json, pca_to_json, spectral_to_json, EmbedMethod, LoadedModel,
};
use manifold_core::oos::{
    kernel_map_apply, kernel_map_fit, oos_embed_eigen_with, oos_embed_isomap_landmark_formula,
    OosOptions,
};
use manifold_core::spectral::{
    fit_classical_mds, fit_isomap, fit_kernel_isomap, fit_kernel_mds, fit_pca_model,
};
use manifold_core::{
    distance::pairwise_euclidean, DataMatrix, DistanceMatrix, Embedding, MdsError, Scale,
};

use crate::error::{AppError, Result};
use crate::io::{atomic_write, embedding_to_csv, load_points, load_points_with_labels, points_to_csv};
use crate::plot::scatter_svg;
use crate::quality::{quality_report, residual_variance};
use crate::synth::swiss_roll;

#[derive(Debug, Parser)]
#[command(
    name = "manifold-embed",
    version,
    about = "MDS-family embeddings: classical/kernel MDS, metric and non-metric MDS, \
             Sammon mapping, Isomap, kernel Isomap, and landmark variants"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an embedding; writes coordinates, a model file, and a summary.
    Fit(FitArgs),
    /// Embed new points with a fitted model.
    Transform(TransformArgs),
    /// Generate a synthetic dataset.
    Synth {
        #[command(subcommand)]
        dataset: SynthCommand,
    },
    /// Fit several methods on one dataset and tabulate quality metrics.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Classical MDS (principal coordinates).
    Cmds,
    /// Kernel classical MDS.
    Kmds,
    Isomap,
    /// Kernel Isomap (additive-constant correction).
    Kisomap,
    Sammon,
    /// Metric MDS.
    Mmds,
    /// Non-metric MDS (Kruskal Stress-1).
    Nmmds,
    /// Landmark MDS.
    Lmds,
    /// Landmark Isomap.
    Lisomap,
    /// PCA (equivalent to classical MDS; mainly a cross-check).
    Pca,
}

impl MethodArg {
    fn name(self) -> &'static str {
        match self {
            MethodArg::Cmds => "cmds",
            MethodArg::Kmds => "kmds",
            MethodArg::Isomap => "isomap",
            MethodArg::Kisomap => "kisomap",
            MethodArg::Sammon => "sammon",
            MethodArg::Mmds => "mmds",
            MethodArg::Nmmds => "nmmds",
            MethodArg::Lmds => "lmds",
            MethodArg::Lisomap => "lisomap",
            MethodArg::Pca => "pca",
        }
    }

    fn parse(name: &str) -> Result<Self> {
        match name {
            "cmds" => Ok(MethodArg::Cmds),
            "kmds" => Ok(MethodArg::Kmds),
            "isomap" => Ok(MethodArg::Isomap),
            "kisomap" => Ok(MethodArg::Kisomap),
            "sammon" => Ok(MethodArg::Sammon),
            "mmds" => Ok(MethodArg::Mmds),
            "nmmds" => Ok(MethodArg::Nmmds),
            "lmds" => Ok(MethodArg::Lmds),
            "lisomap" => Ok(MethodArg::Lisomap),
            "pca" => Ok(MethodArg::Pca),
            other => Err(AppError::Usage(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Linear,
    Cosine,
    Rbf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OosRouteArg {
    /// Eigenfunction route (spectral models; PCA projects directly).
    Eigen,
    /// Landmark-formula route (Isomap models only).
    LandmarkFormula,
    /// Kernel-mapping route (any model).
    KernelMap,
}

const DEFAULT_K: usize = 10;
const DEFAULT_GAMMA: f64 = 0.5;

#[derive(Debug, Args)]
pub struct FitArgs {
    #[arg(long, value_enum)]
    pub method: MethodArg,
    /// Points CSV, one row per point.
    #[arg(long)]
    pub input: PathBuf,
    /// Embedding CSV destination; the model and summary land next to it.
    #[arg(long)]
    pub output: PathBuf,
    /// Target dimension p.
    #[arg(long = "dim", default_value_t = 2)]
    pub dim: usize,
    /// Neighbour count: graph size for the Isomap family, pair restriction
    /// for the iterative solvers (full pair set when omitted there).
    #[arg(long)]
    pub k: Option<usize>,
    /// Landmark count for lmds / lisomap.
    #[arg(long)]
    pub landmarks: Option<usize>,
    /// Kernel for kmds (default cosine).
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// RBF bandwidth; median pairwise distance when omitted.
    #[arg(long)]
    pub bandwidth: Option<f64>,
    /// Iteration cap for the iterative solvers.
    #[arg(long)]
    pub iters: Option<usize>,
    /// Learning rate (Sammon's magic factor).
    #[arg(long)]
    pub lr: Option<f64>,
    /// Kernel-map bandwidth scale stored with embedding-only models.
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write an SVG scatter of the first two dimensions here.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    /// Zero-based column holding class labels (excluded from the data,
    /// used to color the plot).
    #[arg(long)]
    pub labels: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TransformArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    /// Out-of-sample route; defaults to eigen for spectral/PCA models and
    /// kernel-map for embedding-only models.
    #[arg(long, value_enum)]
    pub oos: Option<OosRouteArg>,
    /// Kernel-map bandwidth scale (overrides the stored value).
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Let test points serve as shortest-path intermediates (approximation).
    #[arg(long, default_value_t = false)]
    pub test_intermediates: bool,
}

#[derive(Debug, Subcommand)]
pub enum SynthCommand {
    /// Swiss roll with intrinsic coordinates written alongside.
    SwissRoll {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: PathBuf,
    },
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Comma-separated method list, e.g. `cmds,pca,isomap,sammon`.
    #[arg(long)]
    pub methods: String,
    /// Comparison table CSV destination.
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K)]
    pub k: usize,
    #[arg(long = "dim", default_value_t = 2)]
    pub dim: usize,
    #[arg(long)]
    pub landmarks: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Entry point used by `main`.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(args) => run_fit(&args),
        Command::Transform(args) => run_transform(&args),
        Command::Synth { dataset } => run_synth(&dataset),
        Command::Bench(args) => run_bench(&args),
    }
}

/// `out/emb.csv` -> `out/emb.<suffix>`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".to_string());
    path.with_file_name(format!("{stem}.{suffix}"))
}

struct FitOutcome {
    embedding: Embedding,
    model_json: String,
    /// Reference distances for quality metrics and what they are.
    reference: DistanceMatrix,
    reference_kind: &'static str,
    clamped: usize,
    stress: Option<StressReport>,
    note: Option<String>,
}

fn iter_config(args: &FitArgs) -> IterConfig {
    let mut cfg = IterConfig {
        seed: args.seed,
        neighbors: args.k,
        ..IterConfig::default()
    };
    if let Some(iters) = args.iters {
        cfg.max_iters = iters;
    }
    if let Some(lr) = args.lr {
        cfg.learning_rate = lr;
    }
    cfg
}

fn kernel_spec(args: &FitArgs) -> KernelSpec {
    match args.kernel.unwrap_or(KernelArg::Cosine) {
        KernelArg::Linear => KernelSpec::Linear,
        KernelArg::Cosine => KernelSpec::Cosine,
        KernelArg::Rbf => KernelSpec::Rbf {
            bandwidth: args.bandwidth,
        },
    }
}

fn require_landmarks(args: &FitArgs) -> Result<usize> {
    args.landmarks.ok_or_else(|| {
        AppError::Usage(format!(
            "--landmarks is required for method {}",
            args.method.name()
        ))
    })
}

fn fit_method(args: &FitArgs, x: &DataMatrix) -> Result<FitOutcome> {
    let p = args.dim;
    let euclid = || pairwise_euclidean(x, Scale::Raw);
    match args.method {
        MethodArg::Cmds => {
            let (model, emb) = fit_classical_mds(x, p)?;
            Ok(FitOutcome {
                model_json: spectral_to_json(&model),
                clamped: model.clamped_count(),
                embedding: emb,
                reference: euclid(),
                reference_kind: "euclidean",
                stress: None,
                note: None,
            })
        }
        MethodArg::Kmds => {
            let (model, emb) = fit_kernel_mds(x, &kernel_spec(args), p)?;
            Ok(FitOutcome {
                model_json: spectral_to_json(&model),
                clamped: model.clamped_count(),
                embedding: emb,
                reference: euclid(),
                reference_kind: "euclidean",
                stress: None,
                note: None,
            })
        }
        MethodArg::Isomap | MethodArg::Kisomap => {
            let k = args.k.unwrap_or(DEFAULT_K);
            let (model, emb) = if args.method == MethodArg::Isomap {
                fit_isomap(x, k, p)?
            } else {
                fit_kernel_isomap(x, k, p)?
            };
            let reference = model
                .isomap_state()
                .expect("isomap fit stores geodesics")
                .geodesics
                .clone();
            Ok(FitOutcome {
                model_json: spectral_to_json(&model),
                clamped: model.clamped_count(),
                embedding: emb,
                reference,
                reference_kind: "geodesic",
                stress: None,
                note: None,
            })
        }
        MethodArg::Sammon => {
            let (emb, report) = fit_sammon(x, p, &iter_config(args))?;
            Ok(FitOutcome {
                model_json: embedding_only_to_json(EmbedMethod::Sammon, x, &emb, args.gamma),
                clamped: 0,
                embedding: emb,
                reference: euclid(),
                reference_kind: "euclidean",
                stress: Some(report),
                note: None,
            })
        }
        MethodArg::Mmds => {
            let (emb, report) = fit_metric_mds_points(x, p, &iter_config(args), true)?;
            Ok(FitOutcome {
                model_json: embedding_only_to_json(EmbedMethod::MetricMds, x, &emb, args.gamma),
                clamped: 0,
                embedding: emb,
                reference: euclid(),
                reference_kind: "euclidean",
                stress: Some(report),
                note: None,
            })
        }
        MethodArg::Nmmds => {
            let (emb, report) = fit_nonmetric_mds_points(x, p, &iter_config(args))?;
            Ok(FitOutcome {
                model_json: embedding_only_to_json(EmbedMethod::NonmetricMds, x, &emb, args.gamma),
                clamped: 0,
                embedding: emb,
                reference: euclid(),
                reference_kind: "euclidean",
                stress: Some(report),
                note: None,
            })
        }
        MethodArg::Lmds => {
            let m = require_landmarks(args)?;
            let emb = fit_landmark_mds(x, m, p, args.seed)?;
            Ok(FitOutcome {
                model_json: embedding_only_to_json(EmbedMethod::LandmarkMds, x, &emb, args.gamma),
                clamped: 0,
                embedding: emb,
                reference: euclid(),
                reference_kind: "euclidean",
                stress: None,
                note: None,
            })
        }
        MethodArg::Lisomap => {
            let m = require_landmarks(args)?;
            let k = args.k.unwrap_or(DEFAULT_K);
            let emb = fit_landmark_isomap(x, m, k, p, args.seed)?;
            Ok(FitOutcome {
                model_json: embedding_only_to_json(
                    EmbedMethod::LandmarkIsomap,
                    x,
                    &emb,
                    args.gamma,
                ),
                clamped: 0,
                embedding: emb,
                reference: euclid(),
                reference_kind: "euclidean",
                stress: None,
                note: Some(
                    "residual variance uses Euclidean input distances; full geodesics \
                     are not computed for landmark Isomap"
                        .into(),
                ),
            })
        }
        MethodArg::Pca => {
            let (model, emb) = fit_pca_model(x, p)?;
            Ok(FitOutcome {
                model_json: pca_to_json(&model, x, &emb),
                clamped: 0,
                embedding: emb,
                reference: euclid(),
                reference_kind: "euclidean",
                stress: None,
                note: None,
            })
        }
    }
}

fn run_fit(args: &FitArgs) -> Result<()> {
    let (x, labels) = match args.labels {
        Some(col) => {
            let (x, labels) = load_points_with_labels(&args.input, col)?;
            (x, Some(labels))
        }
        None => (load_points(&args.input)?, None),
    };

    let start = Instant::now();
    let outcome = fit_method(args, &x)?;
    let runtime = start.elapsed().as_secs_f64();
    let report = quality_report(&outcome.reference, &outcome.embedding, runtime)?;

    atomic_write(&args.output, embedding_to_csv(&outcome.embedding).as_bytes())?;
    atomic_write(
        &sibling(&args.output, "model.json"),
        outcome.model_json.as_bytes(),
    )?;

    let mut summary = String::new();
    summary.push_str(&format!("method: {}\n", args.method.name()));
    summary.push_str(&format!("points: {}\n", x.len()));
    summary.push_str(&format!("input_dim: {}\n", x.dim()));
    summary.push_str(&format!("embedding_dim: {}\n", outcome.embedding.dim()));
    summary.push_str(&format!("seed: {}\n", args.seed));
    summary.push_str(&format!(
        "normalized_stress: {}\n",
        report.stress_normalized
    ));
    summary.push_str(&format!(
        "sammon_stress: {}\n",
        report
            .sammon_stress
            .map_or_else(|| "n/a".to_string(), |v| v.to_string())
    ));
    summary.push_str(&format!(
        "residual_variance: {} (vs {} distances)\n",
        report.residual_variance, outcome.reference_kind
    ));
    summary.push_str(&format!("clamped_eigenvalues: {}\n", outcome.clamped));
    if let Some(stress) = &outcome.stress {
        summary.push_str(&format!("iterations: {}\n", stress.iterations));
        summary.push_str(&format!("final_stress: {}\n", stress.final_stress));
        summary.push_str(&format!("step_halvings: {}\n", stress.halvings));
    }
    summary.push_str(&format!("runtime_seconds: {}\n", report.runtime_seconds));
    if let Some(note) = &outcome.note {
        summary.push_str(&format!("note: {note}\n"));
    }
    atomic_write(&sibling(&args.output, "summary.txt"), summary.as_bytes())?;

    if let Some(stress) = &outcome.stress {
        atomic_write(&sibling(&args.output, "stress.csv"), stress.to_csv().as_bytes())?;
    }
    if let Some(plot_path) = &args.plot {
        let svg = scatter_svg(&outcome.embedding, labels.as_deref());
        atomic_write(plot_path, svg.as_bytes())?;
    }
    Ok(())
}

fn run_transform(args: &TransformArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.model)?;
    let model = from_json(&text)?;
    let x_t = load_points(&args.input)?;

    let route = args.oos.unwrap_or(match &model {
        LoadedModel::Spectral(_) | LoadedModel::Pca(_) => OosRouteArg::Eigen,
        LoadedModel::EmbeddingOnly(_) => OosRouteArg::KernelMap,
    });

    let embedding = match (&model, route) {
        (LoadedModel::Spectral(m), OosRouteArg::Eigen) => {
            let opts = OosOptions {
                test_points_as_intermediates: args.test_intermediates,
            };
            oos_embed_eigen_with(m, &x_t, opts)?
        }
        (LoadedModel::Spectral(m), OosRouteArg::LandmarkFormula) => {
            oos_embed_isomap_landmark_formula(m, &x_t)?
        }
        (LoadedModel::Spectral(m), OosRouteArg::KernelMap) => {
            let gamma = args.gamma.unwrap_or(DEFAULT_GAMMA);
            let map = kernel_map_fit(m.train_x(), &m.training_embedding(), gamma)?;
            kernel_map_apply(&map, &x_t)?
        }
        (LoadedModel::Pca(m), OosRouteArg::Eigen) => m.pca.transform(&x_t)?,
        (LoadedModel::Pca(m), OosRouteArg::KernelMap) => {
            let gamma = args.gamma.unwrap_or(DEFAULT_GAMMA);
            let map = kernel_map_fit(&m.train_x, &m.embedding, gamma)?;
            kernel_map_apply(&map, &x_t)?
        }
        (LoadedModel::Pca(_), OosRouteArg::LandmarkFormula) => {
            return Err(MdsError::UnsupportedRoute(
                "landmark-formula route requires an Isomap model".into(),
            )
            .into());
        }
        (LoadedModel::EmbeddingOnly(m), OosRouteArg::KernelMap) => {
            let gamma = args.gamma.or(m.gamma).unwrap_or(DEFAULT_GAMMA);
            let map = kernel_map_fit(&m.train_x, &m.embedding, gamma)?;
            kernel_map_apply(&map, &x_t)?
        }
        (LoadedModel::EmbeddingOnly(_), other) => {
            return Err(MdsError::UnsupportedRoute(format!(
                "route {other:?} requires a spectral model; this model only supports kernel-map"
            ))
            .into());
        }
    };

    atomic_write(&args.output, embedding_to_csv(&embedding).as_bytes())?;
    Ok(())
}

fn run_synth(cmd: &SynthCommand) -> Result<()> {
    match cmd {
        SynthCommand::SwissRoll {
            n,
            noise,
            seed,
            output,
        } => {
            let (points, intrinsic) = swiss_roll(*n, *noise, *seed)?;
            atomic_write(output, points_to_csv(&points, &["x", "y", "z"]).as_bytes())?;
            let intrinsic_csv = points_to_csv(
                &DataMatrix::new(intrinsic.clone())?,
                &["arc_length", "height"],
            );
            atomic_write(&sibling(output, "intrinsic.csv"), intrinsic_csv.as_bytes())?;
            Ok(())
        }
    }
}

fn run_bench(args: &BenchArgs) -> Result<()> {
    let x = load_points(&args.input)?;
    let euclid = pairwise_euclidean(&x, Scale::Raw);
    let geodesic = manifold_core::distance::knn_graph(&euclid, args.k)
        .and_then(|g| manifold_core::distance::geodesic_distances(&g))
        .ok();

    let methods: Vec<MethodArg> = args
        .methods
        .split(',')
        .map(|m| MethodArg::parse(m.trim()))
        .collect::<Result<_>>()?;
    if methods.is_empty() {
        return Err(AppError::Usage("--methods list is empty".into()));
    }

    let mut table = String::from(
        "method,points,dim,runtime_seconds,normalized_stress,resvar_euclidean,resvar_geodesic\n",
    );
    for method in methods {
        let fit_args = FitArgs {
            method,
            input: args.input.clone(),
            output: PathBuf::new(),
            dim: args.dim,
            k: Some(args.k),
            landmarks: args.landmarks,
            kernel: None,
            bandwidth: None,
            iters: None,
            lr: None,
            gamma: None,
            seed: args.seed,
            plot: None,
            labels: None,
        };
        let start = Instant::now();
        let outcome = fit_method(&fit_args, &x)?;
        let runtime = start.elapsed().as_secs_f64();
        let stress = manifold_core::iterative::metric_stress(&euclid, &outcome.embedding, true)?;
        let rv_euclid = residual_variance(&euclid, &outcome.embedding)?;
        let rv_geo = match &geodesic {
            Some(d) => residual_variance(d, &outcome.embedding)?.to_string(),
            None => String::new(),
        };
        table.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            method.name(),
            x.len(),
            args.dim,
            runtime,
            stress,
            rv_euclid,
            rv_geo
        ));
    }
    atomic_write(&args.output, table.as_bytes())?;
    Ok(())
}
