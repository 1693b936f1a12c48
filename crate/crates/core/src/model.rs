//! Versioned model container: a JSON document with a magic header holding
//! everything TRANSFORM needs — the method tag, eigenvalues, the leading
//! eigenvector columns, the uncentered training kernel, training data, and
//! (for Isomap) the neighbour graph and geodesic matrix.
//!
//! Layout (JSON object):
//! - `magic`: always `"manifold-embed/model"`
//! - `version`: container revision, currently `1`
//! - `model`: tagged union, one of `spectral`, `iterative`, `pca`
//!
//! Matrices serialize as `{rows, cols, values}` with column-major `values`.
//! Numbers round-trip exactly (shortest-representation decimal).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::distance::NeighborGraph;
use crate::error::{MdsError, Result};
use crate::spectral::{IsomapState, Method, PcaModel, SpectralModel};
use crate::types::{DataMatrix, DistanceMatrix, Embedding, KernelMatrix, Scale};

pub const MODEL_MAGIC: &str = "manifold-embed/model";
pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MatrixData {
    rows: usize,
    cols: usize,
    /// Column-major entries.
    values: Vec<f64>,
}

impl MatrixData {
    fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            values: m.iter().copied().collect(),
        }
    }

    fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.values.len() != self.rows * self.cols {
            return Err(MdsError::ModelFormat(format!(
                "matrix payload has {} values for a {}x{} shape",
                self.values.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_column_slice(
            self.rows,
            self.cols,
            &self.values,
        ))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct IsomapData {
    k: usize,
    geodesics: MatrixData,
    adjacency: Vec<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct SpectralData {
    method: Method,
    p: usize,
    clamped_count: usize,
    eigenvalues: Vec<f64>,
    /// Leading `p` eigenvector columns (n x p).
    eigenvectors: MatrixData,
    train_kernel: MatrixData,
    train_x: MatrixData,
    train_mean: Vec<f64>,
    isomap: Option<IsomapData>,
}

/// Which embedding-only method produced a stored embedding. These models
/// carry no eigensystem, so they transform via the kernel-mapping route.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbedMethod {
    Sammon,
    MetricMds,
    NonmetricMds,
    LandmarkMds,
    LandmarkIsomap,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct EmbeddingOnlyData {
    method: EmbedMethod,
    p: usize,
    train_x: MatrixData,
    embedding: MatrixData,
    /// Kernel-map bandwidth scale chosen at fit time, if any.
    gamma: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct PcaData {
    p: usize,
    mean: Vec<f64>,
    components: MatrixData,
    train_x: MatrixData,
    embedding: MatrixData,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum ModelKind {
    Spectral(SpectralData),
    EmbeddingOnly(EmbeddingOnlyData),
    Pca(PcaData),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ModelFile {
    magic: String,
    version: u32,
    model: ModelKind,
}

/// A stored embedding-only fit: enough to re-embed via the kernel-mapping
/// route.
#[derive(Debug, Clone)]
pub struct EmbeddingOnlyModel {
    pub method: EmbedMethod,
    pub train_x: DataMatrix,
    pub embedding: Embedding,
    pub gamma: Option<f64>,
}

/// A stored PCA fit.
#[derive(Debug, Clone)]
pub struct StoredPca {
    pub pca: PcaModel,
    pub train_x: DataMatrix,
    pub embedding: Embedding,
}

/// Any model the container can hold.
#[derive(Debug, Clone)]
pub enum LoadedModel {
    Spectral(Box<SpectralModel>),
    EmbeddingOnly(EmbeddingOnlyModel),
    Pca(Box<StoredPca>),
}

/// Serializes a spectral model (leading `p` eigenvector columns only).
pub fn spectral_to_json(model: &SpectralModel) -> String {
    let p = model.p();
    let n = model.len();
    let v_p = model.eigenvectors().columns(0, p).into_owned();
    let data = SpectralData {
        method: model.method().clone(),
        p,
        clamped_count: model.clamped_count(),
        eigenvalues: model.eigenvalues().iter().copied().collect(),
        eigenvectors: MatrixData::from_matrix(&v_p),
        train_kernel: MatrixData::from_matrix(model.train_kernel().values()),
        train_x: MatrixData::from_matrix(model.train_x().values()),
        train_mean: model.train_mean().iter().copied().collect(),
        isomap: model.isomap_state().map(|s| IsomapData {
            k: s.k,
            geodesics: MatrixData::from_matrix(s.geodesics.values()),
            adjacency: (0..n).map(|i| s.graph.neighbors(i).to_vec()).collect(),
        }),
    };
    to_container(ModelKind::Spectral(data))
}

/// Serializes an embedding-only fit (training data plus its embedding).
pub fn embedding_only_to_json(
    method: EmbedMethod,
    x: &DataMatrix,
    y: &Embedding,
    gamma: Option<f64>,
) -> String {
    let data = EmbeddingOnlyData {
        method,
        p: y.dim(),
        train_x: MatrixData::from_matrix(x.values()),
        embedding: MatrixData::from_matrix(y.coordinates()),
        gamma,
    };
    to_container(ModelKind::EmbeddingOnly(data))
}

/// Serializes a PCA fit.
pub fn pca_to_json(pca: &PcaModel, x: &DataMatrix, y: &Embedding) -> String {
    let data = PcaData {
        p: pca.p(),
        mean: pca.mean().iter().copied().collect(),
        components: MatrixData::from_matrix(pca.components()),
        train_x: MatrixData::from_matrix(x.values()),
        embedding: MatrixData::from_matrix(y.coordinates()),
    };
    to_container(ModelKind::Pca(data))
}

fn to_container(model: ModelKind) -> String {
    let file = ModelFile {
        magic: MODEL_MAGIC.to_string(),
        version: MODEL_VERSION,
        model,
    };
    serde_json::to_string(&file).expect("model serialization cannot fail")
}

/// Parses and validates a model container.
pub fn from_json(text: &str) -> Result<LoadedModel> {
    let file: ModelFile = serde_json::from_str(text)
        .map_err(|e| MdsError::ModelFormat(format!("not a model container: {e}")))?;
    if file.magic != MODEL_MAGIC {
        return Err(MdsError::ModelFormat(format!(
            "bad magic {:?}, expected {MODEL_MAGIC:?}",
            file.magic
        )));
    }
    if file.version != MODEL_VERSION {
        return Err(MdsError::ModelFormat(format!(
            "unsupported container version {} (this build reads {MODEL_VERSION})",
            file.version
        )));
    }
    match file.model {
        ModelKind::Spectral(data) => {
            let train_x = DataMatrix::new(data.train_x.to_matrix()?)?;
            let train_kernel = KernelMatrix::new(data.train_kernel.to_matrix()?)?;
            let eigenvectors = data.eigenvectors.to_matrix()?;
            let isomap = match data.isomap {
                Some(iso) => {
                    let geodesics =
                        DistanceMatrix::new(iso.geodesics.to_matrix()?, Scale::Raw)?;
                    if iso.adjacency.len() != train_x.len() {
                        return Err(MdsError::ModelFormat(
                            "stored graph does not match training size".into(),
                        ));
                    }
                    Some(IsomapState {
                        k: iso.k,
                        graph: NeighborGraph::from_adjacency(iso.adjacency),
                        geodesics,
                    })
                }
                None => None,
            };
            let model = SpectralModel::from_parts(
                data.method,
                DVector::from_vec(data.eigenvalues),
                eigenvectors,
                train_kernel,
                train_x,
                DVector::from_vec(data.train_mean),
                data.p,
                data.clamped_count,
                isomap,
            )?;
            Ok(LoadedModel::Spectral(Box::new(model)))
        }
        ModelKind::EmbeddingOnly(data) => {
            let train_x = DataMatrix::new(data.train_x.to_matrix()?)?;
            let embedding = Embedding::new(data.embedding.to_matrix()?)?;
            if embedding.len() != train_x.len() || embedding.dim() != data.p {
                return Err(MdsError::ModelFormat(
                    "stored embedding does not match training size".into(),
                ));
            }
            Ok(LoadedModel::EmbeddingOnly(EmbeddingOnlyModel {
                method: data.method,
                train_x,
                embedding,
                gamma: data.gamma,
            }))
        }
        ModelKind::Pca(data) => {
            let train_x = DataMatrix::new(data.train_x.to_matrix()?)?;
            let embedding = Embedding::new(data.embedding.to_matrix()?)?;
            let pca = PcaModel::from_parts(
                DVector::from_vec(data.mean),
                data.components.to_matrix()?,
            )?;
            Ok(LoadedModel::Pca(Box::new(StoredPca {
                pca,
                train_x,
                embedding,
            })))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::iterative::{fit_sammon, IterConfig};
    use crate::oos::oos_embed_eigen;
    use crate::spectral::{fit_classical_mds, fit_isomap, fit_pca_model};
    use manifold_oracles as oracles;

    fn max_abs_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a - b).iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    #[test]
    fn spectral_round_trip_preserves_oos_behaviour() {
        let x = DataMatrix::new(oracles::random_matrix(3, 10, 3)).unwrap();
        let (model, emb) = fit_classical_mds(&x, 2).unwrap();
        let json = spectral_to_json(&model);
        let LoadedModel::Spectral(loaded) = from_json(&json).unwrap() else {
            panic!("wrong variant");
        };
        assert_eq!(loaded.training_embedding().coordinates(), emb.coordinates());
        let a = oos_embed_eigen(&model, &x).unwrap();
        let b = oos_embed_eigen(&loaded, &x).unwrap();
        assert_eq!(a.coordinates(), b.coordinates());
    }

    #[test]
    fn isomap_round_trip_keeps_graph_state() {
        let x = DataMatrix::new(oracles::random_matrix(3, 12, 7)).unwrap();
        let (model, _) = fit_isomap(&x, 4, 2).unwrap();
        let json = spectral_to_json(&model);
        let LoadedModel::Spectral(loaded) = from_json(&json).unwrap() else {
            panic!("wrong variant");
        };
        let x_t = DataMatrix::new(oracles::random_matrix(3, 3, 8).map(|v| 0.6 * v)).unwrap();
        let a = oos_embed_eigen(&model, &x_t).unwrap();
        let b = oos_embed_eigen(&loaded, &x_t).unwrap();
        assert!(max_abs_diff(a.coordinates(), b.coordinates()) <= 1e-12);
    }

    #[test]
    fn embedding_only_round_trip() {
        let x = DataMatrix::new(oracles::random_matrix(2, 8, 9)).unwrap();
        let (emb, _) = fit_sammon(&x, 2, &IterConfig::default()).unwrap();
        let json = embedding_only_to_json(EmbedMethod::Sammon, &x, &emb, Some(0.5));
        let LoadedModel::EmbeddingOnly(loaded) = from_json(&json).unwrap() else {
            panic!("wrong variant");
        };
        assert_eq!(loaded.method, EmbedMethod::Sammon);
        assert_eq!(loaded.gamma, Some(0.5));
        assert_eq!(loaded.embedding.coordinates(), emb.coordinates());
    }

    #[test]
    fn pca_round_trip_transform_matches_training() {
        let x = DataMatrix::new(oracles::random_matrix(4, 9, 11)).unwrap();
        let (pca, emb) = fit_pca_model(&x, 2).unwrap();
        let json = pca_to_json(&pca, &x, &emb);
        let LoadedModel::Pca(loaded) = from_json(&json).unwrap() else {
            panic!("wrong variant");
        };
        let projected = loaded.pca.transform(&x).unwrap();
        assert!(max_abs_diff(projected.coordinates(), emb.coordinates()) <= 1e-9);
    }

    #[test]
    fn rejects_bad_magic_and_version() {
        let x = DataMatrix::new(oracles::random_matrix(2, 5, 1)).unwrap();
        let (model, _) = fit_classical_mds(&x, 1).unwrap();
        let json = spectral_to_json(&model);
        let wrong_magic = json.replace(MODEL_MAGIC, "something-else");
        assert!(matches!(
            from_json(&wrong_magic),
            Err(MdsError::ModelFormat(_))
        ));
        let wrong_version = json.replace("\"version\":1", "\"version\":99");
        assert!(matches!(
            from_json(&wrong_version),
            Err(MdsError::ModelFormat(_))
        ));
        assert!(matches!(
            from_json("{\"not\": \"a model\"}"),
            Err(MdsError::ModelFormat(_))
        ));
    }

    #[test]
    fn serialization_is_deterministic() {
        let x = DataMatrix::new(oracles::random_matrix(2, 6, 13)).unwrap();
        let (model, _) = fit_classical_mds(&x, 2).unwrap();
        assert_eq!(spectral_to_json(&model), spectral_to_json(&model));
    }
}
