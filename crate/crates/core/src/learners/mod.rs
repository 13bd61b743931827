//! Probabilistic binary classifiers and the soft-voting ensemble.
//!
//! Each learner sits behind the [`Learner`] trait and is registered by name
//! in a [`LearnerRegistry`]. Fitting standardizes the training matrix first;
//! the fitted [`ProbabilisticClassifier`] carries that standardizer and a
//! serializable [`Model`], so it can be persisted and reloaded.

pub mod boosting;
pub mod forest;
pub mod knn;
pub mod lda;
pub mod logistic;
pub mod standardize;
pub mod tree;

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::TrainingMatrix;
use crate::error::{Error, Result};
use crate::rng::derive_seed;

pub use boosting::{BoostedModel, BoostingParams};
pub use forest::{ForestModel, ForestParams};
pub use knn::KnnModel;
pub use lda::LdaModel;
pub use logistic::{LogisticModel, LogisticParams};
pub use standardize::{fit_standardizer, Standardizer};

pub const MODEL_FORMAT_VERSION: u32 = 1;

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Fitted model state, operating on standardized rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Model {
    Constant { probability: f64 },
    LogisticRegression(LogisticModel),
    Lda(LdaModel),
    Knn(KnnModel),
    RandomForest(ForestModel),
    GradientBoosting(BoostedModel),
    SoftVotingEnsemble(EnsembleModel),
}

impl Model {
    pub fn predict(&self, row: &[f64]) -> f64 {
        let p = match self {
            Model::Constant { probability } => *probability,
            Model::LogisticRegression(m) => m.predict(row),
            Model::Lda(m) => m.predict(row),
            Model::Knn(m) => m.predict(row),
            Model::RandomForest(m) => m.predict(row),
            Model::GradientBoosting(m) => m.predict(row),
            Model::SoftVotingEnsemble(m) => m.predict(row),
        };
        p.clamp(0.0, 1.0)
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Model::Constant { .. } => "constant",
            Model::LogisticRegression(_) => "logistic-regression",
            Model::Lda(_) => "lda",
            Model::Knn(_) => "knn",
            Model::RandomForest(_) => "random-forest",
            Model::GradientBoosting(_) => "gradient-boosting",
            Model::SoftVotingEnsemble(_) => "soft-voting-ensemble",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    pub members: Vec<Model>,
    pub weights: Vec<f64>,
}

impl EnsembleModel {
    pub fn member_probabilities(&self, row: &[f64]) -> Vec<f64> {
        self.members.iter().map(|m| m.predict(row)).collect()
    }

    /// Weighted mean of member probabilities.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let total: f64 = self.weights.iter().sum();
        self.members
            .iter()
            .zip(&self.weights)
            .map(|(m, w)| w * m.predict(row))
            .sum::<f64>()
            / total
    }
}

/// A trained model plus everything needed to apply and reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilisticClassifier {
    pub format_version: u32,
    pub learner: String,
    pub seed: u64,
    pub hyperparameters: serde_json::Value,
    pub feature_names: Vec<String>,
    pub standardizer: Standardizer,
    pub model: Model,
}

impl ProbabilisticClassifier {
    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    /// Probability that `row` is a True instance.
    pub fn predict_proba(&self, row: &[f64]) -> Result<f64> {
        if row.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: row.len(),
            });
        }
        Ok(self.model.predict(&self.standardizer.apply(row)))
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        rows.iter().map(|r| self.predict_proba(r)).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == u64::from(MODEL_FORMAT_VERSION) => Ok(serde_json::from_value(value)?),
            Some(v) => Err(Error::ModelFormat(format!(
                "format version {v}, expected {MODEL_FORMAT_VERSION}"
            ))),
            None => Err(Error::ModelFormat("missing format_version".into())),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// A trainable classifier family.
pub trait Learner: Send + Sync {
    fn name(&self) -> &str;

    fn hyperparameters(&self) -> serde_json::Value;

    /// Fit on standardized rows; both classes are guaranteed present.
    fn fit_standardized(&self, x: &[Vec<f64>], y: &[bool], seed: u64) -> Result<Model>;

    /// Standardize `tm`, fit, and wrap the result.
    fn fit(&self, tm: &TrainingMatrix, seed: u64) -> Result<ProbabilisticClassifier> {
        tm.validate()?;
        if !tm.has_both_classes() {
            return Err(Error::SingleClassInput);
        }
        let standardizer = fit_standardizer(&tm.rows)?;
        let x = standardizer.apply_all(&tm.rows);
        let model = self.fit_standardized(&x, &tm.labels, seed)?;
        Ok(ProbabilisticClassifier {
            format_version: MODEL_FORMAT_VERSION,
            learner: self.name().to_string(),
            seed,
            hyperparameters: self.hyperparameters(),
            feature_names: tm.feature_names.clone(),
            standardizer,
            model,
        })
    }
}

pub struct LogisticRegression(pub LogisticParams);

impl Learner for LogisticRegression {
    fn name(&self) -> &str {
        "logistic-regression"
    }

    fn hyperparameters(&self) -> serde_json::Value {
        serde_json::to_value(self.0).unwrap_or_default()
    }

    fn fit_standardized(&self, x: &[Vec<f64>], y: &[bool], _seed: u64) -> Result<Model> {
        Ok(Model::LogisticRegression(logistic::fit(x, y, &self.0)))
    }
}

pub struct Lda;

impl Learner for Lda {
    fn name(&self) -> &str {
        "lda"
    }

    fn hyperparameters(&self) -> serde_json::Value {
        serde_json::json!({})
    }

    fn fit_standardized(&self, x: &[Vec<f64>], y: &[bool], _seed: u64) -> Result<Model> {
        Ok(Model::Lda(lda::fit(x, y)))
    }
}

pub struct Knn {
    pub k: usize,
    /// Shrink `k` to the row count instead of failing.
    pub clamp_k: bool,
}

impl Learner for Knn {
    fn name(&self) -> &str {
        "knn"
    }

    fn hyperparameters(&self) -> serde_json::Value {
        serde_json::json!({ "k": self.k })
    }

    fn fit_standardized(&self, x: &[Vec<f64>], y: &[bool], _seed: u64) -> Result<Model> {
        let n = x.len();
        if self.k == 0 || (self.k > n && !self.clamp_k) {
            return Err(Error::KTooLarge { k: self.k, n });
        }
        Ok(Model::Knn(KnnModel {
            k: self.k.min(n),
            rows: x.to_vec(),
            labels: y.to_vec(),
        }))
    }
}

pub struct RandomForest(pub ForestParams);

impl Learner for RandomForest {
    fn name(&self) -> &str {
        "random-forest"
    }

    fn hyperparameters(&self) -> serde_json::Value {
        serde_json::to_value(self.0).unwrap_or_default()
    }

    fn fit_standardized(&self, x: &[Vec<f64>], y: &[bool], seed: u64) -> Result<Model> {
        Ok(Model::RandomForest(forest::fit(x, y, &self.0, seed)))
    }
}

pub struct GradientBoosting(pub BoostingParams);

impl Learner for GradientBoosting {
    fn name(&self) -> &str {
        "gradient-boosting"
    }

    fn hyperparameters(&self) -> serde_json::Value {
        serde_json::to_value(self.0).unwrap_or_default()
    }

    fn fit_standardized(&self, x: &[Vec<f64>], y: &[bool], seed: u64) -> Result<Model> {
        Ok(Model::GradientBoosting(boosting::fit(x, y, &self.0, seed)))
    }
}

/// Hyperparameters for every registered learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LearnerConfig {
    pub logistic: LogisticParams,
    pub knn_k: usize,
    pub forest: ForestParams,
    pub boosting: BoostingParams,
    /// Soft-voting weights in member order: lda, random-forest,
    /// gradient-boosting, logistic-regression, knn.
    pub ensemble_weights: [f64; 5],
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            logistic: LogisticParams::default(),
            knn_k: 15,
            forest: ForestParams::default(),
            boosting: BoostingParams::default(),
            ensemble_weights: [1.0; 5],
        }
    }
}

/// Equal-weight (by default) average of the five member learners.
pub struct SoftVotingEnsemble {
    pub members: Vec<Arc<dyn Learner>>,
    pub weights: Vec<f64>,
}

impl SoftVotingEnsemble {
    pub const MEMBERS: [&'static str; 5] = [
        "lda",
        "random-forest",
        "gradient-boosting",
        "logistic-regression",
        "knn",
    ];

    pub fn new(config: &LearnerConfig) -> Self {
        let members: Vec<Arc<dyn Learner>> = vec![
            Arc::new(Lda),
            Arc::new(RandomForest(config.forest)),
            Arc::new(GradientBoosting(config.boosting)),
            Arc::new(LogisticRegression(config.logistic)),
            Arc::new(Knn {
                k: config.knn_k,
                clamp_k: true,
            }),
        ];
        Self {
            members,
            weights: config.ensemble_weights.to_vec(),
        }
    }
}

impl Learner for SoftVotingEnsemble {
    fn name(&self) -> &str {
        "ensemble"
    }

    fn hyperparameters(&self) -> serde_json::Value {
        let members: BTreeMap<String, serde_json::Value> = self
            .members
            .iter()
            .map(|m| (m.name().to_string(), m.hyperparameters()))
            .collect();
        serde_json::json!({ "members": members, "weights": self.weights })
    }

    fn fit_standardized(&self, x: &[Vec<f64>], y: &[bool], seed: u64) -> Result<Model> {
        let members = self
            .members
            .iter()
            .map(|m| m.fit_standardized(x, y, derive_seed(seed, m.name())))
            .collect::<Result<Vec<_>>>()?;
        Ok(Model::SoftVotingEnsemble(EnsembleModel {
            members,
            weights: self.weights.clone(),
        }))
    }
}

type LearnerFactory = Box<dyn Fn(&LearnerConfig) -> Arc<dyn Learner> + Send + Sync>;

/// Name → learner factory.
pub struct LearnerRegistry {
    factories: BTreeMap<String, LearnerFactory>,
}

impl LearnerRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("lda", |_| Arc::new(Lda));
        r.register("logistic-regression", |c| Arc::new(LogisticRegression(c.logistic)));
        r.register("knn", |c| {
            Arc::new(Knn {
                k: c.knn_k,
                clamp_k: false,
            })
        });
        r.register("random-forest", |c| Arc::new(RandomForest(c.forest)));
        r.register("gradient-boosting", |c| Arc::new(GradientBoosting(c.boosting)));
        r.register("ensemble", |c| Arc::new(SoftVotingEnsemble::new(c)));
        r
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&LearnerConfig) -> Arc<dyn Learner> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn create(&self, name: &str, config: &LearnerConfig) -> Result<Arc<dyn Learner>> {
        self.factories
            .get(name)
            .map(|f| f(config))
            .ok_or_else(|| Error::UnknownLearner(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }
}

pub fn fit_logistic_regression(tm: &TrainingMatrix, l2: f64, seed: u64) -> Result<ProbabilisticClassifier> {
    LogisticRegression(LogisticParams {
        l2,
        ..Default::default()
    })
    .fit(tm, seed)
}

pub fn fit_lda(tm: &TrainingMatrix) -> Result<ProbabilisticClassifier> {
    Lda.fit(tm, 0)
}

pub fn fit_knn(tm: &TrainingMatrix, k: usize) -> Result<ProbabilisticClassifier> {
    Knn { k, clamp_k: false }.fit(tm, 0)
}

pub fn fit_random_forest(
    tm: &TrainingMatrix,
    trees: usize,
    max_depth: usize,
    min_leaf: usize,
    seed: u64,
) -> Result<ProbabilisticClassifier> {
    RandomForest(ForestParams {
        trees,
        max_depth,
        min_leaf,
        bootstrap: true,
    })
    .fit(tm, seed)
}

pub fn fit_gradient_boosting(
    tm: &TrainingMatrix,
    rounds: usize,
    learning_rate: f64,
    max_depth: usize,
    seed: u64,
) -> Result<ProbabilisticClassifier> {
    GradientBoosting(BoostingParams {
        rounds,
        learning_rate,
        max_depth,
        ..Default::default()
    })
    .fit(tm, seed)
}

pub fn fit_soft_voting_ensemble(tm: &TrainingMatrix, seed: u64) -> Result<ProbabilisticClassifier> {
    SoftVotingEnsemble::new(&LearnerConfig::default()).fit(tm, seed)
}
