//! Name-addressed aggregation methods.
//!
//! Every method, rule-based or learned, sits behind [`AggregationMethod`] so
//! the evaluation harness and CLI can select them by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::aggregators::{acr_aggregate, rcr_aggregate, StrategySpec, DEFAULT_THRESHOLD};
use crate::baselines;
use crate::dataset::Representation;
use crate::error::{Error, Result};
use crate::features::RcrOptions;
use crate::learners::ProbabilisticClassifier;
use crate::model::ResponseSet;
use crate::result::AggregationResult;

pub const RCR_AGG: &str = "rcr-agg";
pub const ACR_AGG: &str = "acr-agg";

pub trait AggregationMethod: Send + Sync {
    fn name(&self) -> String;

    /// Feature representation the method's classifier consumes, if any.
    fn representation(&self) -> Option<Representation> {
        None
    }

    fn aggregate(&self, rs: &ResponseSet, model: Option<&ProbabilisticClassifier>) -> Result<AggregationResult>;
}

type RuleFn = fn(&ResponseSet) -> AggregationResult;

/// A baseline rule wrapped as a method.
pub struct Rule {
    name: &'static str,
    f: RuleFn,
}

impl AggregationMethod for Rule {
    fn name(&self) -> String {
        self.name.to_string()
    }

    fn aggregate(&self, rs: &ResponseSet, _model: Option<&ProbabilisticClassifier>) -> Result<AggregationResult> {
        Ok((self.f)(rs))
    }
}

pub struct RcrAgg {
    pub spec: StrategySpec,
    pub threshold: f64,
    pub options: RcrOptions,
}

impl AggregationMethod for RcrAgg {
    fn name(&self) -> String {
        RCR_AGG.to_string()
    }

    fn representation(&self) -> Option<Representation> {
        Some(Representation::Rcr)
    }

    fn aggregate(&self, rs: &ResponseSet, model: Option<&ProbabilisticClassifier>) -> Result<AggregationResult> {
        let model = model.ok_or_else(|| Error::ModelRequired { method: RCR_AGG.into() })?;
        let mut r = rcr_aggregate(rs, model, self.spec, self.threshold, &self.options)?;
        r.method_name = RCR_AGG.to_string();
        Ok(r)
    }
}

pub struct AcrAgg {
    pub threshold: f64,
}

impl AggregationMethod for AcrAgg {
    fn name(&self) -> String {
        ACR_AGG.to_string()
    }

    fn representation(&self) -> Option<Representation> {
        Some(Representation::Acr)
    }

    fn aggregate(&self, rs: &ResponseSet, model: Option<&ProbabilisticClassifier>) -> Result<AggregationResult> {
        let model = model.ok_or_else(|| Error::ModelRequired { method: ACR_AGG.into() })?;
        acr_aggregate(rs, model, self.threshold)
    }
}

/// Settings shared by the learned methods.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodConfig {
    pub strategy: StrategySpec,
    pub threshold: f64,
    pub rcr: RcrOptions,
}

impl Default for MethodConfig {
    fn default() -> Self {
        Self {
            strategy: StrategySpec::default(),
            threshold: DEFAULT_THRESHOLD,
            rcr: RcrOptions::default(),
        }
    }
}

type Factory = Box<dyn Fn(&MethodConfig) -> Arc<dyn AggregationMethod> + Send + Sync>;

pub struct MethodRegistry {
    factories: BTreeMap<String, Factory>,
}

impl MethodRegistry {
    pub fn empty() -> Self {
        Self {
            factories: BTreeMap::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut reg = Self::empty();
        let rules: [(&'static str, RuleFn); 5] = [
            (baselines::MR, baselines::majority_rule),
            (baselines::WC, baselines::weighted_confidence),
            (baselines::HAC, baselines::highest_avg_confidence),
            (baselines::SP, baselines::surprisingly_popular),
            (baselines::SPOG, baselines::surprisingly_popular_out_group),
        ];
        for (name, f) in rules {
            reg.register(name, move |_| Arc::new(Rule { name, f }));
        }
        reg.register(RCR_AGG, |c| {
            Arc::new(RcrAgg {
                spec: c.strategy,
                threshold: c.threshold,
                options: c.rcr,
            })
        });
        reg.register(ACR_AGG, |c| Arc::new(AcrAgg { threshold: c.threshold }));
        reg
    }

    pub fn register<F>(&mut self, name: &str, factory: F)
    where
        F: Fn(&MethodConfig) -> Arc<dyn AggregationMethod> + Send + Sync + 'static,
    {
        self.factories.insert(name.to_string(), Box::new(factory));
    }

    pub fn create(&self, name: &str, config: &MethodConfig) -> Result<Arc<dyn AggregationMethod>> {
        self.factories
            .get(name)
            .map(|f| f(config))
            .ok_or_else(|| Error::UnknownMethod(name.to_string()))
    }

    pub fn names(&self) -> Vec<&str> {
        self.factories.keys().map(String::as_str).collect()
    }
}
