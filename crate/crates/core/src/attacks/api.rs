use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::AttackError;
use crate::model::{
    fit_module, DataMatrix, FittedModel, InformationSet, LabelKind, LabelVector, Module, PredictionFn, Query,
    QueryBudget, RemoteFn, Response, ResponseMode, SideInfo,
};
use crate::rng;

/// Labels sent in one Stage I query come back as a length-`n` vector, plus
/// (when Stage II access is granted) a handle to the function fitted on them.
#[derive(Debug, Clone)]
pub struct StageOneReply {
    pub values: Vec<f64>,
    pub stage_two: Option<RemoteFn>,
}

/// Request to the task-label generator granted as side information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TaskRequest {
    /// `Y = X beta + eta`, `eta ~ N(0, sigma^2)`, on the target's rows.
    Linear { beta: Vec<f64>, sigma: f64, seed: u64 },
}

/// Query channel seen by an attack.
pub trait Oracle {
    fn mode(&self) -> ResponseMode;
    /// Number of collated rows for label-query services.
    fn rows(&self) -> Option<usize>;
    fn query_row(&mut self, x: &[f64]) -> Result<Response, AttackError>;
    fn query_labels(&mut self, y: &LabelVector) -> Result<StageOneReply, AttackError>;
    fn generate_task(&mut self, request: &TaskRequest) -> Result<LabelVector, AttackError>;
    fn add_side_info(&mut self, info: SideInfo);
    fn queries_used(&self) -> usize;
    fn information(&self) -> &InformationSet;
}

pub(crate) fn expect_value(r: Response) -> Result<f64, AttackError> {
    match r {
        Response::Value { value } => Ok(value),
        _ => Err(AttackError::InvalidParameter("expected a scalar response".into())),
    }
}

pub(crate) fn expect_label(r: Response) -> Result<i8, AttackError> {
    match r {
        Response::Label { label } => Ok(label),
        _ => Err(AttackError::InvalidParameter("expected a label response".into())),
    }
}

pub(crate) fn expect_leaf(r: Response) -> Result<String, AttackError> {
    match r {
        Response::Leaf { id } => Ok(id),
        _ => Err(AttackError::InvalidParameter("expected a leaf response".into())),
    }
}

/// What sits behind an [`ApiView`].
#[derive(Debug, Clone)]
pub enum Target {
    /// A deployed prediction function answering row queries.
    Predictor(Arc<PredictionFn>),
    /// A module that fits whatever labels it receives on its private rows.
    Service(Module),
}

/// Live, logged, budgeted access to a target.
#[derive(Debug, Clone)]
pub struct ApiView {
    id: String,
    target: Target,
    mode: ResponseMode,
    budget: Option<QueryBudget>,
    used: usize,
    log: InformationSet,
    task_oracle: bool,
}

impl ApiView {
    /// Row-query endpoint over a prediction function.
    pub fn predictor(id: impl Into<String>, f: PredictionFn, mode: ResponseMode) -> Result<Self, AttackError> {
        let ok = match mode {
            ResponseMode::Probability => f.output_kind() == LabelKind::Probability,
            ResponseMode::Label => f.output_kind() == LabelKind::ClassLabel,
            ResponseMode::LeafId => matches!(f.model(), FittedModel::Tree(_)),
            ResponseMode::Residual | ResponseMode::Fitted => false,
        };
        if !ok {
            return Err(AttackError::WrongMode { expected: "a mode the target can answer", actual: mode });
        }
        Ok(Self::build(id.into(), Target::Predictor(Arc::new(f)), mode))
    }

    /// Label-query service over a module (residual or fitted-value mode).
    pub fn service(id: impl Into<String>, module: Module, mode: ResponseMode) -> Result<Self, AttackError> {
        if !matches!(mode, ResponseMode::Residual | ResponseMode::Fitted) {
            return Err(AttackError::WrongMode { expected: "residual or fitted", actual: mode });
        }
        Ok(Self::build(id.into(), Target::Service(module), mode))
    }

    fn build(id: String, target: Target, mode: ResponseMode) -> Self {
        let mut log = InformationSet::new();
        log.add_side_info(SideInfo::ResponseMode { mode });
        Self { id, target, mode, budget: None, used: 0, log, task_oracle: false }
    }

    pub fn with_budget(mut self, budget: QueryBudget) -> Self {
        self.budget = Some(budget);
        self
    }

    /// Grants the task-label generator as declared side information.
    pub fn with_task_oracle(mut self) -> Self {
        self.task_oracle = true;
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Swaps the target; queries already answered stay in the log.
    pub fn replace_target(&mut self, target: Target) {
        self.target = target;
    }

    /// Replaces a service target's private rows.
    pub fn tamper_data(&mut self, f: impl FnOnce(&DataMatrix) -> DataMatrix) -> Result<(), AttackError> {
        match &self.target {
            Target::Service(m) => {
                let data = f(m.data());
                self.target = Target::Service(m.with_data(data));
                Ok(())
            }
            Target::Predictor(_) => Err(AttackError::InvalidParameter("predictor targets hold no data".into())),
        }
    }

    /// Freezes the log into a replaying oracle.
    pub fn freeze(&self) -> LogReplay {
        LogReplay { log: self.log.clone(), mode: self.mode, rows: self.rows(), position: 0, task_position: 0 }
    }

    fn charge(&mut self) -> Result<(), AttackError> {
        if let Some(b) = self.budget {
            if self.used >= b.k1 {
                return Err(AttackError::BudgetExhausted { budget: b.k1 });
            }
        }
        self.used += 1;
        Ok(())
    }
}

impl Oracle for ApiView {
    fn mode(&self) -> ResponseMode {
        self.mode
    }

    fn rows(&self) -> Option<usize> {
        match &self.target {
            Target::Service(m) => Some(m.rows()),
            Target::Predictor(_) => None,
        }
    }

    fn query_row(&mut self, x: &[f64]) -> Result<Response, AttackError> {
        let Target::Predictor(f) = &self.target else {
            return Err(AttackError::WrongMode { expected: "a row-query endpoint", actual: self.mode });
        };
        let f = Arc::clone(f);
        let response = match self.mode {
            ResponseMode::Probability => Response::Value { value: f.value(x)? },
            ResponseMode::Label => Response::Label { label: if f.value(x)? > 0.5 { 1 } else { -1 } },
            ResponseMode::LeafId => {
                Response::Leaf { id: f.leaf_id(x)?.expect("leaf mode is only granted for trees").to_string() }
            }
            other => return Err(AttackError::WrongMode { expected: "probability, label or leaf-id", actual: other }),
        };
        self.charge()?;
        self.log.record(Query::Row(x.to_vec()), response.clone());
        Ok(response)
    }

    fn query_labels(&mut self, y: &LabelVector) -> Result<StageOneReply, AttackError> {
        let Target::Service(module) = &self.target else {
            return Err(AttackError::WrongMode { expected: "a label-query service", actual: self.mode });
        };
        let f = fit_module(module, y, rng::derive_seed(0, "service-fit", self.used as u64))?;
        let fitted = f.evaluate(module.data())?;
        let values: Vec<f64> = match self.mode {
            ResponseMode::Fitted => fitted.values().to_vec(),
            ResponseMode::Residual => y.values().iter().zip(fitted.values()).map(|(a, b)| a - b).collect(),
            other => return Err(AttackError::WrongMode { expected: "residual or fitted", actual: other }),
        };
        self.charge()?;
        let stage_two = match self.budget {
            Some(QueryBudget { k2: Some(0), .. }) => None,
            _ => Some(RemoteFn::new(format!("{}/stage-two/{}", self.id, self.used), f)),
        };
        self.log.record(
            Query::Labels(y.values().to_vec()),
            Response::Vector { values: values.clone(), stage_two: stage_two.clone() },
        );
        Ok(StageOneReply { values, stage_two })
    }

    fn generate_task(&mut self, request: &TaskRequest) -> Result<LabelVector, AttackError> {
        if !self.task_oracle {
            return Err(AttackError::NoTaskOracle);
        }
        let Target::Service(module) = &self.target else {
            return Err(AttackError::NoTaskOracle);
        };
        let TaskRequest::Linear { beta, sigma, seed } = request;
        let x = module.data();
        if beta.len() != x.cols() {
            return Err(AttackError::InvalidParameter(format!("task needs {} coefficients", x.cols())));
        }
        let mut r = rng::stream(*seed, "task-oracle", 0);
        let signal = x.matrix() * nalgebra::DVector::from_column_slice(beta);
        let values: Vec<f64> = signal.iter().map(|s| s + sigma * rng::standard_normal(&mut r)).collect();
        let labels = LabelVector::regression(values)?;
        self.log.add_side_info(SideInfo::TaskLabels { request: request_key(request), labels: labels.values().to_vec() });
        Ok(labels)
    }

    fn add_side_info(&mut self, info: SideInfo) {
        self.log.add_side_info(info);
    }

    fn queries_used(&self) -> usize {
        self.used
    }

    fn information(&self) -> &InformationSet {
        &self.log
    }
}

fn request_key(request: &TaskRequest) -> String {
    serde_json::to_string(request).expect("task requests serialize")
}

/// Answers queries from a frozen log, failing on any query the log does not
/// contain at that position.
#[derive(Debug, Clone)]
pub struct LogReplay {
    log: InformationSet,
    mode: ResponseMode,
    rows: Option<usize>,
    position: usize,
    task_position: usize,
}

impl LogReplay {
    fn next(&mut self, query: &Query) -> Result<Response, AttackError> {
        let index = self.position;
        match self.log.queries().get(index) {
            Some(q) if queries_match(q, query) => {
                self.position += 1;
                Ok(self.log.responses()[index].clone())
            }
            _ => Err(AttackError::ReplayMismatch { index }),
        }
    }
}

fn queries_match(a: &Query, b: &Query) -> bool {
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    match (a, b) {
        (Query::Row(x), Query::Row(y)) | (Query::Labels(x), Query::Labels(y)) => bits(x) == bits(y),
        _ => false,
    }
}

impl Oracle for LogReplay {
    fn mode(&self) -> ResponseMode {
        self.mode
    }

    fn rows(&self) -> Option<usize> {
        self.rows
    }

    fn query_row(&mut self, x: &[f64]) -> Result<Response, AttackError> {
        self.next(&Query::Row(x.to_vec()))
    }

    fn query_labels(&mut self, y: &LabelVector) -> Result<StageOneReply, AttackError> {
        let index = self.position;
        match self.next(&Query::Labels(y.values().to_vec()))? {
            Response::Vector { values, stage_two } => Ok(StageOneReply { values, stage_two }),
            _ => Err(AttackError::ReplayMismatch { index }),
        }
    }

    fn generate_task(&mut self, request: &TaskRequest) -> Result<LabelVector, AttackError> {
        let key = request_key(request);
        let found = self
            .log
            .side_info()
            .iter()
            .filter_map(|s| match s {
                SideInfo::TaskLabels { request, labels } => Some((request, labels)),
                _ => None,
            })
            .nth(self.task_position);
        match found {
            Some((r, labels)) if *r == key => {
                self.task_position += 1;
                Ok(LabelVector::regression(labels.clone())?)
            }
            _ => Err(AttackError::ReplayMismatch { index: self.task_position }),
        }
    }

    fn add_side_info(&mut self, _info: SideInfo) {}

    fn queries_used(&self) -> usize {
        self.position
    }

    fn information(&self) -> &InformationSet {
        &self.log
    }
}
