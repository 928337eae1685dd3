use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize, Serializer};

use super::{LabelKind, ModelError, PredictionFn};

/// What a black-box service returns for a query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResponseMode {
    /// Predicted probability of the positive class.
    Probability,
    /// Predicted class label in `{-1, +1}`.
    Label,
    /// Identifier of the tree leaf the input reaches.
    LeafId,
    /// Residual `y - fitted` of a fit on the service's private rows.
    Residual,
    /// Fitted values of a fit on the service's private rows.
    Fitted,
}

/// Handle to a function that lives on another party's side. Evaluating it
/// returns only the scalar output; serializing it writes only its id.
#[derive(Clone)]
pub struct RemoteFn {
    id: String,
    target: Arc<PredictionFn>,
}

impl RemoteFn {
    pub(crate) fn new(id: impl Into<String>, target: PredictionFn) -> Self {
        Self { id: id.into(), target: Arc::new(target) }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn input_dim(&self) -> usize {
        self.target.input_dim()
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.target.value(x)
    }

    pub(crate) fn value_unchecked(&self, x: &[f64]) -> f64 {
        self.target.value_unchecked(x)
    }

    pub(crate) fn output_kind(&self) -> LabelKind {
        self.target.output_kind()
    }
}

impl fmt::Debug for RemoteFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RemoteFn").field("id", &self.id).finish()
    }
}

impl Serialize for RemoteFn {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", content = "values", rename_all = "kebab-case")]
pub enum Query {
    /// One feature row sent to a prediction endpoint.
    Row(Vec<f64>),
    /// One task label vector sent to an assisted-learning service.
    Labels(Vec<f64>),
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Response {
    Value { value: f64 },
    Label { label: i8 },
    Leaf { id: String },
    Vector { values: Vec<f64>, stage_two: Option<RemoteFn> },
}

impl PartialEq for Response {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Response::Value { value: a }, Response::Value { value: b }) => a.to_bits() == b.to_bits(),
            (Response::Label { label: a }, Response::Label { label: b }) => a == b,
            (Response::Leaf { id: a }, Response::Leaf { id: b }) => a == b,
            (Response::Vector { values: a, stage_two: sa }, Response::Vector { values: b, stage_two: sb }) => {
                a.len() == b.len()
                    && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
                    && sa.as_ref().map(RemoteFn::id) == sb.as_ref().map(RemoteFn::id)
            }
            _ => false,
        }
    }
}

/// Adversary knowledge that does not come from the query channel.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum SideInfo {
    /// The target's model class, e.g. `"logistic"` or `"ols"`.
    ModelClass { class: String },
    /// True covariance of the target's features.
    Covariance { matrix: Vec<Vec<f64>> },
    NoiseLevel { sigma: f64 },
    ResponseMode { mode: ResponseMode },
    /// Axis-aligned search box for input probing.
    FeatureBox { lower: Vec<f64>, upper: Vec<f64> },
    /// The restricted function family the task labels come from.
    FunctionFamily { description: String },
    /// A granted generator of task labels correlated with the target's
    /// unseen features; each use is logged with what it produced.
    TaskLabels { request: String, labels: Vec<f64> },
}

impl SideInfo {
    pub fn tag(&self) -> &'static str {
        match self {
            SideInfo::ModelClass { .. } => "model-class",
            SideInfo::Covariance { .. } => "covariance",
            SideInfo::NoiseLevel { .. } => "noise-level",
            SideInfo::ResponseMode { .. } => "response-mode",
            SideInfo::FeatureBox { .. } => "feature-box",
            SideInfo::FunctionFamily { .. } => "function-family",
            SideInfo::TaskLabels { .. } => "task-labels",
        }
    }
}

/// Queries sent, responses received, and side information.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InformationSet {
    queries: Vec<Query>,
    responses: Vec<Response>,
    side_info: Vec<SideInfo>,
}

impl InformationSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, query: Query, response: Response) {
        self.queries.push(query);
        self.responses.push(response);
    }

    pub fn add_side_info(&mut self, info: SideInfo) {
        self.side_info.push(info);
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn responses(&self) -> &[Response] {
        &self.responses
    }

    pub fn side_info(&self) -> &[SideInfo] {
        &self.side_info
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    /// Distinct side-information tags, in first-seen order.
    pub fn side_info_tags(&self) -> Vec<String> {
        let mut tags: Vec<String> = Vec::new();
        for s in &self.side_info {
            if !tags.iter().any(|t| t == s.tag()) {
                tags.push(s.tag().to_string());
            }
        }
        tags
    }
}

/// Stage I label-query count `k1` and per-query Stage II count `k2`
/// (`None` means unbounded).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryBudget {
    pub k1: usize,
    pub k2: Option<usize>,
}

impl QueryBudget {
    pub fn unbounded_stage_two(k1: usize) -> Self {
        Self { k1, k2: None }
    }
}
