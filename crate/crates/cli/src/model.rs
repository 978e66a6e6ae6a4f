//! JSON model files.
//!
//! A graph file holds `nodes: [{id, label, cost_true, cost_false}]`,
//! `edges: [[parent, child]]` and `evidence: [id]`; `cost_false` defaults to 0
//! and labels of zero-in-degree nodes carry no meaning. A network file holds
//! `variables: [{name, range}]` and `cpts: [{child, parents, rows: [{given,
//! probs}]}]`, where `probs` maps each value of the child to its probability.
//! An evidence file is an object mapping variable names to values.

use std::fs;
use std::path::Path;

use abduce_core::bayes::{BayesianNetwork, CptRowSpec, CptSpec, InstantiationSet, Variable};
use abduce_core::waodag::{Label, Node, Waodag};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum LabelJson {
    And,
    Or,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct NodeJson {
    id: String,
    label: LabelJson,
    cost_true: f64,
    #[serde(default)]
    cost_false: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct WaodagJson {
    nodes: Vec<NodeJson>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default)]
    evidence: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct VariableJson {
    name: String,
    range: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RowJson {
    given: Vec<String>,
    probs: IndexMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CptJson {
    child: String,
    #[serde(default)]
    parents: Vec<String>,
    rows: Vec<RowJson>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BayesJson {
    variables: Vec<VariableJson>,
    cpts: Vec<CptJson>,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn from_json<'a, T: Deserialize<'a>>(text: &'a str, origin: &str) -> Result<T, CliError> {
    serde_json::from_str(text).map_err(|e| {
        let suffix = format!(" at line {} column {}", e.line(), e.column());
        let message = e.to_string();
        CliError::Parse {
            origin: origin.to_string(),
            line: e.line(),
            column: e.column(),
            message: message
                .strip_suffix(&suffix)
                .unwrap_or(&message)
                .to_string(),
        }
    })
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("models serialize");
    text.push('\n');
    text
}

pub fn parse_waodag_str(text: &str, origin: &str) -> Result<Waodag, CliError> {
    let doc: WaodagJson = from_json(text, origin)?;
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| {
            let label = match n.label {
                LabelJson::And => Label::And,
                LabelJson::Or => Label::Or,
            };
            Node::new(n.id, label, n.cost_true, n.cost_false)
        })
        .collect();
    Ok(Waodag::new(nodes, &doc.edges, &doc.evidence)?)
}

pub fn parse_waodag_file(path: &Path) -> Result<Waodag, CliError> {
    parse_waodag_str(&read(path)?, &path.display().to_string())
}

pub fn waodag_to_json(w: &Waodag) -> String {
    let name = |id: usize| w.node(id).name.clone();
    let doc = WaodagJson {
        nodes: w
            .nodes()
            .iter()
            .map(|n| NodeJson {
                id: n.name.clone(),
                label: match n.label {
                    Label::And => LabelJson::And,
                    Label::Or => LabelJson::Or,
                },
                cost_true: n.cost_true,
                cost_false: n.cost_false,
            })
            .collect(),
        edges: w.edges().iter().map(|&(p, c)| (name(p), name(c))).collect(),
        evidence: w.evidence().iter().map(|&q| name(q)).collect(),
    };
    to_json(&doc)
}

pub fn parse_bayesnet_str(text: &str, origin: &str) -> Result<BayesianNetwork, CliError> {
    let doc: BayesJson = from_json(text, origin)?;
    let variables = doc
        .variables
        .into_iter()
        .map(|v| Variable::new(v.name, v.range))
        .collect();
    let cpts = doc
        .cpts
        .into_iter()
        .map(|c| CptSpec {
            child: c.child,
            parents: c.parents,
            rows: c
                .rows
                .into_iter()
                .map(|r| CptRowSpec {
                    given: r.given,
                    probs: r.probs.into_iter().collect(),
                })
                .collect(),
        })
        .collect();
    Ok(BayesianNetwork::new(variables, cpts)?)
}

pub fn parse_bayesnet_file(path: &Path) -> Result<BayesianNetwork, CliError> {
    parse_bayesnet_str(&read(path)?, &path.display().to_string())
}

pub fn bayesnet_to_json(bn: &BayesianNetwork) -> String {
    let cpts = (0..bn.len())
        .map(|v| {
            let parents = bn.parents(v);
            let range = &bn.variable(v).range;
            let rows = (0..bn.num_configs(v))
                .map(|config| RowJson {
                    given: bn
                        .config_values(v, config)
                        .iter()
                        .zip(parents)
                        .map(|(&val, &p)| bn.variable(p).range[val].clone())
                        .collect(),
                    probs: range
                        .iter()
                        .enumerate()
                        .map(|(a, value)| (value.clone(), bn.entry(v, a, config)))
                        .collect(),
                })
                .collect();
            CptJson {
                child: bn.variable(v).name.clone(),
                parents: parents
                    .iter()
                    .map(|&p| bn.variable(p).name.clone())
                    .collect(),
                rows,
            }
        })
        .collect();
    let doc = BayesJson {
        variables: bn
            .variables()
            .iter()
            .map(|v| VariableJson {
                name: v.name.clone(),
                range: v.range.clone(),
            })
            .collect(),
        cpts,
    };
    to_json(&doc)
}

/// Splits `Var=value,Var=value` into name pairs.
pub fn parse_evidence_arg(arg: &str) -> Result<Vec<(String, String)>, CliError> {
    arg.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| match item.split_once('=') {
            Some((var, value)) if !var.trim().is_empty() => {
                Ok((var.trim().to_string(), value.trim().to_string()))
            }
            _ => Err(CliError::Usage(format!(
                "evidence item `{item}` is not Var=value"
            ))),
        })
        .collect()
}

pub fn parse_evidence_file(path: &Path) -> Result<Vec<(String, String)>, CliError> {
    let map: IndexMap<String, String> = from_json(&read(path)?, &path.display().to_string())?;
    Ok(map.into_iter().collect())
}

/// Merges command-line items and file items into one instantiation-set.
/// Repeating a pair is allowed; two values for one variable are not.
pub fn resolve_evidence(
    bn: &BayesianNetwork,
    args: &[String],
    file: Option<&Path>,
) -> Result<InstantiationSet, CliError> {
    let mut pairs = Vec::new();
    for arg in args {
        pairs.extend(parse_evidence_arg(arg)?);
    }
    if let Some(path) = file {
        pairs.extend(parse_evidence_file(path)?);
    }
    Ok(bn.instantiation(&pairs)?)
}
