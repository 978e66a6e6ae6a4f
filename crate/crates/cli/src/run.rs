//! Command dispatch: one [`RunConfig`] in, JSON lines or a dump out.

use std::io::Write;
use std::path::PathBuf;

use abduce_core::bayes::{BayesianNetwork, InstantiationSet, ORACLE_CONFIG_LIMIT};
use abduce_core::constraint::{
    encode_bayesnet, encode_waodag, BayesEncoding, WaodagEncoding, ZeroProbPolicy,
};
use abduce_core::generate::{random_bayesnet, random_waodag, BayesGenConfig, WaodagGenConfig};
use abduce_core::solver::{
    BnbConfig, CardinalOptions, Count, EnumerationSession, PermissibleOptions, RankedSolution,
};
use abduce_core::waodag::{TruthAssignment, Waodag, ORACLE_HYPOTHESIS_LIMIT};

use crate::model::{
    bayesnet_to_json, parse_bayesnet_file, parse_waodag_file, resolve_evidence, waodag_to_json,
};
use crate::output::{Record, Value};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Solve,
    Enumerate,
    Oracle,
    Encode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Waodag,
    Bayes,
}

/// Which explanations of a graph are listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Selection {
    All,
    Cardinal,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GenSpec {
    Waodag { seed: u64, cfg: WaodagGenConfig },
    Bayes { seed: u64, cfg: BayesGenConfig },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub kind: ModelKind,
    pub input: PathBuf,
    pub selection: Selection,
    pub k: Count,
    /// Perturbation size for graphs, cost floor for networks.
    pub delta: Option<f64>,
    pub zero_prob: ZeroProbPolicy,
    pub strict_permissibility: bool,
    pub evidence: Vec<String>,
    pub evidence_file: Option<PathBuf>,
    /// Integrality tolerance of branch and bound.
    pub tolerance: Option<f64>,
    pub node_limit: Option<usize>,
}

impl RunConfig {
    pub fn new(command: Command, kind: ModelKind, input: impl Into<PathBuf>) -> Self {
        RunConfig {
            command,
            kind,
            input: input.into(),
            selection: Selection::All,
            k: if command == Command::Solve {
                Count::Top(1)
            } else {
                Count::All
            },
            delta: None,
            zero_prob: ZeroProbPolicy::default(),
            strict_permissibility: false,
            evidence: Vec::new(),
            evidence_file: None,
            tolerance: None,
            node_limit: None,
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.k == Count::Top(0) {
            return Err(CliError::Usage("k must be at least 1 or `all`".into()));
        }
        for (name, v) in [("delta", self.delta), ("tolerance", self.tolerance)] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(CliError::Usage(format!(
                        "{name} must be positive and finite, got {v}"
                    )));
                }
            }
        }
        if self.tolerance.is_some_and(|t| t >= 0.5) {
            return Err(CliError::Usage("tolerance must be below 0.5".into()));
        }
        if self.node_limit == Some(0) {
            return Err(CliError::Usage("node limit must be at least 1".into()));
        }
        Ok(())
    }

    fn bnb(&self) -> BnbConfig {
        let mut cfg = BnbConfig::default();
        if let Some(t) = self.tolerance {
            cfg.integrality_tol = t;
        }
        if let Some(n) = self.node_limit {
            cfg.node_limit = n;
        }
        cfg
    }
}

pub fn run(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    cfg.validate()?;
    match cfg.kind {
        ModelKind::Waodag => run_waodag(cfg, out),
        ModelKind::Bayes => run_bayes(cfg, out),
    }
}

/// Writes a generated model as JSON.
pub fn generate(spec: &GenSpec, out: &mut dyn Write) -> Result<(), CliError> {
    let text = match spec {
        GenSpec::Waodag { seed, cfg } => {
            if cfg.max_hypotheses == 0
                || cfg.max_nodes < 2
                || cfg.max_parents == 0
                || cfg.max_cost < 2
            {
                return Err(CliError::Usage(
                    "graphs need a hypothesis, two nodes, one parent and max cost of at least 2"
                        .into(),
                ));
            }
            waodag_to_json(&random_waodag(*seed, cfg))
        }
        GenSpec::Bayes { seed, cfg } => {
            if cfg.max_variables == 0 || cfg.max_range < 2 {
                return Err(CliError::Usage(
                    "networks need a variable and ranges of at least 2".into(),
                ));
            }
            bayesnet_to_json(&random_bayesnet(*seed, cfg))
        }
    };
    out.write_all(text.as_bytes())?;
    Ok(())
}

fn take(session: &mut EnumerationSession, k: Count) -> Result<Vec<RankedSolution>, CliError> {
    let solutions = session.take(k)?;
    let s = session.stats();
    log::info!(
        "{} solutions, {} searches, {} nodes, {} LP iterations, {} lazy rows",
        solutions.len(),
        s.searches,
        s.nodes,
        s.lp_iterations,
        s.lazy_rows
    );
    if s.weak_duality_violations > 0 {
        log::warn!("{} weak duality violations", s.weak_duality_violations);
    }
    Ok(solutions)
}

fn limit<T>(items: Vec<T>, k: Count) -> Vec<T> {
    match k {
        Count::Top(n) => items.into_iter().take(n).collect(),
        Count::All => items,
    }
}

fn waodag_record(w: &Waodag, rank: usize, e: &TruthAssignment, cost: f64) -> Record {
    Record {
        rank,
        cost,
        probability: None,
        assignment: w
            .nodes()
            .iter()
            .zip(e.values())
            .map(|(n, &v)| (n.name.clone(), Value::Bool(v)))
            .collect(),
        hypotheses: Some(
            w.hypotheses()
                .iter()
                .filter(|&&h| e.get(h))
                .map(|&h| w.node(h).name.clone())
                .collect(),
        ),
    }
}

fn run_waodag(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let w = parse_waodag_file(&cfg.input)?;
    let enc: WaodagEncoding = encode_waodag(&w, true)?;
    let bnb = cfg.bnb();
    let k = if cfg.command == Command::Solve {
        Count::Top(1)
    } else {
        cfg.k
    };
    match cfg.command {
        Command::Encode => out.write_all(enc.system.dump().as_bytes())?,
        Command::Oracle => {
            let mut list = w.enumerate_explanations_oracle(ORACLE_HYPOTHESIS_LIMIT)?;
            if cfg.selection == Selection::Cardinal {
                list.retain(|(e, _)| w.is_cardinal(e).unwrap_or(false));
            }
            for (i, (e, cost)) in limit(list, k).iter().enumerate() {
                waodag_record(&w, i + 1, e, *cost).write(out)?;
            }
        }
        Command::Solve | Command::Enumerate => {
            let mut session = match cfg.selection {
                Selection::All => EnumerationSession::all(&enc.system, bnb),
                Selection::Cardinal => EnumerationSession::cardinal(
                    &enc,
                    bnb,
                    CardinalOptions {
                        auto_perturb: true,
                        delta: cfg.delta,
                    },
                )?,
            };
            for s in take(&mut session, k)? {
                let e = enc.solution_to_truth(&s.assignment)?;
                waodag_record(&w, s.rank, &e, s.cost).write(out)?;
            }
        }
    }
    Ok(())
}

fn bayes_record(
    bn: &BayesianNetwork,
    rank: usize,
    w: &InstantiationSet,
    cost: f64,
    p: f64,
) -> Record {
    Record {
        rank,
        cost,
        probability: Some(p),
        assignment: w
            .iter()
            .map(|(v, a)| {
                (
                    bn.variable(v).name.clone(),
                    Value::Str(bn.variable(v).range[a].clone()),
                )
            })
            .collect(),
        hypotheses: None,
    }
}

fn run_bayes(cfg: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let bn = parse_bayesnet_file(&cfg.input)?;
    let evidence = resolve_evidence(&bn, &cfg.evidence, cfg.evidence_file.as_deref())?;
    let enc: BayesEncoding = encode_bayesnet(&bn, cfg.zero_prob)?.apply_evidence(&evidence)?;
    let k = if cfg.command == Command::Solve {
        Count::Top(1)
    } else {
        cfg.k
    };
    match cfg.command {
        Command::Encode => {
            let enc = if cfg.strict_permissibility {
                enc.add_permissibility_constraints()
            } else {
                enc
            };
            out.write_all(enc.system.dump().as_bytes())?;
        }
        Command::Oracle => {
            let list = bn.enumerate_mpe_oracle(&evidence, ORACLE_CONFIG_LIMIT)?;
            for (i, (w, p)) in limit(list, k).iter().enumerate() {
                let cost = enc.system.objective(&enc.instantiation_to_solution(w)?)?;
                bayes_record(&bn, i + 1, w, cost, *p).write(out)?;
            }
        }
        Command::Solve | Command::Enumerate => {
            let opts = PermissibleOptions {
                strict: cfg.strict_permissibility,
                delta: cfg.delta,
            };
            let mut session = EnumerationSession::permissible(&enc, cfg.bnb(), opts)?;
            for s in take(&mut session, k)? {
                let w = s
                    .instantiation
                    .as_ref()
                    .expect("permissible solutions carry instantiations");
                let p = s
                    .probability
                    .expect("permissible solutions carry probabilities");
                bayes_record(&bn, s.rank, w, s.cost, p).write(out)?;
            }
        }
    }
    Ok(())
}
