use super::bnb::{search, Hints, Relaxation};
use super::cuts::{cardinal_cut, exclusion_cut};
use super::{BnbConfig, BnbStats, SolverError};
use crate::bayes::InstantiationSet;
use crate::constraint::{
    encode_waodag, Assignment01, BayesEncoding, ConstraintSystem, LinearConstraint, WaodagEncoding,
};
use crate::waodag::Monotonicity;

/// Emitted solutions after which an enumeration refuses to continue.
pub const DEFAULT_SOLUTION_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Count {
    Top(usize),
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Exclusion cuts over every variable.
    All,
    /// Cuts over the hypothesis variables at 1.
    Cardinal,
    /// Exclusion cuts over the indicator variables.
    Permissible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedSolution {
    /// 1-based position in the stream.
    pub rank: usize,
    pub assignment: Assignment01,
    /// Objective of the unmodified system.
    pub cost: f64,
    /// Joint probability recomputed from the tables.
    pub probability: Option<f64>,
    pub instantiation: Option<InstantiationSet>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CardinalOptions {
    /// Perturb MONOTONIC graphs into strictly monotonic ones.
    pub auto_perturb: bool,
    /// `None` means [`crate::waodag::Waodag::default_delta`].
    pub delta: Option<f64>,
}

impl Default for CardinalOptions {
    fn default() -> Self {
        CardinalOptions {
            auto_perturb: true,
            delta: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PermissibleOptions {
    /// Add explicit `q <= A=a` rows instead of raising nonpositive costs.
    pub strict: bool,
    /// `None` means [`BayesEncoding::default_delta`].
    pub delta: Option<f64>,
}

#[derive(Debug, Clone)]
enum Context {
    General,
    Waodag(WaodagEncoding),
    Bayes(BayesEncoding),
}

/// A stateful k-best stream: each call to [`EnumerationSession::next`]
/// returns the best solution not excluded by the cuts of earlier ones.
#[derive(Debug, Clone)]
pub struct EnumerationSession {
    mode: Mode,
    original: ConstraintSystem,
    search: ConstraintSystem,
    context: Context,
    scope: Vec<usize>,
    cuts: Vec<LinearConstraint>,
    emitted: Vec<RankedSolution>,
    root: Relaxation,
    cfg: BnbConfig,
    cap: usize,
    stats: BnbStats,
    done: bool,
    /// Integral points met by earlier searches that no cut excludes yet,
    /// with their search-system costs.
    discovered: Vec<(Assignment01, f64)>,
    last_cost: f64,
}

impl EnumerationSession {
    fn build(
        mode: Mode,
        original: ConstraintSystem,
        search: ConstraintSystem,
        context: Context,
        scope: Vec<usize>,
        cfg: BnbConfig,
    ) -> Self {
        EnumerationSession {
            mode,
            root: Relaxation::new(&search, cfg.lp),
            original,
            search,
            context,
            scope,
            cuts: Vec::new(),
            emitted: Vec::new(),
            cfg,
            cap: DEFAULT_SOLUTION_CAP,
            stats: BnbStats::default(),
            done: false,
            discovered: Vec::new(),
            last_cost: f64::NEG_INFINITY,
        }
    }

    /// Every 0-1 solution of `l` in cost order.
    pub fn all(l: &ConstraintSystem, cfg: BnbConfig) -> Self {
        let scope = (0..l.num_variables()).collect();
        Self::build(
            Mode::All,
            l.clone(),
            l.clone(),
            Context::General,
            scope,
            cfg,
        )
    }

    /// Cardinal explanations of `enc.waodag` in cost order.
    pub fn cardinal(
        enc: &WaodagEncoding,
        cfg: BnbConfig,
        opts: CardinalOptions,
    ) -> Result<Self, SolverError> {
        let w = &enc.waodag;
        let search = match w.monotonicity_class() {
            Monotonicity::Strict => enc.system.clone(),
            Monotonicity::Monotonic if opts.auto_perturb => {
                let delta = opts.delta.unwrap_or_else(|| w.default_delta());
                encode_waodag(&w.perturb_strict(delta)?, enc.essential)?.system
            }
            class => return Err(SolverError::NotStrictlyMonotonic(class)),
        };
        Ok(Self::build(
            Mode::Cardinal,
            enc.system.clone(),
            search,
            Context::Waodag(enc.clone()),
            enc.hypothesis_vars(),
            cfg,
        ))
    }

    /// Complete instantiation-sets consistent with the applied evidence, by
    /// nonincreasing probability.
    pub fn permissible(
        enc: &BayesEncoding,
        cfg: BnbConfig,
        opts: PermissibleOptions,
    ) -> Result<Self, SolverError> {
        let prepared = if opts.strict {
            enc.add_permissibility_constraints()
        } else {
            enc.ensure_positive_conditional_costs(
                opts.delta.unwrap_or_else(|| enc.default_delta()),
            )?
        };
        Ok(Self::build(
            Mode::Permissible,
            enc.system.clone(),
            prepared.system,
            Context::Bayes(enc.clone()),
            enc.delta(),
            cfg,
        ))
    }

    pub fn with_cap(mut self, cap: usize) -> Self {
        self.cap = cap;
        self
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn cuts(&self) -> &[LinearConstraint] {
        &self.cuts
    }

    pub fn emitted(&self) -> &[RankedSolution] {
        &self.emitted
    }

    pub fn stats(&self) -> &BnbStats {
        &self.stats
    }

    pub fn is_exhausted(&self) -> bool {
        self.done
    }

    /// The searched system with every cut so far appended.
    pub fn current_system(&self) -> ConstraintSystem {
        let mut l = self.search.clone();
        for c in &self.cuts {
            l.add_constraint(c.clone())
                .expect("cuts use declared variables");
        }
        l
    }

    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> Result<Option<RankedSolution>, SolverError> {
        if self.done {
            return Ok(None);
        }
        if self.emitted.len() >= self.cap {
            return Err(SolverError::SolutionCapReached(self.cap));
        }
        let incumbent = self
            .discovered
            .iter()
            .fold(None::<&(Assignment01, f64)>, |best, cand| match best {
                Some(b) if b.1 <= cand.1 => Some(b),
                _ => Some(cand),
            })
            .cloned();
        let mut found = Vec::new();
        let hints = Hints {
            incumbent,
            floor: self.last_cost,
            found: &mut found,
        };
        let (best, stats) = search(&self.search, &self.cuts, &mut self.root, &self.cfg, hints)?;
        self.stats.absorb(&stats);
        self.discovered.extend(found);
        let Some((s, search_cost)) = best else {
            self.done = true;
            return Ok(None);
        };
        self.last_cost = search_cost;
        let cost = self.original.objective(&s)?;
        debug_assert!(self.original.satisfies(&s)?);
        let mut solution = RankedSolution {
            rank: self.emitted.len() + 1,
            assignment: s,
            cost,
            probability: None,
            instantiation: None,
        };
        let cut = match &self.context {
            Context::General => exclusion_cut(&solution.assignment, &self.scope),
            Context::Waodag(enc) => cardinal_cut(&solution.assignment, enc),
            Context::Bayes(enc) => {
                debug_assert!(enc.is_permissible(&solution.assignment)?);
                let w = enc.solution_to_instantiation(&solution.assignment)?;
                solution.probability = Some(enc.network.probability(&w)?);
                solution.instantiation = Some(w);
                exclusion_cut(&solution.assignment, &self.scope)
            }
        };
        match cut {
            Ok(c) => {
                let tol = self.cfg.lp.feasibility_tol;
                self.discovered
                    .retain(|(d, _)| c.holds_at(&d.as_f64(), tol));
                self.cuts.push(c);
            }
            Err(SolverError::EmptyBaseSet) | Err(SolverError::EmptyScope) => self.done = true,
            Err(e) => return Err(e),
        }
        log::debug!("rank {} cost {}", solution.rank, solution.cost);
        self.emitted.push(solution.clone());
        Ok(Some(solution))
    }

    pub fn take(&mut self, k: Count) -> Result<Vec<RankedSolution>, SolverError> {
        let mut out = Vec::new();
        while k != Count::Top(out.len()) {
            match self.next()? {
                Some(s) => out.push(s),
                None => break,
            }
        }
        Ok(out)
    }
}

/// An optimal 0-1 solution of `l`, or `None` when it has no 0-1 solution.
pub fn solve_optimal(
    l: &ConstraintSystem,
    cfg: &BnbConfig,
) -> Result<Option<RankedSolution>, SolverError> {
    EnumerationSession::all(l, *cfg).next()
}

pub fn enumerate_best(
    l: &ConstraintSystem,
    k: Count,
    cfg: &BnbConfig,
) -> Result<Vec<RankedSolution>, SolverError> {
    EnumerationSession::all(l, *cfg).take(k)
}

pub fn enumerate_cardinal(
    enc: &WaodagEncoding,
    k: Count,
    cfg: &BnbConfig,
    opts: CardinalOptions,
) -> Result<Vec<RankedSolution>, SolverError> {
    EnumerationSession::cardinal(enc, *cfg, opts)?.take(k)
}

pub fn enumerate_permissible(
    enc: &BayesEncoding,
    k: Count,
    cfg: &BnbConfig,
    opts: PermissibleOptions,
) -> Result<Vec<RankedSolution>, SolverError> {
    EnumerationSession::permissible(enc, *cfg, opts)?.take(k)
}
