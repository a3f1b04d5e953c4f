//! Sampling-free coarse-level expectations under discrete increments.
//!
//! With a `q`-atom law every path of `M0` steps is one of `q^(d·r·M0)`
//! increment sequences, `r` being the draws per step. The expectation of `φ`
//! is the probability-weighted sum over all of them. A depth-first walk over
//! the tree of partial paths reuses the state at each internal node, so the
//! cost is the node count rather than leaves times steps.

use crate::error::{Error, Result};
use crate::increments::{Atom, DiscreteLaw, DistributionKind};
use crate::integrators::{PathConfig, Scheme, Stepper};
use crate::model::{LangevinModel, QoI, State};
use crate::summation::NeumaierSum;

pub const DEFAULT_LEAF_BUDGET: u128 = 100_000_000;

/// The shape of an enumeration tree.
#[derive(Clone, Debug, PartialEq)]
pub struct EnumerationPlan {
    pub q: usize,
    pub m0: usize,
    pub draws_per_step: usize,
    pub dim: usize,
    /// `q^(d·r·M0)`, or `None` if it overflows `u128`.
    pub total_leaves: Option<u128>,
    pub atoms: Vec<Atom>,
}

impl EnumerationPlan {
    pub fn new(model: &LangevinModel, scheme: Scheme, m0: usize, law: &DiscreteLaw) -> Self {
        let draws_per_step = scheme.draws_per_step();
        let dim = model.dim();
        let exponent = dim * draws_per_step * m0;
        let total_leaves = u32::try_from(exponent)
            .ok()
            .and_then(|e| (law.len() as u128).checked_pow(e));
        Self {
            q: law.len(),
            m0,
            draws_per_step,
            dim,
            total_leaves,
            atoms: law.atoms().to_vec(),
        }
    }

    /// Branches leaving each internal node: `q^(d·r)`.
    pub fn branching(&self) -> Option<u128> {
        (self.q as u128).checked_pow((self.dim * self.draws_per_step) as u32)
    }

    /// States computed by the walk, `Σ_{k=1}^{M0} branching^k`.
    pub fn node_count(&self) -> Option<u128> {
        let b = self.branching()?;
        let mut level = 1u128;
        let mut total = 0u128;
        for _ in 0..self.m0 {
            level = level.checked_mul(b)?;
            total = total.checked_add(level)?;
        }
        Some(total)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Enumeration {
    pub value: f64,
    pub leaves: u128,
    pub nodes: u128,
    /// Accumulated leaf probability; one up to rounding.
    pub probability_mass: f64,
}

/// `E[φ(X_{M0})]` under the discrete law of `dist`, with the default leaf budget.
pub fn exact_expectation(
    model: &LangevinModel,
    scheme: Scheme,
    qoi: &QoI,
    m0: usize,
    dist: DistributionKind,
) -> Result<f64> {
    let law = dist.discrete_law().ok_or_else(|| {
        Error::Unsupported("exact enumeration needs a discrete increment law".into())
    })?;
    Ok(enumerate(model, scheme, qoi, m0, &law, DEFAULT_LEAF_BUDGET)?.value)
}

/// Walks the full tree for `law` and returns the weighted sum with traversal counts.
pub fn enumerate(
    model: &LangevinModel,
    scheme: Scheme,
    qoi: &QoI,
    m0: usize,
    law: &DiscreteLaw,
    budget: u128,
) -> Result<Enumeration> {
    let plan = EnumerationPlan::new(model, scheme, m0, law);
    let leaves = plan.total_leaves.unwrap_or(u128::MAX);
    if leaves > budget {
        return Err(Error::BudgetExceeded { leaves, budget });
    }
    let cfg = PathConfig::new(scheme, model, m0)?;
    let stepper = Stepper::new(scheme, model, cfg.h)?;
    let branches = branch_table(&plan);
    let mut walk = Walk {
        stepper: &stepper,
        qoi,
        branches: &branches,
        value: NeumaierSum::new(),
        mass: NeumaierSum::new(),
        leaves: 0,
        nodes: 0,
    };
    walk.descend(&model.initial_state(), 1.0, m0);
    Ok(Enumeration {
        value: walk.value.value(),
        leaves: walk.leaves,
        nodes: walk.nodes,
        probability_mass: walk.mass.value(),
    })
}

/// One step's increment vector together with its probability.
struct Branch {
    xi: Vec<f64>,
    probability: f64,
}

/// All `q^(d·r)` per-step increment vectors in lexicographic order, first
/// component varying slowest. Each probability is the left-to-right product of
/// its atom probabilities.
fn branch_table(plan: &EnumerationPlan) -> Vec<Branch> {
    let width = plan.dim * plan.draws_per_step;
    let count = plan.q.pow(width as u32);
    (0..count)
        .map(|mut code| {
            let mut digits = vec![0usize; width];
            for slot in digits.iter_mut().rev() {
                *slot = code % plan.q;
                code /= plan.q;
            }
            let xi = digits.iter().map(|&k| plan.atoms[k].value).collect();
            let probability = digits.iter().fold(1.0, |acc, &k| acc * plan.atoms[k].probability);
            Branch { xi, probability }
        })
        .collect()
}

struct Walk<'a> {
    stepper: &'a Stepper,
    qoi: &'a QoI,
    branches: &'a [Branch],
    value: NeumaierSum,
    mass: NeumaierSum,
    leaves: u128,
    nodes: u128,
}

impl Walk<'_> {
    fn descend(&mut self, state: &State, weight: f64, remaining: usize) {
        if remaining == 0 {
            self.leaves += 1;
            self.value.add(weight * self.qoi.evaluate(state));
            self.mass.add(weight);
            return;
        }
        for branch in self.branches {
            let mut next = state.clone();
            self.stepper.advance(&mut next, &branch.xi);
            self.nodes += 1;
            self.descend(&next, weight * branch.probability, remaining - 1);
        }
    }
}
