//! Uniform and adaptive discretisation of a structure along `z`.
//!
//! The adaptive solver evaluates the first-order scattering matrix of a span,
//! accepts it when the section-local error estimate is below `alpha`, and
//! otherwise splits the span into `M` equal children, recurses, projects each
//! child onto its left neighbour's basis and composes them left to right.
//!
//! Both solvers finish by re-expressing the composed matrix in the eigenbases
//! of the cross-sections at `z_min` and `z_max`, so results from different
//! discretisations share port bases and can be compared entrywise.

use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::cascade::{reproject_left, reproject_right, star};
use crate::error::{Error, Result};
use crate::geometry::{slice_at, StructureSpec};
use crate::modal::{eigen_basis, ModalBasis};
use crate::operators::{assemble_operators, OperatorPair};
use crate::section::{
    add_terms, estimate_error, first_order_terms, zeroth_order_smatrix, Order,
};
use crate::smatrix::ScatteringMatrix;

pub const DEFAULT_MAX_DEPTH: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReferenceRule {
    Midpoint,
    Endpoint,
}

impl ReferenceRule {
    /// Reference position inside `[z_l, z_r]`; the endpoint rule uses `z_r`.
    pub fn position(self, z_l: f64, z_r: f64) -> f64 {
        match self {
            ReferenceRule::Midpoint => 0.5 * (z_l + z_r),
            ReferenceRule::Endpoint => z_r,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ReferenceRule::Midpoint => "midpoint",
            ReferenceRule::Endpoint => "endpoint",
        }
    }
}

impl FromStr for ReferenceRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "midpoint" => Ok(ReferenceRule::Midpoint),
            "endpoint" => Ok(ReferenceRule::Endpoint),
            other => Err(Error::InvalidArgument(format!(
                "unknown reference rule `{other}` (expected midpoint or endpoint)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub alpha: f64,
    pub subdivision_m: usize,
    pub reference_rule: ReferenceRule,
    pub max_depth: usize,
    pub order: Order,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            alpha: 1e-3,
            subdivision_m: 3,
            reference_rule: ReferenceRule::Midpoint,
            max_depth: DEFAULT_MAX_DEPTH,
            order: Order::First,
        }
    }
}

impl SolverConfig {
    /// Config with the subdivision count paired to the reference rule:
    /// three children for the midpoint rule, two for the endpoint rule.
    pub fn with_rule(alpha: f64, rule: ReferenceRule) -> Self {
        let subdivision_m = match rule {
            ReferenceRule::Midpoint => 3,
            ReferenceRule::Endpoint => 2,
        };
        SolverConfig { alpha, subdivision_m, reference_rule: rule, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha.is_nan() || self.alpha < 0.0 {
            return Err(Error::InvalidArgument(format!("alpha must be nonnegative, got {}", self.alpha)));
        }
        if !(2..=3).contains(&self.subdivision_m) {
            return Err(Error::InvalidArgument(format!(
                "subdivision count must be 2 or 3, got {}",
                self.subdivision_m
            )));
        }
        if self.max_depth < 1 {
            return Err(Error::InvalidArgument("max_depth must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionRecord {
    pub z_l: f64,
    pub z_r: f64,
    /// Error estimate; absent for uniform zeroth-order runs, which skip it.
    pub est_error: Option<f64>,
    pub depth: usize,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Composed matrix in the port bases.
    pub smat: ScatteringMatrix,
    /// Accepted sections, ordered along `z`.
    pub sections: Vec<SectionRecord>,
    /// Every section whose scattering matrix was evaluated, accepted or not.
    pub sections_solved: usize,
    /// Eigendecompositions of section reference operators.
    pub total_eig_count: usize,
    /// Eigendecompositions of the two port cross-sections (not in the total).
    pub port_eig_count: usize,
    pub total_wall_time: Duration,
    pub left_port: Arc<ModalBasis>,
    pub right_port: Arc<ModalBasis>,
}

#[derive(Clone)]
struct Reference {
    basis: Arc<ModalBasis>,
    ops: Arc<OperatorPair>,
}

fn reference_at(spec: &StructureSpec, z: f64) -> Result<Reference> {
    let ops = assemble_operators(&slice_at(spec, z)?, spec)?;
    let basis = eigen_basis(&ops)?;
    Ok(Reference { basis: Arc::new(basis), ops: Arc::new(ops) })
}

/// Eigenbasis of the cross-section at `z`.
pub fn port_basis(spec: &StructureSpec, z: f64) -> Result<Arc<ModalBasis>> {
    Ok(reference_at(spec, z)?.basis)
}

fn section_smatrix(
    spec: &StructureSpec,
    z_l: f64,
    z_r: f64,
    r: &Reference,
    order: Order,
    with_estimate: bool,
) -> Result<(ScatteringMatrix, Option<f64>)> {
    let s0 = zeroth_order_smatrix(&r.basis, z_l, z_r)?;
    if order == Order::Zeroth && !with_estimate {
        return Ok((s0, None));
    }
    let terms = first_order_terms(spec, z_l, z_r, &r.basis, &r.ops)?;
    let est = estimate_error(&terms);
    let smat = match order {
        Order::Zeroth => s0,
        Order::First => add_terms(&s0, &terms),
    };
    Ok((smat, Some(est)))
}

/// Composed result of a span.
struct Node {
    smat: ScatteringMatrix,
    left: Arc<ModalBasis>,
    right: Arc<ModalBasis>,
    sections: Vec<SectionRecord>,
    solved: usize,
    eig_count: usize,
}

impl Node {
    /// Append `next` on the right, projecting its left port onto our right basis.
    fn then(self, next: Node) -> Result<Node> {
        let projected = reproject_left(&next.smat, &next.left, &self.right)?;
        let mut sections = self.sections;
        sections.extend(next.sections);
        Ok(Node {
            smat: star(&self.smat, &projected)?,
            left: self.left,
            right: next.right,
            sections,
            solved: self.solved + next.solved,
            eig_count: self.eig_count + next.eig_count,
        })
    }
}

fn split_points(z_l: f64, z_r: f64, m: usize) -> Vec<f64> {
    let h = (z_r - z_l) / m as f64;
    let mut pts: Vec<f64> = (0..m).map(|i| z_l + i as f64 * h).collect();
    pts.push(z_r);
    pts
}

/// Index of the child whose reference position coincides with the parent's.
fn reused_child(rule: ReferenceRule, m: usize) -> Option<usize> {
    match rule {
        ReferenceRule::Midpoint if m % 2 == 1 => Some(m / 2),
        ReferenceRule::Midpoint => None,
        ReferenceRule::Endpoint => Some(m - 1),
    }
}

fn refine(
    spec: &StructureSpec,
    cfg: &SolverConfig,
    z_l: f64,
    z_r: f64,
    depth: usize,
    r: Reference,
) -> Result<Node> {
    let (smat, est) = section_smatrix(spec, z_l, z_r, &r, cfg.order, true)?;
    let est = est.unwrap_or(0.0);
    if est < cfg.alpha || est == 0.0 {
        return Ok(Node {
            smat,
            left: r.basis.clone(),
            right: r.basis,
            sections: vec![SectionRecord { z_l, z_r, est_error: Some(est), depth }],
            solved: 1,
            eig_count: 0,
        });
    }
    if depth >= cfg.max_depth {
        return Err(Error::MaxDepthExceeded { max_depth: cfg.max_depth, z_l, z_r, est_error: est });
    }
    let m = cfg.subdivision_m;
    let pts = split_points(z_l, z_r, m);
    let reuse = reused_child(cfg.reference_rule, m);
    let children: Vec<Node> = (0..m)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (pts[i], pts[i + 1]);
            let (child_ref, eigs) = if Some(i) == reuse {
                (r.clone(), 0)
            } else {
                (reference_at(spec, cfg.reference_rule.position(a, b))?, 1)
            };
            let mut node = refine(spec, cfg, a, b, depth + 1, child_ref)?;
            node.eig_count += eigs;
            Ok(node)
        })
        .collect::<Result<_>>()?;
    let mut iter = children.into_iter();
    let first = iter.next().expect("at least two children");
    let mut acc = iter.try_fold(first, Node::then)?;
    acc.solved += 1;
    Ok(acc)
}

fn finish(spec: &StructureSpec, node: Node, z_l: f64, z_r: f64, start: Instant) -> Result<SolveReport> {
    let left_port = port_basis(spec, z_l)?;
    let right_port = port_basis(spec, z_r)?;
    let smat = reproject_left(&node.smat, &node.left, &left_port)?;
    let smat = reproject_right(&smat, &node.right, &right_port)?;
    Ok(SolveReport {
        smat,
        sections: node.sections,
        sections_solved: node.solved,
        total_eig_count: node.eig_count,
        port_eig_count: 2,
        total_wall_time: start.elapsed(),
        left_port,
        right_port,
    })
}

pub fn solve_adaptive(spec: &StructureSpec, cfg: &SolverConfig) -> Result<SolveReport> {
    spec.validate()?;
    cfg.validate()?;
    let start = Instant::now();
    let root = reference_at(spec, cfg.reference_rule.position(spec.z_min, spec.z_max))?;
    let mut node = refine(spec, cfg, spec.z_min, spec.z_max, 0, root)?;
    node.eig_count += 1;
    finish(spec, node, spec.z_min, spec.z_max, start)
}

/// `n` equal sections, each in its own reference basis.
pub fn solve_uniform(
    spec: &StructureSpec,
    n: usize,
    order: Order,
    rule: ReferenceRule,
) -> Result<SolveReport> {
    solve_uniform_span(spec, spec.z_min, spec.z_max, n, order, rule)
}

/// [`solve_uniform`] restricted to `[z_l, z_r]`, with ports at the span ends.
pub fn solve_uniform_span(
    spec: &StructureSpec,
    z_l: f64,
    z_r: f64,
    n: usize,
    order: Order,
    rule: ReferenceRule,
) -> Result<SolveReport> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("section count must be at least 1".into()));
    }
    if !(z_l >= spec.z_min && z_r <= spec.z_max && z_l < z_r) {
        return Err(Error::InvalidArgument(format!(
            "span [{z_l}, {z_r}] is not a nonempty part of [{}, {}]",
            spec.z_min, spec.z_max
        )));
    }
    let start = Instant::now();
    let pts = split_points(z_l, z_r, n);
    let nodes: Vec<Node> = (0..n)
        .into_par_iter()
        .map(|i| {
            let (a, b) = (pts[i], pts[i + 1]);
            let r = reference_at(spec, rule.position(a, b))?;
            let (smat, est) = section_smatrix(spec, a, b, &r, order, order == Order::First)?;
            Ok(Node {
                smat,
                left: r.basis.clone(),
                right: r.basis,
                sections: vec![SectionRecord { z_l: a, z_r: b, est_error: est, depth: 0 }],
                solved: 1,
                eig_count: 1,
            })
        })
        .collect::<Result<_>>()?;
    let mut iter = nodes.into_iter();
    let first = iter.next().expect("n >= 1");
    let node = iter.try_fold(first, Node::then)?;
    finish(spec, node, z_l, z_r, start)
}
