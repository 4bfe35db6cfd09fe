//! Refinement trees over circle measures.
//!
//! Every non-atomic measure in this crate splits into finitely many cells whose
//! masses are known exactly: b-adic cylinders for self-similar measures,
//! partial sums for infinite convolutions, dyadic intervals for Lebesgue and
//! trigonometric densities. Integration walks these trees, accepting a cell
//! once a derivative bound certifies its contribution.

use num_complex::Complex64;

use super::{CircleMeasure, FourierValue, InfiniteConvolution, SelfSimilar, TrigDensity};
use crate::error::{check_tol, LabError, Result};
use crate::exec::Execution;
use crate::numeric::{cis_turns, inv_pow, TAU};

pub const DEFAULT_NODE_BUDGET: usize = 1 << 22;

/// A cell of a refinement tree. The restriction of the measure to the cell
/// has total `mass` and is supported in `[left, left + width]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub left: f64,
    pub width: f64,
    pub mass: f64,
    pub level: u32,
}

impl Cell {
    pub fn right(&self) -> f64 {
        self.left + self.width
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.left <= theta && theta <= self.right()
    }
}

/// Quadrature rule: `(node, weight)` pairs whose weights sum to one.
///
/// For an integrand that is `L`-Lipschitz in the angle, the rule integrates it
/// to within `L · lipschitz_scale`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadrature {
    pub nodes: Vec<(f64, f64)>,
    pub lipschitz_scale: f64,
}

impl Quadrature {
    pub fn integrate(&self, f: impl Fn(f64) -> Complex64) -> Complex64 {
        self.nodes.iter().map(|&(t, w)| f(t) * w).sum()
    }

    pub fn total_weight(&self) -> f64 {
        self.nodes.iter().map(|&(_, w)| w).sum()
    }
}

/// A function of the angle with computable local bounds.
pub trait Integrand: Sync {
    fn value(&self, theta: f64) -> Complex64;

    /// Upper bound on `|h|` over `[a, b]`.
    fn local_sup(&self, a: f64, b: f64) -> f64;

    /// Upper bounds on `|h'|` and `|h''|` over `[a, b]`, or `None` when the
    /// derivatives are unbounded there.
    fn derivative_bounds(&self, a: f64, b: f64) -> Option<(f64, f64)>;
}

/// `θ ↦ e^{2πiξθ}`.
#[derive(Debug, Clone, Copy)]
pub struct Character(pub f64);

impl Integrand for Character {
    fn value(&self, theta: f64) -> Complex64 {
        cis_turns(self.0 * theta)
    }

    fn local_sup(&self, _a: f64, _b: f64) -> f64 {
        1.0
    }

    fn derivative_bounds(&self, _a: f64, _b: f64) -> Option<(f64, f64)> {
        let w = TAU * self.0.abs();
        Some((w, w * w))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptivePolicy {
    pub max_depth: u32,
    /// Cap on cells visited below each frontier cell; cells still open when it
    /// runs out are accepted at whatever bound they have.
    pub cell_budget: usize,
    pub execution: Execution,
}

impl Default for AdaptivePolicy {
    fn default() -> Self {
        Self { max_depth: 48, cell_budget: 4_000_000, execution: Execution::default() }
    }
}

impl AdaptivePolicy {
    pub fn with_execution(execution: Execution) -> Self {
        Self { execution, ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Tree<'a> {
    SelfSimilar(&'a SelfSimilar, f64),
    Convolution(&'a InfiniteConvolution),
    Lebesgue,
    Trig(&'a TrigDensity),
}

impl<'a> Tree<'a> {
    /// Tree for a simple continuous measure; `None` for atomic measures.
    pub(crate) fn of(measure: &'a CircleMeasure) -> Option<Self> {
        match measure {
            CircleMeasure::SelfSimilar(s) => Some(Tree::SelfSimilar(s, s.mean())),
            CircleMeasure::InfiniteConvolution(c) => Some(Tree::Convolution(c)),
            CircleMeasure::Lebesgue => Some(Tree::Lebesgue),
            CircleMeasure::TrigDensity(d) => Some(Tree::Trig(d)),
            CircleMeasure::Atomic(_) | CircleMeasure::Mixture(_) => None,
        }
    }

    pub(crate) fn root(&self) -> Cell {
        let width = match self {
            Tree::Convolution(c) => c.tail_sum(0),
            _ => 1.0,
        };
        Cell { left: 0.0, width, mass: 1.0, level: 0 }
    }

    pub(crate) fn is_leaf(&self, cell: &Cell) -> bool {
        match self {
            Tree::Convolution(c) => cell.level as usize >= c.factors(),
            _ => false,
        }
    }

    /// Children in left-to-right order. Empty for leaves.
    pub(crate) fn children(&self, cell: &Cell, out: &mut Vec<Cell>) {
        if self.is_leaf(cell) {
            return;
        }
        let level = cell.level + 1;
        match self {
            Tree::SelfSimilar(s, _) => {
                let width = inv_pow(s.base(), level as u64);
                for (d, p) in s.digits() {
                    out.push(Cell { left: cell.left + d as f64 * width, width, mass: cell.mass * p, level });
                }
            }
            Tree::Convolution(c) => {
                let width = c.tail_sum(level as usize);
                let half = cell.mass * 0.5;
                out.push(Cell { left: cell.left, width, mass: half, level });
                out.push(Cell { left: cell.left + c.step(level as usize), width, mass: half, level });
            }
            Tree::Lebesgue => {
                let width = cell.width * 0.5;
                out.push(Cell { left: cell.left, width, mass: cell.mass * 0.5, level });
                out.push(Cell { left: cell.left + width, width, mass: cell.mass * 0.5, level });
            }
            Tree::Trig(d) => {
                let width = cell.width * 0.5;
                let mid = cell.left + width;
                let m1 = d.cell_mass(cell.left, mid).max(0.0);
                let m2 = d.cell_mass(mid, cell.right()).max(0.0);
                out.push(Cell { left: cell.left, width, mass: m1, level });
                out.push(Cell { left: mid, width, mass: m2, level });
            }
        }
    }

    /// Estimate of the cell's barycenter and a bound on its distance from the
    /// true barycenter.
    pub(crate) fn barycenter(&self, cell: &Cell) -> (f64, f64) {
        match self {
            Tree::SelfSimilar(_, mean) => (cell.left + cell.width * mean, 0.0),
            Tree::Convolution(c) => {
                let beyond = c.uncomputed_tail();
                let partial = cell.width - beyond;
                (cell.left + 0.5 * partial + 0.25 * beyond, 0.25 * beyond)
            }
            Tree::Lebesgue => (cell.left + 0.5 * cell.width, 0.0),
            Tree::Trig(d) => {
                if cell.mass <= 0.0 {
                    return (cell.left + 0.5 * cell.width, 0.5 * cell.width);
                }
                let c = first_moment(d, cell.left, cell.right()) / cell.mass;
                (c.clamp(cell.left, cell.right()), 0.0)
            }
        }
    }

    /// Node used by the fixed-depth quadrature rule.
    fn quadrature_node(&self, cell: &Cell) -> f64 {
        match self {
            Tree::Lebesgue | Tree::Trig(_) => cell.left + 0.5 * cell.width,
            _ => cell.left,
        }
    }
}

/// `∫_a^b θ ρ(θ) dθ`.
fn first_moment(d: &TrigDensity, a: f64, b: f64) -> f64 {
    let coeffs = d.coefficients();
    let mut s = coeffs[0].re * (b * b - a * a) * 0.5;
    for (k, c) in coeffs.iter().enumerate().skip(1) {
        let w = TAU * k as f64;
        let anti = |t: f64| cis_turns(k as f64 * t) * Complex64::new(1.0 / (w * w), -t / w);
        s += 2.0 * (c * (anti(b) - anti(a))).re;
    }
    s
}

/// Fixed-depth rule: leaves at `depth` of each part's refinement tree.
pub fn quadrature(measure: &CircleMeasure, depth: u32, node_budget: usize) -> Result<Quadrature> {
    if depth == 0 {
        return Err(LabError::InvalidSequence("quadrature depth must be at least 1".into()));
    }
    let parts = measure.simple_parts();
    let mut required: u128 = 0;
    for (_, p) in &parts {
        required += match p {
            CircleMeasure::Atomic(a) => a.atoms().len() as u128,
            CircleMeasure::SelfSimilar(s) => (s.digits().count() as u128).saturating_pow(depth),
            CircleMeasure::InfiniteConvolution(c) => 1u128 << (depth as usize).min(c.factors()).min(127),
            _ => 1u128 << depth.min(127),
        };
    }
    if required > node_budget as u128 {
        return Err(LabError::NodeBudget { required, budget: node_budget });
    }
    let mut nodes = Vec::with_capacity(required as usize);
    let mut scale: f64 = 0.0;
    for (w, p) in parts {
        let Some(tree) = Tree::of(p) else {
            if let CircleMeasure::Atomic(a) = p {
                nodes.extend(a.atoms().iter().map(|at| (at.angle.turns(), w * at.weight)));
            }
            continue;
        };
        let mut level = vec![tree.root()];
        let mut next = Vec::new();
        for _ in 0..depth {
            if level.iter().all(|c| tree.is_leaf(c)) {
                break;
            }
            next.clear();
            for c in &level {
                if tree.is_leaf(c) {
                    next.push(*c);
                } else {
                    tree.children(c, &mut next);
                }
            }
            std::mem::swap(&mut level, &mut next);
        }
        let mut part_scale: f64 = 0.0;
        for c in &level {
            let node = tree.quadrature_node(c);
            nodes.push((node, w * c.mass));
            part_scale = part_scale.max((c.right() - node).max(node - c.left));
        }
        scale = scale.max(part_scale);
    }
    Ok(Quadrature { nodes, lipschitz_scale: scale })
}

/// Mass of the level-`depth` cells whose closed interval contains `theta`.
/// Atomic parts contribute their atoms at `theta` exactly.
pub fn mass_near(measure: &CircleMeasure, theta: f64, depth: u32) -> f64 {
    let mut total = 0.0;
    for (w, p) in measure.simple_parts() {
        let Some(tree) = Tree::of(p) else {
            if let CircleMeasure::Atomic(a) = p {
                total += w * a.atoms().iter().filter(|at| at.angle.turns() == theta).map(|at| at.weight).sum::<f64>();
            }
            continue;
        };
        let mut stack = vec![tree.root()];
        let mut kids = Vec::new();
        while let Some(c) = stack.pop() {
            if !c.contains(theta) || c.mass == 0.0 {
                continue;
            }
            if c.level >= depth || tree.is_leaf(&c) {
                total += w * c.mass;
                continue;
            }
            kids.clear();
            tree.children(&c, &mut kids);
            stack.extend(kids.iter().copied());
        }
    }
    total
}

/// Exact atom mass of a finite convolution at `theta`.
pub(crate) fn finite_convolution_atom(c: &InfiniteConvolution, theta: f64) -> f64 {
    let tree = Tree::Convolution(c);
    let mut stack = vec![tree.root()];
    let mut kids = Vec::new();
    let mut total = 0.0;
    while let Some(cell) = stack.pop() {
        if theta < cell.left - 1e-15 || theta > cell.right() + 1e-15 {
            continue;
        }
        if tree.is_leaf(&cell) {
            if (cell.left - theta).abs() <= 1e-15 {
                total += cell.mass;
            }
            continue;
        }
        kids.clear();
        tree.children(&cell, &mut kids);
        stack.extend(kids.iter().copied());
    }
    total
}

struct Acc {
    value: Complex64,
    error: f64,
    cells: usize,
}

enum Step {
    Accept(Complex64, f64),
    Split,
}

/// Cells lying inside `[lo, hi]` are accepted at `mass · sup` error.
#[derive(Debug, Clone, Copy)]
struct PoleWindow {
    lo: f64,
    hi: f64,
}

impl PoleWindow {
    const EMPTY: PoleWindow = PoleWindow { lo: 1.0, hi: 0.0 };

    fn covers(&self, cell: &Cell) -> bool {
        self.lo <= cell.left && cell.right() <= self.hi
    }
}

/// Upper bound on the mass of `[lo, hi]`, from cells no wider than `min_width`.
fn mass_within(tree: &Tree, lo: f64, hi: f64, min_width: f64) -> f64 {
    let mut total = 0.0;
    let mut stack = vec![tree.root()];
    let mut kids = Vec::new();
    let mut visited = 0usize;
    while let Some(c) = stack.pop() {
        visited += 1;
        if c.mass == 0.0 || c.right() < lo || c.left > hi {
            continue;
        }
        if c.width <= min_width || tree.is_leaf(&c) || visited > 1 << 16 {
            total += c.mass;
            continue;
        }
        kids.clear();
        tree.children(&c, &mut kids);
        stack.extend(kids.iter().copied());
    }
    total
}

/// Widest window `[½ − r, ½ + r]`, `r = 2^{-D}`, of mass at most `allowance`.
fn pole_window(tree: &Tree, allowance: f64, max_depth: u32) -> PoleWindow {
    for d in 2..=max_depth.min(60) {
        let r = 0.5f64.powi(d as i32);
        if mass_within(tree, 0.5 - r, 0.5 + r, r / 4.0) <= allowance {
            return PoleWindow { lo: 0.5 - r, hi: 0.5 + r };
        }
    }
    PoleWindow::EMPTY
}

fn assess<I: Integrand + ?Sized>(
    tree: &Tree,
    cell: &Cell,
    h: &I,
    tol: f64,
    window: PoleWindow,
    depth_cap: u32,
    forced: bool,
) -> Step {
    if cell.mass == 0.0 {
        return Step::Accept(Complex64::new(0.0, 0.0), 0.0);
    }
    let stop = tree.is_leaf(cell) || cell.level >= depth_cap || forced || window.covers(cell);
    let sup = h.local_sup(cell.left, cell.right());
    match h.derivative_bounds(cell.left, cell.right()) {
        Some((l1, l2)) => {
            let (c, slack) = tree.barycenter(cell);
            let spread = 0.25 * cell.width * cell.width + slack * slack;
            let err = cell.mass * (0.5 * l2 * spread + l1 * slack);
            if err <= 0.5 * tol * cell.mass {
                Step::Accept(h.value(c) * cell.mass, err)
            } else if stop {
                Step::Accept(h.value(c) * cell.mass, err.min(2.0 * cell.mass * sup))
            } else {
                Step::Split
            }
        }
        None if stop => Step::Accept(Complex64::new(0.0, 0.0), cell.mass * sup),
        None => Step::Split,
    }
}

fn depth_first<I: Integrand + ?Sized>(
    tree: &Tree,
    root: Cell,
    h: &I,
    tol: f64,
    window: PoleWindow,
    policy: &AdaptivePolicy,
    budget: usize,
) -> Acc {
    let mut acc = Acc { value: Complex64::new(0.0, 0.0), error: 0.0, cells: 0 };
    let mut stack = vec![root];
    let mut kids = Vec::new();
    while let Some(cell) = stack.pop() {
        acc.cells += 1;
        match assess(tree, &cell, h, tol, window, policy.max_depth, acc.cells >= budget) {
            Step::Accept(v, e) => {
                acc.value += v;
                acc.error += e;
            }
            Step::Split => {
                kids.clear();
                tree.children(&cell, &mut kids);
                stack.extend(kids.iter().rev().copied());
            }
        }
    }
    acc
}

const FRONTIER: usize = 256;

/// Integrates `h` against one continuous tree to within `tol`. Half the
/// budget goes to cells accepted by derivative bounds (in proportion to their
/// mass), half to the window around `θ = ½` where `λ(θ)` blows up.
fn integrate_tree<I: Integrand + ?Sized>(tree: &Tree, h: &I, tol: f64, policy: &AdaptivePolicy) -> (Complex64, f64) {
    let allowance = 0.25 * tol / h.local_sup(0.0, 1.0).max(1.0);
    let window = pole_window(tree, allowance, policy.max_depth);
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    let mut frontier = vec![tree.root()];
    let mut next = Vec::new();
    let mut visited = 0usize;
    while !frontier.is_empty() && frontier.len() < FRONTIER {
        next.clear();
        for cell in &frontier {
            visited += 1;
            match assess(tree, cell, h, tol, window, policy.max_depth, false) {
                Step::Accept(v, e) => {
                    value += v;
                    error += e;
                }
                Step::Split => tree.children(cell, &mut next),
            }
        }
        std::mem::swap(&mut frontier, &mut next);
    }
    if frontier.is_empty() {
        return (value, error);
    }
    let budget = policy.cell_budget.saturating_sub(visited);
    let results = policy.execution.map(&frontier, |cell| depth_first(tree, *cell, h, tol, window, policy, budget.max(1)));
    for r in results {
        value += r.value;
        error += r.error;
    }
    (value, error)
}

/// Best-effort adaptive integral of `h` against `measure`, with the certified
/// error actually achieved.
pub fn integrate_best_effort<I: Integrand + ?Sized>(
    measure: &CircleMeasure,
    h: &I,
    tol: f64,
    policy: &AdaptivePolicy,
) -> FourierValue {
    let mut value = Complex64::new(0.0, 0.0);
    let mut error = 0.0;
    for (w, p) in measure.simple_parts() {
        match Tree::of(p) {
            Some(tree) => {
                let (v, e) = integrate_tree(&tree, h, tol, policy);
                value += v * w;
                error += e * w;
            }
            None => {
                if let CircleMeasure::Atomic(a) = p {
                    for at in a.atoms() {
                        value += h.value(at.angle.turns()) * (w * at.weight);
                    }
                }
            }
        }
    }
    FourierValue::new(value, error)
}

/// Certified `∫ h dμ` with error bound at most `tol`.
pub fn integrate<I: Integrand + ?Sized>(
    measure: &CircleMeasure,
    h: &I,
    tol: f64,
    policy: &AdaptivePolicy,
) -> Result<FourierValue> {
    check_tol(tol)?;
    let v = integrate_best_effort(measure, h, tol, policy);
    if v.error_bound > tol {
        return Err(LabError::PrecisionUnreachable { best_bound: v.error_bound, requested: tol });
    }
    Ok(v)
}
