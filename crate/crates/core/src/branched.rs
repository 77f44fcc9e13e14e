//! Branched (irrigation) transport with sublinear cost `c(d) = |d|^alpha`.
//!
//! Covers the dyadic source array: the centralized plan cost (exact lattice
//! sum plus its integral estimate), the hierarchical recurrence
//! `C(n) = 2^m (C(n-1) + 2^(n-2) h sqrt(m) (2^(m(n-1)) d)^alpha)` with its
//! closed form, the three growth regimes split by the critical exponent
//! `1 - 1/m`, and the irrigability sweep under `h = 2^-n`, `d = 2^-mn`.
//! A small optimizer searches full Steiner topologies with Weiszfeld
//! iterations for the cheapest branched plan on few terminals.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, ChargeConfig, Point};
use crate::numeric::NeumaierSum;

/// Cost exponent `alpha` in `(0, 1]`, kept exact when given as a rational
/// so the critical-branch selection `alpha = 1 - 1/m` is exact.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CostExponent {
    Exact(Ratio<i64>),
    Approx(f64),
}

impl CostExponent {
    pub fn rational(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidParameter("zero denominator".into()));
        }
        let r = Ratio::new(num, den);
        let v = *r.numer() as f64 / *r.denom() as f64;
        if r <= Ratio::new(0, 1) || r > Ratio::new(1, 1) {
            return Err(Error::InvalidExponent { alpha: v });
        }
        Ok(CostExponent::Exact(r))
    }

    pub fn real(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 0.0 || alpha > 1.0 {
            return Err(Error::InvalidExponent { alpha });
        }
        Ok(CostExponent::Approx(alpha))
    }

    pub fn value(&self) -> f64 {
        match self {
            CostExponent::Exact(r) => *r.numer() as f64 / *r.denom() as f64,
            CostExponent::Approx(a) => *a,
        }
    }

    /// Whether `alpha = 1 - 1/m`, exactly for rationals, within 1e-12 of
    /// `m*alpha + 1 = m` otherwise.
    pub fn is_critical(&self, m: u32) -> bool {
        match self {
            CostExponent::Exact(r) => *r == Ratio::new(m as i64 - 1, m as i64),
            CostExponent::Approx(a) => (m as f64 * a + 1.0 - m as f64).abs() < 1e-12,
        }
    }
}

impl std::str::FromStr for CostExponent {
    type Err = Error;

    /// Accepts `p/q` (kept exact) or a decimal literal.
    fn from_str(s: &str) -> Result<Self> {
        if let Some((num, den)) = s.split_once('/') {
            let num: i64 = num
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad numerator {num:?}")))?;
            let den: i64 = den
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad denominator {den:?}")))?;
            CostExponent::rational(num, den)
        } else {
            let a: f64 = s
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad exponent {s:?}")))?;
            CostExponent::real(a)
        }
    }
}

impl fmt::Display for CostExponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostExponent::Exact(r) => write!(f, "{}/{}", r.numer(), r.denom()),
            CostExponent::Approx(a) => write!(f, "{a}"),
        }
    }
}

/// A dyadic array of `2^(m*n)` sources of intensity `d` at spacing `h`,
/// drained by a central sink.
#[derive(Clone, Copy, Debug)]
pub struct ArraySpec {
    pub m: u32,
    pub n: u32,
    pub h: f64,
    pub d: f64,
    pub alpha: CostExponent,
}

impl ArraySpec {
    pub fn new(m: u32, n: u32, h: f64, d: f64, alpha: CostExponent) -> Result<Self> {
        if m == 0 || m > 8 {
            return Err(Error::InvalidParameter(format!(
                "dimension m = {m} outside 1..=8"
            )));
        }
        if n > 64 {
            return Err(Error::InvalidParameter(format!("depth n = {n} exceeds 64")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "spacing h = {h} must be positive"
            )));
        }
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "intensity d = {d} must be positive"
            )));
        }
        Ok(ArraySpec { m, n, h, d, alpha })
    }
}

/// Centralized plan cost: the exact half-integer lattice sum when the array
/// fits in memory-free iteration, and always the integral estimate
/// `d^alpha / h^m * int_{[-2^(n-1) h, 2^(n-1) h]^m} |x| dx`.
#[derive(Clone, Copy, Debug)]
pub struct CentralizedCost {
    pub lattice_sum: Option<f64>,
    pub integral_estimate: f64,
}

impl CentralizedCost {
    /// The exact sum when available, the integral estimate otherwise.
    pub fn value(&self) -> f64 {
        self.lattice_sum.unwrap_or(self.integral_estimate)
    }
}

/// Per-dimension Gauss-Legendre size; total evaluations stay near 2^24.
fn quadrature_points(m: u32) -> usize {
    match m {
        1 => 4096,
        2 => 1024,
        3 => 160,
        4 => 64,
        5 => 28,
        6 => 16,
        7 => 10,
        _ => 8,
    }
}

/// Gauss-Legendre nodes and weights on [0, 1].
fn gauss_legendre_unit(p: usize) -> (Vec<f64>, Vec<f64>) {
    if p == 1 {
        return (vec![0.5], vec![1.0]);
    }
    let mut nodes = vec![0.0; p];
    let mut weights = vec![0.0; p];
    for k in 0..p {
        let mut x: f64 = (PI * (k as f64 + 0.75) / (p as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p0 = 1.0;
            let mut p1 = x;
            for j in 2..=p {
                let pj = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = pj;
            }
            dp = p as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[k] = 0.5 * (1.0 + x);
        weights[k] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `int_{[-1,1]^m} |u| du`, by a tensor Gauss-Legendre rule on the positive
/// orthant; cached per dimension.
fn cube_norm_integral(m: u32) -> f64 {
    static CACHE: [OnceLock<f64>; 8] = [const { OnceLock::new() }; 8];
    *CACHE[(m - 1) as usize].get_or_init(|| {
        let p = quadrature_points(m);
        let (x, w) = gauss_legendre_unit(p);
        fn rec(dims: u32, sumsq: f64, wprod: f64, x: &[f64], w: &[f64], acc: &mut f64) {
            if dims == 0 {
                *acc += wprod * sumsq.sqrt();
                return;
            }
            for k in 0..x.len() {
                rec(dims - 1, sumsq + x[k] * x[k], wprod * w[k], x, w, acc);
            }
        }
        let mut acc = 0.0;
        rec(m, 0.0, 1.0, &x, &w, &mut acc);
        acc * 2f64.powi(m as i32)
    })
}

/// Cost of connecting every source straight to the central sink.
pub fn centralized_cost(spec: &ArraySpec) -> CentralizedCost {
    let alpha = spec.alpha.value();
    let dalpha = spec.d.powf(alpha);
    let m = spec.m;
    let n = spec.n;

    // Integral estimate: d^alpha h 2^((n-1)(m+1)) * int_{[-1,1]^m}|u| du.
    let integral_estimate =
        dalpha * spec.h * ((n as f64 - 1.0) * (m as f64 + 1.0)).exp2() * cube_norm_integral(m);

    let lattice_sum = if n == 0 {
        // One source coincident with the sink.
        Some(0.0)
    } else if m * n <= 24 {
        // Sum over the positive orthant of half-integers; every point has
        // all coordinates nonzero, so the 2^m sign flips are exact.
        let per_dim = 1usize << (n - 1);
        fn rec(dims: u32, sumsq: f64, per_dim: usize, acc: &mut NeumaierSum) {
            if dims == 0 {
                acc.add(sumsq.sqrt());
                return;
            }
            for t in 0..per_dim {
                let c = t as f64 + 0.5;
                rec(dims - 1, sumsq + c * c, per_dim, acc);
            }
        }
        let mut acc = NeumaierSum::new();
        rec(m, 0.0, per_dim, &mut acc);
        Some(acc.value() * 2f64.powi(m as i32) * spec.h * dalpha)
    } else {
        None
    };

    CentralizedCost {
        lattice_sum,
        integral_estimate,
    }
}

/// Hierarchical cost by literal induction:
/// `C(0) = 0`, `C(n) = 2^m (C(n-1) + 2^(n-2) h sqrt(m) (2^(m(n-1)) d)^alpha)`.
pub fn hierarchical_cost_recurrence(spec: &ArraySpec) -> f64 {
    let m = spec.m as f64;
    let alpha = spec.alpha.value();
    let dalpha = spec.d.powf(alpha);
    let sqrt_m = m.sqrt();
    let mut c = 0.0;
    for step in 1..=spec.n {
        let link = (step as f64 - 2.0).exp2() * spec.h * sqrt_m;
        let capacity = (alpha * m * (step as f64 - 1.0)).exp2() * dalpha;
        c = m.exp2() * (c + link * capacity);
    }
    c
}

/// Closed-form solution of the hierarchical recurrence:
/// `2^(m-1) sqrt(m) d^alpha h (2^((m alpha + 1) n) - 2^(m n)) / (2^(m alpha + 1) - 2^m)`
/// away from the critical exponent, `sqrt(m) d^alpha h 2^(m n) n / 2` at it.
pub fn hierarchical_cost_closed_form(spec: &ArraySpec) -> f64 {
    if spec.n == 0 {
        return 0.0;
    }
    let m = spec.m as f64;
    let n = spec.n as f64;
    let alpha = spec.alpha.value();
    let dalpha = spec.d.powf(alpha);
    let sqrt_m = m.sqrt();
    if spec.alpha.is_critical(spec.m) {
        sqrt_m * dalpha * spec.h / 2.0 * (m * n).exp2() * n
    } else {
        let r = (m * alpha + 1.0).exp2();
        let s = m.exp2();
        (m - 1.0).exp2()
            * sqrt_m
            * dalpha
            * spec.h
            * (((m * alpha + 1.0) * n).exp2() - (m * n).exp2())
            / (r - s)
    }
}

/// Growth regime of the hierarchical cost relative to `alpha = 1 - 1/m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    SubCritical,
    Critical,
    SuperCritical,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::SubCritical => "sub-critical",
            Regime::Critical => "critical",
            Regime::SuperCritical => "super-critical",
        })
    }
}

/// Which term of the closed form dominates as `n` grows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DominantGrowth {
    /// `d^alpha h 2^(m n)`: one unit of reach per source.
    SourceVolume,
    /// `d^(1-1/m) h 2^(m n) n`: the volume term with a depth factor.
    SourceVolumeTimesDepth,
    /// `d^alpha h 2^((m alpha + 1) n)`: the trunk capacity term.
    TrunkCapacity,
}

impl DominantGrowth {
    pub fn formula(&self) -> &'static str {
        match self {
            DominantGrowth::SourceVolume => "d^alpha h 2^(m n)",
            DominantGrowth::SourceVolumeTimesDepth => "d^(1-1/m) h 2^(m n) n",
            DominantGrowth::TrunkCapacity => "d^alpha h 2^((m alpha + 1) n)",
        }
    }
}

impl fmt::Display for DominantGrowth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.formula())
    }
}

/// Regime classification with the matching dominant-growth descriptor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RegimeReport {
    pub regime: Regime,
    pub dominant_growth: DominantGrowth,
}

pub fn classify_regime(m: u32, alpha: &CostExponent) -> Result<RegimeReport> {
    if m == 0 || m > 8 {
        return Err(Error::InvalidParameter(format!(
            "dimension m = {m} outside 1..=8"
        )));
    }
    let report = if alpha.is_critical(m) {
        RegimeReport {
            regime: Regime::Critical,
            dominant_growth: DominantGrowth::SourceVolumeTimesDepth,
        }
    } else {
        let below = match alpha {
            CostExponent::Exact(r) => *r < Ratio::new(m as i64 - 1, m as i64),
            CostExponent::Approx(a) => m as f64 * a + 1.0 < m as f64,
        };
        if below {
            RegimeReport {
                regime: Regime::SubCritical,
                dominant_growth: DominantGrowth::SourceVolume,
            }
        } else {
            RegimeReport {
                regime: Regime::SuperCritical,
                dominant_growth: DominantGrowth::TrunkCapacity,
            }
        }
    };
    Ok(report)
}

/// One row of the irrigability sweep.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: u32,
    pub cost: f64,
}

/// Hierarchical costs under the scaling `h = 2^-n`, `d = 2^-mn`, where the
/// sources converge to Lebesgue measure on the unit cube.
#[derive(Clone, Debug)]
pub struct IrrigabilitySweep {
    pub rows: Vec<SweepRow>,
    pub regime: Regime,
    /// Empirical verdict by the convergence test on the last increment.
    pub irrigable: bool,
}

pub fn irrigability_sweep(m: u32, alpha: &CostExponent, n_max: u32) -> Result<IrrigabilitySweep> {
    if n_max > 30 {
        return Err(Error::Unsupported(format!(
            "sweep depth {n_max} exceeds 30"
        )));
    }
    if n_max < 2 {
        return Err(Error::InvalidParameter(
            "sweep needs n_max >= 2 for the ratio test".into(),
        ));
    }
    let mut rows = Vec::with_capacity(n_max as usize + 1);
    for n in 0..=n_max {
        let h = (-(n as f64)).exp2();
        let d = (-((m * n) as f64)).exp2();
        let spec = ArraySpec::new(m, n, h, d, *alpha)?;
        rows.push(SweepRow {
            n,
            cost: hierarchical_cost_closed_form(&spec),
        });
    }
    let last = rows[rows.len() - 1].cost;
    let prev = rows[rows.len() - 2].cost;
    let irrigable = (last - prev).abs() < 1e-3 * last.abs().max(f64::MIN_POSITIVE);
    Ok(IrrigabilitySweep {
        rows,
        regime: classify_regime(m, alpha)?.regime,
        irrigable,
    })
}

/// A node of a branched plan: position plus the supply it injects
/// (positive degree absorbs flow, matching the transport divergence sign).
#[derive(Clone, Debug)]
pub struct TreeNode {
    pub position: Point,
    pub supply: f64,
}

/// A directed edge carrying nonnegative flow from `from` to `to`.
#[derive(Clone, Debug)]
pub struct TreeEdge {
    pub from: usize,
    pub to: usize,
    pub flow: f64,
}

/// A branched transport plan: terminals and branch points with flows
/// satisfying Kirchhoff conservation, costed as `sum |flow|^alpha * length`.
#[derive(Clone, Debug)]
pub struct BranchedTree {
    pub nodes: Vec<TreeNode>,
    pub edges: Vec<TreeEdge>,
    pub alpha: f64,
    pub cost: f64,
}

#[derive(Serialize, Deserialize)]
struct TreeNodeDto {
    pos: Vec<f64>,
    supply: f64,
}

#[derive(Serialize, Deserialize)]
struct TreeEdgeDto {
    from: usize,
    to: usize,
    flow: f64,
}

#[derive(Serialize, Deserialize)]
struct BranchedTreeDto {
    alpha: f64,
    cost: f64,
    nodes: Vec<TreeNodeDto>,
    edges: Vec<TreeEdgeDto>,
}

impl BranchedTree {
    pub fn to_json(&self) -> String {
        let dto = BranchedTreeDto {
            alpha: self.alpha,
            cost: self.cost,
            nodes: self
                .nodes
                .iter()
                .map(|n| TreeNodeDto {
                    pos: n.position.coords().to_vec(),
                    supply: n.supply,
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| TreeEdgeDto {
                    from: e.from,
                    to: e.to,
                    flow: e.flow,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&dto).expect("tree serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let dto: BranchedTreeDto =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        let nodes = dto
            .nodes
            .into_iter()
            .map(|n| {
                Ok(TreeNode {
                    position: Point::new(n.pos)?,
                    supply: n.supply,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let edges = dto
            .edges
            .into_iter()
            .map(|e| TreeEdge {
                from: e.from,
                to: e.to,
                flow: e.flow,
            })
            .collect();
        Ok(BranchedTree {
            nodes,
            edges,
            alpha: dto.alpha,
            cost: dto.cost,
        })
    }
}

/// Recomputes `sum |flow|^alpha * length` after checking Kirchhoff
/// conservation at every node.
pub fn tree_cost(tree: &BranchedTree) -> Result<f64> {
    if !(tree.alpha.is_finite() && tree.alpha > 0.0 && tree.alpha <= 1.0) {
        return Err(Error::InvalidExponent { alpha: tree.alpha });
    }
    let n = tree.nodes.len();
    let mut net = vec![0.0f64; n];
    let mut acc = NeumaierSum::new();
    for e in &tree.edges {
        if e.from >= n || e.to >= n {
            return Err(Error::InvalidTree(format!(
                "edge ({}, {}) outside {} nodes",
                e.from, e.to, n
            )));
        }
        if !(e.flow.is_finite() && e.flow >= 0.0) {
            return Err(Error::InvalidTree(format!("bad flow {}", e.flow)));
        }
        net[e.to] += e.flow;
        net[e.from] -= e.flow;
        let len = tree.nodes[e.from]
            .position
            .distance(&tree.nodes[e.to].position)?;
        acc.add(e.flow.powf(tree.alpha) * len);
    }
    for (k, node) in tree.nodes.iter().enumerate() {
        if (net[k] - node.supply).abs() > 1e-9 {
            return Err(Error::InvalidTree(format!(
                "node {k} violates conservation: net inflow {} vs supply {}",
                net[k], node.supply
            )));
        }
    }
    Ok(acc.value())
}

/// Full Steiner topology on `k` labelled terminals: terminals are nodes
/// `0..k` of degree one, branch nodes `k..2k-2` of degree three.
#[derive(Clone, Debug)]
struct Topology {
    edges: Vec<(usize, usize)>,
}

/// All full topologies on `k >= 2` terminals, by the classical edge-split
/// construction; there are (2k-5)!! of them.
fn full_topologies(k: usize) -> Vec<Topology> {
    assert!(k >= 2);
    let mut topos = vec![Topology {
        edges: vec![(0, 1)],
    }];
    for t in 2..k {
        let steiner = k + t - 2;
        let mut next = Vec::with_capacity(topos.len() * (2 * t - 3));
        for topo in &topos {
            for (e, &(a, b)) in topo.edges.iter().enumerate() {
                let mut edges = Vec::with_capacity(topo.edges.len() + 2);
                edges.extend(topo.edges.iter().take(e).copied());
                edges.push((a, steiner));
                edges.push((steiner, b));
                edges.push((t, steiner));
                edges.extend(topo.edges.iter().skip(e + 1).copied());
                next.push(Topology { edges });
            }
        }
        topos = next;
    }
    topos
}

/// Signed edge flows from Kirchhoff conservation on a tree: the flow on an
/// edge equals the total supply hanging off its far side. Positive means
/// flow toward the lower-index endpoint as oriented in `edges`... the sign
/// is resolved by the caller when building the output tree.
fn kirchhoff_flows(node_count: usize, edges: &[(usize, usize)], supplies: &[f64]) -> Vec<f64> {
    let mut adj: Vec<Vec<(usize, usize)>> = vec![Vec::new(); node_count];
    for (e, &(a, b)) in edges.iter().enumerate() {
        adj[a].push((b, e));
        adj[b].push((a, e));
    }
    let mut flows = vec![0.0; edges.len()];
    let mut subtree = vec![0.0; node_count];
    // Iterative post-order from node 0.
    let mut stack = vec![(0usize, usize::MAX, false)];
    while let Some((v, parent_edge, processed)) = stack.pop() {
        if processed {
            let mut total = supplies.get(v).copied().unwrap_or(0.0);
            for &(u, e) in &adj[v] {
                if e != parent_edge {
                    total += subtree[u];
                }
            }
            subtree[v] = total;
            if parent_edge != usize::MAX {
                // The parent edge must deliver `total` net inflow into this
                // subtree: orient flows[e] > 0 as (edge.0 -> edge.1).
                let (a, _b) = edges[parent_edge];
                flows[parent_edge] = if a == v { -total } else { total };
            }
        } else {
            stack.push((v, parent_edge, true));
            for &(u, e) in &adj[v] {
                if e != parent_edge {
                    stack.push((u, e, false));
                }
            }
        }
    }
    flows
}

const WEISZFELD_EPS: f64 = 1e-12;
const WEISZFELD_MOVE_TOL: f64 = 1e-9;
const WEISZFELD_MAX_SWEEPS: usize = 5000;

/// Optimizes branch-point positions for a fixed topology by cyclic
/// Weiszfeld updates (each branch node moves to the weighted geometric
/// median of its neighbours, weights `|flow|^alpha`). The objective is
/// jointly convex, so the sweep limit is a safety net, not a search budget.
fn optimize_topology(
    terminals: &[Vec<f64>],
    topo: &Topology,
    weights: &[f64],
    dim: usize,
) -> (Vec<Vec<f64>>, f64) {
    let k = terminals.len();
    let node_count = if k == 2 { 2 } else { 2 * k - 2 };
    let mut pos: Vec<Vec<f64>> = Vec::with_capacity(node_count);
    pos.extend(terminals.iter().cloned());

    // Branch nodes start at the terminal centroid with a deterministic
    // index-dependent nudge so coincident starts break apart.
    let mut centroid = vec![0.0; dim];
    for t in terminals {
        for (c, v) in centroid.iter_mut().zip(t) {
            *c += v / k as f64;
        }
    }
    for s in k..node_count {
        let mut p = centroid.clone();
        p[0] += 1e-3 * (s - k + 1) as f64;
        pos.push(p);
    }

    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); node_count];
    for (e, &(a, b)) in topo.edges.iter().enumerate() {
        adj[a].push((b, weights[e]));
        adj[b].push((a, weights[e]));
    }

    let edge_len = |pos: &[Vec<f64>], a: usize, b: usize| -> f64 {
        pos[a]
            .iter()
            .zip(&pos[b])
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let total_cost = |pos: &[Vec<f64>]| -> f64 {
        let mut acc = NeumaierSum::new();
        for (e, &(a, b)) in topo.edges.iter().enumerate() {
            if weights[e] > 0.0 {
                acc.add(weights[e] * edge_len(pos, a, b));
            }
        }
        acc.value()
    };

    // A few rounds of plain neighbour averaging give a sane interior start.
    for _ in 0..30 {
        for s in k..node_count {
            let mut mean = vec![0.0; dim];
            for &(u, _) in &adj[s] {
                for (c, v) in mean.iter_mut().zip(&pos[u]) {
                    *c += v / adj[s].len() as f64;
                }
            }
            pos[s] = mean;
        }
    }

    let mut cost = total_cost(&pos);
    for _sweep in 0..WEISZFELD_MAX_SWEEPS {
        let mut moved: f64 = 0.0;
        for s in k..node_count {
            let mut den = 0.0;
            let mut num = vec![0.0; dim];
            for &(u, w) in &adj[s] {
                if w <= 0.0 {
                    continue;
                }
                let d = edge_len(&pos, s, u).max(WEISZFELD_EPS);
                den += w / d;
                for (acc, v) in num.iter_mut().zip(&pos[u]) {
                    *acc += w * v / d;
                }
            }
            if den == 0.0 {
                continue;
            }
            let fresh: Vec<f64> = num.into_iter().map(|v| v / den).collect();
            let step = fresh
                .iter()
                .zip(&pos[s])
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            moved = moved.max(step);
            pos[s] = fresh;
        }
        let fresh_cost = total_cost(&pos);
        debug_assert!(
            fresh_cost <= cost + 1e-12 * (1.0 + cost),
            "Weiszfeld sweep increased cost: {cost} -> {fresh_cost}"
        );
        cost = fresh_cost;
        if moved < WEISZFELD_MOVE_TOL {
            break;
        }
    }
    (pos, cost)
}

/// Searches all full Steiner topologies on the unit-split terminals of a
/// configuration and returns the cheapest branched plan.
///
/// Matchings and multi-component plans are limiting cases: a zero-flow
/// connecting edge costs nothing and a branch point sliding onto a segment
/// costs nothing extra, so full topologies dominate every simpler plan.
pub fn branched_optimize(config: &ChargeConfig, alpha: f64) -> Result<BranchedTree> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidExponent { alpha });
    }
    let dim = config.dimension();
    let mut terminals: Vec<Vec<f64>> = Vec::new();
    let mut supplies: Vec<f64> = Vec::new();
    let mut charge_of: Vec<usize> = Vec::new();
    for (c, charge) in config.charges().iter().enumerate() {
        let unit = if charge.degree > 0 { 1.0 } else { -1.0 };
        for _ in 0..charge.degree.unsigned_abs() {
            terminals.push(charge.position.coords().to_vec());
            supplies.push(unit);
            charge_of.push(c);
        }
    }
    let k = terminals.len();
    if k > 8 {
        return Err(Error::Unsupported(format!(
            "branched optimizer limited to 8 unit terminals, got {k}"
        )));
    }
    if k == 0 {
        return Ok(BranchedTree {
            nodes: Vec::new(),
            edges: Vec::new(),
            alpha,
            cost: 0.0,
        });
    }

    struct Candidate {
        cost: f64,
        topo: Topology,
        flows: Vec<f64>,
        pos: Vec<Vec<f64>>,
    }
    let node_count = if k == 2 { 2 } else { 2 * k - 2 };
    let mut best: Option<Candidate> = None;
    for topo in full_topologies(k) {
        let flows = kirchhoff_flows(node_count, &topo.edges, &supplies);
        let weights: Vec<f64> = flows.iter().map(|f| f.abs().powf(alpha)).collect();
        let (pos, cost) = optimize_topology(&terminals, &topo, &weights, dim);
        let improves = match &best {
            None => true,
            Some(c) => cost < c.cost - 1e-12,
        };
        if improves {
            best = Some(Candidate {
                cost,
                topo,
                flows,
                pos,
            });
        }
    }
    let winner = best.expect("at least one topology");

    build_output_tree(
        config,
        &charge_of,
        k,
        winner.topo,
        winner.flows,
        winner.pos,
        alpha,
    )
}

/// Assembles the winner into a clean tree: zero-flow edges dropped, branch
/// points that collapsed onto a neighbour contracted, unit terminals of the
/// same charge merged back together, and the cost recomputed.
fn build_output_tree(
    config: &ChargeConfig,
    charge_of: &[usize],
    k: usize,
    topo: Topology,
    flows: Vec<f64>,
    pos: Vec<Vec<f64>>,
    alpha: f64,
) -> Result<BranchedTree> {
    let node_count = pos.len();
    // Union-find over collapsing nodes.
    let mut parent: Vec<usize> = (0..node_count).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }

    // Merge unit terminals of the same charge (they are coincident).
    let mut rep_of_charge: Vec<Option<usize>> = vec![None; config.len()];
    for t in 0..k {
        match rep_of_charge[charge_of[t]] {
            None => rep_of_charge[charge_of[t]] = Some(t),
            Some(r) => parent[t] = r,
        }
    }

    // Contract degenerate edges (branch point collided with a neighbour),
    // preferring to keep terminals.
    let edge_len = |a: usize, b: usize| -> f64 {
        pos[a]
            .iter()
            .zip(&pos[b])
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    for &(a, b) in &topo.edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb && edge_len(a, b) < 1e-9 {
            let keep_a = a < k; // terminals first
            let (keep, drop) = if keep_a { (ra, rb) } else { (rb, ra) };
            parent[drop] = keep;
        }
    }

    // Collect surviving edges with positive flow, normalised from -> to.
    let mut kept: Vec<(usize, usize, f64)> = Vec::new();
    for (e, &(a, b)) in topo.edges.iter().enumerate() {
        let f = flows[e];
        if f.abs() < 0.5 {
            continue; // integer flows; zero means a disconnected limit
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra == rb {
            continue;
        }
        if f > 0.0 {
            kept.push((ra, rb, f));
        } else {
            kept.push((rb, ra, -f));
        }
    }

    // Renumber representatives that still carry edges or supply.
    let mut supply = vec![0.0f64; node_count];
    for (t, &c) in charge_of.iter().enumerate() {
        let r = find(&mut parent, t);
        supply[r] += if config.charges()[c].degree > 0 {
            1.0
        } else {
            -1.0
        };
    }
    let mut id = vec![usize::MAX; node_count];
    let mut nodes = Vec::new();
    let assign = |r: usize, id: &mut Vec<usize>, nodes: &mut Vec<TreeNode>| -> usize {
        if id[r] == usize::MAX {
            id[r] = nodes.len();
            nodes.push(TreeNode {
                position: Point::new(pos[r].clone()).expect("finite optimizer output"),
                supply: supply[r],
            });
        }
        id[r]
    };
    for t in 0..k {
        let r = find(&mut parent, t);
        assign(r, &mut id, &mut nodes);
    }
    let mut edges = Vec::with_capacity(kept.len());
    let mut acc = NeumaierSum::new();
    for (ra, rb, f) in kept {
        let from = assign(ra, &mut id, &mut nodes);
        let to = assign(rb, &mut id, &mut nodes);
        acc.add(f.powf(alpha) * edge_len_points(&nodes[from].position, &nodes[to].position));
        edges.push(TreeEdge { from, to, flow: f });
    }
    let tree = BranchedTree {
        nodes,
        edges,
        alpha,
        cost: acc.value(),
    };
    tree_cost(&tree)?;
    Ok(tree)
}

fn edge_len_points(a: &Point, b: &Point) -> f64 {
    dist(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::config_from_parts;

    fn spec(m: u32, n: u32, h: f64, d: f64, alpha: CostExponent) -> ArraySpec {
        ArraySpec::new(m, n, h, d, alpha).unwrap()
    }

    #[test]
    fn centralized_trivial_cases() {
        let a = CostExponent::real(1.0).unwrap();
        assert_eq!(
            centralized_cost(&spec(2, 0, 1.0, 1.0, a)).lattice_sum,
            Some(0.0)
        );
        let two_points = centralized_cost(&spec(1, 1, 1.0, 1.0, a));
        assert!((two_points.lattice_sum.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn centralized_ratio_approaches_two_to_m_plus_one() {
        let a = CostExponent::real(0.7).unwrap();
        let mut prev = None;
        for n in 4..=8 {
            let c = centralized_cost(&spec(2, n, 1.0, 1.0, a))
                .lattice_sum
                .unwrap();
            if let Some(p) = prev {
                let ratio: f64 = c / p;
                assert!(
                    (ratio - 8.0).abs() <= 0.03 * 8.0,
                    "ratio {ratio} at n = {n}"
                );
            }
            prev = Some(c);
        }
    }

    #[test]
    fn centralized_integral_estimate_tracks_lattice_sum() {
        let a = CostExponent::real(0.5).unwrap();
        for m in [1u32, 2, 3] {
            let s = spec(m, 6, 0.25, 2.0, a);
            let c = centralized_cost(&s);
            let exact = c.lattice_sum.unwrap();
            let approx = c.integral_estimate;
            assert!(
                (approx - exact).abs() <= 0.02 * exact,
                "m={m}: lattice {exact} vs integral {approx}"
            );
        }
    }

    #[test]
    fn recurrence_base_and_first_step() {
        let a = CostExponent::real(1.0).unwrap();
        assert_eq!(hierarchical_cost_recurrence(&spec(2, 0, 1.0, 1.0, a)), 0.0);
        // One step by hand: 2^2 * (0 + 2^-1 * 1 * sqrt(2) * 1) = 2 sqrt(2).
        let c = hierarchical_cost_recurrence(&spec(2, 1, 1.0, 1.0, a));
        assert!((c - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn closed_form_matches_recurrence() {
        for m in 1..=6u32 {
            let alphas = [
                Some(CostExponent::real(0.25).unwrap()),
                Some(CostExponent::real(0.5).unwrap()),
                // 1 - 1/m; undefined (zero) for m = 1, where every alpha in
                // (0, 1] is super-critical.
                CostExponent::rational(m as i64 - 1, m as i64).ok(),
                Some(CostExponent::real(0.9).unwrap()),
                Some(CostExponent::real(1.0).unwrap()),
            ];
            for alpha in alphas.into_iter().flatten() {
                for n in 0..=30u32 {
                    let s = spec(m, n, 0.5, 1.5, alpha);
                    let rec = hierarchical_cost_recurrence(&s);
                    let closed = hierarchical_cost_closed_form(&s);
                    assert!(
                        (rec - closed).abs() <= 1e-12 * (1.0 + rec.abs()),
                        "m={m} n={n} alpha={alpha}: {rec} vs {closed}"
                    );
                }
            }
        }
    }

    #[test]
    fn critical_branch_is_exact_for_rationals() {
        let critical = CostExponent::rational(3, 4).unwrap();
        assert!(critical.is_critical(4));
        assert!(!critical.is_critical(3));
        let nearly = CostExponent::real(0.75 + 1e-9).unwrap();
        assert!(!nearly.is_critical(4));
    }

    #[test]
    fn regime_classification_examples() {
        let crit = classify_regime(4, &CostExponent::rational(3, 4).unwrap()).unwrap();
        assert_eq!(crit.regime, Regime::Critical);
        assert_eq!(crit.dominant_growth, DominantGrowth::SourceVolumeTimesDepth);
        let sup = classify_regime(2, &CostExponent::real(1.0).unwrap()).unwrap();
        assert_eq!(sup.regime, Regime::SuperCritical);
        assert_eq!(sup.dominant_growth, DominantGrowth::TrunkCapacity);
        let sub = classify_regime(3, &CostExponent::rational(1, 2).unwrap()).unwrap();
        assert_eq!(sub.regime, Regime::SubCritical);
        assert_eq!(sub.dominant_growth, DominantGrowth::SourceVolume);
    }

    #[test]
    fn sweep_supercritical_converges() {
        let sweep = irrigability_sweep(2, &CostExponent::real(0.9).unwrap(), 25).unwrap();
        assert!(sweep.irrigable);
        let last = sweep.rows.last().unwrap().cost;
        let prev = sweep.rows[sweep.rows.len() - 2].cost;
        assert!((last - prev).abs() < 1e-3 * last);
    }

    #[test]
    fn sweep_critical_grows_linearly() {
        let sweep = irrigability_sweep(2, &CostExponent::rational(1, 2).unwrap(), 25).unwrap();
        assert!(!sweep.irrigable);
        let diffs: Vec<f64> = sweep
            .rows
            .windows(2)
            .map(|w| w[1].cost - w[0].cost)
            .collect();
        let tail = &diffs[diffs.len() - 5..];
        for d in tail {
            assert!(
                (d - tail[0]).abs() <= 0.05 * tail[0].abs(),
                "difference {d} vs {}",
                tail[0]
            );
        }
    }

    #[test]
    fn sweep_subcritical_grows_geometrically() {
        let sweep = irrigability_sweep(2, &CostExponent::real(0.3).unwrap(), 25).unwrap();
        assert!(!sweep.irrigable);
        let expected = (2.0f64 * 0.7 - 1.0).exp2();
        for w in sweep.rows.windows(2).skip(15) {
            let ratio = w[1].cost / w[0].cost;
            assert!(
                (ratio - expected).abs() <= 0.02 * expected,
                "ratio {ratio} vs {expected}"
            );
        }
    }

    #[test]
    fn two_terminals_give_a_straight_edge() {
        let cfg = config_from_parts(&[(vec![0.0, 0.0], 1), (vec![2.0, 0.0], -1)]).unwrap();
        let tree = branched_optimize(&cfg, 0.6).unwrap();
        assert_eq!(tree.nodes.len(), 2);
        assert_eq!(tree.edges.len(), 1);
        assert!((tree.cost - 2.0).abs() < 1e-9);
        assert!((tree_cost(&tree).unwrap() - tree.cost).abs() < 1e-9);
    }

    #[test]
    fn linear_cost_reduces_to_min_pairing() {
        // Spread-out square: merging cannot win at alpha = 1.
        let cfg = config_from_parts(&[
            (vec![0.0, 0.0], 1),
            (vec![1.0, 1.0], 1),
            (vec![1.0, 0.0], -1),
            (vec![0.0, 1.0], -1),
        ])
        .unwrap();
        let tree = branched_optimize(&cfg, 1.0).unwrap();
        assert!(
            tree.cost >= 2.0 - 1e-8 && tree.cost <= 2.0 + 1e-6,
            "cost {}",
            tree.cost
        );
    }

    #[test]
    fn clustered_pairs_prefer_merging_at_low_alpha() {
        let cfg = config_from_parts(&[
            (vec![0.0, 0.0], 1),
            (vec![0.0, 0.1], 1),
            (vec![10.0, 0.0], -1),
            (vec![10.0, 0.1], -1),
        ])
        .unwrap();
        let tree = branched_optimize(&cfg, 0.5).unwrap();
        // Best pairing costs 2 * 10; the merged plan is near
        // 0.1 + sqrt(2) * 10 + small branch corrections.
        assert!(tree.cost < 2.0 * 10.0 - 5.0, "cost {}", tree.cost);
        // The trunk carries flow 2.
        assert!(tree.edges.iter().any(|e| (e.flow - 2.0).abs() < 1e-9));
    }

    #[test]
    fn tree_cost_of_merged_four_point_plan() {
        // Two unit sources feed branch point b1, a capacity-2 trunk runs
        // b1 -> b2, and b2 splits into the two unit sinks; the cost is the
        // term-by-term sum c(1)|a1-b1| + c(1)|a2-b1| + c(2)|b2-b1|
        // + c(1)|b2-a3| + c(1)|b2-a4|.
        let alpha = 0.5f64;
        let a = [
            Point::xy(0.0, 0.0),
            Point::xy(0.0, 1.0),
            Point::xy(6.0, 0.0),
            Point::xy(6.0, 1.0),
        ];
        let b1 = Point::xy(1.0, 0.5);
        let b2 = Point::xy(5.0, 0.5);
        let mut nodes: Vec<TreeNode> = a
            .iter()
            .enumerate()
            .map(|(k, p)| TreeNode {
                position: p.clone(),
                supply: if k < 2 { -1.0 } else { 1.0 },
            })
            .collect();
        nodes.push(TreeNode {
            position: b1.clone(),
            supply: 0.0,
        });
        nodes.push(TreeNode {
            position: b2.clone(),
            supply: 0.0,
        });
        let edges = vec![
            TreeEdge {
                from: 0,
                to: 4,
                flow: 1.0,
            },
            TreeEdge {
                from: 1,
                to: 4,
                flow: 1.0,
            },
            TreeEdge {
                from: 4,
                to: 5,
                flow: 2.0,
            },
            TreeEdge {
                from: 5,
                to: 2,
                flow: 1.0,
            },
            TreeEdge {
                from: 5,
                to: 3,
                flow: 1.0,
            },
        ];
        let tree = BranchedTree {
            nodes,
            edges,
            alpha,
            cost: 0.0,
        };
        let unit = |p: &Point, q: &Point| p.distance(q).unwrap();
        let expected = unit(&a[0], &b1)
            + unit(&a[1], &b1)
            + 2.0f64.powf(alpha) * unit(&b2, &b1)
            + unit(&b2, &a[2])
            + unit(&b2, &a[3]);
        let got = tree_cost(&tree).unwrap();
        assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    }

    #[test]
    fn tree_cost_single_edge_supply_two() {
        let tree = BranchedTree {
            nodes: vec![
                TreeNode {
                    position: Point::xy(0.0, 0.0),
                    supply: -2.0,
                },
                TreeNode {
                    position: Point::xy(3.0, 0.0),
                    supply: 2.0,
                },
            ],
            edges: vec![TreeEdge {
                from: 0,
                to: 1,
                flow: 2.0,
            }],
            alpha: 0.75,
            cost: 0.0,
        };
        let c = tree_cost(&tree).unwrap();
        assert!((c - 2.0f64.powf(0.75) * 3.0).abs() < 1e-12);
    }

    #[test]
    fn tree_cost_rejects_conservation_violation() {
        let tree = BranchedTree {
            nodes: vec![
                TreeNode {
                    position: Point::xy(0.0, 0.0),
                    supply: -1.0,
                },
                TreeNode {
                    position: Point::xy(1.0, 0.0),
                    supply: 1.0,
                },
            ],
            edges: vec![TreeEdge {
                from: 0,
                to: 1,
                flow: 2.0,
            }],
            alpha: 0.5,
            cost: 0.0,
        };
        assert!(matches!(tree_cost(&tree), Err(Error::InvalidTree(_))));
    }

    #[test]
    fn subadditivity_of_concave_cost() {
        for alpha in [0.25, 0.5, 0.75, 0.99] {
            for (d1, d2) in [(1.0f64, 1.0f64), (2.0, 3.0), (1.0, 4.0)] {
                let merged = (d1 + d2).powf(alpha);
                let split = d1.powf(alpha) + d2.powf(alpha);
                assert!(merged < split);
            }
        }
    }

    #[test]
    fn topology_counts_follow_double_factorial() {
        assert_eq!(full_topologies(2).len(), 1);
        assert_eq!(full_topologies(3).len(), 1);
        assert_eq!(full_topologies(4).len(), 3);
        assert_eq!(full_topologies(5).len(), 15);
        assert_eq!(full_topologies(6).len(), 105);
        assert_eq!(full_topologies(8).len(), 10395);
    }

    #[test]
    fn exponent_parsing() {
        let r: CostExponent = "3/4".parse().unwrap();
        assert!(matches!(r, CostExponent::Exact(_)));
        assert_eq!(r.value(), 0.75);
        let a: CostExponent = "0.3".parse().unwrap();
        assert!(matches!(a, CostExponent::Approx(_)));
        assert!("1.5".parse::<CostExponent>().is_err());
        assert!("0".parse::<CostExponent>().is_err());
    }
}
