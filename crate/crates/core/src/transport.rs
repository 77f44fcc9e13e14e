//! Minimum-cost transport of integer topological charges.
//!
//! The primal problem is `inf { sum b_ij |a_i - a_j| }` over nonnegative
//! flows with divergence `sum_i (b_ij - b_ji) = d_j`. Because the cost is a
//! metric, relaying through intermediate sites never helps, so the optimum
//! is computed as an assignment between unit-split charges by successive
//! shortest augmenting paths with node potentials. The flow polytope is
//! totally unimodular, so the continuous relaxation (solved independently
//! by a dense simplex in [`lp_relaxation_optimum`]) reaches the same value.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dist, ChargeConfig, Point};
use crate::numeric::NeumaierSum;
use crate::simplex;

/// Flow carried from charge `i` to charge `j`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FlowEdge {
    pub i: usize,
    pub j: usize,
    pub flow: f64,
}

/// An optimal transport plan: integral flows on charge pairs and the total
/// cost `sum b_ij |a_i - a_j|`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct FlowPlan {
    pub edges: Vec<FlowEdge>,
    pub cost: f64,
}

impl FlowPlan {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("flow plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Checks the divergence constraint, flow integrality, and the stored
    /// cost against recomputation.
    pub fn verify(&self, config: &ChargeConfig) -> Result<()> {
        let n = config.len();
        let mut div = vec![0.0f64; n];
        let mut cost = NeumaierSum::new();
        for e in &self.edges {
            if e.i >= n || e.j >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({}, {}) outside config of {} charges",
                    e.i, e.j, n
                )));
            }
            if e.flow < 0.0 {
                return Err(Error::Numerical(format!("negative flow {}", e.flow)));
            }
            if (e.flow - e.flow.round()).abs() >= 1e-9 {
                return Err(Error::Numerical(format!("non-integral flow {}", e.flow)));
            }
            div[e.j] += e.flow;
            div[e.i] -= e.flow;
            cost.add(
                e.flow
                    * dist(
                        &config.charges()[e.i].position,
                        &config.charges()[e.j].position,
                    ),
            );
        }
        for (j, charge) in config.charges().iter().enumerate() {
            if (div[j] - charge.degree as f64).abs() > 1e-9 {
                return Err(Error::Numerical(format!(
                    "divergence {} at charge {j}, expected {}",
                    div[j], charge.degree
                )));
            }
        }
        if (cost.value() - self.cost).abs() > 1e-9 {
            return Err(Error::Numerical(format!(
                "stored cost {} differs from recomputed {}",
                self.cost,
                cost.value()
            )));
        }
        Ok(())
    }
}

/// Unit terminals tagged with their originating charge index.
type UnitTerminals = Vec<(usize, Point)>;

/// Positions of the unit-split terminals: `givers` at negative-degree sites
/// (each listed `|d|` times) and `takers` at positive-degree sites, so that
/// flow from giver to taker satisfies `sum_i (b_ij - b_ji) = d_j`.
fn split_units(config: &ChargeConfig) -> (UnitTerminals, UnitTerminals) {
    let mut givers = Vec::new();
    let mut takers = Vec::new();
    for (k, c) in config.charges().iter().enumerate() {
        let side = if c.degree < 0 {
            &mut givers
        } else {
            &mut takers
        };
        for _ in 0..c.degree.unsigned_abs() {
            side.push((k, c.position.clone()));
        }
    }
    (givers, takers)
}

/// Dense assignment by successive shortest augmenting paths in reduced
/// costs (Dijkstra over the unlabelled columns with running potentials).
/// Returns, for each column, the matched row.
fn assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    p.remove(0);
    p.iter().map(|&i| i - 1).collect()
}

/// Optimal transport plan for a validated configuration.
///
/// Flows are integral by construction (one unit per matched terminal pair)
/// and ties between equal-cost plans are resolved by lexicographic edge
/// order, which is a determinism guarantee, not a semantic one.
pub fn min_cost_transport(config: &ChargeConfig) -> Result<FlowPlan> {
    let (givers, takers) = split_units(config);
    debug_assert_eq!(givers.len(), takers.len());
    let n = givers.len();
    if n == 0 {
        return Ok(FlowPlan {
            edges: Vec::new(),
            cost: 0.0,
        });
    }
    let cost: Vec<Vec<f64>> = givers
        .iter()
        .map(|(_, g)| takers.iter().map(|(_, t)| dist(g, t)).collect())
        .collect();
    let matched = assignment(&cost);
    let mut flows: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    for (col, &row) in matched.iter().enumerate() {
        *flows.entry((givers[row].0, takers[col].0)).or_insert(0) += 1;
    }
    let mut total = NeumaierSum::new();
    let mut edges = Vec::with_capacity(flows.len());
    for (&(i, j), &flow) in &flows {
        let d = dist(&config.charges()[i].position, &config.charges()[j].position);
        total.add(flow as f64 * d);
        edges.push(FlowEdge {
            i,
            j,
            flow: flow as f64,
        });
    }
    Ok(FlowPlan {
        edges,
        cost: total.value(),
    })
}

/// Exact optimum by exhaustive enumeration over unit assignments; the
/// independent oracle for [`min_cost_transport`]. Limited to ten units.
pub fn brute_force_transport(config: &ChargeConfig) -> Result<f64> {
    if config.total_unit_charge() > 10 {
        return Err(Error::Unsupported(format!(
            "brute force limited to sum |d_i| <= 10, got {}",
            config.total_unit_charge()
        )));
    }
    let (givers, takers) = split_units(config);
    let n = givers.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut used = vec![false; n];
    fn recurse(
        row: usize,
        acc: f64,
        best: &mut f64,
        used: &mut [bool],
        givers: &[(usize, Point)],
        takers: &[(usize, Point)],
    ) {
        if row == givers.len() {
            if acc < *best {
                *best = acc;
            }
            return;
        }
        for col in 0..takers.len() {
            if !used[col] {
                used[col] = true;
                recurse(
                    row + 1,
                    acc + dist(&givers[row].1, &takers[col].1),
                    best,
                    used,
                    givers,
                    takers,
                );
                used[col] = false;
            }
        }
    }
    let mut best = f64::INFINITY;
    recurse(0, 0.0, &mut best, &mut used, &givers, &takers);
    Ok(best)
}

/// Optimum of the continuous relaxation `b_ij >= 0`, solved by a dense
/// two-phase simplex over all ordered site pairs. By total unimodularity it
/// must agree with the integral optimum; the two routes are implemented
/// independently so the agreement is a real check.
pub fn lp_relaxation_optimum(config: &ChargeConfig) -> Result<f64> {
    let n = config.len();
    if n > 12 {
        return Err(Error::Unsupported(format!(
            "dense LP relaxation limited to 12 charges, got {n}"
        )));
    }
    if n == 0 {
        return Ok(0.0);
    }
    let mut vars = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                vars.push((i, j));
            }
        }
    }
    let c: Vec<f64> = vars
        .iter()
        .map(|&(i, j)| dist(&config.charges()[i].position, &config.charges()[j].position))
        .collect();
    let mut a = vec![vec![0.0; vars.len()]; n];
    for (k, &(i, j)) in vars.iter().enumerate() {
        a[j][k] += 1.0;
        a[i][k] -= 1.0;
    }
    let b: Vec<f64> = config.charges().iter().map(|ch| ch.degree as f64).collect();
    simplex::solve_min(&c, &a, &b)
}

/// Min-cost flow over the complete directed graph on all sites, relays
/// allowed. With a metric cost this cannot beat the bipartite assignment;
/// the equality is asserted by the property suite.
pub fn relay_transport_cost(config: &ChargeConfig) -> Result<f64> {
    let n = config.len();
    if n == 0 {
        return Ok(0.0);
    }
    let mut net = Mcmf::new(n + 2);
    let source = n;
    let sink = n + 1;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                net.add_edge(
                    i,
                    j,
                    f64::INFINITY,
                    dist(&config.charges()[i].position, &config.charges()[j].position),
                );
            }
        }
    }
    for (i, ch) in config.charges().iter().enumerate() {
        if ch.degree < 0 {
            net.add_edge(source, i, -ch.degree as f64, 0.0);
        } else {
            net.add_edge(i, sink, ch.degree as f64, 0.0);
        }
    }
    let (_, cost) = net.solve(source, sink)?;
    Ok(cost)
}

struct McmfEdge {
    to: usize,
    cap: f64,
    cost: f64,
}

/// Successive shortest paths with node potentials; Dijkstra is a dense
/// O(V^2) scan, which is plenty for relay graphs over a handful of sites.
struct Mcmf {
    adj: Vec<Vec<usize>>,
    edges: Vec<McmfEdge>,
}

impl Mcmf {
    fn new(n: usize) -> Self {
        Mcmf {
            adj: vec![Vec::new(); n],
            edges: Vec::new(),
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: f64, cost: f64) {
        self.adj[from].push(self.edges.len());
        self.edges.push(McmfEdge { to, cap, cost });
        self.adj[to].push(self.edges.len());
        self.edges.push(McmfEdge {
            to: from,
            cap: 0.0,
            cost: -cost,
        });
    }

    fn solve(&mut self, source: usize, sink: usize) -> Result<(f64, f64)> {
        let n = self.adj.len();
        let mut potential = vec![0.0f64; n];
        let mut total_flow = 0.0;
        let mut total_cost = NeumaierSum::new();
        loop {
            let mut dist = vec![f64::INFINITY; n];
            let mut prev_edge = vec![usize::MAX; n];
            let mut done = vec![false; n];
            dist[source] = 0.0;
            for _ in 0..n {
                let mut at = usize::MAX;
                let mut best = f64::INFINITY;
                for v in 0..n {
                    if !done[v] && dist[v] < best {
                        best = dist[v];
                        at = v;
                    }
                }
                if at == usize::MAX {
                    break;
                }
                done[at] = true;
                for &e in &self.adj[at] {
                    let edge = &self.edges[e];
                    if edge.cap <= 1e-12 {
                        continue;
                    }
                    let reduced = edge.cost + potential[at] - potential[edge.to];
                    debug_assert!(reduced > -1e-9, "negative reduced cost {reduced}");
                    let cand = dist[at] + reduced.max(0.0);
                    if cand < dist[edge.to] {
                        dist[edge.to] = cand;
                        prev_edge[edge.to] = e;
                    }
                }
            }
            if dist[sink].is_infinite() {
                break;
            }
            for v in 0..n {
                if dist[v].is_finite() {
                    potential[v] += dist[v];
                }
            }
            let mut bottleneck = f64::INFINITY;
            let mut v = sink;
            while v != source {
                let e = prev_edge[v];
                bottleneck = bottleneck.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            if !bottleneck.is_finite() || bottleneck <= 0.0 {
                return Err(Error::Numerical("degenerate augmenting path".into()));
            }
            let mut v = sink;
            while v != source {
                let e = prev_edge[v];
                self.edges[e].cap -= bottleneck;
                self.edges[e ^ 1].cap += bottleneck;
                total_cost.add(bottleneck * self.edges[e].cost);
                v = self.edges[e ^ 1].to;
            }
            total_flow += bottleneck;
        }
        Ok((total_flow, total_cost.value()))
    }
}
