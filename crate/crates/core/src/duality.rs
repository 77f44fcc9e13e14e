//! Kantorovich duality for the charge-transport problem.
//!
//! The dual is `sup { sum f_i d_i : f_i - f_j <= |a_i - a_j| }`: a price per
//! singularity, 1-Lipschitz on the sites. An optimal potential is recovered
//! from the residual graph of the primal plan, extended to the whole space
//! by the explicit formula `phi(x) = min_i (f_i + |x - a_i|)`, and paired
//! with the grid functional `int (u ^ Du) ^ D(phi)` that evaluates the
//! transport cost without locating the singularities first.

use std::f64::consts::TAU;

use crate::degree::GridMap;
use crate::error::{Error, Result};
use crate::geometry::{dist, ChargeConfig, Point};
use crate::numeric::NeumaierSum;
use crate::transport::{min_cost_transport, FlowPlan};

/// Slack allowed when checking 1-Lipschitz feasibility on the sites.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// Normalization constant `kappa` relating the grid integral
/// `int (u ^ Du) ^ D(phi)` to `sum phi(a_i) d_i`.
///
/// Integrating the angle-lift Jacobian over a punctured neighbourhood of a
/// degree-d singularity produces one full turn per unit of degree, so the
/// identity carries a factor of `2*pi`. The value is confirmed numerically
/// by `examples/kappa_calibration.rs` on the two-vortex fixture; the
/// calibrated ratio must sit within a few percent of this constant.
pub const DUAL_NORMALIZATION: f64 = TAU;

/// Dual prices `f_i`, one per charge.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    values: Vec<f64>,
}

impl Potential {
    pub fn new(values: Vec<f64>) -> Self {
        Potential { values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Verifies `|f_i - f_j| <= |a_i - a_j| + tol` on all site pairs.
    pub fn verify_feasible(&self, config: &ChargeConfig) -> Result<()> {
        if self.values.len() != config.len() {
            return Err(Error::InvalidParameter(format!(
                "potential has {} values for {} charges",
                self.values.len(),
                config.len()
            )));
        }
        let charges = config.charges();
        for i in 0..charges.len() {
            for j in (i + 1)..charges.len() {
                let gap = (self.values[i] - self.values[j]).abs();
                let d = dist(&charges[i].position, &charges[j].position);
                if gap > d + FEASIBILITY_TOL {
                    return Err(Error::InfeasiblePotential {
                        i,
                        j,
                        excess: gap - d,
                    });
                }
            }
        }
        Ok(())
    }

    /// The dual objective `sum f_i d_i`.
    pub fn dual_objective(&self, config: &ChargeConfig) -> f64 {
        let mut acc = NeumaierSum::new();
        for (f, c) in self.values.iter().zip(config.charges()) {
            acc.add(f * c.degree as f64);
        }
        acc.value()
    }
}

/// Solves the dual by shortest distances in the residual graph of an
/// optimal primal plan: forward arcs `i -> j` cost `|a_i - a_j|` always
/// exist (flows are uncapacitated), reverse arcs enter where the plan
/// carries flow. Optimality of the plan rules out negative cycles, so the
/// distances exist, are 1-Lipschitz on the sites, and are tight along every
/// flow edge, which forces `sum f_i d_i` to equal the primal cost.
fn potential_from_plan(config: &ChargeConfig, plan: &FlowPlan) -> Result<Potential> {
    let n = config.len();
    let charges = config.charges();
    let mut arcs: Vec<(usize, usize, f64)> = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                arcs.push((i, j, dist(&charges[i].position, &charges[j].position)));
            }
        }
    }
    for e in &plan.edges {
        if e.flow > 0.5 {
            arcs.push((
                e.j,
                e.i,
                -dist(&charges[e.i].position, &charges[e.j].position),
            ));
        }
    }
    // Bellman-Ford from a virtual source wired to every site at cost zero.
    let mut f = vec![0.0f64; n];
    for _ in 0..n {
        let mut changed = false;
        for &(u, v, w) in &arcs {
            if f[u] + w < f[v] - 1e-15 {
                f[v] = f[u] + w;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    for &(u, v, w) in &arcs {
        if f[u] + w < f[v] - 1e-9 {
            return Err(Error::Numerical(
                "negative cycle in residual graph; plan not optimal".into(),
            ));
        }
    }
    let min = f.iter().cloned().fold(f64::INFINITY, f64::min);
    for v in f.iter_mut() {
        *v -= min;
    }
    Ok(Potential::new(f))
}

/// Computes the dual value and an attaining feasible potential.
pub fn kantorovich_dual(config: &ChargeConfig) -> Result<(f64, Potential)> {
    let plan = min_cost_transport(config)?;
    kantorovich_dual_from_plan(config, &plan)
}

/// Same as [`kantorovich_dual`] when an optimal plan is already available.
pub fn kantorovich_dual_from_plan(
    config: &ChargeConfig,
    plan: &FlowPlan,
) -> Result<(f64, Potential)> {
    if config.is_empty() {
        return Ok((0.0, Potential::new(Vec::new())));
    }
    let potential = potential_from_plan(config, plan)?;
    potential.verify_feasible(config)?;
    let value = potential.dual_objective(config);
    if (value - plan.cost).abs() > 1e-8 * (1.0 + plan.cost) {
        return Err(Error::Numerical(format!(
            "dual value {value} does not attain primal cost {}",
            plan.cost
        )));
    }
    Ok((value, potential))
}

/// Primal cost minus dual value; bounded by `1e-8 * (1 + cost)` per the
/// strong-duality contract.
pub fn duality_gap(config: &ChargeConfig) -> Result<f64> {
    let plan = min_cost_transport(config)?;
    let (value, _) = kantorovich_dual_from_plan(config, &plan)?;
    Ok(plan.cost - value)
}

/// Evaluates the Lipschitz extension `min_i (f_i + |x - a_i|)` at one
/// point, verifying feasibility first.
pub fn lipschitz_extend(config: &ChargeConfig, potential: &Potential, x: &Point) -> Result<f64> {
    potential.verify_feasible(config)?;
    eval_extension(config, potential, x)
}

fn eval_extension(config: &ChargeConfig, potential: &Potential, x: &Point) -> Result<f64> {
    if config.is_empty() {
        return Ok(0.0);
    }
    if x.dim() != config.dimension() {
        return Err(Error::DimensionMismatch {
            expected: config.dimension(),
            got: x.dim(),
        });
    }
    let mut best = f64::INFINITY;
    for (f, c) in potential.values().iter().zip(config.charges()) {
        let v = f + dist(x, &c.position);
        if v < best {
            best = v;
        }
    }
    Ok(best)
}

/// A feasible potential together with its configuration: a globally
/// 1-Lipschitz function on `R^m` agreeing with `f_i` at every site.
#[derive(Clone, Debug)]
pub struct LipschitzField {
    config: ChargeConfig,
    potential: Potential,
}

impl LipschitzField {
    pub fn new(config: ChargeConfig, potential: Potential) -> Result<Self> {
        potential.verify_feasible(&config)?;
        Ok(LipschitzField { config, potential })
    }

    pub fn eval(&self, x: &Point) -> Result<f64> {
        eval_extension(&self.config, &self.potential, x)
    }

    /// Samples the extension at every node of a grid (masked nodes too; the
    /// extension is defined everywhere).
    pub fn eval_grid(&self, map: &GridMap) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(map.nx() * map.ny());
        for j in 0..map.ny() {
            for i in 0..map.nx() {
                let p = map.node_position(i, j);
                out.push(self.eval(&Point::xy(p[0], p[1]))?);
            }
        }
        Ok(out)
    }

    /// Largest pairwise site distance.
    pub fn site_diameter(&self) -> f64 {
        let charges = self.config.charges();
        let mut best = 0.0f64;
        for i in 0..charges.len() {
            for j in (i + 1)..charges.len() {
                best = best.max(dist(&charges[i].position, &charges[j].position));
            }
        }
        best
    }

    /// The saturated extension `min_i (f_i + min(|x - a_i|, cap))`.
    ///
    /// For `cap >= site_diameter()` this still agrees with `f_i` at every
    /// site and stays 1-Lipschitz, so it attains the same dual optimum, but
    /// its gradient vanishes outside the cap-neighbourhood of the sites.
    /// That kills the far-field boundary term of the dual functional, which
    /// for the unsaturated extension decays only like one over the domain
    /// radius.
    pub fn eval_saturated(&self, x: &Point, cap: f64) -> Result<f64> {
        if self.config.is_empty() {
            return Ok(0.0);
        }
        if x.dim() != self.config.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.config.dimension(),
                got: x.dim(),
            });
        }
        if !(cap.is_finite() && cap >= self.site_diameter()) {
            return Err(Error::InvalidParameter(format!(
                "saturation cap {cap} below the site diameter {}",
                self.site_diameter()
            )));
        }
        let mut best = f64::INFINITY;
        for (f, c) in self.potential.values().iter().zip(self.config.charges()) {
            let v = f + dist(x, &c.position).min(cap);
            if v < best {
                best = v;
            }
        }
        Ok(best)
    }

    /// Grid samples of the saturated extension; see [`Self::eval_saturated`].
    pub fn eval_grid_saturated(&self, map: &GridMap, cap: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(map.nx() * map.ny());
        for j in 0..map.ny() {
            for i in 0..map.nx() {
                let p = map.node_position(i, j);
                out.push(self.eval_saturated(&Point::xy(p[0], p[1]), cap)?);
            }
        }
        Ok(out)
    }
}

/// Grid functional `sum_cells h^2 (u1 d1u2 d2phi - u2 d1u1 d2phi
/// - u1 d2u2 d1phi + u2 d2u1 d1phi)`.
///
/// Raw-component stencils, same neighbour logic as the energy: the
/// integrand is smooth away from vortex cores, masked cells contribute
/// zero. For a map with singularities `(a_i, d_i)` and a 1-Lipschitz `phi`
/// with bounded angular variation at infinity, the value approximates
/// [`DUAL_NORMALIZATION`] `* sum phi(a_i) d_i`.
pub fn dual_functional(map: &GridMap, phi: &[f64]) -> Result<f64> {
    let nx = map.nx();
    let ny = map.ny();
    if phi.len() != nx * ny {
        return Err(Error::GridMismatch(format!(
            "phi has {} samples for a {}x{} grid",
            phi.len(),
            nx,
            ny
        )));
    }
    let u1 = |i: usize, j: usize| map.value(i, j)[0];
    let u2 = |i: usize, j: usize| map.value(i, j)[1];
    let ph = |i: usize, j: usize| phi[j * nx + i];
    let sub = |b: f64, a: f64| b - a;
    let cell = map.h() * map.h();
    let mut acc = NeumaierSum::new();
    for j in 0..ny {
        for i in 0..nx {
            if map.is_masked(i, j) {
                continue;
            }
            let v1 = u1(i, j);
            let v2 = u2(i, j);
            let d1u1 = map.derivative(i, j, 0, &u1, &sub);
            let d2u1 = map.derivative(i, j, 1, &u1, &sub);
            let d1u2 = map.derivative(i, j, 0, &u2, &sub);
            let d2u2 = map.derivative(i, j, 1, &u2, &sub);
            let d1p = map.derivative(i, j, 0, &ph, &sub);
            let d2p = map.derivative(i, j, 1, &ph, &sub);
            let integrand = v1 * d1u2 * d2p - v2 * d1u1 * d2p - v1 * d2u2 * d1p + v2 * d2u1 * d1p;
            if integrand != 0.0 {
                acc.add(cell * integrand);
            }
        }
    }
    Ok(acc.value())
}
