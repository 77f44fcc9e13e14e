//! Winding numbers of sampled loops, singularity detection on grid maps,
//! and discrete p-Dirichlet energies.
//!
//! Degrees are computed by summing angle increments wrapped to `(-pi, pi]`.
//! Around a closed loop that sum is an exact multiple of `2*pi` up to float
//! noise, so the rounded value is an exact integer whenever every step is
//! resolved (jump strictly below `pi`).

use std::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::geometry::{validate_config, ChargeConfig, Point, RawCharge};
use crate::numeric::NeumaierSum;

/// Unit-norm tolerance for sampled values of a circle-valued map.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Margin below `pi` under which an angle step counts as resolved.
const RESOLUTION_MARGIN: f64 = 1e-6;

/// Tolerance for rounding an accumulated winding to an integer.
const WINDING_ROUND_TOL: f64 = 1e-6;

/// Wraps an angle difference into `(-pi, pi]`.
#[inline]
pub(crate) fn wrap_angle(d: f64) -> f64 {
    let w = d.rem_euclid(TAU);
    if w > PI {
        w - TAU
    } else {
        w
    }
}

fn resolved_step(index: usize, d: f64) -> Result<f64> {
    let w = wrap_angle(d);
    if w.abs() >= PI - RESOLUTION_MARGIN {
        return Err(Error::UnderResolvedLoop { index, jump: w });
    }
    Ok(w)
}

fn round_winding(total: f64) -> Result<i32> {
    let turns = total / TAU;
    let rounded = turns.round();
    if (turns - rounded).abs() >= WINDING_ROUND_TOL {
        return Err(Error::Numerical(format!(
            "winding sum {turns} is not close to an integer"
        )));
    }
    Ok(rounded as i32)
}

/// Samples of a circle-valued loop at uniformly spaced parameters.
#[derive(Clone, Debug)]
pub struct LoopSamples {
    values: Vec<[f64; 2]>,
}

impl LoopSamples {
    pub fn new(values: Vec<[f64; 2]>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::InvalidParameter(format!(
                "loop needs at least 3 samples, got {}",
                values.len()
            )));
        }
        for (k, v) in values.iter().enumerate() {
            let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > UNIT_NORM_TOL {
                return Err(Error::InvalidParameter(format!(
                    "sample {k} has norm {norm}, not on the unit circle"
                )));
            }
        }
        Ok(LoopSamples { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[[f64; 2]] {
        &self.values
    }

    /// Loop traversed in the opposite direction.
    pub fn reversed(&self) -> Self {
        let mut values = self.values.clone();
        values.reverse();
        LoopSamples { values }
    }
}

/// Winding number of a sampled loop.
///
/// Requires every consecutive angle step (cyclically) to stay strictly
/// below `pi`; otherwise the loop is under-resolved and the degree is not
/// determined by the samples.
pub fn winding_number(samples: &LoopSamples) -> Result<i32> {
    let vals = &samples.values;
    let mut total = 0.0;
    let mut prev = vals[0][1].atan2(vals[0][0]);
    for k in 1..=vals.len() {
        let v = vals[k % vals.len()];
        let ang = v[1].atan2(v[0]);
        total += resolved_step(k - 1, ang - prev)?;
        prev = ang;
    }
    round_winding(total)
}

/// The local-degree formula specialised to the circle; for `dimension == 2`
/// this is exactly [`winding_number`]. Higher-dimensional sphere maps are
/// not supported.
pub fn kronecker_index(dimension: usize, samples: &LoopSamples) -> Result<i32> {
    if dimension != 2 {
        return Err(Error::Unsupported(format!(
            "Kronecker index implemented for the circle only (m = 2), got m = {dimension}"
        )));
    }
    winding_number(samples)
}

/// A sampled unit-vector field on a rectangular grid.
///
/// Node `(i, j)` sits at `origin + (i*h, j*h)`; `mask[i,j] = true` excludes
/// the node from energy integrals and marks holes drilled around
/// singularities. Values are stored for masked nodes too, but only unmasked
/// nodes are required to lie on the unit circle.
#[derive(Clone, Debug)]
pub struct GridMap {
    nx: usize,
    ny: usize,
    h: f64,
    origin: [f64; 2],
    values: Vec<[f64; 2]>,
    mask: Option<Vec<bool>>,
}

impl GridMap {
    pub fn new(
        nx: usize,
        ny: usize,
        h: f64,
        origin: [f64; 2],
        values: Vec<[f64; 2]>,
        mask: Option<Vec<bool>>,
    ) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidGrid(format!(
                "grid must be at least 2x2, got {nx}x{ny}"
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing {h} must be positive")));
        }
        if !origin[0].is_finite() || !origin[1].is_finite() {
            return Err(Error::InvalidGrid("non-finite origin".into()));
        }
        if values.len() != nx * ny {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                nx * ny,
                values.len()
            )));
        }
        if let Some(m) = &mask {
            if m.len() != nx * ny {
                return Err(Error::InvalidGrid(format!(
                    "expected {} mask entries, got {}",
                    nx * ny,
                    m.len()
                )));
            }
        }
        let map = GridMap {
            nx,
            ny,
            h,
            origin,
            values,
            mask,
        };
        for j in 0..ny {
            for i in 0..nx {
                let v = map.value(i, j);
                if !v[0].is_finite() || !v[1].is_finite() {
                    return Err(Error::InvalidGrid(format!(
                        "non-finite value at node ({i}, {j})"
                    )));
                }
                if !map.is_masked(i, j) {
                    let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
                    if (norm - 1.0).abs() > UNIT_NORM_TOL {
                        return Err(Error::InvalidGrid(format!(
                            "node ({i}, {j}) has norm {norm}, not on the unit circle"
                        )));
                    }
                }
            }
        }
        Ok(map)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i < self.nx && j < self.ny);
        j * self.nx + i
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> [f64; 2] {
        self.values[self.idx(i, j)]
    }

    #[inline]
    pub fn is_masked(&self, i: usize, j: usize) -> bool {
        match &self.mask {
            Some(m) => m[self.idx(i, j)],
            None => false,
        }
    }

    pub fn has_mask(&self) -> bool {
        self.mask.is_some()
    }

    pub fn node_position(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + i as f64 * self.h,
            self.origin[1] + j as f64 * self.h,
        ]
    }

    #[inline]
    pub fn angle(&self, i: usize, j: usize) -> f64 {
        let v = self.value(i, j);
        v[1].atan2(v[0])
    }

    /// Finite-difference derivative of a per-node scalar field along `axis`
    /// (0 = x, 1 = y): central where both neighbours are usable, one-sided
    /// next to boundaries and masked nodes, zero when isolated. `sub(b, a)`
    /// supplies the increment, so angle fields can wrap per edge.
    pub(crate) fn derivative<F, S>(
        &self,
        i: usize,
        j: usize,
        axis: usize,
        field: &F,
        sub: &S,
    ) -> f64
    where
        F: Fn(usize, usize) -> f64,
        S: Fn(f64, f64) -> f64,
    {
        let (coord, n) = if axis == 0 {
            (i, self.nx)
        } else {
            (j, self.ny)
        };
        let at = |c: usize| -> (usize, usize) {
            if axis == 0 {
                (c, j)
            } else {
                (i, c)
            }
        };
        let usable = |c: usize| {
            let (a, b) = at(c);
            !self.is_masked(a, b)
        };
        let fwd = coord + 1 < n && usable(coord + 1);
        let bwd = coord >= 1 && usable(coord - 1);
        let here = {
            let (a, b) = at(coord);
            field(a, b)
        };
        let get = |c: usize| {
            let (a, b) = at(c);
            field(a, b)
        };
        match (bwd, fwd) {
            (true, true) => {
                (sub(get(coord + 1), here) + sub(here, get(coord - 1))) / (2.0 * self.h)
            }
            (false, true) => sub(get(coord + 1), here) / self.h,
            (true, false) => sub(here, get(coord - 1)) / self.h,
            (false, false) => 0.0,
        }
    }

    /// Writes the CSV interchange format: a first line `nx,ny,h,ox,oy`
    /// followed by `nx*ny` rows `i,j,ux,uy,masked`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            self.nx, self.ny, self.h, self.origin[0], self.origin[1]
        ));
        for i in 0..self.nx {
            for j in 0..self.ny {
                let v = self.value(i, j);
                let m = u8::from(self.is_masked(i, j));
                out.push_str(&format!("{},{},{},{},{}\n", i, j, v[0], v[1], m));
            }
        }
        out
    }

    /// Parses the CSV interchange format and re-validates all invariants.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty grid file".into()))?;
        let fields: Vec<&str> = header.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse(format!(
                "grid header needs nx,ny,h,ox,oy; got {} fields",
                fields.len()
            )));
        }
        let nx: usize = fields[0]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad nx {:?}", fields[0])))?;
        let ny: usize = fields[1]
            .trim()
            .parse()
            .map_err(|_| Error::Parse(format!("bad ny {:?}", fields[1])))?;
        let parse_f = |s: &str, what: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad {what} {s:?}")))
        };
        let h = parse_f(fields[2], "h")?;
        let ox = parse_f(fields[3], "ox")?;
        let oy = parse_f(fields[4], "oy")?;
        let total = nx
            .checked_mul(ny)
            .ok_or_else(|| Error::Parse("grid size overflow".into()))?;
        let mut values = vec![None; total];
        let mut mask = vec![false; total];
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(Error::Parse(format!("bad grid row {line:?}")));
            }
            let i: usize = f[0]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad i {:?}", f[0])))?;
            let j: usize = f[1]
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("bad j {:?}", f[1])))?;
            if i >= nx || j >= ny {
                return Err(Error::Parse(format!("node ({i}, {j}) out of range")));
            }
            let ux = parse_f(f[2], "ux")?;
            let uy = parse_f(f[3], "uy")?;
            let m = match f[4].trim() {
                "0" => false,
                "1" => true,
                other => return Err(Error::Parse(format!("bad mask flag {other:?}"))),
            };
            let slot = &mut values[j * nx + i];
            if slot.is_some() {
                return Err(Error::Parse(format!("duplicate node ({i}, {j})")));
            }
            *slot = Some([ux, uy]);
            mask[j * nx + i] = m;
        }
        let values: Vec<[f64; 2]> = values
            .into_iter()
            .enumerate()
            .map(|(k, v)| {
                v.ok_or_else(|| Error::Parse(format!("missing node ({}, {})", k % nx, k / nx)))
            })
            .collect::<Result<_>>()?;
        let mask = if mask.iter().any(|&b| b) {
            Some(mask)
        } else {
            None
        };
        GridMap::new(nx, ny, h, [ox, oy], values, mask)
    }
}

/// A detected singularity: plaquette-centre position and integer degree.
#[derive(Clone, Debug, PartialEq)]
pub struct Singularity {
    pub position: Point,
    pub degree: i32,
}

/// The set of singularities detected on a grid map.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SingularitySet {
    pub entries: Vec<Singularity>,
}

impl SingularitySet {
    pub fn total_degree(&self) -> i64 {
        self.entries.iter().map(|e| e.degree as i64).sum()
    }

    pub fn to_raw(&self) -> Vec<RawCharge> {
        self.entries
            .iter()
            .map(|e| RawCharge {
                pos: e.position.coords().to_vec(),
                deg: e.degree,
            })
            .collect()
    }

    /// Converts to a transportable charge configuration; fails when the
    /// total degree does not vanish or positions collide.
    pub fn to_charge_config(&self) -> Result<ChargeConfig> {
        validate_config(&self.to_raw())
    }
}

fn plaquette_winding(theta: &[f64], nx: usize, i: usize, j: usize) -> Result<i32> {
    // Corners counter-clockwise; the loop index reported on error is the
    // edge number within the plaquette.
    let c = [
        theta[j * nx + i],
        theta[j * nx + i + 1],
        theta[(j + 1) * nx + i + 1],
        theta[(j + 1) * nx + i],
    ];
    let mut total = 0.0;
    for k in 0..4 {
        total += resolved_step(k, c[(k + 1) % 4] - c[k])?;
    }
    round_winding(total)
}

fn ring_winding(theta: &[f64], nx: usize, ring: &[(usize, usize)]) -> Result<i32> {
    let mut total = 0.0;
    for k in 0..ring.len() {
        let (i0, j0) = ring[k];
        let (i1, j1) = ring[(k + 1) % ring.len()];
        total += resolved_step(k, theta[j1 * nx + i1] - theta[j0 * nx + i0])?;
    }
    round_winding(total)
}

/// Counter-clockwise node ring enclosing the plaquette rectangle
/// `[i0..=i1] x [j0..=j1]`.
fn rect_ring(i0: usize, i1: usize, j0: usize, j1: usize) -> Vec<(usize, usize)> {
    let (inode0, inode1, jnode0, jnode1) = (i0, i1 + 1, j0, j1 + 1);
    let mut ring = Vec::new();
    for i in inode0..inode1 {
        ring.push((i, jnode0));
    }
    for j in jnode0..jnode1 {
        ring.push((inode1, j));
    }
    for i in ((inode0 + 1)..=inode1).rev() {
        ring.push((i, jnode1));
    }
    for j in ((jnode0 + 1)..=jnode1).rev() {
        ring.push((inode0, j));
    }
    ring
}

/// Winding number of the outer rectangle of the grid. All boundary nodes
/// must be unmasked.
pub fn boundary_winding(map: &GridMap) -> Result<i32> {
    let ring = rect_ring(0, map.nx() - 2, 0, map.ny() - 2);
    for &(i, j) in &ring {
        if map.is_masked(i, j) {
            return Err(Error::Unsupported(
                "outer grid boundary is masked; no rectangular boundary loop exists".into(),
            ));
        }
    }
    let theta: Vec<f64> = angles(map);
    ring_winding(&theta, map.nx(), &ring)
}

fn angles(map: &GridMap) -> Vec<f64> {
    let mut theta = vec![0.0; map.nx() * map.ny()];
    for j in 0..map.ny() {
        for i in 0..map.nx() {
            theta[j * map.nx() + i] = map.angle(i, j);
        }
    }
    theta
}

/// Detects singularities of a grid map.
///
/// Every 2x2 plaquette whose four corner nodes are unmasked gets the winding
/// number of its corner loop; nonzero windings are reported at plaquette
/// centres. Connected groups of plaquettes touching masked nodes (holes
/// drilled around singular cores) are enclosed by the smallest unmasked node
/// rectangle and charged with the enclosed winding minus the windings of the
/// active plaquettes inside, so the total reported degree matches the degree
/// of the boundary of the unmasked region.
pub fn detect_singularities(map: &GridMap) -> Result<SingularitySet> {
    let nx = map.nx();
    let ny = map.ny();
    let pnx = nx - 1;
    let pny = ny - 1;
    let theta = angles(map);

    let mut entries = Vec::new();
    // None = plaquette touches a masked node.
    let mut winding: Vec<Option<i32>> = vec![None; pnx * pny];
    for pj in 0..pny {
        for pi in 0..pnx {
            let active = !map.is_masked(pi, pj)
                && !map.is_masked(pi + 1, pj)
                && !map.is_masked(pi + 1, pj + 1)
                && !map.is_masked(pi, pj + 1);
            if !active {
                continue;
            }
            let w = plaquette_winding(&theta, nx, pi, pj)?;
            winding[pj * pnx + pi] = Some(w);
            if w != 0 {
                let c = plaquette_center(map, pi, pj);
                entries.push(Singularity {
                    position: Point::xy(c[0], c[1]),
                    degree: w,
                });
            }
        }
    }

    if map.has_mask() {
        detect_hole_charges(map, &theta, &winding, &mut entries)?;
    }

    Ok(SingularitySet { entries })
}

fn plaquette_center(map: &GridMap, pi: usize, pj: usize) -> [f64; 2] {
    let o = map.origin();
    [
        o[0] + (pi as f64 + 0.5) * map.h(),
        o[1] + (pj as f64 + 0.5) * map.h(),
    ]
}

/// Labels 4-connected components of inactive plaquettes, then encloses each
/// interior component in an expanding rectangle whose node ring is fully
/// unmasked. Components touching the plaquette border belong to the outside
/// of the computational domain and carry no reportable charge.
fn detect_hole_charges(
    map: &GridMap,
    theta: &[f64],
    winding: &[Option<i32>],
    entries: &mut Vec<Singularity>,
) -> Result<()> {
    let pnx = map.nx() - 1;
    let pny = map.ny() - 1;

    let mut label: Vec<usize> = vec![usize::MAX; pnx * pny];
    let mut comps: Vec<Vec<(usize, usize)>> = Vec::new();
    let mut touches_border: Vec<bool> = Vec::new();
    for pj in 0..pny {
        for pi in 0..pnx {
            if winding[pj * pnx + pi].is_some() || label[pj * pnx + pi] != usize::MAX {
                continue;
            }
            let id = comps.len();
            let mut queue = vec![(pi, pj)];
            label[pj * pnx + pi] = id;
            let mut cells = Vec::new();
            let mut border = false;
            while let Some((ci, cj)) = queue.pop() {
                cells.push((ci, cj));
                if ci == 0 || cj == 0 || ci == pnx - 1 || cj == pny - 1 {
                    border = true;
                }
                let mut push = |ni: usize, nj: usize| {
                    if winding[nj * pnx + ni].is_none() && label[nj * pnx + ni] == usize::MAX {
                        label[nj * pnx + ni] = id;
                        queue.push((ni, nj));
                    }
                };
                if ci > 0 {
                    push(ci - 1, cj);
                }
                if ci + 1 < pnx {
                    push(ci + 1, cj);
                }
                if cj > 0 {
                    push(ci, cj - 1);
                }
                if cj + 1 < pny {
                    push(ci, cj + 1);
                }
            }
            comps.push(cells);
            touches_border.push(border);
        }
    }

    let mut absorbed = vec![false; comps.len()];
    for seed in 0..comps.len() {
        if touches_border[seed] || absorbed[seed] {
            continue;
        }
        absorbed[seed] = true;
        let mut merged = vec![seed];
        let bbox = |cells: &[(usize, usize)]| {
            let i0 = cells.iter().map(|c| c.0).min().unwrap();
            let i1 = cells.iter().map(|c| c.0).max().unwrap();
            let j0 = cells.iter().map(|c| c.1).min().unwrap();
            let j1 = cells.iter().map(|c| c.1).max().unwrap();
            (i0, i1, j0, j1)
        };
        let (mut i0, mut i1, mut j0, mut j1) = bbox(&comps[seed]);
        loop {
            // Absorb any other hole overlapping the current rectangle.
            let mut extra: Vec<usize> = Vec::new();
            for pj in j0..=j1 {
                for pi in i0..=i1 {
                    let l = label[pj * pnx + pi];
                    if l != usize::MAX && !absorbed[l] && !extra.contains(&l) {
                        extra.push(l);
                    }
                }
            }
            let changed = !extra.is_empty();
            for l in extra {
                if touches_border[l] {
                    return Err(Error::Unsupported(
                        "masked hole cannot be separated from the domain boundary".into(),
                    ));
                }
                absorbed[l] = true;
                merged.push(l);
                let (a0, a1, b0, b1) = bbox(&comps[l]);
                i0 = i0.min(a0);
                i1 = i1.max(a1);
                j0 = j0.min(b0);
                j1 = j1.max(b1);
            }
            if changed {
                continue;
            }
            let ring = rect_ring(i0, i1, j0, j1);
            if ring.iter().all(|&(i, j)| !map.is_masked(i, j)) {
                break;
            }
            if i0 == 0 || j0 == 0 || i1 + 1 == pnx || j1 + 1 == pny {
                return Err(Error::Unsupported(
                    "masked hole cannot be enclosed by an unmasked node loop".into(),
                ));
            }
            i0 -= 1;
            j0 -= 1;
            i1 += 1;
            j1 += 1;
        }

        let ring = rect_ring(i0, i1, j0, j1);
        let total = ring_winding(theta, map.nx(), &ring)?;
        let mut inside: i64 = 0;
        for pj in j0..=j1 {
            for pi in i0..=i1 {
                if let Some(w) = winding[pj * pnx + pi] {
                    inside += w as i64;
                }
            }
        }
        let hole = total as i64 - inside;
        if hole != 0 {
            // Report at the centroid of the merged hole plaquettes.
            let mut cx = 0.0;
            let mut cy = 0.0;
            let mut count = 0.0;
            for &l in &merged {
                for &(pi, pj) in &comps[l] {
                    let c = plaquette_center(map, pi, pj);
                    cx += c[0];
                    cy += c[1];
                    count += 1.0;
                }
            }
            entries.push(Singularity {
                position: Point::xy(cx / count, cy / count),
                degree: i32::try_from(hole)
                    .map_err(|_| Error::Numerical("hole degree overflow".into()))?,
            });
        }
    }
    Ok(())
}

/// Discrete p-Dirichlet energy `sum_cells h^2 |Du|^p`.
///
/// The gradient is that of the locally unwrapped angle lift: per-edge
/// increments are wrapped to `(-pi, pi]` before differencing, which matches
/// `|Du| = |D(angle)|` for circle-valued maps and avoids O(1/h) component
/// artifacts across vortex cores. Masked cells contribute zero.
pub fn p_energy(map: &GridMap, p: f64) -> Result<f64> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "exponent p = {p} must be finite and >= 1"
        )));
    }
    let theta = angles(map);
    let nx = map.nx();
    let field = |i: usize, j: usize| theta[j * nx + i];
    let sub = |b: f64, a: f64| wrap_angle(b - a);
    let cell = map.h() * map.h();
    let mut acc = NeumaierSum::new();
    for j in 0..map.ny() {
        for i in 0..nx {
            if map.is_masked(i, j) {
                continue;
            }
            let gx = map.derivative(i, j, 0, &field, &sub);
            let gy = map.derivative(i, j, 1, &field, &sub);
            let mag2 = gx * gx + gy * gy;
            if mag2 == 0.0 {
                continue;
            }
            acc.add(cell * mag2.powf(p / 2.0));
        }
    }
    Ok(acc.value())
}
