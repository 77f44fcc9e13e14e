//! Analytic test fixtures: vortex product maps with prescribed charges,
//! the radial vortex on a punctured disk, and dyadic source arrays.

use crate::degree::GridMap;
use crate::error::{Error, Result};
use crate::geometry::{validate_config, ChargeConfig, RawCharge};

/// Product map `u = exp(i * sum_k d_k * angle(x - a_k))` sampled on a
/// `grid x grid` node lattice with node `(i, j)` at `origin + (i*h, j*h)`.
///
/// The map is singular only at the charge positions themselves; as long as
/// no node coincides with a charge, every sample is a unit vector.
pub fn vortex_product(
    charges: &[([f64; 2], i32)],
    grid: usize,
    origin: [f64; 2],
    h: f64,
) -> GridMap {
    vortex_product_masked(charges, grid, origin, h, |_| false)
}

/// Same as [`vortex_product`] with a mask predicate over node positions.
pub fn vortex_product_masked(
    charges: &[([f64; 2], i32)],
    grid: usize,
    origin: [f64; 2],
    h: f64,
    masked: impl Fn([f64; 2]) -> bool,
) -> GridMap {
    let mut values = Vec::with_capacity(grid * grid);
    let mut mask = Vec::with_capacity(grid * grid);
    let mut any_masked = false;
    for j in 0..grid {
        for i in 0..grid {
            let x = origin[0] + i as f64 * h;
            let y = origin[1] + j as f64 * h;
            let mut theta = 0.0;
            for &(a, d) in charges {
                theta += d as f64 * (y - a[1]).atan2(x - a[0]);
            }
            values.push([theta.cos(), theta.sin()]);
            let m = masked([x, y]);
            any_masked |= m;
            mask.push(m);
        }
    }
    let mask = if any_masked { Some(mask) } else { None };
    GridMap::new(grid, grid, h, origin, values, mask).expect("analytic fixture is valid")
}

/// Cell-centred grid covering `[-extent, extent]^2`: spacing `2*extent/grid`
/// and first node at `-extent + h/2`. Positions of the form
/// `(k/2) * (4*extent/grid)` with integer `k` land exactly on plaquette
/// centres when `grid` is even.
fn cell_centered(grid: usize, extent: f64) -> ([f64; 2], f64) {
    let h = 2.0 * extent / grid as f64;
    ([-extent + 0.5 * h, -extent + 0.5 * h], h)
}

/// The radial vortex `u = x/|x|` on the disk of radius `radius`, sampled on
/// a cell-centred `grid x grid` lattice, with the core hole `|x| < eps` and
/// the exterior `|x| > radius` masked.
pub fn single_vortex_on(grid: usize, radius: f64, eps: f64) -> GridMap {
    let (origin, h) = cell_centered(grid, radius);
    vortex_product_masked(&[([0.0, 0.0], 1)], grid, origin, h, |p| {
        let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
        r < eps || r > radius
    })
}

/// [`single_vortex_on`] with unit radius.
pub fn single_vortex(grid: usize, eps: f64) -> GridMap {
    single_vortex_on(grid, 1.0, eps)
}

/// Degree +1/-1 vortices at `(-1/2, 0)` and `(1/2, 0)` (unit separation) on
/// `[-4, 4]^2`, unmasked. Both cores sit exactly on plaquette centres when
/// `grid` is a multiple of 16.
pub fn vortex_pair(grid: usize) -> GridMap {
    let (origin, h) = cell_centered(grid, 4.0);
    vortex_product(&[([-0.5, 0.0], 1), ([0.5, 0.0], -1)], grid, origin, h)
}

/// Unit-square configuration on `[-2, 2]^2`: +1 at two opposite corners of
/// the square with vertices `(+-1/2, +-1/2)`, -1 at the other two. Corners
/// sit on plaquette centres when `grid` is a multiple of 8.
pub fn vortex_square(grid: usize) -> GridMap {
    let (origin, h) = cell_centered(grid, 2.0);
    vortex_product(
        &[
            ([-0.5, -0.5], 1),
            ([0.5, 0.5], 1),
            ([0.5, -0.5], -1),
            ([-0.5, 0.5], -1),
        ],
        grid,
        origin,
        h,
    )
}

/// The constant map `u = (1, 0)` on `[-1, 1]^2`.
pub fn constant_map(grid: usize) -> GridMap {
    let (origin, h) = cell_centered(grid, 1.0);
    let values = vec![[1.0, 0.0]; grid * grid];
    GridMap::new(grid, grid, h, origin, values, None).expect("constant map is valid")
}

/// Dyadic source array: `2^(m*n)` unit charges on the half-integer lattice
/// scaled by `h`, plus the balancing sink of degree `-2^(m*n)` at the
/// centre.
pub fn dyadic_array_config(m: u32, n: u32, h: f64) -> Result<ChargeConfig> {
    if m == 0 || m > 8 {
        return Err(Error::InvalidParameter(format!(
            "dimension m = {m} outside 1..=8"
        )));
    }
    if n == 0 {
        return Err(Error::InvalidParameter(
            "n = 0 puts the single source on the sink".into(),
        ));
    }
    if m * n > 20 {
        return Err(Error::Unsupported(format!(
            "dyadic array with 2^{} sources is too large",
            m * n
        )));
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "spacing h = {h} must be positive"
        )));
    }
    let side = 1usize << n;
    let half = (side / 2) as f64;
    let count = 1usize << (m * n);
    let mut raw = Vec::with_capacity(count + 1);
    for flat in 0..count {
        let mut pos = Vec::with_capacity(m as usize);
        let mut rest = flat;
        for _ in 0..m {
            let t = rest % side;
            rest /= side;
            pos.push((t as f64 + 0.5 - half) * h);
        }
        raw.push(RawCharge { pos, deg: 1 });
    }
    raw.push(RawCharge {
        pos: vec![0.0; m as usize],
        deg: -(count as i32),
    });
    validate_config(&raw)
}
