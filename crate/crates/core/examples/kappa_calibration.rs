//! Calibration of the dual-functional normalization constant.
//!
//! For the two-vortex product map with charges +1 at a and -1 at b, strong
//! duality gives `sum phi(a_i) d_i = |a - b|` at the optimal potential, so
//! the ratio `int (u ^ Du) ^ D(phi) / sum phi(a_i) d_i` measures the
//! constant kappa relating the grid functional to the site sum. This
//! prints the measured ratio across resolutions and domain sizes; the
//! frozen constant `DUAL_NORMALIZATION = 2 pi` must sit within a few
//! percent of the finest measurement.
//!
//! Run with: `cargo run --release --example kappa_calibration`

use std::f64::consts::TAU;

use topoflow::degree::GridMap;
use topoflow::duality::{dual_functional, kantorovich_dual, LipschitzField, DUAL_NORMALIZATION};
use topoflow::fixtures;
use topoflow::geometry::config_from_parts;

fn pair_map(grid: usize, extent: f64) -> GridMap {
    let h = 2.0 * extent / grid as f64;
    let origin = [-extent + 0.5 * h, -extent + 0.5 * h];
    fixtures::vortex_product(&[([-0.5, 0.0], 1), ([0.5, 0.0], -1)], grid, origin, h)
}

fn main() {
    let config =
        config_from_parts(&[(vec![-0.5, 0.0], 1), (vec![0.5, 0.0], -1)]).expect("pair config");
    let (dual_value, potential) = kantorovich_dual(&config).expect("dual solve");
    let field = LipschitzField::new(config, potential).expect("feasible potential");

    println!("dual value sum phi(a_i) d_i = {dual_value}");
    println!("frozen DUAL_NORMALIZATION  = {DUAL_NORMALIZATION}");
    println!();
    println!("unsaturated extension (boundary term decays like 1/extent):");
    println!(
        "{:>6} {:>8} {:>14} {:>12} {:>10}",
        "grid", "extent", "integral", "kappa", "vs 2pi"
    );
    for &(grid, extent) in &[
        (256usize, 2.0f64),
        (256, 4.0),
        (512, 2.0),
        (512, 4.0),
        (512, 6.0),
        (512, 8.0),
        (1024, 4.0),
        (1024, 8.0),
    ] {
        let map = pair_map(grid, extent);
        let phi = field.eval_grid(&map).expect("grid sampling");
        let integral = dual_functional(&map, &phi).expect("functional");
        let kappa = integral / dual_value;
        let rel = (kappa - TAU) / TAU;
        println!(
            "{grid:>6} {extent:>8.1} {integral:>14.8} {kappa:>12.8} {:>9.3}%",
            100.0 * rel
        );
    }

    println!();
    println!("saturated extension (gradient compactly supported, no boundary term):");
    println!(
        "{:>6} {:>8} {:>14} {:>12} {:>10}",
        "grid", "extent", "integral", "kappa", "vs 2pi"
    );
    let cap = 1.5 * field.site_diameter();
    for &(grid, extent) in &[
        (128usize, 4.0f64),
        (256, 4.0),
        (512, 4.0),
        (1024, 4.0),
        (512, 8.0),
    ] {
        let map = pair_map(grid, extent);
        let phi = field.eval_grid_saturated(&map, cap).expect("grid sampling");
        let integral = dual_functional(&map, &phi).expect("functional");
        let kappa = integral / dual_value;
        let rel = (kappa - TAU) / TAU;
        println!(
            "{grid:>6} {extent:>8.1} {integral:>14.8} {kappa:>12.8} {:>9.3}%",
            100.0 * rel
        );
    }

    // The clipped-coordinate cross-check: phi = clamp(x, -c, c) is
    // 1-Lipschitz with compact-in-x gradient, and sum phi(a_i) d_i = -1.
    println!();
    println!("clipped first-coordinate potential, expected integral = -kappa:");
    println!(
        "{:>6} {:>8} {:>8} {:>14} {:>10}",
        "nx", "ny", "clip", "integral", "vs -2pi"
    );
    for &(nx, ny, extent_x, extent_y, clip) in &[
        (128usize, 512usize, 2.0f64, 8.0f64, 0.6f64),
        (128, 1024, 2.0, 16.0, 0.6),
        (128, 1536, 2.0, 24.0, 0.6),
        (256, 3072, 2.0, 24.0, 0.6),
    ] {
        let h = 2.0 * extent_x / nx as f64;
        debug_assert!((2.0 * extent_y / ny as f64 - h).abs() < 1e-12);
        let origin = [-extent_x + 0.5 * h, -extent_y + 0.5 * h];
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let x = origin[0] + i as f64 * h;
                let y = origin[1] + j as f64 * h;
                let theta = (y - 0.0).atan2(x + 0.5) - (y - 0.0).atan2(x - 0.5);
                values.push([theta.cos(), theta.sin()]);
            }
        }
        let map = GridMap::new(nx, ny, h, origin, values, None).expect("pair map");
        let phi: Vec<f64> = (0..ny)
            .flat_map(|j| (0..nx).map(move |i| (i, j)))
            .map(|(i, _)| (origin[0] + i as f64 * h).clamp(-clip, clip))
            .collect();
        let integral = dual_functional(&map, &phi).expect("functional");
        let rel = (integral - (-TAU)) / TAU;
        println!(
            "{nx:>6} {ny:>8} {clip:>8.2} {integral:>14.8} {:>9.3}%",
            100.0 * rel
        );
    }
}
