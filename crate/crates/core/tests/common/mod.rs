#![allow(dead_code)]

use rand::Rng;
use stixelforge::{Calibration, CameraIntrinsics, Extrinsics, GridSpec, Point3, Stixel, StixelType, StixelWorld};

/// A random world whose object Stixels span at least `min_cells` cells once
/// snapped outward, never share a cell with another object in their column,
/// and sit above an optional ground Stixel.
pub fn random_world<R: Rng>(rng: &mut R, grid: GridSpec, min_cells: usize) -> StixelWorld<f64> {
    let s = grid.stride();
    let m = grid.rows();
    let mut stixels = Vec::new();
    for col in 0..grid.cols() as u32 {
        let mut cell = rng.random_range(0..3usize);
        let mut last_end = 0;
        while cell + min_cells <= m && rng.random_bool(0.7) {
            let len = rng.random_range(min_cells..=(m - cell).min(min_cells + 6));
            let (a, b) = (cell, cell + len);
            let v_top = a as u32 * s + rng.random_range(0..s);
            let v_bottom = (b as u32 * s - rng.random_range(0..s)).max(v_top + 1);
            let kind = if rng.random_bool(0.5) {
                StixelType::GroundObject
            } else {
                StixelType::SwibObject
            };
            let d = rng.random_bool(0.8).then(|| rng.random_range(1.0..80.0));
            stixels.push(Stixel::new(col, v_top, v_bottom, kind, d).unwrap());
            last_end = b;
            // touching neighbors are allowed
            cell = b + rng.random_range(0..3usize);
        }
        if last_end < m && rng.random_bool(0.5) {
            let top = last_end as u32 * s;
            stixels.push(Stixel::new(col, top, grid.image_height(), StixelType::Ground, None).unwrap());
        }
    }
    StixelWorld::new(stixels, grid).unwrap()
}

/// Rotation from a random unit quaternion.
pub fn random_rotation<R: Rng>(rng: &mut R) -> [[f64; 3]; 3] {
    let q: [f64; 4] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
    let n = q.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
    let [w, x, y, z] = q.map(|v| v / n);
    [
        [
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - w * z),
            2.0 * (x * z + w * y),
        ],
        [
            2.0 * (x * y + w * z),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - w * x),
        ],
        [
            2.0 * (x * z - w * y),
            2.0 * (y * z + w * x),
            1.0 - 2.0 * (x * x + y * y),
        ],
    ]
}

pub fn random_calibration<R: Rng>(rng: &mut R) -> Calibration<f64> {
    let rot = random_rotation(rng);
    let t = Point3::new(
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
    );
    let (width, height) = (rng.random_range(16..2000), rng.random_range(16..2000));
    Calibration {
        intrinsics: CameraIntrinsics::new(
            rng.random_range(100.0..2000.0),
            rng.random_range(100.0..2000.0),
            rng.random_range(0.0..f64::from(width)),
            rng.random_range(0.0..f64::from(height)),
            width,
            height,
        )
        .unwrap(),
        extrinsics: Extrinsics::new(rot, t).unwrap(),
    }
}

/// Fixed-seed proptest configuration so every run checks the same cases.
pub fn fixed(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        rng_seed: proptest::test_runner::RngSeed::Fixed(0x5717_e1f0),
        failure_persistence: None,
        ..Default::default()
    }
}
