//! Codec, loss and metric properties.

mod common;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stixelforge::codec::{decode_heatmaps, encode_targets, normalize_heatmaps, quantize_world, DecodeConfig};
use stixelforge::loss::{bce_loss, loss_gradient, sum_loss, total_loss, LossWeights, PredictionPair, EPS_CLAMP};
use stixelforge::metrics::{bottom_contact_per_column, freespace_score, match_counts, pr_sweep, stixel_iou};
use stixelforge::{Grid, GridSpec, HeatmapPair, Stixel, StixelType, StixelWorld, TargetGrid};

fn grid_of(rng: &mut ChaCha8Rng) -> GridSpec {
    GridSpec::from_cells(rng.random_range(4..30), rng.random_range(1..20), rng.random_range(1..9)).unwrap()
}

fn noisy_maps(rng: &mut ChaCha8Rng, grid: GridSpec) -> HeatmapPair<f64> {
    let mut map = || {
        Grid::from_vec(
            grid.rows(),
            grid.cols(),
            (0..grid.rows() * grid.cols()).map(|_| rng.random()).collect(),
        )
        .unwrap()
    };
    HeatmapPair::new(map(), map(), grid).unwrap()
}

fn occupied(w: &StixelWorld<f64>) -> Vec<(u32, usize)> {
    let s = w.stixel_width();
    let mut cells: Vec<(u32, usize)> = w
        .objects()
        .flat_map(|st| ((st.v_top() / s) as usize..st.v_bottom().div_ceil(s) as usize).map(move |r| (st.column(), r)))
        .collect();
    cells.sort_unstable();
    cells
}

proptest! {
    #![proptest_config(common::fixed(300))]

    #[test]
    fn codec_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = grid_of(&mut rng);
        let w = common::random_world(&mut rng, grid, 3);
        let hm: HeatmapPair<f64> = encode_targets(&w, &grid).unwrap().to_heatmaps();
        let back = decode_heatmaps(&hm, &DecodeConfig::default()).unwrap();
        prop_assert_eq!(&back, &quantize_world(&w).unwrap());
        // every original boundary is within one cell of its decoded one
        for (a, b) in w.objects().zip(back.stixels()) {
            prop_assert!(a.v_top() - b.v_top() < grid.stride() && b.v_bottom() - a.v_bottom() < grid.stride());
        }
    }

    #[test]
    fn raising_the_occupancy_threshold_never_grows_runs(seed in any::<u64>(), lo in 0.0f64..1.0, hi in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = grid_of(&mut rng);
        let hm = noisy_maps(&mut rng, grid);
        let (lo, hi) = (lo.min(hi), lo.max(hi));
        let low = decode_heatmaps(&hm, &DecodeConfig { t_occ: lo, ..DecodeConfig::default() }).unwrap();
        let high = decode_heatmaps(&hm, &DecodeConfig { t_occ: hi, ..DecodeConfig::default() }).unwrap();
        let low_cells = occupied(&low);
        prop_assert!(occupied(&high).iter().all(|c| low_cells.binary_search(c).is_ok()));
        // decoded worlds are valid by construction; rebuilding must succeed
        prop_assert!(StixelWorld::new(high.stixels().to_vec(), grid).is_ok());
    }

    #[test]
    fn normalized_maps_span_unit_interval(seed in any::<u64>(), scale in 0.001f64..1e6, shift in -1e3f64..1e3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = grid_of(&mut rng);
        let raw = noisy_maps(&mut rng, grid);
        let occ = raw.occ().map(|v| v * scale + shift);
        let cut = raw.cut().map(|v| v * scale - shift);
        let hm = normalize_heatmaps(&occ, &cut, &grid).unwrap();
        for (m, src) in [(hm.occ(), &occ), (hm.cut(), &cut)] {
            let lo = m.as_slice().iter().copied().fold(f64::INFINITY, f64::min);
            let hi = m.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo >= 0.0 && hi <= 1.0);
            if src.as_slice().windows(2).any(|w| w[0] != w[1]) {
                prop_assert!(lo == 0.0 && hi == 1.0);
            } else {
                prop_assert!(hi == 0.0);
            }
        }
    }

    #[test]
    fn bce_is_nonnegative_and_minimal_at_the_target(seed in any::<u64>(), n in 1usize..64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let y = Grid::from_vec(1, n, (0..n).map(|_| rng.random_range(0..2u8)).collect()).unwrap();
        let p = Grid::from_vec(1, n, (0..n).map(|_| rng.random_range(-0.5..1.5)).collect()).unwrap();
        let l = bce_loss(&y, &p).unwrap();
        prop_assert!(l >= 0.0);
        let perfect = y.map(f64::from);
        prop_assert!(bce_loss(&y, &perfect).unwrap() <= l);
        prop_assert!(bce_loss(&y, &perfect).unwrap() <= -(1.0 - EPS_CLAMP).ln() + 1e-15);
        // element order does not matter
        let mut idx: Vec<usize> = (0..n).collect();
        idx.reverse();
        idx.rotate_left(rng.random_range(0..n));
        let yp = Grid::from_vec(1, n, idx.iter().map(|&i| y.as_slice()[i]).collect()).unwrap();
        let pp = Grid::from_vec(1, n, idx.iter().map(|&i| p.as_slice()[i]).collect()).unwrap();
        prop_assert!((bce_loss(&yp, &pp).unwrap() - l).abs() <= 1e-12 * l.max(1.0));
    }

    #[test]
    fn mass_term_is_linear(seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (r, c) = (rng.random_range(1..10), rng.random_range(1..10));
        let mut g = || Grid::from_vec(r, c, (0..r * c).map(|_| rng.random::<f64>()).collect::<Vec<f64>>()).unwrap();
        let (x, y) = (g(), g());
        let mix = Grid::from_vec(r, c, x.as_slice().iter().zip(y.as_slice()).map(|(p, q)| a * p + b * q).collect()).unwrap();
        let lhs = sum_loss(&mix).unwrap();
        let rhs = a * sum_loss(&x).unwrap() + b * sum_loss(&y).unwrap();
        prop_assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_differences_for_any_weights(
        seed in any::<u64>(), alpha in 0.0f64..3.0, beta in 0.0f64..3.0, gamma in 0.0f64..3.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = GridSpec::from_cells(4, 4, 1).unwrap();
        let cut = Grid::from_vec(4, 4, (0..16).map(|_| rng.random_range(0..2u8)).collect()).unwrap();
        let occ = Grid::from_vec(4, 4, cut.as_slice().iter().map(|&c| c | rng.random_range(0..2u8)).collect()).unwrap();
        let target = TargetGrid::new(occ, cut, grid).unwrap();
        let w = LossWeights::new(alpha, beta, gamma).unwrap();
        let po: Vec<f64> = (0..16).map(|_| rng.random_range(0.05..0.95)).collect();
        let pc: Vec<f64> = (0..16).map(|_| rng.random_range(0.05..0.95)).collect();
        let eval = |o: &[f64], c: &[f64]| {
            let pair = PredictionPair::new(target.clone(), Grid::from_vec(4, 4, o.to_vec()).unwrap(), Grid::from_vec(4, 4, c.to_vec()).unwrap()).unwrap();
            total_loss(&pair, &w).unwrap()
        };
        let pair = PredictionPair::new(target.clone(), Grid::from_vec(4, 4, po.clone()).unwrap(), Grid::from_vec(4, 4, pc.clone()).unwrap()).unwrap();
        let (go, gc) = loss_gradient(&pair, &w).unwrap();
        let h = 1e-6;
        for k in 0..16 {
            let (mut a, mut b) = (po.clone(), po.clone());
            a[k] += h;
            b[k] -= h;
            let num = (eval(&a, &pc) - eval(&b, &pc)) / (2.0 * h);
            prop_assert!((num - go.as_slice()[k]).abs() <= 1e-7 * (1.0 + num.abs()));
            let (mut a, mut b) = (pc.clone(), pc.clone());
            a[k] += h;
            b[k] -= h;
            let num = (eval(&po, &a) - eval(&po, &b)) / (2.0 * h);
            prop_assert!((num - gc.as_slice()[k]).abs() <= 1e-7 * (1.0 + num.abs()));
        }
    }

    #[test]
    fn iou_is_symmetric_bounded_and_exact_on_identity(t1 in 0u32..300, h1 in 1u32..100, t2 in 0u32..300, h2 in 1u32..100) {
        let a = Stixel::<f64>::new(0, t1, t1 + h1, StixelType::GroundObject, None).unwrap();
        let b = Stixel::<f64>::new(0, t2, t2 + h2, StixelType::SwibObject, Some(3.0)).unwrap();
        let ab = stixel_iou(&a, &b).unwrap();
        prop_assert_eq!(ab, stixel_iou(&b, &a).unwrap());
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert_eq!(ab == 1.0, (t1, h1) == (t2, h2));
    }

    #[test]
    fn match_counts_balance(seed in any::<u64>(), iou_min in 0.05f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = grid_of(&mut rng);
        let gt = common::random_world(&mut rng, grid, 1);
        let pred = common::random_world(&mut rng, grid, 1);
        let c = match_counts(&gt, &pred, iou_min).unwrap();
        prop_assert_eq!(c.true_positives + c.false_negatives, gt.objects().count());
        prop_assert_eq!(c.true_positives + c.false_positives, pred.objects().count());
    }

    #[test]
    fn stepping_predictions_toward_truth_never_hurts(seed in any::<u64>(), h in 1u32..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..50);
        let gt: Vec<Option<u32>> = (0..n).map(|_| rng.random_bool(0.8).then(|| rng.random_range(0..=h))).collect();
        let pred: Vec<Option<u32>> = (0..n).map(|_| rng.random_bool(0.9).then(|| rng.random_range(0..=h))).collect();
        let stepped: Vec<Option<u32>> = gt
            .iter()
            .zip(&pred)
            .map(|(g, p)| match (g, p) {
                (Some(g), Some(p)) if p > g => Some(p - 1),
                (Some(g), Some(p)) if p < g => Some(p + 1),
                _ => *p,
            })
            .collect();
        let before = freespace_score(&gt, &pred, h).unwrap();
        let after = freespace_score(&gt, &stepped, h).unwrap();
        prop_assert!(after.score >= before.score - 1e-12);
        prop_assert!((0.0..=100.0).contains(&before.score));
    }

    #[test]
    fn perfect_maps_sweep_perfectly(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = grid_of(&mut rng);
        let worlds: Vec<StixelWorld<f64>> = (0..3).map(|_| common::random_world(&mut rng, grid, 3)).collect();
        let maps: Vec<HeatmapPair<f64>> = worlds.iter().map(|w| encode_targets(w, &grid).unwrap().to_heatmaps()).collect();
        let gts: Vec<StixelWorld<f64>> = worlds.iter().map(|w| quantize_world(w).unwrap()).collect();
        let ts: Vec<f64> = (1..20).map(|i| f64::from(i) / 20.0).collect();
        for p in pr_sweep(&gts, &maps, &ts, &DecodeConfig::default(), 0.5).unwrap() {
            if gts.iter().any(|g| !g.is_empty()) {
                prop_assert_eq!((p.micro.precision, p.micro.recall), (1.0, 1.0));
            }
        }
    }
}

#[test]
fn contacts_take_the_lowest_object_bottom() {
    let grid = GridSpec::new(24, 320, 8).unwrap();
    let st = |c, t, b, k| Stixel::<f64>::new(c, t, b, k, None).unwrap();
    let w = StixelWorld::new(
        vec![
            st(0, 50, 100, StixelType::SwibObject),
            st(0, 150, 300, StixelType::GroundObject),
            st(2, 300, 320, StixelType::Ground),
        ],
        grid,
    )
    .unwrap();
    let c = bottom_contact_per_column(&w);
    assert_eq!(c.len(), 24);
    assert!(c[..8].iter().all(|&v| v == Some(300)));
    assert!(c[8..].iter().all(Option::is_none));
}

#[test]
fn loss_rejects_bad_inputs() {
    let grid = GridSpec::from_cells(2, 2, 1).unwrap();
    let t = TargetGrid::new(Grid::filled(2, 2, 1), Grid::filled(2, 2, 0), grid).unwrap();
    assert!(PredictionPair::new(t.clone(), Grid::filled(2, 2, f64::NAN), Grid::filled(2, 2, 0.5)).is_err());
    assert!(PredictionPair::new(t, Grid::filled(2, 1, 0.5), Grid::filled(2, 2, 0.5)).is_err());
    assert!(LossWeights::new(1.0, -0.1, 1.0).is_err());
}
