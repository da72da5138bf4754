//! Temporary diagnostics; delete before shipping.

use btfuzz_core::frenet::{
    unproject, QuarticSegment, QuinticSegment, ReferencePath, TrajectoryPoint,
};
use btfuzz_core::geom::Vec2;
use btfuzz_core::log2bt::{abstract_log, compression_ratio, reconstruction_error, Log2BtConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy)]
enum Piece {
    Hold { dur: f64 },
    Ramp { dur: f64, to: f64 },
    Shift { dur: f64, to: f64 },
}

struct PlannedPiece {
    start_t: f64,
    dur: f64,
    lon: QuarticSegment,
    lat: QuinticSegment,
}

fn plan_pieces(s0: f64, v0: f64, d0: f64, pieces: &[Piece]) -> Vec<PlannedPiece> {
    let (mut t, mut s, mut v, mut d) = (0.0, s0, v0, d0);
    let mut out = Vec::with_capacity(pieces.len());
    for p in pieces {
        let (dur, v_end, d_end) = match *p {
            Piece::Hold { dur } => (dur, v, d),
            Piece::Ramp { dur, to } => (dur, to, d),
            Piece::Shift { dur, to } => (dur, v, to),
        };
        let lon = QuarticSegment::velocity_keeping(s, v, 0.0, v_end, 0.0, dur).unwrap();
        let lat = QuinticSegment::boundary(d, 0.0, 0.0, d_end, 0.0, 0.0, dur).unwrap();
        s = lon.value(dur);
        v = v_end;
        d = d_end;
        out.push(PlannedPiece { start_t: t, dur, lon, lat });
        t += dur;
    }
    out
}

fn sample_log(path: &ReferencePath, plan: &[PlannedPiece], hz: f64) -> Vec<TrajectoryPoint> {
    let total: f64 = plan.last().map(|p| p.start_t + p.dur).unwrap_or(0.0);
    let n = (total * hz).round() as usize;
    let mut points = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let t = k as f64 / hz;
        let seg = plan.iter().rev().find(|p| t >= p.start_t - 1e-9).unwrap();
        let tau = (t - seg.start_t).min(seg.dur);
        let s = seg.lon.value(tau);
        let d = seg.lat.value(tau);
        let xy = unproject(s, d, path).unwrap();
        points.push(TrajectoryPoint { t, x: xy.x, y: xy.y, z: 0.0 });
    }
    points
}

fn straight_path() -> ReferencePath {
    ReferencePath::new(vec![Vec2::new(0.0, 0.0), Vec2::new(2000.0, 0.0)])
        .unwrap()
        .with_max_lateral(6.0)
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(1e-12);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

#[test]
fn probe_clean() {
    use Piece::*;
    let path = straight_path();
    let cases: Vec<(&str, f64, Vec<Piece>)> = vec![
        ("hold", 15.0, vec![Hold { dur: 8.0 }]),
        ("hold-ramp-hold", 15.0, vec![Hold { dur: 6.0 }, Ramp { dur: 6.0, to: 21.0 }, Hold { dur: 6.0 }]),
        ("hold-shift-hold", 20.0, vec![Hold { dur: 5.0 }, Shift { dur: 5.0, to: 3.5 }, Hold { dur: 6.0 }]),
        (
            "ramp-hold-shift-ramp",
            18.0,
            vec![
                Ramp { dur: 8.0, to: 12.0 },
                Hold { dur: 5.0 },
                Shift { dur: 6.0, to: -3.5 },
                Ramp { dur: 6.0, to: 16.0 },
            ],
        ),
        ("shift", 22.0, vec![Shift { dur: 7.0, to: 3.5 }]),
        ("hold-ramp", 10.0, vec![Hold { dur: 4.0 }, Ramp { dur: 5.0, to: 14.0 }]),
    ];
    let cfg = Log2BtConfig::default();
    for (name, v0, pieces) in &cases {
        let plan = plan_pieces(10.0, *v0, 0.0, pieces);
        let true_bounds: Vec<usize> =
            plan.iter().map(|p| ((p.start_t + p.dur) * 10.0).round() as usize).collect();
        let log = sample_log(&path, &plan, 10.0);
        let a = abstract_log(&log, &path, &cfg).unwrap();
        let fid = reconstruction_error(&log, &a, &cfg_path(&path)).unwrap();
        println!(
            "{name}: true junctions {true_bounds:?} found {:?} ade_s {:.2e} ade_l {:.2e}",
            a.boundaries, fid.ade_s, fid.ade_l
        );
        let doc = a.to_canonical_json();
        println!("  tree {} B", doc.len());
    }
}

fn cfg_path(p: &ReferencePath) -> &ReferencePath {
    p
}

#[test]
fn probe_minute() {
    use Piece::*;
    let path = ReferencePath::new(vec![
        Vec2::new(337_415.27, 4_532_881.44),
        Vec2::new(339_415.27, 4_532_881.44),
    ])
    .unwrap()
    .with_max_lateral(6.0);
    let cases: Vec<(&str, f64, f64, Vec<Piece>)> = vec![
        (
            "hold-ramp-hold",
            19.7312907,
            0.3127,
            vec![Hold { dur: 21.7 }, Ramp { dur: 8.4, to: 23.4160881 }, Hold { dur: 29.9 }],
        ),
        (
            "hold-shift-hold",
            21.0841334,
            -0.2286,
            vec![Hold { dur: 24.6 }, Shift { dur: 6.2, to: 3.5 }, Hold { dur: 29.2 }],
        ),
        (
            "ramp-hold-shift",
            14.8812633,
            0.1409,
            vec![
                Ramp { dur: 10.3, to: 20.3391866 },
                Hold { dur: 39.5 },
                Shift { dur: 10.2, to: -3.5 },
            ],
        ),
    ];
    let cfg = Log2BtConfig::default();
    for (i, (name, v0, d0, pieces)) in cases.iter().enumerate() {
        let plan = plan_pieces(137.41, *v0, *d0, pieces);
        let log = sample_log(&path, &plan, 10.0);
        let a = abstract_log(&log, &path, &cfg).unwrap();
        let doc = a.to_canonical_json();
        let ratio = compression_ratio(&log, &a);
        println!("{name}: ratio {ratio:.1} tree {} B", doc.len());
        if i == 0 {
            println!("JSON: {doc}");
        }
    }
}

#[test]
fn probe_noisy_sweep() {
    let path = straight_path();
    for (eps_part, window, degree, refine) in [
        (40.0, 19, 2, false),
        (40.0, 23, 2, false),
        (40.0, 27, 2, false),
        (80.0, 19, 2, false),
        (80.0, 23, 2, false),
        (80.0, 27, 2, false),
        (80.0, 19, 3, false),
        (80.0, 23, 3, false),
        (80.0, 19, 2, true),
        (80.0, 23, 2, true),
        (80.0, 27, 2, true),
        (120.0, 19, 2, true),
        (120.0, 23, 2, true),
    ] {
        {
            let cfg = Log2BtConfig {
                window,
                degree,
                eps_part,
                refine,
                ..Log2BtConfig::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(20_240_811);
            let (mut sum_s, mut sum_l, mut segs) = (0.0, 0.0, 0usize);
            let count = 25usize;
            for _ in 0..count {
                let v0 = rng.gen_range(10.0..22.0);
                let pieces = random_pieces(&mut rng, v0);
                let plan = plan_pieces(10.0, v0, 0.0, &pieces);
                let mut log = sample_log(&path, &plan, 10.0);
                for p in log.iter_mut() {
                    p.x += 0.1 * gauss(&mut rng);
                    p.y += 0.1 * gauss(&mut rng);
                }
                let a = abstract_log(&log, &path, &cfg).unwrap();
                let fid = reconstruction_error(&log, &a, &path).unwrap();
                sum_s += fid.ade_s;
                sum_l += fid.ade_l;
                segs += a.boundaries.len() - 1;
            }
            println!(
                "eps {eps_part:>4} window {window:>2} deg {degree} refine {refine}: ade_s {:.3} ade_l {:.3} segs/log {:.1}",
                sum_s / count as f64,
                sum_l / count as f64,
                segs as f64 / count as f64
            );
        }
    }
}

fn random_pieces(rng: &mut ChaCha8Rng, v0: f64) -> Vec<Piece> {
    let n = rng.gen_range(2..=4usize);
    let mut pieces = Vec::with_capacity(n);
    let mut v = v0;
    let mut d = 0.0f64;
    for j in 0..n {
        if j % 2 == 0 {
            pieces.push(Piece::Hold { dur: rng.gen_range(4.0..8.0) });
        } else if rng.gen_bool(0.5) {
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let to = (v + sign * rng.gen_range(3.0..6.0)).clamp(8.0, 26.0);
            pieces.push(Piece::Ramp { dur: rng.gen_range(5.0..9.0), to });
            v = to;
        } else {
            let to = if d == 0.0 {
                if rng.gen_bool(0.5) { 3.5 } else { -3.5 }
            } else {
                0.0
            };
            pieces.push(Piece::Shift { dur: rng.gen_range(4.0..7.0), to });
            d = to;
        }
    }
    pieces
}

#[test]
fn probe_noisy_per_log() {
    use btfuzz_core::bt::{BehaviorNode, LeafBehavior, NodeKind};
    let path = straight_path();
    for refine in [false, true] {
        let cfg = Log2BtConfig {
            window: 15,
            degree: 2,
            eps_part: 80.0,
            refine,
            ..Log2BtConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(20_240_811);
        let count = 50usize;
        let mut rows = Vec::new();
        for i in 0..count {
            let v0 = rng.gen_range(10.0..22.0);
            let pieces = random_pieces(&mut rng, v0);
            let n_shift = pieces.iter().filter(|p| matches!(p, Piece::Shift { .. })).count();
            let plan = plan_pieces(10.0, v0, 0.0, &pieces);
            let mut log = sample_log(&path, &plan, 10.0);
            for p in log.iter_mut() {
                p.x += 0.1 * gauss(&mut rng);
                p.y += 0.1 * gauss(&mut rng);
            }
            let a = abstract_log(&log, &path, &cfg).unwrap();
            let fid = reconstruction_error(&log, &a, &path).unwrap();
            let mut kinds = String::new();
            fn walk(n: &BehaviorNode, out: &mut String) {
                match &n.kind {
                    NodeKind::Leaf(l) => out.push(match l {
                        LeafBehavior::Cruise { .. } => 'C',
                        LeafBehavior::ChangeLane { .. } => 'L',
                        LeafBehavior::FollowLog { .. } => 'F',
                        _ => '?',
                    }),
                    NodeKind::Composite { children, .. } => {
                        for c in children {
                            walk(c, out);
                        }
                    }
                }
            }
            walk(&a.tree.root, &mut kinds);
            rows.push((i, pieces.len(), n_shift, kinds, fid.ade_s, fid.ade_l));
        }
        rows.sort_by(|a, b| b.5.partial_cmp(&a.5).unwrap());
        println!("--- refine {refine}: worst 10 by ade_l ---");
        for (i, np, ns, kinds, ade_s, ade_l) in rows.iter().take(10) {
            println!(
                "log {i:>2}: pieces {np} shifts {ns} tree {kinds:<6} ade_s {ade_s:.3} ade_l {ade_l:.3}"
            );
        }
        let mean_l: f64 = rows.iter().map(|r| r.5).sum::<f64>() / count as f64;
        let mean_s: f64 = rows.iter().map(|r| r.4).sum::<f64>() / count as f64;
        println!("mean over {count}: ade_s {mean_s:.3} ade_l {mean_l:.3}");
    }
}

#[test]
fn probe_ls_landscape() {
    use nalgebra::{DMatrix, DVector};
    fn ls_resid(times: &[f64], values: &[f64], l: usize, r: usize, dim: usize) -> f64 {
        let n = r - l + 1;
        let dim = dim.min(n);
        let t0 = (times[l] + times[r]) * 0.5;
        let scale = ((times[r] - times[l]) * 0.5).max(1e-9);
        let mut a = DMatrix::zeros(n, dim);
        let mut y = DVector::zeros(n);
        for (row, k) in (l..=r).enumerate() {
            let tau = (times[k] - t0) / scale;
            let mut pw = 1.0;
            for col in 0..dim {
                a[(row, col)] = pw;
                pw *= tau;
            }
            y[row] = values[k];
        }
        let svd = a.clone().svd(true, true);
        let c = svd.solve(&y, 1e-12).unwrap();
        (&y - &(a * c)).norm_squared()
    }
    let path = straight_path();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_811);
    for i in 0..=13usize {
        let v0 = rng.gen_range(10.0..22.0);
        let pieces = random_pieces(&mut rng, v0);
        let plan = plan_pieces(10.0, v0, 0.0, &pieces);
        let clean = sample_log(&path, &plan, 10.0);
        let mut noisy = clean.clone();
        for p in noisy.iter_mut() {
            p.x += 0.1 * gauss(&mut rng);
            p.y += 0.1 * gauss(&mut rng);
        }
        if i != 13 {
            continue;
        }
        // True junctions at samples 43 and 110 of 157; probe boundary 1
        // with boundary 2 pinned at its true spot. The path runs along +x
        // from the origin, so the raw series is s = x, d = +/- y.
        for (label, log) in [("clean", &clean), ("noisy", &noisy)] {
            let times: Vec<f64> = log.iter().map(|p| p.t).collect();
            let s: Vec<f64> = log.iter().map(|p| p.x).collect();
            let d: Vec<f64> = log.iter().map(|p| p.y).collect();
            println!("--- {label} log 13 split sweep (true 43):");
            for c in [23usize, 33, 38, 41, 43, 45, 48, 53, 63, 73, 83, 93] {
                let lon = ls_resid(&times, &s, 0, c, 5) + ls_resid(&times, &s, c, 110, 5);
                let lat = ls_resid(&times, &d, 0, c, 6) + ls_resid(&times, &d, c, 110, 6);
                println!("  c {c:>3}: lon {lon:>12.6} lat {lat:>12.6} total {:>12.6}", lon + lat);
            }
        }
    }
}

#[test]
fn probe_bad_log() {
    let path = straight_path();
    let cfg = Log2BtConfig {
        window: 15,
        degree: 2,
        eps_part: 80.0,
        refine: false,
        ..Log2BtConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_811);
    for i in 0..50usize {
        let v0 = rng.gen_range(10.0..22.0);
        let pieces = random_pieces(&mut rng, v0);
        let plan = plan_pieces(10.0, v0, 0.0, &pieces);
        let mut log = sample_log(&path, &plan, 10.0);
        for p in log.iter_mut() {
            p.x += 0.1 * gauss(&mut rng);
            p.y += 0.1 * gauss(&mut rng);
        }
        if i != 13 && i != 44 && i != 0 {
            continue;
        }
        let a = abstract_log(&log, &path, &cfg).unwrap();
        let fid = reconstruction_error(&log, &a, &path).unwrap();
        let true_bounds: Vec<f64> = plan.iter().map(|p| p.start_t + p.dur).collect();
        println!("--- log {i}: ade_s {:.3} ade_l {:.3}", fid.ade_s, fid.ade_l);
        let desc: Vec<String> = pieces
            .iter()
            .map(|p| match *p {
                Piece::Hold { dur } => format!("Hold {dur:.1}"),
                Piece::Ramp { dur, to } => format!("Ramp {dur:.1}->{to:.1}"),
                Piece::Shift { dur, to } => format!("Shift {dur:.1}->{to:.1}"),
            })
            .collect();
        println!("pieces: {desc:?} junctions {true_bounds:?}");
        println!("bounds found: {:?}", a.boundaries);
        println!("tree: {}", a.to_canonical_json());
    }
}

#[test]
fn probe_split_landscape() {
    use btfuzz_core::frenet::{partition_cost, plan_segment};
    use btfuzz_core::log2bt::estimate_states;
    let path = straight_path();
    let cfg = Log2BtConfig {
        window: 15,
        degree: 2,
        eps_part: 80.0,
        refine: false,
        ..Log2BtConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_811);
    for i in 0..=13usize {
        let v0 = rng.gen_range(10.0..22.0);
        let pieces = random_pieces(&mut rng, v0);
        let plan = plan_pieces(10.0, v0, 0.0, &pieces);
        let mut log = sample_log(&path, &plan, 10.0);
        for p in log.iter_mut() {
            p.x += 0.1 * gauss(&mut rng);
            p.y += 0.1 * gauss(&mut rng);
        }
        if i != 13 {
            continue;
        }
        // True junctions at samples 43 and 110; found bounds [0, 73, 109, 157].
        for c in [33usize, 38, 41, 43, 45, 48, 53, 58, 63, 68, 71, 73, 75, 80] {
            let bounds = vec![0usize, c, 109, 157];
            let states = estimate_states(&log, &path, &cfg, Some(&bounds)).unwrap();
            let left = plan_segment(&states[0], &states[c]).unwrap();
            let right = plan_segment(&states[c], &states[109]).unwrap();
            let cost = partition_cost(&states[..=c], &left, &cfg.weights)
                + partition_cost(&states[c..=109], &right, &cfg.weights);
            let st = &states[c];
            println!(
                "c {c:>3}: cost {cost:>10.4} d {:+.3} d_dot {:+.3}",
                st.d, st.d_dot
            );
        }
    }
}

#[test]
fn probe_minute_noisy() {
    use Piece::*;
    let path = straight_path();
    let cases: Vec<(&str, f64, Vec<Piece>)> = vec![
        ("hold-ramp-hold", 18.0, vec![Hold { dur: 22.0 }, Ramp { dur: 8.0, to: 23.0 }, Hold { dur: 30.0 }]),
        ("hold-shift-hold", 20.0, vec![Hold { dur: 25.0 }, Shift { dur: 6.0, to: 3.5 }, Hold { dur: 29.0 }]),
        ("ramp-hold-shift", 15.0, vec![Ramp { dur: 10.0, to: 20.0 }, Hold { dur: 40.0 }, Shift { dur: 10.0, to: 3.5 }]),
    ];
    for refine in [false, true] {
        for eps in [20.0, 40.0] {
            let cfg = Log2BtConfig {
                window: 15,
                degree: 2,
                eps_part: eps,
                refine,
                ..Log2BtConfig::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            for (name, v0, pieces) in &cases {
                let plan = plan_pieces(10.0, *v0, 0.0, pieces);
                let mut log = sample_log(&path, &plan, 10.0);
                for p in log.iter_mut() {
                    p.x += 0.03 * gauss(&mut rng);
                    p.y += 0.03 * gauss(&mut rng);
                }
                let a = abstract_log(&log, &path, &cfg).unwrap();
                let ratio = compression_ratio(&log, &a);
                let fid = reconstruction_error(&log, &a, &path).unwrap();
                println!(
                    "refine {refine} eps {eps} {name}: ratio {ratio:.1} segs {} ade_s {:.3} ade_l {:.3}",
                    a.boundaries.len() - 1,
                    fid.ade_s,
                    fid.ade_l
                );
            }
        }
    }
}

#[test]
fn probe_noisy_sweep_refine() {
    let path = straight_path();
    for eps_part in [20.0, 40.0, 80.0] {
        for window in [11usize, 15] {
            let cfg = Log2BtConfig {
                window,
                degree: 2,
                eps_part,
                refine: true,
                ..Log2BtConfig::default()
            };
            let mut rng = ChaCha8Rng::seed_from_u64(20_240_811);
            let (mut sum_s, mut sum_l, mut segs) = (0.0, 0.0, 0usize);
            let count = 25usize;
            for _ in 0..count {
                let v0 = rng.gen_range(10.0..22.0);
                let pieces = random_pieces(&mut rng, v0);
                let plan = plan_pieces(10.0, v0, 0.0, &pieces);
                let mut log = sample_log(&path, &plan, 10.0);
                for p in log.iter_mut() {
                    p.x += 0.1 * gauss(&mut rng);
                    p.y += 0.1 * gauss(&mut rng);
                }
                let a = abstract_log(&log, &path, &cfg).unwrap();
                let fid = reconstruction_error(&log, &a, &path).unwrap();
                sum_s += fid.ade_s;
                sum_l += fid.ade_l;
                segs += a.boundaries.len() - 1;
            }
            println!(
                "refine eps {eps_part:>4} window {window:>2}: ade_s {:.3} ade_l {:.3} segs/log {:.1}",
                sum_s / count as f64,
                sum_l / count as f64,
                segs as f64 / count as f64
            );
        }
    }
}
