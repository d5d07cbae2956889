//! Property tests for the library invariants.

use proptest::prelude::*;

use aeronav_core::actionlang::{decompose, parse_command, render_command, ActionCommand};
use aeronav_core::kinematics::{
    apply_action, normalize_yaw, rollout, ActionKind, ActionSpace, Point3, Pose,
};
use aeronav_core::metrics::{
    aggregate, dtw_distance, navigation_error, score_episode, EpisodeScore, EvalInput,
};
use aeronav_core::preprocess::{
    expand_segments, merge_actions, sample_history, select_keyframes, HistoryPolicy,
};
use aeronav_core::supervision::{batch_loss, compute_weights, ActionDistribution, TaskKind, TrainSample};
use aeronav_core::tokens::{assemble_sequence, stc_compress, stc_decompress, TokenGrid, TokenMatrix};

fn any_space() -> impl Strategy<Value = ActionSpace> {
    prop_oneof![
        Just(ActionSpace::aerial_vln()),
        Just(ActionSpace::open_fly()),
    ]
}

fn action_in(space: &ActionSpace) -> impl Strategy<Value = ActionKind> {
    proptest::sample::select(space.vocabulary.clone())
}

fn any_pose() -> impl Strategy<Value = Pose> {
    (
        -500.0..500.0f64,
        -500.0..500.0f64,
        0.0..120.0f64,
        0.0..360.0f64,
    )
        .prop_map(|(x, y, z, yaw)| Pose::new(x, y, z, yaw))
}

proptest! {
    #[test]
    fn stop_is_a_fixed_point(pose in any_pose(), space in any_space()) {
        let next = apply_action(&pose, ActionKind::Stop, &space).unwrap();
        prop_assert_eq!(next, pose);
    }

    #[test]
    fn turn_left_right_cancels_on_lattice(
        space in any_space(),
        pose_seed in (-500.0..500.0f64, -500.0..500.0f64, 0.0..120.0f64, 0u32..24),
    ) {
        let (x, y, z, k) = pose_seed;
        let pose = Pose::new(x, y, z, (k as f64 * space.turn_step) % 360.0);
        let left = apply_action(&pose, ActionKind::TurnLeft, &space).unwrap();
        let back = apply_action(&left, ActionKind::TurnRight, &space).unwrap();
        prop_assert_eq!(back, pose);
    }

    #[test]
    fn turn_left_right_cancels_within_tolerance(pose in any_pose(), space in any_space()) {
        let left = apply_action(&pose, ActionKind::TurnLeft, &space).unwrap();
        let back = apply_action(&left, ActionKind::TurnRight, &space).unwrap();
        prop_assert!((normalize_yaw(back.yaw - pose.yaw + 180.0) - 180.0).abs() < 1e-9);
        prop_assert_eq!((back.x, back.y, back.z), (pose.x, pose.y, pose.z));
    }

    #[test]
    fn forward_preserves_altitude(pose in any_pose(), space in any_space()) {
        let next = apply_action(&pose, ActionKind::MoveForward, &space).unwrap();
        prop_assert_eq!(next.z, pose.z);
        prop_assert_eq!(next.yaw, pose.yaw);
    }

    #[test]
    fn vertical_moves_preserve_plane(pose in any_pose(), space in any_space(), up in any::<bool>()) {
        let kind = if up { ActionKind::Ascend } else { ActionKind::Descend };
        let next = apply_action(&pose, kind, &space).unwrap();
        prop_assert_eq!((next.x, next.y, next.yaw), (pose.x, pose.y, pose.yaw));
    }

    #[test]
    fn translation_displacement_equals_step(pose in any_pose(), space in any_space(), pick in 0usize..5) {
        let translations = [
            ActionKind::MoveForward,
            ActionKind::MoveLeft,
            ActionKind::MoveRight,
            ActionKind::Ascend,
            ActionKind::Descend,
        ];
        let kind = translations[pick];
        prop_assume!(space.contains(kind));
        let next = apply_action(&pose, kind, &space).unwrap();
        let dist = pose.position().distance(&next.position());
        prop_assert!((dist - space.step_for(kind).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn rollout_has_one_more_pose_than_actions(
        space in any_space(),
        pose in any_pose(),
        picks in proptest::collection::vec(0usize..8, 0..50),
    ) {
        let actions: Vec<ActionKind> = picks
            .iter()
            .map(|&i| space.vocabulary[i % space.vocabulary.len()])
            .collect();
        let out = rollout(&pose, &actions, &space, &[]).unwrap();
        prop_assert_eq!(out.trajectory.len(), actions.len() + 1);
        prop_assert_eq!(out.trajectory[0], pose);
        for p in &out.trajectory {
            prop_assert!((0.0..360.0).contains(&p.yaw));
        }
    }
}

fn action_seq(max_len: usize) -> impl Strategy<Value = Vec<ActionKind>> {
    let space = ActionSpace::aerial_vln();
    proptest::collection::vec(action_in(&space), 0..max_len)
}

proptest! {
    #[test]
    fn merge_expand_round_trip(actions in action_seq(120), cap in 1usize..6) {
        let segments = merge_actions(&actions, cap);
        prop_assert_eq!(expand_segments(&segments), actions.clone());
        prop_assert!(segments.iter().all(|s| s.count >= 1 && s.count <= cap));
        // Merging shortens the sequence whenever any run exceeds one step.
        let has_run = actions.windows(2).any(|w| w[0] == w[1]);
        if has_run && cap > 1 {
            prop_assert!(segments.len() < actions.len().max(1));
        }
    }

    #[test]
    fn keyframes_are_boundary_frames(actions in action_seq(120), cap in 1usize..6) {
        prop_assume!(!actions.is_empty());
        let segments = merge_actions(&actions, cap);
        let total_frames = actions.len() + 1;
        let keyframes = select_keyframes(&segments, total_frames).unwrap();
        prop_assert_eq!(keyframes.first(), Some(&0));
        prop_assert_eq!(keyframes.last(), Some(&(total_frames - 1)));
        prop_assert!(keyframes.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(keyframes.iter().all(|&k| k < total_frames));
        prop_assert!(keyframes.len() <= segments.len() + 1);
    }

    #[test]
    fn uniform_history_keeps_endpoints(
        frames_len in 1usize..200,
        budget in 2usize..16,
    ) {
        let frames: Vec<usize> = (0..frames_len).map(|i| i * 3).collect();
        let out = sample_history(&frames, &HistoryPolicy::LongHorizonUniform { budget }).unwrap();
        prop_assert_eq!(out.len(), budget.min(frames.len()));
        prop_assert_eq!(out.first(), frames.first());
        prop_assert_eq!(out.last(), frames.last());
        prop_assert!(out.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(out.iter().all(|f| frames.contains(f)));
    }

    #[test]
    fn fifo_history_is_a_suffix(frames_len in 1usize..200, capacity in 1usize..16) {
        let frames: Vec<usize> = (0..frames_len).collect();
        let out = sample_history(&frames, &HistoryPolicy::FifoBank { capacity }).unwrap();
        let k = capacity.min(frames.len());
        prop_assert_eq!(out.as_slice(), &frames[frames.len() - k..]);
    }
}

fn distribution(max_vocab: usize) -> impl Strategy<Value = ActionDistribution> {
    proptest::collection::vec(0.01..1.0f64, 2..max_vocab).prop_map(|raw| {
        let total: f64 = raw.iter().sum();
        let probs = raw
            .iter()
            .enumerate()
            .map(|(i, v)| (format!("action_{i:02}"), v / total))
            .collect();
        ActionDistribution::from_probs(probs).unwrap()
    })
}

proptest! {
    #[test]
    fn weight_squares_average_to_one(dist in distribution(11)) {
        let table = compute_weights(&dist).unwrap();
        prop_assert!((table.mean_square() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn rarer_actions_get_larger_weights(dist in distribution(11)) {
        let table = compute_weights(&dist).unwrap();
        let pairs: Vec<(&String, &f64)> = dist.probs().iter().collect();
        for (a, pa) in &pairs {
            for (b, pb) in &pairs {
                if pa < pb {
                    prop_assert!(table.get(a).unwrap() > table.get(b).unwrap());
                }
            }
        }
    }

    #[test]
    fn batch_loss_is_nonnegative_and_permutation_stable(
        ces in proptest::collection::vec(0.0..5.0f64, 1..12),
        rotation in 0usize..12,
    ) {
        let dist = ActionDistribution::from_probs(
            [("go".to_string(), 0.5), ("wait".to_string(), 0.5)].into_iter().collect(),
        )
        .unwrap();
        let table = compute_weights(&dist).unwrap();
        let samples: Vec<TrainSample> = ces
            .iter()
            .enumerate()
            .map(|(i, &ce)| {
                let p = (-ce).exp();
                TrainSample {
                    task: match i % 3 {
                        0 => TaskKind::Navigation { action: "go".to_string() },
                        1 => TaskKind::SpatialPerception,
                        _ => TaskKind::TrajectoryReasoning,
                    },
                    target_tokens: vec![0],
                    predicted_rows: vec![vec![p, 1.0 - p]],
                }
            })
            .collect();
        let loss = batch_loss(&samples, &table, 1.0, 0.5).unwrap();
        prop_assert!(loss >= 0.0);
        let mut rotated = samples.clone();
        rotated.rotate_left(rotation % samples.len());
        let loss2 = batch_loss(&rotated, &table, 1.0, 0.5).unwrap();
        prop_assert_eq!(loss.to_bits(), loss2.to_bits());
    }
}

fn grid_strategy() -> impl Strategy<Value = TokenGrid> {
    (1usize..9, 1usize..9, 1usize..5).prop_flat_map(|(h, w, c)| {
        proptest::collection::vec(-100.0..100.0f64, h * w * c)
            .prop_map(move |data| TokenGrid::new(h, w, c, data).unwrap())
    })
}

proptest! {
    #[test]
    fn stc_shape_law(grid in grid_strategy(), g in 1usize..5) {
        let comp = stc_compress(&grid, g);
        prop_assert_eq!(comp.coarse_height, grid.height.div_ceil(g));
        prop_assert_eq!(comp.coarse_width, grid.width.div_ceil(g));
        prop_assert_eq!(comp.channels, grid.channels * g * g);
        prop_assert_eq!(comp.data.len(), comp.token_count() * comp.channels);
    }

    #[test]
    fn stc_round_trip_is_lossless(grid in grid_strategy(), g in 1usize..5) {
        let comp = stc_compress(&grid, g);
        let back = stc_decompress(&comp, grid.height, grid.width).unwrap();
        prop_assert_eq!(back, grid);
    }

    #[test]
    fn stc_preserves_energy(grid in grid_strategy(), g in 1usize..5) {
        let comp = stc_compress(&grid, g);
        let energy = |v: &[f64]| v.iter().map(|x| x * x).fold(0.0f64, |a, b| a + b);
        let padded = grid.height % g != 0 || grid.width % g != 0;
        // Compression only relocates values (padding adds zeros), so
        // squared mass is conserved up to reassociation of the sum.
        prop_assert!((energy(&comp.data) - energy(&grid.data)).abs() <= 1e-9 * (1.0 + energy(&grid.data)));
        if !padded {
            prop_assert_eq!(comp.data.len(), grid.data.len());
        }
    }

    #[test]
    fn sequence_length_is_additive(
        widths in 1usize..12,
        rows in proptest::collection::vec(1usize..30, 0..6),
        text_rows in 1usize..40,
    ) {
        let blocks: Vec<(usize, TokenMatrix)> = rows
            .iter()
            .enumerate()
            .map(|(i, &r)| (i * 2, TokenMatrix::zeros(r, widths)))
            .collect();
        let seq = assemble_sequence(&blocks, TokenMatrix::zeros(text_rows, widths)).unwrap();
        let expected: usize = rows.iter().sum::<usize>() + text_rows;
        prop_assert_eq!(seq.total_len(), expected);
        prop_assert_eq!(seq.blocks.len(), rows.len() + 1);
    }
}

/// Closed-form endpoint of a single command applied to a pose.
fn closed_form(pose: &Pose, cmd: &ActionCommand) -> Pose {
    let mag = cmd.magnitude.unwrap_or(0.0);
    match cmd.kind {
        ActionKind::Stop => *pose,
        ActionKind::TurnLeft => Pose::new(pose.x, pose.y, pose.z, pose.yaw + mag),
        ActionKind::TurnRight => Pose::new(pose.x, pose.y, pose.z, pose.yaw - mag),
        ActionKind::Ascend => Pose::new(pose.x, pose.y, pose.z + mag, pose.yaw),
        ActionKind::Descend => Pose::new(pose.x, pose.y, pose.z - mag, pose.yaw),
        ActionKind::MoveForward => offset(pose, pose.yaw, mag),
        ActionKind::MoveLeft => offset(pose, pose.yaw + 90.0, mag),
        ActionKind::MoveRight => offset(pose, pose.yaw - 90.0, mag),
    }
}

fn offset(pose: &Pose, bearing: f64, mag: f64) -> Pose {
    let rad = normalize_yaw(bearing).to_radians();
    Pose::new(
        pose.x + mag * rad.cos(),
        pose.y + mag * rad.sin(),
        pose.z,
        pose.yaw,
    )
}

proptest! {
    #[test]
    fn command_round_trip_and_execution_equivalence(
        space in any_space(),
        pick in 0usize..8,
        steps in 1usize..4,
        pose in any_pose(),
    ) {
        let kind = space.vocabulary[pick % space.vocabulary.len()];
        let cmd = if kind == ActionKind::Stop {
            ActionCommand { kind, magnitude: None }
        } else {
            ActionCommand {
                kind,
                magnitude: Some(space.step_for(kind).unwrap() * steps as f64),
            }
        };

        let text = render_command(&cmd, &space).unwrap();
        let parsed = parse_command(&text, &space).unwrap();
        prop_assert_eq!(&parsed, &cmd);

        let primitives = decompose(&cmd, &space).unwrap();
        if kind == ActionKind::Stop {
            prop_assert_eq!(primitives.len(), 1);
        } else {
            prop_assert_eq!(primitives.len(), steps);
        }
        let out = rollout(&pose, &primitives, &space, &[]).unwrap();
        let end = out.trajectory.last().unwrap();
        let expect = closed_form(&pose, &cmd);
        prop_assert!((end.x - expect.x).abs() < 1e-9);
        prop_assert!((end.y - expect.y).abs() < 1e-9);
        prop_assert!((end.z - expect.z).abs() < 1e-9);
        prop_assert!((normalize_yaw(end.yaw - expect.yaw + 180.0) - 180.0).abs() < 1e-9);
    }

    #[test]
    fn merge_and_decompose_are_mutually_inverse(
        space in any_space(),
        pick in 0usize..8,
        steps in 1usize..4,
    ) {
        let kind = space.vocabulary[pick % space.vocabulary.len()];
        prop_assume!(kind != ActionKind::Stop);
        let run = vec![kind; steps];
        let segments = merge_actions(&run, steps.max(1));
        prop_assert_eq!(segments.len(), 1);
        let cmd = ActionCommand {
            kind,
            magnitude: Some(space.step_for(kind).unwrap() * segments[0].count as f64),
        };
        prop_assert_eq!(decompose(&cmd, &space).unwrap(), run);
    }
}

/// Exhaustive monotone-alignment DTW used as the oracle; accumulates
/// cost in path order like the dynamic program does.
fn brute_force_dtw(p: &[Pose], r: &[Pose], i: usize, j: usize, acc: f64) -> f64 {
    let acc = acc + p[i].position().distance(&r[j].position());
    if i + 1 == p.len() && j + 1 == r.len() {
        return acc;
    }
    let mut best = f64::INFINITY;
    if i + 1 < p.len() {
        best = best.min(brute_force_dtw(p, r, i + 1, j, acc));
    }
    if j + 1 < r.len() {
        best = best.min(brute_force_dtw(p, r, i, j + 1, acc));
    }
    if i + 1 < p.len() && j + 1 < r.len() {
        best = best.min(brute_force_dtw(p, r, i + 1, j + 1, acc));
    }
    best
}

fn short_path() -> impl Strategy<Value = Vec<Pose>> {
    proptest::collection::vec(
        (-50.0..50.0f64, -50.0..50.0f64, 0.0..30.0f64),
        1..7,
    )
    .prop_map(|pts| pts.into_iter().map(|(x, y, z)| Pose::new(x, y, z, 0.0)).collect())
}

proptest! {
    #[test]
    fn dtw_matches_brute_force(p in short_path(), r in short_path()) {
        let expect = brute_force_dtw(&p, &r, 0, 0, 0.0);
        prop_assert_eq!(dtw_distance(&p, &r), expect);
    }

    #[test]
    fn dtw_is_symmetric(p in short_path(), r in short_path()) {
        prop_assert_eq!(dtw_distance(&p, &r), dtw_distance(&r, &p));
    }

    #[test]
    fn score_orderings_hold(
        predicted in short_path(),
        reference in short_path(),
        goal in (-60.0..60.0f64, -60.0..60.0f64, 0.0..40.0f64),
        collided in any::<bool>(),
    ) {
        let mut input = EvalInput::new(predicted, reference, Point3::new(goal.0, goal.1, goal.2));
        input.collided = collided;
        let s = score_episode(&input).unwrap();
        prop_assert!(u8::from(s.sr) <= u8::from(s.osr));
        prop_assert!(s.sdtw <= s.ndtw + 1e-15);
        prop_assert!(s.sdtw <= f64::from(u8::from(s.sr)));
        prop_assert!(s.spl <= f64::from(u8::from(s.sr)));
        for v in [s.ndtw, s.sdtw, s.spl] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert_eq!(s.failure.is_some(), !s.sr);
    }

    #[test]
    fn navigation_error_is_rigid_invariant(
        fx in -50.0..50.0f64, fy in -50.0..50.0f64, fz in 0.0..30.0f64,
        gx in -50.0..50.0f64, gy in -50.0..50.0f64, gz in 0.0..30.0f64,
        angle in 0.0..360.0f64,
        tx in -100.0..100.0f64, ty in -100.0..100.0f64, tz in -20.0..20.0f64,
    ) {
        let rotate = |x: f64, y: f64| {
            let rad = angle.to_radians();
            (x * rad.cos() - y * rad.sin(), x * rad.sin() + y * rad.cos())
        };
        let base = navigation_error(&Pose::new(fx, fy, fz, 0.0), &Point3::new(gx, gy, gz));
        let (fx2, fy2) = rotate(fx, fy);
        let (gx2, gy2) = rotate(gx, gy);
        let moved = navigation_error(
            &Pose::new(fx2 + tx, fy2 + ty, fz + tz, 0.0),
            &Point3::new(gx2 + tx, gy2 + ty, gz + tz),
        );
        prop_assert!((base - moved).abs() < 1e-9);
    }

    #[test]
    fn aggregate_sr_respects_partitions(
        srs in proptest::collection::vec(any::<bool>(), 2..40),
        cut in 1usize..39,
    ) {
        prop_assume!(cut < srs.len());
        let scores: Vec<EpisodeScore> = srs
            .iter()
            .map(|&sr| EpisodeScore {
                ne: 1.0,
                sr,
                osr: sr,
                ndtw: 0.5,
                sdtw: if sr { 0.5 } else { 0.0 },
                spl: if sr { 1.0 } else { 0.0 },
                action_count: 5,
                failure: if sr { None } else { Some(aeronav_core::metrics::FailureKind::PerceptionRelated) },
            })
            .collect();
        let whole = aggregate(&scores).unwrap();
        let left = aggregate(&scores[..cut]).unwrap();
        let right = aggregate(&scores[cut..]).unwrap();
        let weighted = (left.sr_pct * cut as f64 + right.sr_pct * (scores.len() - cut) as f64)
            / scores.len() as f64;
        prop_assert!((whole.sr_pct - weighted).abs() < 1e-9);
    }

    #[test]
    fn self_similarity_is_perfect(path in short_path()) {
        let goal = path.last().unwrap().position();
        let input = EvalInput::new(path.clone(), path, goal);
        let s = score_episode(&input).unwrap();
        prop_assert!(s.sr);
        prop_assert_eq!(s.ndtw, 1.0);
        prop_assert!(s.ne.abs() < 1e-9);
    }
}
