mod common;

use epic_core::geometry::{project, unproject, CameraPose};
use epic_core::io;
use epic_core::synth::{canned_scene, generate, write_bundle, CannedOptions, SynthScene, CANNED_SCENES};
use nalgebra::{Matrix3, Vector3};

fn opts(frames: usize) -> CannedOptions {
    CannedOptions {
        frames,
        ..CannedOptions::default()
    }
}

#[test]
fn forward_and_backward_flows_cancel_where_visible() {
    for name in CANNED_SCENES {
        let scene = SynthScene::new(canned_scene(name, &opts(9)).unwrap()).unwrap();
        let k = scene.intrinsics();
        let mut checked = 0;
        for frame in [1, 4, 8] {
            let (fwd, valid) = scene.flow(0, frame);
            for y in (0..k.height).step_by(3) {
                for x in (0..k.width).step_by(3) {
                    if !valid.get(x, y) {
                        continue;
                    }
                    let (u, v) = fwd.at(x, y);
                    let (lx, ly) = (x as f64 + 0.5 + u as f64, y as f64 + 0.5 + v as f64);
                    let [bu, bv] = scene
                        .flow_at(frame, 0, lx, ly)
                        .expect("visible point has a backward flow");
                    let err = ((u as f64 + bu).powi(2) + (v as f64 + bv).powi(2)).sqrt();
                    assert!(err <= 1e-4, "{name} frame {frame} pixel ({x},{y}): |F+B| = {err}");
                    checked += 1;
                }
            }
        }
        assert!(checked > 500, "{name}: only {checked} visible samples");
    }
}

#[test]
fn reprojected_depth_reproduces_oracle_renders() {
    for name in ["pan", "two-plane-occlusion"] {
        let scene = SynthScene::new(canned_scene(name, &opts(7)).unwrap()).unwrap();
        let k = *scene.intrinsics();
        let traj = scene.trajectory();
        let (img0, depth0) = scene.render(0);
        let cloud = unproject(&img0, &depth0, &k, &traj.poses[0]).unwrap();
        for frame in 1..7 {
            let (target, target_depth) = scene.render(frame);
            let mut hits = 0;
            for p in project(&cloud, &k, &traj.poses[frame]) {
                let (u, v) = p.pixel_index();
                // Only points that are the visible surface there.
                let Some(d) = target_depth.get(u, v) else { continue };
                if (d as f64 - p.depth).abs() > 1e-4 * p.depth {
                    continue;
                }
                assert_eq!(
                    p.color,
                    target.get_pixel(u as u32, v as u32).0,
                    "{name} frame {frame} ({u},{v})"
                );
                hits += 1;
            }
            assert!(hits > k.width * k.height / 2);
        }
    }
}

#[test]
fn pan_flow_matches_pinhole_parallax_and_project() {
    let spec = canned_scene("pan", &opts(5)).unwrap();
    let scene = SynthScene::new(spec).unwrap();
    let k = *scene.intrinsics();
    let traj = scene.trajectory();
    let z = 4.0;
    for frame in 1..5 {
        let dx = traj.poses[frame].center().x - traj.poses[0].center().x;
        let expect = -k.fx * dx / z;
        let (f, _) = scene.flow(0, frame);
        assert!(f.u().iter().all(|&u| (u as f64 - expect).abs() < 1e-4));
        assert!(f.v().iter().all(|&v| v.abs() < 1e-4));
        // The same displacement through the library's projection.
        let (img, depth) = scene.render(0);
        let cloud = unproject(&img, &depth, &k, &traj.poses[0]).unwrap();
        let moved = project(&cloud, &k, &traj.poses[frame]);
        assert!(!moved.is_empty());
        for p in &moved {
            let src = (p.index % k.width) as f64 + 0.5;
            assert!((p.pixel[0] - src - expect).abs() < 1e-9);
        }
    }
}

#[test]
fn occluded_band_behind_near_plane_is_invisible() {
    let scene = SynthScene::new(canned_scene("two-plane-occlusion", &opts(11)).unwrap()).unwrap();
    let vis = scene.visibility(10);
    let (w, h) = (scene.intrinsics().width, scene.intrinsics().height);
    // Near plane spans columns [60, 120) at frame 0 and moves 3 px per
    // frame; the far plane moves 1 px per frame. Far-plane pixels right of
    // the near plane at frame 10 within 20 columns were hidden at frame 0.
    let row = h / 2;
    let near_right = 120 - 30;
    for x in near_right..near_right + 20 {
        let hit = scene.trace(10, x as f64 + 0.5, row as f64 + 0.5).unwrap();
        assert_eq!(hit.primitive, 0);
        assert!(!vis.get(x, row), "column {x} should be disoccluded");
    }
    assert!(vis.get(near_right + 21, row));
    assert!(vis.get(near_right - 1, row));
    // New content on the right edge.
    assert!(!vis.get(w - 1, row));
    assert!(vis.get(w - 11, row));
}

#[test]
fn generation_is_deterministic_and_round_trips_to_disk() {
    let spec = canned_scene("moving-box", &opts(4)).unwrap();
    let a = generate(&spec).unwrap();
    let b = generate(&spec).unwrap();
    assert_eq!(a, b);

    let dir = tempfile::tempdir().unwrap();
    write_bundle(dir.path(), &spec, &a).unwrap();
    for k in 0..4 {
        let fwd = io::read_flo(&io::sequence_path(dir.path(), "fwd", k, "flo"), 0, k).unwrap();
        assert_eq!(fwd, a.forward[k]);
        let frame = io::read_frame(&io::sequence_path(dir.path(), "frame", k, "png")).unwrap();
        assert_eq!(frame, a.frames[k]);
        let vis = io::read_mask(&io::sequence_path(dir.path(), "vis", k, "png")).unwrap();
        assert_eq!(vis, a.visibility[k]);
        let depth = io::read_depth(&io::sequence_path(dir.path(), "depth", k, "pfm")).unwrap();
        assert_eq!(depth, a.depths[k]);
    }
    let traj = io::read_trajectory(&dir.path().join("trajectory.json")).unwrap();
    assert_eq!(traj.poses.len(), 4);
    for (p, q) in traj.poses.iter().zip(&a.trajectory.poses) {
        assert!((p.translation - q.translation).norm() < 1e-12);
    }
}

#[test]
fn moving_box_reveals_background_behind_it() {
    let scene = SynthScene::new(canned_scene("moving-box", &opts(9)).unwrap()).unwrap();
    let vis = scene.visibility(8);
    let row = scene.intrinsics().height / 2;
    let cx = scene.intrinsics().width / 2;
    let half = scene.intrinsics().width / 8;
    // The box's trailing edge moved 8 px right; background there was hidden.
    let revealed = (cx - half..cx - half + 8).filter(|&x| !vis.get(x, row)).count();
    assert!(revealed >= 7, "only {revealed} revealed columns");
    let static_scene = epic_core::synth::SceneSpec {
        moving_objects: vec![],
        poses: vec![CameraPose::from_center(Matrix3::identity(), Vector3::zeros()); 2],
        ..scene.spec().clone()
    };
    let still = SynthScene::new(static_scene).unwrap();
    assert!(still.visibility(1).is_full());
}
