use starslam_sim::report::{read_csv, render_snapshot, snapshot_steps, step_rows, summary, write_csv, write_report, StepRow, SummaryRow};
use starslam_sim::runlog::PhaseTag;
use starslam_sim::sensor::odometry_increment;
use starslam_sim::trajectory::{Segment, TrajectorySpec};
use starslam_sim::world::{RadialShape, WorldObject};
use starslam_sim::{run, RunLog, ScenarioConfig, SimError};
use std::f64::consts::{FRAC_PI_2, TAU};

fn short_sim1() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::sim1();
    cfg.trajectory.segments.truncate(3);
    cfg
}

fn ideal_circle() -> ScenarioConfig {
    let mut cfg = ScenarioConfig::sim1();
    cfg.world = vec![WorldObject {
        id: 0,
        center: [0.0, 0.0],
        shape: RadialShape::Fourier { mean: 1.0, cos: vec![], sin: vec![] },
    }];
    // one lap at radius 3 in 50 steps
    let length = TAU * 3.0;
    cfg.dt = length / 50.0;
    cfg.trajectory = TrajectorySpec {
        start: [3.0, 0.0, FRAC_PI_2],
        segments: vec![Segment::Arc { radius: 3.0, sweep: TAU, speed: 1.0 }],
    };
    cfg.sensor.range_noise_std = 0.0;
    cfg.sensor.odom_noise = [[0.0; 3]; 3];
    cfg.filter.pose = [[1e-10, 0.0, 0.0], [0.0, 1e-10, 0.0], [0.0, 0.0, 1e-10]];
    cfg.filter.cartesian = [[1e-6, 0.0], [0.0, 1e-6]];
    cfg.gp.meas_noise = 1e-6;
    cfg.association.center_depth = 0.0;
    cfg
}

#[test]
fn ideal_single_circle_is_mapped_almost_perfectly() {
    let cfg = ideal_circle();
    assert_eq!(cfg.steps(), 50);
    let log = run(&cfg).unwrap();
    let iou = log.final_iou().unwrap();
    let rmse = log.pose_rmse().unwrap();
    assert!(iou > 0.95, "iou {iou}");
    assert!(rmse.x < 1e-3 && rmse.y < 1e-3, "{rmse:?}");
    assert_eq!(log.steps.last().unwrap().landmarks.len(), 1);
}

#[test]
fn empty_world_follows_dead_reckoning() {
    let mut cfg = short_sim1();
    cfg.world.clear();
    let log = run(&cfg).unwrap();
    let sensor = cfg.seeded_sensor();
    let start = cfg.trajectory.start_pose();
    let mut dr = nalgebra::Vector3::new(start.position.x, start.position.y, start.heading);
    let mut prev = start;
    for (k, s) in log.steps.iter().enumerate() {
        assert!(s.landmarks.is_empty() && s.points.is_empty());
        if k > 0 {
            let truth = s.true_pose();
            dr += odometry_increment(&prev, &truth, &sensor, &mut sensor.odometry_rng(k as u64)).unwrap();
            prev = truth;
        }
        let e = s.est_pose();
        let dh = starslam_core::geometry::normalize_angle(e.heading - dr.z).unwrap();
        assert!((e.position - dr.xy()).norm() < 1e-12 && dh.abs() < 1e-12, "step {k}");
    }
}

#[test]
fn run_logs_are_bit_identical_and_round_trip() {
    let cfg = short_sim1();
    let a = run(&cfg).unwrap().to_ndjson().unwrap();
    let b = run(&cfg).unwrap().to_ndjson().unwrap();
    assert_eq!(a, b);
    let parsed = RunLog::read_ndjson(&a[..]).unwrap();
    assert_eq!(parsed.to_ndjson().unwrap(), a);
    let mut other = cfg.clone();
    other.seed += 1;
    assert_ne!(run(&other).unwrap().to_ndjson().unwrap(), a);
}

#[test]
fn every_step_follows_the_filter_ordering() {
    let log = run(&short_sim1()).unwrap();
    let order = [PhaseTag::Predict, PhaseTag::Associate, PhaseTag::Initiate, PhaseTag::Correct];
    for (k, s) in log.steps.iter().enumerate() {
        let ranks: Vec<usize> = s.phases.iter().map(|p| order.iter().position(|o| o == p).unwrap()).collect();
        assert!(ranks.windows(2).all(|w| w[0] < w[1]), "step {k}: {:?}", s.phases);
        assert_eq!(s.phases.first() == Some(&PhaseTag::Predict), k > 0);
        assert!(s.phases.contains(&PhaseTag::Associate));
    }
    assert!(log.steps.iter().any(|s| s.phases.contains(&PhaseTag::Correct)));
}

fn config_error(text: &str) -> (String, String) {
    match ScenarioConfig::from_json(text) {
        Err(SimError::Config { path, message }) => (path, message),
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn config_errors_name_the_field() {
    let good = ScenarioConfig::sim1().to_json().unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
    v["sensor"]["max_range"] = serde_json::json!("far");
    let (path, _) = config_error(&v.to_string());
    assert_eq!(path, "sensor.max_range");

    let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
    v["world"][2]["shape"]["vertices"][0] = serde_json::json!([1.0]);
    let (path, _) = config_error(&v.to_string());
    assert!(path.starts_with("world[2].shape"), "{path}");

    let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
    v["association"]["cluster_min_pts"] = serde_json::json!(1);
    let (path, _) = config_error(&v.to_string());
    assert_eq!(path, "association");

    let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
    v["version"] = serde_json::json!(7);
    assert_eq!(config_error(&v.to_string()).0, "version");

    let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
    v["gp"]["colour"] = serde_json::json!(1);
    assert_eq!(config_error(&v.to_string()).0, "gp.colour");

    let mut v: serde_json::Value = serde_json::from_str(&good).unwrap();
    v["trajectory"]["start"] = serde_json::json!([2.5, 2.5, 0.0]);
    assert_eq!(config_error(&v.to_string()).0, "trajectory.start");

    assert_eq!(ScenarioConfig::from_json(&good).unwrap(), ScenarioConfig::sim1());
    assert_eq!(ScenarioConfig::sim1().basis_count, 50);
}

#[test]
fn report_is_consistent_with_metrics() {
    let log = run(&short_sim1()).unwrap();
    let sum = summary(&log).unwrap();
    let r = log.pose_rmse().unwrap();
    assert_eq!((sum.rmse_x, sum.rmse_y, sum.rmse_heading_deg), (r.x, r.y, r.heading));
    assert_eq!(sum.final_iou, log.final_iou().unwrap());
    assert_eq!(sum.association_accuracy, log.association_accuracy());

    let rows = step_rows(&log).unwrap();
    let mut buf = Vec::new();
    write_csv(&rows, &mut buf).unwrap();
    let back: Vec<StepRow> = read_csv(&buf[..]).unwrap();
    assert_eq!(back, rows);
    let mut again = Vec::new();
    write_csv(&back, &mut again).unwrap();
    assert_eq!(again, buf);

    let mut sbuf = Vec::new();
    write_csv(std::slice::from_ref(&sum), &mut sbuf).unwrap();
    let sback: Vec<SummaryRow> = read_csv(&sbuf[..]).unwrap();
    assert_eq!(sback, vec![sum]);
}

#[test]
fn snapshots_contain_every_contour_sample() {
    let log = run(&short_sim1()).unwrap();
    let steps = snapshot_steps(&log);
    assert_eq!(steps[0], 0);
    assert_eq!(*steps.last().unwrap(), log.steps.len() - 1);
    for k in steps {
        let (svg, b) = render_snapshot(&log, k);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        for lm in &log.steps[k].landmarks {
            for p in lm.mean_polygon().iter().chain(&lm.upper_polygon()).chain(&lm.lower_polygon()) {
                assert!(b.contains(p), "step {k}: {p:?} outside {b:?}");
            }
        }
        for o in &log.header.truth {
            for p in o.boundary(720) {
                assert!(b.contains(&p));
            }
        }
    }
}

#[test]
fn report_files_are_written() {
    let dir = std::env::temp_dir().join(format!("starslam-report-{}", std::process::id()));
    let log = run(&short_sim1()).unwrap();
    let sum = write_report(&log, &dir).unwrap();
    let text = std::fs::read_to_string(dir.join("summary.csv")).unwrap();
    assert!(text.starts_with("steps,rmse_x,rmse_y,rmse_heading_deg,final_iou,association_accuracy"));
    let rows: Vec<SummaryRow> = read_csv(text.as_bytes()).unwrap();
    assert_eq!(rows, vec![sum]);
    let svgs = std::fs::read_dir(dir.join("snapshots")).unwrap().count();
    assert_eq!(svgs, snapshot_steps(&log).len());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn driving_into_an_object_is_reported() {
    let mut cfg = short_sim1();
    // a trajectory that drives straight into an object
    cfg.trajectory = TrajectorySpec {
        start: [0.0, 0.0, std::f64::consts::FRAC_PI_4],
        segments: vec![Segment::Straight { length: 4.0, speed: 1.0 }],
    };
    match run(&cfg) {
        Err(SimError::InvalidScenario(msg)) => assert!(msg.contains("inside object 0"), "{msg}"),
        other => panic!("expected an invalid scenario, got {:?}", other.map(|l| l.steps.len())),
    }
}
