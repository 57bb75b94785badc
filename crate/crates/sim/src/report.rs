//! CSV tables and SVG map snapshots from a run log.

use nalgebra::Vector2;
use serde::{Deserialize, Serialize};
use starslam_core::geometry::normalize_angle;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::Result;
use crate::metrics::TRUTH_SAMPLES;
use crate::runlog::{Fate, RunLog};

/// One row of `steps.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub step: usize,
    pub time: f64,
    pub err_x: f64,
    pub err_y: f64,
    pub err_heading_deg: f64,
    pub iou: f64,
    pub landmarks: usize,
    pub associated: usize,
}

/// The single row of `summary.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub steps: usize,
    pub rmse_x: f64,
    pub rmse_y: f64,
    pub rmse_heading_deg: f64,
    pub final_iou: f64,
    pub association_accuracy: f64,
}

pub fn step_rows(log: &RunLog) -> Result<Vec<StepRow>> {
    log.steps
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let (t, e) = (s.true_pose(), s.est_pose());
            Ok(StepRow {
                step: s.step,
                time: s.time,
                err_x: e.position.x - t.position.x,
                err_y: e.position.y - t.position.y,
                err_heading_deg: normalize_angle(e.heading - t.heading)?.to_degrees(),
                iou: log.iou_at(k)?,
                landmarks: s.landmarks.len(),
                associated: s.points.iter().filter(|p| matches!(p.fate, Fate::Associated(_))).count(),
            })
        })
        .collect()
}

pub fn summary(log: &RunLog) -> Result<SummaryRow> {
    let r = log.pose_rmse()?;
    Ok(SummaryRow {
        steps: log.steps.len(),
        rmse_x: r.x,
        rmse_y: r.y,
        rmse_heading_deg: r.heading,
        final_iou: log.final_iou()?,
        association_accuracy: log.association_accuracy(),
    })
}

pub fn write_csv<S: Serialize, W: std::io::Write>(rows: &[S], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_csv<S: for<'de> Deserialize<'de>, R: std::io::Read>(r: R) -> Result<Vec<S>> {
    let mut rd = csv::Reader::from_reader(r);
    let mut out = Vec::new();
    for row in rd.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// World-frame rectangle `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bounds {
    pub min: Vector2<f64>,
    pub max: Vector2<f64>,
}

impl Bounds {
    fn of<'a>(points: impl IntoIterator<Item = &'a Vector2<f64>>) -> Self {
        let mut b = Bounds {
            min: Vector2::repeat(f64::INFINITY),
            max: Vector2::repeat(f64::NEG_INFINITY),
        };
        for p in points {
            b.min = b.min.inf(p);
            b.max = b.max.sup(p);
        }
        b
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        (self.min.x..=self.max.x).contains(&p.x) && (self.min.y..=self.max.y).contains(&p.y)
    }
}

fn path_d(points: &[Vector2<f64>], closed: bool) -> String {
    let mut d = String::new();
    for (i, p) in points.iter().enumerate() {
        let _ = write!(d, "{}{:.4},{:.4} ", if i == 0 { "M" } else { "L" }, p.x, -p.y);
    }
    if closed {
        d.push('Z');
    }
    d
}

/// SVG of the map at `step`: ground truth, mean contours with their
/// confidence bands, scan hits and both trajectories up to that step.
/// Returns the document and the world-frame region it shows.
pub fn render_snapshot(log: &RunLog, step: usize) -> (String, Bounds) {
    let s = &log.steps[step];
    let truth: Vec<Vec<Vector2<f64>>> = log.header.truth.iter().map(|o| o.boundary(TRUTH_SAMPLES)).collect();
    let means: Vec<_> = s.landmarks.iter().map(|l| l.mean_polygon()).collect();
    let uppers: Vec<_> = s.landmarks.iter().map(|l| l.upper_polygon()).collect();
    let lowers: Vec<_> = s.landmarks.iter().map(|l| l.lower_polygon()).collect();
    let true_path: Vec<Vector2<f64>> = log.steps[..=step].iter().map(|r| r.true_pose().position).collect();
    let est_path: Vec<Vector2<f64>> = log.steps[..=step].iter().map(|r| r.est_pose().position).collect();
    let pose = s.est_pose();
    let hits: Vec<Vector2<f64>> = s
        .points
        .iter()
        .map(|p| starslam_core::geometry::local_to_global(&Vector2::new(p.local[0], p.local[1]), &pose))
        .collect();

    let all = truth
        .iter()
        .chain(&means)
        .chain(&uppers)
        .chain(&lowers)
        .flatten()
        .chain(&true_path)
        .chain(&est_path)
        .chain(&hits);
    let tight = Bounds::of(all);
    let margin = 0.05 * (tight.max - tight.min).max().max(1.0);
    let b = Bounds {
        min: tight.min - Vector2::repeat(margin),
        max: tight.max + Vector2::repeat(margin),
    };
    let size = b.max - b.min;
    let stroke = 0.004 * size.max();

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{:.4} {:.4} {:.4} {:.4}" width="800" height="{:.0}">"#,
        b.min.x,
        -b.max.y,
        size.x,
        size.y,
        800.0 * size.y / size.x
    );
    let _ = writeln!(svg, r#"<title>{} step {} t={:.2}s</title>"#, log.header.scenario, s.step, s.time);
    for t in &truth {
        let _ = writeln!(svg, r##"<path d="{}" fill="#dddddd" stroke="#555555" stroke-width="{stroke:.4}"/>"##, path_d(t, true));
    }
    for (u, l) in uppers.iter().zip(&lowers) {
        // band as the upper contour with the lower one cut out
        let _ = writeln!(
            svg,
            r##"<path d="{} {}" fill="#e75480" fill-opacity="0.25" fill-rule="evenodd" stroke="none"/>"##,
            path_d(u, true),
            path_d(l, true)
        );
    }
    for m in &means {
        let _ = writeln!(svg, r##"<path d="{}" fill="none" stroke="#e75480" stroke-width="{stroke:.4}"/>"##, path_d(m, true));
    }
    for h in &hits {
        let _ = writeln!(svg, r##"<circle cx="{:.4}" cy="{:.4}" r="{:.4}" fill="#1f77b4"/>"##, h.x, -h.y, 1.5 * stroke);
    }
    let _ = writeln!(svg, r##"<path d="{}" fill="none" stroke="#333333" stroke-width="{stroke:.4}"/>"##, path_d(&true_path, false));
    let _ = writeln!(
        svg,
        r##"<path d="{}" fill="none" stroke="#d62728" stroke-width="{stroke:.4}" stroke-dasharray="{:.4}"/>"##,
        path_d(&est_path, false),
        4.0 * stroke
    );
    svg.push_str("</svg>\n");
    (svg, b)
}

/// Steps that get a snapshot: every `snapshot_every`-th one and the last.
pub fn snapshot_steps(log: &RunLog) -> Vec<usize> {
    let n = log.steps.len();
    let every = log.header.snapshot_every.max(1);
    let mut v: Vec<usize> = (0..n).step_by(every).collect();
    if n > 0 && v.last() != Some(&(n - 1)) {
        v.push(n - 1);
    }
    v
}

/// Writes `steps.csv`, `summary.csv` and `snapshots/step_NNNNN.svg` into
/// `dir` and returns the summary.
pub fn write_report(log: &RunLog, dir: &Path) -> Result<SummaryRow> {
    std::fs::create_dir_all(dir.join("snapshots"))?;
    write_csv(&step_rows(log)?, std::fs::File::create(dir.join("steps.csv"))?)?;
    let sum = summary(log)?;
    write_csv(std::slice::from_ref(&sum), std::fs::File::create(dir.join("summary.csv"))?)?;
    for k in snapshot_steps(log) {
        let (svg, _) = render_snapshot(log, k);
        let path: PathBuf = dir.join("snapshots").join(format!("step_{:05}.svg", log.steps[k].step));
        std::fs::write(path, svg)?;
    }
    Ok(sum)
}
