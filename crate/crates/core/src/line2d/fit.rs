use serde::{Deserialize, Serialize};

use crate::raster::{PlaneFrame, Raster};

use super::LineSegment3D;

/// A least-squares segment in continuous pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineSegment2D {
    pub contour_id: usize,
    pub start: [f64; 2],
    pub end: [f64; 2],
    pub inliers: usize,
    /// RMS perpendicular residual, pixels.
    pub residual: f64,
}

impl LineSegment2D {
    pub fn length(&self) -> f64 {
        (self.end[0] - self.start[0]).hypot(self.end[1] - self.start[1])
    }
}

fn to_f64(p: [i32; 2]) -> [f64; 2] {
    [p[0] as f64, p[1] as f64]
}

/// Distance from `p` to the line through `a` and `b` (or to `a` when the
/// two coincide).
fn chord_distance(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len = dx.hypot(dy);
    if len == 0.0 {
        return (p[0] - a[0]).hypot(p[1] - a[1]);
    }
    ((p[0] - a[0]) * dy - (p[1] - a[1]) * dx).abs() / len
}

/// Recursively splits an open chain at its point of maximum deviation from
/// the end-to-end chord until every piece is within `tol`; pieces with
/// fewer than `min_run` points are dropped.
pub fn split_open_chain(chain: &[[f64; 2]], tol: f64, min_run: usize) -> Vec<Vec<[f64; 2]>> {
    let mut runs = Vec::new();
    split_into(chain, tol, min_run, &mut runs);
    runs
}

fn split_into(chain: &[[f64; 2]], tol: f64, min_run: usize, runs: &mut Vec<Vec<[f64; 2]>>) {
    if chain.len() < 2 {
        return;
    }
    let (a, b) = (chain[0], chain[chain.len() - 1]);
    let mut worst = (0usize, 0.0f64);
    for (i, &p) in chain.iter().enumerate().take(chain.len() - 1).skip(1) {
        let d = chord_distance(a, b, p);
        if d > worst.1 {
            worst = (i, d);
        }
    }
    if worst.1 > tol {
        split_into(&chain[..=worst.0], tol, min_run, runs);
        split_into(&chain[worst.0..], tol, min_run, runs);
    } else if chain.len() >= min_run {
        runs.push(chain.to_vec());
    }
}

/// Splits a closed contour into straight runs. The chain is first cut at
/// its first point and the point farthest from it.
pub fn split_closed_chain(points: &[[i32; 2]], tol: f64, min_run: usize) -> Vec<Vec<[f64; 2]>> {
    if points.len() < 2 {
        return Vec::new();
    }
    let pts: Vec<[f64; 2]> = points.iter().copied().map(to_f64).collect();
    let origin = pts[0];
    let far = pts
        .iter()
        .enumerate()
        .fold((0usize, 0.0f64), |best, (i, p)| {
            let d = (p[0] - origin[0]).hypot(p[1] - origin[1]);
            if d > best.1 {
                (i, d)
            } else {
                best
            }
        })
        .0;
    if far == 0 {
        return Vec::new();
    }
    let mut back: Vec<[f64; 2]> = pts[far..].to_vec();
    back.push(origin);
    let mut runs = split_open_chain(&pts[..=far], tol, min_run);
    runs.extend(split_open_chain(&back, tol, min_run));
    runs
}

/// Total-least-squares fit of a run. Endpoints are the projections of the
/// first and last points onto the fitted line. Returns `None` for runs with
/// no spread or a residual above `max_residual`.
pub fn fit_segment(run: &[[f64; 2]], max_residual: f64) -> Option<LineSegment2D> {
    if run.len() < 2 {
        return None;
    }
    let n = run.len() as f64;
    let cx = run.iter().map(|p| p[0]).sum::<f64>() / n;
    let cy = run.iter().map(|p| p[1]).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for p in run {
        let (dx, dy) = (p[0] - cx, p[1] - cy);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx + syy <= 0.0 {
        return None;
    }
    let angle = 0.5 * (2.0 * sxy).atan2(sxx - syy);
    let (dx, dy) = (angle.cos(), angle.sin());
    let project = |p: [f64; 2]| {
        let t = (p[0] - cx) * dx + (p[1] - cy) * dy;
        [cx + t * dx, cy + t * dy]
    };
    let residual = (run
        .iter()
        .map(|p| ((p[0] - cx) * dy - (p[1] - cy) * dx).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let seg = LineSegment2D {
        contour_id: 0,
        start: project(run[0]),
        end: project(run[run.len() - 1]),
        inliers: run.len(),
        residual,
    };
    (seg.length() > 0.0 && residual <= max_residual).then_some(seg)
}

/// Maps a pixel-space segment back onto its plane in 3D.
pub fn unproject(
    seg: &LineSegment2D,
    raster: &Raster,
    frame: &PlaneFrame,
    plane_id: usize,
) -> LineSegment3D {
    LineSegment3D {
        a: frame.unproject(raster.pixel_to_plane(seg.start)),
        b: frame.unproject(raster.pixel_to_plane(seg.end)),
        plane_id,
        contour_id: seg.contour_id,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::line2d::trace_contours;
    use crate::raster::{rasterize, Bitmap};
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};

    fn pix(points: &[(i32, i32)]) -> Vec<[f64; 2]> {
        points.iter().map(|&(u, v)| [u as f64, v as f64]).collect()
    }

    #[test]
    fn rectangle_contour_splits_into_sides() {
        let mut b = Bitmap::new(34, 24);
        for v in 2..22 {
            for u in 2..32 {
                b.set(u, v, true);
            }
        }
        let contour = &trace_contours(&b, 40)[0];
        let runs = split_closed_chain(&contour.points, 2.0, 8);
        assert_eq!(runs.len(), 4);
        let mut lens: Vec<usize> = runs.iter().map(Vec::len).collect();
        lens.sort();
        assert_eq!(lens, vec![20, 20, 30, 30]);
    }

    #[test]
    fn digital_straight_segment_is_one_run() {
        let chain: Vec<[f64; 2]> = (0..30).map(|i| [i as f64, (i as f64 * 0.4).round()]).collect();
        let runs = split_open_chain(&chain, 2.0, 8);
        assert_eq!(runs.len(), 1);
        assert_eq!(runs[0].len(), 30);
    }

    #[test]
    fn l_shape_splits_at_corner() {
        let mut chain: Vec<[f64; 2]> = (0..15).map(|i| [i as f64, 0.0]).collect();
        chain.extend((1..15).map(|j| [14.0, j as f64]));
        let runs = split_open_chain(&chain, 2.0, 8);
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].last(), Some(&[14.0, 0.0]));
        assert_eq!(runs[1].first(), Some(&[14.0, 0.0]));
    }

    #[test]
    fn short_runs_are_dropped() {
        let chain = pix(&[(0, 0), (1, 0), (2, 0), (3, 0)]);
        assert!(split_open_chain(&chain, 2.0, 8).is_empty());
    }

    #[test]
    fn fit_diagonal_and_vertical() {
        let s = fit_segment(&pix(&[(0, 0), (1, 1), (2, 2)]), 2.0).unwrap();
        assert!((s.start[0]).abs() < 1e-12 && (s.start[1]).abs() < 1e-12);
        assert!((s.end[0] - 2.0).abs() < 1e-12 && (s.end[1] - 2.0).abs() < 1e-12);
        assert!(s.residual < 1e-12);

        let run: Vec<[f64; 2]> = (0..10).map(|v| [5.0, v as f64]).collect();
        let s = fit_segment(&run, 2.0).unwrap();
        let d = [s.end[0] - s.start[0], s.end[1] - s.start[1]];
        assert!(d[0].abs() < 1e-12 && (d[1] - 9.0).abs() < 1e-12);
    }

    #[test]
    fn zero_variance_run_is_rejected() {
        assert!(fit_segment(&pix(&[(3, 3); 9]), 2.0).is_none());
    }

    #[test]
    fn noisy_horizontal_run_angle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let noise = Normal::new(0.0, 0.3).unwrap();
        for _ in 0..100 {
            let run: Vec<[f64; 2]> = (0..40).map(|i| [i as f64, noise.sample(&mut rng)]).collect();
            let s = fit_segment(&run, 2.0).unwrap();
            let ang = (s.end[1] - s.start[1]).atan2(s.end[0] - s.start[0]).to_degrees();
            assert!(ang.abs() < 2.0, "{ang}");
        }
    }

    #[test]
    fn unproject_pixel_center_and_round_trip() {
        let frame = PlaneFrame::from_points(
            Vec3::new(1.0, 2.0, 3.0),
            Vec3::new(0.0, 0.6, 0.8),
            1.0,
            &[Vec3::new(4.0, 0.0, 0.0)],
        )
        .unwrap();
        let raster = rasterize(1.0, &[0, 1], &[[0.0, 0.0], [10.0, 10.0]], 64).unwrap();
        assert_eq!(raster.pixel_to_plane([0.0, 0.0]), [0.5, 0.5]);

        let seg = LineSegment2D { contour_id: 4, start: [0.0, 0.0], end: [7.25, 3.5], inliers: 9, residual: 0.0 };
        let s3 = unproject(&seg, &raster, &frame, 2);
        assert_eq!((s3.plane_id, s3.contour_id), (2, 4));
        for (e, uv) in [(s3.a, seg.start), (s3.b, seg.end)] {
            let xy = frame.project(&e);
            let want = raster.pixel_to_plane(uv);
            assert!((xy[0] - want[0]).abs() < 1e-9 && (xy[1] - want[1]).abs() < 1e-9);
            assert!((e - frame.origin).dot(&frame.normal).abs() < 1e-9);
        }
    }
}
