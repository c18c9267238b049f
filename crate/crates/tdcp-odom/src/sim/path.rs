//! Scripted ground-vehicle paths, parameterized by arc length.

use nalgebra::Vector3;

/// Path geometry in the scenario's ENU frame. Both variants start at the
/// frame origin.
#[derive(Debug, Clone)]
pub enum PathSpec {
    /// Piecewise-linear waypoint polyline (m). The start point (0,0,0) is
    /// implicit; headings jump at the vertices.
    Waypoints(Vec<Vector3<f64>>),
    /// Ellipse with the given semi-axes (m), traversed counter-clockwise,
    /// entered at the origin heading north.
    Ellipse { semi_east: f64, semi_north: f64 },
}

/// Pose-level sample along the path.
#[derive(Debug, Clone, Copy)]
pub struct PathPoint {
    pub position: Vector3<f64>,
    /// Heading measured from east toward north (vehicle x-axis direction).
    pub yaw: f64,
    /// Signed curvature (1/m); yaw rate = curvature * speed.
    pub curvature: f64,
}

pub struct SampledPath {
    kind: PathKind,
}

enum PathKind {
    Polyline {
        points: Vec<Vector3<f64>>,
        cum_len: Vec<f64>,
    },
    Ellipse {
        a: f64,
        b: f64,
        /// theta -> cumulative arc length lookup.
        arc: Vec<(f64, f64)>,
        total: f64,
    },
}

impl SampledPath {
    pub fn new(spec: &PathSpec) -> Self {
        match spec {
            PathSpec::Waypoints(w) => {
                let mut points = Vec::with_capacity(w.len() + 1);
                points.push(Vector3::zeros());
                points.extend(w.iter().copied());
                let mut cum_len = vec![0.0];
                for i in 1..points.len() {
                    let d = (points[i] - points[i - 1]).norm();
                    cum_len.push(cum_len[i - 1] + d);
                }
                SampledPath {
                    kind: PathKind::Polyline { points, cum_len },
                }
            }
            PathSpec::Ellipse {
                semi_east,
                semi_north,
            } => {
                let (a, b) = (*semi_east, *semi_north);
                let n = 8192usize;
                let mut arc = Vec::with_capacity(n + 1);
                let mut s = 0.0;
                let mut prev = ellipse_point(a, b, 0.0);
                arc.push((0.0, 0.0));
                for k in 1..=n {
                    let theta = std::f64::consts::TAU * k as f64 / n as f64;
                    let p = ellipse_point(a, b, theta);
                    s += (p - prev).norm();
                    arc.push((theta, s));
                    prev = p;
                }
                SampledPath {
                    kind: PathKind::Ellipse {
                        a,
                        b,
                        arc,
                        total: s,
                    },
                }
            }
        }
    }

    /// Total length of one traversal; the ellipse wraps around beyond it.
    pub fn length(&self) -> f64 {
        match &self.kind {
            PathKind::Polyline { cum_len, .. } => *cum_len.last().unwrap(),
            PathKind::Ellipse { total, .. } => *total,
        }
    }

    pub fn sample(&self, arc_len: f64) -> PathPoint {
        match &self.kind {
            PathKind::Polyline { points, cum_len } => {
                let total = *cum_len.last().unwrap();
                let s = arc_len.clamp(0.0, total);
                let seg = match cum_len.binary_search_by(|v| v.partial_cmp(&s).unwrap()) {
                    Ok(i) => i.min(points.len() - 2),
                    Err(i) => (i - 1).min(points.len() - 2),
                };
                let seg_len = (cum_len[seg + 1] - cum_len[seg]).max(1.0e-12);
                let dir = (points[seg + 1] - points[seg]) / seg_len;
                PathPoint {
                    position: points[seg] + (s - cum_len[seg]) * dir,
                    yaw: dir.y.atan2(dir.x),
                    curvature: 0.0,
                }
            }
            PathKind::Ellipse { a, b, arc, total } => {
                let s = arc_len.rem_euclid(*total);
                let idx = match arc.binary_search_by(|(_, v)| v.partial_cmp(&s).unwrap()) {
                    Ok(i) => i,
                    Err(i) => i.saturating_sub(1),
                };
                let (th0, s0) = arc[idx.min(arc.len() - 2)];
                let (th1, s1) = arc[(idx + 1).min(arc.len() - 1)];
                let f = if s1 > s0 { (s - s0) / (s1 - s0) } else { 0.0 };
                let theta = th0 + f * (th1 - th0);
                let position = ellipse_point(*a, *b, theta);
                // Tangent and curvature of (a cos t - a, b sin t).
                let dx = -a * theta.sin();
                let dy = b * theta.cos();
                let yaw = dy.atan2(dx);
                let speed2 = dx * dx + dy * dy;
                let curvature = a * b / speed2.powf(1.5);
                PathPoint {
                    position,
                    yaw,
                    curvature,
                }
            }
        }
    }
}

fn ellipse_point(a: f64, b: f64, theta: f64) -> Vector3<f64> {
    // Shifted so theta = 0 sits at the origin heading north (+y).
    Vector3::new(a * theta.cos() - a, b * theta.sin(), 0.0)
}
