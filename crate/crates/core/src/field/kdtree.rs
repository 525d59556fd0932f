//! Exact nearest-neighbor index over 3D points.

const LEAF_SIZE: usize = 12;

/// Balanced k-d tree stored implicitly: each node is a slice of `points`
/// whose median element is the splitting point, split axis cycling x, y, z
/// by depth.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
}

impl KdTree {
    pub fn new(points: &[[f32; 3]]) -> Self {
        let mut points: Vec<[f64; 3]> = points.iter().map(|p| super::to_f64(*p)).collect();
        build(&mut points, 0);
        Self { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Squared distance to the nearest stored point, `None` when empty.
    pub fn nearest_squared(&self, query: [f64; 3]) -> Option<f64> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = f64::INFINITY;
        search(&self.points, 0, query, &mut best);
        Some(best)
    }
}

fn build(points: &mut [[f64; 3]], depth: usize) {
    if points.len() <= LEAF_SIZE {
        return;
    }
    let axis = depth % 3;
    let mid = points.len() / 2;
    points.select_nth_unstable_by(mid, |a, b| a[axis].total_cmp(&b[axis]));
    let (left, rest) = points.split_at_mut(mid);
    build(left, depth + 1);
    build(&mut rest[1..], depth + 1);
}

#[inline]
fn dist2(a: [f64; 3], b: [f64; 3]) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
}

fn search(points: &[[f64; 3]], depth: usize, q: [f64; 3], best: &mut f64) {
    if points.len() <= LEAF_SIZE {
        for p in points {
            let d = dist2(*p, q);
            if d < *best {
                *best = d;
            }
        }
        return;
    }
    let axis = depth % 3;
    let mid = points.len() / 2;
    let split = points[mid];
    let d = dist2(split, q);
    if d < *best {
        *best = d;
    }
    let delta = q[axis] - split[axis];
    let (near, far) = if delta < 0.0 {
        (&points[..mid], &points[mid + 1..])
    } else {
        (&points[mid + 1..], &points[..mid])
    };
    search(near, depth + 1, q, best);
    if delta * delta < *best {
        search(far, depth + 1, q, best);
    }
}
