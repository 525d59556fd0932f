use rayon::prelude::*;

use super::{to_f64, KdTree, PointCloud};
use crate::error::{Error, Result};

/// Squared distance from every point of `from` to its nearest point in `to`.
pub fn nearest_squared_distances(from: &PointCloud, to: &KdTree) -> Vec<f64> {
    from.positions
        .par_iter()
        .map(|p| to.nearest_squared(to_f64(*p)).unwrap_or(f64::INFINITY))
        .collect()
}

fn check(a: &PointCloud, b: &PointCloud) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Precondition(
            "chamfer distance needs non-empty clouds".into(),
        ));
    }
    let finite = |c: &PointCloud| c.positions.iter().flatten().all(|v| v.is_finite());
    if !finite(a) || !finite(b) {
        return Err(Error::Data("non-finite point coordinate".into()));
    }
    Ok(())
}

/// Symmetric mean squared nearest-neighbor distance:
/// `mean_p min_q |p − q|² + mean_q min_p |q − p|²`.
///
/// Uses an exact k-d tree. Sums run in point order, so the result is
/// independent of the thread count. Multiply by
/// [`CHAMFER_REPORT_SCALE`](crate::CHAMFER_REPORT_SCALE) for reporting.
pub fn chamfer(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check(a, b)?;
    let (ta, tb) = rayon::join(|| KdTree::new(&a.positions), || KdTree::new(&b.positions));
    let ab = nearest_squared_distances(a, &tb);
    let ba = nearest_squared_distances(b, &ta);
    Ok(mean(&ab) + mean(&ba))
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// O(|a|·|b|) reference.
    fn chamfer_brute_force(a: &PointCloud, b: &PointCloud) -> Result<f64> {
        check(a, b)?;
        let one_way = |from: &PointCloud, to: &PointCloud| -> Vec<f64> {
            from.positions
                .iter()
                .map(|p| {
                    let p = to_f64(*p);
                    to.positions
                        .iter()
                        .map(|q| {
                            let q = to_f64(*q);
                            let d = [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
                            d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
                        })
                        .fold(f64::INFINITY, f64::min)
                })
                .collect()
        };
        Ok(mean(&one_way(a, b)) + mean(&one_way(b, a)))
    }

    fn random_cloud(n: usize, seed: u64) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PointCloud::new(
            (0..n)
                .map(|_| [rng.random(), rng.random(), rng.random()])
                .collect(),
        )
    }

    #[test]
    fn hand_computed() {
        let a = PointCloud::new(vec![[0.0, 0.0, 0.0]]);
        let b = PointCloud::new(vec![[1.0, 0.0, 0.0]]);
        assert_eq!(chamfer(&a, &b).unwrap(), 2.0);
        assert_eq!(chamfer(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_and_matches_brute_force() {
        let a = random_cloud(400, 1);
        let b = random_cloud(333, 2);
        let ab = chamfer(&a, &b).unwrap();
        assert_eq!(ab, chamfer(&b, &a).unwrap());
        assert!((ab - chamfer_brute_force(&a, &b).unwrap()).abs() <= 1e-9);
        assert!(ab > 0.0);
    }

    #[test]
    fn empty_cloud_rejected() {
        let a = random_cloud(3, 1);
        assert!(matches!(
            chamfer(&a, &PointCloud::default()),
            Err(Error::Precondition(_))
        ));
    }
}
