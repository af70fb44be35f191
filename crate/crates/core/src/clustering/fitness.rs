use super::{ClusterError, Clustering};
use crate::matrix::{squared_distance, Matrix};

/// Davies–Bouldin index of a finalized clustering. Returns `+inf` when two
/// centroids coincide.
pub fn davies_bouldin(data: &Matrix, c: &Clustering) -> Result<f64, ClusterError> {
    let k = c.k();
    if k < 2 {
        return Err(ClusterError::TooFewClusters(k));
    }
    let mut scatter = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (i, &a) in c.assignments.iter().enumerate() {
        scatter[a] += squared_distance(data.row(i), c.centroids.row(a)).sqrt();
        counts[a] += 1;
    }
    if let Some(empty) = counts.iter().position(|&n| n == 0) {
        return Err(ClusterError::EmptyCluster(empty));
    }
    for (s, &n) in scatter.iter_mut().zip(&counts) {
        *s /= n as f64;
    }

    let mut total = 0.0;
    for i in 0..k {
        let mut worst = f64::NEG_INFINITY;
        for j in (0..k).filter(|&j| j != i) {
            let separation = squared_distance(c.centroids.row(i), c.centroids.row(j)).sqrt();
            if separation == 0.0 {
                return Ok(f64::INFINITY);
            }
            worst = worst.max((scatter[i] + scatter[j]) / separation);
        }
        total += worst;
    }
    Ok(total / k as f64)
}

/// `1 / (1 + DB)`; higher is better, 0 when centroids coincide.
pub fn fitness(data: &Matrix, c: &Clustering) -> Result<f64, ClusterError> {
    let db = davies_bouldin(data, c)?;
    Ok(if db.is_infinite() {
        0.0
    } else {
        1.0 / (1.0 + db)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clustering(points: &[f64], assignments: &[usize]) -> (Matrix, Clustering) {
        let data = Matrix::new(points.len(), 1, points.to_vec()).unwrap();
        let k = assignments.iter().max().unwrap() + 1;
        let centroids = crate::clustering::member_means(&data, assignments, k).unwrap();
        (
            data,
            Clustering {
                assignments: assignments.to_vec(),
                centroids,
            },
        )
    }

    #[test]
    fn singletons_have_perfect_fitness() {
        let (data, c) = clustering(&[0.0, 1.0], &[0, 1]);
        assert_eq!(davies_bouldin(&data, &c).unwrap(), 0.0);
        assert_eq!(fitness(&data, &c).unwrap(), 1.0);
    }

    #[test]
    fn coincident_centroids_score_zero() {
        let (data, c) = clustering(&[0.0, 1.0, 0.0, 1.0], &[0, 0, 1, 1]);
        assert_eq!(fitness(&data, &c).unwrap(), 0.0);
    }

    #[test]
    fn hand_evaluated_pair() {
        // S1 = S2 = 0.1, M = 1.0, DB = 0.2.
        let (data, c) = clustering(&[0.0, 0.2, 1.0, 1.2], &[0, 0, 1, 1]);
        assert!((davies_bouldin(&data, &c).unwrap() - 0.2).abs() < 1e-12);
        assert!((fitness(&data, &c).unwrap() - 1.0 / 1.2).abs() < 1e-12);
    }

    #[test]
    fn single_cluster_rejected() {
        let (data, c) = clustering(&[0.0, 1.0], &[0, 0]);
        assert_eq!(fitness(&data, &c), Err(ClusterError::TooFewClusters(1)));
    }
}
