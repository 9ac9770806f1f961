//! Naive data-based estimates of the Lipschitz constants and the covering
//! radius. These are rough conveniences for picking `lipschitz` and `delta`,
//! not certified bounds.

use anyhow::{bail, Result};
use nalgebra::DVector;
use nzpc_core::DataWindow;
use serde::Serialize;

/// Probes per dimension are capped so the grid stays below this size.
const MAX_PROBES: usize = 20_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    /// Largest slope `|Δ(Y₊)_i| / ‖Δ[Y₋; U₋]‖` per output dimension.
    pub lipschitz: Vec<f64>,
    /// Covering radius of the data points over a probe grid spanning them.
    pub delta: f64,
    pub columns: usize,
    pub pairs: usize,
    pub probes: usize,
}

/// Regressor points `[y; u]` of every window column.
pub fn regressor_points(window: &DataWindow) -> Vec<DVector<f64>> {
    (0..window.len())
        .map(|j| {
            let col = window.column(j);
            let mut z = DVector::zeros(col.y_minus.len() + col.u_minus.len());
            z.rows_mut(0, col.y_minus.len()).copy_from(&col.y_minus);
            z.rows_mut(col.y_minus.len(), col.u_minus.len())
                .copy_from(&col.u_minus);
            z
        })
        .collect()
}

/// Per-dimension maximum pairwise slope. Pairs with identical regressors are
/// skipped.
pub fn lipschitz_slopes(window: &DataWindow) -> Result<(Vec<f64>, usize)> {
    if window.len() < 2 {
        bail!("need at least 2 window columns, got {}", window.len());
    }
    let z = regressor_points(window);
    let y = window.y_plus();
    let mut best = vec![0.0f64; window.n_y()];
    let mut pairs = 0;
    for i in 0..z.len() {
        for j in i + 1..z.len() {
            let dist = (&z[i] - &z[j]).norm();
            if dist == 0.0 {
                continue;
            }
            pairs += 1;
            for (d, b) in best.iter_mut().enumerate() {
                *b = b.max((y[(d, i)] - y[(d, j)]).abs() / dist);
            }
        }
    }
    if pairs == 0 {
        bail!("all window columns share the same regressor, slopes are undefined");
    }
    Ok((best, pairs))
}

/// `max_p min_j ‖p − z_j‖`: the largest distance from a probe to its nearest
/// data point. Adding data points never increases it.
pub fn covering_radius(points: &[DVector<f64>], probes: &[DVector<f64>]) -> f64 {
    probes
        .iter()
        .map(|p| {
            points
                .iter()
                .map(|z| (p - z).norm())
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}

/// Regular grid over the bounding box of `points`.
pub fn probe_grid(points: &[DVector<f64>]) -> Vec<DVector<f64>> {
    let Some(first) = points.first() else {
        return vec![];
    };
    let n = first.len();
    let mut lo = first.clone();
    let mut hi = first.clone();
    for p in points {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let per_dim = ((MAX_PROBES as f64).powf(1.0 / n as f64).floor() as usize).max(2);
    let total = per_dim.pow(n as u32);
    (0..total)
        .map(|mut idx| {
            DVector::from_fn(n, |d, _| {
                let k = idx % per_dim;
                idx /= per_dim;
                lo[d] + (hi[d] - lo[d]) * k as f64 / (per_dim - 1) as f64
            })
        })
        .collect()
}

pub fn estimate(window: &DataWindow) -> Result<Estimate> {
    let (lipschitz, pairs) = lipschitz_slopes(window)?;
    let points = regressor_points(window);
    let probes = probe_grid(&points);
    Ok(Estimate {
        lipschitz,
        delta: covering_radius(&points, &probes),
        columns: window.len(),
        pairs,
        probes: probes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn linear_map_slopes_approach_row_norms() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = DMatrix::from_row_slice(2, 4, &[1.0, -2.0, 0.5, 0.0, 0.3, 0.3, -1.0, 2.0]);
        let t = 300;
        let z = DMatrix::from_fn(4, t, |_, _| rng.gen_range(-1.0..1.0));
        let w = DataWindow::from_matrices(
            z.rows(0, 2).into_owned(),
            z.rows(2, 2).into_owned(),
            &m * &z,
        )
        .unwrap();
        let (slopes, _) = lipschitz_slopes(&w).unwrap();
        for (d, s) in slopes.iter().enumerate() {
            let norm = m.row(d).norm();
            assert!(*s <= norm + 1e-12);
            assert!(*s >= 0.95 * norm, "{s} vs {norm}");
        }
    }

    #[test]
    fn identical_columns_are_an_error() {
        let w = DataWindow::from_matrices(
            DMatrix::from_element(1, 2, 1.0),
            DMatrix::from_element(1, 2, 0.5),
            DMatrix::from_element(1, 2, 2.0),
        )
        .unwrap();
        assert!(lipschitz_slopes(&w).is_err());
    }

    #[test]
    fn covering_radius_of_a_grid_point_set() {
        let points: Vec<_> = [0.0, 1.0, 2.0]
            .iter()
            .map(|&x| DVector::from_vec(vec![x]))
            .collect();
        let probes: Vec<_> = [0.5, 1.5]
            .iter()
            .map(|&x| DVector::from_vec(vec![x]))
            .collect();
        assert_eq!(covering_radius(&points, &probes), 0.5);
    }

    proptest::proptest! {
        #[test]
        fn denser_data_never_increases_the_covering_radius(
            pts in proptest::collection::vec(proptest::collection::vec(-5.0..5.0f64, 3), 2..40),
            split in 1usize..39,
        ) {
            let points: Vec<_> = pts.into_iter().map(DVector::from_vec).collect();
            let k = split.min(points.len() - 1);
            let probes = probe_grid(&points);
            let sparse = covering_radius(&points[..k], &probes);
            let dense = covering_radius(&points, &probes);
            proptest::prop_assert!(dense <= sparse);
        }
    }

    #[test]
    fn probe_grid_spans_the_bounding_box() {
        let points = vec![
            DVector::from_vec(vec![0.0, -1.0]),
            DVector::from_vec(vec![2.0, 1.0]),
        ];
        let grid = probe_grid(&points);
        assert!(grid.len() <= MAX_PROBES);
        assert!(grid.iter().any(|p| p == &points[0]));
        assert!(grid.iter().any(|p| p == &points[1]));
    }
}
