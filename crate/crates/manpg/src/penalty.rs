//! Nonsmooth convex penalties with closed-form proximal mappings and an
//! application of one element of the generalized Jacobian of the prox,
//! as needed by the semi-smooth Newton subproblem solver.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::linalg::Mat;

/// A convex penalty term.
#[derive(Clone, Debug)]
pub enum Penalty {
    /// Identically zero.
    Zero,
    /// `ridge·Σ_j ‖B_j‖₂² + Σ_j lasso_j·‖B_j‖₁` over columns `B_j`
    /// (the elastic-net regularizer of the sparse PCA formulation).
    ColumnElasticNet { ridge: f64, lasso: Array1<f64> },
    /// `weight·Σ_j ‖A_{j·}‖₂` over rows (group sparsity). Coincides with
    /// `L1` on single-column matrices.
    RowL21 { weight: f64 },
    /// `weight·Σ_{ij} |A_{ij}|`.
    L1 { weight: f64 },
}

impl Penalty {
    pub fn column_elastic_net(ridge: f64, lasso: Array1<f64>) -> Result<Self> {
        if ridge < 0.0 || lasso.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidArgument("penalty weights must be nonnegative".into()));
        }
        Ok(Penalty::ColumnElasticNet { ridge, lasso })
    }

    pub fn row_l21(weight: f64) -> Result<Self> {
        if weight < 0.0 {
            return Err(Error::InvalidArgument("penalty weights must be nonnegative".into()));
        }
        Ok(Penalty::RowL21 { weight })
    }

    pub fn l1(weight: f64) -> Result<Self> {
        if weight < 0.0 {
            return Err(Error::InvalidArgument("penalty weights must be nonnegative".into()));
        }
        Ok(Penalty::L1 { weight })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Penalty::Zero)
    }

    fn check_shape(&self, x: &Mat) -> Result<()> {
        if let Penalty::ColumnElasticNet { lasso, .. } = self {
            if lasso.len() != x.ncols() {
                return Err(Error::Dimension(format!(
                    "lasso weight vector has length {}, matrix has {} columns",
                    lasso.len(),
                    x.ncols()
                )));
            }
        }
        Ok(())
    }

    /// Penalty value at `x`.
    pub fn eval(&self, x: &Mat) -> Result<f64> {
        self.check_shape(x)?;
        Ok(match self {
            Penalty::Zero => 0.0,
            Penalty::ColumnElasticNet { ridge, lasso } => {
                let mut total = 0.0;
                for (j, col) in x.columns().into_iter().enumerate() {
                    let sq: f64 = col.iter().map(|v| v * v).sum();
                    let abs: f64 = col.iter().map(|v| v.abs()).sum();
                    total += ridge * sq + lasso[j] * abs;
                }
                total
            }
            Penalty::RowL21 { weight } => {
                weight
                    * x.rows()
                        .into_iter()
                        .map(|row| row.iter().map(|v| v * v).sum::<f64>().sqrt())
                        .sum::<f64>()
            }
            Penalty::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
        })
    }

    /// Proximal mapping `argmin_z pen(z) + ‖z − x‖²_F / (2t)`, in closed form.
    pub fn prox(&self, x: &Mat, t: f64) -> Result<Mat> {
        if t <= 0.0 {
            return Err(Error::InvalidArgument(format!("prox step must be positive, got {t}")));
        }
        self.check_shape(x)?;
        Ok(match self {
            Penalty::Zero => x.clone(),
            Penalty::L1 { weight } => x.mapv(|v| soft(v, t * weight)),
            Penalty::RowL21 { weight } => {
                let mut out = x.clone();
                let thresh = t * weight;
                for mut row in out.rows_mut() {
                    let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let scale = if norm > thresh { 1.0 - thresh / norm } else { 0.0 };
                    row.mapv_inplace(|v| v * scale);
                }
                out
            }
            Penalty::ColumnElasticNet { ridge, lasso } => {
                let mut out = x.clone();
                let denom = 1.0 + 2.0 * t * ridge;
                for (j, mut col) in out.columns_mut().into_iter().enumerate() {
                    let thresh = t * lasso[j];
                    col.mapv_inplace(|v| soft(v, thresh) / denom);
                }
                out
            }
        })
    }

    /// Apply one element of the generalized Jacobian of `prox(·, t)` at `x`
    /// to the direction `v`.
    ///
    /// At tie points (a row norm or entry magnitude exactly at the
    /// threshold) the zero element is selected, which keeps the operator
    /// positive semi-definite.
    pub fn jacobian_apply(&self, x: &Mat, t: f64, v: &Mat) -> Result<Mat> {
        if t <= 0.0 {
            return Err(Error::InvalidArgument(format!("prox step must be positive, got {t}")));
        }
        self.check_shape(x)?;
        if x.dim() != v.dim() {
            return Err(Error::Dimension(format!(
                "direction shape {:?} does not match point shape {:?}",
                v.dim(),
                x.dim()
            )));
        }
        Ok(match self {
            Penalty::Zero => v.clone(),
            Penalty::L1 { weight } => {
                let thresh = t * weight;
                let mut out = v.clone();
                out.zip_mut_with(x, |o, &xi| {
                    if xi.abs() <= thresh {
                        *o = 0.0;
                    }
                });
                out
            }
            Penalty::RowL21 { weight } => {
                let thresh = t * weight;
                let mut out = Mat::zeros(v.dim());
                for ((xrow, vrow), mut orow) in x
                    .rows()
                    .into_iter()
                    .zip(v.rows())
                    .zip(out.rows_mut())
                {
                    let norm = xrow.iter().map(|u| u * u).sum::<f64>().sqrt();
                    if norm > thresh {
                        // Δ v = v − (tτ/‖b‖)(v − b(bᵀv)/‖b‖²)
                        let coef = thresh / norm;
                        let bv: f64 = xrow.iter().zip(vrow.iter()).map(|(b, w)| b * w).sum();
                        for (k, o) in orow.iter_mut().enumerate() {
                            let radial = xrow[k] * bv / (norm * norm);
                            *o = vrow[k] - coef * (vrow[k] - radial);
                        }
                    }
                }
                out
            }
            Penalty::ColumnElasticNet { ridge, lasso } => {
                let denom = 1.0 + 2.0 * t * ridge;
                let mut out = v.clone();
                for (j, mut col) in out.columns_mut().into_iter().enumerate() {
                    let thresh = t * lasso[j];
                    for (o, &xi) in col.iter_mut().zip(x.column(j).iter()) {
                        *o = if xi.abs() > thresh { *o / denom } else { 0.0 };
                    }
                }
                out
            }
        })
    }
}

fn soft(v: f64, thresh: f64) -> f64 {
    if v > thresh {
        v - thresh
    } else if v < -thresh {
        v + thresh
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{self, randn};
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn all_kinds(cols: usize) -> Vec<Penalty> {
        vec![
            Penalty::Zero,
            Penalty::l1(0.7).unwrap(),
            Penalty::row_l21(0.9).unwrap(),
            Penalty::column_elastic_net(0.5, Array1::from_elem(cols, 0.3)).unwrap(),
        ]
    }

    #[test]
    fn eval_examples() {
        assert_eq!(Penalty::Zero.eval(&randn(3, 2, &mut ChaCha12Rng::seed_from_u64(1))).unwrap(), 0.0);

        let rows = Penalty::row_l21(2.0).unwrap();
        let x = array![[3.0, 4.0], [0.0, 0.0]];
        assert!((rows.eval(&x).unwrap() - 10.0).abs() < 1e-15);

        let en = Penalty::column_elastic_net(1.0, array![2.0]).unwrap();
        let x = array![[1.0], [-2.0]];
        assert!((en.eval(&x).unwrap() - 11.0).abs() < 1e-15);
    }

    #[test]
    fn eval_rejects_weight_length_mismatch() {
        let en = Penalty::column_elastic_net(1.0, array![1.0, 2.0]).unwrap();
        assert!(en.eval(&Mat::zeros((3, 3))).is_err());
    }

    #[test]
    fn prox_examples() {
        let l1 = Penalty::l1(1.0).unwrap();
        let x = array![[2.0], [-0.5]];
        let p = l1.prox(&x, 1.0).unwrap();
        assert!(linalg::fro(&(&p - &array![[1.0], [0.0]])) < 1e-15);

        let rows = Penalty::row_l21(2.0).unwrap();
        let x = array![[3.0, 4.0]];
        let p = rows.prox(&x, 1.0).unwrap();
        assert!(linalg::fro(&(&p - &array![[1.8, 2.4]])) < 1e-15);

        let en = Penalty::column_elastic_net(0.5, array![1.0]).unwrap();
        let p = en.prox(&array![[3.0]], 1.0).unwrap();
        assert!((p[[0, 0]] - 1.0).abs() < 1e-15);

        assert!(l1.prox(&x, 0.0).is_err());
        assert!(l1.prox(&x, -1.0).is_err());
    }

    #[test]
    fn jacobian_examples() {
        let v = randn(4, 2, &mut ChaCha12Rng::seed_from_u64(2));
        let w = Penalty::Zero.jacobian_apply(&Mat::zeros((4, 2)), 1.0, &v).unwrap();
        assert_eq!(w, v);

        let l1 = Penalty::l1(1.0).unwrap();
        let x = array![[2.0], [0.5]];
        let v = array![[1.0], [1.0]];
        let w = l1.jacobian_apply(&x, 1.0, &v).unwrap();
        assert!(linalg::fro(&(&w - &array![[1.0], [0.0]])) < 1e-15);

        // row b = (0, 2), v = (1, 0): Δ = I − (1/2)(I − e₂e₂ᵀ), Δv = (1/2, 0)
        let rows = Penalty::row_l21(1.0).unwrap();
        let x = array![[0.0, 2.0]];
        let v = array![[1.0, 0.0]];
        let w = rows.jacobian_apply(&x, 1.0, &v).unwrap();
        assert!(linalg::fro(&(&w - &array![[0.5, 0.0]])) < 1e-15);

        // cross-check the same value against a central finite difference
        let h = 1e-6;
        let fd = (rows.prox(&(&x + &(&v * h)), 1.0).unwrap()
            - rows.prox(&(&x - &(&v * h)), 1.0).unwrap())
            / (2.0 * h);
        assert!(linalg::fro(&(&w - &fd)) < 1e-8);
    }

    #[test]
    fn prox_is_firmly_nonexpansive() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for pen in all_kinds(3) {
            for _ in 0..1000 {
                let x = randn(5, 3, &mut rng);
                let y = randn(5, 3, &mut rng);
                let px = pen.prox(&x, 0.8).unwrap();
                let py = pen.prox(&y, 0.8).unwrap();
                assert!(linalg::fro(&(&px - &py)) <= linalg::fro(&(&x - &y)) + 1e-12);
            }
        }
    }

    #[test]
    fn prox_minimizes_its_objective() {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let t = 0.6;
        for pen in all_kinds(3) {
            let x = randn(5, 3, &mut rng);
            let p = pen.prox(&x, t).unwrap();
            let obj_p = pen.eval(&p).unwrap() + linalg::fro_sq(&(&p - &x)) / (2.0 * t);
            for _ in 0..100 {
                let z = randn(5, 3, &mut rng);
                let obj_z = pen.eval(&z).unwrap() + linalg::fro_sq(&(&z - &x)) / (2.0 * t);
                assert!(obj_p <= obj_z + 1e-12);
            }
        }
    }

    #[test]
    fn jacobian_matches_finite_differences_away_from_ties() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let t = 0.9;
        let h = 1e-6;
        for pen in all_kinds(4) {
            let mut checked = 0;
            while checked < 50 {
                let x = randn(6, 4, &mut rng);
                if tie_distance(&pen, &x, t) < 1e-3 {
                    continue;
                }
                let v = randn(6, 4, &mut rng);
                let w = pen.jacobian_apply(&x, t, &v).unwrap();
                let fd = (pen.prox(&(&x + &(&v * h)), t).unwrap()
                    - pen.prox(&(&x - &(&v * h)), t).unwrap())
                    / (2.0 * h);
                let err = linalg::fro(&(&w - &fd));
                assert!(err <= 1e-5 * linalg::fro(&v), "{pen:?}: err {err:.3e}");
                checked += 1;
            }
        }
    }

    /// Distance of x from the active/inactive boundary of the prox.
    fn tie_distance(pen: &Penalty, x: &Mat, t: f64) -> f64 {
        match pen {
            Penalty::Zero => f64::MAX,
            Penalty::L1 { weight } => x
                .iter()
                .map(|v| (v.abs() - t * weight).abs())
                .fold(f64::MAX, f64::min),
            Penalty::RowL21 { weight } => x
                .rows()
                .into_iter()
                .map(|r| {
                    let n = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                    (n - t * weight).abs()
                })
                .fold(f64::MAX, f64::min),
            Penalty::ColumnElasticNet { lasso, .. } => {
                let mut d = f64::MAX;
                for (j, col) in x.columns().into_iter().enumerate() {
                    for v in col.iter() {
                        d = d.min((v.abs() - t * lasso[j]).abs());
                    }
                }
                d
            }
        }
    }

    #[test]
    fn row_l21_equals_l1_on_vectors() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let rows = Penalty::row_l21(0.4).unwrap();
        let l1 = Penalty::l1(0.4).unwrap();
        for _ in 0..100 {
            let x = randn(7, 1, &mut rng);
            assert!((rows.eval(&x).unwrap() - l1.eval(&x).unwrap()).abs() < 1e-14);
            let pr = rows.prox(&x, 0.7).unwrap();
            let pl = l1.prox(&x, 0.7).unwrap();
            assert!(linalg::fro(&(&pr - &pl)) < 1e-14);
        }
    }

    #[test]
    fn row_jacobian_is_positive_semidefinite() {
        let mut rng = ChaCha12Rng::seed_from_u64(7);
        let rows = Penalty::row_l21(0.8).unwrap();
        for _ in 0..200 {
            let x = randn(5, 3, &mut rng);
            let v = randn(5, 3, &mut rng);
            let w = rows.jacobian_apply(&x, 1.0, &v).unwrap();
            // per-row quadratic form vᵀΔ_j v ≥ 0
            for (vrow, wrow) in v.rows().into_iter().zip(w.rows()) {
                let q: f64 = vrow.iter().zip(wrow.iter()).map(|(a, b)| a * b).sum();
                assert!(q >= -1e-12);
            }
        }
    }
}
