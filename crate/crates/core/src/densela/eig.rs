use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

/// `A = W diag(values) W^T`, eigenvalues nonincreasing.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

const MAX_SWEEPS: usize = 50;

/// Cyclic two-sided Jacobi eigensolver for symmetric matrices, in `f64`.
pub fn eig_symmetric(a: &DenseMatrix) -> Result<SymmetricEigen> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let mut m = a.symmetric_part();
    // Eigenvectors stored by rows (row p = eigenvector p) for contiguous updates.
    let mut w = DenseMatrix::identity(n);
    let total = m.norm_fro();
    let mut converged = n < 2 || total == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)] * m[(i, j)])
            .sum::<f64>()
            .sqrt();
        if off <= f64::EPSILON * 0.5 * total {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                if apq.abs() <= f64::EPSILON * 0.5 * (app.abs() * aqq.abs()).sqrt() {
                    m[(p, q)] = 0.0;
                    m[(q, p)] = 0.0;
                    continue;
                }
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Columns p, q then rows p, q of m (A <- J^T A J).
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let wpk = w[(p, k)];
                    let wqk = w[(q, k)];
                    w[(p, k)] = c * wpk - s * wqk;
                    w[(q, k)] = s * wpk + c * wqk;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(j, j)].total_cmp(&m[(i, i)]));
    let values = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |i, j| w[(order[j], i)]);
    Ok(SymmetricEigen { values, vectors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::gaussian_matrix;

    #[test]
    fn diagonal_sorted() {
        let e = eig_symmetric(&DenseMatrix::from_diag(&[1.0, 5.0, 3.0])).unwrap();
        assert_eq!(e.values, vec![5.0, 3.0, 1.0]);
    }

    #[test]
    fn random_symmetric_decomposition() {
        let g = gaussian_matrix(30, 30, 7);
        let a = g.add(&g.transpose());
        let e = eig_symmetric(&a).unwrap();
        let w = &e.vectors;
        let rec = w.mul(&DenseMatrix::from_diag(&e.values)).mul(&w.transpose());
        assert!(rec.sub(&a).norm_fro() <= 1e-12 * a.norm_fro());
        let orth = w.transpose().mul(w).sub(&DenseMatrix::identity(30)).norm_fro();
        assert!(orth < 1e-12);
        let trace: f64 = a.diag().iter().sum();
        assert!((e.values.iter().sum::<f64>() - trace).abs() < 1e-11);
    }
}
