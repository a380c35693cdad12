//! Dense linear-algebra helpers: Lyapunov solvers, symplectic spectra,
//! and JSON-friendly matrix serialization.

use crate::error::{Error, Result};
use crate::C64;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Frobenius norm.
pub fn fro(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Spectral abscissa: max Re of the eigenvalues of a real square matrix.
pub fn spectral_abscissa(a: &DMatrix<f64>) -> f64 {
    a.clone()
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Solves A V + V A^T + D = 0 for symmetric D and Hurwitz A.
///
/// Uses the Kronecker-vectorized direct solve up to `n = 12` and a Schur
/// (Bartels-Stewart) substitution above; all paper-scale systems take the
/// direct path.
pub fn solve_lyapunov(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    assert_eq!(a.ncols(), n);
    assert_eq!(d.nrows(), n);
    assert_eq!(d.ncols(), n);

    let v = if n <= 12 {
        lyapunov_kron(a, d)?
    } else {
        lyapunov_schur(a, d)?
    };
    // symmetrize away round-off skew
    let v = (&v + v.transpose()) * 0.5;

    let residual = fro(&(a * &v + &v * a.transpose() + d));
    let scale = fro(d).max(f64::MIN_POSITIVE);
    if residual / scale > 1e-10 {
        return Err(Error::IllConditioned {
            cond_estimate: lyapunov_condition(a),
        });
    }
    Ok(v)
}

fn lyapunov_kron(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    // vec(AV + VA^T) = (I (x) A + A (x) I) vec(V)
    let k = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, d.iter().map(|x| -x));
    let sol = k.lu().solve(&rhs).ok_or(Error::IllConditioned {
        cond_estimate: lyapunov_condition(a),
    })?;
    Ok(DMatrix::from_iterator(n, n, sol.iter().copied()))
}

/// Bartels-Stewart on the real Schur form, back-substituting over the
/// 1x1/2x2 diagonal blocks.
fn lyapunov_schur(a: &DMatrix<f64>, d: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let (q, t) = a.clone().schur().unpack();
    let dt = q.transpose() * d * &q;

    // diagonal block boundaries of the quasi-triangular T
    let mut starts = Vec::new();
    let mut i = 0;
    while i < n {
        starts.push(i);
        if i + 1 < n && t[(i + 1, i)].abs() > 0.0 {
            i += 2;
        } else {
            i += 1;
        }
    }
    let nb = starts.len();
    let block = |k: usize| {
        let s = starts[k];
        let e = if k + 1 < nb { starts[k + 1] } else { n };
        (s, e - s)
    };

    let mut x = DMatrix::<f64>::zeros(n, n);
    // T X + X T^T = -dt, solved from the bottom-right corner upward
    for bi in (0..nb).rev() {
        for bj in (0..nb).rev() {
            let (si, ni) = block(bi);
            let (sj, nj) = block(bj);
            let mut rhs = -dt.view((si, sj), (ni, nj)).clone_owned();
            // contributions from already-solved blocks
            for bk in bi + 1..nb {
                let (sk, nk) = block(bk);
                rhs -= t.view((si, sk), (ni, nk)) * x.view((sk, sj), (nk, nj));
            }
            for bk in bj + 1..nb {
                let (sk, nk) = block(bk);
                rhs -= x.view((si, sk), (ni, nk)) * t.view((sj, sk), (nj, nk)).transpose();
            }
            let tii = t.view((si, si), (ni, ni)).clone_owned();
            let tjj = t.view((sj, sj), (nj, nj)).clone_owned();
            // small Sylvester: tii y + y tjj^T = rhs
            let eye_i = DMatrix::<f64>::identity(ni, ni);
            let eye_j = DMatrix::<f64>::identity(nj, nj);
            let small = eye_j.kronecker(&tii) + tjj.kronecker(&eye_i);
            let svec = DVector::from_iterator(ni * nj, rhs.iter().copied());
            let y = small.lu().solve(&svec).ok_or(Error::IllConditioned {
                cond_estimate: lyapunov_condition(a),
            })?;
            x.view_mut((si, sj), (ni, nj))
                .copy_from(&DMatrix::from_iterator(ni, nj, y.iter().copied()));
        }
    }
    Ok(&q * x * q.transpose())
}

/// Rough conditioning estimate for the Lyapunov operator: norm over the
/// smallest eigenvalue-pair separation |l_i + l_j|.
fn lyapunov_condition(a: &DMatrix<f64>) -> f64 {
    let eigs = a.clone().complex_eigenvalues();
    let mut sep = f64::INFINITY;
    for i in 0..eigs.len() {
        for j in 0..eigs.len() {
            sep = sep.min((eigs[i] + eigs[j]).norm());
        }
    }
    if sep <= 0.0 {
        f64::INFINITY
    } else {
        fro(a) / sep
    }
}

/// Block-diagonal symplectic form Omega = diag([[0,1],[-1,0]], ...).
pub fn symplectic_form(n_modes: usize) -> DMatrix<f64> {
    let mut o = DMatrix::<f64>::zeros(2 * n_modes, 2 * n_modes);
    for k in 0..n_modes {
        o[(2 * k, 2 * k + 1)] = 1.0;
        o[(2 * k + 1, 2 * k)] = -1.0;
    }
    o
}

/// Symplectic eigenvalues of a real symmetric positive semidefinite
/// 2N x 2N matrix, ascending.
///
/// Uses T = V^{1/2} Omega V^{1/2}, which is real antisymmetric, so -T^2 is
/// symmetric PSD with the nu_k^2 as doubled eigenvalues. This stays in
/// symmetric eigenproblems throughout; the nonsymmetric route (eigenvalues
/// of Omega V) can stall on the exactly degenerate pairs that partial
/// transposes of pure states produce.
pub fn symplectic_eigenvalues(v: &DMatrix<f64>) -> Vec<f64> {
    let n2 = v.nrows();
    debug_assert_eq!(n2 % 2, 0);
    let eig = v.clone_owned().symmetric_eigen();
    let mut sqrt_v = DMatrix::<f64>::zeros(n2, n2);
    for k in 0..n2 {
        let lam = eig.eigenvalues[k].max(0.0).sqrt();
        let col = eig.eigenvectors.column(k);
        for i in 0..n2 {
            for j in 0..n2 {
                sqrt_v[(i, j)] += lam * col[i] * col[j];
            }
        }
    }
    let omega = symplectic_form(n2 / 2);
    let t = &sqrt_v * omega * &sqrt_v;
    let m = -(&t * &t);
    let m = (&m + m.transpose()) * 0.5;
    let mut nus: Vec<f64> = m
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|x| x.max(0.0).sqrt())
        .collect();
    nus.sort_by(|a, b| a.partial_cmp(b).unwrap());
    nus.into_iter().step_by(2).collect()
}

/// Minimum eigenvalue of the Hermitian matrix V + i Omega/2, computed through
/// its real symmetric embedding [[V, -Omega/2], [Omega/2, V]].
pub fn physicality_defect(v: &DMatrix<f64>) -> f64 {
    let n2 = v.nrows();
    let omega = symplectic_form(n2 / 2);
    let mut big = DMatrix::<f64>::zeros(2 * n2, 2 * n2);
    big.view_mut((0, 0), (n2, n2)).copy_from(v);
    big.view_mut((n2, n2), (n2, n2)).copy_from(v);
    big.view_mut((0, n2), (n2, n2)).copy_from(&(-0.5 * &omega));
    big.view_mut((n2, 0), (n2, n2)).copy_from(&(0.5 * &omega));
    let eig = big.symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Row-major JSON image of a real matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixJson {
    pub rows: usize,
    pub cols: usize,
    /// Row-major entries.
    pub data: Vec<f64>,
}

impl MatrixJson {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.nrows() * m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                data.push(m[(i, j)]);
            }
        }
        MatrixJson {
            rows: m.nrows(),
            cols: m.ncols(),
            data,
        }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<f64>> {
        if self.data.len() != self.rows * self.cols {
            return Err(Error::Format(format!(
                "matrix payload has {} entries, expected {}x{}",
                self.data.len(),
                self.rows,
                self.cols
            )));
        }
        Ok(DMatrix::from_row_slice(self.rows, self.cols, &self.data))
    }
}

/// Solves (-i w I - A) u = f for a real matrix A and complex force f.
pub fn resolvent_solve(a: &DMatrix<f64>, w: f64, f: &DVector<C64>) -> Result<DVector<C64>> {
    let n = a.nrows();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = C64::new(-a[(i, j)], 0.0);
        }
        m[(i, i)] -= C64::new(0.0, w);
    }
    m.lu()
        .solve(f)
        .ok_or_else(|| Error::Format(format!("resolvent singular at omega = {w:e}")))
}

/// Full resolvent M(w) = (-i w I - A)^{-1}.
pub fn resolvent(a: &DMatrix<f64>, w: f64) -> Result<DMatrix<C64>> {
    let n = a.nrows();
    let mut m = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = C64::new(-a[(i, j)], 0.0);
        }
        m[(i, i)] -= C64::new(0.0, w);
    }
    m.try_inverse()
        .ok_or_else(|| Error::Format(format!("resolvent singular at omega = {w:e}")))
}
