//! Gaussian quantum-information measures on covariance matrices:
//! quadrature variances and squeezing, logarithmic negativity, minimum
//! residual contangle, and Gaussian (Renyi-2) steering.
//!
//! All formulas use the vacuum-variance-1/2 normalization of the covariance
//! matrices produced by [`crate::fluctuations`].

use crate::error::{Error, Result};
use crate::fluctuations::CovarianceMatrix;
use crate::linalg::symplectic_eigenvalues;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Bipartition of a covariance matrix by mode indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub side_a: Vec<usize>,
    pub side_b: Vec<usize>,
}

impl Partition {
    pub fn new(side_a: Vec<usize>, side_b: Vec<usize>) -> Result<Self> {
        if side_a.is_empty() || side_b.is_empty() {
            return Err(Error::Format("both partition sides must be non-empty".into()));
        }
        if side_a.iter().any(|i| side_b.contains(i)) {
            return Err(Error::Format("partition sides must be disjoint".into()));
        }
        Ok(Partition { side_a, side_b })
    }
}

fn check_physical(v: &CovarianceMatrix) -> Result<()> {
    let defect = v.physicality_defect();
    if defect < -1e-9 {
        return Err(Error::UnphysicalCovariance { defect });
    }
    Ok(())
}

/// Variance of the rotated quadrature X cos(phi) + Y sin(phi) of one mode,
/// plus its squeezing level in dB (positive = below vacuum).
pub fn quadrature_variance(v: &CovarianceMatrix, mode: usize, phase: f64) -> (f64, f64) {
    let b = v.mode_block(mode);
    let (c, s) = (phase.cos(), phase.sin());
    let var = c * c * b[(0, 0)] + 2.0 * c * s * b[(0, 1)] + s * s * b[(1, 1)];
    (var, -10.0 * (var / 0.5).log10())
}

/// Minimum of the quadrature variance over the phase: the smallest
/// eigenvalue of the 2x2 reduced block.
pub fn minimum_variance(v: &CovarianceMatrix, mode: usize) -> f64 {
    let b = v.mode_block(mode);
    let sym = (&b + b.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Partial transpose: momentum sign flip on the listed modes.
fn partial_transpose(v: &DMatrix<f64>, flip: &[usize]) -> DMatrix<f64> {
    let n = v.nrows() / 2;
    let mut p = DMatrix::<f64>::identity(2 * n, 2 * n);
    for &m in flip {
        p[(2 * m + 1, 2 * m + 1)] = -1.0;
    }
    &p * v * &p
}

/// Logarithmic negativity across a partition: E_N = max[0, -ln(2 nu-)] with
/// nu- the smallest symplectic eigenvalue of the partial transpose.
///
/// For two single modes the reduced 4x4 covariance matrix is used; a
/// single mode against the rest transposes the full reduced matrix of
/// `side_a + side_b`.
pub fn log_negativity(v: &CovarianceMatrix, partition: &Partition) -> Result<f64> {
    check_physical(v)?;
    let mut modes: Vec<usize> = partition
        .side_a
        .iter()
        .chain(partition.side_b.iter())
        .copied()
        .collect();
    modes.sort_unstable();
    let red = v.reduced(&modes);
    let flip: Vec<usize> = partition
        .side_b
        .iter()
        .map(|m| modes.iter().position(|x| x == m).expect("member of union"))
        .collect();
    let pt = partial_transpose(&red.v, &flip);
    let nus = symplectic_eigenvalues(&pt);
    let nu_min = nus
        .first()
        .copied()
        .ok_or_else(|| Error::Format("empty covariance matrix".into()))?;
    Ok((-(2.0 * nu_min).ln()).max(0.0))
}

/// Minimum residual contangle of a three-mode state: the smallest of
/// C_{i|jk} - C_{i|j} - C_{i|k} over the three focus modes, with the
/// contangle C the squared logarithmic negativity, floored at zero.
pub fn residual_contangle(v: &CovarianceMatrix) -> Result<f64> {
    if v.n_modes() != 3 {
        return Err(Error::Format(format!(
            "residual contangle needs exactly 3 modes (got {})",
            v.n_modes()
        )));
    }
    check_physical(v)?;
    let sq = |x: f64| x * x;
    let mut best = f64::INFINITY;
    for focus in 0..3 {
        let others: Vec<usize> = (0..3).filter(|&m| m != focus).collect();
        let c_one_rest = sq(log_negativity(
            v,
            &Partition::new(vec![focus], others.clone())?,
        )?);
        let c_pair_0 = sq(log_negativity(
            v,
            &Partition::new(vec![focus], vec![others[0]])?,
        )?);
        let c_pair_1 = sq(log_negativity(
            v,
            &Partition::new(vec![focus], vec![others[1]])?,
        )?);
        best = best.min(c_one_rest - c_pair_0 - c_pair_1);
    }
    Ok(best.max(0.0))
}

/// Gaussian Renyi-2 steering A -> B for a single steered mode B:
/// G = max{0, ln(det sigma_A / det sigma)/2} with sigma = 2V.
pub fn gaussian_steering(v: &CovarianceMatrix, partition: &Partition) -> Result<f64> {
    check_physical(v)?;
    if partition.side_b.len() != 1 {
        return Err(Error::Format(
            "steering is computed for a single steered mode".into(),
        ));
    }
    let mut modes: Vec<usize> = partition
        .side_a
        .iter()
        .chain(partition.side_b.iter())
        .copied()
        .collect();
    modes.sort_unstable();
    let sigma = v.reduced(&modes).v * 2.0;
    let a_local: Vec<usize> = partition
        .side_a
        .iter()
        .map(|m| modes.iter().position(|x| x == m).expect("member of union"))
        .collect();
    let k = a_local.len();
    let mut sigma_a = DMatrix::<f64>::zeros(2 * k, 2 * k);
    for (i, &mi) in a_local.iter().enumerate() {
        for (j, &mj) in a_local.iter().enumerate() {
            sigma_a
                .view_mut((2 * i, 2 * j), (2, 2))
                .copy_from(&sigma.view((2 * mi, 2 * mj), (2, 2)));
        }
    }
    let det_a = sigma_a.determinant();
    let det = sigma.determinant();
    if det <= 0.0 || det_a <= 0.0 {
        return Err(Error::UnphysicalCovariance {
            defect: det.min(det_a),
        });
    }
    Ok((0.5 * (det_a / det).ln()).max(0.0))
}

/// Analytic two-mode squeezed vacuum covariance matrix (vacuum = 1/2).
pub fn two_mode_squeezed_vacuum(r: f64) -> CovarianceMatrix {
    let (ch, sh) = ((2.0 * r).cosh(), (2.0 * r).sinh());
    let mut v = DMatrix::<f64>::zeros(4, 4);
    v[(0, 0)] = ch;
    v[(1, 1)] = ch;
    v[(2, 2)] = ch;
    v[(3, 3)] = ch;
    v[(0, 2)] = sh;
    v[(2, 0)] = sh;
    v[(1, 3)] = -sh;
    v[(3, 1)] = -sh;
    CovarianceMatrix {
        v: v * 0.5,
        ordering: "[X_1,Y_1,X_2,Y_2]".into(),
    }
}

/// Vacuum state of `n` modes.
pub fn vacuum(n: usize) -> CovarianceMatrix {
    CovarianceMatrix {
        v: DMatrix::identity(2 * n, 2 * n) * 0.5,
        ordering: format!("[vacuum x{n}]"),
    }
}

/// Direct sum of two covariance matrices.
pub fn direct_sum(a: &CovarianceMatrix, b: &CovarianceMatrix) -> CovarianceMatrix {
    let (na, nb) = (a.v.nrows(), b.v.nrows());
    let mut v = DMatrix::<f64>::zeros(na + nb, na + nb);
    v.view_mut((0, 0), (na, na)).copy_from(&a.v);
    v.view_mut((na, na), (nb, nb)).copy_from(&b.v);
    CovarianceMatrix {
        v,
        ordering: format!("{} (+) {}", a.ordering, b.ordering),
    }
}

/// One requested measure for batch evaluation.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "measure")]
pub enum MeasureRequest {
    QuadratureVariance { mode: usize, phase: f64 },
    LogNegativity { side_a: Vec<usize>, side_b: Vec<usize> },
    ResidualContangle,
    GaussianSteering { side_a: Vec<usize>, side_b: Vec<usize> },
}

/// Evaluates a batch of measure requests against one covariance matrix;
/// one labelled value per request.
pub fn evaluate_batch(
    v: &CovarianceMatrix,
    requests: &[MeasureRequest],
) -> Result<Vec<(String, f64)>> {
    requests
        .iter()
        .map(|req| match req {
            MeasureRequest::QuadratureVariance { mode, phase } => {
                let (var, _) = quadrature_variance(v, *mode, *phase);
                Ok((format!("variance[{mode}]@{phase:.6}"), var))
            }
            MeasureRequest::LogNegativity { side_a, side_b } => {
                let p = Partition::new(side_a.clone(), side_b.clone())?;
                Ok((
                    format!("log_negativity[{side_a:?}|{side_b:?}]"),
                    log_negativity(v, &p)?,
                ))
            }
            MeasureRequest::ResidualContangle => {
                Ok(("residual_contangle".into(), residual_contangle(v)?))
            }
            MeasureRequest::GaussianSteering { side_a, side_b } => {
                let p = Partition::new(side_a.clone(), side_b.clone())?;
                Ok((
                    format!("steering[{side_a:?}->{side_b:?}]"),
                    gaussian_steering(v, &p)?,
                ))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn partition(a: usize, b: usize) -> Partition {
        Partition::new(vec![a], vec![b]).unwrap()
    }

    #[test]
    fn vacuum_variance_is_half_at_any_phase() {
        let v = vacuum(2);
        for phase in [0.0, 0.3, 1.2, 2.9] {
            let (var, db) = quadrature_variance(&v, 0, phase);
            assert_relative_eq!(var, 0.5, max_relative = 1e-14);
            assert_relative_eq!(db, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn squeezed_mode_variance_definition() {
        let r: f64 = 0.7;
        let mut v = vacuum(1);
        v.v[(0, 0)] = 0.5 * (-2.0 * r).exp();
        v.v[(1, 1)] = 0.5 * (2.0 * r).exp();
        let (var, db) = quadrature_variance(&v, 0, 0.0);
        assert_relative_eq!(var, 0.5 * (-2.0 * r).exp(), max_relative = 1e-14);
        assert!(db > 0.0, "below-vacuum variance must read positive dB");
        assert_relative_eq!(
            minimum_variance(&v, 0),
            0.5 * (-2.0 * r).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn minimum_variance_equals_block_eigenvalue_on_rotated_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let r: f64 = rng.gen_range(0.0..1.5);
            let th: f64 = rng.gen_range(0.0..std::f64::consts::PI);
            let (c, s) = (th.cos(), th.sin());
            let rot = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
            let sq = DMatrix::from_row_slice(
                2,
                2,
                &[0.5 * (-2.0 * r).exp(), 0.0, 0.0, 0.5 * (2.0 * r).exp()],
            );
            let block = &rot * sq * rot.transpose();
            let cm = CovarianceMatrix {
                v: block.clone(),
                ordering: "[X,Y]".into(),
            };
            // minimize over a fine phase grid and compare; the grid is
            // quadratically accurate near the minimum
            let grid_min = (0..7200)
                .map(|k| quadrature_variance(&cm, 0, k as f64 * std::f64::consts::PI / 7200.0).0)
                .fold(f64::INFINITY, f64::min);
            assert_relative_eq!(grid_min, minimum_variance(&cm, 0), max_relative = 1e-3);
        }
    }

    #[test]
    fn product_of_vacua_is_separable_and_unsteerable() {
        let v = vacuum(2);
        assert_eq!(log_negativity(&v, &partition(0, 1)).unwrap(), 0.0);
        assert_eq!(gaussian_steering(&v, &partition(0, 1)).unwrap(), 0.0);
        assert_eq!(gaussian_steering(&v, &partition(1, 0)).unwrap(), 0.0);
    }

    #[test]
    fn tmsv_log_negativity_is_two_r() {
        for r in [0.1, 0.5, 1.0] {
            let v = two_mode_squeezed_vacuum(r);
            let en = log_negativity(&v, &partition(0, 1)).unwrap();
            assert_relative_eq!(en, 2.0 * r, max_relative = 1e-9);
        }
    }

    #[test]
    fn direct_sums_carry_no_entanglement() {
        let v = direct_sum(&vacuum(1), &vacuum(1));
        assert_eq!(log_negativity(&v, &partition(0, 1)).unwrap(), 0.0);
        // thermal (x) squeezed-single-mode still separable across the sum
        let mut th = vacuum(1);
        th.v *= 3.0;
        let mut sq = vacuum(1);
        sq.v[(0, 0)] = 0.5 * (-1.0f64).exp();
        sq.v[(1, 1)] = 0.5 * (1.0f64).exp();
        let v = direct_sum(&th, &sq);
        assert_eq!(log_negativity(&v, &partition(0, 1)).unwrap(), 0.0);
    }

    #[test]
    fn local_symplectic_operations_leave_log_negativity_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let v0 = two_mode_squeezed_vacuum(0.8);
        let en0 = log_negativity(&v0, &partition(0, 1)).unwrap();
        for _ in 0..25 {
            // local rotation on A, local squeezer on B
            let th: f64 = rng.gen_range(0.0..6.28);
            let r: f64 = rng.gen_range(-0.8..0.8);
            let mut s = DMatrix::<f64>::identity(4, 4);
            s[(0, 0)] = th.cos();
            s[(0, 1)] = -th.sin();
            s[(1, 0)] = th.sin();
            s[(1, 1)] = th.cos();
            s[(2, 2)] = (-r).exp();
            s[(3, 3)] = r.exp();
            let v = CovarianceMatrix {
                v: &s * &v0.v * s.transpose(),
                ordering: v0.ordering.clone(),
            };
            let en = log_negativity(&v, &partition(0, 1)).unwrap();
            assert_relative_eq!(en, en0, epsilon = 1e-9);
        }
    }

    #[test]
    fn contangle_of_product_states_vanishes() {
        let v = vacuum(3);
        assert_eq!(residual_contangle(&v).unwrap(), 0.0);
        // pairwise-entangled 1-2 with mode 3 in vacuum, uncorrelated
        let v = direct_sum(&two_mode_squeezed_vacuum(0.9), &vacuum(1));
        assert_relative_eq!(residual_contangle(&v).unwrap(), 0.0, epsilon = 1e-12);
        assert!(residual_contangle(&vacuum(2)).is_err());
    }

    /// Random physical 3-mode covariance matrix: S diag(nu) S^T with
    /// nu_k >= 1/2 and S a product of local rotations, local squeezers,
    /// and pairwise two-mode squeezers (all symplectic).
    fn random_three_mode(rng: &mut ChaCha8Rng) -> CovarianceMatrix {
        let mut s = DMatrix::<f64>::identity(6, 6);
        for _ in 0..4 {
            let m = rng.gen_range(0..3) * 2;
            let th: f64 = rng.gen_range(0.0..6.28);
            let mut op = DMatrix::<f64>::identity(6, 6);
            op[(m, m)] = th.cos();
            op[(m, m + 1)] = -th.sin();
            op[(m + 1, m)] = th.sin();
            op[(m + 1, m + 1)] = th.cos();
            let r: f64 = rng.gen_range(-0.6..0.6);
            let m2 = rng.gen_range(0..3) * 2;
            op[(m2, m2)] *= (-r).exp();
            op[(m2 + 1, m2 + 1)] *= r.exp();
            // two-mode squeezer on a random distinct pair
            let (pa, pb) = match rng.gen_range(0..3) {
                0 => (0, 2),
                1 => (0, 4),
                _ => (2, 4),
            };
            let rt: f64 = rng.gen_range(0.0..0.7);
            let (ch, sh) = (rt.cosh(), rt.sinh());
            let mut tms = DMatrix::<f64>::identity(6, 6);
            tms[(pa, pa)] = ch;
            tms[(pa + 1, pa + 1)] = ch;
            tms[(pb, pb)] = ch;
            tms[(pb + 1, pb + 1)] = ch;
            tms[(pa, pb)] = sh;
            tms[(pb, pa)] = sh;
            tms[(pa + 1, pb + 1)] = -sh;
            tms[(pb + 1, pa + 1)] = -sh;
            s = op * tms * s;
        }
        let mut nu = DMatrix::<f64>::identity(6, 6);
        for k in 0..3 {
            let n: f64 = rng.gen_range(0.5..2.0);
            nu[(2 * k, 2 * k)] = n;
            nu[(2 * k + 1, 2 * k + 1)] = n;
        }
        CovarianceMatrix {
            v: &s * nu * s.transpose(),
            ordering: "[rand]".into(),
        }
    }

    #[test]
    fn monogamy_holds_on_sampled_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..40 {
            let v = random_three_mode(&mut rng);
            let r = residual_contangle(&v).unwrap();
            assert!(r >= 0.0);
        }
    }

    #[test]
    fn symmetric_tmsv_steers_both_ways_equally() {
        let v = two_mode_squeezed_vacuum(0.8);
        let ab = gaussian_steering(&v, &partition(0, 1)).unwrap();
        let ba = gaussian_steering(&v, &partition(1, 0)).unwrap();
        assert!(ab > 0.0);
        assert_relative_eq!(ab, ba, max_relative = 1e-12);
        // closed form: det sigma_A = cosh^2(2r), det sigma = 1
        assert_relative_eq!(ab, (2.0f64 * 0.8).cosh().ln(), max_relative = 1e-12);
    }

    /// TMSV sent through unbalanced loss channels: eta mixes each side with
    /// vacuum, V -> eta V + (1 - eta)/2 per side.
    fn lossy_tmsv(r: f64, eta_a: f64, eta_b: f64) -> CovarianceMatrix {
        let v0 = two_mode_squeezed_vacuum(r);
        let mut s = DMatrix::<f64>::identity(4, 4);
        s[(0, 0)] = eta_a.sqrt();
        s[(1, 1)] = eta_a.sqrt();
        s[(2, 2)] = eta_b.sqrt();
        s[(3, 3)] = eta_b.sqrt();
        let mut noise = DMatrix::<f64>::identity(4, 4);
        noise[(0, 0)] = (1.0 - eta_a) * 0.5;
        noise[(1, 1)] = (1.0 - eta_a) * 0.5;
        noise[(2, 2)] = (1.0 - eta_b) * 0.5;
        noise[(3, 3)] = (1.0 - eta_b) * 0.5;
        CovarianceMatrix {
            v: &s * &v0.v * s.transpose() + noise,
            ordering: v0.ordering.clone(),
        }
    }

    #[test]
    fn asymmetric_loss_gives_asymmetric_steering() {
        let v = lossy_tmsv(1.2, 0.95, 0.45);
        let ab = gaussian_steering(&v, &partition(0, 1)).unwrap();
        let ba = gaussian_steering(&v, &partition(1, 0)).unwrap();
        assert!(
            (ab - ba).abs() > 1e-3,
            "unequal damping must break steering symmetry (got {ab} vs {ba})"
        );
    }

    #[test]
    fn thermal_noise_on_the_steered_side_never_helps() {
        // adding thermal noise to the steered mode is a local noisy channel
        // on B; steering A->B must not increase
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let r = rng.gen_range(0.3..1.3);
            let v = lossy_tmsv(r, rng.gen_range(0.6..1.0), rng.gen_range(0.6..1.0));
            let g0 = gaussian_steering(&v, &partition(0, 1)).unwrap();
            let mut noisier = v.clone();
            let add = rng.gen_range(0.01..0.5);
            noisier.v[(2, 2)] += add;
            noisier.v[(3, 3)] += add;
            let g1 = gaussian_steering(&noisier, &partition(0, 1)).unwrap();
            assert!(g1 <= g0 + 1e-12, "noise increased steering: {g0} -> {g1}");
        }
    }

    #[test]
    fn unphysical_input_is_rejected() {
        let mut v = vacuum(2);
        v.v *= 0.2; // below vacuum everywhere
        assert!(log_negativity(&v, &partition(0, 1)).is_err());
        assert!(gaussian_steering(&v, &partition(0, 1)).is_err());
    }

    #[test]
    fn batch_evaluation_labels_every_request() {
        let v = direct_sum(&two_mode_squeezed_vacuum(0.5), &vacuum(1));
        let out = evaluate_batch(
            &v,
            &[
                MeasureRequest::QuadratureVariance { mode: 0, phase: 0.0 },
                MeasureRequest::LogNegativity {
                    side_a: vec![0],
                    side_b: vec![1],
                },
                MeasureRequest::ResidualContangle,
                MeasureRequest::GaussianSteering {
                    side_a: vec![0],
                    side_b: vec![1],
                },
            ],
        )
        .unwrap();
        assert_eq!(out.len(), 4);
        assert_relative_eq!(out[1].1, 1.0, max_relative = 1e-9);
    }
}
