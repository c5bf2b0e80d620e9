//! Mesoscopic Gaussian states over the three collective modes.
//!
//! Modes are ordered `(X1, P1, X2, P2, X3, P3)`: the first two pairs belong
//! to the two chains, the third is the mixed pair that mediates their
//! bath-induced coupling. It is carried through every evolution and dropped
//! only at reduction time, since the dynamics couples it to the chain pairs.

use crate::error::{Error, Result};
use crate::linalg::{CovarianceMatrix, RMat, SymplecticForm, Tolerances};
use crate::meso::{self, MesoGenerator};
use crate::micro::{BathParams, FluctuationKinematics};

/// A zero-mean Gaussian state of the three-mode algebra, identified with its
/// 6x6 covariance matrix.
#[derive(Debug, Clone)]
pub struct MesoGaussianState {
    cov: CovarianceMatrix,
}

impl MesoGaussianState {
    pub fn new(cov: CovarianceMatrix) -> Result<Self> {
        if cov.dim() != 6 {
            return Err(Error::Dimension {
                context: "MesoGaussianState::new",
                expected: 6,
                got: cov.dim(),
            });
        }
        Ok(Self { cov })
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.cov
    }
}

/// The invariant thermal state: isotropic covariance
/// `(eta^2 + 1)/(4 eta) * identity`, a product over the three modes with no
/// correlations of any kind.
pub fn thermal_meso_state(bath: &BathParams) -> MesoGaussianState {
    let s = FluctuationKinematics::scale(bath);
    let tol = Tolerances::DEFAULT;
    let cov = CovarianceMatrix::new(
        RMat::identity(6, 6) * s,
        SymplecticForm::standard(6).expect("dim 6 is even"),
        &tol,
    )
    .expect("isotropic covariance is symmetric");
    MesoGaussianState { cov }
}

/// Identical single-mode squeezing of the two chain modes; the mixed mode is
/// untouched and no modes are mixed, so separability is preserved.
#[derive(Debug, Clone, Copy)]
pub struct SqueezeSpec {
    pub k: f64,
}

impl SqueezeSpec {
    pub fn new(k: f64) -> Result<Self> {
        if !k.is_finite() {
            return Err(Error::InvalidParameter {
                name: "k",
                value: k,
                requirement: "finite",
            });
        }
        Ok(Self { k })
    }

    /// The symplectic matrix `diag(e^{2k}, e^{-2k}, e^{2k}, e^{-2k}, 1, 1)`;
    /// covariances then scale as `e^{+-4k}` per quadrature.
    pub fn matrix(&self) -> RMat {
        let up = (2.0 * self.k).exp();
        let dn = (-2.0 * self.k).exp();
        RMat::from_diagonal(&nalgebra::DVector::from_vec(vec![up, dn, up, dn, 1.0, 1.0]))
    }
}

/// Apply the squeeze: `Sigma -> S Sigma S^T`. Symplectic, so bona-fidelity
/// is preserved.
pub fn squeeze(state: &MesoGaussianState, spec: &SqueezeSpec) -> MesoGaussianState {
    let s = spec.matrix();
    let cov = &s * state.cov.matrix() * s.transpose();
    let tol = Tolerances::DEFAULT;
    MesoGaussianState {
        cov: CovarianceMatrix::new(cov, SymplecticForm::standard(6).expect("dim 6 is even"), &tol)
            .expect("squeeze preserves symmetry"),
    }
}

/// Reduced covariance of the two chain modes, organized in 2x2 blocks: the
/// marginals of each chain and their cross-correlation block.
#[derive(Debug, Clone)]
pub struct TwoModeCovariance {
    cov: CovarianceMatrix,
}

impl TwoModeCovariance {
    pub fn new(mat: RMat) -> Result<Self> {
        if mat.nrows() != 4 || mat.ncols() != 4 {
            return Err(Error::Dimension {
                context: "TwoModeCovariance::new",
                expected: 4,
                got: mat.nrows(),
            });
        }
        let tol = Tolerances::DEFAULT;
        Ok(Self {
            cov: CovarianceMatrix::new(mat, SymplecticForm::standard(4)?, &tol)?,
        })
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.cov
    }

    pub fn matrix(&self) -> &RMat {
        self.cov.matrix()
    }

    /// Marginal block of the first chain mode.
    pub fn block_first(&self) -> RMat {
        self.cov.matrix().view((0, 0), (2, 2)).into()
    }

    /// Marginal block of the second chain mode.
    pub fn block_second(&self) -> RMat {
        self.cov.matrix().view((2, 2), (2, 2)).into()
    }

    /// Cross-correlation block (rows of mode one, columns of mode two).
    pub fn block_cross(&self) -> RMat {
        self.cov.matrix().view((0, 2), (2, 2)).into()
    }
}

/// Trace out the mixed third mode: delete the last two rows and columns.
pub fn reduce_two_modes(state: &MesoGaussianState) -> TwoModeCovariance {
    let m = state.cov.matrix().view((0, 0), (4, 4)).into();
    TwoModeCovariance::new(m).expect("restriction of a symmetric matrix is symmetric")
}

/// Closed-form reduced covariance of the squeezed thermal state evolved for
/// time `t`: a common single-mode rotation at angle `2 omega t` conjugating
///
/// ```text
/// [[A(t), B(t)], [B(t), A(t)]]
/// A(t) = s { e^{-u}/4 [3 + cosh(u lambda)] diag(e^{4k}-1, e^{-4k}-1) + 1 }
/// B(t) = s   e^{-u}/4 [cosh(u lambda) - 1] diag(e^{4k}-1, e^{-4k}-1)
/// ```
///
/// with `s = (eta^2+1)/(4 eta)` and `u = 4 eta t / (1 + eta)`. Must agree
/// with evolving the squeezed 6x6 covariance and reducing; that equivalence
/// is the module's central consistency check.
pub fn closed_form_reduced(bath: &BathParams, k: f64, t: f64) -> Result<TwoModeCovariance> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            requirement: "t >= 0",
        });
    }
    let eta = bath.eta();
    let s = FluctuationKinematics::scale(bath);
    let u = 4.0 * eta * t / (1.0 + eta);
    let ch = (u * bath.coupling()).cosh();
    let d_up = (4.0 * k).exp() - 1.0;
    let d_dn = (-4.0 * k).exp() - 1.0;

    let damp = (-u).exp() / 4.0;
    let a_up = s * (damp * (3.0 + ch) * d_up + 1.0);
    let a_dn = s * (damp * (3.0 + ch) * d_dn + 1.0);
    let b_up = s * damp * (ch - 1.0) * d_up;
    let b_dn = s * damp * (ch - 1.0) * d_dn;

    let angle = 2.0 * bath.omega() * t;
    let (c, sn) = (angle.cos(), angle.sin());
    let rot = RMat::from_row_slice(2, 2, &[c, sn, -sn, c]);

    let mut inner = RMat::zeros(4, 4);
    inner[(0, 0)] = a_up;
    inner[(1, 1)] = a_dn;
    inner[(2, 2)] = a_up;
    inner[(3, 3)] = a_dn;
    inner[(0, 2)] = b_up;
    inner[(2, 0)] = b_up;
    inner[(1, 3)] = b_dn;
    inner[(3, 1)] = b_dn;

    let mut big_rot = RMat::zeros(4, 4);
    big_rot.view_mut((0, 0), (2, 2)).copy_from(&rot);
    big_rot.view_mut((2, 2), (2, 2)).copy_from(&rot);

    TwoModeCovariance::new(&big_rot * inner * big_rot.transpose())
}

/// Squeezed thermal initial state evolved to time `t`, then reduced: the
/// standard pipeline behind every entanglement curve.
pub fn evolved_reduced(
    gen: &MesoGenerator,
    bath: &BathParams,
    k: f64,
    t: f64,
) -> Result<TwoModeCovariance> {
    let initial = squeeze(&thermal_meso_state(bath), &SqueezeSpec::new(k)?);
    let sb = gen.invariant_covariance();
    let evolved = meso::evolve_covariance(gen, &sb, initial.covariance(), t)?;
    Ok(reduce_two_modes(&MesoGaussianState::new(evolved)?))
}
