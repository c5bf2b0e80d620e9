//! Single-site algebra of the double oscillator chain.
//!
//! A site carries two harmonic modes with canonical variables
//! `(x1, p1, x2, p2)`. This module provides the thermal covariance, the
//! six-operator quadratic basis whose fluctuations span the mesoscopic
//! algebra, ordered Wick moments, the bath Kossakowski matrix, and the
//! symbolic Kossakowski-Lindblad action on quadratic observables. Expanding
//! that action in the quadratic basis yields the 6x6 mesoscopic generator
//! numerically, which the closed form in [`crate::meso`] must reproduce.

use crate::error::{Error, Result};
use crate::linalg::{
    max_abs, min_eig_hermitian, CovarianceMatrix, HermitianMatrix, SymplecticForm, Tolerances,
    C64, CMat, RMat,
};

/// Bath and oscillator parameters in natural units (`hbar = k_B = 1`).
///
/// `gamma = exp(-beta omega)` and `eta = tanh(beta omega / 2)` carry the
/// whole temperature dependence; `coupling` is the statistical coupling
/// between the chains induced by the common bath. Complete positivity of the
/// dissipative dynamics requires `coupling^2 <= 1`; out-of-range values are
/// representable (for negative tests) but flagged invalid.
#[derive(Debug, Clone, Copy)]
pub struct BathParams {
    temperature: f64,
    omega: f64,
    coupling: f64,
    cp_valid: bool,
}

impl BathParams {
    pub fn new(temperature: f64, omega: f64, coupling: f64) -> Result<Self> {
        if !(temperature > 0.0) || !temperature.is_finite() {
            return Err(Error::InvalidParameter {
                name: "temperature",
                value: temperature,
                requirement: "temperature > 0",
            });
        }
        if !(omega > 0.0) || !omega.is_finite() {
            return Err(Error::InvalidParameter {
                name: "omega",
                value: omega,
                requirement: "omega > 0",
            });
        }
        if !(coupling * coupling <= 1.0) {
            return Err(Error::CompletePositivity { lambda: coupling });
        }
        Ok(Self {
            temperature,
            omega,
            coupling,
            cp_valid: true,
        })
    }

    pub fn from_beta(beta: f64, omega: f64, coupling: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                requirement: "beta > 0",
            });
        }
        Self::new(1.0 / beta, omega, coupling)
    }

    /// Construct without the complete-positivity gate. The value is marked
    /// invalid when `coupling^2 > 1` and operations that require a physical
    /// dissipator will refuse it.
    pub fn unchecked(temperature: f64, omega: f64, coupling: f64) -> Self {
        Self {
            temperature,
            omega,
            coupling,
            cp_valid: coupling * coupling <= 1.0,
        }
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn beta(&self) -> f64 {
        1.0 / self.temperature
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    /// `exp(-beta omega)`, in (0, 1).
    pub fn gamma(&self) -> f64 {
        (-self.beta() * self.omega).exp()
    }

    /// `tanh(beta omega / 2)`, in (0, 1).
    pub fn eta(&self) -> f64 {
        (self.beta() * self.omega / 2.0).tanh()
    }

    pub fn is_cp_valid(&self) -> bool {
        self.cp_valid
    }
}

/// Index into the site canonical quadruple `(x1, p1, x2, p2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Canonical {
    X1 = 0,
    P1 = 1,
    X2 = 2,
    P2 = 3,
}

pub const CANONICALS: [Canonical; 4] = [Canonical::X1, Canonical::P1, Canonical::X2, Canonical::P2];

/// Quadratic site observable `X = sum_ij A_ij (R_i R_j + R_j R_i)/2 + c`
/// over the ordered basis `(x1, p1, x2, p2)`, with `A` real symmetric.
#[derive(Debug, Clone)]
pub struct QuadraticObservable {
    coeff: RMat,
    offset: f64,
}

impl QuadraticObservable {
    pub fn new(coeff: RMat, offset: f64) -> Result<Self> {
        if coeff.nrows() != 4 || coeff.ncols() != 4 {
            return Err(Error::Dimension {
                context: "QuadraticObservable::new",
                expected: 4,
                got: coeff.nrows(),
            });
        }
        let residue = max_abs(&(&coeff - &coeff.transpose()));
        if residue > 1e-14 * max_abs(&coeff).max(1.0) {
            return Err(Error::NotSymmetric { residue });
        }
        Ok(Self {
            coeff: (&coeff + &coeff.transpose()) * 0.5,
            offset,
        })
    }

    /// The identity observable (`A = 0`, `c = 1`).
    pub fn identity() -> Self {
        Self {
            coeff: RMat::zeros(4, 4),
            offset: 1.0,
        }
    }

    pub fn zero() -> Self {
        Self {
            coeff: RMat::zeros(4, 4),
            offset: 0.0,
        }
    }

    /// Free site Hamiltonian `omega/2 (x1^2 + p1^2 + x2^2 + p2^2)`.
    pub fn site_hamiltonian(bath: &BathParams) -> Self {
        Self {
            coeff: RMat::identity(4, 4) * (bath.omega() / 2.0),
            offset: 0.0,
        }
    }

    /// `sum_mu r_mu X_mu` over a slice of observables.
    pub fn combine(parts: &[QuadraticObservable], r: &[f64]) -> Self {
        assert_eq!(parts.len(), r.len());
        let mut coeff = RMat::zeros(4, 4);
        let mut offset = 0.0;
        for (x, &c) in parts.iter().zip(r) {
            coeff += &x.coeff * c;
            offset += x.offset * c;
        }
        Self { coeff, offset }
    }

    pub fn coeff(&self) -> &RMat {
        &self.coeff
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Thermal mean `<X>` in the given site state.
    pub fn mean(&self, cov: &SiteCovariance) -> f64 {
        // <S_ij> = Sigma_ij for a zero-mean state, so <X> = tr(A Sigma) + c.
        (self.coeff.transpose() * cov.covariance().matrix()).trace() + self.offset
    }

    /// Ordered second moment `<X Y>` in the given site state.
    pub fn second_moment(&self, other: &Self, cov: &SiteCovariance) -> C64 {
        let mut total = C64::new(self.offset * other.offset, 0.0);
        total += C64::from(self.offset) * C64::from(other.mean(cov) - other.offset);
        total += C64::from(other.offset) * C64::from(self.mean(cov) - self.offset);
        for i in 0..4 {
            for j in 0..4 {
                let a = self.coeff[(i, j)];
                if a == 0.0 {
                    continue;
                }
                for k in 0..4 {
                    for l in 0..4 {
                        let b = other.coeff[(k, l)];
                        if b == 0.0 {
                            continue;
                        }
                        total += C64::from(a * b)
                            * ordered_moment_indices(cov, &[i, j, k, l]);
                    }
                }
            }
        }
        total
    }
}

/// Single-site covariance with the 4-dimensional standard symplectic form.
#[derive(Debug, Clone)]
pub struct SiteCovariance {
    cov: CovarianceMatrix,
}

impl SiteCovariance {
    pub fn new(mat: RMat, tol: &Tolerances) -> Result<Self> {
        let form = SymplecticForm::standard(4)?;
        Ok(Self {
            cov: CovarianceMatrix::new(mat, form, tol)?,
        })
    }

    pub fn covariance(&self) -> &CovarianceMatrix {
        &self.cov
    }

    /// Ordered two-point function `G_ij = <R_i R_j> = Sigma_ij + (i/2) sigma_ij`.
    fn two_point(&self, i: usize, j: usize) -> C64 {
        C64::new(
            self.cov.matrix()[(i, j)],
            0.5 * self.cov.form().matrix()[(i, j)],
        )
    }
}

/// Thermal single-site covariance `1/(2 eta) * identity`.
pub fn thermal_site_covariance(bath: &BathParams) -> SiteCovariance {
    let s = 1.0 / (2.0 * bath.eta());
    SiteCovariance::new(RMat::identity(4, 4) * s, &Tolerances::DEFAULT)
        .expect("thermal covariance is symmetric")
}

fn ordered_moment_indices(cov: &SiteCovariance, idx: &[usize]) -> C64 {
    if idx.len() % 2 == 1 {
        return C64::new(0.0, 0.0);
    }
    if idx.is_empty() {
        return C64::new(1.0, 0.0);
    }
    // Order-preserving Isserlis pairing on the ordered two-point function:
    // pair the first operator with each later one, keeping operand order.
    let mut total = C64::new(0.0, 0.0);
    for j in 1..idx.len() {
        let mut rest = Vec::with_capacity(idx.len() - 2);
        rest.extend_from_slice(&idx[1..j]);
        rest.extend_from_slice(&idx[j + 1..]);
        total += cov.two_point(idx[0], idx[j]) * ordered_moment_indices(cov, &rest);
    }
    total
}

/// Ordered moment `<R_{i1} R_{i2} ... R_{in}>` of canonical variables in a
/// zero-mean Gaussian site state. Odd orders vanish.
pub fn ordered_moment(cov: &SiteCovariance, indices: &[Canonical]) -> C64 {
    let idx: Vec<usize> = indices.iter().map(|&c| c as usize).collect();
    ordered_moment_indices(cov, &idx)
}

/// The six-operator quadratic basis spanning the mesoscopic fluctuation
/// algebra. Over `(x1, p1, x2, p2)`:
///
/// * `X1 = sqrt(eta)/2 (x1^2 - p1^2)`, `X2 = sqrt(eta)/2 (x1 p1 + p1 x1)`,
/// * `X3, X4`: the same for the second chain,
/// * `X5 = sqrt(eta/2) (x1 x2 - p1 p2)`, `X6 = sqrt(eta/2) (x1 p2 + p1 x2)`.
///
/// The normalizations make the six fluctuations close on three canonical
/// mode pairs with unit commutators and an isotropic thermal covariance;
/// pairs (1,2) and (3,4) belong to the first and second chain, pair (5,6)
/// mixes the two.
pub fn basis_observables(bath: &BathParams) -> [QuadraticObservable; 6] {
    let c14 = bath.eta().sqrt() / 2.0;
    let c56 = (bath.eta() / 2.0).sqrt();
    let m = |entries: &[(usize, usize, f64)], scale: f64| {
        let mut a = RMat::zeros(4, 4);
        for &(i, j, v) in entries {
            a[(i, j)] = v * scale;
        }
        QuadraticObservable::new(a, 0.0).expect("basis coefficients are symmetric")
    };
    [
        m(&[(0, 0, 1.0), (1, 1, -1.0)], c14),
        m(&[(0, 1, 1.0), (1, 0, 1.0)], c14),
        m(&[(2, 2, 1.0), (3, 3, -1.0)], c14),
        m(&[(2, 3, 1.0), (3, 2, 1.0)], c14),
        m(&[(0, 2, 0.5), (2, 0, 0.5), (1, 3, -0.5), (3, 1, -0.5)], c56),
        m(&[(0, 3, 0.5), (3, 0, 0.5), (1, 2, 0.5), (2, 1, 0.5)], c56),
    ]
}

/// Wick-derived kinematics of the fluctuation algebra: the 6x6 covariance
/// `Sigma_beta = (eta^2+1)/(4 eta) * identity` and the block-diagonal
/// symplectic form, together with the raw deviations of the Wick computation
/// from those closed forms.
#[derive(Debug, Clone)]
pub struct FluctuationKinematics {
    pub sigma_beta: CovarianceMatrix,
    pub form: SymplecticForm,
    pub covariance_deviation: f64,
    pub form_deviation: f64,
}

impl FluctuationKinematics {
    /// Isotropic covariance scale `(eta^2 + 1) / (4 eta)`.
    pub fn scale(bath: &BathParams) -> f64 {
        let eta = bath.eta();
        (eta * eta + 1.0) / (4.0 * eta)
    }
}

/// Compute `<X_mu X_nu>` by Wick's theorem and split it into the symmetric
/// covariance and the antisymmetric commutator part. Both must reproduce
/// their closed forms; a mismatch beyond `1e-10` signals a broken moment
/// computation and is reported as an internal consistency error.
pub fn fluctuation_kinematics(bath: &BathParams) -> Result<FluctuationKinematics> {
    let basis = basis_observables(bath);
    let site = thermal_site_covariance(bath);
    let mut second = CMat::zeros(6, 6);
    for (mu, xm) in basis.iter().enumerate() {
        for (nu, xn) in basis.iter().enumerate() {
            second[(mu, nu)] = xm.second_moment(xn, &site);
        }
    }
    let sigma_beta = second.map(|z| z.re);
    let comm = second.map(|z| 2.0 * z.im);

    let scale = FluctuationKinematics::scale(bath);
    let cov_dev = max_abs(&(&sigma_beta - RMat::identity(6, 6) * scale));
    let form = SymplecticForm::standard(6)?;
    let form_dev = max_abs(&(&comm - form.matrix()));
    if cov_dev > 1e-10 || form_dev > 1e-10 {
        return Err(Error::Consistency(format!(
            "fluctuation kinematics deviate from closed form: covariance {cov_dev:.3e}, form {form_dev:.3e}"
        )));
    }
    let tol = Tolerances::DEFAULT;
    Ok(FluctuationKinematics {
        sigma_beta: CovarianceMatrix::new(sigma_beta, SymplecticForm::standard(6)?, &tol)?,
        form,
        covariance_deviation: cov_dev,
        form_deviation: form_dev,
    })
}

/// Bath Kossakowski matrix over `(x1, p1, x2, p2)`:
/// `[[A, B], [B^dag, A]]` with `A = (1+gamma)/2 [[1, i eta], [-i eta, 1]]`
/// and `B = lambda A`. Positive semidefinite exactly when `lambda^2 <= 1`.
#[derive(Debug, Clone)]
pub struct KossakowskiMatrix {
    herm: HermitianMatrix,
}

impl KossakowskiMatrix {
    pub fn matrix(&self) -> &CMat {
        self.herm.matrix()
    }

    pub fn hermitian(&self) -> &HermitianMatrix {
        &self.herm
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eig_hermitian(&self.herm)
    }

    /// Real part (the classical noise kernel).
    pub fn real_part(&self) -> RMat {
        self.herm.matrix().map(|z| z.re)
    }

    /// Imaginary part (the dissipative drift kernel).
    pub fn imag_part(&self) -> RMat {
        self.herm.matrix().map(|z| z.im)
    }
}

fn kossakowski_matrix_raw(bath: &BathParams) -> CMat {
    let g = bath.gamma();
    let eta = bath.eta();
    let lam = bath.coupling();
    let a = (1.0 + g) / 2.0;
    let mut c = CMat::zeros(4, 4);
    // block A at (0,0) and (2,2); block lambda*A at (0,2) and (2,0)
    for (row, col, scale) in [(0, 0, 1.0), (2, 2, 1.0), (0, 2, lam), (2, 0, lam)] {
        c[(row, col)] = C64::new(a * scale, 0.0);
        c[(row + 1, col + 1)] = C64::new(a * scale, 0.0);
        c[(row, col + 1)] = C64::new(0.0, a * eta * scale);
        c[(row + 1, col)] = C64::new(0.0, -a * eta * scale);
    }
    c
}

/// Build the Kossakowski matrix, rejecting couplings that break complete
/// positivity.
pub fn kossakowski(bath: &BathParams) -> Result<KossakowskiMatrix> {
    if !bath.is_cp_valid() {
        return Err(Error::CompletePositivity {
            lambda: bath.coupling(),
        });
    }
    let herm = HermitianMatrix::new(kossakowski_matrix_raw(bath), 1e-12)?;
    Ok(KossakowskiMatrix { herm })
}

/// Kossakowski-Lindblad action on a quadratic observable, computed purely on
/// coefficient matrices through the canonical commutation rules.
///
/// With `h` the Hamiltonian coefficient matrix, `sigma` the site symplectic
/// form and `C = C_R + i C_I` the Kossakowski matrix, the quadratic part maps
/// as `A -> 2(A sigma h - h sigma A) + C_I sigma A + A sigma C_I` and the
/// scalar part picks up `-tr(C_R sigma A sigma)`; the identity component of
/// the input is annihilated (unitality).
pub fn lindblad_action(x: &QuadraticObservable, bath: &BathParams) -> QuadraticObservable {
    let sigma = SymplecticForm::standard(4).expect("dim 4 is even");
    let sigma = sigma.matrix().clone();
    let h = RMat::identity(4, 4) * (bath.omega() / 2.0);
    let c = kossakowski_matrix_raw(bath);
    let c_re = c.map(|z| z.re);
    let c_im = c.map(|z| z.im);

    let a = &x.coeff;
    let hamiltonian = (a * &sigma * &h - &h * &sigma * a) * 2.0;
    let dissipative = &c_im * &sigma * a + a * &sigma * &c_im;
    let scalar = -(&c_re * &sigma * a * &sigma).trace();
    QuadraticObservable::new(hamiltonian + dissipative, scalar)
        .expect("Lindblad action preserves symmetry")
}

/// Result of expanding the Lindblad action of each basis observable back in
/// the basis: the 6x6 generator matrix (row `mu` holds the coefficients of
/// the image of `X_mu`), the worst out-of-span residual, and the largest
/// scalar component (both must vanish for a dynamically closed basis).
#[derive(Debug, Clone)]
pub struct DerivedGenerator {
    pub matrix: RMat,
    pub residual: f64,
    pub scalar_norm: f64,
}

/// Derive the 6x6 mesoscopic generator from the microscopic Lindblad action
/// by least-squares expansion of each image in the quadratic basis.
///
/// The basis coefficient matrices have pairwise disjoint supports, so the
/// least-squares system over the 10-dimensional space of symmetric 4x4
/// matrices is diagonal; the residual measures any out-of-span component.
/// A residual above `1e-10` means the basis failed to close dynamically.
///
/// ```
/// use mesofluct::micro::derive_meso_generator;
/// use mesofluct::{meso, BathParams};
///
/// let bath = BathParams::new(0.1, 1.0, 0.9)?;
/// let derived = derive_meso_generator(&bath)?;
/// let closed = meso::generator(&bath)?;
/// let dev = (&derived.matrix - closed.matrix()).abs().max();
/// assert!(dev < 1e-10 && derived.residual < 1e-12);
/// # Ok::<(), mesofluct::Error>(())
/// ```
pub fn derive_meso_generator(bath: &BathParams) -> Result<DerivedGenerator> {
    let basis = basis_observables(bath);
    let mut matrix = RMat::zeros(6, 6);
    let mut residual = 0.0f64;
    let mut scalar_norm = 0.0f64;
    for (mu, x) in basis.iter().enumerate() {
        let image = lindblad_action(x, bath);
        scalar_norm = scalar_norm.max(image.offset().abs());
        let mut remainder = image.coeff().clone();
        for (nu, b) in basis.iter().enumerate() {
            let num = (image.coeff().transpose() * b.coeff()).trace();
            let den = (b.coeff().transpose() * b.coeff()).trace();
            let coefficient = num / den;
            matrix[(mu, nu)] = coefficient;
            remainder -= b.coeff() * coefficient;
        }
        residual = residual.max(max_abs(&remainder));
    }
    if residual > 1e-10 {
        return Err(Error::SpanClosure { residual });
    }
    Ok(DerivedGenerator {
        matrix,
        residual,
        scalar_norm,
    })
}

/// Statistical variance of the mean-field average of `x` over `n` sites:
/// `(<X^2> - <X>^2) / n`. Scales exactly as `1/n`.
pub fn mean_field_variance(x: &QuadraticObservable, bath: &BathParams, n: u64) -> f64 {
    assert!(n >= 1, "site count must be positive");
    let site = thermal_site_covariance(bath);
    let mean = x.mean(&site);
    let second = x.second_moment(x, &site).re;
    (second - mean * mean) / n as f64
}

/// Drift and noise of the site covariance flow `dSigma/dt = D Sigma + Sigma D^T + Q`
/// induced by the Lindblad dynamics: `D = 2 sigma h + sigma C_I`, `Q = C_R`.
/// The thermal covariance is the unique stationary point.
pub fn lyapunov_form(bath: &BathParams) -> (RMat, RMat) {
    let sigma = SymplecticForm::standard(4).expect("dim 4 is even");
    let sigma = sigma.matrix();
    let h = RMat::identity(4, 4) * (bath.omega() / 2.0);
    let c = kossakowski_matrix_raw(bath);
    let drift = sigma * &h * 2.0 + sigma * c.map(|z| z.im);
    let noise = c.map(|z| z.re);
    (drift, noise)
}

/// Closed-form mesoscopic generator structure shared with [`crate::meso`]:
/// `(gamma-1) 1 + 2 omega sigma + (gamma-1) lambda / sqrt(2) * coupling-block`.
pub(crate) fn closed_form_generator(bath: &BathParams) -> RMat {
    let g = bath.gamma();
    let lam = bath.coupling();
    let w = bath.omega();
    let form = SymplecticForm::standard(6).expect("dim 6 is even");
    let mut m = RMat::identity(6, 6) * (g - 1.0) + form.matrix() * (2.0 * w);
    let c = (g - 1.0) * lam / 2.0f64.sqrt();
    for i in 0..2 {
        // modes 1 and 2 couple to mode 3 symmetrically
        m[(2 * i, 4)] += c;
        m[(2 * i + 1, 5)] += c;
        m[(4, 2 * i)] += c;
        m[(5, 2 * i + 1)] += c;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bath01() -> BathParams {
        BathParams::new(0.1, 1.0, 0.5).unwrap()
    }

    #[test]
    fn bath_derived_quantities() {
        for (t, w) in [(0.1, 1.0), (0.5, 0.7), (2.0, 1.3), (0.05, 2.0)] {
            let b = BathParams::new(t, w, 0.3).unwrap();
            let (g, eta) = (b.gamma(), b.eta());
            assert!((g - (1.0 - eta) / (1.0 + eta)).abs() < 1e-14);
            // eta saturates to 1.0 in f64 deep in the cold regime
            assert!(g > 0.0 && g < 1.0 && eta > 0.0 && eta <= 1.0);
        }
        assert!(BathParams::new(0.1, 1.0, 1.2).is_err());
        assert!(BathParams::new(-0.1, 1.0, 0.0).is_err());
        assert!(BathParams::new(0.1, 0.0, 0.0).is_err());
        let flagged = BathParams::unchecked(0.1, 1.0, 1.2);
        assert!(!flagged.is_cp_valid());
        let b = BathParams::from_beta(10.0, 1.0, 0.0).unwrap();
        assert!((b.temperature() - 0.1).abs() < 1e-15);
        // negative couplings inside the unit interval are physical
        assert!(BathParams::new(0.1, 1.0, -0.8).is_ok());
    }

    #[test]
    fn thermal_covariance_isotropic() {
        let b = bath01();
        let cov = thermal_site_covariance(&b);
        let m = cov.covariance().matrix();
        let expect = 1.0 / (2.0 * (5.0f64).tanh());
        for i in 0..4 {
            assert!((m[(i, i)] - expect).abs() < 1e-14);
            for j in 0..4 {
                if i != j {
                    assert_eq!(m[(i, j)], 0.0);
                }
            }
        }
        // quoted value for the diagonal at this temperature
        assert!((m[(0, 0)] - 0.5000454).abs() < 1e-6);

        // zero-temperature limit: vacuum covariance
        let cold = BathParams::new(1e-3, 1.0, 0.0).unwrap();
        let m = thermal_site_covariance(&cold);
        assert!((m.covariance().matrix()[(0, 0)] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn basis_coefficients_and_means() {
        let b = bath01();
        let eta = b.eta();
        let basis = basis_observables(&b);
        // X1 = sqrt(eta)/2 diag(1, -1, 0, 0)
        let mut x1 = RMat::zeros(4, 4);
        x1[(0, 0)] = eta.sqrt() / 2.0;
        x1[(1, 1)] = -eta.sqrt() / 2.0;
        assert!(max_abs(&(basis[0].coeff() - &x1)) < 1e-15);
        // X6: symmetrized x1 p2 + p1 x2 placements with weight sqrt(eta/2)/2
        let c = (eta / 2.0).sqrt() / 2.0;
        let mut x6 = RMat::zeros(4, 4);
        x6[(0, 3)] = c;
        x6[(3, 0)] = c;
        x6[(1, 2)] = c;
        x6[(2, 1)] = c;
        assert!(max_abs(&(basis[5].coeff() - &x6)) < 1e-15);
        // thermal means vanish
        let site = thermal_site_covariance(&b);
        for x in &basis {
            assert!(x.mean(&site).abs() < 1e-14);
        }
    }

    #[test]
    fn ordered_moments_match_closed_forms() {
        let b = bath01();
        let eta = b.eta();
        let site = thermal_site_covariance(&b);
        use Canonical::*;

        let xx = ordered_moment(&site, &[X1, X1]);
        assert!((xx - C64::new(1.0 / (2.0 * eta), 0.0)).norm() < 1e-14);

        let xp = ordered_moment(&site, &[X1, P1]);
        assert!((xp - C64::new(0.0, 0.5)).norm() < 1e-14);

        let xxpp = ordered_moment(&site, &[X1, X1, P1, P1]);
        let expect = 1.0 / (4.0 * eta * eta) - 0.5;
        assert!((xxpp - C64::new(expect, 0.0)).norm() < 1e-14);

        // odd orders vanish identically
        assert_eq!(ordered_moment(&site, &[X1]), C64::new(0.0, 0.0));
        assert_eq!(ordered_moment(&site, &[X1, P1, X2]), C64::new(0.0, 0.0));
    }

    #[test]
    fn odd_moments_of_basis_elements_vanish() {
        // The thermal state is invariant under a common quarter-period phase
        // rotation which flips the sign of every basis observable, so all odd
        // moments vanish; the quantum central limit then converges one order
        // faster than the generic remainder bound.
        let b = bath01();
        let site = thermal_site_covariance(&b);
        let basis = basis_observables(&b);
        let x1 = &basis[0];
        // <X1^3> via the ordered 6th moments
        let mut third = C64::new(0.0, 0.0);
        let a = x1.coeff();
        for i in 0..4 {
            for j in 0..4 {
                for k in 0..4 {
                    for l in 0..4 {
                        for m in 0..4 {
                            for n in 0..4 {
                                let w = a[(i, j)] * a[(k, l)] * a[(m, n)];
                                if w != 0.0 {
                                    third += C64::from(w)
                                        * super::ordered_moment_indices(&site, &[i, j, k, l, m, n]);
                                }
                            }
                        }
                    }
                }
            }
        }
        assert!(third.norm() < 1e-14);
    }

    #[test]
    fn kinematics_reproduce_closed_forms() {
        for t in [0.05, 0.1, 0.5, 1.0] {
            let b = BathParams::new(t, 1.0, 0.0).unwrap();
            let kin = fluctuation_kinematics(&b).unwrap();
            assert!(kin.covariance_deviation < 1e-12);
            assert!(kin.form_deviation < 1e-12);
            let scale = FluctuationKinematics::scale(&b);
            assert!((kin.sigma_beta.matrix()[(0, 0)] - scale).abs() < 1e-13);
            assert_eq!(kin.form.matrix()[(0, 1)], 1.0);
            assert_eq!(kin.form.matrix()[(1, 0)], -1.0);
        }
        // near-vacuum saturation
        let cold = BathParams::new(1e-3, 1.0, 0.0).unwrap();
        let kin = fluctuation_kinematics(&cold).unwrap();
        assert!((kin.sigma_beta.matrix()[(0, 0)] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn kossakowski_spectrum() {
        // decoupled chains: eigenvalues (1+gamma)/2 (1 +- eta), each twice
        let b = BathParams::new(0.1, 1.0, 0.0).unwrap();
        let k = kossakowski(&b).unwrap();
        let mut eigs = crate::linalg::eigs_hermitian(k.hermitian());
        eigs.sort_by(f64::total_cmp);
        let a = (1.0 + b.gamma()) / 2.0;
        let lo = a * (1.0 - b.eta());
        let hi = a * (1.0 + b.eta());
        for (have, want) in eigs.iter().zip([lo, lo, hi, hi]) {
            assert!((have - want).abs() < 1e-12);
        }

        // maximal coupling: rank-2 with a two-dimensional kernel; the nonzero
        // eigenvalues are 2a(1 -+ eta) with a = (1+gamma)/2
        let b1 = BathParams::new(0.1, 1.0, 1.0).unwrap();
        let eigs = crate::linalg::eigs_hermitian(kossakowski(&b1).unwrap().hermitian());
        assert!(eigs[0].abs() < 1e-12 && eigs[1].abs() < 1e-12);
        let a1 = (1.0 + b1.gamma()) / 2.0;
        assert!((eigs[2] - 2.0 * a1 * (1.0 - b1.eta())).abs() < 1e-12);
        assert!((eigs[3] - 2.0 * a1 * (1.0 + b1.eta())).abs() < 1e-12);

        // out-of-range coupling is rejected, and its matrix would be indefinite
        let bad = BathParams::unchecked(0.1, 1.0, 1.2);
        assert!(matches!(
            kossakowski(&bad),
            Err(Error::CompletePositivity { .. })
        ));
        let bad05 = BathParams::unchecked(0.1, 1.0, 1.05);
        let herm = HermitianMatrix::new(kossakowski_matrix_raw(&bad05), 1e-12).unwrap();
        assert!(min_eig_hermitian(&herm) < -1e-6);

        // PSD across the physical coupling range
        for lam in [-1.0, -0.5, 0.0, 0.3, 0.9, 1.0] {
            let b = BathParams::new(0.4, 1.0, lam).unwrap();
            assert!(kossakowski(&b).unwrap().min_eigenvalue() >= -1e-12);
        }
    }

    #[test]
    fn lindblad_unitality_and_hamiltonian_self_commutation() {
        let b = bath01();
        let out = lindblad_action(&QuadraticObservable::identity(), &b);
        assert_eq!(max_abs(out.coeff()), 0.0);
        assert_eq!(out.offset(), 0.0);

        // X = site Hamiltonian at lambda = 0: the commutator part vanishes
        // (self-commutation); the dissipative part does not.
        let b0 = BathParams::new(0.1, 1.0, 0.0).unwrap();
        let h = QuadraticObservable::site_hamiltonian(&b0);
        let sigma = SymplecticForm::standard(4).unwrap();
        let hmat = RMat::identity(4, 4) * (b0.omega() / 2.0);
        let comm_part =
            (h.coeff() * sigma.matrix() * &hmat - &hmat * sigma.matrix() * h.coeff()) * 2.0;
        assert_eq!(max_abs(&comm_part), 0.0);
        let full = lindblad_action(&h, &b0);
        assert!(max_abs(full.coeff()) > 1e-3);
    }

    #[test]
    fn lindblad_action_on_first_basis_element() {
        // image of X1 in the basis equals the first generator row:
        // (gamma-1, 2 omega, 0, 0, (gamma-1) lambda / sqrt(2), 0)
        let b = bath01();
        let basis = basis_observables(&b);
        let image = lindblad_action(&basis[0], &b);
        assert!(image.offset().abs() < 1e-14);
        let mut coeffs = [0.0f64; 6];
        let mut remainder = image.coeff().clone();
        for (nu, x) in basis.iter().enumerate() {
            let num = (image.coeff().transpose() * x.coeff()).trace();
            let den = (x.coeff().transpose() * x.coeff()).trace();
            coeffs[nu] = num / den;
            remainder -= x.coeff() * coeffs[nu];
        }
        assert!(max_abs(&remainder) < 1e-14);
        let g = b.gamma();
        let expect = [
            g - 1.0,
            2.0 * b.omega(),
            0.0,
            0.0,
            (g - 1.0) * b.coupling() / 2.0f64.sqrt(),
            0.0,
        ];
        for (have, want) in coeffs.iter().zip(expect) {
            assert!((have - want).abs() < 1e-13, "have {have}, want {want}");
        }
    }

    #[test]
    fn lindblad_images_have_zero_thermal_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let b = BathParams::new(
                rng.gen_range(0.05..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(-1.0..1.0),
            )
            .unwrap();
            let site = thermal_site_covariance(&b);
            for x in basis_observables(&b) {
                let image = lindblad_action(&x, &b);
                assert!(image.mean(&site).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn derived_generator_matches_closed_form() {
        // decoupled case first: (gamma-1) 1 + 2 omega sigma
        let b0 = BathParams::new(0.3, 1.2, 0.0).unwrap();
        let derived = derive_meso_generator(&b0).unwrap();
        let sigma = SymplecticForm::standard(6).unwrap();
        let expect =
            RMat::identity(6, 6) * (b0.gamma() - 1.0) + sigma.matrix() * (2.0 * b0.omega());
        assert!(max_abs(&(&derived.matrix - &expect)) < 1e-12);

        // full coupling-block comparison on a randomized grid
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..12 {
            let b = BathParams::new(
                rng.gen_range(0.05..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.0..1.0),
            )
            .unwrap();
            let derived = derive_meso_generator(&b).unwrap();
            assert!(derived.residual < 1e-12);
            assert!(derived.scalar_norm < 1e-12);
            let dev = max_abs(&(&derived.matrix - &closed_form_generator(&b)));
            assert!(dev < 1e-10, "deviation {dev:.2e}");
        }

        // the quoted strong-coupling point
        let b9 = BathParams::new(0.1, 1.0, 0.9).unwrap();
        let derived = derive_meso_generator(&b9).unwrap();
        assert!(max_abs(&(&derived.matrix - &closed_form_generator(&b9))) < 1e-10);
    }

    #[test]
    fn mean_field_variance_scaling() {
        let b = bath01();
        let basis = basis_observables(&b);
        let v1 = mean_field_variance(&basis[0], &b, 7);
        let v2 = mean_field_variance(&basis[0], &b, 14);
        assert_eq!(v1 / v2, 2.0); // explicit 1/N factor, bit-exact

        // N = 1 variance of X1 equals the fluctuation covariance scale
        let v = mean_field_variance(&basis[0], &b, 1);
        assert!((v - FluctuationKinematics::scale(&b)).abs() < 1e-13);

        // constants have no variance
        assert_eq!(mean_field_variance(&QuadraticObservable::identity(), &b, 3), 0.0);
    }

    #[test]
    fn lyapunov_flow_is_stationary_at_thermal_covariance() {
        let b = BathParams::new(0.1, 1.0, 0.5).unwrap();
        let (d, q) = lyapunov_form(&b);
        let st = thermal_site_covariance(&b);
        let st = st.covariance().matrix();
        let residual = &d * st + st * d.transpose() + &q;
        assert!(max_abs(&residual) < 1e-14);

        // integrating the flow stays put
        let evolved = crate::linalg::integrate_linear_ode(
            |x| &d * x + x * d.transpose() + &q,
            st,
            1.0,
            1e-3,
        )
        .unwrap();
        assert!(max_abs(&(&evolved - st)) < 1e-8);
    }
}
