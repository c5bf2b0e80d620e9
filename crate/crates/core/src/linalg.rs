//! Dense matrix kernel for small (4x4 .. 6x6) real and complex problems, plus
//! the fixed-step integrator used by the truncated-Fock oracle.
//!
//! Everything here is immutable after construction and safe to share across
//! threads.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;
pub type RMat = DMatrix<f64>;
pub type CMat = DMatrix<C64>;

/// Numerical tolerances used by validity checks across the crate.
///
/// Algebraic identities (group laws, closed-form comparisons) are held to
/// `algebraic`; ODE endpoint comparisons to `ode`; symmetry/Hermiticity
/// residues of freshly built matrices to `symmetry`.
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    pub algebraic: f64,
    pub ode: f64,
    pub symmetry: f64,
}

impl Tolerances {
    pub const DEFAULT: Tolerances = Tolerances {
        algebraic: 1e-10,
        ode: 1e-8,
        symmetry: 1e-12,
    };
}

impl Default for Tolerances {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Largest absolute entry; `0.0` for empty matrices.
pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Largest entry modulus; `0.0` for empty matrices.
pub fn max_abs_c(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |a, x| a.max(x.norm()))
}

/// Hermitian matrix, symmetrized on construction.
#[derive(Debug, Clone)]
pub struct HermitianMatrix {
    mat: CMat,
}

impl HermitianMatrix {
    /// Build from a complex square matrix, averaging away the anti-Hermitian
    /// part. Fails if that part is larger than `tol` (relative to the norm).
    pub fn new(mat: CMat, tol: f64) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Dimension {
                context: "HermitianMatrix::new",
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        let adj = mat.adjoint();
        let residue = max_abs_c(&(&mat - &adj));
        let scale = max_abs_c(&mat).max(1.0);
        if residue > tol * scale {
            return Err(Error::NotHermitian { residue });
        }
        Ok(Self {
            mat: (&mat + &adj) * C64::new(0.5, 0.0),
        })
    }

    /// Build from a real symmetric matrix.
    pub fn from_real(mat: &RMat, tol: f64) -> Result<Self> {
        Self::new(mat.map(|x| C64::new(x, 0.0)), tol)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
///
/// Computed through the real symmetric embedding `[[Re H, -Im H], [Im H, Re H]]`,
/// whose spectrum is that of `H` with every eigenvalue doubled; this keeps the
/// eigenproblem in well-tested real arithmetic.
pub fn min_eig_hermitian(h: &HermitianMatrix) -> f64 {
    let n = h.dim();
    let mut emb = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h.mat[(i, j)];
            emb[(i, j)] = z.re;
            emb[(n + i, n + j)] = z.re;
            emb[(i, n + j)] = -z.im;
            emb[(n + i, j)] = z.im;
        }
    }
    let eig = emb.symmetric_eigen();
    eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// All eigenvalues of a Hermitian matrix, ascending.
pub fn eigs_hermitian(h: &HermitianMatrix) -> Vec<f64> {
    let n = h.dim();
    let mut emb = RMat::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            let z = h.mat[(i, j)];
            emb[(i, j)] = z.re;
            emb[(n + i, n + j)] = z.re;
            emb[(i, n + j)] = -z.im;
            emb[(n + i, j)] = z.im;
        }
    }
    let eig = emb.symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    // doubled spectrum: keep every other value
    vals.into_iter().step_by(2).collect()
}

/// Antisymmetric form encoding canonical commutators: block-diagonal 2x2
/// units `[[0, 1], [-1, 0]]`, one per mode.
#[derive(Debug, Clone)]
pub struct SymplecticForm {
    mat: RMat,
}

impl SymplecticForm {
    /// The standard form in `dim` dimensions (`dim` even).
    pub fn standard(dim: usize) -> Result<Self> {
        if dim == 0 || dim % 2 != 0 {
            return Err(Error::Dimension {
                context: "SymplecticForm::standard",
                expected: dim + dim % 2,
                got: dim,
            });
        }
        let mut mat = RMat::zeros(dim, dim);
        for b in 0..dim / 2 {
            mat[(2 * b, 2 * b + 1)] = 1.0;
            mat[(2 * b + 1, 2 * b)] = -1.0;
        }
        Ok(Self { mat })
    }

    /// Wrap an explicit antisymmetric matrix squaring to `-1`.
    pub fn new(mat: RMat, tol: f64) -> Result<Self> {
        let anti = max_abs(&(&mat + &mat.transpose()));
        if anti != 0.0 {
            return Err(Error::NotSymmetric { residue: anti });
        }
        let dim = mat.nrows();
        let sq = &mat * &mat + RMat::identity(dim, dim);
        let res = max_abs(&sq);
        if res > tol {
            return Err(Error::Consistency(format!(
                "symplectic form does not square to -1: residue {res:.3e}"
            )));
        }
        Ok(Self { mat })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &RMat {
        &self.mat
    }
}

/// Real symmetric covariance matrix paired with its symplectic form.
///
/// Symmetry is enforced at construction; physical validity (the bona fide
/// property) is a separate check because invalid candidates must remain
/// representable for negative tests.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    mat: RMat,
    form: SymplecticForm,
}

impl CovarianceMatrix {
    pub fn new(mat: RMat, form: SymplecticForm, tol: &Tolerances) -> Result<Self> {
        if mat.nrows() != form.dim() || mat.ncols() != form.dim() {
            return Err(Error::Dimension {
                context: "CovarianceMatrix::new",
                expected: form.dim(),
                got: mat.nrows(),
            });
        }
        let residue = max_abs(&(&mat - &mat.transpose()));
        let scale = max_abs(&mat).max(1.0);
        if residue > tol.symmetry * scale {
            return Err(Error::NotSymmetric { residue });
        }
        let sym = (&mat + &mat.transpose()) * 0.5;
        Ok(Self {
            mat: sym,
            form,
        })
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &RMat {
        &self.mat
    }

    pub fn form(&self) -> &SymplecticForm {
        &self.form
    }

    /// Uncertainty-principle check: valid iff the smallest eigenvalue of
    /// `Sigma + (i/2) sigma` clears `-tol.algebraic`. Returns the verdict and
    /// that eigenvalue as the margin.
    pub fn bona_fide(&self, tol: &Tolerances) -> (bool, f64) {
        let margin = self.bona_fide_margin();
        (margin >= -tol.algebraic, margin)
    }

    /// Smallest eigenvalue of `Sigma + (i/2) sigma`.
    pub fn bona_fide_margin(&self) -> f64 {
        let n = self.dim();
        let mut h = CMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] = C64::new(self.mat[(i, j)], 0.5 * self.form.mat[(i, j)]);
            }
        }
        let herm = HermitianMatrix::new(h, 1e-9).expect("construction is Hermitian");
        min_eig_hermitian(&herm)
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

/// Matrix exponential `exp(t A)` by order-13 Pade approximation with scaling
/// and squaring. Handles defective matrices (degenerate spectra at maximal
/// coupling included), unlike diagonalization-based routes.
pub fn expm(a: &RMat, t: f64) -> Result<RMat> {
    if a.nrows() != a.ncols() {
        return Err(Error::Dimension {
            context: "expm",
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let n = a.nrows();
    if !a.iter().all(|x| x.is_finite()) || !t.is_finite() {
        return Err(Error::Consistency("expm: non-finite input".into()));
    }
    let m = a * t;
    // 1-norm controls the scaling exponent
    let norm1 = (0..n)
        .map(|j| (0..n).map(|i| m[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let s = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = &m * 0.5f64.powi(s);

    let ident = RMat::identity(n, n);
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * PADE13[13] + &a4 * PADE13[11] + &a2 * PADE13[9];
    let u = &scaled
        * (&a6 * &u_inner + &a6 * PADE13[7] + &a4 * PADE13[5] + &a2 * PADE13[3] + &ident * PADE13[1]);
    let v_inner = &a6 * PADE13[12] + &a4 * PADE13[10] + &a2 * PADE13[8];
    let v = &a6 * &v_inner + &a6 * PADE13[6] + &a4 * PADE13[4] + &a2 * PADE13[2] + &ident * PADE13[0];

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut result = lhs
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Consistency("expm: Pade denominator is singular".into()))?;
    for _ in 0..s {
        result = &result * &result;
    }
    Ok(result)
}

/// Classical fourth-order fixed-step integration of the linear matrix ODE
/// `dX/dt = f(X)` from `x0` to time `t`. The step actually used is `t/ceil(t/dt)`
/// so the endpoint is hit exactly.
///
/// Fails with the offending step index if any intermediate value stops being
/// finite.
pub fn integrate_linear_ode<T, F>(f: F, x0: &DMatrix<T>, t: f64, dt: f64) -> Result<DMatrix<T>>
where
    T: ComplexField<RealField = f64> + Copy,
    F: Fn(&DMatrix<T>) -> DMatrix<T>,
{
    if dt <= 0.0 || t < 0.0 || !dt.is_finite() || !t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "dt/t",
            value: dt,
            requirement: "dt > 0 and t >= 0",
        });
    }
    if t == 0.0 {
        return Ok(x0.clone());
    }
    let steps = (t / dt).ceil().max(1.0) as usize;
    let h = t / steps as f64;
    let h6 = T::from_real(h / 6.0);
    let h2 = T::from_real(h / 2.0);
    let hh = T::from_real(h);
    let two = T::from_real(2.0);
    let mut x = x0.clone();
    for step in 0..steps {
        let k1 = f(&x);
        let k2 = f(&(&x + &k1 * h2));
        let k3 = f(&(&x + &k2 * h2));
        let k4 = f(&(&x + &k3 * hh));
        x += (k1 + k2 * two + k3 * two + k4) * h6;
        if !x.iter().all(|e| e.modulus().is_finite()) {
            return Err(Error::Divergence {
                step,
                time: (step + 1) as f64 * h,
            });
        }
    }
    Ok(x)
}
