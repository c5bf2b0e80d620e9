//! Brute-force truncated-Fock oracle for the finite-size limits behind the
//! mesoscopic construction.
//!
//! Everything acts on two bosonic modes truncated at `n_max` photons each.
//! Because the chain state is a product of identical site states, collective
//! expectations over `N` sites reduce to the `N`-th power of a single-site
//! scalar expectation; no `N`-site objects are ever built. The oracle checks
//! three limits against their mesoscopic predictions: Gaussian convergence
//! of fluctuation characteristic functions, the emergent Weyl product
//! relation, and the dissipative sandwich identity connecting the
//! microscopic Lindblad evolution to the 6x6 quasi-free flow.
//!
//! Truncation control is explicit: thermal states carry their tail mass and
//! Weyl expectations carry the drift under an `n_max + 4` rerun.

use nalgebra::{DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::{integrate_linear_ode, max_abs_c, CMat, SymplecticForm, C64};
use crate::meso;
use crate::micro::{basis_observables, BathParams, FluctuationKinematics, QuadraticObservable};

/// Two-mode truncated Fock space with `n_max` photons per mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FockGrid {
    n_max: usize,
}

impl FockGrid {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max < 4 {
            return Err(Error::InvalidParameter {
                name: "n_max",
                value: n_max as f64,
                requirement: "n_max >= 4",
            });
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Total dimension `(n_max + 1)^2`.
    pub fn dim(&self) -> usize {
        (self.n_max + 1) * (self.n_max + 1)
    }

    fn levels(&self) -> usize {
        self.n_max + 1
    }

    /// Indices with both mode occupations strictly below `n_max`: the block
    /// unaffected by the truncation edge.
    pub fn interior_indices(&self) -> Vec<usize> {
        let l = self.levels();
        let mut idx = Vec::with_capacity((l - 1) * (l - 1));
        for n1 in 0..l - 1 {
            for n2 in 0..l - 1 {
                idx.push(n1 * l + n2);
            }
        }
        idx
    }
}

/// Dense operator on the truncated two-mode space, flagged when Hermitian.
#[derive(Debug, Clone)]
pub struct FockOperator {
    mat: CMat,
    hermitian: bool,
}

impl FockOperator {
    pub fn new(mat: CMat, hermitian: bool) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::Dimension {
                context: "FockOperator::new",
                expected: mat.nrows(),
                got: mat.ncols(),
            });
        }
        if hermitian {
            let residue = max_abs_c(&(&mat - &mat.adjoint()));
            if residue > 1e-12 * max_abs_c(&mat).max(1.0) {
                return Err(Error::NotHermitian { residue });
            }
        }
        Ok(Self { mat, hermitian })
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }
}

// ---------------------------------------------------------------------------
// sparse helper: canonical operators fill a handful of bands, and the
// dissipative evolution spends all its time in operator products with them
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct Sparse {
    dim: usize,
    rows: Vec<Vec<(usize, C64)>>,
    cols: Vec<Vec<(usize, C64)>>,
}

impl Sparse {
    fn from_dense(m: &CMat) -> Self {
        let dim = m.nrows();
        let mut rows = vec![Vec::new(); dim];
        let mut cols = vec![Vec::new(); dim];
        for j in 0..dim {
            for i in 0..dim {
                let v = m[(i, j)];
                if v.norm_sqr() != 0.0 {
                    rows[i].push((j, v));
                    cols[j].push((i, v));
                }
            }
        }
        Self { dim, rows, cols }
    }

    /// `self * d`
    fn mul_dense(&self, d: &CMat) -> CMat {
        let n = self.dim;
        let mut out = CMat::zeros(n, n);
        for j in 0..n {
            let dcol = d.column(j);
            let mut ocol = out.column_mut(j);
            for i in 0..n {
                let mut acc = C64::new(0.0, 0.0);
                for &(k, v) in &self.rows[i] {
                    acc += v * dcol[k];
                }
                ocol[i] = acc;
            }
        }
        out
    }

    /// `d * self`
    fn dense_mul(&self, d: &CMat) -> CMat {
        let n = self.dim;
        let mut out = CMat::zeros(n, n);
        for j in 0..n {
            for &(k, v) in &self.cols[j] {
                let dcol = d.column(k);
                let mut ocol = out.column_mut(j);
                for i in 0..n {
                    ocol[i] += v * dcol[i];
                }
            }
        }
        out
    }

    fn matvec(&self, x: &DVector<C64>) -> DVector<C64> {
        let mut out = DVector::zeros(self.dim);
        for i in 0..self.dim {
            let mut acc = C64::new(0.0, 0.0);
            for &(k, v) in &self.rows[i] {
                acc += v * x[k];
            }
            out[i] = acc;
        }
        out
    }

    /// max row sum of moduli (operator infinity-norm bound)
    fn norm_inf(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.iter().map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }
}

fn single_mode_lowering(levels: usize) -> CMat {
    let mut a = CMat::zeros(levels, levels);
    for k in 1..levels {
        a[(k - 1, k)] = C64::new((k as f64).sqrt(), 0.0);
    }
    a
}

/// Canonical pairs `(x1, p1, x2, p2)` on the truncated two-mode space:
/// `x = (a + a^dag)/sqrt(2)`, `p = (a - a^dag)/(i sqrt(2))`, extended by the
/// identity on the other mode. Commutators are canonical on the interior
/// block; the top level carries the truncation edge.
pub fn build_canonicals(grid: &FockGrid) -> [FockOperator; 4] {
    let l = grid.levels();
    let a = single_mode_lowering(l);
    let adag = a.adjoint();
    let inv = C64::new(1.0 / 2.0f64.sqrt(), 0.0);
    let x = (&a + &adag) * inv;
    let p = (&a - &adag) * (C64::new(0.0, -1.0) * inv);
    let eye = CMat::identity(l, l);
    let ops = [
        x.kronecker(&eye),
        p.kronecker(&eye),
        eye.kronecker(&x),
        eye.kronecker(&p),
    ];
    ops.map(|m| FockOperator::new(m, true).expect("canonicals are Hermitian"))
}

/// Truncated thermal state: geometric mode populations, diagonal in the Fock
/// basis, normalized on the truncated space. `tail_mass` is the probability
/// weight on the top two levels of either mode.
#[derive(Debug, Clone)]
pub struct TruncatedState {
    probs: DVector<f64>,
    tail_mass: f64,
}

impl TruncatedState {
    pub fn probabilities(&self) -> &DVector<f64> {
        &self.probs
    }

    pub fn tail_mass(&self) -> f64 {
        self.tail_mass
    }

    /// Dense density matrix (diagonal).
    pub fn density(&self) -> CMat {
        CMat::from_diagonal(&self.probs.map(|p| C64::new(p, 0.0)))
    }

    /// `tr(rho M)` for a dense operator.
    pub fn expectation(&self, m: &CMat) -> C64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.probs.len() {
            acc += C64::new(self.probs[i], 0.0) * m[(i, i)];
        }
        acc
    }

    /// Basis states carrying all but a negligible share of the weight,
    /// heaviest first. The neglected mass bounds the error of any sandwiched
    /// unitary expectation, and it must stay well below `1/n` even after the
    /// `n`-th power amplifies it.
    fn significant_states(&self) -> Vec<(usize, f64)> {
        const NEGLECT: f64 = 1e-17;
        let mut order: Vec<(usize, f64)> = self
            .probs
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, p)| p > 0.0)
            .collect();
        order.sort_by(|a, b| b.1.total_cmp(&a.1));
        let mut kept = Vec::new();
        let mut mass = 0.0;
        for (i, p) in order {
            kept.push((i, p));
            mass += p;
            if 1.0 - mass < NEGLECT {
                break;
            }
        }
        kept
    }
}

/// Build the thermal state at the bath temperature. Fails (with the mass)
/// when the truncation tail exceeds `1e-8`, signalling that `n_max` is too
/// small for this temperature.
pub fn thermal_state(grid: &FockGrid, bath: &BathParams) -> Result<TruncatedState> {
    let l = grid.levels();
    let g = bath.gamma();
    let mut q = DVector::zeros(l);
    for n in 0..l {
        q[n] = g.powi(n as i32);
    }
    let total = q.sum();
    q /= total;
    let mut probs = DVector::zeros(grid.dim());
    for n1 in 0..l {
        for n2 in 0..l {
            probs[n1 * l + n2] = q[n1] * q[n2];
        }
    }
    let mut tail = 0.0;
    for n1 in 0..l {
        for n2 in 0..l {
            if n1 >= l - 2 || n2 >= l - 2 {
                tail += probs[n1 * l + n2];
            }
        }
    }
    if tail > 1e-8 {
        return Err(Error::Truncation {
            tail_mass: tail,
            limit: 1e-8,
        });
    }
    Ok(TruncatedState {
        probs,
        tail_mass: tail,
    })
}

/// Represent a quadratic site observable on the truncated space.
pub fn fock_observable(x: &QuadraticObservable, grid: &FockGrid) -> FockOperator {
    let canon = build_canonicals(grid);
    let sparse: Vec<Sparse> = canon
        .iter()
        .map(|c| Sparse::from_dense(c.matrix()))
        .collect();
    let dim = grid.dim();
    let mut out = CMat::identity(dim, dim) * C64::new(x.offset(), 0.0);
    for i in 0..4 {
        for j in 0..4 {
            let a = x.coeff()[(i, j)];
            if a == 0.0 {
                continue;
            }
            // A_ij (R_i R_j + R_j R_i) / 2
            let rij = sparse[i].mul_dense(canon[j].matrix());
            let rji = sparse[j].mul_dense(canon[i].matrix());
            out += (rij + rji) * C64::new(0.5 * a, 0.0);
        }
    }
    FockOperator::new(out, true).expect("quadratics in Hermitian canonicals are Hermitian")
}

// ---------------------------------------------------------------------------
// phase exponentials exp(i s X) by substepped Taylor series
// ---------------------------------------------------------------------------

fn phase_apply(x: &Sparse, s: f64, v: &DVector<C64>) -> DVector<C64> {
    let steps = (s.abs() * x.norm_inf()).ceil().max(1.0) as usize;
    let factor = C64::new(0.0, s / steps as f64);
    let mut out = v.clone();
    for _ in 0..steps {
        let mut acc = out.clone();
        let mut term = out;
        for k in 1..=90 {
            term = x.matvec(&term) * (factor / C64::new(k as f64, 0.0));
            acc += &term;
            if term.norm() <= 1e-17 * acc.norm() {
                break;
            }
        }
        out = acc;
    }
    out
}

fn phase_matrix(x: &Sparse, s: f64) -> CMat {
    let steps = (s.abs() * x.norm_inf()).ceil().max(1.0) as usize;
    let factor = C64::new(0.0, s / steps as f64);
    let mut out = CMat::identity(x.dim, x.dim);
    for _ in 0..steps {
        let mut acc = out.clone();
        let mut term = out;
        for k in 1..=90 {
            term = x.mul_dense(&term) * (factor / C64::new(k as f64, 0.0));
            acc += &term;
            if max_abs_c(&term) <= 1e-17 * max_abs_c(&acc) {
                break;
            }
        }
        out = acc;
    }
    out
}

/// Mean-subtracted combination `X_r - <X_r>` as a sparse operator.
fn centered_combination(
    r: &[f64; 6],
    grid: &FockGrid,
    bath: &BathParams,
    state: &TruncatedState,
) -> Sparse {
    let basis = basis_observables(bath);
    let xr = QuadraticObservable::combine(&basis, r);
    let op = fock_observable(&xr, grid);
    let mean = state.expectation(op.matrix()).re;
    let dim = grid.dim();
    let centered = op.matrix() - CMat::identity(dim, dim) * C64::new(mean, 0.0);
    Sparse::from_dense(&centered)
}

fn per_site_weyl(x: &Sparse, s: f64, state: &TruncatedState) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    let dim = x.dim;
    for &(idx, p) in &state.significant_states() {
        let mut e = DVector::<C64>::zeros(dim);
        e[idx] = C64::new(1.0, 0.0);
        let w = phase_apply(x, s, &e);
        acc += C64::new(p, 0.0) * w[idx];
    }
    acc
}

fn powu(z: C64, n: u64) -> C64 {
    // exponentiation by squaring
    let mut base = z;
    let mut out = C64::new(1.0, 0.0);
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            out *= base;
        }
        base *= base;
        k >>= 1;
    }
    out
}

/// Collective Weyl expectation at chain length `n` with a truncation
/// diagnostic from an `n_max + 4` rerun.
#[derive(Debug, Clone)]
pub struct WeylExpectation {
    /// `<exp(i (X_r - <X_r>) / sqrt(n))>^n` at the requested truncation.
    pub value: C64,
    /// Thermal tail mass at the requested truncation.
    pub tail_mass: f64,
    /// Drift of the value under the `n_max + 4` rerun.
    pub refinement_drift: f64,
    /// Whether the drift is negligible against the value.
    pub converged: bool,
}

/// Finite-size collective Weyl expectation: the site exponential is built by
/// Hermitian phase exponentiation and the product structure over sites turns
/// the collective average into an `n`-th power.
pub fn weyl_expectation_n(
    r: &[f64; 6],
    n: u64,
    grid: &FockGrid,
    bath: &BathParams,
) -> Result<WeylExpectation> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            requirement: "n >= 1",
        });
    }
    let s = 1.0 / (n as f64).sqrt();
    let state = thermal_state(grid, bath)?;
    let x = centered_combination(r, grid, bath, &state);
    let value = powu(per_site_weyl(&x, s, &state), n);

    let refined_grid = FockGrid::new(grid.n_max() + 4)?;
    let refined_state = thermal_state(&refined_grid, bath)?;
    let xr = centered_combination(r, &refined_grid, bath, &refined_state);
    let refined = powu(per_site_weyl(&xr, s, &refined_state), n);
    let drift = (value - refined).norm();
    Ok(WeylExpectation {
        value,
        tail_mass: state.tail_mass(),
        refinement_drift: drift,
        converged: drift <= 1e-8 * value.norm().max(1.0),
    })
}

/// Convergence report of the collective Weyl expectation toward its Gaussian
/// limit over a ladder of chain lengths.
#[derive(Debug, Clone)]
pub struct CltReport {
    pub gaussian_limit: f64,
    /// `(n, |finite-size value - Gaussian limit|)` per requested length.
    pub points: Vec<(u64, f64)>,
    /// Least-squares slope of `log error` against `log n`.
    pub slope: f64,
}

/// Measure the quantum-central-limit convergence rate at fixed truncation.
///
/// For the phase-symmetric thermal state all odd moments of the quadratic
/// basis vanish, so the observed error decays like `1/n` - one power faster
/// than the generic square-root remainder bound.
pub fn clt_convergence(
    r: &[f64; 6],
    n_list: &[u64],
    grid: &FockGrid,
    bath: &BathParams,
) -> Result<CltReport> {
    if n_list.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "n_list",
            value: n_list.len() as f64,
            requirement: "at least two chain lengths",
        });
    }
    let state = thermal_state(grid, bath)?;
    let x = centered_combination(r, grid, bath, &state);
    let scale = FluctuationKinematics::scale(bath);
    let quad: f64 = r.iter().map(|v| v * v).sum::<f64>() * scale;
    let gaussian_limit = (-0.5 * quad).exp();
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(Error::InvalidParameter {
                name: "n",
                value: 0.0,
                requirement: "n >= 1",
            });
        }
        let value = powu(per_site_weyl(&x, 1.0 / (n as f64).sqrt(), &state), n);
        points.push((n, (value - C64::new(gaussian_limit, 0.0)).norm()));
    }
    // least-squares slope in log-log coordinates
    let logs: Vec<(f64, f64)> = points
        .iter()
        .map(|&(n, e)| ((n as f64).ln(), e.max(1e-300).ln()))
        .collect();
    let m = logs.len() as f64;
    let sx: f64 = logs.iter().map(|p| p.0).sum();
    let sy: f64 = logs.iter().map(|p| p.1).sum();
    let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
    let slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    Ok(CltReport {
        gaussian_limit,
        points,
        slope,
    })
}

/// Deviation of the collective Weyl product from the emergent canonical
/// relation: `|<W(r1) W(r2)> - <W(r1+r2)> exp(-i r1.sigma.r2 / 2)|` at chain
/// length `n`. Decreases toward zero as `n` grows.
pub fn weyl_product_residual(
    r1: &[f64; 6],
    r2: &[f64; 6],
    n: u64,
    grid: &FockGrid,
    bath: &BathParams,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            requirement: "n >= 1",
        });
    }
    let s = 1.0 / (n as f64).sqrt();
    let state = thermal_state(grid, bath)?;
    let x1 = centered_combination(r1, grid, bath, &state);
    let x2 = centered_combination(r2, grid, bath, &state);
    let mut rsum = [0.0; 6];
    for i in 0..6 {
        rsum[i] = r1[i] + r2[i];
    }
    let x12 = centered_combination(&rsum, grid, bath, &state);

    // <n| E1 E2 |n> = (E1^dag |n>)^dag (E2 |n>)
    let dim = grid.dim();
    let mut product = C64::new(0.0, 0.0);
    for &(idx, p) in &state.significant_states() {
        let mut e = DVector::<C64>::zeros(dim);
        e[idx] = C64::new(1.0, 0.0);
        let left = phase_apply(&x1, -s, &e);
        let right = phase_apply(&x2, s, &e);
        product += C64::new(p, 0.0) * left.dotc(&right);
    }
    let lhs = powu(product, n);
    let combined = powu(per_site_weyl(&x12, s, &state), n);

    let form = SymplecticForm::standard(6)?;
    let mut contraction = 0.0;
    for i in 0..6 {
        for j in 0..6 {
            contraction += r1[i] * form.matrix()[(i, j)] * r2[j];
        }
    }
    let phase = C64::new(0.0, -0.5 * contraction).exp();
    Ok((lhs - combined * phase).norm())
}

// ---------------------------------------------------------------------------
// dissipative Heisenberg evolution
// ---------------------------------------------------------------------------

struct LindbladOps {
    h_diag: Option<DVector<f64>>,
    h_sparse: Sparse,
    jumps: Vec<(f64, Sparse, Sparse)>, // rate, J, J^dag
    anticomm: Sparse,                  // sum_k c_k J_k J_k^dag
}

fn lindblad_ops(grid: &FockGrid, bath: &BathParams) -> Result<LindbladOps> {
    let canon = build_canonicals(grid);
    let dim = grid.dim();

    // site Hamiltonian from the truncated canonicals
    let mut h = CMat::zeros(dim, dim);
    for c in &canon {
        let sp = Sparse::from_dense(c.matrix());
        h += sp.mul_dense(c.matrix());
    }
    h *= C64::new(bath.omega() / 2.0, 0.0);
    // the two-photon terms cancel between x^2 and p^2, leaving a diagonal
    // matrix; keep a fast path when that holds exactly
    let mut off = 0.0f64;
    for j in 0..dim {
        for i in 0..dim {
            if i != j {
                off = off.max(h[(i, j)].norm());
            }
        }
    }
    let h_diag = if off < 1e-13 {
        Some(DVector::from_fn(dim, |i, _| h[(i, i)].re))
    } else {
        None
    };
    let h_sparse = Sparse::from_dense(&h);

    // diagonalize the 4x4 Kossakowski matrix into jump operators
    let c = crate::micro::kossakowski(bath)?;
    let eig = SymmetricEigen::new(c.matrix().clone());
    let mut jumps = Vec::new();
    let mut anticomm = CMat::zeros(dim, dim);
    for k in 0..4 {
        let rate = eig.eigenvalues[k];
        if rate < -1e-10 {
            return Err(Error::Consistency(format!(
                "negative Kossakowski eigenvalue {rate:.3e}"
            )));
        }
        let rate = rate.max(0.0);
        if rate == 0.0 {
            continue;
        }
        let mut j = CMat::zeros(dim, dim);
        for alpha in 0..4 {
            j += canon[alpha].matrix() * eig.eigenvectors[(alpha, k)];
        }
        let jdag = j.adjoint();
        let jd = Sparse::from_dense(&j);
        anticomm += jd.mul_dense(&jdag) * C64::new(rate, 0.0);
        jumps.push((rate, jd, Sparse::from_dense(&jdag)));
    }
    Ok(LindbladOps {
        h_diag,
        h_sparse,
        jumps,
        anticomm: Sparse::from_dense(&anticomm),
    })
}

impl LindbladOps {
    /// Heisenberg generator `i[H, A] + sum_k c_k J_k A J_k^dag - {M, A}/2`.
    fn apply(&self, a: &CMat) -> CMat {
        let n = a.nrows();
        let mut out = match &self.h_diag {
            Some(h) => {
                let mut m = CMat::zeros(n, n);
                for j in 0..n {
                    for i in 0..n {
                        let d = h[i] - h[j];
                        if d != 0.0 {
                            let z = a[(i, j)];
                            m[(i, j)] = C64::new(-d * z.im, d * z.re);
                        }
                    }
                }
                m
            }
            None => {
                let ha = self.h_sparse.mul_dense(a);
                let ah = self.h_sparse.dense_mul(a);
                (ha - ah) * C64::new(0.0, 1.0)
            }
        };
        for (rate, j, jdag) in &self.jumps {
            let ja = j.mul_dense(a);
            out += jdag.dense_mul(&ja) * C64::new(*rate, 0.0);
        }
        let ma = self.anticomm.mul_dense(a);
        let am = self.anticomm.dense_mul(a);
        out -= (ma + am) * C64::new(0.5, 0.0);
        out
    }
}

/// Integrate the Heisenberg-picture Lindblad equation for a truncated
/// operator with the classical fourth-order fixed-step scheme. The grid is
/// inferred from the operator dimension.
pub fn heisenberg_evolve(
    op: &FockOperator,
    bath: &BathParams,
    t: f64,
    dt: f64,
) -> Result<FockOperator> {
    let dim = op.dim();
    let levels = (dim as f64).sqrt().round() as usize;
    if levels * levels != dim || levels < 2 {
        return Err(Error::Dimension {
            context: "heisenberg_evolve",
            expected: levels * levels,
            got: dim,
        });
    }
    let grid = FockGrid::new(levels - 1)?;
    let ops = lindblad_ops(&grid, bath)?;
    let evolved = integrate_linear_ode(|a| ops.apply(a), op.matrix(), t, dt)?;
    let hermitian = op.is_hermitian()
        && max_abs_c(&(&evolved - &evolved.adjoint())) <= 1e-10 * max_abs_c(&evolved).max(1.0);
    FockOperator::new(evolved, hermitian)
}

/// Finite-size check of the dissipative sandwich identity.
#[derive(Debug, Clone)]
pub struct SandwichCheck {
    /// `<W(r1) Phi_t[W(r)] W(r2)>` over `n` sites from the truncated-Fock
    /// integration.
    pub lhs: C64,
    /// Quasi-free prediction from the 6x6 propagator and noise matrices.
    pub rhs: C64,
    pub error: f64,
}

/// Evolve the middle Weyl factor microscopically, sandwich it between two
/// collective Weyl operators, and compare against the quasi-free prediction
///
/// ```text
/// exp(-[ (r1+r2+r_t).S.(r1+r2+r_t) + r.K_t.r ]/2
///     - i [ r1.s.r_t + r_t.s.r2 + r1.s.r2 ]/2)
/// ```
///
/// with `r_t = M_t^T r`, `S` the invariant covariance and `s` the symplectic
/// form. The placement of the transported vector is fixed by the semigroup
/// algebra: at `t = 0` the expression reduces to the Gaussian three-factor
/// product, and at `r1 = r2 = 0` it collapses to the invariant-state
/// characteristic function exactly.
pub fn dissipative_sandwich(
    r1: &[f64; 6],
    r: &[f64; 6],
    r2: &[f64; 6],
    t: f64,
    n: u64,
    grid: &FockGrid,
    bath: &BathParams,
    dt: f64,
) -> Result<SandwichCheck> {
    let norm = |v: &[f64; 6]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm(r1) > 2.0 || norm(r) > 2.0 || norm(r2) > 2.0 {
        return Err(Error::InvalidParameter {
            name: "r",
            value: norm(r).max(norm(r1)).max(norm(r2)),
            requirement: "parameter norms <= 2 to control truncation",
        });
    }
    if !(0.0..=2.0).contains(&t) {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            requirement: "0 <= t <= 2 to control truncation",
        });
    }
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            requirement: "n >= 1",
        });
    }
    let s = 1.0 / (n as f64).sqrt();
    let state = thermal_state(grid, bath)?;
    let x1 = centered_combination(r1, grid, bath, &state);
    let xm = centered_combination(r, grid, bath, &state);
    let x2 = centered_combination(r2, grid, bath, &state);

    let middle = phase_matrix(&xm, s);
    let ops = lindblad_ops(grid, bath)?;
    let evolved = integrate_linear_ode(|a| ops.apply(a), &middle, t, dt)?;

    let dim = grid.dim();
    let mut per_site = C64::new(0.0, 0.0);
    for &(idx, p) in &state.significant_states() {
        let mut e = DVector::<C64>::zeros(dim);
        e[idx] = C64::new(1.0, 0.0);
        let left = phase_apply(&x1, -s, &e);
        let right = phase_apply(&x2, s, &e);
        let mid = &evolved * right;
        per_site += C64::new(p, 0.0) * left.dotc(&mid);
    }
    let lhs = powu(per_site, n);

    // quasi-free prediction
    let gen = meso::generator(bath)?;
    let sb = gen.invariant_covariance();
    let bundle = meso::propagate(&gen, &sb, t)?;
    let rv = DVector::from_row_slice(r);
    let r1v = DVector::from_row_slice(r1);
    let r2v = DVector::from_row_slice(r2);
    let rt = bundle.propagator().transpose() * &rv;
    let total = &r1v + &r2v + &rt;
    let quad_sigma = (total.transpose() * &sb * &total)[(0, 0)];
    let quad_noise = (rv.transpose() * bundle.noise() * &rv)[(0, 0)];
    let form = SymplecticForm::standard(6)?;
    let contract =
        |a: &DVector<f64>, b: &DVector<f64>| (a.transpose() * form.matrix() * b)[(0, 0)];
    let phase = contract(&r1v, &rt) + contract(&rt, &r2v) + contract(&r1v, &r2v);
    let rhs = C64::new(-0.5 * (quad_sigma + quad_noise), -0.5 * phase).exp();
    Ok(SandwichCheck {
        lhs,
        rhs,
        error: (lhs - rhs).norm(),
    })
}

/// Characteristic value of a mean-field average over `n` sites:
/// `<exp(i X_r / n)>^n`. Converges to `exp(i <X_r>)` - for the zero-mean
/// quadratic basis, to one - as the averaging suppresses all fluctuations.
pub fn mean_field_characteristic(
    r: &[f64; 6],
    n: u64,
    grid: &FockGrid,
    bath: &BathParams,
) -> Result<C64> {
    if n == 0 {
        return Err(Error::InvalidParameter {
            name: "n",
            value: 0.0,
            requirement: "n >= 1",
        });
    }
    let state = thermal_state(grid, bath)?;
    let basis = basis_observables(bath);
    let xr = QuadraticObservable::combine(&basis, r);
    let op = fock_observable(&xr, grid);
    let sp = Sparse::from_dense(op.matrix());
    Ok(powu(per_site_weyl(&sp, 1.0 / n as f64, &state), n))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::RMat;
    use crate::micro::{lindblad_action, ordered_moment, thermal_site_covariance, Canonical};

    fn grid24() -> FockGrid {
        FockGrid::new(24).unwrap()
    }

    #[test]
    fn canonical_commutators() {
        let grid = FockGrid::new(8).unwrap();
        let [x1, p1, _x2, p2] = build_canonicals(&grid);
        // vacuum variance of x is 1/2
        let x1s = Sparse::from_dense(x1.matrix());
        let xsq = x1s.mul_dense(x1.matrix());
        assert!((xsq[(0, 0)].re - 0.5).abs() < 1e-14);
        assert!(xsq[(0, 0)].im.abs() < 1e-15);

        // different modes commute exactly
        let c12 = x1.matrix() * p2.matrix() - p2.matrix() * x1.matrix();
        assert_eq!(max_abs_c(&c12), 0.0);

        // canonical commutator on the interior block
        let comm = x1.matrix() * p1.matrix() - p1.matrix() * x1.matrix();
        let interior = grid.interior_indices();
        for &i in &interior {
            for &j in &interior {
                let want = if i == j {
                    C64::new(0.0, 1.0)
                } else {
                    C64::new(0.0, 0.0)
                };
                assert!((comm[(i, j)] - want).norm() < 1e-12);
            }
        }

        assert!(FockGrid::new(3).is_err());
    }

    #[test]
    fn thermal_state_populations() {
        // cold limit: essentially the vacuum projector
        let cold = BathParams::new(0.05, 1.0, 0.0).unwrap();
        let state = thermal_state(&grid24(), &cold).unwrap();
        assert!((state.probabilities()[0] - 1.0).abs() < 1e-8);

        // quoted second moment at T = 0.1
        let b = BathParams::new(0.1, 1.0, 0.0).unwrap();
        let state = thermal_state(&grid24(), &b).unwrap();
        let [x1, _, _, _] = build_canonicals(&grid24());
        let x1s = Sparse::from_dense(x1.matrix());
        let xsq = x1s.mul_dense(x1.matrix());
        let have = state.expectation(&xsq).re;
        let want = 1.0 / (2.0 * b.eta());
        assert!((have - want).abs() < 1e-10);
        assert!((have - 0.5000454).abs() < 1e-6);
        assert!(state.tail_mass() < 1e-20);

        // too hot for a shallow grid: hard truncation error with the mass
        let warm = BathParams::new(1.0, 1.0, 0.0).unwrap();
        let small = FockGrid::new(6).unwrap();
        match thermal_state(&small, &warm) {
            Err(Error::Truncation { tail_mass, .. }) => assert!(tail_mass > 1e-8),
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn fock_moments_match_wick_oracle() {
        // every ordered fourth-order monomial in the site canonicals
        let b = BathParams::new(0.5, 1.0, 0.0).unwrap();
        let grid = FockGrid::new(16).unwrap();
        let state = thermal_state(&grid, &b).unwrap();
        let canon = build_canonicals(&grid);
        let sparse: Vec<Sparse> = canon
            .iter()
            .map(|c| Sparse::from_dense(c.matrix()))
            .collect();
        let site = thermal_site_covariance(&b);
        use crate::micro::CANONICALS;
        let mut worst = 0.0f64;
        for a in 0..4 {
            for bb in 0..4 {
                for c in 0..4 {
                    for d in 0..4 {
                        // product R_a R_b R_c R_d assembled right to left
                        let mut m = sparse[c].mul_dense(canon[d].matrix());
                        m = sparse[bb].mul_dense(&m);
                        m = sparse[a].mul_dense(&m);
                        let fockv = state.expectation(&m);
                        let idx = [CANONICALS[a], CANONICALS[bb], CANONICALS[c], CANONICALS[d]];
                        let wickv = ordered_moment(&site, &idx);
                        let dev = (fockv - wickv).norm() / wickv.norm().max(1.0);
                        worst = worst.max(dev);
                        assert!(dev < 1e-6, "monomial {idx:?}: fock {fockv} wick {wickv}");
                    }
                }
            }
        }
        // truncation at this temperature leaves far more headroom than the
        // 1e-6 requirement
        assert!(worst < 1e-9, "worst relative deviation {worst:.2e}");
    }

    #[test]
    fn weyl_expectation_limits() {
        let b = BathParams::new(0.1, 1.0, 0.0).unwrap();
        let grid = grid24();

        // r = 0 is the identity
        let one = weyl_expectation_n(&[0.0; 6], 17, &grid, &b).unwrap();
        assert!((one.value - C64::new(1.0, 0.0)).norm() < 1e-14);

        // unit parameter approaches the Gaussian value
        let mut e1 = [0.0; 6];
        e1[0] = 1.0;
        let out = weyl_expectation_n(&e1, 10_000, &grid, &b).unwrap();
        let target = (-0.5 * FluctuationKinematics::scale(&b)).exp();
        assert!((out.value - C64::new(target, 0.0)).norm() < 0.02);
        assert!(out.converged, "n_max drift {:.2e}", out.refinement_drift);
        assert!(out.tail_mass < 1e-20);
    }

    #[test]
    fn clt_error_decays_one_power_faster_than_the_generic_bound() {
        let b = BathParams::new(0.1, 1.0, 0.0).unwrap();
        let grid = grid24();
        let mut e1 = [0.0; 6];
        e1[0] = 1.0;
        let report = clt_convergence(&e1, &[100, 1000, 10_000, 100_000], &grid, &b).unwrap();
        for w in report.points.windows(2) {
            assert!(w[1].1 < w[0].1, "errors must decrease: {:?}", report.points);
        }
        // phase symmetry of the thermal state kills the odd moments, so the
        // decay is 1/n rather than the generic 1/sqrt(n) remainder bound
        assert!(
            (report.slope + 1.0).abs() < 0.2,
            "slope {} (points {:?})",
            report.slope,
            report.points
        );
        assert!(report.slope <= -0.35);
    }

    #[test]
    fn weyl_product_residuals() {
        let b = BathParams::new(0.1, 1.0, 0.0).unwrap();
        let grid = grid24();
        let mut e1 = [0.0; 6];
        e1[0] = 1.0;
        let mut e2 = [0.0; 6];
        e2[1] = 1.0;

        // vanishing second factor: the relation is exact
        let res = weyl_product_residual(&e1, &[0.0; 6], 100, &grid, &b).unwrap();
        assert!(res < 1e-13);

        // canonical pair: small residual, shrinking with n
        let r4 = weyl_product_residual(&e1, &e2, 10_000, &grid, &b).unwrap();
        let r5 = weyl_product_residual(&e1, &e2, 100_000, &grid, &b).unwrap();
        assert!(r4 < 0.02, "residual {r4}");
        assert!(r5 < r4);

        // parallel parameters commute exactly: no phase, only the abelian
        // recombination error at machine precision
        let res = weyl_product_residual(&e1, &e1, 5_000, &grid, &b).unwrap();
        assert!(res < 1e-12);
    }

    #[test]
    fn mean_field_characteristic_approaches_unity() {
        let b = BathParams::new(0.1, 1.0, 0.0).unwrap();
        let grid = grid24();
        let mut e1 = [0.0; 6];
        e1[0] = 1.0;
        let d3 = (mean_field_characteristic(&e1, 1_000, &grid, &b).unwrap()
            - C64::new(1.0, 0.0))
        .norm();
        let d4 = (mean_field_characteristic(&e1, 10_000, &grid, &b).unwrap()
            - C64::new(1.0, 0.0))
        .norm();
        assert!(d4 < 1e-3);
        assert!(d4 < d3);
    }

    #[test]
    fn heisenberg_unitality_and_hermiticity() {
        let b = BathParams::new(0.4, 1.0, 0.8).unwrap();
        let grid = FockGrid::new(10).unwrap();
        let dim = grid.dim();
        let ident = FockOperator::new(CMat::identity(dim, dim), true).unwrap();
        let out = heisenberg_evolve(&ident, &b, 0.5, 1e-3).unwrap();
        assert!(max_abs_c(&(out.matrix() - &CMat::identity(dim, dim))) < 1e-8);

        // Hermitian inputs stay Hermitian
        let basis = basis_observables(&b);
        let x = fock_observable(
            &QuadraticObservable::combine(&basis, &[0.6, 0.0, 0.0, 0.0, 0.3, 0.0]),
            &grid,
        );
        let out = heisenberg_evolve(&x, &b, 0.3, 1e-3).unwrap();
        assert!(out.is_hermitian());
        assert!(max_abs_c(&(out.matrix() - &out.matrix().adjoint())) < 1e-10);
    }

    #[test]
    fn heisenberg_second_moment_matches_lyapunov_flow() {
        // vacuum-prepared mode relaxing in a warm bath: the truncated
        // Heisenberg evolution of x1^2 must track the 4x4 covariance flow
        let b = BathParams::new(0.4, 1.0, 0.0).unwrap();
        let grid = FockGrid::new(10).unwrap();
        let canon = build_canonicals(&grid);
        let x1s = Sparse::from_dense(canon[0].matrix());
        let xsq = FockOperator::new(x1s.mul_dense(canon[0].matrix()), true).unwrap();
        let t = 0.4;
        let evolved = heisenberg_evolve(&xsq, &b, t, 1e-3).unwrap();
        let vacuum_expect = evolved.matrix()[(0, 0)].re;

        let (d, q) = crate::micro::lyapunov_form(&b);
        let sigma0 = RMat::identity(4, 4) * 0.5;
        let sigma_t =
            integrate_linear_ode(|x| &d * x + x * d.transpose() + &q, &sigma0, t, 1e-3).unwrap();
        assert!(
            (vacuum_expect - sigma_t[(0, 0)]).abs() < 1e-8,
            "fock {vacuum_expect} vs lyapunov {}",
            sigma_t[(0, 0)]
        );
        // genuinely relaxing toward the thermal variance
        assert!(vacuum_expect > 0.52);
    }

    #[test]
    fn heisenberg_short_time_matches_symbolic_generator() {
        // (Phi_t[X] - X)/t converges to the symbolic Lindblad image linearly
        let b = BathParams::new(0.4, 1.0, 0.7).unwrap();
        let grid = FockGrid::new(10).unwrap();
        let basis = basis_observables(&b);
        let x1 = &basis[0];
        let op = fock_observable(x1, &grid);
        let image = fock_observable(&lindblad_action(x1, &b), &grid);
        let interior = grid.interior_indices();
        let dev_at = |t: f64| {
            let evolved = heisenberg_evolve(&op, &b, t, t / 50.0).unwrap();
            let fd = (evolved.matrix() - op.matrix()) / C64::new(t, 0.0);
            let diff = &fd - image.matrix();
            let mut worst = 0.0f64;
            for &i in &interior {
                for &j in &interior {
                    worst = worst.max(diff[(i, j)].norm());
                }
            }
            worst
        };
        let d3 = dev_at(1e-3);
        let d4 = dev_at(1e-4);
        assert!(d3 < 0.1, "finite-difference deviation {d3}");
        // linear in t: one decade in t buys about one decade in deviation
        assert!(d4 < d3 / 3.0, "d3 {d3} d4 {d4}");
    }

    #[test]
    fn sandwich_identity_limits() {
        let b = BathParams::new(0.1, 1.0, 0.9).unwrap();
        let grid = FockGrid::new(8).unwrap();
        let zero = [0.0; 6];

        // all parameters zero: both sides are exactly one
        let out = dissipative_sandwich(&zero, &zero, &zero, 0.7, 50, &grid, &b, 1e-3).unwrap();
        assert!((out.lhs - C64::new(1.0, 0.0)).norm() < 1e-10);
        assert!((out.rhs - C64::new(1.0, 0.0)).norm() < 1e-14);

        // stationary case: rhs collapses to the invariant characteristic
        // function; the integrated lhs must not drift from its t = 0 value
        let mut e3 = [0.0; 6];
        e3[2] = 1.0;
        let scale = FluctuationKinematics::scale(&b);
        for n in [50u64, 200] {
            let out = dissipative_sandwich(&zero, &e3, &zero, 0.5, n, &grid, &b, 1e-3).unwrap();
            let exact = (-0.5 * scale).exp();
            assert!((out.rhs - C64::new(exact, 0.0)).norm() < 1e-14);
            // finite-size gap decays like 1/n; the integration itself is
            // certified by the n-powered stationarity drift
            let state = thermal_state(&grid, &b).unwrap();
            let xm = centered_combination(&e3, &grid, &b, &state);
            let s = 1.0 / (n as f64).sqrt();
            let static_site = per_site_weyl(&xm, s, &state);
            let ops = lindblad_ops(&grid, &b).unwrap();
            let evolved =
                integrate_linear_ode(|a| ops.apply(a), &phase_matrix(&xm, s), 0.5, 1e-3).unwrap();
            let evolved_site = state.expectation(&evolved);
            let drift = (powu(evolved_site, n) - powu(static_site, n)).norm();
            assert!(drift < 1e-8, "n-powered stationarity drift {drift:.2e}");
        }

        // generic insertion: the finite-size error decreases with n
        let mut e1 = [0.0; 6];
        e1[0] = 1.0;
        let mut e2 = [0.0; 6];
        e2[1] = 1.0;
        let errs: Vec<f64> = [50u64, 200]
            .iter()
            .map(|&n| {
                dissipative_sandwich(&e1, &e3, &e2, 0.25, n, &grid, &b, 1e-3)
                    .unwrap()
                    .error
            })
            .collect();
        assert!(errs[1] < errs[0], "errors {errs:?}");
        assert!(errs[0] < 0.05);

        // out-of-range magnitudes are rejected
        let big = [2.0; 6];
        assert!(matches!(
            dissipative_sandwich(&big, &zero, &zero, 0.5, 10, &grid, &b, 1e-3),
            Err(Error::InvalidParameter { .. })
        ));
    }
}
