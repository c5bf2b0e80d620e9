//! The mesoscopic quasi-free semigroup on the three-mode fluctuation algebra.
//!
//! The generator is a 6x6 real matrix acting on the quadratic basis of
//! [`crate::micro`]; exponentiating it gives the propagator `M_t`, and the
//! invariant covariance fixes the noise matrix `K_t = Sigma_beta - M_t
//! Sigma_beta M_t^T`. Weyl elements evolve as `W(r) -> exp(-r.K_t.r / 2)
//! W(M_t^T r)` and Gaussian covariances by the dual affine flow. The
//! convention for which vector contracts the noise matrix is pinned by
//! stationarity of the invariant state: `<Phi_t[W(r)]> = <W(r)>` holds
//! exactly with the untransported `r`, and the semigroup composition law
//! `K_{t+s} = K_t + M_t K_s M_t^T` follows.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::{
    expm, min_eig_hermitian, CMat, CovarianceMatrix, HermitianMatrix, RMat, SymplecticForm,
    Tolerances, C64,
};
use crate::micro::{self, BathParams, FluctuationKinematics};

/// How a generator matrix was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorProvenance {
    /// Assembled from the closed-form expression
    /// `(gamma-1) 1 + 2 omega sigma + (gamma-1) lambda/sqrt(2) * coupling block`.
    ClosedForm,
    /// Expanded numerically from the microscopic Lindblad action.
    MicroDerived,
}

/// The 6x6 generator of the mesoscopic semigroup.
#[derive(Debug, Clone)]
pub struct MesoGenerator {
    matrix: RMat,
    bath: BathParams,
    provenance: GeneratorProvenance,
}

impl MesoGenerator {
    pub fn matrix(&self) -> &RMat {
        &self.matrix
    }

    pub fn bath(&self) -> &BathParams {
        &self.bath
    }

    pub fn provenance(&self) -> GeneratorProvenance {
        self.provenance
    }

    /// The three distinct decay rates `(gamma-1)(1+lambda)`, `(gamma-1)`,
    /// `(gamma-1)(1-lambda)`; each is doubly degenerate. At maximal coupling
    /// the third vanishes and one mode pair stops relaxing.
    pub fn decay_rates(&self) -> [f64; 3] {
        let g = self.bath.gamma() - 1.0;
        let l = self.bath.coupling();
        [g * (1.0 + l), g, g * (1.0 - l)]
    }

    /// Invariant isotropic covariance as a plain 6x6 matrix.
    pub fn invariant_covariance(&self) -> RMat {
        RMat::identity(6, 6) * FluctuationKinematics::scale(&self.bath)
    }
}

/// Closed-form mesoscopic generator. Rejects couplings outside the
/// complete-positivity range.
pub fn generator(bath: &BathParams) -> Result<MesoGenerator> {
    if !bath.is_cp_valid() {
        return Err(Error::CompletePositivity {
            lambda: bath.coupling(),
        });
    }
    Ok(MesoGenerator {
        matrix: micro::closed_form_generator(bath),
        bath: *bath,
        provenance: GeneratorProvenance::ClosedForm,
    })
}

/// Generator derived from the microscopic Lindblad action, cross-checked
/// against the closed form entrywise.
pub fn generator_micro_derived(bath: &BathParams) -> Result<MesoGenerator> {
    if !bath.is_cp_valid() {
        return Err(Error::CompletePositivity {
            lambda: bath.coupling(),
        });
    }
    let derived = micro::derive_meso_generator(bath)?;
    let dev = crate::linalg::max_abs(&(&derived.matrix - micro::closed_form_generator(bath)));
    if dev > 1e-10 {
        return Err(Error::Consistency(format!(
            "micro-derived generator deviates from closed form by {dev:.3e}"
        )));
    }
    Ok(MesoGenerator {
        matrix: derived.matrix,
        bath: *bath,
        provenance: GeneratorProvenance::MicroDerived,
    })
}

/// Propagator `M_t = exp(t L)` and noise matrix
/// `K_t = Sigma_beta - M_t Sigma_beta M_t^T` at a fixed time.
///
/// `K_t` is symmetric and positive semidefinite for every physical
/// generator; validity is asserted by the callers (negative tests need
/// doctored bundles to remain representable).
#[derive(Debug, Clone)]
pub struct PropagatorBundle {
    t: f64,
    m: RMat,
    k: RMat,
}

impl PropagatorBundle {
    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn propagator(&self) -> &RMat {
        &self.m
    }

    pub fn noise(&self) -> &RMat {
        &self.k
    }

    /// Smallest eigenvalue of the noise matrix.
    pub fn noise_min_eigenvalue(&self) -> f64 {
        let h = HermitianMatrix::from_real(&self.k, 1e-9).expect("noise matrix is symmetric");
        min_eig_hermitian(&h)
    }
}

/// Evolve the propagator pair to time `t >= 0`.
pub fn propagate(gen: &MesoGenerator, sigma_beta: &RMat, t: f64) -> Result<PropagatorBundle> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::InvalidParameter {
            name: "t",
            value: t,
            requirement: "t >= 0",
        });
    }
    let m = expm(gen.matrix(), t)?;
    let k = sigma_beta - &m * sigma_beta * m.transpose();
    let k = (&k + &k.transpose()) * 0.5;
    Ok(PropagatorBundle { t, m, k })
}

/// A Weyl element `exp(log_prefactor) W(r)`: the image of a unitary Weyl
/// operator under the semigroup, which never grows in norm.
#[derive(Debug, Clone)]
pub struct WeylElement {
    pub r: DVector<f64>,
    pub log_prefactor: f64,
}

impl WeylElement {
    pub fn new(r: DVector<f64>) -> Result<Self> {
        if r.len() != 6 {
            return Err(Error::Dimension {
                context: "WeylElement::new",
                expected: 6,
                got: r.len(),
            });
        }
        Ok(Self {
            r,
            log_prefactor: 0.0,
        })
    }
}

/// Heisenberg action on a Weyl element: the parameter transports with the
/// transposed propagator and the prefactor picks up `-r.K_t.r / 2` with the
/// *untransported* parameter. This is the unique placement under which the
/// invariant state stays invariant,
/// `exp(-r.K_t.r/2) exp(-r_t.Sigma.r_t/2) = exp(-r.Sigma.r/2)`,
/// and under which the prefactors compose along the semigroup.
pub fn apply_heisenberg(bundle: &PropagatorBundle, w: &WeylElement) -> WeylElement {
    let r_t = bundle.m.transpose() * &w.r;
    let quad = (w.r.transpose() * &bundle.k * &w.r)[(0, 0)];
    WeylElement {
        r: r_t,
        log_prefactor: w.log_prefactor - 0.5 * quad,
    }
}

/// Dual covariance flow `Sigma(t) = Sigma_beta - M_t Sigma_beta M_t^T +
/// M_t Sigma_0 M_t^T`. The result must stay bona fide; a violation beyond
/// tolerance signals an implementation bug and is reported as an internal
/// error.
pub fn evolve_covariance(
    gen: &MesoGenerator,
    sigma_beta: &RMat,
    sigma0: &CovarianceMatrix,
    t: f64,
) -> Result<CovarianceMatrix> {
    if sigma0.dim() != 6 {
        return Err(Error::Dimension {
            context: "evolve_covariance",
            expected: 6,
            got: sigma0.dim(),
        });
    }
    let bundle = propagate(gen, sigma_beta, t)?;
    let m = &bundle.m;
    let evolved = &bundle.k + m * sigma0.matrix() * m.transpose();
    let tol = Tolerances::DEFAULT;
    let cov = CovarianceMatrix::new(evolved, SymplecticForm::standard(6)?, &tol)?;
    let (ok, margin) = cov.bona_fide(&tol);
    if !ok {
        return Err(Error::Consistency(format!(
            "evolved covariance lost bona-fidelity: margin {margin:.3e} at t = {t}"
        )));
    }
    Ok(cov)
}

/// Complete-positivity certificate: smallest eigenvalue of
/// `(Sigma_beta + i sigma / 2) - M_t (Sigma_beta + i sigma / 2) M_t^T`.
/// Nonnegative (within tolerance) for every physical propagator; the caller
/// asserts.
pub fn cp_certificate(bundle: &PropagatorBundle, sigma_beta: &RMat, form: &SymplecticForm) -> f64 {
    let n = sigma_beta.nrows();
    let mut g = CMat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = C64::new(sigma_beta[(i, j)], 0.5 * form.matrix()[(i, j)]);
        }
    }
    let mc = bundle.m.map(|x| C64::new(x, 0.0));
    let diff = &g - &mc * &g * mc.transpose();
    let herm = HermitianMatrix::new(diff, 1e-9).expect("certificate matrix is Hermitian");
    min_eig_hermitian(&herm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_bath(rng: &mut ChaCha8Rng) -> BathParams {
        BathParams::new(
            rng.gen_range(0.05..2.0),
            rng.gen_range(0.5..2.0),
            rng.gen_range(0.0..1.0),
        )
        .unwrap()
    }

    #[test]
    fn generator_spectrum_and_micro_agreement() {
        let b = BathParams::new(0.1, 1.0, 1.0).unwrap();
        let gen = generator(&b).unwrap();
        let eigs = gen.matrix().clone().complex_eigenvalues();
        let mut re: Vec<f64> = eigs.iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        let rates = gen.decay_rates();
        assert!((re[0] - rates[0]).abs() < 1e-12 && (re[1] - rates[0]).abs() < 1e-12);
        assert!((re[2] - rates[1]).abs() < 1e-12 && (re[3] - rates[1]).abs() < 1e-12);
        // undamped sector at maximal coupling
        assert!(re[4].abs() < 1e-12 && re[5].abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..6 {
            let b = random_bath(&mut rng);
            let closed = generator(&b).unwrap();
            let derived = generator_micro_derived(&b).unwrap();
            assert_eq!(derived.provenance(), GeneratorProvenance::MicroDerived);
            assert!(max_abs(&(closed.matrix() - derived.matrix())) < 1e-10);
        }

        let bad = BathParams::unchecked(0.1, 1.0, 1.3);
        assert!(matches!(
            generator(&bad),
            Err(Error::CompletePositivity { .. })
        ));
    }

    #[test]
    fn generator_expm_matches_series_oracle() {
        // brute-force series oracle at the quoted parameter point
        let b = BathParams::new(0.1, 1.0, 0.5).unwrap();
        let gen = generator(&b).unwrap();
        let fast = expm(gen.matrix(), 1.0).unwrap();
        let mut term = RMat::identity(6, 6);
        let mut series = term.clone();
        for k in 1..=60 {
            term = &term * gen.matrix() / k as f64;
            series += &term;
        }
        assert!(max_abs(&(&fast - &series)) < 1e-10);
    }

    #[test]
    fn propagate_identity_at_zero_and_decoupled_noise() {
        let b = BathParams::new(0.1, 1.0, 0.5).unwrap();
        let gen = generator(&b).unwrap();
        let sb = gen.invariant_covariance();
        let bundle = propagate(&gen, &sb, 0.0).unwrap();
        assert!(max_abs(&(bundle.propagator() - RMat::identity(6, 6))) < 1e-14);
        assert!(max_abs(bundle.noise()) < 1e-14);

        // at lambda = 0 the rotation part is orthogonal, so M_t M_t^T =
        // exp(2(gamma-1)t) and K_t = Sigma_beta (1 - exp(2(gamma-1)t))
        let b0 = BathParams::new(0.3, 1.3, 0.0).unwrap();
        let gen0 = generator(&b0).unwrap();
        let sb0 = gen0.invariant_covariance();
        let t = 0.8;
        let bundle = propagate(&gen0, &sb0, t).unwrap();
        let shrink = (2.0 * (b0.gamma() - 1.0) * t).exp();
        let expect = &sb0 * (1.0 - shrink);
        assert!(max_abs(&(bundle.noise() - &expect)) < 1e-12);
    }

    #[test]
    fn semigroup_composition_and_noise_psd() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let b = random_bath(&mut rng);
            let gen = generator(&b).unwrap();
            let sb = gen.invariant_covariance();
            let (t, s) = (rng.gen_range(0.0..5.0), rng.gen_range(0.0..5.0));
            let bt = propagate(&gen, &sb, t).unwrap();
            let bs = propagate(&gen, &sb, s).unwrap();
            let bts = propagate(&gen, &sb, t + s).unwrap();
            let m_dev = max_abs(&(bts.propagator() - bt.propagator() * bs.propagator()));
            assert!(m_dev < 1e-10, "M composition residual {m_dev:.2e}");
            let k_comp = bt.noise() + bt.propagator() * bs.noise() * bt.propagator().transpose();
            let k_dev = max_abs(&(bts.noise() - &k_comp));
            assert!(k_dev < 1e-10, "K composition residual {k_dev:.2e}");
            assert!(bt.noise_min_eigenvalue() >= -1e-10);
        }
    }

    #[test]
    fn heisenberg_action_prefactor_and_stationarity() {
        let b = BathParams::new(0.4, 1.1, 0.7).unwrap();
        let gen = generator(&b).unwrap();
        let sb = gen.invariant_covariance();

        // t = 0 leaves the element untouched
        let w = WeylElement::new(DVector::from_vec(vec![0.3, -1.0, 0.2, 0.0, 0.5, 0.7])).unwrap();
        let b0 = propagate(&gen, &sb, 0.0).unwrap();
        let w0 = apply_heisenberg(&b0, &w);
        assert!((w0.log_prefactor - w.log_prefactor).abs() < 1e-14);
        assert!((&w0.r - &w.r).amax() < 1e-14);

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..20 {
            let b = random_bath(&mut rng);
            let gen = generator(&b).unwrap();
            let sb = gen.invariant_covariance();
            let t = rng.gen_range(0.0..6.0);
            let bundle = propagate(&gen, &sb, t).unwrap();
            let r = DVector::from_fn(6, |_, _| rng.gen_range(-1.5..1.5));
            let w = WeylElement::new(r.clone()).unwrap();
            let out = apply_heisenberg(&bundle, &w);
            // contraction: prefactor in (0, 1]
            assert!(out.log_prefactor <= 1e-12);
            // invariant-state expectation is time invariant:
            // log pref - r_t.Sigma.r_t/2 == -r.Sigma.r/2
            let lhs = out.log_prefactor - 0.5 * (out.r.transpose() * &sb * &out.r)[(0, 0)];
            let rhs = -0.5 * (r.transpose() * &sb * &r)[(0, 0)];
            assert!(
                (lhs - rhs).abs() < 1e-10,
                "stationarity violated by {:.2e}",
                lhs - rhs
            );
            // unitality: r = 0 stays the identity element
            let id = WeylElement::new(DVector::zeros(6)).unwrap();
            let out = apply_heisenberg(&bundle, &id);
            assert_eq!(out.log_prefactor, 0.0);
            assert_eq!(out.r.amax(), 0.0);
        }
    }

    #[test]
    fn heisenberg_decoupled_closed_form() {
        // lambda = 0: M_t = exp((gamma-1)t) R(t) with R orthogonal, so the
        // transported length is exp((gamma-1)t) and the prefactor is
        // exp(-Sigma_11 (1 - exp(2(gamma-1)t))/2) for a unit parameter.
        let b = BathParams::new(0.2, 0.9, 0.0).unwrap();
        let gen = generator(&b).unwrap();
        let sb = gen.invariant_covariance();
        let t = 1.4;
        let bundle = propagate(&gen, &sb, t).unwrap();
        let mut e1 = DVector::zeros(6);
        e1[0] = 1.0;
        let out = apply_heisenberg(&bundle, &WeylElement::new(e1).unwrap());
        let shrink = ((b.gamma() - 1.0) * t).exp();
        assert!((out.r.norm() - shrink).abs() < 1e-12);
        let s = FluctuationKinematics::scale(&b);
        let expect = -0.5 * s * (1.0 - shrink * shrink);
        assert!((out.log_prefactor - expect).abs() < 1e-12);
    }

    #[test]
    fn covariance_flow_stationary_and_relaxing() {
        let tol = Tolerances::DEFAULT;
        let b = BathParams::new(0.1, 1.0, 0.5).unwrap();
        let gen = generator(&b).unwrap();
        let sb = gen.invariant_covariance();
        let form = SymplecticForm::standard(6).unwrap();
        let sb_cov = CovarianceMatrix::new(sb.clone(), form.clone(), &tol).unwrap();

        // invariant state stays put
        for t in [0.1, 1.0, 10.0] {
            let out = evolve_covariance(&gen, &sb, &sb_cov, t).unwrap();
            assert!(max_abs(&(out.matrix() - &sb)) < 1e-9);
        }

        // t = 0 returns the initial covariance
        let squeezed = CovarianceMatrix::new(
            RMat::from_diagonal(&DVector::from_vec(vec![
                3.0 * sb[(0, 0)],
                sb[(0, 0)] / 3.0,
                3.0 * sb[(0, 0)],
                sb[(0, 0)] / 3.0,
                sb[(0, 0)],
                sb[(0, 0)],
            ])),
            form,
            &tol,
        )
        .unwrap();
        let out = evolve_covariance(&gen, &sb, &squeezed, 0.0).unwrap();
        assert!(max_abs(&(out.matrix() - squeezed.matrix())) < 1e-13);

        // all modes damped below maximal coupling: late-time covariance
        // returns to the invariant one
        let out = evolve_covariance(&gen, &sb, &squeezed, 60.0).unwrap();
        assert!(max_abs(&(out.matrix() - &sb)) < 1e-9);
    }

    #[test]
    fn cp_certificate_margins() {
        let form = SymplecticForm::standard(6).unwrap();
        let b = BathParams::new(0.1, 1.0, 0.9).unwrap();
        let gen = generator(&b).unwrap();
        let sb = gen.invariant_covariance();

        let b0 = propagate(&gen, &sb, 0.0).unwrap();
        assert!(cp_certificate(&b0, &sb, &form).abs() < 1e-12);

        for lam in [0.0, 0.9, 1.0] {
            let b = BathParams::new(0.1, 1.0, lam).unwrap();
            let gen = generator(&b).unwrap();
            let sb = gen.invariant_covariance();
            for t in [0.1, 0.5, 1.0, 5.0, 20.0] {
                let bundle = propagate(&gen, &sb, t).unwrap();
                let margin = cp_certificate(&bundle, &sb, &form);
                assert!(margin >= -1e-10, "margin {margin:.2e} at t={t} lambda={lam}");
            }
        }

        // negative test: transporting with the negated adjoint generator
        // violates complete positivity
        let neg = MesoGenerator {
            matrix: -gen.matrix().transpose(),
            bath: *gen.bath(),
            provenance: GeneratorProvenance::ClosedForm,
        };
        let bundle = propagate(&neg, &sb, 1.0).unwrap();
        assert!(cp_certificate(&bundle, &sb, &form) < -1e-3);
    }
}
