//! Mesoscopic fluctuation dynamics for two chains of dissipative oscillators.
//!
//! Two non-interacting chains of harmonic oscillators share a common thermal
//! bath. At the level of collective fluctuation observables (scaling as
//! `1/sqrt(N)` with the chain length) the microscopic Kossakowski-Lindblad
//! dynamics induces a quasi-free semigroup on a three-mode bosonic algebra:
//! Gaussian states stay Gaussian and the full evolution reduces to an affine
//! flow of a 6x6 covariance matrix. The purely mixing action of the bath can
//! entangle the two chain modes; this crate computes that entanglement
//! (logarithmic negativity), its sudden birth and death, the asymptotic value
//! at maximal statistical coupling, and the critical temperature above which
//! no asymptotic entanglement survives.
//!
//! Crate layout:
//!
//! * [`linalg`] - small dense matrix kernel (matrix exponential, Hermitian
//!   eigenvalues, symplectic forms, covariance validity, fixed-step ODE).
//! * [`micro`] - single-site algebra: thermal covariance, the six-operator
//!   fluctuation basis, ordered Wick moments, the Kossakowski matrix and the
//!   symbolic Lindblad action on quadratics, from which the 6x6 mesoscopic
//!   generator is derived numerically.
//! * [`meso`] - the quasi-free semigroup: generator, propagator and noise
//!   matrices, Heisenberg action on Weyl elements, covariance evolution,
//!   complete-positivity certificates.
//! * [`gaussian`] - mesoscopic Gaussian states: invariant state, two-mode
//!   squeezing, reduction to the chain pair, closed-form evolved covariance.
//! * [`entanglement`] - two-mode symplectic invariants, separability score,
//!   logarithmic negativity, entanglement curves, sudden birth/death times,
//!   asymptotics and the critical-temperature solver.
//! * [`fock`] - brute-force truncated-Fock oracle for the finite-`N` limits
//!   behind the mesoscopic construction (quantum central limit, emergent Weyl
//!   relations, dissipative sandwich identity).
//! * [`scan`] - parameter-sweep front end shared by the `mesofluct` binary:
//!   curve emission (CSV/JSON), phase-boundary scans, verification suites.
//!
//! Natural units `hbar = k_B = 1` throughout.
//!
//! # Quick start
//!
//! Entanglement between the chains for a squeezed thermal initial state at
//! maximal statistical coupling:
//!
//! ```
//! use mesofluct::entanglement::{entanglement_curve, sudden_times};
//! use mesofluct::BathParams;
//!
//! let bath = BathParams::new(0.1, 1.0, 1.0)?; // temperature, frequency, coupling
//! let grid: Vec<f64> = (0..=160).map(|i| i as f64 * 0.05).collect();
//! let curve = entanglement_curve(&bath, 1.0, &grid)?;
//!
//! // separable for a finite while, entangled forever after
//! let times = sudden_times(&curve)?;
//! assert!(times.birth.unwrap() > 2.0);
//! assert!(times.death.is_none());
//! assert!(curve.samples.last().unwrap().report.e > 0.19);
//! # Ok::<(), mesofluct::Error>(())
//! ```

pub mod entanglement;
pub mod error;
pub mod fock;
pub mod gaussian;
pub mod linalg;
pub mod meso;
pub mod micro;
pub mod scan;

pub use error::{Error, Result};
pub use micro::BathParams;
