//! Quantum central limit on the truncated Fock space: finite-size collective
//! Weyl expectations converge to the Gaussian characteristic function of the
//! emergent three-mode algebra.
//!
//! Run with `cargo run --release --example clt_convergence`.

use mesofluct::fock::{clt_convergence, weyl_expectation_n, FockGrid};
use mesofluct::BathParams;

fn main() {
    let bath = BathParams::new(0.1, 1.0, 0.0).expect("valid bath");
    let grid = FockGrid::new(24).expect("valid truncation");
    let mut r = [0.0; 6];
    r[0] = 1.0;

    let report = clt_convergence(&r, &[100, 1_000, 10_000, 100_000], &grid, &bath)
        .expect("truncation is adequate");
    println!("Gaussian limit: {:.10}", report.gaussian_limit);
    println!("{:>8} {:>14}", "N", "|error|");
    for (n, err) in &report.points {
        println!("{n:>8} {err:>14.3e}");
    }
    println!("log-log slope: {:.3}", report.slope);
    println!();
    println!("the thermal state is symmetric under a common quarter-period");
    println!("phase rotation, so odd moments vanish and the error decays as");
    println!("1/N - a full power faster than the generic remainder bound");
    println!();

    let w = weyl_expectation_n(&r, 10_000, &grid, &bath).expect("truncation is adequate");
    println!(
        "N = 10^4 diagnostics: tail mass {:.1e}, truncation drift {:.1e}, converged: {}",
        w.tail_mass, w.refinement_drift, w.converged
    );
}
