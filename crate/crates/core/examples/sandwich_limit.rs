//! The dissipative sandwich identity: microscopically evolved collective
//! Weyl operators, sandwiched between two more, converge to the quasi-free
//! prediction of the 6x6 mesoscopic semigroup.
//!
//! Run with `cargo run --release --example sandwich_limit`.

use mesofluct::fock::{dissipative_sandwich, FockGrid};
use mesofluct::BathParams;

fn main() {
    let bath = BathParams::new(0.1, 1.0, 0.9).expect("valid bath");
    let grid = FockGrid::new(8).expect("valid truncation");
    let t = 0.5;

    let mut r1 = [0.0; 6];
    r1[0] = 1.0;
    let mut r = [0.0; 6];
    r[2] = 1.0;
    let mut r2 = [0.0; 6];
    r2[1] = 1.0;

    println!("generic sandwich at t = {t}:");
    println!("{:>5} {:>24} {:>24} {:>12}", "N", "lhs", "rhs", "|error|");
    for n in [50, 200, 800] {
        let out = dissipative_sandwich(&r1, &r, &r2, t, n, &grid, &bath, 1e-3).expect("sandwich");
        println!(
            "{n:>5} {:>11.6}{:+.6}i {:>11.6}{:+.6}i {:>12.3e}",
            out.lhs.re, out.lhs.im, out.rhs.re, out.rhs.im, out.error
        );
    }
    println!();

    let zero = [0.0; 6];
    let out = dissipative_sandwich(&zero, &r, &zero, t, 200, &grid, &bath, 1e-3).expect("sandwich");
    println!("stationary case (no outer factors):");
    println!(
        "  prediction {:.10}{:+.1e}i equals the invariant characteristic function",
        out.rhs.re, out.rhs.im
    );
}
