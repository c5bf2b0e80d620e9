//! Emergent Weyl relations: products of collective fluctuation exponentials
//! recombine, up to a symplectic phase, into a single exponential as the
//! chain length grows.
//!
//! Run with `cargo run --release --example weyl_product`.

use mesofluct::fock::{weyl_product_residual, FockGrid};
use mesofluct::BathParams;

fn main() {
    let bath = BathParams::new(0.1, 1.0, 0.0).expect("valid bath");
    let grid = FockGrid::new(24).expect("valid truncation");

    let mut r1 = [0.0; 6];
    r1[0] = 1.0; // position-like direction of the first collective mode
    let mut r2 = [0.0; 6];
    r2[1] = 1.0; // its canonical partner: maximal symplectic phase

    println!("canonically conjugate pair:");
    println!("{:>8} {:>14}", "N", "residual");
    for n in [100, 1_000, 10_000, 100_000] {
        let res = weyl_product_residual(&r1, &r2, n, &grid, &bath).expect("truncation");
        println!("{n:>8} {res:>14.3e}");
    }
    println!();

    println!("parallel parameters commute, so the relation is exact:");
    let res = weyl_product_residual(&r1, &r1, 1_000, &grid, &bath).expect("truncation");
    println!("{:>8} {res:>14.3e}", 1_000);
}
