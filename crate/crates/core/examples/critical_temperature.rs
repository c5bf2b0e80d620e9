//! The critical temperature above which no asymptotic entanglement survives
//! at maximal coupling, computed two independent ways: bisection on the
//! late-time negativity of the full pipeline, and the closed-form root of
//! the asymptotic separability condition.
//!
//! Run with `cargo run --example critical_temperature`.

use mesofluct::entanglement::{
    asymptotic_log_negativity, critical_temperature_closed_form, critical_temperature_with_margin,
};
use mesofluct::BathParams;

fn main() {
    let (k, omega) = (1.0, 1.0);
    let (bisected, margin) = critical_temperature_with_margin(k, omega).expect("bracketed");
    let closed = critical_temperature_closed_form(k, omega).expect("root");
    println!("squeeze k = {k}, omega = {omega}");
    println!("  bisection route:   T_c = {bisected:.4} (bracket half-width {margin:.1e})");
    println!("  closed-form route: T_c = {closed:.4}");
    println!("  disagreement:      {:.2e}", (bisected - closed).abs());
    println!();

    println!("asymptotic negativity across the boundary:");
    for temp in [0.5, 0.7, closed - 0.02, closed + 0.02, 0.9, 1.2] {
        let bath = BathParams::new(temp, omega, 1.0).expect("valid bath");
        let e = asymptotic_log_negativity(&bath, k).expect("plateau");
        println!("  T = {temp:>6.4}: E_inf = {e:.6}");
    }
}
