//! Sudden birth and sudden death of the bath-induced entanglement: the
//! negativity switches on only after a finite delay and, below maximal
//! coupling, switches off again at a finite later time.
//!
//! Run with `cargo run --example sudden_birth_death`.

use mesofluct::entanglement::{entanglement_curve, sudden_times};
use mesofluct::BathParams;

fn main() {
    let (temperature, omega, k) = (0.1, 1.0, 1.0);
    let grid: Vec<f64> = (0..=2400).map(|i| i as f64 * 0.05).collect();

    println!("T = {temperature}, k = {k}");
    println!("{:>7} {:>10} {:>10}", "lambda", "birth", "death");
    for lambda in [0.3, 0.6, 0.9, 1.0] {
        let bath = BathParams::new(temperature, omega, lambda).expect("valid bath");
        let curve = entanglement_curve(&bath, k, &grid).expect("curve");
        let times = sudden_times(&curve).expect("resolvable grid");
        let fmt = |v: Option<f64>| match v {
            Some(t) => format!("{t:.3}"),
            None => "-".to_string(),
        };
        println!(
            "{lambda:>7.2} {:>10} {:>10}",
            fmt(times.birth),
            fmt(times.death)
        );
    }
    println!();
    println!("the death time grows with the coupling and disappears entirely");
    println!("at lambda = 1, where one collective mode pair never relaxes");
}
