//! The evolved, reduced two-mode covariance of the squeezed thermal state
//! has a closed form (a common rotation conjugating damped cosh blocks);
//! this example measures its agreement with the full 6x6 pipeline.
//!
//! Run with `cargo run --example closed_form_check`.

use mesofluct::gaussian::{closed_form_reduced, evolved_reduced};
use mesofluct::linalg::max_abs;
use mesofluct::meso;
use mesofluct::BathParams;

fn main() {
    let mut worst = 0.0f64;
    let mut at = (0.0, 0.0, 0.0, 0.0);
    println!(
        "{:>6} {:>6} {:>5} {:>6} {:>12}",
        "T", "lambda", "k", "t", "deviation"
    );
    for &temp in &[0.05, 0.1, 0.5] {
        for &lambda in &[0.0, 0.5, 1.0] {
            for &k in &[0.5, 1.0] {
                for &t in &[0.0, 0.5, 2.0, 8.0] {
                    let bath = BathParams::new(temp, 1.0, lambda).expect("valid bath");
                    let gen = meso::generator(&bath).expect("valid coupling");
                    let pipeline = evolved_reduced(&gen, &bath, k, t).expect("bona fide");
                    let closed = closed_form_reduced(&bath, k, t).expect("closed form");
                    let dev = max_abs(&(pipeline.matrix() - closed.matrix()));
                    if dev > worst {
                        worst = dev;
                        at = (temp, lambda, k, t);
                    }
                    if t == 2.0 && k == 1.0 {
                        println!("{temp:>6.2} {lambda:>6.2} {k:>5.2} {t:>6.2} {dev:>12.3e}");
                    }
                }
            }
        }
    }
    println!();
    println!(
        "worst deviation over the grid: {worst:.3e} at (T, lambda, k, t) = {at:?}"
    );
}
