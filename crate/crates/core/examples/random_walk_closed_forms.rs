//! Closed-form spectrum of the absorbed walk against the characteristic
//! polynomial recursion and a dense symmetric eigensolver.
//!
//! Run with `cargo run --example random_walk_closed_forms`.

use quasistat::walk::{charpoly_roots, closed_form_spectrum, numeric_spectrum, walk_matrix};

fn main() {
    for (k, p) in [(5, 0.3), (12, 0.5), (30, 0.85)] {
        let sys = closed_form_spectrum(k, p);
        let roots = charpoly_roots(k, p);
        let numeric = numeric_spectrum(k, p);
        let worst = |other: &[f64]| {
            sys.eigenvalues
                .iter()
                .zip(other)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        println!(
            "K = {k:>2}, p = {p}: λ_1 = {:.12}, charpoly gap {:.1e}, eigensolver gap {:.1e}",
            sys.eigenvalues[0],
            worst(&roots),
            worst(&numeric)
        );
        let q = walk_matrix(k, p);
        let scale = sys.xi.iter().cloned().fold(0.0, f64::max);
        let resid = (0..k)
            .map(|i| ((0..k).map(|j| q[(i, j)] * sys.xi[j]).sum::<f64>() - sys.eigenvalues[0] * sys.xi[i]).abs())
            .fold(0.0, f64::max)
            / scale;
        println!("  ν = {:?}", sys.nu.iter().take(4).map(|v| format!("{v:.5}")).collect::<Vec<_>>());
        println!("  |Q ξ − λ_1 ξ|_∞ / |ξ|_∞ = {resid:.1e}");
    }
}
