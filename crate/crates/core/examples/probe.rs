//! Scratch probe: measures the eigenvalue-function jump heights at the two
//! dominant resonance phases and the counting-function error at desk boxes.

use quasidiag_core::model::lattice::LatticeBox;
use quasidiag_core::model::potential::PotentialSpec;
use quasidiag_core::oracle::ids;
use quasidiag_core::scheme::state::{run_scheme, SchemeParams};
use quasidiag_core::Frequency;

fn main() {
    let params = SchemeParams::new(1e-3, 0.5, 0.05, 1e4, 1.0, 2.0, 1.0, 5).unwrap();
    let spec = PotentialSpec::sawtooth();
    let freq = Frequency::golden(2.0, 1.0);
    let ambient = LatticeBox::interval(-20, 20).unwrap();
    let omega = freq.omega()[0];

    // E(x) jumps where a neighbour's potential value wraps: x = {-omega}
    // (right neighbour) and x = {omega} (left neighbour).
    for x_jump in [1.0 - omega, omega] {
        let h = 1e-9;
        let left = run_scheme(&params, &spec, &freq, x_jump - h, &ambient)
            .unwrap()
            .e;
        let right = run_scheme(&params, &spec, &freq, x_jump + h, &ambient)
            .unwrap()
            .e;
        println!(
            "jump at x={x_jump:.12}: E_left={left:.12e} E_right={right:.12e} dE={:.6e}",
            right - left
        );
    }
    println!("predicted 4.236*eps^2 = {:.6e}", 4.236 * 1e-6);

    // Counting-function inversion error on a 512-phase eigenvalue table.
    let grid: Vec<f64> = (0..512).map(|k| (k as f64 + 0.5) / 512.0).collect();
    let mut e_of_x = Vec::with_capacity(grid.len());
    for &x in &grid {
        e_of_x.push(run_scheme(&params, &spec, &freq, x, &ambient).unwrap().e);
    }
    let tables = ids(&spec, 1e-3, &freq, &[400, 800], &e_of_x).unwrap();
    for t in &tables {
        let sup = t
            .rows
            .iter()
            .zip(&grid)
            .map(|(&(_, n), &x)| (n - x).abs())
            .fold(0.0_f64, f64::max);
        println!(
            "box {}: sup |N(E(x)) - x| = {:.6e}  (5/L = {:.6e})",
            t.box_len,
            sup,
            5.0 / t.box_len as f64
        );
    }
}
