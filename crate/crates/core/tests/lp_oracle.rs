#[path = "support/chain_vertices.rs"]
mod chain_vertices;

use chain_vertices::chain_optimum_by_vertices;
use polyreg::density::GriddedDensity;
use polyreg::functionals::{kr_distance, sigma_lp, sigma_lp_simplex, sigma_weights};
use polyreg::lp::ChainLp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_density(rng: &mut ChaCha8Rng, cells: usize) -> GriddedDensity {
    let step = rng.random_range(0.05..0.5);
    let raw: Vec<f64> = (0..cells).map(|_| rng.random_range(0.0..1.0)).collect();
    let mass: f64 = raw.iter().sum::<f64>() * step;
    GriddedDensity::new(rng.random_range(-2.0..0.0), step, raw.iter().map(|v| v / mass).collect()).unwrap()
}

#[test]
fn chain_solver_matches_vertex_walk() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..300 {
        let k = rng.random_range(1..=10);
        let w: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bound = rng.random_range(0.0..1.5);
        let step = rng.random_range(0.05..1.0);
        let lp = ChainLp::new(w.clone(), bound, step).unwrap();
        let exact = chain_optimum_by_vertices(&w, bound, step);
        let dp = lp.solve().value;
        assert!((dp - exact).abs() < 1e-9, "case {case}: dp {dp} vertices {exact}");
    }
}

#[test]
fn sigma_matches_vertex_walk_up_to_twelve_cells() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for cells in 1..=12 {
        let reps = if cells >= 11 { 2 } else { 6 };
        for _ in 0..reps {
            let rho = random_density(&mut rng, cells);
            let eps = rho.step * rng.random_range(0.3..(2.0 * cells as f64));
            let exact = chain_optimum_by_vertices(&sigma_weights(&rho), eps, rho.step).max(0.0);
            let got = sigma_lp(&rho, eps).unwrap().value;
            let sx = sigma_lp_simplex(&rho, eps).unwrap().value;
            assert!((got - exact).abs() < 1e-9, "G={cells}: {got} vs {exact}");
            assert!((sx - exact).abs() < 1e-9, "G={cells}: simplex {sx} vs {exact}");
        }
    }
}

#[test]
fn kr_matches_vertex_walk() {
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    for cells in 2..=12 {
        let x = random_density(&mut rng, cells);
        let raw: Vec<f64> = (0..cells).map(|_| rng.random_range(0.0..1.0)).collect();
        let mass: f64 = raw.iter().sum::<f64>() * x.step;
        let y = GriddedDensity::new(x.lo, x.step, raw.iter().map(|v| v / mass).collect()).unwrap();
        let w: Vec<f64> = x.values.iter().zip(&y.values).map(|(a, b)| x.step * (a - b)).collect();
        let exact = chain_optimum_by_vertices(&w, 1.0, x.step).max(0.0);
        let got = kr_distance(&x, &y).unwrap();
        assert!((got - exact).abs() < 1e-9, "G={cells}: {got} vs {exact}");
    }
}
