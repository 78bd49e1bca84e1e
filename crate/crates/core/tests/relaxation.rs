//! Soundness, monotonicity and the oracle sandwich for the separable-purity
//! relaxations.

mod common;

use tesh_core::purity_bound::{assemble_relaxation, oracle_max_purity, upper_bound};
use tesh_core::separability::theta;
use tesh_core::state::Spectrum;

fn ub(m: usize, level: usize) -> f64 {
    upper_bound(m, level).unwrap().value.unwrap()
}

#[test]
fn levels_are_monotone_and_dominate_the_oracle() {
    for (m, max_level) in [(2, 3), (3, 2), (4, 1)] {
        let oracle = oracle_max_purity(m, 200, 1).unwrap().purity;
        let mut previous = f64::INFINITY;
        for level in 1..=max_level {
            let v = ub(m, level);
            assert!(v <= previous + 1e-7, "m = {m}, level {level}: {v} > {previous}");
            assert!(oracle <= v + 1e-7, "m = {m}, level {level}: oracle {oracle} > {v}");
            previous = v;
        }
    }
}

#[test]
fn random_separable_spectra_respect_level_one() {
    for m in [2, 3] {
        let bound = ub(m, 1);
        let d = 1 << m;
        let mut rng = common::rng(m as u64);
        let mut accepted = 0;
        let mut draws = 0;
        while accepted < 1000 {
            draws += 1;
            assert!(draws < 10_000_000, "rejection sampling stalled");
            // Mixing toward uniform keeps the acceptance rate usable at D = 8.
            let t: f64 = rand::RngExt::random(&mut rng);
            let raw = common::sorted_dirichlet(d, &mut rng);
            let lam: Vec<f64> = raw.iter().map(|x| t * x + (1.0 - t) / d as f64).collect();
            let lam = Spectrum::new(lam).unwrap();
            if theta(&lam).unwrap() > 0.0 {
                continue;
            }
            accepted += 1;
            assert!(lam.purity() <= bound + 1e-7, "m = {m}: {} > {bound}", lam.purity());
        }
    }
}

#[test]
fn oracle_moments_are_feasible() {
    for (m, levels) in [(2, 1..=3), (3, 1..=2), (4, 1..=2)] {
        let best = oracle_max_purity(m, 50, 3).unwrap();
        for level in levels {
            let relax = assemble_relaxation(m, level).unwrap();
            let y = relax.moment_vector(best.spectrum.values()).unwrap();
            let min_eig = relax.min_constraint_eigenvalue(&y);
            assert!(min_eig >= -1e-9, "m = {m}, level {level}: {min_eig}");
            assert!((relax.objective_at(&y) - best.purity).abs() <= 1e-9);
        }
    }
}
