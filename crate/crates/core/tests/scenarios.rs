use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use reldev::analytic::Pareto;
use reldev::mc::{estimate_moment, Scenario};

fn within_three_se(shape: f64, alpha: f64, seed: u64) -> (bool, f64) {
    let p = Pareto::new(shape, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e = estimate_moment(&p, alpha, 1_000_000, &mut rng).unwrap();
    let z = (e.mean - e.analytic) / e.std_error;
    (z.abs() <= 3.0, z)
}

// L^alpha has finite variance here (2 alpha < shape), so the standard error
// is a valid scale for the sample mean.
#[test]
fn moment_estimate_within_three_standard_errors() {
    for (shape, alpha) in [(5.0, 2.0), (2.5, 1.0), (4.5, 2.0)] {
        let (ok, z) = within_three_se(shape, alpha, 0);
        assert!(ok, "shape {shape} alpha {alpha}: z = {z}");
    }
}

// Shape 2.5 with alpha 2 has E[L^4] infinite: the sample standard error is
// not a consistent scale and about a quarter of seeds land outside 3 SE
// (seed 0 gives z = -3.16). Kept runnable for inspection.
#[test]
#[ignore = "infinite-variance case; 3 SE is not a valid tolerance"]
fn heavy_second_moment_within_three_standard_errors() {
    let (ok, z) = within_three_se(2.5, 2.0, 0);
    assert!(ok, "z = {z}");
}

#[test]
fn scenario_moments_match_closed_form() {
    let s = Scenario::pareto(2.5, 1.0, vec![1.0, 2.0]).unwrap();
    let m = s.true_moments(2.0).unwrap();
    assert!((m[0] - 5.0).abs() < 1e-12);
    assert!((m[1] - 20.0).abs() < 1e-12);
    assert!(s.true_moments(2.5).is_err());
}
