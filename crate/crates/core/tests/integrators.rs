mod common;

use common::{case_one, evolve_from_equilibrium, strong_order};
use runtumble::sde::Scheme;
use runtumble::statistics::{arcsine_cdf, ks_distance};

#[test]
fn milstein_has_strong_order_one() {
    let study = strong_order(Scheme::Milstein, 1000, 11);
    assert!(
        (0.8..=1.2).contains(&study.order),
        "order {} errors {:?}",
        study.order,
        study.errors
    );
}

#[test]
fn euler_maruyama_has_strong_order_one_half() {
    let study = strong_order(Scheme::EulerMaruyama, 1000, 11);
    assert!(
        (0.35..=0.65).contains(&study.order),
        "order {} errors {:?}",
        study.order,
        study.errors
    );
}

#[test]
fn milstein_beats_euler_at_every_step() {
    let m = strong_order(Scheme::Milstein, 300, 5);
    let e = strong_order(Scheme::EulerMaruyama, 300, 5);
    for (a, b) in m.errors.iter().zip(&e.errors) {
        assert!(a < b, "{:?} vs {:?}", m.errors, e.errors);
    }
}

#[test]
fn equilibrium_is_preserved_over_a_short_horizon() {
    let f = case_one();
    let samples = evolve_from_equilibrium(&f, 4000, 2.0 * f.adaptation_time, 0.1, 9);
    let d = ks_distance(&samples, arcsine_cdf);
    assert!(d < 0.03, "KS distance {d}");
}
