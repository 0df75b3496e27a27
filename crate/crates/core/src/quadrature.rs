//! Cached Gaussian quadrature rules.

use std::cell::RefCell;
use std::collections::HashMap;
use std::num::NonZeroUsize;
use std::rc::Rc;

use gauss_quad::{GaussHermite, GaussLegendre};

/// Nodes and weights with `Σ w f(x) ≈ E f(ξ)`, `ξ ~ N(0, 1)`.
pub type Rule = Rc<Vec<(f64, f64)>>;

thread_local! {
    static HERMITE: RefCell<HashMap<usize, Rule>> = RefCell::new(HashMap::new());
    static LEGENDRE: RefCell<HashMap<usize, Rule>> = RefCell::new(HashMap::new());
}

fn order(n: usize) -> NonZeroUsize {
    NonZeroUsize::new(n.max(1)).expect("order is at least one")
}

/// Gauss–Hermite rule for the standard normal measure.
pub fn normal_rule(n: usize) -> Rule {
    HERMITE.with(|c| {
        c.borrow_mut()
            .entry(n)
            .or_insert_with(|| {
                let gh = GaussHermite::new(order(n));
                let norm = std::f64::consts::PI.sqrt();
                let sqrt2 = std::f64::consts::SQRT_2;
                Rc::new(gh.iter().map(|(x, w)| (x * sqrt2, w / norm)).collect())
            })
            .clone()
    })
}

/// Gauss–Legendre rule on `[-1, 1]`.
pub fn legendre_rule(n: usize) -> Rule {
    LEGENDRE.with(|c| {
        c.borrow_mut()
            .entry(n)
            .or_insert_with(|| Rc::new(GaussLegendre::new(order(n)).iter().map(|(x, w)| (*x, *w)).collect()))
            .clone()
    })
}

/// `E f(ξ)` for `ξ ~ N(0, 1)`.
pub fn expect_normal(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    normal_rule(n).iter().map(|&(x, w)| w * f(x)).sum()
}

/// `∫_a^b f` with an `n`-point Gauss–Legendre rule.
pub fn integrate(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * legendre_rule(n).iter().map(|&(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// `∫_a^b f` split into `pieces` equal panels.
pub fn integrate_panels(a: f64, b: f64, pieces: usize, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / pieces as f64;
    (0..pieces).map(|i| integrate(a + i as f64 * h, a + (i + 1) as f64 * h, n, &f)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_moments() {
        assert!((expect_normal(41, |_| 1.0) - 1.0).abs() < 1e-13);
        assert!((expect_normal(41, |x| x * x) - 1.0).abs() < 1e-12);
        assert!((expect_normal(41, |x| x.powi(4)) - 3.0).abs() < 1e-11);
    }

    #[test]
    fn legendre_polynomial_exactness() {
        let v = integrate(0.0, 2.0, 5, |x| x.powi(7));
        assert!((v - 32.0).abs() < 1e-11);
        let p = integrate_panels(0.0, std::f64::consts::PI, 8, 20, f64::sin);
        assert!((p - 2.0).abs() < 1e-13);
    }
}
