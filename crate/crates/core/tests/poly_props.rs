use polyreg::moments::{c2_constant, variance, variance_lower_bound_1d, variance_via_hermite, hermite_expand};
use polyreg::{random_in_class, ClassParams, CoefficientLaw, Polynomial};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn class() -> impl Strategy<Value = ClassParams> {
    (1usize..=4, 1usize..=3, 0usize..=3).prop_map(|(n, m, extra)| ClassParams { n, m, d: (m + extra).min(6) })
}

fn poly() -> impl Strategy<Value = Polynomial> {
    (class(), any::<u64>(), 0.2f64..3.0).prop_map(|(c, seed, spread)| {
        let law = CoefficientLaw {
            spread,
            max_terms: 6,
            normalize: false,
        };
        random_in_class(&c, seed, &law).unwrap()
    })
}

fn points(n: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
}

fn canonical(p: &Polynomial) -> bool {
    p.terms().all(|(_, c)| c != 0.0)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn operations_stay_canonical(f in poly(), g in poly(), alpha in -3.0f64..3.0) {
        prop_assume!(f.dim() == g.dim() && alpha != 0.0);
        prop_assert!(canonical(&f.multiply(&g).unwrap()));
        prop_assert!(canonical(&f.scale(alpha).unwrap()));
        prop_assert!(canonical(&f.add(&g.scale(-1.0).unwrap()).unwrap()));
        prop_assert!(f.add(&f.scale(-1.0).unwrap()).unwrap().is_zero());
        for i in 0..f.dim() {
            prop_assert!(canonical(&f.partial_derivative(i).unwrap()));
            if f.dim() >= 2 {
                for part in f.restrict_var(i).unwrap() {
                    prop_assert!(canonical(&part));
                }
            }
        }
    }

    #[test]
    fn restriction_reconstructs(f in poly(), seed in any::<u64>()) {
        prop_assume!(f.dim() >= 2);
        for i in 0..f.dim() {
            let parts = f.restrict_var(i).unwrap();
            for x in points(f.dim(), 100, seed) {
                let rest: Vec<f64> = x.iter().enumerate().filter(|(k, _)| *k != i).map(|(_, v)| *v).collect();
                let sum: f64 = parts
                    .iter()
                    .enumerate()
                    .map(|(j, p)| p.evaluate(&rest).unwrap() * x[i].powi(j as i32))
                    .sum();
                let want = f.evaluate(&x).unwrap();
                prop_assert!(close(sum, want, 1e-12), "{sum} vs {want}");
            }
        }
    }

    #[test]
    fn leading_coefficient_survives_restriction(f in poly()) {
        prop_assume!(f.dim() >= 2);
        let (a, witness) = f.leading_magnitude().unwrap();
        for (i, &power) in witness.exponents().iter().enumerate() {
            if power >= 1 {
                let part = &f.restrict_var(i).unwrap()[power as usize];
                prop_assert_eq!(part.leading_magnitude().unwrap().0, a);
            }
        }
    }

    #[test]
    fn scaling_keeps_degree(f in poly(), alpha in prop_oneof![-5.0f64..-0.01, 0.01f64..5.0]) {
        let g = f.scale(alpha).unwrap();
        prop_assert_eq!(g.degree().unwrap(), f.degree().unwrap());
        let (a, _) = f.leading_magnitude().unwrap();
        let (b, _) = g.leading_magnitude().unwrap();
        prop_assert!(close(b, alpha.abs() * a, 1e-14));
    }

    #[test]
    fn product_evaluates_as_product(f in poly(), g in poly(), seed in any::<u64>()) {
        prop_assume!(f.dim() == g.dim());
        let h = f.multiply(&g).unwrap();
        for x in points(f.dim(), 20, seed) {
            let want = f.evaluate(&x).unwrap() * g.evaluate(&x).unwrap();
            let got = h.evaluate(&x).unwrap();
            prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()), "{got} vs {want}");
        }
    }

    #[test]
    fn variance_two_routes(f in poly()) {
        let a = variance(&f);
        let b = variance_via_hermite(&f);
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a), "{a} vs {b}");
        prop_assert!(a > 0.0);
    }

    #[test]
    fn hermite_expansion_evaluates_to_f(f in poly(), seed in any::<u64>()) {
        let h = hermite_expand(&f);
        for x in points(f.dim(), 50, seed) {
            let want = f.evaluate(&x).unwrap();
            let got = h.evaluate(&x).unwrap();
            prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "{got} vs {want}");
        }
    }

    #[test]
    fn univariate_lower_bound_chain(m in 1usize..=4, coefs in prop::collection::vec(-2.0f64..2.0, 5)) {
        let terms: Vec<(Vec<u32>, f64)> = (0..=m).map(|j| (vec![j as u32], coefs[j])).collect();
        let g = Polynomial::new(1, terms).unwrap();
        let top = (1..=m).map(|j| coefs[j].abs()).fold(0.0, f64::max);
        prop_assume!(top > 1e-3);
        let v = variance(&g);
        let lb = variance_lower_bound_1d(&g, m).unwrap();
        prop_assert!(v >= lb - 1e-12 * (1.0 + v));
        prop_assert!(lb >= c2_constant(m) * top * top * (1.0 - 1e-6));
    }
}

#[test]
fn base_case_bound_is_positive() {
    let mut worst = f64::INFINITY;
    for seed in 0..200 {
        let m = 1 + (seed % 3) as usize;
        let class = ClassParams::new(1 + (seed % 4) as usize, m, m).unwrap();
        let f = random_in_class(&class, seed, &CoefficientLaw::default()).unwrap();
        let (a, _) = f.leading_magnitude().unwrap();
        worst = worst.min(variance(&f) / (a * a));
    }
    assert!(worst > 0.0, "smallest variance / a^2 = {worst}");
}
