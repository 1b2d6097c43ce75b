use proptest::prelude::*;

use jumprep_core::branching::{coding_map_of, compose_branches, jump_family, BranchSystem};
use jumprep_core::catalog::{get_entry, list_entries};
use jumprep_core::jump::{first_entry_time, jump_apply, JumpSpec, DEFAULT_ENTRY_CAP};
use jumprep_core::measure::{ulam_density, UlamConfig};
use jumprep_core::scalar::{rat, rational_to_f64};
use jumprep_core::Rational;

const DYADIC_BITS: u32 = 20;

fn ulp(v: f64) -> f64 {
    if v == 0.0 {
        return f64::MIN_POSITIVE;
    }
    2f64.powi(v.abs().log2().floor() as i32) * f64::EPSILON
}

fn dyadic() -> impl Strategy<Value = Rational> {
    (1i64..(1 << DYADIC_BITS)).prop_map(|p| rat(p, 1 << DYADIC_BITS))
}

/// `p/q` strictly inside `(0, 1)`.
fn interior_rational() -> impl Strategy<Value = Rational> {
    (2i64..2000).prop_flat_map(|q| (1..q).prop_map(move |p| rat(p, q)))
}

fn entry_name() -> impl Strategy<Value = &'static str> {
    prop::sample::select(list_entries())
}

/// Index bound for words over a system: both branches, or the first dozen.
fn letters(f: &BranchSystem) -> usize {
    (f.enumerated() as usize).min(12)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    // dyadic points are exact in both backends, so only the arithmetic differs
    #[test]
    fn float_matches_exact_within_four_ulps(name in entry_name(), x in dyadic()) {
        let map = get_entry(name).unwrap().map;
        let id = map.locate(&x).unwrap();
        prop_assume!(id.is_some());
        let dom = map.piece(id.unwrap()).domain().clone();
        prop_assume!(&x != dom.lo() && &x != dom.hi());
        let exact = rational_to_f64(&map.eval_map(&x).unwrap());
        let float = map.eval_map(&rational_to_f64(&x)).unwrap();
        prop_assert!((exact - float).abs() <= 4.0 * ulp(exact), "{name} at {x}: {exact} vs {float}");
    }

    #[test]
    fn invert_after_branch_is_identity(name in entry_name(), i in 1usize..=12, x in interior_rational()) {
        let f = get_entry(name).unwrap().branch_system;
        prop_assume!(i <= letters(&f));
        let b = f.branch_on_ambient(i).unwrap();
        let y: Rational = b.eval(&x).unwrap();
        prop_assert_eq!(b.invert(&y).unwrap(), x);
    }

    #[test]
    fn derivative_matches_central_difference(name in entry_name(), x in 0.05f64..0.95) {
        let map = get_entry(name).unwrap().map;
        let h = 1e-6;
        let id = map.locate(&x).unwrap();
        prop_assume!(id.is_some());
        let (lo, hi) = map.piece(id.unwrap()).domain().to_f64();
        prop_assume!(lo < x - 2.0 * h && x + 2.0 * h < hi);
        let d = map.eval_derivative(&x).unwrap();
        let fd = (map.eval_map(&(x + h)).unwrap() - map.eval_map(&(x - h)).unwrap()) / (2.0 * h);
        prop_assert!((fd - d).abs() <= 1e-5 * d.abs(), "{name} at {x}: {d} vs {fd}");
    }

    #[test]
    fn coding_map_undoes_compositions(
        name in entry_name(),
        word in prop::collection::vec(1usize..=12, 1..6),
        x in interior_rational(),
    ) {
        let e = get_entry(name).unwrap();
        let f = &e.branch_system;
        prop_assume!(word.iter().all(|&i| i <= letters(f)));
        let t = match f.enumerated() {
            2 => coding_map_of(f).unwrap(),
            _ => e.map.clone(),
        };
        let mut y: Rational = compose_branches(f, &word).unwrap().eval(&x).unwrap();
        for _ in 0..word.len() {
            y = t.eval_map(&y).unwrap();
        }
        prop_assert_eq!(y, x);
    }

    #[test]
    fn composition_is_associative(
        name in entry_name(),
        w1 in prop::collection::vec(1usize..=12, 1..4),
        w2 in prop::collection::vec(1usize..=12, 1..4),
        x in interior_rational(),
    ) {
        let f = get_entry(name).unwrap().branch_system;
        prop_assume!(w1.iter().chain(&w2).all(|&i| i <= letters(&f)));
        let whole = compose_branches(&f, &[w1.clone(), w2.clone()].concat()).unwrap();
        let outer = compose_branches(&f, &w1).unwrap();
        let inner = compose_branches(&f, &w2).unwrap();
        prop_assert!(whole.map().projectively_eq(&outer.map().compose(inner.map())));
        let direct: Rational = whole.eval(&x).unwrap();
        prop_assert_eq!(direct, outer.eval(&inner.eval(&x).unwrap()).unwrap());
    }

    // e = n - 1 on g_n(X) = f_2^{n-1}(R_1)
    #[test]
    fn entry_time_constant_on_family_ranges(pair in 0usize..3, n in 1u64..=24, x in interior_rational()) {
        let base = get_entry(["farey", "chan_sigma2", "tent"][pair]).unwrap();
        let f = &base.branch_system;
        let spec = JumpSpec::new(base.map.clone(), f.range(1).unwrap(), DEFAULT_ENTRY_CAP).unwrap();
        let g = jump_family(f, 24).unwrap();
        let y: Rational = g.branch_on_ambient(n as usize).unwrap().eval(&x).unwrap();
        prop_assert_eq!(first_entry_time(&spec, &y).unwrap(), n - 1);
    }

    #[test]
    fn jump_is_one_step_inside_target(pair in 0usize..3, x in interior_rational()) {
        let base = get_entry(["farey", "chan_sigma2", "tent"][pair]).unwrap();
        let a = base.branch_system.range(1).unwrap();
        prop_assume!(a.contains(&x));
        let spec = JumpSpec::new(base.map.clone(), a, DEFAULT_ENTRY_CAP).unwrap();
        prop_assert_eq!(jump_apply(&spec, &x).unwrap(), base.map.eval_map(&x).unwrap());
    }
}

#[test]
fn ulam_vector_is_a_probability_vector() {
    for name in ["tent", "gauss", "chan_tau2", "tent_jump"] {
        let r = ulam_density(&get_entry(name).unwrap().map, &UlamConfig::new(256)).unwrap();
        assert!(r.masses.iter().all(|&m| m >= 0.0), "{name}");
        let total: f64 = r.masses.iter().sum();
        assert!((total - 1.0).abs() <= 1e-12, "{name}: {total}");
    }
}
