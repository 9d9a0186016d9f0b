//! Property tests for the grid algebra and the ordering structure of the
//! semigroup step.

use contact_hj_core::grid::{even_periodic_extension, GridFunction, PeriodicGrid};
use contact_hj_core::model::example_hamiltonian;
use contact_hj_core::semigroup::{Semigroup, SemigroupParams};
use proptest::prelude::*;

fn grid32() -> PeriodicGrid {
    PeriodicGrid::new(32).unwrap()
}

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-100.0_f64..100.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sup_norm_is_a_norm(a in values(32), b in values(32), s in -10.0_f64..10.0) {
        let g = grid32();
        let fa = GridFunction::new(g, a).unwrap();
        let fb = GridFunction::new(g, b).unwrap();
        // triangle inequality, exactly on grid values
        let sum = fa.zip_with(&fb, |x, y| x + y);
        prop_assert!(sum.sup_norm() <= fa.sup_norm() + fb.sup_norm());
        // absolute homogeneity up to rounding of the scalar product
        let scaled = fa.map(|x| s * x);
        let expect = s.abs() * fa.sup_norm();
        prop_assert!((scaled.sup_norm() - expect).abs() <= 1e-12 * (1.0 + expect));
        // zero iff all values zero
        prop_assert_eq!(fa.sup_norm() == 0.0, fa.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn even_extension_is_even_at_paired_nodes(c0 in -2.0_f64..2.0, c1 in -2.0_f64..2.0) {
        let g = grid32();
        let f = even_periodic_extension(g, |y: f64| c0 * y + c1 * y * y);
        for i in 0..g.len() {
            let j = g.wrap(-(i as isize));
            prop_assert_eq!(f.value(i), f.value(j));
        }
    }

    #[test]
    fn interpolation_is_periodic(vals in values(32), x in -3.0_f64..3.0) {
        let g = grid32();
        let f = GridFunction::new(g, vals).unwrap();
        let a = f.interpolate(x);
        let b = f.interpolate(x + 1.0);
        prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a.abs()));
    }

    #[test]
    fn json_round_trip_is_bit_exact(vals in values(32)) {
        let g = grid32();
        let f = GridFunction::new(g, vals).unwrap();
        let mut buf = Vec::new();
        f.write_json(&mut buf).unwrap();
        let back = GridFunction::<f64>::read_json(buf.as_slice()).unwrap();
        prop_assert_eq!(f.values(), back.values());
    }

    #[test]
    fn backward_step_is_monotone(base in values(32), bump in proptest::collection::vec(0.0_f64..5.0, 32)) {
        let ham = example_hamiltonian::<f64>();
        let g = grid32();
        let mut params = SemigroupParams::suggested(&ham, g, 2.0);
        params.refine = false; // matched velocity candidates make ordering exact
        let sg = Semigroup::new(&ham, g, params).unwrap();

        let lo = GridFunction::new(g, base.clone()).unwrap();
        let hi = GridFunction::new(
            g,
            base.iter().zip(&bump).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        let slo = sg.step_backward(&lo).unwrap();
        let shi = sg.step_backward(&hi).unwrap();
        for i in 0..g.len() {
            prop_assert!(slo.value(i) <= shi.value(i));
        }
    }

    #[test]
    fn dual_flips_the_monotonicity_band(x in -0.5_f64..0.5, u in -3.0_f64..3.0, p in -5.0_f64..5.0) {
        let ham = example_hamiltonian::<f64>();
        let f = ham.dual();
        prop_assert_eq!(f.eval(x, u, p), ham.eval(x, -u, -p));
        prop_assert_eq!(f.d_u(x, u, p), -ham.d_u(x, -u, -p));
        // involution is pointwise exact
        prop_assert_eq!(f.dual().eval(x, u, p), ham.eval(x, u, p));
    }
}
