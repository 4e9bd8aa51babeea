use num_complex::Complex64 as C;
use proptest::prelude::*;
use quintic_lab::lattice::{sphere_count, sphere_points};
use quintic_lab::nonlinearity::{decompose_j, quintic_fourier_fft};
use quintic_lab::solver::linear_propagator;
use quintic_lab::spaces::{hs_norm, vp_norm, Trajectory};
use quintic_lab::{FourierField, Freq};

fn field(n_max: usize) -> impl Strategy<Value = FourierField> {
    let len = (2 * n_max + 1).pow(3);
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_map(move |v| {
        let mut f = FourierField::zeros(n_max);
        for (c, (re, im)) in f.coefficients_mut().iter_mut().zip(v) {
            *c = C::new(re, im);
        }
        f
    })
}

fn series() -> impl Strategy<Value = Vec<C>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| C::new(a, b)), 1..24)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn json_and_bytes_roundtrip(f in field(2)) {
        prop_assert_eq!(&FourierField::from_json(&f.to_json()).unwrap(), &f);
        prop_assert_eq!(&FourierField::from_bytes(&f.to_bytes()).unwrap(), &f);
    }

    #[test]
    fn conj_reflect_is_an_involution(f in field(2)) {
        prop_assert_eq!(&f.conj_reflect().conj_reflect(), &f);
        prop_assert!((f.conj_reflect().mass() - f.mass()).abs() <= 1e-12 * f.mass().max(1.0));
    }

    #[test]
    fn propagator_is_unitary_and_a_group(f in field(2), t in -3.0f64..3.0, s in -3.0f64..3.0) {
        for sob in [0.0, 1.3] {
            let a = hs_norm(&f, sob);
            prop_assert!((hs_norm(&linear_propagator(&f, t), sob) - a).abs() <= 1e-12 * a.max(1.0));
        }
        let two_step = linear_propagator(&linear_propagator(&f, t), s);
        prop_assert!(two_step.max_abs_diff(&linear_propagator(&f, t + s)) <= 1e-12);
    }

    #[test]
    fn quintic_is_phase_covariant(f in field(1), theta in 0.0f64..6.3) {
        let rot = C::from_polar(1.0, theta);
        let lhs = quintic_fourier_fft(&f.scale(rot));
        let rhs = quintic_fourier_fft(&f).scale(rot);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * rhs.max_abs().max(1.0));
        let d = decompose_j(&f.scale(rot)).total();
        prop_assert!(d.max_abs_diff(&rhs) <= 1e-11 * rhs.max_abs().max(1.0));
    }

    #[test]
    fn variation_bounds(v in series()) {
        let v2 = vp_norm(&v, 2.0);
        let v1 = vp_norm(&v, 1.0);
        let ends = (v[v.len() - 1] - v[0]).norm();
        prop_assert!(v2 + 1e-12 >= ends);
        prop_assert!(v1 + 1e-12 >= v2);
        let shifted: Vec<C> = v.iter().map(|z| z + C::new(0.3, -0.7)).collect();
        prop_assert!((vp_norm(&shifted, 2.0) - v2).abs() <= 1e-12 * v2.max(1.0));
    }

    #[test]
    fn sphere_points_match_count(r2 in 0u64..400) {
        let pts = sphere_points(r2);
        prop_assert_eq!(pts.len() as u64, sphere_count(r2));
        prop_assert!(pts.iter().all(|n| n.norm2() as u64 == r2));
    }

    #[test]
    fn trajectory_bytes_roundtrip(f in field(1), nodes in 2usize..6) {
        let traj = Trajectory::linear(&f, &Trajectory::uniform_times(0.0, 0.5, nodes)).unwrap();
        prop_assert_eq!(Trajectory::from_bytes(&traj.to_bytes()).unwrap(), traj);
    }
}

#[test]
fn brute_count_agrees_on_small_spheres() {
    for r2 in 0..60u64 {
        let mut c = 0;
        for x in -8i32..=8 {
            for y in -8i32..=8 {
                for z in -8i32..=8 {
                    c += (Freq::new(x, y, z).norm2() as u64 == r2) as u64;
                }
            }
        }
        assert_eq!(sphere_count(r2), c, "r2 = {r2}");
    }
}
