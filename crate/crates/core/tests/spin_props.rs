use nalgebra::{DMatrix, Rotation3, Unit, Vector3};
use num_complex::Complex64;
use proptest::prelude::*;
use spinterface::spin::{
    build_hamiltonian, eigensystem, spin_operators, transition_table, transitions_from, FieldPoint, Spin, SpinSystem,
    MU_B_OVER_H,
};

fn c(v: f64) -> Complex64 {
    Complex64::new(v, 0.0)
}

fn zfs() -> impl Strategy<Value = (f64, f64)> {
    (0.01f64..20.0, 0.0f64..=1.0).prop_map(|(d, r)| (d, r * d / 3.0))
}

fn direction() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        Vector3::new(r * phi.cos(), r * phi.sin(), z)
    })
}

fn hermitian(n: usize) -> impl Strategy<Value = DMatrix<Complex64>> {
    prop::collection::vec(-10.0f64..10.0, 2 * n * n).prop_map(move |v| {
        let a = DMatrix::from_fn(n, n, |i, j| Complex64::new(v[i * n + j], v[n * n + i * n + j]));
        (&a + a.adjoint()) * c(0.5)
    })
}

proptest! {
    #[test]
    fn commutation_relations(twice in 1u32..=8) {
        let ops = spin_operators(Spin::from_twice(twice).unwrap());
        let i = Complex64::i();
        let comm = |a: &DMatrix<Complex64>, b: &DMatrix<Complex64>| a * b - b * a;
        prop_assert!((comm(&ops.x, &ops.y) - &ops.z * i).norm() < 1e-14);
        prop_assert!((comm(&ops.y, &ops.z) - &ops.x * i).norm() < 1e-14);
        prop_assert!((comm(&ops.z, &ops.x) - &ops.y * i).norm() < 1e-14);
    }

    #[test]
    fn zero_field_levels_match_closed_form((d, e) in zfs()) {
        let sys = SpinSystem::triplet(d, e, 2.0).unwrap();
        let eig = eigensystem(&build_hamiltonian(&sys, &FieldPoint::zero())).unwrap();
        let mut expect = [-2.0 * d / 3.0, d / 3.0 - e, d / 3.0 + e];
        expect.sort_by(f64::total_cmp);
        for (a, b) in eig.energies.iter().zip(expect) {
            prop_assert!((a - b).abs() < 1e-10, "{} {}", a, b);
        }
    }

    #[test]
    fn axial_fan_is_linear(d in 0.1f64..20.0, g in 1.5f64..2.5, b_mt in 0.0f64..200.0) {
        let sys = SpinSystem::triplet(d, 0.0, g).unwrap();
        let field = FieldPoint::along(Vector3::z_axis(), b_mt * 1e-3);
        let shift = g * MU_B_OVER_H * b_mt * 1e-3;
        let table = transition_table(&sys, &field, 4.0).unwrap();
        let allowed: Vec<f64> = table.iter().filter(|t| t.intensity > 1e-6).map(|t| t.frequency).collect();
        for f in [d - shift, d + shift] {
            prop_assert!(allowed.iter().any(|a| (a - f.abs()).abs() < 1e-10), "{:?} {}", allowed, f);
        }
    }

    #[test]
    fn transitions_ignore_energy_offset((d, e) in zfs(), dir in direction(), b in 0.0f64..0.5, shift in -100.0f64..100.0) {
        let sys = SpinSystem::triplet(d, e, 2.0).unwrap();
        let field = FieldPoint::new(dir * b, Vector3::x()).unwrap();
        let h = build_hamiltonian(&sys, &field);
        let shifted = &h + DMatrix::<Complex64>::identity(3, 3) * c(shift);
        let a = transitions_from(Spin::ONE, &eigensystem(&h).unwrap(), &[Vector3::x()], 4.0).unwrap();
        let b = transitions_from(Spin::ONE, &eigensystem(&shifted).unwrap(), &[Vector3::x()], 4.0).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x.frequency - y.frequency).abs() < 1e-10);
        }
    }

    #[test]
    fn frame_covariance((d, e) in zfs(), dir in direction(), axis in direction(), angle in 0.0f64..6.28, b in 0.01f64..0.5) {
        let sys = SpinSystem::triplet(d, e, 2.0).unwrap();
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle);
        let b1 = dir.cross(&Vector3::new(0.3, -0.2, 0.9)).normalize();
        let before = transition_table(&sys, &FieldPoint::new(dir * b, b1).unwrap(), 4.0).unwrap();
        let rotated = sys.clone().with_frame(rot);
        let after = transition_table(&rotated, &FieldPoint::new(rot * (dir * b), rot * b1).unwrap(), 4.0).unwrap();
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x.frequency - y.frequency).abs() < 1e-9);
            prop_assert!((x.intensity - y.intensity).abs() < 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn eigen_reconstruction(h in (2usize..=5).prop_flat_map(hermitian)) {
        let eig = eigensystem(&h).unwrap();
        prop_assert!((eig.reconstruct() - &h).norm() < 1e-9);
        prop_assert!(eig.energies.windows(2).all(|w| w[0] <= w[1]));
    }
}

#[test]
fn non_hermitian_input_is_rejected() {
    let mut h = DMatrix::<Complex64>::identity(3, 3);
    h[(0, 1)] = c(1.0);
    assert!(eigensystem(&h).is_err());
}
