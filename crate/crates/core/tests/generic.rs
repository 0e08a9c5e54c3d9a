//! The same computations in f32, f64 and exact rationals.

use jacobi_core::diffops::{
    heisenberg_table, jacobi_generators_diff, jacobi_table, verify_structure_constants, Conventions, GaussRational,
};
use jacobi_core::jacobi::{act, density, kernel, CSPoint, JacobiElement};
use jacobi_core::{CSPointF32, CSPointF64, JacobiElementF32, JacobiElementF64};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn kernel_single_vs_double() {
    for seed in 0..20 {
        let x64 = CSPointF64::random(2, 0.5, 0.3, &mut ChaCha8Rng::seed_from_u64(seed));
        let x32 = CSPointF32::random(2, 0.5, 0.3, &mut ChaCha8Rng::seed_from_u64(seed));
        let y64 = CSPointF64::random(2, 0.5, 0.3, &mut ChaCha8Rng::seed_from_u64(seed + 100));
        let y32 = CSPointF32::random(2, 0.5, 0.3, &mut ChaCha8Rng::seed_from_u64(seed + 100));
        let a = kernel(&x64, &y64, 3.0).unwrap();
        let b = kernel(&x32, &y32, 3.0f32).unwrap();
        assert!(((b.re as f64 - a.re).hypot(b.im as f64 - a.im)) / a.norm() < 1e-4, "seed {seed}: {a} vs {b}");
    }
}

#[test]
fn action_single_vs_double() {
    for seed in 0..20 {
        let mut r64 = ChaCha8Rng::seed_from_u64(seed);
        let mut r32 = ChaCha8Rng::seed_from_u64(seed);
        let h64 = JacobiElementF64::random(2, 0.3, 0.5, &mut r64);
        let h32 = JacobiElementF32::random(2, 0.3, 0.5, &mut r32);
        let x64 = CSPointF64::random(2, 0.5, 0.3, &mut r64);
        let x32 = CSPointF32::random(2, 0.5, 0.3, &mut r32);
        let d64 = density(&act(&h64, &x64).unwrap()).unwrap();
        let d32 = density(&act(&h32, &x32).unwrap()).unwrap();
        assert!((d32 as f64 / d64 - 1.0).abs() < 1e-3, "seed {seed}: {d64} vs {d32}");
    }
}

#[test]
fn identity_fixes_origin_f32() {
    let x: CSPoint<f32> = CSPoint::origin(3);
    let h: JacobiElement<f32> = JacobiElement::identity(3);
    assert_eq!(act(&h, &x).unwrap(), x);
}

#[test]
fn rational_generators_close() {
    for n in 1..=2 {
        let gens = jacobi_generators_diff::<GaussRational>(n, Conventions::default());
        for table in [heisenberg_table(n), jacobi_table(n)] {
            let rep = verify_structure_constants(&gens, &table, 1).unwrap();
            assert!(rep.passed(), "{} n={n}: {:?}", rep.table, rep.mismatches);
            assert!(rep.checked > 0);
        }
    }
}
