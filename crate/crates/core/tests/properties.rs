use num_complex::Complex64;
use proptest::prelude::*;

use splicelab::cutoff::{BaseCutoff, CutoffParams};
use splicelab::grid::{translate, CylinderGrid, DiscreteMap};
use splicelab::harness::fields::{jensen_family, seeded_pair, FieldSpec};
use splicelab::splicing::{apply, complex_glue, GluingParam, MapPair, MatrixKind, SplicingFamily};
use splicelab::weighted::{jensen_gap, norm_weighted, norm_weighted_derivatives, NormSpec};

const H: f64 = 0.05;

fn half_pair(reach: f64, seed: u64) -> MapPair {
    let n = (reach / H).ceil() as i64;
    let minus = CylinderGrid::on_lattice(H, -n, 0, 8).unwrap();
    let plus = CylinderGrid::on_lattice(H, 0, n, 8).unwrap();
    seeded_pair(&minus, &plus, 2, &FieldSpec::default(), seed).unwrap()
}

fn family(l: f64, d: f64) -> SplicingFamily {
    SplicingFamily::new(BaseCutoff::new(7).unwrap(), CutoffParams::new(l, d, 1.5, 1.5).unwrap()).unwrap()
}

fn max_diff(a: &DiscreteMap, b: &DiscreteMap) -> f64 {
    a.sub(b).unwrap().max_abs()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norm_is_absolutely_homogeneous(seed in any::<u64>(), c in -5.0f64..5.0, k in 0usize..3, p in 2.1f64..6.0) {
        let u = half_pair(12.0, seed).plus;
        let spec = NormSpec::new(0.5, k, p).unwrap();
        let n = norm_weighted(&u, &spec).unwrap();
        let nc = norm_weighted(&u.scaled(c), &spec).unwrap();
        prop_assert!((nc - c.abs() * n).abs() <= 1e-12 * n.max(1.0));
    }

    #[test]
    fn norm_satisfies_triangle_inequality(s1 in any::<u64>(), s2 in any::<u64>(), k in 0usize..3, p in 2.1f64..6.0) {
        let u = half_pair(12.0, s1).plus;
        let v = half_pair(12.0, s2).plus;
        let spec = NormSpec::new(0.5, k, p).unwrap();
        let lhs = norm_weighted(&u.add(&v).unwrap(), &spec).unwrap();
        let rhs = norm_weighted(&u, &spec).unwrap() + norm_weighted(&v, &spec).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    /// `D_t(e^{δt}u) = e^{δt}(D_t + δ)u` on `t ≥ 0`, so the two norm conventions are within `(1 + δ)^k`.
    #[test]
    fn norm_conventions_are_equivalent(seed in any::<u64>(), delta in 0.1f64..0.8, k in 0usize..3, p in 2.1f64..5.0) {
        let u = half_pair(14.0, seed).plus;
        let spec = NormSpec::new(delta, k, p).unwrap();
        let a = norm_weighted(&u, &spec).unwrap();
        let b = norm_weighted_derivatives(&u, &spec).unwrap();
        let c = (1.0 + delta).powi(k as i32) * (1.0 + 1e-9);
        if k == 0 {
            prop_assert!((a - b).abs() <= 1e-12 * a);
        }
        prop_assert!(a <= c * b && b <= c * a, "a = {a}, b = {b}, c = {c}");
    }

    #[test]
    fn glue_is_linear(s1 in any::<u64>(), s2 in any::<u64>(), x in -3.0f64..3.0, y in -3.0f64..3.0, theta in 0.0f64..6.3) {
        let fam = family(2.0, 6.0);
        let a = GluingParam::new(8.0, theta);
        let u = half_pair(24.0, s1);
        let v = half_pair(24.0, s2);
        let comb = MapPair::new(u.minus.lin_comb(x, &v.minus, y).unwrap(), u.plus.lin_comb(x, &v.plus, y).unwrap()).unwrap();
        let gu = fam.total_glue(&u, a).unwrap();
        let gv = fam.total_glue(&v, a).unwrap();
        let g = fam.total_glue(&comb, a).unwrap();
        let scale = 1.0 + x.abs() + y.abs();
        prop_assert!(max_diff(&g.minus, &gu.minus.lin_comb(x, &gv.minus, y).unwrap()) <= 1e-12 * scale);
        prop_assert!(max_diff(&g.plus, &gu.plus.lin_comb(x, &gv.plus, y).unwrap()) <= 1e-12 * scale);
    }

    #[test]
    fn unglue_inverts_glue(seed in any::<u64>(), steps in 170i64..400, theta in -3.2f64..3.2) {
        let fam = family(2.0, 6.0);
        let a = GluingParam::new(steps as f64 * H, theta);
        let u = half_pair(2.0 * a.r + 6.0, seed);
        let back = fam.total_unglue(&fam.total_glue(&u, a).unwrap(), a, &u).unwrap();
        prop_assert!(back.sub(&u).unwrap().max_abs() <= 1e-10);
    }

    #[test]
    fn determinant_is_between_one_and_two(l in 1.5f64..6.0, gap in 0.0f64..10.0, t in -40.0f64..40.0) {
        let fam = family(l, 3.0 * l + gap);
        let det = fam.det(t);
        prop_assert!((1.0 - 1e-12..=2.0 + 1e-12).contains(&det), "D = {det}");
    }

    /// The complex and the real matrix form of the splicing agree.
    #[test]
    fn complex_and_matrix_conventions_agree(t in -20.0f64..20.0, em in -4.0f64..4.0, ep in -4.0f64..4.0) {
        let fam = family(3.0, 9.0);
        let m = fam.splicing_matrix(t, MatrixKind::Beta);
        let real = apply(&m, [em, ep]);
        let z = complex_glue(Complex64::new(em, ep), Complex64::new(m[0][0], m[1][0]));
        prop_assert!((z.re - real[0]).abs() <= 1e-14 && (z.im - real[1]).abs() <= 1e-14);
    }

    #[test]
    fn jensen_holds_for_every_seed(seed in any::<u64>(), p in 2.1f64..6.0) {
        let grid = CylinderGrid::with_spacing(-4.0, 4.0, 0.1, 8).unwrap();
        let slices = jensen_family(&grid, 2, 9, seed, false);
        let (lhs, rhs) = jensen_gap(&slices, p).unwrap();
        prop_assert!(lhs <= rhs * (1.0 + 1e-12));
    }

    #[test]
    fn lattice_translations_compose(seed in any::<u64>(), i in -40i64..40, j in -40i64..40, a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let u = half_pair(6.0, seed).plus;
        let (di, dj) = (i as f64 * H, j as f64 * H);
        let two = translate(&translate(&u, di, a).unwrap(), dj, b).unwrap();
        let one = translate(&u, di + dj, a + b).unwrap();
        prop_assert!((two.grid().t_min() - one.grid().t_min()).abs() < 1e-9);
        prop_assert!(max_diff(&two, &one) <= 1e-12 * u.max_abs());
    }
}
