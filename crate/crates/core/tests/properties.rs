use brolin_core::dynamics::{capacity_julia, escape_radius, green_value, PolyDyn};
use brolin_core::equilibrium::{filled_hull, named_shape_equilibrium};
use brolin_core::exec::Sequential;
use brolin_core::grid::{GridSet, Lattice, NamedShape, Rect, SetProvenance};
use brolin_core::math;
use brolin_core::measure::{
    gram_matrix, make_quadrature, potential, Density, EmpiricalMeasure, MeasureKind, MeasureSpec, Provenance,
    QuadratureMeasure,
};
use brolin_core::orthopoly::{orthonormal_basis, orthonormality_defect};
use num_complex::Complex64;
use proptest::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn atomic() -> impl Strategy<Value = MeasureSpec> {
    prop::collection::vec(((-2.0..2.0f64), (-2.0..2.0f64), (0.1..1.0f64)), 12..24).prop_map(|v| {
        let total: f64 = v.iter().map(|t| t.2).sum();
        let atoms = v.into_iter().map(|(x, y, w)| (c(x, y), w / total)).collect();
        MeasureSpec::new(MeasureKind::AtomicMixture(atoms), "atoms")
    })
}

fn jacobi() -> impl Strategy<Value = MeasureSpec> {
    ((-0.9..2.0f64), (-0.9..2.0f64), (-3.0..0.0f64), (0.5..3.0f64)).prop_map(|(alpha, beta, a, len)| {
        MeasureSpec::interval(a, a + len, Density::Jacobi { alpha, beta })
    })
}

fn random_poly() -> impl Strategy<Value = PolyDyn> {
    (2usize..6, prop::collection::vec((-1.5..1.5f64, -1.5..1.5f64), 6), 0.3..3.0f64, 0.0..6.3f64).prop_map(
        |(d, cs, lead, arg)| {
            let mut coeffs: Vec<Complex64> = cs[..d].iter().map(|&(x, y)| c(x, y)).collect();
            coeffs.push(math::cis(arg) * lead);
            PolyDyn::new(coeffs).unwrap()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gram_matrix_is_hermitian_psd(spec in atomic()) {
        let q = make_quadrature(&spec, 64).unwrap();
        let g = gram_matrix(&q, 5).unwrap();
        for i in 0..g.len() {
            for j in 0..g.len() {
                prop_assert!((g[i][j] - g[j][i].conj()).norm() < 1e-12 * (1.0 + g[i][j].norm()));
            }
        }
        // PSD: v* G v = ∫ |Σ v_k z^k|² dμ ≥ 0 for a few probe vectors.
        for seed in 0..6u64 {
            let v: Vec<Complex64> = (0..g.len())
                .map(|k| math::cis(math::splitmix64(seed * 31 + k as u64) as f64 * 1e-9))
                .collect();
            let mut s = Complex64::new(0.0, 0.0);
            for i in 0..g.len() {
                for j in 0..g.len() {
                    s += v[i].conj() * g[i][j] * v[j];
                }
            }
            prop_assert!(s.re >= -1e-10 * (1.0 + s.norm()));
        }
    }

    #[test]
    fn potential_is_log_at_infinity(spec in atomic(), t in 0.0..6.3f64) {
        let q = make_quadrature(&spec, 64).unwrap();
        let m = q.to_empirical();
        let z = math::cis(t) * 1e7;
        prop_assert!((potential(&m, z) - math::ln(1e7)).abs() < 1e-6);
    }

    #[test]
    fn quadrature_is_deterministic(spec in jacobi(), n in 4usize..40) {
        let a = make_quadrature(&spec, n).unwrap();
        let b = make_quadrature(&spec, n).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn gammas_scale_under_dilation(spec in jacobi(), s in 0.3..3.0f64) {
        let n = 8;
        let b = orthonormal_basis(&make_quadrature(&spec, 64).unwrap(), n, 1e-10).unwrap();
        let bs = orthonormal_basis(&make_quadrature(&spec.dilated(s), 64).unwrap(), n, 1e-10).unwrap();
        for k in 0..=n {
            let expect = b.gammas[k] / s.powi(k as i32);
            prop_assert!((bs.gammas[k] - expect).abs() < 1e-8 * expect, "k = {}: {} vs {}", k, bs.gammas[k], expect);
        }
    }

    #[test]
    fn orthonormal_against_finer_rule(spec in jacobi()) {
        let n = 10;
        let q = make_quadrature(&spec, 64).unwrap();
        let b = orthonormal_basis(&q, n, 1e-10).unwrap();
        let fine: QuadratureMeasure = make_quadrature(&spec, 2 * q.node_count()).unwrap();
        prop_assert!(orthonormality_defect(&b, &fine) < 1e-9);
    }

    #[test]
    fn escape_radius_traps_orbits(p in random_poly(), t in 0.0..6.3f64, k in 1.0..5.0f64) {
        let r = escape_radius(&p.coeffs).unwrap();
        let z = math::cis(t) * r * (1.0 + 1e-9) * k;
        prop_assert!(p.eval(z).norm() > z.norm());
    }

    #[test]
    fn green_functional_equation(p in random_poly(), t in 0.0..6.3f64, k in 1.2..4.0f64) {
        let z = math::cis(t) * p.escape_radius * k;
        let g = green_value(&p, z, 200, 1e-12).unwrap();
        let gp = green_value(&p, p.eval(z), 200, 1e-12).unwrap();
        prop_assert!((gp - p.degree as f64 * g).abs() < 1e-8 * (1.0 + gp.abs()));
    }

    #[test]
    fn capacity_matches_leading_coefficient(p in random_poly()) {
        let expect = p.gamma.norm().powf(-1.0 / (p.degree as f64 - 1.0));
        prop_assert!((capacity_julia(&p) - expect).abs() < 1e-14 * expect);
    }

    #[test]
    fn hull_is_idempotent_and_monotone(cx in -0.3..0.3f64, r in 0.2..0.8f64, extra in 0.0..0.3f64) {
        let lat = Lattice::new(Rect::new(-1.5, 1.5, -1.5, 1.5).unwrap(), 96, 96).unwrap();
        let a = GridSet::from_shape(lat, NamedShape::Circle { center: c(cx, 0.0), radius: r }, None).unwrap();
        let b = GridSet::from_shape(lat, NamedShape::Circle { center: c(cx, 0.0), radius: r + extra }, None).unwrap();
        let ab = GridSet::new(lat, a.mask.iter().zip(&b.mask).map(|(x, y)| *x || *y).collect(), SetProvenance::Custom).unwrap();
        let ha = filled_hull(&a).unwrap();
        let hha = filled_hull(&ha).unwrap();
        prop_assert_eq!(&ha.mask, &hha.mask);
        prop_assert!(a.is_subset_of(&ha));
        prop_assert!(ha.is_subset_of(&filled_hull(&ab).unwrap()));
    }

    #[test]
    fn capacity_is_dilation_covariant(r in 0.1..5.0f64, len in 0.1..6.0f64, s in 0.2..5.0f64) {
        for shape in [
            NamedShape::Circle { center: c(0.3, -0.2), radius: r },
            NamedShape::Segment { a: c(-1.0, 0.5), b: c(-1.0 + len, 0.5) },
        ] {
            let e = named_shape_equilibrium(&shape, 512).unwrap();
            let es = named_shape_equilibrium(&shape.dilate(s), 512).unwrap();
            prop_assert!((es.capacity - s * e.capacity).abs() < 1e-9 * es.capacity);
        }
    }

    #[test]
    fn empirical_measure_round_trips_through_uniform(n in 1usize..50) {
        let pts: Vec<Complex64> = (0..n).map(|k| c(k as f64, 0.0)).collect();
        let m = EmpiricalMeasure::uniform(pts, Provenance::Custom);
        prop_assert!((m.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(m.len(), n);
    }
}

#[test]
fn sequential_exec_preserves_order() {
    use brolin_core::exec::Exec;
    let v = Sequential.map_indexed(100, |i| i * i);
    assert!(v.iter().enumerate().all(|(i, x)| *x == i * i));
}
