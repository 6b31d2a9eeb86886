//! Independent oracles: exact rational arithmetic for the apparency system,
//! the residue theorem on the assembled forms, and finite differences
//! against the differentiated Cramer solution.

use darboux_conn::atlas::build_atlas_with;
use darboux_conn::atlas::AtlasOptions;
use darboux_conn::companion::{
    build_companion, build_companion_with, compute_cj, solve_apparency_system, stability_det, ApparentConfig, ApparentPoint,
    CompanionError,
};
use darboux_conn::coords::{canonical_coordinates, forward_map_with, p_closed_form};
use darboux_conn::numeric::{c, cr, solve_linear, Complex, LinearSystem};
use darboux_conn::sample;
use darboux_conn::spectral::ResidueParams;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;

/// Gaussian rational.
#[derive(Clone, Debug, PartialEq)]
struct Q {
    re: BigRational,
    im: BigRational,
}

impl Q {
    fn from_f64(z: Complex) -> Self {
        Self { re: BigRational::from_float(z.re).unwrap(), im: BigRational::from_float(z.im).unwrap() }
    }
    fn int(n: i64) -> Self {
        Self { re: BigRational::from_integer(BigInt::from(n)), im: BigRational::zero() }
    }
    fn add(&self, o: &Q) -> Q {
        Q { re: &self.re + &o.re, im: &self.im + &o.im }
    }
    fn sub(&self, o: &Q) -> Q {
        Q { re: &self.re - &o.re, im: &self.im - &o.im }
    }
    fn mul(&self, o: &Q) -> Q {
        Q { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }
    fn div(&self, o: &Q) -> Q {
        let d = &o.re * &o.re + &o.im * &o.im;
        Q { re: (&self.re * &o.re + &self.im * &o.im) / &d, im: (&self.im * &o.re - &self.re * &o.im) / &d }
    }
    fn to_f64(&self) -> Complex {
        let f = |r: &BigRational| {
            let (n, d) = (r.numer().to_string().parse::<f64>().unwrap(), r.denom().to_string().parse::<f64>().unwrap());
            n / d
        };
        c(f(&self.re), f(&self.im))
    }
}

fn det3(m: &[[Q; 3]; 3]) -> Q {
    let minor = |a: &Q, b: &Q, c: &Q, d: &Q| a.mul(d).sub(&b.mul(c));
    m[0][0]
        .mul(&minor(&m[1][1], &m[1][2], &m[2][1], &m[2][2]))
        .sub(&m[0][1].mul(&minor(&m[1][0], &m[1][2], &m[2][0], &m[2][2])))
        .add(&m[0][2].mul(&minor(&m[1][0], &m[1][1], &m[2][0], &m[2][1])))
}

fn cramer3(m: &[[Q; 3]; 3], rhs: &[Q; 3]) -> [Q; 3] {
    let d = det3(m);
    std::array::from_fn(|col| {
        let mut mc = m.clone();
        for (row, r) in mc.iter_mut().enumerate() {
            r[col] = rhs[row].clone();
        }
        det3(&mc).div(&d)
    })
}

struct ExactInput {
    u: [Q; 3],
    v: [Q; 3],
    zeta: [Q; 3],
    a1: Q,
    a2: Q,
    b1: Q,
    b2: Q,
    t: Q,
}

fn exact_cj(x: &ExactInput) -> [Q; 3] {
    let half = Q { re: BigRational::new(BigInt::one(), BigInt::from(2)), im: BigRational::zero() };
    std::array::from_fn(|j| {
        let mut acc = Q::int(0);
        for k in 0..3 {
            if k != j {
                let term = x.zeta[k].sub(&x.zeta[j]).mul(&half).mul(&x.v[j].add(&x.v[k])).div(&x.u[j].sub(&x.u[k]));
                acc = acc.add(&term);
            }
        }
        let num = x
            .a1
            .add(&x.a2.mul(&x.v[j]))
            .sub(&x.zeta[j].mul(&x.b1.add(&x.b2.mul(&x.v[j]))))
            .sub(&x.zeta[j].mul(&x.zeta[j]));
        acc.add(&num.div(&x.u[j].sub(&x.t)))
    })
}

/// Dyadic complex numbers, exactly representable as `f64`.
fn dyadic() -> impl Strategy<Value = Complex> {
    (-512i32..512, -512i32..512).prop_map(|(a, b)| c(a as f64 / 128.0, b as f64 / 128.0))
}

fn close(a: Complex, b: Complex, rel: f64) -> bool {
    (a - b).norm() <= rel * b.norm().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn apparency_system_matches_exact_cramer(
        u in prop::array::uniform3(dyadic()),
        v in prop::array::uniform3(dyadic()),
        zeta in prop::array::uniform3(dyadic()),
        params in prop::array::uniform4(dyadic()),
        t in dyadic(),
    ) {
        for j in 0..3 {
            prop_assume!((u[j] - t).norm() > 0.05);
            for k in j + 1..3 {
                prop_assume!((u[j] - u[k]).norm() > 0.05);
            }
        }
        let points = std::array::from_fn(|j| ApparentPoint { u: u[j], v: v[j], zeta: zeta[j] });
        let config = ApparentConfig { points };
        prop_assume!(stability_det(&config).norm() > 1e-2);
        let rp = ResidueParams { a1: params[0], a2: params[1], b1: params[2], b2: params[3] };

        let ex = ExactInput {
            u: u.map(Q::from_f64),
            v: v.map(Q::from_f64),
            zeta: zeta.map(Q::from_f64),
            a1: Q::from_f64(params[0]),
            a2: Q::from_f64(params[1]),
            b1: Q::from_f64(params[2]),
            b2: Q::from_f64(params[3]),
            t: Q::from_f64(t),
        };
        let cj_exact = exact_cj(&ex);
        let cj = compute_cj(&config, &rp, t);
        let scale = cj_exact.iter().map(|z| z.to_f64().norm()).fold(1.0, f64::max);
        for j in 0..3 {
            prop_assert!((cj[j] - cj_exact[j].to_f64()).norm() <= 1e-12 * scale);
        }

        let m: [[Q; 3]; 3] = std::array::from_fn(|j| [Q::int(1), ex.u[j].clone(), Q::int(0).sub(&ex.zeta[j])]);
        let rhs: [Q; 3] = std::array::from_fn(|j| Q::int(0).sub(&cj_exact[j]));
        let exact = cramer3(&m, &rhs);
        let got = solve_apparency_system(&config, &cj).unwrap();
        let sol_scale = exact.iter().map(|z| z.to_f64().norm()).fold(1.0, f64::max);
        let cond = 1.0 / stability_det(&config).norm();
        for k in 0..3 {
            prop_assert!((got[k] - exact[k].to_f64()).norm() <= 1e-11 * sol_scale * cond.max(1.0));
        }
    }

    #[test]
    fn residues_of_companion_entries_sum_to_zero(seed in 0u64..10_000, irregular in any::<bool>()) {
        let inst = if irregular { sample::irregular_batch(seed, 1) } else { sample::logarithmic_batch(seed, 1) }.remove(0);
        let form = build_companion(&inst.curve, &inst.spectral, &inst.config).unwrap();
        for entry in [&form.omega12, &form.omega21, &form.omega22] {
            let mut total = cr(0.0);
            let mut scale: f64 = 1.0;
            for p in inst.curve.pole_candidates(entry) {
                let r = inst.curve.form_residue(entry, &p).unwrap();
                scale = scale.max(r.norm());
                total += r;
            }
            prop_assert!(total.norm() < 1e-9 * scale, "residue sum {total}");
        }
    }
}

#[test]
fn residue_of_omega22_at_apparent_points_and_infinity() {
    use darboux_conn::curve::CurvePoint;
    for inst in sample::logarithmic_batch(41, 10) {
        let form = build_companion(&inst.curve, &inst.spectral, &inst.config).unwrap();
        for j in 0..3 {
            let r = inst.curve.form_residue(&form.omega22, &inst.config.point(j)).unwrap();
            assert!((r - 1.0).norm() < 1e-10);
        }
        let r = inst.curve.form_residue(&form.omega22, &CurvePoint::infinity()).unwrap();
        assert!((r + 2.0).norm() < 1e-10);
    }
}

#[test]
fn coordinates_do_not_depend_on_the_window() {
    for inst in sample::logarithmic_batch(5, 5).into_iter().chain(sample::irregular_batch(6, 5)) {
        let at = |w| {
            let opts = AtlasOptions { window: w, ..AtlasOptions::default() };
            forward_map_with(&inst.curve, &inst.spectral, &inst.config, &opts).unwrap()
        };
        let (a, b) = (at(8), at(16));
        for (x, y) in a.points.iter().zip(&b.points) {
            assert!((x.p - y.p).norm() <= 1e-12 * y.p.norm().max(1.0));
        }
    }
}

#[test]
fn apparency_holds_for_every_window() {
    let inst = &sample::irregular_batch(8, 1)[0];
    for w in [6, 10, 14, 20] {
        let form = build_companion_with(&inst.curve, &inst.spectral, &inst.config, w).unwrap();
        let rep = darboux_conn::companion::verify_apparency_with(&form, w).unwrap();
        assert!(rep.pass, "window {w}: {rep:?}");
    }
}

/// `dp_j/dzeta_j = 1/((u_j - t) v_j) + (dB3/dzeta_j)/v_j`, with `dB3/dzeta_j`
/// from differentiating the apparency system.
#[test]
fn p_slope_in_zeta_matches_differentiated_cramer() {
    for inst in sample::logarithmic_batch(13, 4).into_iter().chain(sample::irregular_batch(14, 4)) {
        let form = build_companion(&inst.curve, &inst.spectral, &inst.config).unwrap();
        let t = inst.spectral.t();
        let pts = inst.config.points;
        let prm = &form.params;
        let x = [form.a3, form.a4, form.b3];
        for j in 0..3 {
            // d/dzeta_j of M x = -C: M x' = -C' - M' x
            let mut rhs = vec![cr(0.0); 3];
            for (k, r) in rhs.iter_mut().enumerate() {
                let dc = if k == j {
                    let mut s = -(prm.b1 + prm.b2 * pts[j].v + 2.0 * pts[j].zeta) / (pts[j].u - t);
                    for (m, q) in pts.iter().enumerate() {
                        if m != j {
                            s -= 0.5 * (pts[j].v + q.v) / (pts[j].u - q.u);
                        }
                    }
                    s
                } else {
                    0.5 * (pts[k].v + pts[j].v) / (pts[k].u - pts[j].u)
                };
                let dm_x = if k == j { -x[2] } else { cr(0.0) };
                *r = -dc - dm_x;
            }
            let m = pts.iter().map(|p| vec![cr(1.0), p.u, -p.zeta]).collect();
            let dx = solve_linear(&LinearSystem::new(m, rhs).unwrap()).unwrap();
            let analytic = 1.0 / ((pts[j].u - t) * pts[j].v) + dx[2] / pts[j].v;

            let h = 1e-5;
            let p_at = |s: f64| {
                let mut cfg = inst.config.clone();
                cfg.points[j].zeta += cr(s);
                p_closed_form(&build_companion(&inst.curve, &inst.spectral, &cfg).unwrap())[j]
            };
            let fd = (p_at(h) - p_at(-h)) / (2.0 * h);
            assert!(close(fd, analytic, 1e-6), "{fd} vs {analytic}");
        }
    }
}

#[test]
fn canonical_coordinates_scale_inversely_with_the_local_coordinate() {
    let inst = &sample::logarithmic_batch(2, 1)[0];
    let form = build_companion(&inst.curve, &inst.spectral, &inst.config).unwrap();
    let (atlas, _) = build_atlas_with(&form, &AtlasOptions::default()).unwrap();
    let coords = canonical_coordinates(&atlas).unwrap();
    let s = c(2.0, -0.5);
    for (scaled, pt) in coords.in_rescaled_coordinate(s).iter().zip(&coords.points) {
        assert!(close(*scaled * s, pt.p, 1e-15));
    }
}

#[test]
fn collinear_zeta_is_rejected() {
    let inst = &sample::logarithmic_batch(3, 1)[0];
    let mut cfg = inst.config.clone();
    let (a, b) = (c(0.2, 0.1), c(-0.4, 0.3));
    for p in &mut cfg.points {
        p.zeta = a + b * p.u;
    }
    assert!(stability_det(&cfg).norm() < 1e-12);
    assert!(matches!(build_companion(&inst.curve, &inst.spectral, &cfg), Err(CompanionError::NearSingular { .. })));
}
