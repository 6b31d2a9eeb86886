//! Seeded random instances on the generic locus, shared by the test suites
//! and the CLI.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::companion::{stability_det, ApparentConfig, ApparentPoint, N_APPARENT};
use crate::curve::LegendreCurve;
use crate::numeric::{c, Complex};
use crate::spectral::{SpectralData, TRoot};

/// Default seed for every seeded procedure.
pub const DEFAULT_SEED: u64 = 20_240_607;

/// Minimum separation between distinguished `x` values in sampled instances.
const SEPARATION: f64 = 0.3;

/// Minimum `|stability_det|` of sampled configurations.
pub const MIN_STABILITY: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct Instance {
    pub curve: LegendreCurve,
    pub spectral: SpectralData,
    pub config: ApparentConfig,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn complex_in(rng: &mut impl Rng, re: (f64, f64), im: (f64, f64)) -> Complex {
    c(rng.gen_range(re.0..re.1), rng.gen_range(im.0..im.1))
}

fn far_from(z: Complex, others: &[Complex], d: f64) -> bool {
    others.iter().all(|o| (z - o).norm() > d)
}

pub fn random_curve(rng: &mut impl Rng) -> LegendreCurve {
    loop {
        let lambda = complex_in(rng, (-2.0, 3.0), (-1.5, 1.5));
        if far_from(lambda, &[c(0.0, 0.0), c(1.0, 0.0)], 0.5) {
            return LegendreCurve::new(lambda).expect("separated from 0 and 1");
        }
    }
}

fn random_theta(rng: &mut impl Rng) -> Complex {
    complex_in(rng, (-0.9, 0.9), (-0.4, 0.4))
}

pub fn random_logarithmic(rng: &mut impl Rng, curve: &LegendreCurve) -> SpectralData {
    loop {
        let t = complex_in(rng, (-2.0, 3.0), (-1.5, 1.5));
        if !far_from(t, &curve.branch_roots(), SEPARATION) {
            continue;
        }
        let s = curve.k(t).sqrt() * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let (a, b, p) = (random_theta(rng), random_theta(rng), random_theta(rng));
        let q = -1.0 - a - b - p;
        if let Ok(d) = SpectralData::logarithmic(curve, t, s, [a, b], [p, q]) {
            return d;
        }
    }
}

pub fn random_irregular(rng: &mut impl Rng, curve: &LegendreCurve) -> SpectralData {
    loop {
        let root = [TRoot::Zero, TRoot::One, TRoot::Lambda][rng.gen_range(0..3)];
        let m2 = [random_theta(rng), random_theta(rng)];
        if let Ok(d) = SpectralData::irregular(curve, root, m2, random_theta(rng)) {
            if (m2[0] - m2[1]).norm() > 0.1 {
                return d;
            }
        }
    }
}

/// Apparent points separated from each other, the branch points and `t`,
/// with `|stability_det| > MIN_STABILITY`.
pub fn random_config(rng: &mut impl Rng, curve: &LegendreCurve, spectral: &SpectralData) -> ApparentConfig {
    loop {
        let mut avoid: Vec<Complex> = curve.branch_roots().to_vec();
        avoid.push(spectral.t());
        let mut points = Vec::with_capacity(N_APPARENT);
        while points.len() < N_APPARENT {
            let u = complex_in(rng, (-2.0, 3.0), (-1.5, 1.5));
            if !far_from(u, &avoid, SEPARATION) {
                continue;
            }
            avoid.push(u);
            let v = curve.k(u).sqrt() * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let zeta = complex_in(rng, (-1.0, 1.0), (-1.0, 1.0));
            points.push(ApparentPoint { u, v, zeta });
        }
        let points: [ApparentPoint; N_APPARENT] = points.try_into().expect("three points");
        if let Ok(cfg) = ApparentConfig::new(curve, spectral, points) {
            if stability_det(&cfg).norm() > MIN_STABILITY {
                return cfg;
            }
        }
    }
}

pub fn logarithmic_instance(rng: &mut impl Rng) -> Instance {
    let curve = random_curve(rng);
    let spectral = random_logarithmic(rng, &curve);
    let config = random_config(rng, &curve, &spectral);
    Instance { curve, spectral, config }
}

pub fn irregular_instance(rng: &mut impl Rng) -> Instance {
    let curve = random_curve(rng);
    let spectral = random_irregular(rng, &curve);
    let config = random_config(rng, &curve, &spectral);
    Instance { curve, spectral, config }
}

/// `count` logarithmic instances from a fixed seed.
pub fn logarithmic_batch(seed: u64, count: usize) -> Vec<Instance> {
    let mut r = rng(seed);
    (0..count).map(|_| logarithmic_instance(&mut r)).collect()
}

pub fn irregular_batch(seed: u64, count: usize) -> Vec<Instance> {
    let mut r = rng(seed);
    (0..count).map(|_| irregular_instance(&mut r)).collect()
}
