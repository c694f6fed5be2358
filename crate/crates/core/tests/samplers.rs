use cuspex::hypgeom::{hyp_distance, BoundaryPoint, InteriorPoint};
use cuspex::lattice::{preset, GroupElement};
use cuspex::samplers::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn chi_square_uniform(us: &[f64], bins: usize) -> f64 {
    let mut counts = vec![0usize; bins];
    for &u in us {
        counts[((u * bins as f64) as usize).min(bins - 1)] += 1;
    }
    let expected = us.len() as f64 / bins as f64;
    counts
        .iter()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum()
}

// Upper 1% point of chi-square with 19 degrees of freedom.
const CHI2_19_99: f64 = 36.191;

#[test]
fn lebesgue_endpoints_follow_the_visual_density() {
    let x2 = InteriorPoint::h2(0.0, 1.0);
    let us: Vec<f64> = (0..10_000)
        .map(|s| {
            let r = sample_lebesgue_direction(&x2, 2, s).unwrap();
            match r.endpoint {
                BoundaryPoint::Finite(z) => 0.5 + z.re.atan() / std::f64::consts::PI,
                BoundaryPoint::Infinity => 1.0,
            }
        })
        .collect();
    let chi = chi_square_uniform(&us, 20);
    assert!(chi < CHI2_19_99, "ℍ² chi-square {chi}");

    // In ℍ³ from (0,0;1): P(|ξ| ≤ r) = r²/(1+r²), argument uniform.
    let x3 = InteriorPoint::h3(0.0, 0.0, 1.0);
    let (mut radial, mut angular) = (Vec::new(), Vec::new());
    for s in 0..10_000 {
        let z = sample_lebesgue_direction(&x3, 3, s).unwrap().endpoint.finite().unwrap();
        let r2 = z.norm_sqr();
        radial.push(r2 / (1.0 + r2));
        angular.push(0.5 + z.arg() / std::f64::consts::TAU);
    }
    let (cr, ca) = (chi_square_uniform(&radial, 20), chi_square_uniform(&angular, 20));
    assert!(cr < CHI2_19_99 && ca < CHI2_19_99, "ℍ³ chi-square {cr} {ca}");
}

#[test]
fn uniform_directions_average_to_zero() {
    let x = InteriorPoint::h3(0.0, 0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 20_000;
    let mut sum = [0.0; 3];
    for _ in 0..n {
        let v = uniform_direction(&x, 3, &mut rng);
        sum[0] += v.horizontal.re;
        sum[1] += v.horizontal.im;
        sum[2] += v.vertical;
    }
    // Each coordinate has variance 1/3; allow 4 standard errors.
    let bound = 4.0 * (1.0 / (3.0 * n as f64)).sqrt();
    assert!(sum.iter().all(|s| (s / n as f64).abs() < bound), "{sum:?}");
}

#[test]
fn random_walk_endpoints_are_distinct_and_reproducible() {
    let mu = StepMeasure::default_for(&preset("psl2z").unwrap()).unwrap();
    let x = InteriorPoint::h2(0.0, 1.0);
    let th = ConvergenceThresholds::default();
    let mut ends = Vec::new();
    for s in 0..100 {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        let r = random_walk_ray(&mu, &x, 20.0, &mut rng, &th).unwrap();
        assert!(r.diagnostics.endpoint_drift < th.endpoint_drift);
        assert!(r.diagnostics.tracking_distance < th.tracking_distance);
        ends.push(r.ray.forward.normalized());
    }
    let mut uniq = ends.clone();
    uniq.sort_by_key(|p| format!("{p}"));
    uniq.dedup();
    assert_eq!(uniq.len(), 100);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let again = random_walk_ray(&mu, &x, 20.0, &mut rng, &th).unwrap();
    assert_eq!(again.ray.forward.normalized(), ends[0]);
}

#[test]
fn random_walk_ray_reaches_requested_depth() {
    let mu = StepMeasure::default_for(&preset("psl2zi").unwrap()).unwrap();
    let x = InteriorPoint::h3(0.0, 0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let r = random_walk_ray(&mu, &x, 200.0, &mut rng, &ConvergenceThresholds::default()).unwrap();
    let g = r.ray.geodesic().unwrap();
    assert!(hyp_distance(&g.point(0.0), &x) < 1e-9);
    // An exact endpoint p/q with ln|q|² ≥ t + margin keeps γ(t) generic.
    assert!(r.diagnostics.bits as f64 * std::f64::consts::LN_2 > 100.0);
}

#[test]
fn drift_examples() {
    let g = GroupElement::from_i64(2, 1, 1, 1).unwrap();
    let l = estimate_drift(&StepMeasure::point_mass(g), 50, 2, 0).unwrap();
    assert!((l - 2.0 * 1.5f64.acosh()).abs() < 1e-9, "{l}");

    let mu = StepMeasure::default_for(&preset("psl2z").unwrap()).unwrap();
    let a = estimate_drift(&mu, 1000, 200, 3).unwrap();
    let b = estimate_drift(&mu, 2000, 200, 3).unwrap();
    assert!(a > 0.0);
    assert!((a - b).abs() / a < 0.05, "{a} {b}");
}

#[test]
fn sublinear_tracking() {
    let g = GroupElement::from_i64(2, 1, 1, 1).unwrap();
    let x = InteriorPoint::h2(0.0, 1.0);
    let path = sample_walk(&StepMeasure::point_mass(g.clone()), 30, 0).unwrap();
    let ray = approx_forward_boundary(&path, &x).unwrap();
    let l = 2.0 * 1.5f64.acosh();
    let series = sublinear_tracking_diagnostic(&path, &ray.ray, &x, l).unwrap();
    for (i, v) in series.iter().enumerate() {
        assert!(v * (i + 1) as f64 <= 1.0, "{i}: {v}");
    }

    let mu = StepMeasure::default_for(&preset("psl2z").unwrap()).unwrap();
    let l = estimate_drift(&mu, 2000, 100, 9).unwrap();
    let mut finals = (Vec::new(), Vec::new());
    for s in 0..20 {
        for (n, out) in [(1000, &mut finals.0), (2000, &mut finals.1)] {
            let path = sample_walk(&mu, n, s).unwrap();
            let ray = approx_forward_boundary(&path, &x).unwrap();
            let series = sublinear_tracking_diagnostic(&path, &ray.ray, &x, l).unwrap();
            out.push(*series.last().unwrap());
        }
    }
    let median = |v: &mut Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let (m1, m2) = (median(&mut finals.0), median(&mut finals.1));
    assert!(m2 < 0.1, "{m2}");
    assert!(m2 <= m1, "{m1} {m2}");
}

#[test]
fn two_sided_shift_identity() {
    let mu = StepMeasure::default_for(&preset("psl2z").unwrap()).unwrap();
    let x = InteriorPoint::h2(0.0, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..20 {
        let path = TwoSidedPath::sample(&mu, 80, 80, &mut rng).unwrap();
        let ray = path.geodesic(&x).unwrap();
        let s = path.projection_times(&ray, &x);
        let geo = ray.geodesic().unwrap();
        for n in [1usize, 5, 17] {
            let shifted = path.shifted(n).unwrap();
            assert_eq!(shifted.position(-(n as i64)), &path.position(n as i64).inverse());
            let ray2 = shifted.geodesic(&x).unwrap();
            let s2 = shifted.projection_times(&ray2, &x);
            let geo2 = ray2.geodesic().unwrap();
            let winv = path.position(n as i64).inverse();
            for j in 0..10 {
                let lhs = geo2.point(s2[j]);
                let rhs = winv.apply_interior(&geo.point(s[n + j]));
                assert!(hyp_distance(&lhs, &rhs) < 1e-6);
                assert!((s2[j] - (s[n + j] - s[n])).abs() < 1e-6);
            }
        }
    }
}

#[test]
fn return_time_tail_is_monotone() {
    let c = cuspex::horoworld::HoroballCollection::preset("psl2z", 1.2).unwrap();
    let mu = StepMeasure::default_for(&preset("psl2z").unwrap()).unwrap();
    let tail = estimate_return_time_tail(&mu, &c, 300, 15, 2).unwrap();
    assert_eq!(tail.tail[0], 1.0);
    assert!(tail.tail.windows(2).all(|w| w[1] <= w[0]));
    assert!(tail.ci.iter().zip(&tail.tail).all(|((lo, hi), p)| lo <= p && p <= hi));
}
