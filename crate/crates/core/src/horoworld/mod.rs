//! Horoballs, invariant horoball collections, and the excursion of a geodesic
//! through a horoball.

mod bfs;
pub mod frame;
mod march;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{big_ln_abs, ProjPoint};
use crate::hypgeom::{BoundaryPoint, Geodesic, InteriorPoint, Isometry, Shape, DEFAULT_DELTA};
use crate::lattice::{GroupElement, GroupPreset, PresetKind};

pub use frame::{busemann, ExactGeodesic};
pub(crate) use frame::Domain;

/// Normalized discriminants at or below this count as tangency.
pub const TANGENCY_TOL: f64 = 1e-9;

/// Default excursion cutoff.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Default height of the horoball at ∞ for the preset lattices.
pub const DEFAULT_CUSP_HEIGHT: f64 = 1.2;

/// A horoball of the upper half-space.
///
/// `log_size` is the logarithm of the Euclidean diameter for a finite base,
/// or of the height of the bounding horosphere for base ∞. Logarithms keep
/// horoballs met deep along long geodesics representable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Horoball {
    pub base: BoundaryPoint,
    pub log_size: f64,
    pub cusp_id: u32,
    /// Exact cusp point `g·∞` for horoballs `g·H∞` of a lattice collection;
    /// identifies the coset `g·Stab(∞)` that produced the horoball.
    pub cusp_point: Option<ProjPoint>,
}

impl Horoball {
    /// The half-space `{y > height}`.
    pub fn at_infinity(height: f64) -> Horoball {
        Horoball {
            base: BoundaryPoint::Infinity,
            log_size: height.ln(),
            cusp_id: 0,
            cusp_point: None,
        }
    }

    /// Euclidean ball of the given diameter tangent to the boundary at `base`.
    pub fn finite(base: Complex64, diameter: f64) -> Horoball {
        Horoball {
            base: BoundaryPoint::Finite(base),
            log_size: diameter.ln(),
            cusp_id: 0,
            cusp_point: None,
        }
    }

    /// The horoball `g·H∞(h)` of the lattice collection with cusp point
    /// `[p : q] = g·∞` (a primitive vector).
    pub fn from_cusp_point(cusp: &ProjPoint, h: f64) -> Horoball {
        let key = cusp.normalized();
        let (base, log_size) = if key.w.is_zero() {
            (BoundaryPoint::Infinity, h.ln())
        } else {
            (key.to_boundary(), -2.0 * ln_abs_gauss(&key.w) - h.ln())
        };
        Horoball {
            base,
            log_size,
            cusp_id: 0,
            cusp_point: Some(key),
        }
    }

    pub fn size(&self) -> f64 {
        self.log_size.exp()
    }

    /// Whether `p` lies in the open horoball.
    pub fn contains(&self, p: &InteriorPoint) -> bool {
        self.depth(p) > 1.0
    }

    /// Height of `p` in the normalized cusp chart of the horoball: `1` on the
    /// horosphere, larger inside.
    pub fn depth(&self, p: &InteriorPoint) -> f64 {
        match self.base {
            BoundaryPoint::Infinity => (p.height.ln() - self.log_size).exp(),
            BoundaryPoint::Finite(b) => {
                let y = p.height;
                let q = (p.horizontal - b).norm_sqr() + y * y;
                (self.log_size + y.ln() - q.ln()).exp()
            }
        }
    }

    /// Image under a float isometry.
    pub fn transformed(&self, g: &Isometry) -> Horoball {
        // Finite bases are conjugated to ∞ by k = [[β, −1], [1, 0]], which
        // sends H∞(1/D) to the ball at β of diameter D.
        let (a, c, log_h) = match self.base {
            BoundaryPoint::Infinity => (g.a, g.c, self.log_size),
            BoundaryPoint::Finite(beta) => (g.a * beta + g.b, g.c * beta + g.d, -self.log_size),
        };
        let (base, log_size) = if c.norm() == 0.0 {
            (BoundaryPoint::Infinity, log_h + 2.0 * a.norm().ln())
        } else {
            (BoundaryPoint::Finite(a / c), -2.0 * c.norm().ln() - log_h)
        };
        Horoball {
            base,
            log_size,
            cusp_id: self.cusp_id,
            cusp_point: None,
        }
    }
}

fn ln_abs_gauss(g: &crate::exact::GaussInt) -> f64 {
    0.5 * big_ln_abs(&g.norm())
}

/// Image of a horoball under a group element. Lattice horoballs are moved
/// exactly through their cusp points; others through the float action.
pub fn horoball_image(g: &GroupElement, h: &Horoball) -> Result<Horoball> {
    if let Some(cusp) = &h.cusp_point {
        // K = log(size) + log|q|² (finite base) or log|p|² − log(height) (base ∞)
        // is invariant under the exact action on the cusp vector.
        let k = match h.base {
            BoundaryPoint::Infinity => 2.0 * ln_abs_gauss(&cusp.z) - h.log_size,
            BoundaryPoint::Finite(_) => h.log_size + 2.0 * ln_abs_gauss(&cusp.w),
        };
        let v = g.apply_proj(cusp);
        let mut out = Horoball::from_cusp_point(&v, 1.0);
        let key = out.cusp_point.clone().expect("cusp point");
        out.log_size = if key.w.is_zero() {
            2.0 * ln_abs_gauss(&key.z) - k
        } else {
            k - 2.0 * ln_abs_gauss(&key.w)
        };
        out.cusp_id = h.cusp_id;
        return Ok(out);
    }
    Ok(h.transformed(&g.to_isometry()?))
}

/// One crossing of a geodesic through a horoball.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcursionRecord {
    pub horoball: Horoball,
    pub t_entry: f64,
    pub t_exit: f64,
    pub chord: f64,
    pub excursion: f64,
    pub midpoint_time: f64,
}

impl ExcursionRecord {
    pub fn new(horoball: Horoball, t_entry: f64, t_exit: f64) -> Self {
        let chord = (t_exit - t_entry).max(0.0);
        ExcursionRecord {
            horoball,
            t_entry,
            t_exit,
            chord,
            excursion: excursion_from_chord(chord),
            midpoint_time: 0.5 * (t_entry + t_exit),
        }
    }
}

/// Intrinsic horospherical distance between two horosphere points at
/// hyperbolic distance `chord`.
pub fn excursion_from_chord(chord: f64) -> f64 {
    2.0 * (chord / 2.0).sinh()
}

/// Entry and exit times of `γ` in the open horoball `H`, or `None` when they
/// are disjoint or tangent.
pub fn geodesic_horoball_intersection(
    geo: &Geodesic,
    h: &Horoball,
) -> Result<Option<(f64, f64)>> {
    if frame::boundary_eq(&geo.forward, &h.base) || frame::boundary_eq(&geo.backward, &h.base) {
        return Err(Error::EndpointInHoroballClosure);
    }
    let size = h.size();
    match (geo.shape(), h.base) {
        (Shape::Vertical { .. }, BoundaryPoint::Infinity) => unreachable!("endpoint check"),
        (Shape::Vertical { base, up, ln_y0 }, BoundaryPoint::Finite(beta)) => {
            // y² − D y + |b − β|² < 0
            let m = (base - beta).norm_sqr();
            let disc = size * size - 4.0 * m;
            if disc <= TANGENCY_TOL * size * size {
                return Ok(None);
            }
            let sq = disc.sqrt();
            let y_hi = 0.5 * (size + sq);
            let y_lo = 2.0 * m / (size + sq);
            let (l_lo, l_hi) = (y_lo.ln() - ln_y0, y_hi.ln() - ln_y0);
            Ok(Some(if up { (l_lo, l_hi) } else { (-l_hi, -l_lo) }))
        }
        (Shape::Arc { back, fwd, tau0 }, base) => {
            // With w = e^τ the crossing is a quadratic inequality
            // A w² − 2 D R w + B < 0.
            let r = 0.5 * (fwd - back).norm();
            let (a, b, dr) = match base {
                BoundaryPoint::Infinity => (size, size, r),
                BoundaryPoint::Finite(beta) => {
                    ((fwd - beta).norm_sqr(), (back - beta).norm_sqr(), size * r)
                }
            };
            let disc = dr * dr - a * b;
            if disc <= TANGENCY_TOL * dr * dr {
                return Ok(None);
            }
            let sq = disc.sqrt();
            let w_lo = b / (dr + sq);
            let chord = 2.0 * (sq / dr).atanh();
            let t1 = w_lo.ln() - tau0;
            Ok(Some((t1, t1 + chord)))
        }
    }
}

/// `E(γ, H) = 2 sinh(ℓ/2)` for chord length `ℓ`; zero when disjoint.
pub fn excursion(geo: &Geodesic, h: &Horoball) -> Result<f64> {
    Ok(geodesic_horoball_intersection(geo, h)?
        .map(|(t1, t2)| excursion_from_chord(t2 - t1))
        .unwrap_or(0.0))
}

/// Which horoballs a collection holds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CollectionSource {
    /// The orbit `Γ·H∞(h)` of a lattice with one cusp at ∞.
    Lattice(GroupPreset),
    /// A finite explicit list (toy configurations).
    Explicit(Vec<Horoball>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HoroballCollection {
    pub source: CollectionSource,
    /// Height of the representative horoball at ∞ (lattice collections).
    pub height: f64,
    pub separation: f64,
}

impl HoroballCollection {
    /// `Γ·H∞(h)`; fails if the horoballs overlap.
    pub fn lattice(preset: GroupPreset, h: f64) -> Result<Self> {
        let mut c = HoroballCollection {
            source: CollectionSource::Lattice(preset),
            height: h,
            separation: 0.0,
        };
        c.separation = min_separation(&c)?;
        c.warn_if_close();
        Ok(c)
    }

    pub fn preset(name: &str, h: f64) -> Result<Self> {
        HoroballCollection::lattice(crate::lattice::preset(name)?, h)
    }

    pub fn explicit(horoballs: Vec<Horoball>) -> Result<Self> {
        let mut c = HoroballCollection {
            source: CollectionSource::Explicit(horoballs),
            height: f64::NAN,
            separation: 0.0,
        };
        c.separation = min_separation(&c)?;
        Ok(c)
    }

    fn warn_if_close(&self) {
        if self.separation <= 4.0 * DEFAULT_DELTA {
            log::warn!(
                "horoball separation {:.4} is at most 4δ = {:.4}",
                self.separation,
                4.0 * DEFAULT_DELTA
            );
        }
    }

    pub fn dimension(&self) -> usize {
        match &self.source {
            CollectionSource::Lattice(p) => p.dimension(),
            CollectionSource::Explicit(hs) => {
                let complex = hs.iter().any(|h| {
                    h.base
                        .finite()
                        .map(|b| b.im != 0.0)
                        .unwrap_or(false)
                });
                if complex {
                    3
                } else {
                    2
                }
            }
        }
    }

    pub(crate) fn domain(&self) -> Result<Domain> {
        match &self.source {
            CollectionSource::Lattice(p) => match p.kind {
                PresetKind::Psl2Z => Ok(Domain { bianchi: false }),
                PresetKind::Psl2Zi => Ok(Domain { bianchi: true }),
                PresetKind::Custom => Err(Error::UnsupportedCollection),
            },
            CollectionSource::Explicit(_) => Err(Error::UnsupportedCollection),
        }
    }

    /// The horoball of the collection containing `p`, if any.
    pub fn containing(&self, p: &InteriorPoint) -> Result<Option<Horoball>> {
        match &self.source {
            CollectionSource::Explicit(hs) => Ok(hs.iter().find(|h| h.contains(p)).cloned()),
            CollectionSource::Lattice(_) => {
                let d = self.domain()?;
                let (r, q) = d.reduce(p)?;
                if q.height <= self.height {
                    return Ok(None);
                }
                let g = r.inverse();
                Ok(Some(Horoball::from_cusp_point(&g.image_of_infinity(), self.height)))
            }
        }
    }

    /// Normalized chart height `x₁` of `p` in its horoball, or `None` in the thick part.
    pub fn depth(&self, p: &InteriorPoint) -> Result<Option<f64>> {
        match &self.source {
            CollectionSource::Explicit(hs) => Ok(hs
                .iter()
                .find(|h| h.contains(p))
                .map(|h| h.depth(p))),
            CollectionSource::Lattice(_) => {
                let (_, q) = self.domain()?.reduce(p)?;
                Ok((q.height > self.height).then_some(q.height / self.height))
            }
        }
    }
}

/// Minimal distance between distinct horoballs of the collection.
pub fn min_separation(c: &HoroballCollection) -> Result<f64> {
    match &c.source {
        CollectionSource::Lattice(_) => {
            let h = c.height;
            if !(h >= 1.0) {
                return Err(Error::NotDisjoint(h));
            }
            Ok(2.0 * h.ln())
        }
        CollectionSource::Explicit(hs) => {
            let mut best = f64::INFINITY;
            for (i, a) in hs.iter().enumerate() {
                for b in &hs[i + 1..] {
                    best = best.min(horoball_distance(a, b));
                }
            }
            if best < 0.0 {
                return Err(Error::NotDisjoint(best));
            }
            Ok(best)
        }
    }
}

/// Signed distance between two horoballs (negative when they overlap).
pub fn horoball_distance(a: &Horoball, b: &Horoball) -> f64 {
    match (a.base, b.base) {
        (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => f64::NEG_INFINITY,
        (BoundaryPoint::Infinity, BoundaryPoint::Finite(_)) => a.log_size - b.log_size,
        (BoundaryPoint::Finite(_), BoundaryPoint::Infinity) => b.log_size - a.log_size,
        (BoundaryPoint::Finite(x), BoundaryPoint::Finite(y)) => {
            2.0 * (x - y).norm().ln() - a.log_size - b.log_size
        }
    }
}

/// Enumeration strategy for lattice collections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    /// Follows the geodesic tile by tile, reducing into the fundamental
    /// domain with nearest-(Gaussian-)integer steps.
    #[default]
    Cf,
    /// Breadth-first search over the tiles meeting the segment.
    Bfs,
}

impl FromStr for Backend {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cf" => Ok(Backend::Cf),
            "bfs" => Ok(Backend::Bfs),
            _ => Err(Error::InvalidArgument(format!("unknown backend `{s}`"))),
        }
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Backend::Cf => "cf",
            Backend::Bfs => "bfs",
        })
    }
}

/// Every horoball whose chord meets `[t_a, t_b]`, with its full chord, sorted
/// by midpoint time. No cutoff and no endpoint restrictions.
pub fn crossings(
    ray: &ExactGeodesic,
    t_a: f64,
    t_b: f64,
    collection: &HoroballCollection,
    backend: Backend,
) -> Result<Vec<ExcursionRecord>> {
    if t_b < t_a {
        return Ok(Vec::new());
    }
    let mut out = match &collection.source {
        CollectionSource::Explicit(hs) => {
            let geo = ray.geodesic()?;
            let mut v = Vec::new();
            for h in hs {
                if let Some((t1, t2)) = geodesic_horoball_intersection(&geo, h)? {
                    if t2 >= t_a && t1 <= t_b {
                        v.push(ExcursionRecord::new(h.clone(), t1, t2));
                    }
                }
            }
            v
        }
        CollectionSource::Lattice(_) => {
            let domain = collection.domain()?;
            match backend {
                Backend::Cf => march::crossings(ray, t_a, t_b, domain, collection.height)?,
                Backend::Bfs => bfs::crossings(ray, t_a, t_b, domain, collection.height)?,
            }
        }
    };
    out.sort_by(|a, b| a.midpoint_time.total_cmp(&b.midpoint_time));
    Ok(out)
}

/// Horoballs with midpoint time in `[0, t]` and excursion at least `eps`,
/// sorted by midpoint time. Fails if `γ(0)` or `γ(t)` lies inside a horoball.
pub fn enumerate_horoballs(
    ray: &ExactGeodesic,
    t: f64,
    eps: f64,
    collection: &HoroballCollection,
    backend: Backend,
) -> Result<Vec<ExcursionRecord>> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("cutoff must be positive, got {eps}")));
    }
    if t <= 0.0 {
        return Ok(Vec::new());
    }
    let all = crossings(ray, 0.0, t, collection, backend)?;
    if let Some(r) = all
        .iter()
        .find(|r| (r.t_entry < 0.0 && r.t_exit > 0.0) || (r.t_entry < t && r.t_exit > t))
    {
        let time = if r.t_entry < 0.0 && r.t_exit > 0.0 { 0.0 } else { t };
        return Err(Error::WindowEndpointInHoroball {
            time,
            exit_time: r.t_exit,
        });
    }
    Ok(all
        .into_iter()
        .filter(|r| r.midpoint_time >= 0.0 && r.midpoint_time <= t && r.excursion >= eps)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypgeom::{geodesic_between, hyp_distance, mobius_apply_interior};

    fn unit_semicircle() -> Geodesic {
        geodesic_between(
            BoundaryPoint::real(-1.0),
            BoundaryPoint::real(1.0),
            &InteriorPoint::origin(),
        )
        .unwrap()
    }

    #[test]
    fn semicircle_through_half_height() {
        let geo = unit_semicircle();
        let h = Horoball::at_infinity(0.5);
        let (t1, t2) = geodesic_horoball_intersection(&geo, &h).unwrap().unwrap();
        let p1 = geo.point(t1);
        let p2 = geo.point(t2);
        assert!((p1.height - 0.5).abs() < 1e-12 && (p2.height - 0.5).abs() < 1e-12);
        assert!((p1.horizontal.re + 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!(((t2 - t1).cosh() - 7.0).abs() < 1e-10);
        assert!((hyp_distance(&p1, &p2) - 7f64.acosh()).abs() < 1e-10);
        let e = excursion(&geo, &h).unwrap();
        assert!((e - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        // Flat horosphere metric at height 1/2.
        assert!((e - (p2.horizontal - p1.horizontal).norm() / 0.5).abs() < 1e-10);
        assert_eq!(
            geodesic_horoball_intersection(&geo, &Horoball::at_infinity(2.0)).unwrap(),
            None
        );
        assert_eq!(excursion(&geo, &Horoball::at_infinity(1.0)).unwrap(), 0.0);
    }

    #[test]
    fn endpoint_at_base_is_rejected() {
        let geo = geodesic_between(
            BoundaryPoint::real(0.0),
            BoundaryPoint::Infinity,
            &InteriorPoint::origin(),
        )
        .unwrap();
        assert_eq!(
            geodesic_horoball_intersection(&geo, &Horoball::finite(Complex64::new(0.0, 0.0), 1.0)),
            Err(Error::EndpointInHoroballClosure)
        );
    }

    #[test]
    fn vertical_geodesic_through_ball() {
        let geo = geodesic_between(
            BoundaryPoint::real(0.3),
            BoundaryPoint::Infinity,
            &InteriorPoint::origin(),
        )
        .unwrap();
        let h = Horoball::finite(Complex64::new(0.0, 0.0), 1.0);
        let (t1, t2) = geodesic_horoball_intersection(&geo, &h).unwrap().unwrap();
        for (t, inside) in [(t1 - 1e-6, false), (t1 + 1e-6, true), (t2 - 1e-6, true), (t2 + 1e-6, false)] {
            assert_eq!(h.contains(&geo.point(t)), inside);
        }
        let down = geodesic_between(
            BoundaryPoint::Infinity,
            BoundaryPoint::real(0.3),
            &InteriorPoint::origin(),
        )
        .unwrap();
        let (s1, s2) = geodesic_horoball_intersection(&down, &h).unwrap().unwrap();
        assert!(((s2 - s1) - (t2 - t1)).abs() < 1e-12);
        assert!(h.contains(&down.point(0.5 * (s1 + s2))));
    }

    #[test]
    fn images_of_the_horoball_at_infinity() {
        let h = Horoball::at_infinity(1.0);
        let id = GroupElement::identity();
        assert_eq!(horoball_image(&id, &h).unwrap(), h);
        let t = horoball_image(&GroupElement::t(), &h).unwrap();
        assert_eq!(t.base, BoundaryPoint::Infinity);
        assert!(t.log_size.abs() < 1e-15);
        let s = horoball_image(&GroupElement::s(), &h).unwrap();
        assert_eq!(s.base, BoundaryPoint::real(0.0));
        assert!((s.size() - 1.0).abs() < 1e-15);
        // Sampled horosphere points map onto the claimed sphere.
        let iso = GroupElement::s().to_isometry().unwrap();
        for k in 0..20 {
            let p = InteriorPoint::h2(-5.0 + 0.5 * k as f64, 1.0);
            let q = mobius_apply_interior(&iso, &p);
            assert!((s.depth(&q) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_and_float_images_agree() {
        let g = GroupElement::t()
            .pow(2)
            .multiply(&GroupElement::s())
            .multiply(&GroupElement::t().pow(-3))
            .multiply(&GroupElement::s());
        let lattice_ball = Horoball::from_cusp_point(&ProjPoint::infinity(), 1.2);
        let a = horoball_image(&g, &lattice_ball).unwrap();
        let b = Horoball::at_infinity(1.2).transformed(&g.to_isometry().unwrap());
        assert!(a.base.chordal_distance(&b.base) < 1e-14);
        assert!((a.log_size - b.log_size).abs() < 1e-12);
        let h2 = horoball_image(&GroupElement::s(), &a).unwrap();
        let b2 = b.transformed(&GroupElement::s().to_isometry().unwrap());
        assert!(h2.base.chordal_distance(&b2.base) < 1e-12);
        assert!((h2.log_size - b2.log_size).abs() < 1e-10);
    }

    #[test]
    fn separations() {
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(
            min_separation(&HoroballCollection::preset("psl2z", 1.0).unwrap()).unwrap(),
            0.0
        ));
        let c = HoroballCollection::preset("psl2z", 1.2).unwrap();
        assert!(close(c.separation, 2.0 * 1.2f64.ln()));
        // Direct minimization between H∞(1.2) and its S-image along x = 0.
        let lower = Horoball::at_infinity(1.2).transformed(&GroupElement::s().to_isometry().unwrap());
        let top = InteriorPoint::h2(0.0, lower.size());
        let d = hyp_distance(&top, &InteriorPoint::h2(0.0, 1.2));
        assert!((d - 0.3646431135879093).abs() < 1e-12);
        assert_eq!(
            HoroballCollection::preset("psl2z", 0.9),
            Err(Error::NotDisjoint(0.9))
        );
    }
}
