//! Exact geodesics, the fundamental-domain tiles they cross, and the frames
//! used to follow them far into the tiling without losing precision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{GaussInt, ProjPoint};
use crate::hypgeom::{BoundaryPoint, Geodesic, InteriorPoint, Shape};
use crate::lattice::GroupElement;

/// `log(y / (|α′z − α|² + |α′|²y²))` for the homogeneous vector `v = [α : α′]`.
///
/// Satisfies `B(g·v, g·p) = B(v, p)` for unit-determinant `g` when `g·v` is
/// the exact matrix-vector product.
pub fn busemann(v: &ProjPoint, p: &InteriorPoint) -> f64 {
    let (alpha, alpha_p, shift) = v.scaled();
    let y = p.height;
    let q = (alpha_p * p.horizontal - alpha).norm_sqr() + alpha_p.norm_sqr() * y * y;
    y.ln() - q.ln() - 2.0 * shift as f64 * std::f64::consts::LN_2
}

/// A geodesic with exact endpoints and a fixed unit-speed time function.
///
/// The time of a point is `(B(v₊, p) − B(v₋, p))/2 + offset`, which is the
/// time of its closest point projection; `offset` puts the anchor's
/// projection at time 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExactGeodesic {
    pub backward: ProjPoint,
    pub forward: ProjPoint,
    pub anchor: InteriorPoint,
    offset: f64,
}

impl ExactGeodesic {
    pub fn new(backward: ProjPoint, forward: ProjPoint, anchor: InteriorPoint) -> Result<Self> {
        let cross = &(&backward.z * &forward.w) - &(&backward.w * &forward.z);
        if cross.is_zero() {
            return Err(Error::DegenerateEndpoints(0.0));
        }
        let mut g = ExactGeodesic {
            backward,
            forward,
            anchor,
            offset: 0.0,
        };
        g.offset = -g.raw_time(&g.backward, &g.forward, &anchor);
        Ok(g)
    }

    /// Exact copy of a float geodesic (endpoints read as dyadic rationals),
    /// keeping its time parameterization.
    pub fn from_geodesic(g: &Geodesic) -> Result<Self> {
        let mut e = ExactGeodesic::new(
            ProjPoint::from_boundary(&g.backward),
            ProjPoint::from_boundary(&g.forward),
            g.origin,
        )?;
        e.anchor = g.origin;
        Ok(e)
    }

    fn raw_time(&self, back: &ProjPoint, fwd: &ProjPoint, p: &InteriorPoint) -> f64 {
        0.5 * (busemann(fwd, p) - busemann(back, p))
    }

    /// Time of the projection of `p` onto the geodesic.
    pub fn time_of(&self, p: &InteriorPoint) -> f64 {
        self.raw_time(&self.backward, &self.forward, p) + self.offset
    }

    /// Time of the projection of `g·p`, evaluated in the frame of `g` from the
    /// exact frame endpoints `g⁻¹v∓`.
    pub fn time_in_frame(&self, f_back: &ProjPoint, f_fwd: &ProjPoint, p: &InteriorPoint) -> f64 {
        self.raw_time(f_back, f_fwd, p) + self.offset
    }

    /// Float geodesic in model coordinates with the same time parameterization.
    pub fn geodesic(&self) -> Result<Geodesic> {
        self.frame_geodesic(&self.backward, &self.forward)
    }

    pub fn point(&self, t: f64) -> Result<InteriorPoint> {
        Ok(self.geodesic()?.point(t))
    }

    /// Float geodesic in the frame whose exact endpoints are `f_back`, `f_fwd`,
    /// timed by the exact Busemann functions.
    pub fn frame_geodesic(&self, f_back: &ProjPoint, f_fwd: &ProjPoint) -> Result<Geodesic> {
        let b = f_back.to_boundary();
        let f = f_fwd.to_boundary();
        let g = crate::hypgeom::geodesic_between(b, f, &InteriorPoint::origin())?;
        let q = g.origin;
        Geodesic::anchored(b, f, &q, self.time_in_frame(f_back, f_fwd, &q))
    }

    /// Image under a group element; the anchor moves with it so times are preserved.
    pub fn transformed(&self, g: &GroupElement) -> ExactGeodesic {
        let anchor = g.apply_interior(&self.anchor);
        let backward = g.apply_proj(&self.backward);
        let forward = g.apply_proj(&self.forward);
        let mut out = ExactGeodesic {
            backward,
            forward,
            anchor,
            offset: 0.0,
        };
        out.offset = -out.raw_time(&out.backward, &out.forward, &anchor) + self.time_of(&self.anchor);
        out
    }

    /// Same geodesic with times shifted so that `new(s) = old(s + shift)`.
    pub fn shifted(&self, shift: f64) -> ExactGeodesic {
        ExactGeodesic {
            offset: self.offset - shift,
            ..self.clone()
        }
    }
}

/// Tile `F′ = {|Re z| ≤ ½, (|Im z| ≤ ½,) |z|² + y² ≥ 1}` of the preset lattices.
/// For PSL(2,ℤ[i]) it is the union of two fundamental domains swapped by
/// `A: z ↦ −z`, so tiles are indexed by cosets `g⟨A⟩`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Domain {
    pub bianchi: bool,
}

pub(crate) fn translation(n: &GaussInt) -> GroupElement {
    GroupElement {
        a: GaussInt::one(),
        b: n.clone(),
        c: GaussInt::zero(),
        d: GaussInt::one(),
    }
    .normalized()
}

fn round_half(x: f64) -> i64 {
    x.round() as i64
}

impl Domain {
    #[cfg(test)]
    pub fn contains(&self, p: &InteriorPoint, slack: f64) -> bool {
        let z = p.horizontal;
        z.re.abs() <= 0.5 + slack
            && (!self.bianchi || z.im.abs() <= 0.5 + slack)
            && z.norm_sqr() + p.height * p.height >= 1.0 - slack
    }

    /// Finds `r` with `r·p ∈ F′`; returns `(r, r·p)`.
    pub fn reduce(&self, p: &InteriorPoint) -> Result<(GroupElement, InteriorPoint)> {
        let mut r = GroupElement::identity();
        let mut q = *p;
        let s = GroupElement::s();
        for _ in 0..10_000 {
            let n = GaussInt::new(
                round_half(q.horizontal.re),
                if self.bianchi {
                    round_half(q.horizontal.im)
                } else {
                    0
                },
            );
            if !n.is_zero() {
                q.horizontal -= n.to_complex();
                r = translation(&-&n).multiply(&r);
            }
            let m = q.horizontal.norm_sqr() + q.height * q.height;
            if m < 1.0 - 1e-13 {
                q = InteriorPoint {
                    horizontal: -q.horizontal.conj() / m,
                    height: q.height / m,
                };
                r = s.multiply(&r);
            } else {
                return Ok((r, q));
            }
        }
        Err(Error::NotConverged(format!("reduction of {p:?} into the tile")))
    }

    /// Generators taking a tile to its face neighbours.
    pub fn face_generators(&self) -> Vec<GroupElement> {
        let mut v = vec![GroupElement::t(), GroupElement::t().inverse(), GroupElement::s()];
        if self.bianchi {
            v.push(GroupElement::u());
            v.push(GroupElement::u().inverse());
        }
        v
    }

    /// Canonical representative of the tile `g F′`.
    pub fn tile_key(&self, g: &GroupElement) -> GroupElement {
        if !self.bianchi {
            return g.clone();
        }
        let ga = g.multiply(&GroupElement::a_rot());
        let ord = |h: &GroupElement| {
            [&h.a, &h.b, &h.c, &h.d]
                .iter()
                .flat_map(|e| [e.re.clone(), e.im.clone()])
                .collect::<Vec<_>>()
        };
        if ord(&ga) < ord(g) {
            ga
        } else {
            g.clone()
        }
    }

    /// Bases `n` (in frame coordinates) of the horoballs `T^n S H∞` touching
    /// the tile from below.
    pub fn neighbour_cusps(&self) -> Vec<GaussInt> {
        let range: Vec<i64> = vec![-1, 0, 1];
        let mut out = Vec::new();
        for &a in &range {
            if self.bianchi {
                for &b in &range {
                    out.push(GaussInt::new(a, b));
                }
            } else {
                out.push(GaussInt::real(a));
            }
        }
        out
    }

    /// Time interval during which `geo` lies in `F′` enlarged by `slack`.
    pub fn clip(&self, geo: &Geodesic, slack: f64) -> Option<(f64, f64)> {
        let k_plane = 0.5 + slack;
        let k_floor = 1.0 - slack;
        match geo.shape() {
            Shape::Vertical { base, up, ln_y0 } => {
                if base.re.abs() > k_plane || (self.bianchi && base.im.abs() > k_plane) {
                    return None;
                }
                let rem = k_floor - base.norm_sqr();
                if rem <= 0.0 {
                    return Some((f64::NEG_INFINITY, f64::INFINITY));
                }
                let l = 0.5 * rem.ln() - ln_y0;
                if up {
                    Some((l, f64::INFINITY))
                } else {
                    Some((f64::NEG_INFINITY, -l))
                }
            }
            Shape::Arc { back, fwd, tau0 } => {
                // Each constraint reads f ≤ K with f affine along the geodesic in
                // σ = 1/(e^{2τ}+1): f = (1−σ) f(ξ₊) + σ f(ξ₋).
                let mut cons: Vec<(f64, f64, f64)> = vec![
                    (fwd.re, back.re, k_plane),
                    (-fwd.re, -back.re, k_plane),
                    (-fwd.norm_sqr(), -back.norm_sqr(), -k_floor),
                ];
                if self.bianchi {
                    cons.push((fwd.im, back.im, k_plane));
                    cons.push((-fwd.im, -back.im, k_plane));
                }
                let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
                for (ap, am, k) in cons {
                    let fwd_in = ap <= k;
                    let back_in = am <= k;
                    match (fwd_in, back_in) {
                        (true, true) => {}
                        (false, false) => return None,
                        _ => {
                            let sigma = (ap - k) / (ap - am);
                            let sigma_c = (k - am) / (ap - am);
                            let tau = 0.5 * (sigma_c.ln() - sigma.ln());
                            if fwd_in {
                                lo = lo.max(tau);
                            } else {
                                hi = hi.min(tau);
                            }
                        }
                    }
                }
                if lo > hi {
                    None
                } else {
                    Some((lo - tau0, hi - tau0))
                }
            }
        }
    }
}

pub(crate) fn boundary_eq(a: &BoundaryPoint, b: &BoundaryPoint) -> bool {
    a.chordal_distance(b) < 1e-12
}
