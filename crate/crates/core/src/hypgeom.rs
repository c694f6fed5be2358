//! Upper half-space model of ℍ² and ℍ³.
//!
//! A point is `(z; y)` with `z ∈ ℂ` the horizontal coordinate and `y > 0` the
//! height. ℍ² is the slice `Im z = 0`; every formula below preserves it when
//! the inputs lie in it, so both dimensions share one implementation.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default thinness constant of ℍᴺ, `log(1 + √2)`.
pub const DEFAULT_DELTA: f64 = 0.881_373_587_019_543;

/// Tolerance for "lies on" and projection checks in the Euclidean chart.
pub const GEOMETRY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteriorPoint {
    pub horizontal: Complex64,
    pub height: f64,
}

impl InteriorPoint {
    pub fn new(horizontal: Complex64, height: f64) -> Self {
        debug_assert!(height > 0.0, "height must be positive, got {height}");
        InteriorPoint { horizontal, height }
    }

    /// Point of ℍ².
    pub fn h2(x: f64, y: f64) -> Self {
        InteriorPoint::new(Complex64::new(x, 0.0), y)
    }

    /// Point of ℍ³.
    pub fn h3(x1: f64, x2: f64, y: f64) -> Self {
        InteriorPoint::new(Complex64::new(x1, x2), y)
    }

    /// The point `(0; 1)`.
    pub fn origin() -> Self {
        InteriorPoint::h2(0.0, 1.0)
    }

    pub fn is_valid(&self) -> bool {
        self.height > 0.0
            && self.height.is_finite()
            && self.horizontal.re.is_finite()
            && self.horizontal.im.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BoundaryPoint {
    Finite(Complex64),
    Infinity,
}

impl BoundaryPoint {
    pub fn real(x: f64) -> Self {
        BoundaryPoint::Finite(Complex64::new(x, 0.0))
    }

    pub fn finite(&self) -> Option<Complex64> {
        match self {
            BoundaryPoint::Finite(c) => Some(*c),
            BoundaryPoint::Infinity => None,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, BoundaryPoint::Infinity)
    }

    /// Distance in the chordal metric of the Riemann sphere; used to compare
    /// boundary points uniformly, including ∞.
    pub fn chordal_distance(&self, other: &BoundaryPoint) -> f64 {
        match (self, other) {
            (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => 0.0,
            (BoundaryPoint::Finite(a), BoundaryPoint::Infinity)
            | (BoundaryPoint::Infinity, BoundaryPoint::Finite(a)) => {
                2.0 / (1.0 + a.norm_sqr()).sqrt()
            }
            (BoundaryPoint::Finite(a), BoundaryPoint::Finite(b)) => {
                2.0 * (a - b).norm() / ((1.0 + a.norm_sqr()) * (1.0 + b.norm_sqr())).sqrt()
            }
        }
    }
}

/// Orientation-preserving isometry given by a unit-determinant 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Isometry {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl Isometry {
    /// Builds the isometry of `[[a, b], [c, d]]`, rescaling to determinant 1.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() < 1e-300 || !det.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "singular matrix (det = {det})"
            )));
        }
        let s = det.sqrt();
        Ok(Isometry {
            a: a / s,
            b: b / s,
            c: c / s,
            d: d / s,
        })
    }

    /// Real matrix shorthand for ℍ² elements.
    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Result<Self> {
        let r = |x: f64| Complex64::new(x, 0.0);
        Isometry::new(r(a), r(b), r(c), r(d))
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        Isometry {
            a: one,
            b: zero,
            c: zero,
            d: one,
        }
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn compose(&self, o: &Isometry) -> Isometry {
        Isometry {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn inverse(&self) -> Isometry {
        Isometry {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }
}

/// `(aξ + b)/(cξ + d)`, with the pole sent to ∞.
pub fn mobius_apply_boundary(g: &Isometry, xi: &BoundaryPoint) -> BoundaryPoint {
    match xi {
        BoundaryPoint::Infinity => {
            if g.c.norm() == 0.0 {
                BoundaryPoint::Infinity
            } else {
                BoundaryPoint::Finite(g.a / g.c)
            }
        }
        BoundaryPoint::Finite(z) => {
            let den = g.c * z + g.d;
            if den.norm() == 0.0 {
                BoundaryPoint::Infinity
            } else {
                let v = (g.a * z + g.b) / den;
                if v.is_finite() {
                    BoundaryPoint::Finite(v)
                } else {
                    BoundaryPoint::Infinity
                }
            }
        }
    }
}

/// Poincaré extension of the Möbius action to the upper half-space
/// (quaternionic formula).
pub fn mobius_apply_interior(g: &Isometry, p: &InteriorPoint) -> InteriorPoint {
    let z = p.horizontal;
    let y = p.height;
    let cz_d = g.c * z + g.d;
    let den = cz_d.norm_sqr() + g.c.norm_sqr() * y * y;
    let num = (g.a * z + g.b) * cz_d.conj() + g.a * g.c.conj() * (y * y);
    InteriorPoint {
        horizontal: num / den,
        height: y / den,
    }
}

/// Hyperbolic distance, `cosh d = 1 + (|Δz|² + Δy²) / (2 y₁ y₂)`, evaluated
/// through the cancellation-free `asinh` form.
pub fn hyp_distance(p: &InteriorPoint, q: &InteriorPoint) -> f64 {
    let dz = (p.horizontal - q.horizontal).norm_sqr();
    let dy = p.height - q.height;
    let e = (dz + dy * dy).sqrt();
    2.0 * (e / (2.0 * (p.height * q.height).sqrt())).asinh()
}

/// `log(y / (|z − ξ|² + y²))` for finite ξ and `log y` for ξ = ∞: the
/// Busemann function of ξ up to an additive constant.
pub fn horo_height_log(xi: &BoundaryPoint, p: &InteriorPoint) -> f64 {
    match xi {
        BoundaryPoint::Infinity => p.height.ln(),
        BoundaryPoint::Finite(c) => {
            let y = p.height;
            y.ln() - ((p.horizontal - c).norm_sqr() + y * y).ln()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub(crate) enum Shape {
    /// `{base} × ℝ₊`; height `exp(ln_y0 ± t)` with `+` when oriented upward.
    Vertical { base: Complex64, up: bool, ln_y0: f64 },
    /// Semicircle from `back` to `fwd`, at unit speed with apex at `τ = t + tau0 = 0`.
    /// Points are measured from the nearer endpoint to avoid cancellation.
    Arc {
        back: Complex64,
        fwd: Complex64,
        tau0: f64,
    },
}

/// Oriented bi-infinite geodesic with unit-speed parameterization.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    pub backward: BoundaryPoint,
    pub forward: BoundaryPoint,
    /// The point `γ(0)`.
    pub origin: InteriorPoint,
    pub(crate) shape: Shape,
}

/// The geodesic from `backward` to `forward`, with `γ(0)` the closest point
/// projection of `anchor`.
pub fn geodesic_between(
    backward: BoundaryPoint,
    forward: BoundaryPoint,
    anchor: &InteriorPoint,
) -> Result<Geodesic> {
    let sep = backward.chordal_distance(&forward);
    if sep < 1e-12 {
        return Err(Error::DegenerateEndpoints(sep));
    }
    let shape = match (backward, forward) {
        (BoundaryPoint::Finite(b), BoundaryPoint::Infinity) => Shape::Vertical {
            base: b,
            up: true,
            ln_y0: 0.0,
        },
        (BoundaryPoint::Infinity, BoundaryPoint::Finite(f)) => Shape::Vertical {
            base: f,
            up: false,
            ln_y0: 0.0,
        },
        (BoundaryPoint::Finite(b), BoundaryPoint::Finite(f)) => Shape::Arc {
            back: b,
            fwd: f,
            tau0: 0.0,
        },
        (BoundaryPoint::Infinity, BoundaryPoint::Infinity) => unreachable!(),
    };
    let mut g = Geodesic {
        backward,
        forward,
        origin: *anchor,
        shape,
    };
    let t = g.time_of(anchor);
    g = g.reparameterized(t);
    Ok(g)
}

impl Geodesic {
    /// The geodesic from `backward` to `forward` whose time at the projection
    /// of `anchor` equals `anchor_time`.
    pub fn anchored(
        backward: BoundaryPoint,
        forward: BoundaryPoint,
        anchor: &InteriorPoint,
        anchor_time: f64,
    ) -> Result<Geodesic> {
        Ok(geodesic_between(backward, forward, anchor)?.reparameterized(-anchor_time))
    }

    /// Same geodesic with `γ_new(s) = γ(s + shift)`.
    pub fn reparameterized(&self, shift: f64) -> Geodesic {
        let shape = match self.shape {
            Shape::Vertical { base, up, ln_y0 } => Shape::Vertical {
                base,
                up,
                ln_y0: if up { ln_y0 + shift } else { ln_y0 - shift },
            },
            Shape::Arc { back, fwd, tau0 } => Shape::Arc {
                back,
                fwd,
                tau0: tau0 + shift,
            },
        };
        let mut g = Geodesic { shape, ..*self };
        g.origin = g.point(0.0);
        g
    }

    /// Time of the closest point projection of `p`.
    pub fn time_of(&self, p: &InteriorPoint) -> f64 {
        match self.shape {
            Shape::Vertical { base, up, ln_y0 } => {
                let r2 = (p.horizontal - base).norm_sqr() + p.height * p.height;
                let l = 0.5 * r2.ln() - ln_y0;
                if up {
                    l
                } else {
                    -l
                }
            }
            Shape::Arc { tau0, .. } => {
                let tau = 0.5
                    * (horo_height_log(&self.forward, p) - horo_height_log(&self.backward, p));
                tau - tau0
            }
        }
    }

    /// `γ(t)`.
    pub fn point(&self, t: f64) -> InteriorPoint {
        match self.shape {
            Shape::Vertical { base, up, ln_y0 } => {
                let l = if up { ln_y0 + t } else { ln_y0 - t };
                InteriorPoint {
                    horizontal: base,
                    height: l.exp(),
                }
            }
            Shape::Arc { back, fwd, tau0 } => {
                let tau = t + tau0;
                let delta = fwd - back;
                let e = (-2.0 * tau.abs()).exp();
                let s = e / (1.0 + e);
                let horizontal = if tau >= 0.0 {
                    fwd - delta * s
                } else {
                    back + delta * s
                };
                InteriorPoint {
                    horizontal,
                    height: delta.norm() * (-tau.abs()).exp() / (1.0 + e),
                }
            }
        }
    }

    /// Euclidean unit tangent direction `(horizontal, vertical)` at `γ(t)`.
    pub fn direction(&self, t: f64) -> (Complex64, f64) {
        match self.shape {
            Shape::Vertical { up, .. } => (Complex64::new(0.0, 0.0), if up { 1.0 } else { -1.0 }),
            Shape::Arc { back, fwd, tau0 } => {
                let tau = t + tau0;
                let delta = fwd - back;
                (delta / (delta.norm() * tau.cosh()), -tau.tanh())
            }
        }
    }

    /// Image under an isometry, keeping the time parameterization.
    pub fn transformed(&self, g: &Isometry) -> Result<Geodesic> {
        let back = mobius_apply_boundary(g, &self.backward);
        let fwd = mobius_apply_boundary(g, &self.forward);
        let o = mobius_apply_interior(g, &self.origin);
        geodesic_between(back, fwd, &o)
    }

    pub(crate) fn shape(&self) -> Shape {
        self.shape
    }

    /// Checks that `origin` lies on the geodesic within the chart tolerance.
    pub fn origin_on_geodesic(&self) -> bool {
        let q = self.point(0.0);
        (q.horizontal - self.origin.horizontal).norm() <= GEOMETRY_TOL * (1.0 + q.height)
            && (q.height - self.origin.height).abs() <= GEOMETRY_TOL * (1.0 + q.height)
    }
}

/// The geodesic through `p` and `q`, oriented from `p` towards `q`, with
/// `γ(0) = p` and `γ(d(p, q)) = q`.
pub fn geodesic_through(p: &InteriorPoint, q: &InteriorPoint) -> Result<Geodesic> {
    let dz = q.horizontal - p.horizontal;
    let l = dz.norm();
    let scale = p.height.max(q.height);
    if l <= 1e-15 * scale {
        if (q.height - p.height).abs() <= 1e-15 * scale {
            return Err(Error::DegenerateEndpoints(0.0));
        }
        let foot = BoundaryPoint::Finite(p.horizontal);
        return if q.height > p.height {
            geodesic_between(foot, BoundaryPoint::Infinity, p)
        } else {
            geodesic_between(BoundaryPoint::Infinity, foot, p)
        };
    }
    // In the vertical plane through both points, with p over s = 0 and q
    // over s = l, the geodesic is the circle of center c and radius r.
    let u = dz / l;
    let (yp, yq) = (p.height, q.height);
    let c = (l * l + yq * yq - yp * yp) / (2.0 * l);
    let r = c.hypot(yp);
    let (lo, hi) = if c >= 0.0 {
        (-yp * yp / (c + r), c + r)
    } else {
        (c - r, yp * yp / (r - c))
    };
    geodesic_between(
        BoundaryPoint::Finite(p.horizontal + u * lo),
        BoundaryPoint::Finite(p.horizontal + u * hi),
        p,
    )
}

/// `γ(t)`.
pub fn geodesic_point(g: &Geodesic, t: f64) -> InteriorPoint {
    g.point(t)
}

/// Time and location of the point of `γ` nearest to `p`.
pub fn closest_point_projection(p: &InteriorPoint, g: &Geodesic) -> (f64, InteriorPoint) {
    let t = g.time_of(p);
    (t, g.point(t))
}

/// A unit tangent vector, stored as its foot point and Euclidean unit direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub foot: InteriorPoint,
    pub horizontal: Complex64,
    pub vertical: f64,
}

impl TangentVector {
    /// Normalizes the direction to Euclidean length 1.
    pub fn new(foot: InteriorPoint, horizontal: Complex64, vertical: f64) -> Self {
        let n = (horizontal.norm_sqr() + vertical * vertical).sqrt();
        TangentVector {
            foot,
            horizontal: horizontal / n,
            vertical: vertical / n,
        }
    }

    /// Forward endpoint of the geodesic shot along this vector.
    pub fn forward_endpoint(&self) -> BoundaryPoint {
        shoot(&self.foot, self.horizontal, self.vertical)
    }

    pub fn backward_endpoint(&self) -> BoundaryPoint {
        shoot(&self.foot, -self.horizontal, -self.vertical)
    }

    /// The geodesic through the vector, with `γ(0)` its foot point.
    pub fn geodesic(&self) -> Result<Geodesic> {
        geodesic_between(self.backward_endpoint(), self.forward_endpoint(), &self.foot)
    }
}

fn shoot(p: &InteriorPoint, h: Complex64, v: f64) -> BoundaryPoint {
    let vs = h.norm();
    if vs < 1e-15 {
        return if v > 0.0 {
            BoundaryPoint::Infinity
        } else {
            BoundaryPoint::Finite(p.horizontal)
        };
    }
    let u = h / vs;
    // (1 + v)/|h| = |h|/(1 − v); pick the branch without cancellation.
    let reach = if v >= 0.0 { (1.0 + v) / vs } else { vs / (1.0 - v) };
    BoundaryPoint::Finite(p.horizontal + u * (p.height * reach))
}
