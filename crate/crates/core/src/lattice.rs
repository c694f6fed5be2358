//! Exact elements of PSL(2,ℤ) and PSL(2,ℤ[i]), group presets and word metrics.

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{big_ln_abs, big_to_f64_scaled, GaussInt, ProjPoint};
use crate::excursion::thick_distance;
use crate::horoworld::{Backend, HoroballCollection};
use crate::hypgeom::{BoundaryPoint, InteriorPoint, Isometry};

/// Entries beyond this many bits trip the overflow guard.
pub const DEFAULT_MAX_BITS: u64 = 1 << 22;

/// Projectivized unit-determinant matrix `[[a, b], [c, d]]` over ℤ[i].
///
/// Values are always kept in normal form, so `==` and hashing compare
/// elements of PSL rather than matrices.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupElement {
    pub a: GaussInt,
    pub b: GaussInt,
    pub c: GaussInt,
    pub d: GaussInt,
}

impl fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl GroupElement {
    /// Checked constructor: the determinant must be exactly 1.
    pub fn new(a: GaussInt, b: GaussInt, c: GaussInt, d: GaussInt) -> Result<Self> {
        let det = &(&a * &d) - &(&b * &c);
        if det != GaussInt::one() {
            return Err(Error::InvalidGroup(format!("determinant {det} ≠ 1")));
        }
        Ok(GroupElement { a, b, c, d }.normalized())
    }

    /// Integer matrix shorthand.
    pub fn from_i64(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        GroupElement::new(
            GaussInt::real(a),
            GaussInt::real(b),
            GaussInt::real(c),
            GaussInt::real(d),
        )
    }

    /// Gaussian-integer matrix given as `(re, im)` pairs.
    pub fn from_pairs(e: [(i64, i64); 4]) -> Result<Self> {
        let g = |(r, i): (i64, i64)| GaussInt::new(r, i);
        GroupElement::new(g(e[0]), g(e[1]), g(e[2]), g(e[3]))
    }

    pub fn identity() -> Self {
        GroupElement {
            a: GaussInt::one(),
            b: GaussInt::zero(),
            c: GaussInt::zero(),
            d: GaussInt::one(),
        }
    }

    pub fn s() -> Self {
        GroupElement::from_i64(0, -1, 1, 0).unwrap()
    }

    pub fn t() -> Self {
        GroupElement::from_i64(1, 1, 0, 1).unwrap()
    }

    pub fn u() -> Self {
        GroupElement::from_pairs([(1, 0), (0, 1), (0, 0), (1, 0)]).unwrap()
    }

    pub fn a_rot() -> Self {
        GroupElement::from_pairs([(0, 1), (0, 0), (0, 0), (0, -1)]).unwrap()
    }

    pub fn is_identity(&self) -> bool {
        *self == GroupElement::identity()
    }

    pub fn det(&self) -> GaussInt {
        &(&self.a * &self.d) - &(&self.b * &self.c)
    }

    /// Representative of `{M, −M}` whose first nonzero entry has positive real
    /// part, or zero real part and positive imaginary part.
    pub fn normalized(self) -> Self {
        let lead = [&self.a, &self.b, &self.c, &self.d]
            .into_iter()
            .find(|e| !e.is_zero())
            .expect("zero matrix");
        if lead.is_canonical_sign() {
            self
        } else {
            GroupElement {
                a: -self.a,
                b: -self.b,
                c: -self.c,
                d: -self.d,
            }
        }
    }

    pub fn multiply(&self, o: &GroupElement) -> GroupElement {
        GroupElement {
            a: &(&self.a * &o.a) + &(&self.b * &o.c),
            b: &(&self.a * &o.b) + &(&self.b * &o.d),
            c: &(&self.c * &o.a) + &(&self.d * &o.c),
            d: &(&self.c * &o.b) + &(&self.d * &o.d),
        }
        .normalized()
    }

    /// Product with the overflow guard applied to the result.
    pub fn checked_multiply(&self, o: &GroupElement, max_bits: u64) -> Result<GroupElement> {
        let p = self.multiply(o);
        if p.bits() > max_bits {
            return Err(Error::OverflowGuard(max_bits));
        }
        Ok(p)
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            a: self.d.clone(),
            b: -&self.b,
            c: -&self.c,
            d: self.a.clone(),
        }
        .normalized()
    }

    pub fn pow(&self, n: i64) -> GroupElement {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        (0..n.unsigned_abs()).fold(GroupElement::identity(), |acc, _| acc.multiply(&base))
    }

    pub fn bits(&self) -> u64 {
        [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .map(|e| e.bits())
            .max()
            .unwrap_or(0)
    }

    pub fn is_real(&self) -> bool {
        self.a.is_real() && self.b.is_real() && self.c.is_real() && self.d.is_real()
    }

    pub fn trace(&self) -> GaussInt {
        &self.a + &self.d
    }

    /// Float isometry; fails once entries no longer fit comfortably in a float.
    pub fn to_isometry(&self) -> Result<Isometry> {
        if self.bits() > 500 {
            return Err(Error::OverflowGuard(500));
        }
        Ok(Isometry {
            a: self.a.to_complex(),
            b: self.b.to_complex(),
            c: self.c.to_complex(),
            d: self.d.to_complex(),
        })
    }

    /// Exact action on a projective boundary point.
    pub fn apply_proj(&self, p: &ProjPoint) -> ProjPoint {
        ProjPoint::new(
            &(&self.a * &p.z) + &(&self.b * &p.w),
            &(&self.c * &p.z) + &(&self.d * &p.w),
        )
    }

    /// `g · ∞ = [a : c]`.
    pub fn image_of_infinity(&self) -> ProjPoint {
        ProjPoint::new(self.a.clone(), self.c.clone())
    }

    pub fn apply_boundary(&self, xi: &BoundaryPoint) -> BoundaryPoint {
        self.apply_proj(&ProjPoint::from_boundary(xi)).to_boundary()
    }

    /// `g · p` for interior `p`, returning the horizontal coordinate and the
    /// logarithm of the height so that deep points do not underflow.
    pub fn apply_interior_log(&self, p: &InteriorPoint) -> (Complex64, f64) {
        let shift = (self.bits() as i64 - 60).max(0);
        let f = |g: &GaussInt| {
            Complex64::new(
                big_to_f64_scaled(&g.re, shift),
                big_to_f64_scaled(&g.im, shift),
            )
        };
        let (a, b, c, d) = (f(&self.a), f(&self.b), f(&self.c), f(&self.d));
        let z = p.horizontal;
        let y = p.height;
        let cz_d = c * z + d;
        let den = cz_d.norm_sqr() + c.norm_sqr() * y * y;
        let num = (a * z + b) * cz_d.conj() + a * c.conj() * (y * y);
        let ln_y = y.ln() - den.ln() - 2.0 * shift as f64 * std::f64::consts::LN_2;
        (num / den, ln_y)
    }

    pub fn apply_interior(&self, p: &InteriorPoint) -> InteriorPoint {
        let (z, ln_y) = self.apply_interior_log(p);
        InteriorPoint {
            horizontal: z,
            height: ln_y.exp(),
        }
    }

    /// `log(|a|² + |b|² + |c|² + |d|²)`.
    pub fn ln_frobenius_sq(&self) -> f64 {
        let s: BigInt = [&self.a, &self.b, &self.c, &self.d]
            .iter()
            .map(|e| e.norm())
            .sum();
        big_ln_abs(&s)
    }

    /// Hyperbolic distance from the base point `(0; 1)` to its image:
    /// `cosh d = (|a|² + |b|² + |c|² + |d|²) / 2`.
    pub fn displacement_at_origin(&self) -> f64 {
        let l = self.ln_frobenius_sq() - std::f64::consts::LN_2;
        if l > 30.0 {
            // arccosh(x) = ln(2x) − 1/(4x²) + …
            l + std::f64::consts::LN_2
        } else {
            l.exp().max(1.0).acosh()
        }
    }
}

/// A named generator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub label: String,
    pub element: GroupElement,
}

/// Representative cusp: its parabolic fixed point and stabilizer generators
/// (indices into the generator list).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CuspRep {
    pub fixed_point: ProjPoint,
    pub stabilizer: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PresetKind {
    Psl2Z,
    Psl2Zi,
    Custom,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupPreset {
    pub name: String,
    pub kind: PresetKind,
    pub generators: Vec<Generator>,
    pub cusps: Vec<CuspRep>,
    /// Relators as words in generator labels; each must evaluate to the identity.
    pub relators: Vec<Vec<String>>,
}

/// Built-in lattices `psl2z` and `psl2zi`.
pub fn preset(name: &str) -> Result<GroupPreset> {
    let gen = |l: &str, e: GroupElement| Generator {
        label: l.to_string(),
        element: e,
    };
    let words = |ws: &[&str]| -> Vec<Vec<String>> {
        ws.iter()
            .map(|w| w.chars().map(|c| c.to_string()).collect())
            .collect()
    };
    match name {
        "psl2z" => Ok(GroupPreset {
            name: name.into(),
            kind: PresetKind::Psl2Z,
            generators: vec![gen("S", GroupElement::s()), gen("T", GroupElement::t())],
            cusps: vec![CuspRep {
                fixed_point: ProjPoint::infinity(),
                stabilizer: vec![1],
            }],
            relators: words(&["SS", "STSTST"]),
        }),
        "psl2zi" => Ok(GroupPreset {
            name: name.into(),
            kind: PresetKind::Psl2Zi,
            generators: vec![
                gen("S", GroupElement::s()),
                gen("T", GroupElement::t()),
                gen("U", GroupElement::u()),
                gen("A", GroupElement::a_rot()),
            ],
            cusps: vec![CuspRep {
                fixed_point: ProjPoint::infinity(),
                stabilizer: vec![1, 2],
            }],
            // The commutator TUT⁻¹U⁻¹ is written with t, u for the inverses.
            relators: words(&["SS", "STSTST", "TUtu", "AA", "SASA", "ATAT", "AUAU"]),
        }),
        _ => Err(Error::UnknownPreset(name.to_string())),
    }
}

impl GroupPreset {
    pub fn dimension(&self) -> usize {
        if self.generators.iter().all(|g| g.element.is_real()) {
            2
        } else {
            3
        }
    }

    /// Generator by label; a lowercase label denotes the inverse of the uppercase one.
    pub fn lookup(&self, label: &str) -> Option<GroupElement> {
        if let Some(g) = self.generators.iter().find(|g| g.label == label) {
            return Some(g.element.clone());
        }
        let upper = label.to_uppercase();
        if upper != label {
            return self
                .generators
                .iter()
                .find(|g| g.label == upper)
                .map(|g| g.element.inverse());
        }
        None
    }

    pub fn evaluate(&self, word: &[String]) -> Result<GroupElement> {
        word.iter().try_fold(GroupElement::identity(), |acc, l| {
            let g = self
                .lookup(l)
                .ok_or_else(|| Error::InvalidGroup(format!("unknown generator `{l}`")))?;
            Ok(acc.multiply(&g))
        })
    }

    /// Evaluates every relator; returns `(relator, holds)` pairs.
    pub fn relator_check(&self) -> Result<Vec<(String, bool)>> {
        self.relators
            .iter()
            .map(|w| Ok((w.concat(), self.evaluate(w)?.is_identity())))
            .collect()
    }

    /// Generators together with their inverses, deduplicated.
    pub fn symmetric_generators(&self) -> Vec<GroupElement> {
        let mut out: Vec<GroupElement> = Vec::new();
        for g in &self.generators {
            for e in [g.element.clone(), g.element.inverse()] {
                if !out.contains(&e) {
                    out.push(e);
                }
            }
        }
        out
    }

    /// Validates determinants (by construction) and that each cusp point is a
    /// parabolic fixed point of its stabilizer generators.
    pub fn validate(&self) -> Result<()> {
        if self.generators.is_empty() {
            return Err(Error::InvalidGroup("no generators".into()));
        }
        let two = GaussInt::real(2);
        for cusp in &self.cusps {
            if cusp.stabilizer.is_empty() {
                return Err(Error::InvalidGroup("cusp without stabilizer".into()));
            }
            for &i in &cusp.stabilizer {
                let g = &self
                    .generators
                    .get(i)
                    .ok_or_else(|| Error::InvalidGroup(format!("stabilizer index {i}")))?
                    .element;
                let tr = g.trace();
                if g.is_identity() || (tr != two && tr != -&two) {
                    return Err(Error::InvalidGroup(format!(
                        "generator {i} is not parabolic"
                    )));
                }
                let img = g.apply_proj(&cusp.fixed_point);
                let p = &cusp.fixed_point;
                if &(&img.z * &p.w) - &(&img.w * &p.z) != GaussInt::zero() {
                    return Err(Error::InvalidGroup(format!(
                        "generator {i} does not fix cusp {p}"
                    )));
                }
            }
        }
        for (w, ok) in self.relator_check()? {
            if !ok {
                return Err(Error::InvalidGroup(format!("relator {w} fails")));
            }
        }
        Ok(())
    }

    /// Parses a user-supplied group description (see [`CustomGroupSpec`]).
    pub fn from_json(text: &str) -> Result<GroupPreset> {
        let spec: CustomGroupSpec =
            serde_json::from_str(text).map_err(|e| Error::InvalidGroup(e.to_string()))?;
        spec.build()
    }
}

/// Matrix entry in a custom group file: an integer or an `[re, im]` pair.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum EntrySpec {
    Int(i64),
    Pair([i64; 2]),
}

impl EntrySpec {
    fn value(&self) -> GaussInt {
        match *self {
            EntrySpec::Int(x) => GaussInt::real(x),
            EntrySpec::Pair([r, i]) => GaussInt::new(r, i),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct GeneratorSpec {
    pub label: String,
    pub matrix: [[EntrySpec; 2]; 2],
}

/// Cusp point `[z : w]`; `[1, 0]` is ∞.
#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct CuspSpec {
    pub fixed_point: [EntrySpec; 2],
    pub stabilizer: Vec<usize>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
pub struct CustomGroupSpec {
    pub name: String,
    pub generators: Vec<GeneratorSpec>,
    pub cusps: Vec<CuspSpec>,
    #[serde(default)]
    pub relators: Vec<String>,
}

impl CustomGroupSpec {
    pub fn build(&self) -> Result<GroupPreset> {
        let generators = self
            .generators
            .iter()
            .map(|g| {
                let m = &g.matrix;
                let element = GroupElement::new(
                    m[0][0].value(),
                    m[0][1].value(),
                    m[1][0].value(),
                    m[1][1].value(),
                )
                .map_err(|e| Error::InvalidGroup(format!("generator {}: {e}", g.label)))?;
                Ok(Generator {
                    label: g.label.clone(),
                    element,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let cusps = self
            .cusps
            .iter()
            .map(|c| CuspRep {
                fixed_point: ProjPoint::new(c.fixed_point[0].value(), c.fixed_point[1].value()),
                stabilizer: c.stabilizer.clone(),
            })
            .collect();
        let p = GroupPreset {
            name: self.name.clone(),
            kind: PresetKind::Custom,
            generators,
            cusps,
            relators: self
                .relators
                .iter()
                .map(|w| w.chars().map(|c| c.to_string()).collect())
                .collect(),
        };
        p.validate()?;
        Ok(p)
    }
}

/// Cayley-graph word metric with a memoized, incrementally grown ball.
pub struct WordMetric {
    gens: Vec<GroupElement>,
    state: Mutex<BallState>,
}

struct BallState {
    dist: HashMap<GroupElement, usize>,
    frontier: Vec<GroupElement>,
    radius: usize,
    sizes: Vec<usize>,
}

impl WordMetric {
    /// `gens` must be closed under inversion.
    pub fn new(gens: Vec<GroupElement>) -> Result<Self> {
        let set: HashSet<&GroupElement> = gens.iter().collect();
        if let Some(g) = gens.iter().find(|g| !set.contains(&g.inverse())) {
            return Err(Error::InvalidArgument(format!(
                "generating set not closed under inverses: {g:?}"
            )));
        }
        let id = GroupElement::identity();
        Ok(WordMetric {
            gens,
            state: Mutex::new(BallState {
                dist: HashMap::from([(id.clone(), 0)]),
                frontier: vec![id],
                radius: 0,
                sizes: vec![1],
            }),
        })
    }

    fn grow_to(&self, st: &mut BallState, radius: usize) {
        while st.radius < radius && !st.frontier.is_empty() {
            let mut next = Vec::new();
            for g in &st.frontier {
                for s in &self.gens {
                    let h = g.multiply(s);
                    if !st.dist.contains_key(&h) {
                        st.dist.insert(h.clone(), st.radius + 1);
                        next.push(h);
                    }
                }
            }
            st.radius += 1;
            st.sizes.push(st.dist.len());
            st.frontier = next;
        }
    }

    pub fn word_length(&self, g: &GroupElement, max_radius: usize) -> Result<usize> {
        let mut st = self.state.lock().expect("word metric poisoned");
        if let Some(&d) = st.dist.get(g) {
            if d <= max_radius {
                return Ok(d);
            }
            return Err(Error::NotFound(max_radius));
        }
        self.grow_to(&mut st, max_radius);
        match st.dist.get(g) {
            Some(&d) if d <= max_radius => Ok(d),
            _ => Err(Error::NotFound(max_radius)),
        }
    }

    /// `|ball(r)|` for `r = 0..=radius`.
    pub fn ball_sizes(&self, radius: usize) -> Vec<usize> {
        let mut st = self.state.lock().expect("word metric poisoned");
        self.grow_to(&mut st, radius);
        st.sizes[..=radius.min(st.sizes.len() - 1)].to_vec()
    }

    /// Elements of the ball of the given radius with their lengths, sorted by length.
    pub fn ball(&self, radius: usize) -> Vec<(GroupElement, usize)> {
        let mut st = self.state.lock().expect("word metric poisoned");
        self.grow_to(&mut st, radius);
        let mut v: Vec<_> = st
            .dist
            .iter()
            .filter(|(_, &d)| d <= radius)
            .map(|(g, &d)| (g.clone(), d))
            .collect();
        v.sort_by(|x, y| x.1.cmp(&y.1).then_with(|| format!("{:?}", x.0).cmp(&format!("{:?}", y.0))));
        v
    }
}

/// One-shot word length; see [`WordMetric`] to reuse the memo across calls.
pub fn word_length(g: &GroupElement, gens: &[GroupElement], max_radius: usize) -> Result<usize> {
    WordMetric::new(gens.to_vec())?.word_length(g, max_radius)
}

/// Whether every target lies within `radius` steps of the identity in the
/// Cayley graph of `support` (used to check that a step measure generates).
pub fn reaches_within(
    support: &[GroupElement],
    targets: &[GroupElement],
    radius: usize,
) -> bool {
    let mut seen: HashSet<GroupElement> = HashSet::new();
    let mut queue = VecDeque::from([(GroupElement::identity(), 0usize)]);
    seen.insert(GroupElement::identity());
    let mut missing: HashSet<&GroupElement> = targets.iter().collect();
    while let Some((g, d)) = queue.pop_front() {
        missing.remove(&g);
        if missing.is_empty() {
            return true;
        }
        if d == radius {
            continue;
        }
        for s in support {
            let h = g.multiply(s);
            if seen.insert(h.clone()) {
                queue.push_back((h, d + 1));
            }
        }
    }
    missing.is_empty()
}

/// Thick distance `d_thick(x, g·x)` paired with the word length of `g`.
pub fn thick_word_comparison(
    g: &GroupElement,
    base: &InteriorPoint,
    metric: &WordMetric,
    max_radius: usize,
    collection: &HoroballCollection,
) -> Result<(f64, usize)> {
    let len = metric.word_length(g, max_radius)?;
    let d = thick_distance(base, &g.apply_interior(base), collection, Backend::Cf)?;
    Ok((d, len))
}

/// Smallest `C ≥ 1` with `‖g‖/C − C ≤ d ≤ C‖g‖ + C` for every `(d, ‖g‖)` pair.
pub fn fit_comparability_constant(pairs: &[(f64, usize)]) -> f64 {
    let ok = |c: f64| {
        pairs
            .iter()
            .all(|&(d, w)| w as f64 / c - c <= d && d <= c * w as f64 + c)
    };
    let mut hi = 2.0;
    while !ok(hi) {
        hi *= 2.0;
    }
    let mut lo = 1.0;
    if ok(lo) {
        return lo;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
