//! Tile-by-tile march along a geodesic.
//!
//! The current tile is `g F′`. The geodesic is held in frame coordinates
//! `g⁻¹γ`, whose endpoints are updated exactly; only the point where the
//! geodesic leaves the tile is handled in floating point. Stepping slightly
//! past the exit and reducing back into `F′` with nearest-(Gaussian-)integer
//! translations and inversions yields the next frame, exactly as a
//! continued-fraction expansion of the forward endpoint would.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::exact::{GaussInt, ProjPoint};
use crate::hypgeom::Geodesic;

use super::{
    geodesic_horoball_intersection, Domain, ExactGeodesic, ExcursionRecord, Horoball,
};

const STEP: f64 = 1e-9;

pub(super) fn crossings(
    ray: &ExactGeodesic,
    t_a: f64,
    t_b: f64,
    domain: Domain,
    h: f64,
) -> Result<Vec<ExcursionRecord>> {
    let start = ray.geodesic()?.point(t_a);
    let (r, q) = domain.reduce(&start)?;
    let mut g = r.inverse();
    let mut f_back = r.apply_proj(&ray.backward);
    let mut f_fwd = r.apply_proj(&ray.forward);
    let mut geo = Geodesic::anchored(f_back.to_boundary(), f_fwd.to_boundary(), &q, t_a)?;
    let mut t = t_a;

    let top = Horoball::at_infinity(h);
    let below: Vec<(GaussInt, Horoball)> = domain
        .neighbour_cusps()
        .into_iter()
        .map(|n| {
            let hb = Horoball::finite(n.to_complex(), 1.0 / h);
            (n, hb)
        })
        .collect();

    let mut found: HashMap<ProjPoint, ExcursionRecord> = HashMap::new();
    let mut record = |key: ProjPoint, t1: f64, t2: f64| {
        if t2 >= t_a && t1 <= t_b {
            let key = key.normalized();
            found
                .entry(key.clone())
                .or_insert_with(|| ExcursionRecord::new(Horoball::from_cusp_point(&key, h), t1, t2));
        }
    };

    let max_steps = 10_000 + (2000.0 * (t_b - t_a)) as usize;
    let mut stalls = 0u32;
    for _ in 0..max_steps {
        let mut inside_top = None;
        if let Some((t1, t2)) = geodesic_horoball_intersection(&geo, &top)? {
            record(g.image_of_infinity(), t1, t2);
            inside_top = Some((t1, t2));
        }
        for (n, hb) in &below {
            if let Some((t1, t2)) = geodesic_horoball_intersection(&geo, hb)? {
                record(g.apply_proj(&ProjPoint::new(n.clone(), GaussInt::one())), t1, t2);
            }
        }

        let exit = match domain.clip(&geo, 0.0) {
            Some((_, hi)) if hi > t => hi,
            _ => t,
        };
        if exit >= t_b {
            break;
        }
        let mut next = exit;
        if let Some((t1, t2)) = inside_top {
            if t1 < next && next < t2 {
                next = t2;
            }
        }
        next += STEP * 2f64.powi(stalls as i32);

        let p = geo.point(next);
        let (r, q) = domain.reduce(&p)?;
        if r.is_identity() {
            stalls += 1;
            if stalls > 40 {
                return Err(Error::NotConverged(format!("march stalled at t = {t}")));
            }
            t = next;
            continue;
        }
        stalls = 0;
        g = g.multiply(&r.inverse());
        f_back = r.apply_proj(&f_back);
        f_fwd = r.apply_proj(&f_fwd);
        geo = Geodesic::anchored(f_back.to_boundary(), f_fwd.to_boundary(), &q, next)?;
        t = next;
    }
    if t < t_b && domain.clip(&geo, 0.0).map(|(_, hi)| hi < t_b).unwrap_or(true) {
        return Err(Error::NotConverged(format!(
            "march did not reach t = {t_b} (stopped at {t})"
        )));
    }
    Ok(found.into_values().collect())
}
