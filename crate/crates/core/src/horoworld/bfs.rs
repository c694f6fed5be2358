//! Breadth-first search over the tiles `g F′` met by a geodesic segment.
//!
//! Every tile within a small slack of the segment is visited, and each
//! contributes its own cusp horoball `g H∞`. Since `H∞(h) ⊂ ⋃ₙ TⁿF′` for
//! `h ≥ 1`, every crossing of a horoball happens inside tiles carrying that
//! horoball as their cusp, so the search is complete once the segment's
//! tiles are exhausted. Frame times come from exact Busemann functions.
//! Long windows are processed in chunks seeded by a tile containing the end
//! of the previous chunk.

use std::collections::{HashMap, HashSet, VecDeque};

use crate::error::{Error, Result};
use crate::exact::ProjPoint;
use crate::lattice::GroupElement;

use super::{geodesic_horoball_intersection, Domain, ExactGeodesic, ExcursionRecord, Horoball};

const CHUNK: f64 = 8.0;
const SLACK: f64 = 1e-7;
const TIME_SLACK: f64 = 1e-9;
pub(crate) const MAX_TILES: usize = 4_000_000;

struct Tile {
    g: GroupElement,
    f_back: ProjPoint,
    f_fwd: ProjPoint,
}

pub(super) fn crossings(
    ray: &ExactGeodesic,
    t_a: f64,
    t_b: f64,
    domain: Domain,
    h: f64,
) -> Result<Vec<ExcursionRecord>> {
    let start = ray.geodesic()?.point(t_a);
    let (r, _) = domain.reduce(&start)?;
    let mut seed = Tile {
        g: r.inverse(),
        f_back: r.apply_proj(&ray.backward),
        f_fwd: r.apply_proj(&ray.forward),
    };
    let top = Horoball::at_infinity(h);
    let gens: Vec<(GroupElement, GroupElement)> = domain
        .face_generators()
        .into_iter()
        .map(|s| {
            let inv = s.inverse();
            (s, inv)
        })
        .collect();

    let mut found: HashMap<ProjPoint, ExcursionRecord> = HashMap::new();
    let mut tiles = 0usize;
    let mut c0 = t_a;
    loop {
        let c1 = (c0 + CHUNK).min(t_b);
        let mut visited: HashSet<GroupElement> = HashSet::new();
        visited.insert(domain.tile_key(&seed.g));
        let mut queue = VecDeque::from([seed]);
        let mut next_seed: Option<(f64, Tile)> = None;
        while let Some(tile) = queue.pop_front() {
            let geo = ray.frame_geodesic(&tile.f_back, &tile.f_fwd)?;
            let Some((lo, hi)) = domain.clip(&geo, SLACK) else {
                continue;
            };
            if hi < c0 - TIME_SLACK || lo > c1 + TIME_SLACK {
                continue;
            }
            tiles += 1;
            if tiles > MAX_TILES {
                return Err(Error::RadiusExhausted(tiles));
            }
            if let Some((t1, t2)) = geodesic_horoball_intersection(&geo, &top)? {
                if t2 >= t_a && t1 <= t_b {
                    let key = tile.g.image_of_infinity().normalized();
                    found.entry(key.clone()).or_insert_with(|| {
                        ExcursionRecord::new(Horoball::from_cusp_point(&key, h), t1, t2)
                    });
                }
            }
            for (s, s_inv) in &gens {
                let g = tile.g.multiply(s);
                if visited.insert(domain.tile_key(&g)) {
                    queue.push_back(Tile {
                        g,
                        f_back: s_inv.apply_proj(&tile.f_back),
                        f_fwd: s_inv.apply_proj(&tile.f_fwd),
                    });
                }
            }
            if lo <= c1 && hi >= c1 {
                let better = next_seed.as_ref().map(|(best, _)| hi > *best).unwrap_or(true);
                if better {
                    next_seed = Some((hi, tile));
                }
            }
        }
        if c1 >= t_b {
            break;
        }
        seed = next_seed
            .ok_or_else(|| Error::NotConverged(format!("no tile contains γ({c1})")))?
            .1;
        c0 = c1;
    }
    Ok(found.into_values().collect())
}
