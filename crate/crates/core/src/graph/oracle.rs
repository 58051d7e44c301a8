//! Brute-force reference checks used to validate the canonical form.
//!
//! Everything here is deliberately naive: the point is to be an independent
//! witness for the fast structural algorithms, not to be quick.

use super::{CayleyGraph, VertexId};

/// Pointer-preserving isomorphism test by backtracking over all vertex
/// bijections that fix vertex 0.  Exponential; keep inputs small.
pub fn pointed_iso(x: &CayleyGraph, y: &CayleyGraph) -> bool {
    if x.sig() != y.sig() || x.vertex_count() != y.vertex_count() {
        return false;
    }
    let n = x.vertex_count();
    let mut map: Vec<Option<VertexId>> = vec![None; n];
    let mut used = vec![false; n];
    map[0] = Some(0);
    used[0] = true;
    extend(x, y, &mut map, &mut used, 1)
}

fn compatible(x: &CayleyGraph, y: &CayleyGraph, map: &[Option<VertexId>], v: VertexId) -> bool {
    let w = map[v as usize].unwrap();
    if x.vlabel(v) != y.vlabel(w) {
        return false;
    }
    for p in 0..x.degree() {
        match (x.across(v, p), y.across(w, p)) {
            (None, None) => {}
            (Some((a, q)), Some((b, s))) => {
                if q != s {
                    return false;
                }
                if let Some(bm) = map[a as usize] {
                    if bm != b {
                        return false;
                    }
                }
                if x.elabel_at(v, p) != y.elabel_at(w, p) {
                    return false;
                }
            }
            _ => return false,
        }
    }
    true
}

fn extend(
    x: &CayleyGraph,
    y: &CayleyGraph,
    map: &mut Vec<Option<VertexId>>,
    used: &mut Vec<bool>,
    next: usize,
) -> bool {
    if next == map.len() {
        return (0..map.len() as VertexId).all(|v| compatible(x, y, map, v));
    }
    for cand in 0..map.len() {
        if used[cand] {
            continue;
        }
        map[next] = Some(cand as VertexId);
        used[cand] = true;
        // Prune on the partial assignment: `next` must already look right.
        if compatible(x, y, map, next as VertexId)
            && extend(x, y, map, used, next + 1)
        {
            return true;
        }
        map[next] = None;
        used[cand] = false;
    }
    false
}
