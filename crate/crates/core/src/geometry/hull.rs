//! Convex hulls in ambient dimension up to [`crate::geometry::MAX_DIM`].
//!
//! Dimensions 1 and 2 use direct scans; higher dimensions use an incremental
//! beneath-beyond construction over simplicial facets.  Volume is accumulated
//! as cone volumes during insertion, so no global triangulation is stored.
//! A candidate point within `EPS_SUPPORT * scale` of the current hull (in
//! support-value terms) is treated as interior; this is the tie-break rule
//! for extreme-point filtering.

use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;

/// Support-value slack below which a point counts as inside the hull.
pub const EPS_SUPPORT: f64 = 1e-10;

/// Result of a hull construction.
#[derive(Debug, Clone)]
pub struct Hull {
    /// Ambient dimension.
    pub dim: usize,
    /// Affine dimension of the point set.
    pub affine_dim: usize,
    /// `dim`-volume of the hull; zero when `affine_dim < dim`.
    pub volume: f64,
    /// Indices of extreme points, ascending in input order.
    pub extreme: Vec<usize>,
    /// Outward facet planes `(unit normal, offset)` with the hull contained
    /// in `<n, x> <= offset`.  Empty when `affine_dim < dim`.
    pub planes: Vec<(Vec<f64>, f64)>,
}

fn coord_scale(points: &[Vec<f64>]) -> f64 {
    let mut m = 0.0f64;
    for p in points {
        for &c in p {
            m = m.max(c.abs());
        }
    }
    1.0 + m
}

/// Greedily selects affinely independent points: returns `(chosen indices,
/// orthonormal basis of the affine span)`.  The first chosen index is the
/// base point.
fn affine_basis(points: &[Vec<f64>], eps: f64) -> (Vec<usize>, Vec<DVector<f64>>) {
    let d = points[0].len();
    let base = 0usize;
    let mut chosen = vec![base];
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let b0 = DVector::from_column_slice(&points[base]);
    while basis.len() < d {
        let mut best = (0.0f64, usize::MAX, DVector::zeros(d));
        for (i, p) in points.iter().enumerate() {
            if chosen.contains(&i) {
                continue;
            }
            let mut r = DVector::from_column_slice(p) - &b0;
            for q in &basis {
                let t = r.dot(q);
                r -= q * t;
            }
            let norm = r.norm();
            if norm > best.0 {
                best = (norm, i, r);
            }
        }
        if best.0 <= eps || best.1 == usize::MAX {
            break;
        }
        chosen.push(best.1);
        basis.push(best.2 / best.0);
    }
    (chosen, basis)
}

/// Rank of the affine span of `points` with tolerance `eps * scale`.
pub fn affine_rank(points: &[Vec<f64>], eps_rel: f64) -> usize {
    if points.is_empty() {
        return 0;
    }
    let eps = eps_rel * coord_scale(points);
    affine_basis(points, eps).1.len()
}

fn shoelace(pts: &[&Vec<f64>]) -> f64 {
    let m = pts.len();
    let mut s = 0.0;
    for i in 0..m {
        let a = pts[i];
        let b = pts[(i + 1) % m];
        s += a[0] * b[1] - b[0] * a[1];
    }
    s.abs() / 2.0
}

/// 2D hull by monotone chain; returns extreme indices in CCW order starting
/// from the lexicographic minimum.
fn chain_2d(points: &[Vec<f64>], eps: f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..points.len()).collect();
    idx.sort_by(|&a, &b| points[a].partial_cmp(&points[b]).unwrap_or(std::cmp::Ordering::Equal));
    idx.dedup_by(|&mut a, &mut b| points[a] == points[b]);
    if idx.len() <= 2 {
        return idx;
    }
    let cross = |o: usize, a: usize, b: usize| -> f64 {
        let (po, pa, pb) = (&points[o], &points[a], &points[b]);
        (pa[0] - po[0]) * (pb[1] - po[1]) - (pa[1] - po[1]) * (pb[0] - po[0])
    };
    let build = |iter: &mut dyn Iterator<Item = usize>| -> Vec<usize> {
        let mut out: Vec<usize> = Vec::new();
        for i in iter {
            while out.len() >= 2 && cross(out[out.len() - 2], out[out.len() - 1], i) <= eps {
                out.pop();
            }
            out.push(i);
        }
        out
    };
    let mut lower = build(&mut idx.iter().copied());
    let mut upper = build(&mut idx.iter().rev().copied());
    lower.pop();
    upper.pop();
    lower.append(&mut upper);
    lower
}

/// Simplicial facet of the incremental hull: `verts` sorted ascending,
/// outward unit `normal`, hull contained in `<normal, x> <= offset`.
struct Facet {
    verts: Vec<usize>,
    normal: DVector<f64>,
    offset: f64,
}

/// Vector orthogonal to all `d - 1` rows (generalized cross product by
/// cofactor expansion): the result `n` satisfies
/// `<n, w> = det([w; rows])` for every `w`.
pub(crate) fn null_vector(rows: &[Vec<f64>], d: usize) -> Vec<f64> {
    let mut out = vec![0.0; d];
    for j in 0..d {
        let minor = DMatrix::from_fn(d - 1, d - 1, |r, c| {
            let col = if c < j { c } else { c + 1 };
            rows[r][col]
        });
        out[j] = if j % 2 == 0 { 1.0 } else { -1.0 } * minor.determinant();
    }
    out
}

/// Unit normal of the hyperplane through `d` points.
fn hyperplane_normal(pts: &[&Vec<f64>]) -> Option<DVector<f64>> {
    let d = pts[0].len();
    let rows: Vec<Vec<f64>> =
        (1..d).map(|r| (0..d).map(|c| pts[r][c] - pts[0][c]).collect()).collect();
    let n = DVector::from_vec(null_vector(&rows, d));
    let norm = n.norm();
    if norm < 1e-300 {
        return None;
    }
    Some(n / norm)
}

fn det_of_diffs(apex: &[f64], base: &[&Vec<f64>]) -> f64 {
    let d = apex.len();
    let mut m = DMatrix::zeros(d, d);
    for (c, p) in base.iter().skip(1).enumerate() {
        for r in 0..d {
            m[(r, c)] = p[r] - base[0][r];
        }
    }
    for r in 0..d {
        m[(r, d - 1)] = apex[r] - base[0][r];
    }
    m.determinant()
}

fn factorial(k: usize) -> f64 {
    (1..=k).map(|v| v as f64).product()
}

/// Incremental beneath-beyond hull for ambient dimension `d >= 3` over a
/// full-dimensional point set.  `init` are indices of an initial simplex.
fn incremental_hull(points: &[Vec<f64>], init: &[usize], eps_vis: f64) -> (f64, Vec<Facet>) {
    let d = points[0].len();
    let mut facets: Vec<Facet> = Vec::new();
    let mut interior = DVector::zeros(d);
    for &i in init {
        interior += DVector::from_column_slice(&points[i]);
    }
    interior /= init.len() as f64;

    let make_facet = |verts: Vec<usize>, interior: &DVector<f64>| -> Option<Facet> {
        let pts: Vec<&Vec<f64>> = verts.iter().map(|&i| &points[i]).collect();
        let mut normal = hyperplane_normal(&pts)?;
        let mut offset =
            verts.iter().map(|&i| normal.dot(&DVector::from_column_slice(&points[i]))).sum::<f64>()
                / verts.len() as f64;
        if normal.dot(interior) > offset {
            normal = -normal;
            offset = -offset;
        }
        Some(Facet { verts, normal, offset })
    };

    for k in 0..init.len() {
        let mut verts: Vec<usize> = init.to_vec();
        verts.remove(k);
        verts.sort_unstable();
        if let Some(f) = make_facet(verts, &interior) {
            facets.push(f);
        }
    }
    let base: Vec<&Vec<f64>> = init[..d].iter().map(|&i| &points[i]).collect();
    let mut volume = det_of_diffs(&points[init[d]], &base).abs() / factorial(d);

    let centroid = interior.clone();
    let mut order: Vec<usize> = (0..points.len()).filter(|i| !init.contains(i)).collect();
    order.sort_by(|&a, &b| {
        let da = (DVector::from_column_slice(&points[a]) - &centroid).norm();
        let db = (DVector::from_column_slice(&points[b]) - &centroid).norm();
        db.partial_cmp(&da).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
    });

    for pi in order {
        let p = DVector::from_column_slice(&points[pi]);
        let mut visible = Vec::new();
        for (fi, f) in facets.iter().enumerate() {
            if f.normal.dot(&p) - f.offset > eps_vis {
                visible.push(fi);
            }
        }
        if visible.is_empty() {
            continue;
        }
        // Horizon ridges appear in exactly one visible facet.
        let mut ridge_count: HashMap<Vec<usize>, usize> = HashMap::new();
        for &fi in &visible {
            let verts = &facets[fi].verts;
            for k in 0..verts.len() {
                let mut ridge = verts.clone();
                ridge.remove(k);
                *ridge_count.entry(ridge).or_insert(0) += 1;
            }
        }
        for &fi in &visible {
            let pts: Vec<&Vec<f64>> = facets[fi].verts.iter().map(|&i| &points[i]).collect();
            volume += det_of_diffs(&points[pi], &pts).abs() / factorial(d);
        }
        let visible_set: std::collections::HashSet<usize> = visible.iter().copied().collect();
        let mut kept: Vec<Facet> = Vec::with_capacity(facets.len());
        for (fi, f) in facets.into_iter().enumerate() {
            if !visible_set.contains(&fi) {
                kept.push(f);
            }
        }
        for (ridge, count) in ridge_count {
            if count != 1 {
                continue;
            }
            let mut verts = ridge;
            verts.push(pi);
            verts.sort_unstable();
            if let Some(f) = make_facet(verts, &interior) {
                kept.push(f);
            }
        }
        facets = kept;
    }
    (volume, facets)
}

/// Extracts hull vertices from the final facet structure: a candidate is
/// extreme iff its incident facet normals span the ambient space.
fn facet_vertices(points: &[Vec<f64>], facets: &[Facet], eps: f64) -> Vec<usize> {
    let d = points[0].len();
    let mut incident: HashMap<usize, Vec<usize>> = HashMap::new();
    for (fi, f) in facets.iter().enumerate() {
        for &v in &f.verts {
            incident.entry(v).or_default().push(fi);
        }
    }
    let mut out = Vec::new();
    for (&v, fis) in &incident {
        // Incremental Gram-Schmidt rank of incident normals.
        let mut basis: Vec<DVector<f64>> = Vec::new();
        for &fi in fis {
            let mut r = facets[fi].normal.clone();
            for q in &basis {
                let t = r.dot(q);
                r -= q * t;
            }
            let norm = r.norm();
            if norm > eps {
                basis.push(r / norm);
                if basis.len() == d {
                    break;
                }
            }
        }
        if basis.len() == d {
            out.push(v);
        }
    }
    out.sort_unstable();
    out
}

fn dedup_planes(facets: &[Facet], scale: f64) -> Vec<(Vec<f64>, f64)> {
    let mut planes: Vec<(Vec<f64>, f64)> = Vec::new();
    for f in facets {
        let n: Vec<f64> = f.normal.iter().copied().collect();
        let dup = planes.iter().any(|(pn, pb)| {
            let dot: f64 = pn.iter().zip(&n).map(|(a, b)| a * b).sum();
            dot > 1.0 - 1e-9 && (pb - f.offset).abs() <= 1e-8 * scale
        });
        if !dup {
            planes.push((n, f.offset));
        }
    }
    planes
}

/// Builds the hull of `points` in ambient dimension `points[0].len()`.
///
/// Degenerate inputs (affine rank < ambient dimension) report volume zero and
/// no facet planes; extreme points are still computed by recursing in an
/// orthonormal basis of the affine span, so they are exact up to the support
/// tie-break.
pub fn convex_hull(points: &[Vec<f64>], budget: usize) -> Result<Hull> {
    if points.is_empty() {
        return Err(Error::InvalidBody("hull of empty point set".into()));
    }
    let d = points[0].len();
    if points.iter().any(|p| p.len() != d) {
        return Err(Error::DimensionMismatch { expected: d, got: 0 });
    }
    if points.len() > budget {
        return Err(Error::RepresentationBlowup { candidates: points.len(), budget });
    }
    let scale = coord_scale(points);
    let eps = EPS_SUPPORT * scale;

    if d == 0 {
        return Ok(Hull { dim: 0, affine_dim: 0, volume: 1.0, extreme: vec![0], planes: vec![] });
    }
    let (chosen, basis) = affine_basis(points, eps);
    let rank = basis.len();
    if rank < d {
        // Project to the affine span and recurse for the extreme set.
        let base = DVector::from_column_slice(&points[chosen[0]]);
        let extreme = if rank == 0 {
            vec![chosen[0]]
        } else {
            let projected: Vec<Vec<f64>> = points
                .iter()
                .map(|p| {
                    let r = DVector::from_column_slice(p) - &base;
                    basis.iter().map(|q| r.dot(q)).collect()
                })
                .collect();
            convex_hull(&projected, budget)?.extreme
        };
        return Ok(Hull { dim: d, affine_dim: rank, volume: 0.0, extreme, planes: vec![] });
    }

    match d {
        1 => {
            let mut lo = 0usize;
            let mut hi = 0usize;
            for (i, p) in points.iter().enumerate() {
                if p[0] < points[lo][0] {
                    lo = i;
                }
                if p[0] > points[hi][0] {
                    hi = i;
                }
            }
            let mut extreme = vec![lo, hi];
            extreme.sort_unstable();
            extreme.dedup();
            Ok(Hull {
                dim: 1,
                affine_dim: 1,
                volume: points[hi][0] - points[lo][0],
                extreme,
                planes: vec![(vec![1.0], points[hi][0]), (vec![-1.0], -points[lo][0])],
            })
        }
        2 => {
            let ring = chain_2d(points, eps * scale);
            let pts: Vec<&Vec<f64>> = ring.iter().map(|&i| &points[i]).collect();
            let volume = shoelace(&pts);
            let mut planes = Vec::with_capacity(ring.len());
            for i in 0..ring.len() {
                let a = &points[ring[i]];
                let b = &points[ring[(i + 1) % ring.len()]];
                let e = [b[0] - a[0], b[1] - a[1]];
                let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
                if len > eps {
                    let n = vec![e[1] / len, -e[0] / len];
                    let off = n[0] * a[0] + n[1] * a[1];
                    planes.push((n, off));
                }
            }
            let mut extreme = ring;
            extreme.sort_unstable();
            Ok(Hull { dim: 2, affine_dim: 2, volume, extreme, planes })
        }
        _ => {
            let (volume, facets) = incremental_hull(points, &chosen, eps);
            let extreme = facet_vertices(points, &facets, 1e-7);
            let planes = dedup_planes(&facets, scale);
            Ok(Hull { dim: d, affine_dim: d, volume, extreme, planes })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cube_points(d: usize) -> Vec<Vec<f64>> {
        (0..1usize << d).map(|mask| (0..d).map(|j| ((mask >> j) & 1) as f64).collect()).collect()
    }

    #[test]
    fn unit_cube_volumes() {
        for d in 1..=5 {
            let h = convex_hull(&cube_points(d), 20_000).unwrap();
            assert!((h.volume - 1.0).abs() < 1e-12, "d={d} vol={}", h.volume);
            assert_eq!(h.extreme.len(), 1 << d);
            assert_eq!(h.planes.len(), 2 * d);
        }
    }

    #[test]
    fn interior_and_face_points_are_dropped() {
        let mut pts = cube_points(3);
        pts.push(vec![0.5, 0.5, 0.5]); // interior
        pts.push(vec![0.5, 0.5, 0.0]); // facet interior
        pts.push(vec![0.5, 0.0, 0.0]); // edge interior
        let h = convex_hull(&pts, 20_000).unwrap();
        assert_eq!(h.extreme.len(), 8);
        assert!(h.extreme.iter().all(|&i| i < 8));
        assert!((h.volume - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simplex_volume_matches_factorial() {
        for d in 2..=6 {
            let mut pts = vec![vec![0.0; d]];
            for j in 0..d {
                let mut e = vec![0.0; d];
                e[j] = 1.0;
                pts.push(e);
            }
            let h = convex_hull(&pts, 20_000).unwrap();
            let expect = 1.0 / factorial(d);
            assert!((h.volume - expect).abs() < 1e-12 * expect.max(1.0), "d={d}");
            assert_eq!(h.extreme.len(), d + 1);
        }
    }

    #[test]
    fn degenerate_set_reports_rank_and_zero_volume() {
        let pts = vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![1.0, 1.0, 0.0],
            vec![0.5, 0.5, 0.0],
        ];
        let h = convex_hull(&pts, 20_000).unwrap();
        assert_eq!(h.affine_dim, 2);
        assert_eq!(h.volume, 0.0);
        assert_eq!(h.extreme, vec![0, 1, 2, 3]);
    }

    #[test]
    fn duplicate_vertices_collapse() {
        let mut pts = cube_points(3);
        pts.extend(cube_points(3));
        let h = convex_hull(&pts, 20_000).unwrap();
        assert_eq!(h.extreme.len(), 8);
        assert!((h.volume - 1.0).abs() < 1e-12);
    }

    #[test]
    fn random_rotations_preserve_cube_volume() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(11, 0);
        for d in 3..=5 {
            // Random orthogonal map from QR of a Gaussian-ish matrix.
            let m = DMatrix::from_fn(d, d, |_, _| rng.gen::<f64>() - 0.5);
            let q = m.qr().q();
            let pts: Vec<Vec<f64>> = cube_points(d)
                .iter()
                .map(|p| {
                    let v = &q * DVector::from_column_slice(p);
                    v.iter().copied().collect()
                })
                .collect();
            let h = convex_hull(&pts, 20_000).unwrap();
            assert!((h.volume - 1.0).abs() < 1e-9, "d={d} vol={}", h.volume);
            assert_eq!(h.extreme.len(), 1 << d);
        }
    }

    #[test]
    fn hull_respects_budget() {
        let pts = cube_points(4);
        match convex_hull(&pts, 10) {
            Err(Error::RepresentationBlowup { candidates, budget }) => {
                assert_eq!(candidates, 16);
                assert_eq!(budget, 10);
            }
            other => panic!("expected blowup, got {other:?}"),
        }
    }

    #[test]
    fn cross_polytope_volume() {
        // conv(+-e_i) in R^d has volume 2^d / d!.
        for d in 3..=5 {
            let mut pts = Vec::new();
            for j in 0..d {
                for s in [-1.0, 1.0] {
                    let mut e = vec![0.0; d];
                    e[j] = s;
                    pts.push(e);
                }
            }
            let h = convex_hull(&pts, 20_000).unwrap();
            let expect = (2.0f64).powi(d as i32) / factorial(d);
            assert!((h.volume - expect).abs() < 1e-12 * expect.max(1.0));
            assert_eq!(h.extreme.len(), 2 * d);
            assert_eq!(h.planes.len(), 1 << d);
        }
    }
}
