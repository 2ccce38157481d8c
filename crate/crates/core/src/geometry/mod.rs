//! Convex body representations and volume oracles.
//!
//! A [`ConvexBody`] lives in `R^n` for `n <= MAX_DIM` and is one of:
//! - `Box`: axis-aligned product of intervals `[lower_j, upper_j]`;
//! - `Zonotope`: `{ center + sum t_i g_i : t_i in [0, 1] }` over generators
//!   `g_i` (the anchored parameterisation, so a box `[l, u]` equals the
//!   zonotope with center `l` and generators `(u_j - l_j) e_j`);
//! - `VPolytope`: convex hull of an explicit vertex list, normalised to
//!   extreme points by the constructor.
//!
//! A [`BodyTuple`] is a tuple of `n` bodies in `R^n`, the object whose mixed
//! volume the rest of the crate approximates.

pub mod hull;
pub mod mc;

pub use mc::{volume_mc, volume_mc_with, McVolume};

use crate::{Error, Result};
use hull::convex_hull;
use nalgebra::DMatrix;

/// Largest supported ambient dimension.
pub const MAX_DIM: usize = 8;

/// Enumeration limits for representation conversions.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    /// Maximum candidate vertices fed to a hull construction.
    pub vertex_budget: usize,
    /// Maximum generator subsets enumerated for zonotope volumes and facets.
    pub subset_budget: usize,
}

impl Default for Limits {
    fn default() -> Self {
        Limits { vertex_budget: 20_000, subset_budget: 5_000_000 }
    }
}

/// A convex body in `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    Box { lower: Vec<f64>, upper: Vec<f64> },
    Zonotope { center: Vec<f64>, generators: Vec<Vec<f64>> },
    VPolytope { vertices: Vec<Vec<f64>> },
}

fn check_dim(dim: usize) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidBody("ambient dimension must be positive".into()));
    }
    if dim > MAX_DIM {
        return Err(Error::DimensionCap { dim, cap: MAX_DIM });
    }
    Ok(())
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::InvalidBody("non-finite coordinate".into()));
    }
    Ok(())
}

/// Visits all `k`-subsets of `0..m` in lexicographic order.
pub(crate) fn for_each_subset(m: usize, k: usize, mut f: impl FnMut(&[usize])) {
    if k > m {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        // Advance the odometer.
        let mut i = k;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + m - k {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial(m: usize, k: usize) -> u128 {
    if k > m {
        return 0;
    }
    let k = k.min(m - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r * (m - i) as u128 / (i + 1) as u128;
    }
    r
}

impl ConvexBody {
    /// Axis-aligned box `[lower, upper]`; requires `lower <= upper`
    /// coordinatewise.
    pub fn cuboid(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len())?;
        if lower.len() != upper.len() {
            return Err(Error::DimensionMismatch { expected: lower.len(), got: upper.len() });
        }
        check_finite(&lower)?;
        check_finite(&upper)?;
        if lower.iter().zip(&upper).any(|(l, u)| l > u) {
            return Err(Error::InvalidBody("box has lower > upper".into()));
        }
        Ok(ConvexBody::Box { lower, upper })
    }

    /// Zonotope anchored at `center` with the given generators.
    pub fn zonotope(center: Vec<f64>, generators: Vec<Vec<f64>>) -> Result<Self> {
        check_dim(center.len())?;
        check_finite(&center)?;
        for g in &generators {
            if g.len() != center.len() {
                return Err(Error::DimensionMismatch { expected: center.len(), got: g.len() });
            }
            check_finite(g)?;
        }
        let generators: Vec<Vec<f64>> =
            generators.into_iter().filter(|g| g.iter().any(|&c| c != 0.0)).collect();
        Ok(ConvexBody::Zonotope { center, generators })
    }

    /// Polytope from a vertex list, normalised to extreme points (a vertex is
    /// kept iff it sticks out of the hull of the others by more than the
    /// support tie-break of [`hull::EPS_SUPPORT`]).
    pub fn vpolytope(vertices: Vec<Vec<f64>>) -> Result<Self> {
        Self::vpolytope_with(vertices, &Limits::default())
    }

    /// [`ConvexBody::vpolytope`] with explicit limits.
    pub fn vpolytope_with(vertices: Vec<Vec<f64>>, limits: &Limits) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidBody("polytope needs at least one vertex".into()));
        }
        check_dim(vertices[0].len())?;
        for v in &vertices {
            if v.len() != vertices[0].len() {
                return Err(Error::DimensionMismatch { expected: vertices[0].len(), got: v.len() });
            }
            check_finite(v)?;
        }
        let h = convex_hull(&vertices, limits.vertex_budget)?;
        let kept: Vec<Vec<f64>> = h.extreme.iter().map(|&i| vertices[i].clone()).collect();
        Ok(ConvexBody::VPolytope { vertices: kept })
    }

    /// Segment from `a` to `b`.
    pub fn segment(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        let center = a.clone();
        let g: Vec<f64> = a.iter().zip(&b).map(|(x, y)| y - x).collect();
        Self::zonotope(center, vec![g])
    }

    /// Single point.
    pub fn point(p: Vec<f64>) -> Result<Self> {
        Self::cuboid(p.clone(), p)
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Box { lower, .. } => lower.len(),
            ConvexBody::Zonotope { center, .. } => center.len(),
            ConvexBody::VPolytope { vertices } => vertices[0].len(),
        }
    }

    /// Spanning direction set of the body (edge vectors up to translation);
    /// its rank is the affine dimension.
    pub fn directions(&self) -> Vec<Vec<f64>> {
        match self {
            ConvexBody::Box { lower, upper } => {
                let d = lower.len();
                let mut out = Vec::new();
                for j in 0..d {
                    let gap = upper[j] - lower[j];
                    if gap > 0.0 {
                        let mut e = vec![0.0; d];
                        e[j] = gap;
                        out.push(e);
                    }
                }
                out
            }
            ConvexBody::Zonotope { generators, .. } => generators.clone(),
            ConvexBody::VPolytope { vertices } => vertices
                .iter()
                .skip(1)
                .map(|v| v.iter().zip(&vertices[0]).map(|(a, b)| a - b).collect())
                .collect(),
        }
    }

    /// Dimension of the affine hull.
    pub fn affine_dimension(&self) -> usize {
        rank_of(&self.directions(), self.dim())
    }

    /// Support value `max { <x, dir> : x in body }`; `dir` need not be
    /// normalised but must be nonzero.
    pub fn support_value(&self, dir: &[f64]) -> Result<f64> {
        if dir.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: dir.len() });
        }
        if dir.iter().all(|&c| c == 0.0) {
            return Err(Error::InvalidParameter("support direction is zero".into()));
        }
        let dot = |v: &[f64]| -> f64 { v.iter().zip(dir).map(|(a, b)| a * b).sum() };
        Ok(match self {
            ConvexBody::Box { lower, upper } => {
                lower.iter().zip(upper).zip(dir).map(|((l, u), d)| (l * d).max(u * d)).sum()
            }
            ConvexBody::Zonotope { center, generators } => {
                dot(center) + generators.iter().map(|g| dot(g).max(0.0)).sum::<f64>()
            }
            ConvexBody::VPolytope { vertices } => {
                vertices.iter().map(|v| dot(v)).fold(f64::NEG_INFINITY, f64::max)
            }
        })
    }

    /// Scales the body by `w >= 0` about the origin (`w = 0` collapses to the
    /// origin).
    pub fn scale(&self, w: f64) -> Result<ConvexBody> {
        if !(w >= 0.0) {
            return Err(Error::InvalidParameter(format!("negative scale weight {w}")));
        }
        if w == 0.0 {
            return ConvexBody::point(vec![0.0; self.dim()]);
        }
        Ok(match self {
            ConvexBody::Box { lower, upper } => ConvexBody::Box {
                lower: lower.iter().map(|c| c * w).collect(),
                upper: upper.iter().map(|c| c * w).collect(),
            },
            ConvexBody::Zonotope { center, generators } => ConvexBody::Zonotope {
                center: center.iter().map(|c| c * w).collect(),
                generators: generators.iter().map(|g| g.iter().map(|c| c * w).collect()).collect(),
            },
            ConvexBody::VPolytope { vertices } => ConvexBody::VPolytope {
                vertices: vertices.iter().map(|v| v.iter().map(|c| c * w).collect()).collect(),
            },
        })
    }

    /// Translates the body by `t`.
    pub fn translate(&self, t: &[f64]) -> Result<ConvexBody> {
        if t.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: t.len() });
        }
        let shift = |v: &[f64]| -> Vec<f64> { v.iter().zip(t).map(|(a, b)| a + b).collect() };
        Ok(match self {
            ConvexBody::Box { lower, upper } => {
                ConvexBody::Box { lower: shift(lower), upper: shift(upper) }
            }
            ConvexBody::Zonotope { center, generators } => {
                ConvexBody::Zonotope { center: shift(center), generators: generators.clone() }
            }
            ConvexBody::VPolytope { vertices } => {
                ConvexBody::VPolytope { vertices: vertices.iter().map(|v| shift(v)).collect() }
            }
        })
    }

    /// Explicit vertex list (not necessarily extreme-filtered for boxes and
    /// zonotopes, but every extreme point is present).
    pub fn vertex_candidates(&self, limits: &Limits) -> Result<Vec<Vec<f64>>> {
        match self {
            ConvexBody::Box { lower, upper } => {
                let gaps: Vec<usize> = (0..lower.len()).filter(|&j| upper[j] > lower[j]).collect();
                let count = 1usize << gaps.len();
                if count > limits.vertex_budget {
                    return Err(Error::RepresentationBlowup {
                        candidates: count,
                        budget: limits.vertex_budget,
                    });
                }
                let mut out = Vec::with_capacity(count);
                for mask in 0..count {
                    let mut v = lower.clone();
                    for (b, &j) in gaps.iter().enumerate() {
                        if (mask >> b) & 1 == 1 {
                            v[j] = upper[j];
                        }
                    }
                    out.push(v);
                }
                Ok(out)
            }
            ConvexBody::Zonotope { center, generators } => {
                let m = generators.len();
                if m >= usize::BITS as usize - 1 || (1usize << m) > limits.vertex_budget {
                    return Err(Error::RepresentationBlowup {
                        candidates: 1usize.checked_shl(m as u32).unwrap_or(usize::MAX),
                        budget: limits.vertex_budget,
                    });
                }
                let mut out = Vec::with_capacity(1 << m);
                for mask in 0..(1usize << m) {
                    let mut v = center.clone();
                    for (b, g) in generators.iter().enumerate() {
                        if (mask >> b) & 1 == 1 {
                            for (c, gc) in v.iter_mut().zip(g) {
                                *c += gc;
                            }
                        }
                    }
                    out.push(v);
                }
                Ok(out)
            }
            ConvexBody::VPolytope { vertices } => Ok(vertices.clone()),
        }
    }

    /// Exact volume.  Degenerate bodies (affine dimension below ambient)
    /// report zero.
    pub fn volume(&self) -> Result<f64> {
        self.volume_with(&Limits::default())
    }

    /// [`ConvexBody::volume`] with explicit limits.
    pub fn volume_with(&self, limits: &Limits) -> Result<f64> {
        let n = self.dim();
        match self {
            ConvexBody::Box { lower, upper } => {
                Ok(lower.iter().zip(upper).map(|(l, u)| u - l).product())
            }
            ConvexBody::Zonotope { center: _, generators } => {
                let m = generators.len();
                if m < n || rank_of(generators, n) < n {
                    return Ok(0.0);
                }
                let count = binomial(m, n);
                if count > limits.subset_budget as u128 {
                    return Err(Error::RepresentationBlowup {
                        candidates: count.min(usize::MAX as u128) as usize,
                        budget: limits.subset_budget,
                    });
                }
                let mut total = 0.0;
                for_each_subset(m, n, |s| {
                    let mat = DMatrix::from_fn(n, n, |r, c| generators[s[c]][r]);
                    total += mat.determinant().abs();
                });
                Ok(total)
            }
            ConvexBody::VPolytope { vertices } => {
                Ok(convex_hull(vertices, limits.vertex_budget)?.volume)
            }
        }
    }

    /// Outward facet planes of a full-dimensional body, for membership tests.
    pub(crate) fn facet_planes(&self, limits: &Limits) -> Result<Vec<(Vec<f64>, f64)>> {
        let n = self.dim();
        match self {
            ConvexBody::Box { lower, upper } => {
                let mut planes = Vec::with_capacity(2 * n);
                for j in 0..n {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    planes.push((e.clone(), upper[j]));
                    e[j] = -1.0;
                    planes.push((e, -lower[j]));
                }
                Ok(planes)
            }
            ConvexBody::Zonotope { center: _, generators } => {
                // Facet normals are orthogonal to (n-1)-subsets of generators.
                let m = generators.len();
                if binomial(m, n - 1) > limits.subset_budget as u128 {
                    return Err(Error::RepresentationBlowup {
                        candidates: binomial(m, n - 1).min(usize::MAX as u128) as usize,
                        budget: limits.subset_budget,
                    });
                }
                let mut normals: Vec<Vec<f64>> = Vec::new();
                for_each_subset(m, n - 1, |s| {
                    let rows: Vec<Vec<f64>> = s.iter().map(|&i| generators[i].clone()).collect();
                    let nv = hull::null_vector(&rows, n);
                    let norm: f64 = nv.iter().map(|c| c * c).sum::<f64>().sqrt();
                    let row_scale: f64 =
                        rows.iter().map(|r| r.iter().map(|c| c * c).sum::<f64>().sqrt()).product();
                    if norm <= 1e-12 * row_scale.max(1e-300) {
                        return; // subset does not span a hyperplane
                    }
                    let nv: Vec<f64> = nv.iter().map(|c| c / norm).collect();
                    let dup = normals.iter().any(|q: &Vec<f64>| {
                        let dot: f64 = q.iter().zip(&nv).map(|(a, b)| a * b).sum();
                        dot.abs() > 1.0 - 1e-9
                    });
                    if !dup {
                        normals.push(nv);
                    }
                });
                let mut planes = Vec::with_capacity(2 * normals.len());
                for nv in normals {
                    let neg: Vec<f64> = nv.iter().map(|c| -c).collect();
                    let hp = self.support_value(&nv)?;
                    let hm = self.support_value(&neg)?;
                    planes.push((nv, hp));
                    planes.push((neg, hm));
                }
                Ok(planes)
            }
            ConvexBody::VPolytope { vertices } => {
                let h = convex_hull(vertices, limits.vertex_budget)?;
                if h.affine_dim < n {
                    return Err(Error::DegenerateTuple(
                        "facet planes of a lower-dimensional polytope".into(),
                    ));
                }
                Ok(h.planes)
            }
        }
    }
}

/// Rank of a vector list in `R^d` by Gram-Schmidt with a relative tolerance.
pub(crate) fn rank_of(vecs: &[Vec<f64>], d: usize) -> usize {
    let scale = 1.0 + vecs.iter().flat_map(|v| v.iter()).fold(0.0f64, |m, c| m.max(c.abs()));
    let eps = 1e-9 * scale;
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vecs {
        let mut r = v.clone();
        for q in &basis {
            let t: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            for (rc, qc) in r.iter_mut().zip(q) {
                *rc -= t * qc;
            }
        }
        let norm: f64 = r.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > eps {
            for c in r.iter_mut() {
                *c /= norm;
            }
            basis.push(r);
            if basis.len() == d {
                break;
            }
        }
    }
    basis.len()
}

/// Minkowski combination `sum_i weights[i] * bodies[i]`.
///
/// All weights must be nonnegative with at least one positive.  All-box
/// inputs stay boxes; box/zonotope inputs stay zonotopes; any polytope forces
/// vertex-sum enumeration (product of per-body vertex counts, subject to the
/// vertex budget) followed by extreme-point filtering.
pub fn minkowski_combine(weights: &[f64], bodies: &[ConvexBody]) -> Result<ConvexBody> {
    minkowski_combine_with(weights, bodies, &Limits::default())
}

/// [`minkowski_combine`] with explicit limits.
pub fn minkowski_combine_with(
    weights: &[f64],
    bodies: &[ConvexBody],
    limits: &Limits,
) -> Result<ConvexBody> {
    if bodies.is_empty() || weights.len() != bodies.len() {
        return Err(Error::InvalidParameter(format!(
            "weight/body count mismatch: {} vs {}",
            weights.len(),
            bodies.len()
        )));
    }
    let n = bodies[0].dim();
    for b in bodies {
        if b.dim() != n {
            return Err(Error::DimensionMismatch { expected: n, got: b.dim() });
        }
    }
    if weights.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
    }
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InvalidParameter("at least one weight must be positive".into()));
    }
    let active: Vec<(f64, &ConvexBody)> =
        weights.iter().zip(bodies).filter(|(&w, _)| w > 0.0).map(|(&w, b)| (w, b)).collect();

    let any_poly = active.iter().any(|(_, b)| matches!(b, ConvexBody::VPolytope { .. }));
    let all_box = active.iter().all(|(_, b)| matches!(b, ConvexBody::Box { .. }));

    if all_box {
        let mut lower = vec![0.0; n];
        let mut upper = vec![0.0; n];
        for (w, b) in &active {
            if let ConvexBody::Box { lower: l, upper: u } = b {
                for j in 0..n {
                    lower[j] += w * l[j];
                    upper[j] += w * u[j];
                }
            }
        }
        return ConvexBody::cuboid(lower, upper);
    }
    if !any_poly {
        let mut center = vec![0.0; n];
        let mut generators = Vec::new();
        for (w, b) in &active {
            match b {
                ConvexBody::Box { lower, upper } => {
                    for j in 0..n {
                        center[j] += w * lower[j];
                        let gap = w * (upper[j] - lower[j]);
                        if gap > 0.0 {
                            let mut e = vec![0.0; n];
                            e[j] = gap;
                            generators.push(e);
                        }
                    }
                }
                ConvexBody::Zonotope { center: c, generators: gs } => {
                    for j in 0..n {
                        center[j] += w * c[j];
                    }
                    for g in gs {
                        generators.push(g.iter().map(|c| c * w).collect());
                    }
                }
                ConvexBody::VPolytope { .. } => unreachable!(),
            }
        }
        return ConvexBody::zonotope(center, generators);
    }

    // Vertex-sum route.
    let mut lists: Vec<Vec<Vec<f64>>> = Vec::with_capacity(active.len());
    let mut count: usize = 1;
    for (w, b) in &active {
        let vs = b.scale(*w)?.vertex_candidates(limits)?;
        count = count.checked_mul(vs.len()).filter(|&c| c <= limits.vertex_budget).ok_or(
            Error::RepresentationBlowup { candidates: usize::MAX, budget: limits.vertex_budget },
        )?;
        lists.push(vs);
    }
    let mut candidates: Vec<Vec<f64>> = Vec::with_capacity(count);
    let mut odo = vec![0usize; lists.len()];
    loop {
        let mut v = vec![0.0; n];
        for (k, list) in lists.iter().enumerate() {
            for (c, vc) in v.iter_mut().zip(&list[odo[k]]) {
                *c += vc;
            }
        }
        candidates.push(v);
        let mut k = 0;
        loop {
            odo[k] += 1;
            if odo[k] < lists[k].len() {
                break;
            }
            odo[k] = 0;
            k += 1;
            if k == lists.len() {
                let h = convex_hull(&candidates, limits.vertex_budget)?;
                let kept: Vec<Vec<f64>> =
                    h.extreme.iter().map(|&i| candidates[i].clone()).collect();
                return Ok(ConvexBody::VPolytope { vertices: kept });
            }
        }
    }
}

/// A tuple of `n` convex bodies in `R^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BodyTuple {
    bodies: Vec<ConvexBody>,
}

impl BodyTuple {
    /// Requires `bodies.len() == ambient dimension` and a common dimension.
    pub fn new(bodies: Vec<ConvexBody>) -> Result<Self> {
        if bodies.is_empty() {
            return Err(Error::InvalidBody("empty body tuple".into()));
        }
        let n = bodies.len();
        check_dim(n)?;
        for b in &bodies {
            if b.dim() != n {
                return Err(Error::DimensionMismatch { expected: n, got: b.dim() });
            }
        }
        Ok(BodyTuple { bodies })
    }

    pub fn n(&self) -> usize {
        self.bodies.len()
    }

    pub fn bodies(&self) -> &[ConvexBody] {
        &self.bodies
    }

    pub fn into_bodies(self) -> Vec<ConvexBody> {
        self.bodies
    }

    /// Affine dimension of `sum_{i in subset} K_i`, computed from spanning
    /// direction sets (no hull needed: directions of a sum are the union).
    pub fn sum_affine_dim(&self, subset: &[usize]) -> Result<usize> {
        let mut dirs = Vec::new();
        for &i in subset {
            let b = self
                .bodies
                .get(i)
                .ok_or_else(|| Error::InvalidParameter(format!("body index {i} out of range")))?;
            dirs.extend(b.directions());
        }
        Ok(rank_of(&dirs, self.n()))
    }

    /// Affine dimension of body `i`.
    pub fn affine_dim(&self, i: usize) -> usize {
        self.bodies[i].affine_dimension()
    }

    /// Minkowski combination with the given nonnegative weights.
    pub fn combine(&self, weights: &[f64]) -> Result<ConvexBody> {
        self.combine_with(weights, &Limits::default())
    }

    /// [`BodyTuple::combine`] with explicit limits.
    pub fn combine_with(&self, weights: &[f64], limits: &Limits) -> Result<ConvexBody> {
        if weights.len() != self.n() {
            return Err(Error::DimensionMismatch { expected: self.n(), got: weights.len() });
        }
        minkowski_combine_with(weights, &self.bodies, limits)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> ConvexBody {
        ConvexBody::cuboid(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn box_volume_is_gap_product() {
        let b = ConvexBody::cuboid(vec![0.0, -1.0, 2.0], vec![2.0, 1.0, 2.5]).unwrap();
        assert_eq!(b.volume().unwrap(), 2.0 * 2.0 * 0.5);
    }

    #[test]
    fn hexagon_zonotope_volume_is_three() {
        let z = ConvexBody::zonotope(
            vec![0.0, 0.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        assert_eq!(z.volume().unwrap(), 3.0);
        // Cross-check through vertex expansion and hull triangulation.
        let verts = z.vertex_candidates(&Limits::default()).unwrap();
        let p = ConvexBody::vpolytope(verts).unwrap();
        assert!((p.volume().unwrap() - 3.0).abs() < 1e-9 * 3.0);
        if let ConvexBody::VPolytope { vertices } = &p {
            assert_eq!(vertices.len(), 6);
        }
    }

    #[test]
    fn degenerate_zonotope_has_zero_volume() {
        let z = ConvexBody::zonotope(
            vec![0.0, 0.0, 0.0],
            vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![1.0, 1.0, 0.0]],
        )
        .unwrap();
        assert_eq!(z.volume().unwrap(), 0.0);
        assert_eq!(z.affine_dimension(), 2);
    }

    #[test]
    fn vpolytope_constructor_filters_non_extreme_points() {
        let p = ConvexBody::vpolytope(vec![
            vec![0.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![1.0, 1.0],
            vec![0.5, 0.5],
            vec![1.0, 1.0],
            vec![0.5, 0.0],
        ])
        .unwrap();
        if let ConvexBody::VPolytope { vertices } = &p {
            assert_eq!(vertices.len(), 4);
        } else {
            panic!("expected polytope");
        }
        assert!((p.volume().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn support_values_match_examples() {
        let b = unit_square();
        assert_eq!(b.support_value(&[1.0, 1.0]).unwrap(), 2.0);
        let z = ConvexBody::zonotope(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(z.support_value(&[-1.0, -1.0]).unwrap(), 0.0);
        assert_eq!(z.support_value(&[1.0, 1.0]).unwrap(), 2.0);
        let p = ConvexBody::vpolytope(vec![vec![0.0, 0.0], vec![2.0, 1.0]]).unwrap();
        assert_eq!(p.support_value(&[1.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn support_is_additive_under_combination() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(3, 0);
        let z = ConvexBody::zonotope(
            vec![0.2, -0.1, 0.4],
            vec![vec![1.0, 0.3, 0.0], vec![0.0, 1.0, 0.5], vec![0.2, 0.0, 1.0]],
        )
        .unwrap();
        let b = ConvexBody::cuboid(vec![-1.0, 0.0, 0.0], vec![0.5, 2.0, 0.25]).unwrap();
        let s = minkowski_combine(&[2.0, 0.5], &[z.clone(), b.clone()]).unwrap();
        for _ in 0..32 {
            let dir: Vec<f64> = (0..3).map(|_| rng.gen::<f64>() - 0.5).collect();
            if dir.iter().all(|&c| c == 0.0) {
                continue;
            }
            let lhs = s.support_value(&dir).unwrap();
            let rhs = 2.0 * z.support_value(&dir).unwrap() + 0.5 * b.support_value(&dir).unwrap();
            assert!((lhs - rhs).abs() < 1e-9 * (1.0 + rhs.abs()));
        }
    }

    #[test]
    fn combine_type_promotion() {
        let b = unit_square();
        let z = ConvexBody::zonotope(vec![0.0, 0.0], vec![vec![1.0, 1.0]]).unwrap();
        let p =
            ConvexBody::vpolytope(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert!(matches!(
            minkowski_combine(&[1.0, 1.0], &[b.clone(), b.clone()]).unwrap(),
            ConvexBody::Box { .. }
        ));
        assert!(matches!(
            minkowski_combine(&[1.0, 1.0], &[b.clone(), z.clone()]).unwrap(),
            ConvexBody::Zonotope { .. }
        ));
        assert!(matches!(
            minkowski_combine(&[1.0, 1.0], &[b, p]).unwrap(),
            ConvexBody::VPolytope { .. }
        ));
    }

    #[test]
    fn segments_combine_to_unit_square() {
        let s1 = ConvexBody::segment(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let s2 = ConvexBody::segment(vec![0.0, 0.0], vec![0.0, 1.0]).unwrap();
        let sum = minkowski_combine(&[1.0, 1.0], &[s1, s2]).unwrap();
        match &sum {
            ConvexBody::Zonotope { center, generators } => {
                assert_eq!(center, &vec![0.0, 0.0]);
                assert_eq!(generators.len(), 2);
            }
            other => panic!("expected zonotope, got {other:?}"),
        }
        assert_eq!(sum.volume().unwrap(), 1.0);
        assert_eq!(sum.support_value(&[1.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn zero_weights_drop_bodies_but_one_positive_required() {
        let b = unit_square();
        let p = ConvexBody::vpolytope(vec![vec![3.0, 4.0]]).unwrap();
        let s = minkowski_combine(&[1.0, 0.0], &[b.clone(), p]).unwrap();
        assert!(matches!(s, ConvexBody::Box { .. }));
        assert!(minkowski_combine(&[0.0, 0.0], &[b.clone(), b]).is_err());
    }

    #[test]
    fn combine_scaling_matches_volume_homogeneity() {
        let p = ConvexBody::vpolytope(vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 1.0],
            vec![1.5, 1.5],
        ])
        .unwrap();
        let v1 = p.volume().unwrap();
        let v2 = p.scale(2.5).unwrap().volume().unwrap();
        assert!((v2 - v1 * 2.5f64.powi(2)).abs() < 1e-12 * v2);
    }

    #[test]
    fn translation_leaves_volume_and_affine_dim_alone() {
        let z = ConvexBody::zonotope(
            vec![0.0, 0.0],
            vec![vec![1.0, 0.2], vec![-0.3, 1.0], vec![0.5, 0.5]],
        )
        .unwrap();
        let t = z.translate(&[5.0, -7.0]).unwrap();
        assert!((t.volume().unwrap() - z.volume().unwrap()).abs() < 1e-12);
        assert_eq!(t.affine_dimension(), z.affine_dimension());
    }

    #[test]
    fn tuple_checks_arity_and_dimension() {
        let b = unit_square();
        assert!(BodyTuple::new(vec![b.clone(), b.clone()]).is_ok());
        assert!(BodyTuple::new(vec![b.clone()]).is_err());
        assert!(BodyTuple::new(vec![b.clone(), b.clone(), b]).is_err());
    }

    #[test]
    fn sum_affine_dim_on_segment_pair() {
        let s1 = ConvexBody::segment(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let s2 = ConvexBody::segment(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        let t = BodyTuple::new(vec![s1, s2]).unwrap();
        assert_eq!(t.sum_affine_dim(&[0]).unwrap(), 1);
        assert_eq!(t.sum_affine_dim(&[0, 1]).unwrap(), 1);
    }

    #[test]
    fn dimension_cap_is_enforced() {
        let lower = vec![0.0; 9];
        let upper = vec![1.0; 9];
        match ConvexBody::cuboid(lower, upper) {
            Err(Error::DimensionCap { dim: 9, cap: 8 }) => {}
            other => panic!("expected dimension cap, got {other:?}"),
        }
    }

    #[test]
    fn subset_walker_visits_all_combinations() {
        let mut seen = Vec::new();
        for_each_subset(5, 3, |s| seen.push(s.to_vec()));
        assert_eq!(seen.len(), 10);
        assert_eq!(seen[0], vec![0, 1, 2]);
        assert_eq!(seen[9], vec![2, 3, 4]);
    }
}
