//! Convex polytopes in dimensions 1-3 with both H- and V-representations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{canonical_sign, cross, dot, norm, solve, sub};

/// Outward unit normal and offset: the set {x : <normal, x> <= offset}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

/// A full-dimensional convex polytope. Both representations are kept and
/// checked against each other at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct Polytope {
    dim: usize,
    halfspaces: Vec<HalfSpace>,
    vertices: Vec<Vec<f64>>,
    facet_areas: Vec<f64>,
    volume: f64,
    axis_box: Option<(Vec<f64>, Vec<f64>)>,
}

fn scale_tol(points: &[Vec<f64>]) -> f64 {
    let m = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |a, b| a.max(b.abs()));
    1e-9 * (1.0 + m)
}

/// Counter-clockwise hull of planar points (monotone chain, collinear
/// points dropped).
pub(crate) fn hull_2d(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut pts: Vec<[f64; 2]> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup_by(|a, b| (a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: &[f64; 2], a: &[f64; 2], b: &[f64; 2]| {
        (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
    };
    let scale = pts
        .iter()
        .fold(0.0f64, |m, p| m.max(p[0].abs()).max(p[1].abs()));
    let eps = 1e-12 * (1.0 + scale * scale);
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && turn(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= eps {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && turn(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= eps {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

pub(crate) fn shoelace(poly: &[[f64; 2]]) -> f64 {
    let m = poly.len();
    if m < 3 {
        return 0.0;
    }
    let mut a = 0.0;
    for i in 0..m {
        let p = poly[i];
        let q = poly[(i + 1) % m];
        a += p[0] * q[1] - p[1] * q[0];
    }
    0.5 * a
}

/// Area of the convex polygon formed by 3-D points lying in the plane with
/// unit normal `normal`.
fn planar_polygon_area(points: &[Vec<f64>], normal: &[f64]) -> f64 {
    if points.len() < 3 {
        return 0.0;
    }
    let (u, v) = plane_basis(normal);
    let flat: Vec<[f64; 2]> = points.iter().map(|p| [dot(p, &u), dot(p, &v)]).collect();
    shoelace(&hull_2d(&flat)).abs()
}

fn plane_basis(normal: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let helper = if normal[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let u = cross(normal, &helper);
    let un = norm(&u);
    let u: Vec<f64> = u.iter().map(|c| c / un).collect();
    let v = cross(normal, &u).to_vec();
    (u, v)
}

fn same_plane(a: &HalfSpace, b: &HalfSpace, tol: f64) -> bool {
    a.normal
        .iter()
        .zip(&b.normal)
        .all(|(x, y)| (x - y).abs() < 1e-9)
        && (a.offset - b.offset).abs() < tol
}

/// Supporting hyperplanes of the hull of `points` (n = 2 or 3), deduplicated.
fn facets_of_points(dim: usize, points: &[Vec<f64>]) -> Result<Vec<HalfSpace>> {
    let tol = scale_tol(points);
    let mut out: Vec<HalfSpace> = Vec::new();
    let push = |h: HalfSpace, out: &mut Vec<HalfSpace>| {
        if !out.iter().any(|g| same_plane(g, &h, tol)) {
            out.push(h);
        }
    };
    match dim {
        2 => {
            let flat: Vec<[f64; 2]> = points.iter().map(|p| [p[0], p[1]]).collect();
            let hull = hull_2d(&flat);
            if hull.len() < 3 || shoelace(&hull).abs() < 1e-14 {
                return Err(Error::Representation("polygon has empty interior".into()));
            }
            for i in 0..hull.len() {
                let p = hull[i];
                let q = hull[(i + 1) % hull.len()];
                let d = [q[0] - p[0], q[1] - p[1]];
                let l = (d[0] * d[0] + d[1] * d[1]).sqrt();
                let normal = vec![d[1] / l, -d[0] / l];
                let offset = normal[0] * p[0] + normal[1] * p[1];
                push(HalfSpace { normal, offset }, &mut out);
            }
        }
        3 => {
            let m = points.len();
            for i in 0..m {
                for j in i + 1..m {
                    let a = sub(&points[j], &points[i]);
                    for k in j + 1..m {
                        let b = sub(&points[k], &points[i]);
                        let c = cross(&a, &b);
                        let cn = norm(&c);
                        if cn < 1e-12 * (1.0 + norm(&a) * norm(&b)) {
                            continue;
                        }
                        let mut normal: Vec<f64> = c.iter().map(|x| x / cn).collect();
                        let mut offset = dot(&normal, &points[i]);
                        let mut above = false;
                        let mut below = false;
                        for p in points {
                            let d = dot(&normal, p) - offset;
                            if d > tol {
                                above = true;
                            } else if d < -tol {
                                below = true;
                            }
                            if above && below {
                                break;
                            }
                        }
                        if above && below {
                            continue;
                        }
                        if above {
                            normal.iter_mut().for_each(|x| *x = -*x);
                            offset = -offset;
                        }
                        push(HalfSpace { normal, offset }, &mut out);
                    }
                }
            }
            if out.len() < 4 {
                return Err(Error::Representation("polytope has empty interior".into()));
            }
        }
        _ => unreachable!(),
    }
    Ok(out)
}

/// Vertices of {x : <a_i, x> <= b_i} for n = 2 or 3 by enumerating
/// n-subsets of the constraints.
pub(crate) fn enumerate_vertices(dim: usize, planes: &[HalfSpace]) -> Vec<Vec<f64>> {
    let m = planes.len();
    let scale = planes.iter().fold(0.0f64, |a, h| a.max(h.offset.abs()));
    let tol = 1e-9 * (1.0 + scale);
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut consider = |x: Vec<f64>| {
        if planes.iter().all(|h| dot(&h.normal, &x) <= h.offset + tol)
            && !out
                .iter()
                .any(|v| v.iter().zip(&x).all(|(a, b)| (a - b).abs() < tol))
        {
            out.push(x);
        }
    };
    match dim {
        2 => {
            for i in 0..m {
                for j in i + 1..m {
                    let a = vec![planes[i].normal.clone(), planes[j].normal.clone()];
                    if let Some(x) = solve(a, vec![planes[i].offset, planes[j].offset]) {
                        consider(x);
                    }
                }
            }
        }
        3 => {
            for i in 0..m {
                for j in i + 1..m {
                    for k in j + 1..m {
                        let a = vec![
                            planes[i].normal.clone(),
                            planes[j].normal.clone(),
                            planes[k].normal.clone(),
                        ];
                        let b = vec![planes[i].offset, planes[j].offset, planes[k].offset];
                        if let Some(x) = solve(a, b) {
                            consider(x);
                        }
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    out
}

/// Volume of an H-polytope in dimension 2 or 3 (zero when empty).
pub(crate) fn h_polytope_volume(dim: usize, planes: &[HalfSpace]) -> f64 {
    let verts = enumerate_vertices(dim, planes);
    if verts.len() <= dim {
        return 0.0;
    }
    match dim {
        2 => {
            let flat: Vec<[f64; 2]> = verts.iter().map(|p| [p[0], p[1]]).collect();
            shoelace(&hull_2d(&flat)).abs()
        }
        _ => {
            let c = centroid(&verts);
            let tol = scale_tol(&verts);
            let mut vol = 0.0;
            for h in planes {
                let on: Vec<Vec<f64>> = verts
                    .iter()
                    .filter(|v| (dot(&h.normal, v) - h.offset).abs() <= tol)
                    .cloned()
                    .collect();
                if on.len() >= 3 {
                    let area = planar_polygon_area(&on, &h.normal);
                    vol += (h.offset - dot(&h.normal, &c)) * area;
                }
            }
            // a plane listed twice (coincident constraints) would double count
            vol / 3.0
        }
    }
}

fn centroid(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points[0].len();
    let mut c = vec![0.0; n];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    c.iter_mut().for_each(|x| *x /= points.len() as f64);
    c
}

impl Polytope {
    /// Build from both representations and check them against each other.
    pub fn new(halfspaces: Vec<HalfSpace>, vertices: Vec<Vec<f64>>) -> Result<Self> {
        let dim = vertices
            .first()
            .map(|v| v.len())
            .ok_or_else(|| Error::Representation("polytope needs vertices".into()))?;
        if !(1..=3).contains(&dim) {
            return Err(Error::Unsupported(format!(
                "polytopes are supported in dimensions 1-3, got {dim}"
            )));
        }
        if vertices.iter().any(|v| v.len() != dim || v.iter().any(|c| !c.is_finite())) {
            return Err(Error::Representation("inconsistent vertex dimensions".into()));
        }
        let mut hs = Vec::with_capacity(halfspaces.len());
        for h in halfspaces {
            if h.normal.len() != dim {
                return Err(Error::Representation("normal has wrong dimension".into()));
            }
            let r = norm(&h.normal);
            if !(r > 0.0) || !h.offset.is_finite() {
                return Err(Error::Representation("degenerate half-space".into()));
            }
            hs.push(HalfSpace {
                normal: h.normal.iter().map(|c| c / r).collect(),
                offset: h.offset / r,
            });
        }
        let tol = scale_tol(&vertices);
        for v in &vertices {
            for h in &hs {
                if dot(&h.normal, v) > h.offset + tol {
                    return Err(Error::Representation(format!(
                        "vertex {v:?} violates half-space {h:?}"
                    )));
                }
            }
        }
        for h in &hs {
            let tight = vertices
                .iter()
                .filter(|v| (dot(&h.normal, v) - h.offset).abs() <= tol)
                .count();
            if tight < dim {
                return Err(Error::Representation(format!(
                    "half-space {h:?} does not support a facet"
                )));
            }
        }
        let facet_areas: Vec<f64> = hs
            .iter()
            .map(|h| match dim {
                1 => 1.0,
                2 => {
                    let t = [-h.normal[1], h.normal[0]];
                    let proj: Vec<f64> = vertices
                        .iter()
                        .filter(|v| (dot(&h.normal, v) - h.offset).abs() <= tol)
                        .map(|v| t[0] * v[0] + t[1] * v[1])
                        .collect();
                    let lo = proj.iter().cloned().fold(f64::INFINITY, f64::min);
                    let hi = proj.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    hi - lo
                }
                _ => {
                    let on: Vec<Vec<f64>> = vertices
                        .iter()
                        .filter(|v| (dot(&h.normal, v) - h.offset).abs() <= tol)
                        .cloned()
                        .collect();
                    planar_polygon_area(&on, &h.normal)
                }
            })
            .collect();
        if facet_areas.iter().any(|a| !(*a > 1e-14)) {
            return Err(Error::Representation("facet with zero area".into()));
        }
        // every vertex must be cut out by the half-spaces: n independent tight facets
        for v in &vertices {
            let tight = hs
                .iter()
                .filter(|h| (dot(&h.normal, v) - h.offset).abs() <= tol)
                .count();
            if tight < dim {
                return Err(Error::Representation(format!(
                    "point {v:?} is not a vertex"
                )));
            }
        }
        let c = centroid(&vertices);
        let volume: f64 = hs
            .iter()
            .zip(&facet_areas)
            .map(|(h, a)| (h.offset - dot(&h.normal, &c)) * a)
            .sum::<f64>()
            / dim as f64;
        if !(volume > 0.0) {
            return Err(Error::Representation("polytope has empty interior".into()));
        }
        let axis_box = detect_box(dim, &hs);
        Ok(Self {
            dim,
            halfspaces: hs,
            vertices,
            facet_areas,
            volume,
            axis_box,
        })
    }

    /// Convex hull of a point cloud.
    pub fn from_vertices(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .map(|v| v.len())
            .ok_or_else(|| Error::Representation("empty point set".into()))?;
        match dim {
            1 => {
                let lo = points.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
                let hi = points.iter().map(|p| p[0]).fold(f64::NEG_INFINITY, f64::max);
                if !(hi > lo) {
                    return Err(Error::Representation("degenerate interval".into()));
                }
                Self::new(
                    vec![
                        HalfSpace {
                            normal: vec![1.0],
                            offset: hi,
                        },
                        HalfSpace {
                            normal: vec![-1.0],
                            offset: -lo,
                        },
                    ],
                    vec![vec![hi], vec![lo]],
                )
            }
            2 | 3 => {
                let hs = facets_of_points(dim, &points)?;
                let tol = scale_tol(&points);
                let mut verts: Vec<Vec<f64>> = Vec::new();
                for p in &points {
                    let tight = hs
                        .iter()
                        .filter(|h| (dot(&h.normal, p) - h.offset).abs() <= tol)
                        .count();
                    if tight >= dim
                        && !verts
                            .iter()
                            .any(|v| v.iter().zip(p).all(|(a, b)| (a - b).abs() <= tol))
                    {
                        verts.push(p.clone());
                    }
                }
                if dim == 2 {
                    // keep counter-clockwise order
                    let flat: Vec<[f64; 2]> = verts.iter().map(|p| [p[0], p[1]]).collect();
                    verts = hull_2d(&flat).iter().map(|p| p.to_vec()).collect();
                }
                Self::new(hs, verts)
            }
            _ => Err(Error::Unsupported(format!(
                "convex hulls are supported in dimensions 1-3, got {dim}"
            ))),
        }
    }

    /// Intersection of half-spaces; redundant constraints are dropped.
    pub fn from_halfspaces(halfspaces: Vec<HalfSpace>) -> Result<Self> {
        let dim = halfspaces
            .first()
            .map(|h| h.normal.len())
            .ok_or_else(|| Error::Representation("no half-spaces".into()))?;
        let hs: Vec<HalfSpace> = halfspaces
            .into_iter()
            .map(|h| {
                let r = norm(&h.normal);
                HalfSpace {
                    normal: h.normal.iter().map(|c| c / r).collect(),
                    offset: h.offset / r,
                }
            })
            .collect();
        match dim {
            1 => {
                let hi = hs
                    .iter()
                    .filter(|h| h.normal[0] > 0.0)
                    .map(|h| h.offset)
                    .fold(f64::INFINITY, f64::min);
                let lo = hs
                    .iter()
                    .filter(|h| h.normal[0] < 0.0)
                    .map(|h| -h.offset)
                    .fold(f64::NEG_INFINITY, f64::max);
                if !hi.is_finite() || !lo.is_finite() {
                    return Err(Error::Representation("unbounded interval".into()));
                }
                Self::from_vertices(vec![vec![lo], vec![hi]])
            }
            2 | 3 => {
                let verts = enumerate_vertices(dim, &hs);
                if verts.len() <= dim {
                    return Err(Error::Representation(
                        "half-spaces do not bound a full-dimensional polytope".into(),
                    ));
                }
                let p = Self::from_vertices(verts)?;
                // boundedness: every input constraint must hold on the hull and
                // the hull must satisfy the recession check implicitly via
                // vertex enumeration; an unbounded set yields too few facets
                // to enclose the vertices, caught by the volume check below
                let probe = h_polytope_volume(dim, &hs);
                if (probe - p.volume).abs() > 1e-6 * p.volume.max(1.0) {
                    return Err(Error::Representation(
                        "half-spaces describe an unbounded set".into(),
                    ));
                }
                Ok(p)
            }
            _ => Err(Error::Unsupported(format!(
                "polytopes are supported in dimensions 1-3, got {dim}"
            ))),
        }
    }

    /// Axis-aligned box [lower, upper].
    pub fn axis_box(lower: &[f64], upper: &[f64]) -> Result<Self> {
        let dim = lower.len();
        if dim != upper.len() || lower.iter().zip(upper).any(|(a, b)| !(b > a)) {
            return Err(Error::Representation("box needs lower < upper per axis".into()));
        }
        let mut verts = Vec::new();
        for mask in 0..(1usize << dim) {
            verts.push(
                (0..dim)
                    .map(|i| if mask >> i & 1 == 1 { upper[i] } else { lower[i] })
                    .collect::<Vec<f64>>(),
            );
        }
        Self::from_vertices(verts)
    }

    /// Regular m-gon inscribed in the circle of given radius, centred at the origin.
    pub fn regular_polygon(m: usize, radius: f64) -> Result<Self> {
        if m < 3 {
            return Err(Error::Parameter("a polygon needs at least 3 vertices".into()));
        }
        let verts = (0..m)
            .map(|k| {
                let a = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                vec![radius * a.cos(), radius * a.sin()]
            })
            .collect();
        Self::from_vertices(verts)
    }

    /// {x : sum |x_i| <= r}.
    pub fn cross_polytope(dim: usize, r: f64) -> Result<Self> {
        let mut verts = Vec::new();
        for i in 0..dim {
            for sgn in [1.0, -1.0] {
                let mut v = vec![0.0; dim];
                v[i] = sgn * r;
                verts.push(v);
            }
        }
        Self::from_vertices(verts)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn facet_areas(&self) -> &[f64] {
        &self.facet_areas
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    pub fn surface_area(&self) -> f64 {
        self.facet_areas.iter().sum()
    }

    /// Some((lower, upper)) when every facet normal is a coordinate axis.
    pub fn as_axis_box(&self) -> Option<(&[f64], &[f64])> {
        self.axis_box
            .as_ref()
            .map(|(a, b)| (a.as_slice(), b.as_slice()))
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.halfspaces
            .iter()
            .all(|h| dot(&h.normal, x) <= h.offset)
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| dot(v, u))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Distance from interior point x to the boundary along unit u.
    pub fn ray_exit(&self, x: &[f64], u: &[f64]) -> f64 {
        let mut best = f64::INFINITY;
        for h in &self.halfspaces {
            let d = dot(&h.normal, u);
            if d > 0.0 {
                let t = (h.offset - dot(&h.normal, x)) / d;
                if t < best {
                    best = t;
                }
            }
        }
        best.max(0.0)
    }

    pub fn origin_interior(&self) -> bool {
        self.halfspaces.iter().all(|h| h.offset > 0.0)
    }

    /// Same polytope moved by `z`.
    pub fn translate(&self, z: &[f64]) -> Self {
        let mut p = self.clone();
        for h in &mut p.halfspaces {
            h.offset += dot(&h.normal, z);
        }
        for v in &mut p.vertices {
            for (c, d) in v.iter_mut().zip(z) {
                *c += d;
            }
        }
        p.axis_box = detect_box(p.dim, &p.halfspaces);
        p
    }

    /// |P| - |P cap (P + z)|, without forming the difference: for convex P
    /// it equals the integral over the shadow on z-perp of min(chord, |z|).
    pub fn covariogram_deficit(&self, z: &[f64]) -> f64 {
        let t = norm(z);
        if t == 0.0 {
            return 0.0;
        }
        if let Some((lo, hi)) = self.as_axis_box() {
            let mut acc = 0.0f64;
            for ((a, b), d) in lo.iter().zip(hi).zip(z) {
                let r = d.abs() / (b - a);
                if r >= 1.0 {
                    return self.volume;
                }
                acc += (-r).ln_1p();
            }
            return -acc.exp_m1() * self.volume;
        }
        let u: Vec<f64> = canonical_sign(z).iter().map(|c| c / t).collect();
        match self.dim {
            1 => t.min(self.volume),
            2 => {
                let v = [-u[1], u[0]];
                let cons: Vec<PlaneConstraint> = self
                    .halfspaces
                    .iter()
                    .map(|h| (dot(&h.normal, &u), dot(&h.normal, &v), h.offset))
                    .collect();
                let mut hs: Vec<f64> = self.vertices.iter().map(|x| dot(x, &v)).collect();
                hs.sort_by(f64::total_cmp);
                hs.dedup();
                section_deficit(&cons, &hs, t)
            }
            _ => {
                let k = (0..3)
                    .min_by(|&i, &j| u[i].abs().total_cmp(&u[j].abs()))
                    .unwrap();
                let mut e = [0.0; 3];
                e[k] = 1.0;
                let w = cross(&e, &u);
                let wn = norm(&w);
                let w: Vec<f64> = w.iter().map(|c| c / wn).collect();
                let v = cross(&u, &w);
                let slice = |c: f64| {
                    let cons: Vec<PlaneConstraint> = self
                        .halfspaces
                        .iter()
                        .map(|h| {
                            (dot(&h.normal, &u), dot(&h.normal, &v), h.offset - c * dot(&h.normal, &w))
                        })
                        .collect();
                    let heights = section_vertex_heights(&cons);
                    section_deficit(&cons, &heights, t)
                };
                let mut knots: Vec<f64> = self.vertices.iter().map(|x| dot(x, &w)).collect();
                knots.sort_by(f64::total_cmp);
                knots.dedup();
                crate::quadrature::adaptive_gk(&slice, &knots, 1e-12, 0.0, 2000)
                    .unwrap_or_else(|_| self.volume - self.covariogram(z))
            }
        }
    }

    /// |P cap (P + z)|.
    pub fn covariogram(&self, z: &[f64]) -> f64 {
        let z = canonical_sign(z);
        if let Some((lo, hi)) = self.as_axis_box() {
            return lo
                .iter()
                .zip(hi)
                .zip(&z)
                .map(|((a, b), d)| (b - a - d.abs()).max(0.0))
                .product();
        }
        match self.dim {
            1 => {
                let len = self.volume;
                (len - z[0].abs()).max(0.0)
            }
            2 => {
                let mut poly: Vec<[f64; 2]> = self
                    .vertices
                    .iter()
                    .map(|v| [v[0] + z[0], v[1] + z[1]])
                    .collect();
                for h in &self.halfspaces {
                    poly = clip_halfplane(&poly, h);
                    if poly.len() < 3 {
                        return 0.0;
                    }
                }
                shoelace(&poly).abs()
            }
            _ => {
                let mut planes = self.halfspaces.clone();
                planes.extend(self.halfspaces.iter().map(|h| HalfSpace {
                    normal: h.normal.clone(),
                    offset: h.offset + dot(&h.normal, &z),
                }));
                h_polytope_volume(3, &planes)
            }
        }
    }
}

/// Constraints of a planar section in coordinates (a, b): alpha a + beta b <= rhs.
type PlaneConstraint = (f64, f64, f64);

/// Chord length of a planar H-polygon along the a-axis at height b.
fn section_chord(cons: &[PlaneConstraint], b: f64) -> f64 {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for &(al, be, rhs) in cons {
        if al.abs() <= 1e-14 * (al.abs() + be.abs()) {
            continue;
        }
        let x = (rhs - be * b) / al;
        if al > 0.0 {
            hi = hi.min(x);
        } else {
            lo = lo.max(x);
        }
    }
    (hi - lo).max(0.0)
}

/// b-coordinates of the vertices of a planar H-polygon.
fn section_vertex_heights(cons: &[PlaneConstraint]) -> Vec<f64> {
    let scale = cons.iter().map(|c| c.2.abs()).fold(1.0, f64::max);
    let mut out = Vec::new();
    for i in 0..cons.len() {
        for j in i + 1..cons.len() {
            let (a1, b1, r1) = cons[i];
            let (a2, b2, r2) = cons[j];
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-12 {
                continue;
            }
            let a = (r1 * b2 - r2 * b1) / det;
            let b = (a1 * r2 - a2 * r1) / det;
            if cons.iter().all(|&(al, be, rhs)| al * a + be * b <= rhs + 1e-9 * scale) {
                out.push(b);
            }
        }
    }
    out.sort_by(f64::total_cmp);
    out.dedup_by(|x, y| (*x - *y).abs() <= 1e-13 * scale);
    out
}

/// integral over b of min(chord(b), t); the chord is linear between vertex
/// heights so each piece is integrated exactly.
fn section_deficit(cons: &[PlaneConstraint], heights: &[f64], t: f64) -> f64 {
    let mut total = 0.0;
    for w in heights.windows(2) {
        let (b0, b1) = (w[0], w[1]);
        let len = b1 - b0;
        if len <= 0.0 {
            continue;
        }
        let l0 = section_chord(cons, b0);
        let l1 = section_chord(cons, b1);
        total += if l0 <= t && l1 <= t {
            0.5 * (l0 + l1) * len
        } else if l0 >= t && l1 >= t {
            t * len
        } else {
            let f = (t - l0) / (l1 - l0);
            let lb = f * len;
            if l0 < t {
                0.5 * (l0 + t) * lb + t * (len - lb)
            } else {
                t * lb + 0.5 * (t + l1) * (len - lb)
            }
        };
    }
    total
}

fn detect_box(dim: usize, hs: &[HalfSpace]) -> Option<(Vec<f64>, Vec<f64>)> {
    if hs.len() != 2 * dim {
        return None;
    }
    let mut lo = vec![f64::NAN; dim];
    let mut hi = vec![f64::NAN; dim];
    for h in hs {
        let axis = h.normal.iter().position(|c| c.abs() == 1.0)?;
        if h.normal.iter().enumerate().any(|(i, c)| i != axis && *c != 0.0) {
            return None;
        }
        if h.normal[axis] > 0.0 {
            hi[axis] = h.offset;
        } else {
            lo[axis] = -h.offset;
        }
    }
    if lo.iter().chain(&hi).any(|c| c.is_nan()) {
        return None;
    }
    Some((lo, hi))
}

/// Sutherland-Hodgman step: keep the part of `poly` inside half-plane h.
fn clip_halfplane(poly: &[[f64; 2]], h: &HalfSpace) -> Vec<[f64; 2]> {
    let side = |p: &[f64; 2]| h.normal[0] * p[0] + h.normal[1] * p[1] - h.offset;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let da = side(&a);
        let db = side(&b);
        if da <= 0.0 {
            out.push(a);
        }
        if (da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0) {
            let t = da / (da - db);
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
    }
    out
}
