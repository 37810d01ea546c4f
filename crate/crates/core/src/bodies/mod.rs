//! Star and convex bodies: radial, gauge and support evaluation, volumes,
//! polars, dual mixed volumes, projection bodies and linear images.

mod polytope;
mod zonotope;

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::Rng;

use crate::constants::{omega, omega_or_one};
use crate::error::{param, Error, Result};
use crate::linalg::{dot, mat_vec, norm, sub, Direction};
use crate::quadrature::{adaptive_gk, SphereQuadrature};
use crate::rng::{random_direction, substream};

pub use polytope::{HalfSpace, Polytope};
pub use zonotope::{projection_body_polytope, Zonotope};

/// Euclidean ball.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Vec<f64>,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if center.is_empty() {
            return param("ball needs a dimension");
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::Representation(format!("ball radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius })
    }

    pub fn centered(n: usize, radius: f64) -> Result<Self> {
        Self::new(vec![0.0; n], radius)
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }
}

/// {x : <x - c, A (x - c)> <= 1} for symmetric positive-definite A.
#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    center: Vec<f64>,
    shape: DMatrix<f64>,
    // E = c + phi B^n with phi = A^{-1/2}
    phi: DMatrix<f64>,
    phi_inv: DMatrix<f64>,
    det_phi: f64,
}

impl Ellipsoid {
    pub fn new(shape: DMatrix<f64>, center: Vec<f64>) -> Result<Self> {
        let n = shape.nrows();
        if n == 0 || shape.ncols() != n || center.len() != n {
            return param("ellipsoid shape must be square and match the center");
        }
        let asym = (&shape - shape.transpose()).amax();
        if asym > 1e-12 * shape.amax().max(1.0) {
            return Err(Error::Representation("ellipsoid shape is not symmetric".into()));
        }
        let sym = (&shape + shape.transpose()) * 0.5;
        let eig = sym.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|l| !(*l > 1e-12)) {
            return Err(Error::Representation(
                "ellipsoid shape is not positive definite".into(),
            ));
        }
        let v = &eig.eigenvectors;
        let d_inv = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.powf(-0.5)));
        let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.sqrt()));
        let phi = v * d_inv * v.transpose();
        let phi_inv = v * d * v.transpose();
        let det_phi = eig.eigenvalues.iter().map(|l| l.powf(-0.5)).product();
        Ok(Self {
            center,
            shape: sym,
            phi,
            phi_inv,
            det_phi,
        })
    }

    /// Axis-aligned ellipsoid with the given semi-axes, centered at the origin.
    pub fn axis_aligned(semi_axes: &[f64]) -> Result<Self> {
        if semi_axes.iter().any(|a| !(*a > 0.0)) {
            return Err(Error::Representation("semi-axes must be positive".into()));
        }
        let shape = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            semi_axes.len(),
            semi_axes.iter().map(|a| 1.0 / (a * a)),
        ));
        Self::new(shape, vec![0.0; semi_axes.len()])
    }

    /// phi B^n + c for invertible phi.
    pub fn from_map(phi: &DMatrix<f64>, center: Vec<f64>) -> Result<Self> {
        let inv = invert(phi)?;
        let shape = inv.transpose() * &inv;
        let shape = (&shape + shape.transpose()) * 0.5;
        Self::new(shape, center)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn shape(&self) -> &DMatrix<f64> {
        &self.shape
    }

    /// Symmetric square root map phi with E = c + phi B^n.
    pub fn map(&self) -> &DMatrix<f64> {
        &self.phi
    }

    pub fn det_map(&self) -> f64 {
        self.det_phi
    }
}

pub(crate) fn invert(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return param("matrix must be square");
    }
    let det = m.determinant();
    let scale = m.amax().max(f64::MIN_POSITIVE).powi(n as i32);
    if !(det.abs() > 1e-13 * scale) {
        return param("matrix is singular");
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Parameter("matrix is singular".into()))
}

/// Convex bodies with exact geometric primitives.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexBody {
    Ball(Ball),
    Ellipsoid(Ellipsoid),
    Polytope(Polytope),
}

impl From<Ball> for ConvexBody {
    fn from(b: Ball) -> Self {
        ConvexBody::Ball(b)
    }
}

impl From<Ellipsoid> for ConvexBody {
    fn from(e: Ellipsoid) -> Self {
        ConvexBody::Ellipsoid(e)
    }
}

impl From<Polytope> for ConvexBody {
    fn from(p: Polytope) -> Self {
        ConvexBody::Polytope(p)
    }
}

/// Distance from x along unit u to the boundary of c + M^{-1}-image ball:
/// solve |b + t a| = 1 with a = M u, b = M (x - c).
fn quadric_exit(a: &[f64], b: &[f64]) -> f64 {
    let aa = dot(a, a);
    let ab = dot(a, b);
    let bb = dot(b, b);
    let disc = (ab * ab - aa * (bb - 1.0)).max(0.0);
    ((-ab + disc.sqrt()) / aa).max(0.0)
}

/// |B_r cap (B_r + z)| for |z| = d.
pub fn ball_covariogram(n: usize, r: f64, d: f64) -> f64 {
    if d >= 2.0 * r {
        return 0.0;
    }
    match n {
        1 => 2.0 * r - d,
        2 => 2.0 * r * r * (d / (2.0 * r)).acos() - 0.5 * d * (4.0 * r * r - d * d).sqrt(),
        3 => PI * (4.0 * r + d) * (2.0 * r - d).powi(2) / 12.0,
        _ => {
            let k = omega_or_one((n - 1) as f64);
            let e = 0.5 * (n as f64 - 1.0);
            2.0 * k
                * adaptive_gk(&|x: f64| (r * r - x * x).max(0.0).powf(e), &[0.5 * d, r], 1e-12, 0.0, 2000)
                    .unwrap_or(f64::NAN)
        }
    }
}

/// |B| - g_B(d) for a ball of radius r, computed without cancellation.
pub fn ball_covariogram_deficit(n: usize, r: f64, d: f64) -> f64 {
    let d = d.min(2.0 * r);
    match n {
        1 => d,
        2 => 2.0 * r * r * (d / (2.0 * r)).asin() + 0.5 * d * (4.0 * r * r - d * d).max(0.0).sqrt(),
        3 => PI * d * (r * r - d * d / 12.0),
        _ => {
            let k = omega_or_one((n - 1) as f64);
            let e = 0.5 * (n as f64 - 1.0);
            2.0 * k
                * adaptive_gk(&|x: f64| (r * r - x * x).max(0.0).powf(e), &[0.0, 0.5 * d], 1e-12, 0.0, 2000)
                    .unwrap_or(f64::NAN)
        }
    }
}

impl ConvexBody {
    pub fn dim(&self) -> usize {
        match self {
            ConvexBody::Ball(b) => b.dim(),
            ConvexBody::Ellipsoid(e) => e.dim(),
            ConvexBody::Polytope(p) => p.dim(),
        }
    }

    pub fn volume(&self) -> f64 {
        match self {
            ConvexBody::Ball(b) => omega(b.dim() as f64).unwrap() * b.radius.powi(b.dim() as i32),
            ConvexBody::Ellipsoid(e) => omega(e.dim() as f64).unwrap() * e.det_phi,
            ConvexBody::Polytope(p) => p.volume(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            ConvexBody::Ball(b) => norm(&sub(x, &b.center)) <= b.radius,
            ConvexBody::Ellipsoid(e) => {
                let y = sub(x, &e.center);
                dot(&y, &mat_vec(&e.shape, &y)) <= 1.0
            }
            ConvexBody::Polytope(p) => p.contains(x),
        }
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        match self {
            ConvexBody::Ball(b) => dot(&b.center, u) + b.radius * norm(u),
            ConvexBody::Ellipsoid(e) => dot(&e.center, u) + norm(&mat_vec(&e.phi, u)),
            ConvexBody::Polytope(p) => p.support(u),
        }
    }

    /// h(u) + h(-u).
    pub fn width(&self, u: &[f64]) -> f64 {
        let m: Vec<f64> = u.iter().map(|c| -c).collect();
        self.support(u) + self.support(&m)
    }

    /// Distance from x (inside the body) to the boundary along unit u.
    pub fn ray_exit(&self, x: &[f64], u: &[f64]) -> f64 {
        match self {
            ConvexBody::Ball(b) => {
                let a: Vec<f64> = u.iter().map(|c| c / b.radius).collect();
                let bb: Vec<f64> = sub(x, &b.center).iter().map(|c| c / b.radius).collect();
                quadric_exit(&a, &bb)
            }
            ConvexBody::Ellipsoid(e) => {
                let a = mat_vec(&e.phi_inv, u);
                let bb = mat_vec(&e.phi_inv, &sub(x, &e.center));
                quadric_exit(&a, &bb)
            }
            ConvexBody::Polytope(p) => p.ray_exit(x, u),
        }
    }

    /// Length of the chord through x in direction u.
    pub fn chord(&self, x: &[f64], u: &[f64]) -> f64 {
        let m: Vec<f64> = u.iter().map(|c| -c).collect();
        self.ray_exit(x, u) + self.ray_exit(x, &m)
    }

    /// Covariogram |E cap (E + z)|, exact for every family.
    pub fn covariogram(&self, z: &[f64]) -> f64 {
        match self {
            ConvexBody::Ball(b) => ball_covariogram(b.dim(), b.radius, norm(z)),
            ConvexBody::Ellipsoid(e) => {
                let w = mat_vec(&e.phi_inv, z);
                e.det_phi * ball_covariogram(e.dim(), 1.0, norm(&w))
            }
            ConvexBody::Polytope(p) => p.covariogram(z),
        }
    }

    /// |E| - g_E(z), accurate in relative terms as z -> 0.
    pub fn covariogram_deficit(&self, z: &[f64]) -> f64 {
        match self {
            ConvexBody::Ball(b) => ball_covariogram_deficit(b.dim(), b.radius, norm(z)),
            ConvexBody::Ellipsoid(e) => {
                let w = mat_vec(&e.phi_inv, z);
                e.det_phi * ball_covariogram_deficit(e.dim(), 1.0, norm(&w))
            }
            ConvexBody::Polytope(p) => p.covariogram_deficit(z),
        }
    }

    /// Brightness h_{Pi E}(u): (n-1)-volume of the shadow on u-perp (times |u|).
    pub fn brightness(&self, u: &[f64]) -> f64 {
        match self {
            ConvexBody::Ball(b) => {
                let n = b.dim();
                omega_or_one((n - 1) as f64) * b.radius.powi(n as i32 - 1) * norm(u)
            }
            ConvexBody::Ellipsoid(e) => {
                let n = e.dim();
                e.det_phi * omega_or_one((n - 1) as f64) * norm(&mat_vec(&e.phi_inv, u))
            }
            ConvexBody::Polytope(p) => p
                .halfspaces()
                .iter()
                .zip(p.facet_areas())
                .map(|(h, a)| 0.5 * a * dot(&h.normal, u).abs())
                .sum(),
        }
    }

    pub fn surface_area(&self) -> f64 {
        match self {
            ConvexBody::Ball(b) => {
                let n = b.dim();
                n as f64 * omega(n as f64).unwrap() * b.radius.powi(n as i32 - 1)
            }
            // Cauchy's formula: S = (1/omega_{n-1}) int_{S^{n-1}} h_{Pi E}
            ConvexBody::Ellipsoid(e) => {
                let n = e.dim();
                if n == 1 {
                    return 2.0;
                }
                let q = crate::quadrature::sphere_grid(n, if n == 2 { 4096 } else { 20000 })
                    .expect("supported dimension");
                q.integrate(|u| self.brightness(u.coords())) / omega_or_one((n - 1) as f64)
            }
            ConvexBody::Polytope(p) => p.surface_area(),
        }
    }

    /// Axis-aligned bounding box.
    pub fn bounding_box(&self) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim();
        let mut lo = vec![0.0; n];
        let mut hi = vec![0.0; n];
        for i in 0..n {
            let e = Direction::axis(n, i);
            hi[i] = self.support(e.coords());
            lo[i] = -self.support(e.neg().coords());
        }
        (lo, hi)
    }

    /// Point drawn uniformly from the body.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.dim();
        match self {
            ConvexBody::Ball(b) => {
                let u = random_direction(rng, n);
                let r = b.radius * rng.gen::<f64>().powf(1.0 / n as f64);
                u.iter().zip(&b.center).map(|(c, x)| x + r * c).collect()
            }
            ConvexBody::Ellipsoid(e) => {
                let u = random_direction(rng, n);
                let r = rng.gen::<f64>().powf(1.0 / n as f64);
                let y: Vec<f64> = u.iter().map(|c| r * c).collect();
                mat_vec(&e.phi, &y)
                    .iter()
                    .zip(&e.center)
                    .map(|(a, b)| a + b)
                    .collect()
            }
            ConvexBody::Polytope(p) => {
                let (lo, hi) = self.bounding_box();
                loop {
                    let x: Vec<f64> = lo
                        .iter()
                        .zip(&hi)
                        .map(|(a, b)| a + (b - a) * rng.gen::<f64>())
                        .collect();
                    if p.contains(&x) {
                        return x;
                    }
                }
            }
        }
    }

    pub fn translate(&self, z: &[f64]) -> Self {
        match self {
            ConvexBody::Ball(b) => ConvexBody::Ball(Ball {
                center: b.center.iter().zip(z).map(|(a, b)| a + b).collect(),
                radius: b.radius,
            }),
            ConvexBody::Ellipsoid(e) => {
                let mut e = e.clone();
                e.center.iter_mut().zip(z).for_each(|(a, b)| *a += b);
                ConvexBody::Ellipsoid(e)
            }
            ConvexBody::Polytope(p) => ConvexBody::Polytope(p.translate(z)),
        }
    }

    /// Image under the invertible linear map phi.
    pub fn linear_image(&self, phi: &DMatrix<f64>) -> Result<Self> {
        let n = self.dim();
        if phi.nrows() != n || phi.ncols() != n {
            return param("map dimension does not match the body");
        }
        let inv = invert(phi)?;
        Ok(match self {
            ConvexBody::Ball(b) => {
                let m = phi * b.radius;
                ConvexBody::Ellipsoid(Ellipsoid::from_map(&m, mat_vec(phi, &b.center))?)
            }
            ConvexBody::Ellipsoid(e) => {
                let m = phi * &e.phi;
                ConvexBody::Ellipsoid(Ellipsoid::from_map(&m, mat_vec(phi, &e.center))?)
            }
            ConvexBody::Polytope(p) => {
                let verts: Vec<Vec<f64>> = p.vertices().iter().map(|v| mat_vec(phi, v)).collect();
                let hs: Vec<HalfSpace> = p
                    .halfspaces()
                    .iter()
                    .map(|h| {
                        let m = crate::linalg::mat_t_vec(&inv, &h.normal);
                        let r = norm(&m);
                        HalfSpace {
                            normal: m.iter().map(|c| c / r).collect(),
                            offset: h.offset / r,
                        }
                    })
                    .collect();
                ConvexBody::Polytope(Polytope::new(hs, verts)?)
            }
        })
    }

    /// Polar body; the origin must be interior (and the center for balls
    /// and ellipsoids).
    pub fn polar(&self) -> Result<Self> {
        match self {
            ConvexBody::Ball(b) => {
                if b.center.iter().any(|c| *c != 0.0) {
                    return Err(Error::Representation("polar needs a centered ball".into()));
                }
                Ok(ConvexBody::Ball(Ball::new(b.center.clone(), 1.0 / b.radius)?))
            }
            ConvexBody::Ellipsoid(e) => {
                if e.center.iter().any(|c| *c != 0.0) {
                    return Err(Error::Representation("polar needs a centered ellipsoid".into()));
                }
                let inv = invert(&e.shape)?;
                let inv = (&inv + inv.transpose()) * 0.5;
                Ok(ConvexBody::Ellipsoid(Ellipsoid::new(inv, e.center.clone())?))
            }
            ConvexBody::Polytope(p) => {
                if !p.origin_interior() {
                    return Err(Error::Representation(
                        "origin is not interior to the polytope".into(),
                    ));
                }
                let verts = p
                    .halfspaces()
                    .iter()
                    .map(|h| h.normal.iter().map(|c| c / h.offset).collect())
                    .collect();
                Ok(ConvexBody::Polytope(Polytope::from_vertices(verts)?))
            }
        }
    }

    /// True when the origin lies strictly inside.
    pub fn origin_interior(&self) -> bool {
        let z = vec![0.0; self.dim()];
        match self {
            ConvexBody::Polytope(p) => p.origin_interior(),
            ConvexBody::Ball(b) => norm(&b.center) < b.radius,
            ConvexBody::Ellipsoid(e) => {
                let y = sub(&z, &e.center);
                dot(&y, &mat_vec(&e.shape, &y)) < 1.0
            }
        }
    }
}

/// Radial function sampled on a sphere grid.
#[derive(Debug, Clone)]
pub struct RadialTable {
    quad: SphereQuadrature,
    radii: Vec<f64>,
    symmetric: bool,
    // n = 2: node angles sorted increasingly, with node indices
    angles: Vec<(f64, usize)>,
}

impl RadialTable {
    /// `symmetric` tags the table as origin-symmetric, which is checked on
    /// antipodal grids.
    pub fn new(quad: &SphereQuadrature, radii: Vec<f64>, symmetric: bool) -> Result<Self> {
        if radii.len() != quad.len() {
            return param("one radius per node is required");
        }
        if let Some(r) = radii.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::Representation(format!(
                "radii must be positive and finite, got {r}"
            )));
        }
        if symmetric && quad.is_antipodal() {
            for (i, r) in radii.iter().enumerate() {
                let j = quad.antipode(i).unwrap();
                if (r - radii[j]).abs() > 1e-9 * r.max(1.0) {
                    return Err(Error::Representation(format!(
                        "table tagged symmetric but radii differ at node {i}: {r} vs {}",
                        radii[j]
                    )));
                }
            }
        }
        let mut angles = Vec::new();
        if quad.dim() == 2 {
            angles = quad
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, u)| (u.coords()[1].atan2(u.coords()[0]), i))
                .collect();
            angles.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        let t = Self {
            quad: quad.clone(),
            radii,
            symmetric,
            angles,
        };
        t.check_adjacent_ratio()?;
        Ok(t)
    }

    /// Tabulate `f` at the nodes.
    pub fn from_fn<F: Fn(&Direction) -> f64>(
        quad: &SphereQuadrature,
        symmetric: bool,
        f: F,
    ) -> Result<Self> {
        let radii = quad.nodes().iter().map(f).collect();
        Self::new(quad, radii, symmetric)
    }

    fn check_adjacent_ratio(&self) -> Result<()> {
        let worst = match self.quad.dim() {
            2 => {
                let m = self.angles.len();
                (0..m)
                    .map(|k| {
                        let a = self.radii[self.angles[k].1];
                        let b = self.radii[self.angles[(k + 1) % m].1];
                        a.max(b) / a.min(b)
                    })
                    .fold(1.0, f64::max)
            }
            3 if self.quad.len() <= 4096 => {
                let nodes = self.quad.nodes();
                (0..nodes.len())
                    .map(|i| {
                        let j = (0..nodes.len())
                            .filter(|&j| j != i)
                            .max_by(|&a, &b| {
                                dot(nodes[i].coords(), nodes[a].coords())
                                    .total_cmp(&dot(nodes[i].coords(), nodes[b].coords()))
                            })
                            .unwrap_or(i);
                        let (a, b) = (self.radii[i], self.radii[j]);
                        a.max(b) / a.min(b)
                    })
                    .fold(1.0, f64::max)
            }
            _ => 1.0,
        };
        if worst > 10.0 {
            return Err(Error::Representation(format!(
                "adjacent radial ratio {worst} exceeds 10"
            )));
        }
        Ok(())
    }

    pub fn quadrature(&self) -> &SphereQuadrature {
        &self.quad
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn dim(&self) -> usize {
        self.quad.dim()
    }

    /// Interpolated radial value: nearest node for n = 1 and 3; for n = 2
    /// the boundary is the polygon through the node points, so the gauge is
    /// linear within each cone.
    pub fn radial(&self, u: &[f64]) -> f64 {
        let nodes = self.quad.nodes();
        match self.dim() {
            2 => {
                let th = u[1].atan2(u[0]);
                let m = self.angles.len();
                let k = self.angles.partition_point(|a| a.0 <= th);
                let (lo, hi) = if k == 0 || k == m {
                    (self.angles[m - 1], self.angles[0])
                } else {
                    (self.angles[k - 1], self.angles[k])
                };
                let mut span = hi.0 - lo.0;
                let mut off = th - lo.0;
                if span <= 0.0 {
                    span += 2.0 * PI;
                }
                if off < 0.0 {
                    off += 2.0 * PI;
                }
                // ray hits the segment between the two boundary nodes
                let (ra, rb) = (self.radii[lo.1], self.radii[hi.1]);
                let den = ra * off.sin() + rb * (span - off).sin();
                if span >= PI || !(den > 0.0) {
                    ra + (rb - ra) * off / span
                } else {
                    ra * rb * span.sin() / den
                }
            }
            _ => {
                let i = (0..nodes.len())
                    .max_by(|&a, &b| dot(nodes[a].coords(), u).total_cmp(&dot(nodes[b].coords(), u)))
                    .unwrap();
                self.radii[i]
            }
        }
    }

    pub fn volume(&self) -> f64 {
        let n = self.dim() as i32;
        self.quad
            .sum_values(&self.radii.iter().map(|r| r.powi(n)).collect::<Vec<_>>())
            / n as f64
    }
}

/// A star body with respect to the origin.
#[derive(Debug, Clone)]
pub enum StarBody {
    Convex(ConvexBody),
    Table(RadialTable),
}

impl From<ConvexBody> for StarBody {
    fn from(c: ConvexBody) -> Self {
        StarBody::Convex(c)
    }
}

impl From<Ball> for StarBody {
    fn from(b: Ball) -> Self {
        StarBody::Convex(b.into())
    }
}

impl From<Ellipsoid> for StarBody {
    fn from(e: Ellipsoid) -> Self {
        StarBody::Convex(e.into())
    }
}

impl From<Polytope> for StarBody {
    fn from(p: Polytope) -> Self {
        StarBody::Convex(p.into())
    }
}

impl From<RadialTable> for StarBody {
    fn from(t: RadialTable) -> Self {
        StarBody::Table(t)
    }
}

impl StarBody {
    /// Centered Euclidean ball.
    pub fn ball(n: usize, r: f64) -> Result<Self> {
        Ok(Ball::centered(n, r)?.into())
    }

    pub fn dim(&self) -> usize {
        match self {
            StarBody::Convex(c) => c.dim(),
            StarBody::Table(t) => t.dim(),
        }
    }

    fn check_origin(&self) -> Result<()> {
        match self {
            StarBody::Convex(c) if !c.origin_interior() => Err(Error::Representation(
                "origin is not interior to the body".into(),
            )),
            _ => Ok(()),
        }
    }

    /// rho_K(u) for a direction u (not necessarily unit: rho is
    /// (-1)-homogeneous).
    pub fn radial(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim() {
            return param("direction dimension does not match the body");
        }
        self.check_origin()?;
        let r = norm(u);
        if !(r > 0.0) {
            return param("radial function needs a nonzero direction");
        }
        let unit: Vec<f64> = u.iter().map(|c| c / r).collect();
        let z = vec![0.0; u.len()];
        let rho = match self {
            StarBody::Convex(c) => c.ray_exit(&z, &unit),
            StarBody::Table(t) => t.radial(&unit),
        };
        Ok(rho / r)
    }

    /// Minkowski functional ||x||_K.
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        if norm(x) == 0.0 {
            if x.len() != self.dim() {
                return param("point dimension does not match the body");
            }
            return Ok(0.0);
        }
        Ok(1.0 / self.radial(x)?)
    }

    /// Radial values at every node of `q`; node-aligned tables are read
    /// directly.
    pub fn radii_on(&self, q: &SphereQuadrature) -> Result<Vec<f64>> {
        if q.dim() != self.dim() {
            return param("quadrature dimension does not match the body");
        }
        match self {
            StarBody::Table(t) if same_grid(t.quadrature(), q) => Ok(t.radii().to_vec()),
            _ => q.nodes().iter().map(|u| self.radial(u.coords())).collect(),
        }
    }

    /// Exact volume when available.
    pub fn exact_volume(&self) -> Option<f64> {
        match self {
            StarBody::Convex(c) => Some(c.volume()),
            StarBody::Table(_) => None,
        }
    }

    pub fn linear_image(&self, phi: &DMatrix<f64>) -> Result<Self> {
        match self {
            StarBody::Convex(c) => Ok(StarBody::Convex(c.linear_image(phi)?)),
            StarBody::Table(t) => {
                if phi.nrows() != t.dim() || phi.ncols() != t.dim() {
                    return param("map dimension does not match the body");
                }
                let inv = invert(phi)?;
                let q = t.quadrature();
                let radii = q
                    .nodes()
                    .iter()
                    .map(|u| {
                        let w = mat_vec(&inv, u.coords());
                        let r = norm(&w);
                        let unit: Vec<f64> = w.iter().map(|c| c / r).collect();
                        t.radial(&unit) / r
                    })
                    .collect();
                Ok(StarBody::Table(RadialTable::new(q, radii, t.is_symmetric())?))
            }
        }
    }
}

fn same_grid(a: &SphereQuadrature, b: &SphereQuadrature) -> bool {
    std::ptr::eq(a, b)
        || (a.len() == b.len()
            && a.kind() == b.kind()
            && a.resolution() == b.resolution()
            && a.nodes().iter().zip(b.nodes()).all(|(x, y)| x == y))
}

/// rho_K(xi).
pub fn radial(k: &StarBody, xi: &Direction) -> Result<f64> {
    k.radial(xi.coords())
}

/// (1/n) sum_i w_i rho_K(u_i)^n.
pub fn volume(k: &StarBody, q: &SphereQuadrature) -> Result<f64> {
    let n = k.dim() as i32;
    let r = k.radii_on(q)?;
    Ok(q.sum_values(&r.iter().map(|x| x.powi(n)).collect::<Vec<_>>()) / n as f64)
}

/// Dual mixed volume (1/n) int rho_K^{n-p} rho_L^p.
pub fn dual_mixed_volume(k: &StarBody, l: &StarBody, p: f64, q: &SphereQuadrature) -> Result<f64> {
    if k.dim() != l.dim() {
        return param("bodies have different dimensions");
    }
    let n = k.dim() as f64;
    let rk = k.radii_on(q)?;
    let rl = l.radii_on(q)?;
    let vals: Vec<f64> = rk
        .iter()
        .zip(&rl)
        .map(|(a, b)| a.powf(n - p) * b.powf(p))
        .collect();
    Ok(q.sum_values(&vals) / n)
}

pub fn polar_of_convex(k: &ConvexBody) -> Result<ConvexBody> {
    k.polar()
}

pub fn linear_image(k: &StarBody, phi: &DMatrix<f64>) -> Result<StarBody> {
    k.linear_image(phi)
}

/// Largest sampled excess ||x+y||^p - ||x||^p - ||y||^p (clipped at 0).
///
/// x and y are drawn as a rho(u) u and b rho(v) v with a, b uniform in
/// (0, 1], so the result is independent of the table's scale.
pub fn p_convexity_defect(k: &RadialTable, p: f64, trials: usize, seed: u64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::Domain {
            what: "p-convexity exponent must lie in (0, 1]",
            value: p,
        });
    }
    let n = k.dim();
    let mut rng = substream(seed, "p_convexity", 0);
    let gauge = |x: &[f64]| {
        let r = norm(x);
        if r == 0.0 {
            0.0
        } else {
            let unit: Vec<f64> = x.iter().map(|c| c / r).collect();
            r / k.radial(&unit)
        }
    };
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let u = random_direction(&mut rng, n);
        let v = random_direction(&mut rng, n);
        let a = 1.0 - rng.gen::<f64>();
        let b = 1.0 - rng.gen::<f64>();
        let x: Vec<f64> = u.iter().map(|c| a * k.radial(&u) * c).collect();
        let y: Vec<f64> = v.iter().map(|c| b * k.radial(&v) * c).collect();
        let s: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p + q).collect();
        let d = gauge(&s).powf(p) - gauge(&x).powf(p) - gauge(&y).powf(p);
        worst = worst.max(d);
    }
    Ok(worst)
}
