//! Projection bodies of polytopes as zonotopes.

use crate::error::{Error, Result};
use crate::linalg::{canonical_sign, cross, dot, norm};
use crate::quadrature::SphereQuadrature;

use super::polytope::Polytope;
use super::RadialTable;

/// Zonotope sum of segments [-g, g]; support function sum |<g, u>|.
#[derive(Debug, Clone, PartialEq)]
pub struct Zonotope {
    dim: usize,
    generators: Vec<Vec<f64>>,
}

impl Zonotope {
    /// Parallel generators are merged so that each direction appears once.
    pub fn new(dim: usize, generators: Vec<Vec<f64>>) -> Result<Self> {
        let mut merged: Vec<Vec<f64>> = Vec::new();
        for g in generators {
            if g.len() != dim {
                return Err(Error::Representation("generator has wrong dimension".into()));
            }
            let r = norm(&g);
            if r == 0.0 {
                continue;
            }
            let g = canonical_sign(&g);
            let dir: Vec<f64> = g.iter().map(|c| c / r).collect();
            match merged.iter_mut().find(|m| {
                let mr = norm(m);
                m.iter().zip(&dir).all(|(a, b)| (a / mr - b).abs() < 1e-9)
            }) {
                Some(m) => m.iter_mut().zip(&g).for_each(|(a, b)| *a += b),
                None => merged.push(g),
            }
        }
        if merged.is_empty() {
            return Err(Error::Representation("zonotope without generators".into()));
        }
        Ok(Self {
            dim,
            generators: merged,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn generators(&self) -> &[Vec<f64>] {
        &self.generators
    }

    pub fn support(&self, u: &[f64]) -> f64 {
        self.generators.iter().map(|g| dot(g, u).abs()).sum()
    }

    /// Radial table of the polar body: rho(u) = 1 / h(u).
    pub fn polar_table(&self, q: &SphereQuadrature) -> Result<RadialTable> {
        let radii = q
            .nodes()
            .iter()
            .map(|u| 1.0 / self.support(u.coords()))
            .collect();
        RadialTable::new(q, radii, true)
    }

    /// Volume of the polar body by radial integration of h^{-n}.
    pub fn polar_volume(&self, q: &SphereQuadrature) -> f64 {
        let n = self.dim as i32;
        q.integrate(|u| self.support(u.coords()).powi(-n)) / self.dim as f64
    }

    /// Vertex representation (dimensions 1-3).
    pub fn to_polytope(&self) -> Result<Polytope> {
        let gens = &self.generators;
        let mut pts: Vec<Vec<f64>> = Vec::new();
        match self.dim {
            1 => {
                let h: f64 = gens.iter().map(|g| g[0].abs()).sum();
                pts.push(vec![-h]);
                pts.push(vec![h]);
            }
            2 => {
                for g in gens {
                    let u = [-g[1], g[0]];
                    for sgn in [1.0, -1.0] {
                        let u = [sgn * u[0], sgn * u[1]];
                        let base = signed_sum(gens, &u);
                        for e in [1.0, -1.0] {
                            pts.push(vec![base[0] + e * g[0], base[1] + e * g[1]]);
                        }
                    }
                }
            }
            3 => {
                for i in 0..gens.len() {
                    for j in i + 1..gens.len() {
                        let c = cross(&gens[i], &gens[j]);
                        for sgn in [1.0, -1.0] {
                            let u = [sgn * c[0], sgn * c[1], sgn * c[2]];
                            let scale = norm(&u);
                            let mut base = vec![0.0; 3];
                            let mut free: Vec<&Vec<f64>> = Vec::new();
                            for g in gens {
                                let d = dot(g, &u);
                                if d.abs() <= 1e-12 * scale * norm(g) {
                                    free.push(g);
                                } else {
                                    let sg = d.signum();
                                    base.iter_mut().zip(g).for_each(|(b, x)| *b += sg * x);
                                }
                            }
                            for mask in 0..(1usize << free.len()) {
                                let mut p = base.clone();
                                for (k, g) in free.iter().enumerate() {
                                    let sg = if mask >> k & 1 == 1 { 1.0 } else { -1.0 };
                                    p.iter_mut().zip(g.iter()).for_each(|(a, x)| *a += sg * x);
                                }
                                pts.push(p);
                            }
                        }
                    }
                }
                if gens.len() < 3 {
                    return Err(Error::Representation(
                        "zonotope with fewer than 3 generators is flat".into(),
                    ));
                }
            }
            d => {
                return Err(Error::Unsupported(format!(
                    "zonotope vertices are supported in dimensions 1-3, got {d}"
                )))
            }
        }
        Polytope::from_vertices(pts)
    }
}

fn signed_sum(gens: &[Vec<f64>], u: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    for g in gens {
        let d = dot(g, u);
        if d.abs() > 1e-14 * norm(g) * norm(u) {
            let s = d.signum();
            out.iter_mut().zip(g).for_each(|(o, x)| *o += s * x);
        }
    }
    out
}

/// Projection body of a polytope: h(u) = 1/2 sum_i a_i |<u, eta_i>|.
pub fn projection_body_polytope(p: &Polytope) -> Result<Zonotope> {
    let gens = p
        .halfspaces()
        .iter()
        .zip(p.facet_areas())
        .map(|(h, a)| h.normal.iter().map(|c| 0.5 * a * c).collect())
        .collect();
    Zonotope::new(p.dim(), gens)
}
