//! Radial p-th mean bodies and their link to fractional polar projection
//! bodies.

use rayon::prelude::*;

use crate::bodies::{p_convexity_defect, ConvexBody, Polytope, RadialTable};
use crate::constants::{FracParams, LOG_BRANCH_THRESHOLD};
use crate::error::{param, Error, Result};
use crate::fields::ScalarField;
use crate::fractional::polar_projection_body;
use crate::quadrature::SphereQuadrature;
use crate::rng::substream;

/// Relative standard error of a node radius above which a warning is kept.
pub const PRECISION_WARNING_LEVEL: f64 = 1e-2;
const CONVEXITY_TRIALS: usize = 2000;

#[derive(Debug, Clone)]
pub struct RadialMeanBody {
    p: f64,
    source: ConvexBody,
    table: RadialTable,
    std_errors: Vec<f64>,
    warnings: Vec<String>,
}

impl RadialMeanBody {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn source(&self) -> &ConvexBody {
        &self.source
    }

    pub fn table(&self) -> &RadialTable {
        &self.table
    }

    /// Standard error of each node radius (zero on exact paths).
    pub fn std_errors(&self) -> &[f64] {
        &self.std_errors
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn volume(&self) -> f64 {
        self.table.volume()
    }
}

fn is_log_branch(p: f64) -> bool {
    p.abs() < LOG_BRANCH_THRESHOLD
}

/// Mean of rho^p (or of log rho) over x uniform in an axis box, in
/// direction u. The exit distance is the minimum of independent uniforms on
/// (0, a_i) with a_i = L_i/|u_i|, so its survival function is a polynomial.
fn box_moment(lo: &[f64], hi: &[f64], u: &[f64], p: f64) -> f64 {
    let mut coef = vec![1.0];
    let mut amin = f64::INFINITY;
    for ((a, b), c) in lo.iter().zip(hi).zip(u) {
        if *c == 0.0 {
            continue;
        }
        let ai = (b - a) / c.abs();
        amin = amin.min(ai);
        let mut next = vec![0.0; coef.len() + 1];
        for (k, v) in coef.iter().enumerate() {
            next[k] += v;
            next[k + 1] -= v / ai;
        }
        coef = next;
    }
    if is_log_branch(p) {
        amin.ln() + coef.iter().enumerate().skip(1).map(|(k, c)| c * amin.powi(k as i32) / k as f64).sum::<f64>()
    } else {
        coef.iter()
            .enumerate()
            .map(|(k, c)| p * c * amin.powf(p + k as f64) / (p + k as f64))
            .sum()
    }
}

/// Per-node (mean, standard error) by Monte Carlo. Given the chord of
/// length L through x, the exit distance is uniform on (0, L), so each sample
/// contributes E[rho^p | L] = L^p/(p+1), or log L - 1 on the log branch.
fn node_moment_mc(e: &ConvexBody, u: &[f64], p: f64, samples: usize, seed: u64, node: u64) -> (f64, f64) {
    let mut rng = substream(seed, "radial_mean", node);
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for _ in 0..samples {
        let x = e.sample_uniform(&mut rng);
        let l = e.chord(&x, u);
        let v = if is_log_branch(p) { l.ln() - 1.0 } else { l.powf(p) / (p + 1.0) };
        s1 += v;
        s2 += v * v;
    }
    let m = samples as f64;
    let mean = s1 / m;
    let var = ((s2 / m - mean * mean) * m / (m - 1.0)).max(0.0);
    (mean, (var / m).sqrt())
}

/// R_p E on the nodes of `q`. `samples` is the Monte Carlo budget per node;
/// boxes (and intervals) use the exact path and ignore it.
pub fn radial_mean_body(
    e: &ConvexBody,
    p: f64,
    q: &SphereQuadrature,
    samples: usize,
    seed: u64,
) -> Result<RadialMeanBody> {
    if !(p > -1.0) || !p.is_finite() {
        return Err(Error::Domain {
            what: "radial mean exponent must exceed -1",
            value: p,
        });
    }
    if q.dim() != e.dim() {
        return param("quadrature dimension does not match the body");
    }
    let exact = match e {
        ConvexBody::Polytope(poly) => poly.as_axis_box().map(|(a, b)| (a.to_vec(), b.to_vec())),
        _ => None,
    };
    if exact.is_none() && samples < 2 {
        return param("Monte Carlo path needs at least two samples per node");
    }
    let nodes = q.nodes();
    // both members of an antipodal pair share a substream: the chord
    // through x does not depend on the orientation
    let key = |i: usize| q.antipode(i).map_or(i, |j| i.min(j)) as u64;
    let moments: Vec<(f64, f64)> = (0..q.len())
        .into_par_iter()
        .map(|i| {
            let u = nodes[i].coords();
            match &exact {
                Some((lo, hi)) => (box_moment(lo, hi, u, p), 0.0),
                None => node_moment_mc(e, u, p, samples, seed, key(i)),
            }
        })
        .collect();
    let mut radii = Vec::with_capacity(q.len());
    let mut errs = Vec::with_capacity(q.len());
    for (mean, se) in &moments {
        if is_log_branch(p) {
            let r = mean.exp();
            radii.push(r);
            errs.push(r * se);
        } else {
            let r = mean.powf(1.0 / p);
            radii.push(r);
            errs.push(r * se / (p.abs() * mean));
        }
    }
    if let Some(r) = radii.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(Error::Consistency(format!("radial mean radius is not positive: {r}")));
    }
    let table = RadialTable::new(q, radii, q.is_antipodal())?;
    let mut warnings = Vec::new();
    let worst = errs
        .iter()
        .zip(table.radii())
        .map(|(se, r)| se / r)
        .fold(0.0, f64::max);
    if worst > PRECISION_WARNING_LEVEL {
        warnings.push(format!("largest relative standard error of a radius is {worst:.3e}"));
    }
    if p >= 0.0 && q.dim() == 2 {
        let d = p_convexity_defect(&table, 1.0, CONVEXITY_TRIALS, seed)?;
        if d > PRECISION_WARNING_LEVEL {
            warnings.push(format!("convexity spot-check defect {d:.3e}"));
        }
    }
    Ok(RadialMeanBody {
        p,
        source: e.clone(),
        table,
        std_errors: errs,
        warnings,
    })
}

/// Largest node-wise relative gap between rho(Pi*_s E) and
/// (s/(2|E|))^{1/s} rho(R_{-s} E).
pub fn gz_link_check(
    e: &ConvexBody,
    params: FracParams,
    q: &SphereQuadrature,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let s = params.s();
    let pi = polar_projection_body(&ScalarField::indicator(e.clone(), 1.0)?, params, q)?;
    let r = radial_mean_body(e, -s, q, samples, seed)?;
    let c = (s / (2.0 * e.volume())).powf(1.0 / s);
    Ok(pi
        .table()
        .radii()
        .iter()
        .zip(r.table().radii())
        .map(|(a, b)| (a - c * b).abs() / a)
        .fold(0.0, f64::max))
}

/// (|Pi*_s E|/|Pi*_s S|)^{-s/n} and (|E|/|S|)^{(n-s)/n}; the first never
/// exceeds the second, with equality for simplices.
pub fn zhang_ratio(
    e: &ConvexBody,
    simplex: &Polytope,
    params: FracParams,
    q: &SphereQuadrature,
) -> Result<(f64, f64)> {
    let n = params.n();
    if simplex.dim() != n || simplex.vertices().len() != n + 1 || e.dim() != n {
        return param("zhang ratio needs an n-simplex and a body in dimension n");
    }
    let s = params.s();
    let nf = n as f64;
    let sb: ConvexBody = simplex.clone().into();
    let pe = polar_projection_body(&ScalarField::indicator(e.clone(), 1.0)?, params, q)?.volume();
    let ps = polar_projection_body(&ScalarField::indicator(sb.clone(), 1.0)?, params, q)?.volume();
    let lhs = (pe / ps).powf(-s / nf);
    let rhs = (e.volume() / sb.volume()).powf((nf - s) / nf);
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{Ball, Ellipsoid};
    use crate::constants::radial_mean_ball_ratio;
    use crate::quadrature::sphere_grid;
    use approx::assert_relative_eq;

    fn interval() -> ConvexBody {
        Polytope::axis_box(&[0.0], &[1.0]).unwrap().into()
    }

    #[test]
    fn interval_closed_form() {
        let q = sphere_grid(1, 2).unwrap();
        for p in [-0.5, 0.5, 1.0, 2.0] {
            let r = radial_mean_body(&interval(), p, &q, 0, 0).unwrap();
            let want = (p + 1.0f64).powf(-1.0 / p);
            for x in r.table().radii() {
                assert_relative_eq!(*x, want, max_relative = 1e-12);
            }
        }
        let r = radial_mean_body(&interval(), 1.0, &q, 0, 0).unwrap();
        assert_relative_eq!(r.table().radii()[0], 0.5, max_relative = 1e-14);
        let r0 = radial_mean_body(&interval(), 0.0, &q, 0, 0).unwrap();
        assert_relative_eq!(r0.table().radii()[0], (-1.0f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn box_matches_monte_carlo() {
        let q = sphere_grid(2, 16).unwrap();
        let sq = Polytope::axis_box(&[0.0, 0.0], &[2.0, 1.0]).unwrap();
        let exact = radial_mean_body(&sq.clone().into(), 0.5, &q, 0, 0).unwrap();
        let mc = radial_mean_body(&ConvexBody::Ball(Ball::centered(2, 1.0).unwrap()), 0.5, &q, 100, 1).unwrap();
        assert!(mc.std_errors().iter().all(|e| *e > 0.0));
        for i in 0..q.len() {
            let u = q.nodes()[i].coords();
            let (m, se) = node_moment_mc(&sq.clone().into(), u, 0.5, 20_000, 7, i as u64);
            let r = m.powf(2.0);
            assert!((r - exact.table().radii()[i]).abs() < 5.0 * 2.0 * r * se / m + 1e-12);
        }
    }

    #[test]
    fn ball_volume_ratios() {
        let q = sphere_grid(2, 64).unwrap();
        let disk: ConvexBody = Ball::centered(2, 1.0).unwrap().into();
        let vol = disk.volume();
        for p in [-0.5, 0.0, 1.0, 2.0] {
            let r = radial_mean_body(&disk, p, &q, 4000, 11).unwrap();
            let want = radial_mean_ball_ratio(2, p).unwrap();
            assert_relative_eq!(r.volume() / vol, want, max_relative = 1e-2);
        }
    }

    #[test]
    fn monotone_in_p() {
        let q = sphere_grid(2, 16).unwrap();
        let tri: ConvexBody = Polytope::from_vertices(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]])
            .unwrap()
            .into();
        let mut prev: Option<Vec<f64>> = None;
        for p in [-0.5, 0.0, 0.5, 1.0, 2.0] {
            let r = radial_mean_body(&tri, p, &q, 20_000, 5).unwrap();
            if let Some(pr) = &prev {
                for (a, b) in pr.iter().zip(r.table().radii()) {
                    assert!(*b >= a * (1.0 - 1e-2), "{p}: {a} > {b}");
                }
            }
            prev = Some(r.table().radii().to_vec());
        }
    }

    #[test]
    fn antipodal_symmetry_is_exact() {
        let q = sphere_grid(2, 32).unwrap();
        let e: ConvexBody = Ellipsoid::axis_aligned(&[2.0, 0.5]).unwrap().into();
        let r = radial_mean_body(&e, 1.0, &q, 500, 3).unwrap();
        for i in 0..q.len() {
            let j = q.antipode(i).unwrap();
            assert_eq!(r.table().radii()[i], r.table().radii()[j]);
        }
    }

    #[test]
    fn domain_errors() {
        let q = sphere_grid(1, 2).unwrap();
        assert!(matches!(radial_mean_body(&interval(), -1.0, &q, 10, 0), Err(Error::Domain { .. })));
        assert!(radial_mean_body(&interval(), -1.5, &q, 10, 0).is_err());
    }

    #[test]
    fn gardner_zhang_link() {
        let q = sphere_grid(1, 2).unwrap();
        let p = FracParams::new(1, 0.5).unwrap();
        assert!(gz_link_check(&interval(), p, &q, 0, 0).unwrap() <= 1e-6);
        let q2 = sphere_grid(2, 32).unwrap();
        let p2 = FracParams::new(2, 0.5).unwrap();
        let sq: ConvexBody = Polytope::axis_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap().into();
        assert!(gz_link_check(&sq, p2, &q2, 0, 0).unwrap() <= 1e-6);
        let disk: ConvexBody = Ball::centered(2, 1.0).unwrap().into();
        assert!(gz_link_check(&disk, p2, &q2, 20_000, 1).unwrap() <= 1e-2);
    }

    #[test]
    fn zhang_inequality() {
        let q = sphere_grid(2, 128).unwrap();
        let p = FracParams::new(2, 0.5).unwrap();
        let s = Polytope::from_vertices(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let (l, r) = zhang_ratio(&s.clone().into(), &s, p, &q).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(r, 1.0);
        let img = Polytope::from_vertices(vec![vec![0.0, 0.0], vec![2.0, 0.0], vec![0.7, 0.5]]).unwrap();
        let (l, r) = zhang_ratio(&img.into(), &s, p, &q).unwrap();
        assert_relative_eq!(l, r, max_relative = 2e-3);
        let disk: ConvexBody = Ball::centered(2, 1.0).unwrap().into();
        let (l, r) = zhang_ratio(&disk, &s, p, &q).unwrap();
        assert!(l < r * (1.0 - 1e-3), "{l} {r}");
    }
}
