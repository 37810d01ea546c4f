//! Fractional polar projection bodies, anisotropic fractional seminorms and
//! fractional perimeters.

use rayon::prelude::*;
use serde::Serialize;

use crate::bodies::{ball_covariogram_deficit, dual_mixed_volume, p_convexity_defect, ConvexBody, RadialTable, StarBody};
use crate::constants::{omega, ps_ball, FracParams};
use crate::error::{param, Error, Result};
use crate::fields::ScalarField;
use crate::linalg::{canonical_sign, norm, Direction};
use crate::quadrature::{integrate_singular, SingularIntegrandProfile, SphereQuadrature};
use crate::rng::{random_direction, substream};

/// Largest sampled s-convexity defect accepted for a polar projection body.
pub const S_CONVEXITY_TOLERANCE: f64 = 1e-3;
const S_CONVEXITY_TRIALS: usize = 4000;
const S_CONVEXITY_SEED: u64 = 0x5eed;

/// integral over (0, inf) of t^{-s-1} 2(|B| - g_B(t)) dt for the unit ball.
fn unit_ball_gauge_power(n: usize, s: f64) -> Result<f64> {
    let profile = SingularIntegrandProfile::new(2.0, 2.0 * omega(n as f64 - 1.0).unwrap_or(1.0))?;
    integrate_singular(|t| 2.0 * ball_covariogram_deficit(n, 1.0, t), s, &profile)
}

/// ||xi||^s for the s-fractional polar projection body of f, for any
/// nonzero xi (the map is s-homogeneous in xi).
pub fn gauge_power(f: &ScalarField, xi: &[f64], params: FracParams) -> Result<f64> {
    if xi.len() != f.dim() || params.n() != f.dim() {
        return param("direction, parameters and field must share a dimension");
    }
    let r = norm(xi);
    if !(r > 0.0) {
        return param("gauge needs a nonzero direction");
    }
    if f.is_zero() {
        return Err(Error::Degenerate("polar projection body of the zero field".into()));
    }
    let s = params.s();
    // canonical sign makes the value at -xi bitwise equal to the value at xi
    let u = canonical_sign(&xi.iter().map(|c| c / r).collect::<Vec<_>>());
    let value = match f {
        ScalarField::Indicator { body, height } => {
            let big_t = body.width(&u);
            let profile = SingularIntegrandProfile::new(big_t, 2.0 * body.brightness(&u))?;
            let z = |t: f64| u.iter().map(|c| c * t).collect::<Vec<f64>>();
            height
                * integrate_singular(|t| 2.0 * body.covariogram_deficit(&z(t)), s, &profile)?
        }
        ScalarField::Voxel(g) => g.shift_integral(&u, s),
        ScalarField::Radial(p) => {
            let unit = unit_ball_gauge_power(p.dim(), s)?;
            p.layers()
                .iter()
                .map(|(dh, rad)| dh * rad.powf(p.dim() as f64 - s))
                .sum::<f64>()
                * unit
        }
    };
    Ok(value * r.powf(s))
}

/// ||xi||_{Pi*_s f}.
pub fn polar_projection_gauge(f: &ScalarField, xi: &Direction, params: FracParams) -> Result<f64> {
    Ok(gauge_power(f, xi.coords(), params)?.powf(1.0 / params.s()))
}

/// Pi*_s f tabulated on a sphere grid.
#[derive(Debug, Clone)]
pub struct FracBody {
    params: FracParams,
    gauge_powers: Vec<f64>,
    table: RadialTable,
    source: ScalarField,
}

impl FracBody {
    pub fn params(&self) -> FracParams {
        self.params
    }

    pub fn table(&self) -> &RadialTable {
        &self.table
    }

    /// ||u_i||^s at every node.
    pub fn gauge_powers(&self) -> &[f64] {
        &self.gauge_powers
    }

    pub fn source(&self) -> &ScalarField {
        &self.source
    }

    pub fn volume(&self) -> f64 {
        self.table.volume()
    }

    pub fn as_star_body(&self) -> StarBody {
        StarBody::Table(self.table.clone())
    }

    /// Largest sampled defect of ||x+y||^s <= ||x||^s + ||y||^s.
    pub fn s_convexity_defect(&self, trials: usize, seed: u64) -> Result<f64> {
        p_convexity_defect(&self.table, self.params.s(), trials, seed)
    }
}

/// Compute Pi*_s f at every node of `q` and check its structural
/// properties: positivity, origin symmetry and (in the plane, where the
/// table interpolates) s-convexity.
pub fn polar_projection_body(f: &ScalarField, params: FracParams, q: &SphereQuadrature) -> Result<FracBody> {
    if q.dim() != f.dim() {
        return param("quadrature dimension does not match the field");
    }
    let nodes = q.nodes();
    let work: Vec<usize> = (0..q.len())
        .filter(|&i| q.antipode(i).is_none_or(|j| i <= j))
        .collect();
    let computed: Vec<Result<f64>> = work
        .par_iter()
        .map(|&i| gauge_power(f, nodes[i].coords(), params))
        .collect();
    let mut g = vec![f64::NAN; q.len()];
    for (&i, v) in work.iter().zip(computed) {
        let v = v?;
        g[i] = v;
        if let Some(j) = q.antipode(i) {
            g[j] = v;
        }
    }
    if let Some((i, v)) = g.iter().enumerate().find(|(_, v)| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::Consistency(format!(
            "gauge at node {i} is not positive and finite: {v}"
        )));
    }
    let s = params.s();
    let radii: Vec<f64> = g.iter().map(|v| v.powf(-1.0 / s)).collect();
    let table = RadialTable::new(q, radii, q.is_antipodal())
        .map_err(|e| Error::Consistency(format!("polar projection body: {e}")))?;
    let body = FracBody {
        params,
        gauge_powers: g,
        table,
        source: f.clone(),
    };
    if q.dim() == 2 {
        let d = body.s_convexity_defect(S_CONVEXITY_TRIALS, S_CONVEXITY_SEED)?;
        if d > S_CONVEXITY_TOLERANCE {
            return Err(Error::Consistency(format!(
                "s-convexity defect {d} exceeds {S_CONVEXITY_TOLERANCE}"
            )));
        }
    }
    Ok(body)
}

/// sum_i w_i rho_K(u_i)^{n+s} ||u_i||^s, which equals n V_{-s}(K, Pi*_s f).
pub fn frac_seminorm_with_body(body: &FracBody, k: &StarBody, q: &SphereQuadrature) -> Result<f64> {
    let n = body.params.n() as f64;
    let s = body.params.s();
    let rk = k.radii_on(q)?;
    if rk.len() != body.gauge_powers.len() {
        return param("body and quadrature do not match");
    }
    let vals: Vec<f64> = rk
        .iter()
        .zip(&body.gauge_powers)
        .map(|(r, g)| r.powf(n + s) * g)
        .collect();
    Ok(q.sum_values(&vals))
}

/// Anisotropic fractional seminorm of f with respect to the star body K.
pub fn frac_seminorm(f: &ScalarField, k: &StarBody, params: FracParams, q: &SphereQuadrature) -> Result<f64> {
    if f.is_zero() {
        return Ok(0.0);
    }
    let body = polar_projection_body(f, params, q)?;
    frac_seminorm_with_body(&body, k, q)
}

/// n V_{-s}(K, Pi*_s f) through the dual mixed volume routine.
pub fn dual_mixed_form(body: &FracBody, k: &StarBody, q: &SphereQuadrature) -> Result<f64> {
    let n = body.params.n() as f64;
    Ok(n * dual_mixed_volume(k, &body.as_star_body(), -body.params.s(), q)?)
}

/// How a fractional perimeter is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PerimeterMethod {
    ClosedForm,
    SphericalDecomposition,
    DirectMc { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerimeterEstimate {
    pub value: f64,
    pub method: PerimeterMethod,
    pub std_error: f64,
}

/// P_s(E, K) = int_E int_{E^c} ||x - y||_K^{-n-s} dy dx.
pub fn frac_perimeter(
    e: &ConvexBody,
    k: &StarBody,
    params: FracParams,
    method: PerimeterMethod,
    q: &SphereQuadrature,
) -> Result<PerimeterEstimate> {
    let n = params.n();
    let s = params.s();
    if e.dim() != n || k.dim() != n {
        return param("body dimensions do not match the parameters");
    }
    match method {
        PerimeterMethod::ClosedForm => {
            let (r_e, r_k) = match (e, k) {
                (ConvexBody::Ball(b), StarBody::Convex(ConvexBody::Ball(kb)))
                    if kb.center().iter().all(|c| *c == 0.0) =>
                {
                    (b.radius(), kb.radius())
                }
                _ => return param("closed form needs a ball E and a centered ball K"),
            };
            let value = ps_ball(params) * r_e.powf(n as f64 - s) * r_k.powf(n as f64 + s);
            Ok(PerimeterEstimate {
                value,
                method,
                std_error: 0.0,
            })
        }
        PerimeterMethod::SphericalDecomposition => {
            let f = ScalarField::indicator(e.clone(), 1.0)?;
            let value = 0.5 * frac_seminorm(&f, k, params, q)?;
            Ok(PerimeterEstimate {
                value,
                method,
                std_error: 0.0,
            })
        }
        PerimeterMethod::DirectMc { samples, seed } => {
            let (mean, se) = direct_perimeter_mc(e, k, params, samples, seed)?;
            Ok(PerimeterEstimate {
                value: mean,
                method,
                std_error: se,
            })
        }
    }
}

const MC_CHUNK: usize = 8192;

/// Monte Carlo over x uniform in E and theta uniform on the sphere. Along
/// the ray x + r theta the kernel integrates in closed form past the exit
/// distance l: int_l^inf r^{-s-1} dr = l^{-s}/s. Averaging l^{-s} over the
/// position of x on its chord of length L gives L^{-s}/(1-s), which keeps
/// the variance finite for every s in (0, 1).
fn direct_perimeter_mc(
    e: &ConvexBody,
    k: &StarBody,
    params: FracParams,
    samples: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if samples < 2 {
        return param("direct Monte Carlo needs at least two samples");
    }
    let n = params.n();
    let s = params.s();
    let scale = e.volume() * n as f64 * omega(n as f64)? / (s * (1.0 - s));
    let chunks = samples.div_ceil(MC_CHUNK);
    let sums: Vec<Result<(f64, f64)>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, "direct_perimeter", c as u64);
            let count = MC_CHUNK.min(samples - c * MC_CHUNK);
            let mut s1 = 0.0;
            let mut s2 = 0.0;
            for _ in 0..count {
                let x = e.sample_uniform(&mut rng);
                let theta = random_direction(&mut rng, n);
                let l = e.chord(&x, &theta);
                let rho = k.radial(&theta)?;
                let v = rho.powf(n as f64 + s) * l.powf(-s);
                s1 += v;
                s2 += v * v;
            }
            Ok((s1, s2))
        })
        .collect();
    let mut s1 = 0.0;
    let mut s2 = 0.0;
    for r in sums {
        let (a, b) = r?;
        s1 += a;
        s2 += b;
    }
    let m = samples as f64;
    let mean = s1 / m;
    let var = ((s2 / m - mean * mean) * m / (m - 1.0)).max(0.0);
    Ok((scale * mean, scale * (var / m).sqrt()))
}

/// Both sides of the co-area formula: the seminorm of f, and twice the
/// threshold sum of the perimeters of its superlevel sets.
pub fn coarea_check(
    f: &ScalarField,
    k: &StarBody,
    params: FracParams,
    m: usize,
    q: &SphereQuadrature,
) -> Result<(f64, f64)> {
    if !f.is_nonnegative() {
        return param("co-area check needs f >= 0");
    }
    let lhs = frac_seminorm(f, k, params, q)?;
    let ls = f.level_sets(m)?;
    // consecutive thresholds with equal measure share one superlevel set
    let mut groups: Vec<(f64, f64)> = Vec::new();
    let mut prev = 0.0;
    for (t, mu) in ls.thresholds.iter().zip(&ls.measures) {
        let dt = t - prev;
        prev = *t;
        if *mu <= 0.0 {
            continue;
        }
        match groups.last_mut() {
            Some(g) if g.1 == *t - dt && superlevel_equal(f, g.1, *t) => {
                g.0 += dt;
                g.1 = *t;
            }
            _ => groups.push((dt, *t)),
        }
    }
    let mut rhs = 0.0;
    for (dt, t) in groups {
        let set = superlevel_indicator(f, t)?;
        rhs += dt * frac_seminorm(&set, k, params, q)?;
    }
    Ok((lhs, rhs))
}

fn superlevel_equal(f: &ScalarField, a: f64, b: f64) -> bool {
    let m = f.superlevel_measures(&[a, b]);
    m[0] == m[1]
}

fn superlevel_indicator(f: &ScalarField, t: f64) -> Result<ScalarField> {
    match f {
        ScalarField::Indicator { body, .. } => ScalarField::indicator(body.clone(), 1.0),
        ScalarField::Radial(p) => {
            let rad = p
                .knots()
                .iter()
                .rev()
                .find(|(_, v)| *v >= t)
                .map(|(r, _)| *r)
                .ok_or_else(|| Error::Degenerate("empty superlevel set".into()))?;
            ScalarField::indicator(crate::bodies::Ball::centered(p.dim(), rad)?.into(), 1.0)
        }
        ScalarField::Voxel(g) => {
            let vals = g
                .values()
                .iter()
                .map(|v| if v.abs() >= t { 1.0 } else { 0.0 })
                .collect();
            Ok(ScalarField::Voxel(crate::fields::VoxelGrid::new(
                g.lower().to_vec(),
                g.upper().to_vec(),
                g.counts().to_vec(),
                vals,
            )?))
        }
    }
}

/// 2 P_s(E, K) and n V_{-s}(K, Pi*_s E).
pub fn petty_relation_check(
    e: &ConvexBody,
    k: &StarBody,
    params: FracParams,
    method: PerimeterMethod,
    q: &SphereQuadrature,
) -> Result<(PerimeterEstimate, f64)> {
    let p = frac_perimeter(e, k, params, method, q)?;
    let lhs = PerimeterEstimate {
        value: 2.0 * p.value,
        method: p.method,
        std_error: 2.0 * p.std_error,
    };
    let body = polar_projection_body(&ScalarField::indicator(e.clone(), 1.0)?, params, q)?;
    let rhs = dual_mixed_form(&body, k, q)?;
    Ok((lhs, rhs))
}

/// Radius of Pi*_s B^n: the constant-radial solution of
/// n V_{-s}(B^n, Pi*_s B^n) = 2 P_s(B^n).
pub fn ball_polar_projection_radius(params: FracParams) -> f64 {
    let n = params.n() as f64;
    let s = params.s();
    (2.0 * ps_ball(params) / (n * omega(n).unwrap())).powf(-1.0 / s)
}
