//! Inequality and limit checks producing structured reports.

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::bodies::{projection_body_polytope, Ball, ConvexBody, Ellipsoid, Polytope, StarBody};
use crate::constants::{omega, ps_ball, radial_mean_ball_ratio, sharp_constant, FracParams};
use crate::error::{param, Error, Result};
use crate::fields::{schwarz_symmetrize, ScalarField};
use crate::fractional::{ball_polar_projection_radius, frac_seminorm_with_body, polar_projection_body, FracBody};
use crate::io::{describe_field, sha256_hex, BodyDescriptor};
use crate::quadrature::SphereQuadrature;
use crate::radialmean::radial_mean_body;

/// Per-check tolerances in one place. Every field can be overridden from a
/// JSON file; missing fields keep their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Slack for inequalities evaluated on deterministic paths.
    pub ordering: f64,
    /// Equality cases on deterministic paths.
    pub near_equality: f64,
    /// Symmetrization of a body that is already symmetric.
    pub fixed_point: f64,
    /// Discretization slack for symmetrization monotonicity.
    pub symmetrization: f64,
    /// Extrapolation gap and residual for s -> 1.
    pub limits: f64,
    /// Monte Carlo paths.
    pub monte_carlo: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            ordering: 1e-6,
            near_equality: 1e-3,
            fixed_point: 1e-6,
            symmetrization: 1e-3,
            limits: 2e-2,
            monte_carlo: 1e-2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// lhs <= rhs
    AtMost,
    /// lhs = rhs
    Equal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub check: String,
    pub inputs: Value,
    pub digest: String,
    pub lhs: f64,
    pub rhs: f64,
    /// (rhs - lhs) / |rhs|
    pub gap: f64,
    pub tolerance: f64,
    pub relation: Relation,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl VerificationReport {
    pub fn new(check: &str, inputs: Value, lhs: f64, rhs: f64, relation: Relation, tolerance: f64) -> Self {
        let gap = (rhs - lhs) / rhs.abs();
        let ok = match relation {
            Relation::AtMost => gap >= -tolerance,
            Relation::Equal => gap.abs() <= tolerance,
        };
        let digest = sha256_hex(format!("{check}{inputs}").as_bytes());
        Self {
            check: check.to_string(),
            inputs,
            digest,
            lhs,
            rhs,
            gap,
            tolerance,
            relation,
            verdict: if ok && gap.is_finite() { Verdict::Pass } else { Verdict::Fail },
            notes: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn note(mut self, n: impl Into<String>) -> Self {
        self.notes.push(n.into());
        self
    }

    fn fail_with(mut self, n: impl Into<String>) -> Self {
        self.verdict = Verdict::Fail;
        self.notes.push(n.into());
        self
    }
}

fn grid_inputs(params: FracParams, q: &SphereQuadrature) -> Value {
    json!({
        "n": params.n(),
        "s": params.s(),
        "grid": q.kind(),
        "resolution": q.resolution(),
        "nodes": q.len(),
    })
}

fn with(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(a), Value::Object(b)) = (&mut base, extra) {
        a.extend(b);
    }
    base
}

fn is_ellipsoidal(b: &ConvexBody) -> bool {
    matches!(b, ConvexBody::Ball(_) | ConvexBody::Ellipsoid(_))
}

fn unit_ball(n: usize) -> Result<StarBody> {
    StarBody::ball(n, 1.0)
}

/// |Pi*_s B^n| from the closed-form radius.
fn ball_body_volume(params: FracParams) -> Result<f64> {
    let n = params.n();
    Ok(omega(n as f64)? * ball_polar_projection_radius(params).powi(n as i32))
}

fn vol_power(body: &FracBody) -> f64 {
    let p = body.params();
    body.volume().powf(-p.s() / p.n() as f64)
}

/// Both inequalities of the affine fractional Sobolev chain
/// ||f||_{n/(n-s)} <= a n w^{(n+s)/n} |Pi*_s f|^{-s/n} <= a |f|_{s,1}.
pub fn check_affine_frac_sobolev(
    f: &ScalarField,
    params: FracParams,
    q: &SphereQuadrature,
    tol: &Tolerances,
) -> Result<[VerificationReport; 2]> {
    if f.is_zero() {
        return param("affine Sobolev check needs a nonzero field");
    }
    let n = params.n();
    let nf = n as f64;
    let s = params.s();
    let g = f.abs();
    let lp = g.lp_norm(nf / (nf - s))?;
    let body = polar_projection_body(&g, params, q)?;
    let alpha = sharp_constant(params);
    let middle = alpha * nf * omega(nf)?.powf((nf + s) / nf) * vol_power(&body);
    let semi = alpha * frac_seminorm_with_body(&body, &unit_ball(n)?, q)?;
    let inputs = with(grid_inputs(params, q), json!({ "field": describe_field(f) }));
    let (first_eq, second_eq) = match &g {
        ScalarField::Indicator { body, .. } => (is_ellipsoidal(body), matches!(body, ConvexBody::Ball(_))),
        ScalarField::Radial(_) => (false, true),
        ScalarField::Voxel(_) => (false, false),
    };
    let rel = |eq: bool| if eq { Relation::Equal } else { Relation::AtMost };
    let t = |eq: bool| if eq { tol.near_equality } else { tol.ordering };
    Ok([
        VerificationReport::new("affine_frac_sobolev_first", inputs.clone(), lp, middle, rel(first_eq), t(first_eq)),
        VerificationReport::new("affine_frac_sobolev_second", inputs, middle, semi, rel(second_eq), t(second_eq)),
    ])
}

/// (|E|/|B|)^{(n-s)/n} <= (|Pi*_s E|/|Pi*_s B|)^{-s/n} <= P_s(E)/P_s(B).
pub fn check_frac_petty(
    e: &ConvexBody,
    params: FracParams,
    q: &SphereQuadrature,
    tol: &Tolerances,
) -> Result<[VerificationReport; 2]> {
    let n = params.n();
    let nf = n as f64;
    let s = params.s();
    let wn = omega(nf)?;
    let left = (e.volume() / wn).powf((nf - s) / nf);
    let body = polar_projection_body(&ScalarField::indicator(e.clone(), 1.0)?, params, q)?;
    let middle = (body.volume() / ball_body_volume(params)?).powf(-s / nf);
    let per = 0.5 * frac_seminorm_with_body(&body, &unit_ball(n)?, q)?;
    let right = per / ps_ball(params);
    let radii = body.table().radii();
    let hi = radii.iter().cloned().fold(0.0, f64::max);
    let lo = radii.iter().cloned().fold(f64::INFINITY, f64::min);
    let inputs = with(grid_inputs(params, q), json!({ "body": BodyDescriptor::describe(e) }));
    let left_eq = is_ellipsoidal(e);
    let right_eq = matches!(e, ConvexBody::Ball(_));
    let mk = |name: &str, l: f64, r: f64, eq: bool| {
        if eq {
            VerificationReport::new(name, inputs.clone(), l, r, Relation::Equal, tol.near_equality)
        } else {
            VerificationReport::new(name, inputs.clone(), l, r, Relation::AtMost, tol.ordering)
        }
    };
    Ok([
        mk("frac_petty_left", left, middle, left_eq),
        mk("frac_petty_right", middle, right, right_eq)
            .note(format!("dilate defect {:.6e}", hi / lo - 1.0)),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Symmetrization {
    Schwarz,
    Steiner(usize),
}

/// Steiner symmetral along a coordinate axis.
fn steiner_field(f: &ScalarField, axis: usize) -> Result<ScalarField> {
    if axis >= f.dim() {
        return param("Steiner axis out of range");
    }
    let recenter = |c: &[f64]| {
        let mut z = vec![0.0; c.len()];
        z[axis] = -c[axis];
        z
    };
    match f {
        ScalarField::Voxel(g) => Ok(ScalarField::Voxel(g.steiner_symmetrize(axis)?)),
        ScalarField::Radial(_) => Ok(f.clone()),
        ScalarField::Indicator { body, .. } => match body {
            ConvexBody::Ball(b) => f.translate(&recenter(b.center())),
            ConvexBody::Ellipsoid(e) => {
                let a = e.shape();
                let aligned = (0..a.nrows()).all(|j| j == axis || a[(axis, j)] == 0.0);
                if !aligned {
                    return Err(Error::Unsupported(
                        "Steiner symmetral of an ellipsoid not aligned with the axis".into(),
                    ));
                }
                f.translate(&recenter(e.center()))
            }
            ConvexBody::Polytope(p) => match p.as_axis_box() {
                Some((lo, hi)) => {
                    let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
                    f.translate(&recenter(&mid))
                }
                None => Err(Error::Unsupported(
                    "Steiner symmetral of a general polytope; rasterize it first".into(),
                )),
            },
        },
    }
}

fn is_symmetric_already(f: &ScalarField, mode: Symmetrization) -> bool {
    match (f, mode) {
        (ScalarField::Radial(_), _) => true,
        (ScalarField::Indicator { body: ConvexBody::Ball(_), .. }, _) => true,
        (ScalarField::Indicator { body, .. }, Symmetrization::Steiner(_)) => match body {
            ConvexBody::Ellipsoid(_) => true,
            ConvexBody::Polytope(p) => p.as_axis_box().is_some(),
            ConvexBody::Ball(_) => true,
        },
        _ => false,
    }
}

/// |Pi*_s f^sym|^{-s/n} <= |Pi*_s f|^{-s/n}; `thresholds` levels feed the
/// Schwarz rearrangement.
pub fn check_symmetrization_monotone(
    f: &ScalarField,
    mode: Symmetrization,
    thresholds: usize,
    params: FracParams,
    q: &SphereQuadrature,
    tol: &Tolerances,
) -> Result<VerificationReport> {
    if !f.is_nonnegative() {
        return param("symmetrization check needs f >= 0");
    }
    let sym = match mode {
        Symmetrization::Schwarz => ScalarField::Radial(schwarz_symmetrize(f, thresholds)?),
        Symmetrization::Steiner(axis) => steiner_field(f, axis)?,
    };
    let before = vol_power(&polar_projection_body(f, params, q)?);
    let after = vol_power(&polar_projection_body(&sym, params, q)?);
    let inputs = with(
        grid_inputs(params, q),
        json!({ "field": describe_field(f), "mode": mode, "thresholds": thresholds }),
    );
    let name = match mode {
        Symmetrization::Schwarz => "symmetrization_schwarz",
        Symmetrization::Steiner(_) => "symmetrization_steiner",
    };
    Ok(if is_symmetric_already(f, mode) {
        VerificationReport::new(name, inputs, after, before, Relation::Equal, tol.fixed_point)
    } else {
        VerificationReport::new(name, inputs, after, before, Relation::AtMost, tol.symmetrization)
    })
}

/// |Pi* E| for the classical polar projection body, from closed forms
/// (ellipsoids) or the exact zonotope polar (polytopes).
pub fn classical_polar_projection_volume(e: &ConvexBody) -> Result<f64> {
    let n = e.dim();
    let wn = omega(n as f64)?;
    let wn1 = omega(n as f64 - 1.0)?;
    match e {
        ConvexBody::Ball(b) => {
            let c = wn1 * b.radius().powi(n as i32 - 1);
            Ok(wn / c.powi(n as i32))
        }
        ConvexBody::Ellipsoid(el) => {
            let det = el.det_map();
            Ok(wn * det / (det * wn1).powi(n as i32))
        }
        ConvexBody::Polytope(p) => {
            let z = projection_body_polytope(p)?.to_polytope()?;
            Ok(ConvexBody::Polytope(z).polar()?.volume())
        }
    }
}

/// Linear fit through the two points nearest s = 1, extrapolated to s = 1,
/// plus the relative miss of that line at the third point.
fn richardson(eps: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let slope = (y[1] - y[0]) / (eps[1] - eps[0]);
    let y0 = y[0] - slope * eps[0];
    let residual = ((y0 + slope * eps[2]) - y[2]).abs() / y[2].abs();
    (y0, residual)
}

/// Extrapolation to s = 1 of (a) (1-s)||xi||^s, (b) (1-s)|Pi*_s f|^{-s/n}
/// and (c) a_{n,s} |f|_{s,1}, compared with their classical limits.
pub fn check_limits_s_to_1(
    f: &ScalarField,
    q: &SphereQuadrature,
    s_grid: [f64; 3],
    tol: &Tolerances,
) -> Result<[VerificationReport; 3]> {
    let (body, height) = match f {
        ScalarField::Indicator { body, height } => (body, *height),
        _ => return param("limit check needs the indicator of a convex body"),
    };
    let n = f.dim();
    let nf = n as f64;
    let mut s_sorted = s_grid;
    s_sorted.sort_by(|a, b| b.total_cmp(a));
    if s_sorted.iter().any(|s| !(*s > 0.0 && *s < 1.0)) || s_sorted[0] == s_sorted[1] || s_sorted[1] == s_sorted[2] {
        return param("limit check needs three distinct s in (0, 1)");
    }
    let eps = s_sorted.map(|s| 1.0 - s);
    let mut node_vals = vec![[0.0; 3]; q.len()];
    let mut vol_vals = [0.0; 3];
    let mut semi_vals = [0.0; 3];
    for (k, s) in s_sorted.iter().enumerate() {
        let params = FracParams::new(n, *s)?;
        let b = polar_projection_body(f, params, q)?;
        for (i, g) in b.gauge_powers().iter().enumerate() {
            node_vals[i][k] = eps[k] * g;
        }
        vol_vals[k] = eps[k] * vol_power(&b);
        semi_vals[k] = sharp_constant(params) * frac_seminorm_with_body(&b, &unit_ball(n)?, q)?;
    }
    let inputs = json!({
        "field": describe_field(f),
        "s_grid": s_sorted,
        "grid": q.kind(),
        "resolution": q.resolution(),
        "nodes": q.len(),
    });
    let finish = |r: VerificationReport, residual: f64| {
        let r = r.note(format!("linear-fit residual {residual:.3e}"));
        if residual > tol.limits {
            r.fail_with("extrapolation residual above tolerance")
        } else {
            r
        }
    };

    // (a) node-wise, report the worst node
    let mut worst: Option<(f64, f64, f64, f64, usize)> = None;
    for (i, y) in node_vals.iter().enumerate() {
        let (y0, res) = richardson(eps, *y);
        let target = 2.0 * height * body.brightness(q.nodes()[i].coords());
        let gap = ((target - y0) / target).abs();
        if worst.is_none_or(|w| gap > w.0) {
            worst = Some((gap, y0, target, res, i));
        }
    }
    let (_, y0, target, res_a, node) = worst.expect("quadrature has nodes");
    let max_res = node_vals
        .iter()
        .map(|y| richardson(eps, *y).1)
        .fold(0.0, f64::max);
    let a = VerificationReport::new("limit_gauge", inputs.clone(), y0, target, Relation::Equal, tol.limits)
        .note(format!("worst node {node}, residual there {res_a:.3e}"));
    let a = finish(a, max_res);

    let (y0, res) = richardson(eps, vol_vals);
    let target = 2.0 * height * classical_polar_projection_volume(body)?.powf(-1.0 / nf);
    let b = finish(
        VerificationReport::new("limit_volume", inputs.clone(), y0, target, Relation::Equal, tol.limits),
        res,
    );

    let (y0, res) = richardson(eps, semi_vals);
    let target = height * body.surface_area() / (nf * omega(nf)?.powf(1.0 / nf));
    let c = finish(
        VerificationReport::new("limit_seminorm", inputs, y0, target, Relation::Equal, tol.limits),
        res,
    );
    Ok([a, b, c])
}

/// |R_p E|/|E| against the ball ratio, one report per p. Balls maximize the
/// ratio for -1 < p < n (p = 0 included) and minimize it for p > n; for
/// p = n the ratio is 1 for every E.
pub fn check_mean_radial(
    e: &ConvexBody,
    p_grid: &[f64],
    q: &SphereQuadrature,
    samples: usize,
    seed: u64,
    tol: &Tolerances,
) -> Result<Vec<VerificationReport>> {
    let n = e.dim();
    let nf = n as f64;
    let mut out = Vec::with_capacity(p_grid.len());
    for &p in p_grid {
        let body = radial_mean_body(e, p, q, samples, seed)?;
        let ratio = body.volume() / e.volume();
        let ball = radial_mean_ball_ratio(n, p)?;
        let inputs = json!({
            "body": BodyDescriptor::describe(e),
            "p": p,
            "samples": samples,
            "seed": seed,
            "grid": q.kind(),
            "resolution": q.resolution(),
            "nodes": q.len(),
        });
        let always_equal = (p - nf).abs() < 1e-12;
        let r = if always_equal || is_ellipsoidal(e) {
            VerificationReport::new("mean_radial", inputs, ratio, ball, Relation::Equal, tol.monte_carlo)
        } else if p > nf {
            VerificationReport::new("mean_radial", inputs, ball, ratio, Relation::AtMost, tol.monte_carlo)
        } else {
            VerificationReport::new("mean_radial", inputs, ratio, ball, Relation::AtMost, tol.monte_carlo)
        };
        let mut r = r;
        for w in body.warnings() {
            r = r.note(w.clone());
        }
        out.push(r);
    }
    Ok(out)
}

/// |E|^{(n-1)/n} <= (w_n/w_{n-1}) |Pi* E|^{-1/n}.
pub fn check_classical_petty(e: &Polytope, tol: &Tolerances) -> Result<VerificationReport> {
    let n = e.dim();
    let nf = n as f64;
    let body: ConvexBody = e.clone().into();
    let lhs = e.volume().powf((nf - 1.0) / nf);
    let rhs = omega(nf)? / omega(nf - 1.0)? * classical_polar_projection_volume(&body)?.powf(-1.0 / nf);
    let inputs = json!({ "body": BodyDescriptor::describe(&body) });
    Ok(VerificationReport::new("classical_petty", inputs, lhs, rhs, Relation::AtMost, tol.ordering))
}

/// Unit-volume ellipsoid with semi-axes (2, 1/2) used by the default suites.
pub fn default_ellipse() -> ConvexBody {
    Ellipsoid::axis_aligned(&[2.0, 0.5]).expect("valid semi-axes").into()
}

/// Bodies used by the default suites in the plane.
pub fn default_bodies() -> Vec<(&'static str, ConvexBody)> {
    vec![
        ("disk", Ball::centered(2, 1.0).expect("valid").into()),
        ("ellipse", default_ellipse()),
        ("square", Polytope::axis_box(&[0.0, 0.0], &[1.0, 1.0]).expect("valid").into()),
        (
            "triangle",
            Polytope::from_vertices(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]])
                .expect("valid")
                .into(),
        ),
    ]
}

/// Seeded piecewise-constant field on [0,1]^2 with `cells` x `cells` cells:
/// a few Gaussian bumps quantized to four levels, zero near the border.
pub fn random_voxel_field(cells: usize, seed: u64) -> Result<ScalarField> {
    use rand::Rng;
    let mut rng = crate::rng::substream(seed, "random_voxel_field", 0);
    let bumps: Vec<([f64; 2], f64, f64)> = (0..3)
        .map(|_| {
            let c = [rng.gen_range(0.3..0.7), rng.gen_range(0.3..0.7)];
            (c, rng.gen_range(0.08..0.2), rng.gen_range(0.5..1.0))
        })
        .collect();
    let g = crate::fields::VoxelGrid::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![cells, cells], |x| {
        let v: f64 = bumps
            .iter()
            .map(|(c, w, h)| {
                let d2 = (x[0] - c[0]).powi(2) + (x[1] - c[1]).powi(2);
                h * (-d2 / (2.0 * w * w)).exp()
            })
            .sum();
        let edge = x[0].min(x[1]).min(1.0 - x[0]).min(1.0 - x[1]);
        if edge < 0.05 {
            0.0
        } else {
            (4.0 * v).floor().min(4.0)
        }
    })?;
    if g.values().iter().all(|v| *v == 0.0) {
        return Err(Error::Degenerate("random field came out empty".into()));
    }
    Ok(ScalarField::Voxel(g))
}
