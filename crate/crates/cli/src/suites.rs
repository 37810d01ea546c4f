use clap::ValueEnum;
use fracgeom::bodies::{Ball, ConvexBody, Polytope};
use fracgeom::constants::FracParams;
use fracgeom::fields::{RadialProfile, ScalarField};
use fracgeom::quadrature::{sphere_grid, SphereQuadrature};
use fracgeom::verify::{
    check_affine_frac_sobolev, check_classical_petty, check_frac_petty, check_limits_s_to_1, check_mean_radial,
    check_symmetrization_monotone, default_bodies, default_ellipse, random_voxel_field, Symmetrization,
    VerificationReport,
};
use fracgeom::{Error, Result};

use crate::config::RunConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum Suite {
    All,
    Sobolev,
    FracPetty,
    Symmetrization,
    Limits,
    MeanRadial,
    ClassicalPetty,
}

const SUITES: [Suite; 6] = [
    Suite::Sobolev,
    Suite::FracPetty,
    Suite::Symmetrization,
    Suite::Limits,
    Suite::MeanRadial,
    Suite::ClassicalPetty,
];

const LIMIT_GRID: [f64; 3] = [0.9, 0.95, 0.975];
const MEAN_RADIAL_P: [f64; 6] = [-0.5, 0.0, 0.5, 1.0, 2.0, 3.0];
const RANDOM_FIELDS: u64 = 2;
const RANDOM_FIELD_CELLS: usize = 64;

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::All => "all",
            Suite::Sobolev => "sobolev",
            Suite::FracPetty => "frac_petty",
            Suite::Symmetrization => "symmetrization",
            Suite::Limits => "limits",
            Suite::MeanRadial => "mean_radial",
            Suite::ClassicalPetty => "classical_petty",
        }
    }
}

/// User-supplied inputs; empty lists and missing bodies fall back to defaults.
pub struct Inputs {
    pub body: Option<(String, ConvexBody)>,
    pub field: Option<(String, ScalarField)>,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
}

pub struct Row {
    pub suite: &'static str,
    pub input: String,
    pub report: VerificationReport,
}

type Labeled<T> = Vec<(String, T)>;

fn unsupported<T>(msg: &str) -> Result<T> {
    Err(Error::Unsupported(msg.into()))
}

fn indicator(b: &ConvexBody) -> Result<ScalarField> {
    ScalarField::indicator(b.clone(), 1.0)
}

fn two_level_profile() -> ScalarField {
    ScalarField::Radial(RadialProfile::new(2, vec![(0.5, 2.0), (1.0, 1.0)]).expect("valid profile"))
}

fn named(bodies: Vec<(&'static str, ConvexBody)>) -> Labeled<ConvexBody> {
    bodies.into_iter().map(|(k, b)| (k.to_string(), b)).collect()
}

/// Bodies from the input: an explicit body, or a field that is an indicator.
fn given_bodies(inputs: &Inputs) -> Result<Option<Labeled<ConvexBody>>> {
    if let Some((l, b)) = &inputs.body {
        return Ok(Some(vec![(l.clone(), b.clone())]));
    }
    match &inputs.field {
        Some((l, ScalarField::Indicator { body, .. })) => Ok(Some(vec![(l.clone(), body.clone())])),
        Some(_) => unsupported("this suite needs a convex body, not a general field"),
        None => Ok(None),
    }
}

fn given_fields(inputs: &Inputs) -> Result<Option<Labeled<ScalarField>>> {
    if let Some((l, f)) = &inputs.field {
        return Ok(Some(vec![(l.clone(), f.clone())]));
    }
    match &inputs.body {
        Some((l, b)) => Ok(Some(vec![(l.clone(), indicator(b)?)])),
        None => Ok(None),
    }
}

fn s_list(inputs: &Inputs, default: &[f64]) -> Vec<f64> {
    if inputs.s.is_empty() {
        default.to_vec()
    } else {
        inputs.s.clone()
    }
}

fn grid(cfg: &RunConfig, n: usize) -> Result<SphereQuadrature> {
    sphere_grid(n, cfg.resolution_for(n))
}

fn push(out: &mut Vec<Row>, suite: Suite, input: &str, reports: impl IntoIterator<Item = VerificationReport>) {
    out.extend(reports.into_iter().map(|report| Row { suite: suite.name(), input: input.to_string(), report }));
}

fn sobolev(inputs: &Inputs, cfg: &RunConfig, out: &mut Vec<Row>) -> Result<()> {
    let fields = match given_fields(inputs)? {
        Some(f) => f,
        None => {
            let mut f: Labeled<ScalarField> = named(default_bodies())
                .into_iter()
                .map(|(l, b)| Ok((l, indicator(&b)?)))
                .collect::<Result<_>>()?;
            f.push(("two_level".into(), two_level_profile()));
            f
        }
    };
    for s in s_list(inputs, &[0.5]) {
        for (label, f) in &fields {
            let params = FracParams::new(f.dim(), s)?;
            let r = check_affine_frac_sobolev(f, params, &grid(cfg, f.dim())?, &cfg.tolerances)?;
            push(out, Suite::Sobolev, label, r);
        }
    }
    Ok(())
}

fn frac_petty(inputs: &Inputs, cfg: &RunConfig, out: &mut Vec<Row>) -> Result<()> {
    let bodies = given_bodies(inputs)?.unwrap_or_else(|| named(default_bodies()));
    for s in s_list(inputs, &[0.3, 0.7]) {
        for (label, b) in &bodies {
            let params = FracParams::new(b.dim(), s)?;
            let r = check_frac_petty(b, params, &grid(cfg, b.dim())?, &cfg.tolerances)?;
            push(out, Suite::FracPetty, label, r);
        }
    }
    Ok(())
}

fn symmetrization(inputs: &Inputs, cfg: &RunConfig, out: &mut Vec<Row>) -> Result<()> {
    let fields = match given_fields(inputs)? {
        Some(f) => f,
        None => {
            let square: ConvexBody = Polytope::axis_box(&[0.0, 0.0], &[1.0, 1.0])?.into();
            let mut f = vec![
                ("square".to_string(), indicator(&square)?),
                ("ellipse".to_string(), indicator(&default_ellipse())?),
            ];
            for k in 0..RANDOM_FIELDS {
                let seed = cfg.seed.wrapping_add(k);
                f.push((format!("random_{seed}"), random_voxel_field(RANDOM_FIELD_CELLS, seed)?));
            }
            f
        }
    };
    for s in s_list(inputs, &[0.5]) {
        for (label, f) in &fields {
            let n = f.dim();
            let q = grid(cfg, n)?;
            let params = FracParams::new(n, s)?;
            let modes = std::iter::once(Symmetrization::Schwarz).chain((0..n).map(Symmetrization::Steiner));
            for mode in modes {
                match check_symmetrization_monotone(f, mode, cfg.thresholds, params, &q, &cfg.tolerances) {
                    Ok(r) => push(out, Suite::Symmetrization, label, [r]),
                    // general polytopes and tilted ellipsoids have no exact Steiner symmetral here
                    Err(Error::Unsupported(m)) => eprintln!("skipping {mode:?} for {label}: {m}"),
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(())
}

fn limits(inputs: &Inputs, cfg: &RunConfig, out: &mut Vec<Row>) -> Result<()> {
    let fields = match given_fields(inputs)? {
        Some(f) => f,
        None => {
            let disk: ConvexBody = Ball::centered(2, 1.0)?.into();
            let square: ConvexBody = Polytope::axis_box(&[0.0, 0.0], &[1.0, 1.0])?.into();
            vec![("disk".to_string(), indicator(&disk)?), ("square".to_string(), indicator(&square)?)]
        }
    };
    let s_grid: [f64; 3] = match inputs.s.as_slice() {
        [] => LIMIT_GRID,
        [a, b, c] => [*a, *b, *c],
        _ => return unsupported("the limits suite takes exactly three --s values"),
    };
    for (label, f) in &fields {
        if !matches!(f, ScalarField::Indicator { .. }) {
            return unsupported("the limits suite needs the indicator of a convex body");
        }
        let r = check_limits_s_to_1(f, &grid(cfg, f.dim())?, s_grid, &cfg.tolerances)?;
        push(out, Suite::Limits, label, r);
    }
    Ok(())
}

fn mean_radial(inputs: &Inputs, cfg: &RunConfig, out: &mut Vec<Row>) -> Result<()> {
    let bodies = match given_bodies(inputs)? {
        Some(b) => b,
        None => named(default_bodies()).into_iter().filter(|(l, _)| l != "ellipse").collect(),
    };
    let p = if inputs.p.is_empty() { MEAN_RADIAL_P.to_vec() } else { inputs.p.clone() };
    for (label, b) in &bodies {
        let r = check_mean_radial(b, &p, &grid(cfg, b.dim())?, cfg.samples, cfg.seed, &cfg.tolerances)?;
        push(out, Suite::MeanRadial, label, r);
    }
    Ok(())
}

fn classical_petty(inputs: &Inputs, cfg: &RunConfig, out: &mut Vec<Row>) -> Result<()> {
    let bodies = match given_bodies(inputs)? {
        Some(b) => b,
        None => vec![
            ("square".to_string(), Polytope::axis_box(&[0.0, 0.0], &[1.0, 1.0])?.into()),
            ("thin_box".to_string(), Polytope::axis_box(&[0.0, 0.0], &[4.0, 0.25])?.into()),
            ("polygon_64".to_string(), Polytope::regular_polygon(64, 1.0)?.into()),
        ],
    };
    for (label, b) in &bodies {
        let ConvexBody::Polytope(p) = b else {
            return unsupported("the classical Petty suite needs a polytope");
        };
        push(out, Suite::ClassicalPetty, label, [check_classical_petty(p, &cfg.tolerances)?]);
    }
    Ok(())
}

/// Run one suite, or all of them. Under `all`, suites that cannot take the
/// given input are skipped with a note on stderr.
pub fn run(suite: Suite, inputs: &Inputs, cfg: &RunConfig) -> Result<Vec<Row>> {
    let mut out = Vec::new();
    let chosen: Vec<Suite> = if suite == Suite::All { SUITES.to_vec() } else { vec![suite] };
    for s in chosen {
        let r = match s {
            Suite::Sobolev => sobolev(inputs, cfg, &mut out),
            Suite::FracPetty => frac_petty(inputs, cfg, &mut out),
            Suite::Symmetrization => symmetrization(inputs, cfg, &mut out),
            Suite::Limits => limits(inputs, cfg, &mut out),
            Suite::MeanRadial => mean_radial(inputs, cfg, &mut out),
            Suite::ClassicalPetty => classical_petty(inputs, cfg, &mut out),
            Suite::All => unreachable!(),
        };
        match r {
            Err(Error::Unsupported(m)) if suite == Suite::All => eprintln!("skipping {}: {m}", s.name()),
            other => other?,
        }
    }
    Ok(out)
}

pub fn summary_table(rows: &[Row]) -> String {
    let mut t = format!(
        "{:<16} {:<28} {:<12} {:>14} {:>14} {:>11} {:>9}  {}\n",
        "suite", "check", "input", "lhs", "rhs", "gap", "tol", "verdict"
    );
    for r in rows {
        let v = &r.report;
        t.push_str(&format!(
            "{:<16} {:<28} {:<12} {:>14.6e} {:>14.6e} {:>11.3e} {:>9.1e}  {}\n",
            r.suite,
            v.check,
            r.input,
            v.lhs,
            v.rhs,
            v.gap,
            v.tolerance,
            if v.passed() { "pass" } else { "FAIL" }
        ));
    }
    t
}
