//! Direction grids on the unit sphere and the singular t-integral.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::constants::omega;
use crate::error::{Error, Result};
use crate::linalg::Direction;
use crate::rng::substream;

/// How a sphere grid was generated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Deterministic,
    MonteCarlo { seed: u64 },
}

/// Finite direction set with positive weights approximating the surface
/// measure on S^{n-1}.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    n: usize,
    nodes: Vec<Direction>,
    weights: Vec<f64>,
    antipodes: Option<Vec<usize>>,
    kind: GridKind,
    resolution: usize,
}

impl SphereQuadrature {
    fn assemble(
        n: usize,
        nodes: Vec<Direction>,
        weights: Vec<f64>,
        kind: GridKind,
        resolution: usize,
    ) -> Self {
        let antipodes = find_antipodes(&nodes);
        Self {
            n,
            nodes,
            weights,
            antipodes,
            kind,
            resolution,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Direction] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Index of the node equal to the negative of node `i`, when the grid is
    /// closed under the antipodal map.
    pub fn antipode(&self, i: usize) -> Option<usize> {
        self.antipodes.as_ref().map(|a| a[i])
    }

    pub fn is_antipodal(&self) -> bool {
        self.antipodes.is_some()
    }

    pub fn integrate<F: Fn(&Direction) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(u, w)| w * f(u))
            .sum()
    }

    /// Weighted sum of per-node values.
    pub fn sum_values(&self, values: &[f64]) -> f64 {
        values.iter().zip(&self.weights).map(|(v, w)| v * w).sum()
    }
}

fn find_antipodes(nodes: &[Direction]) -> Option<Vec<usize>> {
    let mut out = Vec::with_capacity(nodes.len());
    // nodes produced by the constructors below come in exact +/- pairs
    // placed half the list apart
    let m = nodes.len();
    if !m.is_multiple_of(2) {
        return None;
    }
    let half = m / 2;
    for i in 0..m {
        let j = if i < half { i + half } else { i - half };
        let exact = nodes[i]
            .coords()
            .iter()
            .zip(nodes[j].coords())
            .all(|(a, b)| *a == -*b);
        if !exact {
            return None;
        }
        out.push(j);
    }
    Some(out)
}

/// Deterministic grid on S^{n-1} for n in {1, 2, 3}.
///
/// n = 1: the points +1 and -1 with unit weight. n = 2: `resolution` equally
/// spaced angles. n = 3: a Fibonacci lattice, antipodally symmetrised when
/// `resolution` is even.
pub fn sphere_grid(n: usize, resolution: usize) -> Result<SphereQuadrature> {
    if resolution < 2 {
        return Err(Error::Parameter(format!(
            "sphere resolution must be at least 2, got {resolution}"
        )));
    }
    match n {
        1 => Ok(SphereQuadrature::assemble(
            1,
            vec![Direction::axis(1, 0), Direction::axis(1, 0).neg()],
            vec![1.0, 1.0],
            GridKind::Deterministic,
            resolution,
        )),
        2 => {
            let w = 2.0 * PI / resolution as f64;
            let nodes = if resolution.is_multiple_of(2) {
                let half = resolution / 2;
                let first: Vec<Direction> = (0..half)
                    .map(|k| Direction::from_angle(2.0 * PI * k as f64 / resolution as f64))
                    .collect();
                let second: Vec<Direction> = first.iter().map(Direction::neg).collect();
                first.into_iter().chain(second).collect()
            } else {
                (0..resolution)
                    .map(|k| Direction::from_angle(2.0 * PI * k as f64 / resolution as f64))
                    .collect()
            };
            Ok(SphereQuadrature::assemble(
                2,
                nodes,
                vec![w; resolution],
                GridKind::Deterministic,
                resolution,
            ))
        }
        3 => {
            let m = resolution;
            let golden = (1.0 + 5f64.sqrt()) / 2.0;
            // even m: a full lattice of m/2 points plus its reflection, which
            // keeps the even-moment accuracy of the smaller lattice
            let base = if m.is_multiple_of(2) { m / 2 } else { m };
            let point = |k: usize| {
                let z = 1.0 - (2 * k + 1) as f64 / base as f64;
                let r = (1.0 - z * z).max(0.0).sqrt();
                let phi = 2.0 * PI * (k as f64 / golden).fract();
                Direction::normalize(&[r * phi.cos(), r * phi.sin(), z]).unwrap()
            };
            let nodes: Vec<Direction> = if m.is_multiple_of(2) {
                let first: Vec<Direction> = (0..base).map(point).collect();
                let second: Vec<Direction> = first.iter().map(Direction::neg).collect();
                first.into_iter().chain(second).collect()
            } else {
                (0..m).map(point).collect()
            };
            Ok(SphereQuadrature::assemble(
                3,
                nodes,
                vec![4.0 * PI / m as f64; m],
                GridKind::Deterministic,
                resolution,
            ))
        }
        _ => Err(Error::Unsupported(format!(
            "no deterministic sphere grid in dimension {n}; use sphere_grid_mc"
        ))),
    }
}

/// Uniformly random unit vectors with equal weights, any dimension.
pub fn sphere_grid_mc(n: usize, count: usize, seed: u64) -> Result<SphereQuadrature> {
    if count < 2 {
        return Err(Error::Parameter(format!(
            "sphere resolution must be at least 2, got {count}"
        )));
    }
    if n < 1 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    let area = n as f64 * omega(n as f64)?;
    let nodes = (0..count)
        .map(|i| {
            let mut rng = substream(seed, "sphere_grid_mc", i as u64);
            loop {
                let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
                if let Ok(d) = Direction::normalize(&v) {
                    break d;
                }
            }
        })
        .collect();
    Ok(SphereQuadrature::assemble(
        n,
        nodes,
        vec![area / count as f64; count],
        GridKind::MonteCarlo { seed },
        count,
    ))
}

/// Shape information for integrands t^{-s-1} g(t) on (0, inf).
#[derive(Debug, Clone, PartialEq)]
pub struct SingularIntegrandProfile {
    upper_knot: f64,
    small_t_slope_bound: f64,
    breakpoints: Vec<f64>,
}

impl SingularIntegrandProfile {
    /// `upper_knot` is the T beyond which g is constant; `slope_bound` is a
    /// c with g(t) <= c t near zero.
    pub fn new(upper_knot: f64, slope_bound: f64) -> Result<Self> {
        if !(upper_knot > 0.0) || !upper_knot.is_finite() {
            return Err(Error::Parameter(format!(
                "upper knot must be positive and finite, got {upper_knot}"
            )));
        }
        if !(slope_bound >= 0.0) {
            return Err(Error::Parameter(format!(
                "slope bound must be nonnegative, got {slope_bound}"
            )));
        }
        Ok(Self {
            upper_knot,
            small_t_slope_bound: slope_bound,
            breakpoints: Vec::new(),
        })
    }

    /// Interior points in (0, T) where g has kinks.
    pub fn with_breakpoints(mut self, mut pts: Vec<f64>) -> Self {
        pts.retain(|t| *t > 0.0 && *t < self.upper_knot);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        self.breakpoints = pts;
        self
    }

    pub fn upper_knot(&self) -> f64 {
        self.upper_knot
    }

    pub fn small_t_slope_bound(&self) -> f64 {
        self.small_t_slope_bound
    }
}

// Gauss-Kronrod 7/15 abscissae and weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

pub(crate) fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let pair = f(c - dx) + f(c + dx);
        kron += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss-Kronrod integration of a smooth-by-pieces
/// function on [a, b] with given interior breakpoints.
pub fn adaptive_gk<F: Fn(f64) -> f64>(
    f: &F,
    knots: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<f64> {
    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in knots.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(f, w[0], w[1]);
            total += v;
            total_err += e;
            heap.push(Panel {
                a: w[0],
                b: w[1],
                value: v,
                err: e,
            });
        }
    }
    let mut previous = f64::NAN;
    while total_err > abs_tol.max(rel_tol * total.abs()) {
        if heap.len() >= max_panels {
            return Err(Error::QuadratureFailure {
                last: total,
                previous,
            });
        }
        let p = heap.pop().expect("nonempty");
        let mid = 0.5 * (p.a + p.b);
        if !(mid > p.a && mid < p.b) {
            // panel cannot be split further in floating point
            return Err(Error::QuadratureFailure {
                last: total,
                previous,
            });
        }
        let (v1, e1) = gk15(f, p.a, mid);
        let (v2, e2) = gk15(f, mid, p.b);
        previous = total;
        total += v1 + v2 - p.value;
        total_err += e1 + e2 - p.err;
        heap.push(Panel {
            a: p.a,
            b: mid,
            value: v1,
            err: e1,
        });
        heap.push(Panel {
            a: mid,
            b: p.b,
            value: v2,
            err: e2,
        });
        if heap.len() % 64 == 0 {
            // resum to keep the running totals honest
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.err).sum();
        }
    }
    Ok(heap.iter().map(|p| p.value).sum())
}

/// Tolerances for [`integrate_singular`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularQuadrature {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_panels: usize,
}

impl Default for SingularQuadrature {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-300,
            max_panels: 4000,
        }
    }
}

impl SingularQuadrature {
    /// integral over (0, inf) of t^{-s-1} g(t), with g constant beyond the
    /// upper knot. The bounded range is integrated in u = t^{1-s}.
    pub fn integrate<F: Fn(f64) -> f64>(
        &self,
        g: F,
        s: f64,
        profile: &SingularIntegrandProfile,
    ) -> Result<f64> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain {
                what: "fractional order must lie in (0, 1)",
                value: s,
            });
        }
        let big_t = profile.upper_knot;
        let e = 1.0 - s;
        let inv_e = 1.0 / e;
        let integrand = |u: f64| {
            let t = u.powf(inv_e);
            if t <= 0.0 {
                return 0.0;
            }
            g(t) / (t * e)
        };
        let mut knots = Vec::with_capacity(profile.breakpoints.len() + 2);
        knots.push(0.0);
        knots.extend(profile.breakpoints.iter().map(|t| t.powf(e)));
        knots.push(big_t.powf(e));
        let body = adaptive_gk(&integrand, &knots, self.rel_tol, self.abs_tol, self.max_panels)?;
        let tail = g(big_t) * big_t.powf(-s) / s;
        Ok(body + tail)
    }
}

/// integral over (0, inf) of t^{-s-1} g(t) with default tolerances.
pub fn integrate_singular<F: Fn(f64) -> f64>(
    g: F,
    s: f64,
    profile: &SingularIntegrandProfile,
) -> Result<f64> {
    SingularQuadrature::default().integrate(g, s, profile)
}
