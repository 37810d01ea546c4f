//! Nonnegative scalar fields: indicators, voxel grids and radial step
//! profiles, with level sets, symmetrizations and shift differences.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::bodies::{ball_covariogram, ConvexBody};
use crate::constants::{omega, FracParams};
use crate::error::{param, Error, Result};
use crate::linalg::{canonical_sign, norm};
use crate::quadrature::gk15;

/// Default number of thresholds for level-set discretizations.
pub const DEFAULT_THRESHOLDS: usize = 256;

/// Fields with at most this many distinct values get thresholds at every
/// value, which makes level-set sums exact.
pub const DISTINCT_VALUE_CAP: usize = 1 << 16;

/// Piecewise-constant field on an axis-aligned grid of cells.
///
/// Values are stored row-major with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    counts: Vec<usize>,
    values: Vec<f64>,
}

impl VoxelGrid {
    /// Nonnegative grid.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let g = Self::new_signed(lower, upper, counts, values)?;
        if let Some(v) = g.values.iter().find(|v| **v < 0.0) {
            return Err(Error::Representation(format!(
                "voxel values must be nonnegative, got {v}"
            )));
        }
        Ok(g)
    }

    /// Grid that may carry negative values (only used for the |f| reduction).
    pub fn new_signed(
        lower: Vec<f64>,
        upper: Vec<f64>,
        counts: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let n = counts.len();
        if !(1..=3).contains(&n) || lower.len() != n || upper.len() != n {
            return param("voxel grids need matching box and counts in dimension 1-3");
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(b > a) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Representation("voxel box needs lower < upper".into()));
        }
        if counts.contains(&0) {
            return Err(Error::Representation("voxel counts must be positive".into()));
        }
        if values.len() != counts.iter().product::<usize>() {
            return Err(Error::Representation(format!(
                "expected {} voxel values, got {}",
                counts.iter().product::<usize>(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Representation("voxel values must be finite".into()));
        }
        Ok(Self {
            lower,
            upper,
            counts,
            values,
        })
    }

    /// Evaluate `f` at cell centres.
    pub fn from_fn<F: Fn(&[f64]) -> f64>(
        lower: Vec<f64>,
        upper: Vec<f64>,
        counts: Vec<usize>,
        f: F,
    ) -> Result<Self> {
        let total: usize = counts.iter().product();
        let n = counts.len();
        let h: Vec<f64> = (0..n).map(|i| (upper[i] - lower[i]) / counts[i] as f64).collect();
        let mut values = Vec::with_capacity(total);
        let mut x = vec![0.0; n];
        for flat in 0..total {
            let mut rem = flat;
            for i in (0..n).rev() {
                let c = rem % counts[i];
                rem /= counts[i];
                x[i] = lower[i] + (c as f64 + 0.5) * h[i];
            }
            values.push(f(&x));
        }
        Self::new_signed(lower, upper, counts, values)
    }

    /// Cell-centre digitization of a field.
    pub fn rasterize(f: &ScalarField, lower: Vec<f64>, upper: Vec<f64>, counts: Vec<usize>) -> Result<Self> {
        Self::from_fn(lower, upper, counts, |x| f.value_at(x))
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn cell_sizes(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| (self.upper[i] - self.lower[i]) / self.counts[i] as f64)
            .collect()
    }

    pub fn cell_volume(&self) -> f64 {
        self.cell_sizes().iter().product()
    }

    pub fn is_nonnegative(&self) -> bool {
        self.values.iter().all(|v| *v >= 0.0)
    }

    pub fn abs(&self) -> Self {
        let mut g = self.clone();
        g.values.iter_mut().for_each(|v| *v = v.abs());
        g
    }

    pub fn translate(&self, z: &[f64]) -> Self {
        let mut g = self.clone();
        for ((lo, hi), zi) in g.lower.iter_mut().zip(g.upper.iter_mut()).zip(z) {
            *lo += zi;
            *hi += zi;
        }
        g
    }

    fn dims3(&self) -> [usize; 3] {
        let mut d = [1usize; 3];
        let off = 3 - self.dim();
        for (i, c) in self.counts.iter().enumerate() {
            d[off + i] = *c;
        }
        d
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        let h = self.cell_sizes();
        let mut flat = 0usize;
        for i in 0..self.dim() {
            let c = ((x[i] - self.lower[i]) / h[i]).floor();
            if c < 0.0 || c >= self.counts[i] as f64 {
                return 0.0;
            }
            flat = flat * self.counts[i] + c as usize;
        }
        self.values[flat]
    }

    /// sum over cells of |F(c + m) - F(c)| for an integer cell shift m, F
    /// extended by zero (not yet multiplied by the cell volume).
    fn lattice_difference(&self, m: &[i64]) -> f64 {
        let d = self.dims3();
        let off = 3 - self.dim();
        let mut m3 = [0i64; 3];
        for (i, v) in m.iter().enumerate() {
            m3[off + i] = *v;
        }
        let abs_total: f64 = self.values.iter().map(|v| v.abs()).sum();
        let range = |k: usize| {
            let lo = 0i64.max(-m3[k]);
            let hi = (d[k] as i64).min(d[k] as i64 - m3[k]);
            (lo, hi)
        };
        let (r0, r1, r2) = (range(0), range(1), range(2));
        if r0.0 >= r0.1 || r1.0 >= r1.1 || r2.0 >= r2.1 {
            return 2.0 * abs_total;
        }
        let v = &self.values;
        let mut corr = 0.0;
        for i0 in r0.0..r0.1 {
            for i1 in r1.0..r1.1 {
                let base = ((i0 as usize) * d[1] + i1 as usize) * d[2];
                let shifted =
                    (((i0 + m3[0]) as usize) * d[1] + (i1 + m3[1]) as usize) * d[2];
                let a = &v[base + r2.0 as usize..base + r2.1 as usize];
                let b = &v[(shifted as i64 + r2.0 + m3[2]) as usize
                    ..(shifted as i64 + r2.1 + m3[2]) as usize];
                for (x, y) in a.iter().zip(b) {
                    corr += (x - y).abs() - x.abs() - y.abs();
                }
            }
        }
        2.0 * abs_total + corr
    }

    fn lattice_cached(&self, cache: &mut HashMap<Vec<i64>, f64>, m: Vec<i64>) -> f64 {
        if let Some(v) = cache.get(&m) {
            return *v;
        }
        let v = self.lattice_difference(&m);
        cache.insert(m, v);
        v
    }

    /// ||f(. + z) - f||_1, exact for the piecewise-constant field.
    pub fn shift_difference(&self, z: &[f64]) -> f64 {
        let z = canonical_sign(z);
        let h = self.cell_sizes();
        let n = self.dim();
        let frac: Vec<f64> = (0..n).map(|i| z[i] / h[i]).collect();
        let k: Vec<i64> = frac.iter().map(|f| f.floor() as i64).collect();
        // both weights from the same side so tiny negative shifts stay exact
        let delta: Vec<f64> = (0..n).map(|i| frac[i] - k[i] as f64).collect();
        let rest: Vec<f64> = (0..n).map(|i| (k[i] + 1) as f64 - frac[i]).collect();
        let mut cache = HashMap::new();
        let mut total = 0.0;
        for eps in 0..(1usize << n) {
            let mut w = 1.0;
            let mut m = k.clone();
            for i in 0..n {
                if eps >> i & 1 == 1 {
                    w *= delta[i];
                    m[i] += 1;
                } else {
                    w *= rest[i];
                }
            }
            if w != 0.0 {
                total += w * self.lattice_cached(&mut cache, m);
            }
        }
        total * self.cell_volume()
    }

    /// integral over (0, inf) of t^{-s-1} ||f(. + t xi) - f||_1 dt.
    ///
    /// Between the kinks t = j h_i / |xi_i| the shift difference is a
    /// polynomial of degree <= n in t: the first piece is integrated in
    /// closed form, later pieces by a 15-point Kronrod rule, and the
    /// constant tail analytically.
    pub fn shift_integral(&self, xi: &[f64], s: f64) -> f64 {
        let xi = canonical_sign(xi);
        let n = self.dim();
        let h = self.cell_sizes();
        let cv = self.cell_volume();
        let mass: f64 = self.values.iter().map(|v| v.abs()).sum::<f64>() * cv;
        let active: Vec<usize> = (0..n).filter(|&i| xi[i] != 0.0).collect();
        let t_end = active
            .iter()
            .map(|&i| self.counts[i] as f64 * h[i] / xi[i].abs())
            .fold(f64::INFINITY, f64::min);
        let mut kinks: Vec<f64> = Vec::new();
        for &i in &active {
            let step = h[i] / xi[i].abs();
            for j in 1..=self.counts[i] {
                let t = j as f64 * step;
                if t < t_end {
                    kinks.push(t);
                }
            }
        }
        kinks.push(t_end);
        kinks.sort_by(f64::total_cmp);
        kinks.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs());

        let mut cache = HashMap::new();
        // per piece: weights as linear functions alpha + beta t
        let coeffs = |t_mid: f64, cache: &mut HashMap<Vec<i64>, f64>| {
            let k: Vec<i64> = (0..n).map(|i| (t_mid * xi[i] / h[i]).floor() as i64).collect();
            let mut terms = Vec::with_capacity(1 << n);
            for eps in 0..(1usize << n) {
                let mut m = k.clone();
                let mut lin = Vec::with_capacity(n);
                for i in 0..n {
                    let beta = xi[i] / h[i];
                    let alpha = -(k[i] as f64);
                    if eps >> i & 1 == 1 {
                        m[i] += 1;
                        lin.push((alpha, beta));
                    } else {
                        lin.push((1.0 - alpha, -beta));
                    }
                }
                let a = self.lattice_cached(cache, m);
                if a != 0.0 {
                    terms.push((a, lin));
                }
            }
            terms
        };
        let eval = |terms: &[(f64, Vec<(f64, f64)>)], t: f64| -> f64 {
            terms
                .iter()
                .map(|(a, lin)| a * lin.iter().map(|(al, be)| al + be * t).product::<f64>())
                .sum::<f64>()
        };

        let mut total = 0.0;
        let mut t0 = 0.0;
        for (p, &t1) in kinks.iter().enumerate() {
            let terms = coeffs(0.5 * (t0 + t1), &mut cache);
            if p == 0 {
                // expand the product into monomials; the constant term vanishes
                let mut poly = vec![0.0; n + 1];
                for (a, lin) in &terms {
                    let mut c = vec![*a];
                    for (al, be) in lin {
                        let mut next = vec![0.0; c.len() + 1];
                        for (j, cj) in c.iter().enumerate() {
                            next[j] += cj * al;
                            next[j + 1] += cj * be;
                        }
                        c = next;
                    }
                    for (j, cj) in c.iter().enumerate() {
                        poly[j] += cj;
                    }
                }
                for (j, cj) in poly.iter().enumerate().skip(1) {
                    let e = j as f64 - s;
                    total += cj * t1.powf(e) / e;
                }
            } else {
                let f = |t: f64| t.powf(-s - 1.0) * eval(&terms, t);
                total += gk15(&f, t0, t1).0;
            }
            t0 = t1;
        }
        (total * cv + 2.0 * mass * t_end.powf(-s) / s).max(0.0)
    }

    /// Steiner symmetral along a coordinate axis.
    ///
    /// Each line of cells parallel to the axis is rearranged symmetric
    /// decreasingly about the hyperplane x_axis = 0. The result lives on a
    /// grid with half-size cells along the axis; it is coarsened back when
    /// every pair of half cells agrees.
    pub fn steiner_symmetrize(&self, axis: usize) -> Result<Self> {
        let n = self.dim();
        if axis >= n {
            return Err(Error::Unsupported(format!(
                "Steiner symmetrization needs a coordinate axis below {n}, got {axis}"
            )));
        }
        let len = self.counts[axis];
        let stride: usize = self.counts[axis + 1..].iter().product();
        let outer: usize = self.counts[..axis].iter().product();
        let h = self.cell_sizes()[axis];
        let mut fine_counts = self.counts.clone();
        fine_counts[axis] = 2 * len;
        let fine_stride = stride;
        let mut fine = vec![0.0; self.values.len() * 2];
        let lines: Vec<(usize, usize)> = (0..outer).flat_map(|o| (0..stride).map(move |r| (o, r))).collect();
        let columns: Vec<Vec<f64>> = lines
            .par_iter()
            .map(|&(o, r)| {
                let mut col: Vec<f64> = (0..len).map(|j| self.values[(o * len + j) * stride + r]).collect();
                col.sort_by(|a, b| b.total_cmp(a));
                col
            })
            .collect();
        for (&(o, r), col) in lines.iter().zip(&columns) {
            // half-cell pair i (counted outward from the centre) gets col[i]
            for (i, v) in col.iter().enumerate() {
                let up = len + i;
                let down = len - 1 - i;
                fine[(o * 2 * len + up) * fine_stride + r] = *v;
                fine[(o * 2 * len + down) * fine_stride + r] = *v;
            }
        }
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        lower[axis] = -0.5 * len as f64 * h;
        upper[axis] = 0.5 * len as f64 * h;
        let coarse_ok = (0..outer).all(|o| {
            (0..stride).all(|r| {
                (0..len).all(|j| {
                    fine[(o * 2 * len + 2 * j) * fine_stride + r]
                        == fine[(o * 2 * len + 2 * j + 1) * fine_stride + r]
                })
            })
        });
        if coarse_ok {
            let mut vals = vec![0.0; self.values.len()];
            for o in 0..outer {
                for j in 0..len {
                    for r in 0..stride {
                        vals[(o * len + j) * stride + r] = fine[(o * 2 * len + 2 * j) * fine_stride + r];
                    }
                }
            }
            Self::new_signed(lower, upper, self.counts.clone(), vals)
        } else {
            Self::new_signed(lower, upper, fine_counts, fine)
        }
    }
}

/// Radially symmetric decreasing step function: the value at x is the value
/// of the first knot whose radius is at least |x|, and 0 beyond the last.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialProfile {
    dim: usize,
    knots: Vec<(f64, f64)>,
}

impl RadialProfile {
    /// Knots (radius, value) with radii strictly increasing and values
    /// strictly decreasing and positive.
    pub fn new(dim: usize, knots: Vec<(f64, f64)>) -> Result<Self> {
        if dim == 0 {
            return param("radial profile needs a dimension");
        }
        if knots.is_empty() {
            return Err(Error::Representation("radial profile needs a knot".into()));
        }
        for (k, (r, v)) in knots.iter().enumerate() {
            if !(*r > 0.0) || !r.is_finite() || !(*v > 0.0) || !v.is_finite() {
                return Err(Error::Representation(format!(
                    "knot {k} must have positive finite radius and value"
                )));
            }
            if k > 0 && !(knots[k - 1].0 < *r && knots[k - 1].1 > *v) {
                return Err(Error::Representation(
                    "profile radii must increase and values decrease".into(),
                ));
            }
        }
        Ok(Self { dim, knots })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn value_at_radius(&self, r: f64) -> f64 {
        let k = self.knots.partition_point(|(kr, _)| *kr < r);
        self.knots.get(k).map_or(0.0, |(_, v)| *v)
    }

    /// (height increment, radius) of each ball in the layer decomposition.
    pub fn layers(&self) -> Vec<(f64, f64)> {
        (0..self.knots.len())
            .map(|k| {
                let next = self.knots.get(k + 1).map_or(0.0, |x| x.1);
                (self.knots[k].1 - next, self.knots[k].0)
            })
            .collect()
    }

    fn ball_volume(&self, r: f64) -> f64 {
        omega(self.dim as f64).unwrap() * r.powi(self.dim as i32)
    }
}

/// A nonnegative integrable field.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarField {
    Indicator { body: ConvexBody, height: f64 },
    Voxel(VoxelGrid),
    Radial(RadialProfile),
}

/// Thresholds t_1 < ... < t_m with |{f >= t_k}|.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelSetSummary {
    pub thresholds: Vec<f64>,
    pub measures: Vec<f64>,
}

impl ScalarField {
    pub fn indicator(body: ConvexBody, height: f64) -> Result<Self> {
        if !(height >= 0.0) || !height.is_finite() {
            return Err(Error::Representation(format!(
                "indicator height must be nonnegative, got {height}"
            )));
        }
        Ok(ScalarField::Indicator { body, height })
    }

    pub fn dim(&self) -> usize {
        match self {
            ScalarField::Indicator { body, .. } => body.dim(),
            ScalarField::Voxel(g) => g.dim(),
            ScalarField::Radial(r) => r.dim(),
        }
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        match self {
            ScalarField::Indicator { body, height } => {
                if body.contains(x) {
                    *height
                } else {
                    0.0
                }
            }
            ScalarField::Voxel(g) => g.value_at(x),
            ScalarField::Radial(r) => r.value_at_radius(norm(x)),
        }
    }

    pub fn is_nonnegative(&self) -> bool {
        match self {
            ScalarField::Voxel(g) => g.is_nonnegative(),
            _ => true,
        }
    }

    /// |f|.
    pub fn abs(&self) -> Self {
        match self {
            ScalarField::Voxel(g) => ScalarField::Voxel(g.abs()),
            other => other.clone(),
        }
    }

    pub fn max_value(&self) -> f64 {
        match self {
            ScalarField::Indicator { height, .. } => *height,
            ScalarField::Voxel(g) => g.values.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            ScalarField::Radial(r) => r.knots[0].1,
        }
    }

    /// L1 norm.
    pub fn mass(&self) -> f64 {
        self.lp_norm(1.0).expect("p = 1 is valid")
    }

    pub fn is_zero(&self) -> bool {
        self.max_value() == 0.0
            || matches!(self, ScalarField::Indicator { body, .. } if body.volume() == 0.0)
    }

    /// A t beyond which the supports of f(. + t xi) and f are disjoint
    /// (exact for indicators, a bound for grids and profiles).
    pub fn separation_length(&self, xi: &[f64]) -> f64 {
        match self {
            ScalarField::Indicator { body, .. } => body.width(xi) / norm(xi).powi(2),
            ScalarField::Voxel(g) => (0..g.dim())
                .filter(|&i| xi[i] != 0.0)
                .map(|i| (g.upper[i] - g.lower[i]) / xi[i].abs())
                .fold(f64::INFINITY, f64::min),
            ScalarField::Radial(r) => 2.0 * r.knots.last().unwrap().0 / norm(xi),
        }
    }

    /// ||f(. + t xi) - f||_1 (without the 1/t factor).
    pub fn shift_difference(&self, xi: &[f64], t: f64) -> f64 {
        let z: Vec<f64> = xi.iter().map(|c| c * t).collect();
        match self {
            ScalarField::Indicator { body, height } => {
                2.0 * height * (body.volume() - body.covariogram(&z)).max(0.0)
            }
            ScalarField::Voxel(g) => g.shift_difference(&z),
            ScalarField::Radial(r) => {
                let d = norm(&z);
                r.layers()
                    .iter()
                    .map(|(dh, rad)| {
                        2.0 * dh
                            * (r.ball_volume(*rad) - ball_covariogram(r.dim, *rad, d)).max(0.0)
                    })
                    .sum()
            }
        }
    }

    pub fn translate(&self, z: &[f64]) -> Result<Self> {
        match self {
            ScalarField::Indicator { body, height } => Ok(ScalarField::Indicator {
                body: body.translate(z),
                height: *height,
            }),
            ScalarField::Voxel(g) => Ok(ScalarField::Voxel(g.translate(z))),
            ScalarField::Radial(_) => Err(Error::Unsupported(
                "radial profiles are centered by construction".into(),
            )),
        }
    }

    /// f o phi^{-1}.
    pub fn linear_image(&self, phi: &nalgebra::DMatrix<f64>) -> Result<Self> {
        match self {
            ScalarField::Indicator { body, height } => Ok(ScalarField::Indicator {
                body: body.linear_image(phi)?,
                height: *height,
            }),
            ScalarField::Radial(r) => {
                if r.knots.len() == 1 {
                    let ball = crate::bodies::Ball::centered(r.dim, r.knots[0].0)?;
                    ScalarField::indicator(ConvexBody::Ball(ball), r.knots[0].1)?.linear_image(phi)
                } else {
                    Err(Error::Unsupported(
                        "linear images of multi-level profiles".into(),
                    ))
                }
            }
            ScalarField::Voxel(_) => Err(Error::Unsupported(
                "linear images of voxel grids".into(),
            )),
        }
    }

    /// Sorted distinct positive values when there are few enough of them.
    fn distinct_values(&self) -> Option<Vec<f64>> {
        let mut v: Vec<f64> = match self {
            ScalarField::Indicator { height, .. } => vec![*height],
            ScalarField::Radial(r) => r.knots.iter().map(|k| k.1).collect(),
            ScalarField::Voxel(g) => g.values.iter().map(|x| x.abs()).collect(),
        };
        v.retain(|x| *x > 0.0);
        v.sort_by(f64::total_cmp);
        v.dedup();
        if v.len() <= DISTINCT_VALUE_CAP {
            Some(v)
        } else {
            None
        }
    }

    /// Uniform thresholds k max/m, k = 1..m, joined with every distinct
    /// value when there are at most `DISTINCT_VALUE_CAP` of them.
    pub fn threshold_grid(&self, m: usize) -> Result<Vec<f64>> {
        if m < 1 {
            return param("at least one threshold is required");
        }
        let top = self.max_value();
        if !top.is_finite() {
            return Err(Error::Unsupported("unbounded field".into()));
        }
        if top == 0.0 {
            return Ok(Vec::new());
        }
        let mut t: Vec<f64> = (1..=m).map(|k| top * k as f64 / m as f64).collect();
        t[m - 1] = top;
        if let Some(d) = self.distinct_values() {
            t.extend(d);
        }
        t.sort_by(f64::total_cmp);
        t.dedup();
        Ok(t)
    }

    /// |{|f| >= t}| for each threshold.
    pub fn superlevel_measures(&self, thresholds: &[f64]) -> Vec<f64> {
        match self {
            ScalarField::Indicator { body, height } => {
                let v = body.volume();
                thresholds
                    .iter()
                    .map(|t| if *t <= *height { v } else { 0.0 })
                    .collect()
            }
            ScalarField::Voxel(g) => {
                let mut vals: Vec<f64> = g.values.iter().map(|x| x.abs()).collect();
                vals.sort_by(f64::total_cmp);
                let cv = g.cell_volume();
                thresholds
                    .iter()
                    .map(|t| {
                        let below = vals.partition_point(|x| x < t);
                        (vals.len() - below) as f64 * cv
                    })
                    .collect()
            }
            ScalarField::Radial(r) => thresholds
                .iter()
                .map(|t| {
                    // largest radius whose value is >= t
                    match r.knots.iter().rev().find(|(_, v)| v >= t) {
                        Some((rad, _)) => r.ball_volume(*rad),
                        None => 0.0,
                    }
                })
                .collect(),
        }
    }

    pub fn level_sets(&self, m: usize) -> Result<LevelSetSummary> {
        let thresholds = self.threshold_grid(m)?;
        let measures = self.superlevel_measures(&thresholds);
        Ok(LevelSetSummary {
            thresholds,
            measures,
        })
    }

    /// L^p norm for p >= 1.
    pub fn lp_norm(&self, p: f64) -> Result<f64> {
        if !(p >= 1.0) {
            return Err(Error::Parameter(format!("L^p norm needs p >= 1, got {p}")));
        }
        Ok(match self {
            ScalarField::Indicator { body, height } => height * body.volume().powf(1.0 / p),
            ScalarField::Voxel(g) => {
                let s: f64 = g.values.iter().map(|v| v.abs().powf(p)).sum();
                (s * g.cell_volume()).powf(1.0 / p)
            }
            ScalarField::Radial(r) => {
                let mut acc = 0.0;
                let mut inner = 0.0;
                for (rad, v) in &r.knots {
                    let vol = r.ball_volume(*rad);
                    acc += v.powf(p) * (vol - inner);
                    inner = vol;
                }
                acc.powf(1.0 / p)
            }
        })
    }
}

pub fn lp_norm(f: &ScalarField, p: f64) -> Result<f64> {
    f.lp_norm(p)
}

pub fn shift_difference(f: &ScalarField, xi: &[f64], t: f64) -> f64 {
    f.shift_difference(xi, t)
}

/// Schwarz symmetral as a radial step profile whose superlevel balls match
/// the superlevel measures of f on the threshold grid.
pub fn schwarz_symmetrize(f: &ScalarField, m: usize) -> Result<RadialProfile> {
    if !f.is_nonnegative() {
        return Err(Error::Parameter("Schwarz symmetrization needs f >= 0".into()));
    }
    let ls = f.level_sets(m)?;
    let n = f.dim();
    let w = omega(n as f64)?;
    let mut knots: Vec<(f64, f64)> = Vec::new();
    // walk from the top level down so radii grow
    for (t, mu) in ls.thresholds.iter().zip(&ls.measures).rev() {
        if *mu <= 0.0 {
            continue;
        }
        let r = (mu / w).powf(1.0 / n as f64);
        match knots.last_mut() {
            Some(last) if last.0 >= r => {}
            _ => knots.push((r, *t)),
        }
    }
    if knots.is_empty() {
        return Err(Error::Degenerate("cannot symmetrize the zero field".into()));
    }
    RadialProfile::new(n, knots)
}

pub fn steiner_symmetrize(f: &VoxelGrid, axis: usize) -> Result<VoxelGrid> {
    f.steiner_symmetrize(axis)
}

/// Both sides of the layer-cake inequality
/// (int g^{n/(n-s)})^{(n-s)/n} <= int_0^inf |{g >= t}|^{(n-s)/n} dt.
pub fn layer_cake_sides(g: &ScalarField, params: FracParams, m: usize) -> Result<(f64, f64)> {
    if !g.is_nonnegative() {
        return Err(Error::Parameter("layer cake needs g >= 0".into()));
    }
    let n = params.n() as f64;
    let q = (n - params.s()) / n;
    let lhs = g.lp_norm(1.0 / q)?;
    let ls = g.level_sets(m)?;
    let mut rhs = 0.0;
    let mut prev = 0.0;
    for (t, mu) in ls.thresholds.iter().zip(&ls.measures) {
        rhs += (t - prev) * mu.powf(q);
        prev = *t;
    }
    Ok((lhs, rhs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bodies::{Ball, Ellipsoid, Polytope};
    use crate::quadrature::{SingularIntegrandProfile, SingularQuadrature};
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn unit_square() -> ScalarField {
        ScalarField::indicator(Polytope::axis_box(&[0.0, 0.0], &[1.0, 1.0]).unwrap().into(), 1.0).unwrap()
    }

    fn disk() -> ScalarField {
        ScalarField::indicator(Ball::centered(2, 1.0).unwrap().into(), 1.0).unwrap()
    }

    #[test]
    fn lp_norm_examples() {
        assert_relative_eq!(unit_square().lp_norm(2.0).unwrap(), 1.0, max_relative = 1e-14);
        let f = ScalarField::indicator(Ball::centered(2, 1.0).unwrap().into(), 3.0).unwrap();
        assert_relative_eq!(f.lp_norm(2.0 / 1.5).unwrap(), 3.0 * PI.powf(0.75), max_relative = 1e-13);
        let g = VoxelGrid::rasterize(&disk(), vec![-1.0; 2], vec![1.0; 2], vec![256, 256]).unwrap();
        let m = ScalarField::Voxel(g).lp_norm(1.0).unwrap();
        assert!((m - PI).abs() < 0.02 * PI);
        assert!(unit_square().lp_norm(0.5).is_err());
    }

    #[test]
    fn shift_difference_examples() {
        let iv = ScalarField::indicator(Polytope::axis_box(&[0.0], &[1.0]).unwrap().into(), 1.0).unwrap();
        for t in [0.1, 0.5, 1.0, 3.0] {
            assert_relative_eq!(iv.shift_difference(&[1.0], t), 2.0 * t.min(1.0), epsilon = 1e-15);
        }
        assert_relative_eq!(disk().shift_difference(&[0.6, 0.8], 2.5), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(unit_square().shift_difference(&[1.0, 0.0], 0.5), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn shift_difference_symmetric_and_bounded() {
        let tri = ScalarField::indicator(
            Polytope::from_vertices(vec![vec![0.0, 0.0], vec![1.0, 0.1], vec![0.3, 0.7]]).unwrap().into(),
            2.0,
        )
        .unwrap();
        let u = [0.28, 0.96];
        let m = [-0.28, -0.96];
        for t in [1e-4, 1e-3, 0.2, 0.9] {
            assert_eq!(tri.shift_difference(&u, t), tri.shift_difference(&m, t));
            assert!(tri.shift_difference(&u, t) <= 2.0 * tri.mass() + 1e-15);
        }
        assert!(tri.shift_difference(&u, 1e-4) < 1e-3);
    }

    #[test]
    fn voxel_shift_matches_indicator_on_lattice_shifts() {
        let g = VoxelGrid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![4, 4], vec![1.0; 16]).unwrap();
        let f = ScalarField::Voxel(g);
        for t in [0.25, 0.3, 0.5, 0.77, 1.0, 1.5] {
            assert_relative_eq!(
                f.shift_difference(&[1.0, 0.0], t),
                unit_square().shift_difference(&[1.0, 0.0], t),
                epsilon = 1e-14
            );
        }
        // oblique shift of a box: exact for piecewise-constant cells
        let z = [0.3, 0.4];
        let want = 2.0 * (1.0 - (1.0 - 0.3) * (1.0 - 0.4));
        assert_relative_eq!(f.shift_difference(&z, 1.0), want, epsilon = 1e-14);
        assert!(f.shift_difference(&[0.6, 0.8], 1e-4) < 1e-3);
    }

    #[test]
    fn voxel_shift_integral_matches_adaptive_quadrature() {
        let mut vals = Vec::new();
        for k in 0..30 {
            vals.push(((k * 7 % 11) as f64) / 3.0);
        }
        let g = VoxelGrid::new(vec![0.0, -1.0], vec![1.5, 1.0], vec![5, 6], vals).unwrap();
        let xi = [0.6, -0.8];
        for s in [0.3, 0.5, 0.8] {
            let fast = g.shift_integral(&xi, s);
            let f = ScalarField::Voxel(g.clone());
            let big_t = f.separation_length(&xi);
            let profile = SingularIntegrandProfile::new(big_t, 1e3).unwrap();
            let quad = SingularQuadrature {
                rel_tol: 1e-9,
                abs_tol: 0.0,
                max_panels: 200_000,
            };
            let slow = quad.integrate(|t| f.shift_difference(&xi, t), s, &profile).unwrap();
            assert_relative_eq!(fast, slow, max_relative = 1e-7);
        }
    }

    #[test]
    fn voxel_shift_integral_interval() {
        // chi_[0,1] on 8 cells: integral is 2 / (s (1 - s))
        let g = VoxelGrid::new(vec![0.0], vec![1.0], vec![8], vec![1.0; 8]).unwrap();
        for s in [0.25, 0.5, 0.75] {
            assert_relative_eq!(g.shift_integral(&[1.0], s), 2.0 / (s * (1.0 - s)), max_relative = 1e-12);
            assert_relative_eq!(g.shift_integral(&[-1.0], s), 2.0 / (s * (1.0 - s)), max_relative = 1e-12);
        }
    }

    #[test]
    fn radial_profile_shift_is_layered() {
        let p = RadialProfile::new(2, vec![(0.5, 2.0), (1.0, 1.0)]).unwrap();
        let f = ScalarField::Radial(p);
        let a = ScalarField::indicator(Ball::centered(2, 0.5).unwrap().into(), 1.0).unwrap();
        let b = ScalarField::indicator(Ball::centered(2, 1.0).unwrap().into(), 1.0).unwrap();
        for t in [0.1, 0.7, 1.5] {
            let want = a.shift_difference(&[1.0, 0.0], t) + b.shift_difference(&[1.0, 0.0], t);
            assert_relative_eq!(f.shift_difference(&[0.0, 1.0], t), want, max_relative = 1e-14);
        }
        assert_relative_eq!(f.mass(), PI * 0.25 + PI, max_relative = 1e-14);
    }

    #[test]
    fn schwarz_examples() {
        let p = schwarz_symmetrize(&unit_square(), 16).unwrap();
        assert_eq!(p.knots().len(), 1);
        assert_relative_eq!(p.knots()[0].0, 1.0 / PI.sqrt(), max_relative = 1e-14);
        let e = ScalarField::indicator(Ellipsoid::axis_aligned(&[2.0, 0.5]).unwrap().into(), 3.0).unwrap();
        let pe = ScalarField::Radial(schwarz_symmetrize(&e, 256).unwrap());
        assert_relative_eq!(pe.mass(), 3.0 * PI, max_relative = 1e-13);
        // two-level voxel field
        let g = VoxelGrid::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![64, 64], |x| {
            if x[0] < 0.5 && x[1] < 0.5 {
                2.0
            } else {
                1.0
            }
        })
        .unwrap();
        let f = ScalarField::Voxel(g);
        let p = schwarz_symmetrize(&f, 256).unwrap();
        assert_eq!(p.knots().len(), 2);
        assert_relative_eq!(PI * p.knots()[0].0.powi(2), 0.25, max_relative = 1e-12);
        assert_relative_eq!(PI * p.knots()[1].0.powi(2), 1.0, max_relative = 1e-12);
        let fs = ScalarField::Radial(p);
        for pp in [1.0, 2.0] {
            assert_relative_eq!(fs.lp_norm(pp).unwrap(), f.lp_norm(pp).unwrap(), max_relative = 1e-12);
        }
    }

    #[test]
    fn steiner_examples() {
        let g = VoxelGrid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![4, 4], vec![1.0; 16]).unwrap();
        let s = g.steiner_symmetrize(1).unwrap();
        assert_eq!(s.counts(), &[4, 4]);
        assert_eq!(s.lower(), &[0.0, -0.5]);
        assert_eq!(s.upper(), &[1.0, 0.5]);
        assert_eq!(s.values(), g.values());
        // already symmetric: fixed point
        let sym = VoxelGrid::from_fn(vec![-1.0, -1.0], vec![1.0, 1.0], vec![8, 8], |x| {
            (2.0 - x[0].abs() - x[1].abs()).max(0.0)
        })
        .unwrap();
        assert_eq!(sym.steiner_symmetrize(0).unwrap(), sym);
        assert!(g.steiner_symmetrize(2).is_err());
    }

    #[test]
    fn steiner_l_shape() {
        // L-shape: left column full, bottom row full
        let g = VoxelGrid::from_fn(vec![0.0, 0.0], vec![4.0, 4.0], vec![4, 4], |x| {
            if x[0] < 1.0 || x[1] < 1.0 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let s = g.steiner_symmetrize(1).unwrap();
        // single-cell columns in an even-length line need half cells
        assert_eq!(s.counts(), &[4, 8]);
        let total: f64 = s.values().iter().sum::<f64>() * s.cell_volume();
        assert_relative_eq!(total, 7.0, max_relative = 1e-14);
        let col0: Vec<f64> = (0..8).map(|j| s.values()[j]).collect();
        assert_eq!(col0, vec![1.0; 8]);
        let col1: Vec<f64> = (0..8).map(|j| s.values()[8 + j]).collect();
        assert_eq!(col1, vec![0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0]);
        // odd line length keeps whole cells
        let g3 = VoxelGrid::from_fn(vec![0.0, 0.0], vec![3.0, 3.0], vec![3, 3], |x| {
            if x[0] < 1.0 || x[1] < 1.0 {
                1.0
            } else {
                0.0
            }
        })
        .unwrap();
        let s3 = g3.steiner_symmetrize(1).unwrap();
        assert_eq!(s3.counts(), &[3, 3]);
        assert_eq!(s3.values(), &[1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn layer_cake_examples() {
        let params = FracParams::new(2, 0.5).unwrap();
        let (l, r) = layer_cake_sides(&unit_square(), params, 64).unwrap();
        assert_relative_eq!(l, r, max_relative = 1e-14);
        let e = ScalarField::indicator(Ball::centered(2, 1.0).unwrap().into(), 2.5).unwrap();
        let (l, r) = layer_cake_sides(&e, params, 64).unwrap();
        assert_relative_eq!(l, 2.5 * PI.powf(0.75), max_relative = 1e-13);
        assert_relative_eq!(r, l, max_relative = 1e-13);
        // chi_[0,1]^2 + chi_[0,1/2]^2: values 2 on 1/4, 1 on 3/4
        let g = VoxelGrid::from_fn(vec![0.0, 0.0], vec![1.0, 1.0], vec![16, 16], |x| {
            if x[0] < 0.5 && x[1] < 0.5 {
                2.0
            } else {
                1.0
            }
        })
        .unwrap();
        let (l, r) = layer_cake_sides(&ScalarField::Voxel(g), params, 256).unwrap();
        let want_l = (2f64.powf(4.0 / 3.0) * 0.25 + 0.75).powf(0.75);
        let want_r = 1.0 + 0.25f64.powf(0.75);
        assert_relative_eq!(l, want_l, max_relative = 1e-12);
        assert_relative_eq!(r, want_r, max_relative = 1e-12);
        assert!(l < r);
        let zero = ScalarField::indicator(Ball::centered(2, 1.0).unwrap().into(), 0.0).unwrap();
        assert_eq!(layer_cake_sides(&zero, params, 8).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn level_sets_are_monotone() {
        let g = VoxelGrid::from_fn(vec![0.0; 2], vec![1.0; 2], vec![32, 32], |x| x[0] * x[1]).unwrap();
        let ls = ScalarField::Voxel(g).level_sets(64).unwrap();
        assert!(ls.measures.windows(2).all(|w| w[1] <= w[0]));
        assert!(ls.thresholds.windows(2).all(|w| w[0] < w[1]));
    }
}
