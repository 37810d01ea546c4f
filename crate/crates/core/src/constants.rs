//! Special functions and closed-form constants.
//!
//! Everything here is a pure function of its arguments. Gamma is evaluated
//! with a Lanczos approximation (g = 7, nine terms), digamma by upward
//! recurrence into the asymptotic regime.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Below this |p| the radial mean ratio switches to the digamma branch.
pub const LOG_BRANCH_THRESHOLD: f64 = 1e-6;

#[cfg(test)]
const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Dimension and fractional order, validated together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FracParams {
    n: usize,
    s: f64,
}

impl FracParams {
    pub fn new(n: usize, s: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Parameter("dimension must be at least 1".into()));
        }
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain {
                what: "fractional order must lie in (0, 1)",
                value: s,
            });
        }
        Ok(Self { n, s })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// Exponent n/(n-s) of the Sobolev-side Lebesgue norm.
    pub fn sobolev_exponent(&self) -> f64 {
        let n = self.n as f64;
        n / (n - self.s)
    }
}

/// A computed value with an a-priori absolute error bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpecialValue {
    pub value: f64,
    pub abs_error_bound: f64,
}

impl SpecialValue {
    pub fn new(value: f64, abs_error_bound: f64) -> Result<Self> {
        if !(abs_error_bound.is_finite() && abs_error_bound >= 0.0) {
            return Err(Error::Parameter(format!(
                "error bound must be finite and nonnegative, got {abs_error_bound}"
            )));
        }
        Ok(Self {
            value,
            abs_error_bound,
        })
    }

    fn relative(value: f64, rel: f64) -> Self {
        Self {
            value,
            abs_error_bound: value.abs() * rel,
        }
    }
}

fn lanczos_gamma(x: f64) -> f64 {
    // valid for x >= 0.5
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

fn lanczos_ln_gamma(x: f64) -> f64 {
    let x = x - 1.0;
    let mut acc = LANCZOS_COEF[0];
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Gamma function for positive arguments.
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            what: "gamma requires a positive finite argument",
            value: x,
        });
    }
    if x < 0.5 {
        Ok(lanczos_gamma(x + 1.0) / x)
    } else if x > 170.0 {
        Ok(f64::INFINITY)
    } else {
        Ok(lanczos_gamma(x))
    }
}

/// Natural logarithm of the gamma function for positive arguments.
pub fn ln_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            what: "ln_gamma requires a positive finite argument",
            value: x,
        });
    }
    if x < 0.5 {
        Ok(lanczos_ln_gamma(x + 1.0) - x.ln())
    } else {
        Ok(lanczos_ln_gamma(x))
    }
}

/// Digamma function psi = Gamma'/Gamma for positive arguments.
pub fn digamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain {
            what: "digamma requires a positive finite argument",
            value: x,
        });
    }
    let mut x = x;
    let mut shift = 0.0;
    while x < 10.0 {
        shift -= 1.0 / x;
        x += 1.0;
    }
    let inv2 = 1.0 / (x * x);
    // Bernoulli tail: -1/12, 1/120, -1/252, 1/240, -1/132, 691/32760
    let series = inv2
        * (-1.0 / 12.0
            + inv2
                * (1.0 / 120.0
                    + inv2
                        * (-1.0 / 252.0
                            + inv2 * (1.0 / 240.0 + inv2 * (-1.0 / 132.0 + inv2 * 691.0 / 32760.0)))));
    Ok(shift + x.ln() - 0.5 / x + series)
}

/// Euler-Beta function B(a, b).
pub fn beta(a: f64, b: f64) -> Result<f64> {
    Ok((ln_gamma(a)? + ln_gamma(b)? - ln_gamma(a + b)?).exp())
}

/// Volume of the unit ball in (possibly fractional) dimension q.
pub fn omega(q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::Domain {
            what: "omega requires q > 0",
            value: q,
        });
    }
    Ok((0.5 * q * PI.ln() - ln_gamma(0.5 * q + 1.0)?).exp())
}

/// omega with the convention omega_0 = 1 (volume of a point), used by
/// brightness formulas in dimension one.
pub(crate) fn omega_or_one(q: f64) -> f64 {
    if q == 0.0 {
        1.0
    } else {
        omega(q).expect("positive dimension")
    }
}

/// Euclidean s-perimeter of the unit ball.
pub fn ps_ball(params: FracParams) -> f64 {
    let n = params.n() as f64;
    let s = params.s();
    let num = 2f64.powf(1.0 - s) * n * omega(n).unwrap() * omega(n - s).unwrap();
    num / (s * (1.0 - s) * omega(1.0 - s).unwrap())
}

/// Constant that turns the fractional Sobolev inequality into an equality
/// for indicators of balls: omega_n^{(n-s)/n} / (2 P_s(B^n)).
pub fn sharp_constant(params: FracParams) -> f64 {
    let n = params.n() as f64;
    omega(n).unwrap().powf((n - params.s()) / n) / (2.0 * ps_ball(params))
}

/// |R_p B^n| / |B^n|, which by affine invariance is the extremal ratio for
/// every p > -1.
pub fn radial_mean_ball_ratio(n: usize, p: f64) -> Result<f64> {
    if n < 1 {
        return Err(Error::Parameter("dimension must be at least 1".into()));
    }
    if !(p > -1.0) {
        return Err(Error::Domain {
            what: "radial mean bodies need p > -1",
            value: p,
        });
    }
    let nf = n as f64;
    if p == nf {
        return Ok(1.0);
    }
    if p.abs() < LOG_BRANCH_THRESHOLD {
        let e = 0.5 * nf * (digamma(0.5)? - digamma(0.5 * nf + 1.0)?);
        return Ok(2f64.powf(nf) * e.exp());
    }
    // log form avoids overflow of the n/p power
    let log_base = (p + 1.0) * std::f64::consts::LN_2 + omega(nf + p)?.ln()
        - (p + 1.0).ln()
        - omega(nf)?.ln()
        - omega(p + 1.0)?.ln();
    Ok((log_base * nf / p).exp())
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedConstant {
    pub name: &'static str,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    pub value: f64,
    pub abs_error_bound: f64,
}

/// The constants depending on (n, s): omega_n, P_s(B^n), alpha_{n,s}.
pub fn constants_for_s(params: FracParams) -> Vec<NamedConstant> {
    let n = params.n();
    let entry = |name, v: SpecialValue| NamedConstant {
        name,
        n,
        s: Some(params.s()),
        p: None,
        value: v.value,
        abs_error_bound: v.abs_error_bound,
    };
    vec![
        entry("omega_n", SpecialValue::relative(omega(n as f64).unwrap(), 1e-14)),
        entry("ps_ball", SpecialValue::relative(ps_ball(params), 1e-13)),
        entry("sharp_constant", SpecialValue::relative(sharp_constant(params), 1e-13)),
    ]
}

pub fn constants_for_p(n: usize, p: f64) -> Result<Vec<NamedConstant>> {
    let v = radial_mean_ball_ratio(n, p)?;
    Ok(vec![NamedConstant {
        name: "radial_mean_ball_ratio",
        n,
        s: None,
        p: Some(p),
        value: v,
        abs_error_bound: v.abs() * 1e-12,
    }])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Reference values computed with mpmath at 30 digits.
    const DIGAMMA_REF: [(f64, f64); 7] = [
        (1.0, -0.577_215_664_901_532_860_6),
        (0.5, -1.963_510_026_021_423_479_4),
        (2.0, 0.422_784_335_098_467_139_4),
        (0.25, -4.227_453_533_376_265_408_1),
        (3.7, 1.167_153_539_361_511_440_9),
        (10.0, 2.251_752_589_066_721_107_6),
        (0.75, -1.085_860_879_786_472_169_6),
    ];

    const GAMMA_REF: [(f64, f64); 8] = [
        (0.5, 1.772_453_850_905_516_027_3),
        (1.5, 0.886_226_925_452_758_013_6),
        (2.5, 1.329_340_388_179_137_020_5),
        (4.2, 7.756_689_535_793_179_445_5),
        (7.3, 1_271.423_633_663_908_839_9),
        (0.1, 9.513_507_698_668_731_285_8),
        (11.5, 11_899_423.083_962_248_457),
        (25.3, 1.622_777_117_670_876_574_9e24),
    ];

    /// Slowly converging series psi(x) = -gamma + sum_k (1/(k+1) - 1/(k+x)),
    /// with the tail summed by Euler-Maclaurin to first order.
    fn digamma_series(x: f64) -> f64 {
        let terms = 200_000usize;
        let mut acc = -EULER_GAMMA;
        for k in 0..terms {
            let k = k as f64;
            acc += 1.0 / (k + 1.0) - 1.0 / (k + x);
        }
        let m = terms as f64;
        // tail: sum_{k>=m} (x-1)/((k+1)(k+x)) ~ (x-1)/(m + x/2)
        acc + (x - 1.0) / (m + 0.5 * x + 0.5)
    }

    #[test]
    fn digamma_matches_reference() {
        for (x, want) in DIGAMMA_REF {
            assert!((digamma(x).unwrap() - want).abs() < 1e-12, "psi({x})");
        }
    }

    #[test]
    fn digamma_matches_series_oracle() {
        for x in [0.5, 1.0, 2.0, 3.25] {
            assert!((digamma(x).unwrap() - digamma_series(x)).abs() < 1e-9);
        }
    }

    #[test]
    fn digamma_special_values() {
        let ln2 = std::f64::consts::LN_2;
        assert!((digamma(1.0).unwrap() + EULER_GAMMA).abs() < 1e-13);
        assert!((digamma(0.5).unwrap() - (-EULER_GAMMA - 2.0 * ln2)).abs() < 1e-13);
        assert!((digamma(2.0).unwrap() - (1.0 - EULER_GAMMA)).abs() < 1e-13);
    }

    #[test]
    fn digamma_recurrence_on_grid() {
        let mut x = 0.5;
        while x < 10.0 {
            let lhs = digamma(x + 1.0).unwrap();
            let rhs = digamma(x).unwrap() + 1.0 / x;
            assert!((lhs - rhs).abs() < 1e-12, "x = {x}");
            x += 0.37;
        }
    }

    #[test]
    fn gamma_matches_reference() {
        for (x, want) in GAMMA_REF {
            assert_relative_eq!(gamma(x).unwrap(), want, max_relative = 1e-13);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(gamma(0.0), Err(Error::Domain { .. })));
        assert!(matches!(digamma(-1.0), Err(Error::Domain { .. })));
        assert!(matches!(omega(0.0), Err(Error::Domain { .. })));
        assert!(matches!(omega(-2.0), Err(Error::Domain { .. })));
        assert!(matches!(
            radial_mean_ball_ratio(2, -1.0),
            Err(Error::Domain { .. })
        ));
        assert!(FracParams::new(2, 1.0).is_err());
        assert!(FracParams::new(2, 0.0).is_err());
        assert!(FracParams::new(0, 0.5).is_err());
        assert!(SpecialValue::new(1.0, -1.0).is_err());
        assert!(SpecialValue::new(1.0, f64::NAN).is_err());
    }

    #[test]
    fn omega_values() {
        assert_relative_eq!(omega(2.0).unwrap(), PI, max_relative = 1e-14);
        assert_relative_eq!(omega(3.0).unwrap(), 4.0 * PI / 3.0, max_relative = 1e-14);
        assert_relative_eq!(omega(1.0).unwrap(), 2.0, max_relative = 1e-14);
        assert_relative_eq!(
            omega(1.5).unwrap(),
            2.567_540_753_190_446_794_5,
            max_relative = 1e-13
        );
    }

    #[test]
    fn omega_recursion() {
        for q in [2.5, 3.0, 4.7, 7.0, 12.3] {
            let lhs = omega(q).unwrap();
            let rhs = 2.0 * PI / q * omega(q - 2.0).unwrap();
            assert_relative_eq!(lhs, rhs, max_relative = 1e-12);
        }
    }

    #[test]
    fn ps_ball_reference_values() {
        let cases = [
            (1, 0.5, 11.313_708_498_984_760_390_4),
            (1, 0.3, 15.471_474_216_309_248_496),
            (2, 0.5, 62.130_638_777_779_803_669_9),
            (2, 0.3, 81.188_669_532_796_379_866),
            (2, 0.7, 67.677_815_052_135_094_611),
            (3, 0.5, 178.658_923_510_755_316_07),
        ];
        for (n, s, want) in cases {
            let p = FracParams::new(n, s).unwrap();
            assert_relative_eq!(ps_ball(p), want, max_relative = 1e-12);
        }
    }

    #[test]
    fn ps_ball_matches_gamma_form() {
        // second printed form: 2^{1-s} pi^{(n-1)/2} n omega_n / (s(n-s)) * G((1-s)/2)/G((n-s)/2)
        for n in 1..=4 {
            for s in [0.15, 0.5, 0.85] {
                let nf = n as f64;
                let alt = 2f64.powf(1.0 - s) * PI.powf((nf - 1.0) / 2.0) * nf * omega(nf).unwrap()
                    / (s * (nf - s))
                    * gamma((1.0 - s) / 2.0).unwrap()
                    / gamma((nf - s) / 2.0).unwrap();
                assert_relative_eq!(
                    ps_ball(FracParams::new(n, s).unwrap()),
                    alt,
                    max_relative = 1e-12
                );
            }
        }
    }

    #[test]
    fn ps_ball_interval_identity() {
        for k in 1..=9 {
            let s = k as f64 / 10.0;
            let p = FracParams::new(1, s).unwrap();
            let lhs = ps_ball(p) * 0.5f64.powf(1.0 - s);
            assert_relative_eq!(lhs, 2.0 / (s * (1.0 - s)), max_relative = 1e-10);
        }
    }

    /// 1-D double integral of |x-y|^{-1-s} over [-1,1] x complement, done
    /// in closed form per side: int_{-1}^{1} ((1-x)^{-s} + (1+x)^{-s})/s dx.
    #[test]
    fn ps_ball_one_dimensional_oracle() {
        let s: f64 = 0.5;
        let exact = 2.0 * 2f64.powf(1.0 - s) / (s * (1.0 - s));
        assert_relative_eq!(
            ps_ball(FracParams::new(1, s).unwrap()),
            exact,
            max_relative = 1e-13
        );
        assert_relative_eq!(exact, 8.0 * 2f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn sharp_constant_values() {
        let p = FracParams::new(1, 0.5).unwrap();
        assert_relative_eq!(sharp_constant(p), 0.0625, max_relative = 1e-13);
        for n in 1..=3 {
            for s in [0.1, 0.5, 0.9] {
                let p = FracParams::new(n, s).unwrap();
                let nf = n as f64;
                assert_relative_eq!(
                    sharp_constant(p) * 2.0 * ps_ball(p),
                    omega(nf).unwrap().powf((nf - s) / nf),
                    max_relative = 1e-14
                );
            }
        }
        assert_relative_eq!(
            sharp_constant(FracParams::new(2, 0.5).unwrap()),
            0.018_990_071_073_103_332_576,
            max_relative = 1e-12
        );
    }

    #[test]
    fn radial_mean_ratio_values() {
        let cases = [
            (2, -0.5, 0.163_010_534_723_945_655_88),
            (2, 0.5, 0.554_588_731_406_246_029_58),
            (2, 1.0, 0.720_506_194_789_957_485_82),
            (2, 3.0, 1.226_382_359_217_153_549_8),
            (3, 1.0, 0.421_875),
            (1, -0.5, 0.5),
            (1, 3.0, 1.259_921_049_894_873_164_8),
        ];
        for (n, p, want) in cases {
            assert_relative_eq!(
                radial_mean_ball_ratio(n, p).unwrap(),
                want,
                max_relative = 1e-12
            );
        }
        assert_relative_eq!(
            radial_mean_ball_ratio(2, 1.0).unwrap(),
            (8.0 / (3.0 * PI)).powi(2),
            max_relative = 1e-13
        );
        for n in 1..=4 {
            assert_eq!(radial_mean_ball_ratio(n, n as f64).unwrap(), 1.0);
        }
        // the formula itself gives 1 at p = n as well
        let n = 2.0;
        let p: f64 = 2.0 + 1e-9;
        let b = 2f64.powf(p + 1.0) * omega(n + p).unwrap()
            / ((p + 1.0) * omega(n).unwrap() * omega(p + 1.0).unwrap());
        assert_relative_eq!(b.powf(n / p), 1.0, max_relative = 1e-7);
    }

    #[test]
    fn radial_mean_ratio_log_branch() {
        assert_relative_eq!(
            radial_mean_ball_ratio(2, 0.0).unwrap(),
            (-1.0f64).exp(),
            max_relative = 1e-13
        );
        assert_relative_eq!(
            radial_mean_ball_ratio(3, 0.0).unwrap(),
            0.146_525_111_109_873_442_35,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            radial_mean_ball_ratio(1, 0.0).unwrap(),
            0.735_758_882_342_884_643_19,
            max_relative = 1e-12
        );
    }

    #[test]
    fn radial_mean_ratio_continuous_at_zero() {
        for n in 1..=3 {
            let at0 = radial_mean_ball_ratio(n, 0.0).unwrap();
            for p in [1e-4, -1e-4] {
                let v = radial_mean_ball_ratio(n, p).unwrap();
                assert!(((v - at0) / at0).abs() < 1e-3, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn constants_table_shape() {
        let t = constants_for_s(FracParams::new(1, 0.5).unwrap());
        let alpha = t.iter().find(|c| c.name == "sharp_constant").unwrap();
        assert_relative_eq!(alpha.value, 0.0625, max_relative = 1e-13);
        let t = constants_for_p(2, 2.0).unwrap();
        assert_eq!(t[0].value, 1.0);
    }
}
