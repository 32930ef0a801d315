//! Modified Bessel function of the second kind, `K_ν(x)`, for real order.
//!
//! The order is reduced to `μ ∈ [-1/2, 1/2)` and `K_μ`, `K_{μ+1}` are
//! obtained from Temme's series (x < 2) or Steed's continued fraction CF2
//! (x ≥ 2, exponentially scaled). Forward recurrence then climbs to the
//! requested order while tracking a running log scale, so the logarithm is
//! available long after `K_ν` itself has overflowed.

use std::f64::consts::PI;

use crate::error::{invalid, Result};

// Chebyshev expansions of Temme's gamma helpers on |μ| ∈ [0, 1/2]:
//   g1(μ) = (1/Γ(1-μ) - 1/Γ(1+μ)) / 2μ
//   g2(μ) = (1/Γ(1-μ) + 1/Γ(1+μ)) / 2
const G1_COEFFS: [f64; 14] = [
    -1.145_164_083_662_683_1,
    0.006_360_853_113_470_843,
    0.001_862_451_930_072_068_5,
    0.000_152_833_085_873_453_5,
    0.000_017_017_464_011_802_04,
    -6.459_750_292_334_725e-7,
    -5.181_984_843_251_938e-8,
    4.518_909_289_485_818e-10,
    3.243_322_737_102_087e-11,
    6.830_943_402_494_752e-13,
    2.835_350_275_517_21e-14,
    -7.988_390_576_932_359e-16,
    -3.372_667_730_077_195e-17,
    -3.658_633_480_921_052e-20,
];

const G2_COEFFS: [f64; 15] = [
    1.882_645_524_949_671_8,
    -0.077_490_658_396_167_52,
    -0.018_256_714_847_324_93,
    0.000_633_803_020_907_489_6,
    0.000_076_229_054_350_872_9,
    -9.550_164_756_172_044e-7,
    -8.892_726_810_788_635e-8,
    -1.952_133_477_231_961_4e-9,
    -9.400_305_273_588_516e-11,
    4.687_513_384_953_239e-12,
    2.265_853_574_692_576e-13,
    -1.172_550_969_848_801_5e-15,
    -7.044_133_820_024_522e-17,
    -2.437_787_831_010_769_4e-18,
    -7.522_524_321_825_39e-20,
];

const MAX_TERMS: usize = 20_000;
const RESCALE_ABOVE: f64 = 1e250;

fn chebyshev(coeffs: &[f64], x: f64) -> f64 {
    let y2 = 2.0 * x;
    let (mut d, mut dd) = (0.0, 0.0);
    for &c in coeffs[1..].iter().rev() {
        let tmp = d;
        d = y2 * d - dd + c;
        dd = tmp;
    }
    x * d - dd + 0.5 * coeffs[0]
}

/// Returns `(Γ(1+μ), Γ(1-μ), g1(μ), g2(μ))` for `|μ| ≤ 1/2`.
fn temme_gamma(mu: f64) -> (f64, f64, f64, f64) {
    let t = 4.0 * mu.abs() - 1.0;
    let g1 = chebyshev(&G1_COEFFS, t);
    let g2 = chebyshev(&G2_COEFFS, t);
    (1.0 / (g2 - mu * g1), 1.0 / (g2 + mu * g1), g1, g2)
}

/// Temme's series for `K_μ(x)` and `K_{μ+1}(x)`, `|μ| ≤ 1/2`, `0 < x < 2`.
fn temme_series(mu: f64, x: f64) -> (f64, f64) {
    let half_x = 0.5 * x;
    let ln_half_x = half_x.ln();
    let half_x_mu = (mu * ln_half_x).exp();
    let pi_mu = PI * mu;
    let sigma = -mu * ln_half_x;
    let sin_ratio = if pi_mu.abs() < f64::EPSILON {
        1.0
    } else {
        pi_mu / pi_mu.sin()
    };
    let sinh_ratio = if sigma.abs() < f64::EPSILON {
        1.0
    } else {
        sigma.sinh() / sigma
    };
    let (gamma_plus, gamma_minus, g1, g2) = temme_gamma(mu);

    let mut fk = sin_ratio * (sigma.cosh() * g1 - sinh_ratio * ln_half_x * g2);
    let mut pk = 0.5 / half_x_mu * gamma_plus;
    let mut qk = 0.5 * half_x_mu * gamma_minus;
    let mut ck = 1.0;
    let mut sum0 = fk;
    let mut sum1 = pk;
    for k in 1..MAX_TERMS {
        let k = k as f64;
        fk = (k * fk + pk + qk) / (k * k - mu * mu);
        ck *= half_x * half_x / k;
        pk /= k - mu;
        qk /= k + mu;
        let hk = -k * fk + pk;
        let del0 = ck * fk;
        let del1 = ck * hk;
        sum0 += del0;
        sum1 += del1;
        if del0.abs() < 0.5 * sum0.abs() * f64::EPSILON
            && del1.abs() < 0.5 * sum1.abs() * f64::EPSILON
        {
            break;
        }
    }
    (sum0, sum1 * 2.0 / x)
}

/// Steed's CF2 for `e^x K_μ(x)` and `e^x K_{μ+1}(x)`, `|μ| ≤ 1/2`, `x ≥ 2`.
fn steed_cf2_scaled(mu: f64, x: f64) -> (f64, f64) {
    let mut bi = 2.0 * (1.0 + x);
    let mut di = 1.0 / bi;
    let mut delhi = di;
    let mut hi = di;
    let mut qi = 0.0;
    let mut qip1 = 1.0;
    let mut ai = -(0.25 - mu * mu);
    let a1 = ai;
    let mut ci = -ai;
    let mut bqi = -ai;
    let mut s = 1.0 + bqi * delhi;

    for i in 2..MAX_TERMS {
        ai -= 2.0 * (i - 1) as f64;
        ci = -ai * ci / i as f64;
        let tmp = (qi - bi * qip1) / ai;
        qi = qip1;
        qip1 = tmp;
        bqi += ci * qip1;
        bi += 2.0;
        di = 1.0 / (bi + ai * di);
        delhi *= bi * di - 1.0;
        hi += delhi;
        let dels = bqi * delhi;
        s += dels;
        if (dels / s).abs() < f64::EPSILON {
            break;
        }
    }
    hi *= -a1;

    let k_mu = (PI / (2.0 * x)).sqrt() / s;
    let k_mu1 = k_mu * (mu + x + 0.5 - hi) / x;
    (k_mu, k_mu1)
}

/// `ln K_ν(x)`. Defined for any finite order and finite `x > 0`.
pub fn log_bessel_k(order: f64, x: f64) -> Result<f64> {
    if !(x > 0.0 && x.is_finite()) {
        return Err(invalid(format!("Bessel K argument must be finite and > 0, got {x}")));
    }
    if !order.is_finite() {
        return Err(invalid(format!("Bessel K order must be finite, got {order}")));
    }
    // K_{-ν} = K_ν
    let order = order.abs();
    let steps = (order + 0.5).floor();
    let mu = order - steps;

    let (mut k_prev, mut k_curr, mut log_scale) = if x < 2.0 {
        let (a, b) = temme_series(mu, x);
        (a, b, 0.0)
    } else {
        let (a, b) = steed_cf2_scaled(mu, x);
        (a, b, -x)
    };
    if steps == 0.0 {
        return Ok(k_prev.ln() + log_scale);
    }
    // k_prev = K_{μ+i-1}, k_curr = K_{μ+i}
    for i in 1..steps as u64 {
        let next = k_prev + 2.0 * (mu + i as f64) / x * k_curr;
        k_prev = k_curr;
        k_curr = next;
        if k_curr > RESCALE_ABOVE {
            k_prev /= RESCALE_ABOVE;
            k_curr /= RESCALE_ABOVE;
            log_scale += RESCALE_ABOVE.ln();
        }
    }
    Ok(k_curr.ln() + log_scale)
}

/// `K_ν(x)`. Overflows to `+∞` for large orders at small arguments; use
/// [`log_bessel_k`] there.
pub fn bessel_k(order: f64, x: f64) -> Result<f64> {
    log_bessel_k(order, x).map(f64::exp)
}

#[cfg(test)]
mod tests {
    use super::*;

    // ln K_ν(x) from a 40-digit arbitrary precision evaluation.
    const REFERENCE: [(f64, f64, f64); 28] = [
        (0.0, 1e-06, 2.634_148_305_306_988_4),
        (0.0, 0.5, -0.078_589_769_869_081_42),
        (0.0, 1.0, -0.865_064_398_906_788_1),
        (0.0, 1.9999, -2.172_365_400_752_992_6),
        (0.0, 2.0, -2.172_488_204_975_71),
        (0.0, 10.0, -10.937_432_823_038_333),
        (0.0, 700.0, -703.049_927_258_943_9),
        (0.3, 0.01, 1.930_085_981_618_933),
        (0.3, 3.0, -3.346_776_463_323_97),
        (0.49, 1.5, -1.479_536_181_794_564_3),
        (0.5, 1.0, -0.774_208_647_355_272_6),
        (1.0, 1.0, -0.507_651_948_210_752_3),
        (1.0, 2.5, -2.605_166_730_093_375),
        (1.5, 1e-06, 20.949_057_189_590_64),
        (2.0, 0.1, 5.295_834_109_025_257),
        (2.0, 50.0, -51.693_092_285_745_07),
        (3.7, 4.2, -3.299_644_525_412_767),
        (7.25, 0.8, 12.976_607_997_188_93),
        (10.0, 0.001, 88.117_704_867_164_57),
        (12.5, 30.0, -28.949_399_000_910_29),
        (25.0, 1.0, 71.409_847_422_243_16),
        (33.3, 100.0, -96.609_230_083_215_9),
        (50.0, 1e-06, 869.305_483_691_995_9),
        (50.0, 1.0, 178.524_854_024_081_03),
        (50.0, 700.0, -701.266_241_357_182),
        (49.6, 20.0, 26.089_642_117_699_06),
        (-1.0, 1.0, -0.507_651_948_210_752_3),
        (-17.4, 6.0, 11.449_607_761_107_838),
    ];

    #[test]
    fn matches_high_precision_reference() {
        for &(order, x, expected) in &REFERENCE {
            let got = log_bessel_k(order, x).unwrap();
            // |Δ ln K| bounds the relative error of K.
            assert!(
                (got - expected).abs() <= 1e-10 * expected.abs().max(1.0),
                "K_{order}({x}): ln got {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn half_integer_closed_forms() {
        for &x in &[1e-3, 0.2, 1.0, 1.99, 2.0, 5.0, 40.0] {
            let base = (PI / (2.0 * x)).sqrt() * (-x).exp();
            let cases = [
                (0.5, base),
                (1.5, base * (1.0 + 1.0 / x)),
                (2.5, base * (1.0 + 3.0 / x + 3.0 / (x * x))),
            ];
            for (order, expected) in cases {
                let got = bessel_k(order, x).unwrap();
                assert!(((got - expected) / expected).abs() < 1e-12, "K_{order}({x})");
            }
        }
        assert!((bessel_k(0.5, 1.0).unwrap() - 0.4610).abs() < 1e-4);
    }

    #[test]
    fn symmetric_in_order() {
        for &(order, x) in &[(0.3, 0.7), (2.2, 3.0), (11.0, 0.05), (44.4, 120.0)] {
            assert_eq!(log_bessel_k(order, x).unwrap(), log_bessel_k(-order, x).unwrap());
        }
    }

    #[test]
    fn satisfies_three_term_recurrence() {
        for &order in &[-3.3, -0.2, 0.25, 1.0, 4.75, 19.0] {
            for &x in &[0.05, 0.9, 1.999, 2.001, 7.5, 80.0] {
                let lo = bessel_k(order - 1.0, x).unwrap();
                let mid = bessel_k(order, x).unwrap();
                let hi = bessel_k(order + 1.0, x).unwrap();
                let rhs = lo + 2.0 * order / x * mid;
                assert!(((hi - rhs) / hi).abs() < 1e-8, "order {order}, x {x}");
            }
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(log_bessel_k(1.0, 0.0).is_err());
        assert!(log_bessel_k(1.0, -2.0).is_err());
        assert!(log_bessel_k(f64::NAN, 1.0).is_err());
        assert!(log_bessel_k(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn large_arguments_stay_finite() {
        let v = log_bessel_k(3.0, 1e6).unwrap();
        let asymptotic = 0.5 * (PI / 2e6).ln() - 1e6;
        assert!((v - asymptotic).abs() < 1e-4);
    }
}
