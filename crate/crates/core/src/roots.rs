//! Stationarity polynomials of the per-subcarrier Lagrangian and their real
//! roots, plus the closed-form power-splitting ratio.
//!
//! The per-subcarrier Lagrangian is `L(p, a) = w * Rs(p, a) + omega * p`,
//! where `Rs` is the secrecy rate and `omega` the net marginal value of
//! transmit power under the current multipliers. Setting dL/dp = 0 at fixed
//! split yields a cubic in `p`; eliminating the split through its own
//! stationary value yields a quadratic. Coefficients here were re-derived
//! symbolically and are validated against finite-difference stationarity in
//! the tests.

use std::f64::consts::{LN_2, PI};

use crate::error::{Error, Result};

/// Coefficients of `a1 p^3 + b1 p^2 + c1 p + d1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicCoeffs {
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub d1: f64,
}

/// Coefficients of `a2 p^2 + b2c p + c2` (`b2c` avoids a clash with the
/// eavesdropper gain).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadCoeffs {
    pub a2: f64,
    pub b2c: f64,
    pub c2: f64,
}

/// Relative threshold below which a leading coefficient is treated as zero
/// and the polynomial degree drops.
const DEGENERATE_REL: f64 = 1e-14;

/// Relative tolerance for deduplicating nearby roots.
const ROOT_DEDUP_REL: f64 = 1e-9;

/// Net marginal Lagrangian value of one watt on a subcarrier:
/// `-gamma + sum_k lambda_k * zeta_k * er_gain_k`.
pub fn marginal_power_value(gamma: f64, lambdas: &[f64], zetas: &[f64], er_gains: &[f64]) -> f64 {
    let credit: f64 = lambdas
        .iter()
        .zip(zetas)
        .zip(er_gains)
        .map(|((l, z), g)| l * z * g)
        .sum();
    credit - gamma
}

/// Rate-optimal split for a fixed positive power, clamped to [0, 1]:
/// `1/2 + (eve_gain - gain) * noise / (2 * eve_gain * gain * power)`.
pub fn optimal_split(gain: f64, eve_gain: f64, power: f64, noise: f64) -> Result<f64> {
    for (name, v) in [
        ("gain", gain),
        ("eve_gain", eve_gain),
        ("power", power),
        ("noise", noise),
    ] {
        if !(v.is_finite() && v > 0.0) {
            return Err(Error::Domain(format!(
                "optimal split needs {name} > 0, got {v}"
            )));
        }
    }
    Ok((0.5 + (eve_gain - gain) * noise / (2.0 * eve_gain * gain * power)).clamp(0.0, 1.0))
}

/// Unclamped counterpart of [`optimal_split`]; used to decide whether the
/// stationary split actually lies inside [0, 1].
pub fn optimal_split_unclamped(gain: f64, eve_gain: f64, power: f64, noise: f64) -> f64 {
    0.5 + (eve_gain - gain) * noise / (2.0 * eve_gain * gain * power)
}

/// Cubic stationarity coefficients of `p -> w * Rs(p, split) + power_value * p`
/// at fixed split.
pub fn power_stationarity_cubic(
    gain: f64,
    eve_gain: f64,
    split: f64,
    weight: f64,
    power_value: f64,
    noise: f64,
) -> CubicCoeffs {
    let h = gain;
    let b = eve_gain;
    let a = split;
    let w = weight;
    let pv = power_value;
    let s = noise;
    let aa = a * a - a;
    CubicCoeffs {
        a1: LN_2 * h * aa * b * b * pv,
        b1: aa * b * b * h * w + LN_2 * b * s * ((a * a - 1.0) * h - b * a) * pv,
        c1: LN_2 * ((a - 1.0) * h - (1.0 + a) * b) * s * s * pv + 2.0 * aa * b * h * w * s,
        d1: (a - 1.0) * (h - b) * w * s * s - LN_2 * s * s * s * pv,
    }
}

/// Quadratic stationarity coefficients after eliminating the split through
/// its interior stationary value.
pub fn joint_stationarity_quadratic(
    gain: f64,
    eve_gain: f64,
    weight: f64,
    power_value: f64,
    noise: f64,
) -> QuadCoeffs {
    let h = gain;
    let b = eve_gain;
    let w = weight;
    let pv = power_value;
    let s = noise;
    QuadCoeffs {
        a2: LN_2 * pv * b * b * h,
        b2c: w * b * b * h + LN_2 * pv * s * b * (b + 2.0 * h),
        c2: s * (w * b * (h - b) + LN_2 * pv * s * (b + h)),
    }
}

/// All real roots of the cubic, ascending and deduplicated. Degenerate
/// leading coefficients drop the degree; a polynomial whose coefficients are
/// all (relatively) zero is an error.
pub fn real_roots_cubic(c: &CubicCoeffs) -> Result<Vec<f64>> {
    real_roots(&[c.a1, c.b1, c.c1, c.d1])
}

/// All real roots of the quadratic, ascending and deduplicated.
pub fn real_roots_quadratic(q: &QuadCoeffs) -> Result<Vec<f64>> {
    real_roots(&[q.a2, q.b2c, q.c2])
}

/// Real roots of a polynomial given by descending coefficients (degree <= 3).
fn real_roots(coeffs: &[f64]) -> Result<Vec<f64>> {
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("non-finite polynomial coefficient".into()));
    }
    let scale = coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    if scale == 0.0 {
        return Err(Error::AllZeroPolynomial);
    }
    let cutoff = DEGENERATE_REL * scale;
    // Drop degenerate leading coefficients.
    let mut lead = 0;
    while lead + 1 < coeffs.len() && coeffs[lead].abs() <= cutoff {
        lead += 1;
    }
    let active = &coeffs[lead..];
    let mut roots = match active.len() {
        1 => {
            if active[0].abs() <= cutoff {
                return Err(Error::AllZeroPolynomial);
            }
            Vec::new() // nonzero constant: no roots
        }
        2 => vec![-active[1] / active[0]],
        3 => quadratic_roots(active[0], active[1], active[2]),
        _ => cubic_roots(active[0], active[1], active[2], active[3]),
    };
    for r in &mut roots {
        *r = polish_root(coeffs, *r);
    }
    // Two things can defeat the fast path: the depressed-cubic discriminant
    // cancels and the closed form picks the wrong branch, or a relatively
    // tiny leading coefficient was dropped whose term still matters at the
    // root magnitudes. The residual contract against the full polynomial
    // catches both; the true-degree solve then recomputes every root.
    let true_lead = coeffs
        .iter()
        .position(|c| *c != 0.0)
        .expect("scale > 0 implies a nonzero coefficient");
    let truth = &coeffs[true_lead..];
    let needs_rescue = roots.iter().any(|r| !residual_within_contract(coeffs, *r))
        || (roots.is_empty() && truth.len() == 4);
    if needs_rescue {
        roots = match truth.len() {
            4 => cubic_roots_bracketed(truth[0], truth[1], truth[2], truth[3]),
            3 => quadratic_roots(truth[0], truth[1], truth[2]),
            2 => vec![-truth[1] / truth[0]],
            _ => Vec::new(),
        };
        for r in &mut roots {
            *r = polish_root(coeffs, *r);
        }
    }
    roots.retain(|r| r.is_finite());
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    roots.dedup_by(|x, y| (*x - *y).abs() <= ROOT_DEDUP_REL * (x.abs() + y.abs()) + 1e-300);
    Ok(roots)
}

/// Numerically stable quadratic formula; the smaller root comes from
/// `c / q` so neither root suffers cancellation.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    if disc == 0.0 {
        return vec![-b / (2.0 * a)];
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    if q == 0.0 {
        // b == 0 and c == 0: double root at the origin
        return vec![0.0];
    }
    vec![q / a, c / q]
}

/// Trigonometric / Cardano solution of a nondegenerate cubic.
fn cubic_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    // Normalize and depress: p = t - b/(3a).
    let bn = b / a;
    let cn = c / a;
    let dn = d / a;
    let shift = bn / 3.0;
    let pc = cn - bn * bn / 3.0;
    let qc = 2.0 * bn * bn * bn / 27.0 - bn * cn / 3.0 + dn;
    let half_q = qc / 2.0;
    let third_p = pc / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    if disc > 0.0 {
        // One real root via Cardano, written to avoid cancellation.
        let u = -(half_q.signum()) * (half_q.abs() + disc.sqrt()).cbrt();
        let v = if u == 0.0 { 0.0 } else { -third_p / u };
        vec![u + v - shift]
    } else if disc == 0.0 {
        let r = (-half_q).cbrt();
        vec![2.0 * r - shift, -r - shift]
    } else {
        // Three real roots.
        let rad = (-third_p).sqrt();
        let theta = (half_q / (third_p * rad)).clamp(-1.0, 1.0).acos();
        (0..3)
            .map(|k| 2.0 * rad * ((theta + 2.0 * PI * k as f64) / 3.0).cos() - shift)
            .collect()
    }
}

/// Fallback cubic solver: the critical points split the line into monotone
/// pieces; every sign change is then bisected to full precision. Slow but
/// branch-free, with no deflation to lose accuracy.
fn cubic_roots_bracketed(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let (a, b, c, d) = if a < 0.0 { (-a, -b, -c, -d) } else { (a, b, c, d) };
    let bound = 1.0 + b.abs().max(c.abs()).max(d.abs()) / a;
    let f = |x: f64| ((a * x + b) * x + c) * x + d;
    let mut knots = vec![-bound];
    let mut crit = quadratic_roots(3.0 * a, 2.0 * b, c);
    crit.retain(|x| x.is_finite() && x.abs() < bound);
    crit.sort_by(|x, y| x.partial_cmp(y).unwrap());
    knots.extend(crit);
    knots.push(bound);
    let mut roots = Vec::new();
    for pair in knots.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        let (flo, fhi) = (f(lo), f(hi));
        if flo == 0.0 {
            roots.push(lo);
            continue;
        }
        if fhi == 0.0 || flo.signum() == fhi.signum() {
            continue; // tangent and no-crossing pieces; hi == 0 handled next piece
        }
        // keep f(neg) <= 0 <= f(pos); the interval may be traversed reversed
        let (mut neg, mut pos) = if flo < 0.0 { (lo, hi) } else { (hi, lo) };
        loop {
            let mid = 0.5 * (neg + pos);
            if mid == neg || mid == pos {
                break;
            }
            if f(mid) <= 0.0 {
                neg = mid;
            } else {
                pos = mid;
            }
        }
        roots.push(0.5 * (neg + pos));
    }
    if f(bound) == 0.0 {
        roots.push(bound);
    }
    roots
}

/// Guarded Newton polish on the original (unnormalized) polynomial; restores
/// accuracy lost to coefficient scaling across the channel-gain dynamic range.
fn polish_root(coeffs: &[f64], mut r: f64) -> f64 {
    for _ in 0..6 {
        let (f, df) = horner_with_derivative(coeffs, r);
        if f == 0.0 || df == 0.0 {
            break;
        }
        let step = f / df;
        if !step.is_finite() {
            break;
        }
        let candidate = r - step;
        let (fc, _) = horner_with_derivative(coeffs, candidate);
        if fc.abs() < f.abs() {
            r = candidate;
        } else {
            break;
        }
    }
    r
}

fn horner_with_derivative(coeffs: &[f64], x: f64) -> (f64, f64) {
    let mut f = 0.0;
    let mut df = 0.0;
    for &c in coeffs {
        df = df * x + f;
        f = f * x + c;
    }
    (f, df)
}

/// Residual contract check used by the tests: `|poly(r)|` bounded by a
/// relative combination of the term magnitudes.
pub fn residual_within_contract(coeffs: &[f64], root: f64) -> bool {
    let (f, _) = horner_with_derivative(coeffs, root);
    let mut term_scale = 1e-300f64;
    let mut pow = 1.0;
    for &c in coeffs.iter().rev() {
        term_scale = term_scale.max((c * pow).abs());
        pow *= root;
    }
    f.abs() <= 1e-9 * term_scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::secrecy::secrecy_rate_raw;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn marginal_power_value_examples() {
        assert_eq!(marginal_power_value(1.0, &[2.0], &[0.5], &[1.0]), 0.0);
        assert_eq!(marginal_power_value(0.7, &[0.0, 0.0], &[0.5, 0.5], &[1.0, 2.0]), -0.7);
        assert_eq!(marginal_power_value(0.0, &[], &[], &[]), 0.0);
    }

    #[test]
    fn optimal_split_examples() {
        assert_relative_eq!(optimal_split(3.0, 3.0, 0.17, 1.0).unwrap(), 0.5);
        assert_relative_eq!(optimal_split(2.0, 1.0, 1.0, 1.0).unwrap(), 0.25);
        // eve_gain >> gain with tiny power clamps at 1
        assert_eq!(optimal_split(1e-9, 1e-3, 1e-9, 5e-12).unwrap(), 1.0);
        assert!(optimal_split(1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn optimal_split_is_stationary_in_split() {
        // central finite difference of the secrecy rate in the split direction
        let (gain, eve, noise, p) = (2.0, 1.0, 1.0, 1.0);
        let a = optimal_split(gain, eve, p, noise).unwrap();
        assert_relative_eq!(a, 0.25);
        let h = 1e-6;
        let up = secrecy_rate_raw(gain, eve, p, a + h, noise).unwrap();
        let down = secrecy_rate_raw(gain, eve, p, a - h, noise).unwrap();
        assert!(((up - down) / (2.0 * h)).abs() < 1e-8);
    }

    #[test]
    fn cubic_coeffs_degenerate_at_boundary_splits() {
        let c = power_stationarity_cubic(2.0, 3.0, 1.0, 1.0, 0.5, 1.0);
        assert_eq!(c.a1, 0.0);
        let c = power_stationarity_cubic(2.0, 3.0, 0.0, 1.0, 0.5, 1.0);
        assert_eq!(c.a1, 0.0);
        // split = 0 reduces b1 to ln2 * eve^2... the -gain branch of its bracket
        let expect = LN_2 * 3.0 * 1.0 * (-2.0) * 0.5;
        assert_relative_eq!(c.b1, expect, max_relative = 1e-15);
    }

    /// Central finite-difference derivative of `p -> w*Rs + pv*p`.
    fn lagrangian_dp(gain: f64, eve: f64, split: f64, w: f64, pv: f64, noise: f64, p: f64) -> f64 {
        let h = 1e-6 * p;
        let f = |pp: f64| w * secrecy_rate_raw(gain, eve, pp, split, noise).unwrap() + pv * pp;
        (f(p + h) - f(p - h)) / (2.0 * h)
    }

    fn lagrangian_da(gain: f64, eve: f64, p: f64, w: f64, noise: f64, split: f64) -> f64 {
        let h = 1e-6;
        let f = |a: f64| w * secrecy_rate_raw(gain, eve, p, a, noise).unwrap();
        (f(split + h) - f(split - h)) / (2.0 * h)
    }

    /// Magnitude scale of dL/dp near `p`: the two cancelling parts.
    fn dp_scale(gain: f64, eve: f64, split: f64, w: f64, pv: f64, noise: f64, p: f64) -> f64 {
        let h = 1e-6 * p;
        let r = |pp: f64| secrecy_rate_raw(gain, eve, pp, split, noise).unwrap();
        let drdp = (r(p + h) - r(p - h)) / (2.0 * h);
        (w * drdp).abs() + pv.abs() + 1e-30
    }

    #[test]
    fn cubic_roots_are_stationary_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let mut checked = 0;
        for _ in 0..10_000 {
            let gain = 10f64.powf(rng.gen_range(-12.0..-4.0));
            let eve = 10f64.powf(rng.gen_range(-8.0..-2.0));
            let split = rng.gen_range(0.0..=1.0);
            let w = rng.gen_range(0.1..3.0);
            let pv = rng.gen_range(-1.0..1.0) * 10f64.powf(rng.gen_range(-3.0..2.0));
            let noise = 5.0119e-12;
            let peak = 5.0;
            let cub = power_stationarity_cubic(gain, eve, split, w, pv, noise);
            let roots = match real_roots_cubic(&cub) {
                Ok(r) => r,
                Err(Error::AllZeroPolynomial) => continue,
                Err(e) => panic!("unexpected error {e}"),
            };
            let thr = crate::secrecy::secrecy_threshold(gain, eve, split, noise).unwrap();
            for r in roots {
                if r <= 0.0 || r >= peak || !thr.allows(r) {
                    continue;
                }
                // Skip roots essentially at the secrecy boundary: the rate is
                // non-differentiable there and finite differences straddle it.
                if let Some(x) = thr.finite() {
                    if (r - x).abs() <= 1e-5 * r {
                        continue;
                    }
                }
                let fd = lagrangian_dp(gain, eve, split, w, pv, noise, r);
                let scale = dp_scale(gain, eve, split, w, pv, noise, r);
                assert!(
                    fd.abs() <= 1e-5 * scale,
                    "cubic root {r} not stationary: fd={fd}, scale={scale}"
                );
                checked += 1;
            }
        }
        assert!(checked > 1000, "only {checked} interior roots exercised");
    }

    #[test]
    fn quadratic_roots_are_jointly_stationary() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut checked = 0;
        for _ in 0..10_000 {
            let gain = 10f64.powf(rng.gen_range(-12.0..-4.0));
            let eve = 10f64.powf(rng.gen_range(-8.0..-2.0));
            let w = rng.gen_range(0.1..3.0);
            let pv = rng.gen_range(-1.0..1.0) * 10f64.powf(rng.gen_range(-3.0..2.0));
            let noise = 5.0119e-12;
            let quad = joint_stationarity_quadratic(gain, eve, w, pv, noise);
            let roots = match real_roots_quadratic(&quad) {
                Ok(r) => r,
                Err(Error::AllZeroPolynomial) => continue,
                Err(e) => panic!("unexpected error {e}"),
            };
            for r in roots {
                if r <= 0.0 {
                    continue;
                }
                let split = optimal_split_unclamped(gain, eve, r, noise);
                if !(0.001..=0.999).contains(&split) {
                    continue;
                }
                let thr = crate::secrecy::secrecy_threshold(gain, eve, split, noise).unwrap();
                if !thr.allows(r) {
                    continue;
                }
                if let Some(x) = thr.finite() {
                    if (r - x).abs() <= 1e-5 * r {
                        continue;
                    }
                }
                let fd_p = lagrangian_dp(gain, eve, split, w, pv, noise, r);
                let scale = dp_scale(gain, eve, split, w, pv, noise, r);
                assert!(
                    fd_p.abs() <= 1e-5 * scale,
                    "quad root {r} not p-stationary: fd={fd_p}, scale={scale}"
                );
                let fd_a = lagrangian_da(gain, eve, r, w, noise, split);
                let a_scale = w / LN_2 * 2.0 + 1e-30;
                assert!(
                    fd_a.abs() <= 1e-4 * a_scale,
                    "quad root {r} not split-stationary: fd={fd_a}"
                );
                checked += 1;
            }
        }
        assert!(checked > 500, "only {checked} interior roots exercised");
    }

    #[test]
    fn quadratic_degenerates_linearly_without_power_value() {
        let q = joint_stationarity_quadratic(2.0, 3.0, 1.5, 0.0, 1.0);
        assert_eq!(q.a2, 0.0);
        let roots = real_roots_quadratic(&q).unwrap();
        assert_eq!(roots.len(), 1);
        assert_relative_eq!(roots[0], -q.c2 / q.b2c, max_relative = 1e-12);
    }

    #[test]
    fn quadratic_coeffs_flip_sign_with_weight_and_power_value() {
        let q = joint_stationarity_quadratic(2e-9, 3e-4, 1.3, 0.7, 5e-12);
        let f = joint_stationarity_quadratic(2e-9, 3e-4, -1.3, -0.7, 5e-12);
        assert_relative_eq!(q.a2, -f.a2, max_relative = 1e-14);
        assert_relative_eq!(q.b2c, -f.b2c, max_relative = 1e-14);
        assert_relative_eq!(q.c2, -f.c2, max_relative = 1e-14);
    }

    #[test]
    fn cubic_root_examples() {
        let r = real_roots_cubic(&CubicCoeffs { a1: 1.0, b1: -6.0, c1: 11.0, d1: -6.0 }).unwrap();
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert_relative_eq!(*got, want, max_relative = 1e-9);
        }
        // degenerate to quadratic
        let r = real_roots_cubic(&CubicCoeffs { a1: 0.0, b1: 1.0, c1: 0.0, d1: -4.0 }).unwrap();
        assert_eq!(r, vec![-2.0, 2.0]);
        // triple root reported once
        let r = real_roots_cubic(&CubicCoeffs { a1: 1.0, b1: 0.0, c1: 0.0, d1: 0.0 }).unwrap();
        assert_eq!(r, vec![0.0]);
        assert!(matches!(
            real_roots_cubic(&CubicCoeffs { a1: 0.0, b1: 0.0, c1: 0.0, d1: 0.0 }),
            Err(Error::AllZeroPolynomial)
        ));
    }

    #[test]
    fn quadratic_root_examples() {
        let r = real_roots_quadratic(&QuadCoeffs { a2: 1.0, b2c: -3.0, c2: 2.0 }).unwrap();
        assert_eq!(r.len(), 2);
        assert_relative_eq!(r[0], 1.0, max_relative = 1e-12);
        assert_relative_eq!(r[1], 2.0, max_relative = 1e-12);
        assert!(real_roots_quadratic(&QuadCoeffs { a2: 1.0, b2c: 0.0, c2: 1.0 })
            .unwrap()
            .is_empty());
        // near-vanishing leading coefficient falls back to the linear solve
        let r = real_roots_quadratic(&QuadCoeffs { a2: 1e-20, b2c: 1.0, c2: -1.0 }).unwrap();
        assert_eq!(r.len(), 1);
        assert_relative_eq!(r[0], 1.0, max_relative = 1e-9);
    }

    #[test]
    fn cancellation_prone_cubic_falls_back_to_bracketing() {
        // regression: the depressed-cubic discriminant cancels catastrophically
        let coeffs = CubicCoeffs {
            a1: 0.15866319859189526,
            b1: 149861073230.70673,
            c1: -4.1979750036916925e-6,
            d1: -11205611999.52793,
        };
        let roots = real_roots_cubic(&coeffs).unwrap();
        assert!(!roots.is_empty());
        for r in &roots {
            assert!(
                residual_within_contract(&[coeffs.a1, coeffs.b1, coeffs.c1, coeffs.d1], *r),
                "residual violated at {r}"
            );
        }
        // the two near-origin roots of the dominant quadratic part survive
        assert!(roots.iter().any(|r| (*r - 0.2734).abs() < 1e-3));
        assert!(roots.iter().any(|r| (*r + 0.2734).abs() < 1e-3));
    }

    #[test]
    fn root_residuals_hold_across_magnitudes() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let mut count = 0usize;
        for _ in 0..100_000 {
            let coeff = |rng: &mut ChaCha8Rng| {
                let mag = 10f64.powf(rng.gen_range(-12.0..12.0));
                if rng.gen::<bool>() {
                    mag
                } else {
                    -mag
                }
            };
            let coeffs = if rng.gen::<bool>() {
                vec![coeff(&mut rng), coeff(&mut rng), coeff(&mut rng), coeff(&mut rng)]
            } else {
                vec![coeff(&mut rng), coeff(&mut rng), coeff(&mut rng)]
            };
            let roots = real_roots(&coeffs).unwrap();
            for pair in roots.windows(2) {
                assert!(pair[0] <= pair[1], "roots out of order");
            }
            for r in roots {
                assert!(
                    residual_within_contract(&coeffs, r),
                    "residual contract failed for {coeffs:?} at root {r}"
                );
                count += 1;
            }
        }
        assert!(count > 100_000, "exercised only {count} roots");
    }

    proptest! {
        #[test]
        fn optimal_split_always_in_unit_interval(
            gain in 1e-12f64..1e-2,
            eve in 1e-12f64..1e-2,
            power in 1e-9f64..10.0,
            noise in 1e-13f64..1e-9,
        ) {
            let a = optimal_split(gain, eve, power, noise).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn cubic_roots_satisfy_residual_contract(
            a in -1e6f64..1e6,
            b in -1e6f64..1e6,
            c in -1e6f64..1e6,
            d in -1e6f64..1e6,
        ) {
            prop_assume!(a.abs() + b.abs() + c.abs() + d.abs() > 0.0);
            let roots = real_roots(&[a, b, c, d]).unwrap();
            for r in roots {
                prop_assert!(residual_within_contract(&[a, b, c, d], r));
            }
        }
    }
}
