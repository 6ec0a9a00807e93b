//! Error probabilities of the compressive transmission request.
//!
//! The closed forms average the Chiani approximation of the Q-function over
//! the exponential channel gain, truncated at `omega`. The quadrature routines
//! integrate the exact Q-function instead and serve as their reference.

use crate::downlink::LinkParams;
use crate::{Error, Result};

/// Exact Gaussian tail `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn qfunc(x: f64) -> f64 {
    0.5 * libm::erfc(x / core::f64::consts::SQRT_2)
}

/// `Q(x) ~ exp(-x^2/2)/12 + exp(-2x^2/3)/4`, for `x >= 0`.
pub fn qfunc_chiani(x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::Domain("the Chiani approximation needs x >= 0"));
    }
    let x2 = x * x;
    Ok(libm::exp(-x2 / 2.0) / 12.0 + libm::exp(-2.0 * x2 / 3.0) / 4.0)
}

/// `int_omega^inf (e^{-g a/4}/12 + e^{-g a/3}/4) e^{-g} dg` with `a = gamma t^2`.
fn chiani_fading_average(a: f64, omega: f64) -> f64 {
    let c4 = 1.0 + a / 4.0;
    let c3 = 1.0 + a / 3.0;
    libm::exp(-omega * c4) / (12.0 * c4) + libm::exp(-omega * c3) / (4.0 * c3)
}

/// Truncation floor `Pr(g < omega) = 1 - e^{-omega}`.
pub fn md_floor(omega: f64) -> f64 {
    -libm::expm1(-omega)
}

/// Average false-alarm probability, closed form.
pub fn prob_fa_closed(gamma: f64, scaled_decision: f64, omega: f64) -> f64 {
    let t = 1.0 + scaled_decision;
    chiani_fading_average(gamma * t * t, omega)
}

/// Average missed-detection probability, closed form (includes the floor).
pub fn prob_md_closed(gamma: f64, scaled_decision: f64, omega: f64) -> f64 {
    let t = 1.0 - scaled_decision;
    chiani_fading_average(gamma * t * t, omega) + md_floor(omega)
}

/// Width of the integration window above `omega`; `e^{-40}` bounds the rest.
const QUAD_SPAN: f64 = 40.0;
const QUAD_TOL: f64 = 1e-10;
const QUAD_MAX_DEPTH: u32 = 48;

/// `int_omega^inf Q(scale * sqrt g) e^{-g} dg` by adaptive Simpson.
pub fn fading_tail_integral(scale: f64, omega: f64) -> f64 {
    let f = |g: f64| qfunc(scale * libm::sqrt(g)) * libm::exp(-g);
    let (a, b) = (omega, omega + QUAD_SPAN);
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = simpson(a, b, fa, fm, fb);
    adaptive_simpson(&f, a, b, fa, fm, fb, whole, QUAD_TOL, QUAD_MAX_DEPTH)
}

#[inline]
fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive_simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive_simpson(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
        + adaptive_simpson(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
}

/// False-alarm probability with the exact Q-function.
pub fn prob_fa_quadrature(gamma: f64, scaled_decision: f64, omega: f64) -> f64 {
    fading_tail_integral(libm::sqrt(gamma / 2.0) * (1.0 + scaled_decision), omega)
}

/// Missed-detection probability with the exact Q-function.
pub fn prob_md_quadrature(gamma: f64, scaled_decision: f64, omega: f64) -> f64 {
    fading_tail_integral(libm::sqrt(gamma / 2.0) * (1.0 - scaled_decision), omega) + md_floor(omega)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ErrorProbs {
    pub p_md: f64,
    pub p_fa: f64,
    pub md_floor: f64,
}

/// Closed-form probabilities at a link's operating point.
pub fn closed_form(link: &LinkParams) -> ErrorProbs {
    let gamma = link.sinr();
    ErrorProbs {
        p_md: prob_md_closed(gamma, link.scaled_decision, link.omega),
        p_fa: prob_fa_closed(gamma, link.scaled_decision, link.omega),
        md_floor: md_floor(link.omega),
    }
}

/// Per-node rates the Gaussian statistic model actually produces.
///
/// The decision threshold uses the `H0` interference level, but a requested
/// node's statistic sees one interferer fewer; the missed-detection integral
/// therefore uses the `H1` variance.
pub fn gaussian_model_rates(link: &LinkParams) -> ErrorProbs {
    let p_ap = link.p_ap();
    let margin_h1 = libm::sqrt(p_ap / (2.0 * link.sigma2_h1())) * (1.0 - link.scaled_decision);
    ErrorProbs {
        p_md: fading_tail_integral(margin_h1, link.omega) + md_floor(link.omega),
        p_fa: prob_fa_quadrature(link.sinr(), link.scaled_decision, link.omega),
        md_floor: md_floor(link.omega),
    }
}

/// Upper bound on the expected number of active nodes in a round.
pub fn expected_active_bound(requested: usize, num_nodes: usize, p_md: f64, p_fa: f64) -> f64 {
    requested as f64 * (1.0 - p_md) + num_nodes as f64 * p_fa
}

/// Expected active count when only `num_nodes - acquired - requested` nodes can false-alarm.
pub fn expected_active(requested: usize, num_nodes: usize, acquired: usize, p_md: f64, p_fa: f64) -> f64 {
    let idle = num_nodes.saturating_sub(acquired + requested);
    requested as f64 * (1.0 - p_md) + idle as f64 * p_fa
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erfc;

    fn q_ref(x: f64) -> f64 {
        0.5 * erfc(x / core::f64::consts::SQRT_2)
    }

    /// Integration by parts gives
    /// `int_w^inf Q(a sqrt g) e^{-g} dg = e^{-w} Q(a sqrt w) - a/sqrt(2c) Q(sqrt(2 c w))`
    /// with `c = 1 + a^2/2`.
    fn tail_closed(a: f64, w: f64) -> f64 {
        let c = 1.0 + a * a / 2.0;
        (-w).exp() * q_ref(a * w.sqrt()) - a / (2.0 * c).sqrt() * q_ref((2.0 * c * w).sqrt())
    }

    const GAMMA_N50: f64 = 0.780_487_804_878_048_8;
    const GAMMA_N10: f64 = 3.902_439_024_390_244;

    #[test]
    fn chiani_examples() {
        assert!((qfunc_chiani(0.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let want = (-4.5f64).exp() / 12.0 + (-6.0f64).exp() / 4.0;
        assert!((qfunc_chiani(3.0).unwrap() - want).abs() < 1e-18);
        assert!(qfunc_chiani(-0.1).is_err());
    }

    #[test]
    fn chiani_relative_error_on_grid() {
        // worst case on [0.5, 5] is about 26.2% near x = 1.86
        let mut worst: f64 = 0.0;
        for i in 0..=900 {
            let x = 0.5 + 0.005 * i as f64;
            let exact = q_ref(x);
            worst = worst.max((qfunc_chiani(x).unwrap() - exact).abs() / exact);
        }
        assert!(worst > 0.25 && worst < 0.27, "{worst}");
        for x in [0.5, 0.75, 3.5, 4.0, 4.5] {
            assert!((qfunc_chiani(x).unwrap() - q_ref(x)).abs() / q_ref(x) < 0.15);
        }
    }

    #[test]
    #[allow(clippy::excessive_precision)]
    fn exact_q_matches_reference() {
        for i in 0..70 {
            let x = 0.1 * i as f64;
            let (a, b) = (qfunc(x), q_ref(x));
            // statrs' erfc carries ~1e-10 relative error of its own
            assert!((a - b).abs() <= 1e-9 * b, "x {x}: {a} vs {b}");
        }
        // 30-digit values
        for (x, want) in [
            (-2.0, 0.977_249_868_051_820_8),
            (0.8, 0.211_855_398_583_396_7),
            (1.0, 0.158_655_253_931_457_05),
            (3.0, 0.001_349_898_031_630_094_5),
            (6.0, 9.865_876_450_376_981e-10),
        ] {
            assert!((qfunc(x) - want).abs() <= 1e-14 * want, "x {x}");
        }
    }

    #[test]
    fn quadrature_matches_integration_by_parts() {
        for &a in &[0.0, 0.1, 0.5, 1.0, 1.7, 3.0, 8.0] {
            for &w in &[0.0, 0.01, 0.1, 1.0, 3.0] {
                let got = fading_tail_integral(a, w);
                let want = tail_closed(a, w);
                assert!((got - want).abs() < 1e-9, "a {a} w {w}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn fa_closed_form_operating_points() {
        let p = prob_fa_closed(GAMMA_N50, 0.5, 0.1);
        assert!((p - 0.1847).abs() < 5e-4, "{p}");
        assert!((250.0 * p - 46.2).abs() < 0.2);
        assert!(prob_fa_closed(1e9, 0.5, 0.1) < 1e-12);
    }

    #[test]
    fn md_closed_form_operating_points() {
        let p = prob_md_closed(GAMMA_N50, 0.5, 0.1);
        assert!((p - 0.3777).abs() < 5e-4, "{p}");
        assert!((50.0 * p - 18.9).abs() < 0.1);
        let floor = 1.0 - (-0.1f64).exp();
        assert!((prob_md_closed(1e9, 0.5, 0.1) - floor).abs() < 1e-6);
        assert!((floor - 0.09516).abs() < 1e-5);
    }

    #[test]
    fn closed_forms_track_quadrature_at_fig4_point() {
        let fa = prob_fa_closed(GAMMA_N50, 0.5, 0.1);
        let fa_q = prob_fa_quadrature(GAMMA_N50, 0.5, 0.1);
        assert!((fa - fa_q).abs() / fa_q < 0.15);
        let md = prob_md_closed(GAMMA_N50, 0.5, 0.1);
        let md_q = prob_md_quadrature(GAMMA_N50, 0.5, 0.1);
        assert!((md - md_q).abs() / md_q < 0.15);
        let md10 = prob_md_closed(GAMMA_N10, 0.5, 0.1);
        let md10_q = prob_md_quadrature(GAMMA_N10, 0.5, 0.1);
        assert!((md10 - md10_q).abs() / md10_q < 0.15);
    }

    #[test]
    fn md_floor_holds_and_shapes_are_monotone() {
        for i in 0..60 {
            let gamma = 10f64.powf(-2.0 + 0.1 * i as f64);
            for j in 1..10 {
                let ug = 0.1 * j as f64;
                assert!(prob_md_closed(gamma, ug, 0.1) >= md_floor(0.1) - 1e-12);
                let h = 1e-4;
                let (md_hi, md_lo) = (prob_md_closed(gamma, ug + h, 0.1), prob_md_closed(gamma, ug - h, 0.1));
                let (fa_hi, fa_lo) = (prob_fa_closed(gamma, ug + h, 0.1), prob_fa_closed(gamma, ug - h, 0.1));
                assert!(md_hi >= md_lo && fa_hi <= fa_lo, "gamma {gamma} ug {ug}");
                // strict where the change is above rounding of the floor
                if gamma <= 100.0 {
                    assert!(md_hi > md_lo && fa_hi < fa_lo, "gamma {gamma} ug {ug}");
                }
            }
        }
    }

    #[test]
    fn active_count_bounds() {
        assert_eq!(expected_active_bound(10, 300, 0.0, 0.0), 10.0);
        let md = prob_md_closed(GAMMA_N10, 0.5, 0.1);
        let fa = prob_fa_closed(GAMMA_N10, 0.5, 0.1);
        let bound = expected_active_bound(10, 300, md, fa);
        assert!((bound - 25.38).abs() < 0.05, "{bound}");
        for acquired in [0, 10, 50, 200] {
            assert!(bound >= expected_active(10, 300, acquired, md, fa));
        }
    }
}
