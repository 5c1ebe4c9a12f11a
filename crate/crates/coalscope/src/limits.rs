//! Deterministic limit functions (v, a, kappa, centering/scaling) and
//! exact samplers for the limit laws: the stable process V, its
//! weighted integral V*_t, Gumbel, the Bolthausen-Sznitman stable law
//! Z, and the mutation-count limits.
//!
//! Stable draws use the trigonometric exact method for totally skewed
//! laws. In the standard `S_alpha(sigma, beta=1, 0)` parametrization,
//! `E[exp(-u X)] = exp(sigma^alpha u^alpha / |cos(pi alpha/2)|)` for
//! alpha in (1,2), so matching `E[exp(-u V_t)] = exp(t u^alpha/gamma)`
//! requires `sigma_t^alpha = t |cos(pi alpha/2)| / gamma`. The totally
//! skewed side is the heavy *right* tail, consistent with the jump
//! sizes `X_k >= 1` whose sums the process approximates.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Gumbel, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{CoalError, Result};
use crate::measures::CoalescentMeasure;
use crate::quad::{quad, ABS_TOL, REL_TOL};

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(CoalError::argument(format!("alpha must lie in (1,2), got {alpha}")));
    }
    Ok(())
}

/// `v(t) = int_0^t (1 - r/gamma)^{-gamma} dr`
/// `     = (gamma/(2-alpha)) (1 - (1-t/gamma)^{2-alpha})` for t in [0, gamma].
pub fn v_of_t(alpha: f64, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let gamma = alpha - 1.0;
    if !(0.0..=gamma).contains(&t) {
        return Err(CoalError::argument(format!(
            "v_of_t requires t in [0, gamma] = [0, {gamma}], got {t}"
        )));
    }
    Ok(gamma / (2.0 - alpha) * (1.0 - (1.0 - t / gamma).powf(2.0 - alpha)))
}

/// `a(t) = v(t) / (C0 Gamma(2-alpha))`.
pub fn a_of_t(m: &CoalescentMeasure, t: f64) -> Result<f64> {
    let tail = m.asymptotic_tail("a_of_t")?;
    Ok(v_of_t(tail.alpha, t)? / (tail.c0 * ln_gamma(2.0 - tail.alpha).exp()))
}

/// `kappa(t) = int_0^t (int_r^t (1-s/gamma)^{-alpha} ds)^alpha dr` with
/// the inner integral in closed form
/// `(1-t/gamma)^{1-alpha} - (1-r/gamma)^{1-alpha}` (note
/// `1 - alpha = -gamma`); the outer integral by quadrature.
pub fn kappa_of_t(alpha: f64, t: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let gamma = alpha - 1.0;
    if !(t > 0.0 && t < gamma) {
        return Err(CoalError::argument(format!(
            "kappa_of_t requires t in (0, gamma) = (0, {gamma}), got {t}"
        )));
    }
    let edge = (1.0 - t / gamma).powf(-gamma);
    quad(
        |r| (edge - (1.0 - r / gamma).powf(-gamma)).powf(alpha),
        0.0,
        t,
        ABS_TOL,
        REL_TOL,
    )
}

/// Draw from the standard totally skewed stable law
/// `S_alpha(1, beta=1, 0)`, alpha in (1,2), by the trigonometric exact
/// method.
fn standard_skewed_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let half_pi = PI / 2.0;
    let u: f64 = rng.random::<f64>() * PI - half_pi; // uniform(-pi/2, pi/2)
    let w: f64 = rng.sample(Exp1);
    let tan_term = (half_pi * alpha).tan();
    let b = tan_term.atan() / alpha;
    let s = (1.0 + tan_term * tan_term).powf(1.0 / (2.0 * alpha));
    s * (alpha * (u + b)).sin() / u.cos().powf(1.0 / alpha)
        * ((u - alpha * (u + b)).cos() / w).powf((1.0 - alpha) / alpha)
}

/// Draw from `S_1(1, beta=1, 0)`: the alpha = 1 branch of the
/// trigonometric method with its logarithmic correction.
fn standard_skewed_stable_alpha1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let half_pi = PI / 2.0;
    let u: f64 = rng.random::<f64>() * PI - half_pi;
    let w: f64 = rng.sample(Exp1);
    (2.0 / PI) * ((half_pi + u) * u.tan() - (half_pi * w * u.cos() / (half_pi + u)).ln())
}

/// Draw `V_t` for the stable process with
/// `E[exp(-u V_t)] = exp(t u^alpha / gamma)`.
pub fn sample_v_t<R: Rng + ?Sized>(alpha: f64, t: f64, rng: &mut R) -> Result<f64> {
    check_alpha(alpha)?;
    if !(t > 0.0) {
        return Err(CoalError::argument(format!("sample_v_t requires t > 0, got {t}")));
    }
    let gamma = alpha - 1.0;
    let sigma = (t * (PI * alpha / 2.0).cos().abs() / gamma).powf(1.0 / alpha);
    Ok(sigma * standard_skewed_stable(alpha, rng))
}

/// The stable process V sampled at the given grid times.
#[derive(Debug, Clone)]
pub struct StablePath {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub alpha: f64,
}

impl StablePath {
    pub fn gamma_param(&self) -> f64 {
        self.alpha - 1.0
    }
}

/// Sample V at the grid times (increasing, within [0, gamma]) from
/// independent stationary stable increments.
pub fn sample_stable_path<R: Rng + ?Sized>(
    alpha: f64,
    grid: &[f64],
    rng: &mut R,
) -> Result<StablePath> {
    check_alpha(alpha)?;
    let gamma = alpha - 1.0;
    let mut prev_t = 0.0;
    let mut v = 0.0;
    let mut values = Vec::with_capacity(grid.len());
    for &t in grid {
        if t < prev_t || t > gamma {
            return Err(CoalError::argument(
                "stable path grid must be increasing within [0, gamma]",
            ));
        }
        if t > prev_t {
            v += sample_v_t(alpha, t - prev_t, rng)?;
        }
        values.push(v);
        prev_t = t;
    }
    Ok(StablePath {
        grid: grid.to_vec(),
        values,
        alpha,
    })
}

/// Which evaluation route `LhatLimit` uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LhatMethod {
    /// single stable draw scaled by `kappa(t)^{1/alpha}` (exact in law)
    Oneshot,
    /// midpoint Riemann sum of `gamma int (1-r/gamma)^{-alpha} V_r dr`
    /// over a refined stable path
    Path { steps: usize },
}

/// Limit-law scenarios. Each fixes one distribution; `sample_limit`
/// draws from it.
#[derive(Debug, Clone, Copy)]
pub enum LimitScenario {
    /// `V_gamma`, the limit of `n^{-1/alpha}(n - tau_n/gamma)`
    TauLimit { alpha: f64 },
    /// `gamma int_0^t (1-r/gamma)^{-alpha} V_r dr`
    LhatLimit { alpha: f64, t: f64, method: LhatMethod },
    /// `V*_t = LhatLimit / (C0 Gamma(2-alpha))`
    LLimit { alpha: f64, c0: f64, t: f64 },
    /// `theta V*_t` (alpha < sqrt 2)
    MutationLowAlpha { alpha: f64, c0: f64, t: f64, theta: f64 },
    /// `sqrt(theta a(t)) G` (alpha > sqrt 2)
    MutationHighAlpha { alpha: f64, c0: f64, t: f64, theta: f64 },
    /// `theta V*_t + sqrt(theta a(t)) G` (alpha = sqrt 2)
    MutationCritAlpha { alpha: f64, c0: f64, t: f64, theta: f64 },
    /// standard Gumbel (density `exp(-x - e^{-x})`)
    KingmanGumbel,
    /// Z with `E[exp(-lambda Z)] = exp(lambda log lambda)`
    BsStable,
}

/// One draw from a limit law.
pub fn sample_limit<R: Rng + ?Sized>(scenario: LimitScenario, rng: &mut R) -> Result<f64> {
    match scenario {
        LimitScenario::TauLimit { alpha } => sample_v_t(alpha, alpha - 1.0, rng),
        LimitScenario::LhatLimit { alpha, t, method } => sample_lhat_limit(alpha, t, method, rng),
        LimitScenario::LLimit { alpha, c0, t } => sample_v_star(alpha, c0, t, rng),
        LimitScenario::MutationLowAlpha { alpha, c0, t, theta } => {
            check_mutation_params(theta, t, alpha)?;
            if alpha >= std::f64::consts::SQRT_2 {
                return Err(CoalError::argument(
                    "low-alpha mutation limit requires alpha < sqrt(2)",
                ));
            }
            Ok(theta * sample_v_star(alpha, c0, t, rng)?)
        }
        LimitScenario::MutationHighAlpha { alpha, c0, t, theta } => {
            check_mutation_params(theta, t, alpha)?;
            if alpha <= std::f64::consts::SQRT_2 {
                return Err(CoalError::argument(
                    "high-alpha mutation limit requires alpha > sqrt(2)",
                ));
            }
            let a = a_of_t_raw(alpha, c0, t)?;
            let g: f64 = rng.sample(StandardNormal);
            Ok((theta * a).sqrt() * g)
        }
        LimitScenario::MutationCritAlpha { alpha, c0, t, theta } => {
            check_mutation_params(theta, t, alpha)?;
            if (alpha - std::f64::consts::SQRT_2).abs() > 1e-9 {
                return Err(CoalError::argument(
                    "critical mutation limit requires alpha = sqrt(2)",
                ));
            }
            let a = a_of_t_raw(alpha, c0, t)?;
            let g: f64 = rng.sample(StandardNormal);
            Ok(theta * sample_v_star(alpha, c0, t, rng)? + (theta * a).sqrt() * g)
        }
        LimitScenario::KingmanGumbel => {
            Ok(Gumbel::new(0.0, 1.0).expect("valid gumbel").sample(rng))
        }
        LimitScenario::BsStable => {
            // Z = (pi/2) X + ln(pi/2) for X ~ S_1(1, 1, 0):
            // E[exp(-u X)] = exp((2/pi) u ln u), so the scale pi/2 and
            // drift ln(pi/2) give E[exp(-lambda Z)] = exp(lambda ln lambda)
            let half_pi = PI / 2.0;
            Ok(half_pi * standard_skewed_stable_alpha1(rng) + half_pi.ln())
        }
    }
}

fn check_mutation_params(theta: f64, t: f64, alpha: f64) -> Result<()> {
    check_alpha(alpha)?;
    if !(theta > 0.0) {
        return Err(CoalError::argument(format!(
            "mutation limits require theta > 0, got {theta}"
        )));
    }
    if !(t > 0.0 && t < alpha - 1.0) {
        return Err(CoalError::argument(format!(
            "mutation limits require t in (0, gamma), got {t}"
        )));
    }
    Ok(())
}

fn a_of_t_raw(alpha: f64, c0: f64, t: f64) -> Result<f64> {
    Ok(v_of_t(alpha, t)? / (c0 * ln_gamma(2.0 - alpha).exp()))
}

fn sample_lhat_limit<R: Rng + ?Sized>(
    alpha: f64,
    t: f64,
    method: LhatMethod,
    rng: &mut R,
) -> Result<f64> {
    check_alpha(alpha)?;
    let gamma = alpha - 1.0;
    if !(t > 0.0 && t < gamma) {
        return Err(CoalError::argument(format!(
            "LhatLimit requires t in (0, gamma), got {t}"
        )));
    }
    match method {
        LhatMethod::Oneshot => {
            // gamma int f dV with f(r) = (1-t/g)^{-g} - (1-r/g)^{-g}
            // equals in law gamma kappa(t)^{1/alpha} V_1
            let kappa = kappa_of_t(alpha, t)?;
            Ok(gamma * kappa.powf(1.0 / alpha) * sample_v_t(alpha, 1.0, rng)?)
        }
        LhatMethod::Path { steps } => {
            if steps == 0 {
                return Err(CoalError::argument("path method requires steps >= 1"));
            }
            let h = t / steps as f64;
            let grid: Vec<f64> = (0..steps).map(|j| (j as f64 + 0.5) * h).collect();
            let path = sample_stable_path(alpha, &grid, rng)?;
            let sum: f64 = grid
                .iter()
                .zip(&path.values)
                .map(|(&r, &v)| (1.0 - r / gamma).powf(-alpha) * v)
                .sum();
            Ok(gamma * h * sum)
        }
    }
}

/// Default step count for the path-based `LhatLimit` sampler.
pub const PATH_STEPS: usize = 2048;

fn sample_v_star<R: Rng + ?Sized>(alpha: f64, c0: f64, t: f64, rng: &mut R) -> Result<f64> {
    if !(c0 > 0.0) {
        return Err(CoalError::argument(format!("c0 must be positive, got {c0}")));
    }
    let lhat = sample_lhat_limit(alpha, t, LhatMethod::Oneshot, rng)?;
    Ok(lhat / (c0 * ln_gamma(2.0 - alpha).exp()))
}

/// Verification scenarios that carry a centering/scaling pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScalingScenario {
    Tau,
    Lhat,
    L,
    MutationLowAlpha,
    MutationHighAlpha,
    MutationCritAlpha,
    Kingman,
    Bs,
}

/// The exact centering/scaling pair per scenario. The scaled statistic
/// is `(raw - center)/scale`, with raw = `n - tau_n/gamma` for Tau,
/// the partial length or mutation count for the length/mutation
/// scenarios, and the full length `L` for Kingman/BS.
pub fn centering_scaling(
    scenario: ScalingScenario,
    m: &CoalescentMeasure,
    n: u64,
    t: f64,
    theta: f64,
) -> Result<(f64, f64)> {
    let nf = n as f64;
    match scenario {
        ScalingScenario::Tau => {
            let tail = m.asymptotic_tail("centering_scaling(tau)")?;
            Ok((0.0, nf.powf(1.0 / tail.alpha)))
        }
        ScalingScenario::Lhat => {
            let tail = m.asymptotic_tail("centering_scaling(lhat)")?;
            Ok((
                nf.powf(2.0 - tail.alpha) * v_of_t(tail.alpha, t)?,
                nf.powf(1.0 - tail.alpha + 1.0 / tail.alpha),
            ))
        }
        ScalingScenario::L | ScalingScenario::MutationLowAlpha | ScalingScenario::MutationCritAlpha => {
            let tail = m.asymptotic_tail("centering_scaling(length)")?;
            let theta_eff = if scenario == ScalingScenario::L { 1.0 } else { theta };
            if scenario != ScalingScenario::L && theta <= 0.0 {
                return Err(CoalError::argument("mutation scaling requires theta > 0"));
            }
            if scenario == ScalingScenario::MutationCritAlpha
                && (tail.alpha - std::f64::consts::SQRT_2).abs() > 1e-9
            {
                return Err(CoalError::argument(
                    "critical mutation scaling requires alpha = sqrt(2)",
                ));
            }
            if scenario == ScalingScenario::MutationLowAlpha
                && tail.alpha >= std::f64::consts::SQRT_2
            {
                return Err(CoalError::argument(
                    "low-alpha mutation scaling requires alpha < sqrt(2)",
                ));
            }
            Ok((
                theta_eff * a_of_t(m, t)? * nf.powf(2.0 - tail.alpha),
                nf.powf(1.0 - tail.alpha + 1.0 / tail.alpha),
            ))
        }
        ScalingScenario::MutationHighAlpha => {
            let tail = m.asymptotic_tail("centering_scaling(mutation)")?;
            if theta <= 0.0 {
                return Err(CoalError::argument("mutation scaling requires theta > 0"));
            }
            if tail.alpha <= std::f64::consts::SQRT_2 {
                return Err(CoalError::argument(
                    "high-alpha mutation scaling requires alpha > sqrt(2)",
                ));
            }
            Ok((
                theta * a_of_t(m, t)? * nf.powf(2.0 - tail.alpha),
                nf.powf(1.0 - tail.alpha / 2.0),
            ))
        }
        ScalingScenario::Kingman => Ok((2.0 * nf.ln(), 2.0)),
        ScalingScenario::Bs => {
            let ln = nf.ln();
            Ok((
                nf / ln + nf * ln.ln() / (ln * ln),
                nf / (ln * ln),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::replicate_rng;

    #[test]
    fn v_closed_form_matches_quadrature() {
        for &alpha in &[1.2, 1.5, 1.8] {
            let gamma = alpha - 1.0;
            for &frac in &[0.1, 0.5, 0.9] {
                let t = frac * gamma;
                let closed = v_of_t(alpha, t).unwrap();
                let q = quad(|r| (1.0 - r / gamma).powf(-gamma), 0.0, t, 1e-14, 1e-12).unwrap();
                assert!((closed - q).abs() < 1e-10, "alpha={alpha} t={t}");
            }
        }
        assert_eq!(v_of_t(1.5, 0.0).unwrap(), 0.0);
        assert!(v_of_t(1.5, 0.6).is_err());
    }

    #[test]
    fn a_of_gamma_beta_closed_form() {
        // Beta family: a(gamma) = Gamma(alpha) alpha (alpha-1)/(2-alpha)
        for &alpha in &[1.3, 1.5, 1.8] {
            let m = CoalescentMeasure::beta(alpha).unwrap();
            let expected =
                ln_gamma(alpha).exp() * alpha * (alpha - 1.0) / (2.0 - alpha);
            let got = a_of_t(&m, alpha - 1.0).unwrap();
            assert!(
                (got - expected).abs() < 1e-10 * expected,
                "alpha={alpha}: {got} vs {expected}"
            );
        }
        let a = a_of_t(&CoalescentMeasure::beta(1.5).unwrap(), 0.5).unwrap();
        assert!((a - 1.329340).abs() < 1e-5, "a(gamma) = {a}");
    }

    #[test]
    fn kappa_small_t_and_monotone() {
        assert!(kappa_of_t(1.5, 1e-6).unwrap() < 1e-6);
        let mut prev = 0.0;
        for j in 1..10 {
            let t = 0.05 * j as f64;
            let k = kappa_of_t(1.5, t).unwrap();
            assert!(k > prev, "kappa not increasing at t={t}");
            prev = k;
        }
        assert!(kappa_of_t(1.5, 0.5).is_err());
        assert!(kappa_of_t(1.5, 0.0).is_err());
    }

    #[test]
    fn kappa_brute_force_double_sum() {
        // 2-D Riemann oracle for the double integral at alpha=1.5, t=0.25
        let (alpha, t) = (1.5, 0.25);
        let gamma = alpha - 1.0;
        let m = 4000;
        let h = t / m as f64;
        let mut outer = 0.0;
        for i in 0..m {
            let r = (i as f64 + 0.5) * h;
            let mut inner = 0.0;
            let m2 = 400;
            let h2 = (t - r) / m2 as f64;
            for j in 0..m2 {
                let s = r + (j as f64 + 0.5) * h2;
                inner += (1.0 - s / gamma).powf(-alpha) * h2;
            }
            outer += inner.powf(alpha) * h;
        }
        let k = kappa_of_t(alpha, t).unwrap();
        assert!((k - outer).abs() < 1e-4, "kappa={k} riemann={outer}");
    }

    #[test]
    fn stable_laplace_transform_grid() {
        // empirical E[exp(-u V_t)] vs exp(t u^alpha/gamma), 3 SE
        let draws = 100_000u64;
        for &alpha in &[1.2, 1.5, 1.8] {
            let gamma = alpha - 1.0;
            for &tf in &[0.25, 1.0] {
                let t = tf * gamma;
                for &u in &[0.25f64, 0.5, 1.0] {
                    let mut rng = replicate_rng(20, "stable-laplace", (alpha * 100.0) as u64);
                    let (mut s, mut s2) = (0.0, 0.0);
                    for _ in 0..draws {
                        let x = (-u * sample_v_t(alpha, t, &mut rng).unwrap()).exp();
                        s += x;
                        s2 += x * x;
                    }
                    let mean = s / draws as f64;
                    let sd = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
                    let target = (t * u.powf(alpha) / gamma).exp();
                    assert!(
                        (mean - target).abs() < 3.0 * sd + 1e-12,
                        "alpha={alpha} t={t} u={u}: {mean} vs {target} (se {sd})"
                    );
                }
            }
        }
    }

    #[test]
    fn stable_mean_zero() {
        // E[V_t] = 0 (psi'(0) = 0). Truncating the heavy right tail
        // would bias the estimate negative (the law is totally skewed),
        // so use the plain sample mean: for strictly alpha-stable
        // summands the mean of n draws is distributed as n^{1/alpha - 1}
        // times one draw, about 0.02 x O(1) at n = 10^5, alpha = 1.5.
        let mut rng = replicate_rng(21, "stable-mean", 0);
        let alpha = 1.5;
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_v_t(alpha, 0.5, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() < 0.1, "sample mean {mean}");
    }

    #[test]
    fn stable_left_tail_light() {
        // totally skewed right: the left tail is lighter than any
        // power, so essentially no draws below -10
        let mut rng = replicate_rng(22, "stable-tail", 0);
        let n = 100_000;
        let below = (0..n)
            .filter(|_| sample_v_t(1.5, 0.5, &mut rng).unwrap() < -10.0)
            .count();
        assert!(
            (below as f64 / n as f64) < 1e-3,
            "left-tail fraction {}",
            below as f64 / n as f64
        );
    }

    #[test]
    fn stable_path_increments() {
        let mut rng = replicate_rng(23, "stable-path", 0);
        let path = sample_stable_path(1.5, &[0.0, 0.1, 0.25, 0.5], &mut rng).unwrap();
        assert_eq!(path.values[0], 0.0);
        assert_eq!(path.values.len(), 4);
        assert!(sample_stable_path(1.5, &[0.3, 0.2], &mut rng).is_err());
        assert!(sample_stable_path(1.5, &[0.7], &mut rng).is_err());
        assert!(sample_stable_path(2.5, &[0.1], &mut rng).is_err());
    }

    #[test]
    fn gumbel_mean() {
        let mut rng = replicate_rng(24, "gumbel", 0);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| sample_limit(LimitScenario::KingmanGumbel, &mut rng).unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.5772157).abs() < 0.01, "gumbel mean {mean}");
    }

    #[test]
    fn bs_stable_laplace() {
        let mut rng = replicate_rng(25, "bs-z", 0);
        let draws = 100_000;
        for &lambda in &[0.25f64, 0.5, 1.0] {
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..draws {
                let z = sample_limit(LimitScenario::BsStable, &mut rng).unwrap();
                let x = (-lambda * z).exp();
                s += x;
                s2 += x * x;
            }
            let mean = s / draws as f64;
            let sd = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
            let target = (lambda * lambda.ln()).exp();
            assert!(
                (mean - target).abs() < 3.0 * sd + 1e-12,
                "lambda={lambda}: {mean} vs {target} (se {sd})"
            );
        }
    }

    #[test]
    fn lhat_limit_laplace_oneshot() {
        // E[exp(-u LhatLimit)] = exp(u^alpha gamma^{alpha-1} kappa(t))
        let (alpha, t, u) = (1.5, 0.25, 0.5);
        let gamma: f64 = alpha - 1.0;
        let kappa = kappa_of_t(alpha, t).unwrap();
        let mut rng = replicate_rng(26, "lhat", 0);
        let draws = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let x = (-u * sample_limit(
                LimitScenario::LhatLimit {
                    alpha,
                    t,
                    method: LhatMethod::Oneshot,
                },
                &mut rng,
            )
            .unwrap())
            .exp();
            s += x;
            s2 += x * x;
        }
        let mean = s / draws as f64;
        let sd = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
        let target = (u.powf(alpha) * gamma.powf(alpha - 1.0) * kappa).exp();
        assert!(
            (mean - target).abs() < 3.0 * sd + 1e-12,
            "{mean} vs {target} (se {sd})"
        );
    }

    #[test]
    fn lhat_limit_path_matches_oneshot_laplace() {
        // the Riemann-sum sampler reproduces the same Laplace values
        let (alpha, t, u) = (1.5, 0.25, 0.5);
        let gamma: f64 = alpha - 1.0;
        let kappa = kappa_of_t(alpha, t).unwrap();
        let mut rng = replicate_rng(27, "lhat-path", 0);
        let draws = 20_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let x = (-u * sample_limit(
                LimitScenario::LhatLimit {
                    alpha,
                    t,
                    method: LhatMethod::Path { steps: 512 },
                },
                &mut rng,
            )
            .unwrap())
            .exp();
            s += x;
            s2 += x * x;
        }
        let mean = s / draws as f64;
        let sd = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
        let target = (u.powf(alpha) * gamma.powf(alpha - 1.0) * kappa).exp();
        assert!(
            (mean - target).abs() < 4.0 * sd + 0.003,
            "{mean} vs {target} (se {sd})"
        );
    }

    #[test]
    fn scenario_parameter_validation() {
        let mut rng = replicate_rng(28, "validate", 0);
        assert!(sample_limit(
            LimitScenario::MutationLowAlpha { alpha: 1.7, c0: 1.0, t: 0.25, theta: 1.0 },
            &mut rng
        )
        .is_err());
        assert!(sample_limit(
            LimitScenario::MutationHighAlpha { alpha: 1.3, c0: 1.0, t: 0.25, theta: 1.0 },
            &mut rng
        )
        .is_err());
        assert!(sample_limit(
            LimitScenario::MutationCritAlpha { alpha: 1.5, c0: 1.0, t: 0.25, theta: 1.0 },
            &mut rng
        )
        .is_err());
        assert!(sample_limit(
            LimitScenario::MutationLowAlpha { alpha: 1.3, c0: 1.0, t: 0.25, theta: 0.0 },
            &mut rng
        )
        .is_err());
        assert!(sample_limit(
            LimitScenario::LhatLimit { alpha: 1.5, t: 0.5, method: LhatMethod::Oneshot },
            &mut rng
        )
        .is_err());
    }

    #[test]
    fn centering_scaling_values() {
        let beta = CoalescentMeasure::beta(1.5).unwrap();
        // L scale exponent vanishes at alpha0 = (1+sqrt 5)/2
        let alpha0 = (1.0 + 5f64.sqrt()) / 2.0;
        let m0 = CoalescentMeasure::beta(alpha0).unwrap();
        let (_, scale) = centering_scaling(ScalingScenario::L, &m0, 1000, 0.25, 0.0).unwrap();
        assert!((scale - 1.0).abs() < 1e-9, "scale at alpha0: {scale}");
        // mutation exponents coincide at alpha = sqrt 2
        let a = std::f64::consts::SQRT_2;
        assert!((-1.0 + a - 1.0 / a) - (1.0 - a / 2.0) < 1e-12);
        // BS b_n at n = e^10 is e^10/100
        let bs = CoalescentMeasure::bolthausen_sznitman();
        let n = (10f64.exp().round()) as u64;
        let (_, b_n) = centering_scaling(ScalingScenario::Bs, &bs, n, 0.0, 0.0).unwrap();
        let nf = n as f64;
        assert!((b_n - nf / nf.ln().powi(2)).abs() < 1e-9);
        // Kingman pair
        let king = CoalescentMeasure::kingman();
        let (c, s) = centering_scaling(ScalingScenario::Kingman, &king, 100, 0.0, 0.0).unwrap();
        assert!((c - 2.0 * 100f64.ln()).abs() < 1e-12 && s == 2.0);
        // regime mismatch: high regime needs alpha > sqrt 2, low needs
        // alpha < sqrt 2 (1.5 > sqrt 2, 1.3 < sqrt 2)
        let low = CoalescentMeasure::beta(1.3).unwrap();
        assert!(centering_scaling(ScalingScenario::MutationHighAlpha, &low, 100, 0.25, 1.0)
            .is_err());
        assert!(centering_scaling(ScalingScenario::MutationLowAlpha, &beta, 100, 0.25, 1.0)
            .is_err());
        assert!(centering_scaling(ScalingScenario::MutationHighAlpha, &beta, 100, 0.25, 1.0)
            .is_ok());
        assert!(centering_scaling(ScalingScenario::Tau, &king, 100, 0.0, 0.0).is_err());
    }

    #[test]
    fn tau_limit_is_v_gamma() {
        // V_gamma has E[exp(-V_gamma)] = e
        let mut rng = replicate_rng(29, "tau-limit", 0);
        let draws = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..draws {
            let x = (-sample_limit(LimitScenario::TauLimit { alpha: 1.5 }, &mut rng).unwrap())
                .exp();
            s += x;
            s2 += x * x;
        }
        let mean = s / draws as f64;
        let sd = ((s2 / draws as f64 - mean * mean) / draws as f64).sqrt();
        assert!(
            (mean - std::f64::consts::E).abs() < 3.0 * sd,
            "{mean} vs e (se {sd})"
        );
    }
}
