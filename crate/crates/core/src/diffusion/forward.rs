//! Forward (noising) processes.

use rand::Rng;
use rand_distr::StandardNormal;

use super::NoiseSchedule;
use crate::error::{Error, Result};

/// One Gaussian noising step: a draw from `N(sqrt(1 - beta_t) x, beta_t I)`.
pub fn forward_step<R: Rng + ?Sized>(
    x_prev: &[f64],
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<Vec<f64>> {
    schedule.check_step(t)?;
    let beta = schedule.beta(t);
    let keep = (1.0 - beta).sqrt();
    let sd = beta.sqrt();
    Ok(x_prev
        .iter()
        .map(|&x| keep * x + sd * rng.sample::<f64, _>(StandardNormal))
        .collect())
}

/// Closed-form jump to step `t`: `x_t = sqrt(alpha_bar) x0 + sqrt(1 - alpha_bar) eps`.
/// Returns `(x_t, eps)`.
pub fn forward_jump<R: Rng + ?Sized>(
    x0: &[f64],
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<(Vec<f64>, Vec<f64>)> {
    schedule.check_step(t)?;
    let ab = schedule.alpha_bar(t);
    let eps: Vec<f64> = x0.iter().map(|_| rng.sample(StandardNormal)).collect();
    let xt = x0
        .iter()
        .zip(&eps)
        .map(|(&x, &e)| ab.sqrt() * x + (1.0 - ab).sqrt() * e)
        .collect();
    Ok((xt, eps))
}

pub(crate) fn hot_index(block: &[f64]) -> Result<usize> {
    let mut hot = None;
    for (i, &v) in block.iter().enumerate() {
        if v == 1.0 && hot.is_none() {
            hot = Some(i);
        } else if v != 0.0 {
            return Err(Error::Schema("block is not one-hot".into()));
        }
    }
    hot.ok_or_else(|| Error::Schema("block is not one-hot".into()))
}

/// Draw an index from unnormalised non-negative weights.
pub(crate) fn sample_index<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // floating-point slack lands on the last non-zero weight
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(weights.len() - 1)
}

fn one_hot(k: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[i] = 1.0;
    v
}

/// Keep-or-resample mixing with weight `keep` on the current category.
fn mix_and_draw<R: Rng + ?Sized>(block: &[f64], keep: f64, rng: &mut R) -> Result<Vec<f64>> {
    let hot = hot_index(block)?;
    let k = block.len();
    let probs: Vec<f64> = (0..k)
        .map(|i| keep * (i == hot) as u8 as f64 + (1.0 - keep) / k as f64)
        .collect();
    Ok(one_hot(k, sample_index(&probs, rng)))
}

/// One multinomial noising step: `Cat((1 - beta_t) x + beta_t / K)`.
pub fn categorical_forward<R: Rng + ?Sized>(
    block: &[f64],
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<Vec<f64>> {
    schedule.check_step(t)?;
    mix_and_draw(block, schedule.alpha(t), rng)
}

/// Closed-form multinomial jump: `Cat(alpha_bar_t x0 + (1 - alpha_bar_t) / K)`.
pub fn categorical_jump<R: Rng + ?Sized>(
    block: &[f64],
    t: usize,
    schedule: &NoiseSchedule,
    rng: &mut R,
) -> Result<Vec<f64>> {
    schedule.check_step(t)?;
    mix_and_draw(block, schedule.alpha_bar(t), rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    #[test]
    fn tiny_beta_is_identity() {
        let s = NoiseSchedule::from_betas(vec![1e-12]).unwrap();
        let x = [0.3, -1.2, 4.0];
        let y = forward_step(&x, 1, &s, &mut seed::rng(1, 0)).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-5);
        }
        let y = categorical_forward(&[0.0, 1.0, 0.0], 1, &s, &mut seed::rng(1, 0)).unwrap();
        assert_eq!(y, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn near_one_beta_gives_standard_normal() {
        let s = NoiseSchedule::from_betas(vec![0.9999]).unwrap();
        let mut rng = seed::rng(2, 0);
        let n = 10_000;
        let draws: Vec<f64> = (0..n).map(|_| forward_step(&[1.0], 1, &s, &mut rng).unwrap()[0]).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.05, "{mean}");
        assert!((var - 1.0).abs() < 0.1, "{var}");
    }

    #[test]
    fn seeded_output_is_reproducible() {
        let s = NoiseSchedule::linear(10, 1e-3, 0.2).unwrap();
        let a = forward_step(&[1.0, 2.0], 3, &s, &mut seed::rng(9, 0)).unwrap();
        let b = forward_step(&[1.0, 2.0], 3, &s, &mut seed::rng(9, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_out_of_range() {
        let s = NoiseSchedule::linear(10, 1e-3, 0.2).unwrap();
        assert!(forward_step(&[1.0], 0, &s, &mut seed::rng(0, 0)).is_err());
        assert!(forward_jump(&[1.0], 11, &s, &mut seed::rng(0, 0)).is_err());
    }

    #[test]
    fn jump_at_small_noise_keeps_input() {
        let s = NoiseSchedule::from_betas(vec![1e-14]).unwrap();
        let (xt, eps) = forward_jump(&[2.5], 1, &s, &mut seed::rng(3, 0)).unwrap();
        assert!((xt[0] - 2.5).abs() < 1e-6);
        assert_eq!(eps.len(), 1);
    }

    #[test]
    fn jump_variance_matches_alpha_bar() {
        let s = NoiseSchedule::linear(2, 0.1, 0.2).unwrap();
        let mut rng = seed::rng(4, 0);
        let n = 10_000;
        let xs: Vec<f64> = (0..n).map(|_| forward_jump(&[0.0], 2, &s, &mut rng).unwrap().0[0]).collect();
        let var = xs.iter().map(|x| x * x).sum::<f64>() / n as f64;
        assert!((var - 0.28).abs() < 0.02, "{var}");
    }

    #[test]
    fn rejects_non_one_hot() {
        let s = NoiseSchedule::linear(2, 0.1, 0.2).unwrap();
        assert!(categorical_forward(&[0.5, 0.5], 1, &s, &mut seed::rng(0, 0)).is_err());
        assert!(categorical_forward(&[1.0, 1.0], 1, &s, &mut seed::rng(0, 0)).is_err());
        assert!(categorical_forward(&[0.0, 0.0], 1, &s, &mut seed::rng(0, 0)).is_err());
    }

    #[test]
    fn uniform_limit() {
        let s = NoiseSchedule::from_betas(vec![0.999_999]).unwrap();
        let mut rng = seed::rng(5, 0);
        let n = 10_000;
        let ones = (0..n)
            .filter(|_| categorical_jump(&[1.0, 0.0], 1, &s, &mut rng).unwrap()[0] == 1.0)
            .count();
        assert!((ones as f64 / n as f64 - 0.5).abs() < 0.02);
    }

    #[test]
    fn three_categories_closed_form() {
        let s = NoiseSchedule::linear(2, 0.1, 0.2).unwrap();
        let mut rng = seed::rng(6, 0);
        let n = 10_000;
        let hits = (0..n)
            .filter(|_| categorical_jump(&[1.0, 0.0, 0.0], 2, &s, &mut rng).unwrap()[0] == 1.0)
            .count();
        let expected = 0.72 + 0.28 / 3.0;
        assert!((hits as f64 / n as f64 - expected).abs() < 0.01);
    }
}
