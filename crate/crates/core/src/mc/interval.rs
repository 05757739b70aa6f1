//! Score (Wilson) confidence bounds for a binomial frequency.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Two-sided normal quantile `Φ⁻¹((1 + c) / 2)`.
pub fn z_for_confidence(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::domain("confidence", "confidence must lie in (0, 1)"));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(0.5 * (1.0 + confidence)))
}

fn check(successes: u64, trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::domain("trials", "need at least one trial"));
    }
    if successes > trials {
        return Err(Error::domain("successes", "successes cannot exceed trials"));
    }
    Ok(())
}

fn wilson(successes: u64, trials: u64, z: f64, sign: f64) -> f64 {
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let center = p + z2 / (2.0 * n);
    let spread = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center + sign * spread) / (1.0 + z2 / n)).clamp(0.0, 1.0)
}

/// Upper score-interval bound; `z² / (n + z²)` at zero successes.
pub fn frequency_upper(successes: u64, trials: u64, confidence: f64) -> Result<f64> {
    check(successes, trials)?;
    let z = z_for_confidence(confidence)?;
    if successes == trials {
        return Ok(1.0);
    }
    Ok(wilson(successes, trials, z, 1.0))
}

/// Lower score-interval bound; `0` at zero successes.
pub fn frequency_lower(successes: u64, trials: u64, confidence: f64) -> Result<f64> {
    check(successes, trials)?;
    let z = z_for_confidence(confidence)?;
    if successes == 0 {
        return Ok(0.0);
    }
    Ok(wilson(successes, trials, z, -1.0))
}
