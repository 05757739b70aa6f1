//! Small floating-point helpers shared across modules.

/// Neumaier-compensated sum of the values in the order given.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            carry += (sum - t) + v;
        } else {
            carry += (v - t) + sum;
        }
        sum = t;
    }
    sum + carry
}

/// Sums nonnegative terms smallest-first with compensation.
pub fn sum_ascending(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    compensated_sum(terms)
}

/// `exp(log_value)` clipped into `[0, 1]`, together with the vacuity flag
/// (`true` when the unclipped value is at least one).
pub fn clip_probability(log_value: f64) -> (f64, bool) {
    if log_value >= 0.0 {
        (1.0, true)
    } else {
        (log_value.exp(), false)
    }
}
