//! Brute-force time-stepped integration of a result's client power profile.

use crate::error::{Error, Result};

use super::{PowerStep, ScenarioResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    LeftRiemann,
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stepping {
    /// One global grid `0, dt, 2dt, ...` over the whole run.
    Uniform,
    /// The grid restarts at every phase boundary; each phase is split into
    /// `ceil(duration / dt)` equal steps.
    Aligned,
}

/// Integrate the noise-free client power signal of `result` with step `dt`.
pub fn integrate_oracle(result: &ScenarioResult, dt: f64, rule: Rule, stepping: Stepping) -> Result<f64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::Parse(format!("step must be positive, got {dt}")));
    }
    let steps = &result.power_profile;
    if steps.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(match stepping {
        Stepping::Aligned => steps
            .iter()
            .filter(|s| s.end > s.start)
            .map(|s| {
                let n = ((s.end - s.start) / dt).ceil().max(1.0);
                let h = (s.end - s.start) / n;
                // within a phase both rules see the same constant value
                let mut acc = 0.0;
                for _ in 0..n as u64 {
                    acc += s.watts * h;
                }
                acc
            })
            .sum(),
        Stepping::Uniform => uniform(steps, dt, rule),
    })
}

/// Value on `[start, end)` of the step containing `t`.
fn right_open(steps: &[PowerStep], t: f64) -> f64 {
    let i = steps.partition_point(|s| s.end <= t);
    steps.get(i).map_or(0.0, |s| s.watts)
}

/// Value on `(start, end]` of the step containing `t`.
fn left_open(steps: &[PowerStep], t: f64) -> f64 {
    let i = steps.partition_point(|s| s.end < t);
    steps.get(i).map_or(0.0, |s| s.watts)
}

fn uniform(steps: &[PowerStep], dt: f64, rule: Rule) -> f64 {
    let total = steps.last().map_or(0.0, |s| s.end);
    let mut acc = 0.0;
    let mut k: u64 = 0;
    loop {
        let a = k as f64 * dt;
        if a >= total {
            break;
        }
        let b = ((k + 1) as f64 * dt).min(total);
        let h = b - a;
        acc += match rule {
            Rule::LeftRiemann => right_open(steps, a) * h,
            Rule::Trapezoid => 0.5 * (right_open(steps, a) + left_open(steps, b)) * h,
        };
        k += 1;
    }
    acc
}
