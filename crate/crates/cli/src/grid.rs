//! Sweep grid syntax: `START:STOP:STEP` (inclusive) or `a,b,c`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("empty grid")]
    Empty,
    #[error("`{0}` is not a number")]
    NotANumber(String),
    #[error("grid step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("grid stop {stop} is below start {start}")]
    Reversed { start: f64, stop: f64 },
    #[error("grid has more than {0} points")]
    TooLarge(usize),
}

pub const MAX_POINTS: usize = 100_000;

fn num(s: &str) -> Result<f64, GridError> {
    let v: f64 = s.trim().parse().map_err(|_| GridError::NotANumber(s.trim().to_string()))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(GridError::NotANumber(s.trim().to_string()))
    }
}

pub fn parse_grid(s: &str) -> Result<Vec<f64>, GridError> {
    let s = s.trim();
    if s.is_empty() {
        return Err(GridError::Empty);
    }
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
            if step.is_nan() || step <= 0.0 {
                return Err(GridError::BadStep(step));
            }
            if stop < start {
                return Err(GridError::Reversed { start, stop });
            }
            // Tolerate the rounding in (stop - start) / step.
            let n = ((stop - start) / step + 1e-9).floor() + 1.0;
            if n > MAX_POINTS as f64 {
                return Err(GridError::TooLarge(MAX_POINTS));
            }
            Ok((0..n as usize).map(|i| start + i as f64 * step).collect())
        }
        [list] => list.split(',').map(num).collect(),
        _ => Err(GridError::NotANumber(s.to_string())),
    }
}
