//! Sampling functions on the circle.
//!
//! A sampling function `f` is 1-periodic and monotone on the fundamental
//! domain `[0, 1)`. The quantitative requirement used throughout the crate is
//! *alpha-Holder monotonicity*:
//!
//! ```text
//! f(y) - f(x) >= (y - x)^alpha      for 0 <= x <= y < 1,  alpha >= 1,
//! ```
//!
//! which forces strict growth at every scale while still allowing upward
//! jumps. Three families are supported:
//!
//! * **Sawtooth power** `f(x) = {x}^p` — bounded, continuous on `[0, 1)`,
//!   alpha-Holder monotone with `alpha = p`.
//! * **Maryland tangent** `f(x) = tan(pi (x - 1/2))` with `f(0) = -inf` —
//!   unbounded, continuous as a circle map into `R ∪ {∞}`; the single
//!   infinite value models infinite coupling at the bottom of the well.
//! * **Table** — user-supplied breakpoints and values, either as a
//!   right-continuous staircase or as a piecewise-linear interpolant. Tables
//!   are how range gaps (two-block staircases) enter the gap tests.
//!
//! The value `-inf` is permitted only at `x ≡ 0 (mod 1)`.

use crate::circle::frac;
use crate::error::Error;
use crate::Result;
use serde::{Deserialize, Serialize};

/// Tolerance used by [`PotentialSpec::check_holder_monotone`]: a pair passes
/// when `f(y) - f(x) >= (y - x)^alpha - HOLDER_TOL`.
pub const HOLDER_TOL: f64 = 1e-12;

/// How a table potential interpolates between breakpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableInterp {
    /// Right-continuous staircase: `f(x) = v_i` on `[x_i, x_{i+1})`.
    Step,
    /// Piecewise linear through the points; the slope of the last segment
    /// continues on `[x_last, 1)`.
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    SawtoothPower { power: f64 },
    MarylandTan,
    Table {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        interp: TableInterp,
    },
}

/// A validated sampling function together with its declared Holder exponent.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialSpec {
    kind: Kind,
    alpha: f64,
}

/// Outcome of a grid-based Holder-monotonicity check.
#[derive(Debug, Clone, Serialize)]
pub struct HolderReport {
    /// True when every ordered grid pair satisfies the margin tolerance.
    pub ok: bool,
    /// Smallest observed `f(y) - f(x) - (y - x)^alpha` over the grid.
    pub worst_margin: f64,
    /// Pair attaining the worst margin.
    pub worst_pair: (f64, f64),
    /// Number of pairs below `-HOLDER_TOL`.
    pub violations: usize,
}

impl PotentialSpec {
    /// Plain sawtooth `f(x) = {x}`, Lipschitz monotone (`alpha = 1`).
    pub fn sawtooth() -> Self {
        PotentialSpec {
            kind: Kind::SawtoothPower { power: 1.0 },
            alpha: 1.0,
        }
    }

    /// Sawtooth power `f(x) = {x}^p` with `p >= 1`; declared `alpha = p`.
    pub fn sawtooth_power(power: f64) -> Result<Self> {
        if !power.is_finite() || power < 1.0 {
            return Err(Error::InvalidInput(format!(
                "sawtooth power must be >= 1, got {power}"
            )));
        }
        Ok(PotentialSpec {
            kind: Kind::SawtoothPower { power },
            alpha: power,
        })
    }

    /// Maryland-type tangent `f(x) = tan(pi (x - 1/2))`, `f(0) = -inf`.
    ///
    /// The representative is chosen increasing on `[0, 1)`: it climbs from
    /// `-inf` through `0` at `x = 1/2` toward `+inf` at `x -> 1`.
    pub fn maryland() -> Self {
        PotentialSpec {
            kind: Kind::MarylandTan,
            alpha: 1.0,
        }
    }

    /// Table potential from `(breakpoint, value)` rows.
    ///
    /// Requirements: the first breakpoint is exactly `0.0`, breakpoints are
    /// strictly increasing inside `[0, 1)`, values are finite and
    /// non-decreasing. Decreasing values are a monotonicity violation.
    pub fn table(
        breakpoints: Vec<f64>,
        values: Vec<f64>,
        interp: TableInterp,
        alpha: f64,
    ) -> Result<Self> {
        if breakpoints.len() != values.len() {
            return Err(Error::CardinalityMismatch {
                left: breakpoints.len(),
                right: values.len(),
            });
        }
        if breakpoints.is_empty() {
            return Err(Error::InvalidInput("empty table".into()));
        }
        if breakpoints[0] != 0.0 {
            return Err(Error::InvalidInput(format!(
                "first breakpoint must be 0.0, got {}",
                breakpoints[0]
            )));
        }
        for w in breakpoints.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::InvalidInput(format!(
                    "breakpoints must be strictly increasing: {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&last) = breakpoints.last() {
            if last >= 1.0 {
                return Err(Error::InvalidInput(format!(
                    "breakpoints must lie in [0, 1), got {last}"
                )));
            }
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "table value {v} at row {i} is not finite"
                )));
            }
        }
        for i in 1..values.len() {
            if values[i] < values[i - 1] {
                return Err(Error::MonotonicityViolation {
                    x: breakpoints[i - 1],
                    y: breakpoints[i],
                    fx: values[i - 1],
                    fy: values[i],
                });
            }
        }
        if !alpha.is_finite() || alpha < 1.0 {
            return Err(Error::InvalidInput(format!(
                "declared alpha must be >= 1, got {alpha}"
            )));
        }
        Ok(PotentialSpec {
            kind: Kind::Table {
                breakpoints,
                values,
                interp,
            },
            alpha,
        })
    }

    /// Declared Holder exponent.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// True when the function takes only finite values (no `-inf`).
    pub fn is_bounded(&self) -> bool {
        !matches!(self.kind, Kind::MarylandTan)
    }

    /// Evaluate `f` at phase `x` (reduced mod 1). May return `-inf` for the
    /// Maryland tangent at `x ≡ 0`.
    pub fn sample(&self, x: f64) -> f64 {
        let t = frac(x);
        match &self.kind {
            Kind::SawtoothPower { power } => {
                if *power == 1.0 {
                    t
                } else {
                    t.powf(*power)
                }
            }
            Kind::MarylandTan => {
                if t == 0.0 {
                    f64::NEG_INFINITY
                } else {
                    (std::f64::consts::PI * (t - 0.5)).tan()
                }
            }
            Kind::Table {
                breakpoints,
                values,
                interp,
            } => {
                // Index of the last breakpoint <= t; breakpoints[0] == 0.
                let i = match breakpoints.binary_search_by(|b| b.partial_cmp(&t).unwrap()) {
                    Ok(i) => i,
                    Err(ins) => ins - 1,
                };
                match interp {
                    TableInterp::Step => values[i],
                    TableInterp::Linear => {
                        let k = breakpoints.len();
                        if k == 1 {
                            return values[0];
                        }
                        // Segment slope: interior segments interpolate to the
                        // next point, the final segment extends the previous
                        // slope past the last breakpoint.
                        let (j0, j1) = if i + 1 < k { (i, i + 1) } else { (k - 2, k - 1) };
                        let slope =
                            (values[j1] - values[j0]) / (breakpoints[j1] - breakpoints[j0]);
                        values[i] + slope * (t - breakpoints[i])
                    }
                }
            }
        }
    }

    /// Range endpoints `f(0)` and `f(1-0)` (limit from the left at the wrap).
    ///
    /// Exact for all three families; used by rank-one sweeps to build the
    /// admissible coupling set.
    pub fn range_endpoints(&self) -> (f64, f64) {
        match &self.kind {
            Kind::SawtoothPower { .. } => (0.0, 1.0),
            Kind::MarylandTan => (f64::NEG_INFINITY, f64::INFINITY),
            Kind::Table {
                breakpoints,
                values,
                interp,
            } => {
                let lo = values[0];
                let hi = match interp {
                    TableInterp::Step => *values.last().unwrap(),
                    TableInterp::Linear => {
                        let k = values.len();
                        if k == 1 {
                            values[0]
                        } else {
                            let slope = (values[k - 1] - values[k - 2])
                                / (breakpoints[k - 1] - breakpoints[k - 2]);
                            values[k - 1] + slope * (1.0 - breakpoints[k - 1])
                        }
                    }
                };
                (lo, hi)
            }
        }
    }

    /// Check `f(y) - f(x) >= (y - x)^alpha - HOLDER_TOL` over all ordered
    /// pairs of a uniform grid `{ i / grid : i < grid }`.
    ///
    /// Report-only: an unfavorable margin is recorded, not raised.
    pub fn check_holder_monotone(&self, alpha: f64, grid: usize) -> HolderReport {
        let samples: Vec<f64> = (0..grid)
            .map(|i| self.sample(i as f64 / grid as f64))
            .collect();
        let mut worst_margin = f64::INFINITY;
        let mut worst_pair = (0.0, 0.0);
        let mut violations = 0usize;
        for i in 0..grid {
            if samples[i] == f64::NEG_INFINITY {
                // f(x) = -inf satisfies the lower bound against every y > x.
                continue;
            }
            for j in (i + 1)..grid {
                let x = i as f64 / grid as f64;
                let y = j as f64 / grid as f64;
                let margin = samples[j] - samples[i] - (y - x).powf(alpha);
                if margin < worst_margin {
                    worst_margin = margin;
                    worst_pair = (x, y);
                }
                if margin < -HOLDER_TOL {
                    violations += 1;
                }
            }
        }
        HolderReport {
            ok: violations == 0,
            worst_margin,
            worst_pair,
            violations,
        }
    }
}
