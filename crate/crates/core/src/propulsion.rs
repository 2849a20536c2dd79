//! Rotary-wing propulsion power and the speed interval it admits under a cap.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const BISECTION_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PropulsionParams {
    /// Blade profile power in hover, W.
    pub blade_profile_power: f64,
    /// Induced power in hover, W.
    pub induced_power: f64,
    /// Rotor blade tip speed, m/s.
    pub tip_speed: f64,
    /// Mean rotor induced velocity in hover, m/s.
    pub hover_induced_velocity: f64,
    pub fuselage_drag_ratio: f64,
    /// kg/m^3
    pub air_density: f64,
    pub rotor_solidity: f64,
    /// m^2
    pub rotor_disc_area: f64,
}

impl Default for PropulsionParams {
    fn default() -> Self {
        PropulsionParams {
            blade_profile_power: 79.86,
            induced_power: 88.63,
            tip_speed: 120.0,
            hover_induced_velocity: 4.03,
            fuselage_drag_ratio: 0.6,
            air_density: 1.225,
            rotor_solidity: 0.05,
            rotor_disc_area: 0.503,
        }
    }
}

impl PropulsionParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.blade_profile_power,
            self.induced_power,
            self.tip_speed,
            self.hover_induced_velocity,
            self.fuselage_drag_ratio,
            self.air_density,
            self.rotor_solidity,
            self.rotor_disc_area,
        ];
        if all.iter().all(|v| *v > 0.0 && v.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "propulsion parameters must be positive: {self:?}"
            )))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedInterval {
    pub v_lo: f64,
    pub v_hi: f64,
}

impl SpeedInterval {
    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.v_lo - tol && v <= self.v_hi + tol
    }
}

/// Propulsion power in W at forward speed `v`.
pub fn propulsion_power(v: f64, pp: &PropulsionParams) -> f64 {
    let v2 = v * v;
    let v0 = pp.hover_induced_velocity;
    let v0_2 = v0 * v0;
    let profile = pp.blade_profile_power * (1.0 + 3.0 * v2 / (pp.tip_speed * pp.tip_speed));
    let parasite =
        pp.fuselage_drag_ratio * pp.air_density * pp.rotor_solidity * pp.rotor_disc_area * v2 * v
            / 2.0;
    // sqrt(1 + x^2) - x with x = v^2 / (2 v0^2), written to avoid cancellation at high speed
    let x = v2 / (2.0 * v0_2);
    let radicand = 1.0 / ((1.0 + x * x).sqrt() + x);
    profile + parasite + pp.induced_power * radicand.sqrt()
}

/// Speed minimizing propulsion power (golden-section search; the curve is U-shaped).
pub fn min_power_speed(pp: &PropulsionParams) -> f64 {
    let mut hi = 10.0 * pp.hover_induced_velocity;
    while propulsion_power(hi, pp) < propulsion_power(hi / 2.0, pp) {
        hi *= 2.0;
    }
    let (mut a, mut b) = (0.0, hi);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while b - a > 1e-9 {
        if propulsion_power(c, pp) < propulsion_power(d, pp) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    (a + b) / 2.0
}

/// Bisection for the crossing of `p_cap` on a monotone branch; returns the
/// endpoint of the final bracket that stays within the cap.
fn crossing(p_cap: f64, mut inside: f64, mut outside: f64, pp: &PropulsionParams) -> f64 {
    while (outside - inside).abs() > BISECTION_TOL {
        let mid = 0.5 * (inside + outside);
        if propulsion_power(mid, pp) <= p_cap {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

/// Largest interval `[v_lo, v_hi]` within `[0, v_max]` on which propulsion power
/// stays at or below `p_cap`.
pub fn speed_interval(p_cap: f64, v_max: f64, pp: &PropulsionParams) -> Result<SpeedInterval> {
    if !(p_cap > 0.0) || !(v_max >= 0.0) {
        return Err(Error::Domain(format!(
            "speed interval needs p_cap > 0 and v_max >= 0, got {p_cap}, {v_max}"
        )));
    }
    if p_cap == f64::INFINITY {
        return Ok(SpeedInterval {
            v_lo: 0.0,
            v_hi: v_max,
        });
    }
    let v_star = min_power_speed(pp);
    let p_min = propulsion_power(v_star, pp);
    if p_cap < p_min {
        // within rounding of the minimum: degenerate interval
        if p_cap >= p_min * (1.0 - 1e-12) {
            return clip(v_star, v_star, v_max, p_cap, p_min);
        }
        return Err(Error::NoAdmissibleSpeed {
            cap: p_cap,
            min_power: p_min,
        });
    }
    let v_lo = if propulsion_power(0.0, pp) <= p_cap {
        0.0
    } else {
        crossing(p_cap, v_star, 0.0, pp)
    };
    let mut beyond = 2.0 * v_star.max(1.0);
    while propulsion_power(beyond, pp) <= p_cap {
        beyond *= 2.0;
    }
    let v_hi = crossing(p_cap, v_star, beyond, pp);
    clip(v_lo, v_hi, v_max, p_cap, p_min)
}

fn clip(v_lo: f64, v_hi: f64, v_max: f64, cap: f64, min_power: f64) -> Result<SpeedInterval> {
    if v_lo > v_max {
        return Err(Error::NoAdmissibleSpeed { cap, min_power });
    }
    Ok(SpeedInterval {
        v_lo,
        v_hi: v_hi.min(v_max),
    })
}
