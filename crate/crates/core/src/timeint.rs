//! Explicit time integration: fixed-step RK4 and the Dormand-Prince 5(4)
//! embedded pair with PI step-size control. States are flat `f64` slices;
//! the right-hand side is any `f(t, y, dy)` closure.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)] // test builds link std, whose inherent methods shadow this shim
use crate::math::Libm;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Rk4,
    Erk54,
}

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt0: f64,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub t_end: f64,
    pub safety: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    pub max_steps: usize,
    /// Times the integrator must land on exactly (outputs, BC switches).
    pub halt_points: Vec<f64>,
}

impl IntegratorConfig {
    pub fn erk54(t_end: f64) -> Self {
        IntegratorConfig {
            method: Method::Erk54,
            dt0: 1e-4,
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            t_end,
            safety: 0.9,
            dt_min: 1e-14,
            dt_max: f64::INFINITY,
            max_steps: 50_000_000,
            halt_points: Vec::new(),
        }
    }

    pub fn rk4(t_end: f64, dt: f64) -> Self {
        IntegratorConfig {
            method: Method::Rk4,
            dt0: dt,
            abs_tol: 0.0,
            rel_tol: 0.0,
            t_end,
            safety: 0.9,
            dt_min: 1e-14,
            dt_max: f64::INFINITY,
            max_steps: 50_000_000,
            halt_points: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), IntegrateError> {
        if !(self.dt0 > 0.0) || !(self.t_end > 0.0) {
            return Err(IntegrateError::BadConfig);
        }
        if self.method == Method::Erk54 && !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(IntegrateError::BadConfig);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IntegrateError {
    /// Step size collapsed below `dt_min`: the usual small-cell instability
    /// signature.
    DtUnderflow { t: f64 },
    NonFiniteState { t: f64 },
    MaxStepsExceeded { t: f64 },
    BadConfig,
}

impl fmt::Display for IntegrateError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntegrateError::DtUnderflow { t } => write!(f, "step size underflow at t = {t}"),
            IntegrateError::NonFiniteState { t } => write!(f, "non-finite state at t = {t}"),
            IntegrateError::MaxStepsExceeded { t } => write!(f, "step budget exhausted at t = {t}"),
            IntegrateError::BadConfig => write!(f, "invalid integrator configuration"),
        }
    }
}

impl core::error::Error for IntegrateError {}

/// Integrate `y' = f(t, y)` from `t = 0` to `config.t_end`. The hook fires
/// after every accepted step with `(t, dt_used, state)`.
pub fn integrate(
    mut f: impl FnMut(f64, &[f64], &mut [f64]),
    y0: Vec<f64>,
    config: &IntegratorConfig,
    mut on_step: impl FnMut(f64, f64, &[f64]),
) -> Result<Vec<f64>, IntegrateError> {
    config.validate()?;
    match config.method {
        Method::Rk4 => rk4(&mut f, y0, config, &mut on_step, &mut |_| false),
        Method::Erk54 => dopri5(&mut f, y0, config, &mut on_step, &mut |_| false),
    }
}

/// Like [`integrate`], applying `filter` to the state after every accepted
/// step (stabilization filters such as state redistribution). The filter
/// returns whether it changed the state; a changed state re-primes the
/// first-same-as-last stage.
pub fn integrate_filtered(
    mut f: impl FnMut(f64, &[f64], &mut [f64]),
    mut filter: impl FnMut(&mut [f64]) -> bool,
    y0: Vec<f64>,
    config: &IntegratorConfig,
    mut on_step: impl FnMut(f64, f64, &[f64]),
) -> Result<Vec<f64>, IntegrateError> {
    config.validate()?;
    match config.method {
        Method::Rk4 => rk4(&mut f, y0, config, &mut on_step, &mut filter),
        Method::Erk54 => dopri5(&mut f, y0, config, &mut on_step, &mut filter),
    }
}

fn next_halt(halts: &[f64], t: f64, t_end: f64) -> f64 {
    for &h in halts {
        if h > t + 1e-14 {
            return h.min(t_end);
        }
    }
    t_end
}

fn rk4(
    f: &mut impl FnMut(f64, &[f64], &mut [f64]),
    mut y: Vec<f64>,
    config: &IntegratorConfig,
    on_step: &mut impl FnMut(f64, f64, &[f64]),
    filter: &mut impl FnMut(&mut [f64]) -> bool,
) -> Result<Vec<f64>, IntegrateError> {
    let n = y.len();
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut t = 0.0;
    let mut steps = 0usize;
    while t < config.t_end - 1e-14 {
        let target = next_halt(&config.halt_points, t, config.t_end);
        let dt = config.dt0.min(target - t);
        f(t, &y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * dt * k1[i];
        }
        f(t + 0.5 * dt, &tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + 0.5 * dt * k2[i];
        }
        f(t + 0.5 * dt, &tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + dt * k3[i];
        }
        f(t + dt, &tmp, &mut k4);
        for i in 0..n {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        filter(&mut y);
        t += dt;
        steps += 1;
        if steps > config.max_steps {
            return Err(IntegrateError::MaxStepsExceeded { t });
        }
        if !y.iter().all(|v| v.is_finite()) {
            return Err(IntegrateError::NonFiniteState { t });
        }
        on_step(t, dt, &y);
    }
    Ok(y)
}

/// Dormand-Prince 5(4) coefficients.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
/// Difference between the 5th- and embedded 4th-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn dopri5(
    f: &mut impl FnMut(f64, &[f64], &mut [f64]),
    mut y: Vec<f64>,
    config: &IntegratorConfig,
    on_step: &mut impl FnMut(f64, f64, &[f64]),
    filter: &mut impl FnMut(&mut [f64]) -> bool,
) -> Result<Vec<f64>, IntegrateError> {
    let n = y.len();
    let mut k: [Vec<f64>; 7] = core::array::from_fn(|_| vec![0.0; n]);
    let mut ynew = vec![0.0; n];
    let mut tmp = vec![0.0; n];
    let mut t = 0.0;
    let mut dt = config.dt0;
    let mut steps = 0usize;
    let mut facold: f64 = 1e-4;
    const BETA: f64 = 0.04;
    let expo1 = 0.2 - BETA * 0.75;
    let facc1 = 1.0 / 0.2;
    let facc2 = 1.0 / 10.0;

    f(t, &y, &mut k[0]);
    while t < config.t_end - 1e-14 {
        steps += 1;
        if steps > config.max_steps {
            return Err(IntegrateError::MaxStepsExceeded { t });
        }
        let target = next_halt(&config.halt_points, t, config.t_end);
        dt = dt.min(config.dt_max);
        let dt_proposal = dt;
        let mut clipped = false;
        if t + dt >= target - 1e-14 {
            dt = target - t;
            clipped = true;
        }
        // Stages 2..7 (k[6] is the FSAL stage at y_new).
        for s in 0..6 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    let a = A[s][j];
                    if a != 0.0 {
                        acc += a * kj[i];
                    }
                }
                tmp[i] = y[i] + dt * acc;
            }
            if s < 5 {
                f(t + C[s] * dt, &tmp, &mut k[s + 1]);
            } else {
                ynew.copy_from_slice(&tmp);
                f(t + dt, &ynew, &mut k[6]);
            }
        }
        // Error norm.
        let mut err_acc = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                if E[j] != 0.0 {
                    e += E[j] * kj[i];
                }
            }
            let sc = config.abs_tol + config.rel_tol * y[i].abs().max(ynew[i].abs());
            let r = dt * e / sc;
            err_acc += r * r;
        }
        let mut err = (err_acc / n as f64).sqrt();
        if !err.is_finite() {
            err = 1e10;
        }

        let fac11 = err.powf(expo1);
        if err <= 1.0 {
            // Accept; the PI factor uses the previous accepted error.
            let fac = (fac11 / facold.powf(BETA) / config.safety).max(facc2).min(facc1);
            facold = err.max(1e-4);
            t += dt;
            core::mem::swap(&mut y, &mut ynew);
            k.swap(0, 6); // FSAL
            let filtered = filter(&mut y);
            if !y.iter().all(|v| v.is_finite()) {
                return Err(IntegrateError::NonFiniteState { t });
            }
            on_step(t, dt, &y);
            if filtered && t < config.t_end - 1e-14 {
                // The FSAL stage belongs to the pre-filter state.
                f(t, &y, &mut k[0]);
            }
            let dt_next = dt / fac;
            // After a clipped landing on a halt point, resume from the
            // controller's pre-clip proposal.
            dt = if clipped { dt_proposal } else { dt_next };
            // Re-prime FSAL when a halt point may change the RHS (e.g. a
            // boundary schedule switching at that instant).
            if clipped && t < config.t_end - 1e-14 {
                f(t, &y, &mut k[0]);
            }
        } else {
            // Reject and shrink.
            let fac = (fac11 / config.safety).min(facc1);
            dt /= fac;
            if dt < config.dt_min {
                return Err(IntegrateError::DtUnderflow { t });
            }
            // k[0] still holds f(t, y).
        }
        if dt < config.dt_min {
            return Err(IntegrateError::DtUnderflow { t });
        }
    }
    Ok(y)
}
