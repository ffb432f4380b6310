//! Adaptive classical RK4 with step doubling for complex linear systems.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial trial step; adapted from there.
    pub h0: f64,
    pub h_max: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h0: 1e-2, h_max: f64::INFINITY }
    }
}

type State = DVector<Complex64>;

fn rk4_step<F: Fn(f64, &State) -> State>(f: &F, t: f64, y: &State, h: f64) -> State {
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, &(y + &k1 * Complex64::from(0.5 * h)));
    let k3 = f(t + 0.5 * h, &(y + &k2 * Complex64::from(0.5 * h)));
    let k4 = f(t + h, &(y + &k3 * Complex64::from(h)));
    y + (k1 + k2 * Complex64::from(2.0) + k3 * Complex64::from(2.0) + k4) * Complex64::from(h / 6.0)
}

fn max_abs(v: &State) -> f64 {
    v.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Integrate `dy/dt = f(t, y)` and record `y` at each requested time.
///
/// `times` must be non-decreasing and start at or after `t0`. `post_step`
/// runs after every accepted step (used to re-project onto constraints).
pub fn integrate<F, P>(
    f: F,
    t0: f64,
    y0: &State,
    times: &[f64],
    opts: &OdeOptions,
    mut post_step: P,
) -> Result<Vec<State>>
where
    F: Fn(f64, &State) -> State,
    P: FnMut(&mut State),
{
    let mut out = Vec::with_capacity(times.len());
    let mut t = t0;
    let mut y = y0.clone();
    let mut h = opts.h0.min(opts.h_max);
    for &target in times {
        if target < t - 1e-12 * t.abs().max(1.0) {
            return Err(Error::InvalidParameter("output times must be non-decreasing".into()));
        }
        while target - t > 1e-14 * t.abs().max(1.0) {
            let step = h.min(target - t);
            let full = rk4_step(&f, t, &y, step);
            let half = rk4_step(&f, t, &y, 0.5 * step);
            let two = rk4_step(&f, t + 0.5 * step, &half, 0.5 * step);
            let diff = &two - &full;
            let err = max_abs(&diff) / 15.0;
            let scale = opts.atol + opts.rtol * max_abs(&two);
            if err <= scale {
                y = two + diff * Complex64::from(1.0 / 15.0);
                t += step;
                post_step(&mut y);
            }
            let factor = if err == 0.0 { 4.0 } else { (0.9 * (scale / err).powf(0.2)).clamp(0.2, 4.0) };
            // a step clipped to hit an output time says nothing about h
            if err > scale || step >= h {
                h = (step * factor).min(opts.h_max);
            }
            if h < 1e-13 * t.abs().max(1.0) {
                return Err(Error::StepUnderflow { t, h });
            }
        }
        out.push(y.clone());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay_and_rotation() {
        let lam = Complex64::new(-0.3, -2.0);
        let y0 = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let times: Vec<f64> = (0..=10).map(|k| k as f64).collect();
        let ys = integrate(|_, y| y * lam, 0.0, &y0, &times, &OdeOptions::default(), |_| {}).unwrap();
        for (t, y) in times.iter().zip(&ys) {
            let exact = (lam * t).exp();
            assert!((y[0] - exact).norm() < 1e-9, "t = {t}");
        }
    }

    #[test]
    fn stiff_underflow_is_reported() {
        let y0 = DVector::from_element(1, Complex64::new(1.0, 0.0));
        let opts = OdeOptions { rtol: 1e-300, atol: 0.0, ..Default::default() };
        let r = integrate(|_, y| y.map(|z| z * z * z), 0.0, &y0, &[10.0], &opts, |_| {});
        assert!(matches!(r, Err(Error::StepUnderflow { .. })));
    }
}
