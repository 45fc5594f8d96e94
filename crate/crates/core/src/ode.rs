//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.
//!
//! Used for the radial ground-state shooting and for boundary geodesics.
//! The integrator can run forward or backward in the independent variable
//! and always lands exactly on requested output abscissae.

/// Tolerances and step controls.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step magnitude.
    pub h_init: f64,
    /// Largest allowed step magnitude.
    pub h_max: f64,
    /// Maximum number of accepted + rejected steps per `advance_to` call.
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-12, h_init: 1e-3, h_max: 0.25, max_steps: 200_000 }
    }
}

/// Reason an integration stopped early.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OdeStop {
    /// Reached the target abscissa.
    Reached,
    /// The step callback requested termination.
    Event,
}

/// Integration failure.
#[derive(Debug, Clone, PartialEq)]
pub enum OdeFailure {
    StepBudget,
    StepUnderflow(f64),
    NonFinite(f64),
}

// Dormand–Prince tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrator state.
#[derive(Debug, Clone)]
pub struct Dopri5<const N: usize> {
    pub t: f64,
    pub y: [f64; N],
    h: f64,
    opts: OdeOptions,
    /// Total accepted steps.
    pub accepted: usize,
}

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

impl<const N: usize> Dopri5<N> {
    pub fn new(t0: f64, y0: [f64; N], opts: OdeOptions) -> Self {
        Dopri5 { t: t0, y: y0, h: opts.h_init, opts, accepted: 0 }
    }

    /// Integrate to `t_end` (either direction). After every accepted step the
    /// callback sees `(t, y)`; returning `true` stops integration there.
    pub fn advance_to<F, C>(&mut self, f: &F, t_end: f64, mut on_step: C) -> Result<OdeStop, OdeFailure>
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
        C: FnMut(f64, &[f64; N]) -> bool,
    {
        let dir = if t_end >= self.t { 1.0 } else { -1.0 };
        let mut steps = 0usize;
        let mut h = self.h.abs().min(self.opts.h_max);
        while (t_end - self.t) * dir > 0.0 {
            steps += 1;
            if steps > self.opts.max_steps {
                return Err(OdeFailure::StepBudget);
            }
            let remaining = (t_end - self.t).abs();
            let mut last = false;
            if h >= remaining {
                h = remaining;
                last = true;
            }
            let hs = h * dir;
            let (y_new, err) = self.trial(f, hs);
            if !err.is_finite() || y_new.iter().any(|v| !v.is_finite()) {
                if h < 1e-14 * (1.0 + self.t.abs()) {
                    return Err(OdeFailure::NonFinite(self.t));
                }
                h *= 0.2;
                continue;
            }
            if err <= 1.0 {
                self.t = if last { t_end } else { self.t + hs };
                self.y = y_new;
                self.accepted += 1;
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    h = (h * fac).min(self.opts.h_max);
                } else {
                    // Keep the step that would have been used, so that dense
                    // output requests do not shrink the step permanently.
                    self.h = (h * fac).max(self.h.min(self.opts.h_max)).min(self.opts.h_max);
                }
                if on_step(self.t, &self.y) {
                    if !last {
                        self.h = h;
                    }
                    return Ok(OdeStop::Event);
                }
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
                if h < 1e-14 * (1.0 + self.t.abs()) {
                    return Err(OdeFailure::StepUnderflow(self.t));
                }
            }
        }
        Ok(OdeStop::Reached)
    }

    fn trial<F>(&self, f: &F, h: f64) -> ([f64; N], f64)
    where
        F: Fn(f64, &[f64; N]) -> [f64; N],
    {
        let t = self.t;
        let y = &self.y;
        let k1 = f(t, y);
        let k2 = f(t + C2 * h, &axpy(y, h, &[(A21, &k1)]));
        let k3 = f(t + C3 * h, &axpy(y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * h, &axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * h, &axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + h, &axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y5 = axpy(y, h, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + h, &y5);
        let mut err2 = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = self.opts.atol + self.opts.rtol * y[i].abs().max(y5[i].abs());
            err2 += (e / sc) * (e / sc);
        }
        (y5, (err2 / N as f64).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth_forward_and_back() {
        let f = |_t: f64, y: &[f64; 1]| [y[0]];
        let mut s = Dopri5::new(0.0, [1.0], OdeOptions::default());
        s.advance_to(&f, 2.0, |_, _| false).unwrap();
        assert!((s.y[0] - 2f64.exp()).abs() < 1e-8);
        s.advance_to(&f, 0.0, |_, _| false).unwrap();
        assert!((s.y[0] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn harmonic_oscillator_lands_on_outputs() {
        let f = |_t: f64, y: &[f64; 2]| [y[1], -y[0]];
        let mut s = Dopri5::new(0.0, [0.0, 1.0], OdeOptions::default());
        for k in 1..=20 {
            let t = 0.3 * k as f64;
            s.advance_to(&f, t, |_, _| false).unwrap();
            assert_eq!(s.t, t);
            assert!((s.y[0] - t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn event_stops_integration() {
        let f = |_t: f64, _y: &[f64; 1]| [-1.0];
        let mut s = Dopri5::new(0.0, [1.0], OdeOptions::default());
        let stop = s.advance_to(&f, 10.0, |_, y| y[0] < 0.0).unwrap();
        assert_eq!(stop, OdeStop::Event);
        assert!(s.t > 1.0 && s.t < 10.0);
    }
}
