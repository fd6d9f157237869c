use crate::error::{Error, Result};

type Envelope = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Two driving fields with Rabi frequencies `Ω₀(t)`, `Ω₁(t)` (rad/s), a
/// detuning `Δ` (rad/s) and a duration `T` (s).
pub struct PulseSpec {
    pub omega0: Envelope,
    pub omega1: Envelope,
    pub detuning: f64,
    pub duration: f64,
}

impl PulseSpec {
    pub fn new(
        omega0: impl Fn(f64) -> f64 + Send + Sync + 'static,
        omega1: impl Fn(f64) -> f64 + Send + Sync + 'static,
        detuning: f64,
        duration: f64,
    ) -> Self {
        Self { omega0: Box::new(omega0), omega1: Box::new(omega1), detuning, duration }
    }

    pub fn constant(omega0: f64, omega1: f64, detuning: f64, duration: f64) -> Self {
        Self::new(move |_| omega0, move |_| omega1, detuning, duration)
    }

    /// Gaussian envelopes centred at `T/2` with the given peak and width.
    pub fn gaussian(peak0: f64, peak1: f64, width: f64, detuning: f64, duration: f64) -> Self {
        let centre = duration / 2.0;
        let g = move |peak: f64| move |t: f64| peak * (-((t - centre) / width).powi(2) / 2.0).exp();
        Self::new(g(peak0), g(peak1), detuning, duration)
    }

    /// `√(Ω₀² + Ω₁² + (Δ/2)²) − Δ/2`, the gap between the two dark-ish
    /// eigenstates.
    pub fn integrand(&self, t: f64) -> f64 {
        let (a, b) = ((self.omega0)(t), (self.omega1)(t));
        let half = self.detuning / 2.0;
        (a * a + b * b + half * half).sqrt() - half
    }
}

const REL_TOL: f64 = 1e-9;
const MAX_DEPTH: u32 = 48;

/// Accumulated dynamic phase `Λ₂(T) = −∫₀ᵀ (√(Ω₀² + Ω₁² + (Δ/2)²) − Δ/2) dt`.
pub fn dynamic_phase(pulse: &PulseSpec) -> Result<f64> {
    if !(pulse.duration.is_finite() && pulse.duration > 0.0) {
        return Err(Error::InvalidPulse(format!("duration {} must be positive", pulse.duration)));
    }
    if !pulse.detuning.is_finite() {
        return Err(Error::InvalidPulse("detuning not finite".into()));
    }
    let f = |t: f64| -> Result<f64> {
        let v = pulse.integrand(t);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::InvalidPulse(format!("integrand not finite at t = {t:e}")))
        }
    };
    let integral = adaptive_simpson(&f, 0.0, pulse.duration)?;
    Ok(-integral)
}

fn adaptive_simpson(f: &impl Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    // coarse composite pass sets the absolute scale for the relative tolerance
    let panels = 64;
    let h = (b - a) / panels as f64;
    let mut coarse = 0.0;
    let mut pieces = Vec::with_capacity(panels);
    for k in 0..panels {
        let (x0, x1) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let xm = 0.5 * (x0 + x1);
        let (f0, fm, f1) = (f(x0)?, f(xm)?, f(x1)?);
        let s = h / 6.0 * (f0 + 4.0 * fm + f1);
        coarse += s.abs();
        pieces.push((x0, x1, f0, fm, f1, s));
    }
    let tol = (REL_TOL * coarse).max(f64::MIN_POSITIVE) / panels as f64;
    let mut total = 0.0;
    for (x0, x1, f0, fm, f1, s) in pieces {
        total += refine(f, x0, x1, f0, fm, f1, s, tol, MAX_DEPTH)?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> Result<f64>,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    Ok(refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
        + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}
