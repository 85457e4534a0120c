//! Independent numerical routes to the bright-state amplitude C̃₀(t).
//!
//! Neither solver touches the closed-form amplitude in
//! [`crate::reservoir`]; they start from the microscopic equations.
//!
//! # Memory kernel
//!
//! The amplitude obeys dC̃₀/dt = −∫₀ᵗ f(t−t′) C̃₀(t′) dt′ with
//! f(τ) = ∫ N·J(ω) e^{i(Ω₀−ω)τ} dω. For the Lorentzian
//! J(ω) = (1/2π) γ₀λ / ((ω−Ω₀)² + λ²), closing the contour in the lower
//! half plane (τ > 0) picks up the pole at ω = Ω₀ − iλ:
//!
//! ```text
//! f(τ) = N γ₀λ/(2π) · (π/λ) e^{−λτ} = (N γ₀ / 2) e^{−λτ}.
//! ```
//!
//! Because the kernel is a single exponential, z(t) = ∫₀ᵗ f(t−t′)C̃₀(t′)dt′
//! satisfies dz/dt = f(0)·C̃₀ − λz, which turns the integro-differential
//! equation into the local pair
//!
//! ```text
//! dC̃₀/dt = −z,     dz/dt = (Nγ₀/2) C̃₀ − λ z.
//! ```
//!
//! [`kernel_quadrature`] checks the kernel against direct trapezoid
//! quadrature of the defining integral.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{C64, ONE, ZERO};
use crate::reservoir::{collective_amplitude_ratio, lorentzian_j, ReservoirParams};

#[derive(Debug, Clone, PartialEq)]
pub struct AmplitudeTrace {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
}

impl AmplitudeTrace {
    /// Every `stride`-th sample, starting with the first.
    pub fn subsample(&self, stride: usize) -> AmplitudeTrace {
        AmplitudeTrace {
            times: self.times.iter().step_by(stride).copied().collect(),
            values: self.values.iter().step_by(stride).copied().collect(),
        }
    }

    /// Samples with t ≤ `t_end`.
    pub fn truncate(&self, t_end: f64) -> AmplitudeTrace {
        let n = self
            .times
            .iter()
            .take_while(|&&t| t <= t_end + 1e-12)
            .count();
        AmplitudeTrace {
            times: self.times[..n].to_vec(),
            values: self.values[..n].to_vec(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// The closed-form C̃₀(t)/C̃₀(0) sampled on `times`.
pub fn analytic_trace(params: &ReservoirParams, times: &[f64]) -> AmplitudeTrace {
    AmplitudeTrace {
        times: times.to_vec(),
        values: times
            .iter()
            .map(|&t| collective_amplitude_ratio(t, params))
            .collect(),
    }
}

/// f(τ) = (Nγ₀/2) e^{−λτ}
pub fn lorentzian_kernel(tau: f64, params: &ReservoirParams) -> f64 {
    params.n_qubits as f64 * params.gamma0 / 2.0 * (-params.lambda * tau).exp()
}

/// Trapezoid quadrature of ∫ N·J(ω) e^{i(Ω₀−ω)τ} dω over
/// [Ω₀ − window, Ω₀ + window] with `intervals` panels.
pub fn kernel_quadrature(tau: f64, params: &ReservoirParams, window: f64, intervals: usize) -> C64 {
    let h = 2.0 * window / intervals as f64;
    let n = params.n_qubits as f64;
    let mut acc = ZERO;
    for i in 0..=intervals {
        let detuning = -window + i as f64 * h;
        let w = if i == 0 || i == intervals { 0.5 } else { 1.0 };
        let omega = params.omega0 + detuning;
        acc += C64::from_polar(w * n * lorentzian_j(omega, params), -detuning * tau);
    }
    acc * h
}

fn time_grid(t_max: f64, dt: f64) -> Vec<f64> {
    let steps = (t_max / dt).round() as usize;
    (0..=steps).map(|k| k as f64 * dt).collect()
}

/// Classic fixed-step RK4 over a complex state vector.
fn rk4<F>(y0: Vec<C64>, times: &[f64], rhs: F) -> Vec<Vec<C64>>
where
    F: Fn(&[C64], &mut [C64]),
{
    let n = y0.len();
    let mut out = Vec::with_capacity(times.len());
    let mut y = y0;
    let (mut k1, mut k2, mut k3, mut k4) =
        (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
    let mut tmp = vec![ZERO; n];
    out.push(y.clone());
    for w in times.windows(2) {
        let h = w[1] - w[0];
        rhs(&y, &mut k1);
        for i in 0..n {
            tmp[i] = y[i] + k1[i] * (h / 2.0);
        }
        rhs(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = y[i] + k2[i] * (h / 2.0);
        }
        rhs(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = y[i] + k3[i] * h;
        }
        rhs(&tmp, &mut k4);
        for i in 0..n {
            y[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
        out.push(y.clone());
    }
    out
}

/// Solves the integro-differential amplitude equation through its local
/// (C̃₀, z) reduction with fixed-step RK4.
pub fn volterra_oracle(params: &ReservoirParams, t_max: f64, dt: f64) -> Result<AmplitudeTrace> {
    params.validate()?;
    if !(t_max > 0.0) || !(dt > 0.0) || dt > 1e-3 * t_max + 1e-15 {
        return Err(Error::invalid(
            "dt",
            format!("need 0 < dt <= 1e-3 * t_max, got dt = {dt}, t_max = {t_max}"),
        ));
    }
    let times = time_grid(t_max, dt);
    let f0 = lorentzian_kernel(0.0, params);
    let lambda = params.lambda;
    let states = rk4(vec![ONE, ZERO], &times, |y, dy| {
        dy[0] = -y[1];
        dy[1] = y[0] * f0 - y[1] * lambda;
    });
    Ok(AmplitudeTrace {
        times,
        values: states.into_iter().map(|s| s[0]).collect(),
    })
}

/// A finite set of bath modes standing in for the continuum. Couplings are
/// the single-qubit g_k; the collective coupling is √N·g_k.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscretizedBath {
    pub frequencies: Vec<f64>,
    pub couplings: Vec<f64>,
}

impl DiscretizedBath {
    /// `modes` frequencies at the midpoints of a uniform grid on
    /// [Ω₀ − window, Ω₀ + window], with |g_k|² = J(ω_k)·Δω.
    pub fn uniform(params: &ReservoirParams, modes: usize, window: f64) -> Self {
        let dw = 2.0 * window / modes as f64;
        let frequencies: Vec<f64> = (0..modes)
            .map(|k| params.omega0 - window + (k as f64 + 0.5) * dw)
            .collect();
        let couplings = frequencies
            .iter()
            .map(|&w| (lorentzian_j(w, params) * dw).sqrt())
            .collect();
        Self {
            frequencies,
            couplings,
        }
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    /// Σ|g_k|², the discrete stand-in for ∫J dω = γ₀/2.
    pub fn total_weight(&self) -> f64 {
        self.couplings.iter().map(|g| g * g).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            frequencies: self.frequencies.clone(),
            couplings: self.couplings.iter().map(|g| g * factor).collect(),
        }
    }
}

/// Integrates the bright-state amplitude coupled to every mode of `bath`.
///
/// State layout: index 0 is C̃₀, index k+1 is the mode amplitude in the
/// frame rotating at Ω₀, so the generator is time independent:
///
/// ```text
/// dC̃₀/dt = −i Σ G_k E_k,     dE_k/dt = −i(ω_k − Ω₀) E_k − i G_k C̃₀
/// ```
///
/// Returns the C̃₀ trace and the largest deviation of the total norm from 1.
pub fn evolve_bath(
    bath: &DiscretizedBath,
    n_qubits: usize,
    omega0: f64,
    t_max: f64,
    dt: f64,
) -> (AmplitudeTrace, f64) {
    let times = time_grid(t_max, dt);
    let collective = (n_qubits as f64).sqrt();
    let g: Vec<f64> = bath.couplings.iter().map(|c| c * collective).collect();
    let detuning: Vec<f64> = bath.frequencies.iter().map(|w| w - omega0).collect();
    let mut y0 = vec![ZERO; bath.len() + 1];
    y0[0] = ONE;
    let states = rk4(y0, &times, |y, dy| {
        let mut drive = ZERO;
        for k in 0..g.len() {
            drive += y[k + 1] * g[k];
            dy[k + 1] = C64::new(0.0, -1.0) * (y[k + 1] * detuning[k] + y[0] * g[k]);
        }
        dy[0] = C64::new(0.0, -1.0) * drive;
    });
    let norm_defect = states
        .iter()
        .map(|s| (s.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs())
        .fold(0.0, f64::max);
    let values = states.into_iter().map(|s| s[0]).collect();
    (AmplitudeTrace { times, values }, norm_defect)
}

/// Microscopic oracle: `modes` explicit bath modes on a uniform grid of
/// half-width `window` around Ω₀, integrated with RK4.
pub fn discrete_modes_oracle(
    params: &ReservoirParams,
    modes: usize,
    window: f64,
    t_max: f64,
    dt: f64,
) -> Result<AmplitudeTrace> {
    params.validate()?;
    if modes < 500 {
        return Err(Error::invalid(
            "modes",
            format!("need at least 500, got {modes}"),
        ));
    }
    if window < 20.0 * params.lambda {
        return Err(Error::invalid(
            "window",
            format!("need at least 20 lambda, got {window}"),
        ));
    }
    if !(t_max > 0.0) || !(dt > 0.0) {
        return Err(Error::invalid("dt", "t_max and dt must be positive"));
    }
    let bath = DiscretizedBath::uniform(params, modes, window);
    Ok(evolve_bath(&bath, params.n_qubits, params.omega0, t_max, dt).0)
}

/// max_k |a_k − b_k| on a shared time grid.
pub fn compare_traces(a: &AmplitudeTrace, b: &AmplitudeTrace) -> Result<f64> {
    if a.times.len() != b.times.len() || a.values.len() != b.values.len() {
        return Err(Error::GridMismatch);
    }
    let same_grid = a
        .times
        .iter()
        .zip(&b.times)
        .all(|(x, y)| (x - y).abs() <= 1e-12 * x.abs().max(1.0));
    if !same_grid {
        return Err(Error::GridMismatch);
    }
    Ok(a.values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max))
}

/// Kernel checked against quadrature at `samples` lags in [0, τ_max]:
/// returns the largest absolute deviation.
pub fn kernel_gate(params: &ReservoirParams, window: f64, samples: usize, tau_max: f64) -> f64 {
    let intervals = (window * 400.0).ceil() as usize;
    (0..samples)
        .map(|i| {
            let tau = tau_max * i as f64 / (samples - 1).max(1) as f64;
            (kernel_quadrature(tau, params, window, intervals) - lorentzian_kernel(tau, params))
                .norm()
        })
        .fold(0.0, f64::max)
}

/// Fraction of ∫J dω that a window of half-width `window` misses.
pub fn window_tail_fraction(params: &ReservoirParams, window: f64) -> f64 {
    1.0 - 2.0 / PI * (window / params.lambda).atan()
}
