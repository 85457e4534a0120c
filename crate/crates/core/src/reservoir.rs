//! Exact single-excitation dynamics of N identical qubits sharing one
//! zero-temperature Lorentzian reservoir.
//!
//! With equal couplings only the symmetric collective state |φ₀⟩ talks to
//! the bath; the other N−1 Fourier states form a decoherence-free subspace.
//! Bob's qubit is site 1 and starts with all auxiliaries in the ground
//! state, so its excited amplitude is multiplied by
//!
//! ```text
//! G(t) = e^{−iΩ₀t} [ (N−1)/N + R(t)/N ],
//! R(t) = e^{−λt/2} ( cosh(Dt/2) + (λ/D) sinh(Dt/2) ),   D = √(λ² − 2Nγ₀λ)
//! ```
//!
//! which induces an amplitude-damping channel on Bob with p(t) = |G(t)|².

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Ellipsoid;
use crate::numerics::{kron, mat3_identity, CMatrix, C64, ONE, ZERO};

const SERIES_THRESHOLD: f64 = 1e-6;
const MAX_DFS_QUBITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReservoirParams {
    /// Spectral width λ.
    pub lambda: f64,
    /// Coupling strength γ₀.
    pub gamma0: f64,
    /// Transition / central frequency Ω₀.
    pub omega0: f64,
    /// Bob plus auxiliaries.
    pub n_qubits: usize,
}

impl ReservoirParams {
    pub fn new(lambda: f64, gamma0: f64, omega0: f64, n_qubits: usize) -> Result<Self> {
        let p = Self {
            lambda,
            gamma0,
            omega0,
            n_qubits,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(
                "lambda",
                format!("must be > 0, got {}", self.lambda),
            ));
        }
        if !(self.gamma0 > 0.0 && self.gamma0.is_finite()) {
            return Err(Error::invalid(
                "gamma0",
                format!("must be > 0, got {}", self.gamma0),
            ));
        }
        if !self.omega0.is_finite() {
            return Err(Error::invalid("omega0", "must be finite"));
        }
        if self.n_qubits < 1 {
            return Err(Error::invalid("n_qubits", "must be >= 1"));
        }
        Ok(())
    }

    pub fn with_n(self, n_qubits: usize) -> Self {
        Self { n_qubits, ..self }
    }

    /// D² = λ² − 2Nγ₀λ; negative in the non-Markovian (oscillating) regime.
    pub fn d_squared(&self) -> f64 {
        self.lambda * self.lambda - 2.0 * self.n_qubits as f64 * self.gamma0 * self.lambda
    }

    pub fn is_oscillatory(&self) -> bool {
        self.d_squared() < 0.0
    }
}

/// Lorentzian spectral density J(ω) = (1/2π) γ₀λ / ((ω−Ω₀)² + λ²).
pub fn lorentzian_j(omega: f64, params: &ReservoirParams) -> f64 {
    let d = omega - params.omega0;
    params.gamma0 * params.lambda / (2.0 * PI * (d * d + params.lambda * params.lambda))
}

/// C̃₀(t)/C̃₀(0) for the collective bright state. Real in both regimes.
pub fn collective_amplitude_ratio(t: f64, params: &ReservoirParams) -> C64 {
    let lambda = params.lambda;
    let d = C64::new(params.d_squared(), 0.0).sqrt();
    if d.norm() * t < SERIES_THRESHOLD {
        // cosh x + (λ/D) sinh x with x = Dt/2, expanded to second order in D.
        let x2 = params.d_squared() * t * t / 4.0;
        let v = (-lambda * t / 2.0).exp() * (1.0 + x2 / 2.0 + lambda * t / 2.0 * (1.0 + x2 / 6.0));
        return C64::new(v, 0.0);
    }
    // e^{−λt/2}(cosh + (λ/D) sinh) written with exponents whose real parts
    // are never positive, so large λt does not overflow.
    let ratio = lambda / d;
    let grow = ((d - lambda) * (t / 2.0)).exp();
    let decay = ((-d - lambda) * (t / 2.0)).exp();
    let v = ((ONE + ratio) * grow + (ONE - ratio) * decay) * 0.5;
    debug_assert!(v.im.abs() < 1e-12 * v.norm().max(1.0), "residue {}", v.im);
    C64::new(v.re, 0.0)
}

/// Survival amplitude of Bob's excited state.
pub fn survival_amplitude(t: f64, params: &ReservoirParams) -> C64 {
    let n = params.n_qubits as f64;
    let bracket = (n - 1.0) / n + collective_amplitude_ratio(t, params) / n;
    C64::from_polar(1.0, -params.omega0 * t) * bracket
}

pub fn survival_probability(t: f64, params: &ReservoirParams) -> f64 {
    survival_amplitude(t, params).norm_sqr()
}

/// Which Kraus representation of the damping channel to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KrausMode {
    /// K₀ = diag(1, √p): the phase of G is dropped.
    #[default]
    Paper,
    /// K₀ = diag(1, G): keeps the phase and sign of the amplitude.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausPair {
    pub k0: CMatrix,
    pub k1: CMatrix,
}

impl KrausPair {
    /// max |K₀†K₀ + K₁†K₁ − I|
    pub fn completeness_defect(&self) -> f64 {
        let sum = &self.k0.adjoint().matmul(&self.k0) + &self.k1.adjoint().matmul(&self.k1);
        sum.max_abs_diff(&CMatrix::identity(2))
    }
}

pub fn kraus_pair(g: C64, mode: KrausMode) -> Result<KrausPair> {
    let modulus = g.norm();
    if modulus > 1.0 + 1e-12 {
        return Err(Error::AmplitudeOutOfRange(modulus));
    }
    let p = g.norm_sqr().min(1.0);
    let diag = match mode {
        KrausMode::Paper => C64::new(p.sqrt(), 0.0),
        KrausMode::Exact => g,
    };
    let mut k0 = CMatrix::identity(2);
    k0[(1, 1)] = diag;
    let mut k1 = CMatrix::zeros(2, 2);
    k1[(0, 1)] = C64::new((1.0 - p).max(0.0).sqrt(), 0.0);
    Ok(KrausPair { k0, k1 })
}

/// The damping channel at one instant.
#[derive(Debug, Clone)]
pub struct ChannelSnapshot {
    pub t: f64,
    pub g: C64,
    pub p: f64,
    pub kraus: KrausPair,
}

impl ChannelSnapshot {
    pub fn at(t: f64, params: &ReservoirParams, mode: KrausMode) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(Error::invalid("t", format!("must be >= 0, got {t}")));
        }
        let g = survival_amplitude(t, params);
        Ok(Self {
            t,
            g,
            p: g.norm_sqr(),
            kraus: kraus_pair(g, mode)?,
        })
    }
}

/// Mixing weight q and superposition angle θ of the initial two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialStateParams {
    pub q: f64,
    pub theta: f64,
}

impl InitialStateParams {
    pub fn new(q: f64, theta: f64) -> Result<Self> {
        let p = Self { q, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.q) {
            return Err(Error::invalid(
                "q",
                format!("must lie in [0, 1], got {}", self.q),
            ));
        }
        if !(0.0..=PI).contains(&self.theta) {
            return Err(Error::invalid(
                "theta",
                format!("must lie in [0, pi], got {}", self.theta),
            ));
        }
        Ok(())
    }
}

/// q|φ⟩⟨φ| + (1−q)/4 I⊗I with |φ⟩ = cos(θ/2)|10⟩ + sin(θ/2)|01⟩.
pub fn initial_state(params: &InitialStateParams) -> Result<CMatrix> {
    params.validate()?;
    let c = C64::new((params.theta / 2.0).cos(), 0.0);
    let s = C64::new((params.theta / 2.0).sin(), 0.0);
    // index = 2·A + B
    let phi = [ZERO, s, c, ZERO];
    let pure = CMatrix::projector(&phi).scale_real(params.q);
    let noise = CMatrix::identity(4).scale_real((1.0 - params.q) / 4.0);
    Ok(&pure + &noise)
}

/// Applies the channel to Bob only: Σ (I⊗Kᵢ) ρ (I⊗Kᵢ)†.
pub fn evolve_bipartite(rho0: &CMatrix, kraus: &KrausPair) -> CMatrix {
    let id = CMatrix::identity(2);
    let a = kron(&id, &kraus.k0).sandwich(rho0);
    let b = kron(&id, &kraus.k1).sandwich(rho0);
    &a + &b
}

/// Bob's steering ellipsoid for the damped initial-state family, in closed
/// form. Axes are x, y, z; the center sits on the z axis.
pub fn closed_form_ellipsoid(params: &InitialStateParams, p: f64) -> Result<Ellipsoid> {
    params.validate()?;
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
    }
    let q = params.q;
    let c = params.theta.cos();
    let denom = 1.0 - q * q * c * c;
    if denom <= 1e-12 {
        return Err(Error::DegenerateDenominator(denom));
    }
    let center_z = (q * q * c * (p * c - p - c) + p * q * c - p + 1.0) / denom;
    let s12 = q * p.sqrt() * params.theta.sin() / denom.sqrt();
    let s3 = q * p * (1.0 - q * c * c) / denom;
    Ok(Ellipsoid {
        center: [0.0, 0.0, center_z],
        semiaxes: [s12, s12, s3],
        orientation: mat3_identity(),
    })
}

/// Columns are the collective states |φ_l⟩ in the site basis:
/// U[m][l] = e^{2πi·ml/N}/√N.
pub fn dfs_transform(n: usize) -> Result<CMatrix> {
    if !(1..=MAX_DFS_QUBITS).contains(&n) {
        return Err(Error::invalid(
            "n_qubits",
            format!("must lie in 1..={MAX_DFS_QUBITS}, got {n}"),
        ));
    }
    let norm = 1.0 / (n as f64).sqrt();
    let mut u = CMatrix::zeros(n, n);
    for m in 0..n {
        for l in 0..n {
            let angle = 2.0 * PI * ((m * l) % n) as f64 / n as f64;
            u[(m, l)] = C64::from_polar(norm, angle);
        }
    }
    Ok(u)
}

/// Site amplitudes χ_j(t) from χ_j(0): go to the collective basis, damp the
/// bright component, rotate every component by e^{−iΩ₀t}, come back.
pub fn site_amplitudes(t: f64, initial: &[C64], params: &ReservoirParams) -> Result<Vec<C64>> {
    if initial.len() != params.n_qubits {
        return Err(Error::Dimension {
            expected: format!("{} amplitudes", params.n_qubits),
            got: initial.len().to_string(),
        });
    }
    let norm: f64 = initial.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm > 1.0 + 1e-12 {
        return Err(Error::invalid("initial", format!("norm {norm} exceeds 1")));
    }
    if !(t >= 0.0) {
        return Err(Error::invalid("t", format!("must be >= 0, got {t}")));
    }
    let u = dfs_transform(params.n_qubits)?;
    let mut collective = u.adjoint().mat_vec(initial);
    let phase = C64::from_polar(1.0, -params.omega0 * t);
    collective[0] *= collective_amplitude_ratio(t, params);
    for c in &mut collective {
        *c *= phase;
    }
    Ok(u.mat_vec(&collective))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{bloch_decompose, steering_ellipsoid, MARGINAL_EPS};
    use crate::numerics::{partial_trace, Party};

    fn defaults(n: usize) -> ReservoirParams {
        ReservoirParams::new(1.0, 8.0, 1.0, n).unwrap()
    }

    #[test]
    fn spectral_density() {
        let p = defaults(1);
        assert!((lorentzian_j(1.0, &p) - 8.0 / (2.0 * PI)).abs() < 1e-15);
        for x in [0.1, 0.7, 3.0, 40.0] {
            assert_eq!(lorentzian_j(1.0 + x, &p), lorentzian_j(1.0 - x, &p));
        }
        // ∫J = γ₀/2 via the antiderivative (γ₀/2π)·atan((ω−Ω₀)/λ)
        let w = 1e7;
        let integral = 8.0 / (2.0 * PI) * 2.0 * (w / 1.0f64).atan();
        assert!((integral - 4.0).abs() < 1e-6);
    }

    #[test]
    fn ratio_examples() {
        let p = defaults(1);
        assert_eq!(collective_amplitude_ratio(0.0, &p), ONE);
        let w = 15f64.sqrt();
        let want = (-0.4f64).exp() * ((w * 0.4).cos() + (w * 0.4).sin() / w);
        let got = collective_amplitude_ratio(0.8, &p);
        assert!((got.re - want).abs() < 1e-14);
        assert!((got.re - 0.1875).abs() < 5e-4);
        // first zero: tan(√15 t/2) = −√15
        let t0 = 2.0 * (PI - w.atan()) / w;
        assert!((t0 - 0.9417).abs() < 1e-4);
        assert!(collective_amplitude_ratio(t0, &p).re.abs() < 1e-14);
    }

    #[test]
    fn ratio_continuous_across_regime_boundary() {
        // 2Nγ₀λ = λ² ± 1e-8 with λ = 1, N = 1
        let below = ReservoirParams::new(1.0, (1.0 - 1e-8) / 2.0, 1.0, 1).unwrap();
        let above = ReservoirParams::new(1.0, (1.0 + 1e-8) / 2.0, 1.0, 1).unwrap();
        assert!(below.d_squared() > 0.0 && above.d_squared() < 0.0);
        for t in [0.0, 0.3, 1.0, 4.0, 12.0] {
            let limit = (-t / 2.0f64).exp() * (1.0 + t / 2.0);
            assert!((collective_amplitude_ratio(t, &below).re - limit).abs() < 1e-6);
            assert!((collective_amplitude_ratio(t, &above).re - limit).abs() < 1e-6);
        }
    }

    #[test]
    fn ratio_does_not_overflow() {
        let p = ReservoirParams::new(50.0, 0.1, 1.0, 1).unwrap();
        let v = collective_amplitude_ratio(100.0, &p);
        assert!(v.re.is_finite() && v.re > 0.0);
    }

    #[test]
    fn survival_examples() {
        for n in [1, 3, 6] {
            assert!((survival_amplitude(0.0, &defaults(n)) - ONE).norm() < 1e-15);
        }
        let huge = defaults(1_000_000);
        for t in [0.5, 2.0, 10.0] {
            assert!(survival_amplitude(t, &huge).norm() > 1.0 - 1e-5);
        }
        let g = survival_amplitude(20.0, &defaults(3));
        assert!((g.norm() - 2.0 / 3.0).abs() < 1e-4);
        assert!((g.norm_sqr() - 4.0 / 9.0).abs() < 1e-4);
    }

    #[test]
    fn probability_is_phase_free() {
        let a = ReservoirParams::new(1.0, 8.0, 0.0, 3).unwrap();
        let b = ReservoirParams::new(1.0, 8.0, 17.5, 3).unwrap();
        for t in [0.1, 0.8, 1.6, 5.0] {
            assert!((survival_probability(t, &a) - survival_probability(t, &b)).abs() < 1e-15);
        }
    }

    #[test]
    fn markovian_limit() {
        let p = ReservoirParams::new(50.0, 0.1, 1.0, 1).unwrap();
        for i in 0..=200 {
            let t = i as f64 * 0.05;
            assert!((survival_probability(t, &p) - (-0.1 * t).exp()).abs() < 0.02);
        }
    }

    #[test]
    fn kraus_examples() {
        let k = kraus_pair(ONE, KrausMode::Paper).unwrap();
        assert_eq!(k.k0, CMatrix::identity(2));
        assert_eq!(k.k1, CMatrix::zeros(2, 2));

        let k = kraus_pair(ZERO, KrausMode::Exact).unwrap();
        assert_eq!(k.k0, CMatrix::diag_real(&[1.0, 0.0]));
        assert_eq!(k.k1[(0, 1)], ONE);

        for g in [
            C64::new(0.3, -0.4),
            C64::new(-0.9, 0.0),
            C64::from_polar(1.0, 2.0),
        ] {
            for mode in [KrausMode::Paper, KrausMode::Exact] {
                assert!(kraus_pair(g, mode).unwrap().completeness_defect() < 1e-12);
            }
        }
        assert!(matches!(
            kraus_pair(C64::new(1.1, 0.0), KrausMode::Paper),
            Err(Error::AmplitudeOutOfRange(_))
        ));
    }

    #[test]
    fn snapshot_invariants() {
        let params = defaults(3);
        for i in 0..100 {
            let s = ChannelSnapshot::at(i as f64 * 0.05, &params, KrausMode::Exact).unwrap();
            assert!((s.p - s.g.norm_sqr()).abs() < 1e-14);
            assert!(s.p <= 1.0 + 1e-12);
            assert!(s.kraus.completeness_defect() < 1e-12);
        }
        assert!(ChannelSnapshot::at(-1.0, &params, KrausMode::Paper).is_err());
    }

    #[test]
    fn initial_state_examples() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = initial_state(&InitialStateParams::new(1.0, PI / 2.0).unwrap()).unwrap();
        let want = CMatrix::projector(&[ZERO, C64::new(s, 0.0), C64::new(s, 0.0), ZERO]);
        assert!(bell.max_abs_diff(&want) < 1e-15);

        let mixed = initial_state(&InitialStateParams::new(0.0, 1.0).unwrap()).unwrap();
        assert!(mixed.max_abs_diff(&CMatrix::identity(4).scale_real(0.25)) < 1e-16);

        let ket10 = initial_state(&InitialStateParams::new(1.0, 0.0).unwrap()).unwrap();
        assert!(ket10.max_abs_diff(&CMatrix::projector(&[ZERO, ZERO, ONE, ZERO])) < 1e-16);

        assert!(InitialStateParams::new(1.2, 0.0).is_err());
        assert!(InitialStateParams::new(0.5, 4.0).is_err());
    }

    #[test]
    fn evolve_examples() {
        let init = initial_state(&InitialStateParams::new(0.8, PI / 3.0).unwrap()).unwrap();
        let same = evolve_bipartite(&init, &kraus_pair(ONE, KrausMode::Paper).unwrap());
        assert!(same.max_abs_diff(&init) < 1e-16);

        let ket11 = CMatrix::projector(&[ZERO, ZERO, ZERO, ONE]);
        let k = kraus_pair(C64::new(0.5, 0.0), KrausMode::Paper).unwrap();
        let out = evolve_bipartite(&ket11, &k);
        let want = kron(
            &CMatrix::diag_real(&[0.0, 1.0]),
            &CMatrix::diag_real(&[0.75, 0.25]),
        );
        assert!(out.max_abs_diff(&want) < 1e-15);

        let dead = evolve_bipartite(&init, &kraus_pair(ZERO, KrausMode::Paper).unwrap());
        let ra0 = partial_trace(&init, Party::A).unwrap();
        assert!(partial_trace(&dead, Party::A).unwrap().max_abs_diff(&ra0) < 1e-15);
        let rb = partial_trace(&dead, Party::B).unwrap();
        assert!(rb.max_abs_diff(&CMatrix::diag_real(&[1.0, 0.0])) < 1e-15);
        let e =
            steering_ellipsoid(&bloch_decompose(&dead).unwrap(), Party::B, MARGINAL_EPS).unwrap();
        assert!(e.max_semiaxis() < 1e-7);
        assert!((e.center[2] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn closed_form_examples() {
        for theta in [0.3, PI / 3.0, PI / 2.0, 2.5] {
            let e =
                closed_form_ellipsoid(&InitialStateParams::new(1.0, theta).unwrap(), 1.0).unwrap();
            for k in 0..3 {
                assert!((e.semiaxes[k] - 1.0).abs() < 1e-14);
                assert!(e.center[k].abs() < 1e-14);
            }
        }
        for (q, p) in [(0.3, 0.2), (0.8, 0.7), (0.99, 1.0)] {
            let e = closed_form_ellipsoid(&InitialStateParams::new(q, 0.0).unwrap(), p).unwrap();
            assert_eq!(e.semiaxes[0], 0.0);
            assert!((e.semiaxes[2] - q * p / (1.0 + q)).abs() < 1e-15);
        }
        let (q, p) = (0.8, 0.7);
        let e = closed_form_ellipsoid(&InitialStateParams::new(q, PI / 2.0).unwrap(), p).unwrap();
        assert!((e.semiaxes[0] - q * p.sqrt()).abs() < 1e-15);
        assert!((e.semiaxes[2] - q * p).abs() < 1e-15);
        assert!((e.center[2] - (1.0 - p)).abs() < 1e-15);

        assert!(matches!(
            closed_form_ellipsoid(&InitialStateParams::new(1.0, 0.0).unwrap(), 0.5),
            Err(Error::DegenerateDenominator(_))
        ));
    }

    #[test]
    fn dfs_examples() {
        assert_eq!(dfs_transform(1).unwrap(), CMatrix::identity(1));
        let u2 = dfs_transform(2).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let want = CMatrix::from_real(2, 2, &[s, s, s, -s]).unwrap();
        assert!(u2.max_abs_diff(&want) < 1e-15);
        for n in 1..=16 {
            let u = dfs_transform(n).unwrap();
            assert!(u.adjoint().matmul(&u).max_abs_diff(&CMatrix::identity(n)) < 1e-12);
        }
        assert!(dfs_transform(0).is_err());
        assert!(dfs_transform(17).is_err());
    }

    #[test]
    fn site_amplitude_examples() {
        for n in [1, 2, 3, 6] {
            let params = defaults(n);
            let mut init = vec![ZERO; n];
            init[0] = ONE;
            for t in [0.0, 0.4, 0.8, 1.6, 5.0] {
                let chi = site_amplitudes(t, &init, &params).unwrap();
                assert!((chi[0] - survival_amplitude(t, &params)).norm() < 1e-13);
                let total: f64 = chi.iter().map(|z| z.norm_sqr()).sum();
                assert!(total <= 1.0 + 1e-12);
            }
        }
        let params = defaults(4);
        let init = vec![
            C64::new(0.5, 0.1),
            C64::new(-0.2, 0.3),
            ZERO,
            C64::new(0.1, -0.4),
        ];
        let same = site_amplitudes(0.0, &init, &params).unwrap();
        for (a, b) in same.iter().zip(&init) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    #[test]
    fn long_time_site_populations() {
        // N = 3, excitation on Bob: the bright component (weight 1/3) decays
        // away, the two dark components keep 2/3 of the norm; Bob keeps
        // |2/3|² and each auxiliary |1/3|².
        let params = defaults(3);
        let mut init = vec![ZERO; 3];
        init[0] = ONE;
        let chi = site_amplitudes(20.0, &init, &params).unwrap();
        let pops: Vec<f64> = chi.iter().map(|z| z.norm_sqr()).collect();
        assert!((pops[0] - 4.0 / 9.0).abs() < 1e-4);
        assert!((pops[1] - 1.0 / 9.0).abs() < 1e-4);
        assert!((pops[2] - 1.0 / 9.0).abs() < 1e-4);
        assert!((pops.iter().sum::<f64>() - 2.0 / 3.0).abs() < 1e-4);
    }
}
