//! Coherence of steered states and maximal steered coherence (MSC).
//!
//! MSC is the largest l1 coherence, measured in the eigenbasis of Bob's
//! unsteered marginal, among all states Alice can steer Bob to. Two routes
//! are provided:
//!
//! * [`msc_bruteforce`] searches Alice's measurements directly.
//! * [`msc_closed_form`] reads it off the steering-ellipsoid semiaxes.
//!
//! The search only visits rank-1 projective elements `M = (I + n·σ)/2`.
//! Any POVM element is a positive combination of such projectors, the
//! steered state it produces is the matching convex mixture of projector-
//! steered states, and coherence is convex, so the supremum is reached on
//! the rank-1 elements.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::numerics::{
    dot3, hermitian_eig, kron, norm3, partial_trace, pauli, CMatrix, Party, Vec3, C64, DEFAULT_TOL,
    ONE, ZERO,
};

/// Eigenvalue gap below which ρ_B is treated as degenerate.
pub const DEGEN_TOL: f64 = 1e-9;
/// Default number of Fibonacci-sphere directions in the search grid.
pub const DEFAULT_GRID: usize = 10_000;

const MIN_PROBABILITY: f64 = 1e-12;
const HILL_CLIMB_STEPS: usize = 20;
const HILL_CLIMB_SHRINK: f64 = 0.7;

#[derive(Debug, Clone)]
pub struct PovmElement {
    m: CMatrix,
}

impl PovmElement {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.rows() != 2 || m.cols() != 2 {
            return Err(Error::Dimension {
                expected: "2x2".into(),
                got: format!("{}x{}", m.rows(), m.cols()),
            });
        }
        let eig = hermitian_eig(&m, DEFAULT_TOL)?;
        let (lo, hi) = (eig.eigenvalues[0], eig.eigenvalues[1]);
        if lo < -1e-12 || hi > 1.0 + 1e-12 {
            return Err(Error::NonPhysical(format!(
                "POVM element eigenvalues ({lo:.3e}, {hi:.3e}) outside [0, 1]"
            )));
        }
        Ok(Self { m })
    }

    /// Rank-1 projector (I + n·σ)/2 onto the Bloch direction `n`
    /// (normalised internally).
    pub fn projective(n: Vec3) -> Self {
        let len = norm3(&n);
        let n = [n[0] / len, n[1] / len, n[2] / len];
        Self {
            m: bloch_operator(1.0, &n).scale_real(0.5),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn complement(&self) -> Self {
        Self {
            m: &CMatrix::identity(2) - &self.m,
        }
    }
}

/// c·I + v·σ
fn bloch_operator(c: f64, v: &Vec3) -> CMatrix {
    let mut m = CMatrix::identity(2).scale_real(c);
    for (k, vk) in v.iter().enumerate() {
        m = &m + &pauli(k).scale_real(*vk);
    }
    m
}

/// Orthonormal single-qubit basis {|χ₀⟩, |χ₁⟩}.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceBasis {
    pub vectors: [[C64; 2]; 2],
    pub degenerate: bool,
}

impl ReferenceBasis {
    pub fn computational() -> Self {
        Self {
            vectors: [[ONE, ZERO], [ZERO, ONE]],
            degenerate: false,
        }
    }

    /// Eigenbasis of m·σ, i.e. the basis whose Bloch axis is `m`.
    pub fn along_axis(m: Vec3) -> Self {
        let len = norm3(&m);
        let (x, y, z) = (m[0] / len, m[1] / len, m[2] / len);
        // |+m⟩ = (cos(θ/2), e^{iφ} sin(θ/2)), |−m⟩ orthogonal to it.
        let theta = z.clamp(-1.0, 1.0).acos();
        let phi = y.atan2(x);
        let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
        let e = C64::from_polar(1.0, phi);
        Self {
            vectors: [[C64::new(c, 0.0), e * s], [C64::new(-s, 0.0), e * c]],
            degenerate: false,
        }
    }

    pub fn orthonormality_defect(&self) -> f64 {
        let ip = |u: &[C64; 2], v: &[C64; 2]| u[0].conj() * v[0] + u[1].conj() * v[1];
        let [u, v] = &self.vectors;
        (ip(u, u) - ONE)
            .norm()
            .max((ip(v, v) - ONE).norm())
            .max(ip(u, v).norm())
    }
}

/// Bob's conditional state after Alice obtains outcome `m`, with its
/// probability.
pub fn steered_state(rho: &CMatrix, m: &PovmElement) -> Result<(CMatrix, f64)> {
    let op = kron(m.matrix(), &CMatrix::identity(2));
    let unnormalised = partial_trace(&op.matmul(rho), Party::B)?;
    let p = unnormalised.trace().re;
    if p <= MIN_PROBABILITY {
        return Err(Error::ZeroProbability { probability: p });
    }
    Ok((unnormalised.scale_real(1.0 / p), p))
}

/// l1 coherence Σ_{i≠j} |⟨χ_i|ρ|χ_j⟩|.
pub fn coherence(rho: &CMatrix, basis: &ReferenceBasis) -> f64 {
    let [u, v] = &basis.vectors;
    let rv = rho.mat_vec(v);
    let ru = rho.mat_vec(u);
    let uv: C64 = u.iter().zip(&rv).map(|(a, b)| a.conj() * b).sum();
    let vu: C64 = v.iter().zip(&ru).map(|(a, b)| a.conj() * b).sum();
    uv.norm() + vu.norm()
}

pub fn reference_basis_of(rho_b: &CMatrix, degen_tol: f64) -> Result<ReferenceBasis> {
    let eig = hermitian_eig(rho_b, DEFAULT_TOL)?;
    let col = |k: usize| [eig.eigenvectors[(0, k)], eig.eigenvectors[(1, k)]];
    // Higher-weight eigenvector first so a diagonal ρ_B with ρ₀₀ > ρ₁₁
    // gives the computational basis in order.
    Ok(ReferenceBasis {
        vectors: [col(1), col(0)],
        degenerate: (eig.eigenvalues[1] - eig.eigenvalues[0]).abs() < degen_tol,
    })
}

/// Deterministic, near-uniform Fibonacci lattice of `n` unit vectors.
pub fn fibonacci_sphere(n: usize) -> Vec<Vec3> {
    let golden_angle = PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden_angle * i as f64;
            [r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MscSearch {
    pub value: f64,
    /// ρ_B was degenerate and the value is an infimum over reference bases.
    pub degenerate: bool,
}

pub fn msc_bruteforce(rho: &CMatrix, n_grid: usize, degen_tol: f64) -> Result<f64> {
    msc_bruteforce_with(Exec::default(), rho, n_grid, degen_tol).map(|s| s.value)
}

pub fn msc_bruteforce_with(
    exec: Exec,
    rho: &CMatrix,
    n_grid: usize,
    degen_tol: f64,
) -> Result<MscSearch> {
    if n_grid < 8 {
        return Err(Error::invalid(
            "n_grid",
            format!("need at least 8, got {n_grid}"),
        ));
    }
    let rho_b = partial_trace(rho, Party::B)?;
    let basis = reference_basis_of(&rho_b, degen_tol)?;
    let grid = fibonacci_sphere(n_grid);
    let spacing = (4.0 * PI / n_grid as f64).sqrt();

    if !basis.degenerate {
        let objective = |n: &Vec3| -> f64 {
            match steered_state(rho, &PovmElement::projective(*n)) {
                Ok((steered, _)) => coherence(&steered, &basis),
                Err(_) => 0.0,
            }
        };
        let (best, value) = exec
            .argmax(grid.len(), |i| objective(&grid[i]))
            .expect("non-empty grid");
        let value = hill_climb(&objective, grid[best], value, spacing);
        return Ok(MscSearch {
            value,
            degenerate: false,
        });
    }

    // Degenerate marginal: every basis is an eigenbasis, take the infimum
    // over candidate axes of the best achievable coherence. For a qubit the
    // l1 coherence of a state with Bloch vector r in the basis along m is
    // the distance |r − (r·m)m| of r from that axis.
    let steered: Vec<Vec3> = exec
        .map(&grid, |n| {
            steered_state(rho, &PovmElement::projective(*n))
                .ok()
                .map(|(s, _)| bloch_vector(&s))
        })
        .into_iter()
        .flatten()
        .collect();
    let axis_max = |m: &Vec3| -> f64 {
        steered
            .iter()
            .map(|r| distance_from_axis(r, m))
            .fold(0.0, f64::max)
    };
    let (best_axis, _) = exec
        .argmax(grid.len(), |i| -axis_max(&grid[i]))
        .expect("non-empty grid");
    let axis = grid[best_axis];
    let basis = ReferenceBasis::along_axis(axis);
    let objective = |n: &Vec3| -> f64 {
        match steered_state(rho, &PovmElement::projective(*n)) {
            Ok((s, _)) => coherence(&s, &basis),
            Err(_) => 0.0,
        }
    };
    let (start, start_value) = exec
        .argmax(grid.len(), |i| objective(&grid[i]))
        .expect("non-empty grid");
    let value = hill_climb(&objective, grid[start], start_value, spacing);
    Ok(MscSearch {
        value,
        degenerate: true,
    })
}

fn bloch_vector(rho: &CMatrix) -> Vec3 {
    [
        2.0 * rho[(0, 1)].re,
        -2.0 * rho[(0, 1)].im,
        (rho[(0, 0)] - rho[(1, 1)]).re,
    ]
}

fn distance_from_axis(r: &Vec3, m: &Vec3) -> f64 {
    let along = dot3(r, m);
    let perp = [
        r[0] - along * m[0],
        r[1] - along * m[1],
        r[2] - along * m[2],
    ];
    norm3(&perp)
}

/// Local refinement on the sphere: try the four tangent directions at the
/// current step, move to the best improvement, shrink the step.
fn hill_climb(objective: &dyn Fn(&Vec3) -> f64, start: Vec3, start_value: f64, step: f64) -> f64 {
    let mut n = start;
    let mut best = start_value;
    let mut h = step;
    for _ in 0..HILL_CLIMB_STEPS {
        let (u, v) = tangent_frame(&n);
        let mut candidate = None;
        for (du, dv) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let trial = normalised([
                n[0] + h * (du * u[0] + dv * v[0]),
                n[1] + h * (du * u[1] + dv * v[1]),
                n[2] + h * (du * u[2] + dv * v[2]),
            ]);
            let val = objective(&trial);
            if val > best {
                best = val;
                candidate = Some(trial);
            }
        }
        if let Some(c) = candidate {
            n = c;
        }
        h *= HILL_CLIMB_SHRINK;
    }
    best
}

fn normalised(v: Vec3) -> Vec3 {
    let l = norm3(&v);
    [v[0] / l, v[1] / l, v[2] / l]
}

fn tangent_frame(n: &Vec3) -> (Vec3, Vec3) {
    let helper = if n[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let along = dot3(&helper, n);
    let u = normalised([
        helper[0] - along * n[0],
        helper[1] - along * n[1],
        helper[2] - along * n[2],
    ]);
    let v = [
        n[1] * u[2] - n[2] * u[1],
        n[2] * u[0] - n[0] * u[2],
        n[0] * u[1] - n[1] * u[0],
    ];
    (u, v)
}

/// How MSC is read off the semiaxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClosedFormMode {
    /// Longest of all three semiaxes.
    Paper,
    /// Longest semiaxis perpendicular to the reference axis z: the rule for
    /// X-states whose reference basis lies along an ellipsoid axis.
    Strict,
}

pub fn msc_closed_form(semiaxes: &Vec3, mode: ClosedFormMode) -> Result<f64> {
    if let Some(&s) = semiaxes.iter().find(|&&s| s < 0.0) {
        return Err(Error::NegativeSemiaxis(s));
    }
    Ok(match mode {
        ClosedFormMode::Paper => semiaxes[0].max(semiaxes[1]).max(semiaxes[2]),
        ClosedFormMode::Strict => semiaxes[0].max(semiaxes[1]),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singlet() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::projector(&[ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO])
    }

    #[test]
    fn steered_identity_element_gives_marginal() {
        let rho = singlet();
        let m = PovmElement::new(CMatrix::identity(2).scale_real(0.5)).unwrap();
        let (s, p) = steered_state(&rho, &m).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!(s.max_abs_diff(&partial_trace(&rho, Party::B).unwrap()) < 1e-15);
    }

    #[test]
    fn singlet_anticorrelation() {
        let m = PovmElement::projective([0.0, 0.0, 1.0]);
        let (s, p) = steered_state(&singlet(), &m).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!(s.max_abs_diff(&CMatrix::diag_real(&[0.0, 1.0])) < 1e-15);
    }

    #[test]
    fn product_state_is_not_steered() {
        let ra = CMatrix::from_real(2, 2, &[0.7, 0.1, 0.1, 0.3]).unwrap();
        let rb = CMatrix::from_real(2, 2, &[0.4, -0.2, -0.2, 0.6]).unwrap();
        let rho = kron(&ra, &rb);
        let m = PovmElement::projective([0.3, -0.5, 0.2]);
        let (s, p) = steered_state(&rho, &m).unwrap();
        assert!(s.max_abs_diff(&rb) < 1e-14);
        assert!((p - m.matrix().matmul(&ra).trace().re).abs() < 1e-14);
    }

    #[test]
    fn zero_probability_outcome() {
        let ket00 = CMatrix::projector(&[ONE, ZERO, ZERO, ZERO]);
        let m = PovmElement::projective([0.0, 0.0, -1.0]);
        assert!(matches!(
            steered_state(&ket00, &m),
            Err(Error::ZeroProbability { .. })
        ));
    }

    #[test]
    fn povm_element_bounds() {
        assert!(PovmElement::new(CMatrix::diag_real(&[1.2, 0.0])).is_err());
        assert!(PovmElement::new(CMatrix::diag_real(&[0.5, -0.1])).is_err());
        assert!(PovmElement::new(CMatrix::diag_real(&[1.0, 0.0])).is_ok());
    }

    #[test]
    fn coherence_examples() {
        let z = ReferenceBasis::computational();
        let plus = CMatrix::from_real(2, 2, &[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!((coherence(&plus, &z) - 1.0).abs() < 1e-15);
        assert_eq!(coherence(&CMatrix::diag_real(&[0.3, 0.7]), &z), 0.0);
        let mut r = CMatrix::diag_real(&[0.5, 0.5]);
        r[(0, 1)] = C64::new(0.0, 0.3);
        r[(1, 0)] = C64::new(0.0, -0.3);
        assert!((coherence(&r, &z) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn reference_basis_examples() {
        let b = reference_basis_of(&CMatrix::diag_real(&[0.8, 0.2]), DEGEN_TOL).unwrap();
        assert!(!b.degenerate);
        assert!((b.vectors[0][0].norm() - 1.0).abs() < 1e-15);
        assert!((b.vectors[1][1].norm() - 1.0).abs() < 1e-15);

        let b = reference_basis_of(&CMatrix::diag_real(&[0.5, 0.5]), DEGEN_TOL).unwrap();
        assert!(b.degenerate);
    }

    #[test]
    fn axis_basis_is_orthonormal_and_aligned() {
        for m in fibonacci_sphere(50) {
            let basis = ReferenceBasis::along_axis(m);
            assert!(basis.orthonormality_defect() < 1e-14);
            // |+m⟩⟨+m| has Bloch vector m.
            let proj = CMatrix::projector(&basis.vectors[0]);
            let r = bloch_vector(&proj);
            for k in 0..3 {
                assert!((r[k] - m[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn closed_form_modes() {
        let sphere = [1.0, 1.0, 1.0];
        assert_eq!(
            msc_closed_form(&sphere, ClosedFormMode::Paper).unwrap(),
            1.0
        );
        assert_eq!(
            msc_closed_form(&sphere, ClosedFormMode::Strict).unwrap(),
            1.0
        );

        // θ = 0 family: s₃ = qp/(1+q) with q = 0.8, p = 0.6
        let s3 = 0.8 * 0.6 / 1.8;
        let axes = [0.0, 0.0, s3];
        assert_eq!(msc_closed_form(&axes, ClosedFormMode::Paper).unwrap(), s3);
        assert_eq!(msc_closed_form(&axes, ClosedFormMode::Strict).unwrap(), 0.0);

        let axes = [0.7559, 0.7559, 0.7619];
        assert_eq!(
            msc_closed_form(&axes, ClosedFormMode::Paper).unwrap(),
            0.7619
        );
        assert_eq!(
            msc_closed_form(&axes, ClosedFormMode::Strict).unwrap(),
            0.7559
        );

        assert!(matches!(
            msc_closed_form(&[0.1, -0.2, 0.3], ClosedFormMode::Paper),
            Err(Error::NegativeSemiaxis(_))
        ));
    }

    #[test]
    fn bruteforce_product_and_singlet() {
        let ra = CMatrix::from_real(2, 2, &[0.7, 0.1, 0.1, 0.3]).unwrap();
        let rb = CMatrix::diag_real(&[0.35, 0.65]);
        let product = kron(&ra, &rb);
        assert!(msc_bruteforce(&product, 2000, DEGEN_TOL).unwrap() < 1e-12);

        // Singlet marginal is I/2, so this exercises the degenerate path.
        let v = msc_bruteforce_with(Exec::default(), &singlet(), 2000, DEGEN_TOL).unwrap();
        assert!(v.degenerate);
        assert!(
            (v.value - 1.0).abs() < 2.0 / (2000f64).sqrt(),
            "{}",
            v.value
        );
        assert!(v.value <= 1.0 + 1e-12);
    }

    #[test]
    fn grid_is_on_sphere() {
        let g = fibonacci_sphere(1000);
        assert_eq!(g.len(), 1000);
        assert!(g.iter().all(|p| (norm3(p) - 1.0).abs() < 1e-14));
        assert!(msc_bruteforce(&singlet(), 4, DEGEN_TOL).is_err());
    }
}
