//! Pauli-basis coordinates of two-qubit states and quantum steering
//! ellipsoids.
//!
//! A two-qubit state is written as
//!
//! ```text
//! ρ = ¼ [ I⊗I + a·σ⊗I + I⊗b·σ + Σ T_nm σ_n⊗σ_m ]
//! ```
//!
//! and the ellipsoid of states that one party can be steered to by
//! measurements on the other follows from (a, b, T) alone.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{
    dot3, hermitian_eig, kron, mat3_identity, mat3_mul, mat3_to_cmatrix, mat3_transpose, mat3_vec,
    outer3, partial_trace, pauli, psd_inv_sqrt, validate_density, CMatrix, Mat3, Party, Vec3, C64,
    DEFAULT_TOL,
};

/// Default guard on how close a marginal may come to a pure state.
pub const MARGINAL_EPS: f64 = 1e-9;

const NEGATIVE_EIG_SLACK: f64 = 1e-10;
const DIAGONAL_TOL: f64 = 1e-12;

/// Local Bloch vectors and correlation matrix of a two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochRep {
    pub a: Vec3,
    pub b: Vec3,
    pub t: Mat3,
}

impl BlochRep {
    /// Exchanges the roles of the two parties.
    pub fn swapped(&self) -> BlochRep {
        BlochRep {
            a: self.b,
            b: self.a,
            t: mat3_transpose(&self.t),
        }
    }

    pub fn max_abs_diff(&self, other: &BlochRep) -> f64 {
        let mut d: f64 = 0.0;
        for i in 0..3 {
            d = d.max((self.a[i] - other.a[i]).abs());
            d = d.max((self.b[i] - other.b[i]).abs());
            for j in 0..3 {
                d = d.max((self.t[i][j] - other.t[i][j]).abs());
            }
        }
        d
    }
}

/// A steering ellipsoid: `center + orientation · diag(semiaxes) · u` for
/// unit vectors `u`. Columns of `orientation` are the axis directions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ellipsoid {
    pub center: Vec3,
    pub semiaxes: Vec3,
    pub orientation: Mat3,
}

impl Ellipsoid {
    pub fn point(center: Vec3) -> Self {
        Ellipsoid {
            center,
            semiaxes: [0.0; 3],
            orientation: mat3_identity(),
        }
    }

    /// Value of the quadratic form Σ ((x−c)·eᵢ / sᵢ)². Equals 1 on the
    /// surface; undefined for flat ellipsoids.
    pub fn quadratic_form(&self, x: &Vec3) -> f64 {
        let d = [
            x[0] - self.center[0],
            x[1] - self.center[1],
            x[2] - self.center[2],
        ];
        (0..3)
            .map(|k| {
                let axis = [
                    self.orientation[0][k],
                    self.orientation[1][k],
                    self.orientation[2][k],
                ];
                let proj = dot3(&d, &axis) / self.semiaxes[k];
                proj * proj
            })
            .sum()
    }

    pub fn max_semiaxis(&self) -> f64 {
        self.semiaxes.iter().copied().fold(0.0, f64::max)
    }
}

pub fn bloch_decompose(rho: &CMatrix) -> Result<BlochRep> {
    if rho.rows() != 4 || rho.cols() != 4 {
        return Err(Error::Dimension {
            expected: "4x4".into(),
            got: format!("{}x{}", rho.rows(), rho.cols()),
        });
    }
    let report = validate_density(rho, DEFAULT_TOL)?;
    if !report.valid {
        return Err(Error::NonPhysical(format!(
            "invalid density matrix: hermiticity {:.2e}, trace {:.2e}, min eigenvalue {:.2e}",
            report.hermiticity_defect, report.trace_defect, report.min_eigenvalue
        )));
    }
    Ok(bloch_coordinates(rho))
}

/// Pauli expectation values without any physicality check.
pub(crate) fn bloch_coordinates(rho: &CMatrix) -> BlochRep {
    let id = CMatrix::identity(2);
    let expect = |op: &CMatrix| rho.matmul(op).trace().re;
    let mut rep = BlochRep {
        a: [0.0; 3],
        b: [0.0; 3],
        t: [[0.0; 3]; 3],
    };
    for n in 0..3 {
        rep.a[n] = expect(&kron(&pauli(n), &id));
        rep.b[n] = expect(&kron(&id, &pauli(n)));
        for m in 0..3 {
            rep.t[n][m] = expect(&kron(&pauli(n), &pauli(m)));
        }
    }
    rep
}

pub fn assemble_from_bloch(rep: &BlochRep) -> CMatrix {
    let id = CMatrix::identity(2);
    let mut rho = CMatrix::identity(4);
    for n in 0..3 {
        rho = &rho + &kron(&pauli(n), &id).scale_real(rep.a[n]);
        rho = &rho + &kron(&id, &pauli(n)).scale_real(rep.b[n]);
        for m in 0..3 {
            rho = &rho + &kron(&pauli(n), &pauli(m)).scale_real(rep.t[n][m]);
        }
    }
    rho.scale_real(0.25)
}

/// Steering ellipsoid of `steered` party, generated by all measurements on
/// the other party.
///
/// Semiaxes come out in x, y, z order with identity orientation when the
/// ellipsoid matrix is already diagonal; otherwise they are sorted
/// descending with the matching eigenvectors as orientation columns.
pub fn steering_ellipsoid(rep: &BlochRep, steered: Party, eps: f64) -> Result<Ellipsoid> {
    // Work in the frame where B is steered by A.
    let rep = match steered {
        Party::B => *rep,
        Party::A => rep.swapped(),
    };
    let a = rep.a;
    let b = rep.b;
    let t = rep.t;

    let denom = 1.0 - dot3(&a, &a);
    if denom <= eps {
        return Err(Error::SingularMarginal {
            min_eigenvalue: denom / 2.0,
        });
    }

    let tt = mat3_transpose(&t);
    let tta = mat3_vec(&tt, &a);
    let center = [
        (b[0] - tta[0]) / denom,
        (b[1] - tta[1]) / denom,
        (b[2] - tta[2]) / denom,
    ];

    // Q = (Tᵀ − b aᵀ)/(1−a²) · (I + a aᵀ/(1−a²)) · (T − a bᵀ)
    let ba = outer3(&b, &a);
    let ab = outer3(&a, &b);
    let aa = outer3(&a, &a);
    let mut left = [[0.0; 3]; 3];
    let mut middle = mat3_identity();
    let mut right = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            left[i][j] = (tt[i][j] - ba[i][j]) / denom;
            middle[i][j] += aa[i][j] / denom;
            right[i][j] = t[i][j] - ab[i][j];
        }
    }
    let q = mat3_mul(&mat3_mul(&left, &middle), &right);
    let mut q_sym = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            q_sym[i][j] = 0.5 * (q[i][j] + q[j][i]);
        }
    }

    let sqrt_clamped = |x: f64| -> Result<f64> {
        if x < -NEGATIVE_EIG_SLACK {
            Err(Error::NonPhysical(format!(
                "ellipsoid matrix has negative eigenvalue {x:.3e}"
            )))
        } else {
            Ok(x.max(0.0).sqrt())
        }
    };

    let off_diag = (0..3)
        .flat_map(|i| (0..3).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| q_sym[i][j].abs())
        .fold(0.0, f64::max);
    if off_diag <= DIAGONAL_TOL {
        return Ok(Ellipsoid {
            center,
            semiaxes: [
                sqrt_clamped(q_sym[0][0])?,
                sqrt_clamped(q_sym[1][1])?,
                sqrt_clamped(q_sym[2][2])?,
            ],
            orientation: mat3_identity(),
        });
    }

    let eig = hermitian_eig(&mat3_to_cmatrix(&q_sym), DEFAULT_TOL)?;
    let mut semiaxes = [0.0; 3];
    let mut orientation = [[0.0; 3]; 3];
    // Ascending from the solver; emit descending.
    for k in 0..3 {
        let src = 2 - k;
        semiaxes[k] = sqrt_clamped(eig.eigenvalues[src])?;
        let col = real_unit_column(&eig.eigenvectors.column(src));
        for (r, v) in col.iter().enumerate() {
            orientation[r][k] = *v;
        }
    }
    Ok(Ellipsoid {
        center,
        semiaxes,
        orientation,
    })
}

/// Eigenvectors of a real symmetric matrix come back with an arbitrary
/// global phase; rotate it away so the largest component is real.
fn real_unit_column(col: &[C64]) -> Vec3 {
    let pivot = col
        .iter()
        .copied()
        .max_by(|x, y| x.norm().total_cmp(&y.norm()))
        .unwrap_or(C64::new(1.0, 0.0));
    let phase = if pivot.norm() > 0.0 {
        pivot.conj() / pivot.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let v = [
        (col[0] * phase).re,
        (col[1] * phase).re,
        (col[2] * phase).re,
    ];
    let n = dot3(&v, &v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Local filter (2ρ_A)^{−1/2} ⊗ I that makes Alice's marginal maximally
/// mixed while leaving Bob's steering ellipsoid unchanged.
pub fn canonical_state(rho: &CMatrix, eps: f64) -> Result<CMatrix> {
    let rho_a = partial_trace(rho, Party::A)?;
    let filter = psd_inv_sqrt(&rho_a.scale_real(2.0), eps).map_err(|e| match e {
        Error::SingularMarginal { min_eigenvalue } => Error::SingularMarginal {
            min_eigenvalue: min_eigenvalue / 2.0,
        },
        other => other,
    })?;
    let op = kron(&filter, &CMatrix::identity(2));
    Ok(op.sandwich(rho))
}

/// Latitude–longitude sample of the ellipsoid surface: `n_theta` polar
/// rows (poles included) by `n_phi` azimuths, row-major.
pub fn ellipsoid_surface_points(e: &Ellipsoid, n_theta: usize, n_phi: usize) -> Result<Vec<Vec3>> {
    if n_theta < 2 || n_phi < 2 {
        return Err(Error::invalid(
            "n_theta/n_phi",
            format!("need at least 2 samples each, got {n_theta}x{n_phi}"),
        ));
    }
    let mut pts = Vec::with_capacity(n_theta * n_phi);
    for i in 0..n_theta {
        let theta = std::f64::consts::PI * i as f64 / (n_theta - 1) as f64;
        for j in 0..n_phi {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / n_phi as f64;
            let u = [
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ];
            let scaled = [
                e.semiaxes[0] * u[0],
                e.semiaxes[1] * u[1],
                e.semiaxes[2] * u[2],
            ];
            let r = mat3_vec(&e.orientation, &scaled);
            pts.push([e.center[0] + r[0], e.center[1] + r[1], e.center[2] + r[2]]);
        }
    }
    Ok(pts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{ONE, ZERO};

    fn singlet() -> CMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        CMatrix::projector(&[ZERO, C64::new(s, 0.0), C64::new(-s, 0.0), ZERO])
    }

    #[test]
    fn decompose_examples() {
        let ket01 = CMatrix::projector(&[ZERO, ONE, ZERO, ZERO]);
        let rep = bloch_decompose(&ket01).unwrap();
        assert_eq!(rep.a, [0.0, 0.0, 1.0]);
        assert_eq!(rep.b, [0.0, 0.0, -1.0]);
        assert_eq!(rep.t, [[0.0; 3], [0.0; 3], [0.0, 0.0, -1.0]]);

        let mixed = bloch_decompose(&CMatrix::identity(4).scale_real(0.25)).unwrap();
        assert_eq!(mixed.max_abs_diff(&assemble_rep_zero()), 0.0);

        let rep = bloch_decompose(&singlet()).unwrap();
        assert!(norm(&rep.a) < 1e-15 && norm(&rep.b) < 1e-15);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { -1.0 } else { 0.0 };
                assert!((rep.t[i][j] - want).abs() < 1e-15);
            }
        }
    }

    fn assemble_rep_zero() -> BlochRep {
        BlochRep {
            a: [0.0; 3],
            b: [0.0; 3],
            t: [[0.0; 3]; 3],
        }
    }

    fn norm(v: &Vec3) -> f64 {
        dot3(v, v).sqrt()
    }

    #[test]
    fn decompose_rejects_unphysical() {
        let bad = CMatrix::diag_real(&[0.5, 0.6, 0.0, -0.1]);
        assert!(matches!(bloch_decompose(&bad), Err(Error::NonPhysical(_))));
    }

    #[test]
    fn assemble_examples() {
        let rho = assemble_from_bloch(&assemble_rep_zero());
        assert!(rho.max_abs_diff(&CMatrix::identity(4).scale_real(0.25)) < 1e-16);

        let rep = bloch_decompose(&singlet()).unwrap();
        assert!(assemble_from_bloch(&rep).max_abs_diff(&singlet()) < 1e-15);

        let rep = BlochRep {
            a: [0.0, 0.0, 1.0],
            b: [0.0, 0.0, 1.0],
            t: [[0.0; 3], [0.0; 3], [0.0, 0.0, 1.0]],
        };
        let ket00 = CMatrix::projector(&[ONE, ZERO, ZERO, ZERO]);
        assert!(assemble_from_bloch(&rep).max_abs_diff(&ket00) < 1e-16);
    }

    #[test]
    fn product_state_gives_point() {
        let ra = CMatrix::from_real(2, 2, &[0.7, 0.1, 0.1, 0.3]).unwrap();
        let rb = CMatrix::from_real(2, 2, &[0.4, -0.2, -0.2, 0.6]).unwrap();
        let rep = bloch_decompose(&kron(&ra, &rb)).unwrap();
        let e = steering_ellipsoid(&rep, Party::B, MARGINAL_EPS).unwrap();
        for k in 0..3 {
            assert!(e.semiaxes[k] < 1e-7, "{:?}", e.semiaxes);
            assert!((e.center[k] - rep.b[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn singlet_gives_bloch_sphere() {
        let rep = bloch_decompose(&singlet()).unwrap();
        let e = steering_ellipsoid(&rep, Party::B, MARGINAL_EPS).unwrap();
        for k in 0..3 {
            assert!((e.semiaxes[k] - 1.0).abs() < 1e-14);
            assert!(e.center[k].abs() < 1e-14);
        }
    }

    #[test]
    fn pure_marginal_is_rejected() {
        let ket00 = CMatrix::projector(&[ONE, ZERO, ZERO, ZERO]);
        let rep = bloch_decompose(&ket00).unwrap();
        assert!(matches!(
            steering_ellipsoid(&rep, Party::B, MARGINAL_EPS),
            Err(Error::SingularMarginal { .. })
        ));
        assert!(matches!(
            canonical_state(&ket00, MARGINAL_EPS),
            Err(Error::SingularMarginal { .. })
        ));
    }

    #[test]
    fn singlet_is_canonical() {
        let out = canonical_state(&singlet(), MARGINAL_EPS).unwrap();
        assert!(out.max_abs_diff(&singlet()) < 1e-14);
    }

    #[test]
    fn surface_points_examples() {
        let sphere = Ellipsoid {
            center: [0.0; 3],
            semiaxes: [1.0; 3],
            orientation: mat3_identity(),
        };
        for p in ellipsoid_surface_points(&sphere, 8, 16).unwrap() {
            assert!((norm(&p) - 1.0).abs() < 1e-14);
        }

        let point = Ellipsoid::point([0.1, -0.2, 0.3]);
        for p in ellipsoid_surface_points(&point, 4, 4).unwrap() {
            assert_eq!(p, [0.1, -0.2, 0.3]);
        }

        let e = Ellipsoid {
            center: [0.0, 0.0, 0.5],
            semiaxes: [0.5, 0.5, 0.25],
            orientation: mat3_identity(),
        };
        let pts = ellipsoid_surface_points(&e, 32, 64).unwrap();
        assert_eq!(pts.len(), 2048);
        for p in pts {
            assert!((e.quadratic_form(&p) - 1.0).abs() < 1e-12);
        }

        assert!(ellipsoid_surface_points(&e, 1, 4).is_err());
    }
}
