//! Self-check suite behind `qse verify`: every analytic route is compared
//! with an independent numerical one.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::coherence::{
    msc_bruteforce_with, msc_closed_form, ClosedFormMode, DEFAULT_GRID, DEGEN_TOL,
};
use crate::error::Result;
use crate::exec::Exec;
use crate::geometry::{bloch_decompose, steering_ellipsoid, Ellipsoid, MARGINAL_EPS};
use crate::numerics::{validate_density, CMatrix, Party, C64, DEFAULT_TOL};
use crate::oracles::{
    analytic_trace, compare_traces, discrete_modes_oracle, kernel_gate, lorentzian_kernel,
    volterra_oracle, window_tail_fraction,
};
use crate::reservoir::{
    closed_form_ellipsoid, evolve_bipartite, initial_state, kraus_pair, InitialStateParams,
    KrausMode, ReservoirParams,
};

#[derive(Debug, Clone)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] {}: {}", self.name, self.detail)
    }
}

/// Random two-qubit (or n-dimensional) density matrix G·G†/tr from a
/// complex Ginibre matrix.
pub fn random_density<R: Rng>(rng: &mut R, dim: usize) -> CMatrix {
    let mut g = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        }
    }
    let rho = g.matmul(&g.adjoint());
    let tr = rho.trace().re;
    rho.scale_real(1.0 / tr).hermitian_part()
}

/// Uniformly random point of the closed unit disc.
pub fn random_amplitude<R: Rng>(rng: &mut R) -> C64 {
    let r: f64 = rng.random::<f64>().sqrt();
    C64::from_polar(r, 2.0 * PI * rng.random::<f64>())
}

/// Grid used to compare the closed-form ellipsoid with the generic
/// state-based pipeline.
pub fn closed_form_grid() -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for q in [0.3, 0.8, 1.0 - 1e-3] {
        for theta in [PI / 8.0, PI / 3.0, PI / 2.0] {
            for p in [0.0, 0.25, 0.7, 1.0] {
                out.push((q, theta, p));
            }
        }
    }
    out
}

/// Bob's ellipsoid computed from the evolved density matrix.
pub fn pipeline_ellipsoid(init: &InitialStateParams, g: C64, mode: KrausMode) -> Result<Ellipsoid> {
    let rho = evolve_bipartite(&initial_state(init)?, &kraus_pair(g, mode)?);
    steering_ellipsoid(&bloch_decompose(&rho)?, Party::B, MARGINAL_EPS)
}

pub fn ellipsoid_distance(a: &Ellipsoid, b: &Ellipsoid) -> f64 {
    (0..3)
        .map(|k| {
            (a.center[k] - b.center[k])
                .abs()
                .max((a.semiaxes[k] - b.semiaxes[k]).abs())
        })
        .fold(0.0, f64::max)
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckOutcome {
    CheckOutcome {
        name,
        passed,
        detail,
    }
}

pub fn run_verification(exec: Exec) -> Result<Vec<CheckOutcome>> {
    let mut out = Vec::new();
    let base = ReservoirParams::new(1.0, 8.0, 1.0, 1)?;

    let dev = kernel_gate(&base, 40.0, 10, 3.0);
    let bound = window_tail_fraction(&base, 40.0) * lorentzian_kernel(0.0, &base) * 1.01;
    out.push(check(
        "memory kernel vs quadrature",
        dev <= bound,
        format!("max deviation {dev:.3e} (window-tail bound {bound:.3e})"),
    ));

    let mut worst: f64 = 0.0;
    for n in [1, 3, 6] {
        let p = base.with_n(n);
        let v = volterra_oracle(&p, 3.0, 1e-4)?;
        worst = worst.max(compare_traces(&v, &analytic_trace(&p, &v.times))?);
    }
    out.push(check(
        "closed-form amplitude vs Volterra RK4",
        worst < 1e-6,
        format!("sup-norm {worst:.3e} over N in {{1,3,6}}, t in [0,3]"),
    ));

    let coarse = discrete_modes_oracle(&base, 2000, 40.0, 2.0, 1e-3)?;
    let e_coarse = compare_traces(&coarse, &analytic_trace(&base, &coarse.times))?;
    let fine = discrete_modes_oracle(&base, 4000, 40.0, 2.0, 1e-3)?;
    let e_fine = compare_traces(&fine, &analytic_trace(&base, &fine.times))?;
    out.push(check(
        "closed-form amplitude vs discrete bath",
        e_coarse < 1e-2,
        format!(
            "sup-norm {e_coarse:.3e} (K=2000, window 40); {e_fine:.3e} at K=4000, ratio {:.2}",
            e_coarse / e_fine
        ),
    ));

    let mut worst: f64 = 0.0;
    for (q, theta, p) in closed_form_grid() {
        let init = InitialStateParams::new(q, theta)?;
        let closed = closed_form_ellipsoid(&init, p)?;
        let piped = pipeline_ellipsoid(&init, C64::new(p.sqrt(), 0.0), KrausMode::Paper)?;
        worst = worst.max(ellipsoid_distance(&closed, &piped));
    }
    out.push(check(
        "closed-form ellipsoid vs state pipeline",
        worst < 1e-10,
        format!("max deviation {worst:.3e} over 36 (q, theta, p) points"),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut completeness, mut trace, mut min_eig): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..10_000 {
        let g = random_amplitude(&mut rng);
        let rho = random_density(&mut rng, 4);
        let k = kraus_pair(g, KrausMode::Exact)?;
        completeness = completeness.max(k.completeness_defect());
        let r = validate_density(&evolve_bipartite(&rho, &k), DEFAULT_TOL)?;
        trace = trace.max(r.trace_defect);
        min_eig = min_eig.min(r.min_eigenvalue);
    }
    out.push(check(
        "channel hygiene",
        completeness < 1e-12 && trace < 1e-12 && min_eig >= -1e-10,
        format!("completeness {completeness:.1e}, trace {trace:.1e}, min eigenvalue {min_eig:.1e}"),
    ));

    let init = InitialStateParams::new(0.8, PI / 3.0)?;
    let mut worst: f64 = 0.0;
    for p in [1.0f64, 0.5] {
        let rho = evolve_bipartite(
            &initial_state(&init)?,
            &kraus_pair(C64::new(p.sqrt(), 0.0), KrausMode::Paper)?,
        );
        let search = msc_bruteforce_with(exec, &rho, DEFAULT_GRID, DEGEN_TOL)?;
        let strict = msc_closed_form(
            &closed_form_ellipsoid(&init, p)?.semiaxes,
            ClosedFormMode::Strict,
        )?;
        worst = worst.max((search.value - strict).abs());
    }
    out.push(check(
        "MSC search vs perpendicular semiaxes",
        worst < 1e-2,
        format!("max deviation {worst:.3e} at p in {{1, 0.5}}"),
    ));

    Ok(out)
}
