//! Relativistic auxiliary eigenproblem on 4-spinors,
//! lambda(kappa) psi = -(1/(hbar c)^2) (H0 + E(kappa) I) G(kappa) V psi,
//! with kinetic-balance initial guesses, power iteration, the analytic
//! d lambda / d kappa, and Newton steps in kappa. Bound states satisfy
//! kappa = sqrt(m^2 c^4 - E^2)/(c hbar) with E < m c^2; reported energies
//! subtract m c^2.

use crate::constants::PhysicalConstants;
use crate::error::{CoreError, Result};
use crate::field::{
    apply_greens_scalar_with, Direction, GreensPath, ScalarField, Space, SpinorField,
};
use crate::grid::Grid;
use crate::schrodinger::{IterationRecord, SolverOptions, NEWTON_MAX_OUTER};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use std::f64::consts::PI;

/// kappa = sqrt(m^2 c^4 - (E - tau)^2) / (c hbar), requiring |E - tau| < m c^2.
pub fn kappa_from_e(e: f64, tau: f64, consts: &PhysicalConstants) -> Result<f64> {
    let mc2 = consts.rest_energy();
    let shifted = e - tau;
    if !(shifted < mc2) || !(shifted > -mc2) {
        return Err(CoreError::Domain(format!(
            "E - tau = {shifted} is not a bound-state energy (|E - tau| must be < mc^2)"
        )));
    }
    // product form dodges the cancellation of m^2 c^4 - E^2 for E near mc^2
    Ok(((mc2 - shifted) * (mc2 + shifted)).sqrt() / (consts.c * consts.hbar))
}

/// Inverse map E = sqrt(m^2 c^4 - kappa^2 c^2 hbar^2) on the positive branch.
pub fn e_from_kappa(kappa: f64, consts: &PhysicalConstants) -> Result<f64> {
    let mc2 = consts.rest_energy();
    let kch = kappa * consts.c * consts.hbar;
    if !(kappa > 0.0) || kch >= mc2 {
        return Err(CoreError::Domain(format!(
            "kappa = {kappa} outside the bound branch (need 0 < kappa c hbar < mc^2)"
        )));
    }
    Ok(((mc2 - kch) * (mc2 + kch)).sqrt())
}

/// Apply (m_coef beta + p_coef alpha.p + e_term I) at every momentum node.
/// With m_coef = m/hbar^2, p_coef = 1/(hbar c), e_term = E/(hbar c)^2 this is
/// the momentum-space matrix of (1/(hbar c)^2)(H0 + E I); with m_coef = m c^2,
/// p_coef = hbar c, e_term = 0 it is the bare free Hamiltonian H0.
pub fn apply_dirac_matrix(
    spinor: &SpinorField,
    m_coef: f64,
    p_coef: f64,
    e_term: f64,
) -> Result<SpinorField> {
    if spinor.space() != Space::Momentum {
        return Err(CoreError::SpaceMismatch {
            expected: "momentum",
            actual: "real",
        });
    }
    let grid = spinor.grid();
    let n = grid.n();
    let nn = n * n;
    let ps = grid.momenta();
    let u = spinor.components();
    let (u0, u1, u2, u3) = (u[0].values(), u[1].values(), u[2].values(), u[3].values());
    let mut out = SpinorField::zeros(grid, Space::Momentum);
    {
        let [o0, o1, o2, o3] = out.components_mut();
        let (v0, v1, v2, v3) = (
            o0.values_mut(),
            o1.values_mut(),
            o2.values_mut(),
            o3.values_mut(),
        );
        v0.par_chunks_exact_mut(nn)
            .zip(v1.par_chunks_exact_mut(nn))
            .zip(v2.par_chunks_exact_mut(nn).zip(v3.par_chunks_exact_mut(nn)))
            .enumerate()
            .for_each(|(iz, ((p0, p1), (p2, p3)))| {
                let pz = ps[iz];
                let base = nn * iz;
                for iy in 0..n {
                    let py = ps[iy];
                    for ix in 0..n {
                        let px = ps[ix];
                        let i = base + ix + n * iy;
                        let j = ix + n * iy;
                        let pm = Complex64::new(px, -py); // p1 - i p2
                        let pp = Complex64::new(px, py); // p1 + i p2
                        let (a, b, c, d) = (u0[i], u1[i], u2[i], u3[i]);
                        p0[j] = (m_coef + e_term) * a + p_coef * (pz * c + pm * d);
                        p1[j] = (m_coef + e_term) * b + p_coef * (pp * c - pz * d);
                        p2[j] = p_coef * (pz * a + pm * b) + (-m_coef + e_term) * c;
                        p3[j] = p_coef * (pp * a - pz * b) + (-m_coef + e_term) * d;
                    }
                }
            });
    }
    Ok(out)
}

/// Momentum-space application of (1/(hbar c)^2)(H0 + E I).
pub fn apply_h0_plus_e(
    spinor: &SpinorField,
    e: f64,
    consts: &PhysicalConstants,
) -> Result<SpinorField> {
    let h2 = consts.hbar * consts.hbar;
    let c2 = consts.c * consts.c;
    apply_dirac_matrix(
        spinor,
        consts.mass / h2,
        1.0 / (consts.hbar * consts.c),
        e / (h2 * c2),
    )
}

/// Multiply every spinor component by a function of |p|^2.
pub fn spinor_momentum_multiplier(
    spinor: &SpinorField,
    f: impl Fn(f64) -> f64 + Sync + Copy,
) -> Result<SpinorField> {
    let c = spinor.components();
    SpinorField::new([
        c[0].apply_momentum_multiplier(f)?,
        c[1].apply_momentum_multiplier(f)?,
        c[2].apply_momentum_multiplier(f)?,
        c[3].apply_momentum_multiplier(f)?,
    ])
}

/// Fixed matrix potential (negative after its shift) and the constants.
#[derive(Debug, Clone)]
pub struct DiracProblem {
    pub potential: ScalarField,
    pub tau: f64,
    pub constants: PhysicalConstants,
}

impl DiracProblem {
    pub fn new(potential: ScalarField, tau: f64, constants: PhysicalConstants) -> Self {
        Self {
            potential,
            tau,
            constants,
        }
    }

    pub fn grid(&self) -> Grid {
        self.potential.grid()
    }
}

/// Current eigenpair estimate for the relativistic family.
#[derive(Debug, Clone)]
pub struct DiracState {
    pub kappa: f64,
    pub lambda: Complex64,
    pub psi: SpinorField,
    /// Reported energy: E(kappa) (or the expectation while iterating) plus
    /// the shift back-correction, minus m c^2.
    pub energy_shifted: f64,
    pub residual: f64,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
}

impl DiracState {
    pub fn new(kappa: f64, psi: SpinorField) -> Result<Self> {
        if !(kappa > 0.0) {
            return Err(CoreError::Domain(format!(
                "kappa must be positive, got {kappa}"
            )));
        }
        Ok(Self {
            kappa,
            lambda: Complex64::new(f64::NAN, 0.0),
            psi: psi.normalize()?,
            energy_shifted: f64::NAN,
            residual: f64::INFINITY,
            converged: false,
            history: Vec::new(),
        })
    }

    /// The energy locked to kappa by the bound-state relation, unshifted.
    pub fn energy_from_kappa(&self, consts: &PhysicalConstants) -> Result<f64> {
        e_from_kappa(self.kappa, consts)
    }
}

/// One application of the auxiliary operator:
/// -(1/(hbar c)^2) (H0 + E(kappa) I) G(kappa) V psi.
pub fn apply_a(
    psi: &SpinorField,
    kappa: f64,
    problem: &DiracProblem,
    path: GreensPath,
) -> Result<SpinorField> {
    let e = e_from_kappa(kappa, &problem.constants)?;
    let c = psi.components();
    let conv = SpinorField::new([
        apply_greens_scalar_with(&problem.potential.mul_pointwise(&c[0])?, kappa, path)?,
        apply_greens_scalar_with(&problem.potential.mul_pointwise(&c[1])?, kappa, path)?,
        apply_greens_scalar_with(&problem.potential.mul_pointwise(&c[2])?, kappa, path)?,
        apply_greens_scalar_with(&problem.potential.mul_pointwise(&c[3])?, kappa, path)?,
    ])?;
    let hat = conv.transform(Direction::Forward)?;
    let mixed = apply_h0_plus_e(&hat, e, &problem.constants)?;
    Ok(mixed
        .transform(Direction::Inverse)?
        .scaled(Complex64::new(-1.0, 0.0)))
}

/// Small components from the kinetic balance relation
/// psi_S = (hbar / 2 i c) (sigma . grad) psi_L, evaluated as the
/// sigma.p / (2 c) multiplication in momentum space. Returns the normalized
/// 4-spinor (L1, L2, S1, S2).
pub fn kinetic_balance_guess(
    large1: &ScalarField,
    large2: &ScalarField,
    consts: &PhysicalConstants,
) -> Result<SpinorField> {
    let grid = large1.grid();
    let packed = SpinorField::new([
        large1.clone(),
        large2.clone(),
        ScalarField::zeros(grid, Space::Real),
        ScalarField::zeros(grid, Space::Real),
    ])?;
    let hat = packed.transform(Direction::Forward)?;
    let small = apply_dirac_matrix(&hat, 0.0, consts.hbar / (2.0 * consts.c), 0.0)?
        .transform(Direction::Inverse)?;
    let spinor = SpinorField::new([
        large1.clone(),
        large2.clone(),
        small.component(2).clone(),
        small.component(3).clone(),
    ])?;
    spinor.normalize()
}

/// Non-relativistic 1s in the first large component, zero in the second,
/// small components from kinetic balance.
pub fn standard_guess(
    grid: Grid,
    center: [f64; 3],
    consts: &PhysicalConstants,
) -> Result<SpinorField> {
    let large1 = ScalarField::from_fn_real(grid, move |x, y, z| {
        let dx = x - center[0];
        let dy = y - center[1];
        let dz = z - center[2];
        Complex64::new((-(dx * dx + dy * dy + dz * dz).sqrt()).exp(), 0.0)
    });
    let large2 = ScalarField::zeros(grid, Space::Real);
    kinetic_balance_guess(&large1, &large2, consts)
}

/// The standard guess with large and small 2-spinors exchanged; in exact
/// arithmetic this is orthogonal to the sought ground state.
pub fn swapped_guess(
    grid: Grid,
    center: [f64; 3],
    consts: &PhysicalConstants,
) -> Result<SpinorField> {
    let std = standard_guess(grid, center, consts)?;
    let c = std.components();
    SpinorField::new([c[2].clone(), c[3].clone(), c[0].clone(), c[1].clone()])?.normalize()
}

/// Componentwise uniform [0, 10) samples multiplied by a smooth box window
/// vanishing at the boundary.
pub fn random_guess(grid: Grid, seed: u64) -> Result<SpinorField> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let n = grid.n();
    let l = grid.box_len();
    let window = |x: f64| {
        let c = (PI * x / l).cos();
        c * c
    };
    let mut components = Vec::with_capacity(4);
    for _ in 0..4 {
        let mut values = vec![Complex64::default(); grid.len()];
        for iz in 0..n {
            let wz = window(grid.coord(iz));
            for iy in 0..n {
                let wyz = wz * window(grid.coord(iy));
                for ix in 0..n {
                    let w = wyz * window(grid.coord(ix));
                    values[grid.index(ix, iy, iz)] =
                        Complex64::new(rng.gen_range(0.0..10.0) * w, 0.0);
                }
            }
        }
        components.push(ScalarField::from_values(grid, Space::Real, values)?);
    }
    let arr: [ScalarField; 4] = components.try_into().expect("four components");
    SpinorField::new(arr)?.normalize()
}

/// Spherical Gaussian of the given exponent in the first large component
/// (built band-limited in momentum space, so huge exponents land on the
/// grid's highest representable frequencies), small components from kinetic
/// balance.
pub fn gaussian_guess(
    grid: Grid,
    center: [f64; 3],
    exponent: f64,
    consts: &PhysicalConstants,
) -> Result<SpinorField> {
    if !(exponent > 0.0) {
        return Err(CoreError::Domain(format!(
            "Gaussian exponent must be positive, got {exponent}"
        )));
    }
    let hat = ScalarField::from_fn_momentum(grid, move |px, py, pz| {
        let p2 = px * px + py * py + pz * pz;
        let phase = -(px * center[0] + py * center[1] + pz * center[2]);
        Complex64::from_polar((-p2 / (4.0 * exponent)).exp(), phase)
    });
    let large1 = hat.transform(Direction::Inverse)?;
    let large2 = ScalarField::zeros(grid, Space::Real);
    kinetic_balance_guess(&large1, &large2, consts)
}

/// <psi, H0 psi> + <psi, V psi> minus m c^2 for reporting.
pub fn dirac_energy_expectation(
    psi: &SpinorField,
    potential: &ScalarField,
    consts: &PhysicalConstants,
) -> Result<f64> {
    let hat = psi.transform(Direction::Forward)?;
    let h0 = apply_dirac_matrix(&hat, consts.rest_energy(), consts.hbar * consts.c, 0.0)?;
    let kinetic = hat.inner(&h0)?.re;
    let mut pot = 0.0;
    for c in psi.components() {
        pot += c.inner(&potential.mul_pointwise(c)?)?.re;
    }
    Ok(kinetic + pot - consts.rest_energy())
}

/// Power iteration at fixed kappa. Records carry the mc^2-subtracted energy
/// (with the shift back-correction) and, when a reference spinor is given,
/// the projection |<psi, reference>|.
pub fn power_iterate_dirac(
    mut state: DiracState,
    problem: &DiracProblem,
    opts: &SolverOptions,
    reference: Option<&SpinorField>,
) -> Result<DiracState> {
    let mut psi = state.psi.normalize()?;
    state.converged = false;
    for _ in 0..opts.max_iters {
        let image = apply_a(&psi, state.kappa, problem, opts.greens)?;
        let image_norm = image.norm();
        if image_norm < 1e-14 {
            return Err(CoreError::Breakdown(image_norm));
        }
        let lambda = psi.inner(&image)?;
        let residual = image.residual_norm(lambda, &psi)?;
        state.lambda = lambda;
        state.residual = residual;
        if opts.record_history {
            let energy =
                dirac_energy_expectation(&psi, &problem.potential, &problem.constants)?
                    + problem.tau;
            state.energy_shifted = energy;
            let projection = match reference {
                Some(r) => Some(psi.inner(r)?.norm()),
                None => None,
            };
            state.history.push(IterationRecord {
                iter: state.history.len() + 1,
                lambda,
                energy,
                residual,
                projection,
            });
        }
        if residual < opts.tol {
            state.converged = true;
            break;
        }
        psi = image.scaled(Complex64::new(1.0 / image_norm, 0.0));
    }
    state.psi = psi;
    if !opts.record_history {
        state.energy_shifted =
            dirac_energy_expectation(&state.psi, &problem.potential, &problem.constants)?
                + problem.tau;
    }
    Ok(state)
}

/// Analytic derivative of lambda with respect to kappa (fixed potential):
/// d lambda/d kappa <psi,(H0 - E I) psi>
///   = kappa lambda (-||G^{1/2} H0 psi||^2 / E + E ||G^{1/2} psi||^2).
/// (Since H0^2 = (m^2 c^4 + hbar^2 c^2 p^2) I and E^2 - m^2 c^4 =
/// -(kappa c hbar)^2, the bracket collapses to -hbar^2 c^2 ||psi||^2 / E;
/// keeping both norms makes the cancellation explicit and testable. The
/// derivative is consistent with the exact Coulomb family lambda(kappa) =
/// Z/kappa and with centered finite differences.) Falls back to a finite
/// difference when the pairing <psi,(H0 - E I) psi> degenerates.
pub fn dlambda_dkappa(
    state: &DiracState,
    problem: &DiracProblem,
    opts: &SolverOptions,
) -> Result<f64> {
    if !state.converged {
        return Err(CoreError::NotConverged(state.residual));
    }
    let consts = &problem.constants;
    let kappa = state.kappa;
    let e = e_from_kappa(kappa, consts)?;
    let hat = state.psi.transform(Direction::Forward)?;
    let h0 = apply_dirac_matrix(&hat, consts.rest_energy(), consts.hbar * consts.c, 0.0)?;
    let norm_sqr = hat.norm_sqr();
    let denom = hat.inner(&h0)?.re - e * norm_sqr;
    if denom.abs() < 1e-12 * norm_sqr {
        // singular pairing: fall back to two extra power solves
        let h = 1e-4 * kappa;
        let lam = |k: f64| -> Result<f64> {
            let s = DiracState::new(k, state.psi.clone())?;
            let solved = power_iterate_dirac(s, problem, opts, None)?;
            Ok(solved.lambda.re)
        };
        return Ok((lam(kappa + h)? - lam(kappa - h)?) / (2.0 * h));
    }
    let g_half = |s: &SpinorField| -> Result<f64> {
        Ok(spinor_momentum_multiplier(s, |p2| 1.0 / (kappa * kappa + p2).sqrt())?.norm_sqr())
    };
    let g_h0 = g_half(&h0)?;
    let g_psi = g_half(&hat)?;
    Ok(kappa * state.lambda.re * (-g_h0 / e + e * g_psi) / denom)
}

/// Newton iteration on kappa toward lambda(kappa) = 1, step-limited to
/// |d kappa| <= kappa/2 per iteration. The final reported energy is
/// E(kappa) + tau - m c^2.
pub fn newton_kappa(
    mut state: DiracState,
    problem: &DiracProblem,
    opts: &SolverOptions,
    tol_lambda: f64,
) -> Result<DiracState> {
    if !state.converged {
        state = power_iterate_dirac(state, problem, opts, None)?;
        if !state.converged {
            return Err(CoreError::MaxIterations {
                iters: opts.max_iters,
                residual: state.residual,
            });
        }
    }
    for _ in 0..NEWTON_MAX_OUTER {
        if (state.lambda.re - 1.0).abs() <= tol_lambda {
            state.energy_shifted = e_from_kappa(state.kappa, &problem.constants)? + problem.tau
                - problem.constants.rest_energy();
            return Ok(state);
        }
        let slope = dlambda_dkappa(&state, problem, opts)?;
        let mut step = -(state.lambda.re - 1.0) / slope;
        let cap = 0.5 * state.kappa;
        if step.abs() > cap {
            step = cap * step.signum();
        }
        let kappa_next = state.kappa + step;
        if !(kappa_next > 0.0) {
            return Err(CoreError::NoBoundState(format!(
                "Newton drove kappa to {kappa_next}"
            )));
        }
        state.kappa = kappa_next;
        state.converged = false;
        state = power_iterate_dirac(state, problem, opts, None)?;
        if !state.converged {
            return Err(CoreError::MaxIterations {
                iters: opts.max_iters,
                residual: state.residual,
            });
        }
    }
    Err(CoreError::MaxIterations {
        iters: NEWTON_MAX_OUTER,
        residual: (state.lambda.re - 1.0).abs(),
    })
}
