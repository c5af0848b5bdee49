//! Non-relativistic auxiliary eigenproblem lambda_mu psi = -2 G_mu V psi:
//! power iteration at fixed mu, the analytic eigenvalue derivative
//! d lambda/d mu = -2 mu lambda ||psi||^2 / <psi, G_mu^{-1} psi>, and Newton
//! updates of mu driving lambda to 1, where E = -mu^2/2 (+ tau back-shift).

use crate::error::{CoreError, Result};
use crate::field::{
    apply_greens_scalar_with, Direction, GreensPath, ScalarField, Space,
};
use crate::grid::Grid;
use num_complex::Complex64;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 100;
pub const NEWTON_MAX_OUTER: usize = 50;

/// Knobs shared by both solvers.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Power-iteration residual tolerance ||T psi - lambda psi||.
    pub tol: f64,
    pub greens: GreensPath,
    /// Record per-iteration history (includes an energy evaluation per sweep).
    pub record_history: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: DEFAULT_MAX_ITERS,
            tol: DEFAULT_TOL,
            greens: GreensPath::PaddedSymbol,
            record_history: false,
        }
    }
}

/// One row of the convergence log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub lambda: Complex64,
    pub energy: f64,
    pub residual: f64,
    pub projection: Option<f64>,
}

/// Fixed potential (already carrying its shift) plus the shift value needed
/// to map energies back.
#[derive(Debug, Clone)]
pub struct SchrodingerProblem {
    pub potential: ScalarField,
    pub tau: f64,
}

impl SchrodingerProblem {
    pub fn new(potential: ScalarField, tau: f64) -> Self {
        Self { potential, tau }
    }

    pub fn grid(&self) -> Grid {
        self.potential.grid()
    }
}

/// Current eigenpair estimate for the non-relativistic family.
#[derive(Debug, Clone)]
pub struct SchrodingerState {
    pub mu: f64,
    pub lambda: f64,
    pub lambda_im: f64,
    pub psi: ScalarField,
    pub energy: f64,
    pub residual: f64,
    pub converged: bool,
    pub history: Vec<IterationRecord>,
}

impl SchrodingerState {
    pub fn new(mu: f64, psi: ScalarField) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(CoreError::Domain(format!("mu must be positive, got {mu}")));
        }
        Ok(Self {
            mu,
            lambda: f64::NAN,
            lambda_im: 0.0,
            psi: psi.normalize()?,
            energy: f64::NAN,
            residual: f64::INFINITY,
            converged: false,
            history: Vec::new(),
        })
    }
}

/// Normalized exp(-|r - center|) on the grid, the standard starting guess.
pub fn default_guess(grid: Grid, center: [f64; 3]) -> ScalarField {
    ScalarField::from_fn_real(grid, move |x, y, z| {
        let dx = x - center[0];
        let dy = y - center[1];
        let dz = z - center[2];
        let r = (dx * dx + dy * dy + dz * dz).sqrt();
        Complex64::new((-r).exp(), 0.0)
    })
    .normalize()
    .expect("exponential guess has positive norm")
}

/// One application of the auxiliary operator: -2 G_mu (V psi).
pub fn apply_t(
    psi: &ScalarField,
    mu: f64,
    potential: &ScalarField,
    path: GreensPath,
) -> Result<ScalarField> {
    let source = potential.mul_pointwise(psi)?;
    let conv = apply_greens_scalar_with(&source, mu, path)?;
    Ok(conv.scaled(Complex64::new(-2.0, 0.0)))
}

/// <psi, (-1/2 Delta + V) psi> with the Laplacian applied as |p|^2 symbol.
pub fn energy_expectation(psi: &ScalarField, potential: &ScalarField) -> Result<f64> {
    let hat = psi.transform(Direction::Forward)?;
    let kin_field = hat.apply_momentum_multiplier(|p2| 0.5 * p2)?;
    let kinetic = hat.inner(&kin_field)?.re;
    let pot = psi.inner(&potential.mul_pointwise(psi)?)?.re;
    Ok(kinetic + pot)
}

fn orthogonalize(mut field: ScalarField, deflate: &[ScalarField]) -> Result<ScalarField> {
    for basis in deflate {
        let overlap = basis.inner(&field)?;
        field = field.add_scaled(-overlap, basis)?;
    }
    Ok(field)
}

/// Power iteration at fixed mu: psi <- normalize(T psi), lambda from the
/// Rayleigh quotient <psi, T psi>, stopping at residual < tol or max_iters.
/// `deflate` holds converged eigenfunctions to project out each sweep;
/// `reference`, when given, adds |<psi, reference>| to the records.
pub fn power_iterate(
    mut state: SchrodingerState,
    problem: &SchrodingerProblem,
    opts: &SolverOptions,
    deflate: &[ScalarField],
    reference: Option<&ScalarField>,
) -> Result<SchrodingerState> {
    if state.psi.space() != Space::Real {
        return Err(CoreError::SpaceMismatch {
            expected: "real",
            actual: "momentum",
        });
    }
    let mut psi = orthogonalize(state.psi.clone(), deflate)?.normalize()?;
    state.converged = false;
    for _ in 0..opts.max_iters {
        let image = orthogonalize(
            apply_t(&psi, state.mu, &problem.potential, opts.greens)?,
            deflate,
        )?;
        let image_norm = image.norm();
        if image_norm < 1e-14 {
            return Err(CoreError::Breakdown(image_norm));
        }
        let lambda = psi.inner(&image)?;
        let residual = image.residual_norm(lambda, &psi)?;
        state.lambda = lambda.re;
        state.lambda_im = lambda.im;
        state.residual = residual;
        if opts.record_history {
            let energy = energy_expectation(&psi, &problem.potential)? + problem.tau;
            state.energy = energy;
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
        state.energy = energy_expectation(&state.psi, &problem.potential)? + problem.tau;
    }
    Ok(state)
}

/// Analytic derivative of the auxiliary eigenvalue with respect to mu,
/// -2 mu lambda ||psi||^2 / <psi, G_mu^{-1} psi>; strictly negative.
pub fn dlambda_dmu(state: &SchrodingerState, _problem: &SchrodingerProblem) -> Result<f64> {
    if !state.converged {
        return Err(CoreError::NotConverged(state.residual));
    }
    let mu = state.mu;
    let hat = state.psi.transform(Direction::Forward)?;
    let ginv = hat.apply_momentum_multiplier(|p2| mu * mu + p2)?;
    let denom = hat.inner(&ginv)?.re;
    let norm_sqr = state.psi.norm_sqr();
    Ok(-2.0 * mu * state.lambda * norm_sqr / denom)
}

/// Newton iteration on mu toward lambda(mu) = 1. Re-runs the power iteration
/// at every new mu (warm-started from the current psi); the final energy is
/// E = -mu^2/2 + tau.
pub fn newton_mu(
    mut state: SchrodingerState,
    problem: &SchrodingerProblem,
    opts: &SolverOptions,
    tol_lambda: f64,
) -> Result<SchrodingerState> {
    if !state.converged {
        state = power_iterate(state, problem, opts, &[], None)?;
        if !state.converged {
            return Err(CoreError::MaxIterations {
                iters: opts.max_iters,
                residual: state.residual,
            });
        }
    }
    for _ in 0..NEWTON_MAX_OUTER {
        if (state.lambda - 1.0).abs() <= tol_lambda {
            state.energy = -0.5 * state.mu * state.mu + problem.tau;
            return Ok(state);
        }
        let slope = dlambda_dmu(&state, problem)?;
        let mu_next = state.mu - (state.lambda - 1.0) / slope;
        if !(mu_next > 0.0) {
            return Err(CoreError::NoBoundState(format!(
                "Newton drove mu to {mu_next}; no lambda = 1 on this branch"
            )));
        }
        state.mu = mu_next;
        state.converged = false;
        state = power_iterate(state, problem, opts, &[], None)?;
        if !state.converged {
            return Err(CoreError::MaxIterations {
                iters: opts.max_iters,
                residual: state.residual,
            });
        }
    }
    Err(CoreError::MaxIterations {
        iters: NEWTON_MAX_OUTER,
        residual: (state.lambda - 1.0).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{assemble, Nucleus, PotentialSpec};
    use approx::assert_relative_eq;

    fn hydrogen_problem(n: usize, box_len: f64) -> SchrodingerProblem {
        let grid = Grid::new(n, box_len).unwrap();
        let spec = PotentialSpec::new(vec![Nucleus::new(1.0, [0.0; 3]).unwrap()]);
        SchrodingerProblem::new(assemble(&spec, &grid).unwrap(), 0.0)
    }

    #[test]
    fn apply_t_zero_potential_and_linearity() {
        let grid = Grid::new(16, 8.0).unwrap();
        let zero_v = ScalarField::zeros(grid, Space::Real);
        let psi = default_guess(grid, [0.0; 3]);
        let out = apply_t(&psi, 1.0, &zero_v, GreensPath::PaddedSymbol).unwrap();
        assert_eq!(out.norm(), 0.0);

        let problem = hydrogen_problem(16, 8.0);
        let c = Complex64::new(0.7, -0.4);
        let a = apply_t(&psi.scaled(c), 1.0, &problem.potential, GreensPath::PaddedSymbol)
            .unwrap();
        let b = apply_t(&psi, 1.0, &problem.potential, GreensPath::PaddedSymbol)
            .unwrap()
            .scaled(c);
        let diff = a.residual_norm(Complex64::new(1.0, 0.0), &b).unwrap();
        assert!(diff <= 1e-13 * b.norm());
    }

    #[test]
    fn hydrogen_ground_state_is_a_fixed_point() {
        // exact 1s with mu = 1: T psi = psi up to discretization, pointwise
        // away from nucleus and boundary
        let problem = hydrogen_problem(120, 24.0);
        let grid = problem.grid();
        let psi = default_guess(grid, [0.0; 3]);
        let out = apply_t(&psi, 1.0, &problem.potential, GreensPath::PaddedSymbol).unwrap();
        let mid = grid.n() / 2;
        for ix in [mid + 5, mid + 10, mid + 17] {
            let i = grid.index(ix, mid, mid);
            let ratio = out.values()[i].re / psi.values()[i].re;
            assert!(
                (ratio - 1.0).abs() < 1e-3,
                "T psi / psi = {ratio} at ix={ix}"
            );
        }
    }

    #[test]
    fn constant_potential_constant_mode() {
        // V = -const: the constant field is an eigenfunction of the periodic
        // symbol path with lambda = 2 const / mu^2
        let grid = Grid::new(16, 8.0).unwrap();
        let v = ScalarField::from_fn_real(grid, |_, _, _| Complex64::new(-3.0, 0.0));
        let problem = SchrodingerProblem::new(v, 0.0);
        let psi = ScalarField::from_fn_real(grid, |_, _, _| Complex64::new(1.0, 0.0))
            .normalize()
            .unwrap();
        let mu = 1.2;
        let opts = SolverOptions {
            greens: GreensPath::Periodic,
            max_iters: 5,
            ..Default::default()
        };
        let state = power_iterate(
            SchrodingerState::new(mu, psi).unwrap(),
            &problem,
            &opts,
            &[],
            None,
        )
        .unwrap();
        assert_relative_eq!(state.lambda, 6.0 / (mu * mu), max_relative = 1e-12);
        assert!(state.converged);
    }

    #[test]
    fn breakdown_on_zero_image() {
        let grid = Grid::new(16, 8.0).unwrap();
        let v = ScalarField::zeros(grid, Space::Real);
        let problem = SchrodingerProblem::new(v, 0.0);
        let psi = default_guess(grid, [0.0; 3]);
        let err = power_iterate(
            SchrodingerState::new(1.0, psi).unwrap(),
            &problem,
            &SolverOptions::default(),
            &[],
            None,
        );
        assert!(matches!(err, Err(CoreError::Breakdown(_))));
    }

    #[test]
    fn lambda_ordering_in_mu() {
        let problem = hydrogen_problem(64, 24.0);
        let grid = problem.grid();
        let opts = SolverOptions {
            tol: 1e-7,
            ..Default::default()
        };
        let lam = |mu: f64| {
            power_iterate(
                SchrodingerState::new(mu, default_guess(grid, [0.0; 3])).unwrap(),
                &problem,
                &opts,
                &[],
                None,
            )
            .unwrap()
            .lambda
        };
        let (l_half, l_one, l_two) = (lam(0.5), lam(1.0), lam(2.0));
        assert!(l_half > 1.0 && l_two < 1.0, "{l_half} {l_two}");
        assert!(l_half > l_one && l_one > l_two);
        assert!((l_one - 1.0).abs() < 2e-2); // coarse grid, ordering test only
    }

    #[test]
    fn hydrogen_lambda_near_one_at_quarter_bohr_spacing() {
        let problem = hydrogen_problem(96, 24.0);
        let state = power_iterate(
            SchrodingerState::new(1.0, default_guess(problem.grid(), [0.0; 3])).unwrap(),
            &problem,
            &SolverOptions::default(),
            &[],
            None,
        )
        .unwrap();
        assert!(state.converged);
        assert!(
            (state.lambda - 1.0).abs() < 2e-3,
            "lambda = {}",
            state.lambda
        );
        assert!(state.lambda_im.abs() <= 1e-10 * state.lambda.abs());
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let problem = hydrogen_problem(64, 24.0);
        let grid = problem.grid();
        let opts = SolverOptions {
            tol: 1e-11,
            max_iters: 200,
            ..Default::default()
        };
        let solve = |mu: f64, guess: ScalarField| {
            power_iterate(
                SchrodingerState::new(mu, guess).unwrap(),
                &problem,
                &opts,
                &[],
                None,
            )
            .unwrap()
        };
        let center = solve(1.0, default_guess(grid, [0.0; 3]));
        let analytic = dlambda_dmu(&center, &problem).unwrap();
        assert!(analytic < 0.0);
        let h = 1e-3;
        let plus = solve(1.0 + h, center.psi.clone());
        let minus = solve(1.0 - h, center.psi.clone());
        let fd = (plus.lambda - minus.lambda) / (2.0 * h);
        assert_relative_eq!(analytic, fd, max_relative = 1e-3);
    }

    #[test]
    fn derivative_requires_convergence() {
        let problem = hydrogen_problem(16, 8.0);
        let state = SchrodingerState::new(1.0, default_guess(problem.grid(), [0.0; 3])).unwrap();
        assert!(matches!(
            dlambda_dmu(&state, &problem),
            Err(CoreError::NotConverged(_))
        ));
    }

    #[test]
    fn newton_zero_steps_at_root() {
        let problem = hydrogen_problem(64, 24.0);
        let state = power_iterate(
            SchrodingerState::new(1.0, default_guess(problem.grid(), [0.0; 3])).unwrap(),
            &problem,
            &SolverOptions::default(),
            &[],
            None,
        )
        .unwrap();
        let lambda_before = state.lambda;
        let mu_before = state.mu;
        // loose tolerance covering the achieved |lambda - 1|: no step taken
        let after = newton_mu(state, &problem, &SolverOptions::default(), 0.05).unwrap();
        assert_eq!(after.mu, mu_before);
        assert_eq!(after.lambda, lambda_before);
    }

    #[test]
    fn newton_converges_to_half_hartree() {
        let problem = hydrogen_problem(96, 24.0);
        let state = SchrodingerState::new(0.8, default_guess(problem.grid(), [0.0; 3])).unwrap();
        let out = newton_mu(state, &problem, &SolverOptions::default(), 1e-8).unwrap();
        assert!(
            (out.energy + 0.5).abs() < 2e-3,
            "E = {} after Newton",
            out.energy
        );
        assert!((out.lambda - 1.0).abs() <= 1e-8);
        // self-consistency of the two energy routes
        let expect = energy_expectation(&out.psi, &problem.potential).unwrap();
        assert!((expect - out.energy).abs() < 1e-6);
    }

    #[test]
    fn shift_invariance() {
        let grid = Grid::new(64, 32.0).unwrap();
        let spec = PotentialSpec::new(vec![Nucleus::new(1.0, [0.0; 3]).unwrap()]);
        let tau = 0.37;
        let plain = SchrodingerProblem::new(assemble(&spec, &grid).unwrap(), 0.0);
        let shifted =
            SchrodingerProblem::new(assemble(&spec.clone().with_shift(tau), &grid).unwrap(), tau);
        let opts = SolverOptions::default();
        let a = newton_mu(
            SchrodingerState::new(0.9, default_guess(grid, [0.0; 3])).unwrap(),
            &plain,
            &opts,
            1e-9,
        )
        .unwrap();
        let b = newton_mu(
            SchrodingerState::new(1.3, default_guess(grid, [0.0; 3])).unwrap(),
            &shifted,
            &opts,
            1e-9,
        )
        .unwrap();
        assert!((a.energy - b.energy).abs() < 1e-6, "{} vs {}", a.energy, b.energy);
        let overlap = a.psi.inner(&b.psi).unwrap().norm();
        assert!(overlap >= 1.0 - 1e-8, "overlap {overlap}");
        // shift identity on the expectation itself
        let ea = energy_expectation(&a.psi, &plain.potential).unwrap();
        let eb = energy_expectation(&a.psi, &shifted.potential).unwrap() + tau;
        assert!((ea - eb).abs() < 1e-8);
    }

    #[test]
    fn deflation_reaches_first_excited_level() {
        // the n = 2 shell reaches out to ~15 Bohr, so the box must be wide
        let problem = hydrogen_problem(96, 40.0);
        let grid = problem.grid();
        let opts = SolverOptions::default();
        let ground = power_iterate(
            SchrodingerState::new(1.0, default_guess(grid, [0.0; 3])).unwrap(),
            &problem,
            &opts,
            &[],
            None,
        )
        .unwrap();
        // n=2 shell of the auxiliary family sits at lambda = 1/(2 mu)
        let seed = ScalarField::from_fn_real(grid, |x, y, z| {
            let r = (x * x + y * y + z * z).sqrt();
            Complex64::new((1.0 - 0.5 * r) * (-0.5 * r).exp(), 0.0)
        });
        let excited = power_iterate(
            SchrodingerState::new(1.0, seed).unwrap(),
            &problem,
            &opts,
            std::slice::from_ref(&ground.psi),
            None,
        )
        .unwrap();
        assert!(
            (excited.lambda - 0.5).abs() < 2e-2,
            "lambda_2 = {}",
            excited.lambda
        );
        let overlap = excited.psi.inner(&ground.psi).unwrap().norm();
        assert!(overlap < 1e-8);
    }

    #[test]
    fn plane_wave_kinetic_energy() {
        let grid = Grid::new(16, 8.0).unwrap();
        let (px, py, pz) = (grid.momentum(2), grid.momentum(1), 0.0);
        let psi = ScalarField::from_fn_real(grid, |x, y, z| {
            Complex64::from_polar(1.0, px * x + py * y + pz * z)
        })
        .normalize()
        .unwrap();
        let v = ScalarField::zeros(grid, Space::Real);
        let e = energy_expectation(&psi, &v).unwrap();
        let expect = 0.5 * (px * px + py * py + pz * pz);
        assert_relative_eq!(e, expect, max_relative = 1e-12);
    }
}
