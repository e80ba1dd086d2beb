//! Brute-force check of the closed-form controller: the swarm objective is
//! transcribed onto a time grid with every particle position at every
//! interior and terminal time as a decision variable, and minimized by
//! descent.
//!
//! Discretized objective, with trapezoid weights `τ_k` and the initial
//! positions fixed:
//!
//! ```text
//! J(X) = dt Σ_{k=0..N} τ_k W₂²(X_k, D) + α dt Σ_{k<N} Σᵢ wᵢ ‖(x_{k+1,i} − x_{k,i})/dt‖²
//! ```
//!
//! The gradient of the transport term holds the optimal plan fixed (envelope
//! theorem): `2 τ_k dt wᵢ (x_{k,i} − M_k(x_{k,i}))`.

use crate::error::{ensure_positive, Error, Result};
use crate::ot::{extract_monge_map, pushforward, solve_kantorovich, swap_gap, ParticleCloud};
use crate::scalar::{trapezoid_weights, Scalar};
use crate::trajectory::{kinetic, StageCost, TrajectoryRecord};

#[derive(Debug, Clone, PartialEq)]
pub struct TranscriptionProblem<T> {
    r0: ParticleCloud<T>,
    demand: ParticleCloud<T>,
    alpha: T,
    horizon: T,
    steps: usize,
}

impl<T: Scalar> TranscriptionProblem<T> {
    pub fn new(r0: ParticleCloud<T>, demand: ParticleCloud<T>, alpha: T, horizon: T, steps: usize) -> Result<Self> {
        r0.check_same_dim(&demand)?;
        ensure_positive("alpha", alpha.to_f64_lossy())?;
        ensure_positive("horizon", horizon.to_f64_lossy())?;
        if steps == 0 {
            return Err(Error::NonPositive {
                name: "steps",
                value: 0.0,
            });
        }
        Ok(Self {
            r0,
            demand,
            alpha,
            horizon,
            steps,
        })
    }

    pub fn r0(&self) -> &ParticleCloud<T> {
        &self.r0
    }

    pub fn demand(&self) -> &ParticleCloud<T> {
        &self.demand
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }

    pub fn horizon(&self) -> T {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> T {
        self.horizon / T::from_usize_lossy(self.steps)
    }

    fn block(&self) -> usize {
        self.r0.points().len()
    }

    /// Number of decision values: positions at grid times `1..=N`.
    pub fn decision_len(&self) -> usize {
        self.steps * self.block()
    }

    /// Positions at grid index `k` (k = 0 is the fixed initial cloud).
    pub fn positions<'a>(&'a self, decision: &'a [T], k: usize) -> &'a [T] {
        if k == 0 {
            self.r0.points()
        } else {
            let b = self.block();
            &decision[(k - 1) * b..k * b]
        }
    }

    /// Straight-line motion to the optimal targets, linear in time.
    pub fn straight_line_guess(&self) -> Result<Vec<T>> {
        let plan = solve_kantorovich(&self.r0, &self.demand)?;
        let map = extract_monge_map(&plan, &self.r0, &self.demand)?;
        let end = pushforward(&self.r0, &map)?;
        let mut out = Vec::with_capacity(self.decision_len());
        for k in 1..=self.steps {
            let s = T::from_usize_lossy(k) / T::from_usize_lossy(self.steps);
            out.extend(
                self.r0
                    .points()
                    .iter()
                    .zip(end.points())
                    .map(|(&x, &y)| x + s * (y - x)),
            );
        }
        Ok(out)
    }

    /// Every particle stays where it starts.
    pub fn stationary_guess(&self) -> Vec<T> {
        self.r0.points().repeat(self.steps)
    }

    fn check_decision(&self, decision: &[T]) -> Result<()> {
        if decision.len() != self.decision_len() {
            return Err(Error::LengthMismatch {
                expected: self.decision_len(),
                actual: decision.len(),
            });
        }
        Ok(())
    }

    fn cloud(&self, decision: &[T], k: usize) -> Result<ParticleCloud<T>> {
        if k == 0 {
            Ok(self.r0.clone())
        } else {
            self.r0.with_points(self.positions(decision, k).to_vec())
        }
    }
}

fn motion_sum<T: Scalar>(problem: &TranscriptionProblem<T>, decision: &[T]) -> T {
    let dim = problem.r0.dim();
    let dt = problem.dt();
    let mut acc = T::zero();
    for k in 0..problem.steps {
        let a = problem.positions(decision, k);
        let b = problem.positions(decision, k + 1);
        for (i, &w) in problem.r0.weights().iter().enumerate() {
            let mut s = T::zero();
            for d in 0..dim {
                let v = (b[i * dim + d] - a[i * dim + d]) / dt;
                s = s + v * v;
            }
            acc = acc + w * s;
        }
    }
    problem.alpha * dt * acc
}

/// Discretized objective at the given decision.
pub fn oracle_cost<T: Scalar>(problem: &TranscriptionProblem<T>, decision: &[T]) -> Result<T> {
    problem.check_decision(decision)?;
    let tau = trapezoid_weights::<T>(problem.steps + 1);
    let mut transport = T::zero();
    for (k, &w) in tau.iter().enumerate() {
        let cloud = problem.cloud(decision, k)?;
        transport = transport + w * solve_kantorovich(&cloud, &problem.demand)?.cost();
    }
    Ok(problem.dt() * transport + motion_sum(problem, decision))
}

fn gradient_impl<T: Scalar>(problem: &TranscriptionProblem<T>, decision: &[T], strict: bool) -> Result<Vec<T>> {
    problem.check_decision(decision)?;
    let dim = problem.r0.dim();
    let b = problem.block();
    let dt = problem.dt();
    let two = T::lit(2.0);
    let motion_scale = two * problem.alpha / dt;
    let tau = trapezoid_weights::<T>(problem.steps + 1);
    let weights = problem.r0.weights();
    let mut grad = vec![T::zero(); decision.len()];
    for k in 1..=problem.steps {
        let cloud = problem.cloud(decision, k)?;
        let plan = solve_kantorovich(&cloud, &problem.demand)?;
        let map = extract_monge_map(&plan, &cloud, &problem.demand)?;
        if strict && map.is_permutation() {
            let gap = swap_gap(&cloud, &problem.demand, map.assignment().expect("permutation"));
            if gap < T::lit(T::TOLERANCES.tie) {
                return Err(Error::DegenerateMatching {
                    step: k,
                    gap: gap.to_f64_lossy(),
                });
            }
        }
        let prev = problem.positions(decision, k - 1);
        let here = problem.positions(decision, k);
        let next = (k < problem.steps).then(|| problem.positions(decision, k + 1));
        let g = &mut grad[(k - 1) * b..k * b];
        for (i, &w) in weights.iter().enumerate() {
            for (d, &y) in map.target(i).iter().enumerate() {
                let idx = i * dim + d;
                let x = here[idx];
                let mut lap = x - prev[idx];
                if let Some(next) = next {
                    lap = lap - (next[idx] - x);
                }
                g[idx] = two * tau[k] * dt * w * (x - y) + motion_scale * w * lap;
            }
        }
    }
    Ok(grad)
}

/// Envelope-theorem gradient of [`oracle_cost`]. Fails with
/// [`Error::DegenerateMatching`] when a one-to-one optimal matching is tied
/// with a two-swap neighbour, where the gradient is not defined.
pub fn oracle_gradient<T: Scalar>(problem: &TranscriptionProblem<T>, decision: &[T]) -> Result<Vec<T>> {
    gradient_impl(problem, decision, true)
}

/// Relative sup-norm error of [`oracle_gradient`] against central differences
/// of [`oracle_cost`] with step `h`.
pub fn gradient_check<T: Scalar>(problem: &TranscriptionProblem<T>, decision: &[T], h: T) -> Result<T> {
    let g = oracle_gradient(problem, decision)?;
    let mut x = decision.to_vec();
    let mut err = T::zero();
    let mut scale = T::zero();
    for idx in 0..x.len() {
        let orig = x[idx];
        x[idx] = orig + h;
        let plus = oracle_cost(problem, &x)?;
        x[idx] = orig - h;
        let minus = oracle_cost(problem, &x)?;
        x[idx] = orig;
        let fd = (plus - minus) / (T::lit(2.0) * h);
        err = err.max((fd - g[idx]).abs());
        scale = scale.max(g[idx].abs());
    }
    Ok(if scale > T::zero() { err / scale } else { err })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentOptions<T> {
    /// Stop when the gradient sup norm falls below this.
    pub gradient_tolerance: T,
    pub max_iterations: usize,
    /// Sufficient-decrease constant of the Armijo condition.
    pub armijo: T,
    pub backtrack: T,
    /// Also run from the stationary trajectory and keep the better result.
    pub cold_start: bool,
}

impl<T: Scalar> Default for DescentOptions<T> {
    fn default() -> Self {
        Self {
            gradient_tolerance: T::lit(1e-6),
            max_iterations: 100_000,
            armijo: T::lit(1e-4),
            backtrack: T::lit(0.5),
            cold_start: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct DirectSolution<T> {
    pub record: TrajectoryRecord<T>,
    pub decision: Vec<T>,
    /// Discretized objective at the returned decision.
    pub objective: T,
    pub gradient_norm: T,
    pub iterations: usize,
    pub converged: bool,
    /// Objective reached from the stationary start, when it was run.
    pub cold_start_objective: Option<T>,
}

/// Descent metric: the Hessian of the objective for a fixed matching. It is
/// the same tridiagonal matrix in time for every particle, scaled by the
/// particle weight, so one factorization serves all coordinates.
struct Preconditioner<T> {
    c: Vec<T>,
    denom: Vec<T>,
    lower: T,
    scale: T,
}

impl<T: Scalar> Preconditioner<T> {
    fn new(problem: &TranscriptionProblem<T>) -> Self {
        let n = problem.steps;
        let dt = problem.dt();
        let tau = trapezoid_weights::<T>(n + 1);
        let a = dt * dt / problem.alpha;
        let off = -T::one();
        let mut c = vec![T::zero(); n];
        let mut denom = vec![T::zero(); n];
        for r in 0..n {
            let k = r + 1;
            let coupling = if k == n { T::one() } else { T::lit(2.0) };
            let diag = coupling + a * tau[k];
            let upper = if r + 1 < n { off } else { T::zero() };
            denom[r] = if r == 0 { diag } else { diag - off * c[r - 1] };
            c[r] = upper / denom[r];
        }
        Self {
            c,
            denom,
            lower: off,
            scale: T::lit(2.0) * problem.alpha / dt,
        }
    }

    /// Solves `w·scale·L x = rhs` for one coordinate series.
    fn solve(&self, rhs: &mut [T], weight: T) {
        let n = rhs.len();
        let s = self.scale * weight;
        let mut d = vec![T::zero(); n];
        d[0] = rhs[0] / s / self.denom[0];
        for r in 1..n {
            d[r] = (rhs[r] / s - self.lower * d[r - 1]) / self.denom[r];
        }
        rhs[n - 1] = d[n - 1];
        for r in (0..n - 1).rev() {
            rhs[r] = d[r] - self.c[r] * rhs[r + 1];
        }
    }

    fn direction(&self, problem: &TranscriptionProblem<T>, grad: &[T]) -> Vec<T> {
        let block = problem.block();
        let dim = problem.r0.dim();
        let n = problem.steps;
        let mut dir = vec![T::zero(); grad.len()];
        let mut series = vec![T::zero(); n];
        for (i, &w) in problem.r0.weights().iter().enumerate() {
            for d in 0..dim {
                let idx = i * dim + d;
                for k in 0..n {
                    series[k] = grad[k * block + idx];
                }
                self.solve(&mut series, w);
                for k in 0..n {
                    dir[k * block + idx] = -series[k];
                }
            }
        }
        dir
    }
}

fn sup_norm<T: Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
}

struct Descent<T> {
    decision: Vec<T>,
    objective: T,
    gradient_norm: T,
    iterations: usize,
    converged: bool,
}

fn descend<T: Scalar>(
    problem: &TranscriptionProblem<T>,
    start: Vec<T>,
    options: &DescentOptions<T>,
) -> Result<Descent<T>> {
    let pre = Preconditioner::new(problem);
    let mut x = start;
    let mut f = oracle_cost(problem, &x)?;
    let mut iterations = 0;
    loop {
        let g = gradient_impl(problem, &x, false)?;
        let gnorm = sup_norm(&g);
        if gnorm < options.gradient_tolerance || iterations >= options.max_iterations {
            return Ok(Descent {
                decision: x,
                objective: f,
                gradient_norm: gnorm,
                iterations,
                converged: gnorm < options.gradient_tolerance,
            });
        }
        let dir = pre.direction(problem, &g);
        let slope = g.iter().zip(&dir).fold(T::zero(), |acc, (&a, &b)| acc + a * b);
        let mut step = T::one();
        let mut accepted = false;
        while step > T::lit(1e-14) {
            let trial: Vec<T> = x.iter().zip(&dir).map(|(&a, &d)| a + step * d).collect();
            let ft = oracle_cost(problem, &trial)?;
            if ft <= f + options.armijo * step * slope {
                x = trial;
                f = ft;
                accepted = true;
                break;
            }
            step = step * options.backtrack;
        }
        iterations += 1;
        if !accepted {
            // No decrease along the descent direction: stationary to working precision.
            return Ok(Descent {
                decision: x,
                objective: f,
                gradient_norm: gnorm,
                iterations,
                converged: false,
            });
        }
    }
}

/// Builds a trajectory record from transcription positions. Velocities are
/// central differences, one-sided at the ends of the grid.
pub fn record_from_decision<T: Scalar>(
    problem: &TranscriptionProblem<T>,
    decision: &[T],
) -> Result<TrajectoryRecord<T>> {
    problem.check_decision(decision)?;
    let dt = problem.dt();
    let n = problem.steps;
    let mut times = Vec::with_capacity(n + 1);
    let mut clouds = Vec::with_capacity(n + 1);
    let mut velocities = Vec::with_capacity(n + 1);
    let mut stage = Vec::with_capacity(n + 1);
    for k in 0..=n {
        times.push(if k == n {
            problem.horizon
        } else {
            dt * T::from_usize_lossy(k)
        });
        let cloud = problem.cloud(decision, k)?;
        let (lo, hi) = (k.saturating_sub(1), (k + 1).min(n));
        let span = dt * T::from_usize_lossy(hi - lo);
        let v: Vec<T> = problem
            .positions(decision, hi)
            .iter()
            .zip(problem.positions(decision, lo))
            .map(|(&b, &a)| (b - a) / span)
            .collect();
        stage.push(StageCost {
            assignment: solve_kantorovich(&cloud, &problem.demand)?.cost(),
            motion: problem.alpha * kinetic(&cloud, &v),
        });
        clouds.push(cloud);
        velocities.push(v);
    }
    TrajectoryRecord::new(times, clouds, velocities, stage)
}

/// Minimizes the transcribed objective by preconditioned gradient descent
/// with Armijo backtracking, starting from straight-line motion to the
/// optimal targets (and, optionally, from the stationary trajectory).
pub fn solve_direct<T: Scalar>(problem: &TranscriptionProblem<T>) -> Result<DirectSolution<T>> {
    solve_direct_with(problem, &DescentOptions::default())
}

pub fn solve_direct_with<T: Scalar>(
    problem: &TranscriptionProblem<T>,
    options: &DescentOptions<T>,
) -> Result<DirectSolution<T>> {
    let warm = descend(problem, problem.straight_line_guess()?, options)?;
    let cold = if options.cold_start {
        Some(descend(problem, problem.stationary_guess(), options)?)
    } else {
        None
    };
    let cold_start_objective = cold.as_ref().map(|c| c.objective);
    let best = match cold {
        Some(c) if c.objective < warm.objective => c,
        _ => warm,
    };
    Ok(DirectSolution {
        record: record_from_decision(problem, &best.decision)?,
        objective: best.objective,
        gradient_norm: best.gradient_norm,
        iterations: best.iterations,
        converged: best.converged,
        decision: best.decision,
        cold_start_objective,
    })
}
