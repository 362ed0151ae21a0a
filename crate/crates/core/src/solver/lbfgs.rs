//! Limited-memory BFGS on matrix-valued variables, with the trace inner
//! product `<A, B> = tr(A^T B)`.

use std::collections::VecDeque;

use nalgebra::DMatrix;

/// Pairs with `tr(T^T S) <= CURVATURE_EPS * |S| |T|` are not stored.
pub const CURVATURE_EPS: f64 = 1e-12;
/// Backtracking gives up below this step length.
pub const MIN_STEP: f64 = 1e-12;

/// Something the inner solver can minimize.
pub trait Objective {
    fn energy(&self, x: &DMatrix<f64>) -> f64;
    fn energy_and_gradient(&self, x: &DMatrix<f64>) -> (f64, DMatrix<f64>);
}

impl Objective for crate::energy::SurrogateSystem<'_> {
    fn energy(&self, x: &DMatrix<f64>) -> f64 {
        crate::energy::SurrogateSystem::energy(self, x)
    }

    fn energy_and_gradient(&self, x: &DMatrix<f64>) -> (f64, DMatrix<f64>) {
        crate::energy::SurrogateSystem::energy_and_gradient(self, x)
    }
}

#[derive(Clone, Debug)]
pub struct CurvaturePair {
    pub s: DMatrix<f64>,
    pub t: DMatrix<f64>,
    pub rho: f64,
}

/// Ring buffer of the most recent `m` curvature pairs, oldest first.
#[derive(Clone, Debug)]
pub struct LbfgsHistory {
    capacity: usize,
    pairs: VecDeque<CurvaturePair>,
}

impl LbfgsHistory {
    pub fn new(capacity: usize) -> Self {
        LbfgsHistory {
            capacity,
            pairs: VecDeque::with_capacity(capacity.min(64)),
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    pub fn pairs(&self) -> impl DoubleEndedIterator<Item = &CurvaturePair> {
        self.pairs.iter()
    }

    /// Stores `(S, T)` unless the curvature condition fails. Returns whether
    /// the pair was kept.
    pub fn push(&mut self, s: DMatrix<f64>, t: DMatrix<f64>) -> bool {
        if self.capacity == 0 {
            return false;
        }
        let rho = s.dot(&t);
        if !(rho > CURVATURE_EPS * s.norm() * t.norm()) {
            return false;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back(CurvaturePair { s, t, rho });
        true
    }
}

/// Two-loop recursion: the quasi-Newton direction `-H G` where `H` is the
/// L-BFGS inverse Hessian built on `h0_solve`.
pub fn two_loop_direction(
    history: &LbfgsHistory,
    grad: &DMatrix<f64>,
    h0_solve: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
) -> DMatrix<f64> {
    let mut q = -grad;
    let mut xi = Vec::with_capacity(history.len());
    for pair in history.pairs().rev() {
        let x = pair.s.dot(&q) / pair.rho;
        q -= x * &pair.t;
        xi.push(x);
    }
    let mut r = h0_solve(&q);
    for (pair, x) in history.pairs().zip(xi.iter().rev()) {
        let eta = pair.t.dot(&r) / pair.rho;
        r += (x - eta) * &pair.s;
    }
    r
}

#[derive(Clone, Debug)]
pub struct LineSearchStep {
    pub lambda: f64,
    pub x: DMatrix<f64>,
    pub energy: f64,
}

/// Backtracking from `lambda = 1`, halving until
/// `E(x + lambda d) <= E(x) + gamma lambda tr(G^T d)`. `None` once the step
/// drops below [`MIN_STEP`].
pub fn line_search<O: Objective + ?Sized>(
    objective: &O,
    x: &DMatrix<f64>,
    energy: f64,
    grad: &DMatrix<f64>,
    direction: &DMatrix<f64>,
    gamma: f64,
) -> Option<LineSearchStep> {
    let slope = grad.dot(direction);
    let mut lambda = 1.0;
    while lambda >= MIN_STEP {
        let candidate = x + lambda * direction;
        let e = objective.energy(&candidate);
        if e <= energy + gamma * lambda * slope {
            return Some(LineSearchStep {
                lambda,
                x: candidate,
                energy: e,
            });
        }
        lambda *= 0.5;
    }
    None
}

#[derive(Clone, Debug)]
pub struct InnerOutcome {
    pub x: DMatrix<f64>,
    pub iterations: usize,
    /// Objective value at the start and after every accepted step.
    pub energies: Vec<f64>,
    pub reason: InnerStop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerStop {
    SmallDecrease,
    LineSearchFailed,
    IterationCap,
}

#[derive(Clone, Copy, Debug)]
pub struct InnerParams {
    pub memory: usize,
    pub gamma: f64,
    pub eps1: f64,
    pub max_iterations: usize,
}

/// L-BFGS from `x0` until an accepted step decreases the objective by less
/// than `eps1`. History starts empty.
pub fn minimize<O: Objective + ?Sized>(
    objective: &O,
    x0: DMatrix<f64>,
    h0_solve: impl Fn(&DMatrix<f64>) -> DMatrix<f64>,
    params: &InnerParams,
) -> InnerOutcome {
    let mut history = LbfgsHistory::new(params.memory);
    let mut x = x0;
    let (mut energy, mut grad) = objective.energy_and_gradient(&x);
    let mut energies = vec![energy];
    let mut iterations = 0;
    let reason = loop {
        if iterations >= params.max_iterations {
            break InnerStop::IterationCap;
        }
        iterations += 1;
        let mut direction = two_loop_direction(&history, &grad, &h0_solve);
        if !(grad.dot(&direction) < 0.0) {
            history.clear();
            direction = -h0_solve(&grad);
            if !(grad.dot(&direction) < 0.0) {
                direction = -&grad;
            }
        }
        let step = match line_search(objective, &x, energy, &grad, &direction, params.gamma) {
            Some(step) => step,
            None => {
                let steepest = -&grad;
                match line_search(objective, &x, energy, &grad, &steepest, params.gamma) {
                    Some(step) => {
                        history.clear();
                        step
                    }
                    None => break InnerStop::LineSearchFailed,
                }
            }
        };
        let (_, new_grad) = objective.energy_and_gradient(&step.x);
        let decrease = energy - step.energy;
        history.push(&step.x - &x, &new_grad - &grad);
        x = step.x;
        energy = step.energy;
        grad = new_grad;
        energies.push(energy);
        if decrease < params.eps1 {
            break InnerStop::SmallDecrease;
        }
    };
    InnerOutcome {
        x,
        iterations,
        energies,
        reason,
    }
}
