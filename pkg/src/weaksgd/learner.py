"""SGD drivers that learn kernel models from single-bit label queries.

All drivers share the same skeleton: walk the input sequence, spend one
oracle bit per step, apply the matching coefficient step, and maintain the
running average of the iterates (checkpoint risks are evaluated on that
average). A driver consumes exactly ``min(budget, len(sequence))`` queries.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import sample_sphere_batch
from .kernel import AveragedModel, KernelModel, apply_weak_step, kernel_matrix
from .oracle import QueryOracle


@dataclass(frozen=True)
class StepSchedule:
    """Step-size rule gamma(t).

    ``constant`` keeps gamma(t) = bound / (kappa * sqrt(horizon)) for every t,
    the horizon-tuned rate; ``decaying`` uses gamma0 / sqrt(t), which needs no
    horizon known in advance.
    """

    kind: str
    gamma0: float | None = None
    horizon: int | None = None
    bound: float | None = None
    kappa: float = 1.0

    def __post_init__(self):
        if self.kind == "decaying":
            if self.gamma0 is None or not self.gamma0 > 0:
                raise ValueError("decaying schedule needs gamma0 > 0")
        elif self.kind == "constant":
            if self.horizon is None or self.horizon < 1:
                raise ValueError("constant schedule needs a horizon >= 1")
            if self.bound is None or not self.bound > 0 or not self.kappa > 0:
                raise ValueError("constant schedule needs bound > 0 and kappa > 0")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def decaying(cls, gamma0: float) -> "StepSchedule":
        return cls(kind="decaying", gamma0=float(gamma0))

    @classmethod
    def constant_for_horizon(cls, bound: float, kappa: float, horizon: int) -> "StepSchedule":
        return cls(kind="constant", horizon=int(horizon), bound=float(bound), kappa=float(kappa))

    @classmethod
    def constant(cls, gamma: float, horizon: int) -> "StepSchedule":
        """Constant schedule pinned directly at step size ``gamma``."""
        if not gamma > 0:
            raise ValueError("gamma must be > 0")
        return cls.constant_for_horizon(gamma * np.sqrt(horizon), 1.0, horizon)

    def gamma(self, t: int) -> float:
        if t < 1:
            raise ValueError("steps are 1-based")
        if self.kind == "constant":
            return self.bound / (self.kappa * np.sqrt(self.horizon))
        return self.gamma0 / np.sqrt(t)


@dataclass
class TrainReport:
    """Outcome of one run: final iterate, averaged iterate, checkpoint risks.

    ``checkpoints`` holds (budget_used, value) pairs where value is the
    ``evaluate`` result on the averaged model, or a coefficient snapshot when
    no evaluator was supplied.
    """

    final_model: KernelModel
    averaged_model: KernelModel
    checkpoints: list
    queries_used: int


def _prepare(X, model: KernelModel, budget: int, checkpoint_grid, indices):
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if indices is None:
        indices = np.arange(X.shape[0])
    else:
        indices = np.asarray(indices, dtype=int)
    steps = min(int(budget), len(indices))
    if checkpoint_grid is None:
        grid: list[int] = []
    else:
        grid = [int(c) for c in checkpoint_grid]
        if any(c < 1 for c in grid) or sorted(set(grid)) != grid:
            raise ValueError("checkpoint grid must be strictly increasing positive ints")
        if grid and grid[-1] > steps:
            raise ValueError(
                f"checkpoint {grid[-1]} exceeds the {steps} steps this run can take"
            )
    used = indices[:steps]
    K = kernel_matrix(model.spec, X[used], model.representers) if steps else None
    return used, steps, grid, K


def default_checkpoints(budget: int) -> list[int]:
    """Powers of two up to the budget, always including the budget itself."""
    if budget < 1:
        return []
    grid = []
    c = 1
    while c < budget:
        grid.append(c)
        c *= 2
    grid.append(int(budget))
    return grid


class _Recorder:
    """Evaluates the running average at the requested budgets."""

    def __init__(self, model, grid, evaluate):
        self.template = model
        self.grid = grid
        self.evaluate = evaluate
        self.avg = AveragedModel.zeros(model.rank, model.output_dim)
        self.records = []
        self._next = 0

    def step(self, coefficients, t):
        self.avg.accumulate(coefficients)
        if self._next < len(self.grid) and self.grid[self._next] == t:
            snap = self.avg.snapshot(self.template)
            value = self.evaluate(snap) if self.evaluate is not None else snap.coefficients
            self.records.append((t, value))
            self._next += 1

    def report(self, model, queries) -> TrainReport:
        return TrainReport(model, self.avg.snapshot(model), self.records, queries)


def run_median_sgd(
    X,
    oracle: QueryOracle,
    schedule: StepSchedule,
    model: KernelModel,
    rng: np.random.Generator,
    checkpoint_grid=None,
    evaluate=None,
    indices=None,
    direction: str = "sphere",
) -> TrainReport:
    """Absolute-deviation SGD from half-space bits.

    Per step: draw a unit direction U, set z = f(x), query
    eps = sign(<Y - z, U>), and step the coefficients by
    gamma(t) * eps * (U_j k(x, x_i)). ``direction="coordinate"`` draws U
    uniformly from the canonical basis instead of the sphere (the passive
    coordinate strategy for classification).
    """
    used, steps, grid, K = _prepare(X, model, oracle.budget_remaining, checkpoint_grid, indices)
    m = model.output_dim
    rec = _Recorder(model, grid, evaluate)
    if steps:
        if direction == "sphere":
            U = sample_sphere_batch(rng, m, steps)
        elif direction == "coordinate":
            U = np.eye(m)[rng.integers(0, m, steps)]
        else:
            raise ValueError(f"unknown direction scheme {direction!r}")
    a = model.coefficients
    lam = model.ridge
    for t in range(1, steps + 1):
        kcol = K[t - 1]
        u = U[t - 1]
        z = kcol @ a
        eps = oracle.halfspace_query(int(used[t - 1]), z, u)
        apply_weak_step(model, kcol, u, float(eps), schedule.gamma(t), lam)
        rec.step(a, t)
    return rec.report(model, steps)


def run_least_squares_sgd(
    X,
    oracle: QueryOracle,
    schedule: StepSchedule,
    model: KernelModel,
    rng: np.random.Generator,
    bound: float,
    checkpoint_grid=None,
    evaluate=None,
    indices=None,
) -> TrainReport:
    """Squared-loss SGD from threshold bits.

    Per step: draw U on the sphere and V uniform on [0, 2*bound], query
    b = 1{<Y, U> < <f(x), U> - V}, and descend by gamma(t) * b * (U_j k(x, x_i)).
    The caller asserts ||f(x) - Y|| <= 2*bound; the oracle cannot check it.
    """
    if not bound > 0:
        raise ValueError("bound must be > 0")
    used, steps, grid, K = _prepare(X, model, oracle.budget_remaining, checkpoint_grid, indices)
    m = model.output_dim
    rec = _Recorder(model, grid, evaluate)
    if steps:
        U = sample_sphere_batch(rng, m, steps)
        V = rng.uniform(0.0, 2.0 * bound, steps)
    a = model.coefficients
    lam = model.ridge
    for t in range(1, steps + 1):
        kcol = K[t - 1]
        u = U[t - 1]
        z = kcol @ a
        c = float(z @ u) - V[t - 1]
        b = oracle.threshold_query(int(used[t - 1]), u, c)
        gamma = schedule.gamma(t)
        if lam != 0.0:
            a *= 1.0 - gamma * lam
        if b:
            a -= gamma * np.outer(kcol, u)
        rec.step(a, t)
    return rec.report(model, steps)


def run_full_sgd(
    X,
    Y,
    schedule: StepSchedule,
    model: KernelModel,
    checkpoint_grid=None,
    evaluate=None,
    indices=None,
) -> TrainReport:
    """Fully supervised subgradient baseline on the absolute-deviation loss.

    Uses the labels directly (no oracle, no budget): descends along
    (f(x) - y)/||f(x) - y||, with subgradient 0 at f(x) = y.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    used, steps, grid, K = _prepare(X, model, len(Y) if indices is None else len(indices),
                                    checkpoint_grid, indices)
    rec = _Recorder(model, grid, evaluate)
    a = model.coefficients
    lam = model.ridge
    for t in range(1, steps + 1):
        kcol = K[t - 1]
        r = kcol @ a - Y[used[t - 1]]
        nr = float(np.sqrt(r @ r))
        gamma = schedule.gamma(t)
        if lam != 0.0:
            a *= 1.0 - gamma * lam
        if nr > 0.0:
            a -= (gamma / nr) * np.outer(kcol, r)
        rec.step(a, t)
    return rec.report(model, 0)  # fully supervised: no oracle bits spent


def run_passive_median(
    X,
    oracle: QueryOracle,
    schedule: StepSchedule,
    model: KernelModel,
    rng: np.random.Generator,
    checkpoint_grid=None,
    evaluate=None,
    indices=None,
) -> TrainReport:
    """Passive baseline for scalar regression: thresholds drawn blindly.

    Per step: draw v ~ N(0, 1) and learn the bit b = 1{Y > v}. The step is
    the subgradient of the best-case loss over the revealed half-line
    inf_{y in S} |f(x) - y|: move up if b = 1 and f(x) < v, down if b = 0 and
    f(x) > v, and leave the coefficients alone when f(x) already sits in S.
    """
    if model.output_dim != 1:
        raise ValueError("the passive threshold strategy is defined for scalar outputs")
    used, steps, grid, K = _prepare(X, model, oracle.budget_remaining, checkpoint_grid, indices)
    rec = _Recorder(model, grid, evaluate)
    if steps:
        V = rng.standard_normal(steps)
    a = model.coefficients
    lam = model.ridge
    one = np.ones(1)
    for t in range(1, steps + 1):
        kcol = K[t - 1]
        v = float(V[t - 1])
        below = oracle.threshold_query(int(used[t - 1]), one, v)  # 1{Y < v}
        b = 1 - below  # 1{Y > v} up to the null event Y = v
        z = float(kcol @ a[:, 0])
        gamma = schedule.gamma(t)
        if lam != 0.0:
            a *= 1.0 - gamma * lam
        if b == 1 and z < v:
            a[:, 0] += gamma * kcol
        elif b == 0 and z > v:
            a[:, 0] -= gamma * kcol
        rec.step(a, t)
    return rec.report(model, steps)
