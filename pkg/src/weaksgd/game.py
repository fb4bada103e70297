"""Zero-sum matrix game between a set-query player and a prediction player.

The query player (rows, maximizer) picks a class subset S; the prediction
player (columns, minimizer) picks a class vertex y. The payoff row for S is
-(2 P(Y in S) - 1) times the +/-1 membership pattern of S, so under low
noise (max_y p_y > 1/2) the prediction player's optimum collapses onto the
most probable class.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog


class GameSolveError(RuntimeError):
    """Equilibrium solve failed or missed the requested certificate."""

    def __init__(self, message: str, gap: float | None = None):
        super().__init__(message)
        self.gap = gap


@dataclass(frozen=True)
class MatrixGame:
    """Payoff matrix with row strategies maximizing, column strategies minimizing."""

    payoff: np.ndarray
    row_labels: tuple
    col_labels: tuple

    def __post_init__(self):
        payoff = np.asarray(self.payoff, dtype=float)
        if payoff.ndim != 2 or payoff.size == 0:
            raise ValueError("payoff must be a nonempty 2-D matrix")
        if not np.isfinite(payoff).all():
            raise ValueError("payoff entries must be finite")
        object.__setattr__(self, "payoff", payoff)


@dataclass(frozen=True)
class GameSolution:
    value: float
    row_strategy: np.ndarray
    col_strategy: np.ndarray
    duality_gap: float


def build_game(p, family) -> MatrixGame:
    """Payoff matrix for class distribution ``p`` and query family ``family``.

    Entry (S, y) = -(2 P(Y in S) - 1) * (+1 if y in S else -1). Rows with
    P(Y in S) = 1/2 vanish identically.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size < 1:
        raise ValueError("p must be a nonempty probability vector")
    if (p < 0).any() or abs(float(p.sum()) - 1.0) > 1e-9:
        raise ValueError("p must be nonnegative and sum to 1")
    m = p.size
    sets = []
    for S in family:
        S = frozenset(int(s) for s in S)
        if any(s < 1 or s > m for s in S):
            raise ValueError(f"set {sorted(S)} mentions classes outside 1..{m}")
        if len(S) == 0 or len(S) == m:
            raise ValueError("query family must contain proper nonempty sets only")
        sets.append(S)
    if not sets:
        raise ValueError("query family must be nonempty")
    payoff = np.empty((len(sets), m))
    for r, S in enumerate(sets):
        margin = 2.0 * float(p[[s - 1 for s in S]].sum()) - 1.0
        pattern = np.array([1.0 if y in S else -1.0 for y in range(1, m + 1)])
        payoff[r] = -margin * pattern
    return MatrixGame(payoff, tuple(sets), tuple(range(1, m + 1)))


def _strategy_lp(A: np.ndarray, maxiter: int):
    """min_v max-row payoff as an LP over (v, t): min t s.t. Av <= t, sum v = 1."""
    k, m = A.shape
    c = np.zeros(m + 1)
    c[-1] = 1.0
    A_ub = np.hstack([A, -np.ones((k, 1))])
    A_eq = np.hstack([np.ones((1, m)), np.zeros((1, 1))])
    res = linprog(
        c,
        A_ub=A_ub,
        b_ub=np.zeros(k),
        A_eq=A_eq,
        b_eq=np.ones(1),
        bounds=[(0, None)] * m + [(None, None)],
        method="highs",
        options={"maxiter": int(maxiter)},
    )
    if not res.success:
        raise GameSolveError(f"linear program failed: {res.message}")
    v = np.maximum(res.x[:m], 0.0)
    return v / v.sum(), float(res.x[-1])


def solve_game(game: MatrixGame, iterations: int = 100_000, tol: float = 1e-6) -> GameSolution:
    """Equilibrium of the zero-sum game, certified by the duality gap.

    Solves both players' linear programs exactly and checks
    max_row (A v*) - min_col (mu*^T A) <= 2 * tol; a larger gap raises
    :class:`GameSolveError` carrying the gap.
    """
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    if not tol > 0:
        raise ValueError("tol must be > 0")
    A = game.payoff
    col_strategy, value = _strategy_lp(A, iterations)
    row_strategy, neg_value = _strategy_lp(-A.T, iterations)
    gap = float((A @ col_strategy).max() - (row_strategy @ A).min())
    if gap > 2.0 * tol:
        raise GameSolveError(
            f"duality gap {gap:.3e} exceeds certificate 2*tol = {2.0 * tol:.3e}", gap=gap
        )
    if abs(value + neg_value) > 2.0 * tol:
        raise GameSolveError(
            f"player values disagree: {value} vs {-neg_value}", gap=gap
        )
    return GameSolution(value, row_strategy, col_strategy, gap)


def singleton_family(n_classes: int) -> list[frozenset]:
    return [frozenset({y}) for y in range(1, n_classes + 1)]
