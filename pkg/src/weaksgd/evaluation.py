"""Risk estimation, budget/risk curves over seeded trials, slope fits, and
CSV/SVG emission.

Noiseless excess risks are evaluated on a deterministic midpoint grid, not
on fresh random test draws, so rate fits carry no evaluation noise and
repeated runs emit byte-identical files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .datasets import LabeledDataset, anchor_conditional, anchor_support_mask
from .kernel import KernelModel
from .surrogate import decode_batch, encode_batch


@dataclass(frozen=True)
class RiskCurve:
    """Mean/std of a risk at increasing budgets, aggregated over trials."""

    budgets: np.ndarray
    mean_risk: np.ndarray
    std_risk: np.ndarray
    n_trials: int

    def __post_init__(self):
        b = np.asarray(self.budgets, dtype=int)
        mr = np.asarray(self.mean_risk, dtype=float)
        sr = np.asarray(self.std_risk, dtype=float)
        if not (b.ndim == mr.ndim == sr.ndim == 1) or not (len(b) == len(mr) == len(sr)):
            raise ValueError("budgets, mean_risk, std_risk must be equal-length vectors")
        if len(b) and (np.diff(b) <= 0).any():
            raise ValueError("budgets must be strictly increasing")
        if (sr < 0).any():
            raise ValueError("std_risk must be nonnegative")
        object.__setattr__(self, "budgets", b)
        object.__setattr__(self, "mean_risk", mr)
        object.__setattr__(self, "std_risk", sr)

    def at(self, budget: int) -> float:
        hits = np.flatnonzero(self.budgets == budget)
        if not hits.size:
            raise KeyError(f"no checkpoint at budget {budget}")
        return float(self.mean_risk[hits[0]])


def midpoint_grid(size: int, low: float = 0.0, high: float = 1.0) -> np.ndarray:
    """Deterministic uniform grid of cell midpoints on [low, high]."""
    if size < 1:
        raise ValueError("grid size must be >= 1")
    return low + (high - low) * (np.arange(size) + 0.5) / size


def empirical_risk(model: KernelModel, test: LabeledDataset, loss: str) -> float:
    """Mean test loss: rowwise ||f(x) - y|| or decoded zero-one error."""
    preds = model.predict_batch(test.features)
    if loss == "absolute-deviation":
        if test.kind == "regression":
            resid = preds - test.targets
        else:
            resid = preds - encode_batch(test.targets, test.n_classes)
        return float(np.linalg.norm(resid, axis=1).mean())
    if loss == "zero-one":
        if test.kind != "classification":
            raise ValueError("zero-one risk needs class targets")
        return float((decode_batch(preds) != test.targets).mean())
    raise ValueError(f"unknown loss {loss!r}")


def excess_risk_noiseless(model: KernelModel, target_fn, grid_size: int = 512,
                          low: float = 0.0, high: float = 1.0) -> float:
    """Mean ||f(x) - f*(x)|| over the deterministic grid; zero at f = f*."""
    xs = midpoint_grid(grid_size, low, high)
    preds = model.predict_batch(xs[:, None])
    truth = np.asarray(target_fn(xs), dtype=float)
    if truth.ndim == 1:
        truth = truth[:, None]
    return float(np.linalg.norm(preds - truth, axis=1).mean())


def excess_zero_one_anchor(model: KernelModel, n_classes: int, band_halfwidth: float,
                           grid_size: int = 512) -> float:
    """Zero-one excess risk on the anchored task, against the exact class law.

    Averages P(best class | x) - P(decoded class | x) over a deterministic
    grid restricted to the task's support.
    """
    xs = midpoint_grid(grid_size)
    xs = xs[anchor_support_mask(xs, band_halfwidth)]
    probs = np.stack([anchor_conditional(float(x), n_classes) for x in xs])
    decoded = decode_batch(model.predict_batch(xs[:, None]))
    picked = probs[np.arange(len(xs)), decoded - 1]
    return float((probs.max(axis=1) - picked).mean())


def aggregate_trials(trial_checkpoints) -> RiskCurve:
    """Pointwise mean and population standard deviation over trials.

    Every trial must report the same checkpoint budgets, in the same order.
    """
    trials = list(trial_checkpoints)
    if not trials:
        raise ValueError("need at least one trial")
    budgets = [t for t, _ in trials[0]]
    risks = np.empty((len(trials), len(budgets)))
    for r, ckpts in enumerate(trials):
        if [t for t, _ in ckpts] != budgets:
            raise ValueError("trials disagree on the checkpoint grid")
        risks[r] = [v for _, v in ckpts]
    return RiskCurve(np.asarray(budgets, dtype=int), risks.mean(axis=0),
                     risks.std(axis=0), len(trials))


def loglog_slope(curve: RiskCurve, t_min: int, t_max: int) -> float:
    """Least-squares slope of log mean risk against log budget on [t_min, t_max]."""
    mask = (curve.budgets >= t_min) & (curve.budgets <= t_max)
    if mask.sum() < 2:
        raise ValueError("need at least two checkpoints inside the fit window")
    risks = curve.mean_risk[mask]
    if (risks <= 0).any():
        raise ValueError("cannot fit a log-log slope through nonpositive risks")
    lx = np.log(curve.budgets[mask].astype(float))
    ly = np.log(risks)
    lx = lx - lx.mean()
    return float((lx @ (ly - ly.mean())) / (lx @ lx))


def emit_csv(curve: RiskCurve, path) -> None:
    """Write ``T,mean_risk,std_risk,n_trials`` rows; floats keep full precision."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("T,mean_risk,std_risk,n_trials\n")
        for t, mr, sr in zip(curve.budgets, curve.mean_risk, curve.std_risk):
            fh.write(f"{int(t)},{float(mr)!r},{float(sr)!r},{curve.n_trials}\n")


def read_csv(path) -> RiskCurve:
    """Read a curve written by :func:`emit_csv`."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines or lines[0] != "T,mean_risk,std_risk,n_trials":
        raise ValueError(f"{path}: not a risk-curve CSV")
    budgets, means, stds, trials = [], [], [], []
    for ln in lines[1:]:
        t, mr, sr, nt = ln.split(",")
        budgets.append(int(t))
        means.append(float(mr))
        stds.append(float(sr))
        trials.append(int(nt))
    if len(set(trials)) > 1:
        raise ValueError(f"{path}: n_trials varies across rows")
    return RiskCurve(np.array(budgets), np.array(means), np.array(stds),
                     trials[0] if trials else 0)


_PALETTE = ("#1f6fb4", "#e6662e", "#2e9950", "#8b36a0", "#a05c2a", "#444444")
_WIDTH, _HEIGHT = 640.0, 480.0
_MARGIN_L, _MARGIN_R, _MARGIN_T, _MARGIN_B = 72.0, 24.0, 24.0, 48.0


def _ticks(lo: float, hi: float, count: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    return [lo + (hi - lo) * i / (count - 1) for i in range(count)]


def emit_svg(curves, path, axes: str = "loglog") -> None:
    """Render labelled curves as an SVG line chart (polyline/line/text only).

    ``curves`` is a sequence of (label, RiskCurve); ``axes`` picks log-log or
    linear scaling. Output bytes are a deterministic function of the inputs.
    """
    curves = list(curves)
    if not curves:
        raise ValueError("need at least one curve to plot")
    if axes not in ("loglog", "linear"):
        raise ValueError(f"unknown axes mode {axes!r}")

    def tx(t):
        return math.log10(t) if axes == "loglog" else float(t)

    def ty(r):
        return math.log10(r) if axes == "loglog" else float(r)

    xs_all, ys_all = [], []
    for _, curve in curves:
        for t, r in zip(curve.budgets, curve.mean_risk):
            if axes == "loglog" and (t <= 0 or r <= 0):
                raise ValueError("log-log axes need positive budgets and risks")
            xs_all.append(tx(t))
            ys_all.append(ty(r))
    x_lo, x_hi = min(xs_all), max(xs_all)
    y_lo, y_hi = min(ys_all), max(ys_all)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    plot_w = _WIDTH - _MARGIN_L - _MARGIN_R
    plot_h = _HEIGHT - _MARGIN_T - _MARGIN_B

    def px(v):
        return _MARGIN_L + (v - x_lo) / (x_hi - x_lo) * plot_w

    def py(v):
        return _HEIGHT - _MARGIN_B - (v - y_lo) / (y_hi - y_lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH:.0f}" '
        f'height="{_HEIGHT:.0f}" viewBox="0 0 {_WIDTH:.0f} {_HEIGHT:.0f}">',
        f'<line x1="{_MARGIN_L:.1f}" y1="{_HEIGHT - _MARGIN_B:.1f}" '
        f'x2="{_WIDTH - _MARGIN_R:.1f}" y2="{_HEIGHT - _MARGIN_B:.1f}" stroke="#000"/>',
        f'<line x1="{_MARGIN_L:.1f}" y1="{_MARGIN_T:.1f}" '
        f'x2="{_MARGIN_L:.1f}" y2="{_HEIGHT - _MARGIN_B:.1f}" stroke="#000"/>',
    ]
    for v in _ticks(x_lo, x_hi):
        label = 10.0**v if axes == "loglog" else v
        parts.append(
            f'<line x1="{px(v):.2f}" y1="{_HEIGHT - _MARGIN_B:.1f}" '
            f'x2="{px(v):.2f}" y2="{_HEIGHT - _MARGIN_B + 5:.1f}" stroke="#000"/>'
        )
        parts.append(
            f'<text x="{px(v):.2f}" y="{_HEIGHT - _MARGIN_B + 18:.1f}" '
            f'font-size="11" text-anchor="middle">{label:.3g}</text>'
        )
    for v in _ticks(y_lo, y_hi):
        label = 10.0**v if axes == "loglog" else v
        parts.append(
            f'<line x1="{_MARGIN_L - 5:.1f}" y1="{py(v):.2f}" '
            f'x2="{_MARGIN_L:.1f}" y2="{py(v):.2f}" stroke="#000"/>'
        )
        parts.append(
            f'<text x="{_MARGIN_L - 8:.1f}" y="{py(v) + 4:.2f}" '
            f'font-size="11" text-anchor="end">{label:.3g}</text>'
        )
    for k, (label, curve) in enumerate(curves):
        color = _PALETTE[k % len(_PALETTE)]
        pts = " ".join(
            f"{px(tx(t)):.2f},{py(ty(r)):.2f}"
            for t, r in zip(curve.budgets, curve.mean_risk)
        )
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        ly = _MARGIN_T + 14.0 + 16.0 * k
        parts.append(
            f'<line x1="{_WIDTH - _MARGIN_R - 150:.1f}" y1="{ly - 4:.1f}" '
            f'x2="{_WIDTH - _MARGIN_R - 130:.1f}" y2="{ly - 4:.1f}" '
            f'stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(
            f'<text x="{_WIDTH - _MARGIN_R - 124:.1f}" y="{ly:.1f}" font-size="12">{label}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
