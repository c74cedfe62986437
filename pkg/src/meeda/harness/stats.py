"""Welch's t-test and win/draw/loss tallies."""

from __future__ import annotations

import math
from typing import Sequence

import numpy as np
from scipy.special import betainc

ALPHA = 0.05


def t_test(xs: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Two-sided Welch t-test; returns ``(t, p)``.

    Two zero-variance samples give ``p = 1`` when their means agree and
    ``p = 0`` otherwise.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    if len(x) < 2 or len(y) < 2:
        raise ValueError("t_test needs at least two samples on each side")
    nx, ny = len(x), len(y)
    mx, my = x.mean(), y.mean()
    vx, vy = x.var(ddof=1) / nx, y.var(ddof=1) / ny
    se2 = vx + vy
    if se2 == 0:
        if mx == my:
            return 0.0, 1.0
        return math.copysign(math.inf, mx - my), 0.0
    t = (mx - my) / math.sqrt(se2)
    # Welch-Satterthwaite, written on shares of se2 so tiny variances don't underflow
    fx, fy = vx / se2, vy / se2
    df = 1.0 / (fx**2 / (nx - 1) + fy**2 / (ny - 1))
    p = float(betainc(df / 2.0, 0.5, df / (df + t * t)))
    return float(t), min(1.0, max(0.0, p))


def compare(xs: Sequence[float], ys: Sequence[float], alpha: float = ALPHA) -> str:
    """'win', 'draw' or 'loss' of ``xs`` against ``ys`` (higher is better)."""
    _, p = t_test(xs, ys)
    if p < alpha:
        return "win" if np.mean(xs) > np.mean(ys) else "loss"
    return "draw"


def tally(
    results: dict[str, dict[str, Sequence[float]]],
    alpha: float = ALPHA,
    higher_is_better: bool = True,
) -> dict[tuple[str, str], dict[str, int]]:
    """Pairwise win/draw/loss counts over tasks.

    ``results[task][variant]`` holds per-run values. Only tasks where both
    variants have results are compared.
    """
    variants = sorted({v for per_task in results.values() for v in per_task})
    out: dict[tuple[str, str], dict[str, int]] = {}
    for a in variants:
        for b in variants:
            if a == b:
                continue
            score = {"win": 0, "draw": 0, "loss": 0}
            for per_task in results.values():
                if a in per_task and b in per_task:
                    xs, ys = per_task[a], per_task[b]
                    if not higher_is_better:
                        xs, ys = [-v for v in xs], [-v for v in ys]
                    score[compare(xs, ys, alpha)] += 1
            out[(a, b)] = score
    return out


def mean_std(values: Sequence[float]) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    return float(v.mean()), float(v.std(ddof=1)) if len(v) > 1 else 0.0
