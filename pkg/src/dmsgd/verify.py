"""Independent oracles: dense reference stepper, finite differences, metrics.

The reference stepper implements the stacked matrix-vector form of the
update and deliberately shares no code with the per-agent loop, so the two
can cross-check each other.  Bound-domination reports compare a measured
metric trajectory against a theoretical bound trajectory with a configurable
relative slack.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "reference_step",
    "finite_diff_grad",
    "consensus_error_max",
    "consensus_error_stacked",
    "DominationReport",
    "check_bound_domination",
    "recompute_running_avg",
]


def reference_step(option, pi_eff, pi, alpha, beta, x_k, x_prev, grads):
    """Dense one-step reference: x - alpha*S(x) + beta*PiEff*(x - x_prev).

    For option I, S(x) = g + (1/alpha)(I - Pi) x; for option II the raw
    gradient g is used.  All inputs are plain arrays; ``pi_eff`` is the
    blended matrix wI + (1-w)Pi.
    """
    x_k = np.asarray(x_k, dtype=float)
    x_prev = np.asarray(x_prev, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if x_k.shape != x_prev.shape or x_k.shape != grads.shape:
        raise ValueError("state and gradient shapes disagree")
    n = x_k.shape[0]
    if np.shape(pi) != (n, n) or np.shape(pi_eff) != (n, n):
        raise ValueError("mixing matrix dimensions disagree with the state")
    if option == "I":
        s = grads + (np.eye(n) - pi) @ x_k / alpha
    elif option == "II":
        s = grads
    else:
        raise ValueError(f"option must be 'I' or 'II', got {option!r}")
    return x_k - alpha * s + beta * (pi_eff @ (x_k - x_prev))


def finite_diff_grad(f, x, h=1e-6):
    """Central-difference gradient estimate, one coordinate at a time."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        out.flat[i] = (f(x + e) - f(x - e)) / (2.0 * h)
    return out


def consensus_error_max(x):
    """max_j ||x_j - xbar|| over the agent axis."""
    dev = x - x.mean(axis=0)
    return float(np.linalg.norm(dev, axis=1).max())


def consensus_error_stacked(x):
    """||x - xbar|| of the full stacked deviation."""
    return float(np.linalg.norm(x - x.mean(axis=0)))


@dataclass
class DominationReport:
    """Outcome of metric <= bound * (1 + slack) checked row by row."""

    passed: bool
    checked: int
    first_violation: int | None = None
    metric_at_violation: float | None = None
    bound_at_violation: float | None = None
    worst_ratio: float = 0.0

    def __bool__(self):
        return self.passed


def check_bound_domination(metric, bound, slack=0.0):
    """Verify metric_k <= bound_k * (1 + slack) for every k.

    Rows are compared positionally (both trajectories must have equal
    length); an empty pair passes vacuously.  The first violating index is
    1-based, matching trace row numbering.
    """
    metric = np.asarray(metric, dtype=float)
    bound = np.asarray(bound, dtype=float)
    if metric.shape != bound.shape:
        raise ValueError(f"length mismatch: metric {metric.shape} vs bound {bound.shape}")
    if slack < 0:
        raise ValueError("slack must be >= 0")
    if metric.size == 0:
        return DominationReport(passed=True, checked=0)
    allowed = bound * (1.0 + slack)
    ok = metric <= allowed
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(allowed > 0, metric / allowed, np.where(metric <= 0, 0.0, np.inf))
    worst = float(np.nanmax(ratios))
    if ok.all():
        return DominationReport(passed=True, checked=metric.size, worst_ratio=worst)
    idx = int(np.argmin(ok))
    return DominationReport(
        passed=False,
        checked=metric.size,
        first_violation=idx + 1,
        metric_at_violation=float(metric[idx]),
        bound_at_violation=float(allowed[idx]),
        worst_ratio=worst,
    )


def recompute_running_avg(grad_norm_sq):
    """Recompute the running average column from raw squared gradient norms."""
    grad_norm_sq = np.asarray(grad_norm_sq, dtype=float)
    k = np.arange(1, grad_norm_sq.size + 1)
    return np.cumsum(grad_norm_sq) / (k + 1)
