"""Score functions over logits and the analytic gradients attached to them.

An attribution method differentiates a scalar score S for a class c. Three
choices are supported: the raw logit z_c, the softmax probability y_c, and
the log-probability log y_c. This module holds the pure (array in, array
out) forms plus the closed-form softmax Jacobian and cross-entropy
gradients; tape-level counterparts live in the engine.
"""

from __future__ import annotations

import enum

import numpy as np

from . import engine
from .engine import Array, Node, Tape


class ScoreKind(enum.Enum):
    """Which scalar the attribution differentiates."""

    PRE_SOFTMAX = "pre"
    POST_SOFTMAX = "post"
    LOG_SOFTMAX = "log"

    @classmethod
    def parse(cls, token: str) -> "ScoreKind":
        for kind in cls:
            if kind.value == token:
                return kind
        raise ValueError(f"unknown score kind {token!r}; expected pre|post|log")


def _check_logits(z: Array) -> Array:
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 1 or z.size < 2:
        raise ValueError(f"logits must be a vector of length >= 2, got shape {z.shape}")
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    return z


def softmax(z: Array) -> Array:
    """Probabilities from logits, evaluated shift-stably (max subtracted).

    Subtracting the max is exact, not an approximation: adding a common
    term to every logit provably leaves the outputs unchanged.
    """
    z = _check_logits(z)
    e = np.exp(z - z.max())
    return e / e.sum()


def log_softmax(z: Array) -> Array:
    """log y as z - logsumexp(z); never log(softmax(z)), which underflows."""
    z = _check_logits(z)
    shifted = z - z.max()
    return shifted - np.log(np.exp(shifted).sum())


def softmax_jacobian(y: Array) -> Array:
    """d y_c / d z_i = y_c * (delta_ic - y_i), as an (n, n) matrix (row = c)."""
    y = np.asarray(y, dtype=np.float64)
    return y[:, None] * (np.eye(y.size) - y[None, :])


def score_scalar(kind: ScoreKind, z: Array, c: int) -> float:
    """The scalar S for class c under the chosen score kind."""
    z = _check_logits(z)
    if not 0 <= c < z.size:
        raise ValueError(f"class index {c} out of range for {z.size} logits")
    if kind is ScoreKind.PRE_SOFTMAX:
        return float(z[c])
    if kind is ScoreKind.POST_SOFTMAX:
        return float(softmax(z)[c])
    return float(log_softmax(z)[c])


def score_col(tape: Tape, logits: Node, kind: ScoreKind, c: int) -> Node:
    """Tape node of per-row scores (B,) for class c on batched logits (B, n)."""
    n = logits.value.shape[-1]
    if not 0 <= c < n:
        raise ValueError(f"class index {c} out of range for {n} logits")
    if kind is ScoreKind.PRE_SOFTMAX:
        return engine.take_col(tape, logits, c)
    if kind is ScoreKind.POST_SOFTMAX:
        return engine.softmax_col(tape, logits, c)
    return engine.log_softmax_col(tape, logits, c)


# ---------------------------------------------------------------------------
# cross-entropy


def check_target(t: Array) -> Array:
    """Validate a target distribution: non-negative, sums to 1."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValueError("target components must be non-negative")
    if abs(t.sum() - 1.0) > 1e-9:
        raise ValueError(f"target must sum to 1, got {t.sum()!r}")
    return t


def cross_entropy(z: Array, t: Array) -> float:
    """L = -sum_c t_c log y_c from logits; for 1-hot t this is -log y_cbar."""
    t = check_target(t)
    ls = log_softmax(z)
    if t.shape != ls.shape:
        raise ValueError("target length must match logits length")
    # 1-hot targets contribute a single term, so the value equals -log y_cbar
    # exactly (the zero terms are exact zeros).
    return float(-(t * ls).sum())


def loss_grad_logits(y: Array, t: Array) -> Array:
    """dL/dz_c = y_c - t_c (the softmax Jacobian collapses the -t/y factor)."""
    t = check_target(t)
    y = np.asarray(y, dtype=np.float64)
    return y - t


def loss_grad_wrt_y(y: Array, t: Array) -> Array:
    """dL/dy_c = -t_c / y_c; rejected when some y_c = 0 carries target mass."""
    t = check_target(t)
    y = np.asarray(y, dtype=np.float64)
    bad = (y == 0.0) & (t > 0.0)
    if np.any(bad):
        raise ValueError(f"infinite gradient: y is 0 at class {int(np.argmax(bad))} with positive target")
    out = np.zeros_like(y)
    nz = t > 0.0
    out[nz] = -t[nz] / y[nz]
    return out
