"""Spectral tools for nonnegative matrices.

The spectral radius is computed by power iteration on ``A + I``: for a
nonnegative matrix, rho(A) + 1 strictly dominates |lambda + 1| for every
other eigenvalue lambda not equal to rho(A), so the iteration also
converges for matrices with a periodic (e.g. +/- rho) peripheral spectrum.
When rho(A) is tiny relative to 1 that gap can be too small to close within
the iteration budget; a dense eigensolve is then used instead.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, ConvergenceError

DEAD_ZONE = 1e-9
MAX_ITER = 1_000_000
STALL_ITER = 20_000  # hand over to the dense solve after this many power steps


class Direction(str, enum.Enum):
    CONTRACT = "contract"  # A v << v, certifies rho(A) < 1
    EXPAND = "expand"      # A v >> v, certifies rho(A) > 1


@dataclass(frozen=True)
class Certificate:
    """A positive vector v with A v << v (contract) or A v >> v (expand).

    ``margin`` is ``min_i |v_i - (A v)_i| / v_i``.
    """

    direction: Direction
    vector: np.ndarray
    margin: float


@dataclass(frozen=True)
class Refusal:
    """No certificate could be produced; ``reason`` says why."""

    reason: str


@dataclass(frozen=True)
class SpectralReport:
    rho: float
    right_vector: np.ndarray
    left_vector: np.ndarray
    iterations: int
    residual: float
    left_residual: float
    bounds: tuple[float, float]
    certificate: Certificate | None = None


def _as_nonnegative(A) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
        raise ConfigurationError(f"expected a non-empty square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ConfigurationError("matrix has non-finite entries")
    if np.any(A < 0):
        raise ConfigurationError("matrix has negative entries")
    return A


def norm_bounds(A) -> tuple[float, float]:
    """(min row sum, max column sum), which bracket rho(A) for A >= 0."""
    A = _as_nonnegative(A)
    return float(A.sum(axis=1).min()), float(A.sum(axis=0).max())


def _power(A: np.ndarray, max_iter: int):
    n = A.shape[0]
    B = A + np.eye(n)
    v = np.full(n, 1.0 / n)
    prev = np.inf
    resid = np.inf
    rho = 0.0
    for it in range(1, max_iter + 1):
        y = B @ v
        v = y / y.sum()
        Av = A @ v
        rho = float(Av.sum())  # 1^T A v / 1^T v with ||v||_1 = 1
        resid = float(np.abs(Av - rho * v).sum())
        scale = max(1.0, rho)
        if resid < 1e-12 * scale or (abs(rho - prev) < 1e-13 * scale and resid <= 1e-10 * scale):
            return rho, v, it, resid
        prev = rho
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations (residual {resid:.3g})",
        residual=resid, bounds=None)


def _dense(A: np.ndarray):
    """Perron root and vector from a full eigendecomposition."""
    vals, vecs = np.linalg.eig(A)
    k = int(np.argmax(vals.real))
    rho = max(0.0, float(vals[k].real))
    v = np.abs(vecs[:, k].real)
    if not np.isfinite(v).all() or v.sum() <= 0:
        raise ConvergenceError("dense eigensolve returned no usable Perron vector")
    v = v / v.sum()
    resid = float(np.abs(A @ v - rho * v).sum())
    if resid > 1e-10 * max(1.0, rho):
        raise ConvergenceError(f"dense eigensolve residual {resid:.3g} too large", residual=resid)
    return rho, v, 0, resid


def _perron(A: np.ndarray, max_iter: int):
    """Power iteration, cross-checked against (and if needed replaced by) a dense solve.

    Power iteration converges only like 1/t on defective or nearly cyclic
    matrices and can then stop early with a wrong root; the dense solve
    catches that.  It also takes over once the iteration stalls.
    """
    try:
        out = _power(A, min(max_iter, STALL_ITER))
    except ConvergenceError as exc:
        try:
            return _dense(A)
        except ConvergenceError:
            pass
        if max_iter <= STALL_ITER:
            raise exc from None
        return _power(A, max_iter)
    try:
        alt = _dense(A)
    except ConvergenceError:
        return out
    # on disagreement keep whichever eigenpair fits better
    if abs(out[0] - alt[0]) > 1e-12 * max(1.0, out[0]) and alt[3] < out[3]:
        return alt[0], alt[1], out[2], alt[3]
    return out


def spectral_radius(A, max_iter: int = MAX_ITER) -> SpectralReport:
    """Spectral radius with right and left Perron vectors (1-norm normalised)."""
    A = _as_nonnegative(A)
    bounds = norm_bounds(A)
    try:
        rho, v, it, resid = _perron(A, max_iter)
        rho_l, w, it_l, resid_l = _perron(A.T, max_iter)
    except ConvergenceError as exc:
        raise ConvergenceError(str(exc), residual=exc.residual, bounds=bounds) from None
    return SpectralReport(rho, v, w, max(it, it_l), resid, resid_l, bounds)


def strict_certificate(A, want: Direction | str) -> Certificate | Refusal:
    """Positive v with A v << v (``contract``) or A v >> v (``expand``).

    v is the right Perron vector of ``A + eps * ones``, shrinking eps until
    the perturbed radius stays on the same side of 1 and the strict
    inequalities check out entrywise.
    """
    A = _as_nonnegative(A)
    want = Direction(want)
    rho = spectral_radius(A).rho
    if abs(rho - 1.0) <= DEAD_ZONE:
        return Refusal(f"spectral radius {rho:.17g} is within {DEAD_ZONE:g} of 1")
    if want is Direction.CONTRACT and rho > 1:
        return Refusal(f"spectral radius {rho:.17g} > 1: no contracting vector exists")
    if want is Direction.EXPAND and rho < 1:
        return Refusal(f"spectral radius {rho:.17g} < 1: no expanding vector exists")
    n = A.shape[0]
    J = np.ones((n, n))
    eps = abs(1.0 - rho) / (4.0 * n)
    for _ in range(60):
        rho_e, v, _, _ = _perron(A + eps * J, MAX_ITER)
        Av = A @ v
        if want is Direction.CONTRACT:
            ok = rho_e < 1 and np.all(v > 0) and np.all(Av < v)
            margin = np.min((v - Av) / v) if ok else 0.0
        else:
            ok = rho_e > 1 and np.all(v > 0) and np.all(Av > v)
            margin = np.min((Av - v) / v) if ok else 0.0
        if ok:
            return Certificate(want, v, float(margin))
        eps /= 2.0
    return Refusal("no strictly positive certificate found (matrix may be reducible)")


def r_index(model) -> float:
    """min( min_i g_i(0), min_i g_i(0) * sum_{j != i} d_ji(0) ).

    Values above 1 imply instability of extinction.  For one region the
    outflow sum is empty (zero), so the index is 0 and never certifies.
    """
    g0 = np.asarray(model.g0, dtype=float)
    D0 = model.dispersal.at_zero()
    n = len(g0)
    outflow = D0.sum(axis=0) - np.diag(D0)  # sum over destinations j != i of d_ji(0)
    return float(min(np.min(g0), np.min(g0 * outflow)))
