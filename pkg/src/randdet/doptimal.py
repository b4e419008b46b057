"""D-optimal estimation with unreliable sensors and relaxed sensor selection.

Linear Gaussian model ``z = H x + eps``, ``eps ~ N(0, Sigma)``. Everything is
expressed through the whitened observation matrix ``Hbar = L^{-1} H`` where
``Sigma = L L^T``; the Fisher information is ``Hbar^T Hbar``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike
from scipy.linalg import solve_triangular

from . import expdet, linalg
from .errors import DimensionError, DomainError, SingularityError
from .linalg import Matrix, Vector


@dataclass(frozen=True)
class LinearSensorModel:
    """Observation matrix ``H`` (m x n), noise, and per-sensor survival probabilities.

    ``noise`` is either a length-m vector of variances or an m x m SPD
    covariance. ``survival`` defaults to all ones.
    """

    H: Matrix
    noise: ArrayLike | None = None
    survival: ArrayLike | None = None
    whitened: Matrix = field(init=False, repr=False)
    _chol: Matrix | None = field(init=False, repr=False)

    def __post_init__(self):
        H = linalg.as_matrix(self.H, "H")
        m, n = H.shape
        if m < n:
            raise DimensionError(f"need at least as many sensors as states, got {m} < {n}")
        noise = np.ones(m) if self.noise is None else np.array(self.noise, dtype=np.float64)
        chol = None
        if noise.ndim == 2 and noise.shape == (m, m) and m > 1:
            noise = linalg.as_matrix(noise, "noise")
            chol = linalg.cholesky(noise)
            whitened = solve_triangular(chol, H, lower=True)
        else:
            noise = noise.ravel()
            if noise.size != m:
                raise DimensionError(f"{noise.size} noise variances for {m} sensors")
            if not np.all(np.isfinite(noise)) or np.any(noise <= 0):
                raise DomainError("noise variances must be positive")
            whitened = H / np.sqrt(noise)[:, None]
        survival = linalg.as_probabilities(
            np.ones(m) if self.survival is None else self.survival, m, "survival"
        )
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "noise", noise)
        object.__setattr__(self, "survival", survival)
        object.__setattr__(self, "whitened", whitened)
        object.__setattr__(self, "_chol", chol)

    @property
    def m(self) -> int:
        return self.H.shape[0]

    @property
    def n(self) -> int:
        return self.H.shape[1]

    def whiten(self, z: ArrayLike) -> Vector:
        z = linalg.as_vector(z, "z")
        if z.size != self.m:
            raise DimensionError(f"z has length {z.size}, expected {self.m}")
        if self._chol is None:
            return z / np.sqrt(self.noise)
        return solve_triangular(self._chol, z, lower=True)


def fisher_information(model: LinearSensorModel) -> Matrix:
    Hb = model.whitened
    F = Hb.T @ Hb
    return 0.5 * (F + F.T)


def mle_estimate(model: LinearSensorModel, z: ArrayLike) -> Vector:
    """Generalized least squares estimate ``F^{-1} Hbar^T zbar`` with ``zbar`` whitened."""
    rhs = model.whitened.T @ model.whiten(z)
    try:
        return linalg.solve_spd(fisher_information(model), rhs)
    except SingularityError as exc:
        raise SingularityError(f"model not identifiable: {exc}", exc.pivot) from None


def crlb_covariance(model: LinearSensorModel) -> Matrix:
    """Covariance of the efficient estimator, the inverse Fisher information."""
    try:
        return linalg.inv_spd(fisher_information(model))
    except SingularityError as exc:
        raise SingularityError(f"model not identifiable: {exc}", exc.pivot) from None


def expected_doptimality(model: LinearSensorModel, p: ArrayLike | None = None) -> float:
    """Expected ``det`` of the information matrix when sensor i works with probability ``p_i``.

    ``p`` defaults to the model's survival probabilities.
    """
    probs = model.survival if p is None else p
    Hbt = model.whitened.T
    return expdet.expected_det_closed_form(expdet.RankOneEnsemble(Hbt, Hbt, probs))


def logdet_objective(model: LinearSensorModel, p: ArrayLike) -> float:
    """``log det(sum_i p_i hbar_i hbar_i^T)``; ``-inf`` if not positive definite."""
    Hb = model.whitened
    return linalg.logdet_spd(Hb.T @ (Hb * np.asarray(p, dtype=np.float64)[:, None]))


def logdet_gradient(model: LinearSensorModel, p: ArrayLike) -> Vector:
    """``d/dp_i log det M(p) = hbar_i^T M(p)^{-1} hbar_i``."""
    Hb = model.whitened
    M = Hb.T @ (Hb * np.asarray(p, dtype=np.float64)[:, None])
    L = linalg.cholesky(0.5 * (M + M.T))
    X = solve_triangular(L, Hb.T, lower=True)
    return np.sum(X * X, axis=0)


def project_capped_simplex(y: ArrayLike, k: float) -> Vector:
    """Euclidean projection onto ``{0 <= p <= 1, sum(p) = k}``.

    Water-filling: bisect on the shift ``tau`` until ``sum(clip(y - tau, 0, 1)) = k``.
    """
    y = np.asarray(y, dtype=np.float64)
    if not 0 <= k <= y.size:
        raise DomainError(f"sum {k} is infeasible for {y.size} entries in [0, 1]")
    lo, hi = float(np.min(y)) - 1.0, float(np.max(y))
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if np.sum(np.clip(y - mid, 0.0, 1.0)) > k:
            lo = mid
        else:
            hi = mid
    lo_p = np.clip(y - lo, 0.0, 1.0)
    hi_p = np.clip(y - hi, 0.0, 1.0)
    s_lo, s_hi = float(np.sum(lo_p)), float(np.sum(hi_p))
    if s_lo == s_hi:
        return lo_p
    # the sum is piecewise linear in tau, interpolate inside the final bracket
    t = (s_lo - k) / (s_lo - s_hi)
    return np.clip((1.0 - t) * lo_p + t * hi_p, 0.0, 1.0)


@dataclass(frozen=True)
class SolverOptions:
    max_iters: int = 2000
    step: float = 1.0
    tol: float = 1e-7
    min_step: float = 1e-14


@dataclass
class SelectionResult:
    probs: Vector
    selected: tuple[int, ...]
    objective_trace: list[tuple[int, float]]
    converged: bool

    @property
    def objective(self) -> float:
        return self.objective_trace[-1][1]


def round_top_k(probs: ArrayLike, k: int) -> tuple[int, ...]:
    """Indices of the k largest entries; ties go to the lower index."""
    order = np.argsort(-np.asarray(probs), kind="stable")
    return tuple(sorted(int(i) for i in order[:k]))


def select_sensors(
    model: LinearSensorModel,
    k: int,
    opts: SolverOptions | None = None,
) -> SelectionResult:
    """Relaxed D-optimal choice of k sensors by projected gradient ascent.

    Maximizes ``log det(sum_i p_i hbar_i hbar_i^T)`` over the box-capped
    simplex starting from ``p = k/m``, with a halving line search that only
    accepts strict ascent. Stops when the projected gradient step
    ``||proj(p + grad) - p||`` drops to ``opts.tol``; a stalled line search
    ends the run unconverged. The top-k entries give the rounded selection.
    """
    opts = opts or SolverOptions()
    m, n = model.m, model.n
    if int(k) != k or not n <= k <= m:
        raise DomainError(f"k must be an integer with {n} <= k <= {m}, got {k}")
    k = int(k)
    p = np.full(m, k / m)
    f = logdet_objective(model, p)
    if f == -math.inf or np.linalg.matrix_rank(model.whitened) < n:
        raise SingularityError("information matrix is singular even with every sensor")
    trace = [(0, f)]
    converged = False
    for it in range(1, opts.max_iters + 1):
        g = logdet_gradient(model, p)
        if np.linalg.norm(project_capped_simplex(p + g, k) - p) <= opts.tol:
            converged = True
            break
        step = opts.step
        while step >= opts.min_step:
            cand = project_capped_simplex(p + step * g, k)
            fc = logdet_objective(model, cand)
            if fc > f:
                p, f = cand, fc
                trace.append((it, f))
                break
            step *= 0.5
        else:
            break
    return SelectionResult(
        probs=p,
        selected=round_top_k(p, k),
        objective_trace=trace,
        converged=converged,
    )


def indicator(indices, m: int) -> Vector:
    p = np.zeros(m)
    p[list(indices)] = 1.0
    return p
