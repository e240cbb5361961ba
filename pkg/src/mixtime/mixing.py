"""Total mixing time by dense matrix powering, plus total variation utilities."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import ComputationError, LengthMismatch, SizeCapExceeded
from .state_graph import StateGraph

DEFAULT_MIXING_CAP = 20_000
NAIVE_CAP = 2_000
_DRIFT_TOL = {np.float64: 1e-9, np.float32: 1e-4}


@dataclass
class MixingResult:
    tau: int
    epsilon: float
    matrix_mults: int
    capped: bool = False


def tv_distance(mu, eta) -> float:
    mu = np.asarray(mu, dtype=np.float64)
    eta = np.asarray(eta, dtype=np.float64)
    if mu.shape != eta.shape:
        raise LengthMismatch(f"distributions have shapes {mu.shape} and {eta.shape}")
    return 0.5 * float(np.abs(mu - eta).sum())


def max_tv(M: np.ndarray, pi: np.ndarray) -> float:
    """Largest total variation distance between a row of ``M`` and ``pi``."""
    return 0.5 * float(np.abs(M - pi).sum(axis=1).max())


def matmul(A: np.ndarray, B: np.ndarray, threads: int | None = None) -> np.ndarray:
    """Row-blocked product; blocks run on a thread pool (numpy drops the GIL)."""
    threads = threads or os.cpu_count() or 1
    n = A.shape[0]
    if threads <= 1 or n < 2 * threads:
        return A @ B
    C = np.empty((n, B.shape[1]), dtype=np.result_type(A, B))
    bounds = np.linspace(0, n, threads + 1, dtype=np.int64)

    def work(k):
        lo, hi = bounds[k], bounds[k + 1]
        np.matmul(A[lo:hi], B, out=C[lo:hi])

    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(work, range(threads)))
    return C


def matmul_reference(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Row-by-row product, used to check :func:`matmul`."""
    return np.vstack([np.dot(row, B) for row in A])


def _check_rows(M, dtype, step):
    drift = float(np.abs(M.sum(axis=1, dtype=np.float64) - 1.0).max())
    if drift > _DRIFT_TOL[dtype]:
        raise ComputationError(f"row sums drifted by {drift:.3e} after {step}")


def total_mixing_time(
    g: StateGraph,
    epsilon: float,
    max_states: int = DEFAULT_MIXING_CAP,
    precision: str = "double",
    threads: int | None = None,
    max_doublings: int = 62,
) -> MixingResult:
    """Smallest t with max_a ||P^t(a, .) - pi|| <= epsilon.

    Squares P until the distance at ``2^i`` steps is at most epsilon, then
    binary-searches ``(2^(i-1), 2^i]``. Every probe ``m`` is computed as
    ``P^l @ P^(m-l)``; since ``m - l`` is always a power of two, the second
    factor is one of the stored squares.
    """
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    n = g.n_states
    if n > max_states:
        raise SizeCapExceeded(n, max_states)
    dtype = {"double": np.float64, "single": np.float32}[precision]
    pi = g.pi.astype(dtype)

    if 1.0 - g.pi.min() <= epsilon:
        return MixingResult(0, epsilon, 0)

    powers = [g.dense(dtype)]
    mults = 0
    while max_tv(powers[-1], pi) > epsilon:
        if len(powers) > max_doublings:
            return MixingResult(2 ** max_doublings, epsilon, mults, capped=True)
        powers.append(matmul(powers[-1], powers[-1], threads))
        mults += 1
        _check_rows(powers[-1], dtype, f"squaring {mults}")
    i = len(powers) - 1
    if i == 0:
        return MixingResult(1, epsilon, mults)

    lo, hi = 2 ** (i - 1), 2 ** i
    P_lo = powers[i - 1]
    while hi - lo > 1:
        mid = (lo + hi) // 2
        step = mid - lo
        P_mid = matmul(P_lo, powers[step.bit_length() - 1], threads)
        mults += 1
        _check_rows(P_mid, dtype, f"probe {mid}")
        if max_tv(P_mid, pi) > epsilon:
            lo, P_lo = mid, P_mid
        else:
            hi = mid
    return MixingResult(hi, epsilon, mults)


def mixing_time_naive(
    g: StateGraph,
    epsilon: float,
    max_states: int = NAIVE_CAP,
    max_steps: int = 10_000_000,
) -> MixingResult:
    """Reference: advance all point-mass distributions one step at a time."""
    if not 0 < epsilon < 1:
        raise ValueError("epsilon must lie in (0, 1)")
    n = g.n_states
    if n > max_states:
        raise SizeCapExceeded(n, max_states)
    PT = g.matrix().T.tocsr()
    # column a of Q is the distribution after t steps from state a
    Q = np.eye(n)
    t = 0
    while 0.5 * float(np.abs(Q - g.pi[:, None]).sum(axis=0).max()) > epsilon:
        if t >= max_steps:
            return MixingResult(t, epsilon, t, capped=True)
        Q = PT @ Q
        t += 1
    return MixingResult(t, epsilon, t)
