"""Symmetrized transition matrices, extremal eigenvalues and spectral bounds."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .errors import EigensolverNoConvergence, NotReversible
from .state_graph import StateGraph

DENSE_CAP = 2_000
SYMMETRY_TOL = 1e-12


@dataclass
class SpectralResult:
    lambda2: float
    lambda_min: float
    lambda_max_mag: float
    lower_bound: float
    upper_bound: float
    method: str = "dense"
    iterations: int = 0


def symmetrize(g: StateGraph) -> sp.csr_matrix:
    """``A(x, y) = sqrt(pi(x) / pi(y)) * P(x, y)``, similar to P and symmetric."""
    P = g.matrix()
    s = np.sqrt(g.pi)
    A = (sp.diags(s) @ P @ sp.diags(1.0 / s)).tocsr()
    asym = abs(A - A.T)
    err = float(asym.max()) if asym.nnz else 0.0
    if err > SYMMETRY_TOL:
        raise NotReversible(f"symmetrized matrix is not symmetric (max deviation {err:.3e})")
    # average away rounding so the eigensolvers see an exactly symmetric matrix
    return ((A + A.T) * 0.5).tocsr()


@dataclass
class LanczosResult:
    largest: float
    smallest: float
    iterations: int
    residual: float


def lanczos_extremal(
    A,
    deflate: np.ndarray | None = None,
    tol: float = 1e-10,
    basis_size: int = 60,
    keep: int = 8,
    max_matvecs: int = 200_000,
    seed: int = 0,
) -> LanczosResult:
    """Largest and smallest eigenvalue of symmetric ``A`` by thick-restart Lanczos.

    The Krylov basis is fully reorthogonalized. ``deflate`` is a known unit
    eigenvector whose span is projected out of every basis vector, so the
    extremes are taken over its orthogonal complement. At each restart the
    ``keep`` Ritz vectors nearest each end of the spectrum are retained
    together with the current residual direction.
    """
    n = A.shape[0]
    n_eff = n - (1 if deflate is not None else 0)
    if n_eff <= 0:
        return LanczosResult(0.0, 0.0, 0, 0.0)
    m = min(basis_size, n_eff)
    keep = max(1, min(keep, (m - 1) // 2))

    def project(x):
        if deflate is not None:
            x = x - deflate * (deflate @ x)
        return x

    rng = np.random.default_rng(seed)
    v = project(rng.standard_normal(n))
    v /= np.linalg.norm(v)
    V = np.zeros((n, m + 1))
    AV = np.zeros((n, m))
    V[:, 0] = v
    k = 0
    matvecs = 0
    while True:
        exhausted = False
        built = m
        for j in range(k, m):
            w = A @ V[:, j]
            matvecs += 1
            AV[:, j] = w
            basis = V[:, : j + 1]
            r = project(w - basis @ (basis.T @ w))
            r = project(r - basis @ (basis.T @ r))
            beta = np.linalg.norm(r)
            if beta <= 1e-12 * max(1.0, np.linalg.norm(w)):
                exhausted = True
                built = j + 1
                break
            V[:, j + 1] = r / beta
        Vb, AVb = V[:, :built], AV[:, :built]
        H = Vb.T @ AVb
        H = 0.5 * (H + H.T)
        theta, S = np.linalg.eigh(H)
        ends = [0, built - 1]
        R = AVb @ S[:, ends] - (Vb @ S[:, ends]) * theta[ends]
        res = float(np.linalg.norm(R, axis=0).max())
        if exhausted or res <= tol:
            return LanczosResult(float(theta[-1]), float(theta[0]), matvecs, res)
        if matvecs >= max_matvecs:
            raise EigensolverNoConvergence(matvecs, res, tol)
        idx = sorted(set(range(keep)) | set(range(built - keep, built)))
        Y = Vb @ S[:, idx]
        AY = AVb @ S[:, idx]
        k = len(idx)
        nxt = V[:, built].copy()
        V[:, :k] = Y
        AV[:, :k] = AY
        V[:, k] = nxt


def dense_extremes(A) -> tuple[float, float]:
    """(second largest, smallest) eigenvalue from the full spectrum."""
    dense = A.toarray() if sp.issparse(A) else np.asarray(A)
    ev = np.linalg.eigvalsh(dense)
    if len(ev) == 1:
        return 0.0, 0.0
    return float(ev[-2]), float(ev[0])


def spectral_bounds(
    g: StateGraph,
    epsilon: float,
    method: str = "auto",
    dense_cap: int = DENSE_CAP,
    tol: float = 1e-10,
) -> SpectralResult:
    """Second and smallest eigenvalue of P and the spectral mixing bounds.

    ``method`` is ``"dense"``, ``"lanczos"`` or ``"auto"`` (dense up to
    ``dense_cap`` states).
    """
    A = symmetrize(g)
    n = g.n_states
    if method == "auto":
        method = "dense" if n <= dense_cap else "lanczos"
    iterations = 0
    if method == "dense":
        lam2, lam_min = dense_extremes(A)
    elif method == "lanczos":
        res = lanczos_extremal(A, deflate=np.sqrt(g.pi), tol=tol)
        lam2, lam_min, iterations = res.largest, res.smallest, res.iterations
    else:
        raise ValueError(f"unknown eigensolver {method!r}")
    lower, upper = bounds_from_lambda(max(abs(lam2), abs(lam_min)), float(g.pi.min()), epsilon)
    return SpectralResult(
        lambda2=lam2,
        lambda_min=lam_min,
        lambda_max_mag=max(abs(lam2), abs(lam_min)),
        lower_bound=lower,
        upper_bound=upper,
        method=method,
        iterations=iterations,
    )


def bounds_from_lambda(lam: float, pi_min: float, epsilon: float) -> tuple[float, float]:
    """(lower, upper) spectral bounds for second-largest eigenvalue modulus ``lam``."""
    if lam >= 1.0:
        return math.inf, math.inf
    gap = 1.0 - lam
    upper = (math.log(1.0 / epsilon) + math.log(1.0 / pi_min)) / gap
    lower = 0.5 * lam / gap * math.log(1.0 / (2.0 * epsilon))
    return lower, upper
