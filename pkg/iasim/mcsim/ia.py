"""Interference alignment by alternating leakage minimization.

Combiners are the eigenvectors of the smallest eigenvalues of the
interference covariance at each receiver; precoders are obtained the same
way in the reciprocal network. Both steps minimize the same total leakage,
so it cannot increase from one round to the next.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from ..config import config
from ..netmodel import StreamProfile
from .channels import DimensionMismatch, SeedLike, as_generator, crandn

logger = logging.getLogger(__name__)


@dataclass
class IASolution:
    """Unit-norm precoders W[k] (nt x d_k) and combiners V[k] (nr x d_k)."""
    W: List[np.ndarray]
    V: List[np.ndarray]
    leakage: float
    leakage_history: List[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False


def leig(Q: np.ndarray, n: int) -> np.ndarray:
    """Eigenvectors of the n smallest eigenvalues of a Hermitian matrix."""
    _, vecs = np.linalg.eigh(Q)
    return vecs[:, :n]


def interference_covariance(H: np.ndarray, W: Sequence[np.ndarray], k: int) -> np.ndarray:
    nr = H.shape[2]
    Q = np.zeros((nr, nr), dtype=complex)
    for i in range(H.shape[0]):
        if i != k:
            HW = H[k, i] @ W[i]
            Q += HW @ HW.conj().T
    return Q


def interference_covariance_rev(H: np.ndarray, V: Sequence[np.ndarray], i: int) -> np.ndarray:
    """Covariance at transmitter i of the reciprocal network."""
    nt = H.shape[3]
    Q = np.zeros((nt, nt), dtype=complex)
    for k in range(H.shape[0]):
        if k != i:
            HV = H[k, i].conj().T @ V[k]
            Q += HV @ HV.conj().T
    return Q


def total_leakage(H: np.ndarray, W: Sequence[np.ndarray], V: Sequence[np.ndarray]) -> float:
    """sum_k sum_{i != k} ||V_k^H H_ki W_i||_F^2."""
    K = H.shape[0]
    total = 0.0
    for k in range(K):
        for i in range(K):
            if i != k:
                total += float(np.linalg.norm(V[k].conj().T @ H[k, i] @ W[i]) ** 2)
    return total


def _diagonalize_direct_links(H: np.ndarray, W: List[np.ndarray], V: List[np.ndarray]) -> None:
    # rotate within each subspace so V_k^H H_kk W_k is diagonal
    for k in range(H.shape[0]):
        U, _, Xh = np.linalg.svd(V[k].conj().T @ H[k, k] @ W[k])
        V[k] = V[k] @ U
        W[k] = W[k] @ Xh.conj().T


def _solve_once(
    H: np.ndarray, d: Sequence[int], rng: np.random.Generator, max_iter: int, tol: float
) -> IASolution:
    K, nt = H.shape[0], H.shape[3]
    W = [np.linalg.qr(crandn(rng, nt, d[k]))[0] for k in range(K)]
    V = [leig(interference_covariance(H, W, k), d[k]) for k in range(K)]
    leakage = total_leakage(H, W, V)
    history = [leakage]
    floor = 1e-24 * max(1.0, float(np.sum(np.abs(H) ** 2)))
    converged = leakage <= floor
    iterations = 0

    while not converged and iterations < max_iter:
        iterations += 1
        W = [leig(interference_covariance_rev(H, V, i), d[i]) for i in range(K)]
        V = [leig(interference_covariance(H, W, k), d[k]) for k in range(K)]
        new_leakage = total_leakage(H, W, V)
        if new_leakage > leakage * (1 + 1e-9) + floor:
            logger.warning(
                "IA leakage increased from %.3e to %.3e at iteration %d",
                leakage,
                new_leakage,
                iterations,
            )
        history.append(new_leakage)
        converged = new_leakage <= floor or abs(leakage - new_leakage) <= tol * new_leakage
        leakage = new_leakage

    _diagonalize_direct_links(H, W, V)
    return IASolution(
        W=W,
        V=V,
        leakage=leakage,
        leakage_history=history,
        iterations=iterations,
        converged=converged,
    )


def solve_ia(
    channels_for_design: np.ndarray,
    streams: StreamProfile,
    seed: SeedLike = None,
    max_iter: Optional[int] = None,
    tol: Optional[float] = None,
    restarts: Optional[int] = None,
) -> IASolution:
    """Design precoders and combiners from the given (possibly quantized) channels.

    Runs ``restarts`` random initializations and keeps the lowest leakage.
    Non-convergence is reported on the solution, never raised.
    """
    H = np.asarray(channels_for_design)
    if H.ndim != 4 or H.shape[0] != H.shape[1] or H.shape[0] != streams.K:
        raise DimensionMismatch(
            f"expected {streams.K}x{streams.K} channel blocks, got array of shape {H.shape}"
        )
    nr, nt = H.shape[2], H.shape[3]
    if max(streams.d) > min(nr, nt):
        raise DimensionMismatch(f"{max(streams.d)} streams do not fit {nr}x{nt} antennas")

    rng = as_generator(seed)
    max_iter = config.ia_max_iter if max_iter is None else max_iter
    tol = config.ia_tol if tol is None else tol
    restarts = config.ia_restarts if restarts is None else restarts

    best: Optional[IASolution] = None
    for attempt in range(max(restarts, 1)):
        solution = _solve_once(H, streams.d, rng, max_iter, tol)
        logger.debug(
            "IA attempt %d: leakage %.3e after %d iterations",
            attempt,
            solution.leakage,
            solution.iterations,
        )
        if best is None or solution.leakage < best.leakage:
            best = solution
        if solution.converged and solution.leakage < 1e-12:
            break

    assert best is not None
    if not best.converged:
        logger.warning("IA did not converge: leakage %.3e after %d iterations", best.leakage, best.iterations)
    return best
