"""Channel direction quantization: explicit random codebooks and the cell model."""

import logging
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from ..config import config
from .channels import SeedLike, as_generator, crandn, vec

logger = logging.getLogger(__name__)


class BitsTooLarge(Exception):
    """Explicit codebook would be too large to build."""
    pass


@dataclass(frozen=True)
class QuantizedCSI:
    """Quantized direction of one vectorized channel."""
    hhat: np.ndarray
    a: float
    s: np.ndarray
    gain: float
    index: int = 0


def rvq_codebook(dim: int, bits: int, seed: SeedLike = None) -> np.ndarray:
    """2^bits isotropic unit vectors of length dim, one per row."""
    if bits > config.rvq_max_bits:
        raise BitsTooLarge(f"{bits} bits exceeds the RVQ cap of {config.rvq_max_bits}")
    if bits < 0:
        raise ValueError(f"bits must be nonnegative, got {bits}")
    rng = as_generator(seed)
    words = crandn(rng, 2 ** bits, dim)
    return words / np.linalg.norm(words, axis=1, keepdims=True)


def _orthogonal_unit(hhat: np.ndarray) -> np.ndarray:
    """Some unit vector orthogonal to hhat."""
    for e in np.eye(len(hhat), dtype=complex):
        r = e - np.vdot(hhat, e) * hhat
        norm = np.linalg.norm(r)
        if norm > 1e-6:
            return r / norm
    raise ValueError("direction space is one-dimensional")


def quantize_with_codebook(h: np.ndarray, codebook: np.ndarray) -> QuantizedCSI:
    """Pick the codeword best aligned with the channel direction."""
    hv = vec(h) if np.ndim(h) == 2 else np.asarray(h)
    gain = float(np.vdot(hv, hv).real)
    htilde = hv / np.sqrt(gain)
    corr = np.abs(np.conj(codebook) @ htilde) ** 2
    index = int(np.argmax(corr))
    hhat = codebook[index]
    proj = np.vdot(hhat, htilde)
    a = float(min(max(1.0 - abs(proj) ** 2, 0.0), 1.0))
    residual = htilde - proj * hhat
    norm = np.linalg.norm(residual)
    s = residual / norm if norm > 1e-12 else _orthogonal_unit(hhat)
    return QuantizedCSI(hhat=hhat, a=a, s=s, gain=gain, index=index)


def quantize_rvq(h: np.ndarray, bits: int, codebook_seed: SeedLike = None) -> QuantizedCSI:
    """Random vector quantization of a channel matrix or vector."""
    hv = vec(h) if np.ndim(h) == 2 else np.asarray(h)
    return quantize_with_codebook(hv, rvq_codebook(len(hv), bits, codebook_seed))


def _quantization_scale(bits: float, dim: int) -> float:
    return float(2.0 ** (-bits / (dim - 1)))


def sample_cell_approx(bits: int, dim: int, rng: np.random.Generator) -> Tuple[float, np.ndarray]:
    """One draw of (a * ||h||^2, s) under the quantization cell model.

    ``s`` is returned in coordinates of the (dim - 1)-dimensional orthogonal
    complement of the quantized direction.
    """
    if dim < 2:
        raise ValueError(f"cell model needs dim >= 2, got {dim}")
    a_gain = float(rng.gamma(shape=dim - 1, scale=_quantization_scale(bits, dim)))
    s = crandn(rng, dim - 1)
    return a_gain, s / np.linalg.norm(s)


def cell_approx_projections(
    bits: float, dim: int, n_proj: int, rng: np.random.Generator, size: int
) -> Tuple[np.ndarray, np.ndarray]:
    """Batch of a * ||h||^2 and |s^H t_l|^2 for n_proj orthonormal t_l.

    Only the first n_proj coordinates of s are drawn; the energy of the
    remaining ones enters through a single Gamma draw.
    """
    if n_proj > dim - 1:
        raise ValueError(f"{n_proj} projections exceed the {dim - 1} free directions")
    a_gain = rng.gamma(shape=dim - 1, scale=_quantization_scale(bits, dim), size=size)
    head = rng.exponential(size=(size, n_proj))
    rest = rng.gamma(shape=dim - 1 - n_proj, size=size) if n_proj < dim - 1 else np.zeros(size)
    fractions = head / (head.sum(axis=1) + rest)[:, None]
    return a_gain, fractions


def equivalence_residual(htilde: np.ndarray, csi: QuantizedCSI, t: np.ndarray) -> Tuple[float, float]:
    """Check the split of h~^H t into quantized and error parts.

    Returns the deviation of the exact decomposition and the deviation of
    |h~^H t|^2 from a |s^H t|^2, which vanishes when hhat^H t = 0.
    """
    lhs = np.vdot(htilde, t)
    exact = np.conj(np.vdot(csi.hhat, htilde)) * np.vdot(csi.hhat, t) + np.sqrt(csi.a) * np.vdot(csi.s, t)
    aligned = abs(lhs) ** 2 - csi.a * abs(np.vdot(csi.s, t)) ** 2
    return float(abs(lhs - exact)), float(abs(aligned))
