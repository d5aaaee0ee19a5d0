"""Dense complex linear algebra, Haar sampling and PSD checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import unitary_group

HERMITIAN_ATOL = 1e-10
PSD_RTOL = 1e-9


class DimensionError(ValueError):
    """Operand shapes are inconsistent with the requested operation."""


def kron(a, b):
    """Kronecker product ``a ⊗ b``."""
    return np.kron(np.asarray(a), np.asarray(b))


def _check_bipartite(m, d_alpha, d_beta):
    m = np.asarray(m)
    n = d_alpha * d_beta
    if m.ndim != 2 or m.shape != (n, n):
        raise DimensionError(f"expected a {n}x{n} matrix for dims ({d_alpha}, {d_beta}), got {m.shape}")
    return m


def partial_trace(m, d_alpha, d_beta, subsystem="alice"):
    """Trace out one party of an operator on C^d_alpha ⊗ C^d_beta.

    Parameters
    ----------
    m : array_like
        Square matrix of side ``d_alpha * d_beta``.
    d_alpha, d_beta : int
        Local dimensions of Alice and Bob.
    subsystem : {"alice", "bob"}
        The party that is traced out.

    Returns
    -------
    numpy.ndarray
        Reduced operator on the remaining party.
    """
    m = _check_bipartite(m, d_alpha, d_beta)
    t = m.reshape(d_alpha, d_beta, d_alpha, d_beta)
    sub = subsystem.lower()
    if sub == "alice":
        return np.einsum("ijik->jk", t)
    if sub == "bob":
        return np.einsum("ijkj->ik", t)
    raise ValueError(f"subsystem must be 'alice' or 'bob', not {subsystem!r}")


def partial_transpose(m, d_alpha, d_beta, subsystem="alice"):
    """Transpose one tensor factor of a bipartite operator."""
    m = _check_bipartite(m, d_alpha, d_beta)
    t = m.reshape(d_alpha, d_beta, d_alpha, d_beta)
    sub = subsystem.lower()
    if sub == "alice":
        t = t.transpose(2, 1, 0, 3)
    elif sub == "bob":
        t = t.transpose(0, 3, 2, 1)
    else:
        raise ValueError(f"subsystem must be 'alice' or 'bob', not {subsystem!r}")
    return t.reshape(d_alpha * d_beta, d_alpha * d_beta)


def is_hermitian(m, atol=HERMITIAN_ATOL):
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T), initial=0.0) <= atol


def min_eigenvalue_hermitian(m, atol=HERMITIAN_ATOL):
    """Smallest eigenvalue of the Hermitian part of `m`.

    Raises
    ------
    ValueError
        If `m` is not square or deviates from Hermitian by more than `atol` (max-norm).
    """
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    if not is_hermitian(m, atol):
        raise ValueError("matrix is not Hermitian within tolerance")
    h = 0.5 * (m + m.conj().T)
    return float(np.linalg.eigvalsh(h)[0])


def psd_tolerance(m):
    """Slack allowed below zero when deciding ``m >= 0``."""
    return PSD_RTOL * (1.0 + float(np.linalg.norm(m, 2)))


def is_psd(m):
    return min_eigenvalue_hermitian(m) >= -psd_tolerance(m)


def trace_distance(a, b):
    """Half the trace norm of ``a - b`` for Hermitian operands."""
    diff = np.asarray(a) - np.asarray(b)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def make_rng(seed=None):
    """Counter-based generator (Philox) so that workers can be seeded independently."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(seed))


@dataclass
class HaarSampler:
    """Stream of Haar-random unit vectors in C^d.

    Components are i.i.d. standard complex Gaussians, normalized. A sampler
    owns its generator; do not share one between threads, use :meth:`spawn`.
    """

    d: int
    seed: int | None = None
    _rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("dimension must be positive")
        self._rng = make_rng(self.seed)

    @property
    def rng(self):
        return self._rng

    def sample(self, n):
        """Return an ``(n, d)`` array whose rows are Haar-random unit vectors."""
        z = self._rng.standard_normal((n, 2 * self.d)).view(np.complex128)
        z /= np.linalg.norm(z, axis=1, keepdims=True)
        return z

    def spawn(self, k):
        """Independent child samplers for parallel workers."""
        seeds = np.random.SeedSequence(self.seed).spawn(k)
        return [HaarSampler(self.d, int(s.generate_state(1, np.uint64)[0])) for s in seeds]


def haar_vector(sampler):
    """Single Haar-random unit vector drawn from `sampler`."""
    return sampler.sample(1)[0]


def haar_unitaries(rng, d, n):
    """``(n, d, d)`` stack of Haar-random unitaries."""
    u = unitary_group.rvs(d, size=n, random_state=make_rng(rng))
    return np.asarray(u).reshape(n, d, d)


def haar_unitary(rng, d):
    return haar_unitaries(rng, d, 1)[0]
