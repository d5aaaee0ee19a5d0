"""Werner and isotropic state families, conditioned ensembles, PPT and CHSH criteria."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from scipy.optimize import bisect

from .qcore import (
    HERMITIAN_ATOL,
    DimensionError,
    haar_unitary,
    is_hermitian,
    min_eigenvalue_hermitian,
    partial_trace,
    partial_transpose,
    psd_tolerance,
)

Family = Literal["werner", "isotropic"]
FAMILIES = ("werner", "isotropic")

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


def _normalize_family(family):
    fam = str(family).lower()
    if fam in ("iso", "isotropic"):
        return "isotropic"
    if fam == "werner":
        return "werner"
    raise ValueError(f"unknown family {family!r}; expected 'werner' or 'isotropic'")


@dataclass(frozen=True)
class DensityMatrix:
    """Bipartite state on C^d_alpha ⊗ C^d_beta (Alice first)."""

    matrix: np.ndarray
    d_alpha: int
    d_beta: int

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.complex128)
        n = self.d_alpha * self.d_beta
        if m.shape != (n, n):
            raise DimensionError(f"matrix of shape {m.shape} does not match dims ({self.d_alpha}, {self.d_beta})")
        if not is_hermitian(m):
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > HERMITIAN_ATOL:
            raise ValueError("density matrix does not have unit trace")
        if min_eigenvalue_hermitian(m) < -1e-9:
            raise ValueError("density matrix is not positive semidefinite")
        object.__setattr__(self, "matrix", m)

    @classmethod
    def product(cls, sigma, rho):
        sigma, rho = np.asarray(sigma), np.asarray(rho)
        return cls(np.kron(sigma, rho), sigma.shape[0], rho.shape[0])

    def reduced_bob(self):
        return partial_trace(self.matrix, self.d_alpha, self.d_beta, "alice")

    def reduced_alice(self):
        return partial_trace(self.matrix, self.d_alpha, self.d_beta, "bob")


@dataclass(frozen=True)
class ProjectiveBasis:
    """Orthonormal basis; column ``a`` of `vectors` is the eigenvector |a>."""

    vectors: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.complex128)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise DimensionError("basis must be a square matrix of column vectors")
        if np.max(np.abs(v.conj().T @ v - np.eye(v.shape[0]))) > 1e-10:
            raise ValueError("basis vectors are not orthonormal")
        object.__setattr__(self, "vectors", v)

    @property
    def d(self):
        return self.vectors.shape[0]

    def projector(self, a):
        v = self.vectors[:, a]
        return np.outer(v, v.conj())

    def conj(self):
        return ProjectiveBasis(self.vectors.conj())

    @classmethod
    def computational(cls, d):
        return cls(np.eye(d, dtype=complex))

    @classmethod
    def haar(cls, d, rng=None):
        return cls(haar_unitary(rng, d))


@dataclass
class ConditionedEnsemble:
    """Bob's unnormalized conditional states, one per Alice outcome.

    ``std_error`` is populated for Monte-Carlo estimates: the Frobenius norm of
    the element-wise standard errors of each member.
    """

    operators: np.ndarray
    std_error: np.ndarray | None = None

    def __post_init__(self):
        ops = np.asarray(self.operators, dtype=np.complex128)
        if ops.ndim != 3 or ops.shape[1] != ops.shape[2]:
            raise DimensionError("operators must have shape (n_outcomes, d, d)")
        total = np.trace(ops, axis1=1, axis2=2).real.sum()
        if abs(total - 1.0) > 1e-10:
            raise ValueError(f"conditioned states must have total trace 1, got {total}")
        for op in ops:
            if min_eigenvalue_hermitian(op) < -psd_tolerance(op):
                raise ValueError("conditioned state is not positive semidefinite")
        self.operators = ops
        if self.std_error is None:
            self.std_error = np.zeros(len(ops))

    def __len__(self):
        return len(self.operators)

    def __iter__(self):
        return iter(enumerate(self.operators))

    @property
    def members(self):
        return list(enumerate(self.operators))

    @property
    def probabilities(self):
        return np.trace(self.operators, axis1=1, axis2=2).real

    def normalized(self):
        """Normalized members; zero-probability members come back as zeros."""
        p = self.probabilities
        out = np.zeros_like(self.operators)
        nz = p > 0
        out[nz] = self.operators[nz] / p[nz, None, None]
        return out

    def average_state(self):
        return self.operators.sum(axis=0)


@dataclass(frozen=True)
class FamilySpec:
    family: Family
    d: int
    eta: float

    def __post_init__(self):
        object.__setattr__(self, "family", _normalize_family(self.family))
        if int(self.d) != self.d or self.d < 2:
            raise ValueError("d must be an integer >= 2")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError(f"eta must lie in [0, 1], got {self.eta}")

    def state(self):
        return family_state(self.family, self.d, self.eta)


def _check_family_args(d, eta):
    if int(d) != d or d < 2:
        raise ValueError("d must be an integer >= 2")
    if not 0.0 <= eta <= 1.0:
        raise ValueError(f"eta must lie in [0, 1], got {eta}")


def flip_operator(d):
    """Swap operator V with V(φ⊗ψ) = ψ⊗φ."""
    v = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            v[j * d + i, i * d + j] = 1.0
    return v


def max_entangled_projector(d):
    psi = np.eye(d).reshape(d * d) / np.sqrt(d)
    return np.outer(psi, psi)


def werner_state(d, eta):
    """Werner state, linear in `eta`; ``eta=0`` is I/d^2 and ``eta=1`` the antisymmetric state."""
    _check_family_args(d, eta)
    m = ((d - 1 + eta) / (d - 1)) * np.eye(d * d) / d**2 - (eta / (d - 1)) * flip_operator(d) / d
    return DensityMatrix(m, d, d)


def isotropic_state(d, eta):
    _check_family_args(d, eta)
    m = (1 - eta) * np.eye(d * d) / d**2 + eta * max_entangled_projector(d)
    return DensityMatrix(m, d, d)


def family_state(family, d, eta):
    fam = _normalize_family(family)
    return werner_state(d, eta) if fam == "werner" else isotropic_state(d, eta)


def steered_frame(family, basis):
    """Bob-side vectors that Alice's basis steers towards.

    Werner states (U⊗U symmetry) steer along |a>; isotropic states (U*⊗U)
    along the complex conjugate |a*>.
    """
    return basis if _normalize_family(family) == "werner" else basis.conj()


def conditioned_ensemble(w, basis):
    """Bob's conditional states ``Tr_alpha[W (|a><a| ⊗ I)]`` for each outcome `a`."""
    if basis.d != w.d_alpha:
        raise DimensionError(f"basis dimension {basis.d} != d_alpha {w.d_alpha}")
    t = w.matrix.reshape(w.d_alpha, w.d_beta, w.d_alpha, w.d_beta)
    v = basis.vectors
    # <a|_alpha W |a>_alpha for every column a
    ops = np.einsum("ia,ijkl,ka->ajl", v.conj(), t, v)
    return ConditionedEnsemble(ops)


def joint_probability(w, basis_a, a, basis_b, b):
    if basis_a.d != w.d_alpha or basis_b.d != w.d_beta:
        raise DimensionError("basis dimensions do not match the state")
    proj = np.kron(basis_a.projector(a), basis_b.projector(b))
    return float(np.trace(proj @ w.matrix).real)


def overlap_statistic(spec):
    """Closed-form ``<a|ρ̃_a|a>`` in the steered frame; identical for every outcome and basis."""
    d, eta = spec.d, spec.eta
    if spec.family == "werner":
        return (1 - eta) / d**2
    return eta / d + (1 - eta) / d**2


def ppt_min_eigenvalue(w):
    """Smallest eigenvalue of the partial transpose over Alice (negative means entangled)."""
    pt = partial_transpose(w.matrix, w.d_alpha, w.d_beta, "alice")
    return min_eigenvalue_hermitian(pt)


def correlation_tensor(w):
    """``T_ij = Tr[W σ_i ⊗ σ_j]`` with Pauli order (x, y, z)."""
    if (w.d_alpha, w.d_beta) != (2, 2):
        raise DimensionError("the CHSH criterion is defined for two qubits only")
    return np.array([[np.trace(w.matrix @ np.kron(si, sj)).real for sj in PAULI] for si in PAULI])


def horodecki_chsh_parameter(w):
    """Sum of the two largest eigenvalues of TᵀT; CHSH is violated iff it exceeds 1."""
    t = correlation_tensor(w)
    ev = np.linalg.eigvalsh(t.T @ t)
    return float(ev[-1] + ev[-2])


def locate_threshold(f, lo=0.0, hi=1.0, xtol=1e-12, maxiter=200):
    """Root of a monotone criterion ``f(eta)`` on ``[lo, hi]`` by bisection."""
    return bisect(f, lo, hi, xtol=xtol, maxiter=maxiter)


def ppt_threshold(family, d, xtol=1e-12):
    return locate_threshold(lambda eta: ppt_min_eigenvalue(family_state(family, d, eta)), xtol=xtol)


def bell_threshold_d2(xtol=1e-12):
    return locate_threshold(lambda eta: horodecki_chsh_parameter(werner_state(2, eta)) - 1.0, xtol=xtol)


def random_basis_list(d, n, rng):
    """Computational basis followed by `n` Haar-random bases."""
    return [ProjectiveBasis.computational(d)] + [ProjectiveBasis.haar(d, rng) for _ in range(n)]
