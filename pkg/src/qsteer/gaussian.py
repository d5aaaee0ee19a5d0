"""Covariance-matrix algebra for bipartite Gaussian states.

Conventions: hbar = 1, quadratures ordered (q1, p1, q2, p2, ...) with Alice's
modes first, vacuum covariance I/2. The uncertainty relation reads
``V + i (hbar/2) Ω >= 0`` with ``Ω`` block-diagonal in ``[[0, 1], [-1, 0]]``,
so V(q)V(p) >= 1/4.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import block_diag, expm

from .qcore import PSD_RTOL, make_rng

HBAR = 1.0
SYMMETRY_ATOL = 1e-10
STANDARD_FORM_ATOL = 1e-10


class InvalidCovarianceError(ValueError):
    """Covariance matrix violates the uncertainty relation or is malformed."""


def symplectic_form(m):
    """``2m x 2m`` block-diagonal Ω with blocks ``[[0, 1], [-1, 0]]``."""
    return np.kron(np.eye(m), np.array([[0.0, 1.0], [-1.0, 0.0]]))


def _lmi_margin(h):
    """Smallest eigenvalue of a Hermitian LMI matrix and the tolerance band it is judged against."""
    h = 0.5 * (h + h.conj().T)
    ev = np.linalg.eigvalsh(h)
    return float(ev[0]), PSD_RTOL * (1.0 + float(np.max(np.abs(ev))))


@dataclass(frozen=True)
class CovarianceMatrix:
    """Real symmetric CM in (Alice, Bob) block form."""

    matrix: np.ndarray
    m_alpha: int
    m_beta: int

    def __post_init__(self):
        v = np.asarray(self.matrix, dtype=float)
        n = 2 * (self.m_alpha + self.m_beta)
        if self.m_alpha < 1 or self.m_beta < 1:
            raise InvalidCovarianceError("each party needs at least one mode")
        if v.shape != (n, n):
            raise InvalidCovarianceError(f"expected a {n}x{n} matrix, got {v.shape}")
        if not np.all(np.isfinite(v)):
            raise InvalidCovarianceError("matrix has non-finite entries")
        if np.max(np.abs(v - v.T)) > SYMMETRY_ATOL:
            raise InvalidCovarianceError("covariance matrix is not symmetric")
        object.__setattr__(self, "matrix", 0.5 * (v + v.T))

    @property
    def split(self):
        return 2 * self.m_alpha

    @property
    def v_alpha(self):
        return self.matrix[: self.split, : self.split]

    @property
    def v_beta(self):
        return self.matrix[self.split :, self.split :]

    @property
    def c(self):
        return self.matrix[: self.split, self.split :]

    @classmethod
    def from_blocks(cls, v_alpha, v_beta, c=None):
        v_alpha, v_beta = np.atleast_2d(v_alpha), np.atleast_2d(v_beta)
        if c is None:
            c = np.zeros((v_alpha.shape[0], v_beta.shape[0]))
        return cls(np.block([[v_alpha, c], [np.asarray(c).T, v_beta]]), v_alpha.shape[0] // 2, v_beta.shape[0] // 2)

    def swapped(self):
        """Same state with the roles of Alice and Bob exchanged."""
        return CovarianceMatrix.from_blocks(self.v_beta, self.v_alpha, self.c.T)

    def to_dict(self):
        return {
            "hbar": HBAR,
            "modes_alice": self.m_alpha,
            "modes_bob": self.m_beta,
            "matrix": self.matrix.tolist(),
        }

    @classmethod
    def from_dict(cls, doc):
        """Build from the JSON document layout; checks keys, hbar and shape."""
        if not isinstance(doc, dict):
            raise InvalidCovarianceError("document must be a JSON object")
        missing = {"hbar", "modes_alice", "modes_bob", "matrix"} - doc.keys()
        if missing:
            raise InvalidCovarianceError(f"missing keys: {sorted(missing)}")
        if float(doc["hbar"]) != HBAR:
            raise InvalidCovarianceError(f"only hbar = {HBAR:g} is supported")
        m_a, m_b = doc["modes_alice"], doc["modes_bob"]
        if not (isinstance(m_a, int) and isinstance(m_b, int)):
            raise InvalidCovarianceError("mode counts must be integers")
        try:
            mat = np.array(doc["matrix"], dtype=float)
        except (TypeError, ValueError) as exc:
            raise InvalidCovarianceError(f"matrix is not numeric: {exc}") from None
        return cls(mat, m_a, m_b)

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")

    @classmethod
    def load(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True)
class GaussianMeasurement:
    """Gaussian POVM on Alice's modes, given by its covariance T with T + iΩ/2 >= 0."""

    t: np.ndarray

    def __post_init__(self):
        t = np.atleast_2d(np.asarray(self.t, dtype=float))
        if t.shape[0] != t.shape[1] or t.shape[0] % 2:
            raise InvalidCovarianceError("T must be square with even side")
        if np.max(np.abs(t - t.T)) > SYMMETRY_ATOL:
            raise InvalidCovarianceError("T is not symmetric")
        margin, tol = _lmi_margin(t + 0.5j * HBAR * symplectic_form(t.shape[0] // 2))
        if margin < -tol:
            raise InvalidCovarianceError("T violates the uncertainty relation")
        object.__setattr__(self, "t", 0.5 * (t + t.T))

    @classmethod
    def homodyne(cls, quadrature="q", eps=1e-8, modes=1):
        """Limit of infinitely squeezed measurement of `quadrature` on every mode."""
        block = np.diag([eps, 0.25 / eps]) if quadrature == "q" else np.diag([0.25 / eps, eps])
        return cls(np.kron(np.eye(modes), block))

    @classmethod
    def heterodyne(cls, modes=1):
        return cls(0.5 * np.eye(2 * modes))


def validity_margin(v):
    """Min eigenvalue of ``V + iΩ/2`` (the physical-state LMI) and its tolerance band."""
    return _lmi_margin(v.matrix + 0.5j * HBAR * symplectic_form(v.m_alpha + v.m_beta))


def is_valid_state(v):
    margin, tol = validity_margin(v)
    return margin >= -tol


def steering_margin(v, by="alice"):
    """Min eigenvalue of ``V + 0 ⊕ iΩ_β/2`` (or the mirrored LMI) and its tolerance band.

    Negative beyond the band means the state is steerable by that party's
    Gaussian measurements.
    """
    if by == "alice":
        sig = block_diag(np.zeros((2 * v.m_alpha, 2 * v.m_alpha)), symplectic_form(v.m_beta))
    elif by == "bob":
        sig = block_diag(symplectic_form(v.m_alpha), np.zeros((2 * v.m_beta, 2 * v.m_beta)))
    else:
        raise ValueError("by must be 'alice' or 'bob'")
    return _lmi_margin(v.matrix + 0.5j * HBAR * sig)


def _require_valid(v):
    if not is_valid_state(v):
        raise InvalidCovarianceError("covariance matrix is not a physical state")


def steerable_by_alice(v):
    _require_valid(v)
    margin, tol = steering_margin(v, "alice")
    return margin < -tol


def steerable_by_bob(v):
    _require_valid(v)
    margin, tol = steering_margin(v, "bob")
    return margin < -tol


def conditioned_cm(v, t):
    """Bob's covariance after Alice's Gaussian measurement: ``V_β - Cᵀ (T + V_α)^-1 C``.

    ``C`` is the off-diagonal block with Alice's quadratures as rows. The result does not depend on Alice's outcome, only on the measurement.
    """
    t = t.t if isinstance(t, GaussianMeasurement) else np.asarray(t, dtype=float)
    if t.shape != v.v_alpha.shape:
        raise ValueError("measurement covariance does not match Alice's modes")
    m = t + v.v_alpha
    if np.linalg.cond(m) > 1e14:
        raise np.linalg.LinAlgError("T + V_alpha is singular")
    out = v.v_beta - v.c.T @ np.linalg.solve(m, v.c)
    return 0.5 * (out + out.T)


def schur_complement_u(v):
    """``U = V_β - Cᵀ V_α^-1 C``, the least noisy CM Alice can condition Bob onto."""
    if np.linalg.cond(v.v_alpha) > 1e14:
        raise np.linalg.LinAlgError("V_alpha is singular")
    u = v.v_beta - v.c.T @ np.linalg.solve(v.v_alpha, v.c)
    return 0.5 * (u + u.T)


def is_standard_form(v, atol=STANDARD_FORM_ATOL):
    """One mode per side with diagonal V_α, V_β and C."""
    if (v.m_alpha, v.m_beta) != (1, 1):
        return False
    off = [v.v_alpha[0, 1], v.v_beta[0, 1], v.c[0, 1], v.c[1, 0]]
    return max(abs(x) for x in off) <= atol


def conditional_variances(v):
    """``(V(q_β|q_α), V(p_β|p_α))`` for a standard-form two-mode CM."""
    if not is_standard_form(v):
        raise ValueError("conditional variances need a standard-form two-mode covariance matrix")
    a, b, c = np.diag(v.v_alpha), np.diag(v.v_beta), np.diag(v.c)
    cond = b - c**2 / a
    return float(cond[0]), float(cond[1])


def reid_product(v):
    """Product of the inferred variances; below hbar^2/4 = 1/4 demonstrates the EPR paradox."""
    vq, vp = conditional_variances(v)
    return vq * vp


REID_BOUND = HBAR**2 / 4


def vacuum(m_alpha=1, m_beta=1):
    return CovarianceMatrix(0.5 * HBAR * np.eye(2 * (m_alpha + m_beta)), m_alpha, m_beta)


def two_mode_squeezed_vacuum(r):
    ch, sh = np.cosh(2 * r) / 2, np.sinh(2 * r) / 2
    return CovarianceMatrix.from_blocks(ch * np.eye(2), ch * np.eye(2), sh * np.diag([1.0, -1.0]))


def add_noise(v, alice=0.0, bob=0.0):
    """Add isotropic classical noise to either party's diagonal block."""
    noise = block_diag(alice * np.eye(2 * v.m_alpha), bob * np.eye(2 * v.m_beta))
    return CovarianceMatrix(v.matrix + noise, v.m_alpha, v.m_beta)


def random_symplectic(rng, m, scale=0.5):
    """``exp(Ω H)`` for a random symmetric H; always symplectic, covers the identity component."""
    rng = make_rng(rng)
    a = rng.normal(scale=scale, size=(2 * m, 2 * m))
    return expm(symplectic_form(m) @ (a + a.T) / 2)


def random_cm(rng, m_alpha=1, m_beta=1, max_thermal=1.5, scale=0.5):
    """``S D Sᵀ`` with random symplectic S and symplectic eigenvalues in [1/2, 1/2 + max_thermal]."""
    rng = make_rng(rng)
    m = m_alpha + m_beta
    nu = 0.5 * HBAR + rng.uniform(0, max_thermal, size=m)
    s = random_symplectic(rng, m, scale)
    return CovarianceMatrix(s @ np.diag(np.repeat(nu, 2)) @ s.T, m_alpha, m_beta)


def random_standard_form_cm(rng, max_var=3.0, max_corr=3.0, max_tries=10_000):
    """Rejection sample of a valid standard-form two-mode CM.

    Half of the candidates are drawn from a box (variances uniform on
    [1/4, max_var], correlations uniform on [-max_corr, max_corr]); the other
    half are thermal states passed through two-mode and local squeezing, plus
    a little classical noise, which populates the steerable region. Candidates
    violating the uncertainty relation are discarded.
    """
    rng = make_rng(rng)
    for _ in range(max_tries):
        if rng.random() < 0.5:
            a = rng.uniform(0.25, max_var, size=2)
            b = rng.uniform(0.25, max_var, size=2)
            c = rng.uniform(-max_corr, max_corr, size=2)
        else:
            r = rng.uniform(0, 1.5)
            na, nb = 0.5 * HBAR + rng.exponential(0.3, size=2)
            ch, sh = np.cosh(2 * r), np.sinh(2 * r)
            a0 = (na * ch**2 + nb * sh**2) * np.ones(2)
            b0 = (nb * ch**2 + na * sh**2) * np.ones(2)
            c0 = (na + nb) * ch * sh * np.array([1.0, -1.0])
            sa, sb = np.exp(rng.uniform(-0.7, 0.7, size=2))
            za, zb = np.array([sa, 1 / sa]), np.array([sb, 1 / sb])
            a = a0 * za**2 + rng.exponential(0.05, size=2)
            b = b0 * zb**2 + rng.exponential(0.05, size=2)
            c = c0 * za * zb
        v = CovarianceMatrix.from_blocks(np.diag(a), np.diag(b), np.diag(c))
        if is_valid_state(v):
            return v
    raise RuntimeError("rejection sampler did not find a valid covariance matrix")


def random_measurement(rng, m=1, max_thermal=1.0, scale=1.0):
    """Random Gaussian measurement covariance (pure when the thermal part is zero)."""
    rng = make_rng(rng)
    nu = 0.5 * HBAR + rng.uniform(0, max_thermal, size=m)
    s = random_symplectic(rng, m, scale)
    return GaussianMeasurement(s @ np.diag(np.repeat(nu, 2)) @ s.T)
