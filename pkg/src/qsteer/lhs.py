"""Local-hidden-state models, optimal responses and steering witnesses for the symmetric families."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Callable, Literal

import numpy as np

from . import kernels
from .qcore import haar_unitaries, make_rng
from .states import (
    ConditionedEnsemble,
    FamilySpec,
    ProjectiveBasis,
    _normalize_family,
    conditioned_ensemble,
    steered_frame,
)

MIN_SAMPLES = 10_000
DEFAULT_SAMPLES = 1_000_000
CHUNK = 200_000
# absorbs round-off when a statistic sits exactly on its bound
NUMERIC_FLOOR = 1e-9


def harmonic(d):
    return math.fsum(1.0 / n for n in range(1, d + 1))


def eta_ent(d):
    return 1.0 / (d + 1)


def eta_steer(family, d):
    if d < 2:
        raise ValueError("d must be >= 2")
    if _normalize_family(family) == "werner":
        return 1.0 - 1.0 / d
    return (harmonic(d) - 1.0) / (d - 1)


def _as_vectors(basis):
    return basis.vectors if isinstance(basis, ProjectiveBasis) else np.asarray(basis, dtype=np.complex128)


def response_werner(basis, psi):
    """Outcome whose basis vector has the smallest overlap with `psi` (ties: smallest index)."""
    v = _as_vectors(basis)
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != (v.shape[0],):
        raise ValueError("psi dimension does not match the basis")
    return int(kernels.respond(psi[None, :], v, False)[0])


def response_iso(basis, psi):
    """Outcome whose basis vector has the largest overlap with `psi` (ties: smallest index)."""
    v = _as_vectors(basis)
    psi = np.asarray(psi, dtype=np.complex128)
    if psi.shape != (v.shape[0],):
        raise ValueError("psi dimension does not match the basis")
    return int(kernels.respond(psi[None, :], v, True)[0])


@dataclass(frozen=True)
class ResponseFunction:
    """Deterministic map from (basis vectors, hidden pure state) to an outcome.

    ``__call__`` takes basis vectors as a ``(d, d)`` matrix (shared by every
    sample) or a ``(n, d, d)`` stack (one per sample) and an ``(n, d)`` array of
    hidden states, and returns ``n`` outcome indices.
    """

    kind: Literal["werner_min", "iso_max", "custom"]
    func: Callable | None = None
    name: str = ""

    def __call__(self, vectors, psis):
        vectors = np.asarray(vectors, dtype=np.complex128)
        psis = np.atleast_2d(np.asarray(psis, dtype=np.complex128))
        if self.kind == "custom":
            return np.asarray(self.func(vectors, psis), dtype=np.intp)
        pick_max = self.kind == "iso_max"
        if vectors.ndim == 2:
            return kernels.respond(psis, vectors, pick_max)
        amp = np.einsum("nja,nj->na", vectors.conj(), psis)
        ov = amp.real**2 + amp.imag**2
        return (np.argmax(ov, axis=1) if pick_max else np.argmin(ov, axis=1)).astype(np.intp)

    @classmethod
    def werner(cls):
        return cls("werner_min", name="werner_min")

    @classmethod
    def iso(cls):
        return cls("iso_max", name="iso_max")

    @classmethod
    def constant(cls, a=0):
        return cls("custom", lambda v, p: np.full(len(p), a, dtype=np.intp), name=f"constant_{a}")

    @classmethod
    def ordering_table(cls, table, d):
        """Response fixed by the ranking of the overlaps |<a|ψ>|.

        `table` maps each permutation (tuple of outcomes sorted by increasing
        overlap) to the announced outcome. The optimal responses are the special
        cases "first entry" and "last entry".
        """
        weights = d ** np.arange(d)[::-1]
        lookup = np.full(d**d, -1, dtype=np.intp)
        for perm, a in table.items():
            lookup[int(np.dot(perm, weights))] = a

        def f(vectors, psis):
            if vectors.ndim == 2:
                amp = psis @ vectors.conj()
            else:
                amp = np.einsum("nja,nj->na", vectors.conj(), psis)
            order = np.argsort(amp.real**2 + amp.imag**2, axis=1, kind="stable")
            return lookup[order @ weights]

        return cls("custom", f, name="ordering_table")


def optimal_response(family):
    return ResponseFunction.werner() if _normalize_family(family) == "werner" else ResponseFunction.iso()


@dataclass
class LhsEnsemble:
    """Ensemble of pure hidden states plus the response Alice uses to announce outcomes.

    With ``kets=None`` the hidden states are Haar distributed (the covariant
    optimal ensemble). Otherwise `kets` is a ``(k, d)`` list drawn with
    `weights`. ``group`` optionally rotates every draw by a random unitary
    from ``group(rng, n) -> (n, d, d)`` and transports the basis accordingly.
    ``frame`` is ``"direct"`` for Werner-like models and ``"conjugate"`` for
    isotropic ones: the response sees the conjugated basis in the latter case.
    """

    d: int
    response: ResponseFunction
    kets: np.ndarray | None = None
    weights: np.ndarray | None = None
    group: Callable | None = None
    frame: Literal["direct", "conjugate"] = "direct"

    def __post_init__(self):
        if self.kets is not None:
            kets = np.atleast_2d(np.asarray(self.kets, dtype=np.complex128))
            if kets.shape[1] != self.d:
                raise ValueError("ket dimension does not match d")
            kets = kets / np.linalg.norm(kets, axis=1, keepdims=True)
            self.kets = kets
            w = np.ones(len(kets)) if self.weights is None else np.asarray(self.weights, dtype=float)
            if w.shape != (len(kets),) or np.any(w < 0):
                raise ValueError("weights must be non-negative, one per ket")
            self.weights = w / w.sum()
        if self.frame not in ("direct", "conjugate"):
            raise ValueError("frame must be 'direct' or 'conjugate'")

    def basis_vectors(self, basis):
        v = _as_vectors(basis)
        return v.conj() if self.frame == "conjugate" else v

    def draw(self, rng, n, basis_vectors):
        """Draw `n` hidden states and the outcome announced for each.

        `basis_vectors` are already in this ensemble's frame. Returns
        ``(psis, outcomes)`` where `psis` are the states Bob receives.
        """
        if self.kets is None:
            z = rng.standard_normal((n, 2 * self.d)).view(np.complex128)
            psis = z / np.linalg.norm(z, axis=1, keepdims=True)
        else:
            idx = rng.choice(len(self.kets), size=n, p=self.weights)
            psis = self.kets[idx]
        if self.group is None:
            return psis, self.response(basis_vectors, psis)
        u = self.group(rng, n)
        # announce with ℘(a | U† A U, ξ), send U ψ_ξ
        transported = np.einsum("nji,jk->nik", u.conj(), basis_vectors)
        outcomes = self.response(transported, psis)
        return np.einsum("nij,nj->ni", u, psis), outcomes


def optimal_ensemble(family, d):
    """Haar ensemble with the family's optimal response."""
    fam = _normalize_family(family)
    return LhsEnsemble(d, optimal_response(fam), frame="direct" if fam == "werner" else "conjugate")


def haar_group(d):
    """Group sampler over the full unitary group U(d)."""
    return lambda rng, n: haar_unitaries(rng, d, n)


def symmetrize_ensemble(f, group_sampler=None):
    """Group-covariant version of `f`: rotated copies with the transported response.

    Draws from the result are ``(U ψ_ξ, ℘(a | U† A U, ξ))`` with ``U`` from
    `group_sampler` (Haar over U(d) by default).
    """
    if f.group is not None:
        raise ValueError("ensemble is already symmetrized")
    g = group_sampler if group_sampler is not None else haar_group(f.d)
    return LhsEnsemble(f.d, f.response, kets=f.kets, weights=f.weights, group=g, frame=f.frame)


def _check_samples(n_samples):
    if n_samples < MIN_SAMPLES:
        raise ValueError(f"n_samples must be >= {MIN_SAMPLES}")


def simulate_lhs_conditioned(f, basis, n_samples=DEFAULT_SAMPLES, seed=None):
    """Monte-Carlo estimate of the conditional states an LHS model produces for `basis`.

    Each member is the sum of the drawn |ψ><ψ| for which the response chose
    that outcome, divided by the total sample count. Returns a
    :class:`ConditionedEnsemble` with per-member standard errors.
    """
    _check_samples(n_samples)
    rng = make_rng(seed)
    vecs = f.basis_vectors(basis)
    d = f.d
    sums = np.zeros((d, d, d), dtype=np.complex128)
    sq = np.zeros((d, d, d))
    done = 0
    while done < n_samples:
        m = min(CHUNK, n_samples - done)
        psis, outcomes = f.draw(rng, m, vecs)
        s, q, _ = kernels.accumulate_outer(psis, outcomes, d)
        sums += s
        sq += q
        done += m
    mean = sums / n_samples
    var = np.maximum(sq / n_samples - np.abs(mean) ** 2, 0.0) / n_samples
    se = np.sqrt(var.sum(axis=(1, 2)))
    mean = 0.5 * (mean + mean.conj().transpose(0, 2, 1))
    return ConditionedEnsemble(mean, std_error=se)


def lhs_overlap_bound(family, d, basis=None, n_samples=DEFAULT_SAMPLES, seed=None, outcome=0):
    """Monte-Carlo value of ``<a| ∫dμ(ψ) |ψ><ψ| ℘(a|A,ψ) |a>`` under the optimal response.

    Compare with 1/d^3 (Werner) or H_d/d^2 (isotropic). Returns
    ``(estimate, std_error)``.
    """
    _check_samples(n_samples)
    f = optimal_ensemble(family, d)
    if basis is None:
        basis = ProjectiveBasis.computational(d)
    vecs = f.basis_vectors(basis)
    rng = make_rng(seed)
    target = vecs[:, outcome]
    total = 0.0
    total_sq = 0.0
    done = 0
    while done < n_samples:
        m = min(CHUNK, n_samples - done)
        psis, outcomes = f.draw(rng, m, vecs)
        amp = psis @ target.conj()
        y = np.where(outcomes == outcome, amp.real**2 + amp.imag**2, 0.0)
        total += y.sum()
        total_sq += (y * y).sum()
        done += m
    mean = total / n_samples
    var = max(total_sq / n_samples - mean**2, 0.0)
    return float(mean), float(math.sqrt(var / n_samples))


def witness_bound(family, d):
    """LHS bound on the summed overlap statistic and the direction that certifies steering."""
    if _normalize_family(family) == "werner":
        return 1.0 / d**2, "certify_below"
    return harmonic(d) / d, "certify_above"


@dataclass
class WitnessReport:
    statistic: float
    lhs_bound: float
    direction: Literal["certify_below", "certify_above"]
    std_error: float
    n_samples: int
    verdict: Literal["Steering", "NoSteeringDetected"] = "NoSteeringDetected"

    def __post_init__(self):
        self.verdict = decide(self.statistic, self.lhs_bound, self.direction, self.std_error)

    @property
    def violation(self):
        """Signed amount by which the statistic passes the bound (positive means steering side)."""
        if self.direction == "certify_below":
            return self.lhs_bound - self.statistic
        return self.statistic - self.lhs_bound

    def to_dict(self):
        return asdict(self)


def decide(statistic, bound, direction, std_error, n_sigma=3.0):
    gap = bound - statistic if direction == "certify_below" else statistic - bound
    return "Steering" if gap > n_sigma * std_error + NUMERIC_FLOOR else "NoSteeringDetected"


def summed_overlap(ens, frame_vectors):
    """``Σ_a <f_a|ρ̃_a|f_a>`` for an ensemble and steered-frame vectors ``f_a``."""
    return float(np.einsum("ja,ajk,ka->", frame_vectors.conj(), ens.operators, frame_vectors).real)


def steering_witness(spec, n_samples=50, seed=None):
    """Summed overlap statistic of the true state, averaged over `n_samples` Haar-random bases.

    The LHS bound is 1/d^2 for Werner states (steering if the statistic is below
    it) and H_d/d for isotropic states (steering if above).
    """
    if not isinstance(spec, FamilySpec):
        raise TypeError("spec must be a FamilySpec")
    if n_samples < 1:
        raise ValueError("n_samples must be positive")
    rng = make_rng(seed)
    w = spec.state()
    values = np.empty(n_samples)
    for i in range(n_samples):
        basis = ProjectiveBasis.haar(spec.d, rng)
        values[i] = summed_overlap(conditioned_ensemble(w, basis), steered_frame(spec.family, basis).vectors)
    se = float(values.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    bound, direction = witness_bound(spec.family, spec.d)
    return WitnessReport(float(values.mean()), bound, direction, se, n_samples)
