"""Two-party steering task: Alice (honest or cheating) prepares, Bob verifies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from scipy.stats import chi2, norm

from . import kernels
from .lhs import LhsEnsemble, WitnessReport, optimal_ensemble, witness_bound
from .qcore import make_rng, trace_distance
from .states import (
    ConditionedEnsemble,
    FamilySpec,
    ProjectiveBasis,
    _normalize_family,
    conditioned_ensemble,
    random_basis_list,
    steered_frame,
)

N_SIGMA = 3.0
# two-sided tail of a 3-sigma test
ALPHA = 2 * norm.sf(N_SIGMA)
TRACE_DISTANCE_SIGMAS = 5.0
NUMERIC_FLOOR = 1e-9


@dataclass
class AliceAgent:
    """Either holds a real state (honest) or a hidden-state model (cheating)."""

    mode: Literal["honest", "cheating"]
    spec: FamilySpec | None = None
    ensemble: LhsEnsemble | None = None

    def __post_init__(self):
        if self.mode == "honest":
            if not isinstance(self.spec, FamilySpec):
                raise ValueError("an honest agent needs a FamilySpec")
        elif self.mode == "cheating":
            if not isinstance(self.ensemble, LhsEnsemble):
                raise ValueError("a cheating agent needs an LhsEnsemble")
        else:
            raise ValueError(f"unknown mode {self.mode!r}")

    @classmethod
    def honest(cls, spec):
        return cls("honest", spec=spec)

    @classmethod
    def cheating(cls, ensemble):
        return cls("cheating", ensemble=ensemble)

    @property
    def d(self):
        return self.spec.d if self.mode == "honest" else self.ensemble.d


@dataclass(frozen=True)
class RunRecord:
    basis_requested: ProjectiveBasis
    basis_index: int
    outcome_announced: int
    state_received: np.ndarray


@dataclass
class RunLog:
    """Column store of protocol runs.

    Bob's received state for run ``i`` is ``kets[i]`` (pure), ``table[basis,
    outcome]`` (honest preparation) or ``states[i]`` (tomographic estimate),
    whichever is set.
    """

    bases: list
    basis_index: np.ndarray
    outcome: np.ndarray
    kets: np.ndarray | None = None
    table: np.ndarray | None = None
    states: np.ndarray | None = None

    def __len__(self):
        return len(self.outcome)

    @property
    def d(self):
        return self.bases[0].d

    def state(self, i):
        if self.kets is not None:
            k = self.kets[i]
            return np.outer(k, k.conj())
        if self.table is not None:
            return self.table[self.basis_index[i], self.outcome[i]]
        return self.states[i]

    def __getitem__(self, i):
        k = int(self.basis_index[i])
        return RunRecord(self.bases[k], k, int(self.outcome[i]), self.state(i))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def cell_labels(self):
        return self.basis_index * self.d + self.outcome

    def cell_moments(self):
        """Per (basis, outcome) sums of received states, of their squared moduli, and counts."""
        d, nb = self.d, len(self.bases)
        labels = self.cell_labels()
        if self.kets is not None:
            sums, sq, counts = kernels.accumulate_outer(self.kets, labels, nb * d)
        else:
            counts = np.bincount(labels, minlength=nb * d).astype(np.int64)
            if self.table is not None:
                t = self.table.reshape(nb * d, d, d)
                sums = counts[:, None, None] * t
                sq = counts[:, None, None] * np.abs(t) ** 2
            else:
                sums = np.zeros((nb * d, d, d), dtype=complex)
                sq = np.zeros((nb * d, d, d))
                for j in range(d):
                    for k in range(d):
                        x = self.states[:, j, k]
                        sums[:, j, k] = np.bincount(labels, x.real, nb * d) + 1j * np.bincount(labels, x.imag, nb * d)
                        sq[:, j, k] = np.bincount(labels, np.abs(x) ** 2, nb * d)
        return sums.reshape(nb, d, d, d), sq.reshape(nb, d, d, d), counts.reshape(nb, d)

    def frame_overlaps(self, frames):
        """``<f_a|ρ_i|f_a>`` per run, where ``f_a`` is column `a` of ``frames[basis]``."""
        f = np.asarray(frames)[self.basis_index, :, self.outcome]
        if self.kets is not None:
            amp = np.einsum("nj,nj->n", f.conj(), self.kets)
            return amp.real**2 + amp.imag**2
        if self.table is not None:
            ft = np.asarray(frames)
            vals = np.einsum("kja,kajl,kla->ka", ft.conj(), self.table, ft).real
            return vals[self.basis_index, self.outcome]
        return np.einsum("nj,njl,nl->n", f.conj(), self.states, f).real


def _shadow_estimates(rng, rho_fn, n, d):
    """Single-shot classical-shadow estimates ``(d+1) U†|k><k|U - I`` with Haar-random U."""
    from .qcore import haar_unitaries

    u = haar_unitaries(rng, d, n)
    rhos = rho_fn()
    probs = np.einsum("nkj,njl,nkl->nk", u, rhos, u.conj()).real
    probs = np.clip(probs, 0, None)
    probs /= probs.sum(axis=1, keepdims=True)
    cum = probs.cumsum(axis=1)
    k = (rng.random(n)[:, None] > cum).sum(axis=1)
    k = np.minimum(k, d - 1)
    row = u[np.arange(n), k, :]
    return (d + 1) * np.einsum("nj,nl->njl", row.conj(), row) - np.eye(d)


def run_protocol(alice, bases, n_runs, seed=None, tomography=False):
    """Simulate `n_runs` rounds of the steering task.

    In each round Bob picks one of `bases` uniformly at random. An honest
    Alice measures her half of the shared state and Bob receives the
    normalized conditional state; a cheating Alice draws a hidden state,
    sends it, and announces the outcome her response function picks. With
    ``tomography=True`` Bob only keeps a single-shot shadow estimate of each
    received state.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be positive")
    if not bases:
        raise ValueError("bases must be non-empty")
    d = alice.d
    if any(b.d != d for b in bases):
        raise ValueError("basis dimension does not match Alice's system")
    rng = make_rng(seed)
    nb = len(bases)
    k = rng.integers(0, nb, size=n_runs)
    outcome = np.empty(n_runs, dtype=np.intp)
    if alice.mode == "honest":
        w = alice.spec.state()
        table = np.empty((nb, d, d, d), dtype=complex)
        for j, b in enumerate(bases):
            ens = conditioned_ensemble(w, b)
            p = ens.probabilities
            table[j] = ens.normalized()
            sel = np.flatnonzero(k == j)
            outcome[sel] = rng.choice(d, size=len(sel), p=p / p.sum())
        log = RunLog(list(bases), k, outcome, table=table)
        rho_fn = lambda: table[k, outcome]  # noqa: E731
    else:
        f = alice.ensemble
        kets = np.empty((n_runs, d), dtype=complex)
        for j, b in enumerate(bases):
            sel = np.flatnonzero(k == j)
            if len(sel):
                kets[sel], outcome[sel] = f.draw(rng, len(sel), f.basis_vectors(b))
        log = RunLog(list(bases), k, outcome, kets=kets)
        rho_fn = lambda: np.einsum("nj,nl->njl", kets, kets.conj())  # noqa: E731
    if tomography:
        log = RunLog(list(bases), k, outcome, states=_shadow_estimates(rng, rho_fn, n_runs, d))
    return log


@dataclass
class VerificationReport:
    frequencies: np.ndarray
    expected_frequencies: np.ndarray
    empirical_states: np.ndarray
    trace_distances: np.ndarray
    trace_distance_std: np.ndarray
    chi2_statistics: np.ndarray
    chi2_pvalues: np.ndarray
    witness: WitnessReport
    n_runs: int
    consistency_threshold: float = TRACE_DISTANCE_SIGMAS
    frequency_alpha: float = 0.0
    consistent: bool = field(init=False)
    certified: bool = field(init=False)

    def __post_init__(self):
        td_ok = bool(
            np.all(self.trace_distances <= self.consistency_threshold * self.trace_distance_std + NUMERIC_FLOOR)
        )
        freq_ok = bool(np.all(self.chi2_pvalues >= self.frequency_alpha))
        self.consistent = td_ok and freq_ok
        self.certified = self.consistent and self.witness.verdict == "Steering"

    @property
    def max_trace_distance(self):
        return float(np.max(self.trace_distances))

    @property
    def verdict(self):
        return "Steering" if self.certified else "NoSteeringDetected"

    def to_dict(self):
        return {
            "verdict": self.verdict,
            "certified": self.certified,
            "consistent": self.consistent,
            "n_runs": self.n_runs,
            "max_trace_distance": self.max_trace_distance,
            "trace_distances": self.trace_distances.tolist(),
            "trace_distance_std": self.trace_distance_std.tolist(),
            "frequencies": self.frequencies.tolist(),
            "expected_frequencies": self.expected_frequencies.tolist(),
            "chi2_statistics": self.chi2_statistics.tolist(),
            "chi2_pvalues": self.chi2_pvalues.tolist(),
            "frequency_alpha": self.frequency_alpha,
            "witness": self.witness.to_dict(),
        }


def announce(spec, bases):
    """Conditioned ensembles an honest Alice announces for each basis."""
    w = spec.state()
    return [conditioned_ensemble(w, b) for b in bases]


def _chi2_test(counts, p):
    n = counts.sum()
    if n == 0:
        return 0.0, 1.0
    expected = n * p
    zero = expected <= 0
    if np.any(counts[zero] > 0):
        return math.inf, 0.0
    stat = float(np.sum((counts[~zero] - expected[~zero]) ** 2 / expected[~zero]))
    dof = int(np.count_nonzero(~zero)) - 1
    return stat, float(chi2.sf(stat, dof)) if dof > 0 else 1.0


def verify(log, announced, family):
    """Check a run log against Alice's announced ensembles.

    Parameters
    ----------
    log : RunLog
        Output of :func:`run_protocol`.
    announced : sequence of ConditionedEnsemble or dict
        Announced ensemble for every basis in ``log.bases`` (indexable by basis index).
    family : {"werner", "isotropic"}
        Family Alice claims; fixes the witness frame and bound.

    Returns
    -------
    VerificationReport
        Frequencies and chi-square tests per basis (Bonferroni-corrected),
        trace distances between empirical and announced conditional states,
        and the witness on the empirical ensembles.
    """
    fam = _normalize_family(family)
    nb, d = len(log.bases), log.d
    try:
        ann = [announced[j] for j in range(nb)]
    except (KeyError, IndexError):
        raise ValueError("announced ensembles are missing a requested basis") from None
    sums, sq, counts = log.cell_moments()
    n_per_basis = counts.sum(axis=1)
    freqs = counts / np.maximum(n_per_basis, 1)[:, None]
    expected = np.array([a.probabilities for a in ann])

    emp = np.zeros((nb, d, d, d), dtype=complex)
    td = np.zeros((nb, d))
    td_std = np.zeros((nb, d))
    for j in range(nb):
        norm_ann = ann[j].normalized()
        for a in range(d):
            c = counts[j, a]
            if c == 0:
                td_std[j, a] = math.inf
                continue
            mean = sums[j, a] / c
            emp[j, a] = mean
            var = np.maximum(sq[j, a] / c - np.abs(mean) ** 2, 0.0) / c
            td_std[j, a] = math.sqrt(var.sum())
            td[j, a] = trace_distance(mean, norm_ann[a]) if expected[j, a] > 0 else 0.0

    stats, pvals = zip(*(_chi2_test(counts[j], expected[j]) for j in range(nb)))

    frames = np.array([steered_frame(fam, b).vectors for b in log.bases])
    y = log.frame_overlaps(frames)
    per_basis_mean = np.bincount(log.basis_index, y, nb) / np.maximum(n_per_basis, 1)
    per_basis_sq = np.bincount(log.basis_index, y * y, nb) / np.maximum(n_per_basis, 1)
    var = np.maximum(per_basis_sq - per_basis_mean**2, 0.0) / np.maximum(n_per_basis - 1, 1)
    used = n_per_basis > 0
    statistic = float(per_basis_mean[used].mean())
    se = float(math.sqrt(var[used].sum()) / used.sum())
    bound, direction = witness_bound(fam, d)
    witness = WitnessReport(statistic, bound, direction, se, int(len(log)))

    return VerificationReport(
        frequencies=freqs,
        expected_frequencies=expected,
        empirical_states=emp,
        trace_distances=td,
        trace_distance_std=td_std,
        chi2_statistics=np.array(stats),
        chi2_pvalues=np.array(pvals),
        witness=witness,
        n_runs=len(log),
        frequency_alpha=ALPHA / nb,
    )


def default_bases(d, rng, n_random=10):
    return random_basis_list(d, n_random, make_rng(rng))


def simulate(spec, mode="honest", n_runs=1_000_000, seed=None, n_random_bases=10, tomography=False, ensemble=None):
    """Run the task for a claimed family state and verify it.

    A cheating Alice uses `ensemble` (the family's optimal LHS model by
    default) while announcing the ensembles of `spec`.
    """
    rng = make_rng(seed)
    bases = default_bases(spec.d, rng, n_random_bases)
    if mode == "honest":
        alice = AliceAgent.honest(spec)
    elif mode in ("cheat", "cheating"):
        alice = AliceAgent.cheating(ensemble if ensemble is not None else optimal_ensemble(spec.family, spec.d))
    else:
        raise ValueError(f"mode must be 'honest' or 'cheat', not {mode!r}")
    log = run_protocol(alice, bases, n_runs, rng, tomography=tomography)
    return verify(log, announce(spec, bases), spec.family)
