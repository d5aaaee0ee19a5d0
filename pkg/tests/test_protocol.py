import itertools

import numpy as np
import pytest

from qsteer.lhs import LhsEnsemble, ResponseFunction, eta_steer, optimal_ensemble, steering_witness
from qsteer.protocol import AliceAgent, RunLog, announce, default_bases, run_protocol, simulate, verify
from qsteer.states import FamilySpec, ProjectiveBasis


def test_agent_validation():
    with pytest.raises(ValueError):
        AliceAgent("honest")
    with pytest.raises(ValueError):
        AliceAgent("cheating")
    with pytest.raises(ValueError):
        AliceAgent("sneaky", spec=FamilySpec("werner", 2, 0.5))


def test_run_protocol_arguments():
    alice = AliceAgent.honest(FamilySpec("werner", 2, 0.5))
    with pytest.raises(ValueError):
        run_protocol(alice, [], 10)
    with pytest.raises(ValueError):
        run_protocol(alice, [ProjectiveBasis.computational(2)], 0)
    with pytest.raises(ValueError):
        run_protocol(alice, [ProjectiveBasis.computational(3)], 10)


def test_honest_singlet_frequencies():
    n = 100_000
    log = run_protocol(AliceAgent.honest(FamilySpec("werner", 2, 1.0)), [ProjectiveBasis.computational(2)], n, seed=1)
    freq = np.bincount(log.outcome, minlength=2) / n
    sigma = np.sqrt(0.25 / n)
    assert np.all(np.abs(freq - 0.5) < 3 * sigma)


def test_cheating_constant_announcements():
    f = LhsEnsemble(2, ResponseFunction.constant(1))
    log = run_protocol(AliceAgent.cheating(f), default_bases(2, 0, 3), 5000, seed=2)
    assert np.all(log.outcome == 1)


def test_records_view():
    spec = FamilySpec("isotropic", 3, 0.4)
    bases = default_bases(3, 1, 2)
    log = run_protocol(AliceAgent.honest(spec), bases, 20, seed=3)
    recs = list(log)
    assert len(recs) == 20
    for r in recs:
        assert r.basis_requested is bases[r.basis_index]
        assert 0 <= r.outcome_announced < 3
        assert abs(np.trace(r.state_received) - 1) < 1e-12
        assert np.linalg.eigvalsh(r.state_received)[0] > -1e-12


def test_honest_witness_matches_closed_form():
    spec = FamilySpec("werner", 2, 0.75)
    rep = simulate(spec, "honest", 100_000, seed=4)
    closed = steering_witness(spec, seed=4)
    assert abs(rep.witness.statistic - 0.125) < 3 * rep.witness.std_error + 1e-9
    assert rep.witness.statistic == pytest.approx(closed.statistic, abs=1e-9)
    assert rep.verdict == "Steering"
    assert rep.max_trace_distance < 1e-9


def test_cheater_at_threshold_fails_to_convince():
    spec = FamilySpec("werner", 2, eta_steer("werner", 2))
    rep = simulate(spec, "cheat", 400_000, seed=5)
    assert rep.consistent
    assert rep.witness.verdict == "NoSteeringDetected"
    assert not rep.certified


@pytest.mark.parametrize("family", ["werner", "isotropic"])
def test_cheater_overclaiming_is_caught(family):
    spec = FamilySpec(family, 2, 0.9)
    rep = simulate(spec, "cheat", 200_000, seed=6)
    assert not rep.consistent
    assert not rep.certified


def test_cheater_constant_response_fails_frequency_test():
    spec = FamilySpec("werner", 2, 0.5)
    rep = simulate(spec, "cheat", 50_000, seed=7, ensemble=LhsEnsemble(2, ResponseFunction.constant(0)))
    assert np.min(rep.chi2_pvalues) < 1e-6
    assert not rep.certified


def test_cheaters_with_random_tables_never_certified(rng):
    d = 3
    perms = list(itertools.permutations(range(d)))
    for trial in range(5):
        table = {p: int(rng.integers(d)) for p in perms}
        f = LhsEnsemble(d, ResponseFunction.ordering_table(table, d))
        rep = simulate(FamilySpec("werner", d, 0.9), "cheat", 50_000, seed=trial, ensemble=f)
        assert rep.witness.statistic > rep.witness.lhs_bound - 3 * rep.witness.std_error
        assert not rep.certified


def test_verify_missing_basis():
    spec = FamilySpec("werner", 2, 0.7)
    bases = default_bases(2, 0, 2)
    log = run_protocol(AliceAgent.honest(spec), bases, 100, seed=8)
    with pytest.raises(ValueError):
        verify(log, announce(spec, bases[:1]), "werner")


def test_frequencies_sum_to_one():
    spec = FamilySpec("isotropic", 3, 0.6)
    rep = simulate(spec, "honest", 30_000, seed=9)
    n_per_basis = rep.frequencies.sum(axis=1)
    np.testing.assert_allclose(n_per_basis, 1, atol=1e-12)


@pytest.mark.parametrize("mode", ["honest", "cheat"])
def test_protocol_level_no_signalling(mode):
    d = 2
    spec = FamilySpec("werner", d, 0.5)
    bases = default_bases(d, 1, 4)
    agent = AliceAgent.honest(spec) if mode == "honest" else AliceAgent.cheating(optimal_ensemble("werner", d))
    log = run_protocol(agent, bases, 200_000, seed=10)
    sums, sq, counts = log.cell_moments()
    n_k = counts.sum(axis=1)
    avg = sums.sum(axis=1) / n_k[:, None, None]
    var = (sq.sum(axis=1) / n_k[:, None, None] - np.abs(avg) ** 2) / n_k[:, None, None]
    se = np.sqrt(np.max(var, axis=0))
    for k in range(1, len(bases)):
        assert np.all(np.abs(avg[k] - avg[0]) < 5 * np.sqrt(2) * se + 1e-12)


def test_cell_moments_storage_forms_agree():
    rng = np.random.default_rng(11)
    bases = default_bases(2, rng, 2)
    kets = rng.normal(size=(500, 2)) + 1j * rng.normal(size=(500, 2))
    kets /= np.linalg.norm(kets, axis=1, keepdims=True)
    k = rng.integers(0, 3, 500)
    out = rng.integers(0, 2, 500)
    a = RunLog(bases, k, out, kets=kets)
    b = RunLog(bases, k, out, states=np.einsum("nj,nl->njl", kets, kets.conj()))
    for x, y in zip(a.cell_moments(), b.cell_moments()):
        np.testing.assert_allclose(x, y, atol=1e-10)
    frames = np.array([bb.vectors for bb in bases])
    np.testing.assert_allclose(a.frame_overlaps(frames), b.frame_overlaps(frames), atol=1e-12)


def test_tomography_toggle_keeps_verdicts():
    spec = FamilySpec("werner", 2, 0.9)
    honest = simulate(spec, "honest", 200_000, seed=12, tomography=True)
    assert honest.certified
    assert honest.witness.std_error > 0
    cheat = simulate(FamilySpec("werner", 2, 0.5), "cheat", 200_000, seed=12, tomography=True)
    assert not cheat.certified


def test_report_json_ready():
    import json

    rep = simulate(FamilySpec("isotropic", 2, 0.8), "honest", 10_000, seed=13)
    doc = json.loads(json.dumps(rep.to_dict()))
    assert doc["verdict"] == "Steering"
    assert set(doc["witness"]) >= {"statistic", "lhs_bound", "direction", "std_error", "n_samples", "verdict"}
