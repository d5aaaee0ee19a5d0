import json

import numpy as np
import pytest
import sympy as sp

from qsteer import gaussian as g


def symplectic_eigenvalues(m):
    # |eigenvalues| of iΩV come in pairs equal to the symplectic spectrum
    n = m.shape[0] // 2
    ev = np.abs(np.linalg.eigvals(1j * g.symplectic_form(n) @ m))
    return np.sort(ev)[::2]


def test_symplectic_form_properties():
    s = g.symplectic_form(3)
    np.testing.assert_array_equal(s, -s.T)
    np.testing.assert_array_equal(s @ s, -np.eye(6))


def test_vacuum_saturates_validity():
    v = g.vacuum()
    margin, tol = g.validity_margin(v)
    assert abs(margin) < 1e-12
    assert g.is_valid_state(v)


def test_sub_vacuum_noise_invalid():
    assert not g.is_valid_state(g.CovarianceMatrix(np.eye(4) / 4, 1, 1))


def test_tmsv_valid():
    v = g.two_mode_squeezed_vacuum(1.0)
    np.testing.assert_allclose(symplectic_eigenvalues(v.matrix), [0.5, 0.5], atol=1e-12)
    assert g.is_valid_state(v)


def test_non_symmetric_rejected():
    m = np.eye(4) / 2
    m[0, 1] = 0.1
    with pytest.raises(g.InvalidCovarianceError):
        g.CovarianceMatrix(m, 1, 1)


def test_product_not_steerable(rng):
    for _ in range(20):
        a, b = g.random_cm(rng, 1, 1), g.random_cm(rng, 1, 1)
        v = g.CovarianceMatrix.from_blocks(a.v_alpha, b.v_beta)
        assert not g.steerable_by_alice(v)
        assert not g.steerable_by_bob(v)


def test_tmsv_steerable():
    v = g.two_mode_squeezed_vacuum(1.0)
    h = v.matrix + 0.5j * np.block([[np.zeros((2, 2)), np.zeros((2, 2))], [np.zeros((2, 2)), g.symplectic_form(1)]])
    assert np.linalg.eigvalsh(h)[0] < -0.1
    assert g.steerable_by_alice(v)


def test_tmsv_margin_monotone_in_r():
    rs = np.linspace(1e-3, 2.0, 40)
    margins = [g.steering_margin(g.two_mode_squeezed_vacuum(r))[0] for r in rs]
    assert all(m < 0 for m in margins)
    assert np.all(np.diff(margins) < 0)
    tiny, tol = g.steering_margin(g.two_mode_squeezed_vacuum(1e-8))
    assert tiny <= 0 and abs(tiny) <= tol


def test_steerable_rejects_invalid_state():
    with pytest.raises(g.InvalidCovarianceError):
        g.steerable_by_alice(g.CovarianceMatrix(np.eye(4) / 4, 1, 1))


def test_tmsv_symmetric_verdicts():
    for r in (0.05, 0.5, 1.5):
        v = g.two_mode_squeezed_vacuum(r)
        assert g.steerable_by_alice(v) == g.steerable_by_bob(v)


def test_one_way_steering_exists():
    r = 0.5
    base = g.two_mode_squeezed_vacuum(r)
    found = None
    for n in np.linspace(0, 1, 101):
        v = g.add_noise(base, alice=n)
        if g.steerable_by_alice(v) != g.steerable_by_bob(v):
            found = (n, g.steerable_by_alice(v), g.steerable_by_bob(v))
            break
    assert found is not None
    n, by_alice, by_bob = found
    # closed forms for per-quadrature Schur complements
    ch, sh = np.cosh(2 * r) / 2, np.sinh(2 * r) / 2
    u_bob_side = ch - sh**2 / (ch + n)
    u_alice_side = ch + n - sh**2 / ch
    assert by_alice == (u_bob_side < 0.5)
    assert by_bob == (u_alice_side < 0.5)


def test_conditioned_cm_uncorrelated(rng):
    a, b = g.random_cm(rng), g.random_cm(rng)
    v = g.CovarianceMatrix.from_blocks(a.v_alpha, b.v_beta)
    np.testing.assert_allclose(g.conditioned_cm(v, g.GaussianMeasurement.heterodyne()), v.v_beta, atol=1e-14)


def test_homodyne_limit_symbolic():
    r, eps = sp.symbols("r epsilon", positive=True)
    ch, sh = sp.cosh(2 * r) / 2, sp.sinh(2 * r) / 2
    va = sp.diag(ch, ch)
    vb = sp.diag(ch, ch)
    c = sp.diag(sh, -sh)
    t = sp.diag(eps, 1 / (4 * eps))
    cond = vb - c.T * (t + va).inv() * c
    limit_q = sp.simplify(sp.limit(cond[0, 0], eps, 0))
    assert sp.simplify(limit_q - 1 / (2 * sp.cosh(2 * r))) == 0
    for rv in (0.3, 1.0):
        v = g.two_mode_squeezed_vacuum(rv)
        got = g.conditioned_cm(v, g.GaussianMeasurement.homodyne("q", eps=1e-8))[0, 0]
        assert got == pytest.approx(float(limit_q.subs(r, rv)), abs=1e-7)


def test_conditioned_cm_is_less_noisy(rng):
    for _ in range(50):
        v = g.random_cm(rng, 1, 2)
        t = g.random_measurement(rng, 1)
        out = g.conditioned_cm(v, t)
        np.testing.assert_allclose(out, out.T, atol=1e-12)
        assert np.linalg.eigvalsh(v.v_beta - out)[0] > -1e-9


def test_conditioned_cm_outcome_independent_signature():
    import inspect

    assert list(inspect.signature(g.conditioned_cm).parameters) == ["v", "t"]


def test_conditioned_cm_singular():
    v = g.CovarianceMatrix.from_blocks(np.diag([1.0, 1.0]), np.eye(2) / 2)
    with pytest.raises(np.linalg.LinAlgError):
        g.conditioned_cm(v, np.diag([-1.0, -1.0]))


def test_schur_product_is_v_beta(rng):
    a, b = g.random_cm(rng), g.random_cm(rng)
    v = g.CovarianceMatrix.from_blocks(a.v_alpha, b.v_beta)
    np.testing.assert_allclose(g.schur_complement_u(v), b.v_beta, atol=1e-14)


def test_schur_tmsv():
    r = 0.5
    expected = 1 / (2 * np.cosh(2 * r))
    np.testing.assert_allclose(g.schur_complement_u(g.two_mode_squeezed_vacuum(r)), expected * np.eye(2), atol=1e-12)
    assert expected == pytest.approx(0.32403, abs=1e-5)


def test_schur_forward_direction(rng):
    found = 0
    while found < 100:
        v = g.random_cm(rng, 1, 1)
        if g.steerable_by_alice(v):
            continue
        found += 1
        u = g.schur_complement_u(v)
        assert np.linalg.eigvalsh(u + 0.5j * g.symplectic_form(1))[0] >= -1e-9
        for _ in range(10):
            t = g.random_measurement(rng)
            assert np.linalg.eigvalsh(g.conditioned_cm(v, t) - u)[0] >= -1e-9


def test_reid_vacuum():
    assert g.reid_product(g.vacuum()) == 0.25


def test_reid_tmsv():
    for r in (0.1, 1.0):
        assert g.reid_product(g.two_mode_squeezed_vacuum(r)) == pytest.approx(1 / (4 * np.cosh(2 * r) ** 2), abs=1e-12)
    assert g.reid_product(g.two_mode_squeezed_vacuum(1.0)) == pytest.approx(0.01766, abs=1e-5)


def test_reid_continuity_at_zero():
    vals = [g.reid_product(g.two_mode_squeezed_vacuum(r)) for r in (1e-1, 1e-2, 1e-3)]
    assert all(x < 0.25 for x in vals)
    assert np.all(np.diff(vals) > 0)
    assert 0.25 - vals[-1] < 1e-5


def test_reid_requires_standard_form():
    with pytest.raises(ValueError):
        g.reid_product(g.random_cm(np.random.default_rng(0)))


def test_reid_matches_lmi(rng):
    n_steer = 0
    for _ in range(300):
        v = g.random_standard_form_cm(rng)
        prod = g.reid_product(v)
        if abs(prod - 0.25) < 1e-8:
            continue
        assert (prod < 0.25) == g.steerable_by_alice(v)
        n_steer += g.steerable_by_alice(v)
    assert 10 < n_steer < 290


def test_bob_noise_monotone():
    v = g.two_mode_squeezed_vacuum(0.7)
    margins = [g.steering_margin(g.add_noise(v, bob=t))[0] for t in np.linspace(0, 2, 21)]
    assert np.all(np.diff(margins) >= -1e-12)


def test_steerable_needs_correlations(rng):
    for _ in range(200):
        v = g.random_cm(rng)
        if g.steerable_by_alice(v):
            assert np.max(np.abs(v.c)) > 0


def test_measurement_validation():
    with pytest.raises(g.InvalidCovarianceError):
        g.GaussianMeasurement(np.eye(2) / 4)
    assert g.GaussianMeasurement.homodyne("p").t[1, 1] == 1e-8


def test_json_roundtrip(tmp_path):
    v = g.two_mode_squeezed_vacuum(0.4)
    path = tmp_path / "cm.json"
    v.save(path)
    doc = json.loads(path.read_text())
    assert doc["hbar"] == 1 and doc["modes_alice"] == 1 and len(doc["matrix"]) == 4
    np.testing.assert_array_equal(g.CovarianceMatrix.load(path).matrix, v.matrix)


@pytest.mark.parametrize(
    "doc",
    [
        {"hbar": 2, "modes_alice": 1, "modes_bob": 1, "matrix": np.eye(4).tolist()},
        {"hbar": 1, "modes_alice": 1, "modes_bob": 1, "matrix": np.eye(6).tolist()},
        {"hbar": 1, "modes_alice": 1, "matrix": np.eye(4).tolist()},
        {"hbar": 1, "modes_alice": 1, "modes_bob": 1, "matrix": "nope"},
    ],
)
def test_json_validation(doc):
    with pytest.raises(g.InvalidCovarianceError):
        g.CovarianceMatrix.from_dict(doc)


def test_swapped_roundtrip(rng):
    v = g.random_cm(rng, 1, 2)
    np.testing.assert_array_equal(v.swapped().swapped().matrix, v.matrix)
    assert g.steering_margin(v, "bob")[0] == pytest.approx(g.steering_margin(v.swapped(), "alice")[0], abs=1e-12)
