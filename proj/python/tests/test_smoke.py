import json
import math
import os
import subprocess

import numpy as np
import pytest

import slowfast as sf


@pytest.fixture(scope="module")
def ring():
    return sf.builtin("cosine-ring")


@pytest.fixture(scope="module")
def ring_rate(ring):
    return sf.RateFunction(ring, radius=5.0, n_per_axis=51, grid_n=128)


def test_builtins():
    assert set(sf.builtin_names()) == {"constant", "cosine-ring", "full-dep"}
    assert sf.builtin("constant").f([1.0], [2.0]) == [pytest.approx(0.7)]
    with pytest.raises(sf.UnknownSystemError):
        sf.builtin("nope")
    assert sf.validate(sf.builtin("full-dep"), 500, 1)["ok"]


def test_expression_system():
    spec = {"f": ["0.5*cos(y1)"], "B": ["0"], "C": ["1"], "f_sup_norm": 0.5, "nondegeneracy_floor": 1}
    s = sf.system_from_json(json.dumps(spec))
    assert s.x_independent
    with pytest.raises(sf.ConfigError):
        sf.system_from_json('{"f": ["cos(y1)"]}')


def test_spectral_h(ring):
    e = sf.h_spectral(ring, [0.0], [0.0], [0.1], grid_n=256)
    assert abs(e["eigenvalue"] - 0.009825) < 2e-4
    assert np.all(e["eigenfunction"] > 0)
    assert abs(sf.h_spectral(ring, [0.0], [0.0], [0.0], grid_n=64)["eigenvalue"]) < 1e-10
    g = sf.grad_h(ring, [0.0], [0.0], [0.1], grid_n=256)
    assert abs(g[0] - 0.1930) < 2e-3


def test_montecarlo_constant():
    r = sf.h_montecarlo(sf.builtin("constant"), [0.0], [0.0], [1.0], t=2.0, replicas=100)
    assert r["estimate"] == pytest.approx(0.7)


def test_surface_and_legendre(ring):
    s = sf.build_surface(ring, [0.0], [0.0], radius=4.0, n_per_axis=41, grid_n=128)
    assert s.checks["ok"]
    assert s.nodes.shape == (41, 1)
    assert s.domain["m"][0] == pytest.approx(-1.0)
    assert sf.legendre(s, [1.2])["value"] == math.inf
    r = sf.legendre(s, [0.0], b=1.0)
    assert r["value"] == pytest.approx(0.0, abs=1e-10)
    assert abs(sf.averaged_drift(s)[0]) < 1e-6


def test_action(ring_rate):
    p = sf.Path.linear([0.0], [0.5], 1.0, 10)
    assert p.nodes.shape == (11, 1)
    s = sf.action(p, ring_rate)
    assert s["value"] == pytest.approx(ring_rate.L([0.0], [0.5]), abs=1e-6)
    d = sf.discretized_action(p, ring_rate, m=4)
    assert d["value"] == pytest.approx(s["value"], abs=1e-9)
    steep = sf.Path(1.0, [[0.0], [0.6], [1.2]])
    assert sf.action(steep, ring_rate)["value"] == math.inf


def test_simulation(ring):
    tr = sf.simulate_coupled(sf.builtin("constant"), [0.0], [0.0], epsilon=0.2, T=0.5)
    assert tr["x"][-1, 0] == pytest.approx(0.35)
    a = sf.simulate_frozen(ring, [0.0], [0.0], 1.0, seed=3)
    b = sf.simulate_frozen(ring, [0.0], [0.0], 1.0, seed=3)
    assert np.array_equal(a["y"], b["y"])
    r = sf.verify_lemma5(sf.builtin("constant"), [0.0], [0.0], [1.0], epsilon=0.1, Delta=0.2, nu=0.05,
                         replicas=10, seed=1, H_ref=0.7)
    assert r["lambda_hat"] == pytest.approx(0.14)


def test_tube_probability():
    phi = sf.Path.linear([0.0], [0.7], 1.0, 10)
    est = sf.tube_probability(sf.builtin("constant"), phi, 0.05, [0.3, 0.2, 0.1], replicas=1000, action_ref=0.0)
    assert all(r["p_hat"] == 1.0 for r in est["rows"])
    assert est["gap"] == 0.0


def test_minimize_action(ring_rate):
    r = sf.minimize_action(ring_rate, [0.0], [0.5], T=1.0, m=8)
    assert r["value"] == pytest.approx(ring_rate.L([0.0], [0.5]), abs=1e-3)
    with pytest.raises(sf.InfeasiblePathError):
        sf.minimize_action(ring_rate, [0.0], [3.0], m=8)


@pytest.mark.skipif(not os.environ.get("SLOWFAST_CLI"), reason="CLI path not provided")
def test_cli_roundtrip(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"system": "constant", "ham": {"box": [-2, 2], "n_per_axis": 5, "grid_n": 16}}))
    out = tmp_path / "out"
    subprocess.run([os.environ["SLOWFAST_CLI"], "ham", "--config", str(cfg), "--out-dir", str(out)], check=True,
                   capture_output=True)
    data = np.loadtxt(out / "surface.csv", delimiter=",", skiprows=1)
    assert np.allclose(data[:, 1], 0.7 * data[:, 0], atol=1e-8)
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["outputs"] == ["surface.csv", "surface.json"]
