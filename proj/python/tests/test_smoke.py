import math

import numpy as np
import pytest

import vlasov_lens as vl


def test_lens_round_trip():
    s, q, p = vl.lens_forward(1.3, [0.5, -1.0], [0.2, 0.4])
    assert s == pytest.approx(math.tanh(1.3))
    t, x, v = vl.lens_inverse(s, q, p)
    assert t == pytest.approx(1.3, abs=1e-12)
    assert x == pytest.approx([0.5, -1.0], abs=1e-12)
    assert v == pytest.approx([0.2, 0.4], abs=1e-12)


def test_shell_theorem_field():
    n, L = 128, 8.0
    x = np.linspace(-L, L, n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    R = np.hypot(X, Y)
    Ex, Ey = vl.solve_field(np.exp(-R**2) / math.pi, L)
    mask = (R > 0.5) & (R < 3.0)
    exact = (1 - np.exp(-R[mask] ** 2)) / (2 * math.pi * R[mask])
    assert np.max(np.abs(np.hypot(Ex, Ey)[mask] - exact) / exact) < 1e-4


def test_grid_array_round_trip():
    g = vl.gaussian(9, 4.0, amplitude=2.0)
    a = g.array()
    assert a.shape == (9, 9, 9, 9)
    assert a.max() == pytest.approx(2.0)
    h = vl.Grid(a, 4.0)
    assert np.array_equal(h.array(), a)
    assert h.linf() == pytest.approx(2.0)


def test_free_transport_is_a_shear():
    g = vl.gaussian(16, 6.0, q_width=1.2, p_width=0.8)
    out = vl.evolve(g, 0.5, field=False).array()
    x = np.array(g.nodes())
    Q1, Q2, P1, P2 = np.meshgrid(x, x, x, x, indexing="ij")
    exact = np.exp(-((Q1 - 0.5 * P1) ** 2 + (Q2 - 0.5 * P2) ** 2) / (2 * 1.44) - (P1**2 + P2**2) / (2 * 0.64))
    assert np.max(np.abs(out - exact)) < 5e-3


def test_domain_error_surfaces():
    with pytest.raises(ValueError):
        vl.lens_inverse(1.0, [0.0, 0.0], [0.0, 0.0])


def test_config_errors(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("[grid]\nn = 16\nwidth = 2\n")
    with pytest.raises(ValueError, match="grid.width"):
        vl.run("simulate", str(cfg), str(tmp_path / "out"))
    empty = tmp_path / "empty.cfg"
    empty.write_text("[grid]\nn = 16\n")
    code, _ = vl.run("simulate", str(empty), str(tmp_path / "out2"))
    assert code == 0
    assert not (tmp_path / "out2").exists()
