import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from moutard_lab import (ConfigError, build_field, dbar, identity_field, integrability_defect,
                         make_grid, omega, omega_hat, project_skew_real, solve_system2,
                         solve_system3, zero_field)
from moutard_lab.grid import StencilMask, sup_norm

from conftest import random_field, scalar


def _poly(grid, coeffs, anti=False, n=1):
    kind = "antiholomorphic-polynomial" if anti else "holomorphic-polynomial"
    return build_field(grid, n, {"kind": kind, "coeffs": coeffs})


def test_constant_pair_closed_form():
    g = make_grid(-1, 1, -1, 1, 33, 33)
    one = identity_field(g, 1)
    bp = (10, 21)
    w = omega(one, one, bp)
    y0 = g.node(*bp).imag
    expected = -2j * (g.z.imag - y0)
    np.testing.assert_allclose(w.omega.data[..., 0, 0], expected, rtol=0, atol=1e-14)
    assert w.path_defect <= 1e-14 and w.skew_real_defect == 0


def test_linear_pair_closed_form():
    g = make_grid(-1, 1, -1, 1, 33, 33)
    z = g.z
    z0 = g.node(*g.center_index)
    w = omega(scalar(g, z), identity_field(g, 1))
    expected = (np.conj(z) ** 2 - z ** 2) / 2 - (np.conj(z0) ** 2 - z0 ** 2) / 2
    np.testing.assert_allclose(w.omega.data[..., 0, 0], expected, rtol=0, atol=1e-14)


def test_cubic_pair_second_order():
    errs, paths = [], []
    for n in (33, 65, 129):
        g = make_grid(-1, 1, -1, 1, n, n)
        z = g.z
        bp = (n // 4, n // 2)
        z0 = g.node(*bp)
        w = omega(scalar(g, z ** 3), identity_field(g, 1), bp)
        exact = (np.conj(z) ** 4 - z ** 4) / 4 - (np.conj(z0) ** 4 - z0 ** 4) / 4
        errs.append(np.abs(w.omega.data[..., 0, 0] - exact).max())
        paths.append(w.path_defect)
    for v in (errs, paths):
        orders = np.log2(np.array(v[:-1]) / np.array(v[1:]))
        assert np.all(np.abs(orders - 2) <= 0.4), orders


def test_zero_input_gives_constant():
    g = make_grid(-1, 1, -1, 1, 17, 17)
    C0 = np.array([[2j, -1j], [0.5j, 0]])
    w = omega(zero_field(g, 2), random_field(g, 2, 1), C0=C0)
    assert np.array_equal(w.omega.data, np.broadcast_to(C0, w.omega.data.shape))


def test_rejects_real_constant():
    g = make_grid(-1, 1, -1, 1, 17, 17)
    with pytest.raises(ConfigError):
        omega(identity_field(g, 1), identity_field(g, 1), C0=1.0)


def test_rejects_basepoint_outside():
    g = make_grid(-1, 1, -1, 1, 17, 17)
    with pytest.raises(ConfigError):
        omega(identity_field(g, 1), identity_field(g, 1), basepoint=(17, 0))


def test_projected_output_is_skew_real():
    g = make_grid(-1, 1, -1, 1, 17, 17)
    w = omega(random_field(g, 2, 3), random_field(g, 2, 4), C0=3j)
    assert np.array_equal(w.omega.data + np.conj(w.omega.data), np.zeros_like(w.omega.data))


def test_warns_on_non_solutions():
    g = make_grid(-1, 1, -1, 1, 17, 17)
    bad = _poly(g, [0, 1], anti=True)
    w = omega(bad, identity_field(g, 1), B=zero_field(g, 1))
    assert w.warnings
    good = omega(identity_field(g, 1), identity_field(g, 1), B=zero_field(g, 1))
    assert not good.warnings


def test_path_defect_bounded_by_stokes():
    # non-closed input: the two L-paths differ by the area integral of the curl,
    # which is 2 * integrability defect per unit area
    g = make_grid(-1, 1, -1, 1, 33, 33)
    Phi = _poly(g, [0, 1], anti=True)
    one = identity_field(g, 1)
    w = omega(Phi, one)
    defect = integrability_defect(Phi, one)
    area = (g.x1 - g.x0) * (g.y1 - g.y0)
    assert defect > 1
    assert w.path_defect <= 2 * defect * area + 1e-12


class TestIntegrabilityDefect:
    def test_zero(self):
        g = make_grid(-1, 1, -1, 1, 17, 17)
        assert integrability_defect(zero_field(g, 2), zero_field(g, 2)) == 0

    def test_constants(self):
        g = make_grid(-1, 1, -1, 1, 17, 17)
        assert integrability_defect(identity_field(g, 2), identity_field(g, 2)) <= 1e-12

    def test_neumann_pair_decreases(self):
        vals = []
        for n in (33, 65, 129):
            g = make_grid(-1, 1, -1, 1, n, n)
            B = build_field(g, 1, {"kind": "gaussian-bump", "matrix": 0.05, "sigma": 0.3})
            F = solve_system2(B, identity_field(g, 1))
            Fp = solve_system3(B, identity_field(g, 1))
            vals.append(integrability_defect(F, Fp))
        orders = np.log2(np.array(vals[:-1]) / np.array(vals[1:]))
        assert (orders >= 1).all(), vals


class TestOmegaHat:
    def test_zero_pivot(self):
        g = make_grid(-1, 1, -1, 1, 17, 17)
        assert not omega_hat(random_field(g, 2, 0), zero_field(g, 2)).data.any()

    def test_round_trip(self):
        errs = []
        for n in (33, 65, 129):
            g = make_grid(-1, 1, -1, 1, n, n)
            Phi = build_field(g, 2, {"kind": "gaussian-bump", "matrix": [[1, 0.5], [0, "1j"]],
                                     "sigma": 0.3})
            eye = identity_field(g, 2)
            m = np.zeros(g.shape, bool)
            m[3:-3, 3:-3] = True
            errs.append(sup_norm(dbar(omega_hat(Phi, eye)) - eye @ Phi, m))
        assert (np.log2(np.array(errs[:-1]) / np.array(errs[1:])) >= 1).all()

    def test_disk_indicator(self):
        g = make_grid(-2, 2, -2, 2, 129, 129)
        chi = build_field(g, 1, {"kind": "indicator-disk", "radius": 1.0})
        w = omega_hat(chi, identity_field(g, 1)).data[..., 0, 0]
        inside = np.abs(g.z) <= 0.7
        assert np.abs(w - np.conj(g.z))[inside].max() <= 5e-2

    def test_constant_summand(self):
        g = make_grid(-1, 1, -1, 1, 17, 17)
        a = omega_hat(identity_field(g, 1), identity_field(g, 1))
        b = omega_hat(identity_field(g, 1), identity_field(g, 1), constant=2)
        np.testing.assert_allclose(b.data - a.data, 2.0, rtol=0, atol=1e-15)


fields = st.integers(0, 2 ** 16)


@settings(max_examples=20, deadline=None)
@given(seed=fields)
def test_projection_idempotent(seed):
    g = make_grid(-1, 1, -1, 1, 11, 11)
    f = random_field(g, 2, seed)
    p = project_skew_real(f)
    assert np.array_equal(project_skew_real(p).data, p.data)


@settings(max_examples=15, deadline=None)
@given(seed=fields, i=st.integers(0, 16), j=st.integers(0, 16))
def test_basepoint_changes_by_a_constant(seed, i, j):
    g = make_grid(-1, 1, -1, 1, 17, 17)
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((2, 2))
    Phi = _poly(g, [c, rng.standard_normal((2, 2)) * 0.3], n=2)
    PhiPlus = _poly(g, [np.eye(2), rng.standard_normal((2, 2)) * 0.3], anti=True, n=2)
    w1 = omega(Phi, PhiPlus, (8, 8))
    w2 = omega(Phi, PhiPlus, (i, j))
    diff = w1.omega.data - w2.omega.data
    dev = np.sqrt((np.abs(diff - diff[0, 0]) ** 2).sum(axis=(2, 3))).max()
    assert dev <= 2 * max(w1.path_defect, w2.path_defect) + 1e-12


@settings(max_examples=15, deadline=None)
@given(s1=fields, s2=fields, s3=fields)
def test_additive_in_phi(s1, s2, s3):
    g = make_grid(-1, 1, -0.5, 1.5, 13, 11)
    P1, P2, Pp = random_field(g, 2, s1), random_field(g, 2, s2), random_field(g, 2, s3)
    bp = (3, 4)
    total = omega(P1 + P2, Pp, bp, C0=3j).omega.data
    parts = omega(P1, Pp, bp, C0=1j).omega.data + omega(P2, Pp, bp, C0=2j).omega.data
    assert np.abs(total - parts).max() <= 1e-12 * np.abs(total).max()


def test_interior_mask_unaffected():
    # omega is defined everywhere, including the derivative boundary ring
    g = make_grid(-1, 1, -1, 1, 17, 17)
    w = omega(identity_field(g, 1), identity_field(g, 1))
    assert not w.omega.partial and StencilMask().array(g).sum() < g.nx * g.ny


@settings(max_examples=15, deadline=None)
@given(seed=fields, c=st.floats(-20, 20))
def test_pre_projection_real_part_vanishes(seed, c):
    # both path integrands are purely imaginary, so with an imaginary constant
    # the unprojected potential has no real part at all, for any input
    g = make_grid(-1, 1, -1, 1, 13, 13)
    w = omega(random_field(g, 2, seed), random_field(g, 2, seed + 1), C0=1j * c)
    assert w.skew_real_defect == 0.0
