import numpy as np
import pytest

from kamtori import jets
from kamtori.maps import (DissipativeStandardMap, apply_map, symplectic_matrix,
                          verify_conformal)


def test_symplectic_matrix_blocks():
    J = symplectic_matrix(2)
    assert np.array_equal(J[:2, 2:], np.eye(2))
    assert np.array_equal(J[2:, :2], -np.eye(2))
    np.testing.assert_array_equal(J @ J, -np.eye(4))


def test_unperturbed_is_twist_map(fam):
    x = np.array([0.3, 0.45], dtype=complex)
    out = fam.apply(x, 0.0, 0.0)
    np.testing.assert_allclose(out, [0.75, 0.45], atol=1e-15)


def test_pure_drift(fam):
    out = fam.apply(np.array([0.0, 0.0], dtype=complex), 0.2, 0.0)
    np.testing.assert_allclose(out, [0.2, 0.2], atol=1e-15)


def test_apply_map_reduces_angle(fam):
    out = apply_map(fam, np.array([0.9, 0.8]), 0.0, 0.0)
    assert 0.0 <= out[0].real < 1.0
    assert out[1] == pytest.approx(0.8)


def test_composition_matches_double_apply(fam, rng):
    eps, mu = 0.04, -0.02
    x = np.stack([rng.random(20), rng.uniform(-1, 1, 20)], axis=-1).astype(complex)
    once = fam.apply(fam.apply(x, mu, eps), mu, eps)
    for i in range(20):
        two = fam.apply(fam.apply(x[i], mu, eps), mu, eps)
        np.testing.assert_allclose(once[i], two, atol=1e-14)


def test_jacobian_structure_at_eps0(fam, rng):
    x = np.stack([rng.random(5), rng.uniform(-1, 1, 5)], axis=-1).astype(complex)
    Df = fam.jacobian(x, 0.0, 0.0)
    np.testing.assert_allclose(Df, np.broadcast_to(np.array([[1.0, 1.0], [0.0, 1.0]]),
                                                   Df.shape), atol=1e-15)


def test_d_mu_column(fam):
    D = fam.d_mu(np.array([0.1, 0.2], dtype=complex), 0.0, 0.03)
    np.testing.assert_allclose(D[..., 0], [1.0, 1.0], atol=1e-16)


def test_jacobian_against_central_difference(fam, rng):
    eps, mu = 0.07, 0.01
    h = 1e-6
    for _ in range(10):
        x = np.array([rng.random(), rng.uniform(-1, 1)], dtype=complex)
        Df = fam.jacobian(x, mu, eps)
        fd = np.empty((2, 2), dtype=complex)
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            fd[:, j] = (fam.apply(x + e, mu, eps) - fam.apply(x - e, mu, eps)) / (2 * h)
        assert np.max(np.abs(Df - fd)) <= 1e-7


def test_d_eps_against_central_difference(fam, rng):
    mu = 0.01
    h = 1e-6
    x = np.array([0.23, 0.71], dtype=complex)
    for eps in (0.05, 0.2):
        de = fam.d_eps(x, mu, eps)
        fd = (fam.apply(x, mu, eps + h) - fam.apply(x, mu, eps - h)) / (2 * h)
        np.testing.assert_allclose(de, fd, atol=1e-8)


# -- conformality -----------------------------------------------------------------

def test_conformal_identity(fam, rng):
    for eps in (0.0, 0.05, 0.3 + 0.1j):
        assert verify_conformal(fam, 100, eps, rng=rng) <= 1e-13


def test_symplectic_at_eps0(fam, rng):
    assert verify_conformal(fam, 100, 0.0, rng=rng) <= 1e-14


class _BrokenFamily(DissipativeStandardMap):
    """Action row forgets the conformal factor: y' = y + mu + kick."""

    def apply(self, x, mu, eps):
        x = np.asarray(x)
        mu0 = np.asarray(mu, dtype=complex).reshape(-1)[0] if np.size(mu) else 0.0
        ynew = x[..., 1] + mu0 + self._kick(x[..., 0], eps)
        return np.stack([x[..., 0] + ynew, ynew], axis=-1)

    def jacobian(self, x, mu, eps):
        out = super().jacobian(x, mu, eps)
        out[..., 0, 1] = 1.0
        out[..., 1, 1] = 1.0
        return out


def test_broken_family_detected(rng):
    fam = _BrokenFamily(kappa=0.5)
    eps = 0.2
    defect = verify_conformal(fam, 200, eps, rng=rng)
    # the missing factor shows up at the size of |lam - 1|
    assert defect >= 0.5 * abs(fam.lambda_eps(eps) - 1.0)


# -- jets ---------------------------------------------------------------------------

def test_lambda_jet_profiles():
    fam1 = DissipativeStandardMap(kappa=0.1, alpha=2.0, a=1)
    np.testing.assert_allclose(fam1.lambda_jet(0.0, 3), [1.0, 2.0, 0.0, 0.0])
    fam3 = DissipativeStandardMap(kappa=0.1, alpha=1.0, a=3)
    np.testing.assert_allclose(fam3.lambda_jet(0.0, 4), [1.0, 0.0, 0.0, 1.0, 0.0])
    # around eps0 != 0: binomial shift
    jet = fam3.lambda_jet(0.1, 3)
    np.testing.assert_allclose(jet, [1.0 + 0.1 ** 3, 3 * 0.1 ** 2, 3 * 0.1, 1.0])


def test_jet_apply_order0_is_apply(fam, rng):
    x = np.array([[0.3, 0.7]], dtype=complex)     # order-0 jet
    mu = np.array([[0.02]], dtype=complex)
    out = fam.jet_apply(x, mu, 0.06)
    np.testing.assert_allclose(out[0], fam.apply(x[0], 0.02, 0.06), atol=1e-15)


def test_jet_apply_matches_pointwise_eval(fam, rng):
    # polynomial consistency: evaluating the jet at de reproduces the map at
    # eps0 + de applied to the evaluated argument jet, up to O(de^{N+1})
    N = 6
    eps0 = 0.02
    x_jet = (rng.standard_normal((N + 1, 4, 2)) * 0.3).astype(complex)
    x_jet[0, :, 0] = rng.random(4)
    mu_jet = (rng.standard_normal((N + 1, 1)) * 0.1).astype(complex)
    G = fam.jet_apply(x_jet, mu_jet, eps0)
    for de in (1e-2, 5e-3, 2.5e-3):
        lhs = jets.poly_eval(G, de)
        rhs = fam.apply(jets.poly_eval(x_jet, de), jets.poly_eval(mu_jet, de),
                        eps0 + de)
        err = np.max(np.abs(lhs - rhs))
        assert err <= max(50 * de ** (N + 1), 1e-14)


def test_jet_chain_rule_consistency(fam, rng):
    # d/d eps of the composed jet equals Df.x' + D_mu f.mu' + d_eps f along
    # the jet, rebuilt from the family's jet pieces
    N = 5
    eps0 = 0.03
    x_jet = (rng.standard_normal((N + 1, 8, 2)) * 0.2).astype(complex)
    x_jet[0, :, 0] = rng.random(8)
    mu_jet = (rng.standard_normal((N + 1, 1)) * 0.05).astype(complex)

    G = fam.jet_apply(x_jet, mu_jet, eps0)
    lhs = jets.derivative(G)

    M = N - 1
    Df = fam.jet_jacobian(x_jet, mu_jet, eps0)[: M + 1]
    Dmu = fam.jet_d_mu(x_jet, mu_jet, eps0)[: M + 1]
    xp = jets.derivative(x_jet)
    mup = jets.derivative(mu_jet)
    term = jets.matmul(Df, xp[..., None])[..., 0] \
        + jets.matmul(Dmu, mup[:, None, :, None] * np.ones((1, 8, 1, 1)))[..., 0]

    # remaining explicit eps-derivative: lam'(eps) y + kappa V'(x)
    lamp = jets.derivative(fam.lambda_jet(eps0, N))
    s, _ = jets.sincos(x_jet[..., 0])
    dv = fam.kappa / (2 * np.pi) * s[: M + 1]
    de_f = jets.cauchy(lamp.reshape(-1, 1), x_jet[: M + 1, :, 1]) + dv
    term = term + np.stack([de_f, de_f], axis=-1)

    assert np.max(np.abs(lhs - term)) <= 1e-11


def test_jet_d_mu_constant(fam):
    x_jet = np.zeros((3, 5, 2), dtype=complex)
    out = fam.jet_d_mu(x_jet, np.zeros((3, 1)), 0.0)
    assert np.max(np.abs(out[1:])) == 0.0
    np.testing.assert_allclose(out[0, ..., 0], np.ones((5, 2)))


def test_unperturbed_torus_solves(fam, omega):
    K, mu = fam.unperturbed_torus(omega, 16)
    th = 0.37
    img = fam.apply(K.eval_lift(th), mu, 0.0)
    np.testing.assert_allclose(img, K.eval_lift(th + omega), atol=1e-15)


def test_jacobians_pair(fam, rng):
    from kamtori.maps import jacobians
    x = np.array([0.4, 0.6], dtype=complex)
    Df, Dmu = jacobians(fam, x, 0.01, 0.05)
    np.testing.assert_allclose(Df, fam.jacobian(x, 0.01, 0.05))
    np.testing.assert_allclose(Dmu[..., 0], [1.0, 1.0])
