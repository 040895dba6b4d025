"""Conformally symplectic map families f_{mu,eps} on T^d x R^d.

A family transports the symplectic form to lam(eps) times itself,
Df^T J Df = lam(eps) J pointwise, with lam(eps) = 1 + alpha*eps^a + ...
and lam(0) = 1.  Families expose analytic phase/parameter/eps derivatives
and truncated power-series (jet) evaluation; the built-in dissipative
standard map is the test bench for the whole solver stack.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import jets
from .embedding import TorusEmbedding


def symplectic_matrix(d: int) -> np.ndarray:
    """Constant structure matrix with blocks [[0, I], [-I, 0]].

    With phase points ordered (angles, actions) this sign choice makes the
    torsion of the unperturbed twist family equal +1.
    """
    J = np.zeros((2 * d, 2 * d))
    J[:d, d:] = np.eye(d)
    J[d:, :d] = -np.eye(d)
    return J


class MapFamily:
    """Interface shared by the map families (duck-typed; vectorized over
    leading axes of the phase array, lift semantics for the angle part)."""

    dim: int
    alpha: complex
    a: int
    lift_safe: bool = True

    @property
    def J(self) -> np.ndarray:
        return symplectic_matrix(self.dim)

    @property
    def Jinv(self) -> np.ndarray:
        J = self.J
        return J.T  # orthogonal block structure: J^-1 = J^T

    def lambda_eps(self, eps):
        raise NotImplementedError

    def lambda_jet(self, eps0, order: int) -> np.ndarray:
        raise NotImplementedError

    def apply(self, x, mu, eps):
        raise NotImplementedError

    def jacobian(self, x, mu, eps):
        raise NotImplementedError

    def d_mu(self, x, mu, eps):
        raise NotImplementedError

    def d_eps(self, x, mu, eps):
        raise NotImplementedError

    def jet_apply(self, x_jet, mu_jet, eps0):
        raise NotImplementedError

    def jet_jacobian(self, x_jet, mu_jet, eps0):
        raise NotImplementedError

    def jet_d_mu(self, x_jet, mu_jet, eps0):
        raise NotImplementedError


def apply_map(fam: MapFamily, x, mu, eps):
    """Image point with the angle components reduced mod 1."""
    out = np.array(fam.apply(np.asarray(x, dtype=complex), mu, eps))
    d = fam.dim
    out[..., :d] = out[..., :d] - np.round(np.real(out[..., :d])) + 0j \
        if np.iscomplexobj(out) else np.mod(out[..., :d], 1.0)
    # complex angles reduce only their real part
    if np.iscomplexobj(out):
        re = np.mod(np.real(out[..., :d]), 1.0)
        out[..., :d] = re + 1j * np.imag(out[..., :d])
    return out


def jacobians(fam: MapFamily, x, mu, eps):
    """(Df, D_mu f) at a phase point; analytic formulas for the built-ins."""
    x = np.asarray(x, dtype=complex)
    return fam.jacobian(x, mu, eps), fam.d_mu(x, mu, eps)


def verify_conformal(fam: MapFamily, sample_count: int, eps, mu=None, rng=None) -> float:
    """Max over random phase points of |Df^T J Df - lam(eps) J| (Frobenius)."""
    rng = np.random.default_rng(0) if rng is None else rng
    d = fam.dim
    mu = np.zeros(d) if mu is None else np.atleast_1d(mu)
    x = np.empty((sample_count, 2 * d))
    x[:, :d] = rng.random((sample_count, d))
    x[:, d:] = rng.uniform(-1.5, 1.5, (sample_count, d))
    Df = fam.jacobian(x.astype(complex), mu, eps)
    J = fam.J
    defect = np.swapaxes(Df, -1, -2) @ J @ Df - fam.lambda_eps(eps) * J
    return float(np.max(np.sqrt(np.sum(np.abs(defect) ** 2, axis=(-2, -1)))))


@dataclass(frozen=True)
class DissipativeStandardMap(MapFamily):
    """Kicked twist map with conformal dissipation on T x R:

        y' = lam(eps) * y + mu + eps * kappa * sin(2 pi x) / (2 pi)
        x' = x + y'

    with lam(eps) = 1 + alpha * eps^a.  The action Jacobian carries the
    factor lam, so Df^T J Df = lam J holds exactly in exact arithmetic.
    At eps = 0 the family is the integrable symplectic twist map and
    K(theta) = (theta, omega), mu = 0 solves the invariance equation.
    """

    kappa: float = 0.5
    alpha: complex = 1.0
    a: int = 1
    dim: int = 1

    def lambda_eps(self, eps):
        return 1.0 + self.alpha * np.asarray(eps, dtype=complex) ** self.a

    def lambda_jet(self, eps0, order: int) -> np.ndarray:
        out = np.zeros(order + 1, dtype=complex)
        out[0] = 1.0
        for n in range(0, min(order, self.a) + 1):
            out[n] += self.alpha * math.comb(self.a, n) * complex(eps0) ** (self.a - n)
        return out

    # -- pointwise ----------------------------------------------------------

    def _kick(self, x, eps):
        return eps * self.kappa * np.sin(2 * np.pi * x) / (2 * np.pi)

    def apply(self, x, mu, eps):
        x = np.asarray(x)
        lam = self.lambda_eps(eps)
        mu = np.atleast_1d(mu)[0] if np.ndim(mu) else mu
        ynew = lam * x[..., 1] + mu + self._kick(x[..., 0], eps)
        xnew = x[..., 0] + ynew
        return np.stack([xnew, ynew], axis=-1)

    def jacobian(self, x, mu, eps):
        x = np.asarray(x)
        lam = self.lambda_eps(eps)
        c = eps * self.kappa * np.cos(2 * np.pi * x[..., 0])
        out = np.empty(x.shape[:-1] + (2, 2), dtype=np.result_type(x.dtype, type(lam)))
        out[..., 0, 0] = 1.0 + c
        out[..., 0, 1] = lam
        out[..., 1, 0] = c
        out[..., 1, 1] = lam
        return out

    def d_mu(self, x, mu, eps):
        x = np.asarray(x)
        out = np.ones(x.shape[:-1] + (2, 1), dtype=complex)
        return out

    def d_eps(self, x, mu, eps):
        x = np.asarray(x)
        dlam = self.alpha * self.a * np.asarray(eps, dtype=complex) ** (self.a - 1)
        common = dlam * x[..., 1] + self.kappa * np.sin(2 * np.pi * x[..., 0]) / (2 * np.pi)
        return np.stack([common, common], axis=-1)

    # -- jets ---------------------------------------------------------------

    def jet_apply(self, x_jet, mu_jet, eps0):
        x_jet = np.asarray(x_jet)
        order = x_jet.shape[0] - 1
        a, b = x_jet[..., 0], x_jet[..., 1]
        lamj = self.lambda_jet(eps0, order)
        epsj = jets.variable(eps0, order)
        s, _ = jets.sincos(a)
        kick = self.kappa / (2 * np.pi) * jets.cauchy(_expand(epsj, s), s, order=order)
        ynew = jets.cauchy(_expand(lamj, b), b, order=order) + _expand_vals(mu_jet, b) + kick
        xnew = a + ynew
        return np.stack([xnew, ynew], axis=-1)

    def jet_jacobian(self, x_jet, mu_jet, eps0):
        x_jet = np.asarray(x_jet)
        order = x_jet.shape[0] - 1
        a = x_jet[..., 0]
        lamj = self.lambda_jet(eps0, order)
        epsj = jets.variable(eps0, order)
        _, c = jets.sincos(a)
        ck = self.kappa * jets.cauchy(_expand(epsj, c), c, order=order)
        out = np.zeros(x_jet.shape[:-1] + (2, 2), dtype=complex)
        out[..., 0, 0] = ck
        out[0, ..., 0, 0] += 1.0
        out[..., 1, 0] = ck
        lam_bc = lamj.reshape((order + 1,) + (1,) * (out.ndim - 3))
        out[..., 0, 1] = lam_bc * np.ones_like(ck)
        out[..., 1, 1] = lam_bc * np.ones_like(ck)
        return out

    def jet_d_mu(self, x_jet, mu_jet, eps0):
        x_jet = np.asarray(x_jet)
        out = np.zeros(x_jet.shape[:-1] + (2, 1), dtype=complex)
        out[0] = 1.0
        return out

    def unperturbed_torus(self, omega, kmax: int):
        """Exact solution at eps = 0: the flat circle and zero drift."""
        return TorusEmbedding.circle(omega, kmax), np.zeros(self.dim, dtype=complex)


def _expand(coeff_jet, like):
    """Broadcast a (N+1,) coefficient jet against a (N+1, grid...) jet."""
    coeff_jet = np.asarray(coeff_jet, dtype=complex)
    return coeff_jet.reshape(coeff_jet.shape + (1,) * (like.ndim - 1))


def _expand_vals(mu_jet, like):
    """Broadcast a (N+1, d)->scalar drift jet against a grid jet (d = 1)."""
    mu_jet = np.asarray(mu_jet, dtype=complex)
    if mu_jet.ndim == 2:
        mu_jet = mu_jet[:, 0]
    return mu_jet.reshape(mu_jet.shape + (1,) * (like.ndim - 1))
