"""Torus embeddings K(theta) = (theta + u(theta), v(theta)) into T^d x R^d.

The angle block is the identity plus a periodic correction u, the action
block a periodic function v; both are carried as one (2d,)-valued Fourier
series.  All evaluations work on the universal cover (continuous lifts), so
differences of embeddings are genuinely periodic and free of mod-1 jumps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .fourier import FourierSeries, from_grid, theta_grid, to_grid


@dataclass(frozen=True)
class TorusEmbedding:
    periodic: FourierSeries

    def __post_init__(self):
        d = self.periodic.dim
        if self.periodic.value_shape != (2 * d,):
            raise ValueError(
                f"periodic part must be (2d,)-valued, got {self.periodic.value_shape}"
            )

    @property
    def dim(self) -> int:
        return self.periodic.dim

    @property
    def kmax(self) -> int:
        return self.periodic.kmax

    @classmethod
    def circle(cls, omega, kmax: int) -> "TorusEmbedding":
        """The flat embedding K(theta) = (theta, omega)."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        d = omega.size
        value = np.concatenate([np.zeros(d), omega]).astype(complex)
        return cls(FourierSeries.constant(value, d, kmax, real_valued=True))

    def angle_correction(self) -> FourierSeries:
        d = self.dim
        return FourierSeries(d, self.kmax, self.periodic.coeffs[..., :d],
                             real_valued=self.periodic.real_valued)

    def action(self) -> FourierSeries:
        d = self.dim
        return FourierSeries(d, self.kmax, self.periodic.coeffs[..., d:],
                             real_valued=self.periodic.real_valued)

    def eval_lift(self, theta) -> np.ndarray:
        """K at one point on the universal cover."""
        theta = np.atleast_1d(np.asarray(theta))
        out = np.array(self.periodic.eval(theta))
        out[: self.dim] += theta
        return out

    def lift_grid(self, n: int) -> np.ndarray:
        """(n,)*d grid of lifted images, shape (n,)*d + (2d,)."""
        vals = to_grid(self.periodic, n)
        grid = theta_grid(self.dim, n)
        out = np.array(vals)
        for j in range(self.dim):
            out[..., j] += grid[j]
        return out

    def shifted(self, sigma) -> "TorusEmbedding":
        """K o T_sigma as an embedding of the same form."""
        sigma = np.atleast_1d(np.asarray(sigma))
        shifted = self.periodic.shift(sigma)
        coeffs = shifted.coeffs.copy()
        center = (self.kmax,) * self.dim
        coeffs[center][: self.dim] += sigma
        return TorusEmbedding(FourierSeries(self.dim, self.kmax, coeffs,
                                            real_valued=shifted.real_valued))

    def shifted_lift_grid(self, omega, n: int) -> np.ndarray:
        """Grid lift of K o T_omega: theta + omega + u(theta+omega), v(theta+omega)."""
        omega = np.atleast_1d(np.asarray(omega))
        vals = to_grid(self.periodic.shift(omega), n)
        grid = theta_grid(self.dim, n)
        out = np.array(vals)
        for j in range(self.dim):
            out[..., j] += grid[j] + omega[j]
        return out

    def dk_series(self) -> FourierSeries:
        """DK as a (2d, d)-valued series (identity block plus Du, Dv)."""
        d = self.dim
        cols = [self.periodic.differentiate(j).coeffs for j in range(d)]
        coeffs = np.stack(cols, axis=-1)  # (..., 2d, d)
        center = (self.kmax,) * d
        block = coeffs[center].copy()
        block[:d, :d] += np.eye(d)
        coeffs[center] = block
        return FourierSeries(d, self.kmax, coeffs,
                             real_valued=self.periodic.real_valued)

    def dk_grid(self, n: int) -> np.ndarray:
        return to_grid(self.dk_series(), n)

    def with_correction(self, delta: FourierSeries) -> "TorusEmbedding":
        return TorusEmbedding(self.periodic + delta)

    def pad_to(self, kmax: int) -> "TorusEmbedding":
        return TorusEmbedding(self.periodic.pad_to(kmax))

    def distance(self, other: "TorusEmbedding", rho: float = 0.0) -> float:
        a, b = self.periodic, other.periodic
        kmax = max(a.kmax, b.kmax)
        return (a.pad_to(kmax) - b.pad_to(kmax)).analytic_norm(rho)
