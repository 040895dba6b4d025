"""Quadratic Newton solver for the invariance equation

    f_{mu,eps} o K = K o T_omega

on an adapted frame in which the linearized map is block triangular
[[I, S], [0, lam*I]] up to an error controlled by the invariance defect
(automatic reducibility).  One step solves a lam-twisted and an untwisted
difference equation plus a 2d x 2d averaged system for the drift correction,
and converges quadratically from any sufficiently accurate initial pair.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cohomology import DEFAULT_DIVISOR_FLOOR, solve_twisted
from .diophantine import GoodSetParams, lambda_in_good_set
from .embedding import TorusEmbedding
from .errors import (DivisorTooSmall, FrameSingular, NoConvergence,
                     NonDegeneracyFailure, NormalizationDiverged)
from .fourier import FourierSeries, dump_series, from_grid, load_series, to_grid
from .maps import symplectic_matrix

DEFAULT_DET_RTOL = 1e-10
DEFAULT_TAIL_THRESHOLD = 1e-10

_FRAME_COND_LIMIT = 1e12


def _grid_size(kmax: int, n=None) -> int:
    from .fourier import fast_grid_size
    wanted = max(3 * kmax + 2, 16)
    if n is not None:
        if n < 2 * kmax + 1:
            raise ValueError(f"grid size {n} violates the Nyquist bound for kmax={kmax}")
        wanted = max(wanted, n)
    return fast_grid_size(wanted)


def _mean(grid: np.ndarray, dim: int) -> np.ndarray:
    return np.mean(grid, axis=tuple(range(dim)))


def _shift_grid(grid: np.ndarray, dim, kmax, omega, n) -> np.ndarray:
    """Resample a grid-valued function composed with T_omega (exact for the
    retained band; performed in coefficient space)."""
    series = from_grid(grid, dim, kmax)
    return to_grid(series.shift(omega), n)


def invariance_residual(fam, K: TorusEmbedding, mu, omega, eps, n=None) -> FourierSeries:
    """E = f_{mu,eps} o K - K o T_omega as a (2d,)-valued series.

    Computed on an oversampled grid with continuous angle lifts, then
    truncated to the embedding's cutoff.
    """
    d = K.dim
    n = _grid_size(K.kmax, n)
    FX = fam.apply(K.lift_grid(n), mu, eps)
    KT = K.shifted_lift_grid(omega, n)
    E = FX - KT
    if not getattr(fam, "lift_safe", False):
        # families that reduce angles mod 1 need per-point branch repair
        E[..., :d] -= np.round(np.real(E[..., :d]))
    return from_grid(E, d, K.kmax)


@dataclass(frozen=True)
class ReducibilityFrame:
    M_frame: FourierSeries      # (2d, 2d) adapted frame, first block DK
    N_norm: FourierSeries       # (d, d) normalization (DK^T DK)^-1
    S_tors: FourierSeries       # (d, d) torsion
    A_tilde: FourierSeries      # (2d, d) frame-projected drift response
    beta: FourierSeries         # (2d, 2d) inverse of M o T_omega
    residual_R: FourierSeries   # reducibility defect
    R_norm: float
    E_norm: float
    ratio: float                # R_norm / max(E_norm, tiny)
    cond: float                 # worst conditioning of DK^T DK on the grid

    def a_blocks(self):
        d = self.A_tilde.dim
        A1 = FourierSeries(d, self.A_tilde.kmax, self.A_tilde.coeffs[..., :d, :])
        A2 = FourierSeries(d, self.A_tilde.kmax, self.A_tilde.coeffs[..., d:, :])
        return A1, A2


class _Workspace:
    """Grid-level frame data shared by the step and the frame diagnostics."""

    def __init__(self, fam, K, mu, omega, eps, n=None):
        d = K.dim
        kmax = K.kmax
        n = _grid_size(kmax, n)
        lam = complex(fam.lambda_eps(eps))
        Jinv = fam.Jinv

        X = K.lift_grid(n)
        FX = fam.apply(X, mu, eps)
        KT = K.shifted_lift_grid(omega, n)
        E = FX - KT
        if not getattr(fam, "lift_safe", False):
            E[..., :d] -= np.round(np.real(E[..., :d]))

        alpha = K.dk_grid(n)                      # (..., 2d, d)
        gram = np.swapaxes(alpha, -1, -2) @ alpha
        cond = float(np.max(np.linalg.cond(gram)))
        if not np.isfinite(cond) or cond > _FRAME_COND_LIMIT:
            raise FrameSingular(
                f"DK^T DK condition number {cond:.3e} exceeds {_FRAME_COND_LIMIT:.1e}"
            )
        Ngrid = np.linalg.inv(gram)
        M = np.concatenate([alpha, Jinv @ alpha @ Ngrid], axis=-1)
        Mshift = _shift_grid(M, d, kmax, omega, n)
        beta = np.linalg.inv(Mshift)

        P = alpha @ Ngrid
        gamma = np.swapaxes(alpha, -1, -2) @ Jinv @ alpha
        Pshift = _shift_grid(P, d, kmax, omega, n)
        Nshift = _shift_grid(Ngrid, d, kmax, omega, n)
        gshift = _shift_grid(gamma, d, kmax, omega, n)

        Df = fam.jacobian(X, mu, eps)
        S = np.swapaxes(Pshift, -1, -2) @ Df @ Jinv @ P \
            - lam * np.swapaxes(Nshift, -1, -2) @ gshift @ Nshift
        A = beta @ fam.d_mu(X, mu, eps)

        self.fam, self.K, self.mu, self.omega, self.eps = fam, K, mu, omega, eps
        self.d, self.kmax, self.n, self.lam = d, kmax, n, lam
        self.X, self.E, self.alpha, self.Ngrid = X, E, alpha, Ngrid
        self.M, self.Mshift, self.beta = M, Mshift, beta
        self.P, self.S, self.A, self.Df = P, S, A, Df
        self.cond = cond
        self.Et = (beta @ E[..., None])[..., 0]

    def frame(self) -> ReducibilityFrame:
        d, kmax, n = self.d, self.kmax, self.n
        tri = np.zeros(self.S.shape[:-2] + (2 * d, 2 * d), dtype=complex)
        idx = np.arange(d)
        tri[..., idx, idx] = 1.0
        tri[..., idx + d, idx + d] = self.lam
        tri[..., :d, d:] = self.S
        R = self.Df @ self.M - self.Mshift @ tri
        R_series = from_grid(R, d, kmax)
        E_series = from_grid(self.E, d, kmax)
        R_norm = R_series.analytic_norm(0.0)
        E_norm = E_series.analytic_norm(0.0)
        return ReducibilityFrame(
            M_frame=from_grid(self.M, d, kmax),
            N_norm=from_grid(self.Ngrid, d, kmax),
            S_tors=from_grid(self.S, d, kmax),
            A_tilde=from_grid(self.A, d, kmax),
            beta=from_grid(self.beta, d, kmax),
            residual_R=R_series,
            R_norm=R_norm,
            E_norm=E_norm,
            ratio=R_norm / max(E_norm, 1e-300),
            cond=self.cond,
        )

    def averaged_block(self, divisor_floor=DEFAULT_DIVISOR_FLOOR):
        """Assemble the 2d x 2d averaged system matrix and the drift-response
        solve it needs; returns (block, Bb_series, A1, A2 grids)."""
        d, kmax = self.d, self.kmax
        A1 = self.A[..., :d, :]
        A2 = self.A[..., d:, :]
        A2_series = from_grid(A2, d, kmax)
        Bb = solve_twisted(-A2_series.remove_average(), self.lam, self.omega,
                           divisor_floor=divisor_floor)
        Bb_grid = to_grid(Bb.phi, self.n)
        Sbar = _mean(self.S, d)
        SBb_bar = _mean(self.S @ Bb_grid, d)
        A1bar = _mean(A1, d)
        A2bar = _mean(A2, d)
        block = np.zeros((2 * d, 2 * d), dtype=complex)
        block[:d, :d] = Sbar
        block[:d, d:] = SBb_bar + A1bar
        block[d:, :d] = (self.lam - 1.0) * np.eye(d)
        block[d:, d:] = A2bar
        return block, Bb, A1, A2


def reducibility_frame(fam, K, mu, omega, eps, n=None) -> ReducibilityFrame:
    """Adapted frame with the reducibility defect R and its norm ratio to E."""
    return _Workspace(fam, K, mu, omega, eps, n).frame()


@dataclass(frozen=True)
class StepReport:
    w_norm: float
    sigma: np.ndarray
    residual_before: float
    twist: float
    det: complex
    divisor_gain: float
    grid: int


def newton_step(fam, K, mu, omega, eps, divisor_floor=DEFAULT_DIVISOR_FLOOR,
                det_rtol=DEFAULT_DET_RTOL, n=None):
    """One quadratic correction (K, mu) -> (K + M W, mu + sigma)."""
    ws = _Workspace(fam, K, mu, omega, eps, n)
    d, kmax, lam = ws.d, ws.kmax, ws.lam

    block, Bb, A1g, A2g = ws.averaged_block(divisor_floor)
    scale = float(np.max(np.sum(np.abs(block), axis=1)))
    det = np.linalg.det(block)
    if not np.isfinite(scale) or abs(det) <= det_rtol * scale ** (2 * d):
        raise NonDegeneracyFailure(det, scale)
    twist = float(np.linalg.norm(np.linalg.inv(block), 2))

    E1 = ws.Et[..., :d]
    E2 = ws.Et[..., d:]
    E2_series = from_grid(E2, d, kmax)
    Ba = solve_twisted(-E2_series.remove_average(), lam, omega,
                       divisor_floor=divisor_floor)
    Ba_grid = to_grid(Ba.phi, ws.n)

    rhs = np.concatenate([
        -_mean(ws.S @ Ba_grid[..., None], d)[..., 0] - _mean(E1, d),
        -_mean(E2, d),
    ])
    sol = np.linalg.solve(block, rhs)
    W2bar, sigma = sol[:d], sol[d:]

    Bb_grid = to_grid(Bb.phi, ws.n)
    W2 = Ba_grid + Bb_grid @ sigma + W2bar

    rhs1 = -(ws.S @ W2[..., None])[..., 0] - E1 - A1g @ sigma
    rhs1_series = from_grid(rhs1, d, kmax).remove_average()
    W1sol = solve_twisted(rhs1_series, 1.0, omega, divisor_floor=divisor_floor)
    W1 = to_grid(W1sol.phi, ws.n)

    W = np.concatenate([W1, W2], axis=-1)
    delta = from_grid((ws.M @ W[..., None])[..., 0], d, kmax)
    K2 = K.with_correction(delta)
    mu2 = np.atleast_1d(np.asarray(mu, dtype=complex)) + sigma

    report = StepReport(
        w_norm=from_grid(W, d, kmax).analytic_norm(0.0),
        sigma=sigma,
        residual_before=from_grid(ws.E, d, kmax).analytic_norm(0.0),
        twist=twist,
        det=complex(det),
        divisor_gain=max(Ba.max_divisor_gain, Bb.max_divisor_gain,
                         W1sol.max_divisor_gain),
        grid=ws.n,
    )
    return K2, mu2, report


@dataclass(frozen=True)
class KamSolution:
    K: TorusEmbedding
    mu: np.ndarray
    residual_norm: float
    twist_constant: float
    lagrangian_defect: float
    trace: tuple               # ((residual, rho_n) per iteration)
    eps: complex
    omega: np.ndarray
    lam: complex


def run_newton(fam, K0, mu0, omega, eps, tol=1e-12, max_iter=20, rho=0.1,
               delta0=None, divisor_floor=DEFAULT_DIVISOR_FLOOR,
               det_rtol=DEFAULT_DET_RTOL, good_set: GoodSetParams | None = None,
               good_set_scan: int = 4096, force: bool = False,
               tail_threshold=DEFAULT_TAIL_THRESHOLD, kmax_cap: int = 1024) -> KamSolution:
    """Iterate newton_step until the l1 residual majorant is below tol.

    The strip bookkeeping follows rho_{n+1} = rho_n - delta0 / 2^{n+1} with
    delta0 = rho/4 by default, so the total loss stays below delta0.  When the
    tail band of K carries relative mass above `tail_threshold` the cutoff is
    doubled (up to kmax_cap).
    """
    if good_set is not None and not force:
        witness = lambda_in_good_set(complex(fam.lambda_eps(eps)), good_set,
                                     omega, good_set_scan)
        if not witness.member:
            knorm = max(sum(abs(c) for c in witness.nu.k), 1)
            floor = witness.factor / (good_set.A * knorm ** good_set.tau)
            raise DivisorTooSmall(witness.nu.k, witness.nu.divisor, floor)

    delta0 = rho / 4.0 if delta0 is None else delta0
    K = K0
    mu = np.atleast_1d(np.asarray(mu0, dtype=complex))
    rho_n = rho
    trace = []
    twist = float("nan")
    for it in range(max_iter + 1):
        E = invariance_residual(fam, K, mu, omega, eps)
        res = E.analytic_norm(0.0)
        trace.append((res, rho_n))
        if res <= tol:
            if not np.isfinite(twist):
                block, _, _, _ = _Workspace(fam, K, mu, omega, eps).averaged_block(
                    divisor_floor)
                twist = float(np.linalg.norm(np.linalg.inv(block), 2))
            return KamSolution(
                K=K, mu=mu, residual_norm=res, twist_constant=twist,
                lagrangian_defect=lagrangian_defect(K, fam.J),
                trace=tuple(trace), eps=complex(eps),
                omega=np.atleast_1d(np.asarray(omega, dtype=float)),
                lam=complex(fam.lambda_eps(eps)),
            )
        if it == max_iter:
            break
        K, mu, report = newton_step(fam, K, mu, omega, eps,
                                    divisor_floor=divisor_floor,
                                    det_rtol=det_rtol)
        twist = report.twist
        rho_n = max(rho_n - delta0 / 2.0 ** (it + 1), 0.0)
        if K.periodic.tail_mass() > tail_threshold and K.kmax < kmax_cap:
            K = K.pad_to(min(2 * K.kmax, kmax_cap))
    raise NoConvergence(max_iter, trace)


def normalize_embedding(K: TorusEmbedding, K_ref: TorusEmbedding,
                        max_shift: float = 0.25, tol: float = 1e-13,
                        max_iter: int = 60):
    """Find sigma so that, in the frame of K_ref, the angle component of the
    mean displacement of K o T_sigma from K_ref vanishes.

    Solved per component by a damped secant iteration; |sigma| is of the
    order of the embedding distance.  Raises NormalizationDiverged if the
    iteration leaves [-max_shift, max_shift].
    """
    d = K.dim
    kmax = max(K.kmax, K_ref.kmax)
    K = K.pad_to(kmax)
    K_ref = K_ref.pad_to(kmax)
    n = _grid_size(kmax)

    alpha = K_ref.dk_grid(n)
    gram = np.swapaxes(alpha, -1, -2) @ alpha
    Ngrid = np.linalg.inv(gram)
    Jinv = symplectic_matrix(d).T
    M = np.concatenate([alpha, Jinv @ alpha @ Ngrid], axis=-1)
    Minv = np.linalg.inv(M)
    ref_lift = K_ref.lift_grid(n)

    def g(sigma):
        # the condition is holomorphic in sigma, so a complex shift is allowed
        diff = K.shifted(sigma).lift_grid(n) - ref_lift
        return _mean((Minv @ diff[..., None])[..., 0], d)[:d]

    sigma = np.zeros(d, dtype=complex)
    val = g(sigma)
    h = 1e-7
    for _ in range(max_iter):
        if np.max(np.abs(val)) <= tol:
            break
        jac = np.empty((d, d), dtype=complex)
        for j in range(d):
            e = np.zeros(d)
            e[j] = h
            jac[:, j] = (g(sigma + e) - g(sigma - e)) / (2 * h)
        sigma = sigma - np.linalg.solve(jac, val)
        if np.max(np.abs(sigma)) > max_shift:
            raise NormalizationDiverged(
                f"shift {sigma} left the trust region |sigma| <= {max_shift}"
            )
        val = g(sigma)
    else:
        if np.max(np.abs(val)) > tol:
            raise NormalizationDiverged("secant iteration did not reach tolerance")
    if np.max(np.abs(sigma.imag)) < 1e-13:
        sigma = sigma.real
    return K.shifted(sigma), sigma


def lagrangian_defect(K: TorusEmbedding, J=None) -> float:
    """l1 norm of the d x d series DK^T (J o K) DK (zero on Lagrangian tori)."""
    d = K.dim
    if J is None:
        J = symplectic_matrix(d)
    n = _grid_size(K.kmax)
    alpha = K.dk_grid(n)
    L = np.swapaxes(alpha, -1, -2) @ J @ alpha
    return from_grid(L, d, K.kmax).analytic_norm(0.0)


# -- solution files -----------------------------------------------------------

def dump_solution(sol: KamSolution, fp) -> None:
    fp.write(f"# kamtori-solution d={sol.K.dim} kmax={sol.K.kmax}\n")
    fp.write("# omega " + " ".join(f"{w:.17g}" for w in sol.omega) + "\n")
    fp.write(f"# eps {sol.eps.real:.17g} {sol.eps.imag:.17g}\n")
    fp.write("# mu " + " ".join(f"{m.real:.17g} {m.imag:.17g}" for m in sol.mu) + "\n")
    fp.write(f"# lambda {sol.lam.real:.17g} {sol.lam.imag:.17g}\n")
    fp.write(f"# rho {sol.trace[-1][1]:.17g}\n")
    fp.write(f"# residual {sol.residual_norm:.17g}\n")
    fp.write(f"# twist {sol.twist_constant:.17g}\n")
    dump_series(sol.K.angle_correction(), fp)
    dump_series(sol.K.action(), fp)


def load_solution(fp) -> KamSolution:
    head = {}
    pos = fp.tell()
    while True:
        line = fp.readline()
        if not line.startswith("#") or line.startswith("# fourier"):
            fp.seek(pos)
            break
        pos = fp.tell()
        toks = line[1:].split()
        head[toks[0]] = toks[1:]
    u = load_series(fp)
    v = load_series(fp)
    d = u.dim
    coeffs = np.concatenate([
        u.coeffs[..., None] if u.value_shape == () else u.coeffs,
        v.coeffs[..., None] if v.value_shape == () else v.coeffs,
    ], axis=-1)
    K = TorusEmbedding(FourierSeries(d, u.kmax, coeffs))
    mu_raw = [float(t) for t in head["mu"]]
    mu = np.array([complex(a, b) for a, b in zip(mu_raw[0::2], mu_raw[1::2])])
    eps = complex(float(head["eps"][0]), float(head["eps"][1]))
    lam = complex(float(head["lambda"][0]), float(head["lambda"][1]))
    residual = float(head["residual"][0])
    rho = float(head["rho"][0])
    twist = float(head["twist"][0])
    omega = np.array([float(t) for t in head["omega"]])
    return KamSolution(K=K, mu=mu, residual_norm=residual, twist_constant=twist,
                       lagrangian_defect=lagrangian_defect(K),
                       trace=((residual, rho),), eps=eps, omega=omega, lam=lam)
