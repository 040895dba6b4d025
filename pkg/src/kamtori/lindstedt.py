"""Power-series solutions of the invariance equation in the dissipation
parameter, around any base point eps0 where an exact torus is known.

Two engines are provided:

* `lindstedt_expand` builds the coefficients order by order: at order j a
  lam(eps0)-twisted and an untwisted difference equation are solved in the
  frame of the base torus, with the averaged 2d x 2d system fixing the drift
  coefficient (the (lam-1) entry is kept symbolic, so eps0 = 0, where the
  block is triangular, and eps0 != 0 share one code path).

* `lindstedt_double` performs one Newton step on the whole jet: frames,
  torsion and conformal factor are themselves jets, and a single step takes a
  jet whose residual vanishes through order N to one vanishing through
  2N + 1, leaving the already-exact lower orders unchanged.

Coefficients are normalized so that in the base frame the angle component of
every order has zero average; normalized jets are unique, which is what makes
the two engines agree coefficientwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import jets
from .cohomology import DEFAULT_DIVISOR_FLOOR, solve_twisted
from .embedding import TorusEmbedding
from .errors import NonDegeneracyFailure
from .fourier import FourierSeries, dump_series, from_grid, load_series, to_grid
from .newton import _grid_size, _mean, _Workspace, DEFAULT_DET_RTOL

MAX_ORDER_DOUBLE = 16      # double precision cap; extended unlocks 32
MAX_ORDER_EXTENDED = 32


@dataclass(frozen=True)
class EpsilonJet:
    """Truncated power series (K(eps), mu(eps)) around eps0.

    K_coeffs[0] is the periodic part of the base embedding; higher orders are
    periodic correction series.  The actual embedding at eps is
    (theta + ..., ...) via `embedding_at`.
    """

    eps0: complex
    K_coeffs: tuple            # of (2d,)-valued FourierSeries
    mu_coeffs: np.ndarray      # (N+1, d) complex
    lambda_coeffs: np.ndarray  # (N+1,) complex

    @property
    def order(self) -> int:
        return len(self.K_coeffs) - 1

    @property
    def dim(self) -> int:
        return self.K_coeffs[0].dim

    @property
    def kmax(self) -> int:
        return self.K_coeffs[0].kmax

    def base_embedding(self) -> TorusEmbedding:
        return TorusEmbedding(self.K_coeffs[0])

    def embedding_at(self, eps) -> TorusEmbedding:
        de = complex(eps) - self.eps0
        acc = self.K_coeffs[-1].coeffs.astype(complex)
        for j in range(self.order - 1, -1, -1):
            acc = acc * de + self.K_coeffs[j].coeffs
        return TorusEmbedding(FourierSeries(self.dim, self.kmax, acc))

    def mu_at(self, eps) -> np.ndarray:
        return jets.poly_eval(self.mu_coeffs, complex(eps) - self.eps0)

    def truncated(self, order: int) -> "EpsilonJet":
        if order >= self.order:
            return self
        return EpsilonJet(self.eps0, self.K_coeffs[: order + 1],
                          np.array(self.mu_coeffs[: order + 1]),
                          np.array(self.lambda_coeffs[: order + 1]))

    def __sub__(self, other: "EpsilonJet") -> "EpsilonJet":
        """Coefficientwise difference (for comparing jets of one torus);
        the base points must agree."""
        if complex(other.eps0) != complex(self.eps0):
            raise ValueError(
                f"jet base points differ: {self.eps0} vs {other.eps0}")
        n = min(self.order, other.order)
        Ks = tuple(a - b for a, b in zip(self.K_coeffs[: n + 1],
                                         other.K_coeffs[: n + 1]))
        return EpsilonJet(self.eps0, Ks,
                          self.mu_coeffs[: n + 1] - other.mu_coeffs[: n + 1],
                          self.lambda_coeffs[: n + 1] - other.lambda_coeffs[: n + 1])


# -- jet arithmetic (thin public wrappers over the kernels) -------------------

def jet_add(a, b, order=None):
    a, b = np.asarray(a), np.asarray(b)
    n = (min(a.shape[0], b.shape[0]) - 1) if order is None else order
    return jets.pad(a, n) + jets.pad(b, n)


def jet_mul(a, b, order=None):
    """Cauchy product of coefficient jets (exact truncated algebra)."""
    return jets.cauchy(np.asarray(a), np.asarray(b), order=order)


def jet_compose_with_family(fam, jet: EpsilonJet):
    """Jet of f_{mu(eps),eps} o K(eps) on the sampling grid."""
    n = _grid_size(jet.kmax)
    x = _lift_jet(jet, n)
    return fam.jet_apply(x, jet.mu_coeffs, jet.eps0)


def _lift_jet(jet: EpsilonJet, n: int, order=None) -> np.ndarray:
    """Grid jet of the embedding lift; order 0 carries the identity part."""
    order = jet.order if order is None else order
    base = TorusEmbedding(jet.K_coeffs[0])
    x0 = base.lift_grid(n)
    out = np.zeros((order + 1,) + x0.shape, dtype=complex)
    out[0] = x0
    for j in range(1, min(order, jet.order) + 1):
        out[j] = to_grid(jet.K_coeffs[j], n)
    return out


def _shift_lift_jet(jet: EpsilonJet, omega, n: int, order=None) -> np.ndarray:
    order = jet.order if order is None else order
    base = TorusEmbedding(jet.K_coeffs[0])
    x0 = base.shifted_lift_grid(omega, n)
    out = np.zeros((order + 1,) + x0.shape, dtype=complex)
    out[0] = x0
    for j in range(1, min(order, jet.order) + 1):
        out[j] = to_grid(jet.K_coeffs[j].shift(omega), n)
    return out


def _avg_first_rows(Minv0, grid, d):
    return _mean((Minv0 @ grid[..., None])[..., 0], d)[:d]


# -- order-by-order engine ----------------------------------------------------

def lindstedt_expand(fam, K_base: TorusEmbedding, mu_base, omega, eps0, N: int,
                     divisor_floor=DEFAULT_DIVISOR_FLOOR,
                     det_rtol=DEFAULT_DET_RTOL,
                     base_tol: float = 1e-10) -> EpsilonJet:
    """Coefficients (K_j, mu_j), j <= N, of the normalized series at eps0.

    Requires an exact base solution (residual below base_tol) and the
    invertibility of the averaged block; for eps0 != 0 the twisted solves use
    the lam(eps0) divisors and may raise DivisorTooSmall.
    """
    if N > MAX_ORDER_DOUBLE:
        raise ValueError(
            f"order {N} beyond the double-precision cap {MAX_ORDER_DOUBLE}")
    d = K_base.dim
    mu_base = np.atleast_1d(np.asarray(mu_base, dtype=complex))
    ws = _Workspace(fam, K_base, mu_base, omega, eps0)
    base_res = from_grid(ws.E, d, ws.kmax).analytic_norm(0.0)
    if base_res > base_tol:
        raise ValueError(
            f"base residual {base_res:.3e} exceeds {base_tol:.1e}; "
            "the expansion needs an exact solution at eps0")

    block, Bb = _block_of(ws, divisor_floor, det_rtol)
    Bb_grid = to_grid(Bb.phi, ws.n)
    lam0 = ws.lam
    A1g = ws.A[..., :d, :]

    n = ws.n
    kmax = ws.kmax
    K_coeffs = [K_base.periodic]
    mu_coeffs = [mu_base]
    x_jet = np.zeros((N + 1,) + ws.X.shape, dtype=complex)
    x_jet[0] = ws.X
    mu_jet = np.zeros((N + 1, d), dtype=complex)
    mu_jet[0] = mu_base

    for j in range(1, N + 1):
        G = fam.jet_apply(x_jet[: j + 1], mu_jet[: j + 1], eps0)[j]
        Et = (ws.beta @ (-G)[..., None])[..., 0]
        E1, E2 = Et[..., :d], Et[..., d:]

        Ba = solve_twisted(from_grid(E2, d, kmax).remove_average(), lam0, omega,
                           divisor_floor=divisor_floor)
        Ba_grid = to_grid(Ba.phi, n)
        rhs = np.concatenate([
            _mean(E1, d) - _mean((ws.S @ Ba_grid[..., None])[..., 0], d),
            _mean(E2, d),
        ])
        sol = np.linalg.solve(block, rhs)
        W2bar, mu_j = sol[:d], sol[d:]

        W2 = Ba_grid + Bb_grid @ mu_j + W2bar
        rhs1 = E1 - (ws.S @ W2[..., None])[..., 0] - A1g @ mu_j
        W1 = to_grid(solve_twisted(from_grid(rhs1, d, kmax).remove_average(),
                                   1.0, omega, divisor_floor=divisor_floor).phi, n)

        Kj = from_grid((ws.M @ np.concatenate([W1, W2], axis=-1)[..., None])[..., 0],
                       d, kmax)
        K_coeffs.append(Kj)
        mu_coeffs.append(mu_j)
        x_jet[j] = to_grid(Kj, n)
        mu_jet[j] = mu_j

    return EpsilonJet(complex(eps0), tuple(K_coeffs),
                      np.array(mu_coeffs), fam.lambda_jet(eps0, N))


def _block_of(ws, divisor_floor, det_rtol):
    block, Bb, _, _ = ws.averaged_block(divisor_floor)
    d = ws.d
    scale = float(np.max(np.sum(np.abs(block), axis=1)))
    det = np.linalg.det(block)
    if not np.isfinite(scale) or abs(det) <= det_rtol * scale ** (2 * d):
        raise NonDegeneracyFailure(det, scale)
    return block, Bb


# -- residual jet -------------------------------------------------------------

def residual_jet(fam, jet: EpsilonJet, omega, through: int | None = None):
    """Taylor coefficients of f_{mu(eps),eps} o K(eps) - K(eps) o T_omega
    around eps0, through order 2N+2 by default.

    Orders <= N must be at roundoff level for a valid jet; the leading tail
    order carries the asymptotic constant of the truncation error.
    """
    M = 2 * jet.order + 2 if through is None else through
    n = _grid_size(jet.kmax)
    x = _lift_jet(jet, n, order=M)
    mu = jets.pad(jet.mu_coeffs, M)
    G = fam.jet_apply(x, mu, jet.eps0)
    shift = _shift_lift_jet(jet, omega, n, order=M)
    return [from_grid(G[j] - shift[j], jet.dim, jet.kmax) for j in range(M + 1)]


def residual_jet_norms(fam, jet: EpsilonJet, omega, through: int | None = None):
    return np.array([r.analytic_norm(0.0)
                     for r in residual_jet(fam, jet, omega, through)])


def residual_tail_norm(fam, jet: EpsilonJet, omega, eps_values,
                       through: int | None = None):
    """Norm of the truncation defect sum_{j>N} r_j (eps-eps0)^j at each eps.

    Evaluating the Taylor tail instead of subtracting two O(1) lifts avoids
    the double-precision cancellation floor, so the scaling law stays visible
    down to defects of 1e-30 and below.
    """
    rs = residual_jet(fam, jet, omega, through)
    tail = rs[jet.order + 1:]
    out = []
    for eps in np.atleast_1d(eps_values):
        de = complex(eps) - jet.eps0
        acc = tail[-1].coeffs.astype(complex)
        for r in tail[-2::-1]:
            acc = acc * de + r.coeffs
        series = FourierSeries(jet.dim, jet.kmax, acc * de ** (jet.order + 1))
        out.append(series.analytic_norm(0.0))
    return np.array(out)


def residual_norm_direct(fam, jet: EpsilonJet, omega, eps) -> float:
    """Direct double-precision defect of the truncated polynomial at eps
    (cancellation-limited near 1e-15; used to cross-validate the tail form)."""
    from .newton import invariance_residual
    K = jet.embedding_at(eps)
    return invariance_residual(fam, K, jet.mu_at(eps), omega, eps).analytic_norm(0.0)


# -- quadratic (doubling) engine ----------------------------------------------

def _vector_jacobian(series: FourierSeries) -> FourierSeries:
    """(2d, d)-valued series of partial derivatives of a (2d,)-valued one."""
    cols = [series.differentiate(j).coeffs for j in range(series.dim)]
    return FourierSeries(series.dim, series.kmax, np.stack(cols, axis=-1))


def _shift_jet_grids(grids, dim, kmax, omega, n):
    """Shift every order of a grid jet by omega (exact in coefficient space)."""
    out = np.zeros_like(grids)
    for j in range(grids.shape[0]):
        out[j] = to_grid(from_grid(grids[j], dim, kmax).shift(omega), n)
    return out


def lindstedt_double(fam, jet: EpsilonJet, omega,
                     divisor_floor=DEFAULT_DIVISOR_FLOOR,
                     det_rtol=DEFAULT_DET_RTOL) -> EpsilonJet:
    """One Newton step on the jet: order N in, order 2N+1 out.

    All frame objects (DK, the normalization and torsion, the inverse frame
    and the conformal factor) are computed as jets; the corrections solve a
    twisted and an untwisted difference equation per order, with the same
    averaged block as the base torus.  Already-exact orders are reproduced up
    to roundoff, and the output is normalized in the base frame.
    """
    N = jet.order
    M_ord = 2 * N + 1
    if M_ord > MAX_ORDER_DOUBLE:
        raise ValueError(
            f"target order {M_ord} beyond the double-precision cap {MAX_ORDER_DOUBLE}")
    d, kmax = jet.dim, jet.kmax
    eps0 = jet.eps0
    n = _grid_size(kmax)
    Jinv = fam.Jinv

    x = _lift_jet(jet, n, order=M_ord)
    mu = jets.pad(jet.mu_coeffs, M_ord)
    lam = fam.lambda_jet(eps0, M_ord)
    lam0 = complex(lam[0])

    # invariance defect jet
    E = fam.jet_apply(x, mu, eps0) - _shift_lift_jet(jet, omega, n, order=M_ord)

    # frame jets
    dk = np.zeros((M_ord + 1,) + x.shape[1:-1] + (2 * d, d), dtype=complex)
    dk[0] = to_grid(TorusEmbedding(jet.K_coeffs[0]).dk_series(), n)
    for j in range(1, N + 1):
        dk[j] = to_grid(_vector_jacobian(jet.K_coeffs[j]), n)
    dkT = np.swapaxes(dk, -1, -2)
    gram = jets.matmul(dkT, dk)
    Ng = jets.inv_matrix(gram)
    Mg = np.concatenate([dk, jets.matmul(Jinv @ dk, Ng)], axis=-1)
    Minv0 = np.linalg.inv(Mg[0])
    Mshift = _shift_jet_grids(Mg, d, kmax, omega, n)
    beta = jets.inv_matrix(Mshift)

    Et = jets.matmul(beta, E[..., None])[..., 0]
    Df = fam.jet_jacobian(x, mu, eps0)
    At = jets.matmul(beta, fam.jet_d_mu(x, mu, eps0))
    P = jets.matmul(dk, Ng)
    gamma = jets.matmul(dkT, Jinv @ dk)
    Pshift = _shift_jet_grids(P, d, kmax, omega, n)
    Nshift = _shift_jet_grids(Ng, d, kmax, omega, n)
    gshift = _shift_jet_grids(gamma, d, kmax, omega, n)
    term1 = jets.matmul(jets.matmul(np.swapaxes(Pshift, -1, -2), Df), Jinv @ P)
    NgN = jets.matmul(jets.matmul(np.swapaxes(Nshift, -1, -2), gshift), Nshift)
    lam_bc = lam.reshape((M_ord + 1,) + (1,) * (NgN.ndim - 1))
    S = term1 - jets.cauchy(lam_bc, NgN)

    A1 = At[..., :d, :]
    A2 = At[..., d:, :]

    # averaged block of the (exact) order-0 torus
    A2_series = from_grid(A2[0], d, kmax)
    Bb = solve_twisted(-A2_series.remove_average(), lam0, omega,
                       divisor_floor=divisor_floor)
    Bb_grid = to_grid(Bb.phi, n)
    block = np.zeros((2 * d, 2 * d), dtype=complex)
    block[:d, :d] = _mean(S[0], d)
    block[:d, d:] = _mean(S[0] @ Bb_grid, d) + _mean(A1[0], d)
    block[d:, :d] = (lam0 - 1.0) * np.eye(d)
    block[d:, d:] = _mean(A2[0], d)
    scale = float(np.max(np.sum(np.abs(block), axis=1)))
    det = np.linalg.det(block)
    if not np.isfinite(scale) or abs(det) <= det_rtol * scale ** (2 * d):
        raise NonDegeneracyFailure(det, scale)

    W1 = np.zeros((M_ord + 1,) + x.shape[1:-1] + (d,), dtype=complex)
    W2 = np.zeros_like(W1)
    sigma = np.zeros((M_ord + 1, d), dtype=complex)
    K_new = []
    mu_new = np.array(jets.pad(jet.mu_coeffs, M_ord))

    for nn in range(M_ord + 1):
        rhs1 = -Et[nn][..., :d]
        rhs2 = -Et[nn][..., d:]
        for m in range(1, nn + 1):
            rhs2 = rhs2 - lam[m] * W2[nn - m] - (A2[m] @ sigma[nn - m][..., None])[..., 0]
            rhs1 = rhs1 - (S[m] @ W2[nn - m][..., None])[..., 0] \
                - (A1[m] @ sigma[nn - m][..., None])[..., 0]

        Ba = solve_twisted(from_grid(rhs2, d, kmax).remove_average(), lam0, omega,
                           divisor_floor=divisor_floor)
        Ba_grid = to_grid(Ba.phi, n)
        rhs_avg = np.concatenate([
            _mean(rhs1, d) - _mean((S[0] @ Ba_grid[..., None])[..., 0], d),
            _mean(rhs2, d),
        ])
        sol = np.linalg.solve(block, rhs_avg)
        W2bar, sig = sol[:d], sol[d:]
        W2[nn] = Ba_grid + Bb_grid @ sig + W2bar
        sigma[nn] = sig

        r1 = rhs1 - (S[0] @ W2[nn][..., None])[..., 0] - (A1[0] @ sig[..., None])[..., 0]
        W1sol = solve_twisted(from_grid(r1, d, kmax).remove_average(), 1.0, omega,
                              divisor_floor=divisor_floor)
        W1[nn] = to_grid(W1sol.phi, n)

        # normalization in the base frame: zero average angle displacement
        Kn_grid = to_grid(jet.K_coeffs[nn], n) if nn <= N else \
            np.zeros(x.shape[1:], dtype=complex)
        corr = np.zeros(x.shape[1:], dtype=complex)
        for m in range(1, nn + 1):
            Wm = np.concatenate([W1[nn - m], W2[nn - m]], axis=-1)
            corr = corr + (Mg[m] @ Wm[..., None])[..., 0]
        W1bar = -_avg_first_rows(Minv0, Kn_grid, d) - _avg_first_rows(Minv0, corr, d)
        W1[nn] = W1[nn] + W1bar

        Wn = np.concatenate([W1[nn], W2[nn]], axis=-1)
        delta = (Mg[0] @ Wn[..., None])[..., 0] + corr
        K_new.append(from_grid(Kn_grid + delta, d, kmax))
        mu_new[nn] = mu_new[nn] + sig

    return EpsilonJet(complex(eps0), tuple(K_new), mu_new,
                      fam.lambda_jet(eps0, M_ord))


# -- jet files ----------------------------------------------------------------

def dump_jet(jet: EpsilonJet, fp) -> None:
    fp.write(f"# kamtori-jet d={jet.dim} kmax={jet.kmax} order={jet.order}\n")
    fp.write(f"# eps0 {jet.eps0.real:.17g} {jet.eps0.imag:.17g}\n")
    for label, arr in (("mu", jet.mu_coeffs), ("lambda", jet.lambda_coeffs)):
        flat = np.asarray(arr, dtype=complex).reshape(len(jet.K_coeffs), -1)
        for j, row in enumerate(flat):
            cells = " ".join(f"{z.real:.17g} {z.imag:.17g}" for z in row)
            fp.write(f"# {label}[{j}] {cells}\n")
    for series in jet.K_coeffs:
        dump_series(series, fp)


def load_jet(fp) -> EpsilonJet:
    head = fp.readline().split()
    meta = dict(tok.split("=") for tok in head[2:])
    order = int(meta["order"])
    eps_line = fp.readline().split()
    eps0 = complex(float(eps_line[2]), float(eps_line[3]))
    mu, lam = {}, {}
    for _ in range(2 * (order + 1)):
        toks = fp.readline().split()
        label = toks[1]
        vals = [float(t) for t in toks[2:]]
        row = np.array([complex(a, b) for a, b in zip(vals[0::2], vals[1::2])])
        if label.startswith("mu"):
            mu[int(label[3:-1])] = row
        else:
            lam[int(label[7:-1])] = row[0]
    K_coeffs = tuple(load_series(fp) for _ in range(order + 1))
    mu_arr = np.array([mu[j] for j in range(order + 1)])
    lam_arr = np.array([lam[j] for j in range(order + 1)])
    return EpsilonJet(eps0, K_coeffs, mu_arr, lam_arr)
