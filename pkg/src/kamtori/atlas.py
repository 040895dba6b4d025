"""Geometry of the good parameter sets: excluded resonance balls, grid
classification of the lambda- and epsilon-planes, excluded-measure scaling
across annuli, tangential-accessibility cones, and continuation sweeps.

The bad set near lam = 1 is covered by balls B_k centered at the resonances
e^{2 pi i k.omega}; within the annulus rho < |lam - 1| < 2 rho the covering
radius is radius_scale * rho^{N+1} |k|^{-tau} / A.  Epsilon-plane centers are
the preimages under lam(eps), one per branch of the leading root.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cohomology import DEFAULT_DIVISOR_FLOOR
from .diophantine import GoodSetParams, lambda_in_good_set, mode_ball
from .errors import DivisorTooSmall, KamtoriError, NoConvergence, NonDegeneracyFailure
from .newton import run_newton

DEFAULT_RADIUS_SCALE = 1.0   # the covering constant; all geometry is relative to it


@dataclass(frozen=True)
class ExclusionBall:
    k: tuple
    center: complex
    radius: float
    plane: str                 # "lambda" | "epsilon"
    branch: int = 0            # root branch for epsilon-plane preimages

    def contains(self, z: complex) -> bool:
        return abs(complex(z) - self.center) < self.radius


def _resonance_points(omega, k_max):
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    ks = mode_ball(omega.size, k_max)
    roots = np.exp(2j * np.pi * np.remainder(ks @ omega, 1.0))
    knorm = np.sum(np.abs(ks), axis=1).astype(float)
    return ks, roots, knorm


def excluded_balls(params: GoodSetParams, omega, k_max: int, rho_band: float,
                   radius_scale: float = DEFAULT_RADIUS_SCALE,
                   fam=None, plane: str = "lambda") -> list[ExclusionBall]:
    """Balls covering the bad set inside the annulus rho < |lam-1| < 2 rho.

    A ball is kept when it intersects the annulus.  For plane="epsilon" the
    centers are mapped through all `a` branches of the leading root of
    lam(eps) = root (polished by a Newton iteration on the family's lam) and
    the radii rescaled by |lam'| at the center.
    """
    ks, roots, knorm = _resonance_points(omega, k_max)
    radius = radius_scale * rho_band ** (params.N + 1) * knorm ** (-params.tau) / params.A
    dist = np.abs(roots - 1.0)
    keep = (dist > rho_band - radius) & (dist < 2.0 * rho_band + radius)
    balls = []
    for i in np.nonzero(keep)[0]:
        lam_ball = ExclusionBall(tuple(int(c) for c in ks[i]), complex(roots[i]),
                                 float(radius[i]), "lambda")
        if plane == "lambda":
            balls.append(lam_ball)
        else:
            balls.extend(_to_eps_plane(lam_ball, fam))
    balls.sort(key=lambda b: (sum(abs(c) for c in b.k), b.k, b.branch))
    return balls


def _to_eps_plane(ball: ExclusionBall, fam) -> list[ExclusionBall]:
    if fam is None:
        raise ValueError("epsilon-plane balls need the map family")
    a = int(fam.a)
    alpha = complex(fam.alpha)
    w = (ball.center - 1.0) / alpha
    r0 = w ** (1.0 / a) if w != 0 else 0.0
    out = []
    for m in range(a):
        eps_c = r0 * np.exp(2j * np.pi * m / a)
        eps_c = _polish_root(fam, eps_c, ball.center)
        dlam = _lambda_prime(fam, eps_c)
        if abs(dlam) == 0.0:
            continue
        out.append(ExclusionBall(ball.k, complex(eps_c),
                                 ball.radius / abs(dlam), "epsilon", branch=m))
    return out


def _lambda_prime(fam, eps):
    return complex(fam.lambda_jet(eps, 1)[1])


def _polish_root(fam, eps, target, rounds: int = 4):
    for _ in range(rounds):
        d = _lambda_prime(fam, eps)
        if abs(d) == 0.0:
            break
        eps = eps - (complex(fam.lambda_eps(eps)) - target) / d
    return eps


# -- grid classification ------------------------------------------------------

INSIDE, EXCLUDED, OUTSIDE_R0 = 0, 1, 2


@dataclass(frozen=True)
class AtlasGrid:
    plane: str
    bounds: tuple             # (re_min, re_max, im_min, im_max)
    resolution: tuple         # (nx, ny)
    status: np.ndarray        # (nx, ny) int, INSIDE | EXCLUDED | OUTSIDE_R0
    witness_k: np.ndarray     # (nx, ny, d) int, maximizing mode of the nu scan
    params: GoodSetParams
    k_scan: int

    def cell_centers(self):
        re0, re1, im0, im1 = self.bounds
        nx, ny = self.resolution
        xs = re0 + (np.arange(nx) + 0.5) * (re1 - re0) / nx
        ys = im0 + (np.arange(ny) + 0.5) * (im1 - im0) / ny
        return xs, ys


def classify_grid(plane: str, bounds, resolution, params: GoodSetParams,
                  omega, fam=None, k_scan: int = 2048,
                  chunk: int = 1024) -> AtlasGrid:
    """Per-cell membership of the good set, deterministic for fixed scan.

    plane="lambda" tests the cell center directly; plane="epsilon" maps it
    through the family's lam(eps) and adds the |eps| <= r0 gate.
    """
    nx, ny = resolution
    re0, re1, im0, im1 = bounds
    xs = re0 + (np.arange(nx) + 0.5) * (re1 - re0) / nx
    ys = im0 + (np.arange(ny) + 0.5) * (im1 - im0) / ny
    zz = (xs[:, None] + 1j * ys[None, :]).ravel()

    if plane == "epsilon":
        if fam is None:
            raise ValueError("epsilon-plane classification needs the map family")
        lam = np.asarray(fam.lambda_eps(zz))
        outside = np.abs(zz) > params.r0
    elif plane == "lambda":
        lam = zz
        outside = np.zeros(zz.shape, dtype=bool)
    else:
        raise ValueError(f"unknown plane {plane!r}")

    omega_v = np.atleast_1d(np.asarray(omega, dtype=float))
    ks, roots, knorm = _resonance_points(omega_v, k_scan)
    weight = knorm ** (-params.tau)

    status = np.full(zz.shape, INSIDE, dtype=np.int8)
    witness = np.zeros(zz.shape + (omega_v.size,), dtype=np.int64)
    factor = np.abs(lam - 1.0) ** (params.N + 1)
    for lo in range(0, zz.size, chunk):
        sl = slice(lo, min(lo + chunk, zz.size))
        dist = np.abs(roots[None, :] - lam[sl, None])
        with np.errstate(divide="ignore"):
            terms = weight[None, :] / dist
        arg = np.argmax(terms, axis=1)
        attained = terms[np.arange(arg.size), arg] * factor[sl]
        attained[factor[sl] == 0.0] = 0.0
        status[sl] = np.where(attained > params.A, EXCLUDED, INSIDE)
        witness[sl] = ks[arg]
    status[outside] = OUTSIDE_R0
    return AtlasGrid(plane, tuple(bounds), (nx, ny),
                     status.reshape(nx, ny),
                     witness.reshape(nx, ny, omega_v.size),
                     params, k_scan)


# -- excluded measure ---------------------------------------------------------

@dataclass(frozen=True)
class MeasureFit:
    rhos: np.ndarray
    areas: np.ndarray
    counts: np.ndarray
    exponent: float
    union_bound: np.ndarray    # sum of ball areas per annulus
    method: str


def excluded_measure(rho: float, params: GoodSetParams, omega, k_max: int,
                     radius_scale: float = DEFAULT_RADIUS_SCALE, levels: int = 3,
                     mc_samples: int = 1_000_000, seed: int = 0) -> MeasureFit:
    """Excluded area in the annuli rho/2^i < |lam-1| < rho/2^(i-1) and the
    log-log scaling exponent fitted across them.

    Requires 2 tau > d so the ball areas are summable.  Disjoint ball unions
    are summed exactly; overlapping ones fall back to seeded Monte Carlo.
    """
    omega_v = np.atleast_1d(np.asarray(omega, dtype=float))
    if 2 * params.tau <= omega_v.size:
        raise ValueError("the measure estimate needs 2*tau > d")
    rhos, areas, counts, bounds = [], [], [], []
    method = "disjoint-sum"
    rng = np.random.default_rng(seed)
    for i in range(levels):
        r = rho / 2.0 ** i
        balls = excluded_balls(params, omega_v, k_max, r, radius_scale)
        counts.append(len(balls))
        bound = float(np.pi * sum(b.radius ** 2 for b in balls))
        bounds.append(bound)
        if _pairwise_disjoint(balls):
            area = bound
        else:
            method = "monte-carlo"
            area = _mc_union_area(balls, r, mc_samples, rng)
        rhos.append(r)
        areas.append(area)
    rhos = np.array(rhos)
    areas = np.array(areas)
    if np.any(areas <= 0):
        raise KamtoriError(
            "an annulus carried no excluded balls; increase k_max or rho")
    exponent = float(np.polyfit(np.log(rhos), np.log(areas), 1)[0]) \
        if levels >= 2 else float("nan")
    return MeasureFit(rhos, areas, np.array(counts), exponent,
                      np.array(bounds), method)


def _pairwise_disjoint(balls) -> bool:
    for i in range(len(balls)):
        for j in range(i + 1, len(balls)):
            if abs(balls[i].center - balls[j].center) <= balls[i].radius + balls[j].radius:
                return False
    return True


def _mc_union_area(balls, rho, samples, rng):
    # uniform samples in the annulus rho < |z-1| < 2 rho around 1
    rad = np.sqrt(rng.uniform(rho ** 2, (2 * rho) ** 2, samples))
    ang = rng.uniform(0.0, 2 * np.pi, samples)
    z = 1.0 + rad * np.exp(1j * ang)
    hit = np.zeros(samples, dtype=bool)
    for b in balls:
        hit |= np.abs(z - b.center) < b.radius
    annulus_area = np.pi * ((2 * rho) ** 2 - rho ** 2)
    return float(np.mean(hit) * annulus_area)


# -- tangential accessibility -------------------------------------------------

def tangential_cone_check(point: complex, u: complex, m: int, gamma: float,
                          delta: float, balls, t_samples: int = 64,
                          s_samples: int = 8) -> bool:
    """True iff the discretized parabolic cone {point + t u + s conj(u):
    |t|,|s| < delta, s >= gamma |t|^m} avoids every listed ball."""
    if m < 2:
        raise ValueError("cone order m must be >= 2")
    point = complex(point)
    u = complex(u) / abs(complex(u))
    near = [b for b in balls
            if abs(b.center - point) < 2.0 * delta + b.radius]
    if not near:
        return True
    if any(b.contains(point) for b in near):
        return False
    t = np.linspace(-delta, delta, t_samples)
    floor_s = np.minimum(gamma * np.abs(t) ** m, delta)
    frac = np.linspace(0.0, 1.0, s_samples) ** 2
    s = floor_s[:, None] + (delta - floor_s[:, None]) * frac[None, :]
    zs = (point + t[:, None] * u + s * np.conj(u)).ravel()
    for b in near:
        if np.any(np.abs(zs - b.center) < b.radius):
            return False
    return True


def circle_accessibility_fraction(omega, sigma: float, A: float, m: int,
                                  gamma: float, delta: float, k_max: int,
                                  n_samples: int = 10_000) -> float:
    """Fraction of unit-circle points whose tangential cone clears the
    resonance balls of radius |k|^{-sigma}/A (the sigma > m*d regime makes
    this fraction approach 1 as gamma grows)."""
    ks, roots, knorm = _resonance_points(omega, k_max)
    balls = [ExclusionBall(tuple(int(c) for c in ks[i]), complex(roots[i]),
                           float(knorm[i] ** (-sigma) / A), "lambda")
             for i in range(len(ks))]
    phis = 2 * np.pi * (np.arange(n_samples) + 0.5) / n_samples
    ok = 0
    for phi in phis:
        z = np.exp(1j * phi)
        if tangential_cone_check(z, 1j * z, m, gamma, delta, balls,
                                 t_samples=24, s_samples=5):
            ok += 1
    return ok / n_samples


# -- continuation sweeps --------------------------------------------------------

@dataclass(frozen=True)
class SweepStep:
    eps: complex
    status: str                # "ok" | "divisor" | "no-convergence" | "non-degenerate"
    residual: float
    mu: np.ndarray | None
    obstruction_k: tuple | None = None
    note: str = ""


@dataclass(frozen=True)
class SweepResult:
    steps: tuple
    reached_end: bool
    path_length: float
    solutions: tuple           # KamSolution per accepted step


def coupled_divisor_floor(kmax: int, dim: int, lam: complex,
                          params: GoodSetParams) -> np.ndarray:
    """Per-mode divisor floor |lam-1|^{N+1} |k|^{-tau} / A over the mode box:
    a divisor below it is exactly a violation of the good-set inequality at
    that mode."""
    from .fourier import FourierSeries
    knorm = FourierSeries.zeros(dim, kmax).k_norm_grid()
    knorm[(kmax,) * dim] = 1.0
    factor = abs(complex(lam) - 1.0) ** (params.N + 1)
    return np.maximum(factor * knorm ** (-params.tau) / params.A,
                      DEFAULT_DIVISOR_FLOOR)


def sweep_continuation(fam, omega, path, K0, mu0, good_set: GoodSetParams | None = None,
                       tol: float = 1e-11, max_iter: int = 20, rho: float = 0.1,
                       on_obstruction: str = "halt") -> SweepResult:
    """Walk the epsilon path, solving at each point seeded by the previous
    solution.  With good-set params the cohomology floor is coupled to the
    set inequality, so DivisorTooSmall fires exactly when the path enters an
    excluded ball; the sweep records the obstructing mode and halts (detours
    are the caller's business via `detour_path`)."""
    if on_obstruction not in ("halt",):
        raise ValueError("only the 'halt' obstruction policy is built in")
    K, mu = K0, mu0
    steps = []
    sols = []
    length = 0.0
    prev = None
    reached = True
    for eps in np.asarray(path, dtype=complex):
        floor = DEFAULT_DIVISOR_FLOOR
        if good_set is not None:
            floor = coupled_divisor_floor(K.kmax, K.dim, fam.lambda_eps(eps), good_set)
        try:
            sol = run_newton(fam, K, mu, omega, eps, tol=tol, max_iter=max_iter,
                             rho=rho, divisor_floor=floor)
        except DivisorTooSmall as err:
            steps.append(SweepStep(complex(eps), "divisor", float("nan"), None,
                                   obstruction_k=err.k,
                                   note=f"divisor {err.divisor:.3e} < floor {err.floor:.3e}"))
            reached = False
            break
        except NoConvergence as err:
            steps.append(SweepStep(complex(eps), "no-convergence", err.trace[-1][0], None))
            reached = False
            break
        except NonDegeneracyFailure:
            steps.append(SweepStep(complex(eps), "non-degenerate", float("nan"), None))
            reached = False
            break
        steps.append(SweepStep(complex(eps), "ok", sol.residual_norm, sol.mu))
        sols.append(sol)
        K, mu = sol.K, sol.mu
        if prev is not None:
            length += abs(complex(eps) - prev)
        prev = complex(eps)
    return SweepResult(tuple(steps), reached, length, tuple(sols))


def detour_path(eps1: complex, eps2: complex, balls, samples: int = 257,
                max_bulge: float = 8.0):
    """Path from eps1 to eps2 avoiding the balls: the straight segment when
    clear, else the flattest circular arc that clears them.

    Returns (points, length).  For arcs the length stays below
    (pi/2) |eps1 - eps2| until the bulge exceeds a half turn, which keeps the
    compensation ratio below pi with margin.
    """
    eps1, eps2 = complex(eps1), complex(eps2)
    chord = eps2 - eps1
    dist = abs(chord)
    ts = np.linspace(0.0, 1.0, samples)
    seg = eps1 + ts * chord
    if not _path_blocked(seg, balls):
        return seg, dist
    mid = 0.5 * (eps1 + eps2)
    normal = 1j * chord / dist
    for bulge in np.linspace(0.05, max_bulge, 160):
        center = mid + bulge * dist * normal
        pts = _arc(eps1, eps2, center, samples)
        if not _path_blocked(pts, balls):
            radius = abs(eps1 - center)
            ang = _arc_angle(eps1, eps2, center)
            return pts, radius * ang
        center = mid - bulge * dist * normal
        pts = _arc(eps1, eps2, center, samples)
        if not _path_blocked(pts, balls):
            radius = abs(eps1 - center)
            ang = _arc_angle(eps1, eps2, center)
            return pts, radius * ang
    raise KamtoriError("no clearing arc found between the endpoints")


def _path_blocked(points, balls) -> bool:
    pts = np.asarray(points)
    for b in balls:
        if np.any(np.abs(pts - b.center) < b.radius):
            return True
    return False


def _arc_angle(e1, e2, center):
    a1 = np.angle(e1 - center)
    a2 = np.angle(e2 - center)
    d = (a2 - a1) % (2 * np.pi)
    return min(d, 2 * np.pi - d)


def _arc(e1, e2, center, samples):
    r1 = e1 - center
    a1 = np.angle(r1)
    d = (np.angle(e2 - center) - a1) % (2 * np.pi)
    if d > np.pi:
        d -= 2 * np.pi
    ang = a1 + np.linspace(0.0, d, samples)
    return center + abs(r1) * np.exp(1j * ang)


# -- exports ------------------------------------------------------------------

def grid_table(grid: AtlasGrid, fp) -> None:
    """Tabular cell records: re, im, status, witness mode."""
    xs, ys = grid.cell_centers()
    names = {INSIDE: "inside", EXCLUDED: "excluded", OUTSIDE_R0: "outside-r0"}
    fp.write(f"# atlas plane={grid.plane} nx={grid.resolution[0]} "
             f"ny={grid.resolution[1]} kscan={grid.k_scan}\n")
    fp.write("# re im status k...\n")
    for i, x in enumerate(xs):
        for j, y in enumerate(ys):
            kk = " ".join(str(int(c)) for c in grid.witness_k[i, j])
            fp.write(f"{x:.17g} {y:.17g} {names[int(grid.status[i, j])]} {kk}\n")


def sweep_table(result: SweepResult, fp) -> None:
    fp.write("# sweep re(eps) im(eps) status residual re(mu) im(mu) note\n")
    for st in result.steps:
        mu_re = f"{st.mu[0].real:.17g}" if st.mu is not None else "nan"
        mu_im = f"{st.mu[0].imag:.17g}" if st.mu is not None else "nan"
        note = st.note.replace(" ", "_") if st.note else "-"
        if st.obstruction_k is not None:
            note += "_k=" + ",".join(str(c) for c in st.obstruction_k)
        fp.write(f"{st.eps.real:.17g} {st.eps.imag:.17g} {st.status} "
                 f"{st.residual:.17g} {mu_re} {mu_im} {note}\n")


def render_svg(balls, bounds, width: int = 640, extras=(), unit_circle: bool = False) -> str:
    """Deterministic SVG of the excluded balls (black) inside the bounds."""
    re0, re1, im0, im1 = bounds
    height = int(round(width * (im1 - im0) / (re1 - re0)))

    def sx(x):
        return (x - re0) / (re1 - re0) * width

    def sy(y):
        return (im1 - y) / (im1 - im0) * height

    scale = width / (re1 - re0)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if unit_circle:
        parts.append(
            f'<circle cx="{sx(0):.2f}" cy="{sy(0):.2f}" r="{scale:.2f}" '
            'fill="none" stroke="#888" stroke-width="1"/>')
    for b in balls:
        parts.append(
            f'<circle cx="{sx(b.center.real):.2f}" cy="{sy(b.center.imag):.2f}" '
            f'r="{max(b.radius * scale, 0.75):.2f}" fill="black"/>')
    for tag in extras:
        parts.append(tag)
    parts.append("</svg>")
    return "\n".join(parts)
