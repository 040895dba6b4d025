"""Configuration-driven experiment runner.

    kamtori <command> --config <file> --out <dir> [--seed n] [--force]

Commands: solve, lindstedt, double, atlas, sweep, verify.  Output files are
written atomically and a manifest records the config hash, the package
version and every emitted file; floats are printed with 17 significant
digits so identical configs reproduce byte-identical tables.

Exit codes: 0 ok, 64 config error, 2 non-degeneracy, 3 small divisor,
4 no convergence, 1 anything else.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .atlas import (classify_grid, excluded_balls, grid_table, render_svg,
                    sweep_continuation, sweep_table)
from .config import load_config, parse_complex
from .diophantine import in_good_set, scan_trace
from .errors import (ConfigError, DivisorTooSmall, KamtoriError, NoConvergence,
                     NonDegeneracyFailure)
from .lindstedt import (dump_jet, lindstedt_double, lindstedt_expand,
                        residual_jet_norms)
from .newton import dump_solution, invariance_residual, run_newton
from .maps import verify_conformal

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NONDEGENERATE = 2
EXIT_DIVISOR = 3
EXIT_NOCONV = 4
EXIT_CONFIG = 64


def _atomic_write(path, text: str):
    directory = os.path.dirname(path) or "."
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".kamtori-")
    try:
        with os.fdopen(fd, "w") as fp:
            fp.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class _Run:
    def __init__(self, args):
        self.cfg = load_config(args.config)
        self.out = args.out
        self.seed = args.seed
        self.force = args.force
        os.makedirs(self.out, exist_ok=True)
        with open(args.config, "rb") as fp:
            self.config_hash = hashlib.sha256(fp.read()).hexdigest()
        self.files = []

    def emit(self, name: str, text: str):
        path = os.path.join(self.out, name)
        _atomic_write(path, text)
        self.files.append(name)
        return path

    def manifest(self):
        lines = [
            f"version {__version__}",
            f"config-sha256 {self.config_hash}",
            f"seed {self.seed}",
        ]
        lines += [f"file {name}" for name in sorted(self.files)]
        _atomic_write(os.path.join(self.out, "manifest.txt"), "\n".join(lines) + "\n")


def _solver_start(cfg):
    K0, mu0 = cfg.family.unperturbed_torus(cfg.omega, cfg.kmax)
    return K0, mu0


def cmd_solve(run: _Run):
    cfg = run.cfg
    sec = cfg.section("solve")
    if "eps" not in sec:
        raise ConfigError("missing key 'eps'", "[solve]")
    eps = parse_complex(sec["eps"], "[solve].eps")
    K0, mu0 = _solver_start(cfg)
    sol = run_newton(cfg.family, K0, mu0, cfg.omega, eps, tol=cfg.tol,
                     max_iter=cfg.max_iter, rho=cfg.rho, delta0=cfg.delta0,
                     divisor_floor=cfg.divisor_floor, good_set=cfg.good_set,
                     good_set_scan=cfg.k_scan, force=run.force)
    buf = io.StringIO()
    dump_solution(sol, buf)
    run.emit("solution.txt", buf.getvalue())
    trace = "\n".join(f"{i} {r:.17g} {rho:.17g}"
                      for i, (r, rho) in enumerate(sol.trace))
    run.emit("newton_trace.txt", "# iter residual rho\n" + trace + "\n")
    print(f"solved eps={eps}: residual {sol.residual_norm:.3e} "
          f"in {len(sol.trace) - 1} iterations")
    return EXIT_OK


def _expand_from_config(run: _Run, order: int, eps0: complex):
    cfg = run.cfg
    K0, mu0 = _solver_start(cfg)
    if eps0 != 0:
        sol = run_newton(cfg.family, K0, mu0, cfg.omega, eps0, tol=cfg.tol,
                         max_iter=cfg.max_iter, rho=cfg.rho,
                         divisor_floor=cfg.divisor_floor)
        K0, mu0 = sol.K, sol.mu
    return lindstedt_expand(cfg.family, K0, mu0, cfg.omega, eps0, order,
                            divisor_floor=cfg.divisor_floor)


def cmd_lindstedt(run: _Run):
    cfg = run.cfg
    sec = cfg.section("lindstedt")
    order = int(sec.get("order", "4"))
    eps0 = parse_complex(sec.get("eps0", "0"), "[lindstedt].eps0")
    jet = _expand_from_config(run, order, eps0)
    buf = io.StringIO()
    dump_jet(jet, buf)
    run.emit("jet.txt", buf.getvalue())
    norms = residual_jet_norms(cfg.family, jet, cfg.omega)
    run.emit("residual_orders.txt", "# order residual_norm\n" + "\n".join(
        f"{j} {v:.17g}" for j, v in enumerate(norms)) + "\n")
    print(f"lindstedt order {order} at eps0={eps0}: "
          f"max residual through order {order}: {max(norms[:order + 1]):.3e}")
    return EXIT_OK


def cmd_double(run: _Run):
    cfg = run.cfg
    sec = cfg.section("double")
    order = int(sec.get("order", "1"))
    rounds = int(sec.get("rounds", "2"))
    jet = _expand_from_config(run, order, 0.0)
    for _ in range(rounds):
        jet = lindstedt_double(cfg.family, jet, cfg.omega,
                               divisor_floor=cfg.divisor_floor)
    buf = io.StringIO()
    dump_jet(jet, buf)
    run.emit("jet.txt", buf.getvalue())
    norms = residual_jet_norms(cfg.family, jet, cfg.omega)
    run.emit("residual_orders.txt", "# order residual_norm\n" + "\n".join(
        f"{j} {v:.17g}" for j, v in enumerate(norms)) + "\n")
    print(f"doubled {rounds}x from order {order}: final order {jet.order}, "
          f"max residual through order {jet.order}: {max(norms[:jet.order + 1]):.3e}")
    return EXIT_OK


def cmd_atlas(run: _Run):
    cfg = run.cfg
    if cfg.good_set is None:
        raise ConfigError("atlas needs a [goodset] section", "[goodset]")
    sec = cfg.section("atlas")
    plane = sec.get("plane", "lambda")
    bounds = tuple(float(t) for t in sec.get("bounds", "0.7 1.3 -0.3 0.3").split())
    if len(bounds) != 4:
        raise ConfigError("bounds needs 4 numbers", "[atlas].bounds")
    resolution = tuple(int(t) for t in sec.get("resolution", "200 200").split())
    ball_kmax = int(sec.get("ball_kmax", "512"))
    rho_band = float(sec.get("rho_band", "0.05"))
    radius_scale = float(sec.get("radius_scale", "1.0"))

    grid = classify_grid(plane, bounds, resolution, cfg.good_set, cfg.omega,
                         fam=cfg.family, k_scan=cfg.k_scan)
    buf = io.StringIO()
    grid_table(grid, buf)
    run.emit("cells.txt", buf.getvalue())

    balls = excluded_balls(cfg.good_set, cfg.omega, ball_kmax, rho_band,
                           radius_scale=radius_scale,
                           fam=cfg.family if plane == "epsilon" else None,
                           plane=plane)
    rows = [f"# balls plane={plane} rho_band={rho_band:.17g}",
            "# k re(center) im(center) radius branch"]
    rows += [f"{','.join(str(c) for c in b.k)} {b.center.real:.17g} "
             f"{b.center.imag:.17g} {b.radius:.17g} {b.branch}" for b in balls]
    run.emit("balls.txt", "\n".join(rows) + "\n")
    run.emit("atlas.svg", render_svg(balls, bounds, unit_circle=(plane == "lambda")))

    trace, _ = scan_trace(cfg.omega, cfg.tau, min(cfg.k_scan, 4096))
    lines = ["# knorm divisor running_sup"]
    lines += [f"{int(row[0])} {row[1]:.17g} {row[2]:.17g}" for row in trace]
    run.emit("nu_trace.txt", "\n".join(lines) + "\n")

    counts = {0: int(np.sum(grid.status == 0)), 1: int(np.sum(grid.status == 1)),
              2: int(np.sum(grid.status == 2))}
    print(f"atlas {plane}: inside={counts[0]} excluded={counts[1]} "
          f"outside-r0={counts[2]}, {len(balls)} balls")
    return EXIT_OK


def cmd_sweep(run: _Run):
    cfg = run.cfg
    sec = cfg.section("sweep")
    start = parse_complex(sec.get("start", "0.01"), "[sweep].start")
    end = parse_complex(sec.get("end", "0.1"), "[sweep].end")
    steps = int(sec.get("steps", "10"))
    if "direction" in sec and sec["direction"].strip():
        u = parse_complex(sec["direction"], "[sweep].direction")
        u = u / abs(u)
        end = start + u * abs(end - start)
    path = start + (end - start) * np.linspace(0.0, 1.0, steps)
    K0, mu0 = _solver_start(cfg)
    result = sweep_continuation(cfg.family, cfg.omega, path, K0, mu0,
                                good_set=cfg.good_set, tol=cfg.tol,
                                max_iter=cfg.max_iter, rho=cfg.rho)
    buf = io.StringIO()
    sweep_table(result, buf)
    run.emit("sweep.txt", buf.getvalue())
    status = "reached end" if result.reached_end else \
        f"halted: {result.steps[-1].status}"
    print(f"sweep {start} -> {end}: {status}, "
          f"{sum(1 for s in result.steps if s.status == 'ok')}/{steps} points, "
          f"path length {result.path_length:.6g}")
    if not result.reached_end:
        last = result.steps[-1]
        if last.status == "divisor":
            return EXIT_DIVISOR
        if last.status == "no-convergence":
            return EXIT_NOCONV
        return EXIT_NONDEGENERATE
    return EXIT_OK


def cmd_verify(run: _Run):
    """Deterministic invariant battery on the configured family."""
    cfg = run.cfg
    rng = np.random.default_rng(run.seed)
    checks = []

    def check(name, value, bound):
        ok = value <= bound
        checks.append((name, value, bound, ok))
        return ok

    fam = cfg.family
    K0, mu0 = _solver_start(cfg)
    check("conformality-defect", verify_conformal(fam, 200, 0.07, rng=rng), 1e-13)
    E0 = invariance_residual(fam, K0, mu0, cfg.omega, 0.0)
    check("exact-torus-residual", E0.analytic_norm(0.0), 1e-14)

    from .fourier import FourierSeries, from_grid, to_grid
    coeffs = (rng.standard_normal((33,)) + 1j * rng.standard_normal((33,)))
    series = FourierSeries(1, 16, coeffs * np.exp(-0.4 * np.abs(np.arange(-16, 17))))
    rt = from_grid(to_grid(series, 64), 1, 16)
    check("grid-round-trip", (rt - series).analytic_norm(0.0)
          / series.analytic_norm(0.0), 1e-13)

    from .cohomology import solve_twisted
    eta = series.remove_average()
    sol = solve_twisted(eta, 0.97, cfg.omega)
    check("cohomology-residual", sol.residual / eta.analytic_norm(0.0), 1e-12)

    from .diophantine import nu_omega
    n1 = nu_omega(cfg.omega, cfg.tau, 1000)
    n2 = nu_omega(cfg.omega, cfg.tau, 100000)
    check("nu-monotone", 0.0 if n1.value <= n2.value else 1.0, 0.0)

    if cfg.good_set is not None:
        w = in_good_set(0.0, cfg.good_set, cfg.omega, fam.lambda_eps, cfg.k_scan)
        check("origin-in-good-set", 0.0 if w.member else 1.0, 0.0)

    sol = run_newton(fam, K0, mu0, cfg.omega, 0.05, tol=1e-12, rho=cfg.rho,
                     divisor_floor=cfg.divisor_floor)
    check("newton-residual", sol.residual_norm, 1e-12)
    check("lagrangian-defect", sol.lagrangian_defect, 1e-10)

    lines = []
    all_ok = True
    for name, value, bound, ok in checks:
        all_ok &= ok
        lines.append(f"{'PASS' if ok else 'FAIL'} {name} {value:.3e} <= {bound:.1e}")
    run.emit("verify.txt", "\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK if all_ok else EXIT_ERROR


_COMMANDS = {
    "solve": cmd_solve,
    "lindstedt": cmd_lindstedt,
    "double": cmd_double,
    "atlas": cmd_atlas,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="kamtori",
        description="invariant tori, dissipation-series jets and analyticity atlases "
                    "for conformally symplectic map families")
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--force", action="store_true",
                        help="skip the good-set membership gate")
    args = parser.parse_args(argv)

    try:
        run = _Run(args)
        code = _COMMANDS[args.command](run)
        run.manifest()
        return code
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NonDegeneracyFailure as err:
        print(f"non-degeneracy failure: {err}", file=sys.stderr)
        return EXIT_NONDEGENERATE
    except DivisorTooSmall as err:
        print(f"small divisor: {err}", file=sys.stderr)
        return EXIT_DIVISOR
    except NoConvergence as err:
        print(f"no convergence: {err}", file=sys.stderr)
        return EXIT_NOCONV
    except KamtoriError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
