"""Run configuration: flat INI-style key-value sections.

Unknown sections or keys are rejected with a location diagnostic; the golden
mean frequency is entered symbolically ("golden") and expanded to full double
precision internally so the frequency is never truncated in decimal.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field

import numpy as np

from .diophantine import GOLDEN_MEAN, GoodSetParams
from .errors import ConfigError
from .maps import DissipativeStandardMap

_SILVER_MEAN = np.sqrt(2.0) - 1.0

_SCHEMA = {
    "family": {"name", "kappa", "alpha", "a"},
    "frequency": {"omega", "tau"},
    "solver": {"tol", "max_iter", "rho", "delta0", "kmax", "divisor_floor"},
    "goodset": {"A", "N", "r0", "kscan"},
    "solve": {"eps"},
    "lindstedt": {"order", "eps0"},
    "double": {"order", "rounds"},
    "atlas": {"plane", "bounds", "resolution", "ball_kmax", "rho_band",
              "radius_scale"},
    "sweep": {"start", "end", "steps", "direction"},
}


@dataclass
class RunConfig:
    family: DissipativeStandardMap
    omega: np.ndarray
    tau: float
    tol: float = 1e-12
    max_iter: int = 20
    rho: float = 0.1
    delta0: float | None = None
    kmax: int = 64
    divisor_floor: float = 1e-12
    good_set: GoodSetParams | None = None
    k_scan: int = 4096
    sections: dict = field(default_factory=dict)   # raw command sections

    def section(self, name: str) -> dict:
        return self.sections.get(name, {})


def _parse_complex(text: str, where: str) -> complex:
    toks = text.split()
    try:
        if len(toks) == 1:
            return complex(float(toks[0]))
        if len(toks) == 2:
            return complex(float(toks[0]), float(toks[1]))
    except ValueError:
        pass
    raise ConfigError(f"cannot parse complex value {text!r}", where)


def _parse_omega(text: str, where: str) -> np.ndarray:
    parts = text.split()
    out = []
    for p in parts:
        low = p.lower()
        if low in ("golden", "golden-mean"):
            out.append(GOLDEN_MEAN)
        elif low in ("silver", "silver-mean"):
            out.append(_SILVER_MEAN)
        else:
            try:
                if "/" in p:
                    num, den = p.split("/")
                    out.append(float(int(num)) / float(int(den)))
                else:
                    out.append(float(p))
            except ValueError:
                raise ConfigError(f"cannot parse frequency component {p!r}", where)
    if not out:
        raise ConfigError("frequency omega is empty", where)
    return np.array(out)


def load_config(path) -> RunConfig:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fp:
            parser.read_file(fp)
    except OSError as err:
        raise ConfigError(str(err))
    except configparser.Error as err:
        raise ConfigError(str(err), str(path))

    for sec in parser.sections():
        if sec not in _SCHEMA:
            raise ConfigError(f"unknown section [{sec}]", str(path))
        for key in parser[sec]:
            if key not in {k.lower() for k in _SCHEMA[sec]}:
                raise ConfigError(f"unknown key {key!r}", f"{path}[{sec}]")

    def get(sec, key, cast, default=None, required=False):
        where = f"{path}[{sec}].{key}"
        if not parser.has_option(sec, key):
            if required:
                raise ConfigError(f"missing required key {key!r}", where)
            return default
        raw = parser.get(sec, key).strip()
        if raw == "":
            return default
        try:
            return cast(raw)
        except (ValueError, TypeError):
            raise ConfigError(f"cannot parse value {raw!r}", where)

    if not parser.has_section("family"):
        raise ConfigError("missing section [family]", str(path))
    name = get("family", "name", str, default="dissipative_standard")
    if name != "dissipative_standard":
        raise ConfigError(f"unknown family {name!r}", f"{path}[family].name")
    fam = DissipativeStandardMap(
        kappa=get("family", "kappa", float, default=0.5),
        alpha=complex(get("family", "alpha", float, default=1.0)),
        a=get("family", "a", int, default=1),
    )

    if not parser.has_section("frequency") or not parser.has_option("frequency", "omega"):
        raise ConfigError("missing [frequency].omega", str(path))
    omega = _parse_omega(parser.get("frequency", "omega"), f"{path}[frequency].omega")
    tau = get("frequency", "tau", float, default=1.0)

    cfg = RunConfig(family=fam, omega=omega, tau=tau)
    if parser.has_section("solver"):
        cfg.tol = get("solver", "tol", float, default=cfg.tol)
        cfg.max_iter = get("solver", "max_iter", int, default=cfg.max_iter)
        cfg.rho = get("solver", "rho", float, default=cfg.rho)
        cfg.delta0 = get("solver", "delta0", float, default=None)
        cfg.kmax = get("solver", "kmax", int, default=cfg.kmax)
        cfg.divisor_floor = get("solver", "divisor_floor", float,
                                default=cfg.divisor_floor)
    if parser.has_section("goodset"):
        cfg.good_set = GoodSetParams(
            A=get("goodset", "A", float, required=True),
            N=get("goodset", "N", int, required=True),
            tau=tau,
            r0=get("goodset", "r0", float, required=True),
        )
        cfg.k_scan = get("goodset", "kscan", int, default=cfg.k_scan)

    for sec in ("solve", "lindstedt", "double", "atlas", "sweep"):
        if parser.has_section(sec):
            cfg.sections[sec] = dict(parser[sec])
    return cfg


def parse_complex(text: str, where: str = "value") -> complex:
    return _parse_complex(text, where)
