"""Experiment configuration files.

Configs are INI files with flat, dotted keys for tensor entries::

    [network]
    n1 = 2
    a = 5, 7
    d.1.1.1 = 1.3
    kernel.k = exp:5
    history.x = -0.5, -1

Indices in dotted keys are 1-based. Any key can be overridden through the
environment as ``FRACBAM_<SECTION>_<KEY>`` with dots written as
underscores, e.g. ``FRACBAM_NETWORK_DELTA=0.8`` or
``FRACBAM_NETWORK_D_1_1_1=2``.
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ConfigError, DomainError
from .halanay import HalanayProblem, envelope_history
from .kernels import KernelFamily, KernelSpec
from .model import Activation, BamNetwork
from .solver import SolverConfig
from .sync import FeedbackGains

__all__ = ["MODES", "ENV_PREFIX", "ExperimentConfig", "load_config", "parse_config", "SWEEP_PARAMS"]

MODES = ("simulate", "certify", "halanay", "sync")
ENV_PREFIX = "FRACBAM_"
SECTIONS = ("experiment", "network", "solver", "certify", "sync", "halanay", "output")

#: Sweepable scalars and the ``(section, keys)`` each one sets.
SWEEP_PARAMS = {
    "delta": ("network", ("delta",)),
    "c": ("network", ("c", "c_bar")),
    "c_bar": ("network", ("c_bar",)),
    "mu": ("network", ("mu",)),
    "beta": ("sync", ("beta", "beta_bar")),
    "beta_bar": ("sync", ("beta_bar",)),
    "h": ("solver", ("h",)),
    "t_end": ("solver", ("t_end",)),
    "gamma": ("halanay", ("gamma",)),
    "r": ("halanay", ("r",)),
}


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """A parsed and validated experiment."""

    modes: tuple[str, ...]
    network: BamNetwork | None
    solver: SolverConfig | None
    certify_modes: tuple[str, ...]
    gains: FeedbackGains | None
    response_history: tuple | None
    halanay: HalanayProblem | None
    halanay_solver: SolverConfig | None
    output_dir: Path
    snapshot: dict
    base_dir: Path


# {{{ raw parsing


def _new_parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keep I and J distinct from i and j
    return cp


def _norm(key: str) -> str:
    return key.upper().replace(".", "_")


def _apply_env(cp: configparser.ConfigParser, environ) -> None:
    for name in sorted(environ):
        if not name.startswith(ENV_PREFIX):
            continue
        rest = name[len(ENV_PREFIX) :]
        section, _, key = rest.partition("_")
        section = section.lower()
        if section not in SECTIONS or not key:
            raise ConfigError(f"{name}: unknown section in environment override")
        if not cp.has_section(section):
            cp.add_section(section)
        existing = {_norm(k): k for k in cp[section]}
        target = existing.get(key.upper())
        if target is None:
            target = _guess_key(section, key)
        cp[section][target] = environ[name]


_KNOWN = {
    "experiment": ("mode",),
    "network": ("n1", "n2", "a", "a_bar", "c", "c_bar", "mu", "delta", "I", "J", "window",
                "activation.x", "activation.y", "kernel.k", "kernel.h", "kernel.k_bar",
                "kernel.h_bar", "history.x", "history.y"),
    "solver": ("h", "t_end", "memory_policy", "memory_window", "corrector_iterations"),
    "certify": ("modes",),
    "sync": ("beta", "beta_bar", "history.x", "history.y"),
    "halanay": ("gamma", "r", "c", "mu", "kernel", "y0", "history_fraction", "h", "t_end"),
    "output": ("dir",),
}


def _guess_key(section: str, key: str) -> str:
    for k in _KNOWN[section]:
        if _norm(k) == key.upper():
            return k
    parts = key.lower().split("_")
    # Tensor entries such as D_BAR_1_2_1 -> d_bar.1.2.1
    idx = [p for p in parts if p.isdigit()]
    head = "_".join(p for p in parts if not p.isdigit())
    if section == "network" and head in ("d", "d_bar") and len(idx) == 3:
        return ".".join([head] + idx)
    raise ConfigError(f"{ENV_PREFIX}{section.upper()}_{key}: unknown key for [{section}]")


def parse_config(text: str, base_dir: Path | str = ".", environ=None,
                 overrides: dict | None = None) -> ExperimentConfig:
    """Parse config text; ``environ`` defaults to ``os.environ``.

    ``overrides`` maps ``(section, key)`` to string values and is applied
    last (used by the CLI flags and sweeps).
    """
    cp = _new_parser()
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from exc
    _apply_env(cp, os.environ if environ is None else environ)
    for (section, key), val in (overrides or {}).items():
        if not cp.has_section(section):
            cp.add_section(section)
        cp[section][key] = str(val)
    for section in cp.sections():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section [{section}]")
    return _build(cp, Path(base_dir))


def load_config(path, environ=None, overrides: dict | None = None) -> ExperimentConfig:
    """Read and validate a config file."""
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"), p.parent, environ, overrides)


# }}}


# {{{ typed fields


def _float(sec, key: str, default=None) -> float:
    if key not in sec:
        if default is None:
            raise ConfigError(f"[{sec.name}] {key}: missing")
        return float(default)
    try:
        return float(sec[key])
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: not a number: {sec[key]!r}") from exc


def _int(sec, key: str) -> int:
    v = _float(sec, key)
    if v != int(v):
        raise ConfigError(f"[{sec.name}] {key}: must be an integer, got {sec[key]!r}")
    return int(v)


def _floats(sec, key: str, n: int | None = None, default=None) -> list[float]:
    if key not in sec:
        if default is None:
            raise ConfigError(f"[{sec.name}] {key}: missing")
        return list(default)
    try:
        vals = [float(v) for v in sec[key].split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: expected comma-separated numbers") from exc
    if n is not None and len(vals) == 1 and n > 1:
        vals = vals * n
    if n is not None and len(vals) != n:
        raise ConfigError(f"[{sec.name}] {key}: expected {n} values, got {len(vals)}")
    return vals


def _kernel(spec: str, base_dir: Path, where: str) -> KernelSpec:
    parts = [p.strip() for p in spec.split(":")]
    try:
        if parts[0] == "exp" and len(parts) in (2, 3):
            return KernelSpec.exponential(float(parts[1]), float(parts[2]) if len(parts) == 3 else 1.0)
        if parts[0] == "table" and len(parts) in (2, 3):
            path = (base_dir / parts[1]).resolve()
            if not path.is_file():
                raise ConfigError(f"{where}: kernel table file not found: {path}")
            data = np.loadtxt(path, delimiter=",", ndmin=2)
            tail = float(parts[2]) if len(parts) == 3 else None
            return KernelSpec.table(data[:, 0], data[:, 1], tail)
    except (ValueError, DomainError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc
    raise ConfigError(f"{where}: kernel must be 'exp:<rate>[:<weight>]' or 'table:<file>[:<tail_rate>]'")


def _tensor(sec, name: str, shape) -> np.ndarray:
    out = np.zeros(shape)
    prefix = name + "."
    for key in sec:
        if not key.startswith(prefix):
            continue
        rest = key[len(prefix) :].split(".")
        if len(rest) != 3 or not all(r.isdigit() for r in rest):
            raise ConfigError(f"[network] {key}: expected {name}.i.j.k with 1-based indices")
        idx = tuple(int(r) - 1 for r in rest)
        if any(i < 0 or i >= s for i, s in zip(idx, shape)):
            raise ConfigError(f"[network] {key}: index out of range for shape {shape}")
        out[idx] = _float(sec, key)
    return out


def _family(sec, name: str, shape, base_dir: Path) -> KernelFamily:
    default = _kernel(sec.get(f"kernel.{name}", ""), base_dir, f"[network] kernel.{name}")
    overrides = {}
    prefix = f"kernel.{name}."
    for key in sec:
        if key.startswith(prefix):
            rest = key[len(prefix) :].split(".")
            if len(rest) != 3 or not all(r.isdigit() for r in rest):
                raise ConfigError(f"[network] {key}: expected {prefix}i.j.k")
            idx = tuple(int(r) - 1 for r in rest)
            if any(i < 0 or i >= s for i, s in zip(idx, shape)):
                raise ConfigError(f"[network] {key}: index out of range for shape {shape}")
            overrides[idx] = _kernel(sec[key], base_dir, f"[network] {key}")
    return KernelFamily(tuple(shape), default, overrides)


def _activations(sec, layer: str, n: int):
    key = f"activation.{layer}"
    names = [v.strip() for v in sec.get(key, "tanh").split(",") if v.strip()]
    if len(names) == 1:
        names = names * n
    if len(names) != n:
        raise ConfigError(f"[network] {key}: expected 1 or {n} names")
    try:
        return tuple(Activation.named(v) for v in names)
    except DomainError as exc:
        raise ConfigError(f"[network] {key}: {exc}") from exc


def _network(cp, base_dir: Path) -> BamNetwork:
    if not cp.has_section("network"):
        raise ConfigError("[network] section missing")
    sec = cp["network"]
    n1, n2 = _int(sec, "n1"), _int(sec, "n2")
    if n1 <= 0 or n2 <= 0:
        raise ConfigError("[network] n1, n2: must be positive integers")
    try:
        return BamNetwork(
            n1=n1, n2=n2,
            a=_floats(sec, "a", n1), a_bar=_floats(sec, "a_bar", n2),
            c=_float(sec, "c", 0.0), c_bar=_float(sec, "c_bar", sec.get("c", 0.0)),
            mu=_float(sec, "mu"), delta=_float(sec, "delta"),
            d=_tensor(sec, "d", (n2, n1, n2)), d_bar=_tensor(sec, "d_bar", (n1, n2, n1)),
            k=_family(sec, "k", (n2, n1, n2), base_dir), h=_family(sec, "h", (n2, n1, n2), base_dir),
            k_bar=_family(sec, "k_bar", (n1, n2, n1), base_dir),
            h_bar=_family(sec, "h_bar", (n1, n2, n1), base_dir),
            act_x=_activations(sec, "x", n1), act_y=_activations(sec, "y", n2),
            I=_floats(sec, "I", n1, [0.0] * n1), J=_floats(sec, "J", n2, [0.0] * n2),
            hist_x=_floats(sec, "history.x", n1), hist_y=_floats(sec, "history.y", n2),
            window=sec.get("window", "infinite").strip(),
        )
    except DomainError as exc:
        raise ConfigError(f"[network] {exc}") from exc


def _solver(sec) -> SolverConfig:
    window = sec.get("memory_window")
    return SolverConfig(
        h=_float(sec, "h"), t_end=_float(sec, "t_end"),
        corrector_iterations=_int(sec, "corrector_iterations") if "corrector_iterations" in sec else 1,
        memory_policy=sec.get("memory_policy", "full").strip(),
        memory_window=None if window is None else float(window),
    )


def _halanay(sec, base_dir: Path) -> tuple[HalanayProblem, SolverConfig]:
    try:
        gm, r, mu = _float(sec, "gamma"), _float(sec, "r"), _float(sec, "mu")
        y0 = _float(sec, "y0", 1.0)
        hist = envelope_history(gm, r, mu, y0, _float(sec, "history_fraction", 0.5))
        prob = HalanayProblem(gm, r, _float(sec, "c"), mu,
                              _kernel(sec.get("kernel", ""), base_dir, "[halanay] kernel"), hist, y0)
    except DomainError as exc:
        raise ConfigError(f"[halanay] {exc}") from exc
    return prob, SolverConfig(_float(sec, "h"), _float(sec, "t_end"))


def _build(cp, base_dir: Path) -> ExperimentConfig:
    exp = cp["experiment"] if cp.has_section("experiment") else {}
    modes = tuple(m.strip() for m in exp.get("mode", "simulate").split(",") if m.strip())
    for m in modes:
        if m not in MODES:
            raise ConfigError(f"[experiment] mode: unknown mode {m!r}; expected some of {MODES}")
    needs_net = any(m in modes for m in ("simulate", "certify", "sync"))
    network = _network(cp, base_dir) if needs_net else None
    solver = None
    if any(m in modes for m in ("simulate", "sync")):
        if not cp.has_section("solver"):
            raise ConfigError("[solver] section missing")
        solver = _solver(cp["solver"])
        solver.lag_steps(network.mu)  # the neutral lag must land on the grid
    cmodes: tuple[str, ...] = ()
    if "certify" in modes:
        raw = cp["certify"].get("modes", "auto") if cp.has_section("certify") else "auto"
        cmodes = tuple(v.strip() for v in raw.split(",") if v.strip())
        if cmodes == ("auto",):
            bounded = all(a.bound is not None for a in network.activations)
            cmodes = ("bounded",) if bounded else ("unbounded",)
        for m in cmodes:
            if m not in ("bounded", "unbounded"):
                raise ConfigError(f"[certify] modes: unknown certificate {m!r}")
    gains = resp = None
    if "sync" in modes:
        if not cp.has_section("sync"):
            raise ConfigError("[sync] section missing")
        sec = cp["sync"]
        try:
            gains = FeedbackGains(_float(sec, "beta"), _float(sec, "beta_bar", sec.get("beta")))
        except DomainError as exc:
            raise ConfigError(f"[sync] {exc}") from exc
        resp = tuple(_floats(sec, "history.x", network.n1) + _floats(sec, "history.y", network.n2))
    hal = hal_cfg = None
    if "halanay" in modes:
        if not cp.has_section("halanay"):
            raise ConfigError("[halanay] section missing")
        hal, hal_cfg = _halanay(cp["halanay"], base_dir)
    out = cp["output"].get("dir", "out") if cp.has_section("output") else "out"
    snapshot = {s: dict(cp[s]) for s in cp.sections()}
    return ExperimentConfig(modes, network, solver, cmodes, gains, resp, hal, hal_cfg,
                            Path(out), snapshot, base_dir)


# }}}
