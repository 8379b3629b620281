"""Scenario configuration: INI-style sections of ``key = expression`` lines.

Sections
--------
``[hilbert]``     cutoff, guard_band (required block).
``[parameters]``  solution class and time functions.
``[verify]`` ``[spectrum]`` ``[perturb]`` ``[pulse]`` ``[quench]``
``[periodic]`` ``[evolve]``  command settings.
``[output]``      dir, svg.

Unknown sections or keys are errors reported with their line numbers.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field

from ..operators import HilbertSpec
from ..trajectories import (
    ParameterSet,
    build_solution_I,
    build_solution_I_from_delta,
    build_solution_II,
    fig1_parameters,
)
from .expr import ExpressionError, parse_expression, parse_number


class ConfigError(ValueError):
    pass


SCHEMA = {
    "hilbert": {"cutoff": "64", "guard_band": "16"},
    "parameters": {
        "solution": "I",
        "omega_f": None,
        "omega_b": "1.0",
        "alpha": "0.0",
        "beta": None,
        "kappa": "0.0",
        "gamma": None,
        "gamma0": "0.0",
        "delta": None,
        "delta0": "0.0",
        "ell0": "1.0",
        "expert": "false",
    },
    "verify": {"t_start": "0.0", "t_stop": "10.0", "t_points": "20", "seed": "0", "n_max": "20"},
    "spectrum": {"t_start": "0.0", "t_stop": "10.0", "t_points": "201", "n_max": "8"},
    "perturb": {
        "t_start": "0.0",
        "t_stop": "10.0",
        "t_points": "201",
        "sectors": "0,1,2,3",
        "include_vacuum_level": "true",
    },
    "pulse": {
        "n": "0",
        "T": "12.0",
        "kappa0": "0.05",
        "A_b": "1.0",
        "alpha": "0.5",
        "delta_a": "0.1",
        "delta_b": "0.3",
        "t1": "2.0",
        "t2": "4.0",
        "t2_start": None,
        "t2_stop": None,
        "t2_points": "101",
        "k_max": "3",
        "tau_ramp": None,
        "integral": "false",
    },
    "quench": {
        "n": "0",
        "T": "10.0",
        "kappa0": "0.05",
        "A_b": "1.0",
        "alpha": "0.5",
        "delta": "0.2",
        "tau_ramp": None,
    },
    "periodic": {
        "n": "0",
        "kappa0": "0.05",
        "A_b": "1.0",
        "alpha": "0.5",
        "omega_drive": "1.0",
        "delta0": "0.2",
        "epsilon": "0.05",
        "nu": "1.0",
        "nu_start": None,
        "nu_stop": None,
        "nu_points": "101",
        "n_cycles": "10",
        "integral": "false",
    },
    "evolve": {
        "source": "pulse",
        "n": "0",
        "sigma": "+",
        "t_start": "0.0",
        "t_stop": "10.0",
        "t_points": "101",
        "sectors": "0,2",
        "method": "midpoint",
    },
    "output": {"dir": ".", "svg": "false"},
}

_SECTION_RE = re.compile(r"^\s*\[([^\]]+)\]\s*$")
_KEY_RE = re.compile(r"^\s*([^=:#;\s][^=:]*?)\s*[=:]")


def _line_map(text: str) -> dict:
    """``(section, key) -> line number`` (and ``(section, None)`` for headers)."""
    out = {}
    section = None
    for i, line in enumerate(text.splitlines(), start=1):
        m = _SECTION_RE.match(line)
        if m:
            section = m.group(1).strip()
            out.setdefault((section, None), i)
            continue
        if line.strip().startswith(("#", ";")) or line[:1].isspace():
            continue
        m = _KEY_RE.match(line)
        if m and section is not None:
            out.setdefault((section, m.group(1).strip()), i)
    return out


@dataclass
class ScenarioConfig:
    """Resolved configuration with every default filled in."""

    sections: dict
    source: str = "<string>"
    lines: dict = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.sections[section][key]

    def has(self, section: str, key: str) -> bool:
        return self.sections.get(section, {}).get(key) is not None

    def _where(self, section, key):
        ln = self.lines.get((section, key))
        return f"{self.source}:{ln}" if ln else self.source

    def number(self, section: str, key: str) -> float:
        raw = self.get(section, key)
        try:
            v = parse_number(raw)
        except ExpressionError as exc:
            raise ConfigError(f"{self._where(section, key)}: [{section}] {key}: {exc}") from None
        if v.imag != 0:
            raise ConfigError(f"{self._where(section, key)}: [{section}] {key} must be real")
        return v.real

    def complex_number(self, section: str, key: str) -> complex:
        try:
            return parse_number(self.get(section, key))
        except ExpressionError as exc:
            raise ConfigError(f"{self._where(section, key)}: [{section}] {key}: {exc}") from None

    def integer(self, section: str, key: str) -> int:
        v = self.number(section, key)
        if v != int(v):
            raise ConfigError(f"{self._where(section, key)}: [{section}] {key} must be an integer")
        return int(v)

    def boolean(self, section: str, key: str) -> bool:
        raw = str(self.get(section, key)).strip().lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{self._where(section, key)}: [{section}] {key} must be a boolean")

    def int_list(self, section: str, key: str) -> list[int]:
        raw = self.get(section, key)
        try:
            return [int(x) for x in raw.split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"{self._where(section, key)}: [{section}] {key} must be a comma-separated list") from None

    def expression(self, section: str, key: str):
        try:
            return parse_expression(self.get(section, key))
        except ExpressionError as exc:
            raise ConfigError(f"{self._where(section, key)}: [{section}] {key}: {exc}") from None

    def hilbert_spec(self) -> HilbertSpec:
        try:
            return HilbertSpec(self.integer("hilbert", "cutoff"), self.integer("hilbert", "guard_band"))
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"{self._where('hilbert', None)}: [hilbert] {exc}") from None

    def parameter_set(self) -> ParameterSet:
        return build_parameter_set(self)

    def render(self) -> str:
        """Canonical text of the resolved config (deterministic, for provenance headers)."""
        out = []
        for sec in SCHEMA:
            if sec not in self.sections:
                continue
            out.append(f"[{sec}]")
            for k in SCHEMA[sec]:
                v = self.sections[sec].get(k)
                if v is not None:
                    out.append(f"{k} = {v}")
        return "\n".join(out)

    def override(self, section: str, key: str, value) -> None:
        self.sections.setdefault(section, dict(SCHEMA[section]))[key] = str(value)


def parse_config(text: str, source: str = "<string>") -> ScenarioConfig:
    """Parse config text, validate keys and fill defaults.

    Raises
    ------
    ConfigError
        For syntax errors, unknown sections or keys, or a missing ``[hilbert]`` block.
    """
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    lines = _line_map(text)
    for sec in parser.sections():
        if sec not in SCHEMA:
            raise ConfigError(f"{source}:{lines.get((sec, None), '?')}: unknown section [{sec}]")
        for key in parser[sec]:
            if key not in SCHEMA[sec]:
                raise ConfigError(f"{source}:{lines.get((sec, key), '?')}: unknown key {key!r} in [{sec}]")
    if not parser.has_section("hilbert"):
        raise ConfigError(f"{source}: missing required [hilbert] block")
    sections = {}
    for sec, defaults in SCHEMA.items():
        vals = dict(defaults)
        if parser.has_section(sec):
            vals.update({k: v.strip() for k, v in parser[sec].items()})
        sections[sec] = vals
    return ScenarioConfig(sections, source, lines)


def load_config(path: str) -> ScenarioConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), source=path)


def build_parameter_set(cfg: ScenarioConfig) -> ParameterSet:
    sol = cfg.get("parameters", "solution").strip()
    expert = cfg.boolean("parameters", "expert")
    ell0 = cfg.number("parameters", "ell0")
    ex = lambda k: cfg.expression("parameters", k)
    try:
        if sol == "I":
            if cfg.has("parameters", "delta"):
                p = build_solution_I_from_delta(
                    ex("delta"), ex("omega_b"), ex("alpha"), cfg.complex_number("parameters", "gamma0"), ex("kappa")
                )
            else:
                omega_f = ex("omega_f") if cfg.has("parameters", "omega_f") else 0.0
                p = build_solution_I(
                    omega_f,
                    ex("omega_b"),
                    ex("alpha"),
                    cfg.complex_number("parameters", "gamma0"),
                    ex("kappa"),
                    cfg.number("parameters", "delta0"),
                )
        elif sol == "II":
            p = build_solution_II(
                ex("omega_f") if cfg.has("parameters", "omega_f") else 0.0,
                ex("omega_b"),
                ex("alpha"),
                cfg.complex_number("parameters", "delta0"),
                ex("kappa"),
                cfg.number("parameters", "gamma0"),
                expert=expert,
            )
        elif sol == "custom":
            missing = [k for k in ("omega_f", "beta", "gamma", "delta") if not cfg.has("parameters", k)]
            if missing:
                raise ConfigError(f"{cfg.source}: custom solution needs {', '.join(missing)} in [parameters]")
            p = ParameterSet(
                ex("omega_f"), ex("omega_b"), ex("alpha"), ex("beta"), ex("kappa"), ex("gamma"), ex("delta"),
                solution_class="custom", expert=expert,
            )
        else:
            raise ConfigError(f"{cfg._where('parameters', 'solution')}: solution must be I, II or custom")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{cfg.source}: [parameters] {exc}") from None
    if sol != "custom" and cfg.has("parameters", "beta"):
        p = p.with_(beta=ex("beta"), solution_class="custom")
    return p.with_(ell0=ell0, expert=expert)


FIG1_PRESET = """\
[hilbert]
cutoff = 64
guard_band = 16

[parameters]
solution = I
delta = 0.2 + 0.1*cos(4*t)
omega_b = 1.0
alpha = sin(2*t)
kappa = 0.3*sin(0.4*t)

[spectrum]
t_start = 0.0
t_stop = 10.0
t_points = 201
n_max = 8

[perturb]
t_start = 0.0
t_stop = 10.0
t_points = 201
sectors = 0,1,2,3,4,5,6,7,8
"""

PRESETS = {"fig1": FIG1_PRESET}


def preset_parameters(name: str) -> ParameterSet:
    if name == "fig1":
        return fig1_parameters()
    raise ConfigError(f"unknown preset {name!r}")
