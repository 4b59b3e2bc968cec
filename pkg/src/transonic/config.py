"""INI-style run configuration.

A config file holds a ``[run]`` section (keys may also appear before any
section header) and an optional ``[domain]`` section::

    [run]
    gamma = 1.4
    q_inf_ratio = 0.5
    epsilon = 0.1
    h = 1/64

    [domain]
    kind = channel
    bump_height = 0.02

Keys of the domain may also be written as ``domain.kind`` inside ``[run]``.
Unknown keys are errors.
"""

import configparser
from dataclasses import dataclass, fields, replace
from fractions import Fraction

from .exceptions import ConfigError, ConstructionError
from .mesh import DomainSpec
from .solver import SolveConfig

_RUN_KEYS = {f.name: f.type for f in fields(SolveConfig)}
_DOMAIN_KEYS = {f.name: f.type for f in fields(DomainSpec)}
_EXTRA_KEYS = {"h", "epsilon_list", "delta"}


@dataclass(frozen=True)
class RunConfig:
    solve: SolveConfig
    domain: DomainSpec
    h: float
    epsilon_list: tuple = ()
    delta: float = 0.1

    def to_ini(self):
        """Normalized text form; equal configs give identical text."""
        lines = ["[run]"]
        for f in fields(SolveConfig):
            lines.append(f"{f.name} = {getattr(self.solve, f.name)!r}".replace("'", ""))
        lines.append(f"h = {self.h!r}")
        if self.epsilon_list:
            lines.append("epsilon_list = " + ", ".join(repr(e) for e in self.epsilon_list))
        lines.append(f"delta = {self.delta!r}")
        lines.append("")
        lines.append("[domain]")
        for f in fields(DomainSpec):
            val = getattr(self.domain, f.name)
            if isinstance(val, tuple):
                val = ", ".join(repr(v) for v in val)
            else:
                val = repr(val).replace("'", "")
            lines.append(f"{f.name} = {val}")
        return "\n".join(lines) + "\n"


def _number(text, key):
    try:
        return float(Fraction(text.strip()))
    except (ValueError, ZeroDivisionError):
        raise ConfigError(f"{key}: expected a number, got {text!r}") from None


def _convert(key, text, kind):
    if kind in (float, "float"):
        return _number(text, key)
    if kind in (int, "int"):
        val = _number(text, key)
        if val != int(val):
            raise ConfigError(f"{key}: expected an integer, got {text!r}")
        return int(val)
    if kind in (tuple, "tuple"):
        return tuple(_number(t, key) for t in text.split(","))
    return text.strip()


def parse_config(text):
    """Parse config text into a :class:`RunConfig`."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    parser.optionxform = str
    first = next((ln.strip() for ln in text.splitlines() if ln.strip() and ln.strip()[0] not in "#;"), "")
    body = text if first.startswith("[") else "[run]\n" + text
    try:
        parser.read_string(body)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    run, domain, extra = {}, {}, {}
    for section in parser.sections():
        if section not in ("run", "domain"):
            raise ConfigError(f"unknown section [{section}]")
        for key, text_value in parser.items(section):
            name = key
            target = section
            if section == "run" and key.startswith("domain."):
                name, target = key[len("domain."):], "domain"
            if target == "domain":
                if name not in _DOMAIN_KEYS:
                    raise ConfigError(f"unknown domain key {name!r}")
                domain[name] = _convert(name, text_value, _DOMAIN_KEYS[name])
            elif name in _RUN_KEYS:
                run[name] = _convert(name, text_value, _RUN_KEYS[name])
            elif name in _EXTRA_KEYS:
                extra[name] = text_value
            else:
                raise ConfigError(f"unknown key {name!r}")

    if "h" not in extra:
        raise ConfigError("missing key 'h' (grid spacing)")
    h = _number(extra["h"], "h")
    eps_list = tuple(_number(t, "epsilon_list") for t in extra["epsilon_list"].split(",")) if "epsilon_list" in extra else ()
    delta = _number(extra["delta"], "delta") if "delta" in extra else 0.1
    ratio = run.get("q_inf_ratio")
    if ratio is not None and ratio >= 1.0:
        raise ConfigError(f"q_inf_ratio = {ratio} is not subsonic: the far-field speed must satisfy q_inf < q_cr")
    if not h > 0:
        raise ConfigError("h must be positive")
    try:
        solve = SolveConfig(**run)
        spec = DomainSpec(**domain)
    except ConstructionError as exc:
        raise ConfigError(str(exc)) from None
    if eps_list and "epsilon" not in run:
        solve = replace(solve, epsilon=eps_list[0])
    return RunConfig(solve, spec, h, eps_list, delta)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


__all__ = ["RunConfig", "load_config", "parse_config"]
