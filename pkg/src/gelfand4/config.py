"""Flat key-value run configuration.

The document grammar is a sequence of ``key = value`` assignments
separated by newlines or commas, with ``#`` comments and optional
``[section]`` headers that prefix the keys that follow (flat sections,
no nesting).  Values are quoted strings, integers, reals (including
``inf``), or bracketed real lists::

    command = "sweep"
    family = "singular_power", p = 2.0
    alphas = [0.8, 1.2, 2.0]

Syntax errors carry line/column; semantic errors name the offending key.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .errors import ConfigError

COMMANDS = ("tau", "bounds", "certify", "threshold", "solve", "sweep", "verify")

_NONLINEARITY_KEYS = ("family", "p", "f", "f1", "f2", "a_f", "name")


def _tokenize_statement(text, line_no, col0):
    """Split one statement into (key, raw_value) with positions."""
    eq = text.find("=")
    if eq < 0:
        raise ConfigError(f"expected 'key = value', got {text.strip()!r}",
                          line_no, col0 + 1)
    key = text[:eq].strip()
    if not key or not key.replace("_", "").isalnum():
        raise ConfigError(f"invalid key {key!r}", line_no, col0 + 1)
    raw = text[eq + 1:].strip()
    if not raw:
        raise ConfigError(f"missing value for key {key!r}", line_no, col0 + eq + 2)
    return key, raw


def _parse_value(raw, line_no, col):
    if raw.startswith('"'):
        if not (raw.endswith('"') and len(raw) >= 2):
            raise ConfigError("unterminated string", line_no, col)
        return raw[1:-1]
    if raw.startswith("["):
        if not raw.endswith("]"):
            raise ConfigError("unterminated list", line_no, col)
        body = raw[1:-1].strip()
        if not body:
            return []
        out = []
        for part in body.split(","):
            out.append(_parse_number(part.strip(), line_no, col))
        return out
    return _parse_number(raw, line_no, col)


def _parse_number(raw, line_no, col):
    low = raw.lower()
    if low in ("inf", "infinity", "+inf"):
        return math.inf
    try:
        if any(ch in raw for ch in ".eE") or low == "nan":
            return float(raw)
        return int(raw)
    except ValueError:
        raise ConfigError(f"not a number: {raw!r}", line_no, col) from None


def _split_statements(line):
    """Split a physical line on top-level commas (outside quotes/brackets)."""
    parts = []
    depth = 0
    in_str = False
    start = 0
    for i, ch in enumerate(line):
        if in_str:
            if ch == '"':
                in_str = False
        elif ch == '"':
            in_str = True
        elif ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        elif ch == "," and depth == 0:
            parts.append((start, line[start:i]))
            start = i + 1
    parts.append((start, line[start:]))
    return parts


def parse_config_text(text: str) -> dict:
    """Parse a config document into a flat mapping."""
    out = {}
    prefix = ""
    for line_no, line in enumerate(text.splitlines(), start=1):
        hash_pos = _comment_start(line)
        if hash_pos is not None:
            line = line[:hash_pos]
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("["):
            if not stripped.endswith("]"):
                raise ConfigError("unterminated section header", line_no,
                                  line.index("[") + 1)
            prefix = stripped[1:-1].strip()
            prefix = prefix + "." if prefix else ""
            continue
        for col0, stmt in _split_statements(line):
            if not stmt.strip():
                continue
            key, raw = _tokenize_statement(stmt, line_no, col0)
            value = _parse_value(raw, line_no, col0 + stmt.find("=") + 2)
            out[prefix + key] = value
    return out


def _comment_start(line):
    in_str = False
    for i, ch in enumerate(line):
        if ch == '"':
            in_str = not in_str
        elif ch == "#" and not in_str:
            return i
    return None


@dataclass
class RunConfig:
    """Validated options for one CLI run."""

    command: str
    nonlinearity: dict = field(default_factory=lambda: {"family": "exp"})
    n: int = 3
    M: int = 512
    lam: float = 1.0
    step: float = 0.05
    floor: float = 1e-4
    alphas: tuple = (1.2,)
    q_list: tuple = (1.0, 2.0)
    dim: int = 7
    kind: str = "singular"
    scan: str = "p"
    formula: str = "A"
    tau_lo: Optional[float] = None
    tau_hi: Optional[float] = None
    grid_step: float = 1e-3
    out: Path = Path("gelfand4_out")
    full: bool = False

    def as_dict(self):
        d = {}
        for f in fields(self):
            v = getattr(self, f.name)
            d[f.name] = str(v) if isinstance(v, Path) else v
        return d


_KEY_ALIASES = {"lambda": "lam", "q": "q_list"}

_CONFIG_KEYS = {
    "command", "n", "M", "lambda", "step", "floor", "alphas", "q",
    "dim", "kind", "scan", "formula", "tau_lo", "tau_hi", "grid_step",
    "out", "full", *_NONLINEARITY_KEYS,
}

# default certificate intervals per formula
_CERT_INTERVALS = {"A": (2.0 / 3.0, 1.0), "B": (1.0, 1.57863)}


def build_run_config(mapping: dict, check_out: bool = True) -> RunConfig:
    """Validate a flat mapping into a RunConfig with defaults filled.

    Unknown keys and out-of-range values raise :class:`ConfigError`
    naming the offending key.  The output directory is probed for
    writability here so failures precede any computation.
    """
    unknown = [k for k in mapping if k not in _CONFIG_KEYS]
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]!r}", key=unknown[0])
    command = mapping.get("command")
    if command is None:
        raise ConfigError("missing required key 'command'", key="command")
    if command not in COMMANDS:
        raise ConfigError(
            f"unknown command {command!r}; known: {', '.join(COMMANDS)}",
            key="command")

    cfg = RunConfig(command=command)
    nl_cfg = {k: mapping[k] for k in _NONLINEARITY_KEYS if k in mapping}
    if nl_cfg:
        cfg.nonlinearity = nl_cfg
    _check_family(cfg.nonlinearity)

    for key in ("n", "M", "dim"):
        if key in mapping:
            v = mapping[key]
            if not isinstance(v, int):
                raise ConfigError(f"{key} must be an integer, got {v!r}", key=key)
            setattr(cfg, key, v)
    for key in ("lambda", "step", "floor", "grid_step", "tau_lo", "tau_hi"):
        if key in mapping:
            v = mapping[key]
            if not isinstance(v, (int, float)):
                raise ConfigError(f"{key} must be a number, got {v!r}", key=key)
            setattr(cfg, _KEY_ALIASES.get(key, key), float(v))
    for key in ("alphas", "q"):
        if key in mapping:
            v = mapping[key]
            if not isinstance(v, list) or not v or \
                    not all(isinstance(x, (int, float)) for x in v):
                raise ConfigError(f"{key} must be a nonempty list of reals", key=key)
            setattr(cfg, _KEY_ALIASES.get(key, key), tuple(float(x) for x in v))
    for key in ("kind", "scan", "formula"):
        if key in mapping:
            setattr(cfg, key, str(mapping[key]))
    if "out" in mapping:
        cfg.out = Path(str(mapping["out"]))
    if "full" in mapping:
        cfg.full = bool(mapping["full"])

    _validate_semantics(cfg)
    if check_out:
        probe_output_dir(resolve_out_dir(cfg.out))
    return cfg


def _check_family(nl_cfg):
    family = nl_cfg.get("family", "exp")
    if family in ("power", "singular_power"):
        p = nl_cfg.get("p")
        if p is None:
            raise ConfigError(f"family {family!r} needs key 'p'", key="p")
        if p <= 1:
            raise ConfigError("p must exceed 1", key="p")
    elif family == "exp_pow":
        p = nl_cfg.get("p")
        if p is None or p <= 0:
            raise ConfigError("exp_pow needs p > 0", key="p")
    elif family == "custom":
        if "f" not in nl_cfg:
            raise ConfigError("custom family needs an 'f' expression", key="f")
    elif family not in ("exp", "t_log_t"):
        raise ConfigError(f"unknown family {family!r}", key="family")


def _validate_semantics(cfg):
    if cfg.M < 64:
        raise ConfigError("M too small: need M >= 64", key="M")
    if cfg.n < 1:
        raise ConfigError("n must be a positive integer", key="n")
    if cfg.lam < 0:
        raise ConfigError("lambda must be nonnegative", key="lambda")
    if not cfg.step > cfg.floor > 0:
        raise ConfigError("need step > floor > 0", key="step")
    if cfg.grid_step <= 0:
        raise ConfigError("grid_step must be positive", key="grid_step")
    if any(a <= 0.5 for a in cfg.alphas):
        raise ConfigError("every alpha must exceed 1/2", key="alphas")
    if any(q <= 0 for q in cfg.q_list):
        raise ConfigError("every q must be positive", key="q")
    if cfg.kind not in ("regular", "singular"):
        raise ConfigError("kind must be 'regular' or 'singular'", key="kind")
    if cfg.scan not in ("p", "tau"):
        raise ConfigError("scan must be 'p' or 'tau'", key="scan")
    if cfg.formula not in ("A", "B"):
        raise ConfigError("formula must be 'A' or 'B'", key="formula")
    if cfg.dim < 2:
        raise ConfigError("dim must be at least 2", key="dim")
    lo, hi = _CERT_INTERVALS[cfg.formula]
    if cfg.tau_lo is None:
        cfg.tau_lo = lo
    if cfg.tau_hi is None:
        cfg.tau_hi = hi
    if not (0 < cfg.tau_lo < cfg.tau_hi < 2):
        raise ConfigError("need 0 < tau_lo < tau_hi < 2", key="tau_lo")


def resolve_out_dir(out: Path) -> Path:
    """Output root comes from GELFAND4_OUT only; flags give the leaf dir."""
    root = os.environ.get("GELFAND4_OUT", "")
    return (Path(root) / out) if root and not out.is_absolute() else out


def probe_output_dir(path: Path):
    try:
        path.mkdir(parents=True, exist_ok=True)
        probe = path / ".write_probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {path} is not writable: {exc}",
                          key="out") from None
