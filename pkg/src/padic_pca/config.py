"""Run configuration: defaults, the full-scale preset, INI files and env vars.

Precedence, lowest first: built-in defaults, preset, config file, the
``PADIC_PCA_SEED`` environment variable (seed only), command-line flags.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from fractions import Fraction

from .core import Params, ParamsError

SEED_ENV = "PADIC_PCA_SEED"


class ConfigError(ValueError):
    """Inconsistent or malformed run configuration."""


@dataclass(frozen=True)
class RunConfig:
    p: int = 3
    E: int = 3
    q: int = 1
    D: int = 10
    algorithm: str = "RPCA"
    d_minus: int = 4
    d_prime_minus: int | None = None
    t_io: int | float | None = None
    t_ls: int | float | None = None
    eps_ad: Fraction = Fraction(1, 5)
    generator: str = "balls"
    B: int = 10
    D_prime: int = 10
    rate_r: float = 1.0
    count: int = 100
    seed: int = 0
    workers: int | None = None
    coordinate_descent: bool = False
    line_search_random: int = 0
    report_formats: tuple[str, ...] = ("csv", "json", "txt")

    @property
    def params(self) -> Params:
        return Params(self.p, self.E, self.q, self.D)

    @property
    def title(self) -> str:
        shape = f"B = {self.B}" if self.generator == "balls" else f"D' = {self.D_prime}"
        rate = int(self.rate_r) if float(self.rate_r).is_integer() else self.rate_r
        return f"{self.algorithm} ({shape}, r = {rate})"

    def validate(self) -> "RunConfig":
        try:
            params = self.params
        except ParamsError as exc:
            raise ConfigError(str(exc)) from None
        if self.algorithm not in ("RPCA", "NRPCA"):
            raise ConfigError(f"algorithm must be RPCA or NRPCA, got {self.algorithm!r}")
        if not 0 <= self.d_minus <= params.D:
            raise ConfigError(f"d_minus must lie in [0, D={params.D}], got {self.d_minus}")
        if self.d_prime_minus is not None and not self.d_minus <= self.d_prime_minus <= params.D:
            raise ConfigError("d_prime_minus must lie in [d_minus, D]")
        for name in ("t_io", "t_ls"):
            t = getattr(self, name)
            if t is not None and t != math.inf and (int(t) != t or t < 1):
                raise ConfigError(f"{name} must be a positive integer or inf")
        if not 0 < self.eps_ad <= 1:
            raise ConfigError(f"eps_ad must lie in (0, 1], got {self.eps_ad}")
        if self.generator not in ("balls", "affine"):
            raise ConfigError(f"generator must be balls or affine, got {self.generator!r}")
        if self.E < 2:
            raise ConfigError("the generators need E >= 2 (balls of radius p**2)")
        if self.generator == "balls" and self.B < 1:
            raise ConfigError("B must be >= 1")
        if self.generator == "affine" and not 1 <= self.D_prime < self.D:
            raise ConfigError(f"D_prime must lie in [1, D), got {self.D_prime}")
        if not 0 <= self.rate_r < 100:
            raise ConfigError(f"rate_r must lie in [0, 100), got {self.rate_r}")
        if self.count < 1:
            raise ConfigError("count must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be >= 0")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.line_search_random < 0:
            raise ConfigError("line_search_random must be >= 0")
        for fmt in self.report_formats:
            if fmt not in ("csv", "json", "txt"):
                raise ConfigError(f"unknown report format {fmt!r}")
        return self

    def to_dict(self) -> dict:
        d = asdict(self)
        d["eps_ad"] = str(self.eps_ad)
        d["report_formats"] = list(self.report_formats)
        if d["t_io"] == math.inf:
            d["t_io"] = "inf"
        if d["t_ls"] == math.inf:
            d["t_ls"] = "inf"
        return d


PRESETS = {
    "paper": dict(p=7, D=100, E=5, q=1, count=10_000, d_minus=20, eps_ad=Fraction(1, 5)),
    "smoke": dict(p=3, D=10, E=3, q=1, count=100, d_minus=4),
}


# ---------------------------------------------------------------------------
# parsing
# ---------------------------------------------------------------------------


def _threshold(text: str) -> int | float | None:
    text = text.strip().lower()
    if text in ("", "none", "default"):
        return None
    if text in ("inf", "infinity"):
        return math.inf
    return int(text)


def _bool(text: str) -> bool:
    text = text.strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


_PARSERS = {
    "p": int,
    "E": int,
    "q": int,
    "D": int,
    "algorithm": lambda s: s.strip().upper(),
    "d_minus": int,
    "d_prime_minus": lambda s: None if s.strip().lower() in ("", "none") else int(s),
    "t_io": _threshold,
    "t_ls": _threshold,
    "eps_ad": lambda s: Fraction(s.strip()),
    "generator": lambda s: s.strip().lower(),
    "B": int,
    "D_prime": int,
    "rate_r": float,
    "count": int,
    "seed": int,
    "workers": lambda s: None if s.strip().lower() in ("", "none", "auto") else int(s),
    "coordinate_descent": _bool,
    "line_search_random": int,
    "report_formats": lambda s: tuple(x.strip() for x in s.split(",") if x.strip()),
}
FIELD_NAMES = tuple(f.name for f in fields(RunConfig))


def parse_field(name: str, raw) -> object:
    if name not in _PARSERS:
        raise ConfigError(f"unknown setting {name!r}")
    if not isinstance(raw, str):
        return raw
    try:
        return _PARSERS[name](raw)
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"bad value for {name}: {raw!r} ({exc})") from None


def load_ini(path) -> dict:
    """Settings from the ``[run]`` section of an INI file (keys as field names)."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except OSError:
        raise
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if not cp.has_section("run"):
        raise ConfigError(f"{path}: missing [run] section")
    keys = {k.replace("-", "_"): v for k, v in cp.items("run")}
    lookup = {k.lower(): k for k in FIELD_NAMES}
    out = {}
    for k, v in keys.items():
        name = k if k in FIELD_NAMES else lookup.get(k.lower())
        if name is None:
            raise ConfigError(f"{path}: unknown setting {k!r}")
        out[name] = parse_field(name, v)
    return out


def build_config(preset: str | None = None, ini=None, overrides: dict | None = None, env=None) -> RunConfig:
    """Merge defaults, preset, config file, seed env var and explicit overrides."""
    env = os.environ if env is None else env
    values: dict = {}
    if preset:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        values.update(PRESETS[preset])
    if ini is not None:
        values.update(load_ini(ini))
    if env.get(SEED_ENV):
        values["seed"] = parse_field("seed", env[SEED_ENV])
    for k, v in (overrides or {}).items():
        if v is not None:
            values[k] = parse_field(k, v)
    return replace(RunConfig(), **values).validate()


def substream(seed: int, index: int) -> list[int]:
    """Entropy for sub-stream ``index`` of an experiment seed.

    Stream 0 drives data generation, stream 1 the random line-search directions.
    """
    return [int(seed), int(index)]
