"""Experiment configuration files.

One TOML file describes an experiment: the reproduction law, simulation
caps, the functional, replicate count, and either an explicit coverage
list (estimate) or a searched family plus target (optimize).  Unknown
keys are rejected so typos fail loudly before any simulation runs.
"""

import sys
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib as _toml
else:
    import tomli as _toml

from .errors import CmjvaxError, ConfigError
from .functionals import Functional, parse_functional
from .reproduction import ReproductionLaw, law_from_spec
from .tree import SimCaps
from .vaccination import VaccinationFunction, alpha_from_spec

_TOP_KEYS = {"n", "seed", "initials", "functional", "units", "quantiles",
             "law", "caps", "alphas", "family", "target", "output_dir"}
_FAMILY_KEYS = {"kind", "M", "p0", "resolution"}
_TARGET_KEYS = {"type", "p", "z", "bound"}
_UNITS = {"days", "weeks"}


@dataclass
class ExperimentConfig:
    law: ReproductionLaw
    caps: SimCaps
    n: int
    seed: Optional[int]
    initials: int
    functional: Optional[Functional]
    units: str
    quantiles: Tuple[float, ...]
    alphas: Optional[List[VaccinationFunction]]
    family: Optional[Dict]
    target: Optional[Dict]
    output_dir: Optional[str]

    def value_scale(self) -> float:
        """Multiplier taking functional values into reporting units."""
        if self.units == "weeks" and self.functional is not None \
                and self.functional.time_valued:
            return 1.0 / 7.0
        return 1.0


def _fail(msg: str) -> None:
    raise ConfigError(msg)


def parse_config_text(text: str) -> ExperimentConfig:
    try:
        raw = _toml.loads(text)
    except _toml.TOMLDecodeError as exc:
        _fail(f"config is not valid TOML: {exc}")
    return parse_config_dict(raw)


def parse_config_file(path) -> ExperimentConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config_text(fh.read())
    except FileNotFoundError:
        _fail(f"config file not found: {path}")


def parse_config_dict(raw: Dict) -> ExperimentConfig:
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        _fail(f"unknown config keys: {sorted(unknown)}")

    if "law" not in raw:
        _fail("config needs a [law] table")
    if "caps" not in raw:
        _fail("config needs a [caps] table")
    try:
        law = law_from_spec(raw["law"])
    except CmjvaxError as exc:
        _fail(f"bad law: {exc}")

    caps_raw = raw["caps"]
    extra = set(caps_raw) - {"horizon", "max_births"}
    if extra or set(caps_raw) != {"horizon", "max_births"}:
        _fail("caps table needs exactly horizon and max_births")
    try:
        caps = SimCaps(horizon=float(caps_raw["horizon"]),
                       max_births=int(caps_raw["max_births"]))
    except CmjvaxError as exc:
        _fail(f"bad caps: {exc}")

    n = raw.get("n")
    if not isinstance(n, int) or n < 1:
        _fail("config needs an integer replicate count n >= 1")

    seed = raw.get("seed")
    if seed is not None and not isinstance(seed, int):
        _fail("seed must be an integer")

    initials = raw.get("initials", 1)
    if not isinstance(initials, int) or initials < 1:
        _fail("initials must be an integer >= 1")

    functional = None
    if "functional" in raw:
        try:
            functional = parse_functional(raw["functional"])
        except CmjvaxError as exc:
            _fail(f"bad functional: {exc}")

    units = raw.get("units", "days")
    if units not in _UNITS:
        _fail(f"units must be one of {sorted(_UNITS)}")

    quantiles = raw.get("quantiles", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9])
    if (not isinstance(quantiles, list) or not quantiles
            or not all(isinstance(q, (int, float)) and 0 < q < 1 for q in quantiles)):
        _fail("quantiles must be a nonempty list of numbers in (0, 1)")

    alphas = None
    if "alphas" in raw:
        if not isinstance(raw["alphas"], list) or not raw["alphas"]:
            _fail("alphas must be a nonempty array of coverage tables")
        try:
            alphas = [alpha_from_spec(spec) for spec in raw["alphas"]]
        except CmjvaxError as exc:
            _fail(f"bad coverage function: {exc}")

    family = None
    if "family" in raw:
        fam = raw["family"]
        unknown = set(fam) - _FAMILY_KEYS
        if unknown:
            _fail(f"unknown family keys: {sorted(unknown)}")
        kind = fam.get("kind")
        if kind not in ("constant", "ramp"):
            _fail("family kind must be 'constant' or 'ramp'")
        if kind == "ramp" and ("p0" not in fam or not fam["p0"] > 0):
            _fail("ramp family needs a positive rate p0")
        family = {
            "kind": kind,
            "M": float(fam.get("M", 0.0)),
            "p0": float(fam["p0"]) if "p0" in fam else None,
            "resolution": float(fam.get("resolution", 0.01)),
        }

    target = None
    if "target" in raw:
        tgt = raw["target"]
        unknown = set(tgt) - _TARGET_KEYS
        if unknown:
            _fail(f"unknown target keys: {sorted(unknown)}")
        ttype = tgt.get("type")
        if ttype not in ("quantile", "mean"):
            _fail("target type must be 'quantile' or 'mean'")
        if "bound" not in tgt:
            _fail("target needs a bound")
        if ttype == "quantile" and not (0 < tgt.get("p", 0) < 1):
            _fail("quantile target needs p in (0, 1)")
        z = tgt.get("z", 1)
        if not isinstance(z, int) or z < 1:
            _fail("target z must be an integer >= 1")
        target = {
            "type": ttype,
            "p": float(tgt["p"]) if "p" in tgt else None,
            "z": z,
            "bound": float(tgt["bound"]),
        }

    if alphas is not None and family is not None:
        _fail("give either alphas or a family, not both")

    output_dir = raw.get("output_dir")
    if output_dir is not None and not isinstance(output_dir, str):
        _fail("output_dir must be a string")

    return ExperimentConfig(
        law=law, caps=caps, n=n, seed=seed, initials=initials,
        functional=functional, units=units,
        quantiles=tuple(float(q) for q in quantiles),
        alphas=alphas, family=family, target=target, output_dir=output_dir,
    )
