"""Run configuration: JSON documents validated against the shipped schema."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass
from importlib import resources

import jsonschema

from .eigensolve import SolveConfig
from .errors import UsageError
from .ordering import SweepConfig
from .potentials import PotentialSpec
from .sector_operator import DEFAULT_MAX_DIMENSION, FieldConfig

DEFAULTS = {
    "m_max": 10,
    "m": None,
    "levels": 1,
    "resolution": 2,
    "z_max": None,
    "z_boundary": "neumann",
    "max_dimension": DEFAULT_MAX_DIMENSION,
    "solver": {"tol": 1e-8, "max_iterations": None, "seed": 42, "transform": "shift_invert",
               "use_symmetry": True},
    "verify": {"tolerance": None, "richardson": True, "domain_check": False,
               "tangential_detail": False},
    "band": {"n_alpha": 16, "alphas": None},
    "convergence": {"resolutions": [1, 2, 3], "m": [0]},
}


class ConfigError(UsageError):
    """Invalid configuration; ``path`` points at the offending element."""

    def __init__(self, message, path=""):
        super().__init__(f"{path or '<root>'}: {message}")
        self.path = path


def schema(name="run_config"):
    text = resources.files("landau_order").joinpath(f"schemas/{name}.schema.json").read_text()
    return json.loads(text)


def _merge(defaults, doc):
    out = copy.deepcopy(defaults)
    for k, v in doc.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


@dataclass(frozen=True)
class RunConfig:
    doc: dict

    @property
    def spec(self):
        return PotentialSpec.from_dict(self.doc["potential"])

    @property
    def field(self):
        return FieldConfig(float(self.doc["field"]["B"]))

    @property
    def m_range(self):
        m = self.doc["m"]
        return [m] if m is not None else list(range(self.doc["m_max"] + 1))

    @property
    def levels(self):
        return self.doc["levels"]

    @property
    def solve(self):
        s = self.doc["solver"]
        return SolveConfig(k=self.levels, tol=s["tol"], max_iterations=s["max_iterations"],
                           seed=s["seed"], transform=s["transform"],
                           use_symmetry=s["use_symmetry"])

    def sweep(self, threads=1, richardson=None, resolution=None, domain_check=None):
        v = self.doc["verify"]
        return SweepConfig(
            resolution=self.doc["resolution"] if resolution is None else resolution,
            solve=self.solve,
            z_max=self.doc["z_max"],
            z_boundary=self.doc["z_boundary"],
            richardson=v["richardson"] if richardson is None else richardson,
            domain_check=v["domain_check"] if domain_check is None else domain_check,
            threads=threads,
            max_dimension=self.doc["max_dimension"],
        )

    @property
    def digest(self):
        return hashlib.sha256(canonical_json(self.doc).encode()).hexdigest()[:16]


def canonical_json(doc):
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def validate(doc):
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(doc), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        path = "/".join(str(p) for p in e.absolute_path)
        raise ConfigError(e.message, path)


def from_dict(doc):
    """Validate, fill defaults and build the potential once to surface errors early.

    A previous ``run.json`` is accepted as well: its ``config`` member is used.
    """
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object")
    if "config" in doc and "potential" not in doc:
        doc = doc["config"]
    validate(doc)
    full = _merge(DEFAULTS, doc)
    cfg = RunConfig(full)
    try:
        cfg.spec
        cfg.solve
    except ValueError as exc:
        raise ConfigError(str(exc), "potential") from exc
    return cfg


def load(path):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    return from_dict(doc)
