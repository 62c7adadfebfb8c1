"""
Experiment configuration
========================

One experiment per file, written as a YAML mapping. Example::

    kind: emse
    seed: 0
    output_dir: out/v_a
    M: 10
    L: 10
    iterations: 100000
    runs: 20
    noise:
      kind: mixed_gaussian
      outlier_prob: 0.05
      variance_small: 0.01
      variance_large: 100.0
    algorithms:
      - {tag: gmee, eta: 0.06, alpha: 2.0, beta: 1.0}

Top-level keys
--------------
kind
    ``sysid``, ``emse``, ``sweep``, ``aec``, ``theory`` or ``complexity``.
seed, output_dir, M, L, iterations, runs
    Base seed, output directory, filter length, default window length,
    iterations per run and Monte-Carlo runs.
noise
    ``kind`` plus that law's parameters (see :class:`gmee.noise.NoiseModel`).
algorithms
    List of ``{tag, label?, <parameters>}``. Window algorithms (mee, gmee,
    qgmee) take ``eta``, ``alpha``, ``beta``, ``L`` (defaults to the top-level
    ``L``) and ``gamma``; lms/lmf take ``eta``; gmcc ``eta``, ``alpha_c``,
    ``lam``; rls ``rho``, ``delta``.
sweep
    ``param``, ``values`` and optional ``calibrate`` with ``target_db``,
    ``target_iteration`` and ``runs``.
emse
    ``tail_fraction``.
theory
    ``samples`` and ``misalignment`` (weight-error norm for the joint bound).
aec
    ``sessions``, ``length``, ``path_length``, ``decay_rate``, ``far_end_wav``,
    ``erle_window``, ``erle_hop``, ``erle_cap_db``.
complexity
    ``H`` (codebook size for QGMEE).
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field

import yaml

from .filters import ALGORITHMS
from .noise import NOISE_KINDS, NoiseModel

__all__ = ["ConfigError", "ExperimentConfig", "parse_config", "render_config", "KINDS"]

KINDS = ("sysid", "emse", "sweep", "aec", "theory", "complexity")


class ConfigError(ValueError):
    """All problems found in a configuration document."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


_NOISE_FIELDS = {
    "gaussian": {"mean": float, "variance": float},
    "uniform": {"variance": float},
    "mixed_gaussian": {"outlier_prob": float, "variance_small": float, "variance_large": float},
    "bernoulli_rayleigh": {"spike_prob": float, "rayleigh_scale": float},
}

_WINDOW_PARAMS = {"eta": float, "alpha": float, "beta": float, "L": int, "gamma": float}
_ALGO_PARAMS = {
    "lms": {"eta": float},
    "lmf": {"eta": float},
    "gmcc": {"eta": float, "alpha_c": float, "lam": float},
    "rls": {"rho": float, "delta": float},
    "mee": dict(_WINDOW_PARAMS),
    "gmee": dict(_WINDOW_PARAMS),
    "qgmee": dict(_WINDOW_PARAMS),
}
_ALGO_REQUIRED = {"lms": ("eta",), "lmf": ("eta",), "gmcc": ("eta",), "mee": ("eta",),
                  "gmee": ("eta",), "qgmee": ("eta",), "rls": ()}

_SECTIONS = {
    "sweep": {"param": str, "values": list, "calibrate": dict},
    "emse": {"tail_fraction": float},
    "theory": {"samples": int, "misalignment": float},
    "aec": {"sessions": int, "length": int, "path_length": int, "decay_rate": float,
            "far_end_wav": str, "erle_window": int, "erle_hop": int, "erle_cap_db": float},
    "complexity": {"H": int},
}
_CALIBRATE = {"target_db": float, "target_iteration": int, "runs": int}

_DEFAULTS = {
    "seed": 0,
    "output_dir": "out",
    "M": 10,
    "L": 10,
    "iterations": 4000,
    "runs": 20,
}
_SECTION_DEFAULTS = {
    "sweep": {},
    "emse": {"tail_fraction": 0.1},
    "theory": {"samples": 100_000, "misalignment": 1.0},
    "aec": {"sessions": 50, "length": 20000, "path_length": 64, "decay_rate": 0.1,
            "erle_window": 1024, "erle_hop": 512, "erle_cap_db": 80.0},
    "complexity": {"H": 3},
}


@dataclass
class ExperimentConfig:
    """Validated experiment description (see module docstring for the schema)."""

    kind: str
    seed: int = 0
    output_dir: str = "out"
    M: int = 10
    L: int = 10
    iterations: int = 4000
    runs: int = 20
    noise: dict = field(default_factory=lambda: {"kind": "gaussian", "mean": 0.0, "variance": 1.0})
    algorithms: list = field(default_factory=list)
    sweep: dict = field(default_factory=dict)
    emse: dict = field(default_factory=lambda: dict(_SECTION_DEFAULTS["emse"]))
    theory: dict = field(default_factory=lambda: dict(_SECTION_DEFAULTS["theory"]))
    aec: dict = field(default_factory=lambda: dict(_SECTION_DEFAULTS["aec"]))
    complexity: dict = field(default_factory=lambda: dict(_SECTION_DEFAULTS["complexity"]))

    def noise_model(self) -> NoiseModel:
        return NoiseModel(**self.noise)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "M": self.M,
            "L": self.L,
            "iterations": self.iterations,
            "runs": self.runs,
            "noise": copy.deepcopy(self.noise),
            "algorithms": copy.deepcopy(self.algorithms),
            "sweep": copy.deepcopy(self.sweep),
            "emse": dict(self.emse),
            "theory": dict(self.theory),
            "aec": dict(self.aec),
            "complexity": dict(self.complexity),
        }


def _coerce(value, typ, path, errors):
    if typ is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            errors.append(f"{path}: expected a number, got {value!r}")
            return None
        return float(value)
    if typ is int:
        if isinstance(value, bool) or not isinstance(value, int):
            errors.append(f"{path}: expected an integer, got {value!r}")
            return None
        return value
    if not isinstance(value, typ):
        errors.append(f"{path}: expected {typ.__name__}, got {value!r}")
        return None
    return value


def _check_range(path, value, errors, lo=None, hi=None, lo_open=False, hi_open=False):
    if value is None:
        return
    if lo is not None and (value <= lo if lo_open else value < lo):
        errors.append(f"{path}: must be {'>' if lo_open else '>='} {lo}, got {value}")
    if hi is not None and (value >= hi if hi_open else value > hi):
        errors.append(f"{path}: must be {'<' if hi_open else '<='} {hi}, got {value}")


def _mapping(obj, path, schema, errors):
    out = {}
    if not isinstance(obj, dict):
        errors.append(f"{path}: expected a mapping")
        return out
    for key, value in obj.items():
        if key not in schema:
            errors.append(f"{path}.{key}: unknown key")
            continue
        v = _coerce(value, schema[key], f"{path}.{key}", errors)
        if v is not None:
            out[key] = v
    return out


def _validate_noise(obj, errors):
    if not isinstance(obj, dict):
        errors.append("noise: expected a mapping")
        return {"kind": "gaussian"}
    kind = obj.get("kind")
    if kind not in NOISE_KINDS:
        errors.append(f"noise.kind: expected one of {list(NOISE_KINDS)}, got {kind!r}")
        return {"kind": "gaussian"}
    body = {k: v for k, v in obj.items() if k != "kind"}
    vals = _mapping(body, "noise", _NOISE_FIELDS[kind], errors)
    defaults = NoiseModel(kind).params()
    out = {**defaults, **vals}
    for k in ("variance", "variance_small", "variance_large", "rayleigh_scale"):
        if k in out:
            _check_range(f"noise.{k}", out[k], errors, lo=0, lo_open=True)
    for k in ("outlier_prob", "spike_prob"):
        if k in out:
            _check_range(f"noise.{k}", out[k], errors, lo=0, hi=1)
    return out


def _validate_algorithm(obj, i, default_L, errors):
    path = f"algorithms[{i}]"
    if not isinstance(obj, dict):
        errors.append(f"{path}: expected a mapping")
        return None
    tag = obj.get("tag")
    if tag not in ALGORITHMS:
        errors.append(f"{path}.tag: expected one of {sorted(ALGORITHMS)}, got {tag!r}")
        return None
    label = obj.get("label")
    if label is not None and not isinstance(label, str):
        errors.append(f"{path}.label: expected a string")
        label = None
    body = {k: v for k, v in obj.items() if k not in ("tag", "label")}
    params = _mapping(body, path, _ALGO_PARAMS[tag], errors)
    for req in _ALGO_REQUIRED[tag]:
        if req not in body:
            errors.append(f"{path}.{req}: required")
    if "eta" in params:
        _check_range(f"{path}.eta", params["eta"], errors, lo=0, lo_open=True)
    if tag in ("mee", "gmee", "qgmee"):
        params.setdefault("alpha", 2.0)
        params.setdefault("beta", 1.0)
        params.setdefault("L", default_L)
        if tag == "qgmee":
            params.setdefault("gamma", 0.0)
        _check_range(f"{path}.alpha", params.get("alpha"), errors, lo=1)
        _check_range(f"{path}.beta", params.get("beta"), errors, lo=0, lo_open=True)
        _check_range(f"{path}.L", params.get("L"), errors, lo=2)
        _check_range(f"{path}.gamma", params.get("gamma"), errors, lo=0)
        if tag == "mee" and params.get("alpha") != 2.0:
            errors.append(f"{path}.alpha: mee requires alpha = 2")
    if tag == "gmcc":
        _check_range(f"{path}.alpha_c", params.get("alpha_c"), errors, lo=0, lo_open=True)
        _check_range(f"{path}.lam", params.get("lam"), errors, lo=0, lo_open=True)
    if tag == "rls":
        _check_range(f"{path}.rho", params.get("rho"), errors, lo=0, hi=1, lo_open=True)
        _check_range(f"{path}.delta", params.get("delta"), errors, lo=0, lo_open=True)
    out = {"tag": tag}
    if label is not None:
        out["label"] = label
    out.update(params)
    return out


def _validate(doc) -> ExperimentConfig:
    errors = []
    if not isinstance(doc, dict):
        raise ConfigError(["<root>: expected a mapping"])
    known = {"kind", "noise", "algorithms", *_DEFAULTS, *_SECTIONS}
    for key in doc:
        if key not in known:
            errors.append(f"{key}: unknown key")
    kind = doc.get("kind")
    if kind not in KINDS:
        errors.append(f"kind: expected one of {list(KINDS)}, got {kind!r}")
    top = {}
    for key, default in _DEFAULTS.items():
        typ = str if key == "output_dir" else int
        v = _coerce(doc[key], typ, key, errors) if key in doc else default
        top[key] = default if v is None else v
    _check_range("M", top["M"], errors, lo=1)
    _check_range("L", top["L"], errors, lo=2)
    _check_range("iterations", top["iterations"], errors, lo=1)
    _check_range("runs", top["runs"], errors, lo=1)
    noise = _validate_noise(doc.get("noise", {"kind": "gaussian"}), errors)
    algos_doc = doc.get("algorithms", [])
    algorithms = []
    if not isinstance(algos_doc, list):
        errors.append("algorithms: expected a list")
    else:
        for i, a in enumerate(algos_doc):
            v = _validate_algorithm(a, i, top["L"], errors)
            if v is not None:
                algorithms.append(v)
        names = [a.get("label", a["tag"]) for a in algorithms]
        dup = sorted({n for n in names if names.count(n) > 1})
        if dup:
            errors.append(f"algorithms: duplicate names {dup}; add distinct labels")
    if kind in ("sysid", "emse", "sweep", "aec") and not algos_doc:
        errors.append("algorithms: at least one algorithm is required")
    sections = {}
    for name, schema in _SECTIONS.items():
        vals = _mapping(doc.get(name, {}), name, schema, errors)
        sections[name] = {**_SECTION_DEFAULTS[name], **vals}
    sw = sections["sweep"]
    if "calibrate" in sw:
        sw["calibrate"] = _mapping(sw["calibrate"], "sweep.calibrate", _CALIBRATE, errors)
    if kind == "sweep":
        if "param" not in sw:
            errors.append("sweep.param: required")
        elif sw["param"] not in ("alpha", "beta", "gamma", "L", "eta"):
            errors.append(f"sweep.param: expected alpha, beta, gamma, L or eta, got {sw['param']!r}")
        if not sw.get("values"):
            errors.append("sweep.values: required and nonempty")
        else:
            for j, v in enumerate(sw["values"]):
                if isinstance(v, bool) or not isinstance(v, (int, float)):
                    errors.append(f"sweep.values[{j}]: expected a number, got {v!r}")
    _check_range("emse.tail_fraction", sections["emse"]["tail_fraction"], errors, lo=0, hi=1, lo_open=True)
    _check_range("theory.samples", sections["theory"]["samples"], errors, lo=1000)
    _check_range("theory.misalignment", sections["theory"]["misalignment"], errors, lo=0, lo_open=True)
    aec = sections["aec"]
    for k in ("sessions", "length", "path_length", "erle_window", "erle_hop"):
        _check_range(f"aec.{k}", aec[k], errors, lo=1)
    _check_range("aec.decay_rate", aec["decay_rate"], errors, lo=0, hi=1, lo_open=True)
    _check_range("complexity.H", sections["complexity"]["H"], errors, lo=1, hi=top["L"])
    if errors:
        raise ConfigError(errors)
    return ExperimentConfig(kind=kind, noise=noise, algorithms=algorithms, **top, **sections)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate a configuration document.

    Raises
    ------
    ConfigError
        With every problem found: syntax errors carry a line number, semantic
        errors a field path such as ``algorithms[0].eta``.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}" if mark is not None else "unknown line"
        problem = getattr(exc, "problem", None) or str(exc)
        raise ConfigError([f"syntax error at {where}: {problem}"]) from None
    return _validate(doc)


def render_config(config: ExperimentConfig) -> str:
    """Serialize a config; ``parse_config(render_config(c)) == c``."""
    return yaml.safe_dump(config.to_dict(), sort_keys=False, default_flow_style=None)
