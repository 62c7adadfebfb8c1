"""
Noise and input generators
==========================

Seeded generators for the measurement-noise regimes used in the experiments
and for the white Gaussian regressor stream.

All randomness flows through :class:`numpy.random.Generator` backed by PCG64,
a documented 64-bit generator. A Monte-Carlo run ``r`` uses seed
``base_seed + r`` (see :func:`make_rng`).
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .entropy import InvalidParameterError

__all__ = ["NoiseModel", "make_rng", "sample", "input_stream", "NOISE_KINDS"]

NOISE_KINDS = ("gaussian", "uniform", "mixed_gaussian", "bernoulli_rayleigh")


def make_rng(seed) -> np.random.Generator:
    """PCG64-backed generator for an integer seed."""
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class NoiseModel:
    """Additive noise description.

    ``kind`` selects the law; only the fields of that law are used.

    gaussian
        ``N(mean, variance)``.
    uniform
        Zero-mean uniform with the given ``variance``.
    mixed_gaussian
        ``(1 - outlier_prob) N(0, variance_small) + outlier_prob N(0, variance_large)``.
    bernoulli_rayleigh
        ``b (R - E[R])`` with ``b ~ Bernoulli(spike_prob)`` and
        ``R ~ Rayleigh(rayleigh_scale)``.
    """

    kind: str = "gaussian"
    mean: float = 0.0
    variance: float = 1.0
    outlier_prob: float = 0.05
    variance_small: float = 0.01
    variance_large: float = 100.0
    spike_prob: float = 0.3
    rayleigh_scale: float = 1.0

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise InvalidParameterError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        for name in ("variance", "variance_small", "variance_large", "rayleigh_scale"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise InvalidParameterError(f"{name} must be > 0, got {v}")
        for name in ("outlier_prob", "spike_prob"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise InvalidParameterError(f"{name} must be in [0, 1], got {p}")
        if not math.isfinite(self.mean):
            raise InvalidParameterError("mean must be finite")

    @classmethod
    def gaussian(cls, variance=1.0, mean=0.0):
        return cls("gaussian", mean=mean, variance=variance)

    @classmethod
    def uniform(cls, variance=1.0):
        return cls("uniform", variance=variance)

    @classmethod
    def mixed_gaussian(cls, outlier_prob=0.05, variance_small=0.01, variance_large=100.0):
        return cls("mixed_gaussian", outlier_prob=outlier_prob,
                   variance_small=variance_small, variance_large=variance_large)

    @classmethod
    def bernoulli_rayleigh(cls, spike_prob=0.3, rayleigh_scale=1.0):
        return cls("bernoulli_rayleigh", spike_prob=spike_prob, rayleigh_scale=rayleigh_scale)

    def params(self) -> dict:
        """The kind plus only the fields that kind uses."""
        keys = {
            "gaussian": ("mean", "variance"),
            "uniform": ("variance",),
            "mixed_gaussian": ("outlier_prob", "variance_small", "variance_large"),
            "bernoulli_rayleigh": ("spike_prob", "rayleigh_scale"),
        }[self.kind]
        full = asdict(self)
        return {"kind": self.kind, **{k: full[k] for k in keys}}

    @property
    def theoretical_variance(self) -> float:
        if self.kind in ("gaussian", "uniform"):
            return self.variance
        if self.kind == "mixed_gaussian":
            p = self.outlier_prob
            return (1 - p) * self.variance_small + p * self.variance_large
        return self.spike_prob * (4.0 - math.pi) / 2.0 * self.rayleigh_scale**2

    @property
    def is_symmetric(self) -> bool:
        return self.kind != "bernoulli_rayleigh"


def sample(model: NoiseModel, rng: np.random.Generator, size=None):
    """Draw noise samples (a float when ``size`` is None)."""
    k = model.kind
    if k == "gaussian":
        out = rng.normal(model.mean, math.sqrt(model.variance), size)
    elif k == "uniform":
        half = math.sqrt(3.0 * model.variance)
        out = rng.uniform(-half, half, size)
    elif k == "mixed_gaussian":
        outlier = rng.random(size) < model.outlier_prob
        z = rng.standard_normal(size)
        out = z * np.where(outlier, math.sqrt(model.variance_large), math.sqrt(model.variance_small))
    else:
        gate = rng.random(size) < model.spike_prob
        r = rng.rayleigh(model.rayleigh_scale, size)
        out = np.where(gate, r - model.rayleigh_scale * math.sqrt(math.pi / 2.0), 0.0)
    return float(out) if size is None else np.asarray(out, dtype=float)


def input_stream(n_taps: int, rng: np.random.Generator, length: int) -> np.ndarray:
    """``length`` i.i.d. standard-normal regressors, shape ``(length, n_taps)``."""
    if n_taps < 1:
        raise InvalidParameterError(f"n_taps must be >= 1, got {n_taps}")
    return rng.standard_normal((int(length), int(n_taps)))
