"""
Monte-Carlo system identification
=================================

Drives a set of adaptive filters over shared seeded input/noise streams and
reports mean-square deviation (MSD) and excess mean-square error (EMSE).

Runs are executed together as a batch axis of every filter, so each run of
each algorithm sees exactly the streams produced by its own seed. Run ``r``
draws its regressors and noise from two PCG64 generators spawned from
``SeedSequence(base_seed + r)``.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .entropy import InvalidParameterError
from .filters import make_filter
from .noise import NoiseModel, sample

__all__ = [
    "AlgorithmSpec",
    "SysIdExperiment",
    "MetricTrace",
    "run_streams",
    "run_sysid",
    "measure_emse",
    "sweep",
    "calibrate_eta",
    "bisect_step_size",
    "iterations_to",
    "default_system",
    "to_db",
]

CHUNK = 2048


def to_db(x):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


@dataclass(frozen=True)
class AlgorithmSpec:
    """An algorithm tag with its parameters and an optional display label."""

    tag: str
    params: dict = field(default_factory=dict)
    label: str | None = None

    @property
    def name(self) -> str:
        return self.label or self.tag


@dataclass(frozen=True)
class SysIdExperiment:
    """A system-identification Monte-Carlo experiment.

    ``w_s = None`` draws a unit-norm system from ``base_seed``.
    ``divergence_threshold`` marks a run divergent once its MSD exceeds
    that multiple of ``||w_s||**2`` (or turns non-finite).
    """

    noise: NoiseModel
    algorithms: tuple
    n_taps: int = 10
    iterations: int = 4000
    runs: int = 20
    base_seed: int = 0
    w_s: tuple | None = None
    steady_fraction: float = 0.1
    divergence_threshold: float = 1e6

    def __post_init__(self):
        if self.iterations < 1 or self.runs < 1:
            raise InvalidParameterError("iterations and runs must be >= 1")
        if not 0 < self.steady_fraction <= 1:
            raise InvalidParameterError("steady_fraction must be in (0, 1]")
        if not self.algorithms:
            raise InvalidParameterError("at least one algorithm is required")
        if self.w_s is not None and len(self.w_s) != self.n_taps:
            raise InvalidParameterError(f"w_s has length {len(self.w_s)}, expected {self.n_taps}")
        object.__setattr__(self, "algorithms", tuple(self.algorithms))

    def system(self) -> np.ndarray:
        if self.w_s is not None:
            return np.asarray(self.w_s, dtype=float)
        return default_system(self.n_taps, self.base_seed)

    def fingerprint(self) -> str:
        payload = {
            "noise": self.noise.params(),
            "algorithms": [[a.tag, a.params, a.label] for a in self.algorithms],
            "n_taps": self.n_taps,
            "iterations": self.iterations,
            "runs": self.runs,
            "base_seed": self.base_seed,
            "w_s": None if self.w_s is None else list(self.w_s),
            "steady_fraction": self.steady_fraction,
        }
        blob = json.dumps(payload, sort_keys=True, default=float).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def default_system(n_taps, seed) -> np.ndarray:
    """Seeded unit-norm system vector."""
    rng = np.random.Generator(np.random.PCG64([int(seed), 0x5EED]))
    w = rng.standard_normal(n_taps)
    return w / np.linalg.norm(w)


@dataclass
class MetricTrace:
    """Run-averaged learning curve for one algorithm.

    Attributes
    ----------
    msd_db : ndarray
        MSD per iteration in dB, measured with the weights used to filter that
        sample (so ``msd_db[0]`` is the initial deviation).
    steady_msd_db : float
        dB of the mean MSD over the steady-state tail.
    emse : float
        Mean squared a priori error ``(w_tilde.T u)**2`` over the tail.
    runs : int
        Runs kept in the average.
    diverged : int
        Runs excluded because they diverged.
    """

    name: str
    msd_db: np.ndarray
    steady_msd_db: float
    emse: float
    runs: int
    diverged: int
    fingerprint: str = ""
    params: dict = field(default_factory=dict)

    @property
    def emse_db(self) -> float:
        return float(to_db(self.emse))


def _run_generators(base_seed, runs):
    gens = []
    for r in range(runs):
        ss = np.random.SeedSequence(int(base_seed) + r)
        cu, cv = ss.spawn(2)
        gens.append((np.random.Generator(np.random.PCG64(cu)), np.random.Generator(np.random.PCG64(cv))))
    return gens


def run_streams(filters, gens, n_taps, noise, w_s, iterations, tail_start, on_chunk=None):
    """Drive ``filters`` (all with batch shape ``(runs,)``) over seeded streams.

    Returns per-filter arrays ``msd`` of shape ``(runs, iterations)`` and
    tail sums of the squared a priori error, shape ``(runs,)``.
    """
    runs = len(gens)
    msd = [np.empty((runs, iterations)) for _ in filters]
    ea2 = [np.zeros(runs) for _ in filters]
    with np.errstate(all="ignore"):
        for start in range(0, iterations, CHUNK):
            stop = min(start + CHUNK, iterations)
            n = stop - start
            U = np.stack([g[0].standard_normal((n, n_taps)) for g in gens])
            V = np.stack([sample(noise, g[1], n) for g in gens])
            D = U @ w_s + V
            if on_chunk is not None:
                on_chunk(U, V)
            for k in range(n):
                t = start + k
                u, d = U[:, k], D[:, k]
                for f, m, a in zip(filters, msd, ea2):
                    wt = w_s - f.w
                    m[:, t] = np.einsum("rm,rm->r", wt, wt)
                    if t >= tail_start:
                        a += np.einsum("rm,rm->r", wt, u) ** 2
                    f.step(u, d)
    return msd, ea2


def _summarize(name, msd, ea2, exp, tail_start, w_norm2, params):
    finite = np.all(np.isfinite(msd), axis=1)
    bad = ~finite | np.any(msd > exp.divergence_threshold * w_norm2, axis=1)
    keep = ~bad
    tail = exp.iterations - tail_start
    if keep.any():
        mean_msd = msd[keep].mean(axis=0)
        steady = float(to_db(mean_msd[tail_start:].mean()))
        emse = float(ea2[keep].mean() / tail)
    else:
        # every run diverged: the average deviation is unbounded
        mean_msd = np.full(exp.iterations, np.inf)
        steady, emse = math.inf, math.inf
    return MetricTrace(name, to_db(mean_msd), steady, emse, int(keep.sum()), int(bad.sum()),
                       exp.fingerprint(), dict(params))


def run_sysid(exp: SysIdExperiment, on_chunk=None) -> dict:
    """Run every algorithm of ``exp`` over the same streams.

    Returns a mapping from algorithm name to :class:`MetricTrace`. Divergent
    runs are excluded from the averages and counted in ``diverged``.
    """
    w_s = exp.system()
    filters = [make_filter(a.tag, exp.n_taps, batch_shape=(exp.runs,), **a.params) for a in exp.algorithms]
    tail_start = exp.iterations - max(1, int(round(exp.steady_fraction * exp.iterations)))
    gens = _run_generators(exp.base_seed, exp.runs)
    msd, ea2 = run_streams(filters, gens, exp.n_taps, exp.noise, w_s, exp.iterations, tail_start, on_chunk)
    w_norm2 = float(w_s @ w_s)
    out = {}
    for a, m, e in zip(exp.algorithms, msd, ea2):
        if a.name in out:
            raise InvalidParameterError(f"duplicate algorithm name {a.name!r}; set distinct labels")
        out[a.name] = _summarize(a.name, m, e, exp, tail_start, w_norm2, a.params)
    return out


def measure_emse(exp: SysIdExperiment, tail_fraction=0.1) -> dict:
    """Steady-state EMSE per algorithm over the final ``tail_fraction`` of iterations."""
    traces = run_sysid(replace(exp, steady_fraction=tail_fraction))
    return {k: t.emse for k, t in traces.items()}


def iterations_to(msd_db, target_db) -> int | None:
    """First iteration at which a learning curve reaches ``target_db``."""
    hit = np.flatnonzero(np.asarray(msd_db) <= target_db)
    return int(hit[0]) if hit.size else None


def bisect_step_size(probe, eta_range=(1e-4, 1e6), per_decade=3, rtol=0.01):
    """Smallest step size for which ``probe(eta)`` is true, in log-space.

    ``probe`` must be false for small step sizes and switch to true at some
    threshold. A log grid with ``per_decade`` points brackets the switch,
    then bisection narrows the bracket to relative width ``rtol``. Returns
    ``None`` when the probe never turns true on the grid.
    """
    lo_x, hi_x = math.log(eta_range[0]), math.log(eta_range[1])
    n = max(2, int(round((hi_x - lo_x) / math.log(10.0) * per_decade)) + 1)
    grid = np.linspace(lo_x, hi_x, n)
    first = next((k for k, x in enumerate(grid) if probe(math.exp(x))), None)
    if first is None:
        return None
    if first == 0:
        return math.exp(grid[0])
    lo, hi = grid[first - 1], grid[first]
    while hi - lo > rtol:
        mid = 0.5 * (lo + hi)
        if probe(math.exp(mid)):
            hi = mid
        else:
            lo = mid
    return math.exp(hi)


def calibrate_eta(spec: AlgorithmSpec, noise: NoiseModel, n_taps=10, target_db=-10.0,
                  target_iteration=500, runs=10, base_seed=0, w_s=None,
                  eta_range=(1e-4, 1e6), per_decade=3, rtol=0.01):
    """Step size at which the run-averaged MSD first reaches ``target_db``
    at ``target_iteration``.

    A step size counts as fast enough when its learning curve reaches the
    target in time or when any run diverges; :func:`bisect_step_size` finds
    the smallest such step size.

    Returns
    -------
    eta : float
    reached : bool
        False when the bracketing step size diverged instead of meeting the
        target, or when nothing in ``eta_range`` was fast enough.
    """

    def outcome(eta):
        exp = SysIdExperiment(noise, (AlgorithmSpec(spec.tag, {**spec.params, "eta": eta}),),
                              n_taps=n_taps, iterations=target_iteration + 1, runs=runs,
                              base_seed=base_seed, w_s=w_s)
        tr = next(iter(run_sysid(exp).values()))
        if tr.diverged:
            return True, False
        ok = iterations_to(tr.msd_db, target_db) is not None
        return ok, ok

    eta = bisect_step_size(lambda e: outcome(e)[0], eta_range, per_decade, rtol)
    if eta is None:
        return eta_range[1], False
    return eta, outcome(eta)[1]


def sweep(exp: SysIdExperiment, param: str, values, calibrate=None) -> list:
    """Steady-state MSD of the first algorithm of ``exp`` over a parameter grid.

    Parameters
    ----------
    param : str
        Algorithm parameter to vary (``alpha``, ``beta``, ``gamma``, ``L`` ...).
    calibrate : dict, optional
        Keyword arguments for :func:`calibrate_eta`; when given, the step
        size is recalibrated at every grid point to match convergence speed.

    Returns
    -------
    list of dict
        Rows with keys ``param_value``, ``noise``, ``algorithm``,
        ``steady_msd_db``, ``divergence_count`` and ``eta``.
    """
    values = list(values)
    if not values:
        raise InvalidParameterError("sweep grid must be nonempty")
    base = exp.algorithms[0]
    rows = []
    for v in values:
        params = {**base.params, param: v}
        if calibrate is not None:
            params["eta"], _ = calibrate_eta(AlgorithmSpec(base.tag, params), exp.noise,
                                             n_taps=exp.n_taps, w_s=exp.w_s, **calibrate)
        spec = AlgorithmSpec(base.tag, params, base.label)
        tr = next(iter(run_sysid(replace(exp, algorithms=(spec,))).values()))
        rows.append({
            "param_value": v,
            "noise": exp.noise.kind,
            "algorithm": spec.name,
            "steady_msd_db": tr.steady_msd_db,
            "divergence_count": tr.diverged,
            "eta": params["eta"],
        })
    return rows
