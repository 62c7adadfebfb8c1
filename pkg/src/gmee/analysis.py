"""
Theoretical predictors
======================

Stability step-size bounds, steady-state EMSE prediction and per-iteration
operation counts for the GMEE family.

The steady-state statistics of the window vectors ``P`` and ``Q`` are
estimated by Monte-Carlo over i.i.d. noise windows: once the filter has
converged the window errors reduce to the noise samples.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entropy import GGDKernel, InvalidParameterError
from .filters import quantize_batch
from .noise import NoiseModel, sample

__all__ = [
    "TheoryInputs",
    "SteadyStateVectors",
    "estimate_steady_pq",
    "estimate_lambda",
    "gmee_step_bound",
    "qgmee_step_bound",
    "conservative_eps_a",
    "joint_step_bound",
    "emse_theory",
    "complexity_counts",
    "OpCounter",
    "instrumented_update",
]


@dataclass(frozen=True)
class TheoryInputs:
    """Configuration of the filter whose behaviour is being predicted."""

    kernel: GGDKernel
    L: int
    M: int
    sigma_u2: float
    noise: NoiseModel
    eta: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if self.L < 2 or self.M < 1:
            raise InvalidParameterError("need L >= 2 and M >= 1")
        if not self.sigma_u2 > 0:
            raise InvalidParameterError(f"sigma_u2 must be > 0, got {self.sigma_u2}")
        if self.eta < 0 or self.gamma < 0:
            raise InvalidParameterError("eta and gamma must be nonnegative")

    @property
    def gain(self) -> float:
        """``alpha / (L**2 beta**alpha)``."""
        k = self.kernel
        return k.alpha / (self.L**2 * k.beta**k.alpha)


@dataclass(frozen=True)
class SteadyStateVectors:
    """Monte-Carlo estimates of the expected steady-state ``P`` and ``Q``.

    ``p_se`` and ``q_se`` are the standard errors of the entries.
    """

    p_tilde: np.ndarray
    q_tilde: np.ndarray
    sample_count: int
    p_se: np.ndarray
    q_se: np.ndarray

    @property
    def difference(self) -> np.ndarray:
        return self.p_tilde - self.q_tilde


def _noise_windows(noise, rng, n, L):
    return sample(noise, rng, (n, L))


def estimate_steady_pq(inputs: TheoryInputs, samples=100_000, rng=None, chunk=10_000) -> SteadyStateVectors:
    """Average ``P`` and ``Q`` over ``samples`` i.i.d. noise windows."""
    if samples < 1000:
        raise InvalidParameterError(f"need at least 1000 samples, got {samples}")
    rng = np.random.default_rng(0) if rng is None else rng
    L = inputs.L
    s1 = np.zeros((2, L))
    s2 = np.zeros((2, L))
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        v = _noise_windows(inputs.noise, rng, n, L)
        K = inputs.kernel.influence(v[:, :, None] - v[:, None, :])
        pq = np.stack([K.sum(axis=-1), K.sum(axis=-2)])
        s1 += pq.sum(axis=1)
        s2 += (pq * pq).sum(axis=1)
        done += n
    mean = s1 / samples
    var = np.maximum(s2 / samples - mean**2, 0.0)
    se = np.sqrt(var / samples)
    return SteadyStateVectors(mean[0], mean[1], samples, se[0], se[1])


def estimate_lambda(inputs: TheoryInputs, samples=100_000, rng=None, chunk=10_000):
    """Expected quantized vector ``E[Lambda]`` over i.i.d. noise windows.

    Each window is quantized with threshold ``inputs.gamma`` exactly as the
    filter does. Returns ``(mean, standard_error)``.
    """
    if samples < 1000:
        raise InvalidParameterError(f"need at least 1000 samples, got {samples}")
    rng = np.random.default_rng(0) if rng is None else rng
    L = inputs.L
    s1 = np.zeros(L)
    s2 = np.zeros(L)
    done = 0
    while done < samples:
        n = min(chunk, samples - done)
        v = _noise_windows(inputs.noise, rng, n, L)
        centers, counts = quantize_batch(v, inputs.gamma)
        lam = (counts[:, None, :] * inputs.kernel.influence(v[:, :, None] - centers[:, None, :])).sum(axis=-1)
        s1 += lam.sum(axis=0)
        s2 += (lam * lam).sum(axis=0)
        done += n
    mean = s1 / samples
    se = np.sqrt(np.maximum(s2 / samples - mean**2, 0.0) / samples)
    return mean, se


def _ratio_bound(inputs, eps_a, direction, degenerate_tol):
    eps_a = np.broadcast_to(np.asarray(eps_a, dtype=float), (inputs.L,))
    direction = np.asarray(direction, dtype=float)
    den = float(direction @ direction)
    if den <= degenerate_tol:
        return math.inf
    num = float(eps_a @ direction)
    k = inputs.kernel
    return 2.0 * inputs.L**2 * k.beta**k.alpha * num / (k.alpha * inputs.M * inputs.sigma_u2 * den)


def gmee_step_bound(inputs: TheoryInputs, eps_a_estimate, pq: SteadyStateVectors, degenerate_tol=0.0) -> float:
    """Largest stable GMEE step size from expected window statistics.

    ``2 L**2 beta**alpha E[eps_a].(p - q) / (alpha M sigma_u2 |p - q|**2)``.

    ``eps_a_estimate`` is the expected a priori error vector (length ``L``,
    a scalar broadcasts). Returns ``math.inf`` when ``|p - q|**2`` does not
    exceed ``degenerate_tol``: the bound is then unbounded, not a numeric
    failure.
    """
    return _ratio_bound(inputs, eps_a_estimate, pq.difference, degenerate_tol)


def qgmee_step_bound(inputs: TheoryInputs, eps_a_estimate, lambda_estimate, degenerate_tol=0.0) -> float:
    """QGMEE analogue of :func:`gmee_step_bound` with ``E[Lambda]`` in place of ``p - q``."""
    return _ratio_bound(inputs, eps_a_estimate, lambda_estimate, degenerate_tol)


def conservative_eps_a(inputs: TheoryInputs, direction) -> np.ndarray:
    """A priori error vector of magnitude one noise standard deviation per
    entry, aligned with ``direction`` (entrywise sign)."""
    sd = math.sqrt(inputs.noise.theoretical_variance)
    return sd * np.sign(np.asarray(direction, dtype=float))


def joint_step_bound(inputs: TheoryInputs, misalignment=1.0, samples=20_000, rng=None):
    """Step-size bound with the a priori error kept inside the expectation.

    Evaluates ``2 L**2 beta**alpha E[eps_a.(P - Q)] / (alpha M sigma_u2 E|P - Q|**2)``
    at a weight error of norm ``misalignment`` drawn isotropically, with
    regressors ``N(0, sigma_u2 I)`` and errors ``eps_a + noise``. This is
    the condition ``E|w~_{n+1}|**2 <= E|w~_n|**2`` before the expectation
    of the product is split.

    Returns ``(bound, numerator_mean, denominator_mean)``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    L, M = inputs.L, inputs.M
    wt = rng.standard_normal((samples, M))
    wt *= misalignment / np.linalg.norm(wt, axis=1, keepdims=True)
    U = rng.standard_normal((samples, L, M)) * math.sqrt(inputs.sigma_u2)
    eps_a = np.einsum("slm,sm->sl", U, wt)
    e = eps_a + _noise_windows(inputs.noise, rng, samples, L)
    K = inputs.kernel.influence(e[:, :, None] - e[:, None, :])
    diff = K.sum(axis=-1) - K.sum(axis=-2)
    num = float(np.mean(np.einsum("sl,sl->s", eps_a, diff)))
    den = float(np.mean(np.einsum("sl,sl->s", diff, diff)))
    if den <= 0.0:
        return math.inf, num, den
    k = inputs.kernel
    bound = 2.0 * L**2 * k.beta**k.alpha * num / (k.alpha * M * inputs.sigma_u2 * den)
    return bound, num, den


def emse_theory(inputs: TheoryInputs, pq: SteadyStateVectors) -> float:
    """Steady-state EMSE ``eta**2 alpha**2 M**2 sigma_u2**2 / (4 L**5 beta**(2 alpha)) |p - q|**2``."""
    k = inputs.kernel
    c = (inputs.eta**2 * k.alpha**2 * inputs.M**2 * inputs.sigma_u2**2
         / (4.0 * inputs.L**5 * k.beta ** (2.0 * k.alpha)))
    dpq = pq.difference
    return float(c * (dpq @ dpq))


def complexity_counts(algorithm: str, M: int, L: int = 0, H: int = 0):
    """Per-iteration ``(multiplications, additions, exponentiations)``.

    Closed forms of the operation-count table for LMS, LMF, GMCC, GMEE and
    QGMEE (``H`` is the codebook size).
    """
    tag = algorithm.lower()
    if M < 1:
        raise InvalidParameterError("M must be positive")
    if tag == "lms":
        return (2 * M + 1, 2 * M, 0)
    if tag == "lmf":
        return (2 * M + 1, 2 * M, 1)
    if tag == "gmcc":
        return (2 * M + 4, 2 * M + 1, 3)
    if tag == "gmee":
        if L < 1:
            raise InvalidParameterError("L must be positive")
        return (2 * M + M * L + 6 * L * L + 3, 2 * M + M * L + 8 * L * L, 6 * L * L + 2)
    if tag == "qgmee":
        if L < 1 or not 1 <= H <= L:
            raise InvalidParameterError("need L >= 1 and 1 <= H <= L")
        return (M + M * L + 4 * H * L + 3, M + M * L + 4 * H * L, 3 * H * L + 2)
    raise InvalidParameterError(f"unknown algorithm tag {algorithm!r}")


class OpCounter:
    """Counts arithmetic performed through :meth:`wrap`-ed numbers."""

    def __init__(self):
        self.mul = 0
        self.add = 0
        self.exp = 0

    def wrap(self, x):
        return _Counted(float(x), self)

    @property
    def counts(self):
        return (self.mul, self.add, self.exp)


class _Counted:
    __slots__ = ("v", "c")

    def __init__(self, v, c):
        self.v, self.c = v, c

    def _val(self, o):
        return o.v if isinstance(o, _Counted) else o

    def __add__(self, o):
        self.c.add += 1
        return _Counted(self.v + self._val(o), self.c)

    __radd__ = __add__

    def __sub__(self, o):
        self.c.add += 1
        return _Counted(self.v - self._val(o), self.c)

    def __rsub__(self, o):
        self.c.add += 1
        return _Counted(self._val(o) - self.v, self.c)

    def __mul__(self, o):
        self.c.mul += 1
        return _Counted(self.v * self._val(o), self.c)

    __rmul__ = __mul__

    def __truediv__(self, o):
        self.c.mul += 1
        return _Counted(self.v / self._val(o), self.c)

    def __pow__(self, o):
        self.c.exp += 1
        return _Counted(self.v ** self._val(o), self.c)

    def __neg__(self):
        return _Counted(-self.v, self.c)

    def __abs__(self):
        return _Counted(abs(self.v), self.c)

    def exp(self):
        self.c.exp += 1
        return _Counted(math.exp(self.v), self.c)

    def sign(self):
        return int(self.v > 0) - int(self.v < 0)


def _k_influence(x, kernel):
    # G(x) |x|**(alpha-1) sign(x); zero when x == 0
    s = x.sign()
    if s == 0:
        return None
    a = abs(x)
    g = (-((a / kernel.beta) ** kernel.alpha)).exp() * kernel.norm_const
    return g * a ** (kernel.alpha - 1.0) * s


def instrumented_update(algorithm, U, D, w, kernel: GGDKernel, eta, gamma=0.0):
    """Scalar reference GMEE/QGMEE weight update with operation counting.

    Runs the update with plain Python loops on counted numbers. Returns
    ``(new_weights, (multiplications, additions, exponentiations), H)``
    where ``H`` is the codebook size (``L`` for GMEE).
    """
    tag = algorithm.lower()
    U = np.asarray(U, dtype=float)
    L, M = U.shape
    c = OpCounter()
    wc = [c.wrap(x) for x in w]
    e = []
    for i in range(L):
        acc = c.wrap(D[i])
        for m in range(M):
            acc = acc - wc[m] * U[i, m]
        e.append(acc)
    gain = eta * kernel.alpha / (L * L * kernel.beta**kernel.alpha)
    if tag == "gmee":
        coef = []
        for i in range(L):
            p = q = None
            for j in range(L):
                kij = _k_influence(e[i] - e[j], kernel)
                kji = _k_influence(e[j] - e[i], kernel)
                if kij is not None:
                    p = kij if p is None else p + kij
                    q = kji if q is None else q + kji
            coef.append(None if p is None else (p - q) * gain)
        H = L
    elif tag == "qgmee":
        centers, counts = [], []
        for x in e:
            dists = [abs(x - ch) for ch in centers]
            if dists:
                h = min(range(len(dists)), key=lambda k: dists[k].v)
                if dists[h].v <= gamma:
                    counts[h] += 1
                    continue
            centers.append(x)
            counts.append(1)
        coef = []
        for i in range(L):
            a = None
            for ch, hh in zip(centers, counts):
                k = _k_influence(e[i] - ch, kernel)
                if k is not None:
                    term = k * hh if hh != 1 else k
                    a = term if a is None else a + term
            coef.append(None if a is None else a * (2.0 * gain))
        H = len(centers)
    else:
        raise InvalidParameterError(f"instrumented update supports gmee and qgmee, not {algorithm!r}")
    out = list(wc)
    for i in range(L):
        if coef[i] is None:
            continue
        for m in range(M):
            out[m] = out[m] + coef[i] * U[i, m]
    return np.array([x.v if isinstance(x, _Counted) else x for x in out]), c.counts, H
