"""
Adaptive filters
================

Step-wise adaptive filters sharing one contract: ``e = f.step(u, d)`` computes
the a priori error ``d - w.T u`` with the current weights, updates the weights
and returns the error.

Every filter can carry a leading batch shape, which lets a Monte-Carlo harness
drive many independent runs through the same code path. With the default
``batch_shape=()`` the weights are a plain ``(M,)`` vector.

Window-based filters (MEE, GMEE, QGMEE) keep the ``L`` most recent
``(u, d)`` pairs and recompute the window errors under the current weights at
every step. Before the window is full they update on the partial window (two
samples at least) with ``L`` replaced by the current window size.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .entropy import GGDKernel, InvalidParameterError, gaussian_kernel

__all__ = [
    "DimensionError",
    "InsufficientWindowError",
    "SampleWindow",
    "GmeeConfig",
    "AdaptiveFilter",
    "LMS",
    "LMF",
    "GMCC",
    "RLS",
    "MEE",
    "GMEE",
    "QGMEE",
    "gmee_gradient",
    "qgmee_direction",
    "quantize_batch",
    "make_filter",
    "ALGORITHMS",
]


class DimensionError(ValueError):
    """Input vector length does not match the filter length."""


class InsufficientWindowError(ValueError):
    """A window-based computation needs at least two samples."""


class SampleWindow:
    """Fixed-capacity buffer of the most recent ``(u, d)`` pairs, oldest first.

    Parameters
    ----------
    capacity : int
        Window length ``L``.
    n_taps : int
        Input vector length ``M``.
    batch_shape : tuple, optional
        Leading batch shape shared by all stored arrays.
    """

    def __init__(self, capacity, n_taps, batch_shape=()):
        if capacity < 1:
            raise InvalidParameterError(f"window capacity must be >= 1, got {capacity}")
        self.capacity = int(capacity)
        self.batch_shape = tuple(batch_shape)
        self._u = np.zeros(self.batch_shape + (self.capacity, n_taps))
        self._d = np.zeros(self.batch_shape + (self.capacity,))
        self._n = 0

    def __len__(self):
        return self._n

    def push(self, u, d):
        if self._n < self.capacity:
            self._u[..., self._n, :] = u
            self._d[..., self._n] = d
            self._n += 1
        else:
            self._u[..., :-1, :] = self._u[..., 1:, :]
            self._d[..., :-1] = self._d[..., 1:]
            self._u[..., -1, :] = u
            self._d[..., -1] = d

    @property
    def inputs(self) -> np.ndarray:
        """Stored input vectors, shape ``batch + (n, M)``."""
        return self._u[..., : self._n, :]

    @property
    def desired(self) -> np.ndarray:
        """Stored desired samples, shape ``batch + (n,)``."""
        return self._d[..., : self._n]

    def errors(self, w) -> np.ndarray:
        """Window errors ``d_i - w.T u_i`` under the weights ``w``."""
        return self.desired - np.einsum("...lm,...m->...l", self.inputs, w)


def _window_arrays(window, w):
    if isinstance(window, SampleWindow):
        U, D = window.inputs, window.desired
    else:
        U, D = window
        U, D = np.asarray(U, dtype=float), np.asarray(D, dtype=float)
    if D.shape[-1] < 2:
        raise InsufficientWindowError(f"need at least 2 window samples, got {D.shape[-1]}")
    return U, D


def gmee_gradient(window, w, kernel: GGDKernel):
    """GMEE ascent direction of the window information potential.

    Parameters
    ----------
    window : SampleWindow or tuple of arrays
        Either a window or a pair ``(U, D)`` with ``U`` of shape
        ``(..., L, M)`` (rows are input vectors) and ``D`` of shape ``(..., L)``.
    w : ndarray
        Weights used to compute the window errors.
    kernel : GGDKernel

    Returns
    -------
    P, Q : ndarray, shape (..., L)
        ``P[i] = sum_j K(e_i - e_j)`` and ``Q[i] = sum_j K(e_j - e_i)`` with
        ``K(x) = G(x) |x|**(alpha-1) sign(x)``.
    grad : ndarray, shape (..., M)
        ``alpha / (L**2 beta**alpha) * U (P - Q)``.
    """
    U, D = _window_arrays(window, w)
    n = D.shape[-1]
    e = D - np.einsum("...lm,...m->...l", U, w)
    K = kernel.influence(e[..., :, None] - e[..., None, :])
    P = K.sum(axis=-1)
    Q = K.sum(axis=-2)
    scale = kernel.alpha / (n * n * kernel.beta**kernel.alpha)
    grad = scale * np.einsum("...lm,...l->...m", U, P - Q)
    return P, Q, grad


def quantize_batch(errors, gamma):
    """Vectorized :func:`gmee.entropy.quantize` over leading batch axes.

    Returns
    -------
    centers : ndarray, shape (..., L)
        Centers in creation order; unused slots hold 0.
    counts : ndarray, shape (..., L)
        Occupancy per slot; unused slots hold 0.
    """
    e = np.asarray(errors, dtype=float)
    L = e.shape[-1]
    centers = np.zeros(e.shape)
    counts = np.zeros(e.shape)
    size = np.zeros(e.shape[:-1], dtype=int)
    centers[..., 0] = e[..., 0]
    counts[..., 0] = 1
    size[...] = 1
    slots = np.arange(L)
    for k in range(1, L):
        x = e[..., k]
        dist = np.abs(centers - x[..., None])
        dist = np.where(slots < size[..., None], dist, np.inf)
        h = np.argmin(dist, axis=-1)
        dmin = np.take_along_axis(dist, h[..., None], axis=-1)[..., 0]
        join = dmin <= gamma
        target = np.where(join, h, size)
        np.put_along_axis(counts, target[..., None],
                          np.take_along_axis(counts, target[..., None], axis=-1) + 1, axis=-1)
        new = ~join
        np.put_along_axis(centers, target[..., None],
                          np.where(new, x, np.take_along_axis(centers, target[..., None], axis=-1)[..., 0])[..., None],
                          axis=-1)
        size = size + new
    return centers, counts


def qgmee_direction(window, w, kernel: GGDKernel, gamma: float):
    """QGMEE update direction.

    The codebook is rebuilt from the current window errors. Returns
    ``(Lambda, direction)`` where ``Lambda[i] = sum_h H_h K(e_i - c_h)`` and
    ``direction = 2 alpha / (L**2 beta**alpha) * U Lambda``. The factor 2 makes
    ``gamma = 0`` coincide with :func:`gmee_gradient`.
    """
    U, D = _window_arrays(window, w)
    n = D.shape[-1]
    e = D - np.einsum("...lm,...m->...l", U, w)
    centers, counts = quantize_batch(e, gamma)
    lam = (counts[..., None, :] * kernel.influence(e[..., :, None] - centers[..., None, :])).sum(axis=-1)
    scale = kernel.alpha / (n * n * kernel.beta**kernel.alpha)
    return lam, scale * np.einsum("...lm,...l->...m", U, lam + lam)


@dataclass(frozen=True)
class GmeeConfig:
    """Parameters shared by the window-based entropy filters."""

    kernel: GGDKernel
    eta: float
    L: int
    gamma: float = 0.0

    def __post_init__(self):
        if not self.eta > 0:
            raise InvalidParameterError(f"eta must be > 0, got {self.eta}")
        if int(self.L) != self.L or self.L < 2:
            raise InvalidParameterError(f"L must be an integer >= 2, got {self.L}")
        if not self.gamma >= 0:
            raise InvalidParameterError(f"gamma must be >= 0, got {self.gamma}")


class AdaptiveFilter:
    """Base class: owns the weights and enforces the step contract."""

    name = "base"
    window_length = 0

    def __init__(self, n_taps, batch_shape=()):
        if int(n_taps) != n_taps or n_taps < 1:
            raise InvalidParameterError(f"n_taps must be a positive integer, got {n_taps}")
        self.n_taps = int(n_taps)
        self.batch_shape = tuple(batch_shape)
        self.w = np.zeros(self.batch_shape + (self.n_taps,))
        self.window = SampleWindow(max(self.window_length, 1), self.n_taps, self.batch_shape)
        self.step_count = 0

    def _check(self, u, d):
        u = np.asarray(u, dtype=float)
        d = np.asarray(d, dtype=float)
        if u.shape != self.batch_shape + (self.n_taps,):
            raise DimensionError(f"expected input of shape {self.batch_shape + (self.n_taps,)}, got {u.shape}")
        if d.shape != self.batch_shape:
            raise DimensionError(f"expected desired of shape {self.batch_shape}, got {d.shape}")
        return u, d

    def step(self, u, d):
        """Filter one sample: return ``d - w.T u`` and adapt the weights."""
        u, d = self._check(u, d)
        with np.errstate(all="ignore"):
            e = d - np.einsum("...m,...m->...", u, self.w)
            self._update(u, d, e)
        self.step_count += 1
        return e if e.ndim else float(e)

    def predict(self, u):
        return np.einsum("...m,...m->...", np.asarray(u, dtype=float), self.w)

    def _update(self, u, d, e):
        raise NotImplementedError


class LMS(AdaptiveFilter):
    """Least mean squares, ``w += eta e u``."""

    name = "lms"

    def __init__(self, n_taps, eta, batch_shape=()):
        if not eta > 0:
            raise InvalidParameterError(f"eta must be > 0, got {eta}")
        self.eta = float(eta)
        super().__init__(n_taps, batch_shape)

    def _update(self, u, d, e):
        self.w += (self.eta * e)[..., None] * u


class LMF(LMS):
    """Least mean fourth, ``w += eta e**3 u``."""

    name = "lmf"

    def _update(self, u, d, e):
        self.w += (self.eta * e**3)[..., None] * u


class GMCC(AdaptiveFilter):
    """Generalized maximum correntropy with shape ``alpha_c`` and rate ``lam``."""

    name = "gmcc"

    def __init__(self, n_taps, eta, alpha_c=4.0, lam=1.0, batch_shape=()):
        if not eta > 0:
            raise InvalidParameterError(f"eta must be > 0, got {eta}")
        if not (alpha_c > 0 and lam > 0):
            raise InvalidParameterError("alpha_c and lam must be > 0")
        self.eta, self.alpha_c, self.lam = float(eta), float(alpha_c), float(lam)
        super().__init__(n_taps, batch_shape)

    def _update(self, u, d, e):
        ae = np.abs(e)
        g = self.lam * np.exp(-self.lam * ae**self.alpha_c) * ae ** (self.alpha_c - 1.0) * np.sign(e)
        self.w += (self.eta * g)[..., None] * u


class RLS(AdaptiveFilter):
    """Exponentially weighted recursive least squares.

    Parameters
    ----------
    rho : float
        Forgetting factor in (0, 1].
    delta : float
        Regularization: the correlation estimate starts at ``delta * I``, so
        the inverse starts at ``I / delta``.
    check_symmetry : bool
        Debug verification: assert the inverse stays symmetric to 1e-9.
    """

    name = "rls"

    def __init__(self, n_taps, rho=0.999, delta=1e-2, batch_shape=(), check_symmetry=False):
        if not 0 < rho <= 1:
            raise InvalidParameterError(f"rho must be in (0, 1], got {rho}")
        if not delta > 0:
            raise InvalidParameterError(f"delta must be > 0, got {delta}")
        self.rho, self.delta = float(rho), float(delta)
        self.check_symmetry = check_symmetry
        super().__init__(n_taps, batch_shape)
        self.P = np.broadcast_to(np.eye(self.n_taps) / self.delta,
                                 self.batch_shape + (self.n_taps, self.n_taps)).copy()

    def _update(self, u, d, e):
        Pu = np.einsum("...ij,...j->...i", self.P, u)
        denom = self.rho + np.einsum("...i,...i->...", u, Pu)
        k = Pu / denom[..., None]
        self.w += k * e[..., None]
        # outer(Pu, Pu) is bitwise symmetric, so P stays exactly symmetric
        self.P = (self.P - Pu[..., :, None] * Pu[..., None, :] / denom[..., None, None]) / self.rho
        if self.check_symmetry:
            asym = np.max(np.abs(self.P - np.swapaxes(self.P, -1, -2)), initial=0.0)
            assert asym <= 1e-9 * max(1.0, np.max(np.abs(self.P))), "RLS inverse lost symmetry"


class _WindowFilter(AdaptiveFilter):
    def __init__(self, n_taps, config: GmeeConfig, batch_shape=()):
        self.config = config
        self.kernel = config.kernel
        self.eta = float(config.eta)
        self.window_length = int(config.L)
        super().__init__(n_taps, batch_shape)

    def _update(self, u, d, e):
        self.window.push(u, d)
        if len(self.window) >= 2:
            self.w += self.eta * self._direction()

    def _direction(self):
        raise NotImplementedError


class GMEE(_WindowFilter):
    """Generalized minimum error entropy filter.

    Ascends the window information potential under a GGD kernel:
    ``w += eta * alpha / (L**2 beta**alpha) * U (P - Q)``.
    """

    name = "gmee"

    def _direction(self):
        return gmee_gradient(self.window, self.w, self.kernel)[2]


class MEE(_WindowFilter):
    """Minimum error entropy filter with a Gaussian kernel.

    Uses the explicit double sum with the Gaussian of width ``beta / sqrt(2)``,
    the same kernel as a GGD with ``alpha = 2``.
    """

    name = "mee"

    def _direction(self):
        U, D = self.window.inputs, self.window.desired
        n = D.shape[-1]
        beta = self.kernel.beta
        e = self.window.errors(self.w)
        diff = e[..., :, None] - e[..., None, :]
        c = gaussian_kernel(diff, beta / math.sqrt(2.0)) * diff
        acc = np.einsum("...ij,...im->...m", c, U) - np.einsum("...ij,...jm->...m", c, U)
        return 2.0 / (n * n * beta * beta) * acc


class QGMEE(_WindowFilter):
    """Quantized GMEE: the inner sum runs over a codebook of window errors."""

    name = "qgmee"

    def _direction(self):
        return qgmee_direction(self.window, self.w, self.kernel, self.config.gamma)[1]


ALGORITHMS = {
    "lms": LMS,
    "lmf": LMF,
    "gmcc": GMCC,
    "rls": RLS,
    "mee": MEE,
    "gmee": GMEE,
    "qgmee": QGMEE,
}


def make_filter(tag, n_taps, batch_shape=(), **params):
    """Build a filter from a tag and flat parameters.

    Window filters take ``alpha``, ``beta``, ``eta``, ``L`` and (QGMEE)
    ``gamma``; the others take their constructor keywords directly.
    """
    tag = tag.lower()
    if tag not in ALGORITHMS:
        raise InvalidParameterError(f"unknown algorithm {tag!r}; known: {sorted(ALGORITHMS)}")
    cls = ALGORITHMS[tag]
    if issubclass(cls, _WindowFilter):
        params = dict(params)
        kernel = GGDKernel(params.pop("alpha", 2.0), params.pop("beta", 1.0))
        config = GmeeConfig(kernel, params.pop("eta"), params.pop("L", 10), params.pop("gamma", 0.0))
        if params:
            raise InvalidParameterError(f"unexpected parameters for {tag}: {sorted(params)}")
        if tag == "mee" and kernel.alpha != 2.0:
            raise InvalidParameterError("mee uses a Gaussian kernel; alpha must be 2")
        return cls(n_taps, config, batch_shape=batch_shape)
    return cls(n_taps, batch_shape=batch_shape, **params)
