"""
Acoustic echo cancellation
==========================

Simulated echo-cancellation sessions: a far-end signal passes through a known
FIR echo path, the microphone adds near-end speech and noise, and an adaptive
filter driven by the last ``M`` far-end samples removes the echo.

Because the echo path is known, the residual echo ``y - y_hat`` is available
exactly and echo return loss enhancement (ERLE) can be measured directly.
"""
from __future__ import annotations

import math
import wave
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .entropy import InvalidParameterError
from .filters import make_filter
from .noise import NoiseModel, make_rng, sample
from .simkit import AlgorithmSpec, bisect_step_size, to_db

__all__ = [
    "EchoPath",
    "AecSession",
    "AecResult",
    "UnsupportedFormatError",
    "synth_echo_path",
    "ar1_signal",
    "aec_noise",
    "make_session",
    "run_aec",
    "run_aec_batch",
    "calibrate_aec_eta",
    "erle",
    "wav_read",
    "wav_write",
]


class UnsupportedFormatError(ValueError):
    """WAV container the reader does not handle."""


def aec_noise() -> NoiseModel:
    """Microphone noise ``0.95 N(0, 0.001) + 0.05 N(0, 0.01)``."""
    return NoiseModel.mixed_gaussian(outlier_prob=0.05, variance_small=0.001, variance_large=0.01)


@dataclass(frozen=True)
class EchoPath:
    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=float).ravel()
        if taps.size < 1 or not np.all(np.isfinite(taps)):
            raise InvalidParameterError("echo path needs at least one finite tap")
        object.__setattr__(self, "taps", taps)

    @property
    def length(self) -> int:
        return self.taps.size

    def apply(self, x):
        """Causal FIR filtering of ``x`` (along the last axis)."""
        x = np.asarray(x, dtype=float)
        n = x.shape[-1]
        y = np.apply_along_axis(lambda s: np.convolve(s, self.taps)[:n], -1, x)
        return y


def synth_echo_path(length=64, decay_rate=0.1, seed=0) -> EchoPath:
    """Random exponentially decaying unit-energy echo path.

    Tap ``k`` is a standard normal draw scaled by ``exp(-decay_rate * k)``.
    """
    if int(length) != length or length < 1:
        raise InvalidParameterError(f"length must be a positive integer, got {length}")
    if not 0 < decay_rate <= 1:
        raise InvalidParameterError(f"decay_rate must be in (0, 1], got {decay_rate}")
    rng = make_rng(seed)
    taps = rng.standard_normal(int(length)) * np.exp(-decay_rate * np.arange(length))
    return EchoPath(taps / np.linalg.norm(taps))


def ar1_signal(length, rng, coef=0.9):
    """Unit-variance AR(1) process, a stand-in for speech energy."""
    w = rng.standard_normal(int(length)) * math.sqrt(1.0 - coef * coef)
    x = np.empty(int(length))
    acc = rng.standard_normal()
    for n in range(x.size):
        acc = coef * acc + w[n]
        x[n] = acc
    return x


@dataclass
class AecSession:
    """One echo-cancellation scenario.

    ``near_end`` defaults to silence. ``double_talk`` marks samples where the
    near-end talker is active; windows touching them are left out of ERLE.
    """

    far_end: np.ndarray
    path: EchoPath
    algorithm: AlgorithmSpec
    near_end: np.ndarray | None = None
    noise: NoiseModel = field(default_factory=aec_noise)
    n_taps: int | None = None
    seed: int = 0
    double_talk: np.ndarray | None = None
    erle_window: int = 1024
    erle_hop: int = 512
    erle_cap_db: float = 80.0

    def __post_init__(self):
        self.far_end = np.asarray(self.far_end, dtype=float).ravel()
        n = self.far_end.size
        if self.near_end is None:
            self.near_end = np.zeros(n)
        self.near_end = np.asarray(self.near_end, dtype=float).ravel()
        if self.near_end.size != n:
            raise InvalidParameterError(
                f"near_end has {self.near_end.size} samples, far_end has {n}")
        if self.double_talk is None:
            self.double_talk = np.zeros(n, dtype=bool)
        self.double_talk = np.asarray(self.double_talk, dtype=bool).ravel()
        if self.double_talk.size != n:
            raise InvalidParameterError("double_talk mask length differs from far_end")
        if self.n_taps is None:
            self.n_taps = self.path.length


def make_session(length=20000, algorithm=None, seed=0, path_length=64, decay_rate=0.1, **kw) -> AecSession:
    """Synthetic session: seeded AR(1) far end and seeded echo path."""
    rng = make_rng(seed)
    x = ar1_signal(length, rng)
    path = synth_echo_path(path_length, decay_rate, seed=seed + 1_000_003)
    algorithm = algorithm or AlgorithmSpec("lms", {"eta": 0.005})
    return AecSession(x, path, algorithm, seed=seed, **kw)


@dataclass
class AecResult:
    """Outputs of one session.

    ``output`` is the processed microphone signal ``e(n)``; ``msd_db`` is the
    deviation of the weights from the (zero-padded) echo path per sample;
    ``erle_db`` holds one value per power window.
    """

    output: np.ndarray
    residual_echo: np.ndarray
    msd_db: np.ndarray
    erle_db: np.ndarray
    diverged: bool

    @property
    def final_erle_db(self) -> float:
        return float(self.erle_db[-1]) if self.erle_db.size else math.nan

    def steady_msd_db(self, fraction=0.1) -> float:
        k = max(1, int(round(fraction * self.msd_db.size)))
        with np.errstate(divide="ignore"):
            return float(10 * np.log10(np.mean(10 ** (self.msd_db[-k:] / 10))))


def run_aec_batch(sessions) -> list:
    """Run sessions of equal length and identical algorithm/filter length
    as one batch. Results are identical to running them one at a time."""
    sessions = list(sessions)
    if not sessions:
        return []
    s0 = sessions[0]
    n, M = s0.far_end.size, s0.n_taps
    for s in sessions:
        if s.far_end.size != n or s.n_taps != M or s.algorithm != s0.algorithm:
            raise InvalidParameterError("batched sessions must share length, n_taps and algorithm")
    B = len(sessions)
    X = np.stack([s.far_end for s in sessions])
    Y = np.stack([s.path.apply(s.far_end) for s in sessions])
    V = np.stack([sample(s.noise, make_rng(s.seed + 7_919), n) for s in sessions])
    P = np.stack([s.near_end for s in sessions])
    D = P + Y + V
    Wref = np.zeros((B, max(M, max(s.path.length for s in sessions))))
    for b, s in enumerate(sessions):
        Wref[b, : s.path.length] = s.path.taps
    f = make_filter(s0.algorithm.tag, M, batch_shape=(B,), **s0.algorithm.params)
    E = np.empty((B, n))
    msd = np.empty((B, n))
    with np.errstate(all="ignore"):
        for t in range(n):
            lo = max(0, t - M + 1)
            u = np.zeros((B, M))
            u[:, : t - lo + 1] = X[:, lo : t + 1][:, ::-1]
            dev = Wref.copy()
            dev[:, :M] -= f.w
            msd[:, t] = np.einsum("bm,bm->b", dev, dev)
            E[:, t] = f.step(u, D[:, t])
    yhat = D - E
    R = Y - yhat
    out = []
    for b, s in enumerate(sessions):
        bad = not np.all(np.isfinite(msd[b]))
        out.append(AecResult(E[b], R[b], to_db(msd[b]),
                             erle(s.far_end, R[b], s.erle_window, s.erle_hop, s.erle_cap_db,
                                  exclude=s.double_talk), bad))
    return out


def run_aec(session: AecSession) -> AecResult:
    """Cancel the echo in one session."""
    return run_aec_batch([session])[0]


def erle(far_end, residual_echo, window=1024, hop=512, cap_db=80.0, exclude=None):
    """Windowed ERLE, ``10 log10(far-end power / residual-echo power)``.

    Windows with zero far-end power, or touching an ``exclude`` sample, are
    skipped. A window with zero residual power reports ``cap_db``.
    """
    x = np.asarray(far_end, dtype=float)
    r = np.asarray(residual_echo, dtype=float)
    if x.shape != r.shape:
        raise InvalidParameterError("far_end and residual_echo differ in length")
    if exclude is None:
        exclude = np.zeros(x.shape, dtype=bool)
    vals = []
    for start in range(0, x.size - window + 1, hop):
        sl = slice(start, start + window)
        if exclude[sl].any():
            continue
        with np.errstate(over="ignore", invalid="ignore"):
            px = np.mean(x[sl] ** 2)
            pr = np.mean(r[sl] ** 2)
        if not px > 0:
            continue
        vals.append(cap_db if pr <= 0 else min(cap_db, 10.0 * math.log10(px / pr)))
    return np.asarray(vals)


def wav_read(path):
    """Read a 16-bit PCM mono WAV file. Returns ``(samples in [-1, 1), rate)``."""
    try:
        with wave.open(str(path), "rb") as fh:
            if fh.getnchannels() != 1:
                raise UnsupportedFormatError(f"nchannels={fh.getnchannels()}: only mono is supported")
            if fh.getsampwidth() != 2:
                raise UnsupportedFormatError(f"sampwidth={fh.getsampwidth()}: only 16-bit PCM is supported")
            if fh.getcomptype() != "NONE":
                raise UnsupportedFormatError(f"comptype={fh.getcomptype()}: only PCM is supported")
            rate = fh.getframerate()
            raw = fh.readframes(fh.getnframes())
    except (wave.Error, EOFError) as exc:
        raise UnsupportedFormatError(f"header: {exc}") from exc
    data = np.frombuffer(raw, dtype="<i2").astype(float) / 32768.0
    return data, rate


def wav_write(path, signal, rate=16000):
    """Write ``signal`` (values in [-1, 1]) as 16-bit PCM mono."""
    x = np.asarray(signal, dtype=float).ravel()
    q = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
    with wave.open(str(Path(path)), "wb") as fh:
        fh.setnchannels(1)
        fh.setsampwidth(2)
        fh.setframerate(int(rate))
        fh.writeframes(q.tobytes())


def calibrate_aec_eta(spec: AlgorithmSpec, target_db=-10.0, target_iteration=3000, sessions=5,
                      seed=10_000, eta_range=(1e-6, 10.0), rtol=0.02, **session_kw):
    """Step size whose mean echo-path MSD first reaches ``target_db`` at
    ``target_iteration`` on ``sessions`` pilot sessions.

    Pilot sessions use seeds ``seed, seed + 1, ...`` and are only
    ``target_iteration + 1`` samples long. Divergence counts as fast enough,
    as in :func:`gmee.simkit.calibrate_eta`. Returns ``None`` when nothing in
    ``eta_range`` reaches the target.
    """
    n = target_iteration + 1

    def probe(eta):
        algo = AlgorithmSpec(spec.tag, {**spec.params, "eta": eta}, spec.label)
        res = run_aec_batch([make_session(n, algo, seed=seed + k, **session_kw) for k in range(sessions)])
        if any(r.diverged for r in res):
            return True
        with np.errstate(over="ignore"):
            mean = to_db(np.mean([10 ** (r.msd_db / 10) for r in res], axis=0))
        return bool(np.any(mean <= target_db))

    return bisect_step_size(probe, eta_range, per_decade=3, rtol=rtol)
