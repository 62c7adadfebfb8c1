"""
Acoustic echo cancellation
==========================

Cancel the echo of a synthetic AR(1) far-end signal through a decaying
64-tap echo path, with impulsive microphone noise, and report ERLE.
"""
import numpy as np

from gmee import AlgorithmSpec
from gmee.aec import make_session, run_aec_batch

algorithms = [
    AlgorithmSpec("lms", {"eta": 0.004}),
    AlgorithmSpec("gmee", {"eta": 0.0026, "alpha": 2.0, "beta": 1.0, "L": 10}),
    AlgorithmSpec("rls", {"rho": 0.999, "delta": 0.01}),
]

for algo in algorithms:
    results = run_aec_batch([make_session(12000, algo, seed=s) for s in range(4)])
    erle = np.median([r.final_erle_db for r in results])
    msd = np.median([r.steady_msd_db() for r in results])
    print(f"{algo.name:5s} final ERLE {erle:5.1f} dB, echo-path MSD {msd:6.1f} dB")
