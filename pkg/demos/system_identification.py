"""
System identification in impulsive noise
========================================

Identify a 10-tap FIR system from noisy observations with LMS and GMEE,
then compare learning curves. The noise is a Gaussian mixture with rare
large outliers.
"""
import numpy as np

from gmee import AlgorithmSpec, NoiseModel, SysIdExperiment, run_sysid

noise = NoiseModel.mixed_gaussian(outlier_prob=0.05, variance_small=0.01, variance_large=100.0)

# both filters see the same input and noise streams in every run
algorithms = (
    AlgorithmSpec("lms", {"eta": 0.005}),
    AlgorithmSpec("gmee", {"eta": 0.05, "alpha": 2.0, "beta": 1.0, "L": 10}),
)
exp = SysIdExperiment(noise, algorithms, iterations=3000, runs=10)
traces = run_sysid(exp)

for name, tr in traces.items():
    marks = tr.msd_db[[0, 500, 1000, 2000, 2999]]
    print(f"{name:5s} MSD dB at 0/500/1000/2000/2999:", np.round(marks, 1))
    print(f"      steady MSD {tr.steady_msd_db:.1f} dB, EMSE {tr.emse_db:.1f} dB")
