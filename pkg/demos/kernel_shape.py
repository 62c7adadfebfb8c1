"""
Kernel shape and robustness
===========================

Sweep the GGD shape parameter alpha for GMEE under two noise types. A
heavy-tailed mixture favours small alpha; light tails tolerate larger ones.
"""
from gmee import AlgorithmSpec, NoiseModel, SysIdExperiment, sweep

for noise, beta in [(NoiseModel.mixed_gaussian(), 6.0), (NoiseModel.uniform(1.0), 4.5)]:
    exp = SysIdExperiment(noise, (AlgorithmSpec("gmee", {"eta": 0.5, "beta": beta, "L": 10}),),
                          iterations=2000, runs=5)
    # recalibrate eta at every grid point so convergence speed stays comparable
    rows = sweep(exp, "alpha", [1.0, 2.0, 4.0, 8.0],
                 calibrate={"target_db": -10.0, "target_iteration": 500, "runs": 5})
    print(noise.kind)
    for r in rows:
        print(f"  alpha={r['param_value']:<4} eta={r['eta']:.3g} steady MSD {r['steady_msd_db']:.1f} dB")
