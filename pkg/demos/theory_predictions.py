"""
Steady-state theory
===================

Estimate the steady-state window statistics by Monte Carlo and evaluate
the EMSE predictor and step-size bounds for GMEE in mixed-Gaussian noise.
For i.i.d. noise the mean influence vectors vanish, so the split
predictors collapse toward zero or infinity while the joint bound stays
informative.
"""
import numpy as np

from gmee import GGDKernel, NoiseModel
from gmee.analysis import (TheoryInputs, conservative_eps_a, emse_theory, estimate_steady_pq,
                           gmee_step_bound, joint_step_bound)

inp = TheoryInputs(GGDKernel(2.0, 1.0), L=10, M=10, sigma_u2=1.0, noise=NoiseModel.mixed_gaussian(), eta=0.01)
pq = estimate_steady_pq(inp, 50_000, np.random.default_rng(0))
print("|p - q|        ", np.linalg.norm(pq.difference))
print("standard error ", np.linalg.norm(pq.p_se))
print("EMSE prediction", emse_theory(inp, pq))
print("split bound    ", gmee_step_bound(inp, conservative_eps_a(inp, pq.difference), pq))
print("joint bound    ", joint_step_bound(inp, 1.0, samples=10_000)[0])
