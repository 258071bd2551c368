"""Calibrate detector efficiency two ways: a linear detector fed squeezed light,
and a click detector fed a weak coherent pulse.

Run: python demos/detector_efficiency.py
"""

import numpy as np

from qmle import CoherentReference, SamplerConfig, coherent_state, cramer_rao_sigma
from qmle import estimate_eta_avalanche, estimate_eta_linear, naive_eta, sample_on_off
from qmle.estimation import fisher_on_off
from qmle.sampler import sample_squeezed_reference

x0, r, eta = 0.1, float(np.arcsinh(np.sqrt(0.99))), 0.6
ml, naive = [], []
for seed in range(100):
    d = sample_squeezed_reference(x0, r, SamplerConfig(seed=seed, n_samples=2500, eta=eta))
    ml.append(estimate_eta_linear(d, x0, r).eta_ml)
    naive.append(naive_eta(d, x0))
print(f"linear detector, eta={eta}: ML {np.mean(ml):.3f} +- {np.std(ml):.3f}, naive {np.mean(naive):.3f} +- {np.std(naive):.3f}")

alpha, n = 0.5, 10_000
ref = CoherentReference(alpha)
est = [
    estimate_eta_avalanche(sample_on_off(coherent_state(alpha, 12).density(), SamplerConfig(seed=s, n_samples=n, eta=eta)), ref).eta_ml
    for s in range(200)
]
bound = cramer_rao_sigma(fisher_on_off(eta, alpha**2), n)
print(f"click detector, eta={eta}: ML {np.mean(est):.4f}, spread {np.std(est, ddof=1):.4f}, Cramer-Rao {bound:.4f}")
