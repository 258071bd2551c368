"""Reconstruct a weak coherent state from lossy homodyne records.

Run: python demos/fock_reconstruction.py
"""

import numpy as np

from qmle import SamplerConfig, coherent_state, overlap, reconstruct_fock, sample_homodyne

truth = coherent_state(0.7 + 0.3j, 12).density()
eta = 0.85

for n in (1_000, 10_000):
    data = sample_homodyne(truth, SamplerConfig(seed=1, n_samples=n, eta=eta))
    rep = reconstruct_fock(data, 5, eta)
    fid = overlap(rep.rho_ml.embed(truth.dim), truth)
    print(f"N={n:6d}  overlap {fid:.4f}  evals {rep.evals}  converged {rep.converged}")

np.set_printoptions(precision=3, suppress=True)
print("photon distribution (ML):   ", rep.rho_ml.photon_distribution())
print("photon distribution (truth):", truth.photon_distribution()[:5])
