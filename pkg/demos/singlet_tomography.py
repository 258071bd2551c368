"""Two-qubit tomography from random-direction spin measurements.

Run: python demos/singlet_tomography.py
"""

import numpy as np

from qmle import SamplerConfig, overlap, reconstruct_spin, sample_spin_pair
from qmle.states import singlet_density

truth = singlet_density()
data = sample_spin_pair(truth, SamplerConfig(seed=7, n_samples=500))
rep = reconstruct_spin(data)

np.set_printoptions(precision=3, suppress=True)
print("ML density matrix (real part):")
print(rep.rho_ml.matrix.real)
print(f"overlap with the singlet: {overlap(rep.rho_ml, truth):.4f}")
