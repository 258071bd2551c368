"""Fit a squeezed thermal state with four parameters and read off its photon statistics.

Run: python demos/gaussian_fit.py
"""

from qmle import GaussianParams, SamplerConfig, estimate_gaussian
from qmle.sampler import sample_gaussian_homodyne
from qmle.states import gaussian_overlap

truth = GaussianParams.from_photon_numbers(0.3, 0.8, 1.0 - 0.5j)
data = sample_gaussian_homodyne(truth, SamplerConfig(seed=3, n_samples=20_000, eta=0.8))
est, numbers = estimate_gaussian(data, 0.8)

print("truth   ", truth)
print("estimate", est)
print("photon numbers", numbers)
print(f"overlap {gaussian_overlap(est, truth):.5f}")
