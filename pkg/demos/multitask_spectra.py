"""
Multitask spectra from coprime samples
======================================

Three tones sit near grid bins 18, 35 and 37 of a 100-point grid. The
weakest one has a fifth of the strongest one's amplitude. We sample them
at all multiples of 9, 10 and 11, cut the stream into sliding windows and
compare the spectrum recovered from one window with the one recovered
from thirty windows.
"""

import numpy as np

from coprime_lse import vb
from coprime_lse.sampling import CoprimeScheme, build_tasks, generate_indices, max_valid_window
from coprime_lse.signal_model import LineSpectrum, noise_variance_for_snr, synthesize

rng = np.random.default_rng(3)
spec = LineSpectrum([0.178, 0.353, 0.372], np.array([0.2, 0.4, 0.8]) * np.exp(1j * rng.uniform(0, 2 * np.pi, 3)))
scheme = CoprimeScheme(9, 10, 11)
N = 100

# The first few kept sample positions: every multiple of 9, 10 or 11.
print("indices:", generate_indices(scheme, 30).tolist())

# Longest window whose offsets stay distinct modulo N for 50 windows.
M = max_valid_window(scheme, N, 50)
print("window length:", M)

# One noisy record, long enough for the largest task count below.
record = synthesize(spec, generate_indices(scheme, 2000)[: 30 + M - 1], noise_variance_for_snr(spec, 20), seed=rng)


def bar(value, top, width=40):
    return "#" * int(round(width * value / top))


for L in (1, 10, 30):
    est = vb.run(build_tasks(record, M, L, N))
    power = est.grid_power
    print(f"\nL = {L}: strongest peaks at {sorted(vb.extract_frequencies(est, 3))}")
    # Text rendering of the spectrum around the three tones.
    for n in list(range(15, 21)) + list(range(33, 40)):
        print(f"  {n / N:4.2f} {bar(power[n], power.max())}")
