"""
Window planning and sub-Gram eigenvalues
========================================

How long may a window be, and how well do the resulting partial Fourier
matrices preserve the energy of sparse vectors? The first half prints the
admissible window length for a few task counts. The second half samples
column subsets of the first window's matrix and of a random partial
Fourier matrix of the same size, then compares their eigenvalue spreads.
"""

from coprime_lse.rip import random_partial_fourier, sample_subgram_eigs
from coprime_lse.sampling import CoprimeScheme, generate_indices, plan_table
from coprime_lse.sensing import build_phi, normalize_columns

N = 100
for ratios in ((9, 10, 11), (7, 8, 9)):
    scheme = CoprimeScheme(*ratios)
    for rule in ("distinct", "no-wrap"):
        rows = plan_table(scheme, N, [1, 10, 30, 50], rule=rule)
        print(f"{scheme} ({rule}):", {r["L"]: r["max_M"] for r in rows})

# The two rules differ for 7,8,9 at L=30: one window spans more than N
# samples, yet its offsets still land on distinct residues.

scheme = CoprimeScheme(9, 10, 11)
t = generate_indices(scheme, 400)[:27]
first_window = normalize_columns(build_phi(t - t[0], N))
random_rows = normalize_columns(random_partial_fourier(27, N, seed=0))

ks = range(2, 9)
coprime_rep = sample_subgram_eigs(first_window, ks, seed=0)
random_rep = sample_subgram_eigs(random_rows, ks, seed=0)

print("\n k  coprime [min, max]   random [min, max]")
for i, k in enumerate(ks):
    print(f"{k:2d}  [{coprime_rep.avg_min_eig[i]:.3f}, {coprime_rep.avg_max_eig[i]:.3f}]"
          f"      [{random_rep.avg_min_eig[i]:.3f}, {random_rep.avg_max_eig[i]:.3f}]")
