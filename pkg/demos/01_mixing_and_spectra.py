"""Build communication graphs, Metropolis mixing matrices, and inspect spectra.

The second-largest eigenvalue lambda_2 controls how fast gossip averaging
mixes information; the smallest eigenvalue lambda_N decides whether the
blended matrix wI + (1-w)Pi stays positive definite (which the consensus
bound needs).  This script walks the three stock topologies and shows how a
lazy blend trades mixing speed for positive definiteness.
"""

import numpy as np

from dmsgd.topology import build_topology, effective_matrix, metropolis_mixing, spectrum

for kind, n, parts in [("full", 4, None), ("ring", 4, None), ("bipartite", 4, (2, 2))]:
    topo = build_topology(kind, n, parts=parts)
    mix = metropolis_mixing(topo)
    s = spectrum(mix)
    print(f"{kind:9s} n={n}: eigenvalues {np.round(s.eigenvalues, 4)}")
    print(f"          lambda_2 = {s.lambda2:+.4f}  lambda_N = {s.lambda_n:+.4f}  spectral gap = {1 - s.lambda2:.4f}")

print()
print("ring-4 needs laziness (or blend weight w) before wI + (1-w)Pi is positive definite:")
ring = build_topology("ring", 4)
for ell in (0.0, 0.2, 0.3):
    s = spectrum(metropolis_mixing(ring, laziness=ell))
    print(f"  laziness {ell:.1f}: lambda_min = {s.lambda_n:+.4f}  ({'PD' if s.lambda_n > 0 else 'not PD'})")

print()
print("blending toward the identity maps every eigenvalue affinely: w + (1-w)*eig")
mix = metropolis_mixing(ring)
for w in (0.0, 0.5, 1.0):
    s = spectrum(effective_matrix(mix, w))
    print(f"  w = {w:.1f}: {np.round(s.eigenvalues, 4)}  eta = {s.eigenvalues[-1]:+.4f}")
