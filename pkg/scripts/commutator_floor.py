"""Float64 floor of the commutator [A_n, rho] in the averaged recursion.

A_n is a polynomial in rho, so the exact commutator vanishes. The measured one
tracks ||A_n||_F times machine epsilon, as does the commutator of a matrix
that commutes with rho by construction (c * rho^2) at the same scale.
"""

import numpy as np

from witness_forge.averaged import averaged_sequence, commutator_norm
from witness_forge.maps import PositiveMap, apply_one_sided
from witness_forge.states import make_rng, random_npt_state


def main(states=100, n_max=200):
    pmap = PositiveMap("transpose", 2)
    print("state  max||A_n||_F   max|[A_n,rho]|   rel        control |[c rho^2, rho]|")
    worst = 0.0
    for i in range(states):
        rhoL = apply_one_sided(pmap, random_npt_state(make_rng(6, i)))
        rho = rhoL.operator
        seq = averaged_sequence(rhoL, n_max)
        norms = np.array([np.linalg.norm(a.A) for a in seq])
        comms = np.array([commutator_norm(a.A, rho) for a in seq])
        scale = norms.max()
        sq = rho @ rho
        control = commutator_norm(scale * sq / np.linalg.norm(sq), rho)
        worst = max(worst, comms.max())
        if comms.max() > 1e-9:
            print(f"{i:5d}  {scale:12.3e}  {comms.max():14.3e}  {np.max(comms / np.maximum(1, norms)):.2e}"
                  f"   {control:.3e}")
    print(f"worst absolute commutator over {states} states: {worst:.3e}")


if __name__ == "__main__":
    main()
