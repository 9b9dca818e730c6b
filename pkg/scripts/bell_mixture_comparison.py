"""Compare ST, E_F and the optimized max over a priori unitaries on Bell mixtures.

For each random weight vector w over the four Bell states this prints the
closed-form ST of the copy net, the closed-form E_F, and the optimizer's
estimate of E_F. The two measures agree on pure Bell states and on the
uniform mixture; for other mixtures neither bounds the other.
"""
import argparse

import numpy as np

from tangle.measures import bell_diagonal_state, ef_bell_diagonal, ef_mixed, st_bell_diagonal
from tangle.sampling import random_simplex


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args()
    rng = np.random.default_rng(args.seed)
    print(f"{'w00':>7} {'w01':>7} {'w10':>7} {'w11':>7} {'ST':>9} {'E_F':>9} {'E_F opt':>9}")
    rows = [np.eye(4)[0], np.full(4, 0.25)] + [random_simplex(rng, 4) for _ in range(args.count)]
    for w in rows:
        st = st_bell_diagonal(w)
        ef = ef_bell_diagonal(w)
        opt = ef_mixed(bell_diagonal_state(w), dims=(2, 2)).value
        print(" ".join(f"{v:7.4f}" for v in w), f"{st:9.5f} {ef:9.5f} {opt:9.5f}")


if __name__ == "__main__":
    main()
