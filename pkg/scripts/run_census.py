"""Undershoot/crossing census for the two uniqueness cases."""

import argparse

from critgs.domain import ProblemParams
from critgs.radial_ode import ground_state_census

CASES = [(5, 2.0, 1e4), (6, 1.5, 10.0)]


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=400)
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    for d, p, w in CASES:
        rep = ground_state_census(ProblemParams(d, p, w), samples=a.samples, workers=a.workers)
        ms = ", ".join(f"{c.m_star:.10g}" for c in rep.candidates)
        print(f"d={d} p={p:g} omega={w:g}: {rep.transitions} transition(s), "
              f"{rep.reverse} reverse, {len(rep.inconclusive)} inconclusive, M* = {ms}")


if __name__ == "__main__":
    main()
