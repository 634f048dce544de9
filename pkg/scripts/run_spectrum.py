"""Near-zero spectra: the critical operator at W and L_Phi along the sweep."""

import argparse

from critgs.domain import ProblemParams
from critgs.radial_ode import shoot
from critgs.rescale import rescale
from critgs.spectral import (critical_operator, eigenfunction_match, lambda_w_target,
                             linearize_rescaled, spectrum_near_zero)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--omegas", default="1000,10000")
    a = ap.parse_args()
    rep = spectrum_near_zero(critical_operator(5), k=4, refine=False)
    idx, mm = eigenfunction_match(rep, lambda_w_target(5))
    print(f"critical d=5: eigenvalue {rep.eigenvalues[idx]:.3e}, Lambda W mismatch {mm:.3e}")
    for w in (float(x) for x in a.omegas.split(",")):
        state = rescale(shoot(ProblemParams(5, 2.0, w), tol=1e-14))
        rep = spectrum_near_zero(linearize_rescaled(state), k=5)
        print(f"omega={w:g}: gap {rep.gap:.5g} (x{rep.scale:.5g} = {rep.gap_original_units:.5g}), "
              f"grid doubling {100 * rep.refinement_delta:.2f}%, negatives {rep.negative_count}")


if __name__ == "__main__":
    main()
