"""Independent reference for the ground-state height M* (d=5, p=2, ω=1).

Plain Taylor-series integration in mpmath (20 digits) of
``u'' + (d-1)/r u' + f(u) = 0`` in the original variable r, with a two-term
series start and bisection on the sign pattern (crossing vs turning point).
Shares no code with the package.  Takes a few minutes.
"""

import argparse
import time

import mpmath as mp


def classify(M, d, p, w, q, r_max=60, dr=mp.mpf("0.05")):
    def f(u):
        u = mp.re(u)
        return -w * u + mp.sign(u) * abs(u) ** p + mp.sign(u) * abs(u) ** q

    r0 = mp.mpf("1e-4")
    u0 = M - f(M) * r0**2 / (2 * d)
    du0 = -f(M) * r0 / d
    sol = mp.odefun(lambda r, y: [y[1], -(d - 1) / r * y[1] - f(y[0])], r0, [u0, du0])
    r = r0
    while r < r_max:
        r += dr
        u, du = (mp.re(x) for x in sol(r))
        if u < 0:
            return "crossing"
        if du > 0:
            return "undershoot"
    return "inconclusive"


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--lo", type=float, default=36.0)
    ap.add_argument("--hi", type=float, default=38.0)
    ap.add_argument("--rtol", type=float, default=1e-11)
    args = ap.parse_args()
    mp.mp.dps = 20
    d, p, w = 5, mp.mpf(2), mp.mpf(1)
    q = mp.mpf(d + 2) / (d - 2)
    lo, hi = mp.mpf(args.lo), mp.mpf(args.hi)
    assert classify(lo, d, p, w, q) == "undershoot" and classify(hi, d, p, w, q) == "crossing"
    t = time.time()
    while hi - lo > args.rtol * lo:
        mid = (lo + hi) / 2
        kind = classify(mid, d, p, w, q)
        if kind == "undershoot":
            lo = mid
        elif kind == "crossing":
            hi = mid
        else:
            raise SystemExit(f"inconclusive shot at {mid}")
    print(f"M* = {mp.nstr((lo + hi) / 2, 15)}  bracket [{mp.nstr(lo, 15)}, {mp.nstr(hi, 15)}]  "
          f"{time.time() - t:.0f} s")


if __name__ == "__main__":
    main()
