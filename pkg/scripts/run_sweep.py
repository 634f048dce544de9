"""ω-sweep for d=5, p=2 with the β/α extrapolation diagnostic.

Writes sweep.csv and sweep_diagnostics.json through the CLI, then prints the
ratio against the limit constant and a Λ - c√α extrapolation.
"""

import argparse
import json
from pathlib import Path

from critgs.asymptotics import extrapolate_ratio, limit_constant
from critgs.cli import main


def run(out: str, omegas: str, workers: int) -> None:
    code = main(["sweep", "d=5", "p=2", f"omega_list={omegas}", "--out", out, "--workers", str(workers)])
    if code:
        raise SystemExit(code)
    diag = json.loads((Path(out) / "sweep_diagnostics.json").read_text())
    rows = [r for r in diag["rows"] if not r["error"]]
    lam = limit_constant(5, 2.0)
    for r in rows:
        print(f"omega={r['omega']:>8g}  beta/alpha={r['beta_over_alpha']:.6g}  "
              f"({100 * (r['beta_over_alpha'] / lam - 1):+.2f}% vs {lam:.6g})")
    if len(rows) >= 2:
        fit, c = extrapolate_ratio([r["alpha"] for r in rows], [r["beta_over_alpha"] for r in rows])
        print(f"extrapolated limit {fit:.6g} (slope {c:.3g} in sqrt(alpha))")
    print(f"M* slope vs omega: {diag['m_star_slope']:.4f}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--out", default="out/sweep")
    ap.add_argument("--omegas", default="10,100,1000,10000")
    ap.add_argument("--workers", type=int, default=1)
    a = ap.parse_args()
    run(a.out, a.omegas, a.workers)
