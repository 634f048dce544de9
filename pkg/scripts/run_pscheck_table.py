"""Uniqueness-condition verdicts for the standard (d, p) table."""

from fractions import Fraction

from critgs.pucci_serrin import check_condition

TABLE = [(3, 4), (3, Fraction(9, 2)), (4, 2), (4, Fraction(5, 2)), (5, Fraction(4, 3)),
         (5, 2), (6, Fraction(3, 2)), (7, Fraction(3, 2)), (8, 2)]


def main() -> None:
    for d, p in TABLE:
        rep = check_condition(d, p)
        c = rep.coefficients
        line = f"d={d} p={str(c.p):>4}: {rep.verdict:<6} A_q+1={str(c.a_q1):>6}  {rep.certificate}"
        if rep.witness is not None:
            w = rep.witness
            line += f"  witness omega={w.omega:g} u={w.u:.6g} g={w.g:.3g}"
        print(line)


if __name__ == "__main__":
    main()
