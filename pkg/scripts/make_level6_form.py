"""Write the weight-2 newform attached to y^2 = x^3 + 1 as a level-6 q-expansion.

The curve has conductor 36.  Its newform g(tau) = sum a_l e^{2 pi i l tau} is
on Gamma0(36), and f(tau) = g(tau/6) is invariant under Gamma(6), so the
coefficients in q_6 = e^{2 pi i tau/6} are the a_l themselves.  a_p comes from
point counting; 2 and 3 are additive primes (a_p = 0).
"""

import argparse
from pathlib import Path


def a_prime(p: int) -> int:
    if p in (2, 3):
        return 0
    squares = [0] * p
    for y in range(p):
        squares[y * y % p] += 1
    affine = sum(squares[(x * x * x + 1) % p] for x in range(p))
    return p - affine  # p + 1 - #E(F_p), with the point at infinity


def coefficients(L: int) -> list[int]:
    spf = list(range(L + 1))
    for i in range(2, int(L ** 0.5) + 1):
        if spf[i] == i:
            for j in range(i * i, L + 1, i):
                if spf[j] == j:
                    spf[j] = i
    a = [0] * (L + 1)
    a[1] = 1
    ap = {}
    for l in range(2, L + 1):
        p = spf[l]
        m, k = l, 0
        while m % p == 0:
            m //= p
            k += 1
        if m > 1:
            a[l] = a[m] * a[l // m]
            continue
        if p not in ap:
            ap[p] = a_prime(p)
        if k == 1:
            a[l] = ap[p]
        elif p in (2, 3):
            a[l] = 0
        else:
            a[l] = ap[p] * a[l // p] - p * a[l // (p * p)]
    return a


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--terms", type=int, default=12000)
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "tests/data/level6_x3p1.qexp")
    args = ap.parse_args()
    a = coefficients(args.terms)
    lines = ["# newform of y^2 = x^3 + 1 (conductor 36) in q_6 = exp(2 pi i tau/6)", "level 6"]
    lines += [f"{l} {a[l]}/1" for l in range(1, args.terms + 1) if a[l]]
    args.out.write_text("\n".join(lines) + "\n")
    print(f"wrote {args.out} ({args.terms} terms); a_5={a[5]} a_7={a[7]} a_11={a[11]} a_13={a[13]}")


if __name__ == "__main__":
    main()
