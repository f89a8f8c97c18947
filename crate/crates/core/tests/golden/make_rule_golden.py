#!/usr/bin/env python3
"""Brute-force reference for the rule-oracle probe job (steps=100).

Independent of the Rust implementation: walks the 1/100 grid per light
state with the traffic rule and prints the critical rows.
"""
from fractions import Fraction

STEPS = 100


def rule(rd, am, gr, dist):
    if rd:
        return 0 if dist < Fraction(6, 10) else 1
    if am:
        return 0 if Fraction(1, 10) <= dist <= Fraction(8, 10) else 1
    return 1


def main():
    rows = []
    for state in ([1, 0, 0], [0, 1, 0], [0, 0, 1]):
        grid = [Fraction(i, STEPS) for i in range(STEPS + 1)]
        out = [rule(*state, d) for d in grid]
        keep = {0, STEPS}
        for i in range(STEPS):
            if out[i] != out[i + 1]:
                keep.update((i, i + 1))
        for i in sorted(keep):
            rows.append((state, grid[i], out[i]))
    consts = sorted({float(d) for _, d, _ in rows} | {float(g) for _, _, g in rows})
    print("jobValence([rd:in, am:in, gr:in, dist:in, go:out]).")
    for c in consts:
        print(f"jobConstant({c!r}).")
    for (rd, am, gr), d, g in rows:
        print(f"jobObservable([rd:{rd:.2f}, am:{am:.2f}, gr:{gr:.2f}, dist:{float(d):.2f}, go:{g:.2f}], true).")


if __name__ == "__main__":
    main()
