#!/usr/bin/env python3
"""Generates the Game-of-24 desk set fixture with solvability verdicts.

Solvability is decided here by exhaustive search over all operand orders and
parenthesizations using exact fractional arithmetic (the 3,3,8,8 puzzle is
only solvable through the fraction 8/3, so floats are off the table). The
Rust test suite re-verifies every verdict with a third, structurally
different enumerator, so a bug here cannot silently pin a wrong verdict.

Usage: python3 tools/game24_desk_set.py > crates/delver/tests/fixtures/game24_desk_set.json
"""

import itertools
import json
import sys
from fractions import Fraction

TARGET = Fraction(24)


def ops(a, b):
    yield a + b
    yield a - b
    yield a * b
    if b != 0:
        yield a / b


def solvable(numbers):
    values = [Fraction(n) for n in numbers]
    for perm in itertools.permutations(values):
        a, b, c, d = perm
        # Five parenthesizations of a four-leaf expression tree.
        for x in ops(a, b):
            for y in ops(x, c):
                if any(z == TARGET for z in ops(y, d)):
                    return True
            for y in ops(c, d):
                if any(z == TARGET for z in ops(x, y)):
                    return True
        for y in ops(b, c):
            for x in ops(a, y):
                if any(z == TARGET for z in ops(x, d)):
                    return True
            for x in ops(y, d):
                if any(z == TARGET for z in ops(a, x)):
                    return True
        for y in ops(c, d):
            for x in ops(b, y):
                if any(z == TARGET for z in ops(a, x)):
                    return True
    return False


# Twenty puzzles expected solvable (including the fraction-only 3,3,8,8 and
# 1,5,5,5) and five expected unsolvable; every verdict is recomputed before
# the fixture is written, so a wrong guess fails generation rather than
# producing a mislabeled fixture.
CANDIDATES = [
    ([4, 4, 6, 8], True),
    ([3, 3, 8, 8], True),
    ([1, 5, 5, 5], True),
    ([1, 2, 3, 4], True),
    ([6, 6, 6, 6], True),
    ([1, 3, 4, 6], True),
    ([2, 3, 5, 12], True),
    ([1, 1, 2, 12], True),
    ([2, 2, 2, 3], True),
    ([4, 6, 7, 9], True),
    ([1, 2, 7, 7], True),
    ([2, 4, 10, 10], True),
    ([1, 4, 5, 6], True),
    ([3, 5, 7, 13], True),
    ([2, 2, 11, 11], True),
    ([1, 7, 13, 13], True),
    ([2, 6, 6, 12], True),
    ([5, 8, 9, 11], True),
    ([3, 3, 7, 7], True),
    ([2, 5, 5, 10], True),
    ([1, 1, 1, 1], False),
    ([1, 1, 1, 2], False),
    ([2, 2, 2, 2], False),
    ([1, 1, 6, 7], False),
    ([13, 13, 13, 13], False),
]


def main():
    rows = []
    for numbers, expected in CANDIDATES:
        verdict = solvable(numbers)
        assert verdict == expected, f"{numbers}: expected {expected}, solver says {verdict}"
        rows.append({"numbers": numbers, "solvable": verdict})
    assert len(rows) == 25
    assert sum(r["solvable"] for r in rows) == 20
    json.dump(rows, sys.stdout, indent=1)
    sys.stdout.write("\n")


if __name__ == "__main__":
    main()
