"""Independent brute-force oracles shared by the test modules.

These are deliberately naive pure-Python loops so they share no code path
with the vectorised implementations they check.
"""
import cmath
import itertools
import math

import numpy as np
import pytest


def e(t):
    return cmath.exp(2j * math.pi * t)


def brute_lambda(f0, f1, f2, f3):
    p = len(f0)
    s = 0j
    for x in range(p):
        for h in range(p):
            s += f0[x] * f1[(x + h) % p] * f2[(x + 2 * h) % p] * f3[(x + 3 * h) % p]
    return s / p ** 2


def brute_u2(f):
    p = len(f)
    s = 0j
    for x, a, b in itertools.product(range(p), repeat=3):
        s += f[x] * f[(x + a) % p].conjugate() * f[(x + b) % p].conjugate() * f[(x + a + b) % p]
    return max((s / p ** 3).real, 0.0) ** 0.25


def brute_u3(f):
    p = len(f)
    c = [complex(z).conjugate() for z in f]
    s = 0j
    for x, a, b, d in itertools.product(range(p), repeat=4):
        s += (f[x] * c[(x + a) % p] * c[(x + b) % p] * c[(x + d) % p] * f[(x + a + b) % p]
              * f[(x + b + d) % p] * f[(x + a + d) % p] * c[(x + a + b + d) % p])
    return max((s / p ** 4).real, 0.0) ** 0.125


def brute_increasing_ap4(A):
    s = set(A)
    return sum(1 for x in s for h in range(1, 100) if {x + h, x + 2 * h, x + 3 * h} <= s)


def is_prime_slow(n):
    return n >= 2 and all(n % d for d in range(2, n))


def random_bounded(rng, p, bound=1.0):
    r = rng.random(p) * bound
    return r * np.exp(2j * np.pi * rng.random(p))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance results, printed as one line per criterion at the end of the run
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, secs, detail = ACCEPTANCE[k]
        terminalreporter.write_line(f"criterion {k:2d}: {'PASS' if ok else 'FAIL'} ({secs:.2f} s) {detail}")
