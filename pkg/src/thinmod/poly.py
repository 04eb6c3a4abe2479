"""Dense polynomials as coefficient tuples, lowest degree first.

numpy.polynomial does not keep Fraction coefficients exact, so these
few helpers serve both arithmetic modes.
"""

from __future__ import annotations

from typing import Sequence

Poly = tuple


def trim(p: Sequence) -> Poly:
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    return tuple(p)


def add(p: Sequence, q: Sequence) -> Poly:
    n = max(len(p), len(q))
    zero = (p[0] if p else q[0]) * 0
    return tuple((p[k] if k < len(p) else zero) + (q[k] if k < len(q) else zero) for k in range(n))


def sub(p: Sequence, q: Sequence) -> Poly:
    return add(p, scale(q, -1))


def scale(p: Sequence, c) -> Poly:
    return tuple(x * c for x in p)


def times_linear(p: Sequence, root) -> Poly:
    """p(lambda) * (lambda - root)."""
    zero = p[0] * 0
    out = [zero] * (len(p) + 1)
    for k, x in enumerate(p):
        out[k + 1] = out[k + 1] + x
        out[k] = out[k] - x * root
    return tuple(out)


def from_roots(roots: Sequence, one) -> Poly:
    p: Poly = (one,)
    for r in roots:
        p = times_linear(p, r)
    return p


def evaluate(p: Sequence, x):
    acc = p[-1] * 1
    for c in reversed(p[:-1]):
        acc = acc * x + c
    return acc


def pad(p: Sequence, n: int) -> Poly:
    zero = p[0] * 0
    return tuple(p) + (zero,) * (n - len(p))


def degree(p: Sequence) -> int:
    p = trim(p)
    return len(p) - 1 if any(x != 0 for x in p) else -1


def magnitude(p: Sequence, x) -> float:
    """sum |c_k| |x|^k, the scale against which rounding in evaluate() is judged."""
    ax = abs(float(x))
    acc = 0.0
    for c in reversed(p):
        acc = acc * ax + abs(float(c))
    return acc


def three_term(a: Sequence, x: Sequence, one, size: int) -> list:
    """Monic p_0..p_{size-1}: p_0 = 1, p_{i+1} = (lambda - a_i) p_i - x_i p_{i-1}.

    ``x[0]`` is never read.
    """
    out = [(one,)]
    for i in range(size - 1):
        nxt = times_linear(out[i], a[i])
        if i >= 1:
            nxt = sub(nxt, scale(pad(out[i - 1], len(nxt)), x[i]))
        out.append(nxt)
    return out
