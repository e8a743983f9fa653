"""Exact order-condition checking via rooted trees (test-suite helper).

Trees are canonical nested tuples of child trees; the elementary weight of a
tree against (A, b) is computed in exact rational arithmetic.
"""

from fractions import Fraction
from functools import lru_cache


@lru_cache(maxsize=None)
def trees_of_order(n: int):
    """All rooted trees with n nodes, as sorted tuples of child trees."""
    if n == 1:
        return ((),)
    out = set()
    # partition n-1 nodes among child subtrees, built recursively
    def extend(remaining, min_child, children):
        if remaining == 0:
            out.add(tuple(sorted(children)))
            return
        for k in range(1, remaining + 1):
            for t in trees_of_order(k):
                if (k, t) >= min_child:
                    extend(remaining - k, (k, t), children + [t])
    extend(n - 1, (0, ()), [])
    return tuple(sorted(out))


def density(tree) -> int:
    g = len_tree(tree)
    for child in tree:
        g *= density(child)
    return g


def len_tree(tree) -> int:
    return 1 + sum(len_tree(c) for c in tree)


def _phi_vec(tree, A, s, cache):
    if tree in cache:
        return cache[tree]
    vec = [Fraction(1)] * s
    for child in tree:
        cv = _phi_vec(child, A, s, cache)
        Acv = [sum((A[i][j] * cv[j] for j in range(s)), Fraction(0))
               for i in range(s)]
        vec = [vec[i] * Acv[i] for i in range(s)]
    cache[tree] = vec
    return vec


def order_residuals(A, b, order: int):
    """{tree: b.phi(tree) - 1/density} for all trees up to the given order."""
    s = len(b)
    A = [[Fraction(x) for x in row] for row in A]
    b = [Fraction(x) for x in b]
    cache = {}
    out = {}
    for n in range(1, order + 1):
        for t in trees_of_order(n):
            phi = _phi_vec(t, A, s, cache)
            val = sum((b[i] * phi[i] for i in range(s)), Fraction(0))
            out[t] = val - Fraction(1, density(t))
    return out


def attained_order(A, b, max_order: int = 9) -> int:
    s = len(b)
    A = [[Fraction(x) for x in row] for row in A]
    bb = [Fraction(x) for x in b]
    cache = {}
    for n in range(1, max_order + 1):
        for t in trees_of_order(n):
            phi = _phi_vec(t, A, s, cache)
            val = sum((bb[i] * phi[i] for i in range(s)), Fraction(0))
            if val != Fraction(1, density(t)):
                return n - 1
    return max_order


def attained_order_float(A, b, max_order: int = 9, tol: float = 1e-13) -> int:
    """Like attained_order, but judging residuals in floats; needed for
    published tableaus whose rational entries are rounded decimals."""
    s = len(b)
    A = [[Fraction(x) for x in row] for row in A]
    bb = [Fraction(x) for x in b]
    cache = {}
    for n in range(1, max_order + 1):
        for t in trees_of_order(n):
            phi = _phi_vec(t, A, s, cache)
            val = sum((bb[i] * phi[i] for i in range(s)), Fraction(0))
            if abs(float(val - Fraction(1, density(t)))) > tol:
                return n - 1
    return max_order
