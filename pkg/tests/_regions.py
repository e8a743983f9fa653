"""Shared cache of traced stability regions (test-suite helper)."""

from functools import lru_cache

from rkistab.poly import taylor_exp
from rkistab.region import trace_region


@lru_cache(maxsize=None)
def taylor_region(p: int):
    return trace_region(taylor_exp(p))
