"""Compiled inner loops for the double-precision paths.

Every kernel evaluates the map as ``t = 1 - beta*x`` followed by ``(r*x)*t``,
the same order used by :func:`logimap.mapcore.step`, so compiled and
interpreted trajectories agree bit for bit.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit


@njit(cache=True)
def iterate_double(r, beta, x0, n):
    out = np.empty(n + 1)
    x = x0
    out[0] = x
    for k in range(n):
        t = 1.0 - beta * x
        x = r * x * t
        out[k + 1] = x
    return out


@njit(cache=True)
def neumaier_cumsum(terms):
    n = terms.size
    out = np.empty(n + 1)
    total = 0.0
    comp = 0.0
    out[0] = 0.0
    for i in range(n):
        v = terms[i]
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
        out[i + 1] = total + comp
    return out


@njit(cache=True)
def log_iterates(r, x0, n, threshold):
    """ln x_k for x_{k+1} = r x_k (1 - x_k), k = 0..n.

    Direct iteration while x_k >= threshold, then the log-domain recursion
    ln x_{k+1} = ln x_k + [ln r + log1p(-x_k)] with the running sum
    compensated (Neumaier).
    """
    out = np.empty(n + 1)
    x = x0
    out[0] = math.log(x0)
    k = 0
    while k < n and x >= threshold:
        t = 1.0 - x
        x = r * x * t
        k += 1
        out[k] = math.log(x) if x > 0.0 else -np.inf
    if k == n:
        return out, n
    switch = k
    total = out[k]
    comp = 0.0
    log_r = math.log(r)
    while k < n:
        v = log_r + math.log1p(-math.exp(total + comp))
        t = total + v
        if abs(total) >= abs(v):
            comp += (total - t) + v
        else:
            comp += (v - t) + total
        total = t
        k += 1
        out[k] = total + comp
    return out, switch
