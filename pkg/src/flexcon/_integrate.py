"""Small numeric toolkit: adaptive Simpson quadrature, golden-section
minimization, and bracketed bisection.

These are deliberately self-contained so the behavior of every validation
oracle is pinned by this module, not by a third-party solver version.
"""

from __future__ import annotations

from collections.abc import Callable

GOLDEN = 0.6180339887498949  # (sqrt(5) - 1) / 2


class ConvergenceError(RuntimeError):
    """A bracketed solver or adaptive integrator failed to converge."""


def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_depth: int = 48,
) -> float:
    """Integrate f over [a, b] by adaptive Simpson refinement.

    tol is an absolute tolerance on the whole interval; it is split in half
    at every subdivision. Raises ConvergenceError if max_depth is exhausted
    before the local error estimate falls under tolerance.
    """
    if a == b:
        return 0.0
    if b < a:
        return -adaptive_simpson(f, b, a, tol, max_depth)
    fa, fb = f(a), f(b)
    m = 0.5 * (a + b)
    fm = f(m)
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _simpson_step(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = f(lm), f(rm)
    left = (m - a) / 6.0 * (fa + 4.0 * flm + fm)
    right = (b - m) / 6.0 * (fm + 4.0 * frm + fb)
    err = left + right - whole
    if abs(err) <= 15.0 * tol:
        return left + right + err / 15.0
    # a jump squeezed below float resolution contributes at most width * jump
    if (b - a) <= 1e-12 * (1.0 + abs(a) + abs(b)):
        return left + right
    if depth <= 0:
        raise ConvergenceError(
            f"adaptive Simpson did not converge on [{a}, {b}] (residual {err:.3e})"
        )
    return _simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) + _simpson_step(
        f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1
    )


def golden_section_min(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-8,
    coarse: int = 64,
) -> tuple[float, float]:
    """Minimize f on [lo, hi]; returns (argmin, min value).

    A coarse scan brackets the best grid point first, so non-convex
    objectives with a single dominant basin are not trapped in side lobes.
    """
    if hi < lo:
        raise ValueError("empty bracket")
    if hi == lo:
        return lo, f(lo)
    step = (hi - lo) / coarse
    xs = [lo + k * step for k in range(coarse + 1)]
    vals = [f(x) for x in xs]
    k_best = min(range(len(xs)), key=vals.__getitem__)
    a = xs[max(0, k_best - 1)]
    b = xs[min(coarse, k_best + 1)]

    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = f(x1), f(x2)
    while (b - a) > tol:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = f(x2)
    x = 0.5 * (a + b)
    fx = f(x)
    # never report worse than the best coarse-scan point
    if vals[k_best] < fx:
        return xs[k_best], vals[k_best]
    return x, fx


def bisect_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol: float = 1e-10,
    max_iter: int = 200,
) -> float:
    """Find a root of f in [lo, hi] by bisection; f(lo) and f(hi) must differ in sign."""
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0.0:
        raise ValueError(f"no sign change on [{lo}, {hi}]: f(lo)={flo:.3e}, f(hi)={fhi:.3e}")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        fmid = f(mid)
        if fmid == 0.0 or (hi - lo) <= tol:
            return mid
        if flo * fmid < 0.0:
            hi = mid
        else:
            lo, flo = mid, fmid
    raise ConvergenceError(f"bisection stalled on [{lo}, {hi}]")
