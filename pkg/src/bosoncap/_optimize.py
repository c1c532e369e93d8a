import math

_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


def golden_max(fn, lo, hi, xtol=1e-12, max_iter=500):
    """Maximize a unimodal ``fn`` on ``[lo, hi]`` by golden-section search.

    The endpoints are also evaluated, so maxima sitting on the boundary are
    returned exactly. Ties go to the smaller argument.
    """
    a, b = float(lo), float(hi)
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = fn(c), fn(d)
    for _ in range(max_iter):
        if b - a <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = fn(d)
    best_x, best_f = (c, fc) if fc >= fd else (d, fd)
    for x in (float(hi), float(lo)):
        fx = fn(x)
        if fx > best_f or (fx == best_f and x < best_x):
            best_x, best_f = x, fx
    return best_x, best_f
