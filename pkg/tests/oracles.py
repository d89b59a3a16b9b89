"""Slow, literal reference implementations used to cross-check the package.

Nothing here imports the package; everything is plain Python floats and loops.
"""

import math


def scan_range(x):
    lo = hi = x[0]
    for v in x[1:]:
        lo, hi = min(lo, v), max(hi, v)
    return hi - lo


def pow2_at_least(v):
    """Smallest 2**k >= v by stepping k; v > 0."""
    k = 0
    while 2.0 ** k < v:
        k += 1
    while k > -1074 and 2.0 ** (k - 1) >= v:
        k -= 1
    return 2.0 ** k


def best_index(X, T):
    """argmax X, ties by smallest T, then smallest index (exhaustive)."""
    best = 0
    for k in range(1, len(X)):
        if X[k] > X[best] or (X[k] == X[best] and T[k] < T[best]):
            best = k
    return best


def stats_from_scratch(xs, ps):
    """Recompute every statistic of the final round from the raw rounds."""
    N = len(xs[0])
    n = len(xs)
    X = [sum(xs[t][k] for t in range(n)) for k in range(N)]
    Q = [sum(xs[t][k] ** 2 for t in range(n)) for k in range(N)]
    A = [sum(abs(xs[t][k]) for t in range(n)) for k in range(N)]
    xh = [sum(p * v for p, v in zip(ps[t], xs[t])) for t in range(n)]
    R = [sum((xs[t][k] - xh[t]) ** 2 for t in range(n)) for k in range(N)]
    var = [sum(p * v * v for p, v in zip(ps[t], xs[t])) - xh[t] ** 2 for t in range(n)]
    q_stars, ratio, mag = [], 0.0, None
    for s in range(1, n + 1):
        Xs = [sum(xs[t][k] for t in range(s)) for k in range(N)]
        Qs = [sum(xs[t][k] ** 2 for t in range(s)) for k in range(N)]
        q_stars.append(Qs[best_index(Xs, Qs)])
        big = max(abs(v) for v in xs[s - 1])
        if big > 0:
            cand = pow2_at_least(big)
            mag = cand if mag is None else max(mag, cand)
        if mag is not None:
            ratio = max(ratio, q_stars[-1] / mag ** 2)
    k = best_index(X, Q)
    ranges = [scan_range(r) for r in xs]
    return {
        "cum_payoff": X,
        "quad": Q,
        "abs_sum": A,
        "translated_quad": R,
        "best_index": k,
        "best_cum": X[k],
        "q_star": Q[k],
        "q_star_envelope": max(q_stars),
        "cum_reward": sum(xh),
        "cum_variance": sum(var),
        "magnitude": mag,
        "abs_max": max(abs(v) for r in xs for v in r),
        "range_max": max(ranges),
        "range_sq_sum": sum(e * e for e in ranges),
        "ratio_envelope": ratio,
    }


def _normalize(w):
    s = sum(w)
    return [v / s for v in w]


def prod_plain(xs, eta):
    """prod with raw multiplicative weights (short sequences only)."""
    w = [1.0] * len(xs[0])
    out = []
    for x in xs:
        out.append(_normalize(w))
        w = [wi * (1 + eta * xi) for wi, xi in zip(w, x)]
    return out


def _q_star(cum, quad):
    return quad[best_index(cum, quad)]


def prodq_plain(xs, M):
    N = len(xs[0])
    ln = math.log(N)
    r = 0
    eta = min(1 / (2 * M), math.sqrt(ln) / M)
    w = [1.0] * N
    cum, quad = [0.0] * N, [0.0] * N
    out, ends = [], []
    for t, x in enumerate(xs, start=1):
        out.append(_normalize(w))
        w = [wi * (1 + eta * xi) for wi, xi in zip(w, x)]
        cum = [c + v for c, v in zip(cum, x)]
        quad = [c + v * v for c, v in zip(quad, x)]
        if _q_star(cum, quad) > 4 ** r * M * M:
            ends.append(t)
            r += 1
            eta = min(1 / (2 * M), math.sqrt(ln) / (2 ** r * M))
            w = [1.0] * N
    return out, ends


def prodm_plain(xs, Q):
    N = len(xs[0])
    anchor = math.sqrt(Q / (4 * math.log(N)))
    eta = 1 / (2 * anchor)
    w = [1.0] * N
    mag = None
    out, ends = [], []
    for t, x in enumerate(xs, start=1):
        out.append(_normalize(w))
        big = max(abs(v) for v in x)
        if big > 0:
            mag = pow2_at_least(big) if mag is None else max(mag, pow2_at_least(big))
        if mag is not None and mag > anchor:
            ends.append(t)
            anchor = mag
            eta = 1 / (2 * anchor)
            w = [1.0] * N
        else:
            w = [wi * (1 + eta * xi) for wi, xi in zip(w, x)]
    return out, ends


def prodmq_plain(xs):
    N = len(xs[0])
    ln = math.log(N)
    w = [1.0] * N
    cum, quad = [0.0] * N, [0.0] * N
    mag = None
    m_r = None
    s_prev = s = 0
    eta = None
    out, ends = [], []
    for t, x in enumerate(xs, start=1):
        out.append(_normalize(w))
        cum = [c + v for c, v in zip(cum, x)]
        quad = [c + v * v for c, v in zip(quad, x)]
        big = max(abs(v) for v in x)
        if big > 0:
            mag = pow2_at_least(big) if mag is None else max(mag, pow2_at_least(big))
        if mag is None:
            continue
        if m_r is None:
            m_r = mag
            eta = min(1 / (2 * m_r), math.sqrt(ln) / m_r)
        if mag > m_r:
            s_prev, s, m_r = s_prev + s, 0, mag
        else:
            w = [wi * (1 + eta * xi) for wi, xi in zip(w, x)]
            if _q_star(cum, quad) <= 4 ** (s_prev + s) * mag ** 2:
                continue
            s += 1
        ends.append(t)
        eta = min(1 / (2 * m_r), math.sqrt(ln) / (2 ** (s_prev + s) * m_r))
        w = [1.0] * N
    return out, ends


C_REF = math.sqrt(2 * (math.sqrt(2) - 1) / (math.e - 2))


def wm_plain(xs, schedule, eta=None, E=None):
    N = len(xs[0])
    ln = math.log(N)
    cum = [0.0] * N
    V = 0.0
    e_track = None
    out = []
    for t, x in enumerate(xs, start=1):
        if schedule == "fixed":
            rate = eta
        else:
            cap = 1 / E if schedule == "known_range" else (math.inf if e_track is None else 1 / e_track)
            rate = min(cap, C_REF * math.sqrt(ln / V)) if V > 0 else cap
        if t == 1 or math.isinf(rate):
            p = [1 / N] * N
        else:
            top = max(cum)
            p = _normalize([math.exp(rate * (c - top)) for c in cum])
        out.append(p)
        xh = sum(pi * v for pi, v in zip(p, x))
        V += sum(pi * (v - xh) ** 2 for pi, v in zip(p, x))
        cum = [c + v for c, v in zip(cum, x)]
        e = scan_range(x)
        if e > 0:
            e_track = pow2_at_least(e) if e_track is None else max(e_track, pow2_at_least(e))
    return out


def phi_plain(p, eta, x):
    xh = sum(pi * v for pi, v in zip(p, x))
    return math.log(sum(pi * math.exp(eta * (v - xh)) for pi, v in zip(p, x))) / eta
