"""Slow, independent reference implementations used to pin expected values.

Nothing in here imports from ``rulcon``; the point is to check the package
against code that shares none of its machinery.
"""
import itertools
import math

import mpmath

mpmath.mp.dps = 40


def supcon_reference(z, labels, tau, tolerance=0):
    """Double-loop supervised contrastive loss in 40-digit arithmetic.

    Sum over anchors of the mean (over positives) negative log-softmax of the
    positive's similarity among all other samples. Anchors without positives
    contribute nothing.
    """
    n = len(z)
    sims = [[mpmath.fsum(mpmath.mpf(a) * mpmath.mpf(b) for a, b in zip(z[i], z[j])) / mpmath.mpf(tau)
             for j in range(n)] for i in range(n)]
    total = mpmath.mpf(0)
    for i in range(n):
        others = [a for a in range(n) if a != i]
        positives = [p for p in others if abs(labels[p] - labels[i]) <= tolerance]
        if not positives:
            continue
        denom = mpmath.fsum(mpmath.exp(sims[i][a]) for a in others)
        term = mpmath.mpf(0)
        for p in positives:
            term += -mpmath.log(mpmath.exp(sims[i][p]) / denom)
        total += term / len(positives)
    return float(total)


def count_same_label_partners(labels):
    """For every sample, how many other samples carry the same label."""
    return [sum(1 for j, other in enumerate(labels) if j != i and other == lab)
            for i, lab in enumerate(labels)]


def idealized_pool_labels(n_objects, m, d):
    """HS and RUL labels for N objects with m samples each split into d equal bands."""
    per_band = m // d
    hs, rul = [], []
    for _obj, j in itertools.product(range(n_objects), range(m)):
        hs.append(j // per_band)
        rul.append(j)
    return hs, rul


def rmse_reference(deltas):
    return math.sqrt(math.fsum(x * x for x in deltas) / len(deltas))


def score_reference(deltas):
    total = 0.0
    for x in deltas:
        total += math.exp(-x / 13.0) - 1.0 if x <= 0 else math.exp(x / 10.0) - 1.0
    return total


def central_difference(f, x, step=1e-5):
    """Gradient of scalar f at flat list x by central differences."""
    grad = []
    for k in range(len(x)):
        up = list(x)
        down = list(x)
        up[k] += step
        down[k] -= step
        grad.append((f(up) - f(down)) / (2 * step))
    return grad
