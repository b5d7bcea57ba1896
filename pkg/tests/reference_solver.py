"""Independent reference minimizer for the penalized logistic objective.

Accelerated proximal gradient (FISTA) on theta = (bias, w): the smooth part is
the mean logistic loss plus the ridge term, the proximal step applies
soft-thresholding to the weight coordinates only. Deliberately shares no code
with the package solver so the two can cross-check each other.
"""

import numpy as np


def _soft_threshold(v, t):
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def reference_fit(x, y, lam, alpha, iterations=30_000, stop=1e-14):
    """Return (bias, w) minimizing
    mean log(1+e^z) - y z + lam (alpha |w|_1 + (1-alpha)/2 |w|_2^2),
    z = bias + x w."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    m, l = x.shape
    a = np.hstack([np.ones((m, 1)), x])
    lip = 0.25 * np.linalg.eigvalsh(a.T @ a / m)[-1] + lam * (1.0 - alpha)
    step = 1.0 / lip
    theta = np.zeros(l + 1)
    momentum = theta.copy()
    t_acc = 1.0
    thresh = step * lam * alpha
    for _ in range(iterations):
        z = a @ momentum
        grad = a.T @ (1.0 / (1.0 + np.exp(-z)) - y) / m
        grad[1:] += lam * (1.0 - alpha) * momentum[1:]
        nxt = momentum - step * grad
        nxt[1:] = _soft_threshold(nxt[1:], thresh)
        t_next = (1.0 + np.sqrt(1.0 + 4.0 * t_acc * t_acc)) / 2.0
        momentum = nxt + ((t_acc - 1.0) / t_next) * (nxt - theta)
        delta = float(np.max(np.abs(nxt - theta)))
        theta = nxt
        t_acc = t_next
        if delta < stop:
            break
    return theta[0], theta[1:]


def reference_objective(x, y, bias, w, lam, alpha):
    z = bias + np.asarray(x, dtype=np.float64) @ w
    y = np.asarray(y, dtype=np.float64)
    loss = float(np.mean(np.logaddexp(0.0, z) - y * z))
    pen = lam * (alpha * float(np.abs(w).sum()) + 0.5 * (1.0 - alpha) * float(w @ w))
    return loss + pen
