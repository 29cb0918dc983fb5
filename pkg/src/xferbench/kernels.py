"""Hot numeric kernels: probe SGD epochs and pairwise rank-correlation sums.

Each kernel has a numba @njit build and a pure-numpy fallback. The numba
path is used by default; set XFERBENCH_NO_NUMBA=1 to force the fallback
(benchmarks/bench_kernels.py compares the two).
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("XFERBENCH_NO_NUMBA", "").lower() not in (
    "1",
    "true",
    "yes",
)
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False


def _sgd_head_epochs_np(x, y, w, b, order, batch_size, lr):
    n_epochs, n = order.shape
    n_classes = w.shape[0]
    losses = np.zeros(n_epochs)
    for e in range(n_epochs):
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[e, start : start + batch_size]
            xb = x[idx]
            logits = xb @ w.T + b
            m = logits.max(axis=1, keepdims=True)
            ex = np.exp(logits - m)
            p = ex / ex.sum(axis=1, keepdims=True)
            yb = y[idx]
            total += -float(
                np.sum(np.log(p[np.arange(len(idx)), yb].astype(np.float64)))
            )
            g = p.copy()
            g[np.arange(len(idx)), yb] -= 1.0
            g /= np.float32(len(idx))
            w -= np.float32(lr) * (g.T @ xb)
            b -= np.float32(lr) * g.sum(axis=0)
        losses[e] = total / n
    return losses


def _sgd_adapter_epochs_np(x, y, a, w, b, order, batch_size, lr):
    n_epochs, n = order.shape
    losses = np.zeros(n_epochs)
    for e in range(n_epochs):
        total = 0.0
        for start in range(0, n, batch_size):
            idx = order[e, start : start + batch_size]
            xb = x[idx]
            h = xb @ a.T
            logits = h @ w.T + b
            m = logits.max(axis=1, keepdims=True)
            ex = np.exp(logits - m)
            p = ex / ex.sum(axis=1, keepdims=True)
            yb = y[idx]
            total += -float(
                np.sum(np.log(p[np.arange(len(idx)), yb].astype(np.float64)))
            )
            g = p.copy()
            g[np.arange(len(idx)), yb] -= 1.0
            g /= np.float32(len(idx))
            gh = g @ w
            w -= np.float32(lr) * (g.T @ h)
            b -= np.float32(lr) * g.sum(axis=0)
            a -= np.float32(lr) * (gh.T @ xb)
        losses[e] = total / n
    return losses


def _weighted_pair_sums_np(g, t, w):
    sg = np.sign(g[:, None] - g[None, :])
    st = np.sign(t[:, None] - t[None, :])
    pw = w[:, None] + w[None, :]
    iu = np.triu_indices(len(g), k=1)
    return float(np.sum(pw[iu] * sg[iu] * st[iu])), float(np.sum(pw[iu]))


if USE_NUMBA:

    @njit(cache=True)
    def _sgd_head_epochs_nb(x, y, w, b, order, batch_size, lr):
        n_epochs, n = order.shape
        n_classes, dim = w.shape
        lr32 = np.float32(lr)
        losses = np.zeros(n_epochs)
        for e in range(n_epochs):
            total = 0.0
            for start in range(0, n, batch_size):
                stop = min(start + batch_size, n)
                bs = stop - start
                inv = np.float32(1.0 / bs)
                gw = np.zeros((n_classes, dim), dtype=np.float32)
                gb = np.zeros(n_classes, dtype=np.float32)
                for k in range(start, stop):
                    i = order[e, k]
                    logits = np.empty(n_classes, dtype=np.float32)
                    for c in range(n_classes):
                        acc = b[c]
                        for d in range(dim):
                            acc += w[c, d] * x[i, d]
                        logits[c] = acc
                    m = logits[0]
                    for c in range(1, n_classes):
                        if logits[c] > m:
                            m = logits[c]
                    z = np.float32(0.0)
                    for c in range(n_classes):
                        logits[c] = np.exp(logits[c] - m)
                        z += logits[c]
                    yi = y[i]
                    total += -np.log(np.float64(logits[yi] / z))
                    for c in range(n_classes):
                        g = logits[c] / z
                        if c == yi:
                            g -= np.float32(1.0)
                        g *= inv
                        gb[c] += g
                        for d in range(dim):
                            gw[c, d] += g * x[i, d]
                for c in range(n_classes):
                    b[c] -= lr32 * gb[c]
                    for d in range(dim):
                        w[c, d] -= lr32 * gw[c, d]
            losses[e] = total / n
        return losses

    @njit(cache=True)
    def _sgd_adapter_epochs_nb(x, y, a, w, b, order, batch_size, lr):
        n_epochs, n = order.shape
        n_classes, dim = w.shape
        lr32 = np.float32(lr)
        losses = np.zeros(n_epochs)
        for e in range(n_epochs):
            total = 0.0
            for start in range(0, n, batch_size):
                stop = min(start + batch_size, n)
                bs = stop - start
                inv = np.float32(1.0 / bs)
                ga = np.zeros((dim, dim), dtype=np.float32)
                gw = np.zeros((n_classes, dim), dtype=np.float32)
                gb = np.zeros(n_classes, dtype=np.float32)
                for k in range(start, stop):
                    i = order[e, k]
                    h = np.empty(dim, dtype=np.float32)
                    for d in range(dim):
                        acc = np.float32(0.0)
                        for d2 in range(dim):
                            acc += a[d, d2] * x[i, d2]
                        h[d] = acc
                    logits = np.empty(n_classes, dtype=np.float32)
                    for c in range(n_classes):
                        acc = b[c]
                        for d in range(dim):
                            acc += w[c, d] * h[d]
                        logits[c] = acc
                    m = logits[0]
                    for c in range(1, n_classes):
                        if logits[c] > m:
                            m = logits[c]
                    z = np.float32(0.0)
                    for c in range(n_classes):
                        logits[c] = np.exp(logits[c] - m)
                        z += logits[c]
                    yi = y[i]
                    total += -np.log(np.float64(logits[yi] / z))
                    gh = np.zeros(dim, dtype=np.float32)
                    for c in range(n_classes):
                        g = logits[c] / z
                        if c == yi:
                            g -= np.float32(1.0)
                        g *= inv
                        gb[c] += g
                        for d in range(dim):
                            gw[c, d] += g * h[d]
                            gh[d] += g * w[c, d]
                    for d in range(dim):
                        for d2 in range(dim):
                            ga[d, d2] += gh[d] * x[i, d2]
                for d in range(dim):
                    for d2 in range(dim):
                        a[d, d2] -= lr32 * ga[d, d2]
                for c in range(n_classes):
                    b[c] -= lr32 * gb[c]
                    for d in range(dim):
                        w[c, d] -= lr32 * gw[c, d]
            losses[e] = total / n
        return losses

    @njit(cache=True)
    def _weighted_pair_sums_nb(g, t, w):
        m = len(g)
        num = 0.0
        den = 0.0
        for i in range(m):
            for j in range(i + 1, m):
                pw = w[i] + w[j]
                dg = g[i] - g[j]
                dt = t[i] - t[j]
                sg = 0.0 if dg == 0.0 else (1.0 if dg > 0.0 else -1.0)
                st = 0.0 if dt == 0.0 else (1.0 if dt > 0.0 else -1.0)
                num += pw * sg * st
                den += pw
        return num, den

    sgd_head_epochs = _sgd_head_epochs_nb
    sgd_adapter_epochs = _sgd_adapter_epochs_nb
    weighted_pair_sums = _weighted_pair_sums_nb
else:
    sgd_head_epochs = _sgd_head_epochs_np
    sgd_adapter_epochs = _sgd_adapter_epochs_np
    weighted_pair_sums = _weighted_pair_sums_np
