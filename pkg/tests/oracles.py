"""Independent brute-force oracles used by the test suite.

Deliberately written with plain loops and no imports from the package's
analysis internals, so they stay an independent route for every dual check.
"""

import statistics


def best_single_split(values):
    """Max-likelihood single change index: split minimizing total SSE.

    Returns the index k (1 <= k <= n-1) such that segments values[:k] and
    values[k:] have minimal summed squared error around their own means.
    """
    n = len(values)
    best_k, best_sse = 1, float("inf")
    for k in range(1, n):
        pre = values[:k]
        post = values[k:]
        mean_pre = sum(pre) / len(pre)
        mean_post = sum(post) / len(post)
        sse = sum((x - mean_pre) ** 2 for x in pre) + sum((x - mean_post) ** 2 for x in post)
        if sse < best_sse:
            best_sse = sse
            best_k = k
    return best_k


def rolling_robust_z(values, window):
    """robust_z per index >= window using the trailing window, loop-computed."""
    out = {}
    for i in range(window, len(values)):
        win = sorted(values[i - window : i])
        med = statistics.median(win)
        mad = statistics.median(sorted(abs(x - med) for x in win))
        denom = 1.4826 * mad if mad > 0 else (1e-9 * abs(med) + 1e-12)
        out[i] = (values[i] - med) / denom
    return out


def peer_scores(series_by_element):
    """Outlier score per element from windowed medians, loop-computed."""
    medians = {el: statistics.median(vals) for el, vals in series_by_element.items()}
    center = statistics.median(medians.values())
    mad = statistics.median(sorted(abs(m - center) for m in medians.values()))
    spread = 1.4826 * mad if mad > 0 else (1e-9 * abs(center) + 1e-12)
    return {el: abs(m - center) / spread for el, m in medians.items()}


def weighted_mean(values, weights):
    total_w = sum(weights)
    if total_w == 0:
        return sum(values) / len(values)
    return sum(v * w for v, w in zip(values, weights)) / total_w
