"""Pure-Python back-off kernels; must stay line-for-line equivalent to _ckernels.pyx."""


def nested_interpolation(estimates, lambdas):
    """e = l1*e1 + (1-l1)*(l2*e2 + (1-l2)*(... e_n)); the last lambda is unused."""
    e = estimates[-1]
    for i in range(len(estimates) - 2, -1, -1):
        lam = lambdas[i]
        e = lam * estimates[i] + (1.0 - lam) * e
    return e


def backoff_terms(contexts, diversities, joints, keys, outcome, factor):
    """Per-level (estimate, lambda) lists.

    ``contexts[i]``, ``diversities[i]`` map a level-i key to its count and
    number of distinct outcomes; ``joints[i]`` maps ``(key, outcome)`` to a
    count.  Unseen contexts give estimate 0 and lambda 0.
    """
    es = []
    lams = []
    for i in range(len(keys)):
        k = keys[i]
        c = contexts[i].get(k, 0)
        if c:
            d = diversities[i][k]
            es.append(joints[i].get((k, outcome), 0) / c)
            lams.append(c / (c + factor * d))
        else:
            es.append(0.0)
            lams.append(0.0)
    return es, lams


def backoff_prob(contexts, diversities, joints, keys, outcome, factor):
    n = len(keys)
    k = keys[n - 1]
    c = contexts[n - 1].get(k, 0)
    e = joints[n - 1].get((k, outcome), 0) / c if c else 0.0
    for i in range(n - 2, -1, -1):
        k = keys[i]
        c = contexts[i].get(k, 0)
        if not c:
            continue
        lam = c / (c + factor * diversities[i][k])
        e = lam * (joints[i].get((k, outcome), 0) / c) + (1.0 - lam) * e
    return e
