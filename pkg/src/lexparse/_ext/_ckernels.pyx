# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled back-off kernels; semantics identical to _pykernels.py."""


def nested_interpolation(estimates, lambdas):
    cdef Py_ssize_t i, n = len(estimates)
    cdef double e = estimates[n - 1]
    cdef double lam
    for i in range(n - 2, -1, -1):
        lam = lambdas[i]
        e = lam * <double>estimates[i] + (1.0 - lam) * e
    return e


def backoff_terms(contexts, diversities, joints, keys, outcome, double factor):
    cdef Py_ssize_t i
    cdef double c
    es = []
    lams = []
    for i in range(len(keys)):
        k = keys[i]
        c = contexts[i].get(k, 0)
        if c:
            es.append(joints[i].get((k, outcome), 0) / c)
            lams.append(c / (c + factor * <double>diversities[i][k]))
        else:
            es.append(0.0)
            lams.append(0.0)
    return es, lams


def backoff_prob(list contexts, list diversities, list joints, tuple keys, outcome,
                 double factor):
    cdef Py_ssize_t i, n = len(keys)
    cdef double c, lam, e
    cdef dict ctx, jnt
    k = keys[n - 1]
    ctx = contexts[n - 1]
    jnt = joints[n - 1]
    c = ctx.get(k, 0)
    if c:
        e = <double>jnt.get((k, outcome), 0) / c
    else:
        e = 0.0
    for i in range(n - 2, -1, -1):
        k = keys[i]
        ctx = contexts[i]
        c = ctx.get(k, 0)
        if c == 0:
            continue
        jnt = joints[i]
        lam = c / (c + factor * <double>(<dict>diversities[i])[k])
        e = lam * (<double>jnt.get((k, outcome), 0) / c) + (1.0 - lam) * e
    return e
