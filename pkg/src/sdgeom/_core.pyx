# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled kernels for the truncated simplex algebra.

Behaviourally identical to ``_core_py``; masks are machine words
(row/column indices below 64, which ``nil`` enforces).
"""

BACKEND = "cython"

cdef int _unpack_bits(unsigned long long mask, int *out) nogil:
    cdef int count = 0
    cdef int pos = 0
    while mask:
        if mask & 1:
            out[count] = pos
            count += 1
        mask >>= 1
        pos += 1
    return count


cdef inline int _mono_sign(unsigned long long s1, unsigned long long t1,
                           unsigned long long s2, unsigned long long t2) nogil:
    cdef int r1[64]
    cdef int c1[64]
    cdef int r2[64]
    cdef int c2[64]
    cdef int n1, n2, i, j, inv
    n1 = _unpack_bits(s1, r1)
    _unpack_bits(t1, c1)
    n2 = _unpack_bits(s2, r2)
    _unpack_bits(t2, c2)
    inv = 0
    for i in range(n1):
        for j in range(n2):
            if (r1[i] < r2[j]) != (c1[i] < c2[j]):
                inv += 1
    return -1 if (inv & 1) else 1


def mono_mul(s1, t1, s2, t2):
    """Multiply two canonical monomials; sign 0 when the product vanishes."""
    cdef unsigned long long a = s1, b = t1, c = s2, d = t2
    if (a & c) or (b & d):
        return 0, 0, 0
    return _mono_sign(a, b, c, d), a | c, b | d


def elem_mul(dict a, dict b):
    """Product of two term maps {(rows, cols): coeff}, zeros pruned."""
    cdef dict out = {}
    cdef unsigned long long s1, t1, s2, t2
    cdef double ca, cb, cur
    cdef int sign
    cdef tuple key
    for (s1_o, t1_o), ca_o in a.items():
        s1 = s1_o
        t1 = t1_o
        ca = ca_o
        for (s2_o, t2_o), cb_o in b.items():
            s2 = s2_o
            t2 = t2_o
            if (s1 & s2) or (t1 & t2):
                continue
            cb = cb_o
            sign = _mono_sign(s1, t1, s2, t2)
            key = (s1 | s2, t1 | t2)
            cur = out.get(key, 0.0) + sign * ca * cb
            if cur == 0.0:
                if key in out:
                    del out[key]
            else:
                out[key] = cur
    return out


def elem_add(dict a, dict b):
    """Sum of two term maps, zeros pruned."""
    cdef dict out = dict(a)
    cdef double c
    for key, cb in b.items():
        c = out.get(key, 0.0) + cb
        if c == 0.0:
            if key in out:
                del out[key]
        else:
            out[key] = c
    return out


def elem_scale(double c, dict a):
    """Scalar multiple of a term map."""
    if c == 0.0:
        return {}
    return {key: c * v for key, v in a.items()}
