"""Pure-Python kernels for the truncated simplex algebra.

Monomials are pairs of bitmasks (rows, cols): bit i-1 of `rows` set means
vertex-displacement index i participates, likewise for coordinate indices in
`cols`.  The canonical monomial pairs the sorted row list with the sorted
column list position by position, so the two masks determine the monomial.

A drop-in compiled twin lives in ``_core.pyx``; keep the two in sync.
"""

BACKEND = "python"


def _bit_list(mask):
    out = []
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
    return out


def mono_mul(s1, t1, s2, t2):
    """Multiply two canonical monomials.

    Returns (sign, rows, cols); sign is 0 when the product vanishes
    (shared row or shared column).
    """
    if (s1 & s2) or (t1 & t2):
        return 0, 0, 0
    r1 = _bit_list(s1)
    c1 = _bit_list(t1)
    r2 = _bit_list(s2)
    c2 = _bit_list(t2)
    inv = 0
    for i in range(len(r1)):
        ri = r1[i]
        ci = c1[i]
        for j in range(len(r2)):
            if (ri < r2[j]) != (ci < c2[j]):
                inv += 1
    sign = -1 if (inv & 1) else 1
    return sign, s1 | s2, t1 | t2


def elem_mul(a, b):
    """Product of two term maps {(rows, cols): coeff}, zeros pruned."""
    out = {}
    for (s1, t1), ca in a.items():
        for (s2, t2), cb in b.items():
            if (s1 & s2) or (t1 & t2):
                continue
            sign, s, t = mono_mul(s1, t1, s2, t2)
            key = (s, t)
            c = out.get(key, 0.0) + sign * ca * cb
            if c == 0.0:
                if key in out:
                    del out[key]
            else:
                out[key] = c
    return out


def elem_add(a, b):
    """Sum of two term maps, zeros pruned."""
    out = dict(a)
    for key, cb in b.items():
        c = out.get(key, 0.0) + cb
        if c == 0.0:
            if key in out:
                del out[key]
        else:
            out[key] = c
    return out


def elem_scale(c, a):
    """Scalar multiple of a term map."""
    if c == 0.0:
        return {}
    return {key: c * v for key, v in a.items()}
