"""NumPy implementations of the hot kernels.

These are the fallback for the compiled extension in ``_kernels_cy``; both
expose the same functions over uint8 coefficient arrays (entries reduced
mod p, p < 256).  Accumulation is done in wider integer dtypes and reduced
mod p in chunks sized so no intermediate can overflow.
"""

import numpy as np

BACKEND = "numpy"


def mul_dense(a, b, p, out_len):
    """Truncated product of two dense coefficient arrays mod p."""
    n = min(len(a), out_len)
    m = min(len(b), out_len)
    full = np.convolve(a[:n].astype(np.int64), b[:m].astype(np.int64))
    out = np.zeros(out_len, dtype=np.uint8)
    k = min(out_len, len(full))
    out[:k] = (full[:k] % p).astype(np.uint8)
    return out


def mul_sparse(dense, exps, coefs, p, out_len):
    """Truncated product of a dense array by a sparse one (exponent/coef lists) mod p."""
    acc = np.zeros(out_len, dtype=np.uint32)
    d32 = dense[:out_len].astype(np.uint32)
    # chunk so that chunk_terms * (p-1)^2 stays below 2^32
    chunk = max(1, (2**32 - 1) // ((p - 1) * (p - 1) + 1) - 1)
    scaled = {}
    for start in range(0, len(exps), chunk):
        for e, c in zip(exps[start : start + chunk], coefs[start : start + chunk]):
            e = int(e)
            if e >= out_len:
                break
            c = int(c)
            if c not in scaled:
                scaled[c] = d32 * np.uint32(c)
            acc[e:] += scaled[c][: out_len - e]
        if start + chunk < len(exps):
            acc %= p
    return (acc % p).astype(np.uint8)


def sigma_sieve(prec, e, p):
    """sigma_e(n) mod p for 0 <= n < prec (index 0 set to 0)."""
    acc = np.zeros(prec, dtype=np.uint32)
    chunk = max(1, (2**32 - 1) // p - 1)
    for start in range(1, prec, chunk):
        for d in range(start, min(start + chunk, prec)):
            acc[d::d] += pow(d, e, p)
        acc %= p
    return acc.astype(np.uint8)


def count_segments(table, bounds, p):
    """Cumulative nonzero counts and per-value counts at each bound.

    ``bounds`` must be increasing.  Returns (totals, by_value) with
    totals[i] = #{n < bounds[i] : table[n] != 0} and
    by_value[i, v] = #{n < bounds[i] : table[n] == v}.
    """
    k = len(bounds)
    totals = np.zeros(k, dtype=np.int64)
    by_value = np.zeros((k, p), dtype=np.int64)
    cum = np.zeros(p, dtype=np.int64)
    prev = 0
    for i, b in enumerate(bounds):
        seg = table[prev:b]
        cum += np.bincount(seg, minlength=p)[:p]
        by_value[i] = cum
        totals[i] = cum[1:].sum()
        prev = b
    return totals, by_value


def count_segments_masked(table, mask, bounds, p):
    """Same as count_segments but restricted to indices where mask is nonzero."""
    k = len(bounds)
    totals = np.zeros(k, dtype=np.int64)
    by_value = np.zeros((k, p), dtype=np.int64)
    cum = np.zeros(p, dtype=np.int64)
    prev = 0
    for i, b in enumerate(bounds):
        seg = table[prev:b][mask[prev:b] != 0]
        cum += np.bincount(seg, minlength=p)[:p]
        by_value[i] = cum
        totals[i] = cum[1:].sum()
        prev = b
    return totals, by_value
