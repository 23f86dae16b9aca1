"""Dense linear algebra over F_p for the small matrices of Hecke modules.

Everything works on int64 NumPy arrays with entries in [0, p); dimensions
stay below the module-size cap (64), so cubic algorithms are fine.
"""

import numpy as np


def identity(n, p):
    return np.eye(n, dtype=np.int64) % p


def matmul(a, b, p):
    return (a @ b) % p


def matvec(v, m, p):
    """Row vector times matrix."""
    return (v @ m) % p


def matpow(a, e, p):
    result = identity(a.shape[0], p)
    base = a % p
    while e:
        if e & 1:
            result = matmul(result, base, p)
        e >>= 1
        if e:
            base = matmul(base, base, p)
    return result


def rref(mat, p):
    """Reduced row echelon form; returns (rref matrix, pivot column list)."""
    m = mat.astype(np.int64) % p
    rows, cols = m.shape
    pivots = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.flatnonzero(m[r:, c])
        if len(nz) == 0:
            continue
        i = r + nz[0]
        m[[r, i]] = m[[i, r]]
        m[r] = (m[r] * pow(int(m[r, c]), p - 2, p)) % p
        for j in range(rows):
            if j != r and m[j, c]:
                m[j] = (m[j] - m[j, c] * m[r]) % p
        pivots.append(c)
        r += 1
    return m, pivots


def rank(mat, p):
    return len(rref(mat, p)[1])


def det(mat, p):
    m = mat.astype(np.int64) % p
    n = m.shape[0]
    d = 1
    for c in range(n):
        nz = np.flatnonzero(m[c:, c])
        if len(nz) == 0:
            return 0
        i = c + nz[0]
        if i != c:
            m[[c, i]] = m[[i, c]]
            d = -d
        d = d * int(m[c, c]) % p
        inv = pow(int(m[c, c]), p - 2, p)
        for j in range(c + 1, n):
            if m[j, c]:
                m[j] = (m[j] - m[j, c] * inv * m[c]) % p
    return d % p


def is_nilpotent(mat, p):
    return not matpow(mat, mat.shape[0], p).any()


def nullspace(mat, p):
    """Basis rows of {x : x @ mat^T = 0}, i.e. kernel of the row-action x -> x @ mat.

    Computed as the classical right-kernel of mat^T.
    """
    m, pivots = rref(mat.T % p, p)
    n = mat.shape[0]
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.int64)
    for k, c in enumerate(free):
        basis[k, c] = 1
        for r, pc in enumerate(pivots):
            basis[k, pc] = (-m[r, c]) % p
    return basis


def solve_in_rowspan(rows, vec, p):
    """Coefficients x with x @ rows == vec, or None if vec is outside the span."""
    k = rows.shape[0]
    aug = np.concatenate([rows.T % p, (vec % p).reshape(-1, 1)], axis=1)
    m, pivots = rref(aug, p)
    if aug.shape[1] - 1 in pivots:
        return None
    x = np.zeros(k, dtype=np.int64)
    for r, c in enumerate(pivots):
        x[c] = m[r, -1]
    return x


def row_basis(mat, p):
    """Independent rows spanning the row space (rref rows, zero rows dropped)."""
    m, pivots = rref(mat, p)
    return m[: len(pivots)]


def min_poly(mat, p):
    """Minimal polynomial coefficients [c_0, ..., c_{d-1}, 1] of mat over F_p."""
    n = mat.shape[0]
    powers = [identity(n, p).ravel()]
    while True:
        d = len(powers)
        stacked = np.stack(powers)
        nxt = matpow(mat, d, p).ravel()
        x = solve_in_rowspan(stacked, nxt, p)
        if x is not None:
            return [int((-c) % p) for c in x] + [1]
        powers.append(nxt)
        if d > n:
            raise AssertionError("minimal polynomial search exceeded the dimension")


def poly_eval(coeffs, x, p):
    acc = 0
    for c in reversed(coeffs):
        acc = (acc * x + c) % p
    return acc


def poly_divmod_linear(coeffs, root, p):
    """Divide a polynomial by (x - root); returns quotient (remainder must be 0)."""
    out = [0] * (len(coeffs) - 1)
    acc = 0
    for i in range(len(coeffs) - 1, 0, -1):
        acc = (acc * root + coeffs[i]) % p
        out[i - 1] = acc
    assert (acc * root + coeffs[0]) % p == 0, "not a root"
    return out


def strip_linear_factors(coeffs, p):
    """All roots in F_p (with multiplicity) and the rootless cofactor."""
    roots = []
    while len(coeffs) > 1:
        for x in range(p):
            if poly_eval(coeffs, x, p) == 0:
                roots.append(x)
                coeffs = poly_divmod_linear(coeffs, x, p)
                break
        else:
            break
    return roots, coeffs
