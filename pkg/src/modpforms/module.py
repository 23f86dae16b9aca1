"""Finite Hecke modules of level-one forms over F_p.

The module generated by a form is closed off inside its weight-graded
ambient space and the action of every sampled prime index is stored as a
matrix.  Two layers of congruence structure are then detected:

* the full conductor: a p-power modulus c such that the action matrix
  depends only on the prime's class mod c.  The unit group mod c is
  cyclic and a two-dimensional pseudo-representation trace satisfies
  t(g^{j+1}) = t(g^j) t(g) - d(g) t(g^{j-1}) with t(1) = 2, so one
  sampled prime whose class generates the units fills the whole table,
  which must close cyclically onto 2*Id and match every sampled prime.
  Detection can fail honestly: for large modules the finite quotient
  acting on the module is not abelian and no congruence modulus exists.

* the status modulus: a (usually much smaller) p-power modulus on which
  just the nilpotent / invertible / mixed status is constant.  This is
  determined by the semisimplified eigen-system, hence always a
  congruence datum for the reducible representations in scope, and it is
  what the density exponent needs.

Classification, purity, the strict order of nilpotence (a breadth-first
search over the distinct nilpotent action matrices, so it does not need
the full conductor), the canonical pure decomposition and the group of
invertible actions sit on top.
"""

from dataclasses import dataclass

import numpy as np

from . import linalg
from .basis import (
    GradedForm,
    dim_level_one,
    from_coordinates,
    miller_basis,
    to_coordinates,
)
from .errors import ConductorNotFoundError, SpanNotClosedError, SplittingFieldNeededError
from .hecke import ell_s_ell
from .series import QSeries

DEFAULT_GENERATOR_BOUND = 50
DEFAULT_SAMPLE_BOUND = 2000
DIMENSION_CAP = 64
MAX_CONDUCTOR_EXPONENT = 4
_SLACK = 8

NILPOTENT = "nilpotent"
INVERTIBLE = "invertible"
MIXED = "mixed"


def primes_upto(n):
    if n < 2:
        return []
    sieve = np.ones(n + 1, dtype=bool)
    sieve[:2] = False
    for q in range(2, int(n**0.5) + 1):
        if sieve[q]:
            sieve[q * q :: q] = False
    return [int(q) for q in np.flatnonzero(sieve)]


def _status_of(mat, p):
    if linalg.is_nilpotent(mat, p):
        return NILPOTENT
    if linalg.det(mat, p) != 0:
        return INVERTIBLE
    return MIXED


class HeckeModule:
    """The finite module generated by a form under the prime-index operators.

    Vectors are rows over F_p in the module basis; the stored q-expansions
    of the basis vectors provide exact coefficient functionals.  The
    conductor and per-class matrices are present only when the sampled
    action is class-determined; the status structure is always present.
    """

    def __init__(
        self,
        p,
        weight,
        ambient,
        ambient_coords,
        vector_series,
        per_prime,
        conductor,
        class_matrices,
        status_modulus,
        status_by_class,
        f_coords,
    ):
        self.p = p
        self.weight = weight
        self.ambient = ambient
        self.ambient_coords = ambient_coords  # r x dim, rows = module basis
        self.vector_series = vector_series  # r x prec uint8
        self.per_prime = per_prime  # sampled prime -> r x r action matrix
        self.conductor = conductor  # None when the action is not class-determined
        self.class_matrices = class_matrices
        self.status_modulus = status_modulus
        self.status_by_class = status_by_class
        self.scalar_map = (
            {u: ell_s_ell(u, weight, p) for u in class_matrices} if class_matrices else {}
        )
        self.f_coords = f_coords

    @property
    def dim(self):
        return self.ambient_coords.shape[0]

    def require_conductor(self):
        if self.conductor is None:
            raise ConductorNotFoundError(
                "the sampled Hecke action is not determined by congruence classes "
                "(non-abelian finite quotient); class-based data is unavailable"
            )

    @property
    def classes(self):
        self.require_conductor()
        return sorted(self.class_matrices)

    def class_of(self, ell):
        self.require_conductor()
        u = ell % self.conductor
        if u not in self.class_matrices:
            raise ConductorNotFoundError(f"{ell} is not a unit class mod {self.conductor}")
        return u

    def apply_class(self, vec, u):
        return linalg.matvec(vec, self.class_matrices[u], self.p)

    def prime_power_matrix(self, u, e):
        """Action of the index-l^e operator for any prime l in class u."""
        self.require_conductor()
        a = self.class_matrices[u]
        s = ell_s_ell(u, self.weight, self.p)
        prev = linalg.identity(self.dim, self.p)
        if e == 0:
            return prev
        cur = a
        for _ in range(e - 1):
            prev, cur = cur, (cur @ a - s * prev) % self.p
        return cur

    def nilpotent_matrices(self):
        """Distinct nilpotent action matrices (class table if known, else sampled)."""
        source = self.class_matrices.values() if self.conductor else self.per_prime.values()
        out = {}
        for mat in source:
            if linalg.is_nilpotent(mat, self.p):
                out[mat.tobytes()] = mat
        return [out[k] for k in sorted(out)]

    def coefficient(self, vec, n):
        """a_n of the form with the given module coordinates."""
        if n >= self.vector_series.shape[1]:
            raise ValueError("coefficient index beyond stored precision")
        return int(vec.astype(np.int64) @ self.vector_series[:, n].astype(np.int64)) % self.p

    def vector_to_series(self, vec, prec=None):
        prec = prec or self.vector_series.shape[1]
        if prec <= self.vector_series.shape[1]:
            coeffs = (vec.astype(np.int64) @ self.vector_series[:, :prec].astype(np.int64)) % self.p
            return QSeries(self.p, coeffs)
        amb = linalg.matvec(vec, self.ambient_coords, self.p)
        return from_coordinates(amb, self.ambient, prec)

    def vector_to_form(self, vec, prec=None):
        return GradedForm(self.vector_to_series(vec, prec), self.weight)


@dataclass(frozen=True)
class ClassReport:
    modulus: int
    statuses: dict
    nilpotent_classes: tuple
    invertible_classes: tuple
    mixed_classes: tuple
    pure: bool
    matrices: dict = None  # per-class action, when the full conductor is known


@dataclass(frozen=True)
class GammaGroup:
    """Multiplicative closure of the invertible class actions."""

    elements: tuple  # int64 matrices
    contains_scalars: bool

    @property
    def order(self):
        return len(self.elements)


@dataclass(frozen=True)
class PureComponent:
    """One pure summand of the canonical decomposition."""

    module: HeckeModule
    nil_classes: frozenset  # status classes of the PARENT acting nilpotently
    coords_in_parent: np.ndarray


@dataclass(frozen=True)
class EquidistributionReport:
    criterion_holds: bool
    eigenform_converse_applies: bool
    primitive_root_shortcut: bool
    gamma_order: int
    scalar_values: tuple


def _tl_coords(series_rows, ell, scalar, dim, p):
    """First-dim coefficients of T_l applied to each row's q-expansion."""
    idx = ell * np.arange(dim)
    out = series_rows[:, idx].astype(np.int64)
    j = np.arange(0, dim, ell) // ell
    out[:, ::ell] += scalar * series_rows[:, j].astype(np.int64)
    return out % p


def build_module(
    f,
    generator_bound=DEFAULT_GENERATOR_BOUND,
    sample_bound=DEFAULT_SAMPLE_BOUND,
    dim_cap=DIMENSION_CAP,
    max_conductor_exponent=MAX_CONDUCTOR_EXPONENT,
    require_conductor=True,
):
    """Close the span of f under the prime-index operators and detect conductors.

    f must be nonzero and supported on indices coprime to p (apply the W
    projector first).  With require_conductor (the default), a module
    whose sampled action is not class-determined raises
    ConductorNotFoundError; pass require_conductor=False for quantities
    that only need the status structure (alpha) or the raw matrices (h).
    """
    p, k = f.p, f.weight
    if generator_bound < 2:
        raise ValueError("generator_bound must be at least 2")
    if sample_bound < generator_bound:
        raise ValueError("sample_bound must be at least generator_bound")
    dim = dim_level_one(k)
    work_prec = sample_bound * max(dim - 1, 1) + 1 + _SLACK

    ambient = miller_basis(p, k, work_prec)
    g = GradedForm(f.series.truncate(min(f.prec, work_prec)), k)
    f_amb = to_coordinates(g, ambient).astype(np.int64)
    if not f_amb.any():
        raise ValueError("cannot build the module of the zero form")
    B = ambient.matrix()  # dim x work_prec

    f_full = (f_amb @ B.astype(np.int64)) % p
    if f_full[::p].any():
        raise ValueError(
            "form has nonzero coefficients at indices divisible by p; "
            "apply the W projector first"
        )

    sampled = [ell for ell in primes_upto(sample_bound) if ell != p]
    gens = [ell for ell in sampled if ell <= generator_bound]

    gen_mats = {ell: _tl_coords(B, ell, ell_s_ell(ell, k, p), dim, p) for ell in gens}

    # breadth-first closure in ambient coordinates
    rows = [f_amb % p]
    span_rref = linalg.row_basis(np.stack(rows), p)
    queue = [rows[0]]
    while queue:
        v = queue.pop()
        for ell in gens:
            w = linalg.matvec(v, gen_mats[ell], p)
            if not w.any():
                continue
            if linalg.solve_in_rowspan(span_rref, w, p) is not None:
                continue
            rows.append(w)
            queue.append(w)
            span_rref = linalg.row_basis(np.stack(rows), p)
            if len(rows) > dim_cap:
                raise SpanNotClosedError(f"closure exceeded the dimension cap {dim_cap}")

    V = np.stack(rows)  # r x dim
    r = V.shape[0]
    S = ((V @ B.astype(np.int64)) % p).astype(np.uint8)

    # pseudo-inverse data for ambient -> module coordinates
    _, pivots = linalg.rref(V, p)
    J = np.array(pivots, dtype=np.int64)
    Minv = _invert(V[:, J], p)

    per_prime = {}
    for ell in sampled:
        amb_img = _tl_coords(S, ell, ell_s_ell(ell, k, p), dim, p)
        x = (amb_img[:, J] @ Minv) % p
        if ((x @ V) % p != amb_img).any():
            raise AssertionError("a sampled image left the module span")
        per_prime[ell] = x

    conductor, class_matrices, failure = _detect_conductor(
        per_prime, p, k, r, max_conductor_exponent
    )
    if conductor is None and require_conductor:
        raise ConductorNotFoundError(failure)

    status_modulus, status_by_class = _detect_status(
        per_prime, p, r, max_conductor_exponent
    )

    f_coords = np.zeros(r, dtype=np.int64)
    f_coords[0] = 1
    return HeckeModule(
        p,
        k,
        ambient,
        V,
        S,
        per_prime,
        conductor,
        class_matrices,
        status_modulus,
        status_by_class,
        f_coords,
    )


def _invert(mat, p):
    n = mat.shape[0]
    aug = np.concatenate([mat % p, linalg.identity(n, p)], axis=1)
    red, pivots = linalg.rref(aug, p)
    if pivots != list(range(n)):
        raise AssertionError("matrix not invertible")
    return red[:, n:]


def _multiplicative_order(g, modulus, phi):
    order = phi
    for q in set(_prime_factors(phi)):
        while order % q == 0 and pow(g, order // q, modulus) == 1:
            order //= q
    return order


def _prime_factors(n):
    out = []
    d = 2
    while d * d <= n:
        while n % d == 0:
            out.append(d)
            n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _detect_conductor(per_prime, p, weight, r, max_exponent):
    """Smallest p-power modulus whose classes explain every sampled action matrix.

    Seeds the per-class table from one sampled prime whose class generates
    the (cyclic) unit group, through the pseudo-representation trace
    recurrence; accepts when the table closes cyclically onto 2*Id and
    matches every sampled prime.
    """
    two_id = 2 * linalg.identity(r, p) % p
    failure = None
    for exponent in range(1, max_exponent + 1):
        cand = p**exponent
        phi = cand - cand // p
        gen = None
        for ell in per_prime:
            if _multiplicative_order(ell % cand, cand, phi) == phi:
                gen = ell
                break
        if gen is None:
            failure = f"modulus {cand}: no sampled prime generates the unit classes"
            continue
        g = gen % cand
        d = ell_s_ell(g, weight, p)
        mats = [two_id, per_prime[gen]]
        for _ in range(phi - 1):
            mats.append((mats[-1] @ mats[1] - d * mats[-2]) % p)
        if (mats[phi] != two_id).any():
            failure = (
                f"modulus {cand}: the class table of prime {gen} does not close "
                f"cyclically onto 2*Id"
            )
            continue
        table = {pow(g, j, cand): mats[j] for j in range(phi)}
        violation = None
        for ell, mat in per_prime.items():
            if (table[ell % cand] != mat).any():
                violation = ell
                break
        if violation is not None:
            failure = (
                f"modulus {cand}: primes {gen} and {violation} give inconsistent "
                f"class actions"
            )
            continue
        return cand, table, None
    return None, None, f"no conductor candidate passed ({failure})"


def _detect_status(per_prime, p, r, max_exponent):
    """Smallest p-power modulus with class-constant nilpotent/invertible status.

    Every unit class must carry a sampled prime.  This is the semisimple
    layer of the action, so it exists (with a small modulus) whenever the
    underlying representations are reducible with p-power conductors.
    """
    statuses = {ell: _status_of(mat, p) for ell, mat in per_prime.items()}
    failure = None
    for exponent in range(1, max_exponent + 1):
        cand = p**exponent
        by_class = {}
        ok = True
        for ell, st in statuses.items():
            u = ell % cand
            if by_class.setdefault(u, st) != st:
                ok = False
                break
        if not ok:
            failure = f"modulus {cand}: status not constant on classes"
            continue
        units = [u for u in range(1, cand) if u % p]
        missing = [u for u in units if u not in by_class]
        if missing:
            failure = f"modulus {cand}: classes {missing[:4]} have no sampled prime"
            continue
        return cand, by_class
    raise ConductorNotFoundError(
        f"no modulus explains the nilpotent/invertible pattern ({failure})"
    )


def classify_classes(module):
    """Per-class statuses and the purity flag.

    Classes refer to the full conductor when it was detected (in which
    case the per-class matrices are included), and to the status modulus
    otherwise.
    """
    p = module.p
    if module.conductor is not None:
        statuses = {u: _status_of(m, p) for u, m in module.class_matrices.items()}
        modulus = module.conductor
        matrices = module.class_matrices
    else:
        statuses = dict(module.status_by_class)
        modulus = module.status_modulus
        matrices = None
    nil = tuple(sorted(u for u, s in statuses.items() if s == NILPOTENT))
    inv = tuple(sorted(u for u, s in statuses.items() if s == INVERTIBLE))
    mixed = tuple(sorted(u for u, s in statuses.items() if s == MIXED))
    return ClassReport(modulus, statuses, nil, inv, mixed, pure=not mixed, matrices=matrices)


def strict_nilpotence_order(module, vec=None, report=None):
    """Longest chain of nilpotent-prime actions that keeps the seed nonzero.

    Runs a breadth-first search over the distinct nilpotent action
    matrices, so it works whether or not the action is class-determined.
    """
    report = report or classify_classes(module)
    if not report.pure:
        raise ValueError("module is not pure; decompose into pure parts first")
    vec = module.f_coords if vec is None else vec
    if not vec.any():
        raise ValueError("seed vector is zero")
    mats = module.nilpotent_matrices()
    level = {vec.tobytes(): vec}
    h = 0
    while True:
        nxt = {}
        for v in level.values():
            for m in mats:
                w = linalg.matvec(v, m, module.p)
                if w.any():
                    nxt[w.tobytes()] = w
        if not nxt:
            return h
        level = nxt
        h += 1
        if h > module.dim:
            raise AssertionError("nilpotence order exceeded the module dimension")


def gamma_group(module, report=None, order_cap=100000):
    """Closure of the invertible class matrices under multiplication."""
    module.require_conductor()
    report = report or classify_classes(module)
    p = module.p
    r = module.dim
    gens = [module.class_matrices[u] for u in report.invertible_classes]
    elements = {linalg.identity(r, p).tobytes(): linalg.identity(r, p)}
    frontier = list(elements.values())
    while frontier:
        nxt = []
        for x in frontier:
            for g in gens:
                y = linalg.matmul(x, g, p)
                key = y.tobytes()
                if key not in elements:
                    elements[key] = y
                    nxt.append(y)
        if len(elements) > order_cap:
            raise AssertionError("invertible-class group exceeded the order cap")
        frontier = nxt
    contains = all(
        (lam * linalg.identity(r, p) % p).tobytes() in elements for lam in range(1, p)
    )
    return GammaGroup(tuple(elements.values()), contains)


def _restrict(rows, mat, p):
    """Action of mat on the row space spanned by rows, in the rows basis."""
    img = (rows @ mat) % p
    out = np.zeros((rows.shape[0], rows.shape[0]), dtype=np.int64)
    for i in range(rows.shape[0]):
        x = linalg.solve_in_rowspan(rows, img[i], p)
        if x is None:
            raise AssertionError("subspace not stable under the sampled action")
        out[i] = x
    return out


def submodule(parent, vec, max_conductor_exponent=MAX_CONDUCTOR_EXPONENT):
    """The module generated by a vector inside a parent module.

    Closure runs over the parent's sampled matrices; the conductor and
    status structures are re-detected on the restricted action (they can
    be smaller than the parent's, e.g. for an eigenform inside a larger
    module).
    """
    p = parent.p
    source = (
        [parent.class_matrices[u] for u in parent.classes]
        if parent.conductor
        else list(_distinct(parent.per_prime.values()))
    )
    rows = [vec % p]
    span_rref = linalg.row_basis(np.stack(rows), p)
    queue = [rows[0]]
    while queue:
        v = queue.pop()
        for mat in source:
            w = linalg.matvec(v, mat, p)
            if not w.any() or linalg.solve_in_rowspan(span_rref, w, p) is not None:
                continue
            rows.append(w)
            queue.append(w)
            span_rref = linalg.row_basis(np.stack(rows), p)
    W = np.stack(rows)
    restricted = {ell: _restrict(W, mat, p) for ell, mat in parent.per_prime.items()}
    conductor, class_matrices, _ = _detect_conductor(
        restricted, p, parent.weight, W.shape[0], max_conductor_exponent
    )
    status_modulus, status_by_class = _detect_status(
        restricted, p, W.shape[0], max_conductor_exponent
    )
    series = (W @ parent.vector_series.astype(np.int64)) % p
    amb = (W @ parent.ambient_coords) % p
    f_coords = np.zeros(W.shape[0], dtype=np.int64)
    f_coords[0] = 1
    return HeckeModule(
        p,
        parent.weight,
        parent.ambient,
        amb,
        series.astype(np.uint8),
        restricted,
        conductor,
        class_matrices,
        status_modulus,
        status_by_class,
        f_coords,
    )


def _distinct(mats):
    seen = {}
    for m in mats:
        seen.setdefault(m.tobytes(), m)
    return [seen[k] for k in sorted(seen)]


def decompose(module, seed=0, attempts=8):
    """Canonical decomposition of the module seed into pure components.

    Splits the module into joint generalized eigenspaces of the commuting
    sampled matrices via a random algebra element, drops components where
    the seed projects to zero, and groups the rest by their sets of
    nilpotently-acting status classes.  Raises SplittingFieldNeededError
    when the eigen-system is not rational over F_p.
    """
    p = module.p
    r = module.dim
    report = classify_classes(module)
    if report.pure:
        nil_status = frozenset(
            u for u, st in module.status_by_class.items() if st == NILPOTENT
        )
        return [PureComponent(module, nil_status, module.f_coords.copy())]

    gens = _distinct(module.per_prime.values())
    rng = np.random.default_rng(seed)
    last_error = None
    for _ in range(attempts):
        coeffs = rng.integers(0, p, size=len(gens))
        X = np.zeros((r, r), dtype=np.int64)
        for c, mat in zip(coeffs, gens):
            X = (X + int(c) * mat) % p
        try:
            blocks = _split_blocks(module, X, gens)
        except _NotSeparated as exc:
            last_error = exc
            continue
        return _group_blocks(module, blocks)
    raise SplittingFieldNeededError(
        f"failed to separate joint eigenspaces after {attempts} attempts ({last_error})"
    )


class _NotSeparated(Exception):
    pass


def _split_blocks(module, X, gens):
    p = module.p
    r = module.dim
    mp = linalg.min_poly(X, p)
    roots, leftover = linalg.strip_linear_factors(mp, p)
    if len(leftover) > 1:
        raise SplittingFieldNeededError(
            "an algebra element has an irreducible factor of degree "
            f"{len(leftover) - 1} in its minimal polynomial over F_{p}"
        )
    blocks = []
    for lam in sorted(set(roots)):
        mult = roots.count(lam)
        ker = linalg.nullspace(
            linalg.matpow((X - lam * linalg.identity(r, p)) % p, mult, p), p
        )
        blocks.append(ker)
    if sum(b.shape[0] for b in blocks) != r:
        raise AssertionError("generalized eigenspaces do not fill the module")
    # every sampled matrix must act with a single eigenvalue on every block
    out = []
    for rows in blocks:
        nilpotent_on_block = {}
        for mat in gens:
            restr = _restrict(rows, mat, p)
            mp_m = linalg.min_poly(restr, p)
            roots_m, left_m = linalg.strip_linear_factors(mp_m, p)
            if len(left_m) > 1:
                raise SplittingFieldNeededError(
                    "a sampled action has a non-rational eigen-system on a component"
                )
            if len(set(roots_m)) != 1:
                raise _NotSeparated("a sampled action has several eigenvalues on one block")
            nilpotent_on_block[mat.tobytes()] = roots_m[0] == 0
        out.append((rows, nilpotent_on_block))
    return out


def _group_blocks(module, blocks):
    p = module.p
    stacked = np.concatenate([rows for rows, _ in blocks])
    x = linalg.solve_in_rowspan(stacked, module.f_coords, p)
    if x is None:
        raise AssertionError("seed vector escaped the block decomposition")
    # the nilpotent status-class set of each block, validated across samples
    groups = {}
    offset = 0
    for rows, nil_by_mat in blocks:
        d = rows.shape[0]
        part = (x[offset : offset + d] @ rows) % p
        offset += d
        if not part.any():
            continue
        nil_classes = set()
        for u in sorted({ell % module.status_modulus for ell in module.per_prime}):
            flags = {
                nil_by_mat[module.per_prime[ell].tobytes()]
                for ell in module.per_prime
                if ell % module.status_modulus == u
            }
            if len(flags) != 1:
                raise ConductorNotFoundError(
                    f"status class {u} is not nilpotent-consistent on a pure component"
                )
            if flags.pop():
                nil_classes.add(u)
        key = frozenset(nil_classes)
        groups.setdefault(key, np.zeros(module.dim, dtype=np.int64))
        groups[key] = (groups[key] + part) % p
    out = []
    for key in sorted(groups, key=sorted):
        part = groups[key]
        comp = submodule(module, part)
        out.append(PureComponent(comp, key, part))
    return out


def pure_decomposition(f, seed=0, **build_kwargs):
    """Split a form into its canonical pure summands, as graded forms.

    Purity only needs the action matrices, so the class-determined
    conductor is not required here.
    """
    build_kwargs.setdefault("require_conductor", False)
    module = build_module(f, **build_kwargs)
    parts = decompose(module, seed=seed)
    out = []
    for part in parts:
        amb = linalg.matvec(part.coords_in_parent, module.ambient_coords, module.p)
        series = from_coordinates(amb, module.ambient, f.prec)
        out.append(GradedForm(series, f.weight))
    return out


def equidistribution_report(f, **build_kwargs):
    """Sufficient/necessary equidistribution criteria for the values of f."""
    module = build_module(f, **build_kwargs)
    report = classify_classes(module)
    gamma = gamma_group(module, report)
    p = module.p
    shortcut = _is_primitive_root(2, p)
    converse = False
    scalar_values = ()
    if module.dim == 1:
        values = sorted(
            {int(module.class_matrices[u][0, 0]) for u in report.invertible_classes}
        )
        scalar_values = tuple(values)
        generated = _multiplicative_closure(values, p)
        converse = len(generated) < p - 1
    return EquidistributionReport(
        criterion_holds=gamma.contains_scalars or shortcut,
        eigenform_converse_applies=converse,
        primitive_root_shortcut=shortcut,
        gamma_order=gamma.order,
        scalar_values=scalar_values,
    )


def _multiplicative_closure(values, p):
    out = {1}
    frontier = [1]
    while frontier:
        nxt = []
        for x in frontier:
            for v in values:
                y = x * v % p
                if y not in out:
                    out.add(y)
                    nxt.append(y)
        frontier = nxt
    return out


def _is_primitive_root(g, p):
    order = 1
    x = g % p
    while x != 1:
        x = x * g % p
        order += 1
    return order == p - 1
