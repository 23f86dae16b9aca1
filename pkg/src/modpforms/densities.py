"""Densities, Euler-product constants, and assembly of the asymptotic profile.

Every exact density is a Fraction; the real constants carry heuristic
tail estimates (equidistribution of classes is assumed beyond the prime
bound, with a square-root cancellation allowance).  The profile of a form
is assembled bottom-up: reduce to the coprime-support subspace through
the W and U_p operators, split into pure components, and combine each
component's class densities, Euler products and square-full sums.
"""

import math
import threading
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement

import numpy as np

from . import linalg
from .basis import GradedForm, dim_level_one, miller_basis, to_coordinates
from .errors import ModpFormsError, NotInSpanError
from .hecke import apply_U_m, apply_W
from .module import (
    build_module,
    classify_classes,
    decompose,
    gamma_group,
    strict_nilpotence_order,
)

DEFAULT_PRIME_BOUND = 10**6
DEFAULT_SFULL_BOUND = 10**10
_CYCLE_PREC_FLOOR = 16
_ENUM_CAP = 10**6


# ---------------------------------------------------------------------------
# exact densities


def class_density(classes, modulus):
    """|classes| / phi(modulus) for a set of unit residues."""
    classes = set(int(u) % modulus for u in classes)
    units = [u for u in range(1, modulus) if math.gcd(u, modulus) == 1]
    bad = classes.difference(units)
    if bad:
        raise ValueError(f"non-unit classes {sorted(bad)} mod {modulus}")
    return Fraction(len(classes), len(units))


@dataclass(frozen=True)
class GroupDescriptor:
    """Projective image type for the trace-zero proportion calculator."""

    kind: str  # reducible | dihedral | A4 | S4 | A5 | PGL2 | PSL2
    parameter: int = 0

    _KINDS = ("reducible", "dihedral", "A4", "S4", "A5", "PGL2", "PSL2")

    def __post_init__(self):
        if self.kind not in self._KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}")
        if self.kind in ("reducible", "dihedral") and self.parameter < 1:
            raise ValueError(f"{self.kind} needs a positive order parameter")
        if self.kind in ("PGL2", "PSL2") and not _is_odd_prime_power(self.parameter):
            raise ValueError(f"{self.kind} needs an odd prime power, got {self.parameter}")


def _is_odd_prime_power(q):
    if q < 3 or q % 2 == 0:
        return False
    r = 2
    while r * r <= q:
        if q % r == 0:
            while q % r == 0:
                q //= r
            return q == 1
        r += 1
    return True  # q itself prime


def alpha_of_group(d):
    """Proportion of trace-zero elements for each projective image type."""
    q = d.parameter
    if d.kind == "reducible":
        return Fraction(1, q)
    if d.kind == "dihedral":
        n = q
        return Fraction(1, 2) if n % 2 else Fraction(1, 2) + Fraction(1, 2 * n)
    if d.kind == "A4":
        return Fraction(1, 4)
    if d.kind == "S4":
        return Fraction(3, 8)
    if d.kind == "A5":
        return Fraction(1, 4)
    if d.kind == "PGL2":
        return Fraction(q, (q - 1) * (q + 1))
    # PSL2: depends on whether -1 is a square in F_q, i.e. q mod 4
    return Fraction(1, q - 1) if q % 4 == 1 else Fraction(1, q + 1)


def multi_frobenian_class_density(classes, modulus, height):
    """Density of products of `height` distinct primes drawn from fixed classes.

    The tuple set is all of classes^height, so the density is
    |classes|^h / (h! phi(modulus)^h).
    """
    base = class_density(classes, modulus)
    return base**height / Fraction(math.factorial(height))


def multi_frobenian_density(module, source, target, height):
    """Density of height-h products of nilpotent-class primes mapping source to target.

    Counts ordered class tuples (u_1, .., u_h) whose matrix product sends
    the source vector to the target, divided by h! * phi(c)^h.  Needs the
    class-determined action.
    """
    module.require_conductor()
    report = classify_classes(module)
    if not report.pure:
        raise ValueError("density of a non-pure module is undefined")
    phi = len(module.class_matrices)
    source = np.asarray(source, dtype=np.int64) % module.p
    target = np.asarray(target, dtype=np.int64) % module.p
    if height == 0:
        return Fraction(1 if (source == target).all() else 0, 1)
    count = 0
    for image, dens in _nilpotent_images(module, source, height, report).items():
        if image == target.tobytes():
            count += dens
    return count / Fraction(math.factorial(height) * phi**height)


def _nilpotent_images(module, source, height, report):
    """Map image-vector bytes -> ordered tuple count, over height-fold nilpotent products."""
    nil = report.nilpotent_classes
    if len(nil) ** height > _ENUM_CAP:
        raise ModpFormsError(
            f"{len(nil)}^{height} nilpotent tuples exceed the enumeration cap"
        )
    out = {}
    for multiset in combinations_with_replacement(nil, height):
        v = source
        for u in multiset:
            v = module.apply_class(v, u)
            if not v.any():
                break
        else:
            perms = math.factorial(height)
            for u in set(multiset):
                perms //= math.factorial(multiset.count(u))
            out[v.tobytes()] = out.get(v.tobytes(), 0) + perms
    return out


# ---------------------------------------------------------------------------
# Euler products and square-full sums

_prime_cache = {}
_prime_lock = threading.Lock()


def _primes(bound):
    with _prime_lock:
        best = max((b for b in _prime_cache if b >= bound), default=None)
        if best is not None:
            arr = _prime_cache[best]
            return arr[arr <= bound]
    sieve = np.ones(bound + 1, dtype=bool)
    sieve[:2] = False
    for q in range(2, int(bound**0.5) + 1):
        if sieve[q]:
            sieve[q * q :: q] = False
    arr = np.flatnonzero(sieve).astype(np.int64)
    with _prime_lock:
        _prime_cache.clear()
        _prime_cache[bound] = arr
    return arr


@dataclass(frozen=True)
class EulerConstant:
    value: float
    tail: float
    beta: Fraction
    prime_bound: int


def euler_constant_C(u_classes, modulus, beta, r=1, prime_bound=DEFAULT_PRIME_BOUND):
    """Truncated Euler product (1/Gamma(beta)) prod w_l with its tail estimate.

    w_l = (1 + 1/l)(1 - 1/l)^beta for primes in the given classes not
    dividing r, and (1 - 1/l)^beta otherwise.  The tail assumes exact
    class equidistribution beyond the bound (a square-root cancellation
    allowance plus the smooth 1/l^2 integral); it is heuristic, and is
    validated empirically against doubled bounds in the test suite.
    """
    beta = Fraction(beta)
    if not 0 < beta < 1:
        raise ValueError("beta must lie strictly between 0 and 1")
    if prime_bound < 10**3:
        raise ValueError("prime_bound below 1000 is meaningless here")
    pr = _primes(prime_bound)
    u_arr = np.array(sorted({int(u) % modulus for u in u_classes}), dtype=np.int64)
    in_u = np.isin(pr % modulus, u_arr)
    if r != 1:
        r_primes = np.array([q for q in set(_small_factors(r)) if q <= prime_bound])
        if len(r_primes):
            in_u &= ~np.isin(pr, r_primes)
    x = 1.0 / pr
    b = float(beta)
    logw = b * np.log1p(-x)
    logw[in_u] += np.log1p(x[in_u])
    value = math.exp(float(np.sum(logw))) / math.gamma(b)
    x0 = float(prime_bound)
    tail_log = 1.0 / (math.sqrt(x0) * math.log(x0)) + (1.0 + b) / (x0 * math.log(x0))
    return EulerConstant(value, value * math.expm1(tail_log), beta, prime_bound)


def _small_factors(n):
    out = []
    d = 2
    while d * d <= n:
        if n % d == 0:
            out.append(d)
            while n % d == 0:
                n //= d
        d += 1
    if n > 1:
        out.append(n)
    return out


def _spf_sieve(n):
    spf = np.zeros(n + 1, dtype=np.int64)
    spf[1] = 1
    for q in range(2, n + 1):
        if spf[q] == 0:
            spf[q::q][spf[q::q] == 0] = q
    return spf


def _factor_with_spf(n, spf):
    out = {}
    while n > 1:
        q = int(spf[n])
        e = 0
        while n % q == 0:
            n //= q
            e += 1
        out[q] = e
    return out


def _squarefull_numbers(bound):
    """(n, factorization) for square-full n <= bound, via n = a^2 b^3 with b square-free."""
    amax = int(math.isqrt(bound))
    spf = _spf_sieve(max(amax, int(round(bound ** (1 / 3))) + 2, 3))
    out = []
    b = 1
    while b**3 <= bound:
        fb = _factor_with_spf(b, spf)
        if all(e == 1 for e in fb.values()):
            a = 1
            while a * a * b**3 <= bound:
                fa = _factor_with_spf(a, spf)
                fac = {q: 2 * e for q, e in fa.items()}
                for q, e in fb.items():
                    fac[q] = fac.get(q, 0) + 3 * e
                out.append((a * a * b**3, fac))
                a += 1
        b += 1
    out.sort()
    return out


def squarefull_buckets(module, seed, cu, s_bound, inv_classes):
    """Accumulate C(U,s)/s over square-full s, bucketed by the image vector T_s(seed).

    Skips s divisible by p.  Returns (dict image-bytes -> partial sum,
    dict image-bytes -> vector, tail bound 2.2 * max C(U,s) / sqrt(s_bound)).
    """
    p = module.p
    c = module.conductor
    inv_set = set(inv_classes)
    ppm_cache = {}
    sums = {}
    vecs = {}
    for s, fac in _squarefull_numbers(s_bound):
        if s % p == 0:
            continue
        v = seed
        adjust = 1.0
        for q, e in sorted(fac.items()):
            key = (q % c, e)
            if key not in ppm_cache:
                ppm_cache[key] = module.prime_power_matrix(module.class_of(q), e)
            v = linalg.matvec(v, ppm_cache[key], p)
            if not v.any():
                break
            if q % c in inv_set:
                adjust /= 1.0 + 1.0 / q
        if not v.any():
            continue
        key = v.tobytes()
        sums[key] = sums.get(key, 0.0) + cu.value * adjust / s
        vecs[key] = v
    tail = 2.2 * cu.value / math.sqrt(s_bound)
    return sums, vecs, tail


def squarefull_sum(module, f_target, s_bound=DEFAULT_SFULL_BOUND, prime_bound=DEFAULT_PRIME_BOUND):
    """Sum of C(U,s)/s over square-full s with T_s f = f_target, plus the tail bound."""
    module.require_conductor()
    report = classify_classes(module)
    if not report.pure:
        raise ValueError("square-full sums require a pure module")
    alpha = class_density(report.nilpotent_classes, report.modulus)
    cu = euler_constant_C(
        report.invertible_classes, report.modulus, 1 - alpha, prime_bound=prime_bound
    )
    sums, _, tail = squarefull_buckets(
        module, module.f_coords, cu, s_bound, report.invertible_classes
    )
    target = (np.asarray(f_target, dtype=np.int64) % module.p).tobytes()
    return sums.get(target, 0.0), tail


# ---------------------------------------------------------------------------
# asymptotic profiles


@dataclass(frozen=True)
class ValueProfile:
    h: int
    c: float
    err: float


@dataclass(frozen=True)
class AsymptoticProfile:
    alpha: Fraction
    h: int
    c: float
    c_err: float
    per_value: dict = field(default_factory=dict)
    degenerate: bool = False

    def attained(self, a):
        """Whether the value a is taken infinitely often (per the profile)."""
        return self.per_value.get(a) is not None


_DEGENERATE = AsymptoticProfile(
    alpha=Fraction(0), h=0, c=0.0, c_err=0.0, per_value={}, degenerate=True
)


@dataclass(frozen=True)
class _PartProfile:
    alpha: Fraction
    h: int
    c: float
    c_err: float
    per_value: dict


def _pure_profile(
    module,
    *,
    squarefree,
    with_constants,
    prime_bound,
    sfull_bound,
):
    """alpha, h, and (optionally) the leading constants of one pure component."""
    p = module.p
    report = classify_classes(module)
    if not report.pure:
        raise AssertionError("component is not pure")
    if not report.nilpotent_classes:
        raise ModpFormsError(
            "no nilpotent class: alpha would vanish, contradicting the trace-zero "
            "class forced by complex conjugation; class detection is suspect"
        )
    alpha = class_density(report.nilpotent_classes, report.modulus)
    if not 0 < alpha <= Fraction(3, 4):
        raise ModpFormsError(f"alpha {alpha} out of the admissible range (0, 3/4]")
    h = strict_nilpotence_order(module, report=report)
    if not with_constants:
        return _PartProfile(alpha, h, 0.0, 0.0, {})

    module.require_conductor()
    cu = euler_constant_C(
        report.invertible_classes, report.modulus, 1 - alpha, prime_bound=prime_bound
    )
    if squarefree:
        sums = {module.f_coords.tobytes(): cu.value}
        vecs = {module.f_coords.tobytes(): module.f_coords}
        sum_tail = 0.0
    else:
        sums, vecs, sum_tail = squarefull_buckets(
            module, module.f_coords, cu, sfull_bound, report.invertible_classes
        )
    gamma = gamma_group(module, report)
    rel_err = cu.tail / cu.value
    phi = len(module.class_matrices)

    # orbit_counts[image bytes][a] = #{gamma in Gamma : a_1(gamma * image) = a}
    orbit_counts = {}

    def value_counts(img_bytes, img):
        if img_bytes not in orbit_counts:
            counts = {}
            for g in gamma.elements:
                val = module.coefficient(linalg.matvec(img, g, p), 1)
                counts[val] = counts.get(val, 0) + 1
            orbit_counts[img_bytes] = counts
        return orbit_counts[img_bytes]

    # per height: list of (bucket sum, image densities) per reachable target
    by_height = {}

    def images_at(hh):
        if hh not in by_height:
            denom = math.factorial(hh) * phi**hh
            rows = []
            for key, csum in sums.items():
                images = _nilpotent_images(module, vecs[key], hh, report)
                rows.append((csum, {k: n / denom for k, n in images.items()}))
            by_height[hh] = rows
        return by_height[hh]

    per_value = {}
    for a in range(1, p):
        entry = None
        for hh in range(h, -1, -1):
            total = 0.0
            found = False
            for csum, images in images_at(hh):
                for img_bytes, dens in images.items():
                    img = np.frombuffer(img_bytes, dtype=np.int64)
                    cnt = value_counts(img_bytes, img).get(a, 0)
                    if cnt:
                        found = True
                        total += csum * dens * cnt / gamma.order
            if found:
                entry = ValueProfile(hh, total, total * rel_err + sum_tail)
                break
        per_value[a] = entry

    tops = [v for v in per_value.values() if v is not None]
    if not tops:
        raise ModpFormsError("no value is attained; the component seed must be zero")
    h_attained = max(v.h for v in tops)
    if h_attained != h:
        raise AssertionError(
            f"per-value heights reach {h_attained} but the nilpotence order is {h}"
        )
    c_total = sum(v.c for v in tops if v.h == h)
    c_err = sum(v.err for v in tops if v.h == h)
    return _PartProfile(alpha, h, c_total, c_err, per_value)


def _combine_parts(parts_with_weights, p):
    """Combine (weight, part) contributions: minimal alpha, then maximal h."""
    live = [(w, pp) for w, pp in parts_with_weights if pp is not None]
    if not live:
        raise ModpFormsError("all contributions vanish; the form looks constant")
    alpha = min(pp.alpha for _, pp in live)
    top = [(w, pp) for w, pp in live if pp.alpha == alpha]
    h = max(pp.h for _, pp in top)
    c = sum(w * pp.c for w, pp in top if pp.h == h)
    c_err = sum(w * pp.c_err for w, pp in top if pp.h == h)
    per_value = {}
    for a in range(1, p):
        entries = [
            (w, pp.per_value[a]) for w, pp in top if pp.per_value.get(a) is not None
        ]
        if not entries:
            per_value[a] = None
            continue
        ha = max(v.h for _, v in entries)
        ca = sum(w * v.c for w, v in entries if v.h == ha)
        ea = sum(w * v.err for w, v in entries if v.h == ha)
        per_value[a] = ValueProfile(ha, ca, ea)
    return AsymptoticProfile(alpha, h, c, c_err, per_value)


def _component_profiles(g, **kw):
    """Profiles of the pure components of a coprime-support form, combined.

    The parent module is built without demanding a class-determined action;
    only the constant evaluation of an individual component insists on it.
    """
    module = build_module(
        g,
        generator_bound=kw["generator_bound"],
        sample_bound=kw["sample_bound"],
        require_conductor=False,
    )
    parts = decompose(module, seed=kw["seed"])
    profiles = [
        _pure_profile(
            part.module,
            squarefree=kw["squarefree"],
            with_constants=kw["with_constants"],
            prime_bound=kw["prime_bound"],
            sfull_bound=kw["sfull_bound"],
        )
        for part in parts
    ]
    return _combine_parts([(1.0, pp) for pp in profiles], g.p)


def _lift_weight(series, p, cap, try_first=None):
    """Smallest even weight whose graded space contains the series."""
    candidates = []
    if try_first is not None:
        candidates.append(try_first)
    candidates.extend(k for k in range(0, cap + 1, 2) if k != try_first)
    probe_prec = min(series.prec, 512)
    for k in candidates:
        if dim_level_one(k) == 0 or series.prec < dim_level_one(k):
            continue
        try:
            to_coordinates(GradedForm(series.truncate(probe_prec), k), miller_basis(p, k, probe_prec))
            to_coordinates(GradedForm(series, k), miller_basis(p, k, series.prec))
            return GradedForm(series, k)
        except NotInSpanError:
            continue
    raise NotInSpanError(f"no weight lift up to {cap} contains the series")


def profile(
    f,
    *,
    squarefree=False,
    with_constants=True,
    prime_bound=DEFAULT_PRIME_BOUND,
    sfull_bound=DEFAULT_SFULL_BOUND,
    generator_bound=None,
    sample_bound=None,
    seed=0,
):
    """Full asymptotic profile of a (not necessarily coprime-support) form.

    Walks the p-power tower U_{p^j}, projecting each layer to coprime
    support with W, until the tower series repeats (always including the
    all-zero cycle); layer j is weighted 1/p^j, and a detected cycle's
    geometric tail is summed in closed form.
    """
    from .module import DEFAULT_GENERATOR_BOUND, DEFAULT_SAMPLE_BOUND

    kw = dict(
        squarefree=squarefree,
        with_constants=with_constants,
        prime_bound=prime_bound,
        sfull_bound=sfull_bound,
        generator_bound=generator_bound or DEFAULT_GENERATOR_BOUND,
        sample_bound=sample_bound or DEFAULT_SAMPLE_BOUND,
        seed=seed,
    )
    p = f.p
    if f.series.is_zero():
        raise ValueError("the zero form has no asymptotic profile")

    if squarefree:
        support = np.flatnonzero(f.series.coeffs)
        support = support[support > 0]
        if not len(support) or not (support % (p * p) != 0).any():
            return _DEGENERATE
        # the reduction set for square-free counting is just {1, p}
        weighted = [(1.0, apply_W(f.series))]
        if f.prec >= p:
            weighted.append((1.0 / p, apply_W(apply_U_m(f.series, p))))
        elif weighted[0][1].is_zero():
            raise ModpFormsError(
                "precision too small to reach the U_p layer of a p-supported form"
            )
    else:
        tower = [f.series]
        layers = []
        cycle = None  # (start index, period)
        j = 0
        while True:
            u = tower[j]
            layers.append(apply_W(u))
            if u.prec // p < _CYCLE_PREC_FLOOR:
                if not u.is_zero():
                    raise ModpFormsError(
                        "precision exhausted before the U_p tower repeated; "
                        "re-evaluate the form at higher precision"
                    )
                cycle = (j, 1)
                break
            nxt = apply_U_m(u, p)
            j += 1
            for i, prev in enumerate(tower):
                if prev.truncate(nxt.prec) == nxt:
                    cycle = (i, j - i)
                    break
            tower.append(nxt)
            if cycle:
                while len(layers) < cycle[0] + cycle[1]:
                    layers.append(apply_W(tower[len(layers)]))
                break
        weighted = []
        for jj, g_series in enumerate(layers):
            weight = float(Fraction(1, p**jj))
            if jj >= cycle[0]:
                # the tower repeats with this period; sum the geometric tail
                weight /= 1.0 - p ** (-cycle[1])
            weighted.append((weight, g_series))

    contributions = []
    for weight, g_series in weighted:
        if g_series.is_zero():
            contributions.append((weight, None))
            continue
        g = _lift_weight(g_series, p, cap=p * f.weight, try_first=f.weight)
        contributions.append((weight, _component_profiles(g, **kw)))

    live = [(w, pr) for w, pr in contributions if pr is not None]
    if not live:
        raise ValueError("form is constant away from index 0; no profile")
    return _combine_parts(live, p)


def leading_constants(f, **kwargs):
    """Alpha, h, and the leading constant (total and per nonzero value)."""
    return profile(f, squarefree=False, with_constants=True, **kwargs)


def leading_constants_sf(f, **kwargs):
    """Square-free variant of the leading constants (degenerate verdict possible)."""
    return profile(f, squarefree=True, with_constants=True, **kwargs)


def alpha_of_form(f, **kwargs):
    """The exponent of log x alone (skips all constant evaluation)."""
    return profile(f, with_constants=False, **kwargs).alpha


def h_of_form(f, **kwargs):
    """The log log x exponent alone (skips all constant evaluation)."""
    return profile(f, with_constants=False, **kwargs).h


@dataclass(frozen=True)
class PredictedPoint:
    x: float
    value: float
    low: float
    high: float


def predict(prof, x_values):
    """Evaluate c * x / (log x)^alpha * (log log x)^h with the error band."""
    if prof.degenerate:
        raise ValueError("degenerate square-free profile has no prediction")
    out = []
    for x in x_values:
        if x < 3:
            raise ValueError("prediction needs x >= 3")
        scale = x / math.log(x) ** float(prof.alpha) * math.log(math.log(x)) ** prof.h
        out.append(
            PredictedPoint(
                float(x), prof.c * scale, (prof.c - prof.c_err) * scale, (prof.c + prof.c_err) * scale
            )
        )
    return out
