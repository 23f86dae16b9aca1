"""Command-line interface.

Deterministic output: fixed key order, floats at 12 significant digits,
seeded randomness.  Exit codes: 0 success, 2 input error, 3 mathematical
failure (conductor not found, splitting field needed).
"""

import argparse
import csv
import io
import json
import sys
from fractions import Fraction

import numpy as np

from . import counting, densities, hecke, module as module_mod
from .basis import dim_level_one
from .densities import GroupDescriptor, alpha_of_group
from .errors import (
    ConductorNotFoundError,
    FormSyntaxError,
    ModpFormsError,
    NotInSpanError,
    SplittingFieldNeededError,
)
from .expr import evaluate, parse_form_expression

_DEFAULT_CHECKPOINTS = "1000,10000,100000,1000000"


def _fmt_float(x):
    return f"{x:.12g}"


def _ser(obj, out):
    if isinstance(obj, dict):
        out.append("{")
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(", ")
            out.append(json.dumps(str(k)))
            out.append(": ")
            _ser(v, out)
        out.append("}")
    elif isinstance(obj, (list, tuple)):
        out.append("[")
        for i, v in enumerate(obj):
            if i:
                out.append(", ")
            _ser(v, out)
        out.append("]")
    elif isinstance(obj, bool):
        out.append("true" if obj else "false")
    elif isinstance(obj, Fraction):
        out.append(json.dumps(str(obj)))
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_fmt_float(float(obj)))
    elif obj is None:
        out.append("null")
    else:
        out.append(json.dumps(str(obj)))


def canonical_json(obj):
    out = []
    _ser(obj, out)
    return "".join(out)


def _emit_json(payload):
    sys.stdout.write(canonical_json(payload) + "\n")


def _emit_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(
            [_fmt_float(v) if isinstance(v, float) else v for v in row]
        )
    sys.stdout.write(buf.getvalue())


def _parse_checkpoints(text):
    return [int(t) for t in text.split(",") if t.strip()]


def _module_prec(weight, sample_bound):
    return sample_bound * max(dim_level_one(weight) - 1, 1) + 9


def _evaluate_form(args, prec=None):
    ast = parse_form_expression(args.form, args.p)
    probe = evaluate(ast, args.p, 32)
    if prec is None:
        prec = args.prec or _module_prec(probe.weight, args.sample_bound)
    return evaluate(ast, args.p, prec)


def _profile_kwargs(args):
    return dict(
        prime_bound=args.prime_bound,
        sfull_bound=args.sfull_bound,
        generator_bound=args.gen_bound,
        sample_bound=args.sample_bound,
        seed=args.seed,
    )


def _per_value_payload(profile):
    out = {}
    for a in sorted(profile.per_value):
        v = profile.per_value[a]
        out[str(a)] = None if v is None else {"h": v.h, "c": v.c, "err": v.err}
    return out


def cmd_expand(args):
    f = _evaluate_form(args, prec=args.prec or 64)
    coeffs = [int(c) for c in f.series.coeffs]
    if args.out == "csv":
        _emit_csv(["n", "a_n"], list(enumerate(coeffs)))
    else:
        _emit_json(
            {"p": args.p, "form": args.form, "weight": f.weight, "prec": f.prec, "coeffs": coeffs}
        )
    return 0


def cmd_hecke(args):
    prec = args.prec or 64
    need = prec * max(args.index, 1)
    f = _evaluate_form(args, prec=need)
    spec = hecke.HeckeOpSpec(args.op, args.index)
    out = hecke.apply_operator(spec, f)
    series = out.series if hasattr(out, "series") else out
    weight = out.weight if hasattr(out, "weight") else f.weight
    coeffs = [int(c) for c in series.coeffs]
    payload = {
        "p": args.p,
        "form": args.form,
        "op": args.op,
        "index": args.index,
        "weight": weight,
        "prec": series.prec,
        "coeffs": coeffs,
    }
    if args.out == "csv":
        _emit_csv(["n", "a_n"], list(enumerate(coeffs)))
    else:
        _emit_json(payload)
    return 0


def cmd_module(args):
    f = _evaluate_form(args)
    mod = module_mod.build_module(
        f, generator_bound=args.gen_bound, sample_bound=args.sample_bound
    )
    report = module_mod.classify_classes(mod)
    prof = densities.profile(f, with_constants=False, **_profile_kwargs(args))
    gamma = module_mod.gamma_group(mod, report)
    equi = module_mod.equidistribution_report(
        f, generator_bound=args.gen_bound, sample_bound=args.sample_bound
    )
    classes = []
    for u in mod.classes:
        classes.append(
            {
                "class": u,
                "status": report.statuses[u],
                "scalar": mod.scalar_map[u],
                "matrix": [[int(x) for x in row] for row in mod.class_matrices[u]],
            }
        )
    _emit_json(
        {
            "p": args.p,
            "form": args.form,
            "weight": f.weight,
            "dim": mod.dim,
            "conductor": mod.conductor,
            "pure": report.pure,
            "alpha": prof.alpha,
            "h": prof.h,
            "classes": classes,
            "gamma_order": gamma.order,
            "gamma_contains_scalars": gamma.contains_scalars,
            "equidistribution": {
                "criterion_holds": equi.criterion_holds,
                "eigenform_converse_applies": equi.eigenform_converse_applies,
                "primitive_root_shortcut": equi.primitive_root_shortcut,
            },
        }
    )
    return 0


def cmd_decompose(args):
    f = _evaluate_form(args)
    mod = module_mod.build_module(
        f,
        generator_bound=args.gen_bound,
        sample_bound=args.sample_bound,
        require_conductor=False,
    )
    parts = module_mod.decompose(mod, seed=args.seed)
    payload_parts = []
    for part in parts:
        sub = part.module
        rep = module_mod.classify_classes(sub)
        payload_parts.append(
            {
                "dim": sub.dim,
                "conductor": sub.conductor,
                "class_modulus": rep.modulus,
                "nil_classes": sorted(rep.nilpotent_classes),
                "alpha": densities.class_density(rep.nilpotent_classes, rep.modulus),
                "h": module_mod.strict_nilpotence_order(sub, report=rep),
                "coeffs_prefix": [
                    int(c) for c in sub.vector_to_series(sub.f_coords, 16).coeffs
                ],
            }
        )
    _emit_json(
        {
            "p": args.p,
            "form": args.form,
            "weight": f.weight,
            "components": payload_parts,
        }
    )
    return 0


def cmd_predict(args):
    f = _evaluate_form(args)
    prof = (
        densities.leading_constants_sf(f, **_profile_kwargs(args))
        if args.squarefree
        else densities.leading_constants(f, **_profile_kwargs(args))
    )
    payload = {
        "p": args.p,
        "form": args.form,
        "squarefree": bool(args.squarefree),
        "degenerate": prof.degenerate,
    }
    if not prof.degenerate:
        payload.update(
            {
                "alpha": prof.alpha,
                "h": prof.h,
                "c": prof.c,
                "c_err": prof.c_err,
                "per_value": _per_value_payload(prof),
            }
        )
        marks = args.checkpoints or (str(args.xmax) if args.xmax else None)
        if marks:
            points = densities.predict(prof, _parse_checkpoints(marks))
            payload["predictions"] = [
                {"x": pt.x, "value": pt.value, "low": pt.low, "high": pt.high}
                for pt in points
            ]
    _emit_json(payload)
    return 0


def _count_reports(args):
    xmax = args.xmax or 10**6
    table = counting.coefficient_table(args.form, args.p, xmax, cap=max(xmax, 10**6))
    checkpoints = _parse_checkpoints(args.checkpoints or _DEFAULT_CHECKPOINTS)
    checkpoints = [c for c in checkpoints if c <= xmax] or [xmax]
    plain = counting.count_pi(table, checkpoints, by_value=True, threads=args.threads)
    sf = counting.count_pi_sf(table, checkpoints, threads=args.threads)
    return table, checkpoints, plain, sf


def cmd_count(args):
    _, checkpoints, plain, sf = _count_reports(args)
    if args.out == "csv":
        header = ["x", "pi", "pi_sf"] + [f"a={a}" for a in sorted(plain.per_value)]
        rows = []
        for i, x in enumerate(checkpoints):
            rows.append(
                [x, plain.pi[i], sf.pi_sf[i]]
                + [plain.per_value[a][i] for a in sorted(plain.per_value)]
            )
        _emit_csv(header, rows)
    else:
        _emit_json(
            {
                "p": args.p,
                "form": args.form,
                "checkpoints": checkpoints,
                "pi": plain.pi,
                "pi_sf": sf.pi_sf,
                "per_value": {str(a): plain.per_value[a] for a in sorted(plain.per_value)},
            }
        )
    return 0


def cmd_compare(args):
    _, checkpoints, plain, sf = _count_reports(args)
    f = _evaluate_form(args)
    prof = (
        densities.leading_constants_sf(f, **_profile_kwargs(args))
        if args.squarefree
        else densities.leading_constants(f, **_profile_kwargs(args))
    )
    points = densities.predict(prof, checkpoints)
    counts = sf.pi_sf if args.squarefree else plain.pi
    ratios = [c / pt.value if pt.value else float("nan") for c, pt in zip(counts, points)]
    if args.out == "csv":
        header = ["x", "pi", "pi_sf", "predicted", "ratio"] + [
            f"a={a}" for a in sorted(plain.per_value)
        ]
        rows = []
        for i, x in enumerate(checkpoints):
            rows.append(
                [x, plain.pi[i], sf.pi_sf[i], float(points[i].value), float(ratios[i])]
                + [plain.per_value[a][i] for a in sorted(plain.per_value)]
            )
        _emit_csv(header, rows)
    else:
        _emit_json(
            {
                "p": args.p,
                "form": args.form,
                "squarefree": bool(args.squarefree),
                "alpha": prof.alpha,
                "h": prof.h,
                "c": prof.c,
                "checkpoints": checkpoints,
                "pi": plain.pi,
                "pi_sf": sf.pi_sf,
                "predicted": [pt.value for pt in points],
                "ratio": ratios,
                "per_value": {str(a): plain.per_value[a] for a in sorted(plain.per_value)},
            }
        )
    return 0


def cmd_oracle(args):
    xmax = args.xmax or 10**4
    table = counting.coefficient_table(args.form, args.p, xmax, cap=max(xmax, 10**6))
    f = _evaluate_form(args)
    comps = counting.oracle_components(
        f, seed=args.seed, generator_bound=args.gen_bound, sample_bound=args.sample_bound
    )
    matches, total, mismatches = counting.oracle_check(table, comps, xmax)
    if args.out == "json":
        _emit_json(
            {
                "p": args.p,
                "form": args.form,
                "xmax": xmax,
                "matches": matches,
                "checked": total,
                "mismatches": [list(m) for m in mismatches],
            }
        )
    else:
        sys.stdout.write(f"match: {matches}/{total}\n")
    return 0 if matches == total else 1


def cmd_alpha_group(args):
    descriptor = GroupDescriptor(args.case, args.param)
    _emit_json(
        {
            "case": args.case,
            "param": args.param,
            "alpha": alpha_of_group(descriptor),
        }
    )
    return 0


def cmd_constants(args):
    f = _evaluate_form(args)
    mod = module_mod.build_module(
        f, generator_bound=args.gen_bound, sample_bound=args.sample_bound
    )
    parts = module_mod.decompose(mod, seed=args.seed)
    payload_parts = []
    for part in parts:
        sub = part.module
        rep = module_mod.classify_classes(sub)
        alpha = densities.class_density(rep.nilpotent_classes, sub.conductor)
        cu = densities.euler_constant_C(
            rep.invertible_classes, sub.conductor, 1 - alpha, prime_bound=args.prime_bound
        )
        payload_parts.append(
            {
                "conductor": sub.conductor,
                "invertible_classes": sorted(rep.invertible_classes),
                "beta": 1 - alpha,
                "value": cu.value,
                "tail": cu.tail,
                "prime_bound": cu.prime_bound,
            }
        )
    _emit_json({"p": args.p, "form": args.form, "components": payload_parts})
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="modpforms",
        description="Coefficient statistics of level-one modular forms over F_p",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, needs_form=True):
        sp = sub.add_parser(name)
        sp.set_defaults(func=func)
        sp.add_argument("--p", type=int, required=needs_form)
        if needs_form:
            sp.add_argument("--form", required=True)
        sp.add_argument("--prec", type=int, default=None)
        sp.add_argument("--xmax", type=int, default=None)
        sp.add_argument("--checkpoints", default=None)
        sp.add_argument("--gen-bound", type=int, default=module_mod.DEFAULT_GENERATOR_BOUND)
        sp.add_argument("--sample-bound", type=int, default=module_mod.DEFAULT_SAMPLE_BOUND)
        sp.add_argument("--prime-bound", type=int, default=densities.DEFAULT_PRIME_BOUND)
        sp.add_argument("--sfull-bound", type=int, default=densities.DEFAULT_SFULL_BOUND)
        sp.add_argument("--squarefree", action="store_true")
        sp.add_argument("--out", choices=("json", "csv"), default="json")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        return sp

    add("expand", cmd_expand)
    hk = add("hecke", cmd_hecke)
    hk.add_argument("--op", choices=("T", "U", "V", "W", "S"), required=True)
    hk.add_argument("--index", type=int, default=1)
    add("module", cmd_module)
    add("decompose", cmd_decompose)
    add("predict", cmd_predict)
    add("count", cmd_count)
    add("compare", cmd_compare)
    orc = add("oracle", cmd_oracle)
    orc.set_defaults(out="text")  # the bare match line; pass --out json for detail
    ag = add("alpha-group", cmd_alpha_group, needs_form=False)
    ag.add_argument("--case", required=True, choices=GroupDescriptor._KINDS)
    ag.add_argument("--param", type=int, default=0)
    add("constants", cmd_constants)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) < 1:
        print("--threads must be at least 1", file=sys.stderr)
        return 2
    try:
        return args.func(args)
    except (ConductorNotFoundError, SplittingFieldNeededError) as exc:
        print(f"mathematical failure: {exc}", file=sys.stderr)
        return 3
    except (FormSyntaxError, NotInSpanError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return 2
    except ModpFormsError as exc:
        print(f"mathematical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
