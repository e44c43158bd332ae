"""
Command-line entry point: `smoothable <command> ...`.

Exit codes: 0 success, 2 invalid input, 3 a checked mathematical statement
failed.
"""
import argparse
import json
import sys

from biresidue import (
    format_matrix_text,
    matrix_to_dict,
    min_polydisc_dim,
    parse_matrix_json,
    parse_matrix_text,
    smoothing_diagram,
)
from catalog import catalog_for_n, catalog_summary, equivalence_orbits, format_tag, make, parse_tag
from classify import identify, is_holonomic
from deform import (
    PRESET_NAMES,
    build_rho,
    example,
    format_table,
    integrate,
    preset,
    realize,
)
from fo import codim2_split, fo_biresidue, fo_q1, fo_toric, k_tilde, q1_rho_agreement
from fo_numeric import (
    c_constant,
    c_constant_cyclotomic,
    fo_sweep,
    halving_imtaus,
    halving_imtaus_within,
    theta_params,
)
from poisson_symbolic import format_coeff, format_multivector, hamiltonian_field, pfaffian, to_affine_chart
from render import FORMATS, render_diagram
from utils import OracleViolation, SmoothableError, ValidationError, format_float, format_rational, get_logger

logger = get_logger(__name__)

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ORACLE = 3


def _emit(args, text, data):
    if args.json:
        print(json.dumps(data, indent=2, sort_keys=True))
    else:
        print(text.rstrip("\n"))


def _load_matrix(args):
    if getattr(args, "file", None) and getattr(args, "tag", None):
        raise ValidationError("give either --file or --tag, not both")
    if getattr(args, "tag", None):
        return make(parse_tag(args.tag))
    if getattr(args, "file", None):
        try:
            with open(args.file, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as e:
            raise ValidationError(f"cannot read {args.file}: {e}")
        if text.lstrip().startswith("{"):
            return parse_matrix_json(text)
        return parse_matrix_text(text)
    raise ValidationError("a matrix is required: pass --file or --tag")


def _add_matrix_args(p):
    p.add_argument("--file", "--matrix", dest="file", help="matrix in text or JSON form")
    p.add_argument("--tag", help="catalog tag such as C:7,3, X4 or Y:6")


def cmd_catalog(args):
    if args.tag:
        B = make(parse_tag(args.tag))
        _emit(args, format_matrix_text(B), {"tag": format_tag(parse_tag(args.tag)), **matrix_to_dict(B)})
        return EXIT_OK
    if args.n is None:
        raise ValidationError("catalog needs a tag or --n")
    if args.summary:
        frame = catalog_summary(args.n, n_min=args.n if not args.all_sizes else 3)
        if args.json:
            print(frame.to_json(orient="records", indent=2))
        else:
            print(frame.to_csv(index=False).rstrip("\n"))
        return EXIT_OK
    if args.orbits:
        groups = [[format_tag(t) for t in group] for group in equivalence_orbits(args.n)]
        _emit(args, "\n".join(" ~ ".join(g) for g in groups), {"n": args.n, "orbits": groups})
        return EXIT_OK
    members = catalog_for_n(args.n)
    text = "\n".join(f"# {format_tag(tag)}\n{format_matrix_text(B)}" for tag, B in members)
    data = {"n": args.n, "members": [{"tag": format_tag(tag), **matrix_to_dict(B)} for tag, B in members]}
    _emit(args, text, data)
    return EXIT_OK


def cmd_rank(args):
    B = _load_matrix(args)
    r = B.rank()
    _emit(args, f"rank={r} corank={B.n - r} min_polydisc_dim={min_polydisc_dim(B)}",
          {"n": B.n, "rank": r, "corank": B.n - r, "min_polydisc_dim": min_polydisc_dim(B)})
    return EXIT_OK


def cmd_holonomic(args):
    B = _load_matrix(args)
    ok, witness = is_holonomic(B)
    text = "holonomic" if ok else f"not holonomic: J={list(witness)}"
    _emit(args, text, {"holonomic": ok, "witness": list(witness) if witness else None})
    return EXIT_OK


def _diagram_text(d):
    lines = [f"n={d.n}"]
    for edge in d.smoothable_edges:
        angles = d.angles_at_edge(edge)
        marks = " ".join(f"{k}:{'dark' if w == 2 else 'light'}" for k, w in angles.items())
        lines.append(f"{edge[0]}-{edge[1]} {marks}")
    return "\n".join(lines)


def cmd_diagram(args):
    B = _load_matrix(args)
    d = smoothing_diagram(B)
    if args.json or args.format == "json":
        data = {
            "n": d.n,
            "smoothable_edges": [list(e) for e in d.smoothable_edges],
            "angles": [{"edge": list(e), "apex": k, "weight": w} for (e, k), w in sorted(d.angles.items())],
        }
        print(json.dumps(data, indent=2, sort_keys=True))
    elif args.format == "text":
        print(_diagram_text(d))
    else:
        sys.stdout.write(render_diagram(d, args.format))
    return EXIT_OK


def cmd_classify(args):
    B = _load_matrix(args)
    found = identify(B)
    if found is None:
        _emit(args, "no full smoothable cycle", {"family": None})
        return EXIT_OK
    tag, sigma, lam = found
    sigma_text = "(" + ",".join(str(s) for s in sigma) + ")"
    _emit(
        args,
        f"family={format_tag(tag)} sigma={sigma_text} lambda={format_rational(lam)}",
        {"family": format_tag(tag), "sigma": list(sigma), "lambda": format_rational(lam)},
    )
    return EXIT_OK


def cmd_fo(args):
    n, k = args.n, args.k
    if args.fo_command == "limit":
        toric = fo_toric(n, k)
        rows = [" ".join(format_rational(x) for x in row) for row in toric.m]
        q1 = [f"y{t.monomial[0]}*y{t.monomial[1]} d_y{t.bivector[0]}^d_y{t.bivector[1]}" for t in fo_q1(n, k)]
        text = "q0 / (2 pi i):\n" + "\n".join(rows) + "\nq1:\n" + "\n".join(q1)
        _emit(args, text, {"n": n, "k": k, "q0": [[format_rational(x) for x in row] for row in toric.m], "q1": q1})
    elif args.fo_command == "verify":
        B, P = fo_biresidue(n, k)
        tag, sigma, lam = identify(B)
        kt = k_tilde(n, k)
        agreement = q1_rho_agreement(n, k)
        if tag.family != "C" or tag.k != kt:
            raise OracleViolation(f"fo_biresidue({n},{k}) identified as {format_tag(tag)}, expected C:{n},{kt}")
        if not all(row["matches"] for row in agreement):
            bad = [row["edge"] for row in agreement if not row["matches"]]
            raise OracleViolation(f"q1 terms disagree with rho bivectors on edges {bad}")
        text = format_matrix_text(B) + f"family={format_tag(tag)} k_tilde={kt}\nq1 matches rho on all {n} edges"
        _emit(args, text, {**matrix_to_dict(B), "family": format_tag(tag), "k_tilde": kt,
                           "sigma": list(sigma), "lambda": format_rational(lam), "q1_matches_rho": True})
    elif args.fo_command == "codim2":
        s = codim2_split(n, k)
        _emit(args, f"n1={s.n1} n2={s.n2} k1={s.k1} k2={s.k2} cf={list(s.cf)}",
              {"n1": s.n1, "n2": s.n2, "k1": s.k1, "k2": s.k2, "cf": list(s.cf)})
    elif args.fo_command == "ktilde":
        kt = k_tilde(n, k)
        _emit(args, f"k_tilde={kt}", {"n": n, "k": k, "k_tilde": kt})
    else:
        start, stop = args.imtau
        if stop is None:
            imtaus = halving_imtaus(start, args.steps, n)
        else:
            imtaus = halving_imtaus_within(start, stop, n)
        frame = fo_sweep(n, k, imtaus)
        params = theta_params(n, 1j * max(imtaus))
        c_num, c_exact = c_constant(params), c_constant_cyclotomic(n)
        logger.info("C(%d) = %s, cyclotomic %s", n, c_num, c_exact)
        if args.csv:
            frame.to_csv(args.csv, index=False, float_format="%.12e")
        if args.json:
            print(frame.to_json(orient="records", indent=2))
        else:
            print(frame.to_csv(index=False, float_format="%.12e").rstrip("\n"))
            print(f"# C(n) theta = {format_float(c_num.real)} {format_float(c_num.imag)}i")
    return EXIT_OK


def _realization_for(args):
    if args.preset:
        if args.file or args.tag:
            raise ValidationError("give either --preset or a matrix, not both")
        return preset(args.preset)
    B = _load_matrix(args)
    m = min_polydisc_dim(B) if args.m is None else args.m
    return realize(B, m)


def cmd_deform(args):
    command = args.deform_command
    if command == "rho":
        r = _realization_for(args)
        rho = build_rho(r, args.edge[0], args.edge[1])
        text = format_multivector(rho.bivector)
        data = {
            "edge": list(rho.edge),
            "theta": [format_rational(t) for t in rho.theta.theta],
            "lambda": [format_rational(v) for v in rho.lam],
            "bivector": text,
        }
        _emit(args, text, data)
    elif command == "realize":
        r = _realization_for(args)
        omega = [" ".join(format_rational(x) for x in row) for row in r.Omega]
        chart = to_affine_chart(r.pi0, args.chart)
        text = "\n".join([
            f"J={list(r.J) if r.J is not None else 'preset'} m={r.m}",
            "Omega:", *omega,
            "pi0:", format_multivector(r.pi0),
            f"pi0 in chart {args.chart}:", format_multivector(chart),
        ])
        data = {
            "J": list(r.J) if r.J is not None else None,
            "m": r.m,
            "Omega": [[format_rational(x) for x in row] for row in r.Omega],
            "pi0": format_multivector(r.pi0),
            "pi0_chart": format_multivector(chart),
        }
        _emit(args, text, data)
    elif command == "check":
        ex = example(args.name)
        table = format_table(ex.derivations)
        _emit(args, f"{ex.name}: [pi, pi] = 0\n{table}",
              {"name": ex.name, "master_equation": True, "derivations": table.splitlines()})
    elif command == "pfaffian":
        ex = example(args.name)
        pf = pfaffian(ex.ansatz, ex.frame.dim - 1)
        text = format_coeff(pf.coefficient(), ex.frame)
        _emit(args, text, {"name": ex.name, "pfaffian": text})
    elif command == "hamiltonian":
        ex = example(args.name)
        u = hamiltonian_field(ex.ansatz, args.coord)
        text = format_multivector(u)
        _emit(args, text, {"name": ex.name, "coord": args.coord, "field": text})
    else:
        result = integrate(args.name, args.eps, xmax=args.xmax, step=args.step)
        if args.csv:
            result.to_csv(args.csv)
        summary = {
            "name": result.name,
            "eps": result.eps,
            "max_residual": result.max_residual,
            "max_pfaffian_gap": result.max_pfaffian_gap,
            "samples": len(result.samples),
        }
        _emit(
            args,
            f"{result.name} eps={format_float(result.eps)} max_residual={format_float(result.max_residual)} "
            f"max_pfaffian_gap={format_float(result.max_pfaffian_gap)} samples={len(result.samples)}",
            summary,
        )
    return EXIT_OK


def _imtau_window(text):
    """`4` or `4:7` -> (start, stop or None)."""
    parts = text.split(":")
    if len(parts) > 2:
        raise argparse.ArgumentTypeError(f"expected START or START:STOP, got {text!r}")
    try:
        values = [float(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected START or START:STOP, got {text!r}")
    return values[0], values[1] if len(values) == 2 else None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="emit JSON")

    parser = argparse.ArgumentParser(prog="smoothable", description="Smoothable cycles of log symplectic structures")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("catalog", parents=[common], help="family matrices")
    p.add_argument("tag", nargs="?", help="catalog tag such as C:7,3")
    p.add_argument("--n", type=int, help="list every member of size n")
    p.add_argument("--summary", action="store_true", help="CSV table of ranks and holonomicity")
    p.add_argument("--all-sizes", action="store_true", help="with --summary, cover 3..n")
    p.add_argument("--orbits", action="store_true", help="group raw tags by projective equivalence")
    p.set_defaults(func=cmd_catalog)

    for name, func, help_text in (
        ("rank", cmd_rank, "rank and minimal polydisc dimension"),
        ("holonomic", cmd_holonomic, "odd principal submatrix test"),
        ("classify", cmd_classify, "name the family of a full smoothable cycle"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_text)
        _add_matrix_args(p)
        p.set_defaults(func=func)

    p = sub.add_parser("diagram", parents=[common], help="smoothing diagram")
    _add_matrix_args(p)
    p.add_argument("--format", choices=("text", "json") + FORMATS, default="text")
    p.set_defaults(func=cmd_diagram)

    p = sub.add_parser("fo", help="Feigin-Odesskii brackets")
    fo_sub = p.add_subparsers(dest="fo_command", required=True)
    for name, help_text in (
        ("limit", "toric limit q0 and first-order terms q1"),
        ("verify", "biresidue of q0, its family and the q1/rho agreement"),
        ("codim2", "codimension-2 split of (n, k)"),
        ("ktilde", "catalog index of the toric limit"),
        ("sweep", "numeric residuals as eps halves"),
    ):
        q = fo_sub.add_parser(name, parents=[common], help=help_text)
        q.add_argument("-n", "--n", type=int, required=True)
        q.add_argument("-k", "--k", type=int, required=True)
        if name == "sweep":
            q.add_argument("--imtau", type=_imtau_window, default=(4.0, None),
                           help="first Im(tau), or a window START:STOP sampled at halving steps")
            q.add_argument("--steps", type=int, default=4)
            q.add_argument("--csv", help="write the table to this path")
        q.set_defaults(func=cmd_fo)

    p = sub.add_parser("deform", help="realizations and deformations")
    d_sub = p.add_subparsers(dest="deform_command", required=True)
    for name in ("rho", "realize"):
        q = d_sub.add_parser(name, parents=[common])
        _add_matrix_args(q)
        q.add_argument("--preset", choices=PRESET_NAMES, type=str.upper)
        q.add_argument("--m", type=int, help="polydisc dimension, defaults to the minimum")
        if name == "rho":
            q.add_argument("--edge", type=int, nargs=2, required=True, metavar=("I", "J"))
        else:
            q.add_argument("--chart", type=int, default=0)
        q.set_defaults(func=cmd_deform)
    for name in ("check", "pfaffian", "hamiltonian", "integrate"):
        q = d_sub.add_parser(name, parents=[common])
        q.add_argument("name", type=str.upper, choices=PRESET_NAMES)
        if name == "hamiltonian":
            q.add_argument("--coord", default="x")
        if name == "integrate":
            q.add_argument("--eps", type=float, default=1e-2)
            q.add_argument("--xmax", type=float, default=0.5)
            q.add_argument("--step", type=float, default=1e-3)
            q.add_argument("--csv", help="write the samples to this path")
        q.set_defaults(func=cmd_deform)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_INVALID
    try:
        return args.func(args)
    except ValidationError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except OracleViolation as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_ORACLE
    except SmoothableError as e:
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
