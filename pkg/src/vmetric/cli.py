"""Command-line front end: JSON in, JSON (or DOT) out.

Exit status: 0 on success, 1 on a domain error (an error object is printed),
2 on a usage error (bad flags or unreadable JSON).
"""

import argparse
import json
import logging
import sys

from . import amalgam, connect, divide, space as sp, ultra
from .errors import VMetricError
from .values import (
    ValueSet,
    dv_distance,
    fmt,
    four_values_check,
    gap_report,
    rational,
    sufficient_condition_check,
)

log = logging.getLogger("vmetric")


class UsageError(Exception):
    pass


def _load(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise UsageError(f"{path}: malformed JSON ({e.msg} at line {e.lineno})") from None


def _values(path) -> ValueSet:
    return ValueSet.from_json(_load(path))


def _space(path) -> sp.FiniteMetricSpace:
    return sp.FiniteMetricSpace.from_json(_load(path))


def _csv_rationals(text):
    return [rational(x) for x in text.split(",") if x.strip()] if text else []


def _coloring(obj, space):
    if isinstance(obj, dict) and "coloring" in obj:
        return {k: int(v) for k, v in obj["coloring"].items()}
    if isinstance(obj, dict) and "blocks" in obj:
        return {x: i for i, b in enumerate(obj["blocks"]) for x in b}
    raise UsageError('coloring must be {"coloring": {...}} or {"blocks": [[...], [...]]}')


# -- commands ----------------------------------------------------------------

def cmd_check_4vc(a):
    V = _values(a.values)
    bad = four_values_check(V)
    if bad is None:
        out = {"result": "ok"}
    else:
        out = {"result": "counterexample", "quad": [fmt(x) for x in bad.quad]}
    if a.sufficient:
        out["sufficient"] = sufficient_condition_check(V)
    return out


def cmd_dv(a):
    V = _values(a.values)
    table = dv_distance(V)
    return {"values": [fmt(v) for v in V], "table": [[fmt(table[x, y]) for y in V] for x in V]}


def cmd_gaps(a):
    rep = gap_report(_values(a.values))
    return {
        "gaps": [{"w": fmt(w), "gap": g} for w, g in rep["gaps"]],
        "runs": [[fmt(lo), fmt(hi)] for lo, hi in rep["runs"]],
    }


def cmd_validate(a):
    M = _space(a.space)
    if a.values:
        M = M.with_value_set(_values(a.values))
    return {"valid": True, "points": len(M), "spectrum": M.spectrum().to_json()["values"]}


def cmd_amalgamate(a):
    M1, M2, V = _space(a.m1), _space(a.m2), _values(a.values)
    one = sum(x not in M2 for x in M1.labels) == 1 and sum(x not in M1 for x in M2.labels) == 1
    res = amalgam.one_point_amalgam(M1, M2, V) if one else amalgam.disjoint_amalgam(M1, M2, V)
    return res.to_json()


def cmd_socket_realize(a):
    M, V = _space(a.space), _values(a.values)
    sock = amalgam.DSocket.from_json(_load(a.socket))
    out, point = amalgam.realize_socket(M, sock, V, a.label)
    return {"space": out.to_json(), "point": point}


def cmd_build_urysohn(a):
    V = _values(a.values)
    seed = _space(a.seed_space) if a.seed_space else None
    res = amalgam.urysohn_approximant(V, seed, a.max_points, a.seed, a.max_socket_size)
    sink = open(a.log, "w") if a.log else sys.stderr
    try:
        for entry in res.log:
            sink.write(json.dumps(entry, separators=(",", ":")) + "\n")
    finally:
        if a.log:
            sink.close()
    return {"space": res.space.to_json(), "report": res.report()}


def cmd_nerve(a):
    tree = ultra.nerve(_space(a.space))
    return tree.to_dot() if a.format == "dot" else tree.to_json()


def cmd_tree2space(a):
    return ultra.tree_to_space(ultra.ValuedTree.from_json(_load(a.tree))).to_json()


def cmd_homog_check(a):
    if a.tree:
        tree = ultra.ValuedTree.from_json(_load(a.space))
    else:
        tree = ultra.nerve(_space(a.space))
    res = ultra.homogeneity_check(tree)
    return {"homogeneous": res is True, "violation": None if res is True else res.to_json()}


def cmd_omega_gen(a):
    degrees = []
    for x in (a.degrees.split(",") if a.degrees else []):
        x = x.strip()
        degrees.append(x if x == ultra.UNBOUNDED else int(x))
    try:
        spec = ultra.OmegaSpec(tuple(_csv_rationals(a.weights)), tuple(degrees), a.cap)
    except ValueError as e:
        raise UsageError(str(e)) from None
    return ultra.omega_sequence_space(spec, a.size_limit).to_json()


def cmd_indiv_report(a):
    return ultra.indivisibility_report(_space(a.space), a.cap)


def cmd_greedy_mono(a):
    M = _space(a.space)
    res = ultra.greedy_monochromatic_embedding(M, _coloring(_load(a.coloring), M))
    return res.to_json()


def cmd_eps_comp(a):
    return {"eps": fmt(rational(a.eps)), "blocks": connect.eps_components(_space(a.space), a.eps)}


def cmd_lambda(a):
    M = _space(a.space)
    if a.eps is not None:
        return {"point": a.point, "eps": fmt(rational(a.eps)), "lambda_eps": fmt(connect.lambda_eps(M, a.point, a.eps))}
    return {"point": a.point, "lambda": fmt(connect.lambda_(M, a.point))}


def cmd_dstar(a):
    return connect.subdominant_ultrametric(_space(a.space)).to_json()


def cmd_cantor(a):
    return connect.cantor_report(_space(a.space))


def cmd_ring(a):
    return {"points": divide.ring(_space(a.space), a.center, a.lo, a.hi)}


def cmd_stripes(a):
    E, O = divide.stripes(_space(a.space), a.center, a.l)
    return {"E": E, "O": O}


def cmd_cover(a):
    order = a.order.split(",") if a.order else None
    return divide.ball_cover(_space(a.space), a.Lambda, order).to_json()


def cmd_partition(a):
    M = _space(a.space)
    if a.cover:
        cover = divide.BallCover.from_json(_load(a.cover))
        divide.check_cover(M, cover)
    elif a.Lambda:
        cover = divide.ball_cover(M, a.Lambda)
    else:
        raise UsageError("partition needs --Lambda or --cover")
    E, O = divide.divisibility_partition(M, cover)
    return {"blocks": [E, O], "cover": cover.to_json()}


def cmd_unbounded_partition(a):
    return divide.unbounded_partition(_space(a.space), a.a0).to_json()


def cmd_ultra_partition(a):
    return divide.ultra_spec_partition(_space(a.space), a.point, _csv_rationals(a.r)).to_json()


def cmd_scatter(a):
    M, W = _space(a.space), _values(a.values)
    sizes = tuple(int(x) for x in a.sizes.split(","))
    chain, empty = divide.scattered_fixpoint(M, W, sizes)
    return {"sub_isolated": divide.sub_isolated_points(M, W, sizes), "chain": chain, "sub_scattered": empty}


def cmd_embed(a):
    A, B = _space(a.a), _space(a.b)
    embs = sp.isometric_embeddings(A, B, limit=a.limit)
    return {"count": len(embs), "embeddings": embs}


def cmd_experiment(a):
    M = _space(a.space)
    part = _load(a.partition)
    if not isinstance(part, dict) or "blocks" not in part:
        raise UsageError('partition must be {"blocks": [[...], ...]}')
    return divide.divisibility_experiment(M, part["blocks"], a.jobs)


def cmd_fixture(a):
    kind = a.kind
    if kind == "chain":
        if not (a.values and a.ell and a.n):
            raise UsageError("fixture chain needs -V, --ell and --n")
        return sp.chain_space(_values(a.values), a.ell, a.n).to_json()
    if kind == "mn":
        if not a.N:
            raise UsageError("fixture mn needs --N")
        return sp.example_space_mn(a.N).to_json()
    if kind == "sup-power":
        if not (a.space and a.n):
            raise UsageError("fixture sup-power needs --space and --n")
        return sp.sup_power(_space(a.space), a.n).to_json()
    if kind == "line":
        return sp.line_space(_csv_rationals(a.points)).to_json()
    if kind == "value-space":
        return sp.value_set_space(_values(a.values)).to_json()
    raise UsageError(f"unknown fixture {kind}")


# -- parser ------------------------------------------------------------------

def build_parser():
    p = argparse.ArgumentParser(prog="vmetric", description="Exact finite metric spaces over value sets.")
    p.add_argument("-o", "--output", help="write result here instead of stdout")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        s = sub.add_parser(name, help=help_)
        s.set_defaults(fn=fn)
        return s

    s = add("check-4vc", cmd_check_4vc, "four-values condition")
    s.add_argument("values")
    s.add_argument("--sufficient", action="store_true", help="also report the sufficient condition")
    add("dv", cmd_dv, "canonical distance on V").add_argument("values")
    add("gaps", cmd_gaps, "gap report of V").add_argument("values")

    s = add("validate", cmd_validate, "validate a space")
    s.add_argument("space")
    s.add_argument("-V", "--values")

    s = add("amalgamate", cmd_amalgamate, "amalgamate two spaces over V")
    s.add_argument("m1")
    s.add_argument("m2")
    s.add_argument("-V", "--values", required=True)

    s = add("socket-realize", cmd_socket_realize, "add a point realizing a socket")
    s.add_argument("space")
    s.add_argument("socket")
    s.add_argument("-V", "--values", required=True)
    s.add_argument("--label")

    s = add("build-urysohn", cmd_build_urysohn, "grow a Urysohn approximant")
    s.add_argument("-V", "--values", required=True)
    s.add_argument("--max-points", type=int, required=True)
    s.add_argument("--seed", type=int, required=True, help="shuffle seed")
    s.add_argument("--seed-space", help="starting space (default: one point)")
    s.add_argument("--max-socket-size", type=int)
    s.add_argument("--log", help="provenance log path (JSON lines; default stderr)")

    s = add("nerve", cmd_nerve, "valued tree of balls")
    s.add_argument("space")
    s.add_argument("--format", choices=["json", "dot"], default="json")
    add("tree2space", cmd_tree2space, "space of a valued tree").add_argument("tree")
    s = add("homog-check", cmd_homog_check, "homogeneity criterion")
    s.add_argument("space")
    s.add_argument("--tree", action="store_true", help="input is a tree, not a space")

    s = add("omega-gen", cmd_omega_gen, "sequence space with weights and degrees")
    s.add_argument("--weights", default="")
    s.add_argument("--degrees", default="")
    s.add_argument("--cap", type=int)
    s.add_argument("--size-limit", type=int, default=4096)

    s = add("indiv-report", cmd_indiv_report, "indivisibility criteria report")
    s.add_argument("space")
    s.add_argument("--cap", type=int, required=True)
    s = add("greedy-mono", cmd_greedy_mono, "monochromatic copy or witness")
    s.add_argument("space")
    s.add_argument("coloring")

    s = add("eps-comp", cmd_eps_comp, "eps-chain components")
    s.add_argument("space")
    s.add_argument("--eps", required=True)
    s = add("lambda", cmd_lambda, "lambda or lambda_eps at a point")
    s.add_argument("space")
    s.add_argument("--point", required=True)
    s.add_argument("--eps")
    add("dstar", cmd_dstar, "subdominant ultrametric").add_argument("space")
    add("cantor", cmd_cantor, "components per scale").add_argument("space")

    s = add("ring", cmd_ring, "points with lo <= d(c, x) < hi")
    s.add_argument("space")
    s.add_argument("--center", required=True)
    s.add_argument("--lo", required=True)
    s.add_argument("--hi", required=True)
    s = add("stripes", cmd_stripes, "even/odd stripes around a point")
    s.add_argument("space")
    s.add_argument("--center", required=True)
    s.add_argument("--l", required=True)
    s = add("cover", cmd_cover, "disjoint ball cover")
    s.add_argument("space")
    s.add_argument("--Lambda", required=True)
    s.add_argument("--order")
    s = add("partition", cmd_partition, "stripe partition over a ball cover")
    s.add_argument("space")
    s.add_argument("--Lambda")
    s.add_argument("--cover")
    s = add("unbounded-partition", cmd_unbounded_partition, "ring partition around a0")
    s.add_argument("space")
    s.add_argument("--a0", required=True)
    s = add("ultra-partition", cmd_ultra_partition, "ring partition of an ultrametric space")
    s.add_argument("space")
    s.add_argument("--point", required=True)
    s.add_argument("--r", required=True, help="comma-separated radii starting at 0")
    s = add("scatter", cmd_scatter, "sub-isolated points and derivative chain")
    s.add_argument("space")
    s.add_argument("-W", "--values", required=True)
    s.add_argument("--sizes", default="2")

    s = add("embed", cmd_embed, "isometric embeddings of A into B")
    s.add_argument("a")
    s.add_argument("b")
    s.add_argument("--limit", type=int)
    s = add("experiment", cmd_experiment, "which blocks contain a copy of the space")
    s.add_argument("space")
    s.add_argument("partition")
    s.add_argument("--jobs", type=int, default=1)

    s = add("fixture", cmd_fixture, "generate a fixture space")
    s.add_argument("kind", choices=["chain", "mn", "sup-power", "line", "value-space"])
    s.add_argument("-V", "--values")
    s.add_argument("--ell")
    s.add_argument("--n", type=int)
    s.add_argument("--N", type=int)
    s.add_argument("--space")
    s.add_argument("--points", default="")
    return p


def _emit(result, path):
    text = result if isinstance(result, str) else json.dumps(result, separators=(",", ":")) + "\n"
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    logging.basicConfig(stream=sys.stderr, level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        result = args.fn(args)
    except UsageError as e:
        sys.stderr.write(f"vmetric {args.command}: {e}\n")
        return 2
    except VMetricError as e:
        _emit(e.to_json(), args.output)
        return 1
    _emit(result, args.output)
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
