"""quiverrep command line: JSON in, JSON out."""
from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

from . import constructions, decompose, planner, reflect
from .errors import BadParameter, NotASink, QuiverRepError
from .numerics import TolerancePolicy
from .quiver import Quiver, is_sink, is_source, underlying_classify
from .rep import HilbertRep, find_isomorphism, intertwiner_residual

DEFAULT_SEED = 0


@dataclass
class RunManifest:
    command: str
    argv: list
    inputs: list
    tolerance: dict
    seed: int
    timings: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


def _load_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise BadParameter(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise BadParameter(f"{path} is not valid JSON: {exc}") from None


def _load_quiver(path: str) -> Quiver:
    obj = _load_json(path)
    # a representation file also carries its quiver
    return Quiver.from_json(obj["quiver"] if "quiver" in obj and "vertices" not in obj else obj)


def _load_rep(path: str) -> HilbertRep:
    obj = _load_json(path)
    return HilbertRep.from_json(obj.get("rep", obj) if "quiver" not in obj else obj)


# ---------------------------------------------------------------------------
# commands; each returns (payload, input paths)


def cmd_classify(args, tol):
    return underlying_classify(_load_quiver(args.quiver)).to_json(), [args.quiver]


def cmd_build(args, tol):
    lam = complex(args.lam)
    x = constructions.build_example(args.kind, args.n, lam, m=args.m, tol=tol)
    return x.to_json(), []


def cmd_reflect(args, tol):
    x = _load_rep(args.rep)
    out = reflect.reflect(x, args.vertex, args.sign, tol)
    return out.to_json(), [args.rep]


def cmd_decompose(args, tol):
    x = _load_rep(args.rep)
    res = decompose.decompose_fully(x, tol, seed=args.seed)
    return res.to_json(), [args.rep]


def cmd_check(args, tol):
    x = _load_rep(args.rep)
    return decompose.is_indecomposable(x, tol, seed=args.seed).to_json(), [args.rep]


def cmd_duality(args, tol):
    x = _load_rep(args.rep)
    v = args.vertex
    if is_sink(x.quiver, v):
        r = reflect.duality_decompose_sink(x, v, tol)
        once = reflect.reflect_plus(x, v, tol).rep
        lemma = reflect.co_fullness(once, v, tol)
        thrice = reflect.reflect_plus(reflect.reflect_minus(once, v, tol).rep, v, tol).rep
        out = {"vertex": v, "mode": "sink", "rank": r.meta["rank_h"], "full": reflect.fullness(x, v, tol).holds}
    elif is_source(x.quiver, v):
        r = reflect.duality_decompose_source(x, v, tol)
        once = reflect.reflect_minus(x, v, tol).rep
        lemma = reflect.fullness(once, v, tol)
        thrice = reflect.reflect_minus(reflect.reflect_plus(once, v, tol).rep, v, tol).rep
        out = {"vertex": v, "mode": "source", "rank": r.meta["rank_hhat"],
               "co_full": reflect.co_fullness(x, v, tol).holds}
    else:
        raise NotASink(f"vertex {v} is neither a sink nor a source")
    iso = find_isomorphism(thrice, once, tol, seed=args.seed)
    out.update(
        iso_residual=r.residual,
        tilde_dim=r.residual_dim,
        expected_tilde_dim=x.dims[v] - out["rank"],
        reflected_dims=r.reflected.dims,
        lemma_after_reflection=lemma.holds,
        triple_reflection_residual=None if iso is None else intertwiner_residual(thrice, once, iso),
    )
    return out, [args.rep]


def cmd_plan(args, tol):
    p = planner.plan_between(_load_quiver(args.src), _load_quiver(args.dst))
    return p.to_json(), [args.src, args.dst]


def cmd_synthesize(args, tol):
    q = _load_quiver(args.quiver)
    if args.sweep:
        rows = planner.synthesize_sweep(q, args.N, tol, seed=args.seed, limit=args.limit, jobs=args.jobs)
        certs = [c for _, c in rows]
        payload = {
            "orientations": len(rows),
            "indecomposable": sum(c["verdict"] == "indecomposable" for c in certs),
            "runs": [{"quiver": qj, "certificate": c} for qj, c in rows],
        }
        return payload, [args.quiver]
    s = planner.synthesize_indecomposable(q, args.N, tol, seed=args.seed)
    payload = {"certificate": s.certificate()}
    if args.with_rep:
        payload["rep"] = s.rep.to_json()
    return payload, [args.quiver]


def cmd_export_dot(args, tol):
    return _load_quiver(args.input).to_dot(), [args.input]


COMMANDS = {
    "classify": cmd_classify,
    "build": cmd_build,
    "reflect": cmd_reflect,
    "decompose": cmd_decompose,
    "check": cmd_check,
    "duality": cmd_duality,
    "plan": cmd_plan,
    "synthesize": cmd_synthesize,
    "export-dot": cmd_export_dot,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("--tol", help="tolerances: a number (residual_tol), k=v pairs, or a JSON object")
    common.add_argument("--manifest", help="manifest path (default: <out>.manifest.json when --out is set)")

    p = argparse.ArgumentParser(prog="quiverrep", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("classify", parents=[common], help="classify the underlying graph")
    s.add_argument("quiver")

    s = sub.add_parser("build", parents=[common], help="build a named example")
    s.add_argument("--kind", required=True, choices=constructions.KINDS)
    s.add_argument("--n", type=int, required=True, help="truncation size")
    s.add_argument("--lambda", dest="lam", default="0", help="shift offset (complex literal)")
    s.add_argument("--m", type=int, help="diagram index for An_tilde / Dn_tilde")

    s = sub.add_parser("reflect", parents=[common], help="apply a reflection functor")
    s.add_argument("--rep", required=True)
    s.add_argument("--vertex", required=True)
    s.add_argument("--sign", required=True, choices=["+", "-"])

    for name, text in (("decompose", "split into indecomposables"), ("check", "indecomposability certificate")):
        s = sub.add_parser(name, parents=[common], help=text)
        s.add_argument("--rep", required=True)

    s = sub.add_parser("duality", parents=[common], help="duality splitting at a sink or source")
    s.add_argument("--rep", required=True)
    s.add_argument("--vertex", required=True)

    s = sub.add_parser("plan", parents=[common], help="source-reflection plan between orientations")
    s.add_argument("--from", dest="src", required=True)
    s.add_argument("--to", dest="dst", required=True)

    s = sub.add_parser("synthesize", parents=[common], help="indecomposable rep on a non-Dynkin quiver")
    s.add_argument("--quiver", required=True)
    s.add_argument("--N", type=int, required=True)
    s.add_argument("--sweep", action="store_true", help="run over every orientation of the graph")
    s.add_argument("--limit", type=int, help="sample at most this many orientations")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--with-rep", action="store_true", help="include the representation")

    s = sub.add_parser("export-dot", parents=[common], help="Graphviz text for a quiver or rep file")
    s.add_argument("input")
    return p


def _emit(payload, path: str | None):
    text = payload if isinstance(payload, str) else json.dumps(payload, separators=(",", ":"))
    if path:
        Path(path).write_text(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    t0 = time.perf_counter()
    try:
        tol = TolerancePolicy.resolve(args.tol)
        payload, inputs = COMMANDS[args.command](args, tol)
    except QuiverRepError as exc:
        _emit({"error": exc.code, "message": str(exc)}, None)
        return 1
    elapsed = time.perf_counter() - t0
    _emit(payload, args.out)
    mpath = args.manifest or (f"{args.out}.manifest.json" if args.out else None)
    if mpath:
        m = RunManifest(args.command, list(sys.argv[1:] if argv is None else argv), inputs,
                        tol.to_dict(), args.seed, {"seconds": elapsed},
                        [args.out] if args.out else [])
        Path(mpath).write_text(json.dumps(m.to_json(), indent=2) + "\n")
    return 0


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
