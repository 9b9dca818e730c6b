"""Command-line front end: ``tangle measure|identity|verify|net``.

Exit codes: 0 success, 1 verification violations, 2 usage or parse errors,
3 validation failures (bad states, non-normalized tables, ...).
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import os
import sys
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import bayesnet as bn
from . import identities as ids
from . import measures as ms
from . import verify as vf
from .errors import GrammarError, TangleError
from .sampling import trial_rng
from .states import as_collection, e_sum, partial_trace, tanglement

EXIT_OK, EXIT_VIOLATION, EXIT_USAGE, EXIT_INVALID = 0, 1, 2, 3
DEFAULT_SEED = 0
IDENTITY_TOL = 1e-9


class UsageError(Exception):
    """Malformed command-line input (exit code 2)."""


def fmt(x: float) -> str:
    """12 significant digits, with negative zero printed as 0."""
    s = f"{float(x):.12g}"
    return "0" if s == "-0" else s


# ------------------------------------------------------------------ config


@dataclass
class RunConfig:
    command: str = ""
    inputs: list[str] = field(default_factory=list)
    seed: int = DEFAULT_SEED
    trials: int | None = None
    dims: tuple[int, int] | None = None
    tol: float = IDENTITY_TOL
    format: str = "text"
    out: str | None = None
    workers: int = 1

    @classmethod
    def from_dict(cls, doc: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise UsageError(f"unknown config keys: {unknown}")
        doc = dict(doc)
        if doc.get("dims") is not None:
            doc["dims"] = parse_dims(doc["dims"]) if isinstance(doc["dims"], str) else tuple(doc["dims"])
        return cls(**doc)

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["dims"] = list(self.dims) if self.dims else None
        return d


def resolve_seed(explicit: int | None) -> int:
    if explicit is not None:
        return explicit
    env = os.environ.get("TANGLE_SEED")
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise UsageError(f"TANGLE_SEED must be an integer, got {env!r}") from None
    return DEFAULT_SEED


# ----------------------------------------------------------------- parsing


def parse_weights(text: str) -> np.ndarray:
    try:
        return np.array([float(v) for v in text.split(",") if v.strip()], dtype=float)
    except ValueError:
        raise UsageError(f"weights must be a comma list of numbers, got {text!r}") from None


def parse_dims(text: str) -> tuple[int, int]:
    try:
        a, b = text.lower().split("x")
        dims = int(a), int(b)
    except ValueError:
        raise UsageError(f"dims must look like NxM, got {text!r}") from None
    if min(dims) < 1:
        raise UsageError("dims must be positive")
    return dims


def complex_array(doc, ndim: int) -> np.ndarray:
    """Nested lists of rank ``ndim``, or rank ``ndim + 1`` with [re, im] pairs as leaves."""
    try:
        arr = np.asarray(doc, dtype=float)
    except (TypeError, ValueError):
        raise UsageError("array entries must be numbers or [re, im] pairs") from None
    if arr.ndim == ndim:
        return arr.astype(complex)
    if arr.ndim == ndim + 1 and arr.shape[-1] == 2:
        return arr[..., 0] + 1j * arr[..., 1]
    raise UsageError(f"expected a rank-{ndim} array (optionally of [re, im] pairs), got shape {arr.shape}")


def load_json_arg(text: str):
    """Inline JSON, or ``@path`` to read it from a file."""
    try:
        if text.startswith("@"):
            with open(text[1:]) as fh:
                return json.load(fh)
        return json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise UsageError(f"cannot read JSON input: {exc}") from None


def parse_matrix(text: str) -> np.ndarray:
    return complex_array(load_json_arg(text), 2)


def parse_groups(text: str) -> list[list[str]]:
    """``x;y,z`` -> [[x], [y, z]]."""
    groups = [[s.strip() for s in g.split(",") if s.strip()] for g in text.split(";")]
    if any(not g for g in groups):
        raise UsageError(f"empty group in {text!r}")
    return groups


def parse_binding(text: str) -> dict[int, list[str]]:
    """``1=x;2=y,z`` -> {1: [x], 2: [y, z]}."""
    out = {}
    for part in text.split(";"):
        if not part.strip():
            continue
        try:
            k, v = part.split("=")
            out[int(k)] = [s.strip() for s in v.split(",") if s.strip()]
        except ValueError:
            raise UsageError(f"bad binding {part!r}; expected INDEX=node,node") from None
    return out


def parse_partition(text: str) -> list[list[int]]:
    """``1|2,3`` or ``(1)|(2,3)`` -> [[1], [2, 3]]."""
    try:
        return [[int(v) for v in g.strip().strip("()").split(",")] for g in text.split("|")]
    except ValueError:
        raise UsageError(f"bad partition {text!r}; expected e.g. 1|2,3") from None


# ----------------------------------------------------------------- output


class Output:
    def __init__(self, path: str | None):
        self.path = path
        self.buf = io.StringIO()

    def line(self, text: str = "") -> None:
        self.buf.write(text + "\n")

    def flush(self) -> None:
        text = self.buf.getvalue()
        if self.path and self.path != "-":
            with open(self.path, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)


def _emit_values(args, pairs: Sequence[tuple[str, float]]) -> None:
    out = Output(args.out)
    if args.format == "json":
        out.line(json.dumps({k: float(v) for k, v in pairs}, sort_keys=True))
    elif args.format == "csv":
        out.line(",".join(k for k, _ in pairs))
        out.line(",".join(fmt(v) for _, v in pairs))
    elif len(pairs) == 1:
        out.line(fmt(pairs[0][1]))
    else:
        for k, v in pairs:
            out.line(f"{k} {fmt(v)}")
    out.flush()


# ---------------------------------------------------------------- measure


def _psis(args) -> list[np.ndarray]:
    doc = load_json_arg(args.psis)
    if not isinstance(doc, list) or not doc:
        raise UsageError("--psis must be a non-empty list of matrices")
    return [complex_array(p, 2) for p in doc]


def cmd_measure(args) -> int:
    what = args.quantity
    if what == "curve":
        out = Output(args.out)
        w = csv.writer(out.buf, lineterminator="\n")
        w.writerow(["t", "p0", "h"])
        for row in ms.fig2_curve(args.samples):
            w.writerow([fmt(v) for v in row])
        out.flush()
        return EXIT_OK
    if what == "ef-pure":
        _emit_values(args, [("ef", ms.ef_pure(parse_matrix(_need(args, "psi"))))])
    elif what == "t":
        r = ms.two_qubit_t(parse_matrix(_need(args, "psi")))
        _emit_values(args, [("t", r.t), ("p0", r.p0), ("ef", r.ef)])
    elif what == "ef-bell":
        _emit_values(args, [("ef", ms.ef_bell_diagonal(parse_weights(_need(args, "w"))))])
    elif what == "st-bell":
        _emit_values(args, [("st", ms.st_bell_diagonal(parse_weights(_need(args, "w"))))])
    elif what == "st-mixed":
        w = parse_weights(_need(args, "w"))
        _emit_values(args, [("st", ms.st_general_mixed(w, _psis(_need(args, "psis") and args)))])
    elif what == "ef-mixed":
        budget = ms.EfBudget(starts=args.starts, iterations=args.iterations, seed=resolve_seed(args.seed))
        if args.rho:
            rho = parse_matrix(args.rho)
            if not args.dims:
                raise UsageError("--rho needs --dims NxM")
            dims = parse_dims(args.dims)
        else:
            w = parse_weights(_need(args, "w"))
            if args.psis:
                mats = _psis(args)
                if len(w) != len(mats):
                    raise UsageError(f"{len(w)} weights for {len(mats)} states")
                dims = mats[0].shape
                rho = sum(wi * np.outer(m.ravel(), m.ravel().conj()) for wi, m in zip(w, mats))
            else:
                rho, dims = ms.bell_diagonal_state(w), (2, 2)
        rep = ms.ef_mixed(rho, budget=budget, dims=dims)
        _emit_values(args, [("ef", rep.value)])
    return EXIT_OK


def _need(args, name: str):
    v = getattr(args, name)
    if v is None:
        raise UsageError(f"--{name} is required for measure {args.quantity}")
    return v


# --------------------------------------------------------------- identity


def _random_states(rng, n: int):
    """One random classical distribution and one random QB-net marginal over E, X1..Xn."""
    c = bn.classical_state(bn.random_net(rng, bn.CLASSICAL, n + 1, 2, 2))
    # an extra unbound node makes the listener-speaker marginal mixed
    q = bn.meta_state(bn.random_net(rng, bn.QUANTUM, n + 2, 2, 2))
    return [c, q]


def _listener_count(expr: ids.EntropyExpr) -> int:
    return max(expr.indices() - {ids.SPEAKER}, default=1)


def cmd_identity(args) -> int:
    out = Output(args.out)
    op = args.op
    if op == "split":
        ident = ids.split_compound(parse_partition(args.expr))
        if args.format == "json":
            out.line(json.dumps({"lhs": ident.lhs.to_json(), "rhs": ident.rhs.to_json()}, sort_keys=True))
        else:
            out.line(ident.render())
        out.flush()
        return EXIT_OK
    expr = ids.parse(args.expr)
    if op in ("expand", "dualize"):
        res = expr.expand() if op == "expand" else ids.dualize(expr)
        out.line(json.dumps(res.to_json(), sort_keys=True) if args.format == "json" else res.render())
        out.flush()
        return EXIT_OK
    # check
    seed = resolve_seed(args.seed)
    worst = 0.0
    evaluated = 0
    if args.net:
        with open(args.net) as fh:
            net = bn.loads(fh.read())
        if not args.bind:
            raise UsageError("--net needs --bind INDEX=node,...")
        s = bn.state_of(net)
        spk = as_collection(args.speaker.split(",")) if args.speaker else frozenset()
        worst = abs(ids.evaluate(expr, s, parse_binding(args.bind), spk))
        evaluated = 1
    else:
        n = _listener_count(expr)
        binding = {k: [f"v{k}"] for k in range(1, n + 1)}
        for t in range(args.trials):
            for s in _random_states(trial_rng(seed, t), n):
                worst = max(worst, abs(ids.evaluate(expr, s, binding, ["v0"])))
                evaluated += 1
    ok = worst < args.tol
    if args.format == "json":
        out.line(json.dumps({"expr": expr.render(), "states": evaluated, "max_residual": worst,
                             "seed": seed, "holds": ok}, sort_keys=True))
    else:
        out.line(f"max_residual {worst:.3e} over {evaluated} states (seed {seed})")
    out.flush()
    return EXIT_OK if ok else EXIT_VIOLATION


# ----------------------------------------------------------------- verify


def _strip_timing(doc):
    if isinstance(doc, dict):
        return {k: _strip_timing(v) for k, v in doc.items() if k != "runtime_ms"}
    if isinstance(doc, list):
        return [_strip_timing(v) for v in doc]
    return doc


def cmd_verify(args) -> int:
    doc = {}
    if args.config:
        doc = load_json_arg("@" + args.config)
        if not isinstance(doc, dict):
            raise UsageError("config file must hold a JSON object")
    cfg = RunConfig.from_dict(doc)
    cfg.command = f"verify {args.suite}"
    cfg.seed = resolve_seed(args.seed if args.seed is not None else doc.get("seed"))
    if args.trials is not None:
        cfg.trials = args.trials
    if args.dims:
        cfg.dims = parse_dims(args.dims)
    if args.workers is not None:
        cfg.workers = args.workers
    elif "workers" not in doc:
        cfg.workers = vf.default_workers()
    suite_cfg = vf.SuiteConfig(trials=cfg.trials, dims=cfg.dims, seed=cfg.seed, workers=cfg.workers)
    try:
        reports = vf.run_suite(args.suite, suite_cfg)
    except ValueError as exc:
        if isinstance(exc, TangleError):
            raise
        raise UsageError(str(exc)) from None
    total = sum(r.violations for r in reports)
    doc = {
        "suite": args.suite,
        "seed": cfg.seed,
        "trials": cfg.trials,
        "dims": list(cfg.dims) if cfg.dims else None,
        "violations": total,
        "reports": [r.to_dict() for r in reports],
    }
    text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    if args.format == "json" and not args.out:
        sys.stdout.write(text)
    elif args.format != "json":
        for r in reports:
            if r.name == "negative-cmi":
                print(fmt(r.extras["value"]))
            print(f"{r.name}: trials={r.trials} violations={r.violations} "
                  f"worst_residual={r.worst_residual:.3e} seed={r.seed}")
        print(f"total violations {total}")
    return EXIT_OK if total == 0 else EXIT_VIOLATION


# -------------------------------------------------------------------- net


def cmd_net(args) -> int:
    out = Output(args.out)
    if args.op == "kinds":
        for k in bn.canonical_kinds():
            out.line(k)
    elif args.op == "build":
        params = load_json_arg(args.params) if args.params else {}
        if not isinstance(params, dict):
            raise UsageError("--params must be a JSON object")
        params = {k: _array_param(v) for k, v in params.items()}
        net = bn.build_canonical_net(args.kind, **params)
        out.line(bn.dumps(net, indent=2))
    else:
        with open(args.file) as fh:
            try:
                net = bn.loads(fh.read())
            except json.JSONDecodeError as exc:
                raise UsageError(f"cannot parse net file: {exc}") from None
        if args.op == "validate":
            problems = bn.validate(net)
            for v in problems:
                out.line(v.message)
            out.line("ok" if not problems else f"{len(problems)} violations")
            out.flush()
            return EXIT_OK if not problems else EXIT_INVALID
        # tanglement
        s = bn.state_of(net)
        if args.esum:
            s = e_sum(s, args.esum.split(","))
        if args.trace:
            s = partial_trace(s, args.trace.split(","))
        speaker = args.speaker.split(",") if args.speaker else []
        groups = parse_groups(args.listeners)
        value = tanglement(s, groups, speaker=speaker)
        out.line(fmt(value))
    out.flush()
    return EXIT_OK


def _array_param(v):
    """Builder argument: {"re": ..., "im": ...} objects become complex arrays."""
    if isinstance(v, dict) and set(v) == {"re", "im"}:
        return np.asarray(v["re"], dtype=float) + 1j * np.asarray(v["im"], dtype=float)
    if isinstance(v, list) and v and all(isinstance(x, dict) for x in v):
        return [_array_param(x) for x in v]
    return v


# ------------------------------------------------------------------ parser


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tangle", description="Tanglement and entanglement-of-formation toolkit.")
    sub = p.add_subparsers(dest="command", required=True)

    m = sub.add_parser("measure", help="closed-form and optimized measures")
    m.add_argument("quantity", choices=["ef-pure", "t", "ef-bell", "st-bell", "st-mixed", "ef-mixed", "curve"])
    m.add_argument("--psi", help="amplitude matrix as JSON (entries numbers or [re, im]); @file to read")
    m.add_argument("--psis", help="JSON list of amplitude matrices; @file to read")
    m.add_argument("--rho", help="density matrix as JSON; @file to read")
    m.add_argument("--w", help="comma-separated weights")
    m.add_argument("--dims", help="NxM split for --rho")
    m.add_argument("--samples", type=int, default=101)
    m.add_argument("--starts", type=int, default=6)
    m.add_argument("--iterations", type=int, default=400)
    m.add_argument("--seed", type=int)
    m.add_argument("--format", choices=["text", "csv", "json"], default="text")
    m.add_argument("--out")
    m.set_defaults(func=cmd_measure)

    i = sub.add_parser("identity", help="expand, dualize, split and check entropy identities")
    i.add_argument("op", choices=["expand", "dualize", "split", "check"])
    i.add_argument("expr", help="expression, e.g. 'tau(1|2|3 ; E)'; for split a partition like '1|2,3'")
    i.add_argument("--trials", type=int, default=50)
    i.add_argument("--net", help="net JSON file to evaluate on instead of random states")
    i.add_argument("--bind", help="index binding for --net, e.g. '1=x;2=y'")
    i.add_argument("--speaker", help="speaker nodes for --net, comma-separated")
    i.add_argument("--tol", type=float, default=IDENTITY_TOL)
    i.add_argument("--seed", type=int)
    i.add_argument("--format", choices=["text", "json"], default="text")
    i.add_argument("--out")
    i.set_defaults(func=cmd_identity)

    v = sub.add_parser("verify", help="Monte Carlo and optimization checks")
    v.add_argument("suite", choices=sorted(vf.SUITES) + ["all"])
    v.add_argument("--trials", type=int)
    v.add_argument("--dims")
    v.add_argument("--seed", type=int)
    v.add_argument("--workers", type=int, help="worker processes (default: available cores)")
    v.add_argument("--config", help="JSON file with RunConfig fields")
    v.add_argument("--format", choices=["text", "json"], default="text")
    v.add_argument("--out", help="write the JSON report here")
    v.set_defaults(func=cmd_verify)

    n = sub.add_parser("net", help="build, validate and evaluate nets")
    nsub = n.add_subparsers(dest="op", required=True)
    nk = nsub.add_parser("kinds")
    nk.add_argument("--out")
    nb = nsub.add_parser("build")
    nb.add_argument("kind")
    nb.add_argument("--params", help="JSON object of builder arguments; @file to read")
    nb.add_argument("--out")
    nv = nsub.add_parser("validate")
    nv.add_argument("file")
    nv.add_argument("--out")
    nt = nsub.add_parser("tanglement")
    nt.add_argument("file")
    nt.add_argument("--listeners", required=True, help="listener groups, e.g. 'x;y'")
    nt.add_argument("--speaker", default="")
    nt.add_argument("--esum", help="nodes to e-sum first")
    nt.add_argument("--trace", help="nodes to trace out")
    nt.add_argument("--out")
    n.set_defaults(func=cmd_net)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, GrammarError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except TangleError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
