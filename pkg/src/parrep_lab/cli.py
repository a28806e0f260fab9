"""Command-line front end; every command prints one JSON report.

Exit codes: 0 success, 1 usage, 2 cap exceeded, 3 invalid input.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import abelian, criterion, embedding, game, gallery, structure, uniformization
from .analysis import FunctionTable, ProbabilitySpace
from .errors import CapExceeded, ConvergenceError, InvalidInput, NoCertificate, PreconditionError

SCHEMA = "v1"
EXIT_OK, EXIT_USAGE, EXIT_CAP, EXIT_INVALID = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class _Invalid(Exception):
    """Invalid input that comes with a structured report."""

    def __init__(self, message: str, report: dict):
        super().__init__(message)
        self.report = report


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def _digest(obj) -> str:
    return hashlib.sha256(_canonical(obj).encode()).hexdigest()


# ---------------------------------------------------------------------------
# input loading


def load_game(ref: str, cap: int) -> tuple[game.Game, dict]:
    """``gallery:NAME`` or a path to a game JSON file; returns the game and its JSON form."""
    if ref.startswith("gallery:"):
        g = gallery.gallery_game(ref.split(":", 1)[1])
    else:
        path = Path(ref)
        try:
            obj = json.loads(path.read_text())
        except FileNotFoundError:
            raise _Invalid(f"no such file: {ref}", {"violations": [f"file not found: {ref}"]})
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise _Invalid(f"{ref} is not JSON", {"violations": [f"JSON parse error: {exc}"]})
        try:
            g = game.game_from_json(obj)
        except InvalidInput as exc:
            raise _Invalid(str(exc), {"violations": [str(exc)]})
    rep = game.validate_game(g, cap)
    if not rep.ok:
        raise _Invalid("game failed validation", {"violations": rep.violations})
    return g, game.game_to_json(g)


def _question_label(text: str, alphabet) -> object:
    by_text = {str(x): x for x in alphabet}
    if text not in by_text:
        raise InvalidInput(f"question label {text!r} not in the alphabet {list(alphabet)}")
    return by_text[text]


def load_event(path: str, base: game.Game, n: int) -> tuple[game.ProductEvent, dict]:
    """Event file: ``{"event": [[q, ...], ...]}``, one list per player.

    Each ``q`` is a player's repeated question written as its ``n`` base
    labels joined by commas, e.g. ``"0,1"``.  ``null`` in place of a list
    leaves that player unrestricted.
    """
    try:
        obj = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise _Invalid(f"no such file: {path}", {"violations": [f"file not found: {path}"]})
    except json.JSONDecodeError as exc:
        raise _Invalid(f"{path} is not JSON", {"violations": [f"JSON parse error: {exc}"]})
    rows = obj.get("event") if isinstance(obj, dict) else obj
    if not isinstance(rows, list) or len(rows) != base.num_players:
        raise _Invalid("bad event file", {"violations": [f"expected one list per player ({base.num_players})"]})
    sets = []
    for j, row in enumerate(rows):
        X = base.question_alphabets[j]
        if row is None:
            sets.append(None)
            continue
        members = set()
        for text in row:
            parts = str(text).split(",")
            if len(parts) != n:
                raise _Invalid("bad event file", {"violations": [f"player {j}: {text!r} does not have {n} labels"]})
            members.add(tuple(_question_label(p.strip(), X) for p in parts))
        sets.append(members)
    return sets, obj


def load_functions(path: str) -> tuple[list[FunctionTable], dict]:
    """Functions file: ``{"weights": [...], "n": n, "functions": [[...], ...]}``.

    ``weights`` is the single-coordinate distribution (rationals as strings
    or integers); each function lists its ``s^n`` values in row-major order
    over ``[s]^n``.  Real values may be rationals; complex values are given
    as ``[re, im]`` pairs of floats.
    """
    try:
        obj = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise _Invalid(f"no such file: {path}", {"violations": [f"file not found: {path}"]})
    except json.JSONDecodeError as exc:
        raise _Invalid(f"{path} is not JSON", {"violations": [f"JSON parse error: {exc}"]})
    try:
        space = ProbabilitySpace.of([game.parse_rational(w) for w in obj["weights"]])
        n = int(obj["n"])
        raw = obj["functions"]
    except (KeyError, TypeError) as exc:
        raise _Invalid("bad functions file", {"violations": [f"missing field {exc}"]})
    if not raw:
        raise _Invalid("bad functions file", {"violations": ["no functions given"]})
    shape = (space.size,) * n
    fs = []
    for t, vals in enumerate(raw):
        if len(vals) != space.size**n:
            raise _Invalid("bad functions file", {"violations": [f"function {t} needs {space.size ** n} values"]})
        if any(isinstance(v, list) for v in vals):
            arr = np.array([complex(*v) if isinstance(v, list) else complex(v) for v in vals]).reshape(shape)
        else:
            arr = np.array([game.parse_rational(v) for v in vals], dtype=object).reshape(shape)
        fs.append(FunctionTable(space, arr))
    return fs, obj


# ---------------------------------------------------------------------------
# commands


def _support_dict(s: structure.SupportSet) -> list:
    return [list(t) for t in s.sorted_tuples()]


def cmd_classify(args) -> tuple[dict, dict, dict]:
    g, gj = load_game(args.game, args.cap)
    s = structure.support_of(g)
    rep = structure.classify(s)
    out = rep.as_dict()
    uni = abelian.universal_embedding(s)
    out["nontrivial_embedding"] = not uni.trivial
    out["embedding_group"] = uni.group.describe()
    if not uni.trivial:
        witness = None
        if rep.bipartition is not None:
            w = rep.bipartition
            witness = abelian.bipartition_embedding_witness(s, w.i, w.j, (w.left_part, w.right_part))
        witness = witness or abelian.has_Z_embedding(s) or uni
        if not abelian.verify_witness(s, witness):
            raise AssertionError("embedding witness failed verification")
        out["embedding_witness"] = witness.as_dict()
    out["marginal_condition"] = abelian.check_marginal_condition(s).as_dict()
    out["support"] = _support_dict(s)
    return out, {"game": gj}, {}


def cmd_value(args) -> tuple[dict, dict, dict]:
    g, gj = load_game(args.game, args.cap)
    if args.repeat < 1:
        raise UsageError("--repeat must be at least 1")
    target = game.repeat_game(g, args.repeat, args.cap) if args.repeat > 1 else g
    v, strat = game.value(target, args.cap)
    out = {"value": str(v), "repeat": args.repeat}
    if args.strategy:
        out["strategy"] = game.strategy_to_json(strat)
    return out, {"game": gj, "repeat": args.repeat}, {}


def _strategy_for(g: game.Game, g_rep: game.Game, kind: str, cap: int) -> game.ProductStrategy:
    if kind == "optimal":
        return game.value(g_rep, cap)[1]
    return game.ProductStrategy.coordinatewise(g_rep, game.value(g, cap)[1])


def cmd_chain(args) -> tuple[dict, dict, dict]:
    g, gj = load_game(args.game, args.cap)
    if args.repeat < 1:
        raise UsageError("--repeat must be at least 1")
    g_rep = game.repeat_game(g, args.repeat, args.cap)
    s = _strategy_for(g, g_rep, args.strategy, args.cap)
    chain = criterion.greedy_hard_chain(g_rep, s, args.cap)
    out = {"chain": chain.as_dict(), "strategy": args.strategy, "win_probability": str(game.win_probability(g_rep, s))}
    if args.alpha is not None:
        alpha = game.parse_rational(args.alpha)
        scan = criterion.criterion_hypothesis_scan(g_rep, s, alpha, args.family, cap=args.cap)
        ok, m = criterion.criterion_decay_check(chain, scan, g)
        out["scan"] = scan.as_dict()
        out["decay"] = {"holds": ok, "depth": m}
    return out, {"game": gj, "repeat": args.repeat, "alpha": args.alpha, "family": args.family}, {}


def cmd_simulate(args) -> tuple[dict, dict, dict]:
    g, gj = load_game(args.game, args.cap)
    if args.repeat < 1:
        raise UsageError("--repeat must be at least 1")
    g_rep = game.repeat_game(g, args.repeat, args.cap)
    if args.event:
        sets, ej = load_event(args.event, g, args.repeat)
        full = game.ProductEvent.full(g_rep).sets
        e = game.ProductEvent.of(g_rep, [f if s is None else s for s, f in zip(sets, full)])
    else:
        e, ej = game.ProductEvent.full(g_rep), None
    s = _strategy_for(g, g_rep, args.strategy, args.cap)
    cfg = embedding.EmbeddingConfig(
        delta=game.parse_rational(args.delta), T=args.T, trials=args.trials, seed=args.seed, exact=args.exact
    )
    rep = embedding.simulate_embedding_strategy(g_rep, s, e, cfg, args.cap)
    out = rep.as_dict()
    out["decomposition_holds"] = rep.decomposition_holds
    inputs = {
        "game": gj, "repeat": args.repeat, "event": ej, "strategy": args.strategy,
        "delta": args.delta, "T": args.T, "exact": args.exact, "trials": args.trials,
    }
    return out, inputs, {"seed": args.seed}


def cmd_uniformize(args) -> tuple[dict, dict, dict]:
    fs, fj = load_functions(args.functions)
    s = fs[0].space.size
    cfg = uniformization.IncrementConfig.desk(s) if args.preset == "desk" else uniformization.IncrementConfig()
    try:
        res = uniformization.uniformize(fs, args.delta, args.gamma, seed=args.seed, config=cfg, samples=args.samples)
        out = res.as_dict()
        out["converged"] = True
    except ConvergenceError as exc:
        out = exc.partial.as_dict() if exc.partial is not None else {}
        out["converged"] = False
        out["message"] = str(exc)
    inputs = {"functions": fj, "delta": args.delta, "gamma": args.gamma, "preset": args.preset}
    return out, inputs, {"seed": args.seed}


def cmd_gallery(args) -> tuple[dict, dict, dict]:
    g = gallery.gallery_game(args.name)
    rep = game.validate_game(g, args.cap)
    gj = game.game_to_json(g)
    return {"name": args.name, "valid": rep.ok, "violations": rep.violations, "game": gj}, {"name": args.name}, {}


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--cap", type=int, default=game.DEFAULT_CAP, help="enumeration cap")
    common.add_argument("--indent", type=int, default=2, help="JSON indentation")
    p = _Parser(prog="parrep-lab", description="Parallel repetition laboratory")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("classify", parents=[common], help="structural classification of a game's support")
    c.add_argument("game", help="gallery:NAME or a game JSON path")
    c.set_defaults(fn=cmd_classify)

    c = sub.add_parser("value", parents=[common], help="exact game value by exhaustive search")
    c.add_argument("game")
    c.add_argument("--repeat", type=int, default=1)
    c.add_argument("--strategy", action="store_true", help="include an optimal strategy")
    c.set_defaults(fn=cmd_value)

    c = sub.add_parser("chain", parents=[common], help="greedy hard-coordinate chain of the repeated game")
    c.add_argument("game")
    c.add_argument("--repeat", type=int, required=True)
    c.add_argument("--strategy", choices=("optimal", "coordinatewise"), default="optimal")
    c.add_argument("--alpha", help="event-mass threshold for the hypothesis scan, e.g. 1/16")
    c.add_argument("--family", choices=("full", "single", "tuple"), default="tuple")
    c.set_defaults(fn=cmd_chain)

    c = sub.add_parser("simulate-embed", parents=[common], help="win probability of the embedding strategy")
    c.add_argument("game")
    c.add_argument("--repeat", type=int, required=True)
    c.add_argument("--event", help="event JSON file; omitted means the full space")
    c.add_argument("--exact", action="store_true", help="exact enumeration instead of sampling")
    c.add_argument("--strategy", choices=("optimal", "coordinatewise"), default="coordinatewise")
    c.add_argument("--delta", default="1/2")
    c.add_argument("--T", type=int, default=2)
    c.add_argument("--trials", type=int, default=2000)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(fn=cmd_simulate)

    c = sub.add_parser("uniformize", parents=[common], help="run uniformization on a list of functions")
    c.add_argument("functions", help="functions JSON path")
    c.add_argument("--delta", type=float, default=0.25)
    c.add_argument("--gamma", type=float, default=0.5)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--samples", type=int, default=200)
    c.add_argument("--preset", choices=("desk", "asymptotic"), default="desk")
    c.set_defaults(fn=cmd_uniformize)

    c = sub.add_parser("gallery", parents=[common], help="emit a named example game as JSON")
    c.add_argument("name", help=", ".join(gallery.NAMES))
    c.set_defaults(fn=cmd_gallery)
    return p


def run(argv: list[str]) -> tuple[dict, int]:
    """Execute one command; returns the report and the exit code."""
    start = time.perf_counter()
    report: dict = {"schema": SCHEMA, "command": list(argv)}
    indent = 2
    try:
        args = build_parser().parse_args(argv)
        indent = args.indent
        result, inputs, seeds = args.fn(args)
        report.update(status="ok", inputs_digest=_digest(inputs), seeds=seeds, result=result)
        code = EXIT_OK
    except UsageError as exc:
        report.update(status="usage", error=str(exc))
        code = EXIT_USAGE
    except CapExceeded as exc:
        report.update(status="cap_exceeded", error=str(exc), dimension=exc.dimension, size=exc.size, cap=exc.cap)
        code = EXIT_CAP
    except _Invalid as exc:
        report.update(status="invalid", error=str(exc), validation=exc.report)
        code = EXIT_INVALID
    except (InvalidInput, PreconditionError, NoCertificate) as exc:
        report.update(status="invalid", error=str(exc), validation={"violations": [str(exc)]})
        code = EXIT_INVALID
    report["timing"] = {"elapsed_seconds": round(time.perf_counter() - start, 6), "timestamp": time.time()}
    report["_indent"] = indent
    return report, code


def render(report: dict) -> str:
    indent = report.pop("_indent", 2)
    return json.dumps(report, indent=indent, sort_keys=False, default=_json_default)


def _json_default(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    if isinstance(v, (set, frozenset, tuple)):
        return list(v)
    return str(v)


def main(argv: list[str] | None = None) -> int:
    report, code = run(sys.argv[1:] if argv is None else argv)
    print(render(report))
    return code


if __name__ == "__main__":
    sys.exit(main())
