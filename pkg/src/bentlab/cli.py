"""``bentlab`` command-line front end.

Exit codes: 0 success, 2 negative verdict (failed certificate, PPT input to
``reduce``), 1 any other error.  Machine output goes to ``--out`` or stdout;
progress and diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
import time
from decimal import Decimal, InvalidOperation
from pathlib import Path

import numpy as np

from . import __version__
from .canonical import (CanonicalParams, EpsParams, build_rho_bc, classify_region, pt_spectrum,
                        region_points)
from .distill import OptimizerOptions, eps_threshold, f_value, min_rank2
from .errors import BentlabError, InvalidInput, NotNpt
from .policy import DEFAULT_POLICY
from .posmaps import (choi_from_dict, compose_transpose, is_2_positive_maxent, is_k_positive,
                      state_to_map)
from .qmat import partial_transpose, state_from_dict
from .reduction import reduce_to_canonical, tr_H
from .sepcert import (corner_ensemble, decompose_ppt_point, ensemble_from_dict, ensemble_to_dict,
                      verify_separable)

EXIT_OK, EXIT_ERROR, EXIT_NEGATIVE = 0, 1, 2


def build_id() -> str:
    """Content hash of the installed sources, in the style of a short commit id."""
    h = hashlib.sha1()
    root = Path(__file__).parent
    for path in sorted(root.glob("*.py")) + sorted(root.glob("*.pyx")):
        h.update(path.name.encode())
        h.update(path.read_bytes())
    return h.hexdigest()[:12]


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return format(float(x), ".17g")
    return str(x)


def _progress(msg: str) -> None:
    print(msg, file=sys.stderr, flush=True)


def _parse_range(text: str, parts: int, name: str) -> list[float]:
    try:
        vals = [float(t) for t in text.split(":")]
    except ValueError:
        raise InvalidInput(f"{name} expects {parts} ':'-separated numbers, got {text!r}") from None
    if len(vals) != parts:
        raise InvalidInput(f"{name} expects {parts} ':'-separated numbers, got {text!r}")
    return vals


def eps_grid(text: str) -> list[float]:
    """``lo:hi:step`` expanded in decimal arithmetic so grid points print as typed."""
    _parse_range(text, 3, "--eps-grid")
    try:
        lo, hi, step = (Decimal(t) for t in text.split(":"))
    except InvalidOperation:
        raise InvalidInput(f"bad --eps-grid {text!r}") from None
    if step <= 0 or hi < lo or lo < 0:
        raise InvalidInput(f"bad --eps-grid {text!r}")
    n = int((hi - lo) / step) + 1
    return [float(lo + step * i) for i in range(n)]


def grid_shape(text: str) -> tuple[int, int]:
    parts = text.lower().replace("×", "x").split("x")
    try:
        nb, nc = (int(p) for p in parts)
    except ValueError:
        raise InvalidInput(f"--grid expects bNxcN, got {text!r}") from None
    if nb < 0 or nc < 0:
        raise InvalidInput("--grid counts must be non-negative")
    return nb, nc


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    if n == 0:
        return np.zeros(0)
    if n == 1:
        return np.array([lo])
    return np.linspace(lo, hi, n)


def write_csv(path: str | None, header: list[str], rows, seed: int | None) -> None:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    buf.write(f"# bentlab {__version__} build={build_id()} seed={fmt(seed) or 'none'}\n")
    _emit(path, buf.getvalue())


def write_json(path: str | None, payload: dict, seed: int | None, started: float) -> None:
    payload = dict(payload)
    payload.update({"version": __version__, "build": build_id(), "seed": seed,
                    "wallTime": time.perf_counter() - started})
    _emit(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _emit(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise BentlabError(f"cannot write {path}: {exc.strerror}") from exc


def _read_json(path: str) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except OSError as exc:
        raise BentlabError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InvalidInput(f"{path} is not valid JSON: {exc}") from exc


def _options(args) -> OptimizerOptions:
    if args.restarts < 1:
        raise InvalidInput("--restarts must be positive")
    return OptimizerOptions(restarts=args.restarts, seed=args.seed,
                            tol=args.tol if args.tol is not None else 1e-12,
                            workers=args.workers)


def _check_d(d: int, minimum: int = 3) -> None:
    if d < minimum:
        raise InvalidInput(f"--d must be at least {minimum}")


def cmd_region_map(args) -> int:
    d = args.d
    _check_d(d)
    nb, nc = grid_shape(args.grid)
    top = 2.0 / (d * (d - 1))
    b_lo, b_hi = _parse_range(args.b_range, 2, "--b-range") if args.b_range else (0.0, top)
    c_lo, c_hi = _parse_range(args.c_range, 2, "--c-range") if args.c_range else (0.0, top)
    if min(b_lo, c_lo) < 0:
        raise InvalidInput("grid bounds must be non-negative")
    if args.f1 and args.seed is None:
        raise InvalidInput("--f1 runs the optimizer and needs --seed")
    opts = _options(args) if args.f1 else None
    rows = []
    bs, cs = _axis(b_lo, b_hi, nb), _axis(c_lo, c_hi, nc)
    for ib, b in enumerate(bs):
        for c in cs:
            p = CanonicalParams(d, float(b), float(c))
            label = classify_region(p)
            s = pt_spectrum(p)
            rho = build_rho_bc(p, allow_unphysical=True)
            f1 = None
            if opts is not None and p.is_physical():
                f1 = min_rank2(partial_transpose(rho).mat, d, d, opts).min_value
            rows.append((b, c, label.value, s.lambda0, s.lambda1, s.lambda2, tr_H(rho), f1))
        if args.f1:
            _progress(f"region-map: row {ib + 1}/{nb}")
    write_csv(args.out, ["b", "c", "label", "lambda0", "lambda1", "lambda2", "TrHrho", "f1min"],
              rows, args.seed)
    return EXIT_OK


def cmd_fscan(args) -> int:
    _check_d(args.d)
    opts = _options(args)
    rows = []
    grid = [args.eps] if args.eps is not None else eps_grid(args.eps_grid)
    for i, eps in enumerate(grid):
        rep = f_value(EpsParams(args.d, args.c, float(eps)), args.n, opts, stress=args.stress)
        rows.append((eps, rep.min_value, rep.converged))
        _progress(f"fscan: {i + 1}/{len(grid)} eps={eps:.6g} f={rep.min_value:.3e}")
    write_csv(args.out, ["eps", "minValue", "converged"], rows, args.seed)
    return EXIT_OK


def cmd_threshold(args) -> int:
    started = time.perf_counter()
    _check_d(args.d)
    opts = _options(args)
    res = eps_threshold(args.d, args.c, args.n, opts, width=args.width, stress=args.stress)
    payload = {"d": args.d, "c": args.c, "n": args.n, "restarts": args.restarts}
    payload.update(res.to_dict())
    write_json(args.out, payload, args.seed, started)
    return EXIT_OK


def _load_map(args):
    if args.map is not None:
        return choi_from_dict(_read_json(args.map))
    if args.b is None or args.c is None:
        raise InvalidInput("two-pos needs --map or both --b and --c")
    _check_d(args.d)
    rho = build_rho_bc(CanonicalParams(args.d, args.b, args.c))
    return compose_transpose(state_to_map(rho))


def cmd_two_pos(args) -> int:
    started = time.perf_counter()
    L = _load_map(args)
    opts = _options(args)
    if args.method == "maxent":
        if args.k != 2:
            raise InvalidInput("the maximally entangled tester only handles k = 2")
        verdict = is_2_positive_maxent(L, opts)
    else:
        verdict = is_k_positive(L, args.k, opts)
    payload = {"dIn": L.dIn, "dOut": L.dOut, "method": args.method, "restarts": args.restarts}
    payload.update(verdict.to_dict())
    write_json(args.out, payload, args.seed, started)
    return EXIT_OK


def cmd_reduce(args) -> int:
    started = time.perf_counter()
    rho = state_from_dict(_read_json(args.input))
    try:
        p, trace = reduce_to_canonical(rho)
    except NotNpt as exc:
        _progress(f"reduce: {exc}")
        return EXIT_NEGATIVE
    payload = p.to_dict()
    payload["label"] = classify_region(p).value if p.d >= 3 else None
    write_json(args.out, payload, None, started)
    if args.trace:
        write_csv(args.trace, ["stage", "TrHrho", "trace", "minEig"], trace.rows(), None)
    return EXIT_OK


def cmd_verify(args) -> int:
    started = time.perf_counter()
    d = args.d
    _check_d(d)
    if args.point is not None:
        label = args.point.upper()
        if label not in region_points(d):
            raise InvalidInput(f"unknown point {args.point!r}")
        p = CanonicalParams(d, *region_points(d)[label])
    elif args.b is not None and args.c is not None:
        p = CanonicalParams(d, args.b, args.c)
    else:
        raise InvalidInput("verify needs --point or both --b and --c")
    rho = build_rho_bc(p)
    if args.input is not None:
        E = ensemble_from_dict(_read_json(args.input))
    elif args.point is not None and args.point.upper() in ("A", "B", "J", "K"):
        E = corner_ensemble(args.point.upper(), d)
    else:
        E = decompose_ppt_point(p)
    tol = args.tol if args.tol is not None else 1e-12
    report = verify_separable(E, rho, tol)
    payload = {"params": p.to_dict(), "report": report.to_dict()}
    if args.emit_ensemble:
        payload["ensemble"] = ensemble_to_dict(E)
    write_json(args.out, payload, None, started)
    return EXIT_OK if report.passed else EXIT_NEGATIVE


class _Parser(argparse.ArgumentParser):
    # usage errors are ordinary errors, not negative verdicts
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="bentlab", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, stochastic: bool, seed_required: bool = True):
        p.add_argument("--d", type=int, default=3)
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--tol", type=float, default=None)
        if stochastic:
            p.add_argument("--seed", type=int, required=seed_required, default=None)
            p.add_argument("--restarts", type=int, default=64)
            p.add_argument("--workers", type=int, default=1)
            p.add_argument("--stress", action="store_true",
                           help=f"raise the size cap to {DEFAULT_POLICY.stress_dim}")

    p = sub.add_parser("region-map", help="classify a (b, c) grid")
    common(p, True, seed_required=False)
    p.add_argument("--grid", default="100x100")
    p.add_argument("--b-range", default=None)
    p.add_argument("--c-range", default=None)
    p.add_argument("--f1", action="store_true", help="add the one-copy rank-two minimum")
    p.set_defaults(func=cmd_region_map)

    p = sub.add_parser("fscan", help="rank-two minimum over an eps grid")
    common(p, True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--n", type=int, default=1)
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--eps-grid", help="lo:hi:step")
    g.add_argument("--eps", type=float)
    p.set_defaults(func=cmd_fscan)

    p = sub.add_parser("threshold", help="bisect the eps threshold")
    common(p, True)
    p.add_argument("--c", type=float, required=True)
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--width", type=float, default=1e-5)
    p.set_defaults(func=cmd_threshold)

    p = sub.add_parser("two-pos", help="k-positivity of a map")
    common(p, True)
    p.add_argument("--map", default=None, help="Choi JSON")
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--method", choices=["seesaw", "maxent"], default="seesaw")
    p.set_defaults(func=cmd_two_pos)

    p = sub.add_parser("reduce", help="reduce an NPT state to (b, c)")
    common(p, False)
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--trace", default=None)
    p.set_defaults(func=cmd_reduce)

    p = sub.add_parser("verify", help="check a separable ensemble")
    common(p, False)
    p.add_argument("--point", default=None)
    p.add_argument("--b", type=float, default=None)
    p.add_argument("--c", type=float, default=None)
    p.add_argument("--in", dest="input", default=None, help="ensemble JSON")
    p.add_argument("--emit-ensemble", action="store_true")
    p.set_defaults(func=cmd_verify)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.func(args)
    except BentlabError as exc:
        print(f"bentlab {args.command}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
