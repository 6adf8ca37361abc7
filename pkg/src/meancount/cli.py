"""Command-line front end: ``meancount <command> [options]``.

Exit status 0 on success, 1 when a selftest check fails, 2 for invalid input
and 3 when a computation does not converge. Diagnostics gathered before a
numerical failure are still written to the output.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

import numpy as np

from .dirichlet import DEFAULT_SPEC, DirichletPolynomial, QuadratureSpec, constant_symbol, validate_symbol
from .errors import INPUT_CODES, MeanCountError
from .ladder import LadderSpec

COMMANDS = ("eval", "zeros", "jessen", "counting", "mean-counting", "stanton", "hs", "profile", "selftest")
EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass
class RunConfig:
    command: str
    input_paths: list = field(default_factory=list)
    ladder: LadderSpec = field(default_factory=LadderSpec)
    quadrature: QuadratureSpec = DEFAULT_SPEC
    output_path: str | None = None
    format: str = "csv"


# -- parsing -----------------------------------------------------------------


def parse_complex(text: str) -> complex:
    """``a+bi`` with optional sign; either part may be omitted."""
    t = text.strip().replace(" ", "")
    if not t or "j" in t or "n" in t:
        raise MeanCountError("PARSE", f"bad complex number {text!r}")
    try:
        return complex(t.replace("i", "j"))
    except ValueError:
        raise MeanCountError("PARSE", f"bad complex number {text!r}") from None


def parse_w(text: str) -> list[complex]:
    """A single complex number, or a grid ``re0:re1:n,im0:im1:m``."""
    if ":" not in text:
        return [parse_complex(text)]
    try:
        rpart, ipart = text.split(",")
        r0, r1, n = rpart.split(":")
        i0, i1, m = ipart.split(":")
        xs = np.linspace(float(r0), float(r1), int(n))
        ys = np.linspace(float(i0), float(i1), int(m))
    except ValueError:
        raise MeanCountError("PARSE", f"bad w grid {text!r}") from None
    if int(n) < 1 or int(m) < 1:
        raise MeanCountError("PARSE", "grid sizes must be positive")
    return [complex(x, y) for x in xs for y in ys]


def parse_sigma(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise MeanCountError("PARSE", f"bad sigma list {text!r}") from None


def _load_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise MeanCountError("PARSE", f"no such file: {path}") from None
    except json.JSONDecodeError as exc:
        raise MeanCountError("PARSE", f"{path}: malformed JSON ({exc.msg})") from None


def parse_series_file(path: str) -> DirichletPolynomial:
    return DirichletPolynomial.from_json(_load_json(path))


def parse_symbol_file(path: str, spec: QuadratureSpec = DEFAULT_SPEC):
    """A symbol is either ``{"coeffs": ...}`` or a named family.

    Families: ``{"family": "phi_nu", "nu": [re, im], "N": 256}`` and
    ``{"family": "constant", "nu": [re, im]}``.
    """
    doc = _load_json(path)
    if isinstance(doc, dict) and "family" in doc:
        extra = set(doc) - {"family", "nu", "N"}
        if extra:
            raise MeanCountError("PARSE", f"unknown symbol keys {sorted(extra)}")
        nu = doc.get("nu")
        if not (isinstance(nu, list) and len(nu) == 2 and all(isinstance(x, (int, float)) for x in nu)):
            raise MeanCountError("PARSE", "'nu' must be [re, im]")
        nu = complex(nu[0], nu[1])
        if doc["family"] == "phi_nu":
            from .oracles import phi_nu

            N = doc.get("N", 256)
            if isinstance(N, bool) or not isinstance(N, int):
                raise MeanCountError("PARSE", "'N' must be an integer")
            return phi_nu(nu, N, spec)
        if doc["family"] == "constant":
            return constant_symbol(nu)
        raise MeanCountError("PARSE", f"unknown symbol family {doc['family']!r}")
    return validate_symbol(DirichletPolynomial.from_json(doc), spec)


def _spec_from(d: dict) -> QuadratureSpec:
    names = {f.name for f in dataclasses.fields(QuadratureSpec)}
    bad = set(d) - names
    if bad:
        raise MeanCountError("INVALID", f"unknown quadrature keys {sorted(bad)}")
    spec = dataclasses.replace(DEFAULT_SPEC, **d)
    for f in dataclasses.fields(spec):
        v = getattr(spec, f.name)
        if not (isinstance(v, (int, float)) and not isinstance(v, bool) and v > 0):
            raise MeanCountError("INVALID", f"quadrature.{f.name} must be a positive number")
    return spec


def _ladder_from(d: dict) -> LadderSpec:
    names = {f.name for f in dataclasses.fields(LadderSpec)}
    bad = set(d) - names
    if bad:
        raise MeanCountError("INVALID", f"unknown ladder keys {sorted(bad)}")
    try:
        return LadderSpec(**d)
    except TypeError as exc:
        raise MeanCountError("INVALID", str(exc)) from None


_CONFIG_KEYS = {"ladder", "quadrature", "out", "format", "threads", "symbol", "series", "w", "sigma", "path"}


def _read_config(path: str) -> dict:
    doc = _load_json(path)
    if not isinstance(doc, dict):
        raise MeanCountError("INVALID", "config must be a JSON object")
    bad = set(doc) - _CONFIG_KEYS
    if bad:
        raise MeanCountError("INVALID", f"unknown config keys {sorted(bad)}")
    return doc


# -- output ------------------------------------------------------------------


def write_atomic(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    d = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".meancount-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _meta(cfg: RunConfig) -> dict:
    lad = dataclasses.asdict(cfg.ladder)
    lad["sigma_ladder"] = list(lad["sigma_ladder"])
    return {"command": cfg.command, "ladder": lad, "quadrature": dataclasses.asdict(cfg.quadrature)}


def _clean(x):
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.generic):
        return _clean(x.item())
    return x


def _json(cfg: RunConfig, result) -> str:
    return json.dumps({"meta": _meta(cfg), "result": _clean(result)}, sort_keys=True, indent=2) + "\n"


def _csv(header: list[str], rows: list[list]) -> str:
    out = [",".join(header)]
    for r in rows:
        out.append(",".join("" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)) for v in r))
    return "\n".join(out) + "\n"


# -- commands ----------------------------------------------------------------


def _need(args, name: str):
    v = getattr(args, name)
    if v is None:
        raise MeanCountError("INVALID", f"--{name.replace('_', '-')} is required for this command")
    return v


def _cmd_eval(args, cfg):
    f = parse_series_file(_need(args, "series"))
    ss = parse_w(_need(args, "w"))
    vals = f.eval(np.array(ss))
    rows = [[s.real, s.imag, v.real, v.imag] for s, v in zip(ss, vals)]
    if cfg.format == "json":
        return _json(cfg, [{"s": s, "value": complex(v)} for s, v in zip(ss, vals)])
    return _csv(["s_re", "s_im", "value_re", "value_im"], rows)


def _cmd_zeros(args, cfg):
    from .jessen import zero_free_right_edge
    from .zeros import Rectangle, find_zeros

    f = parse_series_file(_need(args, "series"))
    sig = parse_sigma(args.sigma) if args.sigma else [0.0]
    right = zero_free_right_edge(f, max(sig[0], 0.0) + 1.0)
    if args.T0 is not None:
        T = args.T0
        zs = find_zeros(f, Rectangle(sig[0], right, -T, T), tol=args.tol or 1e-10, spec=cfg.quadrature)
    else:
        # the default height is a whole number of quasi-periods, where lattice zeros sit;
        # it is nudged off the contour rather than reported as a boundary hit
        for k in range(6):
            T = (8.0 + 0.0137 * k) * f.quasi_period
            try:
                zs = find_zeros(f, Rectangle(sig[0], right, -T, T), tol=args.tol or 1e-10, spec=cfg.quadrature)
                break
            except MeanCountError as exc:
                if exc.code != "BOUNDARY_ZERO" or k == 5:
                    raise
    if cfg.format == "json":
        return _json(cfg, {"rectangle": [sig[0], right, -T, T], "total_winding": zs.total_winding,
                           "zeros": [{"s": z.s, "multiplicity": z.multiplicity, "residual": z.residual} for z in zs]})
    return zs.to_csv()


def _cmd_jessen(args, cfg):
    from .jessen import convexity_profile

    f = parse_series_file(_need(args, "series"))
    sig = parse_sigma(args.sigma) if args.sigma else [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0]
    prof = convexity_profile(f, sig, cfg.quadrature)
    if cfg.format == "json":
        return _json(cfg, dataclasses.asdict(prof))
    return prof.to_csv()


def _symbol_or_series(args, cfg):
    if args.symbol:
        return parse_symbol_file(args.symbol, cfg.quadrature)
    if args.series:
        return parse_series_file(args.series)
    raise MeanCountError("INVALID", "--symbol or --series is required")


def _cmd_counting(args, cfg):
    from .counting import counting_sigma

    phi = _symbol_or_series(args, cfg)
    ws = parse_w(_need(args, "w"))
    sig = parse_sigma(args.sigma) if args.sigma else [cfg.ladder.sigma_ladder[-1]]
    ests = [(w, s0, counting_sigma(phi, w, s0, cfg.ladder, args.tol or 1e-10, cfg.quadrature)) for w in ws for s0 in sig]
    if cfg.format == "json":
        return _json(cfg, [dict(e.as_dict(), w=w) for w, _, e in ests])
    return _csv(["w_re", "w_im", "sigma0", "value", "error_estimate", "T"],
                [[w.real, w.imag, s0, e.value, e.error_estimate, e.t_ladder[-1]] for w, s0, e in ests])


def _cmd_mean_counting(args, cfg):
    from .counting import littlewood_bound, mean_counting

    phi = _symbol_or_series(args, cfg)
    ws = parse_w(_need(args, "w"))
    nu = complex(getattr(phi, "nu", None) if hasattr(phi, "nu") else phi.value_at_infinity)
    rows, docs = [], []
    for w in ws:
        est = mean_counting(phi, w, cfg.ladder, args.tol or 1e-10, cfg.quadrature)
        b = littlewood_bound(w, nu).bound if w.real > 0.5 else None
        rows.append([w.real, w.imag, est.value, est.error_estimate, b])
        docs.append(dict(est.as_dict(), w=w, bound=b))
    if cfg.format == "json":
        return _json(cfg, docs)
    return _csv(["w_re", "w_im", "value", "error_estimate", "bound"], rows)


def _cmd_stanton(args, cfg):
    from .compop import stanton_check

    f = parse_series_file(_need(args, "series"))
    phi = parse_symbol_file(_need(args, "symbol"), cfg.quadrature)
    rep = stanton_check(f, phi, cfg.quadrature)
    if cfg.format == "json":
        return _json(cfg, dataclasses.asdict(rep))
    return rep.to_csv()


def _cmd_hs(args, cfg):
    from .compop import hilbert_schmidt_details

    phi = parse_symbol_file(_need(args, "symbol"), cfg.quadrature)
    hs = hilbert_schmidt_details(phi, cfg.quadrature)
    d = dataclasses.asdict(hs)
    if cfg.format == "json":
        return _json(cfg, d)
    keys = [k for k in d if k != "shell_integrals"]
    return _csv(keys, [[d[k] if not isinstance(d[k], bool) else str(d[k]).lower() for k in keys]])


def _cmd_profile(args, cfg):
    from .compop import DEFAULT_PATH, compactness_profile

    phi = parse_symbol_file(_need(args, "symbol"), cfg.quadrature)
    path = DEFAULT_PATH if args.path in (None, "default") else [parse_complex(x) for x in args.path.split(",")]
    prof = compactness_profile(phi, path, cfg.ladder, cfg.quadrature)
    if cfg.format == "json":
        return _json(cfg, {"samples": [dict(s) for s in prof.samples], "verdict": prof.verdict})
    return prof.to_csv()


def selftest_checks(spec: QuadratureSpec = DEFAULT_SPEC) -> list[dict]:
    """Numerical pipelines against the oracle battery, one row per check."""
    from .counting import mean_counting
    from .jessen import jessen_torus
    from .oracles import oracle_battery
    from .zeros import Rectangle, find_zeros

    rows = []

    def add(name, got, want, tol):
        rows.append({"check": name, "value": got, "exact": want, "tol": tol,
                     "passed": bool(abs(got - want) <= tol)})

    for case in oracle_battery():
        if "counting" in case.exact:
            for w in (complex(2.0, 0.0), complex(1.4, 0.6), complex(1.75, 0.1)):
                if w == complex(case.series.nu):
                    continue
                got = mean_counting(case.series, w, spec=spec).value
                add(f"{case.name}: mean counting at {w}", got, case.exact["counting"](w), 1e-2)
        else:
            f = case.series
            add(f"{case.name}: Jessen at 0.25", jessen_torus(f, 0.25, spec=spec), case.exact["jessen"](0.25), 1e-6)
            T = 30.0
            found = find_zeros(f, Rectangle(0.5, 2.0, -T, T), spec=spec)
            want = case.exact["zeros"](T)
            err = max((min(abs(z.s - v) for v in want) for z in found), default=0.0) if want else 0.0
            add(f"{case.name}: zero count", float(len(found)), float(len(want)), 0.0)
            add(f"{case.name}: zero locations", err, 0.0, 1e-8)
            add(f"{case.name}: mean counting at 0", mean_counting(f, 0j, spec=spec).value,
                case.exact["mean_counting_at_zero"](), 1e-3)
    return rows


def _cmd_selftest(args, cfg):
    rows = selftest_checks(cfg.quadrature)
    ok = all(r["passed"] for r in rows)
    if cfg.format == "json":
        text = _json(cfg, {"checks": rows, "passed": ok})
    else:
        text = _csv(["check", "value", "exact", "tol", "passed"],
                    [[r["check"].replace(",", ";"), r["value"], r["exact"], r["tol"], str(r["passed"]).lower()] for r in rows])
    return text, (EXIT_OK if ok else EXIT_CHECK)


_DISPATCH = {
    "eval": _cmd_eval,
    "zeros": _cmd_zeros,
    "jessen": _cmd_jessen,
    "counting": _cmd_counting,
    "mean-counting": _cmd_mean_counting,
    "stanton": _cmd_stanton,
    "hs": _cmd_hs,
    "profile": _cmd_profile,
    "selftest": _cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="meancount", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON run configuration")
    ap.add_argument("--symbol")
    ap.add_argument("--series")
    ap.add_argument("--w", help="a+bi or re0:re1:n,im0:im1:m")
    ap.add_argument("--sigma", help="a real number or a comma-separated list")
    ap.add_argument("--path", help="'default' or a comma-separated list of complex points")
    ap.add_argument("--T0", type=float)
    ap.add_argument("--T-steps", dest="T_steps", type=int)
    ap.add_argument("--T-growth", dest="T_growth", type=float)
    ap.add_argument("--tol", type=float)
    ap.add_argument("--out")
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--threads", type=int)
    return ap


def make_config(args) -> RunConfig:
    conf = _read_config(args.config) if args.config else {}
    for key in ("symbol", "series", "w", "sigma", "path"):
        if getattr(args, key) is None and key in conf:
            setattr(args, key, str(conf[key]))
    lad = dict(conf.get("ladder", {}))
    if args.T0 is not None:
        lad["t0"] = args.T0
    if args.T_steps is not None:
        lad["steps"] = args.T_steps
    if args.T_growth is not None:
        lad["growth"] = args.T_growth
    if args.tol is not None:
        lad["rel_tol"] = args.tol
    fmt = args.format or conf.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise MeanCountError("INVALID", f"unknown format {fmt!r}")
    threads = args.threads if args.threads is not None else conf.get("threads")
    if threads is not None:
        if isinstance(threads, bool) or not isinstance(threads, int) or threads < 1:
            raise MeanCountError("INVALID", "threads must be a positive integer")
        args.threads = threads
    paths = [p for p in (args.symbol, args.series) if p]
    return RunConfig(args.command, paths, _ladder_from(lad), _spec_from(dict(conf.get("quadrature", {}))),
                     args.out or conf.get("out"), fmt)


def _cap_threads(n: int | None) -> None:
    if not n:
        return
    try:
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    except ImportError:
        pass


def dispatch(cfg: RunConfig, args) -> int:
    _cap_threads(args.threads)
    try:
        out = _DISPATCH[cfg.command](args, cfg)
    except MeanCountError as exc:
        code = EXIT_INPUT if exc.code in INPUT_CODES else EXIT_NUMERIC
        print(f"meancount: {exc}", file=sys.stderr)
        if code == EXIT_NUMERIC:
            diag = {"error": exc.code, "message": str(exc), "diagnostics": exc.diagnostics}
            write_atomic(cfg.output_path, _json(cfg, diag))
        return code
    text, status = out if isinstance(out, tuple) else (out, EXIT_OK)
    write_atomic(cfg.output_path, text)
    return status


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = make_config(args)
    except MeanCountError as exc:
        print(f"meancount: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return dispatch(cfg, args)


if __name__ == "__main__":
    sys.exit(main())
