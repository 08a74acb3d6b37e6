"""Command-line front end.

Exit codes: 0 success, 1 a channel is semantically invalid (e.g. not CPTP),
2 I/O or parse error, 3 internal consistency failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .algebra import StructureError
from .channels import (
    HolevoForm,
    ParameterError,
    SchemaError,
    amplitude_damping,
    channel_to_json,
    depolarizing,
    depolarize_to,
    holevo_channel,
    loads_channel,
    phi_minus,
    phi_plus,
    power,
    random_cptp,
    random_holevo,
    simple_aes,
    unitary_channel,
    validate_cptp,
)
from .classify import (
    NotCPTPError,
    classify,
    fixed_structure,
    n_index,
    peripheral_channel_from_data,
)
from .entwit import negativity, ppt_min_eig, reshuffling_norm
from .matcore import ConsistencyError, Tolerances, haar_unitary

EXIT_OK, EXIT_INVALID, EXIT_IO, EXIT_INTERNAL = 0, 1, 2, 3
ITERATE_MAX = 10 ** 4


# ----------------------------------------------------------------------------
# deterministic JSON with 17 significant digits
# ----------------------------------------------------------------------------

def _plain(x):
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, (complex, np.complexfloating)):
        return {"re": float(x.real), "im": float(x.imag)}
    return x


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps(obj, indent: int = 1, _level: int = 0) -> str:
    """JSON text with sorted keys and every float written with 17 significant digits."""
    obj = _plain(obj) if _level == 0 else obj
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(k)}: {dumps(obj[k], indent, _level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if not any(isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v, indent, _level + 1) for v in obj) + "]"
        return "[\n" + ",\n".join(pad + dumps(v, indent, _level + 1) for v in obj) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return _fmt_float(obj)
    return json.dumps(obj)


# ----------------------------------------------------------------------------
# reports
# ----------------------------------------------------------------------------

class InputError(Exception):
    """Unreadable or malformed input file."""


def read_channel(path: str):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from None
    digest = hashlib.sha256(raw).hexdigest()
    try:
        phi = loads_channel(raw.decode("utf-8"))
    except UnicodeDecodeError:
        raise InputError(f"{path}: not UTF-8 text") from None
    except SchemaError as exc:
        where = f" (field {exc.field})" if exc.field else ""
        raise InputError(f"{path}{where}: {exc}") from None
    return phi, {"path": path, "sha256": digest}


def _tool(tols: Tolerances) -> dict:
    return {"name": "entsaving", "version": __version__, "tolerances": tols.as_dict()}


def _run_one(path: str, fn, args, tols: Tolerances) -> tuple[dict, int]:
    t0 = time.perf_counter()
    report = {"tool": _tool(tols), "input": {"path": path}, "results": {}}
    code = EXIT_OK
    try:
        phi, ident = read_channel(path)
        report["input"] = ident
        report["results"], code = fn(phi, args, tols)
    except InputError as exc:
        report["results"] = {"error": {"kind": "input", "message": str(exc)}}
        code = EXIT_IO
    except NotCPTPError as exc:
        report["results"] = {"error": {"kind": "invalid_channel", "message": str(exc)}}
        code = EXIT_INVALID
    except (ConsistencyError, StructureError) as exc:
        stage = getattr(exc, "stage", None)
        report["results"] = {"error": {"kind": "consistency", "message": str(exc), "stage": stage}}
        code = EXIT_INTERNAL
    if not args.no_timestamp:
        report["timing"] = {
            "seconds": time.perf_counter() - t0,
            "finished": datetime.now(timezone.utc).isoformat(),
        }
    return report, code


def _res_validate(phi, args, tols):
    v = validate_cptp(phi, tols)
    out = {"validation": v.to_json(), "d": phi.d}
    return out, EXIT_OK if (v.cp and v.tp) else EXIT_INVALID


def _res_classify(phi, args, tols):
    c = classify(phi, args.nmax, tols)
    r = c.to_json()
    r["summary"] = {
        "eb": c.eb.status.value,
        "n_index": c.n_index.kind if c.n_index.n is None else f"{c.n_index.kind}({c.n_index.n})",
        "es": c.es.status,
        "aes": c.aes.status,
        "uep": c.uep.unitary,
    }
    return r, EXIT_OK


def _res_nindex(phi, args, tols):
    return {"n_index": n_index(phi, args.nmax, tols).to_json()}, EXIT_OK


def _res_structure(phi, args, tols):
    return {"structure": fixed_structure(phi, tols, seed=args.seed).to_json()}, EXIT_OK


def iterate_rows(phi, n_max: int) -> list[dict]:
    rows = []
    S = phi.super
    Sn = np.eye(S.shape[0], dtype=complex)
    from .channels import from_super

    for n in range(1, n_max + 1):
        Sn = S @ Sn
        ch = from_super(Sn)
        R = ch.choi
        rows.append({
            "n": n,
            "negativity": negativity(R, phi.d, phi.d),
            "ppt_min_eig": ppt_min_eig(ch),
            "reshuffling_norm": reshuffling_norm(ch),
            "min_choi_eig": float(np.linalg.eigvalsh((R + R.conj().T) / 2)[0]),
        })
    return rows


def _monotone(vals, tol=1e-12) -> bool:
    return all(b <= a + tol for a, b in zip(vals, vals[1:]))


def iterate_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    cols = ["n", "negativity", "ppt_min_eig", "reshuffling_norm", "min_choi_eig"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([r["n"]] + [_fmt_float(r[c]) for c in cols[1:]])
    neg = [r["negativity"] for r in rows]
    resh = [r["reshuffling_norm"] for r in rows]
    buf.write(f"# monotone_negativity={str(_monotone(neg)).lower()},"
              f"monotone_reshuffling={str(_monotone(resh)).lower()}\n")
    return buf.getvalue()


# ----------------------------------------------------------------------------
# generate
# ----------------------------------------------------------------------------

def _parse_params(items: list[str]) -> dict:
    out = {}
    for it in items:
        if "=" not in it:
            raise ParameterError(f"parameter {it!r} is not key=value")
        k, v = it.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def _f(p, k, default=None):
    if k not in p:
        if default is None:
            raise ParameterError(f"missing parameter {k}")
        return default
    try:
        return float(p[k])
    except ValueError:
        raise ParameterError(f"parameter {k}={p[k]!r} is not a number") from None


def _i(p, k, default=None):
    v = _f(p, k, default)
    if int(v) != v:
        raise ParameterError(f"parameter {k} must be an integer")
    return int(v)


def generate(family: str, p: dict):
    seed = _i(p, "seed", 0)
    if family == "phi_plus":
        return phi_plus(_f(p, "lam"), _f(p, "theta", 0.0), _f(p, "alpha", 0.0), _f(p, "mu"))
    if family == "phi_minus":
        return phi_minus(_f(p, "lam"), _f(p, "theta", 0.0))
    if family in ("ad", "amplitude_damping"):
        return amplitude_damping(_f(p, "p"))
    if family == "depolarizing":
        return depolarizing(_f(p, "lam"), _i(p, "d", 2))
    if family == "depolarize_to":
        d = _i(p, "d", 2)
        return depolarize_to(np.eye(d) / d)
    if family == "holevo":
        return random_holevo(_i(p, "d", 2), _i(p, "outcomes", 2), seed)
    if family == "unitary":
        d = _i(p, "d", 2)
        if "theta" in p:
            if d != 2:
                raise ParameterError("theta is only defined for d=2 (rotation about z)")
            t = _f(p, "theta")
            return unitary_channel(np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)]))
        return unitary_channel(haar_unitary(d, np.random.default_rng(seed)))
    if family == "random":
        return random_cptp(_i(p, "d"), _i(p, "rank"), seed)
    if family == "simple_aes":
        blocks = []
        for part in p.get("blocks", "").split(";"):
            bits = [b for b in part.split(",") if b.strip()]
            if len(bits) != 2:
                raise ParameterError(f"block {part!r} must be 'd1,d2'")
            d1, d2 = int(bits[0]), int(bits[1])
            blocks.append((d1, d2, np.eye(d2) / d2 if d2 > 1 else 1))
        perm = [int(x) for x in p["perm"].split(",")] if "perm" in p else None
        rng = np.random.default_rng(seed)
        unitaries = [haar_unitary(b[0], rng) for b in blocks] if "seed" in p else None
        d = _i(p, "d", sum(b[0] * b[1] for b in blocks))
        return simple_aes(blocks, unitaries, perm, d=d)
    if family == "peripheral":
        cycles = []
        for part in p.get("cycles", "").split(";"):
            bits = part.split(",")
            if len(bits) != 3:
                raise ParameterError(f"cycle {part!r} must be 'n,d,f1:f2:...' with phases as turns")
            n_c, d_c = int(bits[0]), int(bits[1])
            turns = [float(t) for t in bits[2].split(":")]
            cycles.append((n_c, d_c, np.exp(2j * np.pi * np.array(turns))))
        d = _i(p, "d", sum(n * dc for n, dc, _ in cycles))
        return peripheral_channel_from_data(cycles, d)
    raise ParameterError(f"unknown family {family!r}")


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------

def _positive(kind):
    def conv(s):
        v = kind(s)
        if not v > 0:
            raise argparse.ArgumentTypeError(f"{s} must be positive")
        return v
    return conv


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="entsaving", description="Quantum channel spectra and entanglement-saving classification.")
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", nargs="+", default=[], metavar="PATH")
    common.add_argument("--nmax", type=_positive(int), default=64)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol-pos", type=_positive(float), default=Tolerances().pos)
    common.add_argument("--tol-spec", type=_positive(float), default=Tolerances().spec)
    common.add_argument("--tol-peri", type=_positive(float), default=Tolerances().peri)
    common.add_argument("--tol-comm", type=_positive(float), default=Tolerances().comm)
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--out", default=None)
    common.add_argument("--jobs", type=_positive(int), default=1)
    common.add_argument("--no-timestamp", action="store_true")

    for name in ("validate", "classify", "nindex", "iterate", "structure"):
        sp = sub.add_parser(name, parents=[common])
        sp.add_argument("paths", nargs="*", metavar="PATH")
    g = sub.add_parser("generate", parents=[common])
    g.add_argument("family")
    g.add_argument("params", nargs="*", metavar="KEY=VALUE")
    return ap


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    tols = Tolerances(args.tol_pos, args.tol_spec, args.tol_peri, args.tol_comm)

    if args.command == "generate":
        try:
            phi = generate(args.family, _parse_params(args.params))
        except (ParameterError, ValueError, KeyError) as exc:
            print(f"entsaving generate: {exc}", file=sys.stderr)
            return EXIT_INVALID
        text = dumps(channel_to_json(phi)) + "\n"
        try:
            _emit(text, args.out)
        except OSError as exc:
            print(f"entsaving generate: {exc}", file=sys.stderr)
            return EXIT_IO
        return EXIT_OK

    paths = list(args.paths) + list(args.input)
    if not paths:
        print(f"entsaving {args.command}: no input files", file=sys.stderr)
        return EXIT_IO

    if args.command == "iterate":
        if args.nmax > ITERATE_MAX:
            print(f"entsaving iterate: --nmax {args.nmax} exceeds {ITERATE_MAX}", file=sys.stderr)
            return EXIT_IO
        if len(paths) != 1:
            print("entsaving iterate: exactly one input file", file=sys.stderr)
            return EXIT_IO
        try:
            phi, ident = read_channel(paths[0])
        except InputError as exc:
            print(f"entsaving iterate: {exc}", file=sys.stderr)
            return EXIT_IO
        rows = iterate_rows(phi, args.nmax)
        if args.format == "json":
            text = dumps({"tool": _tool(tols), "input": ident, "results": {"iterate": rows}}) + "\n"
        else:
            text = iterate_csv(rows)
        _emit(text, args.out)
        return EXIT_OK

    fn = {"validate": _res_validate, "classify": _res_classify, "nindex": _res_nindex,
          "structure": _res_structure}[args.command]
    with ThreadPoolExecutor(max_workers=args.jobs) as ex:
        done = list(ex.map(lambda p: _run_one(p, fn, args, tols), paths))
    reports = [r for r, _ in done]
    code = max(c for _, c in done)
    if args.format == "csv":
        text = _reports_csv(reports)
    else:
        text = dumps(reports[0] if len(reports) == 1 else reports) + "\n"
    try:
        _emit(text, args.out)
    except OSError as exc:
        print(f"entsaving: {exc}", file=sys.stderr)
        return EXIT_IO
    for r in reports:
        err = r["results"].get("error") if isinstance(r["results"], dict) else None
        if err:
            print(f"entsaving {args.command}: {err['message']}", file=sys.stderr)
    return code


def _reports_csv(reports: list[dict]) -> str:
    """Flat one-row-per-file summary."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["path", "sha256", "key", "value"])
    for r in reports:
        flat: list[tuple[str, object]] = []

        def walk(prefix, x):
            if isinstance(x, dict):
                for k in sorted(x):
                    walk(f"{prefix}.{k}" if prefix else k, x[k])
            elif not isinstance(x, list):
                flat.append((prefix, x))
        walk("", _plain(r["results"]))
        for k, v in flat:
            if isinstance(v, bool) or v is None:
                v = json.dumps(v)
            elif isinstance(v, float):
                v = _fmt_float(v)
            w.writerow([r["input"].get("path"), r["input"].get("sha256", ""), k, v])
    return buf.getvalue()


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
