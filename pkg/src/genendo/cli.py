"""Command-line front end: `genendo <subcommand> ...`.

Exit codes: 0 success, 1 domain error (diagnostic on stderr), 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .finmodel import (
    WINDOW,
    FinModel,
    fm_build,
    fm_check,
    fm_decompose,
    fm_eval,
    fm_eval_all,
    fm_stabilized,
    oracle_setup,
)
from .formula import fml_parse, free_vars
from .fuzz import run_fuzz, standard_configs
from .kernelconfig import INFINITY, Inconsistent, KernelConfig, KernelConstraint, constraints_reduce, describe
from .polyring import INF, FieldSpec, Poly
from .qe import brute_force_closure, closure_cl_theta, exchange_diagnose, exchange_verify, qe_full
from .rcring import rc_inverse, rc_is_field, rc_is_unit, rc_kernel_descriptor, rc_parse, rc_print


class UsageError(Exception):
    pass


# -- input helpers -----------------------------------------------------


def _read_json(src: str):
    """Inline JSON (starting with '{' or '[') or a path to a JSON file."""
    s = src.strip()
    if s.startswith("{") or s.startswith("["):
        return json.loads(s)
    path = Path(src)
    if not path.exists():
        raise UsageError(f"no such file: {src}")
    return json.loads(path.read_text())


def _parse_field(v) -> FieldSpec:
    """A field from its JSON form or a short name such as "F2", "F3" or "Q"."""
    if isinstance(v, dict):
        return FieldSpec.from_json(v)
    if isinstance(v, str):
        t = v.strip()
        if t in ("Q", "QQ"):
            return FieldSpec.rationals()
        if t[:1] == "F" and t[1:].isdigit():
            return FieldSpec.prime(int(t[1:]))
    raise UsageError(f"cannot read a field from {v!r}")


def _field_of(d) -> FieldSpec:
    if isinstance(d, str):
        return _parse_field(d)
    if not isinstance(d, dict):
        raise UsageError("expected a JSON object")
    if "kind" in d:
        return FieldSpec.from_json(d)
    if "field" not in d:
        raise UsageError("missing 'field'")
    return _parse_field(d["field"])


def load_config(src: str) -> KernelConfig:
    """A kernel configuration from JSON.

    Besides the serialized form this accepts the shorthands
    {"field": .., "mipo": "X^2"} and {"field": .., "map": {"X": 1}, "default": "infinity"}.
    """
    d = _read_json(src)
    field = _field_of(d)
    d = dict(d, field=field.to_json())
    if "mipo" in d:
        return KernelConfig.from_mipo(Poly.parse(d["mipo"], field))
    if "map" in d:
        entries = {Poly.parse(f, field): INF if c in ("inf", None) else int(c) for f, c in d["map"].items()}
        return KernelConfig.transcendental(field, entries, d.get("default", INFINITY))
    return KernelConfig.from_json(d)


def load_field(src: str) -> FieldSpec:
    s = src.strip()
    if not s.startswith(("{", "[")) and not Path(s).exists():
        return _parse_field(s)
    return _field_of(_read_json(src))


def _need_config(args) -> KernelConfig:
    if not args.config:
        raise UsageError(f"{args.cmd} needs --config")
    return load_config(args.config)


def _formula_text(args) -> str:
    if args.formula_file:
        return Path(args.formula_file).read_text()
    if args.formula is None:
        raise UsageError("a formula is required")
    return args.formula


def _vector(text: str, p: int) -> np.ndarray:
    parts = [t for t in text.replace(" ", "").split(",") if t]
    if not parts:
        raise UsageError(f"empty vector {text!r}")
    return np.array([int(t) % p for t in parts], dtype=np.int64)


def _block(text: str, field: FieldSpec):
    """F:J[:MULT][:filler]"""
    parts = text.split(":")
    if len(parts) < 2:
        raise UsageError(f"block {text!r} is not of the form F:J[:MULT][:filler]")
    filler = parts[-1] == "filler"
    if filler:
        parts = parts[:-1]
    f = Poly.parse(parts[0], field)
    j = int(parts[1])
    mult = int(parts[2]) if len(parts) > 2 else 1
    return (f, j, mult, filler)


def _load_model(args) -> FinModel:
    if getattr(args, "model", None):
        m = FinModel.from_json(_read_json(args.model))
        if args.config:
            m = FinModel(m.field, m.theta, load_config(args.config), m.blocks, m.support)
        return m
    cfg = _need_config(args)
    if not args.block:
        raise UsageError("give a model file or --config with --block entries")
    spec = [_block(b, cfg.field) for b in args.block]
    support = [Poly.parse(s, cfg.field) for s in args.support] if args.support else None
    m = fm_build(cfg, spec, support)
    _cap_dim(args, m.dim)
    return m


def _cap_dim(args, dim: int) -> None:
    if args.max_dim is not None and dim > args.max_dim:
        raise UsageError(f"model dimension {dim} exceeds --max-dim {args.max_dim}")


def _window(args) -> tuple:
    if args.max_n is None:
        return WINDOW
    return tuple(range(1, args.max_n + 1))


# -- output ------------------------------------------------------------


def _emit(args, text: str, data) -> None:
    if args.output == "json":
        print(json.dumps(data, sort_keys=True))
    else:
        print(text)


# -- subcommands -------------------------------------------------------


def cmd_reduce(args) -> int:
    raw = _read_json(args.constraints)
    if args.config:
        field = load_field(args.config)
    elif isinstance(raw, dict) and "field" in raw:
        field = _parse_field(raw["field"])
    else:
        raise UsageError("reduce needs a field: --config or a 'field' key in the constraint file")
    items = raw["constraints"] if isinstance(raw, dict) else raw
    cs = [KernelConstraint.from_json(c, field) for c in items]
    res = constraints_reduce(cs, field)
    if isinstance(res, Inconsistent):
        _emit(args, f"Inconsistent: {res.reason}", {"inconsistent": True, "reason": res.reason})
        return 0
    _emit(args, describe(res), {"inconsistent": False, "config": res.to_json()})
    return 0


def cmd_ring(args) -> int:
    cfg = _need_config(args)
    if not args.expr:
        fld = rc_is_field(cfg)
        _emit(args, f"{describe(cfg)}\nfield: {str(fld).lower()}", {"config": cfg.to_json(), "is_field": fld})
        return 0
    lines, out = [], []
    for src in args.expr:
        a = rc_parse(src, cfg)
        item = {"input": src, "normal_form": rc_print(a), "unit": rc_is_unit(a)}
        line = rc_print(a)
        if args.trace:
            kd = rc_kernel_descriptor(a)
            item["kernel"] = kd.to_json()
            line += f"  kernel {json.dumps(kd.to_json(), sort_keys=True)}"
        if item["unit"]:
            item["inverse"] = rc_print(rc_inverse(a))
            if args.trace:
                line += f"  inverse {item['inverse']}"
        lines.append(line)
        out.append(item)
    _emit(args, "\n".join(lines), out)
    return 0


def cmd_qe(args) -> int:
    cfg = _need_config(args)
    phi = fml_parse(_formula_text(args), cfg.field, cfg)
    res = qe_full(phi, cfg)
    data = {"formula": str(res)}
    text = str(res)
    if args.trace:
        data["trace"] = res.trace_json()
        text += "\n" + "\n".join(json.dumps(s, sort_keys=True) for s in data["trace"])
    _emit(args, text, data)
    return 0


def _oracle_verdict(args, phi, cfg, extra):
    window = _window(args)
    if args.max_dim is not None:
        for n in window:
            d = oracle_setup(phi, cfg, extra, n).model().dim
            if d > args.max_dim:
                return None, f"oracle model for n={n} has dimension {d} > --max-dim {args.max_dim}"
    st = fm_stabilized(phi, cfg, extra, window=window)
    return st.verdict, st.reason


def cmd_decide(args) -> int:
    cfg = _need_config(args)
    phi = fml_parse(_formula_text(args), cfg.field, cfg)
    if free_vars(phi):
        raise ValueError(f"decide needs a closed formula; free variables: {', '.join(sorted(free_vars(phi)))}")
    data = {}
    if args.method in ("qe", "both"):
        res = qe_full(phi, cfg)
        from .formula import dnf

        data["qe"] = any(len(c) == 0 for c in dnf(res.formula))
        if args.trace:
            data["trace"] = res.trace_json()
        extra = res.polys()
    else:
        extra = ()
    if args.method in ("oracle", "both"):
        v, reason = _oracle_verdict(args, phi, cfg, extra)
        data["oracle"] = v
        if v is None:
            data["oracle_reason"] = reason
    if args.method == "both" and data["oracle"] is not None and data["oracle"] != data["qe"]:
        verdict = "disagree"
    else:
        verdict = data.get("qe", data.get("oracle"))
    word = {True: "true", False: "false", None: "unknown"}.get(verdict, verdict)
    data["verdict"] = word
    text = word
    if args.trace and "trace" in data:
        text += "\n" + "\n".join(json.dumps(s, sort_keys=True) for s in data["trace"])
    _emit(args, text, data)
    return 1 if word == "disagree" else 0


def cmd_model(args) -> int:
    m = _load_model(args)
    if args.action == "build":
        _emit(args, m.dumps(), m.to_json())
        return 0
    if args.action == "check":
        r = fm_check(m)
        text = f"C-endomorphism: {str(r['is_C_endo']).lower()}\nimage complete: {str(r['is_image_complete']).lower()}"
        _emit(args, text, r)
        return 0
    if args.action == "decompose":
        fs = [Poly.parse(s, m.field) for s in args.poly] if args.poly else m.cfg.positive_finite()
        r = fm_decompose(m, fs)
        data = {
            "im_basis": r["im_basis"].T.tolist(),
            "ker_bases": {str(f): b.T.tolist() for f, b in r["ker_bases"].items()},
            "projectors": {str(k): v.tolist() for k, v in r["projectors"].items()},
        }
        lines = [f"Im: dim {r['im_basis'].shape[1]}"]
        lines += [f"Ker({f})^{m.cfg(f)}: dim {b.shape[1]}" for f, b in r["ker_bases"].items()]
        _emit(args, "\n".join(lines), data)
        return 0
    # eval
    phi = fml_parse(_formula_text(args), m.field, m.cfg)
    env = {}
    for a in args.assign or []:
        name, _, vec = a.partition("=")
        env[name.strip()] = _vector(vec, m.p)
    missing = free_vars(phi) - set(env)
    if missing and args.assign:
        raise UsageError(f"no value for {', '.join(sorted(missing))}")
    if missing:
        names, table = fm_eval_all(phi, m)
        count = int(table.sum())
        _emit(args, f"{count}/{table.size} assignments satisfy", {"vars": names, "satisfying": count, "total": int(table.size)})
        return 0
    v = fm_eval(phi, m, env)
    _emit(args, str(v).lower(), {"value": v})
    return 0


def cmd_closure(args) -> int:
    m = _load_model(args)
    if not args.gen:
        raise UsageError("closure needs at least one --gen vector")
    gens = [_vector(g, m.p) for g in args.gen]
    for g in gens:
        if g.shape[0] != m.dim:
            raise ValueError(f"generator of length {g.shape[0]} in a model of dimension {m.dim}")
    cl = closure_cl_theta(gens, m)
    data = {
        "dim": cl.dim,
        "basis": cl.basis.T.tolist(),
        "annihilators": [str(f) for f in cl.annihilators],
    }
    text = f"dim {cl.dim}\n" + "\n".join(",".join(str(int(x)) for x in col) for col in cl.basis.T)
    if args.trace:
        bf = brute_force_closure(gens, m)
        data["brute_force_size"] = len(bf)
        data["brute_force_agrees"] = len(bf) == m.p**cl.dim
        text += f"\nbrute force: {len(bf)} elements"
    _emit(args, text, data)
    return 0


def cmd_exchange(args) -> int:
    cfg = _need_config(args)
    w = exchange_diagnose(cfg)
    data = w.to_json()
    if w.has_exchange:
        text = f"HasExchange ({w.reason})"
    else:
        _cap_dim(args, w.model.dim)
        ok = exchange_verify(w)
        data["verified"] = ok
        u = ",".join(str(int(x)) for x in w.u)
        v = ",".join(str(int(x)) for x in w.v)
        text = f"FailsExchange ({w.reason})\nu = {u}\nv = {v}\nverified: {str(ok).lower()}"
    _emit(args, text, data)
    return 0


def cmd_fuzz(args) -> int:
    if args.config:
        cfg = load_config(args.config)
        cfgs = {Path(args.config).stem if not args.config.strip().startswith("{") else "config": cfg}
    else:
        cfgs = standard_configs()
    rep = run_fuzz(cfgs, args.count, seed=args.seed, workers=args.workers, window=_window(args))
    lines = []
    if len(cfgs) > 1:
        for name in cfgs:
            sub = [c for c in rep.cases if c.config == name]
            agreed = sum(1 for c in sub if c.agree)
            comp = sum(1 for c in sub if c.agree is not None)
            lines.append(f"{name}: {agreed}/{comp} agree ({len(sub) - comp} unknown)")
    lines.append(rep.summary())
    for c in rep.disagreements():
        lines.append(f"DISAGREE [{c.config}] {c.formula} -> {c.qe}")
    if args.trace:
        for c in rep.cases:
            if c.agree is None:
                lines.append(f"unknown [{c.config}] {c.formula}: {c.note}")
    data = rep.to_json()
    data["seed"] = args.seed
    data["count"] = args.count
    _emit(args, "\n".join(lines), data)
    return 1 if rep.disagreements() else 0


# -- parser ------------------------------------------------------------


def _positive(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="kernel configuration (JSON file or inline JSON)")
    common.add_argument("--output", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--max-dim", type=_positive, default=None)
    common.add_argument("--max-n", type=_positive, default=None)
    common.add_argument("--trace", action="store_true")

    ap = argparse.ArgumentParser(prog="genendo", description="Generic endomorphisms of vector spaces: QE and finite-model tools.")
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("reduce", parents=[common], help="kernel constraints -> configuration")
    p.add_argument("constraints")
    p.set_defaults(run=cmd_reduce)

    p = sub.add_parser("ring", parents=[common], help="inspect R_C")
    p.add_argument("expr", nargs="*")
    p.set_defaults(run=cmd_ring)

    for name, fn, hlp in (("qe", cmd_qe, "eliminate quantifiers"), ("decide", cmd_decide, "decide a sentence")):
        p = sub.add_parser(name, parents=[common], help=hlp)
        p.add_argument("formula", nargs="?")
        p.add_argument("--formula-file")
        if name == "decide":
            p.add_argument("--method", choices=("qe", "oracle", "both"), default="qe")
        p.set_defaults(run=fn)

    p = sub.add_parser("model", parents=[common], help="build/check/decompose/eval finite models")
    p.add_argument("action", choices=("build", "check", "decompose", "eval"))
    p.add_argument("--formula")
    p.add_argument("--model", help="model JSON")
    p.add_argument("--block", action="append", help="F:J[:MULT][:filler]")
    p.add_argument("--support", action="append")
    p.add_argument("--poly", action="append", help="factor for decompose")
    p.add_argument("--assign", action="append", help="var=c0,c1,...")
    p.add_argument("--formula-file")
    p.set_defaults(run=cmd_model)

    p = sub.add_parser("closure", parents=[common], help="cl_theta of generators")
    p.add_argument("--model")
    p.add_argument("--block", action="append")
    p.add_argument("--support", action="append")
    p.add_argument("--gen", action="append")
    p.set_defaults(run=cmd_closure)

    p = sub.add_parser("exchange", parents=[common], help="exchange property verdict")
    p.set_defaults(run=cmd_exchange)

    p = sub.add_parser("fuzz", parents=[common], help="QE against the finite-model oracle")
    p.add_argument("--count", type=_positive, default=100)
    p.add_argument("--workers", type=_positive, default=1)
    p.set_defaults(run=cmd_fuzz)
    return ap


def cli_main(argv=None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.run(args)
    except UsageError as e:
        print(f"genendo {args.cmd}: usage error: {e}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, KeyError, TypeError) as e:
        mod = type(e).__module__.rsplit(".", 1)[-1]
        print(f"genendo {args.cmd}: {mod}.{type(e).__name__}: {e}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
