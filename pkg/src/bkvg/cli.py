"""Batch front end: analyze a family, check an extension, compare two,
sweep a numerical range, or run the whole verification suite.

Report contract
---------------
Every run emits one versioned envelope ("schema": "bkvg-report/1") that
echoes the full effective configuration, carries the payload for the
subcommand, and lists warnings (the sign-convention note rides along
whenever the V_D domain description is part of the payload).  Floats are
rendered in scientific notation with 12 significant digits and complex
numbers as {"re", "im"} pairs; dictionary key order is fixed, so identical
inputs produce byte-identical bytes.  Certified numerics carry their
certification status ("closed-form", "oracle", or "both-agree").

Configuration precedence: command-line flags > TOML config file (--config
or the BKVG_CONFIG environment variable) > built-in defaults.

Exit codes: 0 success, 1 verification failure (a failing check, or a
numerical solver that broke down), 2 invalid input, 3 certification
failure of the closed-form constants.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from importlib import metadata
from typing import Dict, List, Optional, Tuple

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - version dependent
    import tomli as tomllib

from ._grid import MeshSpec
from .brackets import BOTH_AGREE, CLOSED_FORM, ORACLE, bracket_context
from .discretization import discretize, numerical_range_sweep
from .errors import (
    BkvgError,
    DomainViolation,
    FamilyMismatch,
    InvalidGamma,
    NotAccretive,
    NotApplicable,
    NotClosable,
    UncertifiedConstants,
    WrongFamily,
    WrongRegime,
)
from .extensions import (
    EQUAL,
    GREATER_EQUAL,
    INCOMPARABLE,
    LESS_EQUAL,
    ExtensionSpec,
    compare,
    is_accretive,
    margin_of,
    v_d_description,
)
from .families import (
    ONE_DIM_KERNEL,
    TWO_DIM_KERNEL,
    FamilyInstance,
    chi_vector,
    instantiate,
    kernel_basis,
)
from .monomial import MonomialSum
from .verification import LEVELS, run_suite

try:
    __version__ = metadata.version("bkvg")
except metadata.PackageNotFoundError:  # pragma: no cover - dev checkout
    __version__ = "0.1.0"

SCHEMA = "bkvg-report/1"

_REGIME_LABEL = {ONE_DIM_KERNEL: "one_dim_kernel", TWO_DIM_KERNEL: "two_dim_kernel"}
_VERDICT_LABEL = {
    GREATER_EQUAL: "greater-equal",
    LESS_EQUAL: "less-equal",
    EQUAL: "equal",
    INCOMPARABLE: "incomparable",
}


class CliError(Exception):
    """Invalid invocation; carries the process exit code."""

    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# configuration: defaults < TOML file < flags
# ---------------------------------------------------------------------------

_CONFIG_KEYS = ("family", "gamma", "d_re", "d_im", "d2_re", "d2_im",
                "mesh", "theta_steps", "format", "out", "level")

_DEFAULTS: Dict[str, object] = {
    "family": None, "gamma": None,
    "d_re": None, "d_im": None, "d2_re": None, "d2_im": None,
    "mesh": 2000, "theta_steps": 64,
    "format": "json", "out": None, "level": "quick",
}

_FLOAT_KEYS = ("gamma", "d_re", "d_im", "d2_re", "d2_im")
_INT_KEYS = ("mesh", "theta_steps")
_STR_KEYS = ("family", "format", "out", "level")


def _load_config(path: str) -> Dict[str, object]:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise CliError(2, f"cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise CliError(2, f"malformed TOML in {path}: {exc}") from exc
    out: Dict[str, object] = {}
    for key, value in data.items():
        if key not in _CONFIG_KEYS:
            raise CliError(2, f"unknown config key {key!r} in {path}")
        if key in _FLOAT_KEYS:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise CliError(2, f"config key {key!r} must be a number")
            out[key] = float(value)
        elif key in _INT_KEYS:
            if isinstance(value, bool) or not isinstance(value, int):
                raise CliError(2, f"config key {key!r} must be an integer")
            out[key] = int(value)
        else:
            if not isinstance(value, str):
                raise CliError(2, f"config key {key!r} must be a string")
            out[key] = value
    return out


def _effective_config(args: argparse.Namespace) -> Tuple[Dict[str, object], Optional[str]]:
    cfg = dict(_DEFAULTS)
    path = getattr(args, "config", None) or os.environ.get("BKVG_CONFIG") or None
    if path:
        cfg.update(_load_config(path))
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    return cfg, path


# ---------------------------------------------------------------------------
# deterministic rendering: fixed key order, 12-significant-digit floats
# ---------------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    if not math.isfinite(x):
        raise CliError(1, f"non-finite value {x!r} in report")
    if x == 0.0:
        x = 0.0          # canonicalize -0.0
    return format(x, ".11e")


def _render(value, indent: int) -> str:
    pad = "  " * indent
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return _fmt_float(value)
    if value is None:
        return "null"
    if isinstance(value, dict):
        if not value:
            return "{}"
        rows = [f'{pad}  {json.dumps(str(k))}: {_render(v, indent + 1)}'
                for k, v in value.items()]
        return "{\n" + ",\n".join(rows) + "\n" + pad + "}"
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        if all(isinstance(v, float) for v in value):
            return "[" + ", ".join(_fmt_float(v) for v in value) + "]"
        rows = [pad + "  " + _render(v, indent + 1) for v in value]
        return "[\n" + ",\n".join(rows) + "\n" + pad + "]"
    raise TypeError(f"unrenderable value of type {type(value).__name__}")


def _document(tree: dict) -> bytes:
    return (_render(tree, 0) + "\n").encode("utf-8")


def _c(z: complex) -> dict:
    z = complex(z)
    return {"re": float(z.real), "im": float(z.imag)}


def _num(value, certification: str) -> dict:
    return {"value": value, "certification": certification}


def _monomial(ms: MonomialSum) -> dict:
    return {"terms": [{"coefficient": _c(c), "exponent": _c(e)} for c, e in ms.terms]}


def _envelope(subcommand: str, cfg: Dict[str, object], cfg_path: Optional[str],
              payload: dict, warnings: List[str]) -> dict:
    echo = {key: cfg[key] for key in _CONFIG_KEYS}
    echo["config_file"] = cfg_path
    return {
        "schema": SCHEMA,
        "tool": "bkvg",
        "tool_version": __version__,
        "subcommand": subcommand,
        "config_echo": echo,
        "payload": payload,
        "warnings": list(warnings),
    }


# ---------------------------------------------------------------------------
# shared input plumbing
# ---------------------------------------------------------------------------


def _make_instance(cfg: Dict[str, object]) -> FamilyInstance:
    if cfg["family"] is None:
        raise CliError(2, "missing --family (A or C)")
    if cfg["gamma"] is None:
        raise CliError(2, "missing --gamma")
    try:
        return instantiate(str(cfg["family"]), float(cfg["gamma"]))
    except ValueError as exc:        # unknown family name
        raise CliError(2, str(exc)) from exc


def _coefficient(cfg: Dict[str, object], re_key: str, im_key: str,
                 what: str) -> complex:
    if cfg[re_key] is None:
        raise CliError(2, f"missing --{re_key.replace('_', '-')} for {what}")
    im = 0.0 if cfg[im_key] is None else float(cfg[im_key])
    return complex(float(cfg[re_key]), im)


def _constant_names(inst: FamilyInstance) -> Tuple[str, str]:
    return ("sigma", "tau") if inst.is_imaginary_family else ("mu", "nu")


# ---------------------------------------------------------------------------
# subcommand payloads
# ---------------------------------------------------------------------------


def _analyze_payload(cfg: Dict[str, object]) -> Tuple[dict, List[str]]:
    inst = _make_instance(cfg)
    ctx = bracket_context(inst)
    if ctx.flagged:
        notes = "; ".join(cv.note for cv in ctx.constants.values() if cv.note)
        raise UncertifiedConstants(
            f"constants failed certification for {inst.family} "
            f"gamma={inst.gamma:g}: {notes}")
    kb = kernel_basis(inst)
    names = _constant_names(inst)
    first, second = ctx.constants[names[0]], ctx.constants[names[1]]
    payload = {
        "family": inst.family,
        "gamma": float(inst.gamma),
        "omega_plus": _c(inst.omega_plus),
        "omega_minus": _c(inst.omega_minus),
        "regime": _REGIME_LABEL[inst.regime],
        "kernel_dimension": len(kb.minus_kernel),
        "minus_kernel_exponents": [_c(k.terms[0][1]) for k in kb.minus_kernel],
        "plus_kernel_exponents": [_c(k.terms[0][1]) for k in kb.plus_kernel],
        "constants": {
            names[0]: _num(_c(first.value), first.status),
            names[1]: _num(float(second.real), second.status),
        },
        "chi": (_monomial(chi_vector(inst))
                if inst.regime == TWO_DIM_KERNEL else None),
    }
    return payload, []


def _matrix_tree(matrix) -> Optional[dict]:
    if matrix.order == 0:
        return None
    return {
        "order": matrix.order,
        "entries": [[_c(z) for z in row] for row in matrix.entries],
        "certification": CLOSED_FORM,
    }


def _check_payload(cfg: Dict[str, object]) -> Tuple[dict, List[str]]:
    inst = _make_instance(cfg)
    d = _coefficient(cfg, "d_re", "d_im", "check")
    spec = ExtensionSpec(inst, 1, d)
    rep = is_accretive(spec)
    names = _constant_names(inst)
    payload = {
        "family": inst.family,
        "gamma": float(inst.gamma),
        "d": _c(d),
        "margin": _num(float(rep.margin), rep.certification.get("margin", CLOSED_FORM)),
        names[0]: _num(_c(rep.sigma_or_mu), rep.certification[names[0]]),
        names[1]: _num(float(rep.tau_or_nu), rep.certification[names[1]]),
        "accretive": bool(rep.accretive),
        "closable": bool(rep.closable),
        "b_matrix": _matrix_tree(rep.b_matrix),
        "lower_bound": None,
        "v_domain": None,
        "notes": list(rep.notes),
    }
    if rep.lower_bound is not None:
        low, high = rep.lower_bound
        payload["lower_bound"] = {
            "inf_bound": _num(float(low), BOTH_AGREE),
            "sup_bound": _num(float(high), CLOSED_FORM),
        }
    warnings: List[str] = []
    if (inst.is_imaginary_family and rep.accretive and rep.closable):
        vd = v_d_description(spec)
        payload["v_domain"] = {
            "form_domain_vectors": [_monomial(v) for v in vd.form_domain_vectors],
            "operator_domain_vectors": [_monomial(v) for v in vd.operator_domain_vectors],
        }
        warnings.extend(vd.warnings)
    return payload, warnings


def _compare_payload(cfg: Dict[str, object]) -> Tuple[dict, List[str]]:
    inst = _make_instance(cfg)
    d1 = _coefficient(cfg, "d_re", "d_im", "the first extension")
    d2 = _coefficient(cfg, "d2_re", "d2_im", "the second extension")
    spec1 = ExtensionSpec(inst, 1, d1)
    spec2 = ExtensionSpec(inst, 1, d2)
    verdict = compare(spec1, spec2)
    payload = {
        "family": inst.family,
        "gamma": float(inst.gamma),
        "d1": _c(d1),
        "d2": _c(d2),
        "verdict": _VERDICT_LABEL[verdict],
        "margin_1": _num(float(margin_of(spec1)), CLOSED_FORM),
        "margin_2": _num(float(margin_of(spec2)), CLOSED_FORM),
    }
    return payload, []


def _numrange_results(cfg: Dict[str, object]):
    inst = _make_instance(cfg)
    mesh = int(cfg["mesh"])
    steps = int(cfg["theta_steps"])
    if mesh < 32:
        raise CliError(2, f"--mesh must be >= 32, got {mesh}")
    if steps < 8:
        raise CliError(2, f"--theta-steps must be >= 8, got {steps}")
    op = discretize(inst, "+", MeshSpec(node_count=mesh))
    rep = numerical_range_sweep(op, steps)
    summary = {
        "family": inst.family,
        "gamma": float(inst.gamma),
        "sign": "+",
        "mesh_nodes": mesh,
        "theta_steps": steps,
        "arg_inf": _num(float(rep.arg_inf), ORACLE),
        "arg_sup": _num(float(rep.arg_sup), ORACLE),
        "extremal": bool(rep.extremal),
        "angle_tol": _num(float(rep.angle_tol), CLOSED_FORM),
    }
    rows = [[float(t), float(v)] for t, v in rep.support_samples]
    return summary, rows


def _csv_text(rows: List[List[float]]) -> bytes:
    lines = ["theta,support_value"]
    lines += [f"{_fmt_float(t)},{_fmt_float(v)}" for t, v in rows]
    return ("\n".join(lines) + "\n").encode("utf-8")


def _verify_payload(cfg: Dict[str, object]) -> Tuple[dict, List[str], int]:
    level = str(cfg["level"])
    if level not in LEVELS:
        raise CliError(2, f"--level must be one of {'/'.join(LEVELS)}, got {level!r}")
    results = run_suite(level)
    passed = sum(1 for r in results if r.ok)
    payload = {
        "level": level,
        "checks": [
            {"name": r.name, "status": "pass" if r.ok else "fail", "detail": r.detail}
            for r in results
        ],
        "checks_passed": passed,
        "checks_total": len(results),
        "all_passed": passed == len(results),
    }
    return payload, [], 0 if passed == len(results) else 1


# ---------------------------------------------------------------------------
# dispatch
# ---------------------------------------------------------------------------


def _write(path: Optional[str], data: bytes) -> None:
    if path is None:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    else:
        with open(path, "wb") as fh:
            fh.write(data)


def _dispatch(args: argparse.Namespace) -> int:
    cfg, cfg_path = _effective_config(args)
    sub = args.subcommand
    fmt = str(cfg["format"])
    if fmt not in ("json", "csv"):
        raise CliError(2, f"format must be json or csv, got {fmt!r}")
    if fmt == "csv" and sub != "numrange":
        raise CliError(2, "--csv output is defined for numrange only")

    code = 0
    warnings: List[str] = []
    if sub == "analyze":
        payload, warnings = _analyze_payload(cfg)
    elif sub == "check":
        payload, warnings = _check_payload(cfg)
    elif sub == "compare":
        payload, warnings = _compare_payload(cfg)
    elif sub == "numrange":
        summary, rows = _numrange_results(cfg)
        if fmt == "csv":
            env = _envelope(sub, cfg, cfg_path, summary, warnings)
            out = cfg["out"]
            if out is None:
                _write(None, _csv_text(rows))
            else:
                # table to the file, machine-readable summary to stdout
                _write(str(out), _csv_text(rows))
                _write(None, _document(env))
            return 0
        payload = dict(summary)
        payload["support_samples"] = {"certification": ORACLE, "rows": rows}
    elif sub == "verify":
        payload, warnings, code = _verify_payload(cfg)
    else:  # pragma: no cover - argparse restricts the choices
        raise CliError(2, f"unknown subcommand {sub!r}")

    env = _envelope(sub, cfg, cfg_path, payload, warnings)
    _write(cfg["out"] if cfg["out"] is None else str(cfg["out"]), _document(env))
    return code


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def _add_flags(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--family", choices=("A", "C"),
                    help="A = imaginary Hardy perturbation, C = real one")
    sp.add_argument("--gamma", type=float, help="coupling constant, > 0")
    sp.add_argument("--d-re", dest="d_re", type=float,
                    help="real part of the extension coefficient d")
    sp.add_argument("--d-im", dest="d_im", type=float,
                    help="imaginary part of d (default 0)")
    sp.add_argument("--d2-re", dest="d2_re", type=float,
                    help="real part of the second coefficient (compare)")
    sp.add_argument("--d2-im", dest="d2_im", type=float,
                    help="imaginary part of the second coefficient (compare)")
    sp.add_argument("--mesh", type=int, help="node count for sweeps (default 2000)")
    sp.add_argument("--theta-steps", dest="theta_steps", type=int,
                    help="support-function samples (default 64)")
    sp.add_argument("--config", help="TOML config path (or env BKVG_CONFIG)")
    sp.add_argument("--json", dest="format", action="store_const", const="json",
                    help="emit the JSON report (default)")
    sp.add_argument("--csv", dest="format", action="store_const", const="csv",
                    help="emit the theta,support_value table (numrange)")
    sp.add_argument("--out", help="write the primary output to this path")
    sp.add_argument("--level", choices=LEVELS,
                    help="verification depth (verify; default quick)")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bkvg",
        description="Accretive-extension calculator for two families of "
                    "Hardy-type operators on (0,1): classify, check, "
                    "compare, sweep numerical ranges, verify.")
    parser.add_argument("--version", action="version", version=f"bkvg {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    helps = (
        ("analyze", "kernel structure, regime, and certified constants of a family"),
        ("check", "accretivity/closability report for one extension coefficient d"),
        ("compare", "partial-order verdict between two extension coefficients"),
        ("numrange", "support-function sweep of the numerical range"),
        ("verify", "run the oracle verification suite"),
    )
    for name, text in helps:
        _add_flags(sub.add_parser(name, help=text))
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:    # argparse already printed the message
        return int(exc.code) if exc.code else 0
    try:
        return _dispatch(args)
    except CliError as exc:
        print(f"bkvg: error: {exc}", file=sys.stderr)
        return exc.code
    except UncertifiedConstants as exc:
        print(f"bkvg: certification failure: {exc}", file=sys.stderr)
        return 3
    except (InvalidGamma, DomainViolation, FamilyMismatch, NotAccretive,
            NotApplicable, NotClosable, WrongFamily, WrongRegime) as exc:
        print(f"bkvg: error: {exc}", file=sys.stderr)
        return 2
    except BkvgError as exc:     # solver or quadrature breakdown
        print(f"bkvg: computation failed: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"bkvg: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":       # pragma: no cover
    raise SystemExit(main())
