"""Record serialization (JSON lines, 17 significant digits) and summary tables."""
from __future__ import annotations

import json
import math
from collections import OrderedDict

from ..formfactor import VerificationRecord

RECORD_FIELDS = ("suite", "identity", "N", "M", "m", "sector_bra", "sector_ket", "i", "j",
                 "z_or_site", "lhs_re", "lhs_im", "rhs_re", "rhs_im", "abs_res", "rel_res",
                 "pass", "tol", "structural_zero", "note", "bra", "ket")


def _num(x) -> str:
    x = float(x)
    if math.isnan(x) or math.isinf(x):
        return json.dumps(str(x))
    return format(x, ".17g")


def _value(v) -> str:
    if isinstance(v, bool) or v is None:
        return json.dumps(v)
    if isinstance(v, float):
        return _num(v)
    if isinstance(v, complex):
        return "[" + _num(v.real) + ", " + _num(v.imag) + "]"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_value(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{" + ", ".join(json.dumps(str(k)) + ": " + _value(x) for k, x in v.items()) + "}"
    if hasattr(v, "item"):  # numpy scalar
        return _value(v.item())
    return json.dumps(v)


def record_fields(r: VerificationRecord) -> "OrderedDict[str, object]":
    d = OrderedDict()
    d["suite"] = r.suite
    d["identity"] = r.identity
    d["N"], d["M"], d["m"] = r.N, r.M, r.m
    d["sector_bra"] = list(r.sector_bra)
    d["sector_ket"] = list(r.sector_ket)
    d["i"], d["j"] = r.i, r.j
    z = r.z_or_site
    d["z_or_site"] = complex(z) if isinstance(z, complex) else z
    d["lhs_re"], d["lhs_im"] = complex(r.lhs).real, complex(r.lhs).imag
    d["rhs_re"], d["rhs_im"] = complex(r.rhs).real, complex(r.rhs).imag
    d["abs_res"], d["rel_res"] = float(r.abs_res), float(r.rel_res)
    d["pass"] = bool(r.passed)
    d["tol"] = float(r.tol)
    d["structural_zero"] = bool(r.structural_zero)
    d["note"] = r.note
    d["bra"], d["ket"] = r.bra, r.ket
    d["extra"] = r.extra
    return d


def record_line(r: VerificationRecord) -> str:
    """One JSON object; floats printed with 17 significant digits, no runtime."""
    d = record_fields(r)
    return "{" + ", ".join(json.dumps(k) + ": " + _value(v) for k, v in d.items()) + "}"


def summarize(records) -> list[dict]:
    """Per (suite, identity): count, pass rate, max rel residual over non-zero checks."""
    groups: "OrderedDict[tuple, list]" = OrderedDict()
    for r in records:
        groups.setdefault((r.suite, r.identity), []).append(r)
    out = []
    for (suite, name), rs in groups.items():
        live = [r.rel_res for r in rs if not r.structural_zero]
        out.append({"suite": suite, "identity": name, "count": len(rs),
                    "passed": sum(r.passed for r in rs),
                    "zeros": sum(r.structural_zero for r in rs),
                    "max_rel": max(live) if live else 0.0,
                    "tol": max(r.tol for r in rs),
                    "note": rs[0].note if rs[0].suite == "glN" and rs[0].N > 3 else ""})
    return out


def summary_table(records) -> str:
    rows = summarize(records)
    head = f"{'suite':<12} {'identity':<52} {'count':>6} {'zeros':>6} {'max rel':>10} {'tol':>8} {'pass':>8}"
    lines = [head, "-" * len(head)]
    for r in rows:
        rate = f"{r['passed']}/{r['count']}"
        lines.append(f"{r['suite']:<12} {r['identity'][:52]:<52} {r['count']:>6} {r['zeros']:>6} "
                     f"{r['max_rel']:>10.2e} {r['tol']:>8.0e} {rate:>8}")
    total = len(records)
    ok = sum(r.passed for r in records)
    lines.append("-" * len(head))
    lines.append(f"total: {ok}/{total} passed")
    return "\n".join(lines)
