"""File formats: model/aero/case input and result emission.

All inputs are single JSON documents so a case is fully reproducible from
one human-readable file; nothing physical comes from the environment.
Floating-point values serialize through Python's shortest round-trip
``repr``, so a model written and reloaded is bit-identical.

Result emission is deterministic: ``summary.json`` and the CSV curves are
byte-stable across reruns of the same inputs (sorted keys, fixed field
order, no timestamps).  Wall-clock measurements go to a separate
``timing.json`` sidecar, which is intentionally *not* byte-stable.

Case files either embed the model and aero tables or request the bundled
generator:

    {"schema": "flutterlco/case-v1",
     "generate": {"config": 2, "size": "small"},
     "params": {"harmonics": 3, "kappa": 0.0}}

Validation failures raise ``CaseValidationError`` naming the offending
key (and the line/column for JSON syntax errors).
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .aero import AeroInfluenceModel
from .benchmark import BenchmarkCase, generate_benchmark
from .model import ContactElement, ReducedModel
from .timedomain import TimeSeries


__all__ = [
    "MODEL_SCHEMA",
    "AERO_SCHEMA",
    "CASE_SCHEMA",
    "RESULTS_SCHEMA",
    "CaseValidationError",
    "model_to_dict",
    "model_from_dict",
    "aero_set_to_dict",
    "aero_set_from_dict",
    "case_to_dict",
    "case_from_dict",
    "save_case",
    "load_case",
    "lco_record",
    "dump_json",
    "emit_results",
    "emit_curve",
    "emit_timing",
    "emit_timeseries",
]

MODEL_SCHEMA = "flutterlco/model-v1"
AERO_SCHEMA = "flutterlco/aero-v1"
CASE_SCHEMA = "flutterlco/case-v1"
RESULTS_SCHEMA = "flutterlco/results-v1"


class CaseValidationError(ValueError):
    """Input file failed schema or invariant validation."""


def _fail(key: str, msg: str):
    raise CaseValidationError(f"{key}: {msg}")


def _get(d: dict, key: str, ctx: str):
    if key not in d:
        _fail(f"{ctx}.{key}" if ctx else key, "missing required field")
    return d[key]


def _matrix(rows, key: str) -> np.ndarray:
    try:
        a = np.array(rows, dtype=float)
    except (TypeError, ValueError):
        _fail(key, "not a numeric matrix")
    if a.ndim != 2:
        _fail(key, "not a two-dimensional matrix")
    if not np.all(np.isfinite(a)):
        _fail(key, "contains non-finite entries")
    return a


def _cmatrix_to_dict(a: np.ndarray) -> dict:
    return {"re": a.real.tolist(), "im": a.imag.tolist()}


def _cmatrix(d, key: str) -> np.ndarray:
    if not isinstance(d, dict) or "re" not in d or "im" not in d:
        _fail(key, "expected an object with 're' and 'im' matrices")
    return _matrix(d["re"], key + ".re") + 1j * _matrix(d["im"], key + ".im")


# ----------------------------------------------------------------------
# model and aero documents
# ----------------------------------------------------------------------


def model_to_dict(model: ReducedModel) -> dict:
    """JSON-serializable form of a reduced model (SI units documented)."""
    d = {
        "schema": MODEL_SCHEMA,
        "units": {"mass": "kg", "stiffness": "N/m", "force": "N",
                  "frequency": "rad/s"},
        "n": model.n_dofs,
        "mass": model.mass.tolist(),
        "stiffness": model.stiffness.tolist(),
        "contacts": [
            {"coord_x": el.coord_x, "coord_y": el.coord_y,
             "k_t": el.k_t, "f_lim": el.f_lim}
            for el in model.contacts
        ],
        "sensor_coord": model.sensor_coord,
        "dominant_coord": model.dominant_coord,
        "labels": list(model.labels),
    }
    if model.t_cb is not None:
        d["t_cb"] = model.t_cb.tolist()
    return d


def model_from_dict(d: dict, ctx: str = "model") -> ReducedModel:
    """Build and validate a reduced model from its JSON form."""
    mass = _matrix(_get(d, "mass", ctx), f"{ctx}.mass")
    stiffness = _matrix(_get(d, "stiffness", ctx), f"{ctx}.stiffness")
    contacts = []
    for j, c in enumerate(d.get("contacts", [])):
        key = f"{ctx}.contacts[{j}]"
        try:
            contacts.append(ContactElement(
                coord_x=int(_get(c, "coord_x", key)),
                coord_y=int(_get(c, "coord_y", key)),
                k_t=float(_get(c, "k_t", key)),
                f_lim=float(_get(c, "f_lim", key))))
        except ValueError as exc:
            _fail(key, str(exc))
    t_cb = None
    if d.get("t_cb") is not None:
        t_cb = _matrix(d["t_cb"], f"{ctx}.t_cb")
    try:
        model = ReducedModel(
            mass, stiffness, contacts=tuple(contacts),
            sensor_coord=int(d.get("sensor_coord", 0)),
            dominant_coord=int(d.get("dominant_coord", 0)),
            t_cb=t_cb, labels=tuple(d.get("labels", ())))
        model.validate_spd()
    except ValueError as exc:
        _fail(ctx, str(exc))
    return model


def aero_set_to_dict(aero_set: dict[int, AeroInfluenceModel]) -> dict:
    per_nd = {}
    for nd, a in sorted(aero_set.items()):
        per_nd[str(nd)] = {
            "g_stick": _cmatrix_to_dict(a.g_stick),
            "g_slip": _cmatrix_to_dict(a.g_slip),
            "omega_stick": a.omega_stick,
            "omega_slip": a.omega_slip,
        }
    return {"schema": AERO_SCHEMA, "per_nd": per_nd}


def aero_set_from_dict(d: dict, ctx: str = "aero",
                       ) -> dict[int, AeroInfluenceModel]:
    out = {}
    per_nd = _get(d, "per_nd", ctx)
    if not isinstance(per_nd, dict) or not per_nd:
        _fail(f"{ctx}.per_nd", "expected a non-empty object keyed by ND")
    for nd_key, a in per_nd.items():
        key = f"{ctx}.per_nd[{nd_key}]"
        try:
            nd = int(nd_key)
        except ValueError:
            _fail(key, "nodal diameter key must be an integer")
        try:
            out[nd] = AeroInfluenceModel(
                g_stick=_cmatrix(_get(a, "g_stick", key), key + ".g_stick"),
                g_slip=_cmatrix(_get(a, "g_slip", key), key + ".g_slip"),
                omega_stick=float(_get(a, "omega_stick", key)),
                omega_slip=float(_get(a, "omega_slip", key)),
                nd=nd)
        except ValueError as exc:
            _fail(key, str(exc))
    return out


# ----------------------------------------------------------------------
# case documents
# ----------------------------------------------------------------------


def case_to_dict(case: BenchmarkCase, params: dict | None = None) -> dict:
    d = {
        "schema": CASE_SCHEMA,
        "model": model_to_dict(case.model),
        "aero": aero_set_to_dict(case.aero_set),
        "target_nd": case.target_nd,
        "mode_index": case.mode_index,
        "config": case.config,
        "size": case.size,
        "amp_range": list(case.amp_range),
        "metadata": case.metadata,
    }
    if params:
        d["params"] = dict(params)
    return d


def case_from_dict(d: dict) -> tuple[BenchmarkCase, dict]:
    """Case plus run-parameter dict, generating the benchmark on request."""
    if not isinstance(d, dict):
        raise CaseValidationError("case document must be a JSON object")
    schema = d.get("schema")
    if schema is not None and schema != CASE_SCHEMA:
        _fail("schema", f"expected {CASE_SCHEMA!r}, found {schema!r}")
    params = dict(d.get("params", {}))
    if "generate" in d:
        g = d["generate"]
        try:
            case = generate_benchmark(int(_get(g, "config", "generate")),
                                      str(g.get("size", "small")))
        except (ValueError, TypeError) as exc:
            _fail("generate", str(exc))
        return case, params

    model = model_from_dict(_get(d, "model", ""))
    aero_set = aero_set_from_dict(_get(d, "aero", ""))
    target_nd = int(d.get("target_nd", sorted(aero_set)[0]))
    if target_nd not in aero_set:
        _fail("target_nd", f"nodal diameter {target_nd} not in aero tables")
    amp_range = d.get("amp_range")
    if (not isinstance(amp_range, (list, tuple)) or len(amp_range) != 2
            or not 0 < float(amp_range[0]) < float(amp_range[1])):
        _fail("amp_range", "expected [lower, upper] with 0 < lower < upper")
    case = BenchmarkCase(
        model=model, contacts=model.contacts, aero_set=aero_set,
        target_nd=target_nd, mode_index=int(d.get("mode_index", 0)),
        config=int(d.get("config", 0)), size=str(d.get("size", "custom")),
        amp_range=(float(amp_range[0]), float(amp_range[1])),
        metadata=dict(d.get("metadata", {})))
    return case, params


def dump_json(obj, path) -> Path:
    """Canonical JSON emission: sorted keys, two-space indent, newline.

    Identical input produces byte-identical files, which keeps emitted
    summaries diffable across runs.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path


_dump_json = dump_json


def save_case(case: BenchmarkCase, path, params: dict | None = None) -> Path:
    return _dump_json(case_to_dict(case, params), Path(path))


def load_case(path) -> tuple[BenchmarkCase, dict]:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CaseValidationError(f"{path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CaseValidationError(
            f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return case_from_dict(doc)


# ----------------------------------------------------------------------
# result emission
# ----------------------------------------------------------------------

_RECORD_KEYS = (
    "method", "outcome", "stability", "omega", "sensor_amplitude",
    "modal_amplitude", "d_a", "d_s", "w_a", "w_s", "e_p_max",
    "balance_residual", "mac_stick", "mac_nl", "outer_iterations",
)

_FLOAT_KEYS = frozenset(
    k for k in _RECORD_KEYS
    if k not in ("method", "outcome", "stability", "outer_iterations"))


def lco_record(**fields) -> dict:
    """Normalize one limit-cycle record to the summary schema.

    Every known key is present in the output (missing values are null);
    unknown keys are rejected so the schema stays closed.
    """
    unknown = set(fields) - set(_RECORD_KEYS)
    if unknown:
        raise ValueError(f"unknown record fields: {sorted(unknown)}")
    rec = {}
    for key in _RECORD_KEYS:
        val = fields.get(key)
        if val is not None and key in _FLOAT_KEYS:
            val = float(val)
        if key == "outer_iterations" and val is not None:
            val = int(val)
        rec[key] = val
    return rec


def emit_results(records, outdir, name: str = "summary.json") -> Path:
    """Write the versioned, byte-stable JSON summary."""
    recs = [lco_record(**r) for r in records]
    doc = {"schema": RESULTS_SCHEMA, "n_records": len(recs), "records": recs}
    return _dump_json(doc, Path(outdir) / name)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def emit_curve(outdir, name: str, header, rows) -> Path:
    """Write one CSV curve; header entries carry the units."""
    path = Path(outdir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(x) for x in row))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def emit_timing(outdir, timings: dict, name: str = "timing.json") -> Path:
    """Wall-clock sidecar; the only emitted file that varies run to run."""
    return _dump_json({"schema": RESULTS_SCHEMA + "+timing",
                       "seconds": {k: float(v) for k, v in timings.items()}},
                      Path(outdir) / name)


def emit_timeseries(outdir, series: TimeSeries, name: str = "timeseries.csv",
                    stride: int = 1) -> Path:
    """Debug dump of an integration record."""
    n = series.u.shape[1]
    header = ["t [s]"] + [f"u{j} [m]" for j in range(n)] \
        + [f"v{j} [m/s]" for j in range(n)]
    rows = (
        [series.t[i], *series.u[i], *series.v[i]]
        for i in range(0, series.t.size, max(int(stride), 1))
    )
    return emit_curve(outdir, name, header, rows)
