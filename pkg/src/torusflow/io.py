"""Snapshot and trace persistence.

Binary field files: header = magic b"TKRF1" + three little-endian
uint32 (n, N, kind), then little-endian float64 payload in row-major
axis order.  Kind 0 is a scalar field (N^{2n} values); kind 1 is a
metric snapshot, which prepends a constant-matrix record for the
background H (n*n re/im pairs, row-major) to a scalar potential
payload.  The stored potential is the FULL one including its mean:
the metric ignores an additive constant but the potential bounds do
not, so round-trips must keep it.

A flow trace persists as a directory: meta.json (geometry, config,
matrices, snapshot table), one metric snapshot per stored time, the
flat-representative potential, the initial potential, and a per-step
diagnostics CSV with columns t, dt, minR, min_dotphi, max_dotphi,
mineig, volume.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
import os
import struct
from pathlib import Path

import numpy as np

from .fields import ScalarField, TorusGeometry, complex_hessian
from .flow import FlowConfig, FlowState, FlowTrace, StepDiagnostics
from .geometry import FlatMetric, HermitianField, KahlerMetric, log_det_field

__all__ = [
    "FormatError",
    "save_field",
    "load_field",
    "save_metric_snapshot",
    "load_metric_snapshot",
    "save_trace",
    "load_trace",
    "write_json_atomic",
    "write_csv_atomic",
    "write_bytes_atomic",
]

MAGIC = b"TKRF1"
KIND_SCALAR = 0
KIND_METRIC = 1

DIAG_COLUMNS = ("t", "dt", "minR", "min_dotphi", "max_dotphi", "mineig", "volume")


class FormatError(ValueError):
    pass


def _header(n: int, N: int, kind: int) -> bytes:
    return MAGIC + struct.pack("<III", n, N, kind)


def _read_header(buf) -> tuple:
    head = buf.read(len(MAGIC) + 12)
    if len(head) != len(MAGIC) + 12 or head[: len(MAGIC)] != MAGIC:
        raise FormatError("not a field snapshot (bad magic)")
    n, N, kind = struct.unpack("<III", head[len(MAGIC):])
    if kind not in (KIND_SCALAR, KIND_METRIC):
        raise FormatError(f"unknown field kind {kind}")
    return n, N, kind


def _matrix_bytes(H: np.ndarray) -> bytes:
    flat = np.asarray(H, dtype=np.complex128).ravel()
    pairs = np.empty(2 * flat.size, dtype="<f8")
    pairs[0::2] = flat.real
    pairs[1::2] = flat.imag
    return pairs.tobytes()


def _read_matrix(buf, n: int) -> np.ndarray:
    raw = buf.read(16 * n * n)
    if len(raw) != 16 * n * n:
        raise FormatError("truncated matrix record")
    pairs = np.frombuffer(raw, dtype="<f8")
    return (pairs[0::2] + 1j * pairs[1::2]).reshape(n, n)


def _payload_bytes(values: np.ndarray) -> bytes:
    return np.ascontiguousarray(values, dtype="<f8").tobytes()


def _read_payload(buf, geo: TorusGeometry) -> np.ndarray:
    count = geo.npoints
    raw = buf.read(8 * count)
    if len(raw) != 8 * count:
        raise FormatError("truncated field payload")
    return np.frombuffer(raw, dtype="<f8").reshape(geo.shape).copy()


def save_field(field: ScalarField, path) -> None:
    geo = field.geometry
    data = _header(geo.n, geo.N, KIND_SCALAR) + _payload_bytes(field.values)
    write_bytes_atomic(path, data)


def load_field(path) -> ScalarField:
    with open(path, "rb") as fh:
        n, N, kind = _read_header(fh)
        if kind != KIND_SCALAR:
            raise FormatError(f"expected a scalar field, found kind {kind}")
        geo = TorusGeometry(n=n, N=N)
        return ScalarField(geo, _read_payload(fh, geo))


def save_metric_snapshot(H: np.ndarray, phi: ScalarField, path) -> None:
    """H + the full potential (mean kept); coefficients are H + d dbar phi."""
    geo = phi.geometry
    n = geo.n
    H = np.asarray(H, dtype=np.complex128)
    if H.shape != (n, n):
        raise FormatError(f"H must be {n}x{n}, got {H.shape}")
    data = _header(n, geo.N, KIND_METRIC) + _matrix_bytes(H) + _payload_bytes(phi.values)
    write_bytes_atomic(path, data)


def load_metric_snapshot(path) -> tuple:
    """Returns (H, phi) with phi's mean preserved (no gauge applied)."""
    with open(path, "rb") as fh:
        n, N, kind = _read_header(fh)
        if kind != KIND_METRIC:
            raise FormatError(f"expected a metric snapshot, found kind {kind}")
        geo = TorusGeometry(n=n, N=N)
        H = _read_matrix(fh, n)
        phi = ScalarField(geo, _read_payload(fh, geo))
        return H, phi


# ---------------------------------------------------------------------------
# atomic writers


def write_bytes_atomic(path, data: bytes) -> None:
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def write_json_atomic(path, obj) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, allow_nan=False)
    write_bytes_atomic(path, (text + "\n").encode("utf-8"))


def write_csv_atomic(path, header, rows) -> None:
    sink = _io.StringIO()
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)
    write_bytes_atomic(path, sink.getvalue().encode("utf-8"))


# ---------------------------------------------------------------------------
# flow traces


def _matrix_json(H: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(H)]


def _matrix_from_json(rows) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in rows])


def _config_json(config: FlowConfig) -> dict:
    return {
        "scheme": config.scheme,
        "sigma": config.sigma,
        "t_end": config.t_end,
        "snapshot_times": list(config.snapshot_times),
        "eps_pos": config.eps_pos,
        "dealias": config.dealias,
        "max_rejects": config.max_rejects,
        "t_ramp": config.t_ramp,
    }


def _config_from_json(d: dict) -> FlowConfig:
    return FlowConfig(
        scheme=d["scheme"],
        sigma=d["sigma"],
        t_end=d["t_end"],
        snapshot_times=tuple(d["snapshot_times"]),
        eps_pos=d["eps_pos"],
        dealias=d["dealias"],
        max_rejects=d["max_rejects"],
        t_ramp=d["t_ramp"],
    )


def _snap_name(t: float) -> str:
    return f"snapshot_t{t:.6f}.tkrf"


def save_trace(trace: FlowTrace, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    geo = trace.initial.geometry
    save_field(trace.initial.phi, d / "initial_potential.tkrf")
    save_field(trace.flat_potential, d / "flat_potential.tkrf")

    snap_table = []
    for s in trace.snapshots:
        name = _snap_name(s.t)
        total = trace.initial.phi + s.phi_osc + s.phi_mean
        save_metric_snapshot(trace.initial.H, total, d / name)
        snap_table.append({"t": s.t, "last_dt": s.last_dt, "file": name})
    final_total = trace.initial.phi + trace.final.phi_osc + trace.final.phi_mean
    save_metric_snapshot(trace.initial.H, final_total, d / "final.tkrf")

    write_csv_atomic(
        d / "diagnostics.csv",
        DIAG_COLUMNS,
        [
            (
                repr(row.t),
                repr(row.dt),
                repr(row.min_scalar_curvature),
                repr(row.min_dot_phi),
                repr(row.max_dot_phi),
                repr(row.min_eigenvalue),
                repr(row.volume),
            )
            for row in trace.diagnostics
        ],
    )

    meta = {
        "format": "torusflow-trace-1",
        "geometry": {"n": geo.n, "N": geo.N},
        "config": _config_json(trace.config),
        "H0": _matrix_json(trace.initial.H),
        "H_alpha": _matrix_json(trace.alpha.H),
        "snapshots": snap_table,
        "final": {"t": trace.final.t, "last_dt": trace.final.last_dt, "file": "final.tkrf"},
        "files": {
            "initial_potential": "initial_potential.tkrf",
            "flat_potential": "flat_potential.tkrf",
            "diagnostics": "diagnostics.csv",
        },
    }
    write_json_atomic(d / "meta.json", meta)  # manifest written last
    return d


def _state_from_file(d: Path, entry: dict, base: KahlerMetric,
                     alpha: FlatMetric, config: FlowConfig) -> FlowState:
    H, total = load_metric_snapshot(d / entry["file"])
    geo = base.geometry
    if not np.allclose(H, base.H, rtol=0.0, atol=1e-12):
        raise FormatError("snapshot background differs from trace background")
    flow_phi = total.values - base.phi.values
    mean = float(flow_phi.mean())
    coeffs = complex_hessian(total).values + base.H
    ld = log_det_field(HermitianField(geo, coeffs), config.eps_pos)
    rhs = ld.values - math.log(float(np.linalg.det(alpha.H).real))
    if config.dealias:
        rhs = np.fft.ifftn(np.where(geo.dealias_keep, np.fft.fftn(rhs), 0.0)).real
    return FlowState(
        base=base,
        t=float(entry["t"]),
        phi_osc=ScalarField(geo, flow_phi - mean),
        phi_mean=mean,
        dot_phi=ScalarField(geo, rhs),
        last_dt=float(entry["last_dt"]),
    )


def load_trace(directory) -> FlowTrace:
    d = Path(directory)
    meta = json.loads((d / "meta.json").read_text())
    if meta.get("format") != "torusflow-trace-1":
        raise FormatError(f"unrecognized trace format {meta.get('format')!r}")
    config = _config_from_json(meta["config"])
    H0 = _matrix_from_json(meta["H0"])
    H_alpha = _matrix_from_json(meta["H_alpha"])
    init_phi = load_field(d / meta["files"]["initial_potential"])
    geo = init_phi.geometry
    if (geo.n, geo.N) != (meta["geometry"]["n"], meta["geometry"]["N"]):
        raise FormatError("geometry record disagrees with stored fields")
    base = KahlerMetric(H0, init_phi)
    alpha = FlatMetric(H_alpha, geometry=geo)
    flat_potential = load_field(d / meta["files"]["flat_potential"])

    snapshots = tuple(
        _state_from_file(d, entry, base, alpha, config) for entry in meta["snapshots"]
    )
    final = _state_from_file(d, meta["final"], base, alpha, config)

    diagnostics = []
    with open(d / meta["files"]["diagnostics"], newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(header) != DIAG_COLUMNS:
            raise FormatError(f"diagnostics columns {header} != {list(DIAG_COLUMNS)}")
        for row in reader:
            vals = [float(x) for x in row]
            diagnostics.append(
                StepDiagnostics(
                    t=vals[0],
                    dt=vals[1],
                    min_scalar_curvature=vals[2],
                    min_dot_phi=vals[3],
                    max_dot_phi=vals[4],
                    min_eigenvalue=vals[5],
                    volume=vals[6],
                )
            )

    return FlowTrace(
        initial=base,
        alpha=alpha,
        flat_potential=flat_potential,
        config=config,
        snapshots=snapshots,
        diagnostics=tuple(diagnostics),
        final=final,
    )
