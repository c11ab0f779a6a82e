"""CSV and JSON-manifest serialization.

CSV files are UTF-8 with a header row, ``\\n`` line endings and numbers
written with Python's shortest round-trip repr, independent of locale.
"""
from __future__ import annotations

import csv
import hashlib
import json
import os
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .analytic import DistributionFn, SpectralMeasure
from .estimation import AutocorrelationTable, DiffractionEstimate
from .generators import WeightedComb
from .goldenring import embed_array

SCHEMA_VERSION = 1


def fmt(x) -> str:
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def _write_rows(path: Path, header, rows):
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _read_rows(path: Path):
    with Path(path).open("r", encoding="utf-8", newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ValueError(f"{path}: empty CSV")
    return rows[0], rows[1:]


def digest(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(path, command: str, params: dict, outputs, **extra) -> Path:
    from . import __version__

    doc = {
        "schema_version": SCHEMA_VERSION,
        "tool": "quasidiff",
        "version": __version__,
        "command": command,
        "params": params,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "outputs": {Path(p).name: digest(p) for p in outputs},
    }
    doc.update(extra)
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    return path


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    return str(o)


def read_manifest(path) -> dict:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"{path}: unsupported manifest schema {doc.get('schema_version')!r}")
    return doc


def manifest_for(path) -> Path:
    return Path(path).with_suffix(".json")


# --------------------------------------------------------------------------
# combs


def write_comb(path, comb: WeightedComb) -> Path:
    n = len(comb)
    if comb.dim == 1:
        header = ["position"]
        pos_cols = [[fmt(x)] for x in comb.positions]
    else:
        header = [f"position_{i + 1}" for i in range(comb.dim)]
        pos_cols = [[fmt(x) for x in row] for row in comb.positions]
    header += ["weight_re", "weight_im"]
    if comb.kind == "golden":
        header += ["a", "b"]
    rows = []
    for i in range(n):
        row = pos_cols[i] + [fmt(comb.weights[i].real), fmt(comb.weights[i].imag)]
        if comb.kind == "golden":
            row += [str(int(comb.exact[i, 0])), str(int(comb.exact[i, 1]))]
        rows.append(row)
    return _write_rows(path, header, rows)


def comb_info(comb: WeightedComb) -> dict:
    return {"kind": comb.kind, "bounds": [list(b) for b in comb.bounds], "volume": comb.volume,
            "points": len(comb), "dim": comb.dim, "meta": comb.meta}


def read_comb(path, info: dict | None = None) -> WeightedComb:
    """Read a comb CSV; patch bounds and volume come from ``info`` or the sibling manifest."""
    if info is None:
        mpath = manifest_for(path)
        if not mpath.exists():
            raise ValueError(f"{path}: missing manifest {mpath.name} with patch volume")
        info = read_manifest(mpath).get("comb")
        if info is None:
            raise ValueError(f"{mpath}: manifest does not describe a comb")
    header, rows = _read_rows(path)
    if "weight_re" not in header or "weight_im" not in header:
        raise ValueError(f"{path}: not a comb CSV (header {header})")
    ire, iim = header.index("weight_re"), header.index("weight_im")
    pcols = [i for i, h in enumerate(header) if h == "position" or h.startswith("position_")]
    if not pcols:
        raise ValueError(f"{path}: no position column")
    weights = np.array([complex(float(r[ire]), float(r[iim])) for r in rows], dtype=np.complex128)
    kind, exact = "real", None
    if "a" in header and "b" in header:
        ia, ib = header.index("a"), header.index("b")
        exact = np.array([[int(r[ia]), int(r[ib])] for r in rows], dtype=np.int64).reshape(-1, 2)
        positions = embed_array(exact[:, 0], exact[:, 1])
        kind = "golden"
    elif len(pcols) == 1 and all(_is_int(r[pcols[0]]) for r in rows):
        exact = np.array([int(r[pcols[0]]) for r in rows], dtype=np.int64)
        positions = exact.astype(np.float64)
        kind = "integer"
    else:
        positions = np.array([[float(r[i]) for i in pcols] for r in rows], dtype=np.float64)
        if len(pcols) == 1:
            positions = positions.reshape(-1)
    return WeightedComb(positions, weights, info["bounds"], info["volume"], kind=kind, exact=exact,
                        meta=dict(info.get("meta", {})))


def _is_int(s: str) -> bool:
    try:
        int(s)
        return True
    except ValueError:
        return False


# --------------------------------------------------------------------------
# spectra and estimates


def write_pp(path, spec: SpectralMeasure) -> Path:
    k = spec.pp_k
    if k.ndim == 1:
        header = ["k", "intensity"]
        rows = [[fmt(a), fmt(b)] for a, b in zip(k, spec.pp_intensity)]
    else:
        header = [f"k_{i + 1}" for i in range(k.shape[1])] + ["intensity"]
        rows = [[fmt(x) for x in kk] + [fmt(b)] for kk, b in zip(k, spec.pp_intensity)]
    return _write_rows(path, header, rows)


def write_ac(path, grid, density) -> Path:
    return _write_rows(path, ["k", "density"], [[fmt(a), fmt(b)] for a, b in zip(grid, density)])


def write_sc(path, dist: DistributionFn) -> Path:
    return _write_rows(path, ["k", "F"], [[fmt(a), fmt(b)] for a, b in zip(dist.grid, dist.values)])


def write_curve(path, header, columns) -> Path:
    return _write_rows(path, header, [[fmt(v) for v in row] for row in zip(*columns)])


def write_estimate(path, est: DiffractionEstimate) -> Path:
    return _write_rows(path, ["k", "value"], [[fmt(a), fmt(b)] for a, b in zip(est.grid, est.values)])


def write_autocorrelation(path, table: AutocorrelationTable) -> Path:
    header = ["distance", "coeff_re", "coeff_im"]
    exact = table.exact
    if table.kind == "golden":
        header += ["a", "b"]
    rows = []
    for i, (z, c) in enumerate(zip(table.distances, table.coefficients)):
        zs = [fmt(z)] if np.ndim(z) == 0 else [";".join(fmt(v) for v in z)]
        row = zs + [fmt(c.real), fmt(c.imag)]
        if table.kind == "golden":
            row += [str(int(exact[i, 0])), str(int(exact[i, 1]))]
        rows.append(row)
    return _write_rows(path, header, rows)


def read_table(path):
    """Read a spectrum or estimate CSV.

    Returns a :class:`SpectralMeasure` for ``k,intensity`` / ``k,density`` /
    ``k,F`` files and a :class:`DiffractionEstimate` for ``k,value`` files
    (normalization from the sibling manifest, default ``"ac"``).
    """
    header, rows = _read_rows(path)
    data = np.array([[float(v) for v in r] for r in rows], dtype=np.float64).reshape(len(rows), len(header))
    if header == ["k", "intensity"]:
        return SpectralMeasure(pp_k=data[:, 0], pp_intensity=data[:, 1])
    if header == ["k", "density"]:
        return SpectralMeasure(ac_k=data[:, 0], ac_density=data[:, 1])
    if header == ["k", "F"]:
        return SpectralMeasure(sc_k=data[:, 0], sc_F=data[:, 1])
    if header == ["k", "value"]:
        norm, vol, reps = "ac", 1.0, 1
        mpath = manifest_for(path)
        if mpath.exists():
            doc = read_manifest(mpath)
            norm = doc.get("normalization", norm)
            vol = doc.get("volume", vol)
            reps = doc.get("realizations", reps)
        return DiffractionEstimate(data[:, 0], data[:, 1], norm, vol, reps)
    raise ValueError(f"{path}: unrecognised header {header}")


def default_outdir() -> Path:
    return Path(os.environ.get("QUASIDIFF_OUTDIR", "."))
