"""JSON forms for matrices, setups, states, partitions and correlation records.

Complex entries are ``[re, im]`` pairs; site indices are 1-based.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .bell import MeasurementSetup, bloch_observable
from .errors import ValidationError
from .linalg import DensityOperator
from .measurement import CorrelationRecord
from .states import Partition, ghz, ghz_noise


def matrix_to_json(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {
        "dim": int(m.shape[0]),
        "rows": [[[float(z.real), float(z.imag)] for z in row] for row in m],
    }


def matrix_from_json(obj, field: str = "matrix") -> np.ndarray:
    try:
        dim = int(obj["dim"])
        rows = obj["rows"]
        m = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    except (KeyError, TypeError, ValueError):
        raise ValidationError('expected {"dim": d, "rows": [[[re, im], ...], ...]}', field=field) from None
    if m.shape != (dim, dim):
        raise ValidationError(f"rows do not form a {dim}x{dim} matrix", field=field)
    return m


def _observable_from_json(obj, field):
    if isinstance(obj, dict) and "bloch" in obj:
        return bloch_observable(obj["bloch"])
    return matrix_from_json(obj, field)


def setup_from_json(obj) -> MeasurementSetup:
    if isinstance(obj, dict) and "setup" in obj and "sites" not in obj:
        obj = obj["setup"]
    try:
        sites = obj["sites"]
    except (KeyError, TypeError):
        raise ValidationError("setup JSON needs a 'sites' list", field="sites") from None
    pairs = []
    for j, site in enumerate(sites):
        try:
            a = _observable_from_json(site["A"], f"sites[{j}].A")
            ap = _observable_from_json(site["Aprime"], f"sites[{j}].Aprime")
        except (KeyError, TypeError):
            raise ValidationError("each site needs 'A' and 'Aprime'", field=f"sites[{j}]") from None
        if "dim" in site and int(site["dim"]) != a.shape[0]:
            raise ValidationError(f"declared dim {site['dim']} vs {a.shape[0]}", field=f"sites[{j}].dim")
        pairs.append((a, ap))
    return MeasurementSetup(pairs, anticommute=bool(obj.get("anticommute", False)))


def setup_to_json(setup: MeasurementSetup) -> dict:
    return {
        "sites": [
            {"dim": int(a.shape[0]), "A": matrix_to_json(a), "Aprime": matrix_to_json(ap)}
            for a, ap in setup.sites
        ],
        "anticommute": setup.anticommute,
    }


def bloch_setup_to_json(a_vectors, ap_vectors) -> dict:
    return {
        "sites": [
            {"dim": 2, "A": {"bloch": [float(v) for v in a]}, "Aprime": {"bloch": [float(v) for v in ap]}}
            for a, ap in zip(a_vectors, ap_vectors)
        ]
    }


def state_from_json(obj, site_dims=None) -> DensityOperator:
    if not isinstance(obj, dict):
        raise ValidationError("state JSON must be an object", field="state")
    if "ghz" in obj:
        return ghz(int(obj["ghz"]["n"]))
    if "ghz_noise" in obj:
        spec = obj["ghz_noise"]
        try:
            return ghz_noise(int(spec["n"]), float(spec["x"]))
        except (KeyError, TypeError):
            raise ValidationError("ghz_noise needs 'n' and 'x'", field="ghz_noise") from None
    if "density" in obj:
        m = matrix_from_json(obj["density"], "density")
        if "dim" in obj and int(obj["dim"]) != m.shape[0]:
            raise ValidationError(f"declared dim {obj['dim']} vs {m.shape[0]}", field="dim")
        dims = obj.get("site_dims", site_dims)
        if dims is None:
            d = m.shape[0]
            n = d.bit_length() - 1
            dims = (2,) * n if d == 2 ** n and n >= 1 else (d,)
        return DensityOperator(m, dims)
    raise ValidationError("state JSON needs 'density', 'ghz' or 'ghz_noise'", field="state")


def state_to_json(rho: DensityOperator) -> dict:
    return {"dim": rho.dim, "site_dims": list(rho.site_dims), "density": matrix_to_json(rho.matrix)}


def partition_from_json(obj) -> Partition:
    try:
        n = int(obj["n"])
    except (KeyError, TypeError, ValueError):
        raise ValidationError("partition JSON needs integer 'n'", field="n") from None
    if "blocks" not in obj:
        raise ValidationError("partition JSON needs 'blocks'", field="blocks")
    return Partition.from_one_based(n, obj["blocks"])


def partition_to_json(p: Partition) -> dict:
    return {"n": p.n, "blocks": p.one_based()}


def correlations_from_json(obj) -> CorrelationRecord:
    return CorrelationRecord.from_dict(obj)


def load_json_arg(text: str, field: str):
    """Inline JSON (starting with ``{``) or a path to a JSON file.

    Returns ``(obj, sha256 of the raw text)``.
    """
    raw = text if text.lstrip().startswith("{") else None
    if raw is None:
        path = Path(text)
        if not path.is_file():
            raise ValidationError(f"no such file {text!r}", field=field)
        raw = path.read_text()
    try:
        obj = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid JSON: {exc}", field=field) from None
    return obj, hashlib.sha256(raw.encode()).hexdigest()


def dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"
