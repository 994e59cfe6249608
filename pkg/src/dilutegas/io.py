"""Model ingestion from JSON documents.

The schema is deliberately rigid: unknown fields anywhere in the document
are rejected, so a typo in a config cannot silently change a run.  Complex
numbers are records {"re": x, "im": y}.
"""

import json

import numpy as np

from .model import ModelError, ReservoirModel, SystemModel, build_mesh


class ConfigError(ValueError):
    """Raised on malformed model documents."""


def _check_keys(obj, allowed, where):
    if not isinstance(obj, dict):
        raise ConfigError(f"{where}: expected an object")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown fields {sorted(unknown)}")
    missing = set(allowed) - set(obj)
    if missing:
        raise ConfigError(f"{where}: missing fields {sorted(missing)}")


def _complex(rec, where):
    _check_keys(rec, ("re", "im"), where)
    try:
        return complex(float(rec["re"]), float(rec["im"]))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: non-numeric entry") from exc


def _complex_matrix(rows, dim, where):
    if not isinstance(rows, list) or len(rows) != dim:
        raise ConfigError(f"{where}: expected {dim} rows")
    out = np.empty((dim, dim), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != dim:
            raise ConfigError(f"{where}[{i}]: expected {dim} entries")
        for j, rec in enumerate(row):
            out[i, j] = _complex(rec, f"{where}[{i}][{j}]")
    return out


def parse_model(doc):
    """Parse a model document into (SystemModel, ReservoirModel, EnergyMesh)."""
    _check_keys(doc, ("system", "reservoir", "mesh"), "document")
    sys_doc = doc["system"]
    _check_keys(sys_doc, ("dim", "h_s", "d"), "system")
    dim = sys_doc["dim"]
    if not isinstance(dim, int) or dim < 1:
        raise ConfigError("system.dim: expected a positive integer")
    h_s = _complex_matrix(sys_doc["h_s"], dim, "system.h_s")
    d_op = _complex_matrix(sys_doc["d"], dim, "system.d")

    res_doc = doc["reservoir"]
    _check_keys(res_doc, ("xi", "modes"), "reservoir")
    modes = res_doc["modes"]
    if not isinstance(modes, list) or not modes:
        raise ConfigError("reservoir.modes: expected a nonempty list")
    omega, l_val, g0, g1 = [], [], [], []
    for k, m in enumerate(modes):
        _check_keys(m, ("omega", "l", "g0", "g1"), f"reservoir.modes[{k}]")
        omega.append(float(m["omega"]))
        l_val.append(float(m["l"]))
        g0.append(_complex(m["g0"], f"reservoir.modes[{k}].g0"))
        g1.append(_complex(m["g1"], f"reservoir.modes[{k}].g1"))

    mesh_doc = doc["mesh"]
    _check_keys(mesh_doc, ("delta_e",), "mesh")
    delta_e = float(mesh_doc["delta_e"])
    if delta_e <= 0:
        raise ConfigError("mesh.delta_e: must be positive")

    try:
        system = SystemModel(dim_s=dim, h_s=h_s, d_op=d_op)
        reservoir = ReservoirModel(omega=np.array(omega), l_val=np.array(l_val),
                                   g0=np.array(g0), g1=np.array(g1),
                                   xi=float(res_doc["xi"]))
    except ModelError as exc:
        raise ConfigError(str(exc)) from exc
    mesh = build_mesh(reservoir, delta_e)
    return system, reservoir, mesh


def load_model(path):
    """Read and parse a JSON model file."""
    with open(path) as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_model(doc)


def dump_model(system, reservoir, delta_e):
    """Serialize a model back to the JSON document form (round-trip aid)."""
    c = lambda z: {"re": float(np.real(z)), "im": float(np.imag(z))}
    mat = lambda a: [[c(a[i, j]) for j in range(a.shape[1])] for i in range(a.shape[0])]
    return {
        "system": {"dim": system.dim_s, "h_s": mat(system.h_s), "d": mat(system.d_op)},
        "reservoir": {
            "xi": reservoir.xi,
            "modes": [
                {"omega": float(reservoir.omega[k]), "l": float(reservoir.l_val[k]),
                 "g0": c(reservoir.g0[k]), "g1": c(reservoir.g1[k])}
                for k in range(reservoir.n_modes)
            ],
        },
        "mesh": {"delta_e": delta_e},
    }
