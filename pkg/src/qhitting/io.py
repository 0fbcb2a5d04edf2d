"""JSON files for user-supplied chains.

Complex numbers are ``[re, im]`` pairs and matrices are lists of rows
(row-major). Schemas::

    channel:  {"dim": d, "kraus": [M, ...]}            # and/or "superop": M (d^2 x d^2)
    state:    {"dim": d, "rho": M}  or  {"dim": d, "psi": [z, ...]}
    target:   {"dim": d, "indices": [i, ...]}  or  {"dim": d, "projector": M}
    classical:{"P": [[p, ...], ...]}               # real row-stochastic matrix
    sigma:    {"weights": {"1": w1, "3": w3}, "allow_zero": false}

A bare JSON array is also accepted for a classical transition matrix.
"""
import json
from pathlib import Path

import numpy as np

from .channels import Channel, DensityMatrix, Explicit, TargetSubspace
from .errors import QHittingError


class InputError(QHittingError, ValueError):
    pass


def _load(path):
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise InputError(f"{path}: cannot read file ({exc.strerror})") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc


def _complex(x, where):
    if isinstance(x, (int, float)) and not isinstance(x, bool):
        return complex(x)
    if isinstance(x, (list, tuple)) and len(x) == 2 and all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in x
    ):
        return complex(x[0], x[1])
    raise InputError(f"{where}: expected a number or an [re, im] pair, got {x!r}")


def _matrix(rows, where, shape=None):
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise InputError(f"{where}: expected a non-empty list of rows")
    width = len(rows[0])
    out = np.empty((len(rows), width), dtype=complex)
    for i, row in enumerate(rows):
        if len(row) != width:
            raise InputError(f"{where}[{i}]: row has {len(row)} entries, expected {width}")
        for j, x in enumerate(row):
            out[i, j] = _complex(x, f"{where}[{i}][{j}]")
    if shape is not None and out.shape != shape:
        raise InputError(f"{where}: shape {out.shape}, expected {shape}")
    return out


def _encode_matrix(m):
    m = np.asarray(m, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _field(data, key, path):
    if not isinstance(data, dict):
        raise InputError(f"{path}: top level must be a JSON object")
    if key not in data:
        raise InputError(f"{path}: missing field '{key}'")
    return data[key]


def _dim(data, path):
    d = _field(data, "dim", path)
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise InputError(f"{path}: field 'dim' must be a positive integer, got {d!r}")
    return d


def _wrap(path, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except InputError:
        raise
    except QHittingError as exc:
        raise InputError(f"{path}: {exc}") from exc


def channel_to_dict(e):
    out = {"dim": e.dim}
    if e.has_kraus:
        out["kraus"] = [_encode_matrix(k) for k in e.kraus]
    else:
        out["superop"] = _encode_matrix(e.superop)
    return out


def channel_from_dict(data, path="<channel>"):
    d = _dim(data, path)
    kraus = superop = None
    if "kraus" in data:
        ks = data["kraus"]
        if not isinstance(ks, list) or not ks:
            raise InputError(f"{path}: field 'kraus' must be a non-empty list of matrices")
        kraus = [_matrix(k, f"{path}: kraus[{i}]", (d, d)) for i, k in enumerate(ks)]
    if "superop" in data:
        superop = _matrix(data["superop"], f"{path}: superop", (d * d, d * d))
    if kraus is None and superop is None:
        raise InputError(f"{path}: need field 'kraus' or 'superop'")
    return _wrap(path, Channel, d, kraus=kraus, superop=superop)


def state_to_dict(rho):
    m = rho.mat if isinstance(rho, DensityMatrix) else np.asarray(rho)
    return {"dim": m.shape[0], "rho": _encode_matrix(m)}


def state_from_dict(data, path="<state>"):
    d = _dim(data, path)
    if "rho" in data:
        m = _matrix(data["rho"], f"{path}: rho", (d, d))
        return _wrap(path, DensityMatrix, m)
    if "psi" in data:
        psi = data["psi"]
        if not isinstance(psi, list) or len(psi) != d:
            raise InputError(f"{path}: field 'psi' must list {d} amplitudes")
        v = np.array([_complex(z, f"{path}: psi[{i}]") for i, z in enumerate(psi)])
        return _wrap(path, DensityMatrix.pure, v)
    raise InputError(f"{path}: need field 'rho' or 'psi'")


def target_to_dict(target):
    if target.is_diagonal:
        idx = [int(i) for i in np.flatnonzero(np.abs(np.diag(target.pi_z)) > 0.5)]
        return {"dim": target.dim, "indices": idx}
    return {"dim": target.dim, "projector": _encode_matrix(target.pi_z)}


def target_from_dict(data, path="<target>"):
    d = _dim(data, path)
    if "indices" in data:
        idx = data["indices"]
        if not isinstance(idx, list) or not all(isinstance(i, int) and not isinstance(i, bool) for i in idx):
            raise InputError(f"{path}: field 'indices' must be a list of integers")
        return _wrap(path, TargetSubspace.from_indices, d, idx)
    if "projector" in data:
        return _wrap(path, TargetSubspace, _matrix(data["projector"], f"{path}: projector", (d, d)))
    raise InputError(f"{path}: need field 'indices' or 'projector'")


def stochastic_from_data(data, path="<matrix>"):
    rows = data["P"] if isinstance(data, dict) and "P" in data else data
    if isinstance(data, dict) and "P" not in data:
        raise InputError(f"{path}: missing field 'P'")
    m = _matrix(rows, f"{path}: P")
    if np.abs(m.imag).max() > 0:
        raise InputError(f"{path}: transition matrix must be real")
    return m.real


def sigma_from_dict(data, path="<sigma>"):
    w = _field(data, "weights", path)
    if not isinstance(w, dict):
        raise InputError(f"{path}: field 'weights' must map step counts to probabilities")
    try:
        weights = {int(k): float(v) for k, v in w.items()}
    except (TypeError, ValueError) as exc:
        raise InputError(f"{path}: field 'weights': {exc}") from exc
    return _wrap(path, Explicit, weights, allow_zero=bool(data.get("allow_zero", False)))


def load_channel(path):
    return channel_from_dict(_load(path), str(path))


def load_state(path):
    return state_from_dict(_load(path), str(path))


def load_target(path):
    return target_from_dict(_load(path), str(path))


def load_stochastic(path):
    return stochastic_from_data(_load(path), str(path))


def load_sigma(path):
    return sigma_from_dict(_load(path), str(path))


def dump_channel(e, path):
    Path(path).write_text(json.dumps(channel_to_dict(e)))


def dump_chain(e, target, rho0, directory, stem="chain"):
    """Write channel, state and target files; returns their paths."""
    directory = Path(directory)
    paths = tuple(directory / f"{stem}.{kind}.json" for kind in ("channel", "state", "target"))
    paths[0].write_text(json.dumps(channel_to_dict(e)))
    paths[1].write_text(json.dumps(state_to_dict(rho0)))
    paths[2].write_text(json.dumps(target_to_dict(target)))
    return paths
