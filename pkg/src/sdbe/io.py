"""Binary containers, CSV import/export and run configuration files.

Feature container (little endian)::

    b"SDBEFV1\\0"   8 bytes magic
    m             u64
    n             u64
    labels        n x i32
    data          m*n x f64, column-major (one feature after another)

Total length is exactly 24 + 4n + 8mn. Model containers start with
b"SDBEMD1\\0", a mode byte (1 = l1, 2 = l2, 3 = compiled linear), lambda as
f64, a flags byte (bit0 column norm, bit1 query norm, bit2 output norm) and
split_index as u64, followed by matrix blocks in the feature layout above
(without the magic): D for l1; D then P for l2; W for compiled.
"""
from __future__ import annotations

import io as _io
import os
import struct
from dataclasses import dataclass

import numpy as np

from .core import LabeledFeatureSet, _frozen
from .dictionary import ConcatDictionary
from .errors import (BadMagic, BadPayload, ConfigError, LabelCountMismatch, NonFiniteData,
                     TrailingBytes, TruncatedHeader, TruncatedPayload)
from .estimator import L1, L2, CompiledLinear, SdbeModel
from .solver_l1 import L1Settings
from .solver_l2 import RidgeOperator

FV_MAGIC = b"SDBEFV1\0"
MD_MAGIC = b"SDBEMD1\0"
MODE_CODES = {L1: 1, L2: 2, "compiled": 3}
MODE_NAMES = {v: k for k, v in MODE_CODES.items()}
_I32 = np.iinfo(np.int32)


# --- matrix blocks -----------------------------------------------------------

def _block_bytes(matrix: np.ndarray, labels: np.ndarray) -> bytes:
    matrix = np.asarray(matrix, dtype="<f8")
    labels = np.asarray(labels)
    m, n = matrix.shape
    if labels.shape != (n,):
        raise LabelCountMismatch(f"{labels.size} labels for {n} columns")
    if labels.size and (labels.min() < _I32.min or labels.max() > _I32.max):
        raise BadPayload("labels do not fit in int32")
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteData("refusing to write NaN/Inf")
    return (struct.pack("<QQ", m, n) + labels.astype("<i4").tobytes()
            + np.asfortranarray(matrix).tobytes(order="F"))


def _read_block(buf: bytes, pos: int, *, last: bool):
    """Parse one block at ``pos``; return (matrix, labels, new_pos)."""
    if len(buf) - pos < 16:
        raise TruncatedHeader("block header is incomplete")
    m, n = struct.unpack_from("<QQ", buf, pos)
    pos += 16
    rec = 4 + 8 * m
    need = n * rec
    have = len(buf) - pos
    if last and have != need:
        if rec and have % rec == 0 and have // rec != n:
            raise LabelCountMismatch(
                f"header declares {n} columns but the payload holds {have // rec}")
        if have < need:
            raise TruncatedPayload(f"payload has {have} bytes, expected {need}")
        raise TrailingBytes(f"{have - need} bytes after the payload")
    if have < need:
        raise TruncatedPayload(f"payload has {have} bytes, expected {need}")
    labels = np.frombuffer(buf, dtype="<i4", count=n, offset=pos).astype(np.int64)
    pos += 4 * n
    data = np.frombuffer(buf, dtype="<f8", count=m * n, offset=pos)
    pos += 8 * m * n
    matrix = data.reshape((m, n), order="F").astype(np.float64)
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteData("payload contains NaN/Inf")
    return matrix, labels, pos


def _check_magic(buf: bytes, magic: bytes) -> None:
    head = buf[:len(magic)]
    if head != magic[:len(head)]:
        raise BadMagic(f"bad magic {head!r}")
    if len(head) < len(magic):
        raise TruncatedHeader("file shorter than its magic")


# --- feature containers ----------------------------------------------------------

def features_to_bytes(fs: LabeledFeatureSet) -> bytes:
    return FV_MAGIC + _block_bytes(fs.matrix, fs.labels)


def features_from_bytes(buf: bytes) -> LabeledFeatureSet:
    return LabeledFeatureSet(*matrix_from_bytes(buf))


def matrix_to_bytes(matrix, labels) -> bytes:
    """Container for a raw (matrix, labels) pair; n = 0 is allowed."""
    return FV_MAGIC + _block_bytes(matrix, labels)


def matrix_from_bytes(buf: bytes):
    _check_magic(buf, FV_MAGIC)
    matrix, labels, _ = _read_block(buf, len(FV_MAGIC), last=True)
    return matrix, labels


def write_matrix(path, matrix, labels) -> None:
    _atomic_write(path, matrix_to_bytes(matrix, labels))


def read_matrix(path):
    if str(path).endswith(".csv"):
        fs = read_features_csv(path)
        return fs.matrix, fs.labels
    with open(path, "rb") as fh:
        return matrix_from_bytes(fh.read())


def write_features(path, fs: LabeledFeatureSet) -> None:
    if str(path).endswith(".csv"):
        write_features_csv(path, fs)
        return
    _atomic_write(path, features_to_bytes(fs))


def read_features(path) -> LabeledFeatureSet:
    if str(path).endswith(".csv"):
        return read_features_csv(path)
    with open(path, "rb") as fh:
        return features_from_bytes(fh.read())


def _atomic_write(path, data: bytes) -> None:
    tmp = f"{path}.tmp"
    with open(tmp, "wb") as fh:
        fh.write(data)
    os.replace(tmp, path)


# --- CSV -----------------------------------------------------------------------

def fmt(x) -> str:
    """17 significant digits, '.' decimal point."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def write_csv(path, header, rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(fmt(c) if not isinstance(c, str) else c for c in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if path in (None, "-"):
        import sys
        sys.stdout.write(text)
        return
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def write_features_csv(path, fs: LabeledFeatureSet) -> None:
    """One row per feature: label, then the m entries."""
    rows = [[int(fs.labels[j])] + list(fs.matrix[:, j]) for j in range(fs.n)]
    write_csv(path, ["label"] + [f"f{i}" for i in range(fs.m)], rows)


def read_features_csv(path) -> LabeledFeatureSet:
    """Label in column 1, features after; a non-numeric first row is a header."""
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if lines:
        try:
            float(lines[0].split(",")[0])
        except ValueError:
            lines = lines[1:]
    if not lines:
        raise BadPayload("CSV has no feature rows")
    try:
        arr = np.loadtxt(_io.StringIO("\n".join(lines)), delimiter=",", ndmin=2)
    except ValueError as exc:
        raise BadPayload(f"malformed CSV: {exc}") from exc
    if arr.shape[1] < 2:
        raise BadPayload("CSV rows need a label and at least one feature")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteData("CSV contains NaN/Inf")
    return LabeledFeatureSet(arr[:, 1:].T, arr[:, 0].astype(np.int64))


# --- model containers -----------------------------------------------------------

def _flags(norm_cols: bool, norm_query: bool, norm_out: bool) -> int:
    return int(norm_cols) | int(norm_query) << 1 | int(norm_out) << 2


def model_to_bytes(model) -> bytes:
    if isinstance(model, CompiledLinear):
        head = struct.pack("<BdBQ", MODE_CODES["compiled"], model.lam,
                           _flags(False, model.normalize_query, model.normalize_output), 0)
        w = model.w_matrix
        return MD_MAGIC + head + _block_bytes(w, np.zeros(w.shape[1], dtype=np.int64))
    d = model.dictionary
    head = struct.pack("<BdBQ", MODE_CODES[model.mode], model.lam,
                       _flags(model.normalize_columns, model.normalize_query,
                              model.normalize_output), d.split_index)
    labels = np.concatenate([d.class_labels, d.pattern_labels])
    out = MD_MAGIC + head + _block_bytes(d.matrix, labels)
    if model.mode == L2:
        p = model.ridge.p_matrix
        out += _block_bytes(p, np.zeros(p.shape[1], dtype=np.int64))
    return out


_HEAD = struct.calcsize("<BdBQ")


def model_from_bytes(buf: bytes, l1_settings: L1Settings | None = None):
    _check_magic(buf, MD_MAGIC)
    pos = len(MD_MAGIC)
    if len(buf) - pos < _HEAD:
        raise TruncatedHeader("model header is incomplete")
    code, lam, flags, split = struct.unpack_from("<BdBQ", buf, pos)
    pos += _HEAD
    if code not in MODE_NAMES:
        raise BadPayload(f"unknown mode byte {code}")
    if not (np.isfinite(lam) and lam > 0):
        raise BadPayload(f"invalid lambda {lam}")
    if flags & ~0b111:
        raise BadPayload(f"unknown flag bits {flags:#x}")
    nc, nq, no = bool(flags & 1), bool(flags & 2), bool(flags & 4)
    mode = MODE_NAMES[code]
    if mode == "compiled":
        w, _, pos = _read_block(buf, pos, last=True)
        if w.shape[0] != w.shape[1]:
            raise BadPayload("compiled weight matrix must be square")
        return CompiledLinear(_frozen(w), lam, nq, no)

    d, labels, pos = _read_block(buf, pos, last=(mode == L1))
    if split > d.shape[1]:
        raise BadPayload(f"split_index {split} exceeds {d.shape[1]} columns")
    cd = ConcatDictionary(_frozen(d), int(split), _frozen(labels[:split].copy()),
                          _frozen(labels[split:].copy()))
    if mode == L1:
        settings = l1_settings or L1Settings(lam)
        return SdbeModel(cd, L1, lam, None, nc, nq, no, replace_lam(settings, lam))
    p, _, pos = _read_block(buf, pos, last=True)
    if p.shape != (d.shape[1], d.shape[0]):
        raise BadPayload(f"projector shape {p.shape} does not match D {d.shape}")
    form = "dual" if d.shape[1] > d.shape[0] else "primal"
    ridge = RidgeOperator(_frozen(p), lam, int(split), form)
    return SdbeModel(cd, L2, lam, ridge, nc, nq, no, None)


def replace_lam(settings: L1Settings, lam: float) -> L1Settings:
    return L1Settings(lam, settings.max_iters, settings.kkt_tol, settings.obj_tol)


def write_model(path, model) -> None:
    _atomic_write(path, model_to_bytes(model))


def read_model(path, l1_settings: L1Settings | None = None):
    with open(path, "rb") as fh:
        return model_from_bytes(fh.read(), l1_settings)


# --- softmax weights -------------------------------------------------------------

def write_softmax_csv(path, clf) -> None:
    """Rows: class_id, bias, w_1..w_m."""
    rows = [[int(clf.class_ids[k]), clf.bias[k]] + list(clf.weights[k])
            for k in range(clf.weights.shape[0])]
    write_csv(path, ["class_id", "bias"] + [f"w{i}" for i in range(clf.m)], rows)


def read_softmax_csv(path):
    from .classifiers import SoftmaxClassifier
    fs = read_features_csv(path)     # same layout: id column, then numbers
    arr = fs.matrix.T
    return SoftmaxClassifier(arr[:, 1:], arr[:, 0], fs.labels)


# --- run configuration ---------------------------------------------------------------

@dataclass(frozen=True)
class ConfigKey:
    parse: object
    default: object


def _bool(s: str) -> bool:
    s = s.strip().lower()
    if s in ("on", "true", "1", "yes"):
        return True
    if s in ("off", "false", "0", "no"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _strs(s: str) -> tuple:
    return tuple(x.strip() for x in s.split(",") if x.strip())


def parse_config(text: str, schema: dict) -> dict:
    """Parse ``key = value`` lines; '#' starts a comment. Unknown keys are errors."""
    out = {k: v.default for k, v in schema.items()}
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in schema:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        seen.add(key)
        try:
            out[key] = schema[key].parse(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from exc
    return out
