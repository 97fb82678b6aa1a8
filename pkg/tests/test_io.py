import struct

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sdbe import io
from sdbe.core import LabeledFeatureSet
from sdbe.dictionary import OcclusionErrorDictionary, build_cd
from sdbe.errors import (BadMagic, BadPayload, ConfigError, LabelCountMismatch,
                         NonFiniteData, TrailingBytes, TruncatedHeader, TruncatedPayload)
from sdbe.estimator import compile_linear, estimate_batch, fit


def _fs(m=3, n=2):
    return LabeledFeatureSet(np.arange(m * n, dtype=float).reshape(m, n) / 7, np.arange(n) - 1)


def test_layout_frozen_bytes():
    fs = LabeledFeatureSet(np.array([[1.0, 3.0], [2.0, 4.0]]), [5, -1])
    b = io.features_to_bytes(fs)
    assert b[:8] == b"SDBEFV1\0"
    assert struct.unpack_from("<QQ", b, 8) == (2, 2)
    assert struct.unpack_from("<2i", b, 24) == (5, -1)
    # column-major: first column, then second
    assert struct.unpack_from("<4d", b, 32) == (1.0, 2.0, 3.0, 4.0)
    assert len(b) == 8 + 16 + 4 * 2 + 8 * 4


@given(st.integers(1, 5).flatmap(lambda m: st.tuples(
    arrays(np.float64, st.tuples(st.just(m), st.integers(0, 5)),
           elements=st.floats(allow_nan=False, allow_infinity=False)))))
def test_roundtrip_bit_identical(t):
    x = t[0]
    labels = np.arange(x.shape[1]) * 3 - 4
    m2, l2 = io.matrix_from_bytes(io.matrix_to_bytes(x, labels))
    assert np.array_equal(m2.view(np.uint64), x.view(np.uint64))
    np.testing.assert_array_equal(l2, labels)


def test_negative_zero_and_tiny_preserved():
    x = np.array([[-0.0, 5e-324, np.finfo(float).max]])
    m2, _ = io.matrix_from_bytes(io.matrix_to_bytes(x, np.zeros(3, dtype=int)))
    assert m2.tobytes() == x.tobytes()


def _good():
    return io.features_to_bytes(_fs())


@pytest.mark.parametrize("make, err", [
    (lambda b: b"XDBEFV1\0" + b[8:], BadMagic),
    (lambda b: b[:20], TruncatedHeader),
    (lambda b: b[:5], TruncatedHeader),
    (lambda b: b[:-3], TruncatedPayload),
    (lambda b: b + b"\0\0", TrailingBytes),
    (lambda b: b[:8] + struct.pack("<QQ", 3, 3) + b[24:], LabelCountMismatch),
])
def test_corruptions(make, err):
    with pytest.raises(err):
        io.features_from_bytes(make(_good()))


def test_nan_payload():
    b = bytearray(_good())
    b[-8:] = struct.pack("<d", float("nan"))
    with pytest.raises(NonFiniteData):
        io.features_from_bytes(bytes(b))
    with pytest.raises(NonFiniteData):
        io.matrix_to_bytes(np.array([[np.inf]]), [0])


def test_file_roundtrip_and_csv(tmp_path):
    fs = _fs(4, 3)
    io.write_features(tmp_path / "a.sdbe", fs)
    back = io.read_features(tmp_path / "a.sdbe")
    assert back.matrix.tobytes() == fs.matrix.tobytes()
    io.write_features(str(tmp_path / "a.csv"), fs)
    text = (tmp_path / "a.csv").read_bytes()
    assert b"\r" not in text and text.endswith(b"\n")
    back = io.read_features(str(tmp_path / "a.csv"))
    np.testing.assert_array_equal(back.matrix, fs.matrix)   # %.17g round-trips doubles
    np.testing.assert_array_equal(back.labels, fs.labels)


def test_csv_without_header_and_malformed(tmp_path):
    p = tmp_path / "x.csv"
    p.write_text("1,0.5,0.25\n0,1,2\n")
    fs = io.read_features_csv(p)
    np.testing.assert_array_equal(fs.labels, [1, 0])
    np.testing.assert_array_equal(fs.matrix, [[0.5, 1.0], [0.25, 2.0]])
    p.write_text("1,abc\n")
    with pytest.raises(BadPayload):
        io.read_features_csv(p)


def test_fmt_17_digits():
    assert io.fmt(0.1) == "0.10000000000000001"
    assert io.fmt(3) == "3" and io.fmt(True) == "1"


def _model_parts(rng):
    cd = build_cd(LabeledFeatureSet(rng.normal(size=(6, 4)), [0, 0, 1, 1]))
    oed = OcclusionErrorDictionary(rng.normal(size=(6, 2)), np.array([0, 1]))
    return cd, oed


@pytest.mark.parametrize("mode", ["l1", "l2"])
def test_model_roundtrip(rng, mode):
    cd, oed = _model_parts(rng)
    model = fit(cd, oed, mode, 0.05, normalize_output=False)
    back = io.model_from_bytes(io.model_to_bytes(model))
    assert (back.mode, back.lam, back.normalize_output) == (mode, 0.05, False)
    v = rng.normal(size=(6, 3))
    np.testing.assert_array_equal(estimate_batch(back, v).v0_hat, estimate_batch(model, v).v0_hat)


def test_compiled_roundtrip_and_payload_checks(rng):
    cd, oed = _model_parts(rng)
    w = compile_linear(fit(cd, oed))
    b = io.model_to_bytes(w)
    back = io.model_from_bytes(b)
    assert back.w_matrix.tobytes() == w.w_matrix.tobytes()
    with pytest.raises(TrailingBytes):
        io.model_from_bytes(b + b"\0")
    bad = bytearray(b); bad[8] = 9
    with pytest.raises(BadPayload):
        io.model_from_bytes(bytes(bad))
    # an l2 model missing its projector block
    l2 = io.model_to_bytes(fit(cd, oed))
    d_only = len(l2) - (16 + 4 * 6 + 8 * 6 * 6)
    with pytest.raises(TruncatedHeader):
        io.model_from_bytes(l2[:d_only])
    with pytest.raises(BadMagic):
        io.model_from_bytes(io.features_to_bytes(_fs()))


def test_parse_config():
    schema = {"a": io.ConfigKey(int, 1), "b": io.ConfigKey(io._floats, ())}
    out = io.parse_config("# comment\na = 4\n\nb = 1e-3, 0.5  # trailing\n", schema)
    assert out == {"a": 4, "b": (1e-3, 0.5)}
    for text in ("c = 1", "a 1", "a = x", "a = 1\na = 2"):
        with pytest.raises(ConfigError):
            io.parse_config(text, schema)
