import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from walshae import autoencoder as ae
from walshae import persist
from walshae.fingerprint import InterferenceMask
from walshae.ofdm import RealCapture


def awkward_floats(n, seed):
    r = np.random.default_rng(seed)
    x = r.standard_normal(n) * 10.0 ** r.integers(-300, 300, n)
    x[:3] = [np.nextafter(1.0, 2.0), 5e-324, -0.0][: min(3, n)]
    return x


def test_model_roundtrip_bit_exact(tmp_path):
    m = ae.init_model(3)
    for k in ae.PARAM_NAMES:
        a = getattr(m, k)
        a[...] = awkward_floats(a.size, hash(k) % 1000).reshape(a.shape)
    m.meta = {"seed": 3, "optimizer": "adam", "steps": 10, "scenario": "x/y", "ici_db": 6.0}
    persist.save_model(m, tmp_path / "m.txt")
    back = persist.load_model(tmp_path / "m.txt")
    for k in ae.PARAM_NAMES:
        assert getattr(back, k).tobytes() == getattr(m, k).tobytes(), k
    assert back.meta == m.meta and back.topology == m.topology


def test_model_header_fields(tmp_path):
    m = ae.init_model(0)
    m.meta = {"seed": 0, "optimizer": "sgd", "steps": 5, "scenario": "baseline"}
    persist.save_model(m, tmp_path / "m.txt")
    head = (tmp_path / "m.txt").read_text().splitlines()[:10]
    for needle in ("version: 1", "k: 4", "N: 32", "M: 16", "seed: 0", "optimizer: sgd", "steps: 5",
                   "scenario: baseline"):
        assert needle in head


def test_model_version_mismatch(tmp_path):
    persist.save_model(ae.init_model(0), tmp_path / "m.txt")
    p = tmp_path / "m.txt"
    p.write_text(p.read_text().replace("version: 1", "version: 2", 1))
    with pytest.raises(persist.LoadError, match="m.txt"):
        persist.load_model(p)


def test_model_truncated(tmp_path):
    persist.save_model(ae.init_model(0), tmp_path / "m.txt")
    p = tmp_path / "m.txt"
    p.write_text("\n".join(p.read_text().splitlines()[:-3]))
    with pytest.raises(persist.LoadError):
        persist.load_model(p)


def test_mask_roundtrip(tmp_path):
    w = np.abs(awkward_floats(32, 1))
    w[2] = 0.0
    mask = InterferenceMask(w, 2475e6, 47.52e6, 10_000, "rms", 42)
    persist.save_mask(mask, tmp_path / "k.txt")
    back = persist.load_mask(tmp_path / "k.txt", expected_order=32)
    assert back.weights.tobytes() == mask.weights.tobytes()
    assert (back.center_frequency, back.bandwidth, back.blocks_averaged, back.statistic, back.seed) == \
        (2475e6, 47.52e6, 10_000, "rms", 42)


def test_mask_dimension_error(tmp_path):
    persist.save_mask(InterferenceMask.uniform(32), tmp_path / "k.txt")
    with pytest.raises(persist.LoadError, match="dimension"):
        persist.load_mask(tmp_path / "k.txt", expected_order=64)


def test_mask_wrong_magic(tmp_path):
    (tmp_path / "k.txt").write_text("hello\n")
    with pytest.raises(persist.LoadError, match="k.txt"):
        persist.load_mask(tmp_path / "k.txt")


def test_capture_roundtrip_and_truncation(tmp_path):
    cap = RealCapture(awkward_floats(1000, 2), 5e9)
    p = tmp_path / "cap.f64"
    persist.save_capture(cap, p)
    back = persist.load_capture(p)
    assert back.samples.tobytes() == cap.samples.tobytes() and back.sample_rate == 5e9
    p.write_bytes(p.read_bytes()[:-8 * 10])
    with pytest.raises(persist.LoadError, match="length mismatch"):
        persist.load_capture(p)


def test_results_roundtrip(tmp_path):
    rows = [{"scenario": "aware@2475MHz/ici6/m1", "label": "ici-aware-model", "fc_hz": 2475e6,
             "ici_db": 6.0, "ebn0_db": 8.0, "blocks": 123456, "block_errors": 7,
             "bler": 7 / 123456, "ci95": 1.234567890123e-5},
            {"scenario": "baseline/m1", "label": "baseline", "fc_hz": float("nan"), "ici_db": 0.0,
             "ebn0_db": 4.0, "blocks": 65536, "block_errors": 100, "bler": 100 / 65536, "ci95": 0.1}]
    persist.save_results(rows, tmp_path / "r.csv")
    text = (tmp_path / "r.csv").read_text()
    assert text.splitlines()[0] == "scenario,label,fc_hz,ici_db,ebn0_db,blocks,block_errors,bler,ci95"
    back = persist.load_results(tmp_path / "r.csv")
    assert back[0] == rows[0]
    assert np.isnan(back[1]["fc_hz"])
    assert persist.results_csv(back) == text


def test_results_bad_header(tmp_path):
    (tmp_path / "r.csv").write_text("a,b\n1,2\n")
    with pytest.raises(persist.LoadError):
        persist.load_results(tmp_path / "r.csv")


def test_manifest_hashes(tmp_path):
    a = tmp_path / "a.csv"
    a.write_text("x\n1\n")
    man = persist.write_manifest(tmp_path / "manifest.json", {"run": {"seed": 1}}, [a], {"command": "t"})
    assert man["artifacts"][0]["path"] == "a.csv"
    assert json.loads((tmp_path / "manifest.json").read_text())["config"] == {"run": {"seed": 1}}
    persist.verify_manifest(tmp_path / "manifest.json")
    a.write_text("x\n2\n")
    with pytest.raises(persist.LoadError, match="hash mismatch"):
        persist.verify_manifest(tmp_path / "manifest.json")
    a.unlink()
    with pytest.raises(persist.LoadError, match="missing"):
        persist.verify_manifest(tmp_path / "manifest.json")


@settings(max_examples=200, deadline=None)
@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_roundtrips_any_double(x):
    assert float(persist.fmt(x)) == x
    assert np.float64(float(persist.fmt(x))).tobytes() == np.float64(x).tobytes()
