import json
import subprocess
import sys

import numpy as np
import pytest

from povm_merit import cli
from povm_merit.exceptions import DimensionMismatch, ParseError, ValidationFailed
from povm_merit.hilbert import enumerate_fock
from povm_merit.io import MAGIC, file_digest, load, read_sidecar, save
from povm_merit.models import ModelSpec, build_model, heterodyne, on_off
from povm_merit.povm import Povm, PovmElement


def _assert_same(a: Povm, b: Povm):
    assert a.labels == b.labels
    assert [e.clicks for e in a.elements] == [e.clicks for e in b.elements]
    for x, y in zip(a.elements, b.elements):
        assert np.array_equal(x.matrix, y.matrix)
    for ma, mb in zip(a.basis.mode_basis, b.basis.mode_basis):
        assert np.array_equal(ma.amplitudes, mb.amplitudes)
    assert a.basis.mode_basis.grid == b.basis.mode_basis.grid


@pytest.mark.parametrize("inline", [True, False])
def test_round_trip_bit_exact(tmp_path, modes2, inline):
    b = enumerate_fock(modes2, 3)
    povm = on_off(b, 1, 0.37, 0.013)
    path = save(povm, tmp_path / "d.json", inline=inline)
    assert (tmp_path / "d.json.bin").exists() != inline
    _, back = load(path)
    _assert_same(povm, back)


def test_round_trip_heterodyne_complex(tmp_path, modes1):
    povm = heterodyne(enumerate_fock(modes1, 5), 0, 4.0, 0.5)
    _, back = load(save(povm, tmp_path / "h.json", inline=False))
    _assert_same(povm, back)
    assert back.metadata["model"] == "heterodyne"


def test_non_hermitian_element_rejected(tmp_path, modes1):
    b = enumerate_fock(modes1, 1)
    m = np.array([[0.1, 0.2], [0.0, 0.3]], dtype=complex)
    save(Povm(b, (PovmElement("skew", 1, m),)), tmp_path / "bad.json")
    with pytest.raises(ValidationFailed, match="skew"):
        load(tmp_path / "bad.json")
    _, povm = load(tmp_path / "bad.json", check=False)
    assert povm.labels == ["skew"]


def test_truncated_sidecar(tmp_path, modes2):
    povm = on_off(enumerate_fock(modes2, 2), 0, 0.5, 0.0)
    save(povm, tmp_path / "d.json", inline=False)
    sc = tmp_path / "d.json.bin"
    raw = sc.read_bytes()
    sc.write_bytes(raw[:-40])
    with pytest.raises(ParseError) as err:
        load(tmp_path / "d.json")
    assert err.value.offset is not None and "offset" in str(err.value)
    sc.write_bytes(b"NOTMAGIC" + raw[8:])
    with pytest.raises(ParseError):
        read_sidecar(sc)
    assert raw.startswith(MAGIC)


def test_bad_manifests(tmp_path, modes1):
    p = tmp_path / "x.json"
    p.write_text("{not json")
    with pytest.raises(ParseError):
        load(p)
    save(on_off(enumerate_fock(modes1, 2), 0, 1.0, 0.0), p)
    manifest = json.loads(p.read_text())
    manifest["D"] = 7
    p.write_text(json.dumps(manifest))
    with pytest.raises(DimensionMismatch):
        load(p)
    manifest["D"] = 3
    del manifest["elements"][0]["clicks"]
    p.write_text(json.dumps(manifest))
    assert load(p)[1].elements[0].clicks == 1


def test_digest_changes_with_sidecar(tmp_path, modes1):
    povm = on_off(enumerate_fock(modes1, 2), 0, 0.5, 0.0)
    p = save(povm, tmp_path / "d.json", inline=False)
    h1 = file_digest(p)
    sc = tmp_path / "d.json.bin"
    raw = bytearray(sc.read_bytes())
    raw[-1] ^= 1
    sc.write_bytes(bytes(raw))
    assert file_digest(p) != h1


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_cli_model_then_validate(tmp_path, capsys):
    out = str(tmp_path / "pix.json")
    code, text, _ = _run(capsys, "model", "pixel_array", "--pixels", "2", "--max-clicks", "2", "--out", out)
    assert code == 0 and "9 incl. null" in text
    code, text, _ = _run(capsys, "validate", out)
    assert code == 0
    assert "non-null outcomes: 8" in text and "outcomes incl. null: 9" in text


def test_cli_validate_failure(tmp_path, capsys, modes1):
    b = enumerate_fock(modes1, 1)
    save(Povm(b, (PovmElement("big", 1, 1.5 * np.eye(2)),)), tmp_path / "b.json")
    code, text, _ = _run(capsys, "validate", str(tmp_path / "b.json"))
    assert code == 1 and "INVALID" in text
    code, _, err = _run(capsys, "report", str(tmp_path / "b.json"))
    assert code == 1 and "big" in err


def test_cli_parse_errors(tmp_path, capsys):
    assert _run(capsys, "validate", str(tmp_path / "missing.json"))[0] == 2
    (tmp_path / "junk.json").write_text("[1,")
    assert _run(capsys, "validate", str(tmp_path / "junk.json"))[0] == 2
    assert _run(capsys, "validate", "x.json", "--bogus")[0] == 2
    assert _run(capsys, "frobnicate")[0] == 2


def test_cli_report_deterministic(tmp_path, capsys):
    out = str(tmp_path / "onoff.json")
    _run(capsys, "model", "on_off", "--n-max", "2", "--eta", "0.8", "--p-dark", "0.01", "--out", out)
    code, a, _ = _run(capsys, "report", out)
    assert code == 0
    code, b, _ = _run(capsys, "report", out)
    assert a == b
    data = json.loads(a)
    assert data["detector"]["eta_max"] == pytest.approx(1 - 0.99 * 0.2)
    assert data["detector"]["dark_count_rate"] == pytest.approx(0.01)
    assert data["provenance"]["input_hash"] == file_digest(out)
    code, md, _ = _run(capsys, "report", out, "--markdown", "--no-response")
    assert code == 0 and md.startswith("# Detector figures of merit")


def test_cli_report_threads_env(tmp_path, capsys, monkeypatch):
    out = str(tmp_path / "pnr.json")
    _run(capsys, "model", "ideal_pnr", "--modes", "2", "--n-max", "2", "--out", out)
    _, serial, _ = _run(capsys, "report", out, "--no-response")
    monkeypatch.setenv("POVM_MERIT_THREADS", "4")
    _, threaded, _ = _run(capsys, "report", out, "--no-response")
    assert serial == threaded
    monkeypatch.setenv("POVM_MERIT_THREADS", "zero")
    assert _run(capsys, "report", out, "--no-response")[0] == 3


def test_cli_dist_csv(tmp_path, capsys):
    out = str(tmp_path / "g.json")
    _run(capsys, "model", "gaussian_basis", "--n-max", "1", "--out", out)
    csv = tmp_path / "t.csv"
    code, _, _ = _run(capsys, "dist", out, "--outcome", "click", "--domain", "time", "--bin", "0.25", "--out", str(csv))
    assert code == 0
    lines = csv.read_text().splitlines()
    assert lines[0] == "bin_index,bin_start,probability"
    probs = np.array([float(l.split(",")[2]) for l in lines[1:]])
    assert probs.sum() == pytest.approx(1.0)
    assert _run(capsys, "dist", out, "--outcome", "nope", "--domain", "freq", "--bin", "1", "--out", str(csv))[0] == 2
    # bins finer than two grid cells are a computation error
    assert _run(capsys, "dist", out, "--outcome", "click", "--domain", "freq", "--bin", "1e-4", "--out", str(csv))[0] == 3


def test_cli_resolution(tmp_path, capsys):
    out = str(tmp_path / "g.json")
    _run(capsys, "model", "gaussian_basis", "--n-max", "1", "--out", out)
    code, text, _ = _run(capsys, "resolution", out, "--target-bits", "4")
    assert code == 0
    values = dict(line.split(": ") for line in text.strip().splitlines())
    assert float(values["product"]) >= 8.53


def test_console_entry_point(tmp_path):
    out = tmp_path / "m.json"
    proc = subprocess.run(
        [sys.executable, "-m", "povm_merit", "model", "on_off", "--out", str(out)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0, proc.stderr
    proc = subprocess.run([sys.executable, "-m", "povm_merit", "validate", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0
