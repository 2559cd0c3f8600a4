import json
import subprocess
import sys

import numpy as np
import pytest
import yaml

from mfbs import cli, experiments, hurst, io, simulate as sm
from mfbs.errors import ConditioningError, ConfigurationError, FormatError

SIM = {"kind": "simulate", "seed": 11, "hurst": {"family": "constant", "values": [0.5, 0.5]},
       "interval": [[1.0, 2.0], [1.0, 2.0]], "resolution": 16, "d": 1,
       "sampler": {"kind": "cholesky"}, "params": {"n_replicates": 2}}


def write_manifest(path, m):
    path.write_text(yaml.safe_dump(m))
    return path


# ------------------------------------------------------------------ io


def test_field_round_trip(tmp_path, rng):
    g = sm.Grid([[1, 2], [0.5, 3]], (3, 4))
    s = sm.FieldSample(g, 2, rng.standard_normal((12, 2)), 2 ** 40 + 3, "white-noise")
    f = io.read_file(io.write_field(tmp_path / "a.mfbs", s))
    assert f.header() == {"version": 1, "N": 2, "d": 2, "counts": [3, 4],
                          "bounds": [[1.0, 2.0], [0.5, 3.0]], "seed": 2 ** 40 + 3,
                          "sampler": "white-noise"}
    back = f.to_field()
    np.testing.assert_array_equal(back.values, s.values)
    assert back.grid == g


def test_header_layout_by_hand():
    buf = io.encode([2], [[1.0, 2.0]], 1, 7, "cholesky", np.array([0.5, -1.0]))
    assert buf[:5] == b"MFBS1"
    assert buf[5:11] == bytes([1, 0, 1, 0, 1, 0])
    assert buf[11:15] == bytes([2, 0, 0, 0])
    assert len(buf) == 5 + 6 + 4 + 16 + 9 + 16
    assert buf[-17] == 1


def test_covariance_file(tmp_path):
    C = np.array([[2.0, 1.0], [1.0, 3.0]])
    f = io.read_file(io.write_covariance(tmp_path / "c.mfbs", C, seed=5))
    assert f.sampler == "covariance" and f.counts == (2, 2)
    np.testing.assert_array_equal(f.values.reshape(2, 2), C)
    with pytest.raises(FormatError):
        f.to_field()


def test_decode_errors():
    buf = io.encode([3], [[1.0, 2.0]], 1, 0, "cholesky", np.zeros(3))
    with pytest.raises(FormatError, match="bad magic"):
        io.decode(b"XXXXX" + buf[5:])
    bad_version = buf[:5] + (2).to_bytes(2, "little") + buf[7:]
    with pytest.raises(FormatError, match="version"):
        io.decode(bad_version)
    with pytest.raises(FormatError, match="truncated header"):
        io.decode(buf[:20])
    with pytest.raises(FormatError, match="payload has 16 bytes, expected 24"):
        io.decode(buf[:-8])
    with pytest.raises(FormatError):
        io.encode([3], [[1.0, 2.0]], 1, 0, "cholesky", np.zeros(4))


def test_csv_round_trip_keeps_precision(tmp_path):
    p = io.write_csv(tmp_path / "t.csv", ["a", "b"], [[1, 0.1 + 0.2], ["x", np.float64(1 / 3)]])
    header, rows = io.read_csv(p)
    assert header == ["a", "b"]
    assert float(rows[0][1]) == 0.1 + 0.2 and float(rows[1][1]) == 1 / 3


# ----------------------------------------------------------- manifests


def test_manifest_validation():
    assert experiments.validate_manifest(dict(SIM))["kind"] == "simulate"
    with pytest.raises(ConfigurationError):
        experiments.validate_manifest({**SIM, "kind": "teleport"})
    with pytest.raises(ConfigurationError):
        experiments.validate_manifest({k: v for k, v in SIM.items() if k != "hurst"})


def test_every_shipped_manifest_validates():
    from pathlib import Path
    paths = sorted(Path(__file__).parent.parent.joinpath("manifests").glob("*.yaml"))
    assert paths
    for p in paths:
        experiments.load_manifest(p)


# ------------------------------------------------------------------ cli


def test_run_is_deterministic(tmp_path):
    man = write_manifest(tmp_path / "m.yaml", SIM)
    assert cli.main(["run", str(man), "--out", str(tmp_path / "a")]) == 0
    assert cli.main(["run", "--manifest", str(man), "--out", str(tmp_path / "b")]) == 0
    for r in range(2):
        name = f"field_{r:04d}.mfbs"
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    assert (tmp_path / "a" / "manifest.yaml").read_text() == man.read_text()
    assert json.loads((tmp_path / "a" / "summary.json").read_text())["kind"] == "simulate"
    assert "numpy" in json.loads((tmp_path / "a" / "version.json").read_text())


def test_seed_override_changes_output(tmp_path):
    man = write_manifest(tmp_path / "m.yaml", SIM)
    cli.main(["run", str(man), "--out", str(tmp_path / "a")])
    cli.main(["run", str(man), "--out", str(tmp_path / "b"), "--seed", "12"])
    a = io.read_file(tmp_path / "a" / "field_0000.mfbs")
    b = io.read_file(tmp_path / "b" / "field_0000.mfbs")
    assert b.seed == 12 and not np.array_equal(a.values, b.values)


def test_invalid_manifest_exit_code(tmp_path, capsys):
    man = write_manifest(tmp_path / "m.yaml", {**SIM, "resolution": "many"})
    assert cli.main(["run", str(man), "--out", str(tmp_path / "o")]) == 2
    assert "validation error" in capsys.readouterr().err
    assert cli.main(["run"]) == 2


def test_numerical_failure_exit_code(tmp_path, monkeypatch):
    def boom(ctx):
        raise ConditioningError("still indefinite", {"min_eigenvalue": -1.0})

    monkeypatch.setitem(experiments.RUNNERS, "simulate", boom)
    man = write_manifest(tmp_path / "m.yaml", SIM)
    assert cli.main(["run", str(man), "--out", str(tmp_path / "o")]) == 3
    cert = json.loads((tmp_path / "o" / "failure.json").read_text())
    assert cert["error"] == "ConditioningError"
    assert cert["certificate"]["min_eigenvalue"] == -1.0


def test_inspect_field_and_csv(tmp_path, capsys):
    man = write_manifest(tmp_path / "m.yaml", SIM)
    cli.main(["run", str(man), "--out", str(tmp_path / "a")])
    capsys.readouterr()
    assert cli.main(["inspect", str(tmp_path / "a" / "field_0000.mfbs")]) == 0
    out = capsys.readouterr().out
    assert "shape: (16, 16, 1)" in out and "sampler: cholesky" in out
    assert cli.main(["inspect", str(tmp_path / "a" / "fields.csv")]) == 0
    assert "rows: 2" in capsys.readouterr().out
    (tmp_path / "junk.mfbs").write_bytes(b"nope")
    assert cli.main(["inspect", str(tmp_path / "junk.mfbs")]) == 2


def test_validate_hurst_constant_ratio_zero(tmp_path):
    m = {"kind": "validate-hurst", "hurst": {"family": "constant", "values": [0.5, 0.5]},
         "interval": [[1.0, 2.0], [1.0, 2.0]], "resolution": 9, "d": 1}
    man = write_manifest(tmp_path / "m.yaml", m)
    assert cli.main(["run", str(man), "--out", str(tmp_path / "o")]) == 0
    header, rows = io.read_csv(tmp_path / "o" / "condition_a.csv")
    i = header.index("lipschitz_ratio")
    assert [float(r[i]) for r in rows] == [0.0, 0.0]


def test_levelset_csv_reports_theory(tmp_path):
    m = {"kind": "levelset", "seed": 3, "hurst": {"family": "constant", "values": [0.5, 0.5]},
         "interval": [[1.0, 2.0], [1.0, 2.0]], "resolution": 64, "d": 1,
         "params": {"n_paths": 3}}
    man = write_manifest(tmp_path / "m.yaml", m)
    assert cli.main(["run", str(man), "--out", str(tmp_path / "o")]) == 0
    header, rows = io.read_csv(tmp_path / "o" / "dimension.csv")
    assert float(rows[0][header.index("theoretical")]) == 1.5
    assert (tmp_path / "o" / "dimension_fit.svg").exists()


def test_console_script_lists_kinds():
    out = subprocess.run([sys.executable, "-m", "mfbs.cli", "list-experiments"],
                         capture_output=True, text=True, check=True).stdout.split()
    assert tuple(out) == experiments.KINDS
