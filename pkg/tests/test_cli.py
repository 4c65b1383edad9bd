"""
Test the command-line dispatcher end to end on small files.
"""

import json
import sys
from pathlib import Path

import pytest

# Add src to path
sys.path.insert(0, str(Path(__file__).parent.parent))

from src.cli import EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, dispatch
from src.config import settings
from src.data.models import save_kernel, save_mixing
from src.harness import RateRecord, RecordStore
from src.kernel import KernelSpec
from src.mixing import DiscreteMixing


@pytest.fixture
def files(tmp_path):
    """Kernel, a two-point mixing and a small data file."""
    kernel = KernelSpec.gaussian(-1.0, 1.0)
    paths = {
        "kernel": tmp_path / "kernel.json",
        "g": tmp_path / "g.json",
        "data": tmp_path / "data.csv",
    }
    save_kernel(paths["kernel"], kernel)
    save_mixing(paths["g"], DiscreteMixing.create([-0.5, 0.5], [0.6, 0.4]), kernel)
    paths["data"].write_text("0.1\n-0.7\n1.3\n")
    return paths


def _last_line(capsys) -> str:
    return capsys.readouterr().out.strip().splitlines()[-1]


def test_fit_single_observation(tmp_path, files, capsys):
    """fit prints the certificate and saves the mixing."""
    data = tmp_path / "one.csv"
    data.write_text("0.3\n")
    out = tmp_path / "fit.json"
    code = dispatch([
        "fit", "--data", str(data), "--kernel", str(files["kernel"]),
        "--out", str(out), "--grid", "64", "--tol", "1e-6",
    ])
    assert code == EXIT_OK
    assert "certified=true" in _last_line(capsys)

    saved = json.loads(out.read_text())
    assert saved["certificate"]["certified"] is True
    mean = sum(a[0] * w for a, w in zip(saved["mixing"]["atoms"], saved["mixing"]["weights"]))
    assert mean == pytest.approx(0.3, abs=0.01)


def test_lrt_identical_prints_zero(files, capsys):
    """lrt of a law against itself prints 0."""
    code = dispatch(["lrt", "--ghat", str(files["g"]), "--g0", str(files["g"]), "--data", str(files["data"])])
    assert code == EXIT_OK
    assert _last_line(capsys) == "0"


def test_divergence_identical(tmp_path, files, capsys):
    """divergence of a law against itself is zero."""
    out = tmp_path / "div.json"
    code = dispatch(["divergence", "--ghat", str(files["g"]), "--g0", str(files["g"]), "--out", str(out)])
    assert code == EXIT_OK
    line = _last_line(capsys)
    assert line.startswith("chisq=")
    assert abs(json.loads(out.read_text())["chi_square"]) <= 1e-12


def test_demix_point_masses(tmp_path, files, capsys):
    """demix prints the W1 distance."""
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_mixing(a, DiscreteMixing.point_mass([0.0]))
    save_mixing(b, DiscreteMixing.point_mass([1.0]))
    assert dispatch(["demix", "--ghat", str(a), "--g0", str(b)]) == EXIT_OK
    assert float(_last_line(capsys)) == pytest.approx(1.0)


def test_posterior_writes_means(tmp_path, files, capsys):
    """posterior writes one mean per observation."""
    out = tmp_path / "means.csv"
    code = dispatch([
        "posterior", "--ghat", str(files["g"]), "--g0", str(files["g"]),
        "--data", str(files["data"]), "--out", str(out),
    ])
    assert code == EXIT_OK
    line = _last_line(capsys)
    assert line.startswith("n=3 ")
    assert line.endswith("mse=0")
    assert len(out.read_text().strip().splitlines()) == 3


def test_slope_of_synthetic_records(tmp_path, capsys):
    """slope reads records and prints the fitted slope."""
    store = RecordStore(tmp_path / "records.jsonl")
    for i, n in enumerate((250, 500, 1000, 2000)):
        for rep in range(4):
            store.append(RateRecord(study="rates", n=n, n_index=i, rep=rep, seed=rep, metrics={"nchisq": 3.0 / n}))
    code = dispatch(["slope", "--records", str(store.path), "--metric", "nchisq"])
    assert code == EXIT_OK
    assert _last_line(capsys).startswith("-1.0000")


def test_slope_too_few_cells(tmp_path):
    """slope needs three n values."""
    store = RecordStore(tmp_path / "records.jsonl")
    store.append(RateRecord(study="rates", n=100, n_index=0, rep=0, seed=0, metrics={"nchisq": 1.0}))
    assert dispatch(["slope", "--records", str(store.path), "--metric", "nchisq"]) == EXIT_USAGE


def test_rates_study_smoke(tmp_path, capsys):
    """rates runs a one-cell study and writes records."""
    config = tmp_path / "smoke.toml"
    config.write_text(
        'kind = "rates"\n'
        'fixture = "G2"\n'
        "n_grid = [100]\n"
        "reps = 1\n"
        'metrics = ["lrt", "w1", "support_size"]\n'
        "[solver]\n"
        "grid_per_dim = 64\n"
        "tol_gap = 1e-6\n"
    )
    records = tmp_path / "smoke.jsonl"
    summary = tmp_path / "smoke.csv"
    code = dispatch(["rates", "--config", str(config), "--records", str(records), "--out", str(summary)])
    assert code == EXIT_OK
    assert _last_line(capsys).startswith("records=1 new=1 resumed=0 failed=0")
    assert summary.exists()

    dispatch(["rates", "--config", str(config), "--records", str(records)])
    assert _last_line(capsys).startswith("records=1 new=0 resumed=1")


def test_study_kind_mismatch(tmp_path):
    """A config of another kind is a usage error."""
    config = tmp_path / "q.toml"
    config.write_text('kind = "submodel_qq"\nfixture = "GU"\nn_grid = [100]\nreps = 1\nK = [1]\n')
    assert dispatch(["rates", "--config", str(config), "--records", str(tmp_path / "r.jsonl")]) == EXIT_USAGE


def test_submodel_point_mass_is_numerical_failure(tmp_path):
    """A point-mass null fails the submodel study numerically."""
    config = tmp_path / "q.toml"
    config.write_text('kind = "submodel_qq"\nfixture = "G1"\nn_grid = [100]\nreps = 1\nK = [1]\n')
    code = dispatch(["submodel-qq", "--config", str(config), "--records", str(tmp_path / "r.jsonl")])
    assert code == EXIT_NUMERICAL


def test_unknown_flag():
    """Unknown flags are usage errors."""
    assert dispatch(["fit", "--bogus"]) == EXIT_USAGE


def test_unknown_command():
    """Unknown commands are usage errors."""
    assert dispatch(["explode"]) == EXIT_USAGE


def test_missing_required_flag(files):
    """Missing required flags are usage errors."""
    assert dispatch(["lrt", "--ghat", str(files["g"])]) == EXIT_USAGE


def test_missing_file(tmp_path, files):
    """Missing input files are usage errors."""
    code = dispatch(["lrt", "--ghat", str(tmp_path / "nope.json"), "--g0", str(files["g"]), "--data", str(files["data"])])
    assert code == EXIT_USAGE


def test_malformed_data_row(tmp_path, files):
    """Malformed data rows are usage errors."""
    bad = tmp_path / "bad.csv"
    bad.write_text("0.1\nabc\n")
    code = dispatch(["lrt", "--ghat", str(files["g"]), "--g0", str(files["g"]), "--data", str(bad)])
    assert code == EXIT_USAGE


def test_invalid_settings_refused(monkeypatch, files):
    """Out-of-range settings stop every command before it runs."""
    monkeypatch.setattr(settings, "tol_gap", 1.0)
    code = dispatch(["lrt", "--ghat", str(files["g"]), "--g0", str(files["g"]), "--data", str(files["data"])])
    assert code == EXIT_USAGE


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
