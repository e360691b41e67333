import numpy as np
import pytest

from ripalm.common.errors import IoError
from ripalm.common.models import Manifest, ProblemKind, SolveReport, SolveStatus
from ripalm.common.store import InstanceStore, read_grid, read_matrix, read_vector, write_matrix, write_vector
from ripalm.common.utils import Stopwatch, file_checksum, format_duration, format_sci, instance_id, time_execution


def test_vector_and_matrix_files_are_bit_exact(tmp_path, rng):
    vec = rng.standard_normal(7) * 10.0 ** rng.integers(-12, 12, size=7)
    mat = rng.standard_normal((3, 4))
    write_vector(str(tmp_path / "v.txt"), vec)
    write_matrix(str(tmp_path / "M.txt"), mat)
    np.testing.assert_array_equal(read_vector(str(tmp_path / "v.txt")), vec)
    np.testing.assert_array_equal(read_matrix(str(tmp_path / "M.txt")), mat)
    assert (tmp_path / "M.txt").read_text().splitlines()[0] == "3 4"


def test_header_mismatch_is_an_io_error(tmp_path):
    path = tmp_path / "v.txt"
    path.write_text("3\n1.0\n2.0\n")
    with pytest.raises(IoError):
        read_vector(str(path))
    with pytest.raises(IoError):
        read_matrix(str(tmp_path / "missing.txt"))


def test_read_grid_npy_and_text(tmp_path):
    grid = np.array([[0.0, 1.0], [2.0, 3.0]])
    np.save(tmp_path / "img.npy", grid)
    np.savetxt(tmp_path / "img.txt", grid)
    np.testing.assert_array_equal(read_grid(str(tmp_path / "img.npy")), grid)
    np.testing.assert_array_equal(read_grid(str(tmp_path / "img.txt")), grid)


def test_store_round_trip_with_checksums(tmp_path):
    store = InstanceStore(root=str(tmp_path))
    manifest = Manifest(problem=ProblemKind.QROT, seed=3, parameters={"lam": 1.0})
    store.save_arrays("inst", {"alpha": np.array([0.5, 0.5])}, {"C": np.eye(2)}, manifest)

    loaded = store.read_manifest("inst")
    assert set(loaded.checksums) == {"alpha.txt", "C.txt"}
    store.verify_checksums("inst", loaded)
    np.testing.assert_array_equal(store.load_matrices("inst", ["C"])["C"], np.eye(2))

    (tmp_path / "inst" / "alpha.txt").write_text("2\n0.4\n0.6\n")
    with pytest.raises(IoError):
        store.verify_checksums("inst", loaded)


def test_store_missing_files(tmp_path):
    store = InstanceStore(root=str(tmp_path))
    with pytest.raises(IoError):
        store.read_manifest("nowhere")
    with pytest.raises(IoError):
        store.load_vectors(str(tmp_path), ["u"])


def test_report_round_trip(tmp_path):
    store = InstanceStore(root=str(tmp_path))
    report = SolveReport(status=SolveStatus.CONVERGED, residual=1e-7, best_residual=1e-7, seed=2)
    store.write_report(str(tmp_path), report)
    assert store.read_report(str(tmp_path)) == report


def test_utils(tmp_path):
    assert instance_id("qrot", "10x10", 1) == instance_id("qrot", "10x10", 1)
    assert instance_id("qrot", "10x10", 1) != instance_id("qrot", "10x10", 2)
    path = tmp_path / "a.txt"
    path.write_text("abc")
    assert file_checksum(str(path)) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
    assert format_duration(0.5) == "500.0 ms"
    assert format_duration(75) == "1 min 15 s"
    assert format_sci(float("nan")) == "-"
    assert format_sci(1.5e-7) == "1.50e-07"


def test_stopwatch_and_timed_commands(caplog):
    watch = Stopwatch()
    first = watch.seconds
    assert 0.0 <= first <= watch.seconds

    @time_execution
    def double(x):
        return 2 * x

    @time_execution
    def explode():
        raise ValueError("bad")

    with caplog.at_level("INFO", logger=__name__):
        assert double(21) == 42
        with pytest.raises(ValueError):
            explode()
    messages = [r.getMessage() for r in caplog.records if r.name == __name__]
    assert messages[0].startswith("double finished in ")
    assert messages[1].startswith("explode finished in ")
