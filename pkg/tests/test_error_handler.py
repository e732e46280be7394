# tests/test_error_handler.py
import json
import logging

import pytest

from deq_library.diffusion import DensityStats, DiffusionReport
from deq_library.error_handler import (
    EXIT_NON_CONVERGENCE,
    EXIT_VALIDATION,
    ConfigurationError,
    FlippedFaceError,
    IllConditionedCornerError,
    MeshParseError,
    MeshWriteError,
    NonConvergenceError,
    SingularMatrixError,
    TopologyError,
    classify_error,
    is_validation_error,
)
from deq_library.failure_logger import build_failure_record, configure_failure_logger, log_failure
from deq_library.run_config import RunDefaults
from deq_library.utils.resilient_io import safe_write_json, write_text_atomic


def _report(iterations: int = 3) -> DiffusionReport:
    stats = DensityStats.of([1.0, 1.0])
    return DiffusionReport(
        iterations=iterations,
        dt=0.1,
        trace=[0.5, 0.2, 0.1][:iterations],
        converged=False,
        scale_factor=1.0,
        scale_center=(0.0, 0.0),
        land_density=stats,
        initial_land_density=stats,
    )


@pytest.mark.parametrize(
    "error, error_type, exit_code",
    [
        (NonConvergenceError(_report()), "non_convergence", EXIT_NON_CONVERGENCE),
        (MeshParseError("a.off", 3, "bad"), "mesh_parse", EXIT_VALIDATION),
        (TopologyError("two loops"), "topology", EXIT_VALIDATION),
        (ConfigurationError("eps"), "configuration", EXIT_VALIDATION),
        (FlippedFaceError([4]), "flipped_face", EXIT_VALIDATION),
        (IllConditionedCornerError([1]), "boundary_curve", EXIT_VALIDATION),
        (SingularMatrixError("zero pivot"), "solver", EXIT_VALIDATION),
        (FileNotFoundError("gone"), "io", EXIT_VALIDATION),
        (KeyError("x"), "unknown", EXIT_VALIDATION),
    ],
)
def test_classify_error(error, error_type, exit_code):
    classified = classify_error(error)
    assert classified.error_type == error_type
    assert classified.exit_code == exit_code


def test_validation_errors_are_told_apart_from_numerical_ones():
    assert is_validation_error(classify_error(TopologyError("x")))
    assert not is_validation_error(classify_error(SingularMatrixError("x")))


def test_mesh_parse_error_names_file_and_line():
    error = MeshParseError("mesh.off", 12, "expected 3 coordinates")
    assert "mesh.off" in str(error)
    assert "12" in str(error)


def test_run_defaults_read_the_environment(monkeypatch):
    monkeypatch.setenv("DEQ_EPSILON", "0.01")
    monkeypatch.setenv("DEQ_MAX_ITERATIONS", "17")
    assert RunDefaults.epsilon() == 0.01
    assert RunDefaults.max_iterations() == 17


def test_invalid_environment_value_falls_back(monkeypatch, caplog):
    monkeypatch.setenv("DEQ_TRUNCATE_RADIUS", "far")
    with caplog.at_level(logging.WARNING, logger="deq_library"):
        assert RunDefaults.truncate_radius() == 5.0
    assert "DEQ_TRUNCATE_RADIUS" in caplog.text


def test_log_dir_is_unset_by_default(monkeypatch):
    monkeypatch.delenv("DEQ_LOG_DIR", raising=False)
    assert RunDefaults.log_dir() is None


def test_failure_record_carries_the_partial_report():
    record = build_failure_record(NonConvergenceError(_report()), {"input": "face.off"})
    assert record["classification"] == "non_convergence"
    assert record["exit_code"] == EXIT_NON_CONVERGENCE
    assert record["context"] == {"input": "face.off"}
    assert record["report"]["iterations"] == 3
    assert record["error_chain"] is None
    assert record["input_error"] is False


def test_failure_record_marks_input_errors():
    assert build_failure_record(TopologyError("two loops"))["input_error"] is True
    assert build_failure_record(SingularMatrixError("zero pivot"))["input_error"] is False


def test_failure_record_keeps_index_lists_and_causes():
    try:
        try:
            raise ValueError("zero area")
        except ValueError as e:
            raise FlippedFaceError([7, 9]) from e
    except FlippedFaceError as error:
        record = build_failure_record(error)
    assert record["faces"] == [7, 9]
    assert [link["type"] for link in record["error_chain"]] == ["FlippedFaceError", "ValueError"]


def test_log_failure_writes_one_json_line(tmp_path, caplog):
    configure_failure_logger(tmp_path)
    try:
        with caplog.at_level(logging.ERROR, logger="deq_library"):
            log_failure(TopologyError("not a disk"), {"command": "flatten"})
        lines = (tmp_path / "failures.log").read_text().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0])["error_message"] == "not a disk"
        assert "See failures.log" in caplog.text
    finally:
        configure_failure_logger(None)
        for handler in list(logging.getLogger("deq_failures").handlers):
            handler.close()
            logging.getLogger("deq_failures").removeHandler(handler)


def test_atomic_write_replaces_the_file(tmp_path):
    path = tmp_path / "out.txt"
    write_text_atomic(path, "first\n")
    write_text_atomic(path, "second\n")
    assert path.read_text() == "second\n"
    assert [p.name for p in tmp_path.iterdir()] == ["out.txt"]


def test_atomic_write_into_missing_directory(tmp_path):
    with pytest.raises(MeshWriteError):
        write_text_atomic(tmp_path / "missing" / "out.txt", "x")


def test_json_rejects_nan(tmp_path):
    logger = logging.getLogger("deq_library")
    with pytest.raises(MeshWriteError, match="not serializable"):
        safe_write_json(tmp_path / "r.json", {"x": float("nan")}, logger)
    assert not safe_write_json(
        tmp_path / "r.json", {"x": float("nan")}, logger, raise_on_failure=False
    )
