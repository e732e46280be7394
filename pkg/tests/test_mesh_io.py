# tests/test_mesh_io.py
import logging

import numpy as np
import pytest

import mesh_factory
from deq_library.error_handler import MeshParseError, MeshWriteError
from deq_library.mesh_io import load_mesh, save_mesh


def test_load_off_with_counts_on_header_line(tmp_path):
    path = tmp_path / "tri.off"
    path.write_text("OFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n")
    mesh = load_mesh(path)
    assert mesh.n_vertices == 3
    np.testing.assert_array_equal(mesh.faces, [[0, 1, 2]])


def test_load_off_skips_comments(tmp_path):
    path = tmp_path / "tri.off"
    path.write_text("# made by hand\nOFF\n3 1 0\n0 0 0\n1 0 0 # corner\n0 1 0\n3 0 1 2\n")
    assert load_mesh(path).n_faces == 1


def test_off_quad_reports_line(tmp_path):
    path = tmp_path / "quad.off"
    path.write_text("OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n")
    with pytest.raises(MeshParseError) as info:
        load_mesh(path)
    assert info.value.line == 7
    assert "triangles" in info.value.message


def test_off_index_out_of_range(tmp_path):
    path = tmp_path / "bad.off"
    path.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 3\n")
    with pytest.raises(MeshParseError, match="out of range"):
        load_mesh(path)


def test_off_trailing_content_is_ignored(tmp_path, caplog):
    path = tmp_path / "tri.off"
    path.write_text("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n9 9 9\n")
    with caplog.at_level(logging.WARNING, logger="deq_library"):
        mesh = load_mesh(path)
    assert mesh.n_faces == 1
    assert "ignoring content" in caplog.text


def test_load_obj_with_texture_indices_and_negative_indices(tmp_path):
    path = tmp_path / "tri.obj"
    path.write_text(
        "o square\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\n"
        "f 1/1/1 2/1/1 3/1/1\nf -4 -2 -1\n"
    )
    mesh = load_mesh(path)
    np.testing.assert_array_equal(mesh.faces, [[0, 1, 2], [0, 2, 3]])


def test_obj_zero_index_is_rejected(tmp_path):
    path = tmp_path / "bad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n")
    with pytest.raises(MeshParseError) as info:
        load_mesh(path)
    assert info.value.line == 4


def test_unknown_suffix_is_rejected(tmp_path):
    path = tmp_path / "mesh.stl"
    path.write_text("solid\n")
    with pytest.raises(MeshParseError, match="unsupported mesh format"):
        load_mesh(path)


def test_missing_file_names_the_path(tmp_path):
    path = tmp_path / "missing.off"
    with pytest.raises(MeshParseError) as info:
        load_mesh(path)
    assert "missing.off" in str(info.value)


@pytest.mark.parametrize("suffix", ["obj", "off"])
def test_saved_mesh_reloads_exactly(tmp_path, bump, suffix):
    path = tmp_path / f"bump.{suffix}"
    save_mesh(bump, path)
    reloaded = load_mesh(path)
    np.testing.assert_array_equal(reloaded.vertices, bump.vertices)
    np.testing.assert_array_equal(reloaded.faces, bump.faces)


def test_planar_map_is_written_with_zero_height(tmp_path):
    path = tmp_path / "map.obj"
    save_mesh(mesh_factory.square_map(2), path)
    reloaded = load_mesh(path)
    assert np.all(reloaded.vertices[:, 2] == 0.0)
    assert "\r" not in path.read_text()


def test_save_into_missing_directory_raises(tmp_path, unit_square):
    with pytest.raises(MeshWriteError):
        save_mesh(unit_square, tmp_path / "no" / "such" / "dir.obj")
