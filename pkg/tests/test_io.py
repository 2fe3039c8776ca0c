import numpy as np
import pytest

from conftest import cylinder
from plateau import io
from plateau.errors import ParseError
from plateau.field import PhaseField, make_grid
from plateau.geometry import Box
from plateau.sheet import triangulate


def test_obj_round_trip(tmp_path, rng):
    s = cylinder(4, 16)
    s = s.with_vertices(s.vertices + 1e-3 * rng.normal(size=s.vertices.shape))
    s = type(s)(s.vertices, 1.75)
    io.write_obj(tmp_path / "a.obj", s)
    back = io.read_obj(tmp_path / "a.obj")
    np.testing.assert_array_equal(back.vertices, s.vertices)
    assert back.lambda_cap == 1.75
    text = (tmp_path / "a.obj").read_text().splitlines()
    assert text[1:4] == ["# M 4", "# K 16", "# lambda 1.75"]
    faces = [ln for ln in text if ln.startswith("f ")]
    assert len(faces) == 2 * 4 * 16
    assert faces[0] == "f " + " ".join(str(i + 1) for i in triangulate(s)[0])


def test_obj_errors(tmp_path):
    p = tmp_path / "bad.obj"
    p.write_text("# M 2\n# K 8\nv 1 2\n")
    with pytest.raises(ParseError) as info:
        io.read_obj(p)
    assert info.value.line == 3
    p.write_text("v 0 0 0\n")
    with pytest.raises(ParseError):
        io.read_obj(p)
    p.write_text("# M 2\n# K 8\nv 0 0 0\n")
    with pytest.raises(ParseError, match="expected 24 vertices"):
        io.read_obj(p)


def test_vtk_round_trip(tmp_path, rng):
    g = make_grid(Box([-0.5, 0.0, 1.0], [0.5, 0.5, 1.75]), 0.25)
    u = PhaseField(g, rng.random(g.shape))
    io.write_vtk(tmp_path / "u.vtk", u)
    back = io.read_vtk(tmp_path / "u.vtk")
    np.testing.assert_array_equal(back.values, u.values)
    np.testing.assert_array_equal(back.grid.origin, g.origin)
    assert back.grid.dims == g.dims and back.grid.h == g.h
    lines = (tmp_path / "u.vtk").read_text().splitlines()
    assert lines[3] == "DATASET STRUCTURED_POINTS"
    assert lines[4] == "DIMENSIONS 5 3 4"
    assert lines[8] == "SCALARS u double 1"
    # values start after LOOKUP_TABLE, with x varying fastest
    assert float(lines[10]) == u.values[0, 0, 0]
    assert float(lines[11]) == u.values[1, 0, 0]


def test_vtk_truncated(tmp_path):
    g = make_grid(Box([0] * 3, [1] * 3), 0.5)
    io.write_vtk(tmp_path / "u.vtk", PhaseField(g, np.ones(g.shape)))
    lines = (tmp_path / "u.vtk").read_text().splitlines()
    (tmp_path / "u.vtk").write_text("\n".join(lines[:-3]) + "\n")
    with pytest.raises(ParseError, match="expected 27 values"):
        io.read_vtk(tmp_path / "u.vtk")


def test_csv_repr_floats(tmp_path):
    io.write_csv(tmp_path / "t.csv", ("a", "b", "c"), [(1, 0.1, True), (2, 1 / 3, False)])
    cols, rows = io.read_csv(tmp_path / "t.csv")
    assert cols == ["a", "b", "c"]
    assert rows == [["1", "0.1", "1"], ["2", repr(1 / 3), "0"]]


def test_manifest_lists_hashes(tmp_path):
    (tmp_path / "x.txt").write_text("hello\n")
    m = io.Manifest(tmp_path, ["mode solve"])
    m.add("x.txt")
    m.complete("solve")
    lines = (tmp_path / "MANIFEST").read_text().splitlines()
    assert lines == [
        "# plateau MANIFEST", "# mode solve", "stage solve",
        "x.txt 6 sha256:5891b5b522d5df086d0ff0b110fbd9d21bb4fc7163af34d08286a2e846f6be03",
    ]
