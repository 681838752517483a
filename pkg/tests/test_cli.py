import json
import subprocess
import sys

import pytest

from primdecomp.cli import EXIT_DATAERR, EXIT_NOINPUT, EXIT_OK, EXIT_SOFTWARE, EXIT_USAGE, main
from primdecomp.mesh import parse_obj, write_obj
from primdecomp.serialize import loads

import meshgen


@pytest.fixture
def cube_obj(tmp_path):
    p = tmp_path / "cube.obj"
    p.write_text(write_obj(meshgen.cube()))
    return p


@pytest.fixture
def grid_obj(tmp_path):
    p = tmp_path / "grid.obj"
    p.write_text(write_obj(meshgen.box_grid(2)))
    return p


def run(*argv):
    return main([str(a) for a in argv])


def test_decompose_cube(cube_obj, tmp_path, capsys):
    out = tmp_path / "p.json"
    assert run("decompose", "--input", cube_obj, "--target", 1, "--out", out) == EXIT_OK
    f = loads(out.read_text())
    assert [r.kind for r in f.primitives] == ["obb"]
    assert f.primitives[0].subsumed_faces == tuple(range(12))
    assert f.provenance["input"] == "cube.obj"
    assert len(f.provenance["input_sha256"]) == 64
    text = capsys.readouterr().out
    assert "primitives=1 obb=1" in text
    assert "total_bytes=40" in text


def test_decompose_mesh_out(grid_obj, tmp_path):
    obj = tmp_path / "out.obj"
    assert run("decompose", "--input", grid_obj, "--target", 4, "--mesh-out", obj, "--segments", 8) == EXIT_OK
    text = obj.read_text()
    assert text.startswith("mtllib out.mtl\n")
    assert (tmp_path / "out.mtl").read_text().count("newmtl") == 6
    assert sum(l.startswith("o obb_") for l in text.splitlines()) == 4
    assert parse_obj(text).n_faces == 4 * 6


@pytest.mark.parametrize(
    "extra",
    [["--target", "0"], ["--target", "x"], ["--target", "1", "--weights", "torus=2"],
     ["--target", "1", "--weights", "obb=-1"], ["--target", "1", "--kinds", "obb,blob"],
     ["--target", "1", "--tangent-eps", "-0.1"], ["--target", "1", "--max-excess-volume", "0"],
     ["--target", "1", "--bogus"], ["--target", "1", "--seed", "-1"], ["--target", "1", "--min-extent", "-1"]],
)
def test_usage_errors(cube_obj, extra):
    assert run("decompose", "--input", cube_obj, *extra) == EXIT_USAGE


def test_missing_subcommand_and_required_flags(cube_obj):
    assert run() == EXIT_USAGE
    assert run("decompose", "--input", cube_obj) == EXIT_USAGE


def test_missing_input(tmp_path):
    assert run("decompose", "--input", tmp_path / "nope.obj", "--target", 1) == EXIT_NOINPUT


def test_malformed_obj(tmp_path):
    p = tmp_path / "bad.obj"
    p.write_text("v 0 0 0\nf 1 2\n")
    assert run("decompose", "--input", p, "--target", 1) == EXIT_DATAERR


def test_partial_weights_keep_defaults(cube_obj, tmp_path):
    out = tmp_path / "w.json"
    assert run("decompose", "--input", cube_obj, "--target", 1, "--weights", "cylinder=1.05", "--out", out) == EXIT_OK
    w = loads(out.read_text()).provenance["config"]["weights"]
    assert w == {"obb": 1.0, "sphere": 1.0, "capsule": 1.0, "cylinder": 1.05, "prism": 1.4, "frustum": 2.1}
    assert run("decompose", "--input", cube_obj, "--target", 1, "--weights", "obb=3", "--out", out) == EXIT_OK
    assert loads(out.read_text()).provenance["config"]["weights"]["obb"] == 3.0


def test_kinds_filter(tmp_path):
    p = tmp_path / "ngon.obj"
    p.write_text(write_obj(meshgen.ngon_prism(32)))
    out = tmp_path / "k.json"
    assert run("decompose", "--input", p, "--target", 1, "--kinds", "obb,sphere", "--out", out) == EXIT_OK
    assert loads(out.read_text()).primitives[0].kind == "obb"


def test_enclosure_breach_exit(cube_obj, monkeypatch):
    import primdecomp.cli as cli

    monkeypatch.setattr(cli, "enclosure_violations", lambda mesh, pset: [(0, 3)])
    assert run("decompose", "--input", cube_obj, "--target", 1) == EXIT_SOFTWARE


def test_metrics_self_and_determinism(cube_obj, tmp_path, capsys):
    rep = tmp_path / "r.json"
    assert run("metrics", "--input", cube_obj, "--collider", cube_obj, "--samples", 2000, "--seed", 3, "--out", rep) == EXIT_OK
    first = capsys.readouterr().out
    d = json.loads(first)
    assert d["hausdorff_normalized"] <= 1e-12
    assert d["sample_count"] == 2000 and d["seed"] == 3
    assert rep.read_text() == first
    assert run("metrics", "--input", cube_obj, "--collider", cube_obj, "--samples", 2000, "--seed", 3) == EXIT_OK
    assert capsys.readouterr().out == first


def test_metrics_against_json(grid_obj, tmp_path, capsys):
    out = tmp_path / "p.json"
    assert run("decompose", "--input", grid_obj, "--target", 4, "--out", out) == EXIT_OK
    capsys.readouterr()
    assert run("metrics", "--input", grid_obj, "--collider", out, "--samples", 5000) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["hausdorff_normalized"] < 1e-9


def test_metrics_missing_collider(cube_obj, tmp_path):
    assert run("metrics", "--input", cube_obj, "--collider", tmp_path / "none.json") == EXIT_NOINPUT


def test_cost(tmp_path, capsys):
    p = tmp_path / "s.json"
    p.write_text('{"version": 1, "primitives": [{"kind": "sphere", "params": [0, 0, 0, 1]}]}')
    assert run("cost", "--collider", p) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["total_bytes"] == 16

    p.write_text('{"version": 1, "primitives": []}')
    assert run("cost", "--collider", p) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["total_bytes"] == 0

    prims = [{"kind": "capsule", "params": [0, 0, 0, 0, 0, 1, 1]},
             {"kind": "obb", "params": [0, 0, 0, 1, 1, 1, 0, 0, 0, 1]},
             {"kind": "prism", "params": [0, 0, 0, 1, 1, 1, 1, 0, 0, 0, 1]}]
    p.write_text(json.dumps({"version": 1, "primitives": prims}))
    assert run("cost", "--collider", p) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["total_bytes"] == 28 + 40 + 44


def test_cost_malformed(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    assert run("cost", "--collider", p) == EXIT_DATAERR


def test_outputs_byte_identical(grid_obj, tmp_path):
    outs = []
    for k in range(2):
        d = tmp_path / f"run{k}"
        d.mkdir()
        j, o = d / "a.json", d / "a.obj"
        assert run("decompose", "--input", grid_obj, "--target", 3, "--out", j, "--mesh-out", o) == EXIT_OK
        outs.append((j.read_bytes(), o.read_bytes(), (d / "a.mtl").read_bytes()))
    assert outs[0] == outs[1]


def test_figures(grid_obj, tmp_path):
    fig = tmp_path / "d.png"
    out = tmp_path / "p.json"
    assert run("decompose", "--input", grid_obj, "--target", 4, "--out", out, "--figure", fig) == EXIT_OK
    assert fig.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"
    fig2 = tmp_path / "h.png"
    assert run("metrics", "--input", grid_obj, "--collider", out, "--samples", 500, "--figure", fig2) == EXIT_OK
    assert fig2.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_module_entry_point(cube_obj):
    r = subprocess.run([sys.executable, "-m", "primdecomp", "decompose", "--input", str(cube_obj), "--target", "0"],
                       capture_output=True, text=True)
    assert r.returncode == EXIT_USAGE
    assert "error" in r.stderr
