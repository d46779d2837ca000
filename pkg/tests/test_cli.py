import io
import json

import pytest

from rsimp import shapes
from rsimp.cli import main, target_faces_to_vertices
from rsimp.meshio import read_mesh, write_mesh


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = main([str(a) for a in argv], stdout=out, stderr=err)
    return code, out.getvalue(), err.getvalue()


def fields(text):
    return dict(line.split("=", 1) for line in text.splitlines() if "=" in line)


@pytest.fixture(scope="module")
def torus_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "torus.ply"
    write_mesh(shapes.torus(40, 30), path)
    return path


def test_target_faces_estimate():
    assert target_faces_to_vertices(400) == 202
    assert target_faces_to_vertices(1) == 2
    with pytest.raises(ValueError):
        target_faces_to_vertices(0)


def test_simplify_and_refine_match_direct_run(torus_file, tmp_path):
    ck = tmp_path / "s.rsimp-ckpt"
    code, out, _ = run("simplify", "-i", torus_file, "-o", tmp_path / "a.ply", "--vertices", 100,
                       "--checkpoint", ck)
    assert code == 0 and int(fields(out)["vertices"]) >= 100
    code, _, _ = run("refine", "-i", torus_file, "--checkpoint", ck, "-o", tmp_path / "b.ply",
                     "--vertices", 400)
    assert code == 0
    run("simplify", "-i", torus_file, "-o", tmp_path / "c.ply", "--vertices", 400)
    assert (tmp_path / "b.ply").read_bytes() == (tmp_path / "c.ply").read_bytes()


def test_resume_flag(torus_file, tmp_path):
    ck = tmp_path / "s.rsimp-ckpt"
    run("simplify", "-i", torus_file, "-o", tmp_path / "a.obj", "--vertices", 50, "--checkpoint", ck)
    code, _, _ = run("simplify", "-i", torus_file, "--resume", ck, "-o", tmp_path / "b.obj",
                     "--vertices", 200)
    assert code == 0
    run("simplify", "-i", torus_file, "-o", tmp_path / "c.obj", "--vertices", 200)
    assert (tmp_path / "b.obj").read_bytes() == (tmp_path / "c.obj").read_bytes()


def test_faces_mode(torus_file, tmp_path):
    code, out, _ = run("simplify", "-i", torus_file, "-o", tmp_path / "f.ply", "--faces", 300)
    assert code == 0
    report = fields(out)
    assert int(report["faces"]) >= 300 and "rounds" in report
    assert read_mesh(tmp_path / "f.ply").n_faces == int(report["faces"])


def test_time_budget_reported(torus_file, tmp_path):
    code, out, _ = run("simplify", "-i", torus_file, "-o", tmp_path / "t.ply", "--vertices", 2000,
                       "--time-budget", 0)
    assert code == 0 and fields(out)["stopped_by"] == "time"


def test_cluster_and_measure(torus_file, tmp_path):
    code, out, _ = run("cluster", "-i", torus_file, "-o", tmp_path / "v.ply", "--vertices", 150)
    assert code == 0 and int(fields(out)["vertices"]) >= 150
    args = ("measure", "-a", torus_file, "-b", tmp_path / "v.ply", "--samples", 5000, "--seed", 7)
    code, first, _ = run(*args, "--json", tmp_path / "r.json")
    assert code == 0
    _, second, _ = run(*args)
    assert first == second
    report = json.loads((tmp_path / "r.json").read_text())
    assert report["seed"] == 7 and report["samples"] == 5000
    assert float(fields(first)["percent"]) == report["percent"]


def test_info(torus_file):
    code, out, _ = run("info", "-i", torus_file)
    report = fields(out)
    assert code == 0
    assert report["n_vertices"] == "1200" and report["components"] == "1"


def test_bench_table():
    code, out, _ = run("bench", "--bench-sizes", "500,1000", "--vertices", 40, "--repeat", 1)
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0].split()[0] == "algorithm"
    assert [l.split()[0] for l in lines[1:]] == ["rsimp", "vcluster"] * 2


def test_errors_leave_no_output(tmp_path):
    bad = tmp_path / "bad.obj"
    bad.write_text("v 0 0 0\nf 1 2 3\n")
    out_path = tmp_path / "out.ply"
    code, _, err = run("simplify", "-i", bad, "-o", out_path, "--vertices", 5)
    assert code == 1 and err.startswith("rsimp: error:")
    assert not out_path.exists()
    code, _, err = run("simplify", "-i", tmp_path / "missing.ply", "-o", out_path, "--vertices", 5)
    assert code == 1


def test_refine_requires_state(torus_file, tmp_path):
    code, _, err = run("refine", "-i", torus_file, "-o", tmp_path / "x.ply", "--vertices", 10)
    assert code == 2 and "checkpoint" in err


def test_checkpoint_for_other_mesh(torus_file, tmp_path):
    ck = tmp_path / "s.rsimp-ckpt"
    run("simplify", "-i", torus_file, "-o", tmp_path / "a.ply", "--vertices", 20, "--checkpoint", ck)
    other = tmp_path / "other.ply"
    write_mesh(shapes.torus(20, 20), other)
    code, _, err = run("refine", "-i", other, "--checkpoint", ck, "-o", tmp_path / "b.ply",
                       "--vertices", 50)
    assert code == 1 and "different mesh" in err


def test_vertices_and_faces_are_exclusive(torus_file, tmp_path):
    with pytest.raises(SystemExit):
        run("simplify", "-i", torus_file, "-o", tmp_path / "a.ply", "--vertices", 5, "--faces", 5)
