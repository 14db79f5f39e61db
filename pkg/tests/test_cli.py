import json

import pytest

from src.common import subgroup_engine as se
from src.common.errors import ParseError
from src.jobs import cli

GL2_MOD9 = "GL(2, W(p=3,r=1,n=2))"


def _run(capsys, *argv):
    code = cli.main(list(argv))
    return code, json.loads(capsys.readouterr().out)


@pytest.fixture
def gens_file(tmp_path):
    def write(*lines):
        path = tmp_path / "gens.txt"
        path.write_text("\n".join(lines) + "\n")
        return str(path)
    return write


def test_ring_inverse(capsys):
    code, out = _run(capsys, "ring", "--ring", "W(p=3,r=1,n=2)", "--op", "inv", "--a", "2")
    assert code == 0 == out["exit_code"]
    assert out["op"]["result"] == "[5]"
    assert out["primitive_root"] == "[8]"
    assert out["unit_count"] == 6


def test_ring_errors_map_to_usage_code(capsys):
    code, out = _run(capsys, "ring", "--ring", "W(p=4,r=1,n=1)")
    assert code == 2
    assert out["error"]["type"] == "NonPrime"


def test_group_membership(capsys, gens_file):
    path = gens_file("# elementary matrices", "1 1 0 1", "1,0,1,1")
    code, out = _run(capsys, "group", "--group", "GL(2, W(p=3,r=1,n=1))", "--generators", path)
    assert code == 0
    assert out["order"] == 48
    assert [row["member"] for row in out["membership"]] == [True, True]

    bad = gens_file("1 0 0 0")
    code, out = _run(capsys, "group", "--group", "GL(2, W(p=3,r=1,n=1))", "--generators", bad)
    assert code == 20
    assert out["membership"][0]["member"] is False


def test_read_generators_errors(tmp_path):
    D = cli.mg.parse_descriptor(GL2_MOD9)
    with pytest.raises(ParseError):
        cli.read_generators(str(tmp_path / "missing.txt"), D)
    empty = tmp_path / "empty.txt"
    empty.write_text("# nothing\n\n")
    with pytest.raises(ParseError):
        cli.read_generators(str(empty), D)
    junk = tmp_path / "junk.txt"
    junk.write_text("1 x 0 1\n")
    with pytest.raises(ParseError):
        cli.read_generators(str(junk), D)


def test_lift_check_full(capsys, gens_file):
    path = gens_file("1 1 0 1", "1 0 1 1", "8 0 0 1", "4 0 0 1")
    code, out = _run(capsys, "lift-check", "--group", GL2_MOD9, "--generators", path)
    assert code == 0
    assert out["verdict"]["outcome"] == "FullGroup"


def test_lift_check_missing_layer(capsys, gens_file):
    path = gens_file("1 1 0 1", "1 0 1 1", "8 0 0 1")
    code, out = _run(capsys, "lift-check", "--group", GL2_MOD9, "--generators", path, "--index")
    assert code == 20
    assert out["verdict"]["outcome"] == "NotSurjective"
    assert out["verdict"]["witness_level"] == 1
    assert out["index"]["total_index"] == 3


def test_lift_check_exception_list(capsys, gens_file):
    path = gens_file("1 1 0 1", "1 0 1 1", "2 0 0 1")
    code, out = _run(capsys, "lift-check", "--group", "GL(2, W(p=3,r=1,n=1))", "--generators", path,
                     "--mode", se.NORMAL_DERIVED)
    assert code == 30
    assert out["error"] == {"type": "ExceptionListHit", "factor": "PGL_2",
                            "message": out["error"]["message"]}


def test_lift_check_missing_hypothesis(capsys, gens_file):
    path = gens_file("1 0 0 0  0 1 0 0  0 0 1 0  0 0 0 1")
    code, out = _run(capsys, "lift-check", "--group", "GSp(4, W(p=3,r=1,n=1))", "--generators", path,
                     "--mode", se.THM_4_1)
    assert code == 2
    assert out["error"]["type"] == "HypothesisMissing"

    code, out = _run(capsys, "lift-check", "--group", "GSp(4, W(p=3,r=1,n=1))", "--generators", path,
                     "--mode", se.THM_4_1, "--hypothesis", se.HYP_DISJOINT)
    assert code == 20
    assert out["verdict"]["witness_level"] == 0


def test_layers_with_shape(capsys, gens_file):
    path = gens_file("1 1 0 1", "1 0 1 1", "2 0 0 1")
    code, out = _run(capsys, "layers", "--group", "PGL(2, W(p=3,r=1,n=2))", "--generators", path, "--shape")
    assert code == 0
    assert out["exact"] is True
    assert [(row["layer"], row["dim"]) for row in out["layers"]] == [(1, 3)]
    assert out["layer_shape"]["holds"] is True


def test_criteria_fixture(capsys):
    code, out = _run(capsys, "criteria", "check24", "--fixture", "GL-4-q2")
    assert code == 0
    assert out["criteria"]["conclusion"] == "2.4.1(b)"
    assert out["criteria"]["clause"] == "va"


def test_criteria_listed_datum(capsys):
    code, out = _run(capsys, "criteria", "check225", "--datum", "PGL(2)", "--q", "3")
    assert code == 20
    assert out["criteria"]["conditions"]["2.2.5(i)"] is True


def test_criteria_requires_options(capsys):
    code, out = _run(capsys, "criteria", "check225", "--datum", "PGL(2)")
    assert code == 2
    assert "--q" in out["error"]["message"]


def test_oracle_enumerate(capsys):
    code, out = _run(capsys, "oracle", "enumerate", "--group", "GL(2, W(p=2,r=1,n=1))")
    assert code == 0
    assert out["order"] == 6 and out["full"] is True


def test_curve_verdicts(capsys):
    code, out = _run(capsys, "curve", "verdict", "--f", "x^3-2")
    assert code == 0
    assert out["verdict"]["outcome"] == "Surjective"
    code, out = _run(capsys, "curve", "verdict", "--f", "x^6-2")
    assert code == 20
    assert out["verdict"]["discriminant"]["squarefree_part"] == 2


def test_curve_counts(capsys):
    code, out = _run(capsys, "curve", "count", "--f", "x^3-2", "--ell", "5")
    assert code == 0
    assert out["frobenius"][0]["lpoly"] == [1, 0, 5]
    code, out = _run(capsys, "curve", "count", "--quartic", "--ell", "2")
    assert out["plane_quartic"]["points"] == 4
    code, out = _run(capsys, "curve", "mod2", "--f", "x^3-2", "--up-to", "13")
    assert code == 0
    assert [row["ell"] for row in out["mod2"]] == [5, 7, 11, 13]


def test_usage_errors():
    assert cli.main(["bogus"]) == 2
    assert cli.main(["curve", "verdict", "--f", "x^3-2", "--prime-budget", "0"]) == 2
    with pytest.raises(ParseError):
        cli.CommandRequest("bogus")


def test_text_format(capsys):
    code = cli.main(["curve", "disc", "--f", "x^3-2", "--format", "text"])
    text = capsys.readouterr().out
    assert code == 0
    assert "command: curve" in text
    assert '"squarefree_part": -3' in text
