import io
import json
from pathlib import Path

import pytest
from pytest_mock import MockerFixture

from semwidth.cli.main import EXIT_CAP, EXIT_OK, EXIT_USAGE, build_parser, main


class TestParser:
    def test_limit_flags_default_to_the_model(self):
        ns = build_parser().parse_args(["decide", "q.q"])
        assert ns.limit_m == 3
        assert ns.limit_word_bound == 8
        assert ns.width_class == "tw"

    def test_limit_flags_only_on_limited_commands(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["expand", "q.q", "--word-bound", "2"])


class TestMain:
    def test_width_report(self, copy_fixture, capsys):
        # Execute
        code = main(["width", str(copy_fixture("triangle.q"))])

        # Verify
        out = capsys.readouterr().out
        assert code == EXIT_OK
        assert out.startswith("command: width\n")
        assert "caps hit: none" in out

    def test_json_report(self, copy_fixture, capsys):
        code = main(["--json", "width", str(copy_fixture("triangle.q")), "--query", "triangle"])
        report = json.loads(capsys.readouterr().out)
        assert code == EXIT_OK
        assert report["payload"]["widths"]["triangle"]["tw"] == 2
        assert report["limits"]["treewidth_vertex_cap"] == 20

    def test_help(self, capsys):
        assert main(["--help"]) == EXIT_OK

    def test_missing_command(self, capsys):
        assert main([]) == EXIT_USAGE

    def test_missing_file(self, temp_dir: Path, capsys):
        code = main(["width", str(temp_dir / "missing.q")])
        assert code == EXIT_USAGE
        assert "error: Path does not exist" in capsys.readouterr().err

    def test_malformed_query_file(self, temp_dir: Path, capsys):
        broken = temp_dir / "broken.q"
        broken.write_text("query q(x) := x -[a(]-> y ;\n")
        assert main(["width", str(broken)]) == EXIT_USAGE
        assert "line 1" in capsys.readouterr().err

    def test_cap_hit_in_report(self, copy_fixture, capsys):
        code = main(["width", str(copy_fixture("triangle.q")), "--pathwidth-vertex-cap", "2"])
        assert code == EXIT_CAP
        assert "caps hit: pathwidth_vertex_cap" in capsys.readouterr().out

    def test_cap_raised_during_evaluation(self, copy_fixture, capsys):
        code = main(["eval", str(copy_fixture("bibliography.q")), str(copy_fixture("bibliography.db")), "--mode", "tw", "--k-cap", "0"])
        assert code == EXIT_CAP
        assert "k_cap" in capsys.readouterr().err

    def test_query_from_stdin(self, mocker: MockerFixture, capsys):
        mocker.patch("sys.stdin", io.StringIO("query q(x) := x -[a]-> y, y -[b]-> x ;\n"))
        assert main(["width", "-"]) == EXIT_OK
        assert '"tw": 1' in capsys.readouterr().out

    def test_approx_writes_output(self, copy_fixture, temp_dir: Path, capsys):
        # Setup
        target = temp_dir / "out" / "approx.q"
        target.parent.mkdir()

        # Execute
        code = main(["approx", str(copy_fixture("triangle.q")), "--k", "1", "--m", "1", "-o", str(target)])

        # Verify
        assert code == EXIT_OK
        assert target.read_text().startswith("union triangle_approx(")
        assert (temp_dir / "out" / "approx.q.provenance.json").exists()

    def test_contain(self, temp_dir: Path, capsys):
        left = temp_dir / "l.q"
        right = temp_dir / "r.q"
        left.write_text("query l(x, y) := x -[a.a]-> y ;\n")
        right.write_text("query r(x, y) := x -[a+]-> y ;\n")
        assert main(["contain", str(left), str(right)]) == EXIT_OK
        assert '"kind": "Yes"' in capsys.readouterr().out
