import io
import json
from pathlib import Path

import pytest

from circsim import (
    ComponentInstance,
    Sketch,
    SketchFormatError,
    SolveOptions,
    export_netlist,
    parse_sketch,
    serialize_sketch,
    simulate,
)
from circsim.cli import main
from circsim.pipeline import meters_of, smoke_lines

from circuits import (
    diode_series_sketch,
    direct,
    divider_sketch,
    gauntlet_sketch,
)


def singular_sketch():
    def src(cid, volts):
        return ComponentInstance(
            cid, "battery", {"voltage": volts, "internal_resistance": 0.0},
            {"+": direct("B1", "+"), "-": direct("B1", "-")})
    return Sketch(name="conflict", components=[
        ComponentInstance("G1", "ground", {}, {"1": direct("B1", "-")}),
        src("B1", 9.0), src("B2", 5.0),
        ComponentInstance("M1", "multimeter", {},
                          {"COM": direct("B1", "-"),
                           "VΩ": direct("B1", "+"),
                           "A": direct("M1", "A")})])


class TestSimulate:
    def test_divider_end_to_end(self):
        result = simulate(divider_sketch())
        assert result.converged
        (reading,) = result.readings
        assert reading.display == "6.000V"
        assert result.smoke_events == []

    def test_validation_failure_raises(self):
        sk = divider_sketch()
        r1 = next(c for c in sk.components if c.id == "R1")
        r1.properties["resistance"] = -4.0
        with pytest.raises(SketchFormatError) as exc:
            simulate(sk)
        assert exc.value.diagnostics[0].code == "BAD_PROPERTY"

    def test_validate_flag_skips_the_gate(self):
        result = simulate(divider_sketch(), validate=False)
        assert result.converged

    def test_singular_sketch_returns_instead_of_raising(self):
        result = simulate(singular_sketch())
        assert not result.converged
        assert result.solution is None
        assert result.failure["code"] == "SINGULAR"
        (reading,) = result.readings
        assert reading.display == "---"
        assert result.smoke_events == []

    def test_iteration_starved_solve_reports_no_convergence(self):
        opts = SolveOptions(max_newton_iters=1, gmin_steps=2, source_steps=2)
        result = simulate(diode_series_sketch(), opts)
        assert not result.converged
        assert result.failure["code"] == "NO_CONVERGENCE"

    def test_json_shape_when_solved(self):
        out = simulate(divider_sketch()).as_json()
        assert out["name"] == "divider"
        assert out["converged"] is True
        assert out["strategy"] == "direct"
        volts = {n["id"]: n.get("volts") for n in out["nets"]}
        assert volts[4] == pytest.approx(9.0, abs=1e-9)
        ground = [n for n in out["nets"] if n["ground"]]
        assert len(ground) == 1
        assert "V1" in out["branch_currents"]
        assert out["elements"]["R1"]["power"] == pytest.approx(9e-3, rel=1e-3)
        assert "failure" not in out

    def test_json_shape_when_unsolved(self):
        out = simulate(singular_sketch()).as_json()
        assert out["converged"] is False
        assert "strategy" not in out
        assert "volts" not in out["nets"][0]
        assert out["failure"]["code"] == "SINGULAR"

    def test_meters_are_listed_in_id_order(self):
        sk = divider_sketch()
        sk.components.insert(0, ComponentInstance(
            "M0", "multimeter", {},
            {"COM": direct("M0", "COM"), "VΩ": direct("M0", "VΩ"),
             "A": direct("M0", "A")}))
        assert [m.id for m in meters_of(sk)] == ["M0", "M1"]

    def test_smoke_lines_match_events(self):
        result = simulate(gauntlet_sketch())
        lines = smoke_lines(result.smoke_events)
        assert len(lines) == 5
        assert lines[0].startswith("SMOKE B2 SHORT_CIRCUIT")


@pytest.fixture()
def sketch_file(tmp_path):
    def write(sketch, name="sketch.json"):
        path = tmp_path / name
        path.write_text(serialize_sketch(sketch), encoding="utf-8")
        return str(path)
    return write


class TestCli:
    def test_run_prints_a_report(self, sketch_file, capsys):
        assert main(["run", sketch_file(divider_sketch())]) == 0
        out = capsys.readouterr().out
        assert "meter M1: 6.000V" in out

    def test_run_json(self, sketch_file, capsys):
        assert main(["run", "--json", sketch_file(divider_sketch())]) == 0
        data = json.loads(capsys.readouterr().out)
        assert data["converged"] is True

    def test_run_survives_unconverged_sketches(self, sketch_file, capsys):
        assert main(["run", sketch_file(singular_sketch())]) == 0
        assert "failed SINGULAR" in capsys.readouterr().out

    def test_run_rejects_malformed_files(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{nope", encoding="utf-8")
        assert main(["run", str(bad)]) == 1
        assert "error PARSE_ERROR" in capsys.readouterr().err

    def test_run_rejects_invalid_sketches(self, sketch_file, capsys):
        sk = divider_sketch()
        next(c for c in sk.components
             if c.id == "R1").properties["resistance"] = -1.0
        assert main(["run", sketch_file(sk)]) == 1
        err = capsys.readouterr().err
        assert "error BAD_PROPERTY R1: resistance=-1.0 below minimum" in err

    def test_check_exit_codes(self, sketch_file):
        assert main(["check", sketch_file(divider_sketch(), "a.json")]) == 0
        assert main(["check", sketch_file(gauntlet_sketch(), "b.json")]) == 2
        assert main(["check", sketch_file(singular_sketch(), "c.json")]) == 1

    def test_check_prints_the_events(self, sketch_file, capsys):
        main(["check", sketch_file(gauntlet_sketch())])
        out = capsys.readouterr().out
        assert out.count("SMOKE") == 5

    def test_netlist_to_stdout_and_file(self, sketch_file, tmp_path, capsys):
        path = sketch_file(divider_sketch())
        assert main(["netlist", path]) == 0
        assert capsys.readouterr().out == export_netlist(divider_sketch())
        target = tmp_path / "out.cir"
        assert main(["netlist", path, "-o", str(target)]) == 0
        assert target.read_text(encoding="utf-8") == export_netlist(
            divider_sketch())

    def test_devices_listing(self, capsys):
        assert main(["devices"]) == 0
        out = capsys.readouterr().out
        assert "resistor" in out and "multimeter" in out

    def test_devices_markdown(self, capsys):
        assert main(["devices", "--markdown"]) == 0
        assert "| kind |" in capsys.readouterr().out

    def test_stdin_input(self, monkeypatch, capsys):
        monkeypatch.setattr("sys.stdin",
                            io.StringIO(serialize_sketch(divider_sketch())))
        assert main(["run", "-"]) == 0
        assert "6.000V" in capsys.readouterr().out


class TestShippedSketches:
    """The documents under sketches/ are what the README points at."""

    def test_samples_parse_and_simulate(self):
        root = Path(__file__).resolve().parent.parent / "sketches"
        paths = sorted(root.glob("*.json"))
        assert len(paths) >= 3
        for path in paths:
            sketch = parse_sketch(path.read_text(encoding="utf-8"))
            assert simulate(sketch).converged, path.name

    def test_divider_sample_reads_six_volts(self):
        root = Path(__file__).resolve().parent.parent / "sketches"
        sketch = parse_sketch((root / "divider.json").read_text("utf-8"))
        assert simulate(sketch).readings[0].display == "6.000V"
