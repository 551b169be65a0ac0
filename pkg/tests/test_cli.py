import json

import pytest

from conftest import small_pair, two_rows
from gspkit import io as gio
from gspkit.cli import main
from gspkit.gen import GenSpec, gen_instance
from gspkit.render import render_svg


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def pair_file(tmp_path):
    return write(tmp_path / "pair.json", gio.gsp_to_json(small_pair()))


@pytest.fixture
def rows_file(tmp_path):
    return write(tmp_path / "rows.json", gio.rcp_to_json(two_rows()))


# generation


def test_gen_is_deterministic(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert main(["gen", "--n", "2", "--seed", "1", "-o", str(a)]) == 0
    assert main(["gen", "--n", "2", "--seed", "1", "-o", str(b)]) == 0
    assert a.read_text() == b.read_text()


def test_gen_tardiness_only(tmp_path):
    out = tmp_path / "t.json"
    main(["gen", "--n", "5", "--mix", "tardiness", "-o", str(out)])
    kinds = {j["cost"]["kind"] for j in json.loads(out.read_text())["jobs"]}
    assert kinds == {"weighted-tardiness"}


def test_gen_empty_instance_solves_to_zero(tmp_path, capsys):
    inst = tmp_path / "e.json"
    main(["gen", "--n", "0", "-o", str(inst)])
    assert main(["solve", str(inst)]) == 0
    assert json.loads(capsys.readouterr().out)["cost"] == 0


def test_gen_covering_kinds(tmp_path):
    for kind in ("rcp", "rcp-ws"):
        out = tmp_path / f"{kind}.json"
        assert main(["gen", "--kind", kind, "--n", "3", "--seed", "2", "-o", str(out)]) == 0
        assert gio.rcp_from_json(json.loads(out.read_text())).rects


# solving and reducing


def test_solve_then_verify(tmp_path, pair_file, capsys):
    out = tmp_path / "sol.json"
    assert main(["solve", pair_file, "--epsilon", "1/2", "-o", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["cost"] >= 3
    assert main(["verify", pair_file, str(out)]) == 0
    assert "ok" in capsys.readouterr().out


def test_solve_tardiness_objective(tmp_path, pair_file):
    out = tmp_path / "sol.json"
    assert main(["solve", pair_file, "--objective", "tardiness", "--epsilon", "1/2", "-o", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["mode"] == "tardiness"
    assert all("groups" in o for o in report["offsets"] if o["rcp_cost"] is not None)


def test_solve_tardiness_refuses_mixed(tmp_path):
    inst = gen_instance(GenSpec(n=3, seed=1, mix={"flow": 1}))
    f = write(tmp_path / "m.json", gio.gsp_to_json(inst))
    assert main(["solve", f, "--objective", "tardiness"]) == 1


def test_solve_approx_mode_reports_certificates(tmp_path, pair_file):
    out = tmp_path / "sol.json"
    assert main(["solve", pair_file, "--mode", "approx-oracle", "--offset", "1", "-o", str(out)]) == 0
    (off,) = json.loads(out.read_text())["offsets"]
    assert off["certificates_ok"] is True


def test_reduce_writes_instance_and_varmap(tmp_path, pair_file):
    out, vm = tmp_path / "r.json", tmp_path / "vm.json"
    assert main(["reduce", pair_file, "--epsilon", "1/2", "--varmap", str(vm), "-o", str(out)]) == 0
    inst = gio.rcp_from_json(json.loads(out.read_text()))
    varmap = json.loads(vm.read_text())
    assert len(varmap["origin"]) == len(inst.rects)
    assert main(["reduce", pair_file, "--tardiness", "-o", str(out)]) == 0


def test_rcp_solve_modes(tmp_path, rows_file):
    for mode in ("brute", "dp", "approx-oracle", "approx-exhaustive", "tardiness"):
        out = tmp_path / f"{mode}.json"
        sel = tmp_path / f"{mode}.sel.json"
        code = main(["rcp", "solve", rows_file, "--mode", mode, "--selection-out", str(sel), "-o", str(out)])
        assert code == 0, mode
        assert main(["verify", rows_file, str(sel)]) == 0
    assert json.loads((tmp_path / "brute.json").read_text())["cost"] == 4


def test_rcp_solve_with_reference(tmp_path, rows_file):
    ref = write(tmp_path / "ref.json", [0, 1, 2])
    out = tmp_path / "o.json"
    assert main(["rcp", "solve", rows_file, "--mode", "approx-oracle", "--reference", ref, "-o", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["reference_cost"] == 4 and all(lv["ok"] for lv in report["levels"])


def test_rcp_infeasible_and_budget(tmp_path):
    data = gio.rcp_to_json(two_rows())
    data["rays"][0]["d"] = 99
    f = write(tmp_path / "bad.json", data)
    assert main(["rcp", "solve", f, "-o", str(tmp_path / "o.json")]) == 2
    assert main(["rcp", "solve", f, "--mode", "brute", "--budget", "2"]) == 3


def test_rcp_caps_exhausted(tmp_path):
    from gspkit.gen import gen_rcp

    f = write(tmp_path / "g.json", gio.rcp_to_json(gen_rcp(4, rows=4, width=8)))
    code = main(["rcp", "solve", f, "--mode", "approx-exhaustive", "--cap-guesses", "0", "--cap-depth", "0"])
    assert code == 3


# verification


def test_verify_prefix_violation_names_row(tmp_path, rows_file, capsys):
    sel = write(tmp_path / "s.json", [1, 2])
    assert main(["verify", rows_file, sel]) == 1
    assert "row 1" in capsys.readouterr().out


def test_verify_overlap(tmp_path, pair_file, capsys):
    sched = write(tmp_path / "s.json", {"segments": [[0, 0, 2], [1, 1, 2]], "completions": [2, 2]})
    assert main(["verify", pair_file, sched]) == 1
    assert "overlap" in capsys.readouterr().out


def test_malformed_json_reports_location(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"jobs": [\n  {"id": 0,, }]}')
    assert main(["solve", str(bad)]) == 1
    assert "line 2" in capsys.readouterr().err


def test_missing_field_reported(tmp_path, capsys):
    f = write(tmp_path / "x.json", {"jobs": [{"id": 0, "r": 0, "cost": {"kind": "flow", "w": 1}}]})
    assert main(["solve", f]) == 1
    assert "'p'" in capsys.readouterr().err


# schema round trip


def test_schema_round_trip():
    g = small_pair()
    assert gio.gsp_from_json(json.loads(json.dumps(gio.gsp_to_json(g)))) == g
    r = two_rows()
    back = gio.rcp_from_json(json.loads(json.dumps(gio.rcp_to_json(r))))
    assert set(back.rects) == set(r.rects) and set(back.rays) == set(r.rays)
    for seed in range(20):
        inst = gen_instance(GenSpec(n=4, seed=seed))
        assert gio.gsp_from_json(json.loads(json.dumps(gio.gsp_to_json(inst)))) == inst


def test_infinite_costs_encode_as_text():
    from gspkit.gsp import CostFunction, Job, make_instance
    from gspkit.numbers import INF

    inst = make_instance([Job(0, 0, 1, CostFunction("step", breakpoints=((1, 0), (3, INF))))])
    data = gio.gsp_to_json(inst)
    assert data["jobs"][0]["cost"]["steps"][-1] == [3, "inf"]
    assert gio.gsp_from_json(data) == inst


# bench


def test_bench_rows_and_certificates(tmp_path):
    js, cs = tmp_path / "b.json", tmp_path / "b.csv"
    assert main(["bench", "--count", "10", "--json", str(js), "--csv", str(cs)]) == 0
    report = json.loads(js.read_text())
    assert len(report["rows"]) == 10
    for row in report["rows"]:
        for mode in row["modes"].values():
            assert mode["certificates"] is True
            if mode["ratio"] is not None:
                assert gio.parse_cost(mode["ratio"]) >= 1


def test_bench_csv_is_reproducible(tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["bench", "--count", "4", "--seed", "3", "--csv", str(a)])
    main(["bench", "--count", "4", "--seed", "3", "--threads", "2", "--csv", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_bench_over_budget_leaves_ratio_empty(tmp_path):
    js = tmp_path / "b.json"
    main(["bench", "--count", "2", "--budget", "1", "--modes", "dp,tardiness", "--json", str(js), "--csv", str(tmp_path / "c")])
    for row in json.loads(js.read_text())["rows"]:
        assert row["optimum"] is None
        assert all(m["ratio"] is None and m["certificates"] is not None for m in row["modes"].values())


# rendering


def test_render_boxes_and_arrows(tmp_path, rows_file):
    svg = render_svg(two_rows())
    assert svg.count('class="rect"') == 3 and svg.count('class="ray"') == 1
    shaded = render_svg(two_rows(), {0, 1, 2})
    assert shaded.count('class="rect selected"') == 3
    empty = render_svg(gio.rcp_from_json({"rows": [], "rays": []}))
    assert 'id="axes"' in empty and "<rect" not in empty
    sel = write(tmp_path / "s.json", [0, 1, 2])
    out = tmp_path / "pic.svg"
    assert main(["render", rows_file, "--selection", sel, "-o", str(out)]) == 0
    assert out.read_text().startswith("<svg")
