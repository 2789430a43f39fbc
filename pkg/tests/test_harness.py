import pytest
import yaml

from dpsim.harness import (
    ConfigError,
    DataError,
    PlotKind,
    emit_csv,
    emit_plot_data,
    format_csv,
    load_config,
    parse_config,
    read_csv,
    run_sweep,
    scenario_paper,
)
from dpsim.harness.output import CSV_HEADER

from fixtures import write_intel_like, write_locations


def synthetic_cfg(**overrides):
    data = {
        "dataset": {"synthetic": [{"node_id": 1, "kind": "Constant", "length": 100, "level": 21}], "slice": [0, None]},
        "predictors": ["MA(2)", "MA(4)"],
        "grid": {"values": [0.1, 0.5, 2.0]},
    }
    data.update(overrides)
    return parse_config(data)


def write_cfg(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data) if not isinstance(data, str) else data)
    return p


class TestLoadConfig:
    def test_empty_grid_defaults(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, "grid:\n"))
        m = cfg.grid.margins()
        assert len(m) == 50 and m[0] == 0.1 and m[-1] == 5.0
        assert m[2] == 0.3 and m == sorted(m)

    def test_zero_start(self, tmp_path):
        with pytest.raises(ConfigError, match="start"):
            load_config(write_cfg(tmp_path, {"grid": {"start": 0}}))

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigError, match="emax_grid"):
            load_config(write_cfg(tmp_path, {"emax_grid": {"start": 0.1}}))

    def test_unknown_nested_key(self, tmp_path):
        with pytest.raises(ConfigError, match="predictors.0.oder"):
            load_config(write_cfg(tmp_path, {"predictors": [{"kind": "MA", "oder": 2}]}))

    def test_yaml_error_has_line(self, tmp_path):
        with pytest.raises(ConfigError, match=r"line \d+, column \d+"):
            load_config(write_cfg(tmp_path, "grid:\n  start: [0.1\n"))

    def test_predictor_mapping(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, {"predictors": [
            {"kind": "LMS_VSS", "order": 6, "vss_alpha": 0.9}, "ARMA(1,1)"]}))
        specs = cfg.predictor_specs()
        assert specs[0].order == 6 and specs[0].vss_alpha == 0.9
        assert specs[1].label == "ARMA(1,1)"

    def test_invalid_predictor(self, tmp_path):
        with pytest.raises(ConfigError, match="train_window"):
            load_config(write_cfg(tmp_path, {"predictors": [{"kind": "ARMA", "train_window": 3}]}))

    def test_relative_paths(self, tmp_path):
        cfg = load_config(write_cfg(tmp_path, {"dataset": {"readings": "data.txt"}}))
        assert cfg.dataset.readings == str(tmp_path / "data.txt")

    def test_relay_needs_plan(self):
        with pytest.raises(ConfigError, match="cluster plan"):
            parse_config({"topology": {"mode": "Relay"}})


class TestRunSweep:
    def test_constant_rows(self):
        res = run_sweep(synthetic_cfg())
        assert len(res.rows) == 6
        for r in res.rows:
            warm = 2 if r.predictor == "MA(2)" else 4
            assert r.transmissions == warm
            assert r.reduction_pct == pytest.approx(100 * (1 - warm / 100))
        assert [(r.predictor, r.e_max) for r in res.rows][:3] == [("MA(2)", 0.1), ("MA(2)", 0.5), ("MA(2)", 2.0)]

    def test_deterministic_and_schedule_free(self):
        data = {
            "dataset": {"synthetic": [
                {"node_id": i, "kind": "RandomWalk", "length": 300, "seed": i} for i in range(1, 5)
            ], "slice": [0, None]},
            "predictors": ["MA(2)", "ARMA(2,2)", "LMS-VSS"],
            "grid": {"count": 5, "start": 0.1, "stop": 0.5},
        }
        cfg = parse_config(data)
        a, b, c = run_sweep(cfg, jobs=1), run_sweep(cfg, jobs=1), run_sweep(cfg, jobs=4)
        assert format_csv(a.rows) == format_csv(b.rows) == format_csv(c.rows)
        assert len(a.rows) == 4 * 3 * 5

    def test_missing_node(self):
        cfg = synthetic_cfg(dataset={"synthetic": [{"node_id": 1, "kind": "Constant", "length": 10}], "nodes": [2]})
        with pytest.raises(DataError):
            run_sweep(cfg)

    def test_missing_readings_file(self, tmp_path):
        with pytest.raises(DataError):
            run_sweep(parse_config({"dataset": {"readings": str(tmp_path / "nope.txt")}}))

    def test_relay_and_aggregation_modes(self):
        nodes = [{"node_id": i, "kind": "SineNoise", "length": 200, "seed": i, "noise_sd": 0.05} for i in (1, 2, 3)]
        base = {"dataset": {"synthetic": nodes, "slice": [0, None]}, "predictors": ["MA(2)"], "grid": {"values": [0.5]}}
        clusters = [{"head": 1, "members": [1, 2, 3]}]
        relay = run_sweep(parse_config({**base, "topology": {"mode": "Relay", "clusters": clusters}}))
        agg = run_sweep(parse_config({**base, "topology": {"mode": "Aggregation", "clusters": clusters}}))
        (r,), (g,) = relay.rows, agg.rows
        assert r.unit == g.unit == "cluster-1"
        assert r.baseline_msgs == g.baseline_msgs == 200 * 5
        assert g.dps_msgs <= r.dps_msgs

    def test_kmeans_from_locations(self, tmp_path):
        readings = write_intel_like(tmp_path / "data.txt")
        locs = write_locations(tmp_path / "locs.txt")
        cfg = parse_config({
            "dataset": {"readings": str(readings), "locations": str(locs)},
            "predictors": ["MA(2)"], "grid": {"values": [0.5]},
            "topology": {"mode": "Relay", "kmeans": {"k": 3, "seed": 1}},
        })
        res = run_sweep(cfg)
        assert len(res.rows) == 3
        assert sum(r.total for r in res.rows) == 8 * 400


class TestCsv:
    def test_header_only(self, tmp_path):
        from dpsim.harness import SweepResult

        p = tmp_path / "empty.csv"
        emit_csv(SweepResult([]), p)
        assert p.read_bytes() == (CSV_HEADER + "\n").encode()

    def test_one_row_two_lines(self, tmp_path):
        res = run_sweep(synthetic_cfg(predictors=["MA(2)"], grid={"values": [0.5]}))
        p = tmp_path / "one.csv"
        emit_csv(res, p)
        lines = p.read_bytes().split(b"\n")
        assert len(lines) == 3 and lines[-1] == b"" and b"\r" not in p.read_bytes()
        assert lines[1] == b"node-1,MA(2),0.5,2,100,98,0,0,100,2"

    def test_reemit_identical_and_roundtrip(self, tmp_path):
        res = run_sweep(synthetic_cfg(dataset={"synthetic": [
            {"node_id": 3, "kind": "RandomWalk", "length": 150, "seed": 2}], "slice": [0, None]}))
        p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
        emit_csv(res, p1)
        emit_csv(res, p2)
        assert p1.read_bytes() == p2.read_bytes()
        back = read_csv(p1)
        assert format_csv(back.rows) == p1.read_text()
        for a, b in zip(res.rows, back.rows):
            assert (a.unit, a.predictor, a.e_max, a.transmissions, a.total) == (b.unit, b.predictor, b.e_max, b.transmissions, b.total)
            assert b.reduction_pct == pytest.approx(a.reduction_pct, rel=1e-5)


class TestPlotData:
    def test_single_block(self, tmp_path):
        res = run_sweep(synthetic_cfg(predictors=["MA(2)"]))
        p = tmp_path / "plot.dat"
        emit_plot_data(res, PlotKind.REDUCTION, p)
        text = p.read_text()
        blocks = text.split("\n\n\n")
        assert len(blocks) == 1
        points = [l for l in blocks[0].splitlines() if l and not l.startswith("#") and not l.startswith("e_max")]
        assert len(points) == 3
        assert all(0 <= float(l.split()[1]) <= 100 for l in points)

    def test_blocks_per_predictor_sorted(self, tmp_path):
        res = run_sweep(synthetic_cfg())
        p = tmp_path / "mse.dat"
        emit_plot_data(res, "MseVsMargin", p)
        blocks = p.read_text().split("\n\n\n")
        assert len(blocks) == 2
        for b in blocks:
            xs = [float(l.split()[0]) for l in b.splitlines() if l[:1].isdigit()]
            assert xs == sorted(xs)

    def test_empty_result(self, tmp_path):
        from dpsim.harness import SweepResult

        with pytest.raises(ValueError):
            emit_plot_data(SweepResult([]), "ReductionVsMargin", tmp_path / "x")


class TestScenarios:
    def test_fig9(self):
        cfg = scenario_paper("Fig9", readings="data.txt")
        assert cfg.topology.mode == "Relay"
        assert cfg.topology.clusters[0].head == 1
        assert sorted(cfg.topology.clusters[0].members) == [1, 33, 34, 35, 36, 37]
        assert [s.label for s in cfg.predictor_specs()] == ["MA(2)", "MA(4)", "LMS", "LMS-VSS"]
        assert cfg.grid.margins() == [0.5]

    def test_aggregation97(self):
        cfg = scenario_paper("Aggregation97", readings="data.txt")
        assert cfg.topology.mode == "Aggregation"
        assert cfg.topology.aggregate.value == "Average"
        assert cfg.grid.margins() == [0.5]

    def test_fig5(self):
        cfg = scenario_paper("Fig5", readings="data.txt")
        assert cfg.topology.mode == "StarDirect"
        assert cfg.dataset.nodes == [13, 49]
        assert len(cfg.predictor_specs()) == 6
        assert len(cfg.grid.margins()) == 50

    def test_fig6_7(self):
        cfg = scenario_paper("Fig6_7", readings="data.txt")
        assert cfg.dataset.nodes == "all" and cfg.dataset.require_full_slice
        assert [s.label for s in cfg.predictor_specs()] == ["MA(2)", "MA(4)", "MA(10)", "ARMA(2,2)"]

    def test_unknown(self):
        with pytest.raises(ConfigError):
            scenario_paper("Fig42")

    def test_runs_end_to_end_on_intel_format(self, tmp_path):
        readings = str(write_intel_like(tmp_path / "data.txt"))
        fig9 = run_sweep(scenario_paper("Fig9", readings=readings))
        assert [r.predictor for r in fig9.rows] == ["MA(2)", "MA(4)", "LMS", "LMS-VSS"]
        assert all(r.baseline_msgs == 400 * 11 for r in fig9.rows)
        agg = run_sweep(scenario_paper("Aggregation97", readings=readings))
        assert agg.rows[0].unit == "cluster-1"
