import json

import pytest

from marpac.harness import (ConfigError, ExperimentConfig, recheck_report, run_experiment)
from marpac.harness.experiments import DEFAULT_SUITE, default_configs, uniform_delta_mixture
from marpac.harness.report import write_table

IID_PAIR = {"alphabet": 2, "kind": "mixture", "weights": [0.5, 0.5],
            "components": [{"alphabet": 2, "kind": "iid", "dist": [0.2, 0.8]},
                           {"alphabet": 2, "kind": "iid", "dist": [0.8, 0.2]}]}
TWO_DELTAS = DEFAULT_SUITE["mar_floor_two_deltas"]["law"]
FLIP_PAIR = DEFAULT_SUITE["mar_floor_markov"]["law"]


def config(experiment, law, **params):
    return ExperimentConfig.from_dict({"experiment": experiment, "law": law, "params": params, "seed": 5})


def verdicts(report):
    return {v["name"]: v for v in report.verdicts}


class TestConfig:
    def test_defaults_filled(self):
        cfg = config("verify-mixture", IID_PAIR)
        assert cfg.params["n"] == 500 and cfg.function_class.kind == "thresholds" and cfg.name == "verify-mixture"

    def test_overrides_win(self):
        cfg = ExperimentConfig.from_dict({"experiment": "verify-mixture", "law": IID_PAIR, "params": {"n": 50}},
                                         {"n": 20, "seed": 9, "trials": None})
        assert cfg.params["n"] == 20 and cfg.seed == 9 and cfg.params["trials"] == 10000

    @pytest.mark.parametrize("doc,match", [
        ({"experiment": "verify-nothing", "law": IID_PAIR}, "unknown experiment"),
        ({"experiment": "verify-mixture", "law": IID_PAIR, "colour": 1}, "unknown config fields"),
        ({"experiment": "verify-mixture", "law": IID_PAIR, "params": {"m": 1}}, "unknown parameters"),
        ({"experiment": "verify-mixture"}, "missing config field"),
        ({"experiment": "verify-mixture", "law": IID_PAIR, "seed": -1}, "seed"),
        ({"experiment": "verify-mixture", "law": {"kind": "iid", "alphabet": 2, "dist": [0.9, 0.9]}}, "sums to 1.8"),
    ])
    def test_rejected(self, doc, match):
        with pytest.raises(ConfigError, match=match):
            ExperimentConfig.from_dict(doc)

    def test_load_errors(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        with pytest.raises(ConfigError, match="cannot read"):
            ExperimentConfig.load(bad)
        with pytest.raises(ConfigError):
            ExperimentConfig.load(tmp_path / "missing.json")

    def test_echo_round_trips(self):
        cfg = config("verify-mar-floor", FLIP_PAIR, past=2)
        again = ExperimentConfig.from_dict(json.loads(json.dumps(cfg.echo())))
        assert again.echo() == cfg.echo()

    def test_default_configs(self):
        cfgs = default_configs(3, {"trials": 100})
        assert len(cfgs) == len(DEFAULT_SUITE) and all(c.seed == 3 and c.params["trials"] == 100 for c in cfgs)


class TestMixture:
    def test_iid_pair_passes(self):
        report = run_experiment(config("verify-mixture", IID_PAIR, trials=4000))
        assert report.passed, report.summary_lines()

    def test_single_component_rates_equal(self):
        law = {"alphabet": 2, "kind": "mixture", "weights": [1.0],
               "components": [{"alphabet": 2, "kind": "iid", "dist": [0.3, 0.7]}]}
        report = run_experiment(config("verify-mixture", law, trials=3000))
        assert report.passed
        for eps in (0.05, 0.1):
            rows = [r for r in report.tables["rates"] if r["epsilon"] == eps]
            mix = next(r for r in rows if r["run"] == "mixture")
            given = next(r for r in rows if r["run"] == "mixture_given_component")
            # with one component the conditional rate is the mixture rate, exactly
            assert given["rate"] == mix["rate"] and given["trials"] == mix["trials"]

    def test_delta_mixture_all_zero(self):
        report = run_experiment(config("verify-mixture", TWO_DELTAS, trials=500))
        assert all(r["failures"] == 0 for r in report.tables["rates"]) and report.passed


class TestExchangeable:
    def test_requires_iid(self):
        with pytest.raises(ConfigError, match="requires IID components"):
            run_experiment(config("verify-exchangeable", FLIP_PAIR, trials=10))

    def test_passes_and_contrast_fails_to_converge(self):
        law = {**IID_PAIR, "components": [{"alphabet": 2, "kind": "iid", "dist": [0.1, 0.9]},
                                          {"alphabet": 2, "kind": "iid", "dist": [0.9, 0.1]}]}
        report = run_experiment(config("verify-exchangeable", law, trials=400, n_grid=[32, 128, 512, 2048]))
        assert report.passed, report.summary_lines()
        n_star = {r["run"]: r["n_star"] for r in report.tables["n_star"]}
        assert n_star["contrast_marginal"] is None and n_star["mixture"] is not None

    def test_single_component(self):
        law = {"alphabet": 2, "kind": "mixture", "weights": [1.0],
               "components": [{"alphabet": 2, "kind": "iid", "dist": [0.5, 0.5]}]}
        report = run_experiment(config("verify-exchangeable", law, trials=400, contrast=False,
                                       n_grid=[32, 128, 512]))
        n_star = {r["run"]: r["n_star"] for r in report.tables["n_star"]}
        assert report.passed and set(n_star) == {"mixture", "component_0"}
        assert n_star["mixture"] == n_star["component_0"]


class TestMarFloor:
    def test_two_deltas(self):
        report = run_experiment(config("verify-mar-floor", TWO_DELTAS, lags=[1, 10], trials=2000, bootstrap=50))
        assert report.passed, report.summary_lines()
        assert all(abs(r["beta"] - 0.5) < 0.03 for r in report.tables["mixture_curve"])

    def test_uniform_sweep(self):
        report = run_experiment(config("verify-mar-floor", TWO_DELTAS, lags=[1, 5], trials=3000, bootstrap=50,
                                       q_sweep=[2, 10], floor_slack=0.02))
        sweep = {r["q"]: r for r in report.tables["atomless_sweep"]}
        assert abs(sweep[10]["beta"] - 0.9) <= 0.02 + 2 * sweep[10]["stderr"]
        assert verdicts(report)["atomless_trend_to_one"]["passed"]

    def test_uniform_delta_mixture(self):
        law = uniform_delta_mixture(4)
        assert law.alphabet == 4 and list(law.weights) == [0.25] * 4

    def test_single_component_has_zero_floor(self):
        law = {"alphabet": 2, "kind": "mixture", "weights": [1.0],
               "components": [{"alphabet": 2, "kind": "markov", "transition": [[0.8, 0.2], [0.2, 0.8]]}]}
        report = run_experiment(config("verify-mar-floor", law, lags=[1, 30], trials=2000, bootstrap=50))
        assert report.tables["mixture_curve"][0]["floor"] == 0.0
        assert verdicts(report)["components_decay"]["passed"]


class TestMarCriterion:
    def test_two_deltas(self):
        report = run_experiment(config("verify-mar-criterion", TWO_DELTAS, n_grid=[0, 2], lags=[1, 5], trials=200))
        assert report.passed
        values = {(r["n"], r["lag"]): r["value"] for r in report.tables["criterion"]}
        assert values[0, 1] == pytest.approx(0.5) and values[2, 5] == 0.0

    def test_flip_pair(self):
        report = run_experiment(config("verify-mar-criterion", FLIP_PAIR, n_grid=[0, 32], lags=[5, 20],
                                       trials=500))
        assert report.passed, report.summary_lines()
        assert report.tables["truncation"][0]["events"] == "all"


class TestReports:
    def test_recheck_round_trip(self, tmp_path):
        report = run_experiment(config("verify-mar-floor", TWO_DELTAS, lags=[1, 5], trials=500, bootstrap=20))
        report.write(tmp_path)
        doc = json.loads((tmp_path / "report.json").read_text())
        assert "duration" not in doc and recheck_report(doc)
        doc["tables"]["mixture_curve"][0]["beta"] = 0.1
        assert not recheck_report(doc)
        header = (tmp_path / "mixture_curve.csv").read_text().splitlines()[0]
        assert header == "lag,beta,stderr,floor,window_exact"

    def test_same_seed_same_bytes(self):
        a = run_experiment(config("verify-mixture", IID_PAIR, trials=300))
        b = run_experiment(config("verify-mixture", IID_PAIR, trials=300))
        assert a.to_json() == b.to_json()

    def test_write_table_cells(self, tmp_path):
        write_table(tmp_path / "t.csv", [{"a": 1, "b": None}, {"a": True, "c": 0.1}])
        assert (tmp_path / "t.csv").read_text().splitlines() == ["a,b,c", "1,,", "true,,0.1"]
