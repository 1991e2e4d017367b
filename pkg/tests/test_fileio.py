import json

import pytest
import yaml

from gonogo import fileio
from gonogo.design import GO, NOGO, SUSPEND, decide, decision_table
from gonogo.simulate import scenario_presets
from gonogo.state import EndpointCounts, EndpointDef, InterimSnapshot


DESIGN_YAML = """
name: demo
structure: single
alpha: 0.1
max_n: 40
looks: [10, 20, 30, 40]
endpoints:
  - name: ORR
    window_days: 120
    phi: 0.2
    null_rate: 0.2
    alt_rate: 0.4
"""

SCENARIO_YAML = """
name: demo-scenario
true_rates: {ORR: 0.4}
accrual_per_month: 2
designs: [tess, bop2]
design:
  structure: single
  alpha: 0.1
  max_n: 20
  looks: [10, 20]
  endpoints:
    - {name: ORR, window_days: 120, phi: 0.2, null_rate: 0.2, alt_rate: 0.4}
"""


class TestDesignYaml:
    def test_load_round_trip(self, tmp_path):
        p = tmp_path / "design.yaml"
        p.write_text(DESIGN_YAML)
        spec = fileio.load_design(p)
        assert spec.max_n == 40 and spec.endpoints[0].phi == 0.2
        again = fileio.design_from_mapping(fileio.design_to_mapping(spec))
        assert again == spec

    def test_default_prior_derived_from_phi(self, tmp_path):
        p = tmp_path / "design.yaml"
        p.write_text(DESIGN_YAML)
        spec = fileio.load_design(p)
        assert (spec.priors[0].a0, spec.priors[0].b0) == (0.2, 0.8)

    def test_partial_priors_rejected(self):
        m = yaml.safe_load(DESIGN_YAML)
        m["structure"] = "co-primary"
        m["endpoints"].append(
            {"name": "PFS4", "window_days": 120, "phi": 0.3, "null_rate": 0.3,
             "alt_rate": 0.45, "event_scores": False, "prior": [0.3, 0.7]}
        )
        with pytest.raises(ValueError):
            fileio.design_from_mapping(m)


class TestScenarioYaml:
    def test_load(self, tmp_path):
        p = tmp_path / "scenario.yaml"
        p.write_text(SCENARIO_YAML)
        sc = fileio.load_scenario(p)
        assert sc.true_rates == (0.4,)
        assert sc.designs == ("tess", "bop2")

    def test_presets_by_reference(self):
        sc = fileio.load_scenario("preset:3")
        assert sc.name == "scenario-3"
        assert sc.true_rates == (0.5,)
        with pytest.raises(ValueError):
            fileio.load_scenario("preset:10")

    def test_preset_contents(self):
        presets = scenario_presets()
        assert presets[1].true_rates == (0.2,)
        assert presets[1].design.null_rates == (0.3,)
        assert presets[6].true_rates == (0.65, 0.45)
        assert presets[9].true_rates == (0.50, 0.18)
        assert presets[9].design.endpoints[1].monitor == "toxicity"
        for sc in presets.values():
            assert sc.accrual_per_month == 2.0


class TestTableSerialization:
    def test_csv_round_trip_preserves_decisions(self, spec_n40, params_n40):
        table = decision_table(spec_n40, params_n40)
        loaded = fileio.table_from_csv(fileio.table_to_csv(table))
        assert loaded.rounded
        for n in spec_n40.looks:
            for x in range(0, n + 1, 3):
                for pending in (0, 1, n - x if n - x < n else 0):
                    n_obs = n - pending
                    if x > n_obs:
                        continue
                    snap = InterimSnapshot(
                        n, {"ORR": EndpointCounts(x=x, n_obs=n_obs, n_pending=pending,
                                                  tess=n_obs + 0.37 * pending)}
                    )
                    assert decide(snap, table).action == decide(snap, loaded).action

    @pytest.mark.parametrize("structure", ["co-primary", "efficacy-toxicity"])
    def test_joint_csv_round_trip_preserves_decisions(self, structure):
        import numpy as np

        from gonogo.design import CutoffParams
        from gonogo.state import EndpointDef

        if structure == "co-primary":
            eps = (EndpointDef("ORR", 60, 0.45),
                   EndpointDef("PFS4", 120, 0.30, event_scores=False))
            rates = ((0.45, 0.30), (0.65, 0.45))
        else:
            eps = (EndpointDef("ORR", 120, 0.3),
                   EndpointDef("DLT", 60, 0.3, monitor="toxicity"))
            rates = ((0.3, 0.3), (0.5, 0.18))
        from gonogo.design import DesignSpec

        spec = DesignSpec(structure, eps, rates[0], rates[1], 20, (10, 20), 0.1)
        table = decision_table(spec, CutoffParams(0.7, 1.5))
        loaded = fileio.table_from_csv(fileio.table_to_csv(table))
        rng = np.random.default_rng(99)
        agreements = 0
        for _ in range(400):
            n = int(rng.choice((10, 20)))
            counts = {}
            for ep in eps:
                pending = int(rng.integers(0, n + 1))
                n_obs = n - pending
                x = int(rng.integers(0, n_obs + 1))
                tess = n_obs + float(rng.random()) * pending
                counts[ep.name] = EndpointCounts(x=x, n_obs=n_obs, n_pending=pending, tess=tess)
            snap = InterimSnapshot(n, counts)
            assert decide(snap, table).action == decide(snap, loaded).action
            agreements += 1
        assert agreements == 400

    def test_json_round_trip_is_exact(self, spec_n40, params_n40):
        table = decision_table(spec_n40, params_n40)
        loaded = fileio.table_from_json(json.loads(json.dumps(fileio.table_to_json(table))))
        assert loaded.endpoints == table.endpoints
        assert loaded.params == table.params

    def test_csv_deterministic(self, spec_n40, params_n40):
        table = decision_table(spec_n40, params_n40)
        assert fileio.table_to_csv(table) == fileio.table_to_csv(table)

    def test_rounded_thresholds_govern_loaded_table(self, spec_n40, params_n40):
        table = decision_table(spec_n40, params_n40)
        loaded = fileio.table_from_csv(fileio.table_to_csv(table))
        block = loaded.endpoints[0].block(20)
        x, rounded = next(iter(sorted(block.thresholds.items())))
        assert rounded == round(table.endpoints[0].block(20).thresholds[x], 2)
        just_below = rounded - 0.001
        n_obs = 20 - 8
        if x <= n_obs and just_below >= n_obs:
            snap = InterimSnapshot(
                20, {"ORR": EndpointCounts(x=x, n_obs=n_obs, n_pending=8, tess=just_below)}
            )
            assert decide(snap, loaded).action == GO


class TestBundledReferenceTable:
    def test_loads_with_published_shape(self):
        table = fileio.load_table("data/decision_table_single_n40.csv")
        assert table.looks == (10, 20, 30, 40)
        b20 = table.endpoints[0].block(20)
        assert b20.thresholds == {2: 10.15, 3: 15.40}
        assert b20.go_bound == 4 and b20.stop_bound == 1 and b20.suspend_min == 10
        b10 = table.endpoints[0].block(10)
        assert b10.thresholds == {1: 8.27}
        assert b10.stop_bound == 0 and b10.go_bound == 2 and b10.suspend_min == 2
        b40 = table.endpoints[0].block(40)
        assert b40.is_final and b40.go_bound == 12

    def test_decisions_from_reference_rows(self):
        table = fileio.load_table("data/decision_table_single_n40.csv")
        go = InterimSnapshot(20, {"ORR": EndpointCounts(x=3, n_obs=11, n_pending=9, tess=14.0)})
        assert decide(go, table).action == GO
        nogo = InterimSnapshot(10, {"ORR": EndpointCounts(x=0, n_obs=10, n_pending=0, tess=10.0)})
        assert decide(nogo, table).action == NOGO
        suspend = InterimSnapshot(40, {"ORR": EndpointCounts(x=15, n_obs=39, n_pending=1, tess=39.6)})
        assert decide(suspend, table).action == SUSPEND


class TestInterimData:
    def test_bundled_file_parses(self):
        rows, windows = fileio.load_interim("data/interim_20_patients.csv")
        assert windows == {"ORR": 120.0}
        assert len(rows) == 20
        eps = [EndpointDef("ORR", 120, 0.2)]
        snap, per_patient = fileio.snapshot_from_rows(rows, eps)
        c = snap.endpoint("ORR")
        assert (c.x, c.n_obs, c.n_pending) == (3, 11, 9)
        assert c.tess == pytest.approx(14.0, abs=1e-9)
        assert [round(p["ess"], 2) for p in per_patient["ORR"][11:]] == [
            0.71, 0.65, 0.55, 0.40, 0.27, 0.23, 0.08, 0.07, 0.04]

    def test_round_trip(self, tmp_path):
        rows, windows = fileio.load_interim("data/interim_20_patients.csv")
        text = fileio.interim_to_csv(rows, windows)
        p = tmp_path / "again.csv"
        p.write_text(text)
        rows2, windows2 = fileio.load_interim(p)
        assert windows2 == windows
        assert len(rows2) == len(rows)
        assert all(a["ORR"]["status"] == b["ORR"]["status"] for a, b in zip(rows, rows2))

    def test_pending_without_follow_up_rejected(self, tmp_path):
        bad = (
            "# interim-data v1\n"
            "# window_days: ORR=120\n"
            "id,arrival_day,ORR_status,ORR_follow_up_days\n"
            "1,0,pending,\n"
        )
        p = tmp_path / "bad.csv"
        p.write_text(bad)
        with pytest.raises(ValueError):
            fileio.load_interim(p)

    def test_unknown_status_rejected(self, tmp_path):
        bad = (
            "# interim-data v1\n"
            "# window_days: ORR=120\n"
            "id,arrival_day,ORR_status,ORR_follow_up_days\n"
            "1,0,maybe,10\n"
        )
        p = tmp_path / "bad.csv"
        p.write_text(bad)
        with pytest.raises(ValueError):
            fileio.load_interim(p)


class TestReports:
    def test_csv_and_json_shapes(self):
        from gonogo.simulate import OCReport

        r = OCReport(design="tess", scenario="s", replicates=10, accept_rate=0.5,
                     accept_se=0.16, expected_n=20.0, n_se=1.0,
                     mean_duration_months=12.0, duration_se=0.5, stop_reasons={"futility": 5})
        text = fileio.reports_to_csv([r], {"seed": 1})
        assert "accept_rate" in text.splitlines()[2]
        payload = fileio.reports_to_json([r], {"seed": 1})
        assert payload["reports"][0]["stop_reasons"] == {"futility": 5}
