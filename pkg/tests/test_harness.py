import math

import numpy as np
import pytest
from scipy import stats

from bnidentity.bn_core import joint_distribution
from bnidentity.divergences import total_variation
from bnidentity.errors import DomainTooLarge, InvalidConfig
from bnidentity.harness import (
    ExperimentSpec,
    GeneratorSpec,
    TrialRecord,
    generate_instance,
    perturb_row,
    run_experiment,
    strip_timing,
    summarize,
)
from bnidentity.subtest import Decision

from conftest import brute_joint

pytestmark = pytest.mark.filterwarnings("ignore::bnidentity.errors.InsufficientSamplesWarning")


def spec(**kw):
    base = dict(scenario="size", generator=GeneratorSpec("chain", n=3), tester="known", eps=0.3, samples=500)
    base.update(kw)
    return ExperimentSpec(**base)


class TestGenerateInstance:
    def test_zero_perturbation(self):
        p, q, tv = generate_instance(spec(), 0)
        assert all(np.array_equal(a, b) for a, b in zip(p.cpts, q.cpts)) and tv == 0.0

    def test_perturbed_chain_oracle(self):
        s = spec(scenario="power", generator=GeneratorSpec("chain", n=3, perturbation=0.4))
        p, q, tv = generate_instance(s, 2)
        expected = 0.5 * np.abs(brute_joint(p) - brute_joint(q)).sum()
        assert tv > 0 and tv == pytest.approx(expected, abs=1e-12)

    def test_random_dag(self):
        s = spec(generator=GeneratorSpec("random-dag", n=5, d=2))
        p, _, tv = generate_instance(s, 1)
        assert p.dag.max_in_degree <= 2 and tv is not None

    def test_deterministic(self):
        s = spec(generator=GeneratorSpec("tree", n=6, perturbation=0.2), scenario="power")
        a, b = generate_instance(s, 4), generate_instance(s, 4)
        assert a[2] == b[2] and all(np.array_equal(x, y) for x, y in zip(a[1].cpts, b[1].cpts))

    def test_oracle_required_for_power(self):
        s = spec(scenario="power", generator=GeneratorSpec("chain", n=12, perturbation=0.3), oracle_cap=1000)
        with pytest.raises(DomainTooLarge):
            generate_instance(s, 0)

    def test_product_family(self):
        s = spec(scenario="power", tester="gof-product", generator=GeneratorSpec("product", n=6, perturbation=0.2))
        p, q, tv = generate_instance(s, 0)
        assert tv == pytest.approx(total_variation(joint_distribution(p), joint_distribution(q)), abs=1e-12)

    def test_perturb_row_moves_mass(self):
        row = perturb_row(np.array([0.7, 0.2, 0.1]), 0.3)
        np.testing.assert_allclose(row, [0.4, 0.2, 0.4])


class TestSpec:
    def test_size_needs_zero_perturbation(self):
        with pytest.raises(InvalidConfig):
            spec(generator=GeneratorSpec("chain", perturbation=0.1))

    def test_unknown_family(self):
        with pytest.raises(InvalidConfig):
            GeneratorSpec("grid")

    def test_round_trip(self, tmp_path):
        import json

        s = spec(trials=3)
        path = tmp_path / "s.json"
        path.write_text(json.dumps(s.to_dict()))
        assert ExperimentSpec.from_json(path) == s


class TestSummary:
    def test_wilson(self):
        recs = [TrialRecord(i, "", 0.0, True, Decision.FAR if i < 7 else Decision.EQUAL, None, 0, 0, 0, 0) for i in range(20)]
        s = summarize(recs)
        z = stats.norm.ppf(0.975)
        phat, n = 7 / 20, 20
        centre = (phat + z * z / (2 * n)) / (1 + z * z / n)
        half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / (1 + z * z / n)
        assert s.far_rate == pytest.approx(0.35)
        assert s.ci_low == pytest.approx(centre - half) and s.ci_high == pytest.approx(centre + half)

    def test_exclusions(self):
        recs = [TrialRecord(0, "", 0.1, False, None, None, None, None, 0, 0.0)]
        s = summarize(recs)
        assert s.excluded == 1 and s.included == 0 and math.isnan(s.far_rate)


class TestRunExperiment:
    def test_single_trial(self):
        res = run_experiment(spec())
        lines = res.csv().splitlines()
        assert len(lines) == 3 and lines[1].startswith("0,")
        assert res.records[0].decision in (Decision.EQUAL, Decision.FAR)

    def test_power_gating(self):
        s = spec(scenario="power", trials=6, seed=5, generator=GeneratorSpec("chain", n=4, perturbation=0.5))
        res = run_experiment(s)
        for r in res.records:
            assert r.included == (r.exact_tv >= s.eps)
        assert res.summary.excluded == sum(not r.included for r in res.records)

    def test_byte_identical(self, tmp_path):
        s = spec(trials=3, seed=9, output=str(tmp_path / "r.csv"))
        a = strip_timing(run_experiment(s).csv())
        b = strip_timing((tmp_path / "r.csv").read_text())
        assert a == b and "wall_time_s" not in a

    def test_workers_keep_order(self):
        s = spec(trials=3, seed=2)
        assert strip_timing(run_experiment(s, workers=2).csv()) == strip_timing(run_experiment(s).csv())

    def test_write_failure(self, tmp_path):
        with pytest.raises(OSError, match="cannot write report"):
            run_experiment(spec(output=str(tmp_path / "missing" / "r.csv")))
