import numpy as np
import pytest
from pydantic import ValidationError

from core.errors import ContractError, InputFileError, RoutingError
from ensemble.aggregate import PredictionSet, trimmed_middle_mean
from ensemble.routing import LookupTableFallback, RoutingRule, Source, route_and_predict, route_with_source
from ensemble.tables import read_fallback_table, read_predictions
from molecules.graph2d import bare_molgraph


class RefusingFallback:
    def predict(self, g):
        raise AssertionError(f"fallback consulted for {g.mol_id}")


def _preds(sample_id: str, values) -> PredictionSet:
    return PredictionSet(sample_id=sample_id, values=list(values), member_ids=[f"m{k}" for k in range(len(values))])


# ─────────────────────────────────────────────────────
# Trimmed middle mean
# ─────────────────────────────────────────────────────
def test_middle_ten_of_twenty_two():
    values = np.random.default_rng(0).permutation(np.arange(1.0, 23.0))
    assert trimmed_middle_mean(values, 10) == 11.5


def test_k_equal_m_is_plain_mean():
    assert trimmed_middle_mean([1.0, 2.0, 6.0], 3) == 3.0


def test_k_one_is_lower_median_for_even_m():
    assert trimmed_middle_mean([4.0, 1.0, 3.0, 2.0], 1) == 2.0
    assert trimmed_middle_mean([5.0, 1.0, 3.0], 1) == 3.0


def test_matches_sort_and_slice_oracle(rng):
    for _ in range(200):
        m = int(rng.integers(1, 40))
        k = int(rng.integers(1, m + 1))
        values = rng.standard_normal(m) * 3
        ordered = np.sort(values)
        lower = (m - k) // 2
        expected = ordered[lower:lower + k].mean()
        assert trimmed_middle_mean(values, k) == pytest.approx(expected, abs=1e-12)
        assert trimmed_middle_mean(rng.permutation(values), k) == trimmed_middle_mean(values, k)
        assert ordered[0] <= trimmed_middle_mean(values, k) <= ordered[-1]


def test_monotone_in_each_member(rng):
    values = rng.standard_normal(12)
    base = trimmed_middle_mean(values, 6)
    for i in range(12):
        bumped = values.copy()
        bumped[i] += 0.5
        assert trimmed_middle_mean(bumped, 6) >= base


def test_k_out_of_range():
    with pytest.raises(ContractError):
        trimmed_middle_mean([1.0, 2.0], 3)
    with pytest.raises(ContractError):
        trimmed_middle_mean([1.0, 2.0], 0)


def test_prediction_set_validation():
    with pytest.raises(ValidationError):
        _preds("s", [])
    with pytest.raises(ValidationError):
        _preds("s", [1.0, float("nan")])
    with pytest.raises(ValidationError):
        PredictionSet(sample_id="s", values=[1.0], member_ids=["a", "b"])


# ─────────────────────────────────────────────────────
# Routing
# ─────────────────────────────────────────────────────
def test_small_molecule_goes_to_fallback():
    rule = RoutingRule(LookupTableFallback({"water": 5.1}), min_atoms_threshold=4)
    g = bare_molgraph("water", [8, 1, 1])
    assert route_with_source(g, _preds("water", [7.0] * 12), rule) == (5.1, Source.FALLBACK)


def test_large_molecule_never_consults_fallback():
    rule = RoutingRule(RefusingFallback(), min_atoms_threshold=4)
    g = bare_molgraph("big", [6] * 10)
    assert route_and_predict(g, _preds("big", np.arange(1.0, 23.0)), rule, k=10) == 11.5


def test_threshold_is_strict():
    rule = RoutingRule(RefusingFallback(), min_atoms_threshold=4)
    value, source = route_with_source(bare_molgraph("four", [6, 6, 1, 1]), _preds("four", [2.0, 4.0]), rule, k=2)
    assert (value, source) == (3.0, Source.ENSEMBLE)


def test_fallback_without_entry():
    rule = RoutingRule(LookupTableFallback({}), min_atoms_threshold=4)
    with pytest.raises(RoutingError) as exc:
        route_and_predict(bare_molgraph("h2", [1, 1]), None, rule)
    assert exc.value.sample_id == "h2"


def test_large_molecule_without_predictions():
    rule = RoutingRule(LookupTableFallback({}), min_atoms_threshold=4)
    with pytest.raises(RoutingError):
        route_and_predict(bare_molgraph("big", [6] * 5), None, rule)


def test_threshold_must_be_positive():
    with pytest.raises(ContractError):
        RoutingRule(LookupTableFallback({}), min_atoms_threshold=0)


# ─────────────────────────────────────────────────────
# Tables
# ─────────────────────────────────────────────────────
def test_read_fixture_tables(fixtures_dir):
    preds = read_predictions(fixtures_dir / "predictions_22.csv")
    assert len(preds["mol-big"].values) == 22
    assert preds["mol-big"].member_ids[0] == "m01"
    assert trimmed_middle_mean(preds["mol-big"].values, 10) == 11.5
    assert read_fallback_table(fixtures_dir / "fallback.csv") == {"water": 5.1}


@pytest.mark.parametrize("text", [
    "sample_id,member_id\na,m1\n",
    "sample_id,member_id,value_ev\na,m1,abc\n",
    "sample_id,member_id,value_ev\na,m1,1.0\na,m1,2.0\n",
    "sample_id,member_id,value_ev\na,m1,nan\n",
])
def test_bad_prediction_tables(tmp_path, text):
    (tmp_path / "p.csv").write_text(text)
    with pytest.raises(InputFileError):
        read_predictions(tmp_path / "p.csv")
