import numpy as np
import pytest

from hurriloss.evaluation.summary import SUMMARY_COLUMNS, export_zcta_summary, parse_zcta_summary
from hurriloss.features import inverse_log_target


def test_rows_and_round_trip(small_bundle, small_design):
    pred = np.linspace(0, 1, small_design.n_rows) / 3
    text = export_zcta_summary(small_bundle, small_design, pred)
    assert text.splitlines()[0] == ",".join(SUMMARY_COLUMNS)
    rows = parse_zcta_summary(text)
    assert len(rows) == small_design.n_rows
    assert [r["zcta"] for r in rows] == list(small_design.row_ids)
    assert [r["predicted_log_cost"] for r in rows] == list(pred)
    assert export_zcta_summary(small_bundle, small_design, pred) == text


def test_adjusted_cost_matches_target(small_bundle, small_design):
    rows = parse_zcta_summary(export_zcta_summary(small_bundle, small_design))
    for r, t in zip(rows, small_design.target):
        assert r["adjusted_total_cost"] == pytest.approx(inverse_log_target(t), rel=1e-6)
        assert r["predicted_log_cost"] is None


def test_prediction_length_checked(small_bundle, small_design):
    with pytest.raises(ValueError, match="predictions"):
        export_zcta_summary(small_bundle, small_design, np.zeros(3))
