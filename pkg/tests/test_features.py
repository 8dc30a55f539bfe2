import datetime as dt
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hurriloss import features as F
from hurriloss.core import HPI_BASELINE, HpiSeries
from hurriloss.ingest import bundle_to_csv, parse_bundle
from hurriloss.synthetic import generate_synthetic


class TestStandardizer:
    def test_constant_column(self):
        p = F.fit_standardizer([[2.0], [2.0], [2.0]])
        assert p.means == (2.0,) and p.stds == (0.0,)
        np.testing.assert_array_equal(F.apply_standardizer(p, [[2.0], [5.0]]), [[0.0], [0.0]])

    def test_two_values(self):
        p = F.fit_standardizer([[0.0], [10.0]])
        assert p.means == (5.0,) and p.stds == (5.0,)

    def test_four_values(self):
        p = F.fit_standardizer([[1.0], [2.0], [3.0], [4.0]])
        assert p.means[0] == 2.5
        assert p.stds[0] == pytest.approx(math.sqrt(1.25), abs=1e-15)

    def test_self_standardized_moments(self, rng):
        x = rng.normal(3.0, 7.0, size=(200, 3))
        z = F.apply_standardizer(F.fit_standardizer(x), x)
        np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(z.var(axis=0), 1.0, atol=1e-12)

    def test_mean_plus_std_maps_to_one(self):
        p = F.fit_standardizer([[1.0], [5.0], [9.0]])
        assert F.apply_standardizer(p, [[p.means[0] + p.stds[0]]])[0, 0] == pytest.approx(1.0, abs=1e-15)


class TestOneHot:
    def test_middle_label(self):
        np.testing.assert_array_equal(F.one_hot(F.OneHotSpec("occ", ("A", "B", "C")), "B"), [0, 1, 0])

    def test_single_label(self):
        np.testing.assert_array_equal(F.one_hot(F.OneHotSpec("occ", ("A",)), "A"), [1])

    def test_unseen_label_counts(self):
        counter = F.UnseenLabelCounter()
        np.testing.assert_array_equal(F.one_hot(F.OneHotSpec("occ", ("A", "B")), "Z", counter), [0, 0])
        assert counter.count == 1

    def test_column_names(self):
        assert F.OneHotSpec.fit("occ", ["b", "a", "b"]).output_columns == ("occ=a", "occ=b")


class TestInflation:
    hpi = HpiSeries(((2020, 1), (2020, 2), (2025, 1)), (410.145, 500.0, HPI_BASELINE))

    def test_baseline_identity(self):
        assert F.adjust_inflation(1234.5, dt.date(2025, 1, 20), self.hpi) == 1234.5

    def test_half_index_doubles(self):
        assert F.adjust_inflation(1000.0, dt.date(2020, 1, 15), self.hpi) == pytest.approx(2000.0, rel=1e-15)

    def test_zero_cost(self):
        assert F.adjust_inflation(0.0, dt.date(2020, 2, 1), self.hpi) == 0.0

    def test_preceding_month_fallback(self):
        assert F.adjust_inflation(500.0, dt.date(2023, 6, 1), self.hpi) == pytest.approx(HPI_BASELINE, rel=1e-15)

    def test_before_first_month(self):
        with pytest.raises(ValueError, match="precedes"):
            F.adjust_inflation(1.0, dt.date(2019, 12, 31), self.hpi)


class TestLogTarget:
    def test_zero(self):
        assert F.log_target(0.0) == 0.0

    def test_e_minus_one(self):
        assert F.log_target(math.e - 1) == pytest.approx(1.0, abs=1e-15)

    def test_negative(self):
        with pytest.raises(ValueError):
            F.log_target(-1.0)

    def test_round_trip_sweep(self):
        x = np.concatenate([[0.0], np.logspace(-6, 9, 2000)])
        back = F.inverse_log_target(F.log_target(x))
        np.testing.assert_allclose(back, x, rtol=1e-9, atol=0)

    @settings(max_examples=200, deadline=None)
    @given(st.floats(0, 1e9))
    def test_round_trip_property(self, x):
        assert F.inverse_log_target(F.log_target(x)) == pytest.approx(x, rel=1e-9, abs=1e-12)


class TestAssemble:
    def test_column_layout(self, small_bundle):
        fm = F.assemble(small_bundle, 42)
        n_labels = len({b.occupancy_type for b in small_bundle.buildings})
        assert len(fm.column_names) == 10 + 1 + n_labels
        assert fm.column_names[:10] == F.NUMERIC_COLUMNS
        assert fm.column_names[10] == "category"

    def test_seed42_column_count(self):
        fm = F.assemble(generate_synthetic(42, 2000, 50, 0.3), 42)
        assert len(fm.column_names) == 10 + 1 + 3

    def test_category_not_standardized(self, small_bundle, small_design):
        fm = F.assemble(small_bundle)
        col = fm.column_names.index("category")
        np.testing.assert_array_equal(fm.rows[:, col], small_design.category)
        assert set(np.unique(fm.rows[:, col])) <= {0, 1, 2, 3, 4, 5}

    def test_numeric_standardized(self, small_bundle):
        fm = F.assemble(small_bundle)
        z = fm.rows[:, :10]
        np.testing.assert_allclose(z.mean(axis=0), 0.0, atol=1e-12)
        np.testing.assert_allclose(z.std(axis=0), 1.0, atol=1e-12)

    def test_single_occupancy_label(self, small_bundle):
        import dataclasses

        b = dataclasses.replace(
            small_bundle,
            buildings=tuple(dataclasses.replace(x, occupancy_type="single_family") for x in small_bundle.buildings),
        )
        fm = F.assemble(b)
        occ = [c for c in fm.column_names if c.startswith("occupancy_type=")]
        assert occ == ["occupancy_type=single_family"]
        np.testing.assert_array_equal(fm.rows[:, fm.column_names.index(occ[0])], 1.0)

    def test_occupancy_can_be_disabled(self, small_bundle):
        fm = F.assemble(small_bundle, include_occupancy=False)
        assert len(fm.column_names) == 11

    def test_rows_are_loss_zctas(self, small_bundle):
        texts = bundle_to_csv(small_bundle)
        # extra hydro-only ZCTA with a centroid but no losses
        texts["zcta_centroids.csv"] += "99999,27.0,-82.0\n"
        texts["hydro.csv"] += "99999,50,1,1,1\n"
        bundle, _ = parse_bundle(texts)
        fm = F.assemble(bundle)
        assert "99999" not in fm.row_ids
        assert fm.row_ids == tuple(sorted({l.zcta_id for l in small_bundle.losses}))

    def test_missing_hydro_imputed_from_nearest(self, small_bundle):
        texts = bundle_to_csv(small_bundle)
        lines = texts["hydro.csv"].splitlines()
        victim = lines[1].split(",")[0]
        lines[1] = f"{victim},,,,"
        texts["hydro.csv"] = "\n".join(lines) + "\n"
        bundle, _ = parse_bundle(texts)
        design = F.build_design(bundle)
        cents = bundle.centroids
        others = [z for z in design.row_ids if z != victim]
        from hurriloss.spatial import haversine_km

        donor = min(others, key=lambda z: (haversine_km(cents[victim], cents[z]), z))
        i, j = design.row_ids.index(victim), design.row_ids.index(donor)
        np.testing.assert_array_equal(design.numeric[i, 2:6], design.numeric[j, 2:6])
        assert np.all(np.isfinite(design.numeric))

    def test_losses_summed_with_latest_month(self):
        from hurriloss.core import LossRecord
        from hurriloss.ingest import DatasetBundle

        b = generate_synthetic(5, 3, 2, 0.0)
        z = b.zctas[0].zcta_id
        hpi = HpiSeries(((2020, 1), (2021, 6)), (400.0, 800.0))
        losses = (LossRecord(z, dt.date(2020, 3, 1), 100.0, 50.0), LossRecord(z, dt.date(2021, 6, 9), 30.0, 20.0))
        bundle = DatasetBundle(b.zctas, b.storms, b.hydro, b.buildings, losses, hpi, b.occupancy_labels)
        d = F.build_design(bundle)
        assert d.row_ids == (z,)
        expected = 200.0 * HPI_BASELINE / 800.0
        assert d.adjusted_cost[0] == pytest.approx(expected, rel=1e-15)
        assert d.target[0] == pytest.approx(math.log1p(expected), rel=1e-15)

    def test_matrix_csv_round_trip(self, small_bundle):
        fm = F.assemble(small_bundle)
        back = F.matrix_from_csv(F.matrix_to_csv(fm))
        assert back.column_names == fm.column_names and back.row_ids == fm.row_ids
        np.testing.assert_array_equal(back.rows, fm.rows)
        np.testing.assert_array_equal(back.target, fm.target)
        text = F.matrix_to_csv(fm)
        assert text.splitlines()[0].startswith("zcta,") and text.splitlines()[0].endswith(",target")

    def test_design_csv_round_trip(self, small_design):
        back = F.design_from_csv(F.design_to_csv(small_design))
        assert back.row_ids == small_design.row_ids and back.occupancy == small_design.occupancy
        np.testing.assert_array_equal(back.numeric, small_design.numeric)
        np.testing.assert_array_equal(back.target, small_design.target)


def test_preprocessor_fits_on_training_rows_only(small_design):
    train = np.arange(0, small_design.n_rows, 2)
    valid = np.arange(1, small_design.n_rows, 2)
    clean = F.Preprocessor.fit(small_design, train)
    poisoned_numeric = small_design.numeric.copy()
    poisoned_numeric[valid] = 1e12
    poisoned = F.Preprocessor.fit(small_design.with_numeric(poisoned_numeric), train)
    assert clean.to_dict() == poisoned.to_dict()


def test_preprocessor_round_trip(small_design):
    pre = F.Preprocessor.fit(small_design)
    again = F.Preprocessor.from_dict(pre.to_dict())
    np.testing.assert_array_equal(pre.transform(small_design), again.transform(small_design))
    assert again.column_names == pre.column_names
