import io

import numpy as np
import numpy.testing as npt
import pytest

from survseg.data import (
    ColumnSchema,
    SegmentationPrior,
    SurvivalDataset,
    build_prior,
    load_dataset,
)
from survseg.errors import DataError, PriorError


def csv_stream(text):
    return io.StringIO(text.strip() + "\n")


class TestDatasetConstruction:
    def test_sorts_by_order_key_and_counts_moves(self):
        ds = SurvivalDataset.from_arrays(
            time=[1.0, 2.0, 3.0],
            event=[1, 0, 1],
            order_key=[5.0, 1.0, 3.0],
        )
        npt.assert_array_equal(ds.order_key, [1.0, 3.0, 5.0])
        npt.assert_array_equal(ds.time, [2.0, 3.0, 1.0])
        assert ds.n_reordered == 3

    def test_stable_sort_on_ties(self):
        ds = SurvivalDataset.from_arrays(
            time=[1.0, 2.0, 3.0, 4.0],
            event=[1, 1, 1, 1],
            order_key=[2.0, 1.0, 1.0, 2.0],
        )
        npt.assert_array_equal(ds.time, [2.0, 3.0, 1.0, 4.0])

    def test_entry_after_time_rejected_with_row(self):
        with pytest.raises(DataError, match="row 1"):
            SurvivalDataset.from_arrays(
                time=[2.0, 1.0], event=[1, 1], entry=[0.0, 2.0]
            )

    def test_non_finite_rejected(self):
        with pytest.raises(DataError, match="non-finite time"):
            SurvivalDataset.from_arrays(time=[1.0, np.inf], event=[1, 0])
        with pytest.raises(DataError, match="covariate"):
            SurvivalDataset.from_arrays(
                time=[1.0, 1.0], event=[1, 0], covariates=[[np.nan], [0.0]]
            )

    def test_event_values_validated(self):
        with pytest.raises(DataError, match="0/1"):
            SurvivalDataset.from_arrays(time=[1.0, 2.0], event=[1, 2])

    def test_minimum_size(self):
        with pytest.raises(DataError, match="at least 2"):
            SurvivalDataset.from_arrays(time=[1.0], event=[1])

    def test_arrays_are_read_only(self):
        ds = SurvivalDataset.from_arrays(time=[1.0, 2.0], event=[1, 0])
        with pytest.raises(ValueError):
            ds.time[0] = 9.0

    def test_record_view(self):
        ds = SurvivalDataset.from_arrays(
            time=[1.0, 2.0], event=[1, 0], entry=[0.5, 0.0], covariates=[[1.0], [2.0]]
        )
        rec = ds.record(0)
        assert rec.time == 1.0 and rec.event and rec.entry == 0.5
        assert len(ds.records) == 2


class TestLoadDataset:
    def test_round_trip_with_all_columns(self):
        text = """time,event,entry,year,x1
2.5,1,0.5,1990,0.3
1.5,0,0.0,1988,-0.2
3.0,1,1.0,1989,0.0"""
        schema = ColumnSchema(
            time="time", event="event", entry="entry", order_key="year", covariates=("x1",)
        )
        ds = load_dataset(csv_stream(text), schema)
        npt.assert_array_equal(ds.order_key, [1988, 1989, 1990])
        npt.assert_array_equal(ds.event, [False, True, True])
        assert ds.p == 1

    def test_missing_mandatory_column(self):
        with pytest.raises(DataError, match="missing column"):
            load_dataset(csv_stream("time,ev\n1.0,1"), ColumnSchema())

    def test_bad_event_value_names_row(self):
        text = "time,event\n1.0,1\n2.0,yes"
        with pytest.raises(DataError, match="row 2"):
            load_dataset(csv_stream(text), ColumnSchema())

    def test_entry_after_time_names_row(self):
        text = "time,event,entry\n1.0,1,2.0\n2.0,1,0.0"
        schema = ColumnSchema(entry="entry")
        with pytest.raises(DataError, match="entry > time"):
            load_dataset(csv_stream(text), schema)

    def test_defaults_without_optional_columns(self):
        ds = load_dataset(csv_stream("time,event\n1.0,1\n2.0,0"), ColumnSchema())
        npt.assert_array_equal(ds.entry, [0.0, 0.0])
        npt.assert_array_equal(ds.order_key, [1.0, 2.0])
        assert ds.p == 0

    def test_file_path(self, tmp_path):
        path = tmp_path / "d.csv"
        path.write_text("time,event\n1.0,1\n2.0,0\n")
        ds = load_dataset(str(path))
        assert ds.n == 2


class TestBuildPrior:
    def test_tie_positions_zeroed(self):
        ds = SurvivalDataset.from_arrays(
            time=[1.0] * 4, event=[1] * 4, order_key=[1.0, 1.0, 2.0, 3.0]
        )
        prior = build_prior(ds, 2, base_eta=0.5, forbid_ties=True)
        npt.assert_allclose(prior.eta[1], [0.0, 0.0])
        npt.assert_allclose(prior.eta[2], [0.5, 0.5])
        npt.assert_allclose(prior.eta[3], [0.5, 0.5])

    def test_without_forbid_all_base(self):
        ds = SurvivalDataset.from_arrays(
            time=[1.0] * 3, event=[1] * 3, order_key=[1.0, 1.0, 2.0]
        )
        prior = build_prior(ds, 2, base_eta=0.3, forbid_ties=False)
        npt.assert_allclose(prior.eta[1:], 0.3)

    def test_all_tied_keys_rejected(self):
        ds = SurvivalDataset.from_arrays(
            time=[1.0] * 3, event=[1] * 3, order_key=[2.0, 2.0, 2.0]
        )
        with pytest.raises(PriorError, match="admissible"):
            build_prior(ds, 2, forbid_ties=True)

    def test_k_exceeding_distinct_keys_rejected(self):
        ds = SurvivalDataset.from_arrays(
            time=[1.0] * 4, event=[1] * 4, order_key=[1.0, 1.0, 2.0, 2.0]
        )
        with pytest.raises(PriorError):
            build_prior(ds, 3, forbid_ties=True)
        build_prior(ds, 2, forbid_ties=True)  # two distinct keys: fine

    def test_base_eta_range(self):
        ds = SurvivalDataset.from_arrays(time=[1.0, 2.0], event=[1, 1])
        for bad in (0.0, 1.0, -0.1):
            with pytest.raises(PriorError):
                build_prior(ds, 2, base_eta=bad)

    def test_custom_matrix_validation(self):
        with pytest.raises(PriorError):
            SegmentationPrior(np.array([[0.5, 1.5], [0.2, 0.2]]))
