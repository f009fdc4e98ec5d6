import io

import numpy as np
import pytest

from rulcon.cmapss import (ENGINE_COUNTS, CMAPSSParseError, CMAPSSValidationError, DatasetSplit,
                           format_cmapss_rows, load_saved_split, load_subset, parse_cmapss_file,
                           parse_rul_file, save_split)
from rulcon.synthetic import synthetic_split, write_cmapss_files


def _row(engine, cycle, fill=1.0):
    return " ".join([str(engine), str(cycle)] + [str(fill)] * 24)


def test_empty_stream():
    assert parse_cmapss_file(io.StringIO("")) == []


def test_non_numeric_token_reports_line():
    line = "1 1 a b c " + " ".join(["0"] * 21)
    with pytest.raises(CMAPSSParseError) as err:
        parse_cmapss_file(io.StringIO(line))
    assert err.value.line_no == 1


def test_wrong_column_count():
    text = _row(1, 1) + "\n" + "1 2 3\n"
    with pytest.raises(CMAPSSParseError) as err:
        parse_cmapss_file(io.StringIO(text))
    assert err.value.line_no == 2


def test_trailing_whitespace_and_blank_lines():
    text = _row(1, 1) + "   \n\n" + _row(1, 2) + " \n   \n" + _row(2, 1) + "\n"
    trajs = parse_cmapss_file(io.StringIO(text))
    assert [t.engine_id for t in trajs] == [1, 2]
    assert trajs[0].length == 2
    assert trajs[0].sensors.shape == (2, 21)
    assert trajs[0].op_settings.shape == (2, 3)


def test_rows_sorted_by_cycle_and_grouped_in_order_of_appearance():
    text = "\n".join([_row(7, 2, 2.0), _row(3, 1), _row(7, 1, 1.0)])
    trajs = parse_cmapss_file(io.StringIO(text))
    assert [t.engine_id for t in trajs] == [7, 3]
    assert trajs[0].cycles.tolist() == [1, 2]
    assert trajs[0].sensors[:, 0].tolist() == [1.0, 2.0]


def test_gap_in_cycles_is_a_validation_error():
    text = "\n".join([_row(1, 1), _row(1, 3)])
    with pytest.raises(CMAPSSValidationError):
        parse_cmapss_file(io.StringIO(text))


def test_rul_file():
    assert parse_rul_file(io.StringIO("112 \n98\n\n69\n")) == [112, 98, 69]
    with pytest.raises(CMAPSSParseError):
        parse_rul_file(io.StringIO("12\n-3\n"))


def test_text_round_trip():
    split = synthetic_split("FD001", seed=1, length_range=(5, 12), counts=(3, 2))
    again = parse_cmapss_file(io.StringIO(format_cmapss_rows(split.train)))
    assert all(a.equals(b) for a, b in zip(split.train, again))


def test_load_subset_counts_and_round_trip(tmp_path):
    split = synthetic_split("FD003", seed=2, length_range=(31, 40))
    write_cmapss_files(split, tmp_path / "raw")
    loaded = load_subset("FD003", tmp_path / "raw")
    assert (len(loaded.train), len(loaded.test)) == ENGINE_COUNTS["FD003"] == (100, 100)
    assert loaded.equals(split)

    saved = save_split(loaded, tmp_path / "FD003.npz")
    assert load_saved_split(saved).equals(loaded)


def test_fd002_counts(tmp_path):
    split = synthetic_split("FD002", seed=2, length_range=(31, 33))
    write_cmapss_files(split, tmp_path)
    loaded = load_subset("FD002", tmp_path)
    assert (len(loaded.train), len(loaded.test)) == (260, 259)


def test_count_mismatch_and_unknown_subset(tmp_path):
    split = synthetic_split("FD001", seed=2, length_range=(31, 33), counts=(4, 3))
    write_cmapss_files(split, tmp_path)
    with pytest.raises(CMAPSSValidationError):
        load_subset("FD001", tmp_path)
    assert len(load_subset("FD001", tmp_path, check_counts=False).train) == 4
    with pytest.raises(ValueError, match="unknown"):
        load_subset("FD009", tmp_path)


def test_missing_file_is_named(tmp_path):
    with pytest.raises(FileNotFoundError, match="train_FD001.txt"):
        load_subset("FD001", tmp_path)


def test_truth_count_must_match_test_engines():
    split = synthetic_split("FD001", seed=0, length_range=(31, 33), counts=(2, 2))
    with pytest.raises(CMAPSSValidationError):
        DatasetSplit("FD001", split.train, split.test, [1])


def test_empty_split_round_trip(tmp_path):
    split = DatasetSplit("FD004", [], [], [])
    assert load_saved_split(save_split(split, tmp_path / "e.npz")).equals(split)
