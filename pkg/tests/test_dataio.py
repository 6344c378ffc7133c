"""Тесты загрузки UCR, синтетических наборов и разбиений."""
import json

import numpy as np
import pytest
from scipy.stats import ttest_ind

from dataio import (Dataset, LabeledSeries, StratificationError, UcrFormatError, find_ucr_files, group_by_length,
                    holdout_split, labels_of, load_ucr_dir, looks_normalized, parse_ucr, pattern_window,
                    stack_values, stratified_kfold, synth_metadata, synth_pattern_dataset, write_ucr, z_normalize)


def _write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def _values(series):
    return [s.values[:, 0].tolist() for s in series]


# разбор файлов UCR

def test_two_row_fixture(data_dir):
    dataset = load_ucr_dir(data_dir / "tworow_tab", znorm=False)
    assert dataset.name == "TwoRow"
    assert dataset.num_classes == 2
    assert [s.length for s in dataset.train] == [2, 2]
    assert labels_of(dataset.train).tolist() == [0, 1]
    assert labels_of(dataset.test).tolist() == [1, 0]
    assert dataset.label_map == {"1": 0, "2": 1}
    assert _values(dataset.train) == [[0.0, 1.0], [1.0, 0.0]]


def test_comma_and_tab_variants_match(data_dir):
    tab = load_ucr_dir(data_dir / "tworow_tab")
    comma = load_ucr_dir(data_dir / "tworow_comma")
    assert tab.label_map == comma.label_map
    assert _values(tab.train) == _values(comma.train)
    assert _values(tab.test) == _values(comma.test)
    assert tab.z_normalized and comma.z_normalized


def test_trailing_nan_shortens_series(data_dir):
    dataset = load_ucr_dir(data_dir / "varlen")
    assert not dataset.z_normalized
    assert [s.length for s in dataset.train] == [4, 2, 3]
    assert _values(dataset.train)[1] == [4.0, 3.0]
    assert [s.length for s in dataset.test] == [4, 2]
    assert group_by_length(dataset.train) == {2: [1], 3: [2], 4: [0]}


def test_numeric_label_order(tmp_path):
    train = _write(tmp_path / "Num_TRAIN.tsv", "10\t1\t2\n2\t3\t4\n1.0\t5\t6\n")
    test = _write(tmp_path / "Num_TEST.tsv", "2\t1\t1\n")
    dataset = parse_ucr(train, test, znorm=False)
    assert dataset.label_map == {"1": 0, "2": 1, "10": 2}
    assert [s.original_label for s in dataset.train] == ["10", "2", "1"]


def test_label_map_ignores_row_order(tmp_path):
    rows = ["3\t1\t2", "1\t2\t3", "2\t0\t1", "1\t5\t5"]
    first = parse_ucr(_write(tmp_path / "A_TRAIN.tsv", "\n".join(rows)),
                      _write(tmp_path / "A_TEST.tsv", rows[0]), znorm=False)
    second = parse_ucr(_write(tmp_path / "B_TRAIN.tsv", "\n".join(reversed(rows))),
                       _write(tmp_path / "B_TEST.tsv", rows[0]), znorm=False)
    assert first.label_map == second.label_map == {"1": 0, "2": 1, "3": 2}


@pytest.mark.parametrize("train_text", [
    "1\t1\t2\t3\n2\t1\t2\n",          # рваная строка
    "1\t1\tNaN\t3\n2\t1\t2\t3\n",     # пропуск внутри ряда
    "1\tNaN\tNaN\n2\t1\t2\n",         # только пропуски
    "1\t1\tabc\n2\t1\t2\n",           # не число
    "1\t1\t2\n1\t2\t3\n",             # один класс
    "\n\n",                            # пустой файл
])
def test_malformed_train_file(tmp_path, train_text):
    train = _write(tmp_path / "Bad_TRAIN.tsv", train_text)
    test = _write(tmp_path / "Bad_TEST.tsv", "1\t1\t2\n")
    with pytest.raises(UcrFormatError):
        parse_ucr(train, test, znorm=False)


def test_unknown_test_label(tmp_path):
    train = _write(tmp_path / "U_TRAIN.tsv", "1\t1\t2\n2\t2\t1\n")
    test = _write(tmp_path / "U_TEST.tsv", "3\t1\t2\n")
    with pytest.raises(UcrFormatError, match="3"):
        parse_ucr(train, test)


def test_unreadable_file(tmp_path):
    with pytest.raises(UcrFormatError):
        parse_ucr(tmp_path / "missing_TRAIN.tsv", tmp_path / "missing_TEST.tsv")
    with pytest.raises(UcrFormatError):
        find_ucr_files(tmp_path / "nowhere")
    with pytest.raises(UcrFormatError):
        find_ucr_files(tmp_path)


def test_round_trip_through_ucr_files(tmp_path):
    original = synth_pattern_dataset(n_per_class=4, length=30, signal_pos=0.4, noise=0.7, seed=3)
    write_ucr(original, tmp_path, delimiter=",", metadata=synth_metadata(4, 30, 0.4, 0.7, 3))
    restored = load_ucr_dir(tmp_path)
    assert not restored.z_normalized
    assert restored.label_map == original.label_map
    for before, after in zip(original.train + original.test, restored.train + restored.test):
        assert before.label == after.label
        np.testing.assert_allclose(after.values, before.values, atol=1e-12, rtol=0)


def test_round_trip_without_metadata_keeps_raw_values(tmp_path):
    original = synth_pattern_dataset(n_per_class=4, length=30, signal_pos=0.4, noise=0.7, seed=3)
    write_ucr(original, tmp_path)
    assert json.loads((tmp_path / "metadata.json").read_text(encoding="utf-8")) == {"znorm": False}
    restored = load_ucr_dir(tmp_path)
    assert not restored.z_normalized
    for before, after in zip(original.train + original.test, restored.train + restored.test):
        np.testing.assert_allclose(after.values, before.values, atol=1e-12, rtol=0)


def test_round_trip_keeps_variable_lengths(data_dir, tmp_path):
    dataset = load_ucr_dir(data_dir / "varlen")
    write_ucr(dataset, tmp_path)
    restored = load_ucr_dir(tmp_path, znorm=False)
    assert [s.length for s in restored.train] == [4, 2, 3]
    assert _values(restored.train) == _values(dataset.train)


# нормализация

def test_z_normalize_examples():
    np.testing.assert_array_equal(z_normalize(LabeledSeries(np.full(5, 3.0), 0)).values[:, 0], np.zeros(5))
    np.testing.assert_allclose(z_normalize(LabeledSeries(np.array([0.0, 2.0]), 0)).values[:, 0], [-1.0, 1.0])
    once = z_normalize(LabeledSeries(np.random.default_rng(0).normal(size=50), 0))
    np.testing.assert_allclose(z_normalize(once).values, once.values, atol=1e-12)
    assert looks_normalized([once])


def test_series_validation():
    with pytest.raises(ValueError):
        LabeledSeries(np.zeros(0), 0)
    with pytest.raises(ValueError):
        LabeledSeries(np.array([1.0, np.inf]), 0)
    source = np.arange(3.0)
    series = LabeledSeries(source, 1)
    assert series.values.shape == (3, 1) and series.last_index == 2
    source[0] = 10.0
    assert series.values[0, 0] == 0.0
    with pytest.raises(ValueError):
        Dataset(name="x", train=[series], test=[], num_classes=1)


def test_stack_values_needs_equal_lengths():
    assert stack_values([LabeledSeries(np.ones(3), 0), LabeledSeries(np.zeros(3), 1)]).shape == (2, 3, 1)
    with pytest.raises(ValueError):
        stack_values([LabeledSeries(np.ones(3), 0), LabeledSeries(np.ones(2), 1)])


# синтетические данные

def test_synthetic_is_deterministic():
    first = synth_pattern_dataset(n_per_class=5, length=40, signal_pos=0.3, noise=0.5, seed=9)
    second = synth_pattern_dataset(n_per_class=5, length=40, signal_pos=0.3, noise=0.5, seed=9)
    assert _values(first.train) == _values(second.train)
    assert _values(first.test) == _values(second.test)
    assert len(first.train) == 10 and first.num_classes == 2


def test_noise_free_classes_separate_in_window():
    dataset = synth_pattern_dataset(n_per_class=8, length=50, signal_pos=0.5, noise=0.0, seed=1)
    window = pattern_window(50, 0.5)
    assert (window.start, window.stop) == (25, 30)
    for series in dataset.train:
        total = series.values[window, 0].sum()
        assert (total > 0) == (series.label == 0)
        np.testing.assert_array_equal(series.values[:window.start], 0.0)


def test_prefix_before_pattern_is_class_independent():
    dataset = synth_pattern_dataset(n_per_class=5000, length=40, signal_pos=0.5, noise=1.0, seed=21)
    labels = labels_of(dataset.train)
    prefix_means = np.array([s.values[:20, 0].mean() for s in dataset.train])
    _, p_value = ttest_ind(prefix_means[labels == 0], prefix_means[labels == 1])
    assert p_value > 0.01


@pytest.mark.parametrize("kwargs", [{"signal_pos": 0.0}, {"signal_pos": 0.95}, {"noise": -1.0}])
def test_synthetic_rejects_bad_parameters(kwargs):
    params = {"n_per_class": 2, "length": 40, "signal_pos": 0.3, "noise": 0.5, "seed": 0, **kwargs}
    with pytest.raises(ValueError):
        synth_pattern_dataset(**params)


# разбиения

def test_kfold_one_per_class_per_fold():
    labels = [0, 1, 0, 1, 0, 1]
    folds = stratified_kfold(labels, k=3, seed=4)
    assert len(folds) == 3
    for _, holdout in folds:
        assert sorted(np.asarray(labels)[holdout].tolist()) == [0, 1]


def test_kfold_partitions_and_is_deterministic():
    labels = np.random.default_rng(0).integers(0, 3, size=40)
    labels[:9] = [0, 0, 0, 1, 1, 1, 2, 2, 2]
    folds = stratified_kfold(labels, k=3, seed=7)
    holdouts = np.concatenate([holdout for _, holdout in folds])
    assert sorted(holdouts.tolist()) == list(range(40))
    for fit, holdout in folds:
        assert not set(fit) & set(holdout)
        assert len(fit) + len(holdout) == 40
    again = stratified_kfold(labels, k=3, seed=7)
    for (fit_a, hold_a), (fit_b, hold_b) in zip(folds, again):
        np.testing.assert_array_equal(fit_a, fit_b)
        np.testing.assert_array_equal(hold_a, hold_b)
    sizes = [len(holdout) for _, holdout in folds]
    assert max(sizes) - min(sizes) <= 1


def test_kfold_errors():
    with pytest.raises(ValueError):
        stratified_kfold([0, 1, 0, 1], k=1, seed=0)
    with pytest.raises(StratificationError):
        stratified_kfold([0, 0, 0, 1, 1], k=3, seed=0)


def test_holdout_split():
    labels = [0] * 10 + [1] * 5
    fit, holdout = holdout_split(labels, fraction=0.2, seed=3)
    assert sorted(fit.tolist() + holdout.tolist()) == list(range(15))
    assert np.bincount(np.asarray(labels)[holdout]).tolist() == [2, 1]
    with pytest.raises(StratificationError):
        holdout_split([0, 0, 1], fraction=0.5, seed=0)
