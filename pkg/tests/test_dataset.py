import numpy as np
import pytest

from archattr.dataset import Dataset, balance_classes, train_test_split
from archattr.errors import ArchAttrError, DegenerateSplit, TooFewSamples


def make_dataset(accs, p=3, seed=0):
    rng = np.random.default_rng(seed)
    n = len(accs)
    return Dataset(rng.normal(size=(n, p)), np.asarray(accs, dtype=np.float64),
                   tuple(f"f{j}" for j in range(p)), tuple(f"r{i}" for i in range(n)))


class TestBalance:
    def test_undersamples_majority(self):
        accs = [0.1] * 70 + [0.9] * 30
        out = balance_classes(make_dataset(accs), threshold=0.5, seed=1)
        assert out.n_rows == 60
        assert int(out.y.sum()) == 30  # healthy class
        assert out.has_labels

    def test_all_one_class_raises(self):
        with pytest.raises(DegenerateSplit):
            balance_classes(make_dataset([0.9] * 20), threshold=0.5, seed=1)

    def test_threshold_boundary_is_broken(self):
        out = balance_classes(make_dataset([0.38, 0.38001, 0.9, 0.1]), threshold=0.38, seed=1)
        assert int(out.y.sum()) == 2  # strict '>' keeps 0.38 itself broken

    def test_deterministic_and_order_preserving(self):
        accs = list(np.linspace(0, 1, 101))
        a = balance_classes(make_dataset(accs), threshold=0.7, seed=9)
        b = balance_classes(make_dataset(accs), threshold=0.7, seed=9)
        assert a.ids == b.ids
        assert list(a.ids) == sorted(a.ids, key=lambda s: int(s[1:]))

    def test_nonfinite_rejected(self):
        with pytest.raises(ArchAttrError):
            make_dataset([np.nan, 0.5, 0.9])


class TestSplit:
    def test_ten_rows_80_20(self):
        d = make_dataset(list(np.linspace(0.1, 1, 10)))
        train, test = train_test_split(d, 0.2, seed=3)
        assert (train.n_rows, test.n_rows) == (8, 2)
        assert set(train.ids) | set(test.ids) == set(d.ids)
        assert not set(train.ids) & set(test.ids)

    def test_same_seed_same_split(self):
        d = make_dataset(list(np.linspace(0.1, 1, 20)))
        assert train_test_split(d, 0.2, seed=5)[1].ids == train_test_split(d, 0.2, seed=5)[1].ids

    def test_too_few_rows(self):
        with pytest.raises(TooFewSamples):
            train_test_split(make_dataset([0.1, 0.2, 0.9]), 0.2, seed=0)

    def test_stratified_balance_over_many_seeds(self):
        accs = [0.1] * 50 + [0.9] * 50
        balanced = balance_classes(make_dataset(accs), threshold=0.5, seed=0)
        for seed in range(100):
            train, test = train_test_split(balanced, 0.2, seed=seed)
            for half in (train, test):
                ones = int(half.y.sum())
                assert abs(ones - (half.n_rows - ones)) <= 1
