import os

import numpy as np
import pytest

from xgx.datasets import fixture_corpus
from xgx.events import build_encoding, encode, match_split
from xgx.models import train_gbt, train_logistic
from xgx.shapley import BackgroundSet, FeatureGrouping

ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
FIXTURE_CSV = os.path.join(ROOT, "data", "fixture_shots.csv")

ROSTER = ("Youssoufa Moukoko", "Alejandro Garnacho", "Mathys Tel", "Jamie Bynoe-Gittens", "Evan Ferguson")


@pytest.fixture(scope="session")
def events():
    return fixture_corpus()


@pytest.fixture(scope="session")
def dataset(events):
    return encode(events, build_encoding(events))


@pytest.fixture(scope="session")
def split(dataset):
    return match_split(dataset)


@pytest.fixture(scope="session")
def gbt(dataset, split):
    return train_gbt(dataset.subset(split[0]))


@pytest.fixture(scope="session")
def logit(dataset, split):
    return train_logistic(dataset.subset(split[0]), penalty=1.0)


@pytest.fixture(scope="session")
def background(dataset, split):
    return BackgroundSet.draw(dataset, 100, seed=42, candidates=split[0])


@pytest.fixture(scope="session")
def grouping(dataset):
    return FeatureGrouping.from_encoding(dataset.encoding)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def numeric_dataset(X, y, z=None):
    """Continuous-only dataset over columns x0..x{d-1}."""
    from xgx.events import EncodedDataset, FeatureEncoding

    X = np.asarray(X, dtype=float)
    names = tuple(f"x{j}" for j in range(X.shape[1]))
    enc = FeatureEncoding(levels={}, continuous=names, features=names)
    y = np.asarray(y, dtype=np.int8)
    z = y.copy() if z is None else np.asarray(z, dtype=np.int8)
    return EncodedDataset(X=X, y=y, z=z, encoding=enc, meta={})
