import numpy as np
import pytest
import torch
from hypothesis import HealthCheck, settings

from mvprofile.corpus import Corpus, UserRecord
from mvprofile.synthetic import planted_corpus

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(autouse=True)
def _seed():
    torch.manual_seed(0)
    np.random.seed(0)


@pytest.fixture
def tiny_corpus():
    recs = [
        UserRecord("a", ("Morning #Yoga flow :)", "RT @b: namaste"), "yoga teacher", "London",
                   ("b",), "practitioner", "health"),
        UserRecord("b", ("Join our #yoga class https://t.co/x",), "studio", None, ("a", "zz"),
                   "promotional", "others"),
        UserRecord("c", ("yoga news",), None, "Mumbai, India", (), "others", "spiritual"),
    ]
    return Corpus("yoga", ("yoga",), tuple(recs))


@pytest.fixture(scope="session")
def planted():
    return planted_corpus(30, seed=0)
