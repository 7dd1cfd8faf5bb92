import pytest
from hypothesis import settings

from srtrec.ink import normalize
from srtrec.oracle import OracleClassifier
from srtrec.synthetic import fig_int_d2x, fig_frac_log, render_sample

settings.register_profile("suite", deadline=None, max_examples=50)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def fig1_sample():
    """Integral-d^2-x written in five strokes (x takes two)."""
    return render_sample(fig_int_d2x(), "fig1")


@pytest.fixture(scope="session")
def fig1_norm(fig1_sample):
    return normalize(fig1_sample)


@pytest.fixture(scope="session")
def fig1_tree(fig1_sample):
    return fig1_sample.ground_truth


@pytest.fixture(scope="session")
def frac_log_norm():
    return normalize(render_sample(fig_frac_log(), "fraclog"))


@pytest.fixture()
def fig1_oracle(fig1_norm):
    return OracleClassifier(fig1_norm.ground_truth)
