import pytest

from setcoh.datagen import GenConfig, build_splits


@pytest.fixture(scope="session")
def small_qa_corpus():
    return build_splits(GenConfig(style="qa", train_count=30, eval_count=12), rng_seed=5)


@pytest.fixture(scope="session")
def small_snli_corpus():
    return build_splits(GenConfig(style="snli", train_count=40, eval_count=16), rng_seed=5)
