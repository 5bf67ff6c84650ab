import pytest

from embed_export.encoders import Encoder, get_spec
from stub_encoding import StubModel


@pytest.fixture
def stub_encoder():
    return Encoder(get_spec("minilm"), model_factory=StubModel)


@pytest.fixture
def stub_encoder_tasb():
    return Encoder(get_spec("tas-b"), model_factory=StubModel)
