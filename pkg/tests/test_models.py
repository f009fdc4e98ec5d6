import pytest
import torch

from rulcon.models import ENCODER_KINDS, ModelConfig, build_model


@pytest.mark.parametrize("kind", ENCODER_KINDS)
def test_shapes_and_ranges(kind):
    model = build_model(ModelConfig(encoder_kind=kind), seed=0).eval()
    x = torch.rand(4, 30, 24) * 2 - 1
    r = model.encode(x)
    assert r.shape == (4, 64)
    z = model.project(r)
    assert z.shape == (4, 32)
    assert torch.allclose(z.norm(dim=1), torch.ones(4), atol=1e-6)
    y = model.regress(r)
    assert y.shape == (4,)
    assert torch.all((y > 0) & (y < 1))
    assert torch.equal(model(x), y)


@pytest.mark.parametrize("kind", ENCODER_KINDS)
def test_deterministic_inference(kind):
    model = build_model(ModelConfig(encoder_kind=kind), seed=0).eval()
    x = torch.rand(3, 30, 24)
    with torch.no_grad():
        assert torch.equal(model.encode(x), model.encode(x.clone()))


def test_cnn_lstm_window_length_not_fixed():
    model = build_model(ModelConfig(), seed=0).eval()
    assert model.encode(torch.rand(2, 30, 24)).shape == (2, 64)
    assert model.encode(torch.rand(2, 40, 24)).shape == (2, 64)


def test_cnn_encoder_rejects_other_widths():
    model = build_model(ModelConfig(encoder_kind="cnn"), seed=0)
    with pytest.raises(ValueError):
        model.encode(torch.rand(2, 40, 24))


def test_bad_input_shape():
    model = build_model(ModelConfig(), seed=0)
    with pytest.raises(ValueError):
        model.encode(torch.rand(2, 30, 20))


def test_zero_embedding_projection_is_finite():
    model = build_model(ModelConfig(), seed=0)
    z = model.project(torch.zeros(3, 64))
    assert torch.isfinite(z).all()
    assert torch.allclose(z.norm(dim=1), torch.ones(3), atol=1e-6)


def test_zero_logit_gives_half():
    model = build_model(ModelConfig(), seed=0)
    last = model.regressor.net[-1]
    with torch.no_grad():
        last.weight.zero_()
        last.bias.zero_()
    assert torch.allclose(model.regress(torch.rand(5, 64)), torch.full((5,), 0.5))


@pytest.mark.parametrize("kind", ENCODER_KINDS)
def test_parameter_counts_stable(kind):
    a = build_model(ModelConfig(encoder_kind=kind), seed=0).parameter_count()
    b = build_model(ModelConfig(encoder_kind=kind), seed=1).parameter_count()
    assert a == b
    assert all(v > 0 for v in a.values())


def test_embedding_dim_differs_from_lstm_hidden():
    model = build_model(ModelConfig(lstm_hidden=16, embedding_dim=24, projection_dim=8), seed=0)
    assert model.encode(torch.rand(2, 30, 24)).shape == (2, 24)


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(encoder_kind="transformer")
    with pytest.raises(ValueError):
        ModelConfig(conv_channels=(8, 8))
    with pytest.raises(ValueError):
        ModelConfig(projection_dim=0)
