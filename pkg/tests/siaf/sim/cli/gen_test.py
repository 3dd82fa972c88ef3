'''Random model generation'''
import pytest

from siaf.sim.cli.gen import SIZE_CLASSES, generate
from siaf.sim.errors import ConfigError
from siaf.sim.reference.network import summarize, token_shape


@pytest.mark.parametrize('size_class', ['tiny', 'small'])
def test_generated_models_validate(size_class):
    cfg = generate(size_class, 0)
    size = SIZE_CLASSES[size_class]
    assert cfg.input_shape == size.input_shape
    assert len(cfg.blocks) == size.blocks
    assert token_shape(cfg)[1] == size.dim


def test_seed_fixes_weights():
    assert generate('tiny', 4) == generate('tiny', 4)
    assert generate('tiny', 4) != generate('tiny', 5)


def test_time_steps_do_not_change_weights():
    assert generate('tiny', 4, 2).tokenizer == generate('tiny', 4, 4).tokenizer


def test_paper_geometry():
    summary = summarize(generate('paper-384', 0))
    assert summary.tokens == (64, 384)
    assert summary.blocks == 8


def test_unknown_size_class():
    with pytest.raises(ConfigError):
        generate('huge', 0)
