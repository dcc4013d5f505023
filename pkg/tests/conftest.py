import numpy as np
import pytest

from gmasimt.attention import GmaConfig
from gmasimt.model import GmaTransformer, ModelConfig


def tiny_model(layers=2, heads=2, d_model=8, vocab=9, seed=0, causal=True, init_step=1.0,
               random_predictor=True, predictor_input="first_layer", **gma):
    cfg = ModelConfig(vocab, vocab, d_model=d_model, d_ff=2 * d_model, layers=layers, heads=heads,
                      max_positions=32, seed=seed, encoder_causal=causal, init_step=init_step,
                      predictor_input=predictor_input, gma=GmaConfig(**gma))
    model = GmaTransformer(cfg)
    if random_predictor:
        # give V_p non-zero weights so the predicted steps vary with the input
        rng = np.random.default_rng(seed + 100)
        for name, p in model.params.items():
            if name.endswith("gma.V_p"):
                p.data[...] = rng.normal(0.0, 0.5, size=p.shape)
    return model


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: dict[str, str] = {}


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records a pass/fail line and asserts ``ok``."""

    def record(n, ok, detail):
        line = f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[str(n)] = line
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_LINES, key=lambda k: int(k)):
        terminalreporter.write_line(ACCEPTANCE_LINES[key])
