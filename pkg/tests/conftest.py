import numpy as np
import pytest

from duet import genmodel, toydata
from duet.genmodel.vae import BetaSchedule


TOY_SEED = 0
MODEL_SEED = 7
TRAIN_EPOCHS = 120
TRAIN_LR = 2e-3


@pytest.fixture(scope="session")
def toy_dataset():
    return toydata.toy_corpus(500, seed=TOY_SEED)


@pytest.fixture(scope="session")
def trained(toy_dataset):
    """Train the 2-bar toy model once per test session.

    Shared by the training, temperature, and similarity criteria; takes a
    few minutes.  The slow beta ramp keeps the latent informative at this
    corpus size.
    """
    config = genmodel.ModelConfig(bars=2, seed=MODEL_SEED)
    state = genmodel.init_model(config)
    state.beta_schedule = BetaSchedule(ramp_steps=20000)
    return genmodel.train(state, toy_dataset, epochs=TRAIN_EPOCHS,
                          learning_rate=TRAIN_LR)


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(key=1234))


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance check, immune to output capture."""
    lines = []
    for status, label in (("passed", "PASS"), ("failed", "FAIL")):
        for report in terminalreporter.stats.get(status, []):
            if getattr(report, "when", "call") != "call":
                continue
            if "test_acceptance.py" in report.nodeid:
                name = report.nodeid.split("::")[-1]
                lines.append(f"acceptance {label}: {name}")
    if lines:
        terminalreporter.write_line("")
        for line in sorted(lines):
            terminalreporter.write_line(line)
