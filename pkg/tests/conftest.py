import numpy as np
import pytest

from camshare.config import EngineConfig
from camshare.objectives import ObjectiveTerm, TermKind
from camshare.scene import reference_scene


@pytest.fixture(scope="session")
def scene():
    return reference_scene()


@pytest.fixture(scope="session")
def model(scene):
    return scene.model


@pytest.fixture()
def config():
    cfg = EngineConfig()
    cfg.solver.test_mode = True
    return cfg


def make_term(config: EngineConfig, kind: TermKind, **params) -> ObjectiveTerm:
    tc = config.term_config(kind)
    return ObjectiveTerm(kind, tc.weight, tc.groove(), params)


def helper_led_terms(config: EngineConfig, target) -> list[ObjectiveTerm]:
    """The full helper-led objective set around a fixed target."""
    terms = [make_term(config, TermKind.SET_TARGET, target=np.asarray(target, float))]
    for kind in (TermKind.UPRIGHT, TermKind.JOINT_VEL, TermKind.JOINT_ACC,
                 TermKind.JOINT_JERK, TermKind.EE_VEL, TermKind.JOINT_LIMITS,
                 TermKind.SELF_COLLISION, TermKind.ENV_COLLISION):
        terms.append(make_term(config, kind))
    return terms
