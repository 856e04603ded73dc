import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "det",
    derandomize=True,
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("det")


@pytest.fixture(scope="session")
def golden_build():
    from diocap.constructions import GrowthRule, build
    return build(GrowthRule.constant(1), 62)


@pytest.fixture(scope="session")
def expq_build():
    """Singly exponential digit-growth witness, the canonical one."""
    from diocap.constructions import GrowthRule, build
    return build(GrowthRule.exp_of_q((6,)), 41)


@pytest.fixture(scope="session")
def expq2_build():
    """Same rule, the small seed used in worked examples."""
    from diocap.constructions import GrowthRule, build
    return build(GrowthRule.exp_of_q((2,)), 41)


@pytest.fixture(scope="session")
def expexp_build():
    from diocap.constructions import GrowthRule, build
    return build(GrowthRule.exp_exp_of_q((2,)), 41)
