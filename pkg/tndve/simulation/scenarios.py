"""
Parameters of the structural data-generating process and the eight scenario presets.

    X, U ~ Unif(0, 1)
    V | X, U ~ Bernoulli(expit(alpha0 + alpha_x X + alpha_u U))
    I^v ~ Multinomial(1 - p1 - p2, p1, p2), p_k = exp(beta_k0 + beta_kv v + beta_kx X + beta_kvx vX + beta_ku U)
    T^v | I^v = i ~ Bernoulli(1(i > 0) exp{(tau1 + tau1v v) 1(i=1) + (tau2 + tau2v v + tau2u U) 1(i=2) + tau_x X + tau_u U})
    Y = I T
"""
import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Any, Dict, Optional

from ..errors import ConfigError, UnknownScenario

MISSPEC_VARIANTS = ('none', 'ps', 'om', 'both')


@dataclass(frozen=True)
class ScenarioParams:
    # vaccination
    alpha0: float = -0.9
    alpha_x: float = -1.0
    alpha_u: float = 2.0
    # test-negative illness (I = 1)
    beta10: float = -2.1
    beta1v: float = 0.0
    beta1x: float = -0.5
    beta1vx: float = 0.0
    beta1u: float = 1.0
    # target illness (I = 2)
    beta20: float = -2.4
    beta2v: float = -1.0
    beta2x: float = -0.625
    beta2vx: float = 0.0
    beta2u: float = 1.0
    # testing
    tau1: float = -1.1
    tau2: float = -0.6
    tau1v: float = 0.0
    tau2v: float = 0.0
    tau_x: float = 0.25
    tau_u: float = 0.25
    tau2u: float = 0.0
    n: int = 15000
    misspec: str = 'none'
    scenario_id: Optional[int] = None

    def __post_init__(self):
        self.validate()

    def validate(self) -> 'ScenarioParams':
        for f in fields(self):
            if f.name in ('n', 'misspec', 'scenario_id'):
                continue
            value = getattr(self, f.name)
            if not isinstance(value, (int, float)) or not math.isfinite(value):
                raise ConfigError(f"scenario parameter {f.name} must be a finite number, got {value!r}")
        if self.misspec not in MISSPEC_VARIANTS:
            raise ConfigError(f"misspec must be one of {MISSPEC_VARIANTS}, got {self.misspec!r}")
        if int(self.n) < 1:
            raise ConfigError(f"population size must be positive, got {self.n}")
        return self

    @property
    def ps_misspecified(self) -> bool:
        return self.misspec in ('ps', 'both')

    @property
    def om_misspecified(self) -> bool:
        return self.misspec in ('om', 'both')

    @property
    def label(self) -> str:
        base = f"scenario {self.scenario_id}" if self.scenario_id is not None else "custom scenario"
        return base if self.misspec == 'none' else f"{base} ({self.misspec} misspecified)"

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, values: Dict[str, Any]) -> 'ScenarioParams':
        """Build from a mapping; ``base`` names a preset whose values are overridden."""
        values = dict(values)
        base_id = values.pop('base', None)
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(values) - known)
        if unknown:
            raise ConfigError(f"Unknown scenario parameters: {', '.join(unknown)}")
        base = scenario_params(int(base_id)) if base_id is not None else cls()
        return replace(base, **values)


# =====================================
# Presets
# =====================================

SCENARIO_PRESETS: Dict[int, Dict[str, Any]] = {
    1: {'description': 'No unmeasured confounding', 'alpha_u': 0.0},
    2: {'description': 'Unmeasured confounding, identification assumptions hold'},
    3: {'description': 'Direct effect of vaccination on test-negative illness', 'beta1v': 0.1},
    4: {'description': 'Equi-confounding violated', 'beta1u': 0.25},
    5: {'description': 'Equi-selection violated', 'tau2u': -2.0},
    # the published parameter table lists these two tau2v values the other way round
    6: {'description': 'Equal effects of vaccination on testing', 'tau1v': -0.25, 'tau2v': -0.25},
    7: {'description': 'Unequal effects of vaccination on testing', 'tau1v': -0.25, 'tau2v': 0.0},
    8: {'description': 'Effect modification by X', 'beta2v': -0.25, 'beta2vx': -1.5},
}


def scenario_params(scenario_id: int, misspec: str = 'none') -> ScenarioParams:
    """Preset parameters for scenarios 1-8, optionally with a misspecification variant."""
    preset = SCENARIO_PRESETS.get(scenario_id)
    if preset is None:
        raise UnknownScenario(f"Unknown scenario {scenario_id!r}; available: {sorted(SCENARIO_PRESETS)}")
    overrides = {k: v for k, v in preset.items() if k != 'description'}
    return ScenarioParams(scenario_id=scenario_id, misspec=misspec, **overrides)


def scenario_description(scenario_id: int) -> str:
    if scenario_id not in SCENARIO_PRESETS:
        raise UnknownScenario(f"Unknown scenario {scenario_id!r}")
    return SCENARIO_PRESETS[scenario_id]['description']
