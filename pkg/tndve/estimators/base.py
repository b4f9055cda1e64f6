"""
Result types and nuisance-model bundles shared by all estimators.
"""
from dataclasses import dataclass, field, replace
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..errors import ConfigError
from ..models import DesignSpec


@dataclass(frozen=True)
class EstimateResult:
    """Point estimate of the risk ratio among the vaccinated, with optional inference.

    ``ve_hat`` is always 1 - psi_hat. On the natural scale the interval is
    psi_hat +/- z * se and its lower end may be negative.
    """
    psi_hat: float
    method: str
    n: int
    se: Optional[float] = None
    ci: Optional[Tuple[float, float]] = None
    level: Optional[float] = None
    ci_method: Optional[str] = None
    ci_scale: Optional[str] = None
    nuisance_diagnostics: Dict[str, Any] = field(default_factory=dict)
    ve_hat: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, 'psi_hat', float(self.psi_hat))
        object.__setattr__(self, 've_hat', 1.0 - self.psi_hat)

    @property
    def ve_ci(self) -> Optional[Tuple[float, float]]:
        if self.ci is None:
            return None
        return (1.0 - self.ci[1], 1.0 - self.ci[0])

    def with_ci(self, report) -> 'EstimateResult':
        """Attach a CiReport from the inference module."""
        return replace(self, se=report.se, ci=report.ci, level=report.level,
                       ci_method=report.method, ci_scale=report.scale)

    def to_dict(self) -> Dict[str, Any]:
        lower, upper = self.ci if self.ci is not None else (None, None)
        return {
            'method': self.method,
            'n': self.n,
            'psi': self.psi_hat,
            've': self.ve_hat,
            'se': self.se,
            'ci_lower': lower,
            'ci_upper': upper,
            'level': self.level,
            'ci_method': self.ci_method,
            'ci_scale': self.ci_scale,
        }


OM_FORMS = ('plugin', 'fitted')
RATIO_MODELS = ('logistic', 'multinomial')


@dataclass(frozen=True)
class ModelSpec:
    """Design of every nuisance regression an estimator may fit.

    Unset designs are filled by ``resolve`` with the simulation-study defaults:
    logit (1,V,X); outcome (1,V,X,VX); propensity (1,X); DR odds-ratio basis (1,X);
    cohort ratio model (1,X) among V=0, Y!=0; multinomial (1,V,X,VX); UDiD working
    models and odds-ratio bases (1,X).
    """
    logit: Optional[DesignSpec] = None
    outcome: Optional[DesignSpec] = None
    propensity: Optional[DesignSpec] = None
    odds_ratio: Optional[DesignSpec] = None
    ratio: Optional[DesignSpec] = None
    multinomial: Optional[DesignSpec] = None
    udid: Optional[DesignSpec] = None
    om_form: str = 'plugin'
    ratio_model: str = 'logistic'

    def __post_init__(self):
        if self.om_form not in OM_FORMS:
            raise ConfigError(f"om_form must be one of {OM_FORMS}, got {self.om_form!r}")
        if self.ratio_model not in RATIO_MODELS:
            raise ConfigError(f"ratio_model must be one of {RATIO_MODELS}, got {self.ratio_model!r}")

    @classmethod
    def default(cls, covariate_dim: int, **overrides) -> 'ModelSpec':
        return cls(**overrides).resolve(covariate_dim)

    def resolve(self, covariate_dim: int) -> 'ModelSpec':
        cols = range(covariate_dim)
        filled = replace(
            self,
            logit=self.logit or DesignSpec.main_effects(cols),
            outcome=self.outcome or DesignSpec.interacted(cols),
            propensity=self.propensity or DesignSpec.covariates_only(cols),
            odds_ratio=self.odds_ratio or DesignSpec.covariates_only(cols),
            ratio=self.ratio or DesignSpec.covariates_only(cols),
            multinomial=self.multinomial or DesignSpec.interacted(cols),
            udid=self.udid or DesignSpec.covariates_only(cols),
        )
        for design in (filled.logit, filled.outcome, filled.propensity, filled.odds_ratio,
                       filled.ratio, filled.multinomial, filled.udid):
            design.check(covariate_dim)
        return filled


def resolve_spec(spec: Optional[ModelSpec], covariate_dim: int) -> ModelSpec:
    return (spec or ModelSpec()).resolve(covariate_dim)


def odds(p: np.ndarray) -> np.ndarray:
    return p / (1.0 - p)
