"""Estimators for the new-plant and existing-plant designs."""

from .did import cell_means, did_fe
from .event import EventCoefficients, panel_event_regression, yearly_average_effects
from .hac import default_lag, newey_west_cov, white_cov
from .ols import OLSFit, ols
from .results import EstimateResult, results_frame
from .sdid import SdidWeights, frank_wolfe_simplex, sdid_att, sdid_fit, sdid_weights

__all__ = [
    "EstimateResult",
    "EventCoefficients",
    "OLSFit",
    "SdidWeights",
    "cell_means",
    "default_lag",
    "did_fe",
    "frank_wolfe_simplex",
    "newey_west_cov",
    "ols",
    "panel_event_regression",
    "results_frame",
    "sdid_att",
    "sdid_fit",
    "sdid_weights",
    "white_cov",
    "yearly_average_effects",
]
