"""scikit-learn style front end.

``DetectorMerit().fit(povm)`` computes the figures of merit and exposes them
as fitted attributes; ``transform(states)`` maps input states to outcome
probability vectors (click outcomes in order, null last).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .report import build_report
from .validation import check_povm, check_states


class DetectorMerit(TransformerMixin, BaseEstimator):
    """Figures of merit of a detector POVM.

    Parameters
    ----------
    target_bits : float, default=4.0
        Averaged binned entropy that fixes the frequency and time bin widths.
    modes : list of int, optional
        Modes for which photon-number entropies are reported (default: all).
    time_window : TimeWindow, optional
        Time grid for detection-time posteriors (default: fitted to the modes).
    duration : float, default=1.0
        Switch-on time in seconds used for the dark-count rate.
    response : bool, default=True
        Whether to scan two-photon joint detection for response times.
    """

    def __init__(self, target_bits=4.0, modes=None, time_window=None, duration=1.0, response=True):
        self.target_bits = target_bits
        self.modes = modes
        self.time_window = time_window
        self.duration = duration
        self.response = response

    def fit(self, X, y=None):
        povm = check_povm(X)
        self.povm_ = povm
        self.report_ = build_report(
            povm,
            modes=self.modes,
            target_bits=self.target_bits,
            time_window=self.time_window,
            duration=self.duration,
            response=self.response,
        )
        outcomes = self.report_.outcomes
        det = self.report_.detector
        self.labels_ = [o["label"] for o in outcomes]
        self.n_outcomes_ = len(outcomes)
        self.purities_ = np.array([np.nan if o["purity"] is None else o["purity"] for o in outcomes])
        self.bandwidths_ = np.array([np.nan if o["bandwidth"] is None else o["bandwidth"] for o in outcomes])
        self.dark_counts_ = np.array([o["dark_count"] for o in outcomes])
        self.total_bandwidth_ = det["total_bandwidth"]
        self.efficiency_spectrum_ = det["efficiency_spectrum"]
        self.eta_max_ = det["eta_max"]
        self.dark_count_rate_ = det["dark_count_rate"]
        self.resolution_product_ = det["resolution_product"]
        self.detection_rate_ = det["detection_rate"]
        return self

    def transform(self, X):
        """Outcome probabilities, shape ``(n_states, n_outcomes + 1)``."""
        check_is_fitted(self, "povm_")
        rhos = check_states(X, self.povm_.dimension)
        ops = np.stack([e.matrix for e in self.povm_.all_elements()])
        p = np.real(np.einsum("nij,kji->nk", rhos, ops))
        return np.clip(p, 0.0, 1.0)

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "povm_")
        return np.array([*self.labels_, "null"], dtype=object)
