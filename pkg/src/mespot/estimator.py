"""scikit-learn style front end for MDMD spotting."""

from __future__ import annotations

import logging
from typing import Optional, Union

from joblib import Parallel, delayed
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import check_fraction, check_kinds, check_sequences, flatten
from .flow import get_backend
from .ingest import DatasetProfile, FrameSequence, load_profile
from .intervals import SpottedInterval, intervals_from_series
from .mdmd import DirectionBinning, FrameFeatureSeries, SequenceTooShort, feature_series
from .metrics import evaluate

logger = logging.getLogger(__name__)


def _series_for(seq, kinds, profile, backend, binning):
    out = {}
    for kind in kinds:
        try:
            out[kind] = feature_series(seq, profile.k(kind), backend, profile.blocks, binning)
        except SequenceTooShort as exc:
            logger.warning("%s pass skipped: %s", kind, exc)
            out[kind] = None
    return out


class MDMDSpotter(BaseEstimator):
    """Spot macro- and micro-expression intervals in cropped face videos.

    ``transform`` returns the threshold-independent frame features of each
    video (one :class:`FrameFeatureSeries` per kind, ``None`` when the video
    is too short for that kind's offset); ``predict`` thresholds them at
    ``p`` and returns the spotted intervals. Features can be reused across
    ``p`` values with :meth:`predict_features`.

    Parameters
    ----------
    profile : str or DatasetProfile
        ``"casme2"``, ``"samm"``, a profile file path, or a profile object.
    kinds : {"both", "macro", "micro"}
    p : float
        Threshold position between the mean and the max of the relative
        difference series.
    flow : str
        Flow backend name.
    flow_params : dict, optional
        Keyword arguments for the backend.
    axis_centered : bool
        Direction bins centred on the axes (True) or starting at 0 rad.
    n_jobs : int
        Videos processed in parallel.
    """

    def __init__(self, profile: Union[str, DatasetProfile] = "casme2", kinds="both", p: float = 0.01,
                 flow: str = "reference", flow_params: Optional[dict] = None,
                 axis_centered: bool = True, n_jobs: int = 1):
        self.profile = profile
        self.kinds = kinds
        self.p = p
        self.flow = flow
        self.flow_params = flow_params
        self.axis_centered = axis_centered
        self.n_jobs = n_jobs

    def fit(self, X=None, y=None):
        """Resolve the configuration; there is nothing to learn."""
        self.profile_ = self.profile if isinstance(self.profile, DatasetProfile) else load_profile(self.profile)
        self.kinds_ = check_kinds(self.kinds)
        check_fraction(self.p)
        self.backend_ = get_backend(self.flow, **(self.flow_params or {}))
        self.binning_ = DirectionBinning(self.profile_.directions, self.axis_centered)
        return self

    def transform(self, X) -> list[dict[str, Optional[FrameFeatureSeries]]]:
        check_is_fitted(self, "backend_")
        seqs = check_sequences(X)
        jobs = (delayed(_series_for)(seq, self.kinds_, self.profile_, self.backend_, self.binning_)
                for seq in seqs)
        return list(Parallel(n_jobs=self.n_jobs)(jobs))

    def predict_features(self, features, p: Optional[float] = None) -> list[list[SpottedInterval]]:
        check_is_fitted(self, "backend_")
        p = check_fraction(self.p if p is None else p)
        out = []
        for per_kind in features:
            intervals = []
            for kind in self.kinds_:
                series = per_kind.get(kind)
                if series is not None:
                    intervals.extend(intervals_from_series(series, kind, self.profile_, p))
            out.append(intervals)
        return out

    def predict(self, X) -> list[list[SpottedInterval]]:
        return self.predict_features(self.transform(X))

    def fit_predict(self, X, y=None) -> list[list[SpottedInterval]]:
        return self.fit(X, y).predict(X)

    def score(self, X, y) -> float:
        """Overall F1 against ``y``, one list of ground-truth intervals per video."""
        _, dataset = evaluate(flatten(self.predict(X)), flatten(y))
        return dataset.overall.f1 or 0.0


def spot(sequences: list[FrameSequence], **params) -> list[SpottedInterval]:
    """Convenience wrapper: fit an :class:`MDMDSpotter` and return all intervals."""
    return flatten(MDMDSpotter(**params).fit().predict(sequences))
