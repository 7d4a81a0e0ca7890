# Copyright 2024 voiceprivacy developers
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from typing import Any, Dict, List, Union

from voiceprivacy.metrics.verification import metrics
from voiceprivacy.metrics.verification.metrics.baseclass.metrics import Metric

MetricType = Union[List[str], List[Metric]]
DefaultMetricObjects = {
    "EER": metrics.EqualErrorRate(),
    "Cllr min": metrics.CllrMin(),
    "Cllr": metrics.Cllr(),
    "Calibration loss": metrics.CalibrationLoss(),
}
DefaultMetricNames = list(DefaultMetricObjects.keys())


class VerificationMetrics:
    def __init__(self, metrics: MetricType = DefaultMetricNames) -> None:
        """
        Class for computing privacy metrics of a speaker-verification score set: EER, C_llr^min,
        C_llr and the calibration loss between the two costs.

        Parameters
        ----------
        metrics : list of str or list of Metric, default=["EER", "Cllr min", "Cllr", "Calibration loss"]
            Names of default metrics or metric objects implementing `evaluate(scores)`.
        """
        self.metrics = metrics
        if isinstance(metrics[0], str):
            self.metric_names = metrics
            self._validate_metrics(metrics)
            self._default_instances()

    def evaluate(
        self, scores: Any, impostor_scores: Any = None, return_data: bool = False
    ) -> Dict[str, Any]:
        """
        Returns values of the specified verification metrics.

        Parameters
        ----------
        scores : ScoreSet or array-like
            Target scores, or a ScoreSet holding both lists.

        impostor_scores : array-like, default=None
            Impostor scores when `scores` is an array.

        return_data : bool, default=False
            Indicates whether to include trial counts and the EER threshold in the result.

        Returns
        -------
        dict
            Dictionary with a "metrics" entry, plus "data" when `return_data` is True.
        """
        score_set = metrics.as_score_set(scores, impostor_scores)
        score_set.require_nonempty()
        result = {"metrics": {metric.name: metric.evaluate(score_set) for metric in self.metrics}}
        if return_data:
            _, threshold = metrics.eer_with_threshold(score_set)
            result["data"] = {
                "n_target": score_set.n_target,
                "n_impostor": score_set.n_impostor,
                "eer_threshold": threshold,
            }
        return result

    def _default_instances(self) -> None:
        """Define default metrics."""
        self.metrics = [DefaultMetricObjects[name] for name in self.metric_names]

    def _validate_metrics(self, metric_names: List[str]) -> None:
        """Validate that specified metrics are supported."""
        for name in metric_names:
            assert (
                name in DefaultMetricNames
            ), f"voiceprivacy: Provided metric name is not part of available metrics: {name}"
