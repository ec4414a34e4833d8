"""Collaborative contextual bandits over a user-influence graph with
online anomaly detection.

The package provides:

* graph construction and validation (:mod:`netbandit.graph`)
* a simulated networked-bandit environment with injected anomalies
  (:mod:`netbandit.environment`)
* the Lasso / two-stage-thresholding / restricted-least-squares engine
  used for residual estimation (:mod:`netbandit.sparse_regression`)
* the NELA decision policy (:mod:`netbandit.nela`)
* the LinUCB / nLinUCB / CoLin / GraphUCB comparison policies
  (:mod:`netbandit.baselines`)
* regret and detection metrics (:mod:`netbandit.metrics`)
* an experiment harness and CLI (:mod:`netbandit.harness`,
  :mod:`netbandit.cli`)
"""

from netbandit.graph import (
    InfluenceMatrix,
    build_similarity_graph,
    build_uniform_graph,
    load_influence_matrix,
)
from netbandit.environment import (
    ArmSet,
    GroundTruth,
    RoundRecord,
    expected_reward,
    generate_ground_truth,
    play_round,
    sample_arm_set,
)
from netbandit.nela import NelaConfig, NelaPolicy, mixed_feature

__all__ = [
    "InfluenceMatrix",
    "build_uniform_graph",
    "build_similarity_graph",
    "load_influence_matrix",
    "GroundTruth",
    "ArmSet",
    "RoundRecord",
    "generate_ground_truth",
    "sample_arm_set",
    "expected_reward",
    "play_round",
    "NelaConfig",
    "NelaPolicy",
    "mixed_feature",
]
