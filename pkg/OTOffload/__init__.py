# -*- coding: utf-8 -*-
"""
Optimal-transport guided reinforcement learning for cloud-edge-end
computation offloading.
"""
from __future__ import print_function, division, absolute_import
from OTOffload.model import (OffloadDecision, SystemParams, Task,
                             decision_cost, upload_rate)
from OTOffload.transport import build_problem, exact_transport, sinkhorn
from OTOffload.policy import PolicyParams
from OTOffload.trainer import (AnnealingSchedule, OTRLTrainer, TrainConfig,
                               offline_train, train)
from OTOffload.scenario import ScenarioConfig, generate_scenario
from OTOffload.experiment import Sweep, SweepSpec, evaluate, run_sweep
from OTOffload.config import load_config
from OTOffload.version import __version__
